/** Typed client for the audit service; every endpoint mirrors one library call. */
export class ApiError extends Error {
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
async function request(url, init) {
    const response = await fetch(url, init);
    const body = await response.json();
    if (!response.ok) {
        throw new ApiError(response.status, String(body.error ?? response.statusText));
    }
    return body;
}
function post(url, payload) {
    return request(url, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
    });
}
export class ApiClient {
    constructor(base = "") {
        this.base = base;
    }
    health() {
        return request(`${this.base}/api/health`);
    }
    summary() {
        return request(`${this.base}/api/dataset/summary`);
    }
    instance(index) {
        return request(`${this.base}/api/instance/${index}`);
    }
    predict(row) {
        return post(`${this.base}/api/predict`, { row });
    }
    counterfactuals(row, config = {}) {
        return post(`${this.base}/api/counterfactuals`, { row, config });
    }
    fairness(feature, criterion, tolerance) {
        return post(`${this.base}/api/fairness`, { feature, criterion, tolerance });
    }
    performance(feature, metric, tolerance) {
        return post(`${this.base}/api/performance`, { feature, metric, tolerance });
    }
    surrogate(row, config) {
        return post(`${this.base}/api/surrogate`, { row, config });
    }
    icePd(feature, grid) {
        return post(`${this.base}/api/ice-pd`, { feature, grid });
    }
}
