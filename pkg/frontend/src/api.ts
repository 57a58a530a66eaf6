/** Typed client for the audit service; every endpoint mirrors one library call. */

export type CellValue = number | string;

export interface SchemaColumn {
  name: string;
  kind: "numeric" | "categorical";
  range?: [number, number];
  values?: string[];
}

export interface Schema {
  columns: SchemaColumn[];
  target: string;
  protected: string[];
}

export interface SummaryResponse {
  summary: {
    rows: number;
    columns: Record<string, unknown>;
    class_distribution: Record<string, number>;
  };
  schema: Schema;
  classes: string[];
  digest: string;
}

export interface PredictResponse {
  prediction: string;
  probabilities?: Record<string, number>;
  density_score?: number;
  robust?: boolean;
  digest: string;
}

export interface FoilChange {
  feature: string;
  old: CellValue;
  new: CellValue;
}

export interface Foil {
  changes: FoilChange[];
  class: string;
  distance: number;
  density: number | null;
}

export interface CounterfactualsResponse {
  instance_class: string;
  counterfactuals: Foil[];
  sentences: string[];
  diagnostic: string | null;
  digest: string;
}

export interface MatrixPayload {
  criterion: string;
  tolerance: number;
  groups: string[];
  values: (number | null)[][];
  flags: (0 | 1)[][];
  undefined: (0 | 1)[][];
}

export interface DisparityResponse {
  matrix: MatrixPayload;
  positive_class: string;
  digest: string;
}

export interface SurrogateResponse {
  explanation: {
    kind: "ridge" | "tree";
    fidelity: number;
    explained_class: string;
    linear: { weights: Record<string, number>; intercept: number } | null;
    tree: {
      rule: { feature: string; op: string; value: CellValue | null }[];
      importances: Record<string, number>;
    } | null;
    diagnostic: string | null;
  };
  digest: string;
}

export interface InstanceResponse {
  index: number;
  row: CellValue[];
  label: string;
  prediction: string;
  digest: string;
}

export interface IcePdResponse {
  feature: string;
  grid: CellValue[];
  ice: number[][];
  pd: number[];
  response: "probability" | "class_index";
  target_class: string | null;
  digest: string;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json();
  if (!response.ok) {
    throw new ApiError(response.status, String(body.error ?? response.statusText));
  }
  return body as T;
}

function post<T>(url: string, payload: unknown): Promise<T> {
  return request<T>(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
  });
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  health(): Promise<{ status: string; digest: string }> {
    return request(`${this.base}/api/health`);
  }

  summary(): Promise<SummaryResponse> {
    return request(`${this.base}/api/dataset/summary`);
  }

  instance(index: number): Promise<InstanceResponse> {
    return request(`${this.base}/api/instance/${index}`);
  }

  predict(row: CellValue[]): Promise<PredictResponse> {
    return post(`${this.base}/api/predict`, { row });
  }

  counterfactuals(row: CellValue[], config: Record<string, unknown> = {}):
      Promise<CounterfactualsResponse> {
    return post(`${this.base}/api/counterfactuals`, { row, config });
  }

  fairness(feature: string, criterion: string, tolerance: number):
      Promise<DisparityResponse> {
    return post(`${this.base}/api/fairness`, { feature, criterion, tolerance });
  }

  performance(feature: string, metric: string, tolerance: number):
      Promise<DisparityResponse> {
    return post(`${this.base}/api/performance`, { feature, metric, tolerance });
  }

  surrogate(row: CellValue[] | null, config: Record<string, unknown>):
      Promise<SurrogateResponse> {
    return post(`${this.base}/api/surrogate`, { row, config });
  }

  icePd(feature: string, grid?: CellValue[]): Promise<IcePdResponse> {
    return post(`${this.base}/api/ice-pd`, { feature, grid });
  }
}
