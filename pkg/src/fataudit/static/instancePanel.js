/** Instance editor with predict / counterfactual actions and the apply-foil loop. */
import { applyFoil, applyPrediction, draftRow, draftValid, editField, PanelSequencer, seedDraft, } from "./state.js";
export class InstancePanel {
    constructor(api, schema, root, seedRow) {
        this.api = api;
        this.schema = schema;
        this.root = root;
        this.foils = [];
        this.sentences = [];
        this.diagnostic = null;
        this.error = null;
        this.predictSeq = new PanelSequencer();
        this.foilSeq = new PanelSequencer();
        this.draft = seedDraft(schema, seedRow);
    }
    currentRow() {
        return draftRow(this.draft);
    }
    async loadInstance(index) {
        const payload = await this.api.instance(index);
        this.draft = seedDraft(this.schema, payload.row);
        this.foils = [];
        this.sentences = [];
        this.diagnostic = null;
        this.render();
    }
    async predict() {
        if (!draftValid(this.draft) || this.predictSeq.inFlight) {
            return;
        }
        const token = this.predictSeq.begin();
        this.render();
        try {
            const response = await this.api.predict(draftRow(this.draft));
            if (this.predictSeq.accept(token)) {
                this.draft = applyPrediction(this.draft, response, Date.now());
                this.error = null;
            }
        }
        catch (err) {
            if (this.predictSeq.accept(token)) {
                this.error = String(err.message);
            }
        }
        this.render();
    }
    async requestFoils() {
        if (!draftValid(this.draft) || this.foilSeq.inFlight) {
            return;
        }
        const token = this.foilSeq.begin();
        this.render();
        try {
            const response = await this.api.counterfactuals(draftRow(this.draft), { k: 2, max_results: 8 });
            if (this.foilSeq.accept(token)) {
                this.foils = response.counterfactuals;
                this.sentences = response.sentences;
                this.diagnostic = response.diagnostic;
                this.error = null;
            }
        }
        catch (err) {
            if (this.foilSeq.accept(token)) {
                this.error = String(err.message);
            }
        }
        this.render();
    }
    applyFoilAt(index) {
        const foil = this.foils[index];
        if (foil) {
            this.draft = applyFoil(this.draft, foil);
            this.render();
        }
    }
    render() {
        this.root.replaceChildren();
        const form = document.createElement("div");
        form.className = "editor";
        for (const field of this.draft.fields) {
            const label = document.createElement("label");
            label.textContent = field.column.name;
            let input;
            if (field.column.kind === "numeric") {
                input = document.createElement("input");
                input.type = "number";
                const [low, high] = field.column.range ?? [0, 0];
                input.min = String(low);
                input.max = String(high);
                input.step = "any";
                input.value = String(field.value);
            }
            else {
                input = document.createElement("select");
                for (const token of field.column.values ?? []) {
                    const option = document.createElement("option");
                    option.value = token;
                    option.textContent = token;
                    option.selected = token === field.value;
                    input.appendChild(option);
                }
            }
            input.addEventListener("change", () => {
                this.draft = editField(this.draft, field.column.name, input.value);
                this.render();
            });
            if (field.dirty)
                label.classList.add("dirty");
            if (field.error) {
                label.classList.add("invalid");
                label.title = field.error;
            }
            label.appendChild(input);
            form.appendChild(label);
        }
        this.root.appendChild(form);
        const actions = document.createElement("div");
        actions.className = "actions";
        const predictButton = document.createElement("button");
        predictButton.textContent = this.predictSeq.inFlight ? "Predicting…" : "Predict";
        predictButton.disabled = this.predictSeq.inFlight || !draftValid(this.draft);
        predictButton.addEventListener("click", () => void this.predict());
        actions.appendChild(predictButton);
        const foilButton = document.createElement("button");
        foilButton.textContent = this.foilSeq.inFlight ? "Searching…" : "Counterfactuals";
        foilButton.disabled = this.foilSeq.inFlight || !draftValid(this.draft);
        foilButton.addEventListener("click", () => void this.requestFoils());
        actions.appendChild(foilButton);
        this.root.appendChild(actions);
        const status = document.createElement("div");
        status.className = "status";
        if (this.error) {
            const banner = document.createElement("p");
            banner.className = "error-banner";
            banner.textContent = this.error;
            status.appendChild(banner);
        }
        if (this.draft.prediction) {
            const p = document.createElement("p");
            p.className = "prediction";
            p.textContent = `prediction: ${this.draft.prediction.klass}`;
            if (this.draft.stale) {
                const badge = document.createElement("span");
                badge.className = "badge stale";
                badge.textContent = "stale";
                p.appendChild(badge);
            }
            if (this.draft.prediction.density !== null) {
                const badge = document.createElement("span");
                const sparse = this.draft.prediction.robust === false;
                badge.className = sparse ? "badge sparse" : "badge dense";
                badge.textContent =
                    `density ${this.draft.prediction.density.toFixed(3)}` +
                        (sparse ? " (sparse)" : "");
                p.appendChild(badge);
            }
            status.appendChild(p);
        }
        else if (this.draft.stale) {
            const p = document.createElement("p");
            p.className = "prediction";
            p.textContent = "no prediction yet";
            status.appendChild(p);
        }
        this.root.appendChild(status);
        const list = document.createElement("ol");
        list.className = "foils";
        this.foils.forEach((foil, i) => {
            const item = document.createElement("li");
            const text = document.createElement("span");
            text.textContent = this.sentences[i] ?? "";
            const meta = document.createElement("span");
            meta.className = "foil-meta";
            meta.textContent = ` [distance ${foil.distance.toFixed(3)}` +
                (foil.density !== null ? `, density ${foil.density.toFixed(3)}]` : "]");
            const apply = document.createElement("button");
            apply.textContent = "apply";
            apply.addEventListener("click", () => this.applyFoilAt(i));
            item.append(text, meta, apply);
            list.appendChild(item);
        });
        if (this.diagnostic) {
            const item = document.createElement("li");
            item.className = "diagnostic";
            item.textContent = this.diagnostic;
            list.appendChild(item);
        }
        this.root.appendChild(list);
    }
}
