/** Fairness / performance heatmap panel with a live tolerance slider. */
import { renderHeatmap } from "./heatmap.js";
import { clampTolerance, PanelSequencer } from "./state.js";
const CRITERIA = ["demographic_parity", "equal_opportunity", "equal_accuracy"];
const METRICS = ["accuracy", "tpr", "tnr", "fpr", "fnr", "positive_rate"];
export class DisparityPanel {
    constructor(api, schema, root, mode) {
        this.api = api;
        this.schema = schema;
        this.root = root;
        this.mode = mode;
        this.tolerance = 0.2;
        this.error = null;
        this.payload = null;
        this.seq = new PanelSequencer();
        this.feature = schema.protected[0]
            ?? schema.columns.find((c) => c.kind === "categorical")?.name
            ?? schema.columns[0].name;
        this.selection = mode === "fairness" ? CRITERIA[0] : METRICS[0];
    }
    async refresh() {
        const token = this.seq.begin();
        this.render();
        try {
            const payload = this.mode === "fairness"
                ? await this.api.fairness(this.feature, this.selection, this.tolerance)
                : await this.api.performance(this.feature, this.selection, this.tolerance);
            if (this.seq.accept(token)) {
                this.payload = payload;
                this.error = null;
            }
        }
        catch (err) {
            if (this.seq.accept(token)) {
                this.error = String(err.message);
            }
        }
        this.render();
    }
    render() {
        this.root.replaceChildren();
        const controls = document.createElement("div");
        controls.className = "controls";
        const featureSelect = document.createElement("select");
        for (const column of this.schema.columns) {
            const option = document.createElement("option");
            option.value = column.name;
            option.textContent = column.name;
            option.selected = column.name === this.feature;
            featureSelect.appendChild(option);
        }
        featureSelect.addEventListener("change", () => {
            this.feature = featureSelect.value;
            void this.refresh();
        });
        controls.appendChild(labelled("feature", featureSelect));
        const choiceSelect = document.createElement("select");
        for (const name of this.mode === "fairness" ? CRITERIA : METRICS) {
            const option = document.createElement("option");
            option.value = name;
            option.textContent = name;
            option.selected = name === this.selection;
            choiceSelect.appendChild(option);
        }
        choiceSelect.addEventListener("change", () => {
            this.selection = choiceSelect.value;
            void this.refresh();
        });
        controls.appendChild(labelled(this.mode === "fairness" ? "criterion" : "metric", choiceSelect));
        const slider = document.createElement("input");
        slider.type = "range";
        slider.min = "0";
        slider.max = "1";
        slider.step = "0.01";
        slider.value = String(this.tolerance);
        slider.addEventListener("change", () => {
            this.tolerance = clampTolerance(Number(slider.value));
            void this.refresh();
        });
        const sliderLabel = labelled(`tolerance ${this.tolerance.toFixed(2)}`, slider);
        controls.appendChild(sliderLabel);
        this.root.appendChild(controls);
        if (this.error) {
            const banner = document.createElement("p");
            banner.className = "error-banner";
            banner.textContent = this.error;
            this.root.appendChild(banner);
        }
        if (this.seq.inFlight) {
            const busy = document.createElement("p");
            busy.className = "busy";
            busy.textContent = "loading…";
            this.root.appendChild(busy);
        }
        if (this.payload) {
            const holder = document.createElement("div");
            renderHeatmap(holder, this.payload.matrix);
            this.root.appendChild(holder);
        }
    }
}
function labelled(text, input) {
    const label = document.createElement("label");
    label.textContent = text;
    label.appendChild(input);
    return label;
}
