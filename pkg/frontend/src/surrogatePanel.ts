/** Local surrogate explanations for the current draft row. */

import type { ApiClient, CellValue, SurrogateResponse } from "./api.js";
import { PanelSequencer } from "./state.js";

export class SurrogatePanel {
  private kind: "ridge" | "tree" = "ridge";
  private payload: SurrogateResponse | null = null;
  private error: string | null = null;
  private readonly seq = new PanelSequencer();

  constructor(private readonly api: ApiClient,
              private readonly root: HTMLElement,
              private readonly currentRow: () => CellValue[]) {}

  async refresh(): Promise<void> {
    const token = this.seq.begin();
    this.render();
    try {
      const payload = await this.api.surrogate(this.currentRow(),
                                               { kind: this.kind, seed: 42 });
      if (this.seq.accept(token)) {
        this.payload = payload;
        this.error = null;
      }
    } catch (err) {
      if (this.seq.accept(token)) {
        this.error = String((err as Error).message);
      }
    }
    this.render();
  }

  render(): void {
    this.root.replaceChildren();
    const controls = document.createElement("div");
    controls.className = "controls";
    const select = document.createElement("select");
    for (const kind of ["ridge", "tree"] as const) {
      const option = document.createElement("option");
      option.value = kind;
      option.textContent = kind;
      option.selected = kind === this.kind;
      select.appendChild(option);
    }
    select.addEventListener("change", () => {
      this.kind = select.value as "ridge" | "tree";
      void this.refresh();
    });
    controls.appendChild(select);
    const run = document.createElement("button");
    run.textContent = this.seq.inFlight ? "Explaining…" : "Explain draft row";
    run.disabled = this.seq.inFlight;
    run.addEventListener("click", () => void this.refresh());
    controls.appendChild(run);
    this.root.appendChild(controls);

    if (this.error) {
      const banner = document.createElement("p");
      banner.className = "error-banner";
      banner.textContent = this.error;
      this.root.appendChild(banner);
    }
    if (!this.payload) {
      return;
    }
    const exp = this.payload.explanation;
    const header = document.createElement("p");
    header.textContent =
      `${exp.kind} surrogate for class "${exp.explained_class}" - ` +
      `fidelity ${exp.fidelity.toFixed(3)}`;
    this.root.appendChild(header);

    if (exp.linear) {
      const list = document.createElement("ul");
      list.className = "weights";
      const entries = Object.entries(exp.linear.weights)
        .sort((a, b) => Math.abs(b[1]) - Math.abs(a[1]));
      for (const [name, weight] of entries) {
        const item = document.createElement("li");
        item.textContent = `${name}: ${weight >= 0 ? "+" : ""}${weight.toFixed(4)}`;
        list.appendChild(item);
      }
      const intercept = document.createElement("li");
      intercept.textContent = `intercept: ${exp.linear.intercept.toFixed(4)}`;
      list.appendChild(intercept);
      this.root.appendChild(list);
    }
    if (exp.tree) {
      const ruleTitle = document.createElement("p");
      ruleTitle.textContent = "root-to-leaf rule for this row:";
      this.root.appendChild(ruleTitle);
      const rule = document.createElement("ul");
      rule.className = "rule";
      for (const predicate of exp.tree.rule) {
        const item = document.createElement("li");
        item.textContent =
          `${predicate.feature} ${predicate.op} ${String(predicate.value)}`;
        rule.appendChild(item);
      }
      this.root.appendChild(rule);
      const importances = document.createElement("ul");
      importances.className = "weights";
      for (const [name, value] of Object.entries(exp.tree.importances)) {
        const item = document.createElement("li");
        item.textContent = `${name}: importance ${value.toFixed(4)}`;
        importances.appendChild(item);
      }
      this.root.appendChild(importances);
    }
    if (exp.diagnostic) {
      const note = document.createElement("p");
      note.className = "diagnostic";
      note.textContent = exp.diagnostic;
      this.root.appendChild(note);
    }
  }
}
