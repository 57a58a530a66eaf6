/** Dashboard entry point: fetch the schema, mount the tabbed panels. */
import { ApiClient } from "./api.js";
import { DisparityPanel } from "./disparityPanel.js";
import { InstancePanel } from "./instancePanel.js";
import { initialViewState } from "./state.js";
import { SurrogatePanel } from "./surrogatePanel.js";
const TABS = [
    { id: "instance", label: "Instance what-if" },
    { id: "fairness", label: "Fairness" },
    { id: "performance", label: "Performance" },
    { id: "surrogate", label: "Surrogate" },
];
async function boot() {
    const api = new ApiClient("");
    const app = document.getElementById("app");
    if (!app) {
        return;
    }
    let summary;
    try {
        summary = await api.summary();
    }
    catch (err) {
        app.textContent = `cannot reach the audit service: ${String(err)}`;
        return;
    }
    const schema = summary.schema;
    const view = initialViewState(schema);
    const nav = document.createElement("nav");
    const panels = new Map();
    const buttons = new Map();
    for (const tab of TABS) {
        const button = document.createElement("button");
        button.textContent = tab.label;
        button.addEventListener("click", () => activate(tab.id));
        nav.appendChild(button);
        buttons.set(tab.id, button);
        const panel = document.createElement("section");
        panel.id = `panel-${tab.id}`;
        panel.hidden = true;
        panels.set(tab.id, panel);
    }
    const header = document.createElement("header");
    const title = document.createElement("h1");
    title.textContent = "Model audit: interactive what-if";
    const meta = document.createElement("p");
    meta.className = "meta";
    meta.textContent =
        `${summary.summary.rows} rows | classes: ${summary.classes.join(", ")} | ` +
            `digest ${summary.digest}`;
    header.append(title, meta, nav);
    app.replaceChildren(header, ...panels.values());
    const seed = await api.instance(0);
    const instancePanel = new InstancePanel(api, schema, panels.get("instance"), seed.row);
    const fairnessPanel = new DisparityPanel(api, schema, panels.get("fairness"), "fairness");
    const performancePanel = new DisparityPanel(api, schema, panels.get("performance"), "performance");
    const surrogatePanel = new SurrogatePanel(api, panels.get("surrogate"), () => instancePanel.currentRow());
    const loaded = new Set();
    function activate(tab) {
        view.tab = tab;
        for (const [id, panel] of panels) {
            panel.hidden = id !== tab;
            buttons.get(id)?.classList.toggle("active", id === tab);
        }
        if (!loaded.has(tab)) {
            loaded.add(tab);
            if (tab === "instance")
                instancePanel.render();
            if (tab === "fairness")
                void fairnessPanel.refresh();
            if (tab === "performance")
                void performancePanel.refresh();
            if (tab === "surrogate")
                void surrogatePanel.refresh();
        }
    }
    activate("instance");
}
void boot();
