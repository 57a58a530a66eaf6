/** Pure state logic for the dashboard; nothing here touches the DOM.
 *
 * The instance draft keeps every value schema-valid (numeric inputs are
 * clamped to the column range, categorical ones must come from the value
 * set) and flips to "stale" whenever anything changes, so a displayed
 * prediction always belongs to the exact row it was requested for.
 */
export function seedDraft(schema, row) {
    if (row.length !== schema.columns.length) {
        throw new Error(`row has ${row.length} cells, schema has ${schema.columns.length}`);
    }
    const fields = schema.columns.map((column, i) => ({
        column,
        value: coerce(column, row[i]),
        dirty: false,
        error: null,
    }));
    return { fields, prediction: null, stale: true };
}
function coerce(column, raw) {
    if (column.kind === "numeric") {
        const parsed = typeof raw === "number" ? raw : Number(raw);
        if (!Number.isFinite(parsed)) {
            throw new Error(`${column.name}: ${String(raw)} is not a number`);
        }
        const [low, high] = column.range ?? [parsed, parsed];
        return Math.min(Math.max(parsed, low), high);
    }
    const token = String(raw);
    if (!(column.values ?? []).includes(token)) {
        throw new Error(`${column.name}: ${token} is not an allowed value`);
    }
    return token;
}
/** Apply one edit; invalid input is recorded as an error and leaves the value. */
export function editField(draft, name, raw) {
    const fields = draft.fields.map((field) => {
        if (field.column.name !== name) {
            return field;
        }
        try {
            const value = coerce(field.column, raw);
            return { ...field, value, dirty: true, error: null };
        }
        catch (err) {
            return { ...field, error: String(err.message) };
        }
    });
    const changed = fields.some((f, i) => f.value !== draft.fields[i].value);
    return {
        fields,
        prediction: draft.prediction,
        stale: draft.stale || changed,
    };
}
/** Copy a returned foil's changes onto the draft, feeding the next what-if. */
export function applyFoil(draft, foil) {
    const byName = new Map(foil.changes.map((c) => [c.feature, c.new]));
    const fields = draft.fields.map((field) => {
        const next = byName.get(field.column.name);
        if (next === undefined) {
            return field;
        }
        return { ...field, value: coerce(field.column, next), dirty: true, error: null };
    });
    return { fields, prediction: draft.prediction, stale: true };
}
export function applyPrediction(draft, response, at) {
    return {
        fields: draft.fields,
        prediction: {
            klass: response.prediction,
            density: response.density_score ?? null,
            robust: response.robust ?? null,
            at,
        },
        stale: false,
    };
}
export function draftRow(draft) {
    return draft.fields.map((f) => f.value);
}
export function draftValid(draft) {
    return draft.fields.every((f) => f.error === null);
}
/** At most one in-flight request per panel; late replies are discarded. */
export class PanelSequencer {
    constructor() {
        this.current = 0;
        this.pending = null;
    }
    begin() {
        this.current += 1;
        this.pending = this.current;
        return this.current;
    }
    /** True when this token is still the newest request for the panel. */
    accept(token) {
        if (token !== this.current) {
            return false;
        }
        this.pending = null;
        return true;
    }
    get inFlight() {
        return this.pending !== null;
    }
}
export function clampTolerance(value) {
    if (!Number.isFinite(value)) {
        return 0;
    }
    return Math.min(Math.max(value, 0), 1);
}
export function initialViewState(schema) {
    const feature = schema.protected[0]
        ?? schema.columns.find((c) => c.kind === "categorical")?.name
        ?? schema.columns[0].name;
    return {
        tab: "instance",
        feature,
        criterion: "demographic_parity",
        metric: "accuracy",
        tolerance: 0.2,
    };
}
