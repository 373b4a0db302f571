// Event editing panel: edits one existing event or drafts a new one.
// The server stays the source of truth; invalid combinations come back
// as 422 validation reports and are shown inline, field by field.

import { DESIGNATIONS } from "../api";
import type {
  DatePrecision,
  Designation,
  EventObj,
  NewEventInput,
  TimeValue,
  Violation,
} from "../api";

export interface EditorHandlers {
  onSave: (patch: Partial<Omit<EventObj, "id">>) => void;
  onAdd: (payload: NewEventInput) => void;
  onDelete: () => void;
  onClose: () => void;
  onDirty: () => void;
}

export interface EditorPanel {
  root: HTMLElement;
  setViolations(violations: Violation[], general?: string): void;
  setBusy(busy: boolean): void;
}

interface TimeEditor {
  root: HTMLElement;
  read(): TimeValue;
}

function normalizeDate(iso: string, precision: DatePrecision): string {
  if (precision === "year") return `${iso.slice(0, 4)}-01-01`;
  if (precision === "month") return `${iso.slice(0, 7)}-01`;
  return iso;
}

function timeEditor(
  label: string,
  value: TimeValue,
  kinds: readonly TimeValue["kind"][],
  onDirty: () => void,
): TimeEditor {
  const root = document.createElement("fieldset");
  root.className = "time-editor";
  const kindOptions = kinds
    .map((k) => `<option value="${k}">${k}</option>`)
    .join("");
  root.innerHTML = `
    <legend>${label}</legend>
    <label>Kind
      <select data-role="kind">${kindOptions}</select>
    </label>
    <span data-role="date-fields">
      <label>Date <input type="date" data-role="date" /></label>
      <label>Precision
        <select data-role="precision">
          <option value="day">day</option>
          <option value="month">month</option>
          <option value="year">year</option>
        </select>
      </label>
    </span>
    <p class="muted" data-role="age-note" hidden></p>
  `;
  const kindSelect = root.querySelector<HTMLSelectElement>('[data-role="kind"]')!;
  const dateFields = root.querySelector<HTMLElement>('[data-role="date-fields"]')!;
  const dateInput = root.querySelector<HTMLInputElement>('[data-role="date"]')!;
  const precisionSelect = root.querySelector<HTMLSelectElement>(
    '[data-role="precision"]',
  )!;
  const ageNote = root.querySelector<HTMLElement>('[data-role="age-note"]')!;

  kindSelect.value = value.kind;
  if (value.kind === "date") {
    dateInput.value = value.date;
    precisionSelect.value = value.precision;
    if (value.origin === "relativeAge") {
      ageNote.textContent =
        `Stated as age ${value.statedAge}; editing the date makes it exact.`;
      ageNote.hidden = false;
    }
  }
  const sync = () => {
    dateFields.hidden = kindSelect.value !== "date";
  };
  sync();
  for (const control of [kindSelect, dateInput, precisionSelect]) {
    control.addEventListener("change", () => {
      sync();
      onDirty();
    });
  }

  return {
    root,
    read(): TimeValue {
      const kind = kindSelect.value as TimeValue["kind"];
      if (kind !== "date") return { kind };
      if (!dateInput.value) {
        throw new Error(`${label}: pick a date or choose another kind`);
      }
      const precision = precisionSelect.value as DatePrecision;
      const unchanged =
        value.kind === "date" &&
        value.date === dateInput.value &&
        value.precision === precision;
      if (unchanged) return value; // keep relative-age provenance intact
      return {
        kind: "date",
        date: normalizeDate(dateInput.value, precision),
        precision,
        origin: "absolute",
      };
    },
  };
}

const BLANK: EventObj = {
  id: "",
  title: "",
  notes: "",
  designation: "Symptom",
  specificConcern: "Other",
  broadConcern: null,
  start: { kind: "unspecified" },
  end: { kind: "unspecified" },
  narrativeIndex: 0,
};

export function renderEditorPanel(
  container: HTMLElement,
  event: EventObj | null,
  handlers: EditorHandlers,
): EditorPanel {
  container.innerHTML = "";
  const original = event ?? BLANK;
  const isNew = event === null;
  const root = document.createElement("form");
  root.className = "panel panel-editor";
  const designationOptions = DESIGNATIONS.map(
    (d) => `<option value="${d}">${d}</option>`,
  ).join("");
  root.innerHTML = `
    <h2>${isNew ? "Add an event" : "Edit event"}</h2>
    <p class="field-error" data-role="editor-error" hidden></p>
    <label>Title
      <input name="title" type="text" required />
    </label>
    <label>Notes
      <textarea name="notes" rows="3"></textarea>
    </label>
    <label>Designation
      <select name="designation">${designationOptions}</select>
    </label>
    <label>Specific concern <span class="muted">("Other" if none)</span>
      <input name="specificConcern" type="text" />
    </label>
    <label>Broad concern <span class="muted">(optional grouping)</span>
      <input name="broadConcern" type="text" />
    </label>
    <div data-role="time-editors"></div>
    <ul class="violations" data-role="violations" hidden></ul>
    <div class="panel-actions">
      <button type="submit" data-role="save">${isNew ? "Add event" : "Save"}</button>
      <button type="button" data-role="delete" ${isNew ? "hidden" : ""}>Delete</button>
      <button type="button" data-role="close">Back</button>
    </div>
  `;

  const field = <T extends HTMLElement>(selector: string): T =>
    root.querySelector<T>(selector)!;
  const title = field<HTMLInputElement>('input[name="title"]');
  const notes = field<HTMLTextAreaElement>('textarea[name="notes"]');
  const designation = field<HTMLSelectElement>('select[name="designation"]');
  const specific = field<HTMLInputElement>('input[name="specificConcern"]');
  const broad = field<HTMLInputElement>('input[name="broadConcern"]');
  const errorLine = field<HTMLElement>('[data-role="editor-error"]');
  const violationList = field<HTMLElement>('[data-role="violations"]');

  title.value = original.title;
  notes.value = original.notes;
  designation.value = original.designation;
  specific.value = original.specificConcern;
  broad.value = original.broadConcern ?? "";

  const startEditor = timeEditor(
    "Start", original.start, ["unspecified", "early", "date"], handlers.onDirty);
  const endEditor = timeEditor(
    "End", original.end, ["unspecified", "current", "date"], handlers.onDirty);
  const timeHost = field<HTMLElement>('[data-role="time-editors"]');
  timeHost.append(startEditor.root, endEditor.root);

  // life events pair with the LifeConcern sentinel; prefill both ways
  designation.addEventListener("change", () => {
    if (designation.value === "LifeEvent") {
      specific.value = "LifeConcern";
      broad.value = "";
    } else if (specific.value === "LifeConcern") {
      specific.value = "Other";
    }
  });
  for (const control of [title, notes, designation, specific, broad]) {
    control.addEventListener("input", () => handlers.onDirty());
  }

  const readEvent = (): Omit<EventObj, "id" | "narrativeIndex"> => ({
    title: title.value,
    notes: notes.value,
    designation: designation.value as Designation,
    specificConcern: specific.value || "Other",
    broadConcern: broad.value.trim() ? broad.value.trim() : null,
    start: startEditor.read(),
    end: endEditor.read(),
  });

  root.addEventListener("submit", (submitEvent) => {
    submitEvent.preventDefault();
    errorLine.hidden = true;
    let draft: Omit<EventObj, "id" | "narrativeIndex">;
    try {
      draft = readEvent();
    } catch (problem) {
      errorLine.textContent = (problem as Error).message;
      errorLine.hidden = false;
      return;
    }
    if (isNew) {
      handlers.onAdd(draft);
      return;
    }
    const patch: Partial<Omit<EventObj, "id">> = {};
    for (const key of [
      "title",
      "notes",
      "designation",
      "specificConcern",
      "broadConcern",
      "start",
      "end",
    ] as const) {
      if (JSON.stringify(draft[key]) !== JSON.stringify(original[key])) {
        (patch as Record<string, unknown>)[key] = draft[key];
      }
    }
    handlers.onSave(patch);
  });
  field<HTMLButtonElement>('[data-role="delete"]').addEventListener(
    "click", () => handlers.onDelete());
  field<HTMLButtonElement>('[data-role="close"]').addEventListener(
    "click", () => handlers.onClose());

  container.appendChild(root);
  return {
    root,
    setViolations(violations, general) {
      errorLine.hidden = general === undefined;
      errorLine.textContent = general ?? "";
      violationList.innerHTML = "";
      violationList.hidden = violations.length === 0;
      for (const violation of violations) {
        const item = document.createElement("li");
        item.textContent = `${violation.rule}: ${violation.message}`;
        violationList.appendChild(item);
      }
    },
    setBusy(busy) {
      field<HTMLButtonElement>('[data-role="save"]').disabled = busy;
    },
  };
}
