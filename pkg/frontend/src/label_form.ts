import { escapeHtml } from "./html";
import { LabelsBody } from "./api";

export const METRIC_FIELDS = ["strategy", "category", "goal", "action", "intent"] as const;
export const HALLUCINATION_FIELDS = [
  "hallucination_in_explanation",
  "hallucination_in_prediction",
] as const;
export const ALL_FIELDS = [...METRIC_FIELDS, ...HALLUCINATION_FIELDS] as const;

export type LabelField = (typeof ALL_FIELDS)[number];

// null = not annotated; the harness drops it from denominators
export type Judgment = boolean | null;

export interface LabelFormState {
  annotatorId: string;
  values: Record<LabelField, Judgment>;
}

export function emptyForm(): LabelFormState {
  const values = Object.fromEntries(ALL_FIELDS.map((f) => [f, null])) as Record<
    LabelField,
    Judgment
  >;
  return { annotatorId: "", values };
}

export function validateForm(state: LabelFormState): string[] {
  const problems: string[] = [];
  if (!state.annotatorId.trim()) {
    problems.push("annotator id is required");
  }
  return problems;
}

export function toLabelsBody(state: LabelFormState): LabelsBody {
  const body: LabelsBody = { annotator_id: state.annotatorId.trim() };
  for (const field of ALL_FIELDS) {
    body[field] = state.values[field];
  }
  return body;
}

function toggle(field: LabelField, value: Judgment): string {
  const options = [
    ["unset", value === null],
    ["yes", value === true],
    ["no", value === false],
  ] as const;
  const rendered = options
    .map(([label, selected]) => `<option${selected ? " selected" : ""}>${label}</option>`)
    .join("");
  return (
    `<label class="label-field" data-field="${field}">${field.replace(/_/g, " ")}` +
    `<select name="${field}">${rendered}</select></label>`
  );
}

export function renderLabelForm(state: LabelFormState, problems: string[] = []): string {
  const metricToggles = METRIC_FIELDS.map((f) => toggle(f, state.values[f])).join("");
  const hallucinationToggles = HALLUCINATION_FIELDS.map((f) => toggle(f, state.values[f])).join("");
  const problemList = problems.length
    ? `<ul class="problems">${problems.map((p) => `<li>${escapeHtml(p)}</li>`).join("")}</ul>`
    : "";
  return (
    '<form class="label-form">' +
    `<label class="annotator">annotator id<input name="annotator_id" value="${escapeHtml(state.annotatorId)}"></label>` +
    `<fieldset class="metrics">${metricToggles}</fieldset>` +
    `<fieldset class="hallucinations">${hallucinationToggles}</fieldset>` +
    problemList +
    `<button type="submit"${problems.length ? " disabled" : ""}>Submit labels</button>` +
    "</form>"
  );
}
