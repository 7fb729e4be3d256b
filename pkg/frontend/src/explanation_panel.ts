import { escapeHtml } from "./html";
import { RecordPayload } from "./schemas";

const ACTION_SECTION = "Action taken by the";
const BR_MARKERS: Record<string, string> = {
  path: "Features:",
  states: "State-action pairs sampled from the agent's behavior:",
};

// The prompt ends with the query section; its behavior-representation block
// and action line are shown verbatim, never re-rendered client-side.
export function verbatimSections(record: RecordPayload): { brBlock: string; actionLine: string } {
  const text = record.prompt_text;
  const actionIdx = text.lastIndexOf(ACTION_SECTION);
  if (actionIdx < 0) {
    return { brBlock: "", actionLine: "" };
  }
  const tail = text.slice(actionIdx);
  const actionLine = (tail.split("\n\n")[1] ?? "").trim();
  const marker = BR_MARKERS[record.br_kind];
  let brBlock = "";
  if (marker) {
    const start = text.lastIndexOf(marker);
    if (start >= 0 && start < actionIdx) {
      brBlock = text.slice(start, actionIdx).trimEnd();
    }
  }
  return { brBlock, actionLine };
}

export function renderEmptyPanel(): string {
  return (
    '<div class="explanation-panel empty">' +
    "No explanation selected. Pick a step and request one." +
    "</div>"
  );
}

export function renderExplanationPanel(record: RecordPayload): string {
  const badges = [
    `<span class="badge ${record.gated ? "gated" : "ungated"}">${record.gated ? "gated" : "ungated"}</span>`,
    `<span class="badge category">${record.state_category ?? "uncategorized"}</span>`,
    `<span class="badge br-kind">${record.br_kind}</span>`,
  ];
  const { brBlock, actionLine } = verbatimSections(record);
  const sections = [`<div class="badges">${badges.join("")}</div>`];
  if (brBlock) {
    sections.push(`<pre class="br-block">${escapeHtml(brBlock)}</pre>`);
  }
  sections.push(`<p class="action-line">${escapeHtml(actionLine)}</p>`);
  sections.push(
    record.explanation_text === null
      ? '<p class="explanation pending">Explanation not generated yet.</p>'
      : `<p class="explanation">${escapeHtml(record.explanation_text)}</p>`,
  );
  if (record.prediction_text !== null) {
    sections.push(`<p class="prediction">${escapeHtml(record.prediction_text)}</p>`);
  }
  return `<div class="explanation-panel" data-record="${record.id}">${sections.join("")}</div>`;
}
