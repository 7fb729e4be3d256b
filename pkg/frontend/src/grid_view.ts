import { escapeHtml } from "./html";
import { GRID_HEIGHT, GRID_WIDTH, StepPayload, roomIndex, stepSchema } from "./schemas";

export function renderGridError(message: string): string {
  return `<div class="grid-view error-panel">Cannot draw this step: ${escapeHtml(message)}</div>`;
}

function cell(step: StepPayload, x: number, y: number): string {
  const obs = step.observation;
  const i = roomIndex(x, y);
  const classes = ["room", obs.explored[i] ? "explored" : "unexplored"];
  const markers: string[] = [];
  if (obs.known_rubble[i]) {
    markers.push('<span class="rubble" title="rubble">&#9650;</span>');
  }
  if (obs.known_victim[i]) {
    markers.push('<span class="victim" title="victim">&#10084;</span>');
  }
  if (obs.medic_pos.x === x && obs.medic_pos.y === y) {
    markers.push('<span class="agent medic" title="medic">M</span>');
  }
  if (obs.engineer_pos.x === x && obs.engineer_pos.y === y) {
    markers.push('<span class="agent engineer" title="engineer">E</span>');
  }
  return `<td class="${classes.join(" ")}" data-room="(${x}, ${y})">${markers.join("")}</td>`;
}

function meta(step: StepPayload): string {
  if (step.final) {
    return `<div class="grid-meta">t=${step.t} (final state)</div>`;
  }
  const parts = [`t=${step.t}`];
  if (step.medic_action) parts.push(`medic=${escapeHtml(step.medic_action)}`);
  if (step.engineer_action) parts.push(`engineer=${escapeHtml(step.engineer_action)}`);
  return `<div class="grid-meta">${parts.join(" ")}</div>`;
}

// y = 0 is the north edge and is drawn as the top row
export function renderGrid(payload: unknown): string {
  const parsed = stepSchema.safeParse(payload);
  if (!parsed.success) {
    const issue = parsed.error.issues[0];
    const where = issue && issue.path.length ? ` at ${issue.path.join(".")}` : "";
    return renderGridError(`${issue?.message ?? "malformed step payload"}${where}`);
  }
  const step = parsed.data;
  const rows: string[] = [];
  for (let y = 0; y < GRID_HEIGHT; y++) {
    const cells: string[] = [];
    for (let x = 0; x < GRID_WIDTH; x++) {
      cells.push(cell(step, x, y));
    }
    rows.push(`<tr>${cells.join("")}</tr>`);
  }
  return `<div class="grid-view">${meta(step)}<table class="grid">${rows.join("")}</table></div>`;
}
