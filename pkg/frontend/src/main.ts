import { ApiClient, ApiError } from "./api";
import { ChatController, renderTranscript } from "./chat";
import { renderEmptyPanel, renderExplanationPanel } from "./explanation_panel";
import { renderGrid, renderGridError } from "./grid_view";
import { escapeHtml } from "./html";
import {
  LabelFormState,
  ALL_FIELDS,
  emptyForm,
  renderLabelForm,
  toLabelsBody,
  validateForm,
} from "./label_form";
import { BrKind, RecordPayload, RoleName } from "./schemas";
import {
  ViewState,
  initialViewState,
  scrub,
  selectBrKind,
  selectRole,
  withEpisode,
  withExplanation,
} from "./view_state";

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get("api") ?? "http://127.0.0.1:8000");

let view: ViewState = initialViewState();
let record: RecordPayload | null = null;
let chat: ChatController | null = null;
let labels: LabelFormState = emptyForm();
let notice = "";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function refreshGrid(): Promise<void> {
  const target = el("grid");
  if (!view.episodeId) {
    target.innerHTML = renderGridError("no episode loaded");
    return;
  }
  try {
    const step = await api.getStep(view.episodeId, view.cursor);
    target.innerHTML = renderGrid(step);
  } catch (err) {
    target.innerHTML = renderGridError(err instanceof Error ? err.message : String(err));
  }
}

function refreshExplanation(): void {
  el("explanation").innerHTML = record ? renderExplanationPanel(record) : renderEmptyPanel();
  el("chat-log").innerHTML = renderTranscript(chat ? chat.transcript : []);
  const input = el<HTMLInputElement>("chat-input");
  input.disabled = !chat || chat.busy;
  el("labels").innerHTML = renderLabelForm(labels, record ? [] : ["request an explanation first"]);
  bindLabelForm();
}

function refreshNotice(): void {
  el("notice").innerHTML = notice ? `<span class="notice">${escapeHtml(notice)}</span>` : "";
}

function refreshAll(): void {
  void refreshGrid();
  refreshExplanation();
  refreshNotice();
  el<HTMLInputElement>("cursor").value = String(view.cursor);
  el("cursor-caption").textContent = `t = ${view.cursor} / ${view.nSteps}`;
}

async function loadEpisode(): Promise<void> {
  const behavior = el<HTMLSelectElement>("behavior").value;
  const seed = Number(el<HTMLInputElement>("seed").value) || 0;
  try {
    const episode = await api.createEpisode(behavior, seed);
    view = withEpisode(view, episode.id, episode.n_steps);
    const slider = el<HTMLInputElement>("cursor");
    slider.max = String(episode.n_steps);
    record = null;
    chat = null;
    notice = `episode ${episode.id} (${episode.n_steps} steps)`;
  } catch (err) {
    notice = err instanceof Error ? err.message : String(err);
  }
  refreshAll();
}

async function requestExplanation(): Promise<void> {
  if (!view.episodeId) return;
  try {
    record = await api.createExplanation(view.episodeId, view.cursor, view.role, view.brKind);
    view = withExplanation(view, record.id);
    chat = new ChatController(api, record.id);
    labels = emptyForm();
    notice = "";
  } catch (err) {
    record = null;
    chat = null;
    notice =
      err instanceof ApiError && err.code === "Gated"
        ? "This state is gated: the distilled tree disagrees with the recorded action."
        : err instanceof Error
          ? err.message
          : String(err);
  }
  refreshExplanation();
  refreshNotice();
}

async function sendChat(): Promise<void> {
  if (!chat) return;
  const input = el<HTMLInputElement>("chat-input");
  const text = input.value;
  input.value = "";
  refreshExplanation(); // disables the input while the turn is pending
  await chat.send(text);
  refreshExplanation();
}

function bindLabelForm(): void {
  const form = el("labels").querySelector("form");
  if (!form) return;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submitLabels(form as HTMLFormElement);
  });
}

async function submitLabels(form: HTMLFormElement): Promise<void> {
  if (!record) return;
  const data = new FormData(form);
  labels = {
    annotatorId: String(data.get("annotator_id") ?? ""),
    values: Object.fromEntries(
      ALL_FIELDS.map((field) => {
        const raw = String(data.get(field) ?? "unset");
        return [field, raw === "unset" ? null : raw === "yes"];
      }),
    ) as LabelFormState["values"],
  };
  const problems = validateForm(labels);
  if (problems.length) {
    el("labels").innerHTML = renderLabelForm(labels, problems);
    bindLabelForm();
    return;
  }
  notice = "submitting labels...";
  refreshNotice();
  try {
    const saved = await api.postLabels(record.id, toLabelsBody(labels));
    notice = `labels saved (${saved.labels_id})`;
  } catch (err) {
    notice = err instanceof Error ? err.message : String(err);
  }
  refreshNotice();
}

window.addEventListener("DOMContentLoaded", () => {
  el("load").addEventListener("click", () => void loadEpisode());
  el("explain").addEventListener("click", () => void requestExplanation());
  el("chat-send").addEventListener("click", () => void sendChat());
  el<HTMLInputElement>("cursor").addEventListener("input", (event) => {
    view = scrub(view, Number((event.target as HTMLInputElement).value));
    record = null; // moving the timeline never issues an explanation request
    chat = null;
    refreshAll();
  });
  el<HTMLSelectElement>("role").addEventListener("change", (event) => {
    view = selectRole(view, (event.target as HTMLSelectElement).value as RoleName);
    refreshExplanation();
  });
  el<HTMLSelectElement>("br-kind").addEventListener("change", (event) => {
    view = selectBrKind(view, (event.target as HTMLSelectElement).value as BrKind);
    refreshExplanation();
  });
  refreshAll();
});
