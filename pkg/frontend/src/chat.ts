import { escapeHtml } from "./html";
import { ChatResponse } from "./schemas";

export type TurnStatus = "pending" | "ok" | "failed";

export interface TranscriptEntry {
  sender: "user" | "assistant";
  text: string;
  status: TurnStatus;
  error?: string;
}

export type SendOutcome = "sent" | "blocked" | "failed";

interface ChatTransport {
  postChat(recordId: string, message: string): Promise<ChatResponse>;
}

/** One follow-up conversation. At most one turn is in flight: while a send
 * is pending, further sends are blocked client-side (the service enforces
 * the same rule with a 409). A failed send keeps the user message in the
 * transcript with a failure badge so order is preserved. */
export class ChatController {
  readonly transcript: TranscriptEntry[] = [];
  private inFlight = false;

  constructor(
    private readonly api: ChatTransport,
    private readonly recordId: string,
  ) {}

  get busy(): boolean {
    return this.inFlight;
  }

  async send(text: string): Promise<SendOutcome> {
    const trimmed = text.trim();
    if (this.inFlight || !trimmed) {
      return "blocked";
    }
    this.inFlight = true;
    const entry: TranscriptEntry = { sender: "user", text: trimmed, status: "pending" };
    this.transcript.push(entry);
    try {
      const response = await this.api.postChat(this.recordId, trimmed);
      entry.status = "ok";
      this.transcript.push({ sender: "assistant", text: response.reply, status: "ok" });
      return "sent";
    } catch (err) {
      entry.status = "failed";
      entry.error = err instanceof Error ? err.message : String(err);
      return "failed";
    } finally {
      this.inFlight = false;
    }
  }
}

export function renderTranscript(entries: readonly TranscriptEntry[]): string {
  const turns = entries.map((entry) => {
    const classes = ["turn", entry.sender, entry.status];
    const badge =
      entry.status === "failed"
        ? `<span class="badge failed" title="${escapeHtml(entry.error ?? "")}">failed</span>`
        : "";
    return `<div class="${classes.join(" ")}">${escapeHtml(entry.text)}${badge}</div>`;
  });
  return `<div class="chat-transcript">${turns.join("")}</div>`;
}
