import {
  ChatResponse,
  EpisodePayload,
  LabelsResponse,
  RecordPayload,
  ReportPayload,
  StepPayload,
  chatResponseSchema,
  episodeSchema,
  errorEnvelopeSchema,
  labelsResponseSchema,
  recordSchema,
  reportSchema,
  stepSchema,
} from "./schemas";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface LabelsBody {
  annotator_id: string;
  [metric: string]: string | boolean | null;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body: unknown = await response.json();
    if (!response.ok) {
      const envelope = errorEnvelopeSchema.safeParse(body);
      if (envelope.success) {
        throw new ApiError(envelope.data.error.code, envelope.data.error.message, response.status);
      }
      throw new ApiError("Unknown", `unexpected ${response.status} response`, response.status);
    }
    return body;
  }

  private post(path: string, body: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async createEpisode(behavior: string, seed: number): Promise<EpisodePayload> {
    return episodeSchema.parse(await this.post("/episodes", { behavior, seed }));
  }

  async getEpisode(episodeId: string): Promise<EpisodePayload> {
    return episodeSchema.parse(await this.request(`/episodes/${episodeId}`));
  }

  async getStep(episodeId: string, t: number): Promise<StepPayload> {
    return stepSchema.parse(await this.request(`/episodes/${episodeId}/steps/${t}`));
  }

  async createTree(behavior: string, role: string, config?: unknown): Promise<{ job: string }> {
    const body = await this.post("/trees", { behavior, role, config });
    return { job: (body as { job_id: string }).job_id };
  }

  async getTreeStatus(jobId: string): Promise<Record<string, unknown>> {
    return (await this.request(`/trees/${jobId}`)) as Record<string, unknown>;
  }

  async createExplanation(
    episodeId: string,
    t: number,
    role: string,
    brKind: string,
  ): Promise<RecordPayload> {
    return recordSchema.parse(
      await this.post("/explanations", { episode: episodeId, t, role, br_kind: brKind }),
    );
  }

  async getExplanation(recordId: string): Promise<RecordPayload> {
    return recordSchema.parse(await this.request(`/explanations/${recordId}`));
  }

  async postChat(recordId: string, message: string): Promise<ChatResponse> {
    return chatResponseSchema.parse(
      await this.post(`/explanations/${recordId}/chat`, { message }),
    );
  }

  async postLabels(recordId: string, body: LabelsBody): Promise<LabelsResponse> {
    return labelsResponseSchema.parse(
      await this.post(`/explanations/${recordId}/labels`, body),
    );
  }

  async getReport(kind: "accuracy" | "hallucination"): Promise<ReportPayload> {
    return reportSchema.parse(await this.request(`/reports/${kind}`));
  }
}
