import { z } from "zod";

export const GRID_WIDTH = 4;
export const GRID_HEIGHT = 5;
export const N_ROOMS = GRID_WIDTH * GRID_HEIGHT;

export const roleSchema = z.enum(["medic", "engineer"]);
export type RoleName = z.infer<typeof roleSchema>;

export const brKindSchema = z.enum(["path", "states", "none"]);
export type BrKind = z.infer<typeof brKindSchema>;

export const categorySchema = z.enum(["LongTerm", "ShortTerm", "Ambiguous"]).nullable();

const coordSchema = z.object({
  x: z.number().int().min(0).max(GRID_WIDTH - 1),
  y: z.number().int().min(0).max(GRID_HEIGHT - 1),
});
export type Coord = z.infer<typeof coordSchema>;

const roomFlags = z.array(z.boolean()).length(N_ROOMS);

export const observationSchema = z.object({
  explored: roomFlags,
  known_rubble: roomFlags,
  known_victim: roomFlags,
  medic_pos: coordSchema,
  engineer_pos: coordSchema,
});
export type Observation = z.infer<typeof observationSchema>;

// GET /episodes/{id}/steps/{t}; action and goal fields are absent on the
// final (post-horizon) entry
export const stepSchema = z.object({
  episode: z.string(),
  t: z.number().int().min(0),
  final: z.boolean(),
  observation: observationSchema,
  engineer_action: z.string().optional(),
  medic_action: z.string().optional(),
});
export type StepPayload = z.infer<typeof stepSchema>;

export const messageSchema = z.object({
  sender: z.enum(["system", "user", "assistant"]),
  text: z.string(),
});
export type Message = z.infer<typeof messageSchema>;

export const sessionSchema = z.object({
  created_at: z.string(),
  state_ref: z.string(),
  messages: z.array(messageSchema),
});

export const recordSchema = z.object({
  id: z.string(),
  behavior: z.string(),
  role: roleSchema,
  br_kind: brKindSchema,
  state_category: categorySchema,
  observation: observationSchema,
  action: z.string(),
  br_payload: z.unknown(),
  prompt_text: z.string(),
  session: sessionSchema,
  gated: z.boolean(),
  explanation_text: z.string().nullable(),
  prediction_text: z.string().nullable(),
});
export type RecordPayload = z.infer<typeof recordSchema>;

export const episodeSchema = z.object({
  id: z.string(),
  engineer_policy: z.string(),
  medic_policy: z.string(),
  n_steps: z.number().int().min(0),
});
export type EpisodePayload = z.infer<typeof episodeSchema>;

export const chatResponseSchema = z.object({
  reply: z.string(),
  session: sessionSchema,
});
export type ChatResponse = z.infer<typeof chatResponseSchema>;

export const labelsResponseSchema = z.object({
  labels_id: z.string(),
  record_id: z.string(),
});
export type LabelsResponse = z.infer<typeof labelsResponseSchema>;

export const reportSchema = z.object({
  cells: z.array(z.record(z.unknown())),
  text: z.string(),
});
export type ReportPayload = z.infer<typeof reportSchema>;

export const errorEnvelopeSchema = z.object({
  error: z.object({ code: z.string(), message: z.string() }),
});

export function roomIndex(x: number, y: number): number {
  return y * GRID_WIDTH + x;
}
