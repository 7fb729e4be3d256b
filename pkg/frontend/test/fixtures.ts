import { N_ROOMS, Observation, RecordPayload, StepPayload, roomIndex } from "../src/schemas";

export function flags(indices: number[] = []): boolean[] {
  const out: boolean[] = Array(N_ROOMS).fill(false);
  for (const i of indices) out[i] = true;
  return out;
}

export function observation(overrides: Partial<Observation> = {}): Observation {
  return {
    explored: flags(),
    known_rubble: flags(),
    known_victim: flags(),
    medic_pos: { x: 0, y: 0 },
    engineer_pos: { x: 1, y: 0 },
    ...overrides,
  };
}

export function step(overrides: Partial<StepPayload> = {}): StepPayload {
  return {
    episode: "0123456789abcdef",
    t: 0,
    final: false,
    observation: observation(),
    engineer_action: "NoOp",
    medic_action: "MoveEast",
    ...overrides,
  };
}

// Prompt texts mirror the service shape: system text, worked examples, then
// the query section. The examples deliberately contain their own
// "Features:" blocks so tests prove the panel picks the query's block.
const PATH_PROMPT = [
  "You observe two agents, a medic and an engineer, in a 4 by 5 grid of rooms.",
  "The features listed describe the decision rule behind the action.",
  "Features:\nmedic is in room (3, 1).\n\nAction taken by the medic:\n\nmedic moves west to room (2, 1).\n\nExplanation: The medic is returning along its sweep.",
  "Features:\nroom (0, 3) has been explored.\nengineer is in room (0, 2).\nroom (2, 2) doesn't contain rubble.\n\nAction taken by the engineer:\n\nengineer moves east to room (1, 2).\n\nExplanation:",
].join("\n\n");

const STATES_PROMPT = [
  "You observe two agents, a medic and an engineer, in a 4 by 5 grid of rooms.",
  "The state-action pairs are samples of the agent's behavior.",
  "State-action pairs sampled from the agent's behavior:\n\nState:\nroom (0, 0) has been explored.\nAction: medic moves east to room (1, 0).\n\nAction taken by the medic:\n\nmedic moves east to room (1, 0).\n\nExplanation: The medic repeats the sampled move.",
  "State-action pairs sampled from the agent's behavior:\n\nState:\nroom (2, 4) has been explored.\nroom (2, 4) contains a victim.\nAction: medic rescues the victim in room (2, 4).\n\nAction taken by the medic:\n\nmedic rescues the victim in room (2, 4).\n\nExplanation:",
].join("\n\n");

const NONE_PROMPT = [
  "You observe two agents, a medic and an engineer, in a 4 by 5 grid of rooms.",
  "No behavior description is available.",
  "Action taken by the medic:\n\nmedic moves north to room (1, 1).\n\nExplanation: The medic heads toward unexplored rooms.",
  "Action taken by the engineer:\n\nengineer removes rubble in room (2, 2).\n\nExplanation:",
].join("\n\n");

const PROMPTS: Record<string, string> = {
  path: PATH_PROMPT,
  states: STATES_PROMPT,
  none: NONE_PROMPT,
};

export function record(overrides: Partial<RecordPayload> = {}): RecordPayload {
  const brKind = overrides.br_kind ?? "path";
  const base: RecordPayload = {
    id: "feedbeefcafe0001",
    behavior: "explore",
    role: "engineer",
    br_kind: brKind,
    state_category: "Ambiguous",
    observation: observation({
      explored: flags([roomIndex(0, 2), roomIndex(0, 3)]),
      engineer_pos: { x: 0, y: 2 },
    }),
    action: "MoveEast",
    br_payload: { kind: brKind },
    prompt_text: PROMPTS[brKind] ?? PATH_PROMPT,
    session: {
      created_at: "2026-01-01T00:00:00+00:00",
      state_ref: "feedbeefcafe0001",
      messages: [{ sender: "system", text: "You observe two agents." }],
    },
    gated: true,
    explanation_text:
      "The engineer moves east because the explored rooms to the west leave (1, 2) as the next useful room.",
    prediction_text: null,
  };
  return { ...base, ...overrides };
}
