import { BrKind, RoleName } from "./schemas";

export interface ViewState {
  episodeId: string | null;
  nSteps: number;
  cursor: number;
  role: RoleName;
  brKind: BrKind;
  activeExplanationId: string | null;
}

export function initialViewState(): ViewState {
  return {
    episodeId: null,
    nSteps: 0,
    cursor: 0,
    role: "medic",
    brKind: "path",
    activeExplanationId: null,
  };
}

export function withEpisode(state: ViewState, episodeId: string, nSteps: number): ViewState {
  return { ...state, episodeId, nSteps, cursor: 0, activeExplanationId: null };
}

// Scrubbing is pure state movement: it changes the cursor and nothing
// else, and in particular never triggers an explanation request.
export function scrub(state: ViewState, cursor: number): ViewState {
  const clamped = Math.max(0, Math.min(state.nSteps, Math.trunc(cursor)));
  return { ...state, cursor: clamped };
}

export function selectRole(state: ViewState, role: RoleName): ViewState {
  return { ...state, role, activeExplanationId: null };
}

export function selectBrKind(state: ViewState, brKind: BrKind): ViewState {
  return { ...state, brKind, activeExplanationId: null };
}

export function withExplanation(state: ViewState, recordId: string): ViewState {
  return { ...state, activeExplanationId: recordId };
}
