// Panel-flow state machine. The editing panel structurally requires a
// selection, so the "editing without a selected event" state cannot be
// represented at all.

import type { StoryRecord } from "./api";

export interface Profile {
  name: string;
  dateOfBirth: string | null;
}

export type Selection =
  | { kind: "existing"; eventId: string }
  | { kind: "new" };

export type Panel =
  | { name: "profile" }
  | { name: "elicitation" }
  | { name: "event-editing"; selection: Selection };

export interface AppState {
  panel: Panel;
  dirty: boolean;
  profile: Profile | null;
  record: StoryRecord | null;
  artifact: string | null;
}

export function initialState(): AppState {
  return {
    panel: { name: "profile" },
    dirty: false,
    profile: null,
    record: null,
    artifact: null,
  };
}

export function canEnterElicitation(state: AppState): boolean {
  return state.profile !== null;
}

export function completeProfile(state: AppState, profile: Profile): AppState {
  if (!profile.name.trim()) {
    throw new Error("profile requires a name");
  }
  return { ...state, profile, panel: { name: "elicitation" } };
}

export function reopenProfile(state: AppState): AppState {
  return { ...state, panel: { name: "profile" } };
}

export function storyLoaded(
  state: AppState,
  record: StoryRecord,
  artifact: string,
): AppState {
  return { ...state, record, artifact, dirty: false };
}

export function openEditor(state: AppState, selection: Selection): AppState {
  if (state.record === null) {
    throw new Error("no story to edit");
  }
  if (
    selection.kind === "existing" &&
    !state.record.story.events.some((e) => e.id === selection.eventId)
  ) {
    throw new Error(`unknown event ${selection.eventId}`);
  }
  return { ...state, panel: { name: "event-editing", selection }, dirty: false };
}

export function closeEditor(state: AppState): AppState {
  return { ...state, panel: { name: "elicitation" }, dirty: false };
}

export function markDirty(state: AppState, dirty: boolean): AppState {
  return { ...state, dirty };
}
