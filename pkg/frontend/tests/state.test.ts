import { describe, expect, it } from "vitest";

import type { StoryRecord } from "../src/api";
import {
  canEnterElicitation,
  closeEditor,
  completeProfile,
  initialState,
  markDirty,
  openEditor,
  reopenProfile,
  storyLoaded,
} from "../src/state";

function record(eventIds: string[]): StoryRecord {
  return {
    storyId: "s1",
    revision: 1,
    createdAt: "2025-06-01T00:00:00+00:00",
    updatedAt: "2025-06-01T00:00:00+00:00",
    story: {
      name: "Alex",
      dateOfBirth: null,
      sourceNarrative: null,
      events: eventIds.map((id, i) => ({
        id,
        title: `Event ${id}`,
        notes: "",
        designation: "Symptom" as const,
        specificConcern: "Other",
        broadConcern: null,
        start: { kind: "unspecified" as const },
        end: { kind: "unspecified" as const },
        narrativeIndex: i,
      })),
    },
    violations: [],
  };
}

describe("panel flow", () => {
  it("starts on the profile panel with nothing loaded", () => {
    const state = initialState();
    expect(state.panel.name).toBe("profile");
    expect(state.profile).toBeNull();
    expect(state.record).toBeNull();
    expect(state.artifact).toBeNull();
    expect(state.dirty).toBe(false);
  });

  it("gates elicitation on a completed profile", () => {
    const state = initialState();
    expect(canEnterElicitation(state)).toBe(false);
    const next = completeProfile(state, { name: "Alex", dateOfBirth: null });
    expect(next.panel.name).toBe("elicitation");
    expect(canEnterElicitation(next)).toBe(true);
  });

  it("rejects a blank profile name", () => {
    expect(() =>
      completeProfile(initialState(), { name: "   ", dateOfBirth: null }),
    ).toThrow(/name/);
  });

  it("keeps profile data when reopening the profile panel", () => {
    let state = completeProfile(initialState(), {
      name: "Alex",
      dateOfBirth: "1990-06-15",
    });
    state = reopenProfile(state);
    expect(state.panel.name).toBe("profile");
    expect(state.profile?.dateOfBirth).toBe("1990-06-15");
  });

  it("stores record and artifact together and clears dirty", () => {
    let state = completeProfile(initialState(), {
      name: "Alex",
      dateOfBirth: null,
    });
    state = markDirty(state, true);
    state = storyLoaded(state, record(["e1"]), "<svg/>");
    expect(state.record?.storyId).toBe("s1");
    expect(state.artifact).toBe("<svg/>");
    expect(state.dirty).toBe(false);
  });
});

describe("editor selection invariant", () => {
  function loaded() {
    let state = completeProfile(initialState(), {
      name: "Alex",
      dateOfBirth: null,
    });
    return storyLoaded(state, record(["e1", "e2"]), "<svg/>");
  }

  it("opens on an existing event", () => {
    const state = openEditor(loaded(), { kind: "existing", eventId: "e2" });
    expect(state.panel).toEqual({
      name: "event-editing",
      selection: { kind: "existing", eventId: "e2" },
    });
  });

  it("opens in new-event mode", () => {
    const state = openEditor(loaded(), { kind: "new" });
    expect(state.panel).toEqual({
      name: "event-editing",
      selection: { kind: "new" },
    });
  });

  it("refuses to edit without a loaded story", () => {
    const bare = completeProfile(initialState(), {
      name: "Alex",
      dateOfBirth: null,
    });
    expect(() => openEditor(bare, { kind: "new" })).toThrow(/no story/);
  });

  it("refuses a selection that names an unknown event", () => {
    expect(() =>
      openEditor(loaded(), { kind: "existing", eventId: "e9" }),
    ).toThrow(/unknown event/);
  });

  it("returns to elicitation when the editor closes", () => {
    let state = openEditor(loaded(), { kind: "new" });
    state = markDirty(state, true);
    state = closeEditor(state);
    expect(state.panel.name).toBe("elicitation");
    expect(state.dirty).toBe(false);
  });
});
