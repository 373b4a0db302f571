// Application shell: panel flow on the left, server-rendered canvas on
// the right. Every mutation round-trips through the service before the
// canvas changes; nothing is drawn speculatively on this side.

import { ApiError } from "./api";
import type {
  EventObj,
  NewEventInput,
  NewStoryInput,
  StoryRecord,
} from "./api";
import { clearArtifact, showArtifact, wireHitTesting } from "./canvas";
import { exportArtifact } from "./export";
import { renderEditorPanel } from "./panels/editor";
import type { EditorPanel } from "./panels/editor";
import { renderElicitationPanel } from "./panels/elicitation";
import type { ElicitationPanel } from "./panels/elicitation";
import { renderProfilePanel } from "./panels/profile";
import {
  closeEditor,
  completeProfile,
  initialState,
  markDirty,
  openEditor,
  reopenProfile,
  storyLoaded,
} from "./state";
import type { AppState, Selection } from "./state";

/** The slice of the HTTP client the app consumes; tests fake this. */
export interface StoryService {
  createStory(input: NewStoryInput): Promise<StoryRecord>;
  patchEvent(
    storyId: string,
    eventId: string,
    patch: Partial<Omit<EventObj, "id">>,
    expectedRevision?: number,
  ): Promise<StoryRecord>;
  addEvent(storyId: string, event: NewEventInput): Promise<StoryRecord>;
  deleteEvent(storyId: string, eventId: string): Promise<StoryRecord>;
  fetchArtifact(storyId: string): Promise<string>;
}

export interface App {
  getState(): AppState;
}

const IDLE_HINT =
  "Complete your profile and share your story to see a timeline.";
const EMPTY_STORY_HINT =
  "No events were found in your story yet. Mention what happened and " +
  "when, or use \"Add an event\".";

function describe(problem: unknown): string {
  return problem instanceof Error ? problem.message : String(problem);
}

export function createApp(host: HTMLElement, api: StoryService): App {
  let state = initialState();
  let narrativeText = "";
  let elicitation: ElicitationPanel | null = null;
  let editor: EditorPanel | null = null;

  host.innerHTML = `
    <header class="topbar">
      <h1>Storyline</h1>
      <div class="topbar-actions">
        <button type="button" data-role="edit-profile" hidden>Profile</button>
        <button type="button" data-role="toggle-pane">Hide panel</button>
        <button type="button" data-role="export" disabled>Export SVG</button>
      </div>
    </header>
    <main class="workspace" data-role="workspace">
      <aside class="pane" data-role="pane"></aside>
      <section class="canvas" data-role="canvas"></section>
    </main>
  `;
  const pick = <T extends HTMLElement>(selector: string): T =>
    host.querySelector<T>(selector)!;
  const paneHost = pick<HTMLElement>('[data-role="pane"]');
  const canvasHost = pick<HTMLElement>('[data-role="canvas"]');
  const workspace = pick<HTMLElement>('[data-role="workspace"]');
  const exportButton = pick<HTMLButtonElement>('[data-role="export"]');
  const profileButton = pick<HTMLButtonElement>('[data-role="edit-profile"]');
  const toggleButton = pick<HTMLButtonElement>('[data-role="toggle-pane"]');

  function setState(next: AppState): void {
    state = next;
    renderPane();
    exportButton.disabled = state.artifact === null;
    profileButton.hidden =
      state.profile === null || state.panel.name === "profile";
  }

  function refreshCanvas(): void {
    if (state.artifact === null || state.record === null) {
      clearArtifact(canvasHost, IDLE_HINT);
      return;
    }
    showArtifact(canvasHost, state.artifact);
    if (state.record.story.events.length === 0) {
      const hint = document.createElement("p");
      hint.className = "canvas-hint";
      hint.textContent = EMPTY_STORY_HINT;
      canvasHost.appendChild(hint);
    }
    if (state.record.violations.length > 0) {
      const note = document.createElement("p");
      note.className = "muted canvas-note";
      note.textContent = state.record.violations
        .map((v) => v.message)
        .join(" ");
      canvasHost.appendChild(note);
    }
  }

  async function submitNarrative(text: string): Promise<void> {
    const profile = state.profile;
    if (profile === null) return;
    narrativeText = text;
    const panel = elicitation;
    panel?.setError(null);
    panel?.setBusy(true);
    try {
      const record = await api.createStory({
        name: profile.name,
        dateOfBirth: profile.dateOfBirth,
        narrative: text,
      });
      const artifact = await api.fetchArtifact(record.storyId);
      setState(storyLoaded(state, record, artifact));
      refreshCanvas();
    } catch (problem) {
      panel?.setBusy(false);
      panel?.setError(describe(problem));
    }
  }

  async function runMutation(
    go: () => Promise<StoryRecord>,
  ): Promise<void> {
    const panel = editor;
    panel?.setBusy(true);
    panel?.setViolations([]);
    try {
      const record = await go();
      const artifact = await api.fetchArtifact(record.storyId);
      setState(closeEditor(storyLoaded(state, record, artifact)));
      refreshCanvas();
    } catch (problem) {
      panel?.setBusy(false);
      if (problem instanceof ApiError) {
        panel?.setViolations(problem.violations, problem.message);
      } else {
        panel?.setViolations([], describe(problem));
      }
    }
  }

  function renderEditor(selection: Selection): void {
    const record = state.record;
    if (record === null) return;
    const event =
      selection.kind === "existing"
        ? record.story.events.find((e) => e.id === selection.eventId) ?? null
        : null;
    editor = renderEditorPanel(paneHost, event, {
      onDirty: () => {
        state = markDirty(state, true);
      },
      onClose: () => setState(closeEditor(state)),
      onSave: (patch) => {
        if (selection.kind !== "existing") return;
        if (Object.keys(patch).length === 0) {
          setState(closeEditor(state));
          return;
        }
        void runMutation(() =>
          api.patchEvent(
            record.storyId,
            selection.eventId,
            patch,
            state.record?.revision,
          ),
        );
      },
      onAdd: (payload) => {
        void runMutation(() => api.addEvent(record.storyId, payload));
      },
      onDelete: () => {
        if (selection.kind !== "existing") return;
        void runMutation(() =>
          api.deleteEvent(record.storyId, selection.eventId),
        );
      },
    });
  }

  function renderPane(): void {
    elicitation = null;
    editor = null;
    const panel = state.panel;
    if (panel.name === "profile") {
      renderProfilePanel(paneHost, state.profile, (profile) => {
        setState(completeProfile(state, profile));
      });
    } else if (panel.name === "elicitation") {
      elicitation = renderElicitationPanel(
        paneHost,
        narrativeText,
        (text) => void submitNarrative(text),
        () => setState(openEditor(state, { kind: "new" })),
        state.record !== null,
      );
    } else {
      renderEditor(panel.selection);
    }
  }

  wireHitTesting(canvasHost, (eventId) => {
    const record = state.record;
    if (record === null || state.panel.name === "event-editing") return;
    if (!record.story.events.some((e) => e.id === eventId)) return;
    setState(openEditor(state, { kind: "existing", eventId }));
  });
  exportButton.addEventListener("click", () => {
    if (state.artifact !== null) {
      exportArtifact(state.artifact, "health-story.svg");
    }
  });
  profileButton.addEventListener("click", () => {
    setState(reopenProfile(state));
  });
  toggleButton.addEventListener("click", () => {
    const collapsed = workspace.classList.toggle("pane-collapsed");
    toggleButton.textContent = collapsed ? "Show panel" : "Hide panel";
  });

  setState(state);
  refreshCanvas();
  return { getState: () => state };
}
