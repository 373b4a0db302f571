// Whole-app flow under jsdom with a faked service. The live-service
// variant of this flow runs in tests/integration.test.ts.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import type { Mock } from "vitest";

import { ApiError } from "../src/api";
import type { EventObj, StoryRecord } from "../src/api";
import { createApp } from "../src/app";
import type { App, StoryService } from "../src/app";

function evt(id: string, title: string, extra: Partial<EventObj> = {}): EventObj {
  return {
    id,
    title,
    notes: "",
    designation: "Symptom",
    specificConcern: "Other",
    broadConcern: null,
    start: { kind: "unspecified" },
    end: { kind: "unspecified" },
    narrativeIndex: 0,
    ...extra,
  };
}

function makeRecord(events: EventObj[], revision = 1): StoryRecord {
  return {
    storyId: "s1",
    revision,
    createdAt: "2025-06-01T00:00:00+00:00",
    updatedAt: "2025-06-01T00:00:00+00:00",
    story: {
      name: "Alex",
      dateOfBirth: "1990-06-15",
      sourceNarrative: "text",
      events,
    },
    violations: [],
  };
}

function svgWith(ids: string[]): string {
  const groups = ids
    .map((id) => `<g id="event-${id}"><rect width="10" height="10"/></g>`)
    .join("");
  return `<svg xmlns="http://www.w3.org/2000/svg" width="100" height="50">${groups}</svg>\n`;
}

type FakeService = {
  [K in keyof StoryService]: StoryService[K] & Mock;
};

function makeService(record: StoryRecord, artifact: string): FakeService {
  return {
    createStory: vi.fn().mockResolvedValue(record),
    patchEvent: vi.fn().mockResolvedValue(record),
    addEvent: vi.fn().mockResolvedValue(record),
    deleteEvent: vi.fn().mockResolvedValue(record),
    fetchArtifact: vi.fn().mockResolvedValue(artifact),
  };
}

let host: HTMLElement;

beforeEach(() => {
  host = document.createElement("div");
  document.body.appendChild(host);
});

afterEach(() => {
  host.remove();
  vi.restoreAllMocks();
});

function pane(): HTMLElement {
  return host.querySelector<HTMLElement>('[data-role="pane"]')!;
}

function canvas(): HTMLElement {
  return host.querySelector<HTMLElement>('[data-role="canvas"]')!;
}

function completeProfileForm(): void {
  const nameInput = pane().querySelector<HTMLInputElement>('input[name="name"]')!;
  nameInput.value = "Alex";
  const dob = pane().querySelector<HTMLInputElement>('input[name="dateOfBirth"]')!;
  dob.value = "1990-06-15";
  pane()
    .querySelector("form")!
    .dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

function typeNarrative(text: string): void {
  pane().querySelector<HTMLTextAreaElement>("textarea")!.value = text;
}

function clickSubmitNarrative(): void {
  pane()
    .querySelector<HTMLButtonElement>('[data-role="submit-narrative"]')!
    .click();
}

async function loadStory(
  app: App,
  service: FakeService,
  narrative = "I broke my arm in 2001.",
): Promise<void> {
  completeProfileForm();
  typeNarrative(narrative);
  clickSubmitNarrative();
  await vi.waitFor(() => {
    expect(app.getState().record).not.toBeNull();
  });
}

describe("panel flow in the DOM", () => {
  it("shows the profile panel first and elicitation after completion", () => {
    const service = makeService(makeRecord([]), svgWith([]));
    const app = createApp(host, service);
    expect(pane().querySelector(".panel-profile")).not.toBeNull();
    expect(pane().querySelector("textarea")).toBeNull();

    completeProfileForm();
    expect(app.getState().panel.name).toBe("elicitation");
    expect(pane().querySelector("textarea")).not.toBeNull();
  });

  it("refuses a blank profile name and stays on the profile panel", () => {
    const service = makeService(makeRecord([]), svgWith([]));
    const app = createApp(host, service);
    pane()
      .querySelector("form")!
      .dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    expect(app.getState().panel.name).toBe("profile");
    const error = pane().querySelector<HTMLElement>('[data-role="profile-error"]')!;
    expect(error.hidden).toBe(false);
  });

  it("places the example stories before the narrative input", () => {
    const service = makeService(makeRecord([]), svgWith([]));
    createApp(host, service);
    completeProfileForm();
    const examples = pane().querySelector(".examples")!;
    const textarea = pane().querySelector("textarea")!;
    const order = examples.compareDocumentPosition(textarea);
    expect(order & Node.DOCUMENT_POSITION_FOLLOWING).toBeTruthy();
    expect(pane().querySelectorAll(".example-story").length).toBeGreaterThan(0);
  });
});

describe("narrative submission", () => {
  it("creates a story and shows one hit-testable bubble per event", async () => {
    const events = [evt("e1", "Broken arm"), evt("e2", "Physiotherapy")];
    const service = makeService(makeRecord(events), svgWith(["e1", "e2"]));
    const app = createApp(host, service);
    await loadStory(app, service);

    expect(service.createStory).toHaveBeenCalledWith({
      name: "Alex",
      dateOfBirth: "1990-06-15",
      narrative: "I broke my arm in 2001.",
    });
    const groups = canvas().querySelectorAll('g[id^="event-"]');
    expect(groups.length).toBe(events.length);
    const exportButton = host.querySelector<HTMLButtonElement>(
      '[data-role="export"]',
    )!;
    expect(exportButton.disabled).toBe(false);
  });

  it("shows guidance next to an empty artifact for an empty story", async () => {
    const service = makeService(makeRecord([]), svgWith([]));
    const app = createApp(host, service);
    await loadStory(app, service, "");
    expect(canvas().querySelector("svg")).not.toBeNull();
    expect(canvas().querySelector(".canvas-hint")?.textContent).toMatch(
      /No events/,
    );
  });

  it("keeps the typed text and shows the error inline when the service fails", async () => {
    const service = makeService(makeRecord([]), svgWith([]));
    service.createStory.mockRejectedValue(new ApiError(502, "parser offline"));
    const app = createApp(host, service);
    completeProfileForm();
    typeNarrative("my story text");
    clickSubmitNarrative();

    await vi.waitFor(() => {
      const error = pane().querySelector<HTMLElement>(
        '[data-role="elicitation-error"]',
      )!;
      expect(error.hidden).toBe(false);
      expect(error.textContent).toBe("parser offline");
    });
    expect(pane().querySelector("textarea")!.value).toBe("my story text");
    expect(app.getState().record).toBeNull();
    expect(canvas().querySelector("svg")).toBeNull();
    expect(
      host.querySelector<HTMLButtonElement>('[data-role="export"]')!.disabled,
    ).toBe(true);
  });
});

describe("event editing", () => {
  function editorService(): FakeService {
    const events = [
      evt("e1", "Broken arm", {
        notes: "fell off a bike",
        start: {
          kind: "date",
          date: "2001-01-01",
          precision: "year",
          origin: "absolute",
        },
      }),
      evt("e2", "Physiotherapy", { narrativeIndex: 1 }),
    ];
    return makeService(makeRecord(events), svgWith(["e1", "e2"]));
  }

  function clickBubble(id: string): void {
    canvas()
      .querySelector(`g[id="event-${id}"] rect`)!
      .dispatchEvent(new MouseEvent("click", { bubbles: true }));
  }

  it("opens the editor pre-filled when a bubble is clicked", async () => {
    const service = editorService();
    const app = createApp(host, service);
    await loadStory(app, service);
    clickBubble("e1");

    expect(app.getState().panel).toEqual({
      name: "event-editing",
      selection: { kind: "existing", eventId: "e1" },
    });
    expect(pane().querySelector<HTMLInputElement>('input[name="title"]')!.value).toBe(
      "Broken arm",
    );
    expect(
      pane().querySelector<HTMLTextAreaElement>('textarea[name="notes"]')!.value,
    ).toBe("fell off a bike");
    const start = pane().querySelector(".time-editor")!;
    expect(start.querySelector<HTMLSelectElement>('[data-role="kind"]')!.value).toBe(
      "date",
    );
    expect(start.querySelector<HTMLInputElement>('[data-role="date"]')!.value).toBe(
      "2001-01-01",
    );
  });

  it("patches only changed fields with the current revision and refreshes the canvas", async () => {
    const service = editorService();
    const patched = makeRecord(
      [evt("e1", "Fractured arm"), evt("e2", "Physiotherapy")],
      2,
    );
    service.patchEvent.mockResolvedValue(patched);
    const app = createApp(host, service);
    await loadStory(app, service);

    service.fetchArtifact.mockResolvedValue(svgWith(["e1", "e2"]) + "<!--v2-->");
    clickBubble("e1");
    pane().querySelector<HTMLInputElement>('input[name="title"]')!.value =
      "Fractured arm";
    pane()
      .querySelector("form")!
      .dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));

    await vi.waitFor(() => {
      expect(app.getState().record?.revision).toBe(2);
    });
    expect(service.patchEvent).toHaveBeenCalledWith(
      "s1",
      "e1",
      { title: "Fractured arm" },
      1,
    );
    expect(app.getState().panel.name).toBe("elicitation");
    expect(canvas().innerHTML).toContain("<!--v2-->");
  });

  it("shows 422 violations inline and leaves the canvas untouched", async () => {
    const service = editorService();
    service.patchEvent.mockRejectedValue(
      new ApiError(422, "event would violate story rules", [
        {
          eventId: "e1",
          rule: "life-concern-coupling",
          message: "life events must use the life concern",
        },
      ]),
    );
    const app = createApp(host, service);
    await loadStory(app, service);
    const before = canvas().innerHTML;

    clickBubble("e1");
    pane().querySelector<HTMLSelectElement>('select[name="designation"]')!.value =
      "LifeEvent";
    pane()
      .querySelector<HTMLSelectElement>('select[name="designation"]')!
      .dispatchEvent(new Event("change", { bubbles: true }));
    pane()
      .querySelector("form")!
      .dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));

    await vi.waitFor(() => {
      const list = pane().querySelector<HTMLElement>('[data-role="violations"]')!;
      expect(list.hidden).toBe(false);
      expect(list.textContent).toContain("life-concern-coupling");
    });
    expect(app.getState().panel.name).toBe("event-editing");
    expect(canvas().innerHTML).toBe(before);
  });

  it("deletes an event and returns to elicitation", async () => {
    const service = editorService();
    const afterDelete = makeRecord([evt("e2", "Physiotherapy")], 2);
    service.deleteEvent.mockResolvedValue(afterDelete);
    const app = createApp(host, service);
    await loadStory(app, service);

    service.fetchArtifact.mockResolvedValue(svgWith(["e2"]));
    clickBubble("e1");
    pane().querySelector<HTMLButtonElement>('[data-role="delete"]')!.click();

    await vi.waitFor(() => {
      expect(app.getState().record?.revision).toBe(2);
    });
    expect(service.deleteEvent).toHaveBeenCalledWith("s1", "e1");
    expect(canvas().querySelectorAll('g[id^="event-"]').length).toBe(1);
    expect(app.getState().panel.name).toBe("elicitation");
  });

  it("adds a new event with normalized dates through the add flow", async () => {
    const service = editorService();
    const app = createApp(host, service);
    await loadStory(app, service);

    pane().querySelector<HTMLButtonElement>('[data-role="add-event"]')!.click();
    expect(app.getState().panel).toEqual({
      name: "event-editing",
      selection: { kind: "new" },
    });
    expect(pane().querySelector('[data-role="delete"]')!.hasAttribute("hidden")).toBe(
      true,
    );

    pane().querySelector<HTMLInputElement>('input[name="title"]')!.value = "X-ray";
    pane().querySelector<HTMLSelectElement>('select[name="designation"]')!.value =
      "Test";
    const start = pane().querySelector(".time-editor")!;
    const kind = start.querySelector<HTMLSelectElement>('[data-role="kind"]')!;
    kind.value = "date";
    kind.dispatchEvent(new Event("change", { bubbles: true }));
    start.querySelector<HTMLInputElement>('[data-role="date"]')!.value =
      "2004-03-15";
    start.querySelector<HTMLSelectElement>('[data-role="precision"]')!.value =
      "month";
    pane()
      .querySelector("form")!
      .dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));

    await vi.waitFor(() => {
      expect(service.addEvent).toHaveBeenCalled();
    });
    const [storyId, payload] = service.addEvent.mock.calls[0]!;
    expect(storyId).toBe("s1");
    expect(payload.title).toBe("X-ray");
    expect(payload.designation).toBe("Test");
    expect(payload.start).toEqual({
      kind: "date",
      date: "2004-03-01",
      precision: "month",
      origin: "absolute",
    });
    expect(payload.id).toBeUndefined();
  });
});

describe("export", () => {
  it("is disabled without a story and hands over the exact artifact bytes", async () => {
    const artifact = svgWith(["e1"]);
    const service = makeService(makeRecord([evt("e1", "Broken arm")]), artifact);
    const app = createApp(host, service);
    const exportButton = host.querySelector<HTMLButtonElement>(
      '[data-role="export"]',
    )!;
    expect(exportButton.disabled).toBe(true);

    await loadStory(app, service);
    expect(exportButton.disabled).toBe(false);

    const blobs: Blob[] = [];
    const urlAny = URL as unknown as Record<string, unknown>;
    urlAny.createObjectURL = (blob: Blob) => {
      blobs.push(blob);
      return "blob:mock";
    };
    urlAny.revokeObjectURL = () => undefined;
    vi
      .spyOn(HTMLAnchorElement.prototype, "click")
      .mockImplementation(() => undefined);

    exportButton.click();
    expect(blobs).toHaveLength(1);
    // jsdom's Blob has no .text(); FileReader recovers the payload
    const text = await new Promise<string>((resolve, reject) => {
      const reader = new FileReader();
      reader.onload = () => resolve(reader.result as string);
      reader.onerror = () => reject(reader.error);
      reader.readAsText(blobs[0]!);
    });
    expect(text).toBe(artifact);
  });
});

describe("pane collapse", () => {
  it("toggles the information pane", () => {
    const service = makeService(makeRecord([]), svgWith([]));
    createApp(host, service);
    const toggle = host.querySelector<HTMLButtonElement>(
      '[data-role="toggle-pane"]',
    )!;
    const workspace = host.querySelector<HTMLElement>('[data-role="workspace"]')!;
    toggle.click();
    expect(workspace.classList.contains("pane-collapsed")).toBe(true);
    expect(toggle.textContent).toBe("Show panel");
    toggle.click();
    expect(workspace.classList.contains("pane-collapsed")).toBe(false);
  });
});
