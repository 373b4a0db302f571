import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, StorylineApi } from "../src/api";
import type { StoryRecord } from "../src/api";

const RECORD: StoryRecord = {
  storyId: "abc123",
  revision: 1,
  createdAt: "2025-06-01T00:00:00+00:00",
  updatedAt: "2025-06-01T00:00:00+00:00",
  story: { name: "Alex", dateOfBirth: null, sourceNarrative: "", events: [] },
  violations: [],
};

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

// a Response body is single-use, so each call gets a fresh one
function stubFetch(makeResponse: () => Response) {
  const mock = vi.fn().mockImplementation(() => Promise.resolve(makeResponse()));
  vi.stubGlobal("fetch", mock);
  return mock;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("request shapes", () => {
  it("creates a story with the profile and narrative in the body", async () => {
    const mock = stubFetch(() => jsonResponse(201, RECORD));
    const api = new StorylineApi("http://svc");
    const record = await api.createStory({
      name: "Alex",
      dateOfBirth: "1990-06-15",
      narrative: "I broke my arm in 2001.",
    });
    expect(record).toEqual(RECORD);
    const [url, init] = mock.mock.calls[0]!;
    expect(url).toBe("http://svc/stories");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body as string)).toEqual({
      name: "Alex",
      dateOfBirth: "1990-06-15",
      narrative: "I broke my arm in 2001.",
    });
  });

  it("sends PATCH with an If-Match header when a revision is given", async () => {
    const mock = stubFetch(() => jsonResponse(200, RECORD));
    const api = new StorylineApi();
    await api.patchEvent("abc123", "e1", { title: "New" }, 4);
    const [url, init] = mock.mock.calls[0]!;
    expect(url).toBe("/stories/abc123/events/e1");
    expect(init.method).toBe("PATCH");
    expect((init.headers as Record<string, string>)["If-Match"]).toBe("4");
    expect(JSON.parse(init.body as string)).toEqual({ title: "New" });
  });

  it("omits If-Match when no revision is given", async () => {
    const mock = stubFetch(() => jsonResponse(200, RECORD));
    await new StorylineApi().patchEvent("abc123", "e1", { notes: "x" });
    const [, init] = mock.mock.calls[0]!;
    expect(
      (init.headers as Record<string, string>)["If-Match"],
    ).toBeUndefined();
  });

  it("adds and deletes events at the events collection", async () => {
    const mock = stubFetch(() => jsonResponse(200, RECORD));
    const api = new StorylineApi();
    await api.addEvent("abc123", {
      title: "X-ray",
      notes: "",
      designation: "Test",
      specificConcern: "Other",
      broadConcern: null,
      start: { kind: "unspecified" },
      end: { kind: "unspecified" },
    });
    await api.deleteEvent("abc123", "e1");
    expect(mock.mock.calls[0]![0]).toBe("/stories/abc123/events");
    expect(mock.mock.calls[0]![1].method).toBe("POST");
    expect(mock.mock.calls[1]![0]).toBe("/stories/abc123/events/e1");
    expect(mock.mock.calls[1]![1].method).toBe("DELETE");
  });

  it("returns artifact text verbatim", async () => {
    const svg = '<svg xmlns="http://www.w3.org/2000/svg"></svg>\n';
    stubFetch(() => new Response(svg, { status: 200 }));
    const text = await new StorylineApi().fetchArtifact("abc123");
    expect(text).toBe(svg);
  });
});

describe("error mapping", () => {
  it("maps a string detail to an ApiError message", async () => {
    stubFetch(() => jsonResponse(404, { detail: "no such story" }));
    const call = new StorylineApi().getStory("missing");
    await expect(call).rejects.toMatchObject({
      name: "ApiError",
      status: 404,
      message: "no such story",
      violations: [],
    });
  });

  it("carries field-level violations from a structured detail", async () => {
    stubFetch(() =>
      jsonResponse(422, {
        detail: {
          message: "event would violate story rules",
          violations: [
            {
              eventId: "e1",
              rule: "life-concern-coupling",
              message: "life events must use the life concern",
            },
          ],
        },
      }),
    );
    try {
      await new StorylineApi().patchEvent("abc123", "e1", {
        designation: "LifeEvent",
      });
      expect.unreachable("patch should have failed");
    } catch (problem) {
      expect(problem).toBeInstanceOf(ApiError);
      const apiProblem = problem as ApiError;
      expect(apiProblem.status).toBe(422);
      expect(apiProblem.violations).toHaveLength(1);
      expect(apiProblem.violations[0]!.rule).toBe("life-concern-coupling");
    }
  });

  it("falls back to a generic message on a non-JSON error body", async () => {
    stubFetch(() => new Response("boom", { status: 500 }));
    await expect(new StorylineApi().getStory("x")).rejects.toMatchObject({
      status: 500,
      message: "request failed with 500",
    });
  });
});
