// Typed client for the storyline service. Wire shapes mirror the
// service's canonical JSON schema exactly; no field renaming happens
// on this side.

export type Designation =
  | "Symptom"
  | "Medication"
  | "Treatment"
  | "Provider"
  | "Test"
  | "Procedure"
  | "Diagnosis"
  | "LifeEvent";

export const DESIGNATIONS: readonly Designation[] = [
  "Symptom",
  "Medication",
  "Treatment",
  "Provider",
  "Test",
  "Procedure",
  "Diagnosis",
  "LifeEvent",
];

export type DatePrecision = "day" | "month" | "year";

export type TimeValue =
  | { kind: "unspecified" }
  | { kind: "early" }
  | { kind: "current" }
  | {
      kind: "date";
      date: string;
      precision: DatePrecision;
      origin: "absolute" | "relativeAge";
      statedAge?: number;
    };

export interface EventObj {
  id: string;
  title: string;
  notes: string;
  designation: Designation;
  specificConcern: string;
  broadConcern: string | null;
  start: TimeValue;
  end: TimeValue;
  narrativeIndex: number;
}

export interface StoryObj {
  name: string;
  dateOfBirth: string | null;
  sourceNarrative: string | null;
  events: EventObj[];
}

export interface Violation {
  eventId: string | null;
  rule: string;
  message: string;
}

export interface StoryRecord {
  storyId: string;
  revision: number;
  createdAt: string;
  updatedAt: string;
  story: StoryObj;
  violations: Violation[];
}

export interface NewStoryInput {
  name: string;
  dateOfBirth: string | null;
  narrative: string;
}

export type NewEventInput = Omit<EventObj, "id" | "narrativeIndex"> &
  Partial<Pick<EventObj, "id" | "narrativeIndex">>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly violations: Violation[] = [],
  ) {
    super(message);
    this.name = "ApiError";
  }
}

interface ErrorDetail {
  message?: string;
  violations?: Violation[];
}

async function toApiError(response: Response): Promise<ApiError> {
  let detail: string | ErrorDetail = `request failed with ${response.status}`;
  try {
    const body = (await response.json()) as { detail?: string | ErrorDetail };
    if (body.detail !== undefined) detail = body.detail;
  } catch {
    // non-JSON error body; keep the generic message
  }
  if (typeof detail === "string") {
    return new ApiError(response.status, detail);
  }
  return new ApiError(
    response.status,
    detail.message ?? `request failed with ${response.status}`,
    detail.violations ?? [],
  );
}

export class StorylineApi {
  constructor(private readonly base: string = "") {}

  private async request<T>(
    path: string,
    init: RequestInit = {},
  ): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) throw await toApiError(response);
    return (await response.json()) as T;
  }

  private json(method: string, payload: unknown): RequestInit {
    return {
      method,
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    };
  }

  createStory(input: NewStoryInput): Promise<StoryRecord> {
    return this.request("/stories", this.json("POST", input));
  }

  getStory(storyId: string): Promise<StoryRecord> {
    return this.request(`/stories/${storyId}`);
  }

  patchEvent(
    storyId: string,
    eventId: string,
    patch: Partial<Omit<EventObj, "id">>,
    expectedRevision?: number,
  ): Promise<StoryRecord> {
    const init = this.json("PATCH", patch);
    if (expectedRevision !== undefined) {
      init.headers = {
        ...(init.headers as Record<string, string>),
        "If-Match": String(expectedRevision),
      };
    }
    return this.request(`/stories/${storyId}/events/${eventId}`, init);
  }

  addEvent(storyId: string, event: NewEventInput): Promise<StoryRecord> {
    return this.request(`/stories/${storyId}/events`, this.json("POST", event));
  }

  deleteEvent(storyId: string, eventId: string): Promise<StoryRecord> {
    return this.request(`/stories/${storyId}/events/${eventId}`, {
      method: "DELETE",
    });
  }

  /** Raw SVG text, kept verbatim so exports are byte-identical. */
  async fetchArtifact(storyId: string): Promise<string> {
    const response = await fetch(`${this.base}/stories/${storyId}/artifact.svg`);
    if (!response.ok) throw await toApiError(response);
    return response.text();
  }
}
