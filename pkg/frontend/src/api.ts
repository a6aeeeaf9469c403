import type {
  FinalizeResponse,
  GuidanceResponse,
  InspectionEntry,
  Mark,
  MaskResponse,
  ReliabilityResponse,
  RoundSummary,
  RScoreResponse,
  SessionInfo,
} from "./types.js";

/** The server rejected a second writer: a round is already running. */
export class RoundInProgressError extends Error {
  constructor() {
    super("round in progress");
    this.name = "RoundInProgressError";
  }
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Typed client for the session service. Every number the UI displays comes
 * from these responses; nothing is recomputed locally.
 */
export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (response.status === 409) {
      const body = await response.json().catch(() => ({ detail: "" }));
      if (String(body.detail).includes("round in progress")) {
        throw new RoundInProgressError();
      }
      throw new ApiError(409, String(body.detail));
    }
    if (!response.ok) {
      const body = await response.json().catch(() => ({ detail: response.statusText }));
      throw new ApiError(response.status, String(body.detail));
    }
    return (await response.json()) as T;
  }

  createSession(body: object): Promise<SessionInfo> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getSession(sessionId: string): Promise<SessionInfo> {
    return this.request(`/sessions/${sessionId}`);
  }

  frameUrl(sessionId: string, frameIndex: number): string {
    return `${this.baseUrl}/sessions/${sessionId}/frames/${frameIndex}`;
  }

  submitAnnotations(
    sessionId: string,
    frameIndex: number,
    marks: Mark[],
  ): Promise<RoundSummary> {
    return this.request(`/sessions/${sessionId}/annotations`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ frame_index: frameIndex, marks }),
    });
  }

  getMasks(sessionId: string, frameIndex: number): Promise<MaskResponse> {
    return this.request(`/sessions/${sessionId}/masks/${frameIndex}`);
  }

  getGuidance(sessionId: string, mode: "rs1" | "rs4"): Promise<GuidanceResponse> {
    return this.request(`/sessions/${sessionId}/guidance?mode=${mode}`);
  }

  getRScores(sessionId: string): Promise<RScoreResponse> {
    return this.request(`/sessions/${sessionId}/r-scores`);
  }

  getReliability(sessionId: string, frameIndex: number): Promise<ReliabilityResponse> {
    return this.request(`/sessions/${sessionId}/reliability/${frameIndex}`);
  }

  finalize(sessionId: string, inspectionLog: InspectionEntry[]): Promise<FinalizeResponse> {
    return this.request(`/sessions/${sessionId}/finalize`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ inspection_log: inspectionLog }),
    });
  }

  async downloadSnapshot(sessionId: string): Promise<Uint8Array> {
    const response = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/snapshot`);
    if (!response.ok) {
      throw new ApiError(response.status, "snapshot not available");
    }
    return new Uint8Array(await response.arrayBuffer());
  }
}
