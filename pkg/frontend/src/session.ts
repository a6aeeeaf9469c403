import { ApiClient, RoundInProgressError } from "./api.js";
import { erasePoints, rasterizeStrokes, type Stroke, type StrokePoint } from "./strokes.js";
import type {
  GuidanceCandidate,
  GuidanceResponse,
  InspectionEntry,
  RoundSummary,
  SessionInfo,
} from "./types.js";

export type BrushMode =
  | { kind: "object"; objectId: number }
  | { kind: "background" }
  | { kind: "eraser" };

export type GuidanceMode = "rs1" | "rs4";

export interface UiSessionOptions {
  now?: () => number; // injectable clock for the inspection log
  onNotice?: (message: string) => void;
}

/**
 * Client-side session state machine. It never computes segmentation or
 * scores itself: every displayed number comes back from the service.
 */
export class UiSession {
  cursor = 0;
  brush: BrushMode;
  pendingStrokes: Stroke[] = [];
  guidance: GuidanceResponse | null = null;
  /** RS1 auto-jump proposal awaiting user confirmation. */
  proposedJump: number | null = null;
  heatOverlayEnabled = false; // reliability heat is opt-in
  lastSummary: RoundSummary | null = null;
  finalized: string | null = null; // snapshot id once satisfied
  allAnnotated = false;
  readonly inspectionLog: InspectionEntry[] = [];

  private submitting = false;
  private queued: { frameIndex: number; strokes: Stroke[] } | null = null;
  private roundShownAt: number;
  private readonly now: () => number;
  private readonly onNotice: (message: string) => void;

  constructor(
    private api: ApiClient,
    public info: SessionInfo,
    options: UiSessionOptions = {},
  ) {
    this.brush = { kind: "object", objectId: 1 };
    this.now = options.now ?? (() => Date.now());
    this.onNotice = options.onNotice ?? (() => undefined);
    this.roundShownAt = this.now();
  }

  get sessionId(): string {
    return this.info.session_id;
  }

  get roundInProgress(): boolean {
    return this.submitting;
  }

  get hasQueuedSubmission(): boolean {
    return this.queued !== null;
  }

  // -- cursor and brush -------------------------------------------------------

  setCursor(frameIndex: number): void {
    this.cursor = Math.min(Math.max(frameIndex, 0), this.info.num_frames - 1);
  }

  setBrush(brush: BrushMode): void {
    this.brush = brush;
  }

  get activeObjectId(): number {
    if (this.brush.kind === "object") return this.brush.objectId;
    return 0;
  }

  // -- drawing ------------------------------------------------------------------

  addStroke(points: StrokePoint[]): void {
    if (points.length === 0) return;
    if (this.brush.kind === "eraser") {
      this.pendingStrokes = erasePoints(this.pendingStrokes, points, 4);
      return;
    }
    this.pendingStrokes.push({ points: [...points], objectId: this.activeObjectId });
  }

  clearPending(): void {
    this.pendingStrokes = [];
  }

  // -- submission ----------------------------------------------------------------

  /**
   * Rasterize pending strokes and run a round. Zero strokes are blocked
   * locally; a round already running server-side queues the submission.
   */
  async submit(): Promise<RoundSummary | null> {
    if (this.finalized) {
      this.onNotice("session already finalized");
      return null;
    }
    if (this.pendingStrokes.length === 0) {
      this.onNotice("draw at least one stroke before submitting");
      return null;
    }
    if (this.submitting) {
      this.onNotice("a round is already running");
      return null;
    }
    const frameIndex = this.cursor;
    const strokes = this.pendingStrokes;
    const inspectMs = this.now() - this.roundShownAt;
    const marks = rasterizeStrokes(
      strokes,
      this.info.frame_width,
      this.info.frame_height,
    );
    this.submitting = true;
    try {
      const summary = await this.api.submitAnnotations(this.sessionId, frameIndex, marks);
      this.pendingStrokes = [];
      this.lastSummary = summary;
      this.inspectionLog.push({ round: summary.round, inspect_ms: inspectMs });
      this.info = { ...this.info, round: summary.round };
      if (!this.info.annotated_frames.includes(frameIndex)) {
        this.info.annotated_frames = [...this.info.annotated_frames, frameIndex];
      }
      this.roundShownAt = this.now();
      return summary;
    } catch (error) {
      if (error instanceof RoundInProgressError) {
        this.queued = { frameIndex, strokes };
        this.onNotice("server busy: submission queued, retry when the round completes");
        return null;
      }
      throw error;
    } finally {
      this.submitting = false;
    }
  }

  /** Re-send a submission that was queued on a busy server. */
  async retryQueued(): Promise<RoundSummary | null> {
    if (!this.queued) return null;
    const { frameIndex, strokes } = this.queued;
    this.queued = null;
    this.setCursor(frameIndex);
    this.pendingStrokes = strokes;
    return this.submit();
  }

  // -- guidance --------------------------------------------------------------------

  /**
   * Refresh the guidance panel. RS1 proposes a jump (confirm to move); RS4
   * fills the candidate strip exactly as served, lowest score first.
   */
  async refreshGuidance(mode: GuidanceMode): Promise<GuidanceResponse> {
    const guidance = await this.api.getGuidance(this.sessionId, mode);
    this.guidance = guidance;
    this.allAnnotated = guidance.candidates.length === 0;
    if (this.allAnnotated) {
      this.onNotice("every frame is annotated: finish with 'satisfied'");
      this.proposedJump = null;
    } else if (mode === "rs1") {
      this.proposedJump = guidance.candidates[0].frame_index;
    } else {
      this.proposedJump = null;
    }
    return guidance;
  }

  confirmJump(): void {
    if (this.proposedJump !== null) {
      this.setCursor(this.proposedJump);
      this.proposedJump = null;
    }
  }

  jumpToCandidate(candidate: GuidanceCandidate): void {
    this.setCursor(candidate.frame_index);
  }

  // -- completion --------------------------------------------------------------------

  /** The user is satisfied: finalize and return the stored snapshot bytes. */
  async satisfied(): Promise<Uint8Array> {
    const response = await this.api.finalize(this.sessionId, this.inspectionLog);
    this.finalized = response.snapshot_id;
    return this.api.downloadSnapshot(this.sessionId);
  }
}
