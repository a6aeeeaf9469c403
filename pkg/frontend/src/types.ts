// Wire types for the session service (v1). Field names mirror the JSON.

export interface SessionInfo {
  session_id: string;
  num_frames: number;
  num_objects: number;
  frame_height: number;
  frame_width: number;
  round: number;
  annotated_frames: number[];
  restored: boolean;
}

export interface Mark {
  row: number;
  col: number;
  object_id: number;
}

export interface RoundSummary {
  round: number;
  annotated_frame: number;
  num_marks: number;
  forward: [number, number] | null;
  backward: [number, number] | null;
  mean_r: number;
  r_scores: number[];
}

export interface RleMask {
  height: number;
  width: number;
  runs: [number, number][];
}

export interface MaskResponse {
  frame_index: number;
  mask: RleMask;
  grid_h: number;
  grid_w: number;
  prob_grids: number[][][];
}

export interface GuidanceCandidate {
  frame_index: number;
  r_score: number;
  thumbnail_url: string;
}

export interface GuidanceResponse {
  mode: string;
  candidates: GuidanceCandidate[];
}

export interface RScoreResponse {
  round: number;
  r_scores: number[];
}

export interface ReliabilityResponse {
  frame_index: number;
  grid_h: number;
  grid_w: number;
  values: number[][];
}

export interface FinalizeResponse {
  snapshot_id: string;
}

export interface InspectionEntry {
  round: number;
  inspect_ms: number;
}
