/** Shared shapes: geometry, annotations, and the service JSON contract. */

/** Face bounding box in pixel units, (x, y) is the top-left corner. */
export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

/** A 2-D point in frame pixel coordinates. */
export type Point = [number, number];

/** Named landmark polygons, e.g. left_eye / right_eye / mouth / nose. */
export type LandmarkSet = Record<string, Point[]>;

/** One detected frame: box plus optional landmark polygons. */
export interface FaceObservation {
  box: Box;
  landmarks?: LandmarkSet;
}

/** Entry of the annotation sidecar, matching the server schema. */
export interface SidecarFrame {
  frame_index: number;
  timestamp_s: number;
  box: [number, number, number, number];
  landmarks?: Record<string, Point[]>;
}

export interface SidecarPayload {
  frames: SidecarFrame[];
  frame_width?: number;
  frame_height?: number;
}

/** A single vital estimate as returned by the service. */
export interface EstimateJson {
  value: number | null;
  valid: boolean;
  note?: string | null;
}

export interface VitalsReportJson {
  hr_bpm: EstimateJson;
  hrv_rmssd_ms: EstimateJson;
  spo2_percent: EstimateJson;
  rr_brpm: EstimateJson;
  stress: { level: string | null; valid: boolean };
  bp: { sbp_mmhg: number | null; dbp_mmhg: number | null; valid: boolean };
}

export interface QualityJson {
  verdict: string;
  message_code: string;
  max_displacement_px: number | null;
  face_area_ratio: number | null;
  median_brightness: number | null;
}

export interface ProcessResponse {
  report: VitalsReportJson;
  quality: QualityJson;
  bp_time_s: number;
  process_token: string;
  session_id: number | null;
  client_timings: {
    capture_start_ts: number | null;
    capture_end_ts: number | null;
  } | null;
}

/** Form sections for POST /api/v1/sessions; all fields optional. */
export interface GroundTruthForm {
  hr_bpm?: number;
  hrv_rmssd_ms?: number;
  spo2_percent?: number;
  rr_brpm?: number;
  sbp_mmhg?: number;
  dbp_mmhg?: number;
  stress_level?: string;
}

export interface EnvironmentForm {
  brightness?: string;
  light_type?: string;
  activity?: string;
}

export interface ProfileForm {
  name?: string;
  age?: number;
  sex?: string;
  skin_tone?: string;
  ethnicity?: string;
}

export interface SessionPayload {
  process_token: string;
  ground_truth?: Record<string, number | string>;
  environment?: Record<string, string>;
  profile?: Record<string, number | string>;
}

/**
 * Minimal RGBA pixel buffer; structurally compatible with DOM ImageData so
 * the masking code runs unchanged on canvas frames and on plain test buffers.
 */
export interface RgbaFrame {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8ClampedArray;
}
