/**
 * Capture-time guidance state machine.
 *
 * Pure transition function over per-frame face observations, so the rules
 * are unit-testable without a camera:
 *
 * - box center jumps more than 15 px between frames → recording stops and
 *   the steadiness prompt shows (restart is manual);
 * - face box under 5% of the frame → move-closer prompt;
 * - no face for more than half a second → reposition prompt;
 * - otherwise, while recording, a hold-still countdown message.
 */

import { areaRatio, displacementPx } from "./geometry.js";
import type { Box, FaceObservation } from "./types.js";

export const MAX_DISPLACEMENT_PX = 15;
export const MIN_AREA_RATIO = 0.05;
export const NO_FACE_GRACE_S = 0.5;

export enum GuidanceCode {
  Idle = "idle",
  Recording = "recording",
  HoldStill = "hold_still",
  MoveCloser = "move_closer",
  Reposition = "reposition",
  Done = "done",
}

export const GUIDANCE_TEXT: Record<GuidanceCode, string> = {
  [GuidanceCode.Idle]: "Press start to begin a recording.",
  [GuidanceCode.Recording]: "Recording — hold still and breathe normally.",
  [GuidanceCode.HoldStill]:
    "Too much movement — the recording stopped. Hold still and start again.",
  [GuidanceCode.MoveCloser]: "Move closer so your face fills more of the frame.",
  [GuidanceCode.Reposition]: "Center your face in the frame.",
  [GuidanceCode.Done]: "Recording complete — review and submit.",
};

/** Server rejection codes map onto the same prompts for re-record advice. */
export const SERVER_CODE_TO_GUIDANCE: Record<string, GuidanceCode> = {
  too_much_motion: GuidanceCode.HoldStill,
  too_far: GuidanceCode.MoveCloser,
  too_dark: GuidanceCode.Reposition,
  no_face: GuidanceCode.Reposition,
};

export interface CaptureState {
  recording: boolean;
  elapsedS: number;
  faceBox: Box | null;
  displacementPx: number;
  faceAreaRatio: number | null;
  maskEnabled: boolean;
  guidance: GuidanceCode;
  /** Seconds since a face was last seen; drives the reposition prompt. */
  sinceFaceS: number;
}

export function initialState(maskEnabled = true): CaptureState {
  return {
    recording: false,
    elapsedS: 0,
    faceBox: null,
    displacementPx: 0,
    faceAreaRatio: null,
    maskEnabled,
    guidance: GuidanceCode.Idle,
    sinceFaceS: 0,
  };
}

export function startRecording(state: CaptureState): CaptureState {
  return {
    ...state,
    recording: true,
    elapsedS: 0,
    displacementPx: 0,
    sinceFaceS: 0,
    guidance: GuidanceCode.Recording,
  };
}

export function stopRecording(state: CaptureState, guidance: GuidanceCode): CaptureState {
  return { ...state, recording: false, guidance };
}

export function setMask(state: CaptureState, maskEnabled: boolean): CaptureState {
  return { ...state, maskEnabled };
}

/**
 * Fold one camera frame into the state. `dtS` is the time since the
 * previous frame; `face` is null when detection found no face.
 */
export function onFrame(
  state: CaptureState,
  face: FaceObservation | null,
  dtS: number,
  frameWidth: number,
  frameHeight: number,
): CaptureState {
  const elapsedS = state.recording ? state.elapsedS + dtS : state.elapsedS;

  if (face === null) {
    const sinceFaceS = state.sinceFaceS + dtS;
    const lost = sinceFaceS > NO_FACE_GRACE_S;
    return {
      ...state,
      elapsedS,
      faceBox: null,
      displacementPx: 0,
      faceAreaRatio: null,
      sinceFaceS,
      guidance: lost
        ? GuidanceCode.Reposition
        : state.recording
          ? GuidanceCode.Recording
          : state.guidance,
    };
  }

  const displacement = state.faceBox ? displacementPx(state.faceBox, face.box) : 0;
  const ratio = areaRatio(face.box, frameWidth, frameHeight);
  const next: CaptureState = {
    ...state,
    elapsedS,
    faceBox: face.box,
    displacementPx: displacement,
    faceAreaRatio: ratio,
    sinceFaceS: 0,
  };

  if (state.recording && displacement > MAX_DISPLACEMENT_PX) {
    // the jump invalidates the take: stop and ask for steadiness
    return { ...next, recording: false, guidance: GuidanceCode.HoldStill };
  }
  if (ratio < MIN_AREA_RATIO) {
    return { ...next, guidance: GuidanceCode.MoveCloser };
  }
  if (state.recording) {
    return { ...next, guidance: GuidanceCode.Recording };
  }
  return next;
}

/** Invariant from the capture contract: any gate breach must show guidance. */
export function guidanceRequired(state: CaptureState): boolean {
  return (
    state.displacementPx > MAX_DISPLACEMENT_PX ||
    (state.faceAreaRatio !== null && state.faceAreaRatio < MIN_AREA_RATIO)
  );
}
