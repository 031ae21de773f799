/** Accumulates per-frame annotations into the upload sidecar JSON. */

import { boxAsTuple } from "./geometry.js";
import type { FaceObservation, SidecarFrame, SidecarPayload } from "./types.js";

export class AnnotationRecorder {
  private frames: SidecarFrame[] = [];

  constructor(
    private readonly frameWidth: number,
    private readonly frameHeight: number,
  ) {}

  /** Record one annotated frame; frames without a face are simply skipped. */
  add(frameIndex: number, timestampS: number, face: FaceObservation | null): void {
    if (face === null) {
      return;
    }
    const entry: SidecarFrame = {
      frame_index: frameIndex,
      timestamp_s: timestampS,
      box: boxAsTuple(face.box),
    };
    if (face.landmarks && Object.keys(face.landmarks).length > 0) {
      entry.landmarks = face.landmarks;
    }
    this.frames.push(entry);
  }

  get count(): number {
    return this.frames.length;
  }

  reset(): void {
    this.frames = [];
  }

  toPayload(): SidecarPayload {
    return {
      frames: [...this.frames],
      frame_width: this.frameWidth,
      frame_height: this.frameHeight,
    };
  }

  toJson(): string {
    return JSON.stringify(this.toPayload());
  }
}
