/** Annotation sidecar accumulation and schema conformance. */

import { describe, expect, it } from "vitest";

import { AnnotationRecorder } from "../src/sidecar.js";
import type { FaceObservation } from "../src/types.js";

const FACE: FaceObservation = {
  box: { x: 100, y: 80, w: 200, h: 220 },
  landmarks: {
    left_eye: [
      [140, 140],
      [170, 138],
      [172, 152],
      [142, 154],
    ],
  },
};

describe("AnnotationRecorder", () => {
  it("builds the sidecar schema the server expects", () => {
    const recorder = new AnnotationRecorder(640, 480);
    recorder.add(0, 0.0, FACE);
    recorder.add(1, 1 / 30, { box: { x: 101, y: 80, w: 200, h: 220 } });
    const payload = recorder.toPayload();
    expect(payload.frame_width).toBe(640);
    expect(payload.frame_height).toBe(480);
    expect(payload.frames).toHaveLength(2);
    expect(payload.frames[0]).toEqual({
      frame_index: 0,
      timestamp_s: 0.0,
      box: [100, 80, 200, 220],
      landmarks: FACE.landmarks,
    });
    expect(payload.frames[1].landmarks).toBeUndefined();
  });

  it("skips frames without a face instead of inventing boxes", () => {
    const recorder = new AnnotationRecorder(640, 480);
    recorder.add(0, 0.0, FACE);
    recorder.add(1, 1 / 30, null);
    recorder.add(2, 2 / 30, FACE);
    expect(recorder.count).toBe(2);
    expect(recorder.toPayload().frames.map((f) => f.frame_index)).toEqual([0, 2]);
  });

  it("serializes to valid JSON", () => {
    const recorder = new AnnotationRecorder(640, 480);
    recorder.add(0, 0.0, FACE);
    const parsed = JSON.parse(recorder.toJson());
    expect(parsed.frames[0].box).toEqual([100, 80, 200, 220]);
  });

  it("reset clears accumulated frames", () => {
    const recorder = new AnnotationRecorder(640, 480);
    recorder.add(0, 0.0, FACE);
    recorder.reset();
    expect(recorder.count).toBe(0);
    expect(recorder.toPayload().frames).toEqual([]);
  });

  it("toPayload snapshots are isolated from later adds", () => {
    const recorder = new AnnotationRecorder(640, 480);
    recorder.add(0, 0.0, FACE);
    const snapshot = recorder.toPayload();
    recorder.add(1, 1 / 30, FACE);
    expect(snapshot.frames).toHaveLength(1);
  });
});
