/**
 * Camera capture: masked preview, masked recording, and annotation feed.
 *
 * The capture loop draws each camera frame to a canvas, runs landmark
 * detection, applies the privacy mask on the canvas pixels, and records
 * the canvas stream — so the masked preview the user sees is byte-for-byte
 * what the MediaRecorder uploads, and no unmasked pixel leaves the device.
 */

import { applyMask } from "./masking.js";
import { AnnotationRecorder } from "./sidecar.js";
import type { FaceObservation, LandmarkSet, Point } from "./types.js";

export const DEFAULT_DURATION_S = 30;
export const TARGET_FPS = 30;

/** Anything that can find a face and its landmark polygons in a frame. */
export interface LandmarkProvider {
  detect(video: HTMLVideoElement): Promise<FaceObservation | null>;
}

export async function requestCamera(): Promise<MediaStream> {
  try {
    return await navigator.mediaDevices.getUserMedia({
      video: {
        width: { ideal: 640 },
        height: { ideal: 480 },
        frameRate: { ideal: TARGET_FPS },
      },
      audio: false,
    });
  } catch (error) {
    throw new Error(
      "Camera access was denied. Allow camera use for this page in the " +
        `browser's site settings and reload. (${String(error)})`,
    );
  }
}

function pickMimeType(): string {
  const candidates = ["video/mp4", "video/webm;codecs=vp9", "video/webm"];
  for (const candidate of candidates) {
    if (MediaRecorder.isTypeSupported(candidate)) {
      return candidate;
    }
  }
  return "";
}

export interface CaptureResult {
  video: Blob;
  sidecar: AnnotationRecorder;
  captureStartTs: number;
  captureEndTs: number;
}

export interface CaptureHooks {
  /** Called once per frame after masking, before the next frame is read. */
  onFrame(face: FaceObservation | null, dtS: number): void;
  /** Returns false to end the capture loop early (quality stop). */
  shouldContinue(): boolean;
  maskEnabled(): boolean;
}

/**
 * Run the capture loop until `durationS` elapses or the hooks stop it.
 * The canvas is both the user-visible preview and the recording source.
 */
export async function runCapture(
  video: HTMLVideoElement,
  canvas: HTMLCanvasElement,
  provider: LandmarkProvider,
  hooks: CaptureHooks,
  durationS: number = DEFAULT_DURATION_S,
): Promise<CaptureResult> {
  const context = canvas.getContext("2d", { willReadFrequently: true });
  if (!context) {
    throw new Error("canvas 2d context unavailable");
  }
  canvas.width = video.videoWidth;
  canvas.height = video.videoHeight;

  const sidecar = new AnnotationRecorder(canvas.width, canvas.height);
  const recorded: Blob[] = [];
  const mimeType = pickMimeType();
  const recorder = new MediaRecorder(canvas.captureStream(TARGET_FPS), {
    ...(mimeType ? { mimeType } : {}),
  });
  recorder.ondataavailable = (event) => {
    if (event.data.size > 0) {
      recorded.push(event.data);
    }
  };
  const stopped = new Promise<void>((resolve) => {
    recorder.onstop = () => resolve();
  });

  const captureStartTs = Date.now() / 1000;
  const startedMs = performance.now();
  recorder.start();
  let frameIndex = 0;
  let lastMs = startedMs;
  try {
    while (hooks.shouldContinue()) {
      const nowMs = performance.now();
      const elapsedS = (nowMs - startedMs) / 1000;
      if (elapsedS >= durationS) {
        break;
      }
      context.drawImage(video, 0, 0, canvas.width, canvas.height);
      const face = await provider.detect(video);
      if (face?.landmarks && hooks.maskEnabled()) {
        const pixels = context.getImageData(0, 0, canvas.width, canvas.height);
        applyMask(pixels, face.landmarks);
        context.putImageData(pixels, 0, 0);
      }
      sidecar.add(frameIndex, elapsedS, face);
      hooks.onFrame(face, (nowMs - lastMs) / 1000);
      lastMs = nowMs;
      frameIndex += 1;
      await nextFrame(video);
    }
  } finally {
    recorder.stop();
  }
  await stopped;
  return {
    video: new Blob(recorded, { type: mimeType || "video/webm" }),
    sidecar,
    captureStartTs,
    captureEndTs: Date.now() / 1000,
  };
}

function nextFrame(video: HTMLVideoElement): Promise<void> {
  return new Promise((resolve) => {
    if ("requestVideoFrameCallback" in video) {
      video.requestVideoFrameCallback(() => resolve());
    } else {
      setTimeout(resolve, 1000 / TARGET_FPS);
    }
  });
}

// --- MediaPipe FaceMesh adapter ------------------------------------------

/** Canonical FaceMesh point indices for each named landmark region. */
const REGION_INDICES: Record<string, number[]> = {
  left_eye: [33, 160, 158, 133, 153, 144],
  right_eye: [362, 385, 387, 263, 373, 380],
  mouth: [61, 40, 37, 0, 267, 270, 291, 321, 314, 17, 84, 91],
  nose: [168, 6, 197, 195, 5, 4],
  left_eyebrow: [70, 63, 105, 66, 107],
  right_eyebrow: [336, 296, 334, 293, 300],
  face_edge: [
    10, 338, 297, 332, 284, 251, 389, 356, 454, 323, 361, 288, 397, 365, 379,
    378, 400, 377, 152, 148, 176, 149, 150, 136, 172, 58, 132, 93, 234, 127,
    162, 21, 54, 103, 67, 109,
  ],
};

/** Pixels of padding around the opaque eye/mouth strips. */
const STRIP_PADDING: Record<string, number> = {
  left_eye: 4,
  right_eye: 4,
  mouth: 2,
};

interface MeshPoint {
  x: number;
  y: number;
}

function inflate(points: Point[], margin: number): Point[] {
  const cx = points.reduce((sum, p) => sum + p[0], 0) / points.length;
  const cy = points.reduce((sum, p) => sum + p[1], 0) / points.length;
  return points.map(([x, y]) => {
    const len = Math.hypot(x - cx, y - cy) || 1;
    return [x + ((x - cx) / len) * margin, y + ((y - cy) / len) * margin];
  });
}

/** Map one FaceMesh result (normalized points) to a FaceObservation. */
export function meshToObservation(
  meshPoints: MeshPoint[],
  frameWidth: number,
  frameHeight: number,
): FaceObservation {
  const landmarks: LandmarkSet = {};
  for (const [region, indices] of Object.entries(REGION_INDICES)) {
    const polygon: Point[] = indices.map((i) => [
      meshPoints[i].x * frameWidth,
      meshPoints[i].y * frameHeight,
    ]);
    const padding = STRIP_PADDING[region];
    landmarks[region] = padding ? inflate(polygon, padding) : polygon;
  }
  const oval = landmarks.face_edge;
  const xs = oval.map((p) => p[0]);
  const ys = oval.map((p) => p[1]);
  const x = Math.min(...xs);
  const y = Math.min(...ys);
  return {
    box: { x, y, w: Math.max(...xs) - x, h: Math.max(...ys) - y },
    landmarks,
  };
}

/**
 * FaceMesh-backed provider, loaded lazily from the CDN; the sidecar schema
 * stays the only contract with the back end, so any other landmark model
 * can be dropped in via the LandmarkProvider interface.
 */
export class FaceMeshProvider implements LandmarkProvider {
  private mesh: {
    send(input: { image: HTMLVideoElement }): Promise<void>;
  } | null = null;
  private lastResult: FaceObservation | null = null;

  async load(): Promise<void> {
    const w = window as unknown as {
      FaceMesh?: new (config: { locateFile(file: string): string }) => {
        setOptions(options: Record<string, unknown>): void;
        onResults(cb: (res: unknown) => void): void;
        send(input: { image: HTMLVideoElement }): Promise<void>;
      };
    };
    if (!w.FaceMesh) {
      await new Promise<void>((resolve, reject) => {
        const script = document.createElement("script");
        script.src =
          "https://cdn.jsdelivr.net/npm/@mediapipe/face_mesh/face_mesh.js";
        script.async = true;
        script.onload = () => resolve();
        script.onerror = () =>
          reject(new Error("failed to load the FaceMesh model"));
        document.head.appendChild(script);
      });
    }
    const mesh = new w.FaceMesh!({
      locateFile: (file) =>
        `https://cdn.jsdelivr.net/npm/@mediapipe/face_mesh/${file}`,
    });
    mesh.setOptions({
      maxNumFaces: 1,
      refineLandmarks: false,
      minDetectionConfidence: 0.5,
      minTrackingConfidence: 0.5,
    });
    mesh.onResults((res) => {
      const result = res as {
        multiFaceLandmarks?: MeshPoint[][];
        image?: { width: number; height: number };
      };
      const points = result.multiFaceLandmarks?.[0];
      this.lastResult =
        points && result.image
          ? meshToObservation(points, result.image.width, result.image.height)
          : null;
    });
    this.mesh = mesh;
  }

  async detect(video: HTMLVideoElement): Promise<FaceObservation | null> {
    if (!this.mesh) {
      await this.load();
    }
    await this.mesh!.send({ image: video });
    return this.lastResult;
  }
}
