/** API client contract tests against a mocked fetch. */

import { describe, expect, it } from "vitest";

import { ApiError, QualityRejectionError, VitalsApi } from "../src/api.js";
import type { ProcessResponse } from "../src/types.js";

const REPORT: ProcessResponse = {
  report: {
    hr_bpm: { value: 72.0, valid: true },
    hrv_rmssd_ms: { value: 18.4, valid: true },
    spo2_percent: { value: 98.0, valid: true },
    rr_brpm: { value: 15.0, valid: true },
    stress: { level: "normal", valid: true },
    bp: { sbp_mmhg: 120.2, dbp_mmhg: 75.8, valid: true },
  },
  quality: {
    verdict: "ok",
    message_code: "ok",
    max_displacement_px: 0.4,
    face_area_ratio: 0.25,
    median_brightness: 120.0,
  },
  bp_time_s: 0.41,
  process_token: "abc123",
  session_id: null,
  client_timings: null,
};

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function captureFetch(responses: Response[]) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const impl = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return responses.shift() ?? jsonResponse(500, {});
  };
  return { calls, impl };
}

const UPLOAD = {
  video: new Blob([new Uint8Array([0, 1, 2, 3])], { type: "video/webm" }),
  sidecar: {
    frames: [
      {
        frame_index: 0,
        timestamp_s: 0,
        box: [10, 10, 100, 100] as [number, number, number, number],
      },
    ],
    frame_width: 640,
    frame_height: 480,
  },
};

describe("process", () => {
  it("posts multipart and returns the parsed report", async () => {
    const { calls, impl } = captureFetch([jsonResponse(200, REPORT)]);
    const api = new VitalsApi("http://svc", impl);
    const result = await api.process(UPLOAD);
    expect(result.report.hr_bpm.value).toBe(72.0);
    expect(result.process_token).toBe("abc123");
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://svc/api/v1/process");
    const body = calls[0].init?.body as FormData;
    expect(body.get("video")).toBeInstanceOf(Blob);
    const sidecar = body.get("annotations") as Blob;
    const parsed = JSON.parse(await sidecar.text());
    expect(parsed.frames).toHaveLength(1);
    expect(parsed.frame_width).toBe(640);
  });

  it("sends channel and client timings when provided", async () => {
    const { calls, impl } = captureFetch([jsonResponse(200, REPORT)]);
    const api = new VitalsApi("http://svc", impl);
    await api.process({
      ...UPLOAD,
      channel: "chrominance",
      captureStartTs: 100.5,
      captureEndTs: 130.5,
    });
    const body = calls[0].init?.body as FormData;
    expect(body.get("channel")).toBe("chrominance");
    expect(body.get("capture_start_ts")).toBe("100.5");
    expect(body.get("capture_end_ts")).toBe("130.5");
  });

  it("omits optional fields when absent", async () => {
    const { calls, impl } = captureFetch([jsonResponse(200, REPORT)]);
    const api = new VitalsApi("http://svc", impl);
    await api.process(UPLOAD);
    const body = calls[0].init?.body as FormData;
    expect(body.has("channel")).toBe(false);
    expect(body.has("capture_start_ts")).toBe(false);
  });

  it("surfaces a 422 as a quality rejection with the server guidance", async () => {
    const rejection = {
      detail: {
        error: "recording rejected by quality checks",
        message_code: "too_much_motion",
        guidance: "Hold the camera and your head steady, then record again.",
        quality: {
          verdict: "too_much_motion",
          message_code: "too_much_motion",
          max_displacement_px: 20.0,
          face_area_ratio: 0.25,
          median_brightness: 120.0,
        },
      },
    };
    const { impl } = captureFetch([jsonResponse(422, rejection)]);
    const api = new VitalsApi("http://svc", impl);
    const error = await api.process(UPLOAD).catch((e) => e);
    expect(error).toBeInstanceOf(QualityRejectionError);
    expect(error.messageCode).toBe("too_much_motion");
    expect(error.guidance).toContain("steady");
    expect(error.quality?.max_displacement_px).toBe(20.0);
  });

  it("maps other failures to ApiError with the server message", async () => {
    const { impl } = captureFetch([
      jsonResponse(400, { detail: { error: "bad trace CSV: empty" } }),
    ]);
    const api = new VitalsApi("http://svc", impl);
    const error = await api.process(UPLOAD).catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(400);
    expect(error.message).toContain("bad trace CSV");
  });
});

describe("saveSession", () => {
  it("posts JSON and returns the new session id", async () => {
    const { calls, impl } = captureFetch([jsonResponse(200, { session_id: 7 })]);
    const api = new VitalsApi("http://svc", impl);
    const id = await api.saveSession({
      process_token: "abc123",
      ground_truth: { hr_bpm: 75 },
    });
    expect(id).toBe(7);
    expect(calls[0].url).toBe("http://svc/api/v1/sessions");
    const sent = JSON.parse(calls[0].init?.body as string);
    expect(sent.process_token).toBe("abc123");
    expect(sent.ground_truth.hr_bpm).toBe(75);
    expect("profile" in sent).toBe(false);
  });

  it("maps an expired token to ApiError 404", async () => {
    const { impl } = captureFetch([
      jsonResponse(404, { detail: { error: "unknown process token" } }),
    ]);
    const api = new VitalsApi("http://svc", impl);
    const error = await api
      .saveSession({ process_token: "stale" })
      .catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(404);
  });
});

describe("health", () => {
  it("returns the status payload", async () => {
    const { calls, impl } = captureFetch([
      jsonResponse(200, { status: "ok", version: "0.1.0" }),
    ]);
    const api = new VitalsApi("http://svc", impl);
    expect(await api.health()).toEqual({ status: "ok", version: "0.1.0" });
    expect(calls[0].url).toBe("http://svc/api/v1/health");
  });

  it("trailing slash on the base url does not double up", async () => {
    const { calls, impl } = captureFetch([
      jsonResponse(200, { status: "ok", version: "0.1.0" }),
    ]);
    await new VitalsApi("http://svc/", impl).health();
    expect(calls[0].url).toBe("http://svc/api/v1/health");
  });
});
