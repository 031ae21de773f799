/**
 * Typed client for the vitals service.
 *
 * Wraps the three endpoints the UI uses: process (multipart upload),
 * sessions (JSON save), and health. A 422 quality rejection surfaces as a
 * typed error carrying the server's message code and guidance so the UI
 * can prompt a re-record; other non-2xx responses throw ApiError.
 */

import type {
  ProcessResponse,
  QualityJson,
  SessionPayload,
  SidecarPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class QualityRejectionError extends Error {
  constructor(
    readonly messageCode: string,
    readonly guidance: string,
    readonly quality: QualityJson | null,
  ) {
    super(guidance);
    this.name = "QualityRejectionError";
  }
}

export interface ProcessUpload {
  video: Blob;
  sidecar: SidecarPayload;
  channel?: string;
  captureStartTs?: number;
  captureEndTs?: number;
}

async function errorText(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: { error?: string } };
    return body.detail?.error ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

export class VitalsApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  async process(upload: ProcessUpload): Promise<ProcessResponse> {
    const body = new FormData();
    body.append("video", upload.video, "recording.mp4");
    body.append(
      "annotations",
      new Blob([JSON.stringify(upload.sidecar)], { type: "application/json" }),
      "recording.json",
    );
    if (upload.channel) {
      body.append("channel", upload.channel);
    }
    if (upload.captureStartTs !== undefined) {
      body.append("capture_start_ts", String(upload.captureStartTs));
    }
    if (upload.captureEndTs !== undefined) {
      body.append("capture_end_ts", String(upload.captureEndTs));
    }
    const response = await this.fetchImpl(this.url("/api/v1/process"), {
      method: "POST",
      body,
    });
    if (response.status === 422) {
      const detail = ((await response.json()) as {
        detail: {
          message_code: string;
          guidance: string;
          quality?: QualityJson;
        };
      }).detail;
      throw new QualityRejectionError(
        detail.message_code,
        detail.guidance,
        detail.quality ?? null,
      );
    }
    if (!response.ok) {
      throw new ApiError(response.status, await errorText(response));
    }
    return (await response.json()) as ProcessResponse;
  }

  async saveSession(payload: SessionPayload): Promise<number> {
    const response = await this.fetchImpl(this.url("/api/v1/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorText(response));
    }
    const body = (await response.json()) as { session_id: number };
    return body.session_id;
  }

  async health(): Promise<{ status: string; version: string }> {
    const response = await this.fetchImpl(this.url("/api/v1/health"));
    if (!response.ok) {
      throw new ApiError(response.status, await errorText(response));
    }
    return (await response.json()) as { status: string; version: string };
  }
}
