/** UI wiring: capture controls, upload, results, and the session form. */

import { ApiError, QualityRejectionError, VitalsApi } from "./api.js";
import {
  DEFAULT_DURATION_S,
  FaceMeshProvider,
  requestCamera,
  runCapture,
  type CaptureResult,
} from "./capture.js";
import { buildSessionPayload, type RawSessionForm } from "./form.js";
import {
  GUIDANCE_TEXT,
  GuidanceCode,
  SERVER_CODE_TO_GUIDANCE,
  initialState,
  onFrame,
  startRecording,
  stopRecording,
  type CaptureState,
} from "./guidance.js";
import type { EstimateJson, ProcessResponse } from "./types.js";

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

const api = new VitalsApi("");

let state: CaptureState = initialState();
let lastCapture: CaptureResult | null = null;
let processToken: string | null = null;

const video = element<HTMLVideoElement>("camera");
const canvas = element<HTMLCanvasElement>("preview");
const guidanceLine = element<HTMLParagraphElement>("guidance");
const countdown = element<HTMLSpanElement>("countdown");
const startButton = element<HTMLButtonElement>("start");
const submitButton = element<HTMLButtonElement>("submit");
const saveButton = element<HTMLButtonElement>("save");
const maskToggle = element<HTMLInputElement>("mask-toggle");
const results = element<HTMLTableSectionElement>("results");
const srtimeLine = element<HTMLParagraphElement>("srtime");
const serverLine = element<HTMLParagraphElement>("server-message");
const versionLine = element<HTMLSpanElement>("version");

function showGuidance(): void {
  guidanceLine.textContent = GUIDANCE_TEXT[state.guidance];
  guidanceLine.dataset.code = state.guidance;
  countdown.textContent = state.recording
    ? `${Math.max(0, DEFAULT_DURATION_S - state.elapsedS).toFixed(0)} s`
    : "";
}

function setBusy(busy: boolean): void {
  startButton.disabled = busy || state.recording;
  submitButton.disabled = busy || lastCapture === null;
  saveButton.disabled = busy || processToken === null;
}

async function capture(): Promise<void> {
  state = startRecording({ ...state, maskEnabled: maskToggle.checked });
  lastCapture = null;
  processToken = null;
  setBusy(false);
  showGuidance();
  const provider = new FaceMeshProvider();
  try {
    const result = await runCapture(video, canvas, provider, {
      onFrame: (face, dtS) => {
        state = onFrame(state, face, dtS, canvas.width, canvas.height);
        showGuidance();
      },
      shouldContinue: () => state.recording,
      maskEnabled: () => state.maskEnabled,
    });
    if (state.recording) {
      // full-duration take: keep it and offer submission
      state = stopRecording(state, GuidanceCode.Done);
      lastCapture = result;
    }
    // otherwise the state machine already stopped the take (e.g. motion)
    // and its guidance message stays on screen; restart is manual.
  } catch (error) {
    state = stopRecording(state, GuidanceCode.Idle);
    guidanceLine.textContent = String(error);
  }
  showGuidance();
  setBusy(false);
}

function estimateRow(label: string, unit: string, estimate: EstimateJson): string {
  const value = estimate.value === null ? "n/a" : estimate.value.toFixed(1);
  const flag = estimate.valid ? "" : " (low confidence)";
  return `<tr><th>${label}</th><td>${value} ${unit}${flag}</td></tr>`;
}

function renderReport(response: ProcessResponse, srTimeS: number): void {
  const report = response.report;
  const bp =
    report.bp.sbp_mmhg === null
      ? "n/a"
      : `${report.bp.sbp_mmhg.toFixed(0)}/${report.bp.dbp_mmhg!.toFixed(0)} mmHg` +
        (report.bp.valid ? "" : " (low confidence)");
  results.innerHTML = [
    estimateRow("Heart rate", "bpm", report.hr_bpm),
    estimateRow("HRV (RMSSD)", "ms", report.hrv_rmssd_ms),
    estimateRow("SpO2", "%", report.spo2_percent),
    estimateRow("Respiratory rate", "breaths/min", report.rr_brpm),
    `<tr><th>Stress</th><td>${report.stress.level ?? "n/a"}</td></tr>`,
    `<tr><th>Blood pressure</th><td>${bp}</td></tr>`,
  ].join("");
  srtimeLine.textContent =
    `Response time ${srTimeS.toFixed(2)} s ` +
    `(server processing ${response.bp_time_s.toFixed(2)} s)`;
}

async function submit(): Promise<void> {
  if (!lastCapture) {
    return;
  }
  setBusy(true);
  serverLine.textContent = "Uploading…";
  const submittedMs = performance.now();
  try {
    const response = await api.process({
      video: lastCapture.video,
      sidecar: lastCapture.sidecar.toPayload(),
      captureStartTs: lastCapture.captureStartTs,
      captureEndTs: lastCapture.captureEndTs,
    });
    processToken = response.process_token;
    renderReport(response, (performance.now() - submittedMs) / 1000);
    serverLine.textContent = "";
  } catch (error) {
    if (error instanceof QualityRejectionError) {
      const code = SERVER_CODE_TO_GUIDANCE[error.messageCode];
      state = stopRecording(state, code ?? GuidanceCode.Idle);
      showGuidance();
      serverLine.textContent = `${error.guidance} Then record again.`;
      lastCapture = null;
    } else if (error instanceof ApiError) {
      serverLine.textContent = `Upload failed (${error.status}): ${error.message}`;
    } else {
      serverLine.textContent = String(error);
    }
  }
  setBusy(false);
}

function sectionValues(section: string): Record<string, string> {
  const fields: Record<string, string> = {};
  document
    .querySelectorAll<HTMLInputElement | HTMLSelectElement>(
      `[data-section="${section}"]`,
    )
    .forEach((input) => {
      fields[input.name] = input.value;
    });
  return fields;
}

async function save(): Promise<void> {
  if (!processToken) {
    return;
  }
  setBusy(true);
  try {
    const form: RawSessionForm = {
      ground_truth: sectionValues("ground_truth"),
      environment: sectionValues("environment"),
      profile: sectionValues("profile"),
    };
    const sessionId = await api.saveSession(
      buildSessionPayload(processToken, form),
    );
    serverLine.textContent = `Saved as session #${sessionId}.`;
  } catch (error) {
    serverLine.textContent =
      error instanceof ApiError
        ? `Save failed (${error.status}): ${error.message}`
        : String(error);
  }
  setBusy(false);
}

async function init(): Promise<void> {
  startButton.addEventListener("click", () => void capture());
  submitButton.addEventListener("click", () => void submit());
  saveButton.addEventListener("click", () => void save());
  maskToggle.addEventListener("change", () => {
    state = { ...state, maskEnabled: maskToggle.checked };
  });
  setBusy(false);
  showGuidance();
  try {
    const health = await api.health();
    versionLine.textContent = `service ${health.version}`;
  } catch {
    versionLine.textContent = "service unreachable";
  }
  try {
    const stream = await requestCamera();
    video.srcObject = stream;
    await video.play();
  } catch (error) {
    guidanceLine.textContent = String(error);
    startButton.disabled = true;
  }
}

void init();
