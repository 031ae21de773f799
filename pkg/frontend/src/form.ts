/**
 * Turns raw form field strings into the session-save payload.
 *
 * Every field is optional; empty inputs are dropped and a section whose
 * fields are all empty is omitted from the request entirely.
 */

import type { SessionPayload } from "./types.js";

export interface RawSessionForm {
  ground_truth?: Record<string, string>;
  environment?: Record<string, string>;
  profile?: Record<string, string>;
}

const NUMERIC_FIELDS = new Set([
  "hr_bpm",
  "hrv_rmssd_ms",
  "spo2_percent",
  "rr_brpm",
  "sbp_mmhg",
  "dbp_mmhg",
  "age",
]);

function cleanSection(
  raw: Record<string, string> | undefined,
): Record<string, number | string> | undefined {
  if (!raw) {
    return undefined;
  }
  const section: Record<string, number | string> = {};
  for (const [key, value] of Object.entries(raw)) {
    const trimmed = value.trim();
    if (trimmed === "") {
      continue;
    }
    if (NUMERIC_FIELDS.has(key)) {
      const parsed = Number(trimmed);
      if (!Number.isFinite(parsed)) {
        throw new Error(`field ${key} must be a number, got "${trimmed}"`);
      }
      section[key] = parsed;
    } else {
      section[key] = trimmed;
    }
  }
  return Object.keys(section).length > 0 ? section : undefined;
}

export function buildSessionPayload(
  processToken: string,
  form: RawSessionForm,
): SessionPayload {
  if (!processToken) {
    throw new Error("a session save needs the process token");
  }
  const payload: SessionPayload = { process_token: processToken };
  const groundTruth = cleanSection(form.ground_truth);
  const environment = cleanSection(form.environment) as
    | Record<string, string>
    | undefined;
  const profile = cleanSection(form.profile);
  if (groundTruth) {
    payload.ground_truth = groundTruth;
  }
  if (environment) {
    payload.environment = environment;
  }
  if (profile) {
    payload.profile = profile;
  }
  return payload;
}
