// Thin client over the /v1 API. Concurrent GETs for the same path share one
// in-flight request; nothing is cached after it settles.

import type {
  CohortSummary,
  DecisionRequest,
  DecisionResponse,
  DependencePayload,
  ExplanationPayload,
  QueuePayload,
  SnapshotsPayload,
  StudentRisk,
} from "./types";

export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

let apiToken = "";

export function setToken(token: string): void {
  apiToken = token;
}

const inflight = new Map<string, Promise<unknown>>();

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const headers: Record<string, string> = {
    ...(init?.headers as Record<string, string> | undefined),
  };
  if (apiToken) headers["Authorization"] = `Bearer ${apiToken}`;
  if (init?.body) headers["Content-Type"] = "application/json";

  const res = await fetch(path, { ...init, headers });
  let body: unknown = null;
  try {
    body = await res.json();
  } catch {
    body = null;
  }
  if (!res.ok) {
    const detail =
      body && typeof body === "object" && "detail" in body
        ? String((body as { detail: unknown }).detail)
        : `request failed with status ${res.status}`;
    throw new ApiError(res.status, detail);
  }
  return body as T;
}

function dedupGet<T>(path: string): Promise<T> {
  const pending = inflight.get(path);
  if (pending) return pending as Promise<T>;
  const p = request<T>(path).finally(() => inflight.delete(path));
  inflight.set(path, p);
  return p;
}

export function fetchSnapshots(): Promise<SnapshotsPayload> {
  return dedupGet("/v1/snapshots");
}

export function fetchCohortSummary(snapshotId: string): Promise<CohortSummary> {
  return dedupGet(`/v1/cohort/${encodeURIComponent(snapshotId)}/summary`);
}

export function fetchQueue(snapshotId: string): Promise<QueuePayload> {
  return dedupGet(
    `/v1/interventions/queue?snapshot=${encodeURIComponent(snapshotId)}`,
  );
}

export function fetchStudentRisk(
  studentId: string,
  snapshotId: string,
): Promise<StudentRisk> {
  return dedupGet(
    `/v1/students/${encodeURIComponent(studentId)}/risk` +
      `?snapshot=${encodeURIComponent(snapshotId)}`,
  );
}

export function fetchExplanation(
  attemptId: string,
  snapshotId: string,
): Promise<ExplanationPayload> {
  return dedupGet(
    `/v1/attempts/${encodeURIComponent(attemptId)}/explanation` +
      `?snapshot=${encodeURIComponent(snapshotId)}`,
  );
}

export function fetchDependence(
  attemptId: string,
  feature: string,
  snapshotId: string,
): Promise<DependencePayload> {
  return dedupGet(
    `/v1/attempts/${encodeURIComponent(attemptId)}/dependence/` +
      `${encodeURIComponent(feature)}?snapshot=${encodeURIComponent(snapshotId)}`,
  );
}

export function submitDecision(
  planId: string,
  body: DecisionRequest,
): Promise<DecisionResponse> {
  return request(
    `/v1/interventions/${encodeURIComponent(planId)}/decision`,
    { method: "POST", body: JSON.stringify(body) },
  );
}

export function inflightCount(): number {
  return inflight.size;
}
