// Cohort view: risk count cards straight from the API risk_summary payload,
// model metrics, weekly activity, grade series, and the intervention queue.

import { fetchCohortSummary, fetchQueue } from "./api";
import { riskBadge, RISK_ORDER } from "./badges";
import { clearBanner, showBanner } from "./banners";
import { barChart } from "./charts";
import { fmtPct, fmtProb } from "./format";
import type { CohortSummary, QueueEntry, QueuePayload } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}

function riskCards(summary: CohortSummary): HTMLElement {
  const wrap = el("div", "cards");
  for (const level of RISK_ORDER) {
    const row = summary.risk_summary[level] ?? {
      samples: 0,
      predicted_disengaged: 0,
    };
    const card = el("div", "card");
    card.dataset.level = level;
    const num = el("div", "num");
    num.textContent = String(row.samples);
    const sub = el("div", "sub");
    sub.textContent = `${row.predicted_disengaged} predicted disengaged`;
    card.append(riskBadge(level), num, sub);
    wrap.append(card);
  }
  return wrap;
}

function metricsPanel(summary: CohortSummary): HTMLElement {
  const panel = el("div", "panel metrics-panel");
  const h = el("h2");
  h.textContent = summary.metrics?.model_kind
    ? `Model metrics (${summary.metrics.model_kind})`
    : "Model metrics";
  panel.append(h);
  if (!summary.metrics) {
    const p = el("p");
    p.textContent = "No metrics recorded for this snapshot.";
    panel.append(p);
    return panel;
  }
  const table = el("table", "list");
  const keys: [string, string][] = [
    ["BA", fmtPct(summary.metrics.BA)],
    ["AUC", fmtProb(summary.metrics.AUC)],
    ["TPR", fmtPct(summary.metrics.TPR)],
    ["TNR", fmtPct(summary.metrics.TNR)],
    ["PPV", fmtPct(summary.metrics.PPV)],
    ["NPV", fmtPct(summary.metrics.NPV)],
  ];
  const head = el("tr");
  const body = el("tr");
  for (const [k, v] of keys) {
    const th = el("th");
    th.textContent = k;
    head.append(th);
    const td = el("td");
    td.dataset.metric = k;
    td.textContent = v;
    body.append(td);
  }
  table.append(head, body);
  panel.append(table);
  if (summary.metrics.in_sample) {
    const note = el("p");
    note.textContent = "Evaluated in-sample (no held-out split).";
    panel.append(note);
  }
  return panel;
}

function weeklyActivityPanel(summary: CohortSummary): HTMLElement {
  const panel = el("div", "panel activity-panel");
  const h = el("h2");
  h.textContent = "Weekly activity";
  panel.append(h);
  const tags = Object.keys(summary.weekly_activity).sort();
  if (tags.length === 0) {
    const p = el("p");
    p.textContent = "No activity series.";
    panel.append(p);
    return panel;
  }
  const data = tags.flatMap((tag) =>
    Object.entries(summary.weekly_activity[tag])
      .sort(([a], [b]) => a.localeCompare(b))
      .map(([week, count]) => ({ label: `${tag} ${week}`, value: count })),
  );
  const holder = el("div");
  holder.innerHTML = barChart(data, { height: 170 });
  panel.append(holder);
  return panel;
}

function gradePanel(summary: CohortSummary): HTMLElement {
  const panel = el("div", "panel grade-panel");
  const h = el("h2");
  h.textContent = "Submission rate by final grade";
  panel.append(h);
  const data = summary.grade_bins.map((b) => ({
    label: `grade ${b.grade} (n=${b.n_students})`,
    value: b.mean_submission_rate,
  }));
  const holder = el("div");
  holder.innerHTML = barChart(data, { height: 170, color: "#2e7d32", maxValue: 1 });
  panel.append(holder);
  return panel;
}

export function buildQueueTable(
  payload: QueuePayload,
  onSelect?: (entry: QueueEntry) => void,
): HTMLElement {
  const panel = el("div", "panel queue-panel");
  const h = el("h2");
  h.textContent = `Intervention queue (${payload.entries.length})`;
  panel.append(h);
  if (payload.entries.length === 0) {
    const p = el("p", "empty-state");
    p.textContent = "Queue is empty.";
    panel.append(p);
    return panel;
  }
  const table = el("table", "list");
  const head = el("tr");
  for (const label of ["Risk", "Student", "Attempt", "Day", "Status"]) {
    const th = el("th");
    th.textContent = label;
    head.append(th);
  }
  table.append(head);
  for (const entry of payload.entries) {
    const tr = el("tr", "clickable queue-row");
    tr.dataset.planId = entry.planID;
    const risk = el("td");
    risk.append(riskBadge(entry.riskLevel));
    const student = el("td");
    student.textContent = entry.studentID ?? "(unknown)";
    const attempt = el("td");
    attempt.textContent = entry.attemptID;
    const day = el("td");
    day.textContent = String(entry.dateRel);
    const status = el("td");
    const chip = el("span", `chip status-${entry.status}`);
    chip.textContent = entry.status;
    status.append(chip);
    tr.append(risk, student, attempt, day, status);
    if (onSelect) tr.addEventListener("click", () => onSelect(entry));
    table.append(tr);
  }
  panel.append(table);
  return panel;
}

export function buildCohortView(
  summary: CohortSummary,
  queue: QueuePayload | null,
  onSelect?: (entry: QueueEntry) => void,
): HTMLElement {
  const root = el("div", "cohort-view");
  const total = RISK_ORDER.reduce(
    (n, lv) => n + (summary.risk_summary[lv]?.samples ?? 0),
    0,
  );
  if (total === 0) {
    const empty = el("div", "empty-state");
    empty.textContent = "No samples in this snapshot.";
    root.append(empty);
    return root;
  }
  root.append(riskCards(summary), metricsPanel(summary));
  const grid = el("div", "grid2");
  grid.append(weeklyActivityPanel(summary), gradePanel(summary));
  root.append(grid);
  if (queue) root.append(buildQueueTable(queue, onSelect));
  return root;
}

/**
 * Load and render the cohort view. API errors land in a visible banner and
 * any previously rendered content is removed, so a failed refresh never
 * leaves stale numbers on screen.
 */
export async function fetchCohortView(
  host: HTMLElement,
  snapshotId: string,
  onSelect?: (entry: QueueEntry) => void,
): Promise<void> {
  clearBanner(host);
  try {
    const [summary, queue] = await Promise.all([
      fetchCohortSummary(snapshotId),
      fetchQueue(snapshotId),
    ]);
    host.replaceChildren(buildCohortView(summary, queue, onSelect));
  } catch (err) {
    host.replaceChildren();
    const message =
      err instanceof Error ? err.message : "failed to load cohort view";
    showBanner(host, message, "error");
  }
}
