// Student detail view: assessment history, per-day attribution chart,
// dependence curve, and the student's intervention plans.

import {
  fetchDependence,
  fetchExplanation,
  fetchStudentRisk,
  submitDecision,
} from "./api";
import { riskBadge } from "./badges";
import { clearBanner, showBanner } from "./banners";
import { dependenceChart, shapBarChart } from "./charts";
import { fromRecord, renderPlanPanel } from "./decisions";
import { fmtProb } from "./format";
import type { ExplanationRow, StudentRisk } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}

function flagList(flags: { erratic: boolean; delayed: boolean; irregular: boolean }): string {
  const on = Object.entries(flags)
    .filter(([, v]) => v)
    .map(([k]) => k);
  return on.length ? on.join(", ") : "none";
}

/**
 * Render one explanation row: the model's own prediction and base value,
 * the attribution bars, and a dependence curve with a feature picker.
 * All numbers are displayed verbatim from the payload.
 */
export function renderAttemptDetail(
  holder: HTMLElement,
  row: ExplanationRow,
  snapshotId: string,
): void {
  holder.replaceChildren();
  const head = el("h3");
  head.textContent = `Attempt ${row.attemptID}, day ${row.dateRel}`;
  holder.append(head);

  const pred = el("p", "prediction");
  pred.dataset.value = String(row.model_output);
  pred.textContent = `Prediction: ${fmtProb(row.model_output)}`;
  const base = el("p", "base-value");
  base.dataset.value = String(row.base_value);
  base.textContent = `Base value: ${fmtProb(row.base_value)}`;
  holder.append(pred, base);

  const shapHolder = el("div", "shap-holder");
  shapHolder.innerHTML = shapBarChart(row.features, row.attributions);
  holder.append(shapHolder);

  const depPanel = el("div", "dependence-panel");
  const picker = el("select") as HTMLSelectElement;
  picker.className = "feature-picker";
  for (const name of row.features) {
    const opt = document.createElement("option");
    opt.value = name;
    opt.textContent = name;
    picker.append(opt);
  }
  const initial = row.features.includes("days_inactive")
    ? "days_inactive"
    : row.features[0];
  picker.value = initial;
  const curveHolder = el("div", "curve-holder");
  depPanel.append(picker, curveHolder);
  holder.append(depPanel);

  const loadCurve = async (feature: string) => {
    try {
      const dep = await fetchDependence(row.attemptID, feature, snapshotId);
      curveHolder.innerHTML = dependenceChart(
        dep.grid,
        dep.values,
        dep.baseline,
        dep.thresholds,
        dep.feature,
      );
    } catch (err) {
      curveHolder.replaceChildren();
      showBanner(
        curveHolder,
        err instanceof Error ? err.message : "failed to load curve",
      );
    }
  };
  picker.addEventListener("change", () => void loadCurve(picker.value));
  void loadCurve(initial);
}

export function buildStudentView(
  data: StudentRisk,
  opts: { onBack?: () => void } = {},
): HTMLElement {
  const root = el("div", "student-view");

  if (opts.onBack) {
    const back = el("a", "back-link");
    back.textContent = "← back to cohort";
    back.href = "#";
    back.addEventListener("click", (ev) => {
      ev.preventDefault();
      opts.onBack?.();
    });
    root.append(back);
  }

  const h = el("h2");
  h.textContent = `Student ${data.studentID}`;
  root.append(h);

  const detail = el("div", "attempt-detail");

  const panel = el("div", "panel");
  const table = el("table", "list assessments");
  const head = el("tr");
  for (const label of ["Risk", "Attempt", "Day", "Prediction", "Flags"]) {
    const th = el("th");
    th.textContent = label;
    head.append(th);
  }
  table.append(head);
  for (const a of data.assessments) {
    const tr = el("tr", "clickable assessment-row");
    tr.dataset.attemptId = a.attemptID;
    tr.dataset.dateRel = String(a.dateRel);
    const risk = el("td");
    risk.append(riskBadge(a.level));
    const attempt = el("td");
    attempt.textContent = a.attemptID;
    const day = el("td");
    day.textContent = String(a.dateRel);
    const predCell = el("td");
    predCell.textContent = fmtProb(a.model_prediction);
    const flags = el("td");
    flags.textContent = flagList(a.flags);
    tr.append(risk, attempt, day, predCell, flags);
    tr.addEventListener("click", () => {
      void selectAssessment(detail, a.attemptID, a.dateRel, data.snapshotID);
    });
    table.append(tr);
  }
  panel.append(table);
  root.append(panel, detail);

  const plansHead = el("h3");
  plansHead.textContent = `Plans (${data.plans.length})`;
  root.append(plansHead);
  for (const rec of data.plans) {
    const box = el("div");
    renderPlanPanel(box, fromRecord(rec), {
      snapshot: data.snapshotID,
      submit: submitDecision,
    });
    root.append(box);
  }

  if (data.assessments.length > 0) {
    const first = data.assessments[0];
    void selectAssessment(detail, first.attemptID, first.dateRel, data.snapshotID);
  } else {
    const empty = el("p", "empty-state");
    empty.textContent = "No risk assessments for this student.";
    detail.append(empty);
  }
  return root;
}

async function selectAssessment(
  detail: HTMLElement,
  attemptId: string,
  dateRel: number,
  snapshotId: string,
): Promise<void> {
  clearBanner(detail);
  try {
    const payload = await fetchExplanation(attemptId, snapshotId);
    const row = payload.explanations.find((r) => r.dateRel === dateRel);
    if (!row) {
      detail.replaceChildren();
      showBanner(detail, `no explanation for day ${dateRel}`);
      return;
    }
    renderAttemptDetail(detail, row, snapshotId);
  } catch (err) {
    detail.replaceChildren();
    showBanner(
      detail,
      err instanceof Error ? err.message : "failed to load explanation",
    );
  }
}

/** Load and render the student view; errors become banners, never blanks. */
export async function fetchStudentView(
  host: HTMLElement,
  studentId: string,
  snapshotId: string,
  opts: { onBack?: () => void } = {},
): Promise<void> {
  clearBanner(host);
  try {
    const data = await fetchStudentRisk(studentId, snapshotId);
    host.replaceChildren(buildStudentView(data, opts));
  } catch (err) {
    host.replaceChildren();
    showBanner(
      host,
      err instanceof Error ? err.message : "failed to load student view",
    );
  }
}
