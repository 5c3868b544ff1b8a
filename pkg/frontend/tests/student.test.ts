import { afterEach, describe, expect, it } from "vitest";

import { fmtProb } from "../src/format";
import { fetchStudentView, renderAttemptDetail } from "../src/student";
import type {
  DependencePayload,
  ExplanationPayload,
  StudentRisk,
} from "../src/types";
import dependenceFixture from "./fixtures/dependence.json";
import explanationFixture from "./fixtures/explanation.json";
import studentFixture from "./fixtures/student_risk.json";
import { flush, stubFetch, type FetchStub } from "./helpers";

const explanation = explanationFixture as unknown as ExplanationPayload;
const dependence = dependenceFixture as unknown as DependencePayload;
const student = studentFixture as unknown as StudentRisk;

let stub: FetchStub;

afterEach(() => stub.restore());

describe("attempt detail", () => {
  it("draws one attribution bar per feature", async () => {
    stub = stubFetch();
    stub.route("/v1/attempts/", dependence);
    const holder = document.createElement("div");
    const row = explanation.explanations[0];
    renderAttemptDetail(holder, row, "snap");
    await flush();
    const bars = holder.querySelectorAll("rect.shap-bar");
    expect(bars).toHaveLength(row.features.length);
    expect(row.features).toHaveLength(16);
  });

  it("shows the model output itself, which the attributions reconcile with", async () => {
    stub = stubFetch();
    stub.route("/v1/attempts/", dependence);
    const holder = document.createElement("div");
    for (const row of explanation.explanations) {
      const sum = row.attributions.reduce((a, b) => a + b, 0);
      expect(Math.abs(row.base_value + sum - row.model_output)).toBeLessThanOrEqual(
        1e-6,
      );
    }
    const row = explanation.explanations[0];
    renderAttemptDetail(holder, row, "snap");
    await flush();
    const pred = holder.querySelector(".prediction")!;
    expect(pred.textContent).toBe(`Prediction: ${fmtProb(row.model_output)}`);
    expect(pred.getAttribute("data-value")).toBe(String(row.model_output));
    const base = holder.querySelector(".base-value")!;
    expect(base.getAttribute("data-value")).toBe(String(row.base_value));
  });

  it("marks every threshold the dependence payload provides", async () => {
    stub = stubFetch();
    stub.route("/v1/attempts/", dependence);
    const holder = document.createElement("div");
    renderAttemptDetail(holder, explanation.explanations[0], "snap");
    await flush();
    const marks = holder.querySelectorAll("line.threshold");
    expect(marks).toHaveLength(dependence.thresholds.length);
    const baseline = holder.querySelectorAll("line.baseline");
    expect(baseline).toHaveLength(1);
  });

  it("refetches the curve when another feature is picked", async () => {
    stub = stubFetch();
    stub.route("/v1/attempts/", dependence);
    const holder = document.createElement("div");
    renderAttemptDetail(holder, explanation.explanations[0], "snap");
    await flush();
    const before = stub.calls.length;
    const picker = holder.querySelector<HTMLSelectElement>(".feature-picker")!;
    picker.value = "stat_mean";
    picker.dispatchEvent(new Event("change"));
    await flush();
    expect(stub.calls.length).toBe(before + 1);
    expect(stub.calls[stub.calls.length - 1].path).toContain("/dependence/stat_mean");
  });
});

describe("student view", () => {
  it("lists every assessment and plan from the payload", async () => {
    stub = stubFetch();
    stub.route("/v1/students/", student);
    stub.route(/\/explanation\?/, explanation);
    stub.route(/\/dependence\//, dependence);
    const host = document.createElement("div");
    await fetchStudentView(host, student.studentID, student.snapshotID);
    await flush();
    const rows = host.querySelectorAll("tr.assessment-row");
    expect(rows).toHaveLength(student.assessments.length);
    const panels = host.querySelectorAll(".plan-panel");
    expect(panels).toHaveLength(student.plans.length);
    expect(host.textContent).toContain(`Student ${student.studentID}`);
  });

  it("shows a banner instead of a blank page when the student is unknown", async () => {
    stub = stubFetch();
    stub.route("/v1/students/", { detail: "unknown student 'zz'" }, { status: 404 });
    const host = document.createElement("div");
    host.innerHTML = "<p>stale</p>";
    await fetchStudentView(host, "zz", "snap");
    expect(host.querySelector(".banner.error")).not.toBeNull();
    expect(host.textContent).not.toContain("stale");
  });
});
