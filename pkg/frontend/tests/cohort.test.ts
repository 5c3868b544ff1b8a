import { afterEach, describe, expect, it } from "vitest";

import { RISK_COLORS, RISK_ORDER } from "../src/badges";
import { buildCohortView, buildQueueTable, fetchCohortView } from "../src/cohort";
import type { CohortSummary, QueueEntry, QueuePayload } from "../src/types";
import queueFixture from "./fixtures/queue.json";
import summaryFixture from "./fixtures/summary.json";
import { stubFetch, type FetchStub } from "./helpers";

const summary = summaryFixture as unknown as CohortSummary;
const queue = queueFixture as unknown as QueuePayload;

let stub: FetchStub | null = null;

afterEach(() => {
  stub?.restore();
  stub = null;
});

describe("cohort view", () => {
  it("shows the risk counts exactly as the API reports them", () => {
    const view = buildCohortView(summary, queue);
    for (const level of RISK_ORDER) {
      const card = view.querySelector(`.card[data-level="${level}"]`);
      expect(card, level).not.toBeNull();
      const num = card!.querySelector(".num")!.textContent;
      expect(num).toBe(String(summary.risk_summary[level].samples));
      const sub = card!.querySelector(".sub")!.textContent!;
      expect(sub).toContain(
        String(summary.risk_summary[level].predicted_disengaged),
      );
    }
  });

  it("renders one queue row per entry, in payload order", () => {
    const picked: QueueEntry[] = [];
    const table = buildQueueTable(queue, (e) => picked.push(e));
    const rows = table.querySelectorAll("tr.queue-row");
    expect(rows).toHaveLength(queue.entries.length);
    expect(rows[0].getAttribute("data-plan-id")).toBe(queue.entries[0].planID);
    (rows[0] as HTMLElement).click();
    expect(picked).toHaveLength(1);
    expect(picked[0].planID).toBe(queue.entries[0].planID);
  });

  it("shows an empty state when the snapshot has no samples", () => {
    const empty: CohortSummary = {
      ...summary,
      risk_summary: {
        High: { samples: 0, predicted_disengaged: 0 },
        Medium: { samples: 0, predicted_disengaged: 0 },
        Low: { samples: 0, predicted_disengaged: 0 },
        Engaged: { samples: 0, predicted_disengaged: 0 },
      },
    };
    const view = buildCohortView(empty, queue);
    expect(view.querySelector(".empty-state")).not.toBeNull();
    expect(view.querySelector(".card")).toBeNull();
  });

  it("replaces stale content with a banner when the fetch fails", async () => {
    stub = stubFetch();
    stub.route("/v1/cohort/", { detail: "unknown snapshot 'gone'" }, { status: 404 });
    stub.route("/v1/interventions/queue", queue);
    const host = document.createElement("div");
    host.innerHTML = '<div class="cards"><div class="card">stale</div></div>';
    await fetchCohortView(host, "gone");
    const banner = host.querySelector(".banner.error");
    expect(banner).not.toBeNull();
    expect(banner!.textContent).toContain("unknown snapshot");
    expect(host.querySelector(".card")).toBeNull();
  });

  it("renders fresh data over previous content on success", async () => {
    stub = stubFetch();
    stub.route("/v1/cohort/", summary);
    stub.route("/v1/interventions/queue", queue);
    const host = document.createElement("div");
    host.innerHTML = '<p class="empty-state">old</p>';
    await fetchCohortView(host, summary.snapshotID);
    expect(host.querySelectorAll(".card")).toHaveLength(4);
    expect(host.textContent).not.toContain("old");
  });

  it("uses a fixed, distinct badge color per risk level", () => {
    const values = Object.values(RISK_COLORS);
    expect(values).toHaveLength(4);
    expect(new Set(values).size).toBe(4);
    for (const v of values) expect(v).toMatch(/^#[0-9a-f]{6}$/);
  });
});
