import { afterEach, describe, expect, it } from "vitest";

import {
  ApiError,
  fetchCohortSummary,
  fetchQueue,
  fetchSnapshots,
  inflightCount,
  setToken,
  submitDecision,
} from "../src/api";
import approveFixture from "./fixtures/decision_approve.json";
import queueFixture from "./fixtures/queue.json";
import summaryFixture from "./fixtures/summary.json";
import { stubFetch, type FetchStub } from "./helpers";

let stub: FetchStub;

afterEach(() => {
  stub?.restore();
  setToken("");
});

describe("request deduplication", () => {
  it("shares one request between concurrent GETs for the same path", async () => {
    stub = stubFetch();
    stub.route("/v1/cohort/", summaryFixture);
    const [a, b] = await Promise.all([
      fetchCohortSummary("snap-a"),
      fetchCohortSummary("snap-a"),
    ]);
    expect(stub.calls).toHaveLength(1);
    expect(a).toEqual(b);
    expect(inflightCount()).toBe(0);
  });

  it("fetches again once the shared request has settled", async () => {
    stub = stubFetch();
    stub.route("/v1/cohort/", summaryFixture);
    await fetchCohortSummary("snap-a");
    await fetchCohortSummary("snap-a");
    expect(stub.calls).toHaveLength(2);
  });

  it("keeps requests for different resources separate", async () => {
    stub = stubFetch();
    stub.route("/v1/cohort/", summaryFixture);
    stub.route("/v1/interventions/queue", queueFixture);
    await Promise.all([fetchCohortSummary("snap-a"), fetchQueue("snap-a")]);
    expect(stub.calls).toHaveLength(2);
  });

  it("never deduplicates POSTs", async () => {
    stub = stubFetch();
    stub.route("/v1/interventions/", approveFixture, { method: "POST" });
    const body = {
      action: "Approve" as const,
      actor: "t-9",
      snapshot: "snap-a",
    };
    await Promise.all([
      submitDecision("plan:x", body),
      submitDecision("plan:x", body),
    ]);
    expect(stub.calls).toHaveLength(2);
    expect(stub.calls[0].init?.method).toBe("POST");
  });
});

describe("auth and errors", () => {
  it("attaches the bearer token when one is set", async () => {
    stub = stubFetch();
    stub.route("/v1/snapshots", { snapshots: [] });
    setToken("hunter2");
    await fetchSnapshots();
    const headers = stub.calls[0].init?.headers as Record<string, string>;
    expect(headers["Authorization"]).toBe("Bearer hunter2");

    setToken("");
    await fetchSnapshots();
    const bare = stub.calls[1].init?.headers as Record<string, string>;
    expect(bare["Authorization"]).toBeUndefined();
  });

  it("sends JSON content type on POST bodies", async () => {
    stub = stubFetch();
    stub.route("/v1/interventions/", approveFixture, { method: "POST" });
    await submitDecision("plan:x", {
      action: "Approve",
      actor: "t-9",
      snapshot: "snap-a",
    });
    const headers = stub.calls[0].init?.headers as Record<string, string>;
    expect(headers["Content-Type"]).toBe("application/json");
  });

  it("surfaces the server detail and status on failures", async () => {
    stub = stubFetch();
    stub.route("/v1/cohort/", { detail: "unknown snapshot 'nope'" }, { status: 404 });
    const err = await fetchCohortSummary("nope").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).message).toBe("unknown snapshot 'nope'");
  });
});
