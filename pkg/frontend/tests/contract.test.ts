/** Contract tests against a live simulated backend.
 *
 * A demo server (frozen clock, pre-simulated cohort) is started once
 * for the file. The tests drive the real HTTP surface through the
 * typed client exactly as the webapp would: every on-grid transport
 * combination must be accepted end to end, every off-grid combination
 * must be stopped by the client and, when forced past it, by the
 * server; and a control participant's dashboard must render without
 * any active-only widget.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { loadConfig } from "../src/config.js";
import { esc } from "../src/escape.js";
import {
  TRANSPORT_GRID,
  emptyTransportForm,
  isOnGrid,
  selectBucket,
  selectTransport,
  transportPayload,
} from "../src/transport.js";
import type { FeedbackWindow, PromptDoc } from "../src/types.js";
import { renderFeedbackDashboard } from "../src/views/feedback.js";
import { renderPendingList } from "../src/views/prompts.js";
import { renderWeeklyReport } from "../src/views/weekly.js";

const PORT = 8942;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let client: ApiClient;
let serverNow: Date;

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 80; attempt++) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("backend did not come up in time");
}

beforeAll(async () => {
  server = spawn("hitloop", ["serve", "--demo", "--port", String(PORT)], {
    stdio: "ignore",
  });
  await waitForServer();
  client = new ApiClient(
    loadConfig({ apiBase: BASE, user: "u01", token: "demo-token" }),
  );
  const health = await client.healthz();
  serverNow = new Date(health.now);
});

afterAll(() => {
  server?.kill();
});

/** Raise a fresh transport prompt by reporting a qualifying in-vehicle
 * episode. Episodes are spaced 30 minutes apart, well past the
 * trip-chaining gap, so each one opens its own trip. */
let episodeSeq = 0;
async function raiseTransportPrompt(user: string): Promise<PromptDoc> {
  episodeSeq += 1;
  const start = new Date(serverNow.getTime() + episodeSeq * 30 * 60_000);
  const end = new Date(start.getTime() + 5 * 60_000);
  const result = await client.intakeEvent({
    user,
    kind: "vehicle_episode",
    payload: { start: start.toISOString(), end: end.toISOString() },
    t: serverNow.toISOString(),
  });
  expect(result.prompt).not.toBeNull();
  expect(result.prompt?.kind).toBe("transport");
  return result.prompt as PromptDoc;
}

describe("transport grid contract", () => {
  it("server accepts every on-grid combination submitted via the form", async () => {
    for (const family of TRANSPORT_GRID) {
      for (const bucket of family.buckets) {
        const prompt = await raiseTransportPrompt("u03");
        let form = emptyTransportForm(String(prompt.context.trip_id ?? ""));
        form = selectTransport(form, family.code);
        form = selectBucket(form, bucket.code);
        const receipt = await client.answerPrompt(
          prompt.prompt_id,
          transportPayload(form),
        );
        expect(receipt.payload.transport).toBe(family.code);
        expect(receipt.payload.people_bucket).toBe(bucket.code);
      }
    }
  }, 120_000);

  it("client and server both reject every off-grid combination", async () => {
    const prompt = await raiseTransportPrompt("u04");
    const tripId = String(prompt.context.trip_id ?? "");
    const allBuckets = new Set(
      TRANSPORT_GRID.flatMap((f) => f.buckets.map((b) => b.code)),
    );
    let offGrid = 0;
    for (const family of TRANSPORT_GRID) {
      const own = new Set(family.buckets.map((b) => b.code));
      for (const bucket of [...allBuckets, "5", "plenty", ""]) {
        if (own.has(bucket)) {
          continue;
        }
        offGrid += 1;

        // Client side: the form cannot produce this payload.
        expect(isOnGrid(family.code, bucket)).toBe(false);
        let form = emptyTransportForm(tripId);
        form = selectTransport(form, family.code);
        expect(() => selectBucket(form, bucket)).toThrow(RangeError);

        // Server side: a handcrafted payload bounces with a 400.
        await expect(
          client.answerPrompt(prompt.prompt_id, {
            kind: "transport",
            transport: family.code,
            people_bucket: bucket,
            trip_id: tripId,
          }),
        ).rejects.toMatchObject({ status: 400, errorName: "ValidationFailed" });
      }
    }
    expect(offGrid).toBeGreaterThanOrEqual(42);

    // The prompt survived every rejected attempt and still accepts a valid answer.
    const receipt = await client.answerPrompt(prompt.prompt_id, {
      kind: "transport",
      transport: "bus",
      people_bucket: "10-20",
      trip_id: tripId,
    });
    expect(receipt.payload.people_bucket).toBe("10-20");
  }, 120_000);

  it("unknown transport families bounce with a 400 as well", async () => {
    const prompt = await raiseTransportPrompt("u06");
    await expect(
      client.answerPrompt(prompt.prompt_id, {
        kind: "transport",
        transport: "zeppelin",
        people_bucket: "0",
        trip_id: String(prompt.context.trip_id ?? ""),
      }),
    ).rejects.toMatchObject({ status: 400 });
  });
});

describe("dashboard contract", () => {
  const windows: FeedbackWindow[] = ["last_24h", "last_4d", "last_8d"];

  it("control users get no gauge, contacts or mobility widgets", async () => {
    const { users } = await client.listUsers();
    const control = users.filter((u) => u.group === "control");
    expect(control.length).toBeGreaterThan(0);
    for (const entry of control) {
      for (const window of windows) {
        const doc = await client.feedback(entry.user, window);
        expect(doc.group).toBe("control");
        const html = renderFeedbackDashboard(doc);
        for (const marker of [
          "risk-gauge",
          "gauge-sector",
          "widget-risk",
          "widget-contacts",
          "widget-outings",
          "widget-transport",
        ]) {
          expect(html).not.toContain(marker);
        }
        expect(html).toContain("widget-activity");
      }
    }
  });

  it("active users get the four-sector gauge", async () => {
    const { users } = await client.listUsers();
    const active = users.find((u) => u.group === "active");
    expect(active).toBeDefined();
    const doc = await client.feedback(active!.user, "last_24h");
    const html = renderFeedbackDashboard(doc);
    expect(html).toContain('class="risk-gauge"');
    expect(html.match(/class="gauge-sector"/g)).toHaveLength(4);
  });

  it("weekly report shows the server's text verbatim", async () => {
    const doc = await client.weekly("u01");
    const html = renderWeeklyReport(doc);
    expect(html).toContain(esc(doc.contacts_message));
    expect(html).toContain(esc(doc.mobility_message));
    expect(html).toContain(esc(doc.measures_message));
  });
});

describe("pending list contract", () => {
  it("lists server prompts and drops an answered one without refetch", async () => {
    const before = await client.pendingPrompts("u01");
    const sleep = before.prompts.find((p) => p.kind === "sleep_report");
    expect(sleep).toBeDefined();

    const htmlBefore = renderPendingList(before.prompts, { now: serverNow });
    expect(htmlBefore).toContain(sleep!.prompt_id);

    await client.answerPrompt(sleep!.prompt_id, {
      kind: "sleep_report",
      bed_time: "23:30",
      wake_time: "07:30",
      quality: "good",
    });

    const after = await client.pendingPrompts("u01");
    expect(after.prompts.map((p) => p.prompt_id)).not.toContain(sleep!.prompt_id);
  });
});
