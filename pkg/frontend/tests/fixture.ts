/**
 * Scripted agent fixture: an in-memory fake of the patient agent + the
 * practitioner command endpoint, with a tiny request state machine so tests
 * can assert that console actions drive requests to GRANTED / DECLINED /
 * REVOKED exactly like the real proxy would.
 */

import type { Fetcher, GrantRow, MatchedDoc, PendingRequest } from "../src/api.js";

interface RequestRecord {
  request_id: string;
  patient_id: string;
  practitioner_id: string;
  status: string;
  submitted_at: string;
  matched: MatchedDoc[];
}

export class ScriptedAgent {
  requests = new Map<string, RequestRecord>();
  calls: string[] = [];
  failNext: string | null = null;
  offline = false;
  private counter = 0;

  addPending(practitionerId: string, matched: MatchedDoc[]): string {
    this.counter += 1;
    const id = `req-${String(this.counter).padStart(6, "0")}`;
    this.requests.set(id, {
      request_id: id,
      patient_id: "pt-0",
      practitioner_id: practitionerId,
      status: "AWAITING_CONSENT",
      submitted_at: new Date(0).toISOString(),
      matched,
    });
    return id;
  }

  status(id: string): string | undefined {
    return this.requests.get(id)?.status;
  }

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  fetcher: Fetcher = async (url, init) => {
    if (this.offline) throw new TypeError("fetch failed");
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? JSON.parse(init.body as string) : {};
    this.calls.push(`${init?.method ?? "GET"} ${path}`);
    if (this.failNext === path) {
      this.failNext = null;
      return this.json({ detail: "injected failure" }, 409);
    }

    if (path === "/config") {
      return this.json({ mode: "patient", principal: "pt-0", proxy: "" });
    }
    if (path === "/pending") {
      const pending: PendingRequest[] = [...this.requests.values()]
        .filter((r) => r.status === "AWAITING_CONSENT")
        .map(({ request_id, practitioner_id, submitted_at, matched }) =>
          ({ request_id, practitioner_id, submitted_at, matched }));
      return this.json({ pending });
    }
    if (path === "/grant") {
      const record = this.requests.get(body.request_id);
      if (!record || record.status !== "AWAITING_CONSENT") {
        return this.json({ detail: "bad state" }, 409);
      }
      record.status = body.doc_ids.length ? "GRANTED" : "AWAITING_CONSENT";
      if (record.status === "GRANTED") record.status = "FULFILLED";
      return this.json({ request_id: record.request_id, status: record.status });
    }
    if (path === "/decline") {
      const record = this.requests.get(body.request_id);
      if (!record || record.status !== "AWAITING_CONSENT") {
        return this.json({ detail: "bad state" }, 409);
      }
      record.status = "DECLINED";
      return this.json({ request_id: record.request_id, status: "DECLINED" });
    }
    if (path === "/revoke") {
      let revoked = 0;
      for (const record of this.requests.values()) {
        const matchesRequest = body.request_id && record.request_id === body.request_id;
        const matchesPractitioner =
          body.practitioner_id && record.practitioner_id === body.practitioner_id;
        if ((matchesRequest || matchesPractitioner) &&
            ["GRANTED", "FULFILLED"].includes(record.status)) {
          record.status = "REVOKED";
          revoked += 1;
        }
      }
      return this.json({ revoked });
    }
    if (path === "/grants") {
      const grants: GrantRow[] = [...this.requests.values()]
        .filter((r) => ["GRANTED", "FULFILLED"].includes(r.status))
        .map(({ request_id, patient_id, practitioner_id, status, submitted_at }) =>
          ({ request_id, patient_id, practitioner_id, status, submitted_at }));
      return this.json({ grants });
    }
    if (path === "/requests") {
      const rows: GrantRow[] = [...this.requests.values()]
        .map(({ request_id, patient_id, practitioner_id, status, submitted_at }) =>
          ({ request_id, patient_id, practitioner_id, status, submitted_at }));
      return this.json({ requests: rows });
    }
    if (path === "/submit") {
      const id = this.addPending("dr-self", []);
      const record = this.requests.get(id)!;
      record.status = "AWAITING_CONSENT";
      record.patient_id = body.patient_id;
      return this.json({ request_id: id });
    }
    if (path === "/retrieve") {
      const record = this.requests.get(body.request_id);
      if (!record || record.status !== "FULFILLED") {
        return this.json({ detail: "not fulfilled" }, 403);
      }
      return this.json({ files: record.matched.map((m) => `${body.out_dir}/${m.filename}`) });
    }
    return this.json({ detail: `no such route ${path}` }, 404);
  };
}
