/**
 * Revoke panel: active grants grouped by practitioner, with one-click
 * revoke-all-per-practitioner and per-grant revoke. Revocation is
 * idempotent server-side; the UI guards double clicks locally too.
 */

import { GrantRow, PatientAgentApi } from "./api.js";
import { clear, h } from "./dom.js";
import { ActionQueue } from "./queue.js";

export class RevokePanel {
  readonly queue = new ActionQueue();
  grants: GrantRow[] = [];
  offline = false;
  private revoking = new Set<string>();
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(private container: HTMLElement, private api: PatientAgentApi,
              private pollIntervalMs = 5000) {}

  start(): void {
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), this.pollIntervalMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  async refresh(): Promise<void> {
    try {
      this.grants = await this.api.grants();
      this.offline = false;
    } catch {
      this.offline = true;
    }
    this.render();
  }

  revokeGrant(requestId: string): void {
    if (this.revoking.has(requestId)) return; // double click is a no-op
    this.revoking.add(requestId);
    const snapshotIndex = this.grants.findIndex((g) => g.request_id === requestId);
    if (snapshotIndex < 0) return;
    const snapshot = this.grants[snapshotIndex]!;
    void this.queue.push({
      apply: () => {
        this.grants = this.grants.filter((g) => g.request_id !== requestId);
        this.render();
        return snapshot;
      },
      remote: () => this.api.revoke({ request_id: requestId }),
      revert: (grant) => {
        this.grants.push(grant);
        this.render();
      },
    });
  }

  revokeAll(practitionerId: string): void {
    const key = `all:${practitionerId}`;
    if (this.revoking.has(key)) return;
    this.revoking.add(key);
    const snapshot = [...this.grants];
    void this.queue.push({
      apply: () => {
        this.grants = this.grants.filter((g) => g.practitioner_id !== practitionerId);
        this.render();
        return snapshot;
      },
      remote: () => this.api.revoke({ practitioner_id: practitionerId }),
      revert: (grants) => {
        this.grants = grants;
        this.render();
      },
    });
  }

  render(): void {
    clear(this.container);
    if (this.offline) {
      this.container.append(h("div", { class: "banner offline" }, "agent unreachable"));
    }
    this.container.append(h("h2", {}, "Active grants"));
    if (this.grants.length === 0) {
      this.container.append(h("p", { class: "empty" }, "no active grants"));
      return;
    }
    const byPractitioner = new Map<string, GrantRow[]>();
    for (const grant of this.grants) {
      const rows = byPractitioner.get(grant.practitioner_id) ?? [];
      rows.push(grant);
      byPractitioner.set(grant.practitioner_id, rows);
    }
    for (const [practitionerId, rows] of byPractitioner) {
      const group = h("section", { class: "grant-group", "data-practitioner": practitionerId },
        h("header", {},
          h("strong", {}, practitionerId),
          h("button", {
            class: "revoke-all",
            onclick: () => this.revokeAll(practitionerId),
          }, `Revoke all (${rows.length})`)));
      for (const row of rows) {
        group.append(h("div", { class: "grant-row", "data-request": row.request_id },
          h("span", {}, `${row.request_id} (${row.status})`),
          h("button", {
            class: "revoke-one",
            onclick: () => this.revokeGrant(row.request_id),
          }, "Revoke")));
      }
      this.container.append(group);
    }
  }
}
