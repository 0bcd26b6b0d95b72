/**
 * Patient pending board: one card per request awaiting consent, with
 * per-document checkboxes for subset grants, grant/decline actions, and a
 * session history of decided requests. Polls the agent and reconciles;
 * everything rendered is reconstructable from agent responses.
 */

import { MatchedDoc, PatientAgentApi, PendingRequest } from "./api.js";
import { clear, h } from "./dom.js";
import { ActionQueue } from "./queue.js";

export interface DecidedCard {
  request: PendingRequest;
  decision: "GRANTED" | "DECLINED";
}

export interface BoardOptions {
  pollIntervalMs?: number;
  /** Confirmation hook for subset grants; returns true to proceed. Tests and
   * the default UI list exactly the filenames being granted. */
  confirm?: (filenames: string[]) => boolean;
}

export class PendingBoard {
  readonly queue = new ActionQueue();
  pending: PendingRequest[] = [];
  history: DecidedCard[] = [];
  offline = false;
  lastError = "";
  private timer: ReturnType<typeof setInterval> | null = null;
  private interval: number;
  private confirmFn: (filenames: string[]) => boolean;

  constructor(private container: HTMLElement, private api: PatientAgentApi,
              options: BoardOptions = {}) {
    this.interval = options.pollIntervalMs ?? 5000;
    this.confirmFn = options.confirm ?? (() => true);
  }

  start(): void {
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), this.interval);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  async refresh(): Promise<void> {
    try {
      const pending = await this.api.pending();
      const decided = new Set(this.history.map((c) => c.request.request_id));
      this.pending = pending.filter((p) => !decided.has(p.request_id));
      this.offline = false;
    } catch (error) {
      this.offline = true;
      this.lastError = (error as Error).message;
    }
    this.render();
  }

  grant(requestId: string, docIds: string[]): void {
    const card = this.pending.find((p) => p.request_id === requestId);
    if (!card) return;
    const filenames = card.matched
      .filter((m) => docIds.includes(m.doc_id))
      .map((m) => m.filename);
    if (!this.confirmFn(filenames)) return;
    this.decide(card, "GRANTED", () => this.api.grant(requestId, docIds));
  }

  decline(requestId: string): void {
    const card = this.pending.find((p) => p.request_id === requestId);
    if (!card) return;
    this.decide(card, "DECLINED", () => this.api.decline(requestId));
  }

  private decide(card: PendingRequest, decision: DecidedCard["decision"],
                 remote: () => Promise<unknown>): void {
    void this.queue.push({
      apply: () => {
        this.pending = this.pending.filter((p) => p.request_id !== card.request_id);
        this.history.unshift({ request: card, decision });
        this.render();
        return card;
      },
      remote,
      revert: (snapshot) => {
        this.history = this.history.filter(
          (c) => c.request.request_id !== snapshot.request_id);
        this.pending.unshift(snapshot);
        this.render();
      },
      onError: (error) => {
        this.lastError = error.message;
        this.render();
      },
    });
  }

  private card(request: PendingRequest): HTMLElement {
    const boxes = new Map<string, HTMLInputElement>();
    const docList = h("ul", { class: "doc-list" },
      ...request.matched.map((doc: MatchedDoc) => {
        const box = h("input", { type: "checkbox", checked: "checked" });
        box.checked = true;
        boxes.set(doc.doc_id, box);
        return h("li", {}, h("label", {}, box, ` ${doc.filename}`));
      }));
    const selected = () =>
      request.matched.filter((d) => boxes.get(d.doc_id)?.checked).map((d) => d.doc_id);
    const grantBtn = h("button", {
      class: "grant",
      onclick: () => this.grant(request.request_id, selected()),
    }, "Grant selected");
    const declineBtn = h("button", {
      class: "decline",
      onclick: () => this.decline(request.request_id),
    }, "Decline");
    if (this.offline) {
      grantBtn.setAttribute("disabled", "disabled");
      declineBtn.setAttribute("disabled", "disabled");
    }
    return h("section", { class: "card pending-card", "data-request": request.request_id },
      h("header", {},
        h("strong", {}, request.practitioner_id),
        h("span", { class: "when" }, ` asked at ${request.submitted_at}`)),
      request.matched.length
        ? docList
        : h("p", { class: "empty" }, "no documents matched this query"),
      h("footer", {}, grantBtn, declineBtn));
  }

  render(): void {
    clear(this.container);
    if (this.offline) {
      this.container.append(h("div", { class: "banner offline" },
        `agent unreachable: ${this.lastError}`));
    }
    const pendingWrap = h("div", { class: "pending" },
      h("h2", {}, `Pending requests (${this.pending.length})`));
    if (this.pending.length === 0) {
      pendingWrap.append(h("p", { class: "empty" }, "nothing waiting for your consent"));
    }
    for (const request of this.pending) pendingWrap.append(this.card(request));
    const historyWrap = h("div", { class: "history" }, h("h2", {}, "History"));
    for (const { request, decision } of this.history) {
      historyWrap.append(h("section",
        { class: `card decided ${decision.toLowerCase()}`, "data-request": request.request_id },
        h("strong", {}, request.practitioner_id),
        h("span", { class: `badge ${decision.toLowerCase()}` }, decision)));
    }
    this.container.append(pendingWrap, historyWrap);
  }
}
