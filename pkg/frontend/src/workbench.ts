/**
 * Practitioner workbench: boolean expression composer with live parse
 * feedback (same grammar as the desktop client), patient id field, and a
 * request tracker that exposes a download action only once a request is
 * FULFILLED. Retrieval itself is delegated to the local practitioner agent,
 * which holds the keys.
 */

import { GrantRow, WorkbenchApi } from "./api.js";
import { clear, h } from "./dom.js";
import { AstNode, ParseError, countAtoms, parse, render as renderAst } from "./parser.js";
import { ActionQueue } from "./queue.js";

export interface ParsePreview {
  ok: boolean;
  ast?: AstNode;
  rendered?: string;
  atoms?: number;
  error?: string;
  position?: number | null;
}

export function preview(expression: string): ParsePreview {
  try {
    const ast = parse(expression);
    return { ok: true, ast, rendered: renderAst(ast), atoms: countAtoms(ast) };
  } catch (error) {
    if (error instanceof ParseError) {
      return { ok: false, error: error.message, position: error.position };
    }
    throw error;
  }
}

export class Workbench {
  readonly queue = new ActionQueue();
  rows: GrantRow[] = [];
  lastPreview: ParsePreview = { ok: false, error: "empty expression", position: 0 };
  notice = "";
  private timer: ReturnType<typeof setInterval> | null = null;
  private expressionInput: HTMLInputElement;
  private patientInput: HTMLInputElement;
  private previewBox: HTMLElement;
  private trackerBox: HTMLElement;

  constructor(private container: HTMLElement, private api: WorkbenchApi,
              private pollIntervalMs = 5000) {
    this.expressionInput = h("input", {
      class: "expression", type: "text",
      placeholder: 'e.g. pneumonia OR "covid-19"',
      oninput: () => this.updatePreview(),
    });
    this.patientInput = h("input", {
      class: "patient-id", type: "text", placeholder: "patient id",
    });
    this.previewBox = h("div", { class: "parse-preview" });
    this.trackerBox = h("div", { class: "tracker" });
  }

  start(): void {
    this.mount();
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), this.pollIntervalMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  private mount(): void {
    clear(this.container);
    this.container.append(
      h("h2", {}, "Query workbench"),
      h("div", { class: "composer" },
        this.patientInput,
        this.expressionInput,
        h("button", { class: "submit", onclick: () => this.submit() }, "Submit query"),
      ),
      this.previewBox,
      this.trackerBox,
    );
    this.updatePreview();
    this.renderTracker();
  }

  updatePreview(): void {
    this.lastPreview = preview(this.expressionInput.value);
    clear(this.previewBox);
    if (this.lastPreview.ok) {
      this.previewBox.append(
        h("div", { class: "preview ok" },
          h("code", {}, this.lastPreview.rendered ?? ""),
          h("span", { class: "atoms" }, ` ${this.lastPreview.atoms} atom(s)`)));
    } else {
      const pos = this.lastPreview.position;
      const marker = pos === null || pos === undefined
        ? ""
        : `\n${this.expressionInput.value}\n${" ".repeat(pos)}^`;
      this.previewBox.append(
        h("pre", { class: "preview error" }, `${this.lastPreview.error}${marker}`));
    }
  }

  submit(): void {
    if (!this.lastPreview.ok) return;
    const patientId = this.patientInput.value.trim();
    if (!patientId) {
      this.notice = "patient id required";
      this.renderTracker();
      return;
    }
    const expression = this.expressionInput.value;
    void this.queue.push({
      apply: () => {
        this.notice = "submitting...";
        this.renderTracker();
        return null;
      },
      remote: async () => {
        const { request_id } = await this.api.submit(patientId, expression);
        this.notice = `submitted ${request_id}`;
        await this.refresh();
      },
      revert: () => undefined,
      onError: (error) => {
        this.notice = `submit failed: ${error.message}`;
        this.renderTracker();
      },
    });
  }

  download(requestId: string): void {
    void this.queue.push({
      apply: () => {
        this.notice = `retrieving ${requestId}...`;
        this.renderTracker();
        return null;
      },
      remote: async () => {
        const { files } = await this.api.retrieve(requestId, `retrieved/${requestId}`);
        this.notice = `retrieved ${files.length} file(s)`;
        this.renderTracker();
      },
      revert: () => undefined,
      onError: (error) => {
        this.notice = `retrieve failed: ${error.message}`;
        this.renderTracker();
      },
    });
  }

  async refresh(): Promise<void> {
    try {
      this.rows = await this.api.requests();
    } catch {
      this.notice = "agent unreachable";
    }
    this.renderTracker();
  }

  renderTracker(): void {
    clear(this.trackerBox);
    if (this.notice) this.trackerBox.append(h("p", { class: "notice" }, this.notice));
    const table = h("table", { class: "requests" },
      h("tr", {}, h("th", {}, "request"), h("th", {}, "patient"),
        h("th", {}, "status"), h("th", {}, "")));
    for (const row of this.rows) {
      const cell = h("td", {});
      if (row.status === "FULFILLED") {
        cell.append(h("button", {
          class: "download",
          onclick: () => this.download(row.request_id),
        }, "Download"));
      }
      table.append(h("tr", { "data-request": row.request_id, "data-status": row.status },
        h("td", {}, row.request_id),
        h("td", {}, row.patient_id),
        h("td", {}, h("span", { class: `badge ${row.status.toLowerCase()}` }, row.status)),
        cell));
    }
    this.trackerBox.append(table);
  }
}
