import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { PatientAgentApi } from "../src/api.js";
import { PendingBoard } from "../src/board.js";
import { ScriptedAgent } from "./fixture.js";

function makeBoard(agent: ScriptedAgent,
                   confirm: (names: string[]) => boolean = () => true) {
  const host = document.createElement("div");
  document.body.append(host);
  const board = new PendingBoard(host, new PatientAgentApi(agent.fetcher),
                                 { pollIntervalMs: 5000, confirm });
  return { host, board };
}

const MATCHED = [
  { doc_id: "d0", filename: "scan-a.png" },
  { doc_id: "d1", filename: "scan-b.png" },
];

describe("pending board", () => {
  beforeEach(() => {
    vi.useFakeTimers();
    document.body.innerHTML = "";
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("renders a new request within one poll interval", async () => {
    const agent = new ScriptedAgent();
    const { host, board } = makeBoard(agent);
    board.start();
    await vi.runOnlyPendingTimersAsync();
    expect(host.querySelectorAll(".pending-card").length).toBe(0);

    agent.addPending("dr-adams", MATCHED);
    await vi.advanceTimersByTimeAsync(5000); // exactly one poll interval
    const cards = host.querySelectorAll(".pending-card");
    expect(cards.length).toBe(1);
    expect(cards[0]!.textContent).toContain("dr-adams");
    expect(cards[0]!.textContent).toContain("scan-a.png");
    expect(cards[0]!.textContent).toContain("scan-b.png");
    board.stop();
  });

  it("grant drives the request to FULFILLED and moves the card to history", async () => {
    const agent = new ScriptedAgent();
    const id = agent.addPending("dr-adams", MATCHED);
    const { host, board } = makeBoard(agent);
    board.start();
    await vi.runOnlyPendingTimersAsync();

    (host.querySelector("button.grant") as HTMLButtonElement).click();
    await board.queue.idle;
    expect(agent.status(id)).toBe("FULFILLED");
    expect(host.querySelectorAll(".pending-card").length).toBe(0);
    expect(host.querySelector(".card.decided.granted")).toBeTruthy();
    board.stop();
  });

  it("subset grant confirms exactly the checked filenames", async () => {
    const agent = new ScriptedAgent();
    const id = agent.addPending("dr-adams", MATCHED);
    const confirmed: string[][] = [];
    const { host, board } = makeBoard(agent, (names) => {
      confirmed.push(names);
      return true;
    });
    board.start();
    await vi.runOnlyPendingTimersAsync();

    const boxes = host.querySelectorAll<HTMLInputElement>(".doc-list input");
    boxes[1]!.checked = false; // grant 1 of 2
    (host.querySelector("button.grant") as HTMLButtonElement).click();
    await board.queue.idle;
    expect(confirmed).toEqual([["scan-a.png"]]);
    expect(agent.status(id)).toBe("FULFILLED");
    board.stop();
  });

  it("decline moves the card to history with a DECLINED badge", async () => {
    const agent = new ScriptedAgent();
    const id = agent.addPending("dr-kepler", MATCHED);
    const { host, board } = makeBoard(agent);
    board.start();
    await vi.runOnlyPendingTimersAsync();

    (host.querySelector("button.decline") as HTMLButtonElement).click();
    await board.queue.idle;
    expect(agent.status(id)).toBe("DECLINED");
    const badge = host.querySelector(".card.decided .badge.declined");
    expect(badge?.textContent).toBe("DECLINED");
    board.stop();
  });

  it("reverts the optimistic update when the agent rejects the action", async () => {
    const agent = new ScriptedAgent();
    agent.addPending("dr-adams", MATCHED);
    agent.failNext = "/decline";
    const { host, board } = makeBoard(agent);
    board.start();
    await vi.runOnlyPendingTimersAsync();

    (host.querySelector("button.decline") as HTMLButtonElement).click();
    await board.queue.idle;
    expect(host.querySelectorAll(".pending-card").length).toBe(1);
    expect(host.querySelectorAll(".card.decided").length).toBe(0);
    board.stop();
  });

  it("shows an offline banner and disables actions when the agent is down", async () => {
    const agent = new ScriptedAgent();
    agent.addPending("dr-adams", MATCHED);
    const { host, board } = makeBoard(agent);
    board.start();
    await vi.runOnlyPendingTimersAsync();

    agent.offline = true;
    await vi.advanceTimersByTimeAsync(5000);
    expect(host.querySelector(".banner.offline")).toBeTruthy();
    expect(host.querySelector("button.grant")?.hasAttribute("disabled")).toBe(true);
    board.stop();
  });

  it("hard refresh reproduces the pending board from agent responses", async () => {
    const agent = new ScriptedAgent();
    agent.addPending("dr-adams", MATCHED);
    const first = makeBoard(agent);
    first.board.start();
    await vi.runOnlyPendingTimersAsync();
    const before = first.host.querySelectorAll(".pending-card").length;
    first.board.stop();

    const second = makeBoard(agent); // fresh mount, no carried state
    second.board.start();
    await vi.runOnlyPendingTimersAsync();
    expect(second.host.querySelectorAll(".pending-card").length).toBe(before);
    second.board.stop();
  });
});
