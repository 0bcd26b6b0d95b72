/** Boot: read the agent's config endpoint and mount the matching mode. */

import { PatientAgentApi, WorkbenchApi } from "./api.js";
import { PendingBoard } from "./board.js";
import { h } from "./dom.js";
import { RevokePanel } from "./revoke.js";
import { Workbench } from "./workbench.js";

const fetcher = (url: string, init?: RequestInit) => fetch(url, init);

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const agent = new PatientAgentApi(fetcher);
  const config = await agent.config();
  root.append(h("h1", {}, `consent console - ${config.mode} ${config.principal}`));

  if (config.mode === "patient") {
    const boardHost = h("div", { id: "board" });
    const revokeHost = h("div", { id: "revoke" });
    root.append(boardHost, revokeHost);
    new PendingBoard(boardHost, agent, {
      confirm: (filenames) =>
        window.confirm(`Grant access to:\n${filenames.join("\n")}`),
    }).start();
    new RevokePanel(revokeHost, agent).start();
  } else {
    const host = h("div", { id: "workbench" });
    root.append(host);
    new Workbench(host, new WorkbenchApi(fetcher)).start();
  }
}

void boot();
