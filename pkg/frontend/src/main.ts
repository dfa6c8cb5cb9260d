/** Page bootstrap: one base-URL setting, console, session driver, tree view. */

import { ApiClient, SessionNotFound } from "./api.js";
import { ConflictView } from "./conflict.js";
import { QueryConsole } from "./console.js";
import { runSession } from "./poll.js";
import { renderRuleTree } from "./ruletree.js";
import { el } from "./render.js";

const BASE_KEY = "okb.baseUrl";

export function mount(root: HTMLElement): void {
  const baseUrl =
    window.localStorage.getItem(BASE_KEY) ?? "http://127.0.0.1:8420";

  const settings = el("div", "settings");
  const baseInput = el("input", "base-url");
  baseInput.value = baseUrl;
  baseInput.addEventListener("change", () => {
    window.localStorage.setItem(BASE_KEY, baseInput.value);
    window.location.reload();
  });
  settings.appendChild(el("label", undefined, "Service URL"));
  settings.appendChild(baseInput);
  root.appendChild(settings);

  const api = new ApiClient(baseUrl);

  const consoleSection = el("div", "panel");
  consoleSection.appendChild(el("h2", undefined, "Query console"));
  consoleSection.appendChild(new QueryConsole(api).root);
  root.appendChild(consoleSection);

  const sessionSection = el("div", "panel");
  sessionSection.appendChild(el("h2", undefined, "Fit session"));
  const sessionInput = el("input", "session-id");
  sessionInput.placeholder = "session id, e.g. s1";
  const startButton = el("button", undefined, "Follow");
  const statusLine = el("div", "session-status");
  const view = new ConflictView(api);
  sessionSection.appendChild(sessionInput);
  sessionSection.appendChild(startButton);
  sessionSection.appendChild(statusLine);
  sessionSection.appendChild(view.root);
  root.appendChild(sessionSection);

  startButton.addEventListener("click", () => {
    const sid = sessionInput.value.trim();
    statusLine.textContent = "polling…";
    runSession(api, sid, (payload) => {
      view.render(payload);
      statusLine.textContent =
        `case ${payload.case_index + 1}: awaiting a differentiating condition`;
      return new Promise((resolve) => {
        view.onResolved = () => resolve();
      });
    }, { onIdle: () => { statusLine.textContent = "idle"; } })
      .then(() => { statusLine.textContent = "session done"; })
      .catch((err) => {
        statusLine.textContent =
          err instanceof SessionNotFound ? `no such session: ${sid}` : String(err);
      });
  });

  const treeSection = el("div", "panel");
  treeSection.appendChild(el("h2", undefined, "Rule trees"));
  const treeInput = el("input", "tree-name");
  treeInput.placeholder = "tree name";
  const treeButton = el("button", undefined, "Load");
  const treeBox = el("div", "tree-box");
  treeButton.addEventListener("click", () => {
    void api.ruleTree(treeInput.value.trim()).then(
      (text) => {
        treeBox.textContent = "";
        treeBox.appendChild(renderRuleTree(text));
      },
      (err) => { treeBox.textContent = String(err); },
    );
  });
  treeSection.appendChild(treeInput);
  treeSection.appendChild(treeButton);
  treeSection.appendChild(treeBox);
  root.appendChild(treeSection);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount(document.getElementById("app")!);
}
