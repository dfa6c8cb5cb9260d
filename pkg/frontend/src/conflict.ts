/**
 * Conflict view: pending case and cornerstone side by side, the fired rule,
 * wrong vs expected conclusion, and a condition editor with live
 * validation. Submit stays disabled until the service has validated the
 * current draft as true on the case and false on the cornerstone; editing
 * the draft revokes the verdict. No optimistic state: every transition is
 * what the service said.
 */

import { ApiClient, ConflictPayload, Verdict, formatValue } from "./api.js";
import { el, renderCaseNode } from "./render.js";

export class ConflictView {
  readonly root: HTMLElement;
  readonly draft: HTMLTextAreaElement;
  readonly conclusion: HTMLInputElement;
  readonly checkButton: HTMLButtonElement;
  readonly submitButton: HTMLButtonElement;
  readonly verdictLine: HTMLElement;
  private payload: ConflictPayload | null = null;
  private validatedText: string | null = null;
  onResolved: (state: string) => void = () => {};

  constructor(private readonly api: ApiClient) {
    this.root = el("section", "conflict-view");
    this.draft = el("textarea", "condition-draft");
    this.draft.rows = 3;
    this.conclusion = el("input", "conclusion-draft");
    this.checkButton = el("button", "check", "Validate");
    this.submitButton = el("button", "submit", "Submit");
    this.submitButton.disabled = true;
    this.verdictLine = el("div", "verdict idle");
    this.draft.addEventListener("input", () => this.draftChanged());
    this.checkButton.addEventListener("click", () => void this.validate());
    this.submitButton.addEventListener("click", () => void this.submit());
  }

  render(payload: ConflictPayload): void {
    this.payload = payload;
    this.validatedText = null;
    this.submitButton.disabled = true;
    this.root.textContent = "";
    this.verdictLine.textContent = "";
    this.verdictLine.className = "verdict idle";

    const head = el("header", "conflict-head");
    head.appendChild(
      el("h2", undefined,
         payload.kind === "new_rule" ? "New rule needed" : "Refinement needed"),
    );
    head.appendChild(
      el("div", "conclusion-diff",
         `${formatValue(payload.wrong_conclusion) || "(nothing)"} ≠ ` +
         `${formatExpected(payload.expected_conclusion)}`),
    );
    this.root.appendChild(head);

    const panes = el("div", "case-panes");
    const casePane = el("div", "pane case-pane");
    casePane.appendChild(el("h3", undefined, "Case"));
    casePane.appendChild(renderCaseNode(payload.case));
    panes.appendChild(casePane);
    const cornerPane = el("div", "pane cornerstone-pane");
    cornerPane.appendChild(el("h3", undefined, "Cornerstone"));
    cornerPane.appendChild(renderCaseNode(payload.cornerstone));
    panes.appendChild(cornerPane);
    this.root.appendChild(panes);

    if (payload.fired_rule) {
      const fired = el("div", "fired-rule");
      fired.appendChild(el("span", "rule-id", payload.fired_rule.id));
      fired.appendChild(el("code", "rule-condition", payload.fired_rule.condition));
      this.root.appendChild(fired);
    }

    const editor = el("div", "editor");
    editor.appendChild(el("label", undefined, "Differentiating condition"));
    editor.appendChild(this.draft);
    editor.appendChild(el("label", undefined, "Conclusion"));
    editor.appendChild(this.conclusion);
    const buttons = el("div", "buttons");
    buttons.appendChild(this.checkButton);
    buttons.appendChild(this.submitButton);
    editor.appendChild(buttons);
    editor.appendChild(this.verdictLine);
    this.root.appendChild(editor);
  }

  private draftChanged(): void {
    // the service verdict applies to the exact validated text only
    if (this.draft.value !== this.validatedText) {
      this.submitButton.disabled = true;
      this.verdictLine.className = "verdict idle";
      this.verdictLine.textContent = "";
    }
  }

  async validate(): Promise<Verdict | null> {
    if (!this.payload) return null;
    const text = this.draft.value;
    const verdict = await this.api.validateCondition(this.payload.session, text);
    this.showVerdict(verdict);
    if (verdict.accepted && this.draft.value === text) {
      this.validatedText = text;
      this.submitButton.disabled = false;
    }
    return verdict;
  }

  async submit(): Promise<Verdict | null> {
    if (!this.payload || this.submitButton.disabled) return null;
    const verdict = await this.api.submitCondition(
      this.payload.session,
      this.draft.value,
      this.conclusion.value || null,
    );
    if (!verdict.accepted) {
      this.showVerdict(verdict);
      this.submitButton.disabled = true;
      this.validatedText = null;
      return verdict;
    }
    this.payload = null;
    this.draft.value = "";
    this.conclusion.value = "";
    this.submitButton.disabled = true;
    this.validatedText = null;
    this.onResolved(verdict.state ?? "idle");
    return verdict;
  }

  private showVerdict(verdict: Verdict): void {
    this.verdictLine.className = `verdict ${verdict.accepted ? "ok" : "rejected"}`;
    if (verdict.accepted) {
      this.verdictLine.textContent = "accepted: true on case, false on cornerstone";
      return;
    }
    const parts: string[] = [verdict.error ?? "rejected"];
    if (verdict.true_on_case !== undefined && verdict.true_on_case !== null) {
      parts.push(`true on case: ${verdict.true_on_case}`);
    }
    if (verdict.true_on_cornerstone !== undefined &&
        verdict.true_on_cornerstone !== null) {
      parts.push(`true on cornerstone: ${verdict.true_on_cornerstone}`);
    }
    this.verdictLine.textContent = parts.join(" — ");
  }
}

function formatExpected(expected: unknown): string {
  if (Array.isArray(expected)) return expected.map(formatValue).join(", ");
  return formatValue(expected) || "(nothing)";
}
