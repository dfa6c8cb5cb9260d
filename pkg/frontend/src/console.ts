/**
 * Ad-hoc query console: runs query text against the service and renders
 * the rows as a table. Errors are always shown; a parser error draws a
 * caret under the offending position, and a uniqueness failure reports
 * the row count in the banner.
 */

import { ApiClient, ApiError, formatValue } from "./api.js";
import { el } from "./render.js";

export class QueryConsole {
  readonly root: HTMLElement;
  readonly input: HTMLTextAreaElement;
  readonly runButton: HTMLButtonElement;
  readonly output: HTMLElement;

  constructor(private readonly api: ApiClient) {
    this.root = el("section", "query-console");
    this.input = el("textarea", "query-input");
    this.input.rows = 3;
    this.runButton = el("button", "run", "Run");
    this.output = el("div", "query-output");
    this.runButton.addEventListener("click", () => void this.run(this.input.value));
    this.root.appendChild(this.input);
    this.root.appendChild(this.runButton);
    this.root.appendChild(this.output);
  }

  async run(text: string): Promise<void> {
    this.output.textContent = "";
    try {
      const result = await this.api.query(text);
      this.output.appendChild(renderTable(result.columns, result.rows));
    } catch (err) {
      if (err instanceof ApiError) {
        this.output.appendChild(renderQueryError(text, err));
        return;
      }
      throw err;
    }
  }
}

export function renderTable(columns: string[], rows: unknown[][]): HTMLElement {
  const table = el("table", "result-table");
  const thead = el("thead");
  const headRow = el("tr");
  for (const c of columns) headRow.appendChild(el("th", undefined, c));
  thead.appendChild(headRow);
  table.appendChild(thead);
  const tbody = el("tbody");
  for (const row of rows) {
    const tr = el("tr");
    for (const v of row) tr.appendChild(el("td", undefined, formatValue(v)));
    tbody.appendChild(tr);
  }
  table.appendChild(tbody);
  const wrapper = el("div", "result");
  wrapper.appendChild(el("div", "result-count", `${rows.length} row(s)`));
  wrapper.appendChild(table);
  return wrapper;
}

export function renderQueryError(text: string, err: ApiError): HTMLElement {
  const box = el("div", "query-error");
  let banner = err.message;
  if (err.count !== null) banner += ` (rows: ${err.count})`;
  box.appendChild(el("div", "error-banner", banner));
  if (err.position !== null) {
    const caretBlock = el("pre", "caret-block");
    caretBlock.textContent = `${text}\n${" ".repeat(err.position)}^`;
    box.appendChild(caretBlock);
  }
  return box;
}
