/** Shared DOM builders: case graphs and value rendering. */

import { CaseNode, formatValue } from "./api.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Nested list view of a case: type line, then one row per attribute. */
export function renderCaseNode(node: CaseNode | null): HTMLElement {
  if (node === null) return el("div", "case-graph empty", "(none)");
  const root = el("div", "case-graph");
  root.appendChild(el("div", "case-types", node.types.join(", ")));
  const list = el("ul", "case-attrs");
  for (const [attr, values] of Object.entries(node.attrs ?? {})) {
    const item = el("li", "case-attr");
    item.appendChild(el("span", "attr-name", attr));
    const vals = el("ul", "attr-values");
    for (const v of values) {
      const vi = el("li", "attr-value");
      if (isCaseNode(v)) {
        vi.appendChild(renderCaseNode(v));
      } else {
        vi.textContent = formatValue(v);
      }
      vals.appendChild(vi);
    }
    item.appendChild(vals);
    list.appendChild(item);
  }
  root.appendChild(list);
  return root;
}

function isCaseNode(v: unknown): v is CaseNode {
  return (
    typeof v === "object" && v !== null && "types" in v && "attrs" in v &&
    !("$conclusion" in (v as Record<string, unknown>))
  );
}
