/**
 * Rule-tree browser: parses the portable module text (presentation only;
 * evaluation stays on the service) and renders collapsible nested lists
 * with except/alternative/refinement edge labels.
 */

import { el } from "./render.js";

export interface ModuleRule {
  id: string;
  parent: string | null;
  slot: "except" | "alt" | "refine" | null;
  condition: string;
  conclusion: string;
  children: ModuleRule[];
}

export interface ModuleTreeSection {
  header: Record<string, string>;
  root: ModuleRule | null;
}

const RULE_LINE =
  /^rule (\S+)(?: parent=(\S+) slot=(except|alt|refine))? when (.*) conclude (.*)$/;

export function parseModule(text: string): ModuleTreeSection[] {
  const sections: ModuleTreeSection[] = [{ header: {}, root: null }];
  const byId: Map<string, ModuleRule>[] = [new Map()];
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (!line) continue;
    if (line.startsWith("tree ")) {
      const header: Record<string, string> = {};
      for (const part of line.slice(5).split(" ")) {
        const [k, v] = part.split("=");
        if (k && v !== undefined) header[k] = v;
      }
      sections.push({ header, root: null });
      byId.push(new Map());
      continue;
    }
    const m = RULE_LINE.exec(line);
    if (m) {
      const rule: ModuleRule = {
        id: m[1],
        parent: m[2] ?? null,
        slot: (m[3] as ModuleRule["slot"]) ?? null,
        condition: m[4],
        conclusion: m[5],
        children: [],
      };
      const section = sections[sections.length - 1];
      const ids = byId[byId.length - 1];
      ids.set(rule.id, rule);
      if (rule.parent === null) {
        section.root = rule;
      } else {
        ids.get(rule.parent)?.children.push(rule);
      }
      continue;
    }
    const sep = line.indexOf("=");
    if (sep > 0) {
      sections[0].header[line.slice(0, sep)] = line.slice(sep + 1);
    }
  }
  return sections.filter((s) => s.root !== null || Object.keys(s.header).length > 0);
}

export function renderRuleTree(text: string): HTMLElement {
  const box = el("div", "rule-tree");
  for (const section of parseModule(text)) {
    if (Object.keys(section.header).length > 0) {
      const headerText = Object.entries(section.header)
        .map(([k, v]) => `${k}=${v}`)
        .join(" ");
      box.appendChild(el("div", "tree-header", headerText));
    }
    if (section.root) box.appendChild(renderRule(section.root));
  }
  return box;
}

function renderRule(rule: ModuleRule): HTMLElement {
  const details = el("details", "rule");
  details.setAttribute("open", "");
  const summary = el("summary");
  if (rule.slot) summary.appendChild(el("span", `edge edge-${rule.slot}`, rule.slot));
  summary.appendChild(el("span", "rule-id", rule.id));
  summary.appendChild(el("code", "rule-when", rule.condition));
  summary.appendChild(el("span", "rule-arrow", "⇒"));
  summary.appendChild(el("code", "rule-conclude", rule.conclusion));
  details.appendChild(summary);
  if (rule.children.length > 0) {
    const kids = el("ul", "rule-children");
    for (const child of rule.children) {
      const li = el("li");
      li.appendChild(renderRule(child));
      kids.appendChild(li);
    }
    details.appendChild(kids);
  }
  return details;
}
