import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { QueryConsole, renderQueryError, renderTable } from "../src/console.js";

describe("QueryConsole", () => {
  it("renders rows as a table with entity labels", async () => {
    const api = {
      query: vi.fn(async () => ({
        columns: ["p"],
        rows: [[{ $entity: { id: "i1", iri: "u:ann" } }],
               [{ $entity: { id: "i2", iri: "u:bob" } }]],
      })),
    } as unknown as ApiClient;
    const console_ = new QueryConsole(api);
    await console_.run("an(entity(p:Person).where(p.age == 20))");
    const cells = [...console_.output.querySelectorAll("td")].map(
      (td) => td.textContent,
    );
    expect(cells).toEqual(["u:ann", "u:bob"]);
    expect(console_.output.textContent).toContain("2 row(s)");
  });

  it("draws a caret under the reported error position", async () => {
    const text = "an(entity(p:Person).where(p.age ==))";
    const api = {
      query: vi.fn(async () => {
        throw new ApiError("expected a literal", 400,
                           { error: "expected a literal", position: 34 });
      }),
    } as unknown as ApiClient;
    const console_ = new QueryConsole(api);
    await console_.run(text);
    const caret = console_.output.querySelector(".caret-block")?.textContent ?? "";
    const lines = caret.split("\n");
    expect(lines[0]).toBe(text);
    expect(lines[1].indexOf("^")).toBe(34);
  });

  it("shows the row count for uniqueness failures", () => {
    const err = new ApiError("'the' requires exactly one result, got 2", 409,
                             { count: 2 });
    const box = renderQueryError("the(entity(p:Person))", err);
    expect(box.querySelector(".error-banner")?.textContent).toContain("(rows: 2)");
    expect(box.querySelector(".caret-block")).toBeNull();
  });

  it("renders an empty table for zero rows", () => {
    const table = renderTable(["a", "b"], []);
    expect(table.querySelectorAll("th").length).toBe(2);
    expect(table.querySelectorAll("td").length).toBe(0);
  });
});
