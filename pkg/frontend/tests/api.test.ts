import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, SessionNotFound, formatValue } from "../src/api.js";

function mockFetch(
  responses: { status: number; body?: unknown; text?: string }[],
  calls: { url: string; init?: RequestInit }[] = [],
) {
  return async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const next = responses.shift();
    if (!next) throw new Error("unexpected request " + url);
    const isText = next.text !== undefined;
    return new Response(
      isText ? next.text : next.body === undefined ? null : JSON.stringify(next.body),
      {
        status: next.status,
        headers: isText
          ? { "Content-Type": "text/plain; charset=utf-8" }
          : { "Content-Type": "application/json" },
      },
    );
  };
}

describe("ApiClient", () => {
  it("posts queries and returns rows", async () => {
    const calls: { url: string; init?: RequestInit }[] = [];
    const api = new ApiClient(
      "http://kb",
      mockFetch([{ status: 200, body: { columns: ["p"], rows: [[1]] } }], calls),
    );
    const result = await api.query("an(entity(p:Person))");
    expect(result.rows).toEqual([[1]]);
    expect(calls[0].url).toBe("http://kb/query");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      text: "an(entity(p:Person))",
    });
  });

  it("raises ApiError with position for parse failures", async () => {
    const api = new ApiClient(
      "http://kb",
      mockFetch([
        { status: 400, body: { error: "boom", position: 7, expected: "a literal" } },
      ]),
    );
    const err = await api.query("nope").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.position).toBe(7);
  });

  it("maps 204 pending to null and 404 to SessionNotFound", async () => {
    const api = new ApiClient(
      "http://kb",
      mockFetch([
        { status: 204 },
        { status: 404, body: { error: "no session 'zz'" } },
      ]),
    );
    expect(await api.pending("s1")).toBeNull();
    const err = await api.pending("zz").catch((e) => e);
    expect(err).toBeInstanceOf(SessionNotFound);
  });

  it("turns 422 submissions into rejected verdicts", async () => {
    const api = new ApiClient(
      "http://kb",
      mockFetch([
        {
          status: 422,
          body: { accepted: false, error: "not differentiating",
                  true_on_case: true, true_on_cornerstone: true },
        },
      ]),
    );
    const verdict = await api.submitCondition("s1", "x == 1", null);
    expect(verdict.accepted).toBe(false);
    expect(verdict.true_on_cornerstone).toBe(true);
  });

  it("fetches rule modules as plain text", async () => {
    const api = new ApiClient(
      "http://kb",
      mockFetch([{ status: 200, text: "format_version=1\nkind=sc\n" }]),
    );
    expect(await api.ruleTree("furniture")).toContain("format_version=1");
  });
});

describe("formatValue", () => {
  it("renders entities, types, conclusions and scalars", () => {
    expect(formatValue({ $entity: { id: "i1", iri: "u:ann" } })).toBe("u:ann");
    expect(formatValue({ $entity: { id: "i1", iri: null } })).toBe("i1");
    expect(formatValue({ $type: "Person" })).toBe("Person");
    expect(
      formatValue({ $conclusion: { type: "Door", fields: { size: 2 } } }),
    ).toBe("Door{size=2}");
    expect(formatValue(42)).toBe("42");
  });
});
