"""Command-line entry points.

Machine-readable output goes to stdout, diagnostics to stderr. The
knowledge base lives in a JSON state file between invocations (--kb); the
relational store is a sqlite file (--store). Exit codes: 0 success, 1
engine error, 2 usage, 3 benchmark disagreement.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys

from . import bench as bench_mod
from .errors import OkbError, QuerySyntaxError
from .eql import evaluate, parse_query
from .kb import Individual, KnowledgeBase
from .ontology import (
    import_abox,
    import_tbox,
    load_state,
    materialize,
    parse_ntriples,
    resolve_ntriples_names,
    save_state,
    statement_count,
)
from .orm import SqliteStore, derive_schema, export_tabular, load_graph, save_graph
from .rdr import (
    ConsoleExpert,
    RuleTree,
    ScriptedExpert,
    Target,
    fit_case,
    load_rule_module,
    save_rule_module,
)
from .service import ServeConfig, parse_case_query, serve


def _load_kb(path: str) -> KnowledgeBase:
    with open(path, "r", encoding="utf-8") as fh:
        return load_state(json.load(fh))


def _write_kb(kb: KnowledgeBase, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(save_state(kb), fh, sort_keys=True, indent=1)
        fh.write("\n")


def _emit(payload, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        if isinstance(payload, dict):
            for k, v in payload.items():
                print(f"{k}: {v}")
        else:
            print(payload)


def cmd_import(args) -> int:
    try:
        kb = _load_kb(args.kb)
    except FileNotFoundError:
        kb = KnowledgeBase()
    with open(args.doc, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    created = import_tbox(doc, kb)
    individuals = import_abox(doc, kb)
    if args.ntriples:
        with open(args.ntriples, "r", encoding="utf-8") as fh:
            extra = resolve_ntriples_names(parse_ntriples(fh.read()), kb)
        individuals += import_abox(extra, kb)
    _write_kb(kb, args.kb)
    _emit(
        {"definitions": len(created), "individuals": individuals,
         "statements": statement_count(kb)},
        args.format,
    )
    return 0


def cmd_materialize(args) -> int:
    kb = _load_kb(args.kb)
    report = materialize(kb)
    _write_kb(kb, args.kb)
    _emit(
        {"counts": report.counts, "passes": report.passes,
         "statements_before": report.statements_before,
         "statements_after": report.statements_after},
        args.format,
    )
    return 0


def _row_json(v):
    from .service import _json_value  # one value encoding for HTTP and CLI

    return _json_value(v)


def cmd_query(args) -> int:
    kb = _load_kb(args.kb)
    snap = kb.snapshot()
    result = evaluate(parse_query(args.text, snap), snap)
    if args.format == "json":
        print(json.dumps({
            "columns": list(result.columns),
            "rows": [[_row_json(v) for v in row] for row in result.rows],
        }, sort_keys=True))
    else:
        print("\t".join(result.columns))
        for row in result.rows:
            print("\t".join(
                v.iri or v.id if isinstance(v, Individual) else str(v) for v in row
            ))
    return 0


def cmd_fit(args) -> int:
    if args.module:
        with open(args.module, "r", encoding="utf-8") as fh:
            tree = load_rule_module(fh.read())
    else:
        tree = RuleTree(
            kind=args.kind,
            target=Target(args.target, args.type, args.kind == "sc"),
        )
    with open(args.cases, "r", encoding="utf-8") as fh:
        cases = [parse_case_query(c) for c in json.load(fh)]
    if args.interactive:
        expert = ConsoleExpert()
    else:
        if not args.answers:
            print(json.dumps({"error": "--answers or --interactive required"}),
                  file=sys.stderr)
            return 2
        with open(args.answers, "r", encoding="utf-8") as fh:
            answers = [
                (a["condition"], a.get("conclusion")) for a in json.load(fh)
            ]
        expert = ScriptedExpert(answers)
    kb = _load_kb(args.kb) if args.kb else None
    changed = 0
    for cq in cases:
        report = fit_case(tree, cq, expert, kb)
        changed += 1 if report.changed else 0
    module_text = save_rule_module(tree)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(module_text)
    _emit({"cases": len(cases), "changed": changed, "module": args.out}, args.format)
    return 0


def cmd_save(args) -> int:
    kb = _load_kb(args.kb)
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = SqliteStore(args.store)
    store.create_schema(schema)
    id_map = save_graph(list(kb.individuals.values()), store, schema, kb)
    if args.ddl:
        with open(args.ddl, "w", encoding="utf-8") as fh:
            fh.write(schema.ddl())
    _emit({"persisted": len(id_map), "store": args.store}, args.format)
    return 0


def cmd_load(args) -> int:
    kb = _load_kb(args.kb)
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = SqliteStore(args.store)
    store.schema = schema
    if args.format == "csv":
        sys.stdout.write(export_tabular(store, schema, kb, args.cls))
        return 0
    individuals = load_graph(store, schema, kb, args.cls)
    payload = [
        {
            "id": i.id,
            "iri": i.iri,
            "types": sorted(c.name for c in i.declared_types),
            "roles": sorted(b.role_class.name for b in i.role_bindings),
        }
        for i in individuals
    ]
    print(json.dumps({"class": args.cls, "count": len(payload),
                      "individuals": payload}, sort_keys=True))
    return 0


def cmd_bench(args) -> int:
    params = bench_mod.PERF_PARAMS if args.profile == "perf" else bench_mod.GenParams()
    kb, store, schema = bench_mod.prepare(params, seed=args.seed)
    report = bench_mod.run_suite(kb, store, schema, runs=args.runs)
    if args.format == "json":
        sys.stdout.write(report.to_json_lines())
    else:
        sys.stdout.write(report.to_table())
    if not report.all_agree:
        print("backends disagree", file=sys.stderr)
        return 3
    return 0


def cmd_serve(args) -> int:
    kb = _load_kb(args.kb) if args.kb else None
    server, _service = serve(ServeConfig(port=args.port, host=args.host), kb)
    host, port = server.server_address[:2]
    print(json.dumps({"listening": f"http://{host}:{port}"}), flush=True)

    def shutdown(_sig, _frame):
        raise KeyboardInterrupt

    signal.signal(signal.SIGTERM, shutdown)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="okb",
        description="object-native knowledge base: query, rules, import, persistence",
    )
    parser.add_argument("--format", choices=("json", "table", "csv"), default="json")
    # SUPPRESS keeps a pre-subcommand --format from being clobbered
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format", choices=("json", "table", "csv"), default=argparse.SUPPRESS
    )
    sub = parser.add_subparsers(dest="command", parser_class=argparse.ArgumentParser)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("import", help="load an ontology document into a kb file")
    p.add_argument("doc")
    p.add_argument("--kb", required=True)
    p.add_argument("--ntriples", help="extra assertional data in N-Triples subset")
    p.set_defaults(fn=cmd_import)

    p = add_parser("materialize", help="forward chain and classify the kb")
    p.add_argument("--kb", required=True)
    p.set_defaults(fn=cmd_materialize)

    p = add_parser("query", help="evaluate a query against the kb")
    p.add_argument("text")
    p.add_argument("--kb", required=True)
    p.set_defaults(fn=cmd_query)

    p = add_parser("fit", help="fit rule-tree cases with a scripted expert")
    p.add_argument("--module", help="existing rule module to extend")
    p.add_argument("--target", default="label")
    p.add_argument("--type", default="Conclusion")
    p.add_argument("--kind", choices=("sc", "mc"), default="sc")
    p.add_argument("--cases", required=True)
    p.add_argument("--answers")
    p.add_argument("--interactive", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--kb")
    p.set_defaults(fn=cmd_fit)

    p = add_parser("save", help="persist the kb object graph to a store")
    p.add_argument("--kb", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--ddl", help="also write the schema DDL here")
    p.set_defaults(fn=cmd_save)

    p = add_parser("load", help="reconstruct or export objects from a store")
    p.add_argument("--kb", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--class", dest="cls", required=True)
    p.set_defaults(fn=cmd_load)

    p = add_parser("bench", help="run the evaluation suite")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--profile", choices=("small", "perf"), default="small")
    p.set_defaults(fn=cmd_bench)

    p = add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8420)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--kb")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "fn", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.fn(args)
    except QuerySyntaxError as e:
        print(json.dumps({"error": str(e), "position": e.position,
                          "expected": e.expected}), file=sys.stderr)
        return 1
    except OkbError as e:
        print(json.dumps({"error": str(e), "kind": type(e).__name__}),
              file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
