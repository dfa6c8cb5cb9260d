"""HTTP service: query evaluation, ontology import, materialization, rule
trees, and interactive fitting sessions driven by polling.

A fit session processes its case queue until a conflict needs the expert,
then parks the conflict payload for ``GET .../pending``. The client may
dry-run a draft condition against ``POST .../condition/validate`` (the UI
enables submit only on an accepted draft) and applies it with
``POST .../condition``; an accepted answer resumes the queue. All knowledge
base mutations and session transitions serialize through one lock; queries
evaluate against snapshots.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .eql import evaluate, parse_query
from .eql.evaluate import Evaluator
from .eql.parser import parse_condition
from .errors import (
    BindError,
    ConfigError,
    ExpertAborted,
    ExpertConditionRejected,
    OkbError,
    QuerySyntaxError,
    UniquenessViolation,
)
from .kb import Individual, KnowledgeBase
from .ontology import import_abox, import_tbox, materialize
from .rdr import (
    CASE_VAR,
    CaseQuery,
    ConclusionValue,
    Expert,
    ExpertAnswer,
    RuleTree,
    Target,
    case_from_json,
    case_to_json,
    case_variable,
    classify,
    fit_case,
    load_rule_module,
    save_rule_module,
)


def _json_value(v):
    if isinstance(v, Individual):
        return {"$entity": {"id": v.id, "iri": v.iri}}
    if isinstance(v, ConclusionValue):
        return case_to_json(v)
    if hasattr(v, "name") and not isinstance(v, str):
        return {"$type": v.name}
    if hasattr(v, "types") and hasattr(v, "attrs"):
        return case_to_json(v)
    return v


# --- fit sessions -------------------------------------------------------------------


class _NeedExpert(Exception):
    def __init__(self, request):
        self.request = request


class _ReplayExpert(Expert):
    """Feeds previously accepted answers, then signals for a new one."""

    def __init__(self, answers):
        self.answers = list(answers)

    def prompt(self, request):
        if self.answers:
            return self.answers.pop(0)
        raise _NeedExpert(request)


@dataclass
class FitSession:
    id: str
    tree: RuleTree
    cases: list  # of CaseQuery
    state: str = "idle"  # idle | awaiting_expert | done
    case_index: int = 0
    pending_request: object = None
    accepted_answers: list = field(default_factory=list)  # for the current case
    reports: list = field(default_factory=list)

    def advance(self, kb=None) -> None:
        """Run the queue until a conflict needs the expert or all cases fit.

        Answers consumed by a fit attempt have their rules attached there
        and then; only unconsumed answers stay queued for replay, so a
        later retry never attaches a rule twice.
        """
        while self.case_index < len(self.cases):
            cq = self.cases[self.case_index]
            expert = _ReplayExpert(self.accepted_answers)
            try:
                report = fit_case(self.tree, cq, expert, kb)
            except _NeedExpert as need:
                self.accepted_answers = list(expert.answers)
                self.state = "awaiting_expert"
                self.pending_request = need.request
                return
            except OkbError:
                self.accepted_answers = list(expert.answers)  # drop the bad one
                self.state = "awaiting_expert"
                self.pending_request = None
                raise
            self.reports.append(report)
            self.accepted_answers = []
            self.case_index += 1
            self.state = "idle"
        self.state = "done"
        self.pending_request = None

    def pending_payload(self) -> Optional[dict]:
        req = self.pending_request
        if req is None:
            return None
        return {
            "session": self.id,
            "case_index": self.case_index,
            "kind": req.kind,
            "case": case_to_json(req.case),
            "cornerstone": case_to_json(req.cornerstone)
            if req.cornerstone is not None else None,
            "fired_rule": {
                "id": req.fired_rule.id,
                "condition": req.fired_rule.condition_text,
            } if req.fired_rule is not None else None,
            "wrong_conclusion": _json_value(req.wrong_conclusion)
            if req.wrong_conclusion is not None else None,
            "expected_conclusion": _expected_json(req.expected_conclusion),
            "target": {
                "attribute": req.target.attribute,
                "type": req.target.type_name,
                "mutually_exclusive": req.target.mutually_exclusive,
            },
        }

    def check_condition(self, text: str, kb=None) -> dict:
        """Dry-run verdict for a draft condition against the pending conflict."""
        req = self.pending_request
        if req is None:
            return {"accepted": False, "error": "no pending conflict"}
        try:
            cond = parse_condition(text, {CASE_VAR: case_variable()})
        except OkbError as e:
            return {"accepted": False, "error": str(e),
                    "position": getattr(e, "position", None)}
        true_on_case = Evaluator(kb).holds(cond, {CASE_VAR: req.case})
        true_on_cornerstone = None
        if req.cornerstone is not None:
            true_on_cornerstone = Evaluator(kb).holds(cond, {CASE_VAR: req.cornerstone})
        accepted = true_on_case and not true_on_cornerstone
        return {
            "accepted": accepted,
            "true_on_case": true_on_case,
            "true_on_cornerstone": true_on_cornerstone,
        }

    def submit_condition(self, text: str, conclusion_text: Optional[str],
                         kb=None) -> dict:
        if self.pending_request is None:
            return {"accepted": False, "error": "no pending conflict"}
        answer = ExpertAnswer(text, conclusion_text)
        self.accepted_answers.append(answer)
        self.pending_request = None
        try:
            self.advance(kb)
        except (ExpertConditionRejected, OkbError) as e:
            self.advance_probe(kb)  # re-establish the pending conflict
            return {
                "accepted": False,
                "error": str(e),
                "true_on_case": getattr(e, "true_on_case", None),
                "true_on_cornerstone": getattr(e, "true_on_cornerstone", None),
            }
        return {"accepted": True, "state": self.state}

    def advance_probe(self, kb=None) -> None:
        """Recompute the pending conflict after a rejected answer."""
        try:
            self.advance(kb)
        except OkbError:
            self.pending_request = None


def _expected_json(expected):
    if expected is None:
        return None
    if isinstance(expected, (list, tuple)):
        return [_json_value(v) for v in expected]
    return _json_value(expected)


def parse_case_query(body: dict) -> CaseQuery:
    expected = body.get("expected")
    case = case_from_json(body["case"])
    truth = _parse_expected(expected, case)
    return CaseQuery(
        case,
        body.get("attribute", "label"),
        body.get("type", "Conclusion"),
        body.get("mutually_exclusive", True),
        truth,
    )


def _parse_expected(expected, case):
    from .rdr.engine import instantiate
    from .rdr.module_io import parse_conclusion

    if expected is None:
        return None
    if isinstance(expected, list):
        return [_parse_expected(e, case) for e in expected]
    if isinstance(expected, str):
        expr = parse_conclusion(expected)
        return instantiate(expr, case) if expr is not None else None
    return case_from_json(expected)


# --- the service -----------------------------------------------------------------


@dataclass
class ServeConfig:
    port: int = 8420
    host: str = "127.0.0.1"
    kb_path: Optional[str] = None
    store_url: Optional[str] = None


class OkbService:
    def __init__(self, kb: Optional[KnowledgeBase] = None):
        self.kb = kb or KnowledgeBase()
        self.trees: dict[str, object] = {}
        self.sessions: dict[str, FitSession] = {}
        self.lock = threading.Lock()
        self._session_counter = 0

    # -- handlers (all return (status, payload)) ---------------------------

    def health(self):
        return 200, {"status": "ok", "generation": self.kb.generation}

    def query(self, body):
        text = body.get("text")
        if not isinstance(text, str):
            return 400, {"error": "body needs a 'text' field"}
        snap = self.kb.snapshot()
        try:
            parsed = parse_query(text, snap)
            result = evaluate(parsed, snap)
        except QuerySyntaxError as e:
            return 400, {"error": str(e), "position": e.position,
                         "expected": e.expected}
        except UniquenessViolation as e:
            return 409, {"error": str(e), "count": e.count}
        except OkbError as e:
            return 400, {"error": str(e)}
        return 200, {
            "columns": list(result.columns),
            "rows": [[_json_value(v) for v in row] for row in result.rows],
        }

    def import_ontology(self, body):
        doc = body.get("doc", body)
        with self.lock:
            try:
                created = import_tbox(doc, self.kb)
                individuals = import_abox(doc, self.kb)
            except OkbError as e:
                return 400, {"error": str(e)}
        return 200, {"definitions": len(created), "individuals": individuals}

    def materialize_kb(self, _body):
        with self.lock:
            report = materialize(self.kb)
        return 200, {
            "counts": report.counts,
            "passes": report.passes,
            "statements_before": report.statements_before,
            "statements_after": report.statements_after,
        }

    def create_session(self, body):
        with self.lock:
            self._session_counter += 1
            sid = f"s{self._session_counter}"
            if "module" in body:
                tree = load_rule_module(body["module"])
            else:
                t = body.get("target", {})
                tree = RuleTree(
                    kind=body.get("kind", "sc"),
                    target=Target(
                        t.get("attribute", "label"),
                        t.get("type", "Conclusion"),
                        t.get("mutually_exclusive", True),
                    ),
                )
            cases = [parse_case_query(c) for c in body.get("cases", [])]
            session = FitSession(sid, tree, cases)
            self.sessions[sid] = session
            self.trees[body.get("name", sid)] = tree
            session.advance(self.kb)
        return 200, {"id": sid, "state": session.state}

    def session_state(self, sid):
        session = self.sessions.get(sid)
        if session is None:
            return 404, {"error": f"no session {sid!r}"}
        return 200, {
            "id": sid,
            "state": session.state,
            "case_index": session.case_index,
            "total_cases": len(session.cases),
        }

    def session_pending(self, sid):
        session = self.sessions.get(sid)
        if session is None:
            return 404, {"error": f"no session {sid!r}"}
        payload = session.pending_payload()
        if payload is None:
            return 204, None
        return 200, payload

    def session_condition(self, sid, body, validate_only=False):
        session = self.sessions.get(sid)
        if session is None:
            return 404, {"error": f"no session {sid!r}"}
        text = body.get("eql_text", "")
        with self.lock:
            if validate_only:
                return 200, session.check_condition(text, self.kb)
            result = session.submit_condition(
                text, body.get("conclusion_text"), self.kb
            )
        status = 200 if result.get("accepted") else 422
        return status, result

    def ruletree(self, name):
        tree = self.trees.get(name)
        if tree is None:
            return 404, {"error": f"no rule tree {name!r}"}
        return 200, save_rule_module(tree)

    def trace(self, sid, case_index):
        session = self.sessions.get(sid)
        if session is None:
            return 404, {"error": f"no session {sid!r}"}
        try:
            cq = session.cases[int(case_index)]
        except (IndexError, ValueError):
            return 404, {"error": f"no case {case_index!r}"}
        conclusions, trace = classify(session.tree, cq.case, self.kb)
        return 200, {
            "conclusions": [_json_value(v) for v in conclusions],
            "entries": [
                {
                    "rule": e.rule_id,
                    "fired": e.fired,
                    "conclusion": _json_value(e.conclusion)
                    if e.conclusion is not None else None,
                    "path": list(e.path),
                }
                for e in trace.entries
            ],
        }


# --- HTTP plumbing ---------------------------------------------------------------

_ROUTES = [
    ("GET", re.compile(r"^/health$"), lambda s, m, b: s.health()),
    ("POST", re.compile(r"^/query$"), lambda s, m, b: s.query(b)),
    ("POST", re.compile(r"^/ontology/import$"), lambda s, m, b: s.import_ontology(b)),
    ("POST", re.compile(r"^/materialize$"), lambda s, m, b: s.materialize_kb(b)),
    ("POST", re.compile(r"^/fit/sessions$"), lambda s, m, b: s.create_session(b)),
    ("GET", re.compile(r"^/fit/sessions/([^/]+)$"),
     lambda s, m, b: s.session_state(m.group(1))),
    ("GET", re.compile(r"^/fit/sessions/([^/]+)/pending$"),
     lambda s, m, b: s.session_pending(m.group(1))),
    ("POST", re.compile(r"^/fit/sessions/([^/]+)/condition/validate$"),
     lambda s, m, b: s.session_condition(m.group(1), b, validate_only=True)),
    ("POST", re.compile(r"^/fit/sessions/([^/]+)/condition$"),
     lambda s, m, b: s.session_condition(m.group(1), b)),
    ("GET", re.compile(r"^/ruletree/([^/]+)$"),
     lambda s, m, b: s.ruletree(m.group(1))),
    ("GET", re.compile(r"^/trace/([^/]+)/([^/]+)$"),
     lambda s, m, b: s.trace(m.group(1), m.group(2))),
]


class _Handler(BaseHTTPRequestHandler):
    service: OkbService = None

    def log_message(self, fmt, *args):
        pass  # diagnostics belong to the caller, not stderr noise

    def _dispatch(self, method):
        for verb, pattern, fn in _ROUTES:
            if verb != method:
                continue
            m = pattern.match(self.path)
            if m:
                body = {}
                if method == "POST":
                    length = int(self.headers.get("Content-Length", 0))
                    raw = self.rfile.read(length) if length else b"{}"
                    try:
                        body = json.loads(raw or b"{}")
                    except json.JSONDecodeError as e:
                        return self._send(400, {"error": f"bad JSON: {e}"})
                try:
                    status, payload = fn(self.service, m, body)
                except OkbError as e:
                    return self._send(422, {"error": str(e)})
                return self._send(status, payload)
        self._send(404, {"error": f"no route {method} {self.path}"})

    def _send(self, status, payload):
        if payload is None:
            self.send_response(status)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        if isinstance(payload, str):
            data = payload.encode()
            ctype = "text/plain; charset=utf-8"
        else:
            data = json.dumps(payload).encode()
            ctype = "application/json"
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()


def serve(config: ServeConfig, kb: Optional[KnowledgeBase] = None):
    """Bind and return (server, service); call server.serve_forever() to run."""
    if not (0 <= config.port <= 65535):
        raise ConfigError(f"bad port {config.port}")
    service = OkbService(kb)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    try:
        server = ThreadingHTTPServer((config.host, config.port), handler)
    except OSError as e:
        raise BindError(f"cannot bind {config.host}:{config.port}: {e}") from e
    return server, service
