"""Textual query grammar: tokenizer, recursive-descent parser, static checks.

    query  := proc "(" desc ["," path] ")"          # path arg for sum only
    proc   := "a" | "an" | "the" | "count" | "sum"
    desc   := ("entity" "(" var ")" | "set_of" "(" var ("," var)* ")")
              [".where(" cond ("," cond)* ")"]
    var    := ident ":" ClassName
            | ident "in" "[" literal ("," literal)* "]"
            | ident "in" path
    cond   := "or(" cond ("," cond)+ ")" | "and(" cond* ")" | "not(" cond ")"
            | "exists(" var "," cond ")" | "for_all(" var "," cond ")"
            | "contains(" path "," operand ")"
            | "count(" [ident "in"] path ["where" cond] ")" cmp literal
            | "sum(" path ")" cmp literal
            | operand cmp operand
    path   := ident ("." ident | "[" int "]")*

Comments run from ``#`` to end of line; input is UTF-8. Entity literals are
written ``@id`` or ``@"quoted id"``. When a knowledge base is supplied,
class names and attribute paths are checked statically; without one, class
names stay symbolic (capitalized identifiers).
"""

from __future__ import annotations

import json

from ..errors import QuerySyntaxError, UnknownAttribute, UnknownClass
from ..kb import ClassDef, PropertyDef, ScalarKind
from .ast import (
    AggregateCompare,
    And,
    Attr,
    ClassRef,
    Compare,
    Contains,
    EntityRef,
    Exists,
    ForAll,
    Index,
    Lit,
    Not,
    Or,
    Path,
    Query,
    Variable,
)

_KEYWORD_CONDS = ("or", "and", "not", "exists", "for_all", "contains")
_SYMBOLS = ("==", "!=", "<=", ">=", "<", ">", "(", ")", "[", "]", ",", ":", ".", "@",
            "{", "}", "=")  # braces and bare '=' serve rule-module conclusions
_CMP = ("==", "!=", "<=", ">=", "<", ">")


class _Token:
    __slots__ = ("kind", "value", "pos")

    def __init__(self, kind, value, pos):
        self.kind = kind
        self.value = value
        self.pos = pos

    def __repr__(self):
        return f"{self.kind}:{self.value!r}@{self.pos}"


def _tokenize(text: str) -> list:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    esc = text[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                raise QuerySyntaxError(i, "closing quote")
            tokens.append(_Token("string", "".join(buf), i))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            is_float = False
            while j < n and (text[j].isdigit() or text[j] == "."):
                if text[j] == ".":
                    # a trailing ".ident" is a path step, not a decimal point
                    if j + 1 < n and text[j + 1].isdigit():
                        is_float = True
                    else:
                        break
                j += 1
            lit = text[i:j]
            tokens.append(
                _Token("float" if is_float else "int",
                       float(lit) if is_float else int(lit), i)
            )
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], i))
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(_Token(sym, sym, i))
                i += len(sym)
                break
        else:
            raise QuerySyntaxError(i, "a token", text[i])
    tokens.append(_Token("eof", None, n))
    return tokens


class _Parser:
    def __init__(self, text: str, kb=None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.kb = kb
        self.scope: dict[str, Variable] = {}

    # -- token plumbing ---------------------------------------------------

    def peek(self, ahead=0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise QuerySyntaxError(tok.pos, repr(kind), str(tok.value))
        return self.next()

    def expect_ident(self, word=None) -> str:
        tok = self.expect("ident")
        if word is not None and tok.value != word:
            raise QuerySyntaxError(tok.pos, repr(word), tok.value)
        return tok.value

    # -- grammar ------------------------------------------------------------

    def parse_query(self) -> Query:
        tok = self.expect("ident")
        if tok.value not in ("a", "an", "the", "count", "sum"):
            raise QuerySyntaxError(tok.pos, "a/an/the/count/sum", tok.value)
        proc = tok.value
        self.expect("(")
        descriptor, variables, where = self.parse_descriptor()
        sum_path = None
        if proc == "sum":
            self.expect(",")
            sum_path = self.parse_path()
        self.expect(")")
        self.expect("eof")
        query = Query(proc, descriptor, tuple(variables), where, sum_path)
        if self.kb is not None:
            validate_static(query, self.kb)
        return query

    def parse_descriptor(self):
        tok = self.expect("ident")
        if tok.value not in ("entity", "set_of"):
            raise QuerySyntaxError(tok.pos, "entity or set_of", tok.value)
        descriptor = tok.value
        self.expect("(")
        variables = [self.parse_vardecl()]
        while self.peek().kind == ",":
            self.next()
            variables.append(self.parse_vardecl())
        self.expect(")")
        if descriptor == "entity" and len(variables) != 1:
            raise QuerySyntaxError(tok.pos, "exactly one variable in entity()")
        where = And(())
        if self.peek().kind == ".":
            self.next()
            self.expect_ident("where")
            self.expect("(")
            conds = [self.parse_cond()]
            while self.peek().kind == ",":
                self.next()
                conds.append(self.parse_cond())
            self.expect(")")
            where = And(tuple(conds))
        return descriptor, variables, where

    def parse_vardecl(self) -> Variable:
        tok = self.expect("ident")
        name = tok.value
        if name in self.scope:
            raise QuerySyntaxError(tok.pos, f"fresh variable name (not {name!r})")
        nxt = self.peek()
        if nxt.kind == ":":
            self.next()
            cls_tok = self.expect("ident")
            var = Variable(name, type=self.resolve_class(cls_tok))
        elif nxt.kind == "ident" and nxt.value == "in":
            self.next()
            if self.peek().kind == "[":
                self.next()
                values = []
                if self.peek().kind != "]":
                    values.append(self.parse_literal().value)
                    while self.peek().kind == ",":
                        self.next()
                        values.append(self.parse_literal().value)
                self.expect("]")
                var = Variable(name, explicit_domain=tuple(values))
            else:
                # domain is a path over an already-declared variable
                var = Variable(name, domain_path=self.parse_path())
        else:
            raise QuerySyntaxError(nxt.pos, "':' or 'in'", str(nxt.value))
        self.scope[name] = var
        return var

    def parse_cond(self):
        tok = self.peek()
        if tok.kind == "ident" and self.peek(1).kind == "(":
            word = tok.value
            if word in _KEYWORD_CONDS:
                return self._keyword_cond(word)
            if word in ("count", "sum"):
                return self._aggregate_cond(word)
        lhs = self.parse_operand()
        op = self._cmp_op()
        rhs = self.parse_operand()
        return Compare(lhs, op, rhs)

    def _cmp_op(self) -> str:
        tok = self.peek()
        if tok.kind not in _CMP:
            raise QuerySyntaxError(tok.pos, "comparison operator", str(tok.value))
        self.next()
        return tok.kind

    def _keyword_cond(self, word: str):
        self.next()
        self.expect("(")
        if word == "not":
            cond = self.parse_cond()
            self.expect(")")
            return Not(cond)
        if word in ("or", "and"):
            conds = [self.parse_cond()]
            while self.peek().kind == ",":
                self.next()
                conds.append(self.parse_cond())
            self.expect(")")
            if word == "or" and len(conds) < 2:
                raise QuerySyntaxError(self.peek().pos, "at least two disjuncts")
            return Or(tuple(conds)) if word == "or" else And(tuple(conds))
        if word in ("exists", "for_all"):
            var = self.parse_vardecl()
            self.expect(",")
            cond = self.parse_cond()
            self.expect(")")
            del self.scope[var.id]
            return Exists(var, cond) if word == "exists" else ForAll(var, cond)
        # contains
        collection = self.parse_path()
        self.expect(",")
        element = self.parse_operand()
        self.expect(")")
        return Contains(collection, element)

    def _aggregate_cond(self, agg: str):
        self.next()
        self.expect("(")
        qual_var = qual_cond = None
        if (
            agg == "count"
            and self.peek().kind == "ident"
            and self.peek(1).kind == "ident"
            and self.peek(1).value == "in"
        ):
            qual_var = self.parse_vardecl()
            path = qual_var.domain_path
            if path is None:
                raise QuerySyntaxError(
                    self.peek().pos, "a path domain for the counted variable"
                )
            self.expect_ident("where")
            qual_cond = self.parse_cond()
            del self.scope[qual_var.id]
        else:
            path = self.parse_path()
        self.expect(")")
        op = self._cmp_op()
        lit = self.parse_literal()
        if qual_var is not None:
            qual_var = Variable(qual_var.id)  # candidates come from the path itself
        return AggregateCompare(agg, path, op, lit, qual_var, qual_cond)

    def parse_operand(self):
        tok = self.peek()
        if tok.kind == "ident":
            if tok.value in self.scope or self._starts_vardecl():
                return self.parse_path()
            if tok.value not in ("true", "false"):
                if self.peek(1).kind in (".", "["):
                    raise QuerySyntaxError(tok.pos, "a declared variable", tok.value)
                return self._class_literal()
        return self.parse_literal()

    def _starts_vardecl(self) -> bool:
        nxt = self.peek(1)
        return nxt.kind == ":" or (nxt.kind == "ident" and nxt.value == "in")

    def _class_literal(self) -> Lit:
        tok = self.next()
        name = tok.value
        if self.kb is not None:
            if name not in self.kb.classes:
                raise UnknownClass(
                    f"at position {tok.pos}: {name!r} is neither a declared "
                    f"variable nor a known class"
                )
        elif not name[0].isupper():
            raise QuerySyntaxError(tok.pos, "a declared variable", name)
        return Lit(ClassRef(name))

    def parse_path(self) -> Path:
        tok = self.peek()
        if tok.kind == "ident" and tok.value not in self.scope and self._starts_vardecl():
            var = self.parse_vardecl()  # inline declaration at first occurrence
        else:
            tok = self.expect("ident")
            var = self.scope.get(tok.value)
            if var is None:
                raise QuerySyntaxError(tok.pos, "a declared variable", tok.value)
        path = Path(var)
        while True:
            nxt = self.peek()
            if nxt.kind == ".":
                # ".where" belongs to the descriptor, not the path
                if self.peek(1).kind == "ident" and self.peek(1).value == "where":
                    break
                self.next()
                attr = self.expect("ident")
                path = path.child(Attr(attr.value))
            elif nxt.kind == "[":
                self.next()
                idx = self.expect("int")
                self.expect("]")
                path = path.child(Index(idx.value))
            else:
                break
        return path

    def parse_literal(self) -> Lit:
        tok = self.peek()
        if tok.kind in ("int", "float", "string"):
            self.next()
            return Lit(tok.value)
        if tok.kind == "ident" and tok.value in ("true", "false"):
            self.next()
            return Lit(tok.value == "true")
        if tok.kind == "@":
            self.next()
            ref = self.peek()
            if ref.kind in ("ident", "string"):
                self.next()
                return Lit(EntityRef(str(ref.value)))
            raise QuerySyntaxError(ref.pos, "an entity reference after '@'")
        if tok.kind == "ident":
            return self._class_literal()
        raise QuerySyntaxError(tok.pos, "a literal", str(tok.value))

    def resolve_class(self, tok: _Token) -> ClassRef:
        name = tok.value
        if self.kb is not None and name not in self.kb.classes:
            raise UnknownClass(f"at position {tok.pos}: unknown class {name!r}")
        return ClassRef(name)


def parse_query(text: str, kb=None) -> Query:
    """Parse query text; with a kb, class names and paths are checked."""
    return _Parser(text, kb).parse_query()


def parse_condition(text: str, scope: dict, kb=None):
    """Parse a bare condition with pre-declared variables in scope.

    Used by the rule engine, whose conditions close over a case variable.
    """
    p = _Parser(text, kb)
    p.scope = dict(scope)
    cond = p.parse_cond()
    p.expect("eof")
    return cond


# --- static validation -------------------------------------------------------


def validate_static(query: Query, kb) -> None:
    for var in query.variables:
        _validate_var(var, kb)
    _validate_cond(query.where, kb, {v.id: v for v in query.variables})
    if query.sum_path is not None:
        _validate_path(query.sum_path, kb)


def _validate_var(var: Variable, kb) -> None:
    if var.type is None and var.explicit_domain is None and var.domain_path is None:
        raise UnknownClass(f"variable {var.id!r} has no type or domain")
    if var.type is not None:
        kb.get_class(getattr(var.type, "name", var.type))
    if var.domain_path is not None:
        _validate_path(var.domain_path, kb)


def _validate_cond(cond, kb, scope: dict) -> None:
    from .ast import free_vars  # local to avoid cycle noise

    for _ in (free_vars(cond),):
        pass
    stack = [cond]
    while stack:
        node = stack.pop()
        if isinstance(node, Compare):
            for side in (node.lhs, node.rhs):
                if isinstance(side, Path):
                    _validate_path(side, kb)
        elif isinstance(node, Contains):
            _validate_path(node.collection, kb)
            if isinstance(node.element, Path):
                _validate_path(node.element, kb)
        elif isinstance(node, (Exists, ForAll)):
            _validate_var(node.var, kb)
            stack.append(node.cond)
        elif isinstance(node, Not):
            stack.append(node.cond)
        elif isinstance(node, (Or, And)):
            stack.extend(node.conds)
        elif isinstance(node, AggregateCompare):
            _validate_path(node.path, kb)
            if node.qual_cond is not None:
                stack.append(node.qual_cond)


def _validate_path(path: Path, kb) -> None:
    """Reject paths that can never resolve given the root's static type."""
    var = path.root
    if var.type is None:
        return  # domain variables carry no static class info
    current = kb.get_class(getattr(var.type, "name", var.type))
    for step in path.steps:
        if isinstance(step, Index):
            continue
        if current is None:
            raise UnknownAttribute(
                f"path step {step.name!r} after a scalar or type value"
            )
        current = _step_range(current, step.name, kb)


def _step_range(cls: ClassDef, name: str, kb):
    """Static range of an attribute step; None marks scalar/opaque values."""
    if name in ("id", "iri", "types"):
        return None
    prop = kb.properties.get(name)
    if prop is not None and _domain_compatible(prop, cls):
        return prop.range if isinstance(prop.range, ClassDef) else None
    for c in cls.closure:
        for spec in c.attributes:
            if spec.name == name:
                return spec.range if isinstance(spec.range, ClassDef) else None
    # attributes of role classes the instance may hold
    for other in kb.classes.values():
        if other.is_role and other.role_for in cls.closure:
            for spec in other.attributes:
                if spec.name == name:
                    return spec.range if isinstance(spec.range, ClassDef) else None
    raise UnknownAttribute(f"class {cls.name!r} has no attribute {name!r}")


def _domain_compatible(prop: PropertyDef, cls: ClassDef) -> bool:
    dom = prop.domain
    if dom in cls.closure or cls in dom.closure:
        return True
    if dom.is_role and (dom.role_for in cls.closure or cls in dom.role_for.closure):
        return True
    return False
