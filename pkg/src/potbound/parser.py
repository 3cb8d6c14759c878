"""Recursive-descent parser for the surface language.

Grammar (informal):

    program  := (pragma | fundef)*
    pragma   := '{-#' 'POTENTIAL' '(' type ':' langname ')' '#-}'
              | '{-#' 'MODE' ('worst_case'|'hybrid'|'default') '#-}'
              | '{-#' 'NUM_CF_SIGS' int '#-}'
    fundef   := [name '::' type] name param* '=' expr
    type     := tyatom | '(' tyatom ('*' tyatom)* ')' '->' tyatom
    tyatom   := 'Bool' | 'Base' | 'Tree' 'Base' ['@weight'|'@rank']
    expr     := 'let' name '=' expr 'in' expr
              | 'if' expr 'then' expr 'else' expr
              | 'match' expr 'with' ('|' pattern '->' expr)+
              | cmp
    cmp      := app [cmpop app]
    app      := tick | atom+
    tick     := '~' ['{' rational '}'] app
    atom     := name | 'true' | 'false' | 'error' | '(' expr ')'

Comments are ``(* ... *)`` (nesting allowed).
"""

from __future__ import annotations

import re
from fractions import Fraction

from .lang import (App, BoolLit, Cmp, ConstApp, ErrorExpr, Expr, FunDef, If,
                   Let, Match, MatchArm, MODE_DEFAULT, MODE_HYBRID,
                   MODE_WORST_CASE, PlainType, Program, Span, Tick, TY_BASE,
                   TY_BOOL, Var, CMP_OPS)


class ParseError(Exception):
    def __init__(self, msg: str, span: Span):
        super().__init__(f"{span}: {msg}")
        self.span = span


KEYWORDS = {"let", "in", "if", "then", "else", "match", "with", "true",
            "false", "error"}

_TOKEN_RE = re.compile(r"""
    (?P<pragma_open>\{-\#)
  | (?P<pragma_close>\#-\})
  | (?P<dcolon>::)
  | (?P<arrow>->)
  | (?P<op><=|>=|<|>|=)
  | (?P<lbrace>\{) | (?P<rbrace>\})
  | (?P<lparen>\() | (?P<rparen>\))
  | (?P<bar>\|) | (?P<star>\*) | (?P<tilde>~) | (?P<colon>:)
  | (?P<at>@) | (?P<comma>,) | (?P<slash>/) | (?P<minus>-)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
""", re.VERBOSE)


class Token:
    __slots__ = ("kind", "text", "span")

    def __init__(self, kind, text, span):
        self.kind, self.text, self.span = kind, text, span

    def __repr__(self):
        return f"{self.kind}({self.text})"


def tokenize(src: str) -> list:
    toks = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("(*", i):
            depth, j = 1, i + 2
            while j < n and depth:
                if src.startswith("(*", j):
                    depth += 1
                    j += 2
                elif src.startswith("*)", j):
                    depth -= 1
                    j += 2
                else:
                    j += 1
            if depth:
                raise ParseError("unterminated comment", Span(line, col))
            chunk = src[i:j]
            line += chunk.count("\n")
            col = (len(chunk) - chunk.rfind("\n")) if "\n" in chunk else col + len(chunk)
            i = j
            continue
        m = _TOKEN_RE.match(src, i)
        if not m:
            raise ParseError(f"unexpected character {c!r}", Span(line, col))
        kind = m.lastgroup
        text = m.group()
        toks.append(Token(kind, text, Span(line, col)))
        col += len(text)
        i = m.end()
    toks.append(Token("eof", "", Span(line, col)))
    return toks


PRAGMA_NAMES = {"POTENTIAL", "MODE", "NUM_CF_SIGS"}
LANG_NAMES = {"log", "logr", "pw", "rank", "sol"}


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.pos = 0
        self.src = src

    # -- token utilities ----------------------------------------------------
    def peek(self, k=0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind, text=None) -> Token:
        t = self.next()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {t.text!r}", t.span)
        return t

    def at(self, kind, text=None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    # -- program ------------------------------------------------------------
    def parse_program(self) -> Program:
        potentials = {}
        num_cf = 1
        pending_mode = None
        pending_sig = None      # (name, ([types], type))
        funs = []
        seen = set()
        while not self.at("eof"):
            if self.at("pragma_open"):
                kind, payload = self.parse_pragma()
                if kind == "POTENTIAL":
                    potentials[payload[0]] = payload[1]
                elif kind == "MODE":
                    pending_mode = payload
                else:
                    num_cf = payload
                continue
            t = self.expect("ident")
            name = t.text
            if self.at("dcolon"):
                self.next()
                sig = self.parse_sig_type()
                pending_sig = (name, sig)
                continue
            params = []
            while self.at("ident"):
                params.append(self.next().text)
            self.expect("op", "=")
            body = self.parse_expr()
            if name in seen:
                raise ParseError(f"duplicate definition of {name!r}", t.span)
            seen.add(name)
            declared = None
            if pending_sig is not None:
                if pending_sig[0] != name:
                    raise ParseError(
                        f"signature for {pending_sig[0]!r} not followed by its "
                        f"definition", t.span)
                declared = pending_sig[1]
                pending_sig = None
            funs.append(FunDef(name, params, body, declared=declared,
                               mode=pending_mode or MODE_DEFAULT, span=t.span))
            pending_mode = None
        if pending_sig is not None:
            raise ParseError(f"dangling signature for {pending_sig[0]!r}",
                             self.peek().span)
        return Program(funs, potentials, num_cf, self.src)

    def parse_pragma(self):
        self.expect("pragma_open")
        t = self.expect("ident")
        if t.text not in PRAGMA_NAMES:
            raise ParseError(f"unknown pragma {t.text!r}", t.span)
        if t.text == "MODE":
            m = self.expect("ident")
            if m.text not in (MODE_WORST_CASE, MODE_HYBRID, MODE_DEFAULT):
                raise ParseError(f"unknown mode {m.text!r}", m.span)
            self.expect("pragma_close")
            return "MODE", m.text
        if t.text == "NUM_CF_SIGS":
            n = self.expect("int")
            self.expect("pragma_close")
            return "NUM_CF_SIGS", int(n.text)
        # POTENTIAL (Type: langname)
        self.expect("lparen")
        ty = self.parse_tyatom()
        self.expect("colon")
        lang = self.parse_langname()
        self.expect("rparen")
        self.expect("pragma_close")
        return "POTENTIAL", (ty, lang)

    def parse_langname(self) -> str:
        t = self.expect("ident")
        if t.text not in LANG_NAMES:
            raise ParseError(f"unknown potential language {t.text!r}", t.span)
        if t.text == "sol":
            self.expect("lparen")
            parts = [self.parse_rational()]
            while self.at("comma"):
                self.next()
                parts.append(self.parse_rational())
            self.expect("rparen")
            if len(parts) != 3:
                raise ParseError("sol(a,b,c) takes three rationals", t.span)
            return "sol(%s,%s,%s)" % tuple(parts)
        return t.text

    def parse_rational(self) -> Fraction:
        neg = False
        if self.at("minus"):
            self.next()
            neg = True
        num = int(self.expect("int").text)
        den = 1
        if self.at("slash"):
            self.next()
            den = int(self.expect("int").text)
        q = Fraction(num, den)
        return -q if neg else q

    # -- types --------------------------------------------------------------
    def parse_sig_type(self):
        if self.at("lparen"):
            self.next()
            args = [self.parse_tyatom()]
            while self.at("star"):
                self.next()
                args.append(self.parse_tyatom())
            self.expect("rparen")
        else:
            args = [self.parse_tyatom()]
        self.expect("arrow")
        res = self.parse_tyatom()
        return args, res

    def parse_tyatom(self) -> PlainType:
        t = self.expect("ident")
        if t.text == "Bool":
            return TY_BOOL
        if t.text == "Base":
            return TY_BASE
        if t.text == "Tree":
            self.expect("ident", "Base")
            ref = None
            if self.at("at"):
                self.next()
                r = self.expect("ident")
                if r.text not in ("weight", "rank"):
                    raise ParseError(f"unknown refinement {r.text!r}", r.span)
                ref = r.text
            return PlainType("Tree", ref)
        raise ParseError(f"unknown type {t.text!r}", t.span)

    # -- expressions ----------------------------------------------------------
    def parse_expr(self) -> Expr:
        t = self.peek()
        if t.kind == "ident" and t.text == "let":
            self.next()
            name = self.expect("ident").text
            self.expect("op", "=")
            bound = self.parse_expr()
            self.expect("ident", "in")
            body = self.parse_expr()
            return Let(t.span, None, set(), name, bound, body)
        if t.kind == "ident" and t.text == "if":
            self.next()
            cond = self.parse_expr()
            self.expect("ident", "then")
            then = self.parse_expr()
            self.expect("ident", "else")
            els = self.parse_expr()
            return If(t.span, None, set(), cond, then, els)
        if t.kind == "ident" and t.text == "match":
            self.next()
            scrut = self.parse_expr()
            self.expect("ident", "with")
            arms = []
            while self.at("bar"):
                self.next()
                c = self.expect("ident")
                if c.text not in ("leaf", "node"):
                    raise ParseError(f"unknown constructor {c.text!r}", c.span)
                vars_ = []
                if c.text == "node":
                    for _ in range(3):
                        vars_.append(self.expect("ident").text)
                self.expect("arrow")
                body = self.parse_expr()
                arms.append(MatchArm(c.text, vars_, body))
            if not arms:
                raise ParseError("match with no arms", t.span)
            return Match(t.span, None, set(), scrut, arms)
        return self.parse_cmp()

    def parse_cmp(self) -> Expr:
        lhs = self.parse_app()
        if self.at("op") and self.peek().text in CMP_OPS:
            op = self.next()
            rhs = self.parse_app()
            return Cmp(op.span, None, set(), op.text, lhs, rhs)
        return lhs

    def parse_app(self) -> Expr:
        if self.at("tilde"):
            t = self.next()
            amount = Fraction(1)
            if self.at("lbrace"):
                self.next()
                amount = self.parse_rational()
                self.expect("rbrace")
            if amount < 0:
                raise ParseError("tick cost must be nonnegative", t.span)
            body = self.parse_app()
            return Tick(t.span, None, set(), amount, body)
        atoms = [self.parse_atom()]
        while self._at_atom_start():
            atoms.append(self.parse_atom())
        head = atoms[0]
        if len(atoms) == 1:
            return head
        if isinstance(head, Var):
            if head.name in ("leaf", "node"):
                return ConstApp(head.span, None, set(), head.name, atoms[1:])
            return App(head.span, None, set(), head.name, atoms[1:])
        raise ParseError("application head must be a name", head.span)

    def _at_atom_start(self) -> bool:
        # A name in column 1 starts a new top-level definition (layout rule);
        # continuation lines of an expression must be indented.
        t = self.peek()
        if t.kind == "lparen":
            return True
        if t.kind != "ident" or t.span.col == 1:
            return False
        return t.text not in ("let", "in", "if", "then", "else", "match", "with")

    def parse_atom(self) -> Expr:
        t = self.peek()
        if t.kind == "lparen":
            self.next()
            e = self.parse_expr()
            self.expect("rparen")
            return e
        t = self.expect("ident")
        if t.text == "true":
            return BoolLit(t.span, None, set(), True)
        if t.text == "false":
            return BoolLit(t.span, None, set(), False)
        if t.text == "error":
            return ErrorExpr(t.span, None, set())
        if t.text in KEYWORDS:
            raise ParseError(f"unexpected keyword {t.text!r}", t.span)
        if t.text == "leaf":
            return ConstApp(t.span, None, set(), "leaf", [])
        return Var(t.span, None, set(), t.text)


def parse(text: str) -> Program:
    """Parse a source file into an (untyped) Program."""
    return Parser(text).parse_program()


def parse_expr(text: str) -> Expr:
    p = Parser(text)
    e = p.parse_expr()
    if not p.at("eof"):
        raise ParseError(f"trailing input {p.peek().text!r}", p.peek().span)
    return e
