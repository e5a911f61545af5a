"""Recursive-descent parser for ModLang source units.

Raises ParseError with exact line/column for syntax problems and for the
structural rules that are checkable within one unit (duplicate classes,
duplicate signatures, methods that may fall off the end, return inside a
constructor).
"""
from __future__ import annotations

import re

from .ast import (
    AssignStmt,
    BagFold,
    BagInsert,
    BagLit,
    Binary,
    BoolLit,
    ClassDecl,
    CtorDecl,
    Expr,
    ExprStmt,
    FieldAccess,
    FieldDecl,
    IfStmt,
    IntLit,
    LetStmt,
    MethodCall,
    MethodDecl,
    NewObject,
    NullLit,
    Param,
    RequireStmt,
    ReturnStmt,
    SourceUnit,
    Span,
    Stmt,
    StrLit,
    ThisRef,
    VarRef,
    WhileStmt,
    ctor_signature,
    method_signature,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.reason = message
        self.line = line
        self.col = col


KEYWORDS = {
    "library", "class", "extends", "field", "ctor", "method", "internal",
    "let", "if", "else", "while", "bound", "return", "require",
    "true", "false", "null", "this", "new", "bag", "insert", "fold",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<version>v[0-9][0-9A-Za-z._+\-]*)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:\\.|[^"\\\n])*")
  | (?P<op>\+\+|->|==|!=|&&|\|\||[+\-*/<>=(){},;:.])
    """,
    re.VERBOSE,
)

_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t"}


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int):
        self.kind = kind  # VERSION INT IDENT STRING KEYWORD OP EOF
        self.text = text
        self.line = line
        self.col = col


def _lex(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        text = match.group(0)
        kind = match.lastgroup
        if kind == "ws" or kind == "comment":
            pass
        elif kind == "version":
            tokens.append(Token("VERSION", text[1:], line, col))
        elif kind == "int":
            tokens.append(Token("INT", text, line, col))
        elif kind == "ident":
            tok_kind = "KEYWORD" if text in KEYWORDS else "IDENT"
            tokens.append(Token(tok_kind, text, line, col))
        elif kind == "string":
            raw = text[1:-1]
            out: list[str] = []
            i = 0
            while i < len(raw):
                ch = raw[i]
                if ch == "\\":
                    esc = raw[i + 1]
                    if esc not in _ESCAPES:
                        raise ParseError(f"bad escape \\{esc}", line, col)
                    out.append(_ESCAPES[esc])
                    i += 2
                else:
                    out.append(ch)
                    i += 1
            tokens.append(Token("STRING", "".join(out), line, col))
        else:
            tokens.append(Token("OP", text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = match.end()
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # ------------------------------------------------------------- plumbing

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def expect_op(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "OP" or tok.text != text:
            self.fail(f"expected {text!r}, found {tok.text!r}")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind != "KEYWORD" or tok.text != word:
            self.fail(f"expected {word!r}, found {tok.text!r}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            self.fail(f"expected {what}, found {tok.text!r}")
        return self.advance()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.text == word

    def at_op(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "OP" and tok.text == text

    def eat_op(self, text: str) -> bool:
        if self.at_op(text):
            self.advance()
            return True
        return False

    @staticmethod
    def span(tok: Token) -> Span:
        return Span(tok.line, tok.col)

    # ----------------------------------------------------------------- unit

    def parse_unit(self) -> SourceUnit:
        head = self.expect_keyword("library")
        name = self.expect_ident("library name").text
        version_tok = self.peek()
        if version_tok.kind != "VERSION":
            self.fail("expected version literal (e.g. v1.0)")
        self.advance()
        self.expect_op("{")
        classes: list[ClassDecl] = []
        seen: dict[str, Token] = {}
        while not self.at_op("}"):
            cls_tok = self.peek()
            cls = self.parse_class()
            if cls.name in seen:
                self.fail(f"duplicate class {cls.name!r}", cls_tok)
            seen[cls.name] = cls_tok
            classes.append(cls)
        self.expect_op("}")
        if self.peek().kind != "EOF":
            self.fail("trailing input after unit")
        return SourceUnit(name, version_tok.text, tuple(classes), span=self.span(head))

    def parse_class(self) -> ClassDecl:
        head = self.expect_keyword("class")
        name = self.expect_ident("class name").text
        superclass = None
        if self.at_keyword("extends"):
            self.advance()
            superclass = self.expect_ident("superclass name").text
        self.expect_op("{")
        fields: list[FieldDecl] = []
        ctors: list[CtorDecl] = []
        methods: list[MethodDecl] = []
        field_names: set[str] = set()
        ctor_sigs: set[str] = set()
        method_sigs: set[str] = set()
        while not self.at_op("}"):
            tok = self.peek()
            if self.at_keyword("field"):
                fld = self.parse_field()
                if fld.name in field_names:
                    self.fail(f"duplicate field {fld.name!r}", tok)
                field_names.add(fld.name)
                fields.append(fld)
            else:
                internal = False
                if self.at_keyword("internal"):
                    self.advance()
                    internal = True
                if self.at_keyword("ctor"):
                    ctor = self.parse_ctor(internal)
                    sig = ctor_signature(ctor)
                    if sig in ctor_sigs:
                        self.fail(f"duplicate constructor {sig}", tok)
                    ctor_sigs.add(sig)
                    ctors.append(ctor)
                elif self.at_keyword("method"):
                    method = self.parse_method(internal)
                    sig = method_signature(method)
                    key = sig.split("->")[0]  # name + param tags
                    if key in method_sigs:
                        self.fail(f"duplicate method {key}", tok)
                    method_sigs.add(key)
                    methods.append(method)
                else:
                    self.fail("expected field, ctor, or method")
        self.expect_op("}")
        return ClassDecl(
            name, superclass, tuple(fields), tuple(ctors), tuple(methods),
            span=self.span(head),
        )

    def parse_field(self) -> FieldDecl:
        head = self.expect_keyword("field")
        name = self.expect_ident("field name").text
        self.expect_op(":")
        tag = self.parse_type()
        self.expect_op(";")
        return FieldDecl(name, tag, span=self.span(head))

    def parse_type(self) -> str:
        return self.expect_ident("type").text

    def parse_params(self) -> tuple[Param, ...]:
        self.expect_op("(")
        params: list[Param] = []
        names: set[str] = set()
        if not self.at_op(")"):
            while True:
                tok = self.expect_ident("parameter name")
                if tok.text in names:
                    self.fail(f"duplicate parameter {tok.text!r}", tok)
                names.add(tok.text)
                self.expect_op(":")
                params.append(Param(tok.text, self.parse_type(), span=self.span(tok)))
                if not self.eat_op(","):
                    break
        self.expect_op(")")
        return tuple(params)

    def parse_ctor(self, internal: bool) -> CtorDecl:
        head = self.expect_keyword("ctor")
        params = self.parse_params()
        body = self.parse_block()
        _forbid_return(body, self)
        return CtorDecl(params, body, internal, span=self.span(head))

    def parse_method(self, internal: bool) -> MethodDecl:
        head = self.expect_keyword("method")
        name = self.expect_ident("method name").text
        params = self.parse_params()
        self.expect_op("->")
        ret = self.parse_type()
        body = self.parse_block()
        if not _always_returns(body):
            self.fail(f"method {name!r} may complete without return", head)
        return MethodDecl(name, params, ret, body, internal, span=self.span(head))

    # ------------------------------------------------------------ statements

    def parse_block(self) -> tuple[Stmt, ...]:
        self.expect_op("{")
        stmts: list[Stmt] = []
        while not self.at_op("}"):
            stmts.append(self.parse_stmt())
        self.expect_op("}")
        return tuple(stmts)

    def parse_stmt(self) -> Stmt:
        tok = self.peek()
        if self.at_keyword("let"):
            self.advance()
            name = self.expect_ident("variable name").text
            self.expect_op("=")
            value = self.parse_expr()
            self.expect_op(";")
            return LetStmt(name, value, span=self.span(tok))
        if self.at_keyword("if"):
            self.advance()
            self.expect_op("(")
            cond = self.parse_expr()
            self.expect_op(")")
            then_body = self.parse_block()
            else_body: tuple[Stmt, ...] = ()
            if self.at_keyword("else"):
                self.advance()
                else_body = self.parse_block()
            return IfStmt(cond, then_body, else_body, span=self.span(tok))
        if self.at_keyword("while"):
            self.advance()
            self.expect_op("(")
            cond = self.parse_expr()
            self.expect_op(")")
            self.expect_keyword("bound")
            bound_tok = self.peek()
            if bound_tok.kind != "INT":
                self.fail("expected integer loop bound")
            self.advance()
            body = self.parse_block()
            return WhileStmt(cond, int(bound_tok.text), body, span=self.span(tok))
        if self.at_keyword("return"):
            self.advance()
            value = self.parse_expr()
            self.expect_op(";")
            return ReturnStmt(value, span=self.span(tok))
        if self.at_keyword("require"):
            self.advance()
            self.expect_op("(")
            cond = self.parse_expr()
            self.expect_op(")")
            self.expect_op(";")
            return RequireStmt(cond, span=self.span(tok))
        expr = self.parse_expr()
        if self.at_op("="):
            if not isinstance(expr, (VarRef, FieldAccess)):
                self.fail("assignment target must be a variable or field", tok)
            self.advance()
            value = self.parse_expr()
            self.expect_op(";")
            return AssignStmt(expr, value, span=self.span(tok))
        self.expect_op(";")
        return ExprStmt(expr, span=self.span(tok))

    # ----------------------------------------------------------- expressions

    def parse_expr(self) -> Expr:
        return self.parse_binary(1)

    _LEVELS = (("||",), ("&&",), ("==", "!="), ("<", ">"), ("+", "-", "++"), ("*", "/"))

    def parse_binary(self, level: int) -> Expr:
        if level > len(self._LEVELS):
            return self.parse_unary()
        ops = self._LEVELS[level - 1]
        left = self.parse_binary(level + 1)
        while self.peek().kind == "OP" and self.peek().text in ops:
            op_tok = self.advance()
            right = self.parse_binary(level + 1)
            left = Binary(op_tok.text, left, right, span=self.span(op_tok))
        return left

    def parse_unary(self) -> Expr:
        if self.at_op("-"):
            minus = self.advance()
            tok = self.peek()
            if tok.kind != "INT":
                self.fail("unary minus is only valid before an integer literal")
            self.advance()
            return IntLit(-int(tok.text), span=self.span(minus))
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        expr = self.parse_primary()
        while self.at_op("."):
            dot = self.advance()
            name = self.expect_ident("member name").text
            if self.at_op("("):
                args = self.parse_args()
                expr = MethodCall(expr, name, args, span=self.span(dot))
            else:
                expr = FieldAccess(expr, name, span=self.span(dot))
        return expr

    def parse_args(self) -> tuple[Expr, ...]:
        self.expect_op("(")
        args: list[Expr] = []
        if not self.at_op(")"):
            while True:
                args.append(self.parse_expr())
                if not self.eat_op(","):
                    break
        self.expect_op(")")
        return tuple(args)

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "INT":
            self.advance()
            return IntLit(int(tok.text), span=self.span(tok))
        if tok.kind == "STRING":
            self.advance()
            return StrLit(tok.text, span=self.span(tok))
        if tok.kind == "IDENT":
            self.advance()
            return VarRef(tok.text, span=self.span(tok))
        if tok.kind == "KEYWORD":
            if tok.text == "true" or tok.text == "false":
                self.advance()
                return BoolLit(tok.text == "true", span=self.span(tok))
            if tok.text == "null":
                self.advance()
                return NullLit(span=self.span(tok))
            if tok.text == "this":
                self.advance()
                return ThisRef(span=self.span(tok))
            if tok.text == "new":
                self.advance()
                name = self.expect_ident("class name").text
                args = self.parse_args()
                return NewObject(name, args, span=self.span(tok))
            if tok.text == "bag":
                self.advance()
                items = self.parse_args()
                return BagLit(items, span=self.span(tok))
            if tok.text == "insert":
                self.advance()
                self.expect_op("(")
                bag = self.parse_expr()
                self.expect_op(",")
                item = self.parse_expr()
                self.expect_op(")")
                return BagInsert(bag, item, span=self.span(tok))
            if tok.text == "fold":
                self.advance()
                self.expect_op("(")
                bag = self.parse_expr()
                self.expect_op(",")
                init = self.parse_expr()
                self.expect_op(",")
                self.expect_op("(")
                elem = self.expect_ident("element name").text
                self.expect_op(",")
                acc = self.expect_ident("accumulator name").text
                self.expect_op(")")
                self.expect_op("->")
                body = self.parse_expr()
                self.expect_op(")")
                return BagFold(bag, init, elem, acc, body, span=self.span(tok))
        if self.at_op("("):
            self.advance()
            expr = self.parse_expr()
            self.expect_op(")")
            return expr
        self.fail(f"expected expression, found {tok.text!r}")
        raise AssertionError  # fail always raises


def _always_returns(stmts: tuple[Stmt, ...]) -> bool:
    for stmt in stmts:
        if isinstance(stmt, ReturnStmt):
            return True
        if isinstance(stmt, IfStmt) and stmt.else_body:
            if _always_returns(stmt.then_body) and _always_returns(stmt.else_body):
                return True
    return False


def _forbid_return(stmts: tuple[Stmt, ...], parser: _Parser) -> None:
    for stmt in stmts:
        if isinstance(stmt, ReturnStmt):
            raise ParseError(
                "return is not allowed in a constructor",
                stmt.span.line if stmt.span else 0,
                stmt.span.col if stmt.span else 0,
            )
        if isinstance(stmt, IfStmt):
            _forbid_return(stmt.then_body, parser)
            _forbid_return(stmt.else_body, parser)
        elif isinstance(stmt, WhileStmt):
            _forbid_return(stmt.body, parser)


def parse_unit(source: str) -> SourceUnit:
    """Parse one library source unit from text."""
    return _Parser(_lex(source)).parse_unit()
