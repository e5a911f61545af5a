"""Syntax tree for ModLang source units.

Every node is a frozen dataclass carrying an optional source span that is
excluded from equality, so two trees compare structurally no matter where
their text came from.  `normalize` strips spans; `alpha_rename_method`
canonicalizes local names so that structural comparison ignores renames.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

PRIMITIVE_TAGS = ("Int", "Str", "Bool", "Bag")


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


def _span_field():
    return field(default=None, compare=False, repr=False)


class Node:
    """Marker base for all AST dataclasses."""


# ---------------------------------------------------------------- expressions


class Expr(Node):
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int
    span: Span | None = _span_field()


@dataclass(frozen=True)
class StrLit(Expr):
    value: str
    span: Span | None = _span_field()


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    span: Span | None = _span_field()


@dataclass(frozen=True)
class NullLit(Expr):
    span: Span | None = _span_field()


@dataclass(frozen=True)
class VarRef(Expr):
    name: str
    span: Span | None = _span_field()


@dataclass(frozen=True)
class ThisRef(Expr):
    span: Span | None = _span_field()


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # one of || && == != < > + - ++ * /
    left: Expr
    right: Expr
    span: Span | None = _span_field()


@dataclass(frozen=True)
class FieldAccess(Expr):
    obj: Expr
    name: str
    span: Span | None = _span_field()


@dataclass(frozen=True)
class MethodCall(Expr):
    obj: Expr
    name: str
    args: tuple[Expr, ...]
    span: Span | None = _span_field()


@dataclass(frozen=True)
class NewObject(Expr):
    class_name: str
    args: tuple[Expr, ...]
    span: Span | None = _span_field()


@dataclass(frozen=True)
class BagLit(Expr):
    items: tuple[Expr, ...]
    span: Span | None = _span_field()


@dataclass(frozen=True)
class BagInsert(Expr):
    bag: Expr
    item: Expr
    span: Span | None = _span_field()


@dataclass(frozen=True)
class BagFold(Expr):
    bag: Expr
    init: Expr
    elem_name: str
    acc_name: str
    body: Expr
    span: Span | None = _span_field()


# ----------------------------------------------------------------- statements


class Stmt(Node):
    pass


@dataclass(frozen=True)
class LetStmt(Stmt):
    name: str
    value: Expr
    span: Span | None = _span_field()


@dataclass(frozen=True)
class AssignStmt(Stmt):
    target: Expr  # VarRef or FieldAccess
    value: Expr
    span: Span | None = _span_field()


@dataclass(frozen=True)
class IfStmt(Stmt):
    cond: Expr
    then_body: tuple[Stmt, ...]
    else_body: tuple[Stmt, ...]
    span: Span | None = _span_field()


@dataclass(frozen=True)
class WhileStmt(Stmt):
    cond: Expr
    bound: int
    body: tuple[Stmt, ...]
    span: Span | None = _span_field()


@dataclass(frozen=True)
class ReturnStmt(Stmt):
    value: Expr
    span: Span | None = _span_field()


@dataclass(frozen=True)
class RequireStmt(Stmt):
    cond: Expr
    span: Span | None = _span_field()


@dataclass(frozen=True)
class ExprStmt(Stmt):
    value: Expr
    span: Span | None = _span_field()


# --------------------------------------------------------------- declarations


@dataclass(frozen=True)
class Param(Node):
    name: str
    type_tag: str
    span: Span | None = _span_field()


@dataclass(frozen=True)
class FieldDecl(Node):
    name: str
    type_tag: str
    span: Span | None = _span_field()


@dataclass(frozen=True)
class CtorDecl(Node):
    params: tuple[Param, ...]
    body: tuple[Stmt, ...]
    internal: bool = False
    span: Span | None = _span_field()


@dataclass(frozen=True)
class MethodDecl(Node):
    name: str
    params: tuple[Param, ...]
    return_tag: str
    body: tuple[Stmt, ...]
    internal: bool = False
    span: Span | None = _span_field()


@dataclass(frozen=True)
class ClassDecl(Node):
    name: str
    superclass: str | None
    fields: tuple[FieldDecl, ...]
    ctors: tuple[CtorDecl, ...]
    methods: tuple[MethodDecl, ...]
    span: Span | None = _span_field()


@dataclass(frozen=True)
class SourceUnit(Node):
    library: str
    version: str
    classes: tuple[ClassDecl, ...]
    span: Span | None = _span_field()

    def class_named(self, name: str) -> ClassDecl | None:
        for cls in self.classes:
            if cls.name == name:
                return cls
        return None


# ----------------------------------------------------------------- signatures


def method_signature(decl: MethodDecl) -> str:
    tags = ",".join(p.type_tag for p in decl.params)
    return f"{decl.name}({tags})->{decl.return_tag}"


def ctor_signature(decl: CtorDecl) -> str:
    tags = ",".join(p.type_tag for p in decl.params)
    return f"ctor({tags})"


# ---------------------------------------------------------- generic traversal


def child_nodes(node: Node):
    """Yield the direct AST-node children of a node, in field order."""
    for f in dataclasses.fields(node):
        if f.name == "span":
            continue
        value = getattr(node, f.name)
        if isinstance(value, Node):
            yield value
        elif isinstance(value, tuple):
            for item in value:
                if isinstance(item, Node):
                    yield item


def walk(node: Node):
    """Yield node and every descendant, preorder."""
    yield node
    for child in child_nodes(node):
        yield from walk(child)


def normalize(node: Node) -> Node:
    """Rebuild a tree with every span removed.  Idempotent."""
    updates: dict[str, object] = {}
    for f in dataclasses.fields(node):
        value = getattr(node, f.name)
        if f.name == "span":
            if value is not None:
                updates[f.name] = None
        elif isinstance(value, Node):
            updates[f.name] = normalize(value)
        elif isinstance(value, tuple) and any(isinstance(x, Node) for x in value):
            updates[f.name] = tuple(normalize(x) for x in value)
    return dataclasses.replace(node, **updates) if updates else node


# -------------------------------------------------------------- alpha renames


class _Scope:
    def __init__(self, parent: _Scope | None):
        self.parent = parent
        self.names: dict[str, str] = {}

    def lookup(self, name: str) -> str | None:
        scope: _Scope | None = self
        while scope is not None:
            if name in scope.names:
                return scope.names[name]
            scope = scope.parent
        return None


class _Renamer:
    """Renames locals to l0, l1, ... in first-binding order."""

    def __init__(self):
        self.counter = 0

    def bind(self, scope: _Scope, name: str) -> str:
        fresh = f"l{self.counter}"
        self.counter += 1
        scope.names[name] = fresh
        return fresh

    def rename_block(self, stmts: tuple[Stmt, ...], scope: _Scope) -> tuple[Stmt, ...]:
        inner = _Scope(scope)
        return tuple(self.rename_stmt(s, inner) for s in stmts)

    def rename_stmt(self, stmt: Stmt, scope: _Scope) -> Stmt:
        if isinstance(stmt, LetStmt):
            value = self.rename_expr(stmt.value, scope)
            return dataclasses.replace(stmt, name=self.bind(scope, stmt.name), value=value)
        if isinstance(stmt, AssignStmt):
            return dataclasses.replace(
                stmt,
                target=self.rename_expr(stmt.target, scope),
                value=self.rename_expr(stmt.value, scope),
            )
        if isinstance(stmt, IfStmt):
            return dataclasses.replace(
                stmt,
                cond=self.rename_expr(stmt.cond, scope),
                then_body=self.rename_block(stmt.then_body, scope),
                else_body=self.rename_block(stmt.else_body, scope),
            )
        if isinstance(stmt, WhileStmt):
            return dataclasses.replace(
                stmt,
                cond=self.rename_expr(stmt.cond, scope),
                body=self.rename_block(stmt.body, scope),
            )
        if isinstance(stmt, (ReturnStmt,)):
            return dataclasses.replace(stmt, value=self.rename_expr(stmt.value, scope))
        if isinstance(stmt, RequireStmt):
            return dataclasses.replace(stmt, cond=self.rename_expr(stmt.cond, scope))
        if isinstance(stmt, ExprStmt):
            return dataclasses.replace(stmt, value=self.rename_expr(stmt.value, scope))
        raise TypeError(f"unexpected statement {type(stmt).__name__}")

    def rename_expr(self, expr: Expr, scope: _Scope) -> Expr:
        if isinstance(expr, VarRef):
            renamed = scope.lookup(expr.name)
            return expr if renamed is None else dataclasses.replace(expr, name=renamed)
        if isinstance(expr, BagFold):
            bag = self.rename_expr(expr.bag, scope)
            init = self.rename_expr(expr.init, scope)
            inner = _Scope(scope)
            elem = self.bind(inner, expr.elem_name)
            acc = self.bind(inner, expr.acc_name)
            return dataclasses.replace(
                expr,
                bag=bag,
                init=init,
                elem_name=elem,
                acc_name=acc,
                body=self.rename_expr(expr.body, inner),
            )
        updates: dict[str, object] = {}
        for f in dataclasses.fields(expr):
            if f.name == "span":
                continue
            value = getattr(expr, f.name)
            if isinstance(value, Expr):
                updates[f.name] = self.rename_expr(value, scope)
            elif isinstance(value, tuple) and any(isinstance(x, Expr) for x in value):
                updates[f.name] = tuple(self.rename_expr(x, scope) for x in value)
        return dataclasses.replace(expr, **updates) if updates else expr


def alpha_rename_method(decl: MethodDecl) -> MethodDecl:
    """Canonicalize parameter and local names (l0, l1, ... in binding order)."""
    renamer = _Renamer()
    scope = _Scope(None)
    params = tuple(
        dataclasses.replace(p, name=renamer.bind(scope, p.name)) for p in decl.params
    )
    body = renamer.rename_block(decl.body, scope)
    return dataclasses.replace(decl, params=params, body=body)


def comparison_form(decl: MethodDecl) -> MethodDecl:
    """The form used for structural method comparison: spans stripped, locals
    canonicalized.  Field and method names are left alone (they are API)."""
    return alpha_rename_method(normalize(decl))


# ------------------------------------------------------------- pretty printer

_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    ">": 4,
    "+": 5,
    "-": 5,
    "++": 5,
    "*": 6,
    "/": 6,
}


def _escape(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\t", "\\t")


def expr_to_source(expr: Expr) -> str:
    return _emit_expr(expr, 0)


def _emit_expr(expr: Expr, parent_prec: int, right_side: bool = False) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, StrLit):
        return f'"{_escape(expr.value)}"'
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, NullLit):
        return "null"
    if isinstance(expr, VarRef):
        return expr.name
    if isinstance(expr, ThisRef):
        return "this"
    if isinstance(expr, Binary):
        prec = _PRECEDENCE[expr.op]
        text = (
            f"{_emit_expr(expr.left, prec)} {expr.op} "
            f"{_emit_expr(expr.right, prec, right_side=True)}"
        )
        if prec < parent_prec or (prec == parent_prec and right_side):
            return f"({text})"
        return text
    if isinstance(expr, FieldAccess):
        return f"{_emit_postfix_base(expr.obj)}.{expr.name}"
    if isinstance(expr, MethodCall):
        args = ", ".join(_emit_expr(a, 0) for a in expr.args)
        return f"{_emit_postfix_base(expr.obj)}.{expr.name}({args})"
    if isinstance(expr, NewObject):
        args = ", ".join(_emit_expr(a, 0) for a in expr.args)
        return f"new {expr.class_name}({args})"
    if isinstance(expr, BagLit):
        items = ", ".join(_emit_expr(a, 0) for a in expr.items)
        return f"bag({items})"
    if isinstance(expr, BagInsert):
        return f"insert({_emit_expr(expr.bag, 0)}, {_emit_expr(expr.item, 0)})"
    if isinstance(expr, BagFold):
        return (
            f"fold({_emit_expr(expr.bag, 0)}, {_emit_expr(expr.init, 0)}, "
            f"({expr.elem_name}, {expr.acc_name}) -> {_emit_expr(expr.body, 0)})"
        )
    raise TypeError(f"unexpected expression {type(expr).__name__}")


def _emit_postfix_base(expr: Expr) -> str:
    # postfix chains hang off primaries; anything looser needs parens
    if isinstance(expr, Binary):
        return f"({_emit_expr(expr, 0)})"
    # negative literals need parens too: (-5).m() not -5.m()
    if isinstance(expr, IntLit) and expr.value < 0:
        return f"({expr.value})"
    return _emit_expr(expr, 0)


def _emit_block(stmts: tuple[Stmt, ...], indent: int, out: list[str]) -> None:
    pad = "  " * indent
    for stmt in stmts:
        if isinstance(stmt, LetStmt):
            out.append(f"{pad}let {stmt.name} = {expr_to_source(stmt.value)};")
        elif isinstance(stmt, AssignStmt):
            out.append(f"{pad}{expr_to_source(stmt.target)} = {expr_to_source(stmt.value)};")
        elif isinstance(stmt, IfStmt):
            out.append(f"{pad}if ({expr_to_source(stmt.cond)}) {{")
            _emit_block(stmt.then_body, indent + 1, out)
            if stmt.else_body:
                out.append(f"{pad}}} else {{")
                _emit_block(stmt.else_body, indent + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(stmt, WhileStmt):
            out.append(f"{pad}while ({expr_to_source(stmt.cond)}) bound {stmt.bound} {{")
            _emit_block(stmt.body, indent + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(stmt, ReturnStmt):
            out.append(f"{pad}return {expr_to_source(stmt.value)};")
        elif isinstance(stmt, RequireStmt):
            out.append(f"{pad}require({expr_to_source(stmt.cond)});")
        elif isinstance(stmt, ExprStmt):
            out.append(f"{pad}{expr_to_source(stmt.value)};")
        else:
            raise TypeError(f"unexpected statement {type(stmt).__name__}")


def unit_to_source(unit: SourceUnit) -> str:
    """Render a unit back to parsable source in a canonical layout."""
    out: list[str] = [f"library {unit.library} v{unit.version} {{"]
    for cls in unit.classes:
        heading = f"  class {cls.name}"
        if cls.superclass:
            heading += f" extends {cls.superclass}"
        out.append(heading + " {")
        for fld in cls.fields:
            out.append(f"    field {fld.name}: {fld.type_tag};")
        for ctor in cls.ctors:
            vis = "internal " if ctor.internal else ""
            params = ", ".join(f"{p.name}: {p.type_tag}" for p in ctor.params)
            out.append(f"    {vis}ctor({params}) {{")
            _emit_block(ctor.body, 3, out)
            out.append("    }")
        for method in cls.methods:
            vis = "internal " if method.internal else ""
            params = ", ".join(f"{p.name}: {p.type_tag}" for p in method.params)
            out.append(
                f"    {vis}method {method.name}({params}) -> {method.return_tag} {{"
            )
            _emit_block(method.body, 3, out)
            out.append("    }")
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"
