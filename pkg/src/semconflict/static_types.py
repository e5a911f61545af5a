"""Lightweight static analysis over method bodies.

One walk provides everything the later stages need per call site: the
inferred static class of the receiver (None when unknown), the argument
expressions, and the chain of guarding branches between method entry and the
site.  Inference is deliberately shallow: declared tags flow through locals,
fields, calls and constructors; anything else is unknown and callers fall
back to name/arity matching over every class.
"""
from __future__ import annotations

from dataclasses import dataclass

from .lang import ast as A
from .lang.ast import PRIMITIVE_TAGS
from .lang.program import field_namespace, superclass_chain

_INT_OPS = ("+", "-", "*", "/")
_BOOL_OPS = ("==", "!=", "<", ">", "&&", "||")


def infer_expr_tag(program, class_name: str, expr: A.Expr, env: dict[str, str | None]):
    """Static type-tag of an expression, or None when not inferable."""
    if isinstance(expr, A.IntLit):
        return "Int"
    if isinstance(expr, A.StrLit):
        return "Str"
    if isinstance(expr, A.BoolLit):
        return "Bool"
    if isinstance(expr, (A.BagLit, A.BagInsert)):
        return "Bag"
    if isinstance(expr, A.NullLit):
        return None
    if isinstance(expr, A.ThisRef):
        return class_name
    if isinstance(expr, A.VarRef):
        return env.get(expr.name)
    if isinstance(expr, A.NewObject):
        return expr.class_name
    if isinstance(expr, A.Binary):
        if expr.op == "++":
            return "Str"
        if expr.op in _BOOL_OPS:
            return "Bool"
        if expr.op in _INT_OPS:
            return "Int"
        return None
    if isinstance(expr, A.FieldAccess):
        owner = infer_expr_tag(program, class_name, expr.obj, env)
        if owner is None or owner in PRIMITIVE_TAGS:
            return None
        return field_namespace(program, owner).get(expr.name)
    if isinstance(expr, A.MethodCall):
        owner = infer_expr_tag(program, class_name, expr.obj, env)
        if owner is None or owner in PRIMITIVE_TAGS:
            return None
        for bound in superclass_chain(program, owner):
            for method in bound.decl.methods:
                if method.name == expr.name and len(method.params) == len(expr.args):
                    return method.return_tag
        return None
    if isinstance(expr, A.BagFold):
        return None
    return None


@dataclass(frozen=True)
class CallSite:
    """One constructor or method call site inside a callable body."""

    node: A.Expr  # MethodCall or NewObject
    is_ctor: bool
    name: str  # method name, or class name for constructors
    receiver_tag: str | None  # static class of the receiver; ctors: the class
    argc: int
    arg_nodes: tuple[A.Expr, ...]
    receiver_node: A.Expr | None  # None for constructors
    # guarding branches from method entry to the site, outermost first:
    # (statement node, outcome required to reach the site)
    guards: tuple[tuple[A.Stmt, bool], ...]


def callable_sites(program, class_name: str, params: tuple[A.Param, ...],
                   body: tuple[A.Stmt, ...]) -> list[CallSite]:
    """All call sites in a body, in source order, with guard chains."""
    sites: list[CallSite] = []
    env: dict[str, str | None] = {p.name: p.type_tag for p in params}

    def visit_expr(expr: A.Expr, env, guards) -> None:
        for child in A.child_nodes(expr):
            if isinstance(child, A.Expr):
                visit_expr(child, env, guards)
        if isinstance(expr, A.MethodCall):
            sites.append(
                CallSite(
                    node=expr,
                    is_ctor=False,
                    name=expr.name,
                    receiver_tag=infer_expr_tag(program, class_name, expr.obj, env),
                    argc=len(expr.args),
                    arg_nodes=expr.args,
                    receiver_node=expr.obj,
                    guards=guards,
                )
            )
        elif isinstance(expr, A.NewObject):
            sites.append(
                CallSite(
                    node=expr,
                    is_ctor=True,
                    name=expr.class_name,
                    receiver_tag=expr.class_name,
                    argc=len(expr.args),
                    arg_nodes=expr.args,
                    receiver_node=None,
                    guards=guards,
                )
            )

    def visit_block(stmts, env: dict, guards: tuple) -> None:
        local = dict(env)
        for stmt in stmts:
            if isinstance(stmt, A.LetStmt):
                visit_expr(stmt.value, local, guards)
                local[stmt.name] = infer_expr_tag(program, class_name, stmt.value, local)
            elif isinstance(stmt, A.AssignStmt):
                if isinstance(stmt.target, A.FieldAccess):
                    visit_expr(stmt.target.obj, local, guards)
                visit_expr(stmt.value, local, guards)
            elif isinstance(stmt, A.IfStmt):
                visit_expr(stmt.cond, local, guards)
                visit_block(stmt.then_body, local, guards + ((stmt, True),))
                visit_block(stmt.else_body, local, guards + ((stmt, False),))
            elif isinstance(stmt, A.WhileStmt):
                visit_expr(stmt.cond, local, guards)
                visit_block(stmt.body, local, guards + ((stmt, True),))
            elif isinstance(stmt, A.RequireStmt):
                visit_expr(stmt.cond, local, guards)
                # statements after the require only run when it passed
                guards = guards + ((stmt, True),)
            elif isinstance(stmt, A.ReturnStmt):
                visit_expr(stmt.value, local, guards)
            elif isinstance(stmt, A.ExprStmt):
                visit_expr(stmt.value, local, guards)

    visit_block(body, env, ())
    return sites
