"""Entry-invocation outcomes and comparable state snapshots.

Both evaluators produce these carriers.  The snapshot has three sections:
post-run contents of class-typed entry parameters, post-run values of the
receiver fields the dispatched method reads through `this`, and the result
(return value, error kind, or limit marker).
"""
from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    AssignStmt,
    Expr,
    FieldAccess,
    MethodDecl,
    Stmt,
    ThisRef,
    walk,
)
from .values import Heap, Value, VRef, shallow_jsonable, to_jsonable

ERROR_KINDS = (
    "require-failed",
    "division-by-zero",
    "null-dereference",
    "no-such-method",
)

STATUS_RETURNED = "returned"
STATUS_RAISED = "raised"
STATUS_LIMIT = "step-limit-exceeded"

MAX_CALL_DEPTH = 128
DEFAULT_STEP_LIMIT = 100_000


class ConstructionFailed(Exception):
    """An object construction requested through a session API failed."""

    def __init__(self, kind: str, location: str):
        super().__init__(f"{kind} at {location}")
        self.kind = kind
        self.location = location


@dataclass
class ExecutionOutcome:
    status: str  # returned | raised | step-limit-exceeded
    return_value: Value | None
    error_kind: str | None
    error_location: str | None
    step_count: int
    heap: Heap
    entry_method: MethodDecl | None  # the dispatched method, for the read set

    def to_jsonable(self, canonical_bags: bool = False) -> dict:
        heap_section = {
            str(obj_id): {
                "class": rec.class_name,
                "library": rec.library,
                "version": rec.version,
                "fields": {
                    name: shallow_jsonable(rec.fields[name])
                    for name in sorted(rec.fields)
                },
            }
            for obj_id, rec in sorted(self.heap.records.items())
        }
        return {
            "status": self.status,
            "return": None
            if self.return_value is None
            else to_jsonable(self.return_value, self.heap, canonical_bags),
            "error": None
            if self.error_kind is None
            else {"kind": self.error_kind, "location": self.error_location},
            "steps": self.step_count,
            "heap": heap_section,
        }


def receiver_read_fields(method: MethodDecl) -> list[str]:
    """Fields the method body reads through `this`, statically, sorted.

    Write-only targets (`this.f = e`) do not count as reads, but the prefix
    of a chained target (`this.f.g = e` reads `this.f`) does.
    """
    reads: set[str] = set()

    def collect_expr(expr: Expr) -> None:
        for node in walk(expr):
            if isinstance(node, FieldAccess) and isinstance(node.obj, ThisRef):
                reads.add(node.name)

    def collect_stmts(stmts: tuple[Stmt, ...]) -> None:
        for stmt in stmts:
            if isinstance(stmt, AssignStmt):
                target = stmt.target
                if isinstance(target, FieldAccess):
                    collect_expr(target.obj)
                collect_expr(stmt.value)
            else:
                for child in _stmt_exprs(stmt):
                    collect_expr(child)
                inner = _stmt_blocks(stmt)
                for block in inner:
                    collect_stmts(block)

    collect_stmts(method.body)
    return sorted(reads)


def _stmt_exprs(stmt: Stmt):
    from . import ast as A

    if isinstance(stmt, A.LetStmt):
        return (stmt.value,)
    if isinstance(stmt, A.IfStmt):
        return (stmt.cond,)
    if isinstance(stmt, A.WhileStmt):
        return (stmt.cond,)
    if isinstance(stmt, A.ReturnStmt):
        return (stmt.value,)
    if isinstance(stmt, A.RequireStmt):
        return (stmt.cond,)
    if isinstance(stmt, A.ExprStmt):
        return (stmt.value,)
    return ()


def _stmt_blocks(stmt: Stmt):
    from . import ast as A

    if isinstance(stmt, A.IfStmt):
        return (stmt.then_body, stmt.else_body)
    if isinstance(stmt, A.WhileStmt):
        return (stmt.body,)
    return ()


@dataclass
class StateSnapshot:
    """Comparable observation of one entry invocation."""

    object_params: tuple[tuple[int, Value], ...]  # (param index, post-run value)
    receiver_reads: tuple[tuple[str, Value], ...]  # (field name, post-run value)
    result_kind: str  # returned | raised | step-limit-exceeded
    result_value: Value | None
    error_kind: str | None
    heap: Heap

    def to_jsonable(self, canonical_bags: bool = False) -> dict:
        if self.result_kind == STATUS_RETURNED:
            result = {
                "kind": STATUS_RETURNED,
                "value": to_jsonable(self.result_value, self.heap, canonical_bags),
            }
        elif self.result_kind == STATUS_RAISED:
            result = {"kind": STATUS_RAISED, "error": self.error_kind}
        else:
            result = {"kind": STATUS_LIMIT}
        return {
            "object_params": [
                {"index": i, "value": to_jsonable(v, self.heap, canonical_bags)}
                for i, v in self.object_params
            ],
            "receiver_reads": [
                {"field": name, "value": to_jsonable(v, self.heap, canonical_bags)}
                for name, v in self.receiver_reads
            ],
            "result": result,
        }


def snapshot_state(
    outcome: ExecutionOutcome,
    entry_params: tuple[str, ...],
    receiver: Value,
    args: tuple[Value, ...],
) -> StateSnapshot:
    """Assemble the three-section snapshot from a finished invocation.

    `entry_params` is the entry signature's parameter tag list (used to pick
    the class-typed parameters).  The dispatched method's read set comes from
    the outcome itself.
    """
    from .ast import PRIMITIVE_TAGS

    object_params = tuple(
        (i, args[i])
        for i, tag in enumerate(entry_params)
        if tag not in PRIMITIVE_TAGS and i < len(args)
    )
    reads: list[tuple[str, Value]] = []
    if outcome.entry_method is not None and isinstance(receiver, VRef):
        record = outcome.heap.get(receiver)
        for name in receiver_read_fields(outcome.entry_method):
            if name in record.fields:
                reads.append((name, record.fields[name]))
    return StateSnapshot(
        object_params=object_params,
        receiver_reads=tuple(reads),
        result_kind=outcome.status,
        result_value=outcome.return_value,
        error_kind=outcome.error_kind,
        heap=outcome.heap,
    )
