"""Instrumented production interpreter.

Implements the semantics in docs/modlang.md with execution tracing for
search-based test generation: which methods ran, which call sites fired, and
how close each evaluated branch condition came to going the other way.
Organized around cached per-class member tables rather than per-call chain
walks; the naive evaluator in reference.py cross-checks the semantics.
"""
from __future__ import annotations

import sys

from . import ast as A
from .ast import method_signature
from .outcome import (
    DEFAULT_STEP_LIMIT,
    MAX_CALL_DEPTH,
    STATUS_LIMIT,
    STATUS_RAISED,
    STATUS_RETURNED,
    ConstructionFailed,
    ExecutionOutcome,
)
from .values import (
    EMPTY_BAG,
    FALSE,
    NULL,
    TRUE,
    Heap,
    VBag,
    VBool,
    VInt,
    VNull,
    VRef,
    VStr,
    Value,
    default_for_tag,
    div_trunc,
    values_equal,
    wrap_int,
)

ApiKey = tuple[str, str, str, str]  # (library, version, class, signature)


class LangError(Exception):
    def __init__(self, kind: str, location: str):
        super().__init__(f"{kind} at {location}")
        self.kind = kind
        self.location = location


class _StepLimit(Exception):
    pass


class _Return(Exception):
    __slots__ = ("value",)

    def __init__(self, value: Value):
        self.value = value


def _loc(node) -> str:
    span = getattr(node, "span", None)
    return str(span) if span is not None else "?"


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[len(b)]


class Trace:
    """Execution observations for one session."""

    def __init__(self):
        self.entered: list[ApiKey] = []
        self._entered_set: set[ApiKey] = set()
        self.calls: list[tuple[int, ApiKey]] = []  # (site node id, callee)
        self.call_sites: set[int] = set()
        # stmt node id -> [min distance to make it true, min distance to false]
        self.branch_distances: dict[int, list[float]] = {}
        self.branch_outcomes: dict[int, set[bool]] = {}

    def record_enter(self, key: ApiKey) -> None:
        if key not in self._entered_set:
            self._entered_set.add(key)
            self.entered.append(key)

    def entered_api(self, key: ApiKey) -> bool:
        return key in self._entered_set

    def record_call(self, site_id: int, key: ApiKey) -> None:
        self.calls.append((site_id, key))
        self.call_sites.add(site_id)

    def record_branch(self, stmt_id: int, dist_true: float, dist_false: float,
                      outcome: bool) -> None:
        pair = self.branch_distances.get(stmt_id)
        if pair is None:
            self.branch_distances[stmt_id] = [dist_true, dist_false]
        else:
            pair[0] = min(pair[0], dist_true)
            pair[1] = min(pair[1], dist_false)
        self.branch_outcomes.setdefault(stmt_id, set()).add(outcome)


class _Scope:
    __slots__ = ("parent", "names")

    def __init__(self, parent):
        self.parent = parent
        self.names: dict[str, Value] = {}

    def find(self, name: str):
        scope = self
        while scope is not None:
            if name in scope.names:
                return scope
            scope = scope.parent
        return None


class Session:
    """Persistent-heap evaluation session.

    A session owns a heap, a cumulative step budget, and (optionally) a
    trace.  Test replay constructs objects and invokes entries in one
    session so references stay valid across statements.
    """

    def __init__(self, program, step_limit: int = DEFAULT_STEP_LIMIT,
                 trace: Trace | None = None):
        self.program = program
        self.heap = Heap()
        self.step_limit = step_limit
        self.steps = 0
        self.depth = 0
        self.trace = trace
        self._members: dict[str, list] = {}   # class -> [(BoundClass, MethodDecl)]
        self._fields: dict[str, dict[str, str]] = {}
        self._subclass: dict[tuple[str, str], bool] = {}
        if sys.getrecursionlimit() < 20_000:
            sys.setrecursionlimit(20_000)

    # --------------------------------------------------------- class tables

    def _chain(self, class_name: str):
        chain = []
        seen: set[str] = set()
        name: str | None = class_name
        while name is not None and name not in seen:
            seen.add(name)
            bound = self.program.lookup_class(name)
            if bound is None:
                break
            chain.append(bound)
            name = bound.decl.superclass
        return chain

    def member_table(self, class_name: str):
        table = self._members.get(class_name)
        if table is None:
            table = [
                (bound, method)
                for bound in self._chain(class_name)
                for method in bound.decl.methods
            ]
            self._members[class_name] = table
        return table

    def field_table(self, class_name: str) -> dict[str, str]:
        table = self._fields.get(class_name)
        if table is None:
            table = {}
            for bound in reversed(self._chain(class_name)):
                for fld in bound.decl.fields:
                    table[fld.name] = fld.type_tag
            self._fields[class_name] = table
        return table

    def is_subclass(self, child: str, parent: str) -> bool:
        key = (child, parent)
        cached = self._subclass.get(key)
        if cached is None:
            cached = any(b.decl.name == parent for b in self._chain(child))
            self._subclass[key] = cached
        return cached

    def _accepts(self, tag: str, value: Value) -> bool:
        if tag == "Int":
            return isinstance(value, VInt)
        if tag == "Str":
            return isinstance(value, VStr)
        if tag == "Bool":
            return isinstance(value, VBool)
        if tag == "Bag":
            return isinstance(value, VBag)
        if isinstance(value, VNull):
            return True
        if not isinstance(value, VRef):
            return False
        return self.is_subclass(self.heap.get(value).class_name, tag)

    # ------------------------------------------------------------- stepping

    def _tick(self):
        if self.steps >= self.step_limit:
            raise _StepLimit()
        self.steps += 1

    # ------------------------------------------------------------ execution

    def _exec_block(self, stmts, scope: _Scope, this, unit_key):
        block = _Scope(scope)
        for stmt in stmts:
            self._exec_stmt(stmt, block, this, unit_key)

    def _exec_stmt(self, stmt, scope: _Scope, this, unit_key):
        self._tick()
        kind = type(stmt)
        if kind is A.LetStmt:
            scope.names[stmt.name] = self._eval(stmt.value, scope, this, unit_key)
        elif kind is A.AssignStmt:
            target = stmt.target
            if isinstance(target, A.VarRef):
                holder = scope.find(target.name)
                if holder is None:
                    raise LangError("no-such-method", _loc(target))
                holder.names[target.name] = self._eval(stmt.value, scope, this, unit_key)
            else:
                obj = self._eval(target.obj, scope, this, unit_key)
                if isinstance(obj, VNull):
                    raise LangError("null-dereference", _loc(target))
                if not isinstance(obj, VRef):
                    raise LangError("no-such-method", _loc(target))
                record = self.heap.get(obj)
                if target.name not in record.fields:
                    raise LangError("no-such-method", _loc(target))
                record.fields[target.name] = self._eval(stmt.value, scope, this, unit_key)
        elif kind is A.IfStmt:
            taken = self._eval_cond(stmt, stmt.cond, scope, this, unit_key)
            self._exec_block(stmt.then_body if taken else stmt.else_body,
                             scope, this, unit_key)
        elif kind is A.WhileStmt:
            for _ in range(stmt.bound):
                self._tick()
                if not self._eval_cond(stmt, stmt.cond, scope, this, unit_key):
                    break
                self._exec_block(stmt.body, scope, this, unit_key)
        elif kind is A.ReturnStmt:
            raise _Return(self._eval(stmt.value, scope, this, unit_key))
        elif kind is A.RequireStmt:
            if not self._eval_cond(stmt, stmt.cond, scope, this, unit_key):
                raise LangError("require-failed", _loc(stmt))
        elif kind is A.ExprStmt:
            self._eval(stmt.value, scope, this, unit_key)
        else:
            raise TypeError(f"unexpected statement {kind.__name__}")

    def _eval_cond(self, stmt, cond, scope, this, unit_key) -> bool:
        """Evaluate a condition, recording branch distances when tracing."""
        value, dist_true, dist_false = self._cond_with_distance(cond, scope, this, unit_key)
        if not isinstance(value, VBool):
            raise LangError("no-such-method", _loc(stmt))
        if self.trace is not None:
            self.trace.record_branch(id(stmt), dist_true, dist_false, value.value)
        return value.value

    def _cond_with_distance(self, cond, scope, this, unit_key):
        if isinstance(cond, A.Binary) and cond.op in ("==", "!=", "<", ">"):
            left = self._eval(cond.left, scope, this, unit_key)
            right = self._eval(cond.right, scope, this, unit_key)
            op = cond.op
            if op in ("<", ">"):
                if not (isinstance(left, VInt) and isinstance(right, VInt)):
                    raise LangError("no-such-method", _loc(cond))
                a, b = left.value, right.value
                if op == ">":
                    a, b = b, a
                dist_true = 0.0 if a < b else float(a - b + 1)
                dist_false = 0.0 if a >= b else float(b - a)
                return (TRUE if a < b else FALSE), dist_true, dist_false
            equal = values_equal(left, right, self.heap)
            if isinstance(left, VInt) and isinstance(right, VInt):
                raw = float(abs(left.value - right.value))
            elif isinstance(left, VStr) and isinstance(right, VStr):
                raw = float(levenshtein(left.value, right.value))
            else:
                raw = 0.0 if equal else 1.0
            d_eq_true, d_eq_false = raw, (1.0 if equal else 0.0)
            value = equal if op == "==" else not equal
            if op == "==":
                return (TRUE if value else FALSE), d_eq_true, d_eq_false
            return (TRUE if value else FALSE), d_eq_false, d_eq_true
        value = self._eval(cond, scope, this, unit_key)
        if isinstance(value, VBool):
            dist_true = 0.0 if value.value else 1.0
            return value, dist_true, 1.0 - dist_true
        return value, 0.0, 0.0

    # ----------------------------------------------------------- evaluation

    def _eval(self, expr, scope: _Scope, this, unit_key) -> Value:
        kind = type(expr)
        if kind is A.IntLit:
            return VInt(wrap_int(expr.value))
        if kind is A.StrLit:
            return VStr(expr.value)
        if kind is A.BoolLit:
            return TRUE if expr.value else FALSE
        if kind is A.NullLit:
            return NULL
        if kind is A.VarRef:
            holder = scope.find(expr.name)
            if holder is None:
                raise LangError("no-such-method", _loc(expr))
            return holder.names[expr.name]
        if kind is A.ThisRef:
            if this is None:
                raise LangError("no-such-method", _loc(expr))
            return this
        if kind is A.Binary:
            return self._eval_binary(expr, scope, this, unit_key)
        if kind is A.FieldAccess:
            obj = self._eval(expr.obj, scope, this, unit_key)
            if isinstance(obj, VNull):
                raise LangError("null-dereference", _loc(expr))
            if not isinstance(obj, VRef):
                raise LangError("no-such-method", _loc(expr))
            record = self.heap.get(obj)
            if expr.name not in record.fields:
                raise LangError("no-such-method", _loc(expr))
            return record.fields[expr.name]
        if kind is A.MethodCall:
            receiver = self._eval(expr.obj, scope, this, unit_key)
            args = [self._eval(a, scope, this, unit_key) for a in expr.args]
            return self._invoke(receiver, expr.name, args, expr, unit_key)
        if kind is A.NewObject:
            args = [self._eval(a, scope, this, unit_key) for a in expr.args]
            return self._construct(expr.class_name, args, expr, unit_key)
        if kind is A.BagLit:
            return VBag(tuple(self._eval(a, scope, this, unit_key) for a in expr.items))
        if kind is A.BagInsert:
            bag = self._eval(expr.bag, scope, this, unit_key)
            item = self._eval(expr.item, scope, this, unit_key)
            if not isinstance(bag, VBag):
                raise LangError("no-such-method", _loc(expr))
            return VBag(bag.items + (item,))
        if kind is A.BagFold:
            bag = self._eval(expr.bag, scope, this, unit_key)
            acc = self._eval(expr.init, scope, this, unit_key)
            if not isinstance(bag, VBag):
                raise LangError("no-such-method", _loc(expr))
            for item in bag.items:
                inner = _Scope(scope)
                inner.names[expr.elem_name] = item
                inner.names[expr.acc_name] = acc
                acc = self._eval(expr.body, inner, this, unit_key)
            return acc
        raise TypeError(f"unexpected expression {kind.__name__}")

    def _eval_binary(self, expr: A.Binary, scope, this, unit_key) -> Value:
        op = expr.op
        if op == "&&":
            left = self._eval(expr.left, scope, this, unit_key)
            if not isinstance(left, VBool):
                raise LangError("no-such-method", _loc(expr))
            if not left.value:
                return FALSE
            right = self._eval(expr.right, scope, this, unit_key)
            if not isinstance(right, VBool):
                raise LangError("no-such-method", _loc(expr))
            return right
        if op == "||":
            left = self._eval(expr.left, scope, this, unit_key)
            if not isinstance(left, VBool):
                raise LangError("no-such-method", _loc(expr))
            if left.value:
                return TRUE
            right = self._eval(expr.right, scope, this, unit_key)
            if not isinstance(right, VBool):
                raise LangError("no-such-method", _loc(expr))
            return right
        left = self._eval(expr.left, scope, this, unit_key)
        right = self._eval(expr.right, scope, this, unit_key)
        if op == "==":
            return TRUE if values_equal(left, right, self.heap) else FALSE
        if op == "!=":
            return FALSE if values_equal(left, right, self.heap) else TRUE
        if op == "++":
            if isinstance(left, VStr) and isinstance(right, VStr):
                return VStr(left.value + right.value)
            raise LangError("no-such-method", _loc(expr))
        if not (isinstance(left, VInt) and isinstance(right, VInt)):
            raise LangError("no-such-method", _loc(expr))
        a, b = left.value, right.value
        if op == "+":
            return VInt(wrap_int(a + b))
        if op == "-":
            return VInt(wrap_int(a - b))
        if op == "*":
            return VInt(wrap_int(a * b))
        if op == "/":
            if b == 0:
                raise LangError("division-by-zero", _loc(expr))
            return VInt(div_trunc(a, b))
        if op == "<":
            return TRUE if a < b else FALSE
        if op == ">":
            return TRUE if a > b else FALSE
        raise TypeError(f"unexpected operator {op}")

    # -------------------------------------------------------------- calling

    def _invoke(self, receiver: Value, name: str, args, site, caller_key) -> Value:
        if isinstance(receiver, VNull):
            raise LangError("null-dereference", _loc(site))
        if not isinstance(receiver, VRef):
            raise LangError("no-such-method", _loc(site))
        class_name = self.heap.get(receiver).class_name
        for bound, method in self.member_table(class_name):
            if method.name != name or len(method.params) != len(args):
                continue
            if method.internal and (bound.library, bound.version) != caller_key:
                continue
            if not all(self._accepts(p.type_tag, a) for p, a in zip(method.params, args)):
                continue
            key = (bound.library, bound.version, bound.decl.name, method_signature(method))
            if self.trace is not None:
                self.trace.record_call(id(site), key)
                self.trace.record_enter(key)
            return self._run_body(bound, method.params, method.body, receiver, args,
                                   returns=True)
        raise LangError("no-such-method", _loc(site))

    def _construct(self, class_name: str, args, site, caller_key) -> VRef:
        bound = self.program.lookup_class(class_name)
        if bound is None:
            raise LangError("no-such-method", _loc(site))
        for ctor in bound.decl.ctors:
            if len(ctor.params) != len(args):
                continue
            if ctor.internal and (bound.library, bound.version) != caller_key:
                continue
            if not all(self._accepts(p.type_tag, a) for p, a in zip(ctor.params, args)):
                continue
            ref = self.heap.allocate(bound.decl.name, bound.library, bound.version)
            record = self.heap.get(ref)
            for fname, ftag in self.field_table(class_name).items():
                record.fields[fname] = default_for_tag(ftag)
            key = (bound.library, bound.version, bound.decl.name,
                   f"ctor({','.join(p.type_tag for p in ctor.params)})")
            if self.trace is not None:
                self.trace.record_call(id(site), key)
                self.trace.record_enter(key)
            self._run_body(bound, ctor.params, ctor.body, ref, args, returns=False)
            return ref
        raise LangError("no-such-method", _loc(site))

    def _run_body(self, bound, params, body, this: VRef, args, returns: bool):
        self.depth += 1
        if self.depth > MAX_CALL_DEPTH:
            self.depth -= 1
            raise _StepLimit()
        try:
            frame = _Scope(None)
            for param, arg in zip(params, args):
                frame.names[param.name] = arg
            unit_key = (bound.library, bound.version)
            try:
                self._exec_block(body, frame, this, unit_key)
            except _Return as ret:
                return ret.value
            if returns:
                # unreachable for parsed code: all paths return is checked
                raise LangError("no-such-method", _loc(bound.decl))
            return None
        finally:
            self.depth -= 1

    # ------------------------------------------------------------ publicAPI

    def construct(self, class_name: str, args: list[Value]) -> VRef:
        """Construct an object as external code would (public ctors only)."""
        site = A.NewObject(class_name, (), span=None)
        try:
            return self._construct(class_name, args, site, caller_key=None)
        except LangError as err:
            raise ConstructionFailed(err.kind, err.location) from None
        except _StepLimit:
            raise ConstructionFailed("step-limit-exceeded", "<context>") from None

    def dispatch_method(self, receiver: Value, name: str, args) -> A.MethodDecl | None:
        """Which public method an entry invocation would run, or None."""
        if not isinstance(receiver, VRef):
            return None
        class_name = self.heap.get(receiver).class_name
        for bound, method in self.member_table(class_name):
            if (
                method.name == name
                and not method.internal
                and len(method.params) == len(args)
                and all(self._accepts(p.type_tag, a) for p, a in zip(method.params, args))
            ):
                return method
        return None

    def invoke_for_value(self, receiver: Value, method_name: str,
                         args: list[Value]) -> Value:
        """Run one public method for its return value; any failure surfaces
        as ConstructionFailed (used while realizing mined contexts)."""
        site = A.MethodCall(A.ThisRef(span=None), method_name, (), span=None)
        try:
            return self._invoke(receiver, method_name, args, site, caller_key=None)
        except LangError as err:
            raise ConstructionFailed(err.kind, err.location) from None
        except _StepLimit:
            raise ConstructionFailed("step-limit-exceeded", "<context>") from None

    def invoke_entry(self, receiver: Value, method_name: str,
                     args: list[Value]) -> ExecutionOutcome:
        """Invoke one public method and observe status/value/steps/heap."""
        entry_method = self.dispatch_method(receiver, method_name, args)
        site = A.MethodCall(A.ThisRef(span=None), method_name, (), span=None)
        try:
            value = self._invoke(receiver, method_name, args, site, caller_key=None)
            return ExecutionOutcome(STATUS_RETURNED, value, None, None,
                                    self.steps, self.heap, entry_method)
        except LangError as err:
            return ExecutionOutcome(STATUS_RAISED, None, err.kind, err.location,
                                    self.steps, self.heap, entry_method)
        except _StepLimit:
            return ExecutionOutcome(STATUS_LIMIT, None, None, None,
                                    self.steps, self.heap, entry_method)


def evaluate_entry(
    program,
    receiver: Value,
    method_name: str,
    args: list[Value],
    step_limit: int = DEFAULT_STEP_LIMIT,
    trace: Trace | None = None,
) -> ExecutionOutcome:
    """One-shot entry invocation in a fresh session."""
    return Session(program, step_limit, trace).invoke_entry(receiver, method_name, args)
