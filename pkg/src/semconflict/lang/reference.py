"""Naive reference evaluator.

A deliberately simple second implementation of the ModLang semantics
(docs/modlang.md), kept free of instrumentation and sessions.  The production
interpreter is cross-checked against this one on randomly generated programs;
any divergence is a bug in one of them.
"""
from __future__ import annotations

import sys

from . import ast as A
from .outcome import (
    DEFAULT_STEP_LIMIT,
    MAX_CALL_DEPTH,
    STATUS_LIMIT,
    STATUS_RAISED,
    STATUS_RETURNED,
    ConstructionFailed,
    ExecutionOutcome,
)
from .program import field_namespace, is_subclass, superclass_chain
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
    tag_accepts,
    values_equal,
    wrap_int,
)


class _Error(Exception):
    def __init__(self, kind: str, location: str):
        super().__init__(f"{kind} at {location}")
        self.kind = kind
        self.location = location


class _StepLimit(Exception):
    pass


class _Return(Exception):
    def __init__(self, value: Value):
        self.value = value


def _loc(node) -> str:
    return str(node.span) if getattr(node, "span", None) else "?"


class _Env:
    __slots__ = ("parent", "names")

    def __init__(self, parent: "_Env | None"):
        self.parent = parent
        self.names: dict[str, Value] = {}

    def lookup(self, name: str) -> "_Env | None":
        env: _Env | None = self
        while env is not None:
            if name in env.names:
                return env
            env = env.parent
        return None


class _Eval:
    def __init__(self, program, heap: Heap, step_limit: int):
        self.program = program
        self.heap = heap
        self.limit = step_limit
        self.steps = 0
        self.depth = 0

    # ------------------------------------------------------------- plumbing

    def tick(self):
        if self.steps >= self.limit:
            raise _StepLimit()
        self.steps += 1

    def enter(self):
        self.depth += 1
        if self.depth > MAX_CALL_DEPTH:
            raise _StepLimit()

    def leave(self):
        self.depth -= 1

    def ref_class(self, ref: VRef) -> str:
        return self.heap.get(ref).class_name

    def accepts(self, tag: str, value: Value) -> bool:
        return tag_accepts(
            tag, value, self.ref_class, lambda c, p: is_subclass(self.program, c, p)
        )

    # ------------------------------------------------------------ execution

    def exec_block(self, stmts, env: _Env, this: VRef | None, unit_key):
        inner = _Env(env)
        for stmt in stmts:
            self.exec_stmt(stmt, inner, this, unit_key)

    def exec_stmt(self, stmt, env: _Env, this, unit_key):
        self.tick()
        if isinstance(stmt, A.LetStmt):
            env.names[stmt.name] = self.eval(stmt.value, env, this, unit_key)
        elif isinstance(stmt, A.AssignStmt):
            self.exec_assign(stmt, env, this, unit_key)
        elif isinstance(stmt, A.IfStmt):
            cond = self.eval(stmt.cond, env, this, unit_key)
            if not isinstance(cond, VBool):
                raise _Error("no-such-method", _loc(stmt))
            branch = stmt.then_body if cond.value else stmt.else_body
            self.exec_block(branch, env, this, unit_key)
        elif isinstance(stmt, A.WhileStmt):
            for _ in range(stmt.bound):
                self.tick()
                cond = self.eval(stmt.cond, env, this, unit_key)
                if not isinstance(cond, VBool):
                    raise _Error("no-such-method", _loc(stmt))
                if not cond.value:
                    break
                self.exec_block(stmt.body, env, this, unit_key)
        elif isinstance(stmt, A.ReturnStmt):
            raise _Return(self.eval(stmt.value, env, this, unit_key))
        elif isinstance(stmt, A.RequireStmt):
            cond = self.eval(stmt.cond, env, this, unit_key)
            if not isinstance(cond, VBool):
                raise _Error("no-such-method", _loc(stmt))
            if not cond.value:
                raise _Error("require-failed", _loc(stmt))
        elif isinstance(stmt, A.ExprStmt):
            self.eval(stmt.value, env, this, unit_key)
        else:
            raise TypeError(f"unexpected statement {type(stmt).__name__}")

    def exec_assign(self, stmt: A.AssignStmt, env, this, unit_key):
        target = stmt.target
        if isinstance(target, A.VarRef):
            holder = env.lookup(target.name)
            if holder is None:
                raise _Error("no-such-method", _loc(target))
            holder.names[target.name] = self.eval(stmt.value, env, this, unit_key)
            return
        assert isinstance(target, A.FieldAccess)
        obj = self.eval(target.obj, env, this, unit_key)
        if isinstance(obj, VNull):
            raise _Error("null-dereference", _loc(target))
        if not isinstance(obj, VRef):
            raise _Error("no-such-method", _loc(target))
        record = self.heap.get(obj)
        if target.name not in record.fields:
            raise _Error("no-such-method", _loc(target))
        record.fields[target.name] = self.eval(stmt.value, env, this, unit_key)

    # ----------------------------------------------------------- evaluation

    def eval(self, expr, env: _Env, this, unit_key) -> Value:
        if isinstance(expr, A.IntLit):
            return VInt(wrap_int(expr.value))
        if isinstance(expr, A.StrLit):
            return VStr(expr.value)
        if isinstance(expr, A.BoolLit):
            return TRUE if expr.value else FALSE
        if isinstance(expr, A.NullLit):
            return NULL
        if isinstance(expr, A.ThisRef):
            if this is None:
                raise _Error("no-such-method", _loc(expr))
            return this
        if isinstance(expr, A.VarRef):
            holder = env.lookup(expr.name)
            if holder is None:
                raise _Error("no-such-method", _loc(expr))
            return holder.names[expr.name]
        if isinstance(expr, A.Binary):
            return self.eval_binary(expr, env, this, unit_key)
        if isinstance(expr, A.FieldAccess):
            obj = self.eval(expr.obj, env, this, unit_key)
            if isinstance(obj, VNull):
                raise _Error("null-dereference", _loc(expr))
            if not isinstance(obj, VRef):
                raise _Error("no-such-method", _loc(expr))
            record = self.heap.get(obj)
            if expr.name not in record.fields:
                raise _Error("no-such-method", _loc(expr))
            return record.fields[expr.name]
        if isinstance(expr, A.MethodCall):
            receiver = self.eval(expr.obj, env, this, unit_key)
            args = [self.eval(a, env, this, unit_key) for a in expr.args]
            return self.invoke(receiver, expr.name, args, expr, unit_key)
        if isinstance(expr, A.NewObject):
            args = [self.eval(a, env, this, unit_key) for a in expr.args]
            return self.construct(expr.class_name, args, expr, unit_key)
        if isinstance(expr, A.BagLit):
            return VBag(tuple(self.eval(a, env, this, unit_key) for a in expr.items))
        if isinstance(expr, A.BagInsert):
            bag = self.eval(expr.bag, env, this, unit_key)
            item = self.eval(expr.item, env, this, unit_key)
            if not isinstance(bag, VBag):
                raise _Error("no-such-method", _loc(expr))
            return VBag(bag.items + (item,))
        if isinstance(expr, A.BagFold):
            bag = self.eval(expr.bag, env, this, unit_key)
            acc = self.eval(expr.init, env, this, unit_key)
            if not isinstance(bag, VBag):
                raise _Error("no-such-method", _loc(expr))
            for item in bag.items:
                inner = _Env(env)
                inner.names[expr.elem_name] = item
                inner.names[expr.acc_name] = acc
                acc = self.eval(expr.body, inner, this, unit_key)
            return acc
        raise TypeError(f"unexpected expression {type(expr).__name__}")

    def eval_binary(self, expr: A.Binary, env, this, unit_key) -> Value:
        op = expr.op
        if op == "&&" or op == "||":
            left = self.eval(expr.left, env, this, unit_key)
            if not isinstance(left, VBool):
                raise _Error("no-such-method", _loc(expr))
            if op == "&&" and not left.value:
                return FALSE
            if op == "||" and left.value:
                return TRUE
            right = self.eval(expr.right, env, this, unit_key)
            if not isinstance(right, VBool):
                raise _Error("no-such-method", _loc(expr))
            return right
        left = self.eval(expr.left, env, this, unit_key)
        right = self.eval(expr.right, env, this, unit_key)
        if op == "==":
            return TRUE if values_equal(left, right, self.heap) else FALSE
        if op == "!=":
            return FALSE if values_equal(left, right, self.heap) else TRUE
        if op == "++":
            if isinstance(left, VStr) and isinstance(right, VStr):
                return VStr(left.value + right.value)
            raise _Error("no-such-method", _loc(expr))
        if not (isinstance(left, VInt) and isinstance(right, VInt)):
            raise _Error("no-such-method", _loc(expr))
        if op == "+":
            return VInt(wrap_int(left.value + right.value))
        if op == "-":
            return VInt(wrap_int(left.value - right.value))
        if op == "*":
            return VInt(wrap_int(left.value * right.value))
        if op == "/":
            if right.value == 0:
                raise _Error("division-by-zero", _loc(expr))
            return VInt(div_trunc(left.value, right.value))
        if op == "<":
            return TRUE if left.value < right.value else FALSE
        if op == ">":
            return TRUE if left.value > right.value else FALSE
        raise TypeError(f"unexpected operator {op}")

    # -------------------------------------------------------------- calling

    def visible(self, internal: bool, owner_key, caller_key) -> bool:
        return not internal or owner_key == caller_key

    def invoke(self, receiver: Value, name: str, args, site, caller_key) -> Value:
        if isinstance(receiver, VNull):
            raise _Error("null-dereference", _loc(site))
        if not isinstance(receiver, VRef):
            raise _Error("no-such-method", _loc(site))
        record = self.heap.get(receiver)
        for bound in superclass_chain(self.program, record.class_name):
            for method in bound.decl.methods:
                if method.name != name or len(method.params) != len(args):
                    continue
                if not all(
                    self.accepts(p.type_tag, a) for p, a in zip(method.params, args)
                ):
                    continue
                owner_key = (bound.library, bound.version)
                if not self.visible(method.internal, owner_key, caller_key):
                    continue
                return self.run_method(bound, method, receiver, args)
        raise _Error("no-such-method", _loc(site))

    def run_method(self, bound, method: A.MethodDecl, receiver: VRef, args) -> Value:
        self.enter()
        try:
            env = _Env(None)
            for param, arg in zip(method.params, args):
                env.names[param.name] = arg
            try:
                self.exec_block(method.body, env, receiver, (bound.library, bound.version))
            except _Return as ret:
                return ret.value
            # parse-time all-paths-return check makes this unreachable
            raise _Error("no-such-method", _loc(method))
        finally:
            self.leave()

    def construct(self, class_name: str, args, site, caller_key) -> VRef:
        bound = self.program.lookup_class(class_name)
        if bound is None:
            raise _Error("no-such-method", _loc(site))
        for ctor in bound.decl.ctors:
            if len(ctor.params) != len(args):
                continue
            if not all(self.accepts(p.type_tag, a) for p, a in zip(ctor.params, args)):
                continue
            owner_key = (bound.library, bound.version)
            if not self.visible(ctor.internal, owner_key, caller_key):
                continue
            ref = self.heap.allocate(bound.decl.name, bound.library, bound.version)
            record = self.heap.get(ref)
            for fname, ftag in field_namespace(self.program, class_name).items():
                record.fields[fname] = default_for_tag(ftag)
            self.enter()
            try:
                env = _Env(None)
                for param, arg in zip(ctor.params, args):
                    env.names[param.name] = arg
                self.exec_block(ctor.body, env, ref, (bound.library, bound.version))
            finally:
                self.leave()
            return ref
        raise _Error("no-such-method", _loc(site))


def evaluate_entry(
    program,
    receiver: Value,
    method_name: str,
    args: list[Value],
    step_limit: int = DEFAULT_STEP_LIMIT,
    heap: Heap | None = None,
    session_eval: "_Eval | None" = None,
) -> ExecutionOutcome:
    """Invoke one public method on a receiver and observe the outcome."""
    if sys.getrecursionlimit() < 20_000:
        sys.setrecursionlimit(20_000)
    ev = session_eval or _Eval(program, heap or Heap(), step_limit)
    entry_method: A.MethodDecl | None = None
    if isinstance(receiver, VRef):
        record = ev.heap.get(receiver)
        for bound in superclass_chain(program, record.class_name):
            for method in bound.decl.methods:
                if (
                    method.name == method_name
                    and len(method.params) == len(args)
                    and all(
                        ev.accepts(p.type_tag, a)
                        for p, a in zip(method.params, args)
                    )
                    and not method.internal
                ):
                    entry_method = method
                    break
            if entry_method is not None:
                break
    fake_site = A.VarRef(method_name, span=None)
    try:
        value = ev.invoke(receiver, method_name, args, fake_site, caller_key=None)
        return ExecutionOutcome(
            STATUS_RETURNED, value, None, None, ev.steps, ev.heap, entry_method
        )
    except _Error as err:
        return ExecutionOutcome(
            STATUS_RAISED, None, err.kind, err.location, ev.steps, ev.heap, entry_method
        )
    except _StepLimit:
        return ExecutionOutcome(
            STATUS_LIMIT, None, None, None, ev.steps, ev.heap, entry_method
        )


class ReferenceSession:
    """Persistent-heap evaluation session for the reference evaluator."""

    def __init__(self, program, step_limit: int = DEFAULT_STEP_LIMIT):
        self.program = program
        self.ev = _Eval(program, Heap(), step_limit)

    def construct(self, class_name: str, args: list[Value]) -> VRef:
        site = A.VarRef(class_name, span=None)
        try:
            return self.ev.construct(class_name, args, site, caller_key=None)
        except _Error as err:
            raise ConstructionFailed(err.kind, err.location) from None

    def invoke_entry(self, receiver: Value, method_name: str, args: list[Value]) -> ExecutionOutcome:
        return evaluate_entry(
            self.program, receiver, method_name, args, session_eval=self.ev
        )
