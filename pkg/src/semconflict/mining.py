"""Constructor invocation-context mining and the class-instance pool.

Arguments at project construction sites are recovered three ways: literals
(directly or through the latest assignment to a local), nested constructions
(recursively mined), and method-call results (callee recorded with mined
receiver and argument bindings).  Anything else falls back to a random value
of the declared type.  Each context records how many resolution levels it
needed (its depth), which later drives the seeding probability.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field

from .lang import ast as A
from .lang.ast import ctor_signature
from .lang.interp import Session
from .lang.program import is_subclass, superclass_chain
from .lang.values import (
    NULL,
    Value,
    VBag,
    VBool,
    VInt,
    VStr,
    to_jsonable,
)
from .resolver import ResolvedProgram
from .static_types import CallSite, callable_sites, infer_expr_tag

DEFAULT_DN = 5
_CASE2_CALLER_LEVELS = 3


# ------------------------------------------------------------------- bindings


@dataclass(frozen=True)
class LiteralBinding:
    """Argument recovered as a concrete value from source text."""

    value: Value
    case_tag = 1

    def to_jsonable(self) -> dict:
        return {"case": 1, "kind": "literal", "value": to_jsonable(self.value, None)}


@dataclass(frozen=True)
class InstanceBinding:
    """Argument that is itself a mined construction."""

    context: "InvocationContext"
    case_tag = 2

    def to_jsonable(self) -> dict:
        return {"case": 2, "kind": "instance", "context": self.context.to_jsonable()}


@dataclass(frozen=True)
class CallBinding:
    """Argument produced by a method call."""

    receiver: "ArgBinding"
    class_name: str  # class declaring the resolved callee
    method_name: str
    args: tuple["ArgBinding", ...]
    case_tag = 3

    def to_jsonable(self) -> dict:
        return {
            "case": 3,
            "kind": "call",
            "class": self.class_name,
            "method": self.method_name,
            "receiver": self.receiver.to_jsonable(),
            "args": [a.to_jsonable() for a in self.args],
        }


@dataclass(frozen=True)
class RandomBinding:
    """Argument the miner could not recover; drawn from rng when realized."""

    type_tag: str
    case_tag = "random"

    def to_jsonable(self) -> dict:
        return {"case": "random", "kind": "random", "type_tag": self.type_tag}


ArgBinding = LiteralBinding | InstanceBinding | CallBinding | RandomBinding


def binding_depth(binding: ArgBinding) -> int:
    if isinstance(binding, InstanceBinding):
        return binding.context.depth
    if isinstance(binding, CallBinding):
        subs = [binding_depth(binding.receiver)]
        subs.extend(binding_depth(a) for a in binding.args)
        return 1 + max(subs)
    return 0


@dataclass(frozen=True)
class InvocationContext:
    """One mined way of constructing a class, with per-parameter bindings."""

    class_name: str
    ctor_signature: str
    bindings: tuple[ArgBinding, ...]
    depth: int
    provenance: tuple[A.Span, ...] = field(compare=False, repr=False, default=())

    def to_jsonable(self) -> dict:
        return {
            "class": self.class_name,
            "ctor": self.ctor_signature,
            "depth": self.depth,
            "bindings": [b.to_jsonable() for b in self.bindings],
            "provenance": [[s.line, s.col] for s in self.provenance],
        }


def binding_from_jsonable(data: dict) -> ArgBinding:
    case = data["case"]
    if case == 1:
        return LiteralBinding(value_from_jsonable(data["value"]))
    if case == 2:
        return InstanceBinding(context_from_jsonable(data["context"]))
    if case == 3:
        return CallBinding(
            binding_from_jsonable(data["receiver"]),
            data["class"],
            data["method"],
            tuple(binding_from_jsonable(a) for a in data["args"]),
        )
    if case == "random":
        return RandomBinding(data["type_tag"])
    raise ValueError(f"unknown binding case {case!r}")


def context_from_jsonable(data: dict) -> InvocationContext:
    return InvocationContext(
        data["class"],
        data["ctor"],
        tuple(binding_from_jsonable(b) for b in data["bindings"]),
        data["depth"],
        tuple(A.Span(line, col) for line, col in data.get("provenance", [])),
    )


def value_from_jsonable(data: dict) -> Value:
    """Inverse of the literal-value serialization (primitives and bags only;
    object values never appear inside mined bindings)."""
    kind = data["t"]
    if kind == "int":
        return VInt(data["v"])
    if kind == "str":
        return VStr(data["v"])
    if kind == "bool":
        return VBool(data["v"])
    if kind == "null":
        return NULL
    if kind == "bag":
        return VBag(tuple(value_from_jsonable(i) for i in data["items"]))
    raise ValueError(f"not a literal value: {kind!r}")


@dataclass(frozen=True)
class ConstructorSet:
    class_name: str
    constructors: tuple[A.CtorDecl, ...]


def collect_constructors(program: ResolvedProgram, class_name: str) -> ConstructorSet:
    """Externally usable constructors of a class; empty when the class is not
    instantiable from outside its unit."""
    bound = program.lookup_class(class_name)
    if bound is None:
        raise ValueError(f"unknown class {class_name!r}")
    public = tuple(c for c in bound.decl.ctors if not c.internal)
    return ConstructorSet(class_name, public)


# ---------------------------------------------------------------------- miner


@dataclass(frozen=True)
class _Member:
    """A project method or constructor whose body the miner scans."""

    class_name: str
    decl: A.MethodDecl | A.CtorDecl

    @property
    def params(self) -> tuple[A.Param, ...]:
        return self.decl.params

    @property
    def body(self):
        return self.decl.body


def _walk_body(body):
    for stmt in body:
        yield from A.walk(stmt)


def _span_key(node) -> tuple[int, int]:
    span = getattr(node, "span", None)
    return (span.line, span.col) if span is not None else (0, 0)


class _Miner:
    def __init__(self, program: ResolvedProgram, dn: int):
        self.program = program
        self.dn = dn
        unit = program.workspace.project_unit
        self.members: list[_Member] = []
        for cls in unit.classes:
            for ctor in cls.ctors:
                self.members.append(_Member(cls.name, ctor))
            for method in cls.methods:
                self.members.append(_Member(cls.name, method))
        self._sites: dict[int, list[CallSite]] = {}
        self._resolving: set[int] = set()

    def sites_of(self, member: _Member) -> list[CallSite]:
        key = id(member.decl)
        if key not in self._sites:
            self._sites[key] = callable_sites(
                self.program, member.class_name, member.params, member.body)
        return self._sites[key]

    # ------------------------------------------------------------ static env

    def _env_at(self, member: _Member, at: tuple[int, int]) -> dict[str, str | None]:
        env: dict[str, str | None] = {
            p.name: p.type_tag for p in member.params}
        assigns = [
            node for node in _walk_body(member.body)
            if isinstance(node, (A.LetStmt, A.AssignStmt)) and _span_key(node) < at
        ]
        assigns.sort(key=_span_key)
        for node in assigns:
            if isinstance(node, A.LetStmt):
                env[node.name] = infer_expr_tag(
                    self.program, member.class_name, node.value, env)
            elif isinstance(node.target, A.VarRef):
                env[node.target.name] = infer_expr_tag(
                    self.program, member.class_name, node.value, env)
        return env

    def _tag_of(self, member: _Member, expr, at: tuple[int, int]) -> str | None:
        return infer_expr_tag(self.program, member.class_name, expr,
                              self._env_at(member, at))

    # ------------------------------------------------------------ resolution

    def _match_ctor(self, class_name: str, arg_exprs, member: _Member,
                    at: tuple[int, int]) -> A.CtorDecl | None:
        bound = self.program.lookup_class(class_name)
        if bound is None:
            return None
        public = [c for c in bound.decl.ctors
                  if not c.internal and len(c.params) == len(arg_exprs)]
        if len(public) > 1:
            tags = [self._tag_of(member, e, at) for e in arg_exprs]
            narrowed = [
                c for c in public
                if all(t is None or t == p.type_tag
                       or (p.type_tag not in A.PRIMITIVE_TAGS
                           and is_subclass(self.program, t, p.type_tag))
                       for t, p in zip(tags, c.params))
            ]
            if narrowed:
                public = narrowed
        return public[0] if public else None

    def _resolve_callee(self, receiver_tag: str | None, name: str, argc: int):
        if receiver_tag is None or receiver_tag in A.PRIMITIVE_TAGS:
            return None
        for bound in superclass_chain(self.program, receiver_tag):
            for m in bound.decl.methods:
                if m.name == name and len(m.params) == argc and not m.internal:
                    return bound.decl.name, m
        return None

    def context_from_site(self, site: CallSite, member: _Member,
                          levels: int, caller_depth: int) -> InvocationContext | None:
        if levels < 1:
            return None
        at = _span_key(site.node)
        ctor = self._match_ctor(site.name, site.arg_nodes, member, at)
        if ctor is None:
            return None
        bindings = tuple(
            self.resolve_expr(arg, member, levels - 1, caller_depth,
                              expected_tag=param.type_tag)
            for arg, param in zip(site.arg_nodes, ctor.params)
        )
        depth = 1 + max((binding_depth(b) for b in bindings), default=0)
        span = getattr(site.node, "span", None)
        provenance = (span,) if span is not None else ()
        return InvocationContext(site.name, ctor_signature(ctor), bindings,
                                 depth, provenance)

    def resolve_expr(self, expr, member: _Member, levels: int,
                     caller_depth: int, expected_tag: str | None) -> ArgBinding:
        at = _span_key(expr)

        def fallback() -> RandomBinding:
            tag = expected_tag or self._tag_of(member, expr, at) or "Int"
            return RandomBinding(tag)

        if isinstance(expr, A.IntLit):
            return LiteralBinding(VInt(expr.value))
        if isinstance(expr, A.StrLit):
            return LiteralBinding(VStr(expr.value))
        if isinstance(expr, A.BoolLit):
            return LiteralBinding(VBool(expr.value))
        if isinstance(expr, A.NullLit):
            return LiteralBinding(NULL)

        if isinstance(expr, A.Binary):
            return self._fold_binary(expr, member, levels, caller_depth, fallback)

        if isinstance(expr, A.BagLit):
            items = [self.resolve_expr(e, member, levels, caller_depth, None)
                     for e in expr.items]
            if all(isinstance(b, LiteralBinding) for b in items):
                return LiteralBinding(VBag(tuple(b.value for b in items)))
            return fallback()

        if isinstance(expr, A.VarRef):
            return self._resolve_var(expr, member, levels, caller_depth,
                                     expected_tag, fallback)

        if isinstance(expr, A.NewObject):
            if levels < 1:
                return fallback()
            site = CallSite(expr, True, expr.class_name, None,
                            len(expr.args), tuple(expr.args), None, ())
            ctx = self.context_from_site(site, member, levels, caller_depth)
            return InstanceBinding(ctx) if ctx is not None else fallback()

        if isinstance(expr, A.MethodCall):
            if levels < 1:
                return fallback()
            recv_tag = self._tag_of(member, expr.obj, at)
            resolved = self._resolve_callee(recv_tag, expr.name, len(expr.args))
            if resolved is None:
                return fallback()
            decl_class, method = resolved
            receiver = self.resolve_expr(expr.obj, member, levels - 1,
                                         caller_depth, recv_tag)
            args = tuple(
                self.resolve_expr(arg, member, levels - 1, caller_depth,
                                  param.type_tag)
                for arg, param in zip(expr.args, method.params)
            )
            return CallBinding(receiver, decl_class, method.name, args)

        return fallback()

    def _fold_binary(self, expr: A.Binary, member, levels, caller_depth, fallback):
        left = self.resolve_expr(expr.left, member, levels, caller_depth, None)
        right = self.resolve_expr(expr.right, member, levels, caller_depth, None)
        if isinstance(left, LiteralBinding) and isinstance(right, LiteralBinding):
            lv, rv = left.value, right.value
            if isinstance(lv, VInt) and isinstance(rv, VInt):
                from .lang.values import div_trunc, wrap_int

                if expr.op == "+":
                    return LiteralBinding(VInt(wrap_int(lv.value + rv.value)))
                if expr.op == "-":
                    return LiteralBinding(VInt(wrap_int(lv.value - rv.value)))
                if expr.op == "*":
                    return LiteralBinding(VInt(wrap_int(lv.value * rv.value)))
                if expr.op == "/" and rv.value != 0:
                    return LiteralBinding(VInt(div_trunc(lv.value, rv.value)))
            if expr.op == "++" and isinstance(lv, VStr) and isinstance(rv, VStr):
                return LiteralBinding(VStr(lv.value + rv.value))
        return fallback()

    def _resolve_var(self, expr: A.VarRef, member, levels, caller_depth,
                     expected_tag, fallback):
        at = _span_key(expr)
        candidates = [
            node for node in _walk_body(member.body)
            if _span_key(node) < at
            and (
                (isinstance(node, A.LetStmt) and node.name == expr.name)
                or (isinstance(node, A.AssignStmt)
                    and isinstance(node.target, A.VarRef)
                    and node.target.name == expr.name)
            )
        ]
        candidates.sort(key=_span_key, reverse=True)  # latest assignment first
        for node in candidates:
            if id(node) in self._resolving:
                continue
            self._resolving.add(id(node))
            try:
                bound = self.resolve_expr(node.value, member, levels,
                                          caller_depth, expected_tag)
            finally:
                self._resolving.discard(id(node))
            if not isinstance(bound, RandomBinding):
                return bound
        if any(p.name == expr.name for p in member.params):
            resolved = self._resolve_param(expr.name, member, levels, caller_depth,
                                           expected_tag)
            if resolved is not None:
                return resolved
        return fallback()

    def _resolve_param(self, name: str, member: _Member, levels: int,
                       caller_depth: int, expected_tag) -> ArgBinding | None:
        """Chase an argument that is a parameter of its enclosing method into
        that method's own project callers (bounded recursion)."""
        if caller_depth >= _CASE2_CALLER_LEVELS:
            return None
        index = next(i for i, p in enumerate(member.params) if p.name == name)
        if isinstance(member.decl, A.CtorDecl):
            matches = self._ctor_caller_args(member, index)
        else:
            matches = self._method_caller_args(member, index)
        for caller, arg_expr in matches:
            key = id(arg_expr)
            if key in self._resolving:
                continue
            self._resolving.add(key)
            try:
                bound = self.resolve_expr(arg_expr, caller, levels,
                                          caller_depth + 1, expected_tag)
            finally:
                self._resolving.discard(key)
            if not isinstance(bound, RandomBinding):
                return bound
        return None

    def _method_caller_args(self, member: _Member, index: int):
        decl = member.decl
        out = []
        for caller in self.members:
            if caller.decl is decl:
                continue
            for site in self.sites_of(caller):
                if site.is_ctor or site.name != decl.name \
                        or site.argc != len(decl.params):
                    continue
                tag = site.receiver_tag
                if tag is not None and tag in A.PRIMITIVE_TAGS:
                    continue
                if tag is not None and member.class_name not in (
                        b.decl.name for b in superclass_chain(self.program, tag)):
                    continue
                out.append((caller, site.arg_nodes[index]))
        return out

    def _ctor_caller_args(self, member: _Member, index: int):
        out = []
        for caller in self.members:
            if caller.decl is member.decl:
                continue
            for site in self.sites_of(caller):
                if site.is_ctor and site.name == member.class_name \
                        and site.argc == len(member.params):
                    out.append((caller, site.arg_nodes[index]))
        return out

    # ----------------------------------------------------------------- mining

    def contexts_for_ctor(self, class_name: str, ctor: A.CtorDecl):
        contexts = []
        for member in self.members:
            for site in self.sites_of(member):
                if not site.is_ctor or site.name != class_name:
                    continue
                at = _span_key(site.node)
                if self._match_ctor(class_name, site.arg_nodes, member, at) is not ctor:
                    continue
                ctx = self.context_from_site(site, member, self.dn, 0)
                if ctx is not None:
                    contexts.append(ctx)
        return contexts


def mine_contexts(program: ResolvedProgram, class_name: str, ctor: A.CtorDecl,
                  dn: int = DEFAULT_DN) -> list[InvocationContext]:
    """Contexts for one constructor, one per project call site (pre-dedup)."""
    if dn < 1:
        raise ValueError("dn must be >= 1")
    return _Miner(program, dn).contexts_for_ctor(class_name, ctor)


# ----------------------------------------------------------------------- pool


@dataclass
class PoolEntry:
    context: InvocationContext
    t_s: int = 0  # times this context has been seeded into a test


class InstancePool:
    """Per-class mined invocation contexts with seeding counters."""

    def __init__(self, entries: dict[str, list[PoolEntry]], total_classes: int,
                 dn: int):
        self.entries = entries
        self.total_classes = total_classes
        self.dn = dn

    def classes(self) -> list[str]:
        return sorted(self.entries)

    def entries_for(self, class_name: str) -> list[PoolEntry]:
        return self.entries.get(class_name, [])

    def coverage(self) -> dict:
        covered = [cls for cls, rows in sorted(self.entries.items()) if rows]
        n_c = len(covered)
        n_t = self.total_classes
        n_i = (sum(len(self.entries[c]) for c in covered) / n_c) if n_c else 0.0
        return {"covered_classes": n_c, "total_classes": n_t,
                "coverage_ratio": (n_c / n_t) if n_t else 0.0,
                "mean_contexts_per_covered_class": n_i}

    def copy(self) -> "InstancePool":
        """Fresh pool with the same contexts and zeroed seeding counters."""
        fresh = {
            cls: [PoolEntry(row.context, 0) for row in rows]
            for cls, rows in self.entries.items()
        }
        return InstancePool(fresh, self.total_classes, self.dn)

    def to_jsonable(self) -> dict:
        return {
            "dn": self.dn,
            "classes": {
                cls: [
                    {**row.context.to_jsonable(), "t_s": row.t_s}
                    for row in rows
                ]
                for cls, rows in sorted(self.entries.items())
            },
            "coverage": self.coverage(),
        }


def build_pool(program: ResolvedProgram, dn: int = DEFAULT_DN) -> InstancePool:
    """Mine every class on the classpath from project construction sites."""
    if dn < 1:
        raise ValueError("dn must be >= 1")
    miner = _Miner(program, dn)
    class_names = sorted(program.classpath.class_index)
    entries: dict[str, list[PoolEntry]] = {}
    for class_name in class_names:
        ctor_set = collect_constructors(program, class_name)
        contexts: list[InvocationContext] = []
        for ctor in ctor_set.constructors:
            contexts.extend(miner.contexts_for_ctor(class_name, ctor))
        contexts.sort(key=lambda c: (c.depth,) + tuple(
            (s.line, s.col) for s in c.provenance))
        unique: list[InvocationContext] = []
        for ctx in contexts:
            if ctx not in unique:
                unique.append(ctx)
        if unique:
            entries[class_name] = [PoolEntry(ctx) for ctx in unique]
    return InstancePool(entries, len(class_names), dn)


# ------------------------------------------------------------------ realizing


_STR_ALPHABET = string.ascii_letters + string.digits + "-_./:"


def random_value(type_tag: str, rng) -> Value:
    """Draw a value of the given type; class-typed fallbacks yield null."""
    if type_tag == "Int":
        return VInt(rng.randint(-100, 1000))
    if type_tag == "Str":
        n = rng.randint(0, 10)
        return VStr("".join(rng.choice(_STR_ALPHABET) for _ in range(n)))
    if type_tag == "Bool":
        return VBool(rng.random() < 0.5)
    if type_tag == "Bag":
        n = rng.randint(0, 3)
        return VBag(tuple(VInt(rng.randint(-10, 10)) for _ in range(n)))
    return NULL


def realize_binding(binding: ArgBinding, session: Session, rng) -> Value:
    if isinstance(binding, LiteralBinding):
        return binding.value
    if isinstance(binding, RandomBinding):
        return random_value(binding.type_tag, rng)
    if isinstance(binding, InstanceBinding):
        return _instantiate_in(binding.context, session, rng)
    receiver = realize_binding(binding.receiver, session, rng)
    args = [realize_binding(a, session, rng) for a in binding.args]
    return session.invoke_for_value(receiver, binding.method_name, args)


def _instantiate_in(context: InvocationContext, session: Session, rng):
    args = [realize_binding(b, session, rng) for b in context.bindings]
    return session.construct(context.class_name, args)


def instantiate(context: InvocationContext, program, rng,
                session: Session | None = None):
    """Realize a mined context bottom-up; raises ConstructionFailed when any
    constructor or recorded call fails."""
    if session is None:
        session = Session(program)
    return _instantiate_in(context, session, rng)
