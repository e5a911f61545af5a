"""Search-based test generation driving execution to a target API.

A test is a flat statement sequence: value definitions, optional state-setting
calls, and one final entry-method invocation.  A genetic search evolves these
sequences toward executing the shadowed API along one of its recorded
invocation chains, guided by approach level plus normalized branch distance.
Object arguments are drawn from the mined instance pool with a probability
that decays with construction depth and with how often an entry has already
been seeded.
"""
from __future__ import annotations

import hashlib
import random
import time
from dataclasses import dataclass, replace

from .conflicts import ApiRef, CallGraph, ConflictingPair, PathSet
from .lang import ast as A
from .lang.ast import ctor_signature
from .lang.interp import Session, Trace
from .lang.outcome import (
    DEFAULT_STEP_LIMIT,
    STATUS_RAISED,
    STATUS_RETURNED,
    ConstructionFailed,
    ExecutionOutcome,
    StateSnapshot,
    snapshot_state,
)
from .lang.program import superclass_chain
from .lang.values import NULL, Value, to_jsonable
from .mining import (
    InstancePool,
    InvocationContext,
    context_from_jsonable,
    instantiate,
    random_value,
    value_from_jsonable,
)
from .resolver import ResolvedProgram


def seeding_probability(depth_arg: int, t_s: int) -> float:
    """Probability of drawing a pool instance: decays with construction depth
    and with prior seedings (shifted by one so unseeded entries are defined)."""
    if depth_arg < 1:
        raise ValueError("depth_arg must be >= 1")
    if t_s < 0:
        raise ValueError("t_s must be >= 0")
    return (1.0 / depth_arg) * (1.0 / (t_s + 1))


# ------------------------------------------------------------------ statements


@dataclass(frozen=True)
class LitStmt:
    var: str
    type_tag: str
    value: Value

    def to_jsonable(self) -> dict:
        return {"op": "lit", "var": self.var, "tag": self.type_tag,
                "value": to_jsonable(self.value, None)}


@dataclass(frozen=True)
class PoolStmt:
    var: str
    class_name: str
    context: InvocationContext

    def to_jsonable(self) -> dict:
        return {"op": "pool", "var": self.var, "class": self.class_name,
                "context": self.context.to_jsonable()}


@dataclass(frozen=True)
class NewStmt:
    var: str
    class_name: str
    ctor_sig: str
    arg_vars: tuple[str, ...]
    arg_tags: tuple[str, ...]

    def to_jsonable(self) -> dict:
        return {"op": "new", "var": self.var, "class": self.class_name,
                "ctor": self.ctor_sig, "args": list(self.arg_vars),
                "arg_tags": list(self.arg_tags)}


@dataclass(frozen=True)
class CallStmt:
    var: str
    recv_var: str
    recv_class: str
    method_name: str
    arg_vars: tuple[str, ...]
    arg_tags: tuple[str, ...]
    result_tag: str

    def to_jsonable(self) -> dict:
        return {"op": "call", "var": self.var, "recv": self.recv_var,
                "class": self.recv_class, "method": self.method_name,
                "args": list(self.arg_vars), "arg_tags": list(self.arg_tags),
                "result_tag": self.result_tag}


@dataclass(frozen=True)
class EntryStmt:
    recv_var: str
    entry_class: str
    method_name: str
    param_tags: tuple[str, ...]
    arg_vars: tuple[str, ...]

    def to_jsonable(self) -> dict:
        return {"op": "entry", "recv": self.recv_var, "class": self.entry_class,
                "method": self.method_name, "param_tags": list(self.param_tags),
                "args": list(self.arg_vars)}


Statement = LitStmt | PoolStmt | NewStmt | CallStmt | EntryStmt


@dataclass(frozen=True)
class TestCase:
    """Replayable statement sequence; the last statement is the entry call.
    rng_seed drives only realization-time random fallbacks, so a replay under
    any configuration sees identical inputs."""

    __test__ = False  # bare data, despite the pytest-like name

    statements: tuple[Statement, ...]
    rng_seed: int

    @property
    def entry(self) -> EntryStmt:
        return self.statements[-1]  # type: ignore[return-value]

    def to_jsonable(self) -> dict:
        return {"rng_seed": self.rng_seed,
                "statements": [s.to_jsonable() for s in self.statements]}

    @staticmethod
    def from_jsonable(data: dict) -> "TestCase":
        statements = tuple(_statement_from_jsonable(row)
                           for row in data["statements"])
        return TestCase(statements, data["rng_seed"])


def _statement_from_jsonable(row: dict) -> Statement:
    op = row["op"]
    if op == "lit":
        return LitStmt(row["var"], row["tag"], value_from_jsonable(row["value"]))
    if op == "pool":
        return PoolStmt(row["var"], row["class"],
                        context_from_jsonable(row["context"]))
    if op == "new":
        return NewStmt(row["var"], row["class"], row["ctor"],
                       tuple(row["args"]), tuple(row["arg_tags"]))
    if op == "call":
        return CallStmt(row["var"], row["recv"], row["class"], row["method"],
                        tuple(row["args"]), tuple(row["arg_tags"]),
                        row["result_tag"])
    if op == "entry":
        return EntryStmt(row["recv"], row["class"], row["method"],
                         tuple(row["param_tags"]), tuple(row["args"]))
    raise ValueError(f"unknown statement op {op!r}")


# -------------------------------------------------------------------- running


@dataclass
class TestRun:
    outcome: ExecutionOutcome
    snapshot: StateSnapshot
    crashed_before_entry: bool
    failed_statement: int | None
    trace: Trace | None


def execute_test(test: TestCase, program, trace: Trace | None = None,
                 step_limit: int = DEFAULT_STEP_LIMIT) -> TestRun:
    """Replay a test under one configuration.  A failure before the entry call
    is captured as a raised outcome with empty snapshot sections."""
    session = Session(program, step_limit, trace)
    rng = random.Random(test.rng_seed)
    env: dict[str, Value] = {}
    setup, entry = test.statements[:-1], test.entry
    for index, stmt in enumerate(setup):
        try:
            env[stmt.var] = _run_stmt(stmt, session, env, rng, program)
        except ConstructionFailed as err:
            outcome = ExecutionOutcome(STATUS_RAISED, None, err.kind, err.location,
                                       session.steps, session.heap, None)
            snapshot = StateSnapshot((), (), STATUS_RAISED, None, err.kind,
                                     session.heap)
            return TestRun(outcome, snapshot, True, index, trace)
    receiver = env[entry.recv_var]
    args = [env[name] for name in entry.arg_vars]
    outcome = session.invoke_entry(receiver, entry.method_name, args)
    snapshot = snapshot_state(outcome, entry.param_tags, receiver, tuple(args))
    return TestRun(outcome, snapshot, False, None, trace)


def _run_stmt(stmt: Statement, session: Session, env, rng, program) -> Value:
    if isinstance(stmt, LitStmt):
        return stmt.value
    if isinstance(stmt, PoolStmt):
        return instantiate(stmt.context, program, rng, session)
    if isinstance(stmt, NewStmt):
        return session.construct(stmt.class_name,
                                 [env[name] for name in stmt.arg_vars])
    if isinstance(stmt, CallStmt):
        return session.invoke_for_value(env[stmt.recv_var], stmt.method_name,
                                        [env[name] for name in stmt.arg_vars])
    raise TypeError(f"unexpected statement {type(stmt).__name__}")


# -------------------------------------------------------------------- fitness


@dataclass(frozen=True)
class FitnessScore:
    approach_level: int
    branch_distance: float
    covered: bool

    @property
    def total(self) -> float:
        return self.approach_level + self.branch_distance


@dataclass(frozen=True)
class _Level:
    kind: str  # "entry" | "guard" | "call"
    key: tuple | None = None  # entered-api key for entry/call levels
    stmt_id: int | None = None
    direction: bool | None = None


@dataclass(frozen=True)
class EpPlan:
    """One original-config invocation chain flattened into control levels:
    the entry, then per hop every guard around the designated call site
    (fewest-guards edge) followed by the call itself."""

    refs: tuple[ApiRef, ...]
    levels: tuple[_Level, ...]


def _api_key(ref: ApiRef) -> tuple:
    return (ref.library, ref.version, ref.class_name, ref.signature)


def ep_plans(paths: PathSet, original_graph: CallGraph) -> list[EpPlan]:
    plans = []
    for path in paths.original_paths:
        levels: list[_Level] = [_Level("entry", key=_api_key(path[0]))]
        ok = True
        for caller, callee in zip(path, path[1:]):
            edges = original_graph.edges_between(caller, callee)
            if not edges:
                ok = False
                break
            site = min(edges, key=lambda e: len(e.site.guards)).site
            for stmt, direction in site.guards:
                levels.append(_Level("guard", stmt_id=id(stmt),
                                     direction=direction))
            levels.append(_Level("call", key=_api_key(callee)))
        if ok:
            plans.append(EpPlan(path, tuple(levels)))
    return plans


def fitness_from_trace(trace: Trace, plans: list[EpPlan]) -> FitnessScore:
    target = _api_key(plans[0].refs[-1])
    if trace.entered_api(target):
        return FitnessScore(0, 0.0, True)
    best: FitnessScore | None = None
    for plan in plans:
        satisfied = 0
        stuck: _Level | None = None
        for level in plan.levels:
            if level.kind == "guard":
                seen = trace.branch_outcomes.get(level.stmt_id, set())
                hit = level.direction in seen
            else:
                hit = trace.entered_api(level.key)
            if not hit:
                stuck = level
                break
            satisfied += 1
        approach = len(plan.levels) - satisfied - 1
        if stuck is None:  # defensive: full chain satisfied implies covered
            approach, distance = 0, 0.0
        elif stuck.kind == "guard":
            pair = trace.branch_distances.get(stuck.stmt_id)
            if pair is None:
                raw = 1e9  # guard never evaluated; treat as maximally distant
            else:
                raw = pair[0] if stuck.direction else pair[1]
            distance = raw / (raw + 1.0)
        elif satisfied == 0:
            distance = 0.0  # never reached the entry: full control depth
        else:
            distance = 0.5  # guards passed but the call itself never ran
        score = FitnessScore(approach, distance, False)
        if best is None or score.total < best.total:
            best = score
    return best if best is not None else FitnessScore(10 ** 6, 0.0, False)


def evaluate_test(test: TestCase, plans: list[EpPlan], program,
                  step_limit: int = DEFAULT_STEP_LIMIT):
    """Run a test under the original configuration and score it."""
    trace = Trace()
    run = execute_test(test, program, trace, step_limit)
    return fitness_from_trace(trace, plans), run


# ------------------------------------------------------------------ generation


@dataclass
class GAConfig:
    population_size: int = 30
    budget_evals: int = 1500  # evaluation budget per repetition
    budget_ms: int | None = None  # wall-clock override, opt-in
    mutation_rate: float = 0.8
    crossover_rate: float = 0.7
    rn: int = 10
    seeding_enabled: bool = True
    step_limit: int = DEFAULT_STEP_LIMIT

    def __post_init__(self):
        if self.rn < 1:
            raise ValueError("rn must be >= 1")
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        for rate in (self.mutation_rate, self.crossover_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("rates must lie in [0, 1]")


@dataclass
class RepetitionResult:
    covered: bool
    evaluations: int
    test: TestCase | None


@dataclass
class GenerationResult:
    pair_id: str
    tests: list[TestCase]
    repetitions: list[RepetitionResult]

    @property
    def covering_count(self) -> int:
        return len(self.tests)


def derive_seed(seed: int, pair_id: str, repetition: int) -> int:
    digest = hashlib.sha256(f"{seed}|{pair_id}|{repetition}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class _Builder:
    """Constructs valid statement sequences, drawing object instances from
    the pool (with probability P) or from random construction."""

    MAX_NESTING = 3

    def __init__(self, program: ResolvedProgram, pool: InstancePool, rng,
                 seeding_enabled: bool):
        self.program = program
        self.pool = pool
        self.rng = rng
        self.seeding_enabled = seeding_enabled
        self.statements: list[Statement] = []
        self.var_tags: dict[str, str] = {}
        self._null_vars: set[str] = set()
        self._count = 0

    def fresh(self) -> str:
        name = f"v{self._count}"
        self._count += 1
        return name

    def emit(self, stmt: Statement) -> str:
        self.statements.append(stmt)
        self.var_tags[stmt.var] = self._tag_of(stmt)
        return stmt.var

    @staticmethod
    def _tag_of(stmt: Statement) -> str:
        if isinstance(stmt, LitStmt):
            return stmt.type_tag
        if isinstance(stmt, (PoolStmt, NewStmt)):
            return stmt.class_name
        if isinstance(stmt, CallStmt):
            return stmt.result_tag
        raise TypeError(type(stmt).__name__)

    def value_for(self, tag: str, nesting: int = 0) -> str:
        if tag in A.PRIMITIVE_TAGS:
            return self.emit(LitStmt(self.fresh(), tag,
                                     random_value(tag, self.rng)))
        return self.instance_for(tag, nesting)

    def instance_for(self, class_name: str, nesting: int = 0) -> str:
        if self.seeding_enabled:
            rows = self.pool.entries_for(class_name)
            if rows:
                best = min(range(len(rows)),
                           key=lambda i: (rows[i].context.depth, rows[i].t_s, i))
                entry = rows[best]
                if self.rng.random() < seeding_probability(entry.context.depth,
                                                           entry.t_s):
                    entry.t_s += 1
                    return self.emit(PoolStmt(self.fresh(), class_name,
                                              entry.context))
        return self._random_instance(class_name, nesting)

    def _random_instance(self, class_name: str, nesting: int) -> str:
        bound = self.program.lookup_class(class_name)
        ctors = [] if bound is None else [c for c in bound.decl.ctors
                                          if not c.internal]
        if not ctors or nesting >= self.MAX_NESTING:
            var = self.emit(LitStmt(self.fresh(), class_name, NULL))
            self._null_vars.add(var)
            return var
        ctor = self.rng.choice(ctors)
        args = tuple(self.value_for(p.type_tag, nesting + 1) for p in ctor.params)
        return self.emit(NewStmt(self.fresh(), class_name, ctor_signature(ctor),
                                 args, tuple(p.type_tag for p in ctor.params)))

    def object_vars(self) -> list[str]:
        return [v for v, tag in self.var_tags.items()
                if tag not in A.PRIMITIVE_TAGS and v not in self._null_vars]

    def maybe_state_call(self) -> None:
        if self.rng.random() >= 0.3:
            return
        candidates = self.object_vars()
        if not candidates:
            return
        recv = self.rng.choice(candidates)
        cls = self.var_tags[recv]
        methods = [
            (bound.decl.name, m)
            for bound in superclass_chain(self.program, cls)
            for m in bound.decl.methods
            if not m.internal
        ]
        if not methods:
            return
        _, method = self.rng.choice(methods)
        args = tuple(self.value_for(p.type_tag) for p in method.params)
        self.emit(CallStmt(self.fresh(), recv, cls, method.name, args,
                           tuple(p.type_tag for p in method.params),
                           method.return_tag))


def _entry_choices(plans: list[EpPlan], graph: CallGraph):
    """Distinct entry methods heading any chain, with their declarations."""
    out = []
    seen = set()
    for plan in plans:
        ref = plan.refs[0]
        if ref in seen:
            continue
        seen.add(ref)
        out.append((ref, graph.nodes[ref]))
    return out


def _build_random_test(program, pool, rng, seeding_enabled, entries) -> TestCase:
    builder = _Builder(program, pool, rng, seeding_enabled)
    ref, decl = rng.choice(entries)
    recv = builder.instance_for(ref.class_name)
    builder.maybe_state_call()
    args = tuple(builder.value_for(p.type_tag) for p in decl.params)
    entry = EntryStmt(recv, ref.class_name, decl.name,
                      tuple(p.type_tag for p in decl.params), args)
    return TestCase(tuple(builder.statements) + (entry,), rng.getrandbits(32))


def _rebuild(raw: list[Statement], program, pool, rng, seeding_enabled) -> TestCase:
    """Re-linearize a statement list after crossover or mutation: rename
    variables, keep def-before-use, and synthesize any missing argument."""
    builder = _Builder(program, pool, rng, seeding_enabled)
    mapping: dict[str, str] = {}

    def remap(old: str, tag: str) -> str:
        if old in mapping:
            return mapping[old]
        return builder.value_for(tag)

    entry_stmt = raw[-1]
    assert isinstance(entry_stmt, EntryStmt)
    for stmt in raw[:-1]:
        if isinstance(stmt, LitStmt):
            new = builder.emit(LitStmt(builder.fresh(), stmt.type_tag, stmt.value))
            if stmt.value is NULL and stmt.type_tag not in A.PRIMITIVE_TAGS:
                builder._null_vars.add(new)
        elif isinstance(stmt, PoolStmt):
            new = builder.emit(PoolStmt(builder.fresh(), stmt.class_name,
                                        stmt.context))
        elif isinstance(stmt, NewStmt):
            args = tuple(
                remap(stmt.arg_vars[i], stmt.arg_tags[i])
                if i < len(stmt.arg_vars) else builder.value_for(stmt.arg_tags[i])
                for i in range(len(stmt.arg_tags))
            )
            new = builder.emit(NewStmt(builder.fresh(), stmt.class_name,
                                       stmt.ctor_sig, args, stmt.arg_tags))
        elif isinstance(stmt, CallStmt):
            recv = remap(stmt.recv_var, stmt.recv_class)
            args = tuple(
                remap(stmt.arg_vars[i], stmt.arg_tags[i])
                if i < len(stmt.arg_vars) else builder.value_for(stmt.arg_tags[i])
                for i in range(len(stmt.arg_tags))
            )
            new = builder.emit(CallStmt(builder.fresh(), recv, stmt.recv_class,
                                        stmt.method_name, args, stmt.arg_tags,
                                        stmt.result_tag))
        else:
            continue
        mapping[stmt.var] = new

    recv = remap(entry_stmt.recv_var, entry_stmt.entry_class)
    args = tuple(
        remap(entry_stmt.arg_vars[i], entry_stmt.param_tags[i])
        if i < len(entry_stmt.arg_vars) else builder.value_for(entry_stmt.param_tags[i])
        for i in range(len(entry_stmt.param_tags))
    )
    entry = replace(entry_stmt, recv_var=recv, arg_vars=args)
    return TestCase(tuple(builder.statements) + (entry,), rng.getrandbits(32))


def _crossover(a: TestCase, b: TestCase, rng) -> list[Statement]:
    pa = rng.randint(0, max(0, len(a.statements) - 1))
    pb = rng.randint(0, max(0, len(b.statements) - 2))
    head = list(a.statements[:pa])
    tail = list(b.statements[pb:])
    return head + tail  # tail always ends with b's entry statement


def _mutate(raw: list[Statement], program, pool, rng, seeding_enabled) -> list[Statement]:
    ops = []
    lit_idx = [i for i, s in enumerate(raw)
               if isinstance(s, LitStmt) and s.type_tag in A.PRIMITIVE_TAGS]
    if lit_idx:
        ops.append("replace_literal")
    pool_idx = [i for i, s in enumerate(raw) if isinstance(s, PoolStmt)]
    if pool_idx:
        ops.append("pool_to_random")
    inst_idx = [i for i, s in enumerate(raw)
                if isinstance(s, NewStmt)
                or (isinstance(s, LitStmt) and s.type_tag not in A.PRIMITIVE_TAGS)]
    if inst_idx and seeding_enabled:
        ops.append("random_to_pool")
    used = set()
    for s in raw:
        used.update(getattr(s, "arg_vars", ()))
        if isinstance(s, CallStmt):
            used.add(s.recv_var)
    if isinstance(raw[-1], EntryStmt):
        used.add(raw[-1].recv_var)
    deletable = [i for i, s in enumerate(raw[:-1])
                 if isinstance(s, CallStmt) and s.var not in used]
    if deletable:
        ops.append("delete_call")
    ops.append("insert_call")

    op = rng.choice(ops)
    out = list(raw)
    if op == "replace_literal":
        i = rng.choice(lit_idx)
        stmt = out[i]
        out[i] = replace(stmt, value=random_value(stmt.type_tag, rng))
    elif op == "pool_to_random":
        i = rng.choice(pool_idx)
        stmt = out[i]
        bound = program.lookup_class(stmt.class_name)
        ctors = [] if bound is None else [c for c in bound.decl.ctors
                                          if not c.internal]
        if ctors:
            ctor = rng.choice(ctors)
            out[i] = NewStmt(stmt.var, stmt.class_name, ctor_signature(ctor),
                             (), tuple(p.type_tag for p in ctor.params))
        else:
            out[i] = LitStmt(stmt.var, stmt.class_name, NULL)
    elif op == "random_to_pool":
        i = rng.choice(inst_idx)
        stmt = out[i]
        cls = stmt.class_name if isinstance(stmt, NewStmt) else stmt.type_tag
        rows = pool.entries_for(cls)
        if rows:
            best = min(range(len(rows)),
                       key=lambda k: (rows[k].context.depth, rows[k].t_s, k))
            entry = rows[best]
            if rng.random() < seeding_probability(entry.context.depth, entry.t_s):
                entry.t_s += 1
                out[i] = PoolStmt(stmt.var, cls, entry.context)
    elif op == "delete_call":
        del out[rng.choice(deletable)]
    else:  # insert_call
        objects = [(s.var, s.class_name) for s in out
                   if isinstance(s, (PoolStmt, NewStmt))]
        if objects:
            var, cls = objects[rng.randrange(len(objects))]
            methods = [
                m for bound in superclass_chain(program, cls)
                for m in bound.decl.methods if not m.internal
            ]
            if methods:
                m = rng.choice(methods)
                pos = next(i for i, s in enumerate(out) if getattr(s, "var", None) == var) + 1
                out.insert(pos, CallStmt("mut", var, cls, m.name, (),
                                         tuple(p.type_tag for p in m.params),
                                         m.return_tag))
    return out


@dataclass
class _Scored:
    test: TestCase
    score: FitnessScore
    run: TestRun


def _acceptable(entry: _Scored) -> bool:
    """A returned, target-covering test (crashing or failing runs are not
    carried into the differential stage)."""
    return entry.score.covered and entry.run.outcome.status == STATUS_RETURNED


def generate(
    pair: ConflictingPair,
    paths: PathSet,
    original_program: ResolvedProgram,
    original_graph: CallGraph,
    pool: InstancePool,
    config: GAConfig,
    seed: int,
) -> GenerationResult:
    """Run RN independent searches; keep at most one covering test per
    repetition.  Identical seeds yield identical results."""
    plans = ep_plans(paths, original_graph)
    if not plans:
        raise ValueError("pair has no usable invocation chain")
    entries = _entry_choices(plans, original_graph)

    tests: list[TestCase] = []
    repetitions: list[RepetitionResult] = []
    for repetition in range(config.rn):
        rng = random.Random(derive_seed(seed, pair.pair_id, repetition))
        rep_pool = pool.copy()
        evals = 0
        started = time.monotonic()

        def budget_left() -> bool:
            if config.budget_ms is not None:
                return (time.monotonic() - started) * 1000.0 < config.budget_ms
            return evals < config.budget_evals

        def score_test(test: TestCase) -> _Scored:
            nonlocal evals
            evals += 1
            fitness, run = evaluate_test(test, plans, original_program,
                                         config.step_limit)
            return _Scored(test, fitness, run)

        found: _Scored | None = None
        population: list[_Scored] = []
        while len(population) < config.population_size and budget_left():
            entry = score_test(_build_random_test(
                original_program, rep_pool, rng, config.seeding_enabled, entries))
            population.append(entry)
            if _acceptable(entry):
                found = entry
                break

        while found is None and budget_left() and population:
            ranked = sorted(range(len(population)),
                            key=lambda i: (population[i].score.total, i))
            elite = population[ranked[0]]
            next_pop = [elite]
            while len(next_pop) < config.population_size and budget_left():
                parent_a = _tournament(population, rng)
                if rng.random() < config.crossover_rate and len(population) > 1:
                    parent_b = _tournament(population, rng)
                    raw = _crossover(parent_a.test, parent_b.test, rng)
                else:
                    raw = list(parent_a.test.statements)
                if rng.random() < config.mutation_rate:
                    raw = _mutate(raw, original_program, rep_pool, rng,
                                  config.seeding_enabled)
                child = _rebuild(raw, original_program, rep_pool, rng,
                                 config.seeding_enabled)
                entry = score_test(child)
                next_pop.append(entry)
                if _acceptable(entry):
                    found = entry
                    break
            population = next_pop

        if found is not None:
            tests.append(found.test)
        repetitions.append(RepetitionResult(found is not None, evals,
                                            found.test if found else None))
    return GenerationResult(pair.pair_id, tests, repetitions)


def _tournament(population: list[_Scored], rng, k: int = 3) -> _Scored:
    picks = [rng.randrange(len(population)) for _ in range(k)]
    best = min(picks, key=lambda i: (population[i].score.total, i))
    return population[best]
