"""Conflicting-API detection over a mediated workspace.

A conflicting pair is a public method of a shadowed class version (or of a
class that lost class-level mediation) that client code can reach, together
with the same-signature method the loaded configuration substitutes for it,
found on the loaded class itself or inherited from an ancestor.  Pairs whose
implementations are structurally identical up to a call-depth cutoff are
filtered out by the iterative AST diff (`is_isomerous`).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .lang import ast as A
from .lang.ast import comparison_form, ctor_signature, method_signature
from .resolver import ResolvedProgram, Workspace, force_load
from .static_types import CallSite, callable_sites


@dataclass(frozen=True, order=True)
class ApiRef:
    """One constructor or method of one class in one unit version."""

    library: str
    version: str
    class_name: str
    signature: str

    def __str__(self) -> str:
        return f"{self.library}@{self.version}:{self.class_name}.{self.signature}"

    @property
    def identity(self) -> tuple[str, str]:
        """Version-independent identity used to match APIs across configs."""
        return (self.class_name, self.signature)


@dataclass(frozen=True)
class CallEdge:
    callee: ApiRef
    site: CallSite


class CallGraph:
    """Static call graph of a resolved program (class-hierarchy analysis).

    Edges follow inferred static receiver classes; a call on an unknown
    receiver conservatively targets every class declaring a matching method.
    Member visibility is not modeled on edges: reachability is an
    over-approximation, which only widens the candidate pair set.
    """

    def __init__(self, program: ResolvedProgram):
        self.program = program
        self.nodes: dict[ApiRef, object] = {}
        self.edges: dict[ApiRef, tuple[CallEdge, ...]] = {}
        self.entries: tuple[ApiRef, ...] = ()
        self._subclasses: dict[str, list[str]] = {}
        self._build()

    # ------------------------------------------------------------ building

    def _build(self) -> None:
        program = self.program
        bound_classes = program.bound_classes()
        for bound in bound_classes:
            parent = bound.decl.superclass
            if parent is not None:
                self._subclasses.setdefault(parent, []).append(bound.decl.name)

        for bound in bound_classes:
            for ctor in bound.decl.ctors:
                ref = ApiRef(bound.library, bound.version, bound.decl.name,
                             ctor_signature(ctor))
                self.nodes[ref] = ctor
                self.edges[ref] = self._edges_of(bound.decl.name, ctor.params, ctor.body)
            for method in bound.decl.methods:
                ref = ApiRef(bound.library, bound.version, bound.decl.name,
                             method_signature(method))
                self.nodes[ref] = method
                self.edges[ref] = self._edges_of(bound.decl.name, method.params,
                                                 method.body)

        project = program.workspace.project_manifest
        self.entries = tuple(
            ApiRef(project.name, project.version, cls_name, method_signature(decl))
            for cls_name, decl in program.entry_methods()
        )

    def _declaring_overloads(self, start_class: str, name: str, argc: int):
        """Matching overloads at the first declaring class up the chain."""
        from .lang.program import superclass_chain

        for bound in superclass_chain(self.program, start_class):
            found = [
                (bound, m)
                for m in bound.decl.methods
                if m.name == name and len(m.params) == argc
            ]
            if found:
                return found
        return []

    def _all_subtypes(self, class_name: str) -> list[str]:
        out = [class_name]
        queue = [class_name]
        while queue:
            for child in self._subclasses.get(queue.pop(), ()):  # noqa: B909
                out.append(child)
                queue.append(child)
        return sorted(set(out))

    def _method_targets(self, site: CallSite) -> list[ApiRef]:
        refs: set[ApiRef] = set()
        if site.receiver_tag is not None and site.receiver_tag not in A.PRIMITIVE_TAGS \
                and self.program.lookup_class(site.receiver_tag) is not None:
            for subtype in self._all_subtypes(site.receiver_tag):
                for bound, m in self._declaring_overloads(subtype, site.name, site.argc):
                    refs.add(ApiRef(bound.library, bound.version, bound.decl.name,
                                    method_signature(m)))
        else:
            for bound in self.program.bound_classes():
                for m in bound.decl.methods:
                    if m.name == site.name and len(m.params) == site.argc:
                        refs.add(ApiRef(bound.library, bound.version,
                                        bound.decl.name, method_signature(m)))
        return sorted(refs)

    def _edges_of(self, class_name: str, params, body) -> tuple[CallEdge, ...]:
        edges: list[CallEdge] = []
        for site in callable_sites(self.program, class_name, params, body):
            if site.is_ctor:
                bound = self.program.lookup_class(site.name)
                if bound is None:
                    continue
                for ctor in bound.decl.ctors:
                    if len(ctor.params) != site.argc:
                        continue
                    edges.append(CallEdge(
                        ApiRef(bound.library, bound.version, bound.decl.name,
                               ctor_signature(ctor)),
                        site,
                    ))
            else:
                for ref in self._method_targets(site):
                    edges.append(CallEdge(ref, site))
        return tuple(edges)

    # ------------------------------------------------------------- queries

    def callees(self, ref: ApiRef) -> tuple[CallEdge, ...]:
        return self.edges.get(ref, ())

    def reachable_from_entries(self) -> set[ApiRef]:
        seen: set[ApiRef] = set(self.entries)
        queue = list(self.entries)
        while queue:
            node = queue.pop()
            for edge in self.callees(node):
                if edge.callee not in seen:
                    seen.add(edge.callee)
                    queue.append(edge.callee)
        return seen

    def edges_between(self, caller: ApiRef, callee: ApiRef) -> list[CallEdge]:
        return [e for e in self.callees(caller) if e.callee == callee]


# ----------------------------------------------------------------- the pairs


@dataclass(frozen=True)
class ConflictingPair:
    """A shadowed API and the loaded API that replaces it at runtime."""

    shadowed: ApiRef
    loaded: ApiRef
    fallback_used: bool  # loaded method found on an ancestor, not the class
    kind: str  # "version" (same library, other version) | "class" (other library)

    @property
    def pair_id(self) -> str:
        return f"{self.shadowed}~vs~{self.loaded}"


@dataclass
class ScanDiagnostics:
    skipped_configs: list[dict] = field(default_factory=list)


def _find_replaceable(program: ResolvedProgram, class_name: str,
                      signature: str) -> tuple[ApiRef, bool] | None:
    """The public same-signature method the loaded config dispatches to."""
    from .lang.program import superclass_chain

    for bound in superclass_chain(program, class_name):
        for method in bound.decl.methods:
            if method_signature(method) == signature and not method.internal:
                ref = ApiRef(bound.library, bound.version, bound.decl.name, signature)
                return ref, bound.decl.name != class_name
    return None


def find_conflicting_pairs(
    workspace: Workspace,
    actual: ResolvedProgram,
    diagnostics: ScanDiagnostics | None = None,
) -> list[ConflictingPair]:
    """Enumerate conflicting pairs for every shadowed version and every
    class-level loser in the mediated classpath."""
    from .resolver import LinkError, WorkspaceError

    pairs: list[ConflictingPair] = []
    diagnostics = diagnostics if diagnostics is not None else ScanDiagnostics()

    candidates: list[tuple[str, dict, dict, A.SourceUnit, str]] = []
    # (kind, version_overrides, class_overrides, shadowed unit, note)
    for lib in sorted(actual.classpath.shadowed):
        for version in actual.classpath.shadowed[lib]:
            unit = workspace.unit_for(lib, version)
            candidates.append(("version", {lib: version}, {}, unit, f"{lib}@{version}"))
    for cls_name in sorted(actual.classpath.class_shadowed):
        for lib, version in actual.classpath.class_shadowed[cls_name]:
            unit = workspace.unit_for(lib, version)
            candidates.append(
                ("class", {}, {cls_name: (lib, version)}, unit, f"{cls_name}<-{lib}@{version}")
            )

    for kind, ver_over, cls_over, shadowed_unit, note in candidates:
        try:
            original = force_load(workspace, ver_over, cls_over)
        except (LinkError, WorkspaceError) as exc:
            diagnostics.skipped_configs.append({"config": note, "error": str(exc)})
            continue
        graph = CallGraph(original)
        reachable = graph.reachable_from_entries()
        if kind == "version":
            class_names = [cls.name for cls in shadowed_unit.classes]
        else:
            class_names = [next(iter(cls_over))]
        for cls_name in class_names:
            decl = shadowed_unit.class_named(cls_name)
            if decl is None:
                continue
            if actual.lookup_class(cls_name) is None:
                continue  # the loaded config has no such class: nothing replaces it
            for method in decl.methods:
                if method.internal:
                    continue
                signature = method_signature(method)
                shadowed_ref = ApiRef(shadowed_unit.library, shadowed_unit.version,
                                      cls_name, signature)
                if shadowed_ref not in reachable:
                    continue
                replaceable = _find_replaceable(actual, cls_name, signature)
                if replaceable is None:
                    continue
                loaded_ref, fallback = replaceable
                if loaded_ref == shadowed_ref:
                    continue  # same provider ended up loaded; nothing shadows it
                pairs.append(ConflictingPair(shadowed_ref, loaded_ref, fallback, kind))

    pairs.sort(key=lambda p: (p.shadowed.class_name, p.shadowed.signature,
                              p.shadowed.library, p.shadowed.version))
    return pairs


def original_config(workspace: Workspace, pair: ConflictingPair) -> ResolvedProgram:
    """Relink the workspace with the pair's shadowed provider pinned in."""
    if pair.kind == "version":
        return force_load(workspace, {pair.shadowed.library: pair.shadowed.version})
    return force_load(workspace, {}, {
        pair.shadowed.class_name: (pair.shadowed.library, pair.shadowed.version)
    })


# ------------------------------------------------------------------ the paths


@dataclass(frozen=True)
class PathSet:
    """Original-config invocation chains to the shadowed API, with their
    loaded-config counterparts (aligned lists)."""

    original_paths: tuple[tuple[ApiRef, ...], ...]  # entry ... shadowed target
    actual_paths: tuple[tuple[ApiRef, ...], ...]  # same prefix, loaded terminal
    dropped: int  # original paths with no loaded counterpart


def find_paths(
    pair: ConflictingPair,
    original_graph: CallGraph,
    actual_graph: CallGraph,
    max_paths: int = 8,
    max_len: int = 12,
    max_explored: int = 256,
) -> PathSet:
    target = pair.shadowed
    found: list[tuple[ApiRef, ...]] = []
    explored = 0

    def dfs(node: ApiRef, path: tuple[ApiRef, ...]) -> None:
        nonlocal explored
        explored += 1
        if explored > max_explored or len(path) > max_len:
            return
        if node == target:
            found.append(path)
            return
        for edge in original_graph.callees(node):
            if edge.callee in path:
                continue
            dfs(edge.callee, path + (edge.callee,))

    for entry in sorted(original_graph.entries):
        dfs(entry, (entry,))

    found.sort(key=lambda p: (len(p), tuple(str(r) for r in p)))
    found = found[:max_paths]

    def to_actual(ref: ApiRef) -> ApiRef | None:
        bound = actual_graph.program.lookup_class(ref.class_name)
        if bound is None:
            return None
        candidate = ApiRef(bound.library, bound.version, ref.class_name, ref.signature)
        return candidate if candidate in actual_graph.nodes else None

    originals: list[tuple[ApiRef, ...]] = []
    actuals: list[tuple[ApiRef, ...]] = []
    dropped = 0
    for path in found:
        prefix = [to_actual(ref) for ref in path[:-1]]
        if any(ref is None for ref in prefix):
            dropped += 1
            continue
        actual_path = tuple(prefix) + (pair.loaded,)
        ok = all(
            actual_graph.edges_between(actual_path[i], actual_path[i + 1])
            for i in range(len(actual_path) - 1)
        )
        if not ok:
            dropped += 1
            continue
        originals.append(path)
        actuals.append(actual_path)
    return PathSet(tuple(originals), tuple(actuals), dropped)


# ------------------------------------------------------------ isomerous check


@dataclass(frozen=True)
class DiffSite:
    class_name: str
    signature: str
    depth: int
    reason: str  # body-differs | only-in-baseline | only-in-actual

    def to_jsonable(self) -> dict:
        return {
            "class": self.class_name,
            "signature": self.signature,
            "depth": self.depth,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class IsomerousResult:
    isomerous: bool
    diff_sites: tuple[DiffSite, ...]


_ROOT_KEY = ("<root>", "<root>")


def _depth_map(graph: CallGraph, root: ApiRef):
    """BFS min-depth map (root at depth 1) keyed by version-independent
    identity; the root is rekeyed to a sentinel so fallback pairs compare
    root-to-root.  The full reachable set is enumerated; the depth cutoff
    is applied at comparison time so it only ever masks deep sites."""
    table: dict[tuple[str, str], tuple[int, object]] = {}
    root_decl = graph.nodes.get(root)
    table[_ROOT_KEY] = (1, root_decl)
    seen_ids = {root.identity}
    queue: list[tuple[ApiRef, int]] = [(root, 1)]
    while queue:
        node, depth = queue.pop(0)
        for edge in graph.callees(node):
            identity = edge.callee.identity
            if identity in seen_ids:
                continue
            seen_ids.add(identity)
            table[identity] = (depth + 1, graph.nodes.get(edge.callee))
            queue.append((edge.callee, depth + 1))
    return table


def _decls_differ(left, right) -> bool:
    if type(left) is not type(right):
        return True
    if isinstance(left, A.MethodDecl):
        return comparison_form(left) != comparison_form(right)
    if isinstance(left, A.CtorDecl):
        # compare as a method-shaped declaration so locals canonicalize
        def as_method(ctor: A.CtorDecl) -> A.MethodDecl:
            body = ctor.body + (A.ReturnStmt(A.IntLit(0)),)
            return A.MethodDecl("ctor", ctor.params, "Int", body, ctor.internal)

        return comparison_form(as_method(left)) != comparison_form(as_method(right))
    return left != right


def is_isomerous(
    pair: ConflictingPair,
    original_graph: CallGraph,
    actual_graph: CallGraph,
    depth_limit: int = 10,
) -> IsomerousResult:
    """Iterative AST diff: walk both APIs' call graphs breadth-first and
    compare implementations (spans stripped, locals renamed) at matching
    identities whose call depth is below the limit (the pair is depth 1).
    A method reachable on only one side is a difference at its own depth."""
    left = _depth_map(original_graph, pair.shadowed)
    right = _depth_map(actual_graph, pair.loaded)
    sites: list[DiffSite] = []
    for identity in sorted(set(left) | set(right),
                           key=lambda t: (t != _ROOT_KEY, t)):
        in_left = identity in left
        in_right = identity in right
        if in_left and in_right:
            depth = min(left[identity][0], right[identity][0])
            if depth >= depth_limit:
                continue
            if _decls_differ(left[identity][1], right[identity][1]):
                name = pair.shadowed.class_name if identity == _ROOT_KEY else identity[0]
                sig = pair.shadowed.signature if identity == _ROOT_KEY else identity[1]
                sites.append(DiffSite(name, sig, depth, "body-differs"))
        elif in_left:
            depth = left[identity][0]
            if depth < depth_limit:
                sites.append(DiffSite(identity[0], identity[1], depth, "only-in-baseline"))
        else:
            depth = right[identity][0]
            if depth < depth_limit:
                sites.append(DiffSite(identity[0], identity[1], depth, "only-in-actual"))
    sites.sort(key=lambda s: (s.depth, s.class_name, s.signature))
    return IsomerousResult(bool(sites), tuple(sites))
