"""Workspace loading, dependency mediation, and program linking.

A workspace is a directory with a project and a library archive:

    project/manifest.json           {"name", "version", "dependencies": [...]}
    project/src/*.ml                ModLang source for the project unit
    libs/<name>/<version>/manifest.json
    libs/<name>/<version>/src/*.ml

Mediation emulates a flat-classpath build: breadth-first over the declared
dependency tree, the shallowest occurrence of a library name wins, ties go to
the earlier declaration, and every other version of that name is shadowed.
Class names mediate the same way across the loaded units, so two different
libraries shipping the same class name conflict at class level.  `force_load`
rebuilds the program with chosen versions (or chosen class providers) pinned,
which is how the baseline configuration for differential runs is produced.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .lang import ast as A
from .lang.ast import PRIMITIVE_TAGS, method_signature
from .lang.parser import ParseError, parse_unit
from .lang.program import BoundClass
from .static_types import callable_sites


class WorkspaceError(Exception):
    """Malformed workspace: bad manifest, missing archive entry, cycle."""


class LinkError(Exception):
    """Static reference checks failed; carries every diagnostic."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = list(diagnostics)


@dataclass(frozen=True)
class Dependency:
    name: str
    version: str


@dataclass(frozen=True)
class Manifest:
    name: str
    version: str
    dependencies: tuple[Dependency, ...]


def parse_manifest(data: dict, where: str) -> Manifest:
    try:
        name = data["name"]
        version = data["version"]
        raw_deps = data.get("dependencies", [])
    except (KeyError, TypeError) as exc:
        raise WorkspaceError(f"{where}: manifest missing field {exc}") from None
    if not isinstance(name, str) or not name:
        raise WorkspaceError(f"{where}: manifest name must be a non-empty string")
    if not isinstance(version, str) or not version:
        raise WorkspaceError(f"{where}: manifest version must be a non-empty string")
    deps: list[Dependency] = []
    seen: set[tuple[str, str]] = set()
    for entry in raw_deps:
        try:
            dep = Dependency(entry["name"], entry["version"])
        except (KeyError, TypeError):
            raise WorkspaceError(f"{where}: malformed dependency entry {entry!r}") from None
        if (dep.name, dep.version) in seen:
            raise WorkspaceError(
                f"{where}: duplicate dependency {dep.name}@{dep.version}"
            )
        seen.add((dep.name, dep.version))
        deps.append(dep)
    return Manifest(name, version, tuple(deps))


@dataclass
class Workspace:
    root: Path
    project_manifest: Manifest
    project_unit: A.SourceUnit
    units: dict[tuple[str, str], A.SourceUnit]
    manifests: dict[tuple[str, str], Manifest]

    def unit_for(self, name: str, version: str) -> A.SourceUnit:
        if name == self.project_manifest.name and version == self.project_manifest.version:
            return self.project_unit
        try:
            return self.units[(name, version)]
        except KeyError:
            raise WorkspaceError(f"archive has no {name}@{version}") from None

    def versions_of(self, name: str) -> list[str]:
        return sorted(v for (n, v) in self.units if n == name)


def _load_unit_dir(unit_dir: Path, expect_name: str, expect_version: str) -> A.SourceUnit:
    src_dir = unit_dir / "src"
    files = sorted(src_dir.glob("*.ml")) if src_dir.is_dir() else []
    if not files:
        raise WorkspaceError(f"{unit_dir}: no source files under src/")
    classes: list[A.ClassDecl] = []
    seen: set[str] = set()
    for path in files:
        try:
            unit = parse_unit(path.read_text())
        except ParseError as exc:
            raise WorkspaceError(f"{path}: {exc}") from None
        if unit.library != expect_name or unit.version != expect_version:
            raise WorkspaceError(
                f"{path}: declares {unit.library}@{unit.version}, "
                f"manifest says {expect_name}@{expect_version}"
            )
        for cls in unit.classes:
            if cls.name in seen:
                raise WorkspaceError(f"{path}: duplicate class {cls.name!r} in unit")
            seen.add(cls.name)
            classes.append(cls)
    return A.SourceUnit(expect_name, expect_version, tuple(classes))


def load_workspace(root: str | Path) -> Workspace:
    root = Path(root)
    manifest_path = root / "project" / "manifest.json"
    if not manifest_path.is_file():
        raise WorkspaceError(f"{manifest_path} not found")
    project_manifest = parse_manifest(
        json.loads(manifest_path.read_text()), str(manifest_path)
    )
    project_unit = _load_unit_dir(
        root / "project", project_manifest.name, project_manifest.version
    )
    units: dict[tuple[str, str], A.SourceUnit] = {}
    manifests: dict[tuple[str, str], Manifest] = {}
    libs_dir = root / "libs"
    if libs_dir.is_dir():
        for name_dir in sorted(libs_dir.iterdir()):
            if not name_dir.is_dir():
                continue
            for version_dir in sorted(name_dir.iterdir()):
                if not version_dir.is_dir():
                    continue
                mpath = version_dir / "manifest.json"
                if not mpath.is_file():
                    raise WorkspaceError(f"{mpath} not found")
                manifest = parse_manifest(json.loads(mpath.read_text()), str(mpath))
                if manifest.name != name_dir.name or manifest.version != version_dir.name:
                    raise WorkspaceError(
                        f"{mpath}: declares {manifest.name}@{manifest.version}, "
                        f"directory says {name_dir.name}@{version_dir.name}"
                    )
                key = (manifest.name, manifest.version)
                units[key] = _load_unit_dir(version_dir, *key)
                manifests[key] = manifest
    return Workspace(root, project_manifest, project_unit, units, manifests)


# ----------------------------------------------------------- dependency tree


@dataclass(frozen=True)
class DependencyNode:
    name: str
    version: str
    depth: int
    children: tuple["DependencyNode", ...]


def build_tree(workspace: Workspace) -> DependencyNode:
    """Expand declared dependencies into a tree; cycles are errors."""

    def expand(name: str, version: str, depth: int,
               path: tuple[tuple[str, str], ...]) -> DependencyNode:
        key = (name, version)
        if key in path:
            chain = " -> ".join(f"{n}@{v}" for n, v in path + (key,))
            raise WorkspaceError(f"dependency cycle: {chain}")
        if depth == 0:
            manifest = workspace.project_manifest
        else:
            manifest = workspace.manifests.get(key)
            if manifest is None:
                if key not in workspace.units:
                    raise WorkspaceError(f"archive has no {name}@{version}")
                manifest = Manifest(name, version, ())
        children = tuple(
            expand(dep.name, dep.version, depth + 1, path + (key,))
            for dep in manifest.dependencies
        )
        return DependencyNode(name, version, depth, children)

    root = workspace.project_manifest
    return expand(root.name, root.version, 0, ())


# ------------------------------------------------------------------ mediation


@dataclass
class Classpath:
    """Outcome of flat-classpath mediation over a dependency tree."""

    loaded: dict[str, str]  # library -> winning version
    shadowed: dict[str, tuple[str, ...]]  # library -> losing versions
    load_order: tuple[str, ...]  # library names, project first
    class_index: dict[str, tuple[str, str]]  # class -> (library, version)
    class_shadowed: dict[str, tuple[tuple[str, str], ...]]  # class -> losing units
    trace: tuple[dict, ...]  # mediation decisions, for reports


def mediate(tree: DependencyNode, workspace: Workspace) -> Classpath:
    loaded: dict[str, str] = {}
    shadowed: dict[str, list[str]] = {}
    load_order: list[str] = []
    trace: list[dict] = []

    queue: list[DependencyNode] = [tree]
    while queue:
        node = queue.pop(0)
        queue.extend(node.children)
        if node.name not in loaded:
            loaded[node.name] = node.version
            load_order.append(node.name)
            trace.append(
                {"library": node.name, "version": node.version,
                 "depth": node.depth, "decision": "loaded"}
            )
        elif loaded[node.name] != node.version:
            losers = shadowed.setdefault(node.name, [])
            if node.version not in losers:
                losers.append(node.version)
            trace.append(
                {"library": node.name, "version": node.version,
                 "depth": node.depth, "decision": "shadowed",
                 "shadowed_by": loaded[node.name]}
            )
        else:
            trace.append(
                {"library": node.name, "version": node.version,
                 "depth": node.depth, "decision": "duplicate"}
            )

    class_index, class_shadowed = _build_class_index(workspace, loaded, load_order)
    return Classpath(
        loaded=loaded,
        shadowed={name: tuple(v) for name, v in shadowed.items()},
        load_order=tuple(load_order),
        class_index=class_index,
        class_shadowed=class_shadowed,
        trace=tuple(trace),
    )


def _build_class_index(workspace: Workspace, loaded: dict[str, str],
                       load_order: tuple[str, ...] | list[str]):
    class_index: dict[str, tuple[str, str]] = {}
    class_shadowed: dict[str, list[tuple[str, str]]] = {}
    for name in load_order:
        version = loaded[name]
        unit = workspace.unit_for(name, version)
        for cls in unit.classes:
            if cls.name not in class_index:
                class_index[cls.name] = (name, version)
            else:
                class_shadowed.setdefault(cls.name, []).append((name, version))
    return class_index, {k: tuple(v) for k, v in class_shadowed.items()}


# -------------------------------------------------------------------- linking


class ResolvedProgram:
    """A loadable program: mediated class index over a workspace.

    Implements the class-lookup protocol the evaluators consume, and carries
    the classpath for reporting.
    """

    def __init__(self, workspace: Workspace, classpath: Classpath,
                 index: dict[str, BoundClass]):
        self.workspace = workspace
        self.classpath = classpath
        self._index = index

    def lookup_class(self, name: str) -> BoundClass | None:
        return self._index.get(name)

    def bound_classes(self) -> list[BoundClass]:
        return list(self._index.values())

    def entry_methods(self) -> list[tuple[str, A.MethodDecl]]:
        """Public methods of the project's classes: (class name, decl)."""
        project = self.workspace.project_manifest
        entries = []
        for bound in self._index.values():
            if (bound.library, bound.version) == (project.name, project.version):
                for method in bound.decl.methods:
                    if not method.internal:
                        entries.append((bound.decl.name, method))
        return entries


def _check_links(program: ResolvedProgram) -> list[str]:
    from .lang.program import field_namespace, superclass_chain

    diags: list[str] = []
    index = {b.decl.name: b for b in program.bound_classes()}

    for bound in index.values():
        cls = bound.decl
        where = f"{bound.library}@{bound.version}:{cls.name}"
        # superclass chain resolvable and acyclic
        seen: set[str] = set()
        name: str | None = cls.name
        while name is not None:
            if name in seen:
                diags.append(f"{where}: inheritance cycle through {name!r}")
                break
            seen.add(name)
            b = index.get(name)
            if b is None:
                diags.append(f"{where}: unresolved superclass {name!r}")
                break
            name = b.decl.superclass
        # field namespace must not collide across the chain
        chain = superclass_chain(program, cls.name)
        all_fields: dict[str, str] = {}
        for b in reversed(chain):
            for fld in b.decl.fields:
                if fld.name in all_fields and b.decl.name == cls.name:
                    diags.append(f"{where}: field {fld.name!r} collides with superclass")
                all_fields[fld.name] = b.decl.name

        for params, body, label in (
            [(c.params, c.body, "ctor") for c in cls.ctors]
            + [(m.params, m.body, m.name) for m in cls.methods]
        ):
            for site in callable_sites(program, cls.name, params, body):
                loc = str(site.node.span) if site.node.span else "?"
                if site.is_ctor:
                    target = index.get(site.name)
                    if target is None:
                        diags.append(
                            f"{where}.{label} at {loc}: unknown class {site.name!r}"
                        )
                    elif not target.decl.ctors:
                        diags.append(
                            f"{where}.{label} at {loc}: class {site.name!r} "
                            "has no constructor"
                        )
                    continue
                tag = site.receiver_tag
                if tag is None or tag in PRIMITIVE_TAGS:
                    continue  # dynamic or primitive receiver: checked at runtime
                if tag not in index:
                    diags.append(f"{where}.{label} at {loc}: unknown class {tag!r}")
                    continue
                found = any(
                    m.name == site.name and len(m.params) == site.argc
                    for b in superclass_chain(program, tag)
                    for m in b.decl.methods
                )
                if not found:
                    diags.append(
                        f"{where}.{label} at {loc}: {tag}.{site.name}/{site.argc} "
                        "does not resolve"
                    )
    return diags


def link(workspace: Workspace, classpath: Classpath) -> ResolvedProgram:
    """Bind the class index to declarations and run static reference checks."""
    index: dict[str, BoundClass] = {}
    for cls_name, (lib, version) in classpath.class_index.items():
        unit = workspace.unit_for(lib, version)
        decl = unit.class_named(cls_name)
        if decl is None:
            raise WorkspaceError(f"{lib}@{version} lost class {cls_name!r}")
        index[cls_name] = BoundClass(decl, lib, version)
    program = ResolvedProgram(workspace, classpath, index)
    diags = _check_links(program)
    if diags:
        raise LinkError(diags)
    return program


def resolve(workspace: Workspace) -> ResolvedProgram:
    """Mediate and link in one step: the program a flat build would load."""
    return link(workspace, mediate(build_tree(workspace), workspace))


def force_load(
    workspace: Workspace,
    version_overrides: dict[str, str],
    class_overrides: dict[str, tuple[str, str]] | None = None,
) -> ResolvedProgram:
    """Relink with chosen versions (or class providers) pinned.

    `version_overrides` maps library name -> version that must be loaded in
    place of the mediated winner; each version must exist in the archive.
    `class_overrides` maps class name -> (library, version) providing it,
    overriding class-level mediation; this is how a baseline is built when
    the conflict is between same-named classes of different libraries.
    """
    classpath = mediate(build_tree(workspace), workspace)
    loaded = dict(classpath.loaded)
    for name, version in version_overrides.items():
        if name == workspace.project_manifest.name:
            raise WorkspaceError("cannot override the project itself")
        if name not in loaded:
            raise WorkspaceError(f"{name} is not on the classpath")
        if (name, version) not in workspace.units:
            raise WorkspaceError(f"archive has no {name}@{version}")
        loaded[name] = version

    class_index, class_shadowed = _build_class_index(
        workspace, loaded, classpath.load_order
    )
    for cls_name, (lib, version) in (class_overrides or {}).items():
        unit = workspace.unit_for(lib, version)  # raises if absent
        if unit.class_named(cls_name) is None:
            raise WorkspaceError(f"{lib}@{version} has no class {cls_name!r}")
        class_index[cls_name] = (lib, version)

    forced = Classpath(
        loaded=loaded,
        shadowed=classpath.shadowed,
        load_order=classpath.load_order,
        class_index=class_index,
        class_shadowed=class_shadowed,
        trace=classpath.trace
        + tuple(
            {"library": n, "version": v, "decision": "forced"}
            for n, v in sorted(version_overrides.items())
        )
        + tuple(
            {"class": c, "library": lv[0], "version": lv[1], "decision": "forced-class"}
            for c, lv in sorted((class_overrides or {}).items())
        ),
    )
    return link(workspace, forced)
