"""Program views: what an evaluator needs to resolve class names.

A program view maps class names to bound classes (declaration plus the
library/version that provides it).  The dependency resolver produces rich
views over whole workspaces; `UnitProgram` wraps a single source unit for
tests and standalone evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass

from .ast import ClassDecl, SourceUnit


@dataclass(frozen=True)
class BoundClass:
    decl: ClassDecl
    library: str
    version: str


class UnitProgram:
    """Class index over one source unit."""

    def __init__(self, unit: SourceUnit):
        self.unit = unit
        self._index = {
            cls.name: BoundClass(cls, unit.library, unit.version)
            for cls in unit.classes
        }

    def lookup_class(self, name: str) -> BoundClass | None:
        return self._index.get(name)

    def class_names(self) -> list[str]:
        return [cls.name for cls in self.unit.classes]


def superclass_chain(program, class_name: str) -> list[BoundClass]:
    """Bound classes from `class_name` up to the root, stopping at any
    unresolvable superclass.  Guards against cycles."""
    chain: list[BoundClass] = []
    seen: set[str] = set()
    name: str | None = class_name
    while name is not None and name not in seen:
        seen.add(name)
        bound = program.lookup_class(name)
        if bound is None:
            break
        chain.append(bound)
        name = bound.decl.superclass
    return chain


def is_subclass(program, child: str, parent: str) -> bool:
    """Whether `child` is `parent` or inherits from it in this program."""
    return any(bound.decl.name == parent for bound in superclass_chain(program, child))


def field_namespace(program, class_name: str) -> dict[str, str]:
    """Merged field namespace (name -> type tag) across the class chain."""
    fields: dict[str, str] = {}
    for bound in reversed(superclass_chain(program, class_name)):
        for fld in bound.decl.fields:
            fields[fld.name] = fld.type_tag
    return fields
