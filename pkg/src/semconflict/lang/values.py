"""Runtime values, heap records, and their canonical serialization.

Both evaluators share these carriers; only evaluation logic differs between
them.  Serialization is structural (class, library, version, fields), never
exposes heap ids, and orders bag contents either by insertion order or
canonically, so snapshots taken in different sessions compare cleanly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

INT_BITS = 64
_INT_MOD = 1 << INT_BITS
_INT_SIGN = 1 << (INT_BITS - 1)


def wrap_int(value: int) -> int:
    """Reduce to 64-bit two's-complement range."""
    value &= _INT_MOD - 1
    return value - _INT_MOD if value >= _INT_SIGN else value


def div_trunc(a: int, b: int) -> int:
    """Integer division truncating toward zero (C style), then wrapped."""
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return wrap_int(q)


class Value:
    """Marker base for runtime values."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class VInt(Value):
    value: int


@dataclass(frozen=True, slots=True)
class VStr(Value):
    value: str


@dataclass(frozen=True, slots=True)
class VBool(Value):
    value: bool


@dataclass(frozen=True, slots=True)
class VNull(Value):
    pass


NULL = VNull()
TRUE = VBool(True)
FALSE = VBool(False)


@dataclass(frozen=True, slots=True)
class VRef(Value):
    obj_id: int


@dataclass(frozen=True, slots=True)
class VBag(Value):
    items: tuple[Value, ...]  # insertion order


EMPTY_BAG = VBag(())


@dataclass
class ObjRecord:
    class_name: str
    library: str
    version: str
    fields: dict[str, Value] = field(default_factory=dict)


class Heap:
    """Sequentially numbered object store; ids are session-local."""

    def __init__(self):
        self.records: dict[int, ObjRecord] = {}
        self._next_id = 1

    def allocate(self, class_name: str, library: str, version: str) -> VRef:
        obj_id = self._next_id
        self._next_id += 1
        self.records[obj_id] = ObjRecord(class_name, library, version)
        return VRef(obj_id)

    def get(self, ref: VRef) -> ObjRecord:
        return self.records[ref.obj_id]


def tag_accepts(tag: str, value: Value, ref_class, is_subclass) -> bool:
    """Whether a parameter type-tag accepts a runtime value.

    `ref_class(ref)` gives an object's allocated class name and
    `is_subclass(child, parent)` resolves class tags against a program's
    class index; both are injected so this module stays resolution-free.
    """
    if tag == "Int":
        return isinstance(value, VInt)
    if tag == "Str":
        return isinstance(value, VStr)
    if tag == "Bool":
        return isinstance(value, VBool)
    if tag == "Bag":
        return isinstance(value, VBag)
    # class tag: null, or a reference to the class or a subclass of it
    if isinstance(value, VNull):
        return True
    return isinstance(value, VRef) and is_subclass(ref_class(value), tag)


def default_for_tag(tag: str) -> Value:
    if tag == "Int":
        return VInt(0)
    if tag == "Str":
        return VStr("")
    if tag == "Bool":
        return FALSE
    if tag == "Bag":
        return EMPTY_BAG
    return NULL


# ------------------------------------------------------------------ equality


def canonical_key(value: Value, heap: Heap | None, _path: frozenset[int] = frozenset()):
    """Total-orderable structural key; used for bag canonicalization and
    language-level bag equality.  Object references key by structure (not id)
    so bags of objects canonicalize deterministically; cycles collapse to a
    marker at the point of revisit."""
    if isinstance(value, VInt):
        return ("i", value.value)
    if isinstance(value, VStr):
        return ("s", value.value)
    if isinstance(value, VBool):
        return ("b", value.value)
    if isinstance(value, VNull):
        return ("n",)
    if isinstance(value, VBag):
        children = sorted(canonical_key(v, heap, _path) for v in value.items)
        return ("g", tuple(children))
    if isinstance(value, VRef):
        if value.obj_id in _path:
            return ("r@", "cycle")
        if heap is None:
            return ("r@", "opaque")
        rec = heap.get(value)
        inner = _path | {value.obj_id}
        fields = tuple(
            (name, canonical_key(rec.fields[name], heap, inner))
            for name in sorted(rec.fields)
        )
        return ("r", rec.class_name, rec.library, rec.version, fields)
    raise TypeError(f"unexpected value {type(value).__name__}")


def values_equal(a: Value, b: Value, heap: Heap | None) -> bool:
    """Language-level `==`: by value for primitives, canonical for bags,
    by identity for object references, false across kinds."""
    if isinstance(a, VNull) or isinstance(b, VNull):
        return isinstance(a, VNull) and isinstance(b, VNull)
    if type(a) is not type(b):
        return False
    if isinstance(a, (VInt, VStr, VBool)):
        return a.value == b.value  # type: ignore[union-attr]
    if isinstance(a, VRef):
        return a.obj_id == b.obj_id  # type: ignore[union-attr]
    if isinstance(a, VBag):
        return canonical_key(a, heap) == canonical_key(b, heap)
    raise TypeError(f"unexpected value {type(a).__name__}")


# -------------------------------------------------------------- serialization


def shallow_jsonable(value: Value):
    """One-level JSON form used inside heap dumps: object references stay as
    ids so the exact heap shape (sharing, cycles) is preserved."""
    if isinstance(value, VInt):
        return {"t": "int", "v": value.value}
    if isinstance(value, VStr):
        return {"t": "str", "v": value.value}
    if isinstance(value, VBool):
        return {"t": "bool", "v": value.value}
    if isinstance(value, VNull):
        return {"t": "null"}
    if isinstance(value, VBag):
        return {"t": "bag", "items": [shallow_jsonable(v) for v in value.items]}
    if isinstance(value, VRef):
        return {"t": "ref", "id": value.obj_id}
    raise TypeError(f"unexpected value {type(value).__name__}")


def to_jsonable(value: Value, heap: Heap | None, canonical_bags: bool = False,
                _path: frozenset[int] = frozenset()):
    """Structural JSON form.  Heap ids never appear; object fields sort by
    name; bags serialize in insertion order unless canonical_bags."""
    if isinstance(value, VInt):
        return {"t": "int", "v": value.value}
    if isinstance(value, VStr):
        return {"t": "str", "v": value.value}
    if isinstance(value, VBool):
        return {"t": "bool", "v": value.value}
    if isinstance(value, VNull):
        return {"t": "null"}
    if isinstance(value, VBag):
        items = list(value.items)
        if canonical_bags:
            items.sort(key=lambda v: canonical_key(v, heap))
        return {
            "t": "bag",
            "items": [to_jsonable(v, heap, canonical_bags, _path) for v in items],
        }
    if isinstance(value, VRef):
        if heap is None:
            return {"t": "obj", "opaque": True}
        if value.obj_id in _path:
            rec = heap.get(value)
            return {"t": "cycle", "class": rec.class_name}
        rec = heap.get(value)
        inner = _path | {value.obj_id}
        return {
            "t": "obj",
            "class": rec.class_name,
            "library": rec.library,
            "version": rec.version,
            "fields": {
                name: to_jsonable(rec.fields[name], heap, canonical_bags, inner)
                for name in sorted(rec.fields)
            },
        }
    raise TypeError(f"unexpected value {type(value).__name__}")
