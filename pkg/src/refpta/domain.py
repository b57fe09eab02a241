"""Abstract-object domain shared by the pointer and reflection analyses.

Objects are structural values: equality and hashing are by content, so the
object universe for a fixed program is finite and solver results do not
depend on processing order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple, Union

from .ir import CLASS, METHOD, STRING


class _Unknown:
    """The distinguished unknown marker for class types, names and signatures."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "u"


UNKNOWN = _Unknown()

#: A known type name, or UNKNOWN.
TypeOrUnknown = Union[str, _Unknown]

#: A parameter slot: an exact type name (from a type-literal list) or a
#: candidate set (from argument-based inference).
ParamSlot = Union[str, FrozenSet[str]]


@dataclass(frozen=True)
class Signature:
    """Method signature with independently knowable parts.

    `params` is UNKNOWN, or an ordered tuple of ParamSlots.
    """

    ret: TypeOrUnknown
    name: TypeOrUnknown
    params: Union[_Unknown, Tuple[ParamSlot, ...]]

    def render(self) -> str:
        if self.params is UNKNOWN:
            p = "u"
        else:
            slots = []
            for s in self.params:
                slots.append(s if isinstance(s, str) else "{" + "|".join(sorted(s)) + "}")
            p = "(" + ",".join(slots) + ")"
        return f"{self.name}:{p}:{self.ret}"


SIG_UNKNOWN = Signature(UNKNOWN, UNKNOWN, UNKNOWN)


@dataclass(frozen=True)
class AbstractObject:
    """Base class; concrete kinds below."""

    def render(self) -> str:
        raise NotImplementedError

    def sort_key(self) -> str:
        return self.render()


@dataclass(frozen=True)
class HeapAlloc(AbstractObject):
    site: int
    type_name: str

    def render(self) -> str:
        return f"obj:{self.type_name}@{self.site}"


@dataclass(frozen=True)
class StringObj(AbstractObject):
    """`text` is None for a non-constant but non-null string."""

    site: int
    text: Optional[str]

    @property
    def is_constant(self) -> bool:
        return self.text is not None

    def render(self) -> str:
        if self.text is None:
            return f"str:?@{self.site}"
        return f'str:"{self.text}"@{self.site}'


@dataclass(frozen=True)
class ClassMeta(AbstractObject):
    class_part: TypeOrUnknown

    def render(self) -> str:
        return f"class:{self.class_part}"


@dataclass(frozen=True)
class MethodMeta(AbstractObject):
    class_part: TypeOrUnknown
    sig: Signature

    def render(self) -> str:
        return f"method:{self.class_part}.{self.sig.render()}"


@dataclass(frozen=True)
class SynthRecv(AbstractObject):
    """Receiver object synthesized at an invoke site with no receiver facts."""

    site: int
    type_name: str

    def render(self) -> str:
        return f"recv:{self.type_name}@{self.site}"


@dataclass(frozen=True)
class SynthRet(AbstractObject):
    """Return object synthesized at an invoke of an unmodeled target."""

    site: int
    type_name: str

    def render(self) -> str:
        return f"ret:{self.type_name}@{self.site}"


CLASS_META_UNKNOWN = ClassMeta(UNKNOWN)


def type_of(obj: AbstractObject) -> str:
    """Concrete type used for assignability filtering and dispatch."""
    if isinstance(obj, (HeapAlloc, SynthRecv, SynthRet)):
        return obj.type_name
    if isinstance(obj, StringObj):
        return STRING
    if isinstance(obj, ClassMeta):
        return CLASS
    if isinstance(obj, MethodMeta):
        return METHOD
    raise TypeError(f"untyped object {obj!r}")


def is_array_object(obj: AbstractObject) -> bool:
    return isinstance(obj, HeapAlloc) and obj.type_name.endswith("[]")
