"""Subtyping, the compatibility relation, virtual dispatch, and method lookup.

A HierarchyIndex is immutable after construction and safe to share between
concurrent analysis instances.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .domain import UNKNOWN, Signature, TypeOrUnknown
from .ir import OBJECT, ClassModel, MethodModel, ProgramModel

logger = logging.getLogger(__name__)

#: Lookup views: getMethod family sees declared + inherited public methods;
#: the getDeclared variants see declared-only, any visibility; invoke-time
#: lookup uses the union since a metaobject does not record its origin.
VIEW_PUBLIC = "public"
VIEW_DECLARED = "declared"
VIEW_INVOKE = "invoke"


class Hierarchy:
    def __init__(self, program: ProgramModel):
        self.program = program
        self._supers: Dict[str, Set[str]] = {}
        self._subs: Dict[str, Set[str]] = {}
        self._chain: Dict[str, Tuple[str, ...]] = {}
        for name in program.classes:
            self._supers[name] = self._compute_supers(name)
        for name in program.classes:
            self._subs.setdefault(name, set()).add(name)
            for s in self._supers[name]:
                self._subs.setdefault(s, set()).add(name)

    def _compute_supers(self, name: str) -> Set[str]:
        if name in self._supers:
            return self._supers[name]
        cls = self.program.classes[name]
        out = {name, OBJECT}
        parents = list(cls.interfaces)
        if cls.superclass:
            parents.append(cls.superclass)
        for p in parents:
            out |= self._compute_supers(p)
        self._supers[name] = out
        return out

    # -- subtyping ---------------------------------------------------------

    def is_subtype(self, t1: str, t2: str) -> bool:
        if t1 == t2 or t2 == OBJECT:
            return True
        if t1.endswith("[]") or t2.endswith("[]"):
            return False  # arrays: only reflexivity and Object above
        return t2 in self._supers.get(t1, set())

    def compatible(self, t_prime: TypeOrUnknown, t: str) -> bool:
        """The typing relation used for inferred signature parts: against
        java.lang.Object only the unknown marker is compatible; otherwise two
        known types are compatible when either is a subtype of the other."""
        if t == OBJECT:
            return t_prime is UNKNOWN
        if t_prime is UNKNOWN:
            return False
        return self.is_subtype(t_prime, t) or self.is_subtype(t, t_prime)

    def compat_set(self, t: str) -> Set[str]:
        """All declared type names compatible with known type t (t ≠ Object);
        java.lang.Object is in every such set as the universal supertype."""
        assert t != OBJECT
        if t.endswith("[]"):
            return {t, OBJECT}
        return self._subs.get(t, {t}) | self._supers.get(t, {t})

    def supertypes(self, t: str) -> Set[str]:
        """Reflexive-transitive supertypes; java.lang.Object is in every set."""
        if t.endswith("[]"):
            return {t, OBJECT}
        return set(self._supers.get(t, {t, OBJECT}))

    def subtypes(self, t: str) -> Set[str]:
        if t == OBJECT:
            return set(self.program.classes)
        if t.endswith("[]"):
            return {t}
        return set(self._subs.get(t, set()))

    def concrete_subtypes(self, t: str) -> List[str]:
        """Instantiable (non-interface, non-array) subtypes of t, t included."""
        out = [
            s
            for s in self.subtypes(t)
            if not s.endswith("[]") and not self.program.classes[s].is_interface
        ]
        return sorted(out)

    def is_concrete(self, t: str) -> bool:
        return (
            not t.endswith("[]")
            and t in self.program.classes
            and not self.program.classes[t].is_interface
        )

    # -- method tables -----------------------------------------------------

    def _walk_chain(self, name: str) -> Tuple[str, ...]:
        """Superclass chain first, then implemented interfaces depth-first in
        declaration order; deterministic and cached."""
        if name in self._chain:
            return self._chain[name]
        seen: List[str] = []
        cur: Optional[str] = name
        while cur is not None:
            seen.append(cur)
            cur = self.program.classes[cur].superclass
        for c in list(seen):
            for itf in self.program.classes[c].interfaces:
                self._walk_interfaces(itf, seen)
        self._chain[name] = tuple(seen)
        return self._chain[name]

    def _walk_interfaces(self, itf: str, seen: List[str]) -> None:
        if itf in seen:
            return
        seen.append(itf)
        for parent in self.program.classes[itf].interfaces:
            self._walk_interfaces(parent, seen)

    def dispatch(
        self,
        recv_type: str,
        name: str,
        arity: Optional[int] = None,
        param_types: Optional[Sequence[str]] = None,
    ) -> Optional[MethodModel]:
        """Resolve a virtual call on a receiver of `recv_type`: first method
        matching the name (and exact parameter tuple, or arity) walking the
        chain upward. None when nothing matches; the call edge is dropped."""
        if recv_type.endswith("[]") or recv_type not in self.program.classes:
            return None
        for cls_name in self._walk_chain(recv_type):
            for m in self.program.classes[cls_name].methods:
                if m.name != name:
                    continue
                if param_types is not None:
                    if m.param_types == tuple(param_types):
                        return m
                elif arity is None or len(m.params) == arity:
                    return m
        return None

    def methods_view(self, class_name: str, view: str) -> List[MethodModel]:
        """Methods of a class under a lookup view, nearest declaration wins."""
        cls = self.program.classes[class_name]
        if view == VIEW_DECLARED:
            return list(cls.methods)
        out: List[MethodModel] = []
        shadowed: Set[Tuple[str, Tuple[str, ...]]] = set()
        for owner in self._walk_chain(class_name):
            for m in self.program.classes[owner].methods:
                key = (m.name, m.param_types)
                if key in shadowed:
                    continue
                inherited = owner != class_name
                if view == VIEW_PUBLIC:
                    if m.visibility != "public":
                        continue
                elif view == VIEW_INVOKE:
                    if inherited and m.visibility != "public":
                        continue
                else:
                    raise ValueError(f"unknown view {view}")
                shadowed.add(key)
                out.append(m)
        return out

    # -- metaobject-driven lookup -------------------------------------------

    def sig_matches(self, sig: Signature, m: MethodModel) -> bool:
        if sig.name is not UNKNOWN and sig.name != m.name:
            return False
        if sig.params is not UNKNOWN:
            if len(sig.params) != len(m.params):
                return False
            for slot, have in zip(sig.params, m.param_types):
                if isinstance(slot, str):
                    if slot != have:
                        return False
                elif have not in slot:
                    return False
        if sig.ret is not UNKNOWN and sig.ret != m.return_type:
            return False
        return True

    def mtd_lookup(self, class_part: TypeOrUnknown, sig: Signature, view: str) -> List[MethodModel]:
        """All methods of the metaobject's class matching its signature, with
        unknown parts as wild cards and the return type also considered.

        Refused (empty) for an unknown class part: scanning every class for a
        name explodes false positives, so the site is reported unresolved."""
        if class_part is UNKNOWN:
            return []
        if class_part not in self.program.classes:
            return []
        return [m for m in self.methods_view(class_part, view) if self.sig_matches(sig, m)]
