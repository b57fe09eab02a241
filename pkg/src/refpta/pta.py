"""Inclusion-based, flow- and context-insensitive pointer analysis.

A standard subset-constraint worklist solver: points-to sets only grow,
copy edges propagate deltas, and complex constraints (loads, stores, calls,
reflection rules) are handlers indexed by their trigger variable. The
reachable-method set grows on the fly as call edges are discovered.

Handlers must be monotone and idempotent: a handler may see the same object
twice (once from the full-set replay at registration, once from a pending
delta), and the least fixpoint is independent of worklist order. Reflection
rules plug in through a hook object with an `on_reflective_stmt` method.
"""

from __future__ import annotations

import logging
import random
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from . import ir
from .callgraph import KIND_STATIC, KIND_VIRTUAL, CallEdge
from .domain import AbstractObject, HeapAlloc, StringObj, is_array_object, type_of
from .hierarchy import Hierarchy
from .ir import VOID, MethodModel, ProgramModel

logger = logging.getLogger(__name__)

THIS = "@this"
RET = "@ret"
ARR = "arr"

Node = tuple


def var_node(method_key: str, var: str) -> Node:
    return ("v", method_key, var)


def field_node(obj: AbstractObject, name: str) -> Node:
    return ("f", obj, name)


class PointsToGraph:
    """Frozen analysis result: variable and field-slot points-to sets."""

    def __init__(
        self,
        var_pts: Dict[Tuple[str, str], FrozenSet[AbstractObject]],
        field_pts: Dict[Tuple[AbstractObject, str], FrozenSet[AbstractObject]],
    ):
        self.var_pts = var_pts
        self.field_pts = field_pts

    def pts_of(self, method_key: str, var: str) -> FrozenSet[AbstractObject]:
        return self.var_pts.get((method_key, var), frozenset())

    def field_pts_of(self, obj: AbstractObject, name: str) -> FrozenSet[AbstractObject]:
        return self.field_pts.get((obj, name), frozenset())

    def __eq__(self, other):
        if not isinstance(other, PointsToGraph):
            return NotImplemented
        nonempty = lambda d: {k: v for k, v in d.items() if v}
        return nonempty(self.var_pts) == nonempty(other.var_pts) and nonempty(
            self.field_pts
        ) == nonempty(other.field_pts)


class Solver:
    def __init__(
        self,
        program: ProgramModel,
        hierarchy: Hierarchy,
        hooks=None,
        seed: Optional[int] = None,
    ):
        self.program = program
        self.hier = hierarchy
        self.hooks = hooks
        self._pts: Dict[Node, Set[AbstractObject]] = {}
        self._edges: Dict[Node, Dict[Tuple[Node, Optional[str]], None]] = {}
        self._handlers: Dict[Node, List[Callable[[Iterable[AbstractObject]], None]]] = {}
        self._wl: List[Tuple[Node, Tuple[AbstractObject, ...]]] = []
        self._rng = random.Random(seed) if seed is not None else None
        self.reachable: Dict[str, MethodModel] = {}
        self.entry_key: Optional[str] = None
        self._edge_data: Dict[Tuple[int, str], dict] = {}
        self.warnings: Set[str] = set()
        self._insertions = 0

    # -- constraint construction -------------------------------------------

    def init_constraints(self, entry: MethodModel) -> None:
        if entry.key not in self.program.methods:
            raise ir.IrError("no-entry", f"entry {entry.key} not in program")
        self.entry_key = entry.key
        self.reach_method(entry)

    def pts(self, node: Node) -> Set[AbstractObject]:
        return self._pts.setdefault(node, set())

    def add_fact(self, node: Node, obj: AbstractObject) -> None:
        self.add_facts(node, (obj,))

    def add_facts(self, node: Node, objs: Iterable[AbstractObject]) -> None:
        cur = self.pts(node)
        new = tuple(o for o in objs if o not in cur)
        if not new:
            return
        cur.update(new)
        self._insertions += len(new)
        self._wl.append((node, new))

    def add_edge(self, src: Node, dst: Node, filt: Optional[str] = None) -> None:
        """Subset edge pts(src) ⊆ pts(dst); `filt` restricts flow to objects
        whose type is a subtype of it."""
        if src == dst:
            return
        bucket = self._edges.setdefault(src, {})
        if (dst, filt) in bucket:
            return
        bucket[(dst, filt)] = None
        cur = self.pts(src)
        if cur:
            self._flow(cur, dst, filt)

    def _flow(self, objs: Iterable[AbstractObject], dst: Node, filt: Optional[str]) -> None:
        if filt is None:
            self.add_facts(dst, objs)
        else:
            self.add_facts(dst, (o for o in objs if self.hier.is_subtype(type_of(o), filt)))

    def register(self, node: Node, fn: Callable[[Iterable[AbstractObject]], None]) -> None:
        self._handlers.setdefault(node, []).append(fn)
        cur = self.pts(node)
        if cur:
            fn(tuple(cur))

    def warn(self, message: str) -> None:
        self.warnings.add(message)
        logger.warning(message)

    # -- on-the-fly reachability --------------------------------------------

    def reach_method(self, m: MethodModel) -> None:
        if m.key in self.reachable:
            return
        self.reachable[m.key] = m
        if m.has_code:
            for stmt in m.body:
                self._seed_stmt(m, stmt)

    def field_slot(self, obj: AbstractObject, name: str) -> Optional[Node]:
        """Stable handle for pts(obj.name); None (with a diagnostic) when the
        field is not declared for the object's type."""
        if name == ARR:
            if is_array_object(obj):
                return field_node(obj, ARR)
            self.warn(f"array access on non-array object {obj.render()}")
            return None
        if isinstance(obj, HeapAlloc) and not is_array_object(obj):
            t = obj.type_name
        elif isinstance(obj, AbstractObject) and not isinstance(obj, StringObj):
            t = getattr(obj, "type_name", None)
        else:
            t = None
        if t is not None and self._field_declared(t, name):
            return field_node(obj, name)
        self.warn(f"field {name} not declared for {obj.render()}; constraint dropped")
        return None

    def _field_declared(self, type_name: str, fname: str) -> bool:
        cur = type_name if not type_name.endswith("[]") else None
        while cur is not None:
            cls = self.program.classes.get(cur)
            if cls is None:
                return False
            if any(f == fname for f, _ in cls.fields):
                return True
            cur = cls.superclass
        return False

    def _seed_stmt(self, m: MethodModel, stmt: ir.Stmt) -> None:
        mk = m.key

        if isinstance(stmt, ir.Alloc):
            self.add_fact(var_node(mk, stmt.target), HeapAlloc(stmt.site, stmt.type_name))
        elif isinstance(stmt, ir.ArrayAlloc):
            obj = HeapAlloc(stmt.site, stmt.type_name)
            self.pts(field_node(obj, ARR))  # the arr slot exists from birth
            self.add_fact(var_node(mk, stmt.target), obj)
        elif isinstance(stmt, (ir.Copy, ir.Cast)):
            self.add_edge(var_node(mk, stmt.source), var_node(mk, stmt.target))
        elif isinstance(stmt, ir.StringConst):
            self.add_fact(var_node(mk, stmt.target), StringObj(stmt.site, stmt.text))
        elif isinstance(stmt, ir.UnknownString):
            self.add_fact(var_node(mk, stmt.target), StringObj(stmt.site, None))
        elif isinstance(stmt, ir.NullAssign):
            pass  # null contributes no objects
        elif isinstance(stmt, ir.Load):
            tgt = var_node(mk, stmt.target)

            def on_base_load(delta, tgt=tgt, fname=stmt.field_name):
                for o in delta:
                    slot = self.field_slot(o, fname)
                    if slot is not None:
                        self.add_edge(slot, tgt)

            self.register(var_node(mk, stmt.base), on_base_load)
        elif isinstance(stmt, ir.Store):
            src = var_node(mk, stmt.source)

            def on_base_store(delta, src=src, fname=stmt.field_name):
                for o in delta:
                    slot = self.field_slot(o, fname)
                    if slot is not None:
                        self.add_edge(src, slot)

            self.register(var_node(mk, stmt.base), on_base_store)
        elif isinstance(stmt, ir.ArrayLoad):
            tgt = var_node(mk, stmt.target)

            def on_base_aload(delta, tgt=tgt):
                for o in delta:
                    slot = self.field_slot(o, ARR)
                    if slot is not None:
                        self.add_edge(slot, tgt)

            self.register(var_node(mk, stmt.base), on_base_aload)
        elif isinstance(stmt, ir.ArrayStore):
            src = var_node(mk, stmt.source)

            def on_base_astore(delta, src=src):
                for o in delta:
                    slot = self.field_slot(o, ARR)
                    if slot is not None:
                        self.add_edge(src, slot)

            self.register(var_node(mk, stmt.base), on_base_astore)
        elif isinstance(stmt, ir.VirtualCall):
            def on_recv(delta, m=m, stmt=stmt):
                for o in delta:
                    self._dispatch_and_bind(m, stmt, o)

            self.register(var_node(mk, stmt.base), on_recv)
        elif isinstance(stmt, ir.StaticCall):
            self._bind_static_call(m, stmt)
        elif isinstance(stmt, ir.Return):
            if stmt.value is not None and m.return_type != VOID:
                self.add_edge(var_node(mk, stmt.value), var_node(mk, RET))
        elif isinstance(stmt, (ir.Branch, ir.Goto, ir.Label)):
            pass
        elif isinstance(stmt, ir.REFLECTIVE_KINDS):
            if self.hooks is not None:
                self.hooks.on_reflective_stmt(self, m, stmt)
            else:
                self.warn(f"site {stmt.site}: reflective statement ignored (no reflection rules)")
        else:  # pragma: no cover
            raise TypeError(f"unhandled statement {stmt!r}")

    # -- calls ---------------------------------------------------------------

    def _dispatch_and_bind(self, caller: MethodModel, stmt: ir.VirtualCall, recv: AbstractObject) -> None:
        rt = type_of(recv)
        callee = self.hier.dispatch(rt, stmt.method_name, arity=len(stmt.args))
        if callee is None:
            self.warn(
                f"site {stmt.site}: no dispatch target {rt}.{stmt.method_name}/{len(stmt.args)}; edge dropped"
            )
            return
        if callee.is_static:
            self.warn(f"site {stmt.site}: virtual call resolves to static {callee.key}; dropped")
            return
        self.record_edge(stmt.site, caller.key, callee.key, KIND_VIRTUAL)
        self.reach_method(callee)
        self.add_fact(var_node(callee.key, THIS), recv)
        self._bind_args_ret(caller.key, stmt.target, stmt.args, callee)

    def _bind_static_call(self, caller: MethodModel, stmt: ir.StaticCall) -> None:
        callee = self.hier.dispatch(stmt.class_name, stmt.method_name, arity=len(stmt.args))
        if callee is None or not callee.is_static:
            self.warn(
                f"site {stmt.site}: unresolved static call "
                f"{stmt.class_name}.{stmt.method_name}/{len(stmt.args)}; dropped"
            )
            return
        self.record_edge(stmt.site, caller.key, callee.key, KIND_STATIC)
        self.reach_method(callee)
        self._bind_args_ret(caller.key, stmt.target, stmt.args, callee)

    def _bind_args_ret(
        self,
        caller_key: str,
        target: Optional[str],
        args: Tuple[str, ...],
        callee: MethodModel,
    ) -> None:
        if len(args) != len(callee.params):
            self.warn(f"arity mismatch calling {callee.key} with {len(args)} args")
            return
        for argv, (pname, _) in zip(args, callee.params):
            self.add_edge(var_node(caller_key, argv), var_node(callee.key, pname))
        if target is not None and callee.return_type != VOID:
            self.add_edge(var_node(callee.key, RET), var_node(caller_key, target))

    def record_edge(
        self,
        site: int,
        caller: str,
        callee: str,
        kind: str,
        rules: Iterable[str] = (),
    ) -> None:
        rec = self._edge_data.setdefault(
            (site, callee), {"caller": caller, "kind": kind, "rules": set()}
        )
        rec["rules"].update(rules)

    # -- fixpoint -------------------------------------------------------------

    def solve(self, max_steps: Optional[int] = None) -> None:
        steps = 0
        while self._wl:
            if max_steps is not None and steps >= max_steps:
                return
            steps += 1
            if self._rng is None:
                node, delta = self._wl.pop(0)
            else:
                i = self._rng.randrange(len(self._wl))
                self._wl[i], self._wl[-1] = self._wl[-1], self._wl[i]
                node, delta = self._wl.pop()
            for (dst, filt) in tuple(self._edges.get(node, ())):
                self._flow(delta, dst, filt)
            for h in tuple(self._handlers.get(node, ())):
                h(delta)

    @property
    def at_fixpoint(self) -> bool:
        return not self._wl

    def check_termination_bound(self) -> None:
        """Total insertions are bounded by |universe| x |slots|; exceeding it
        means some set shrank or an object was double-inserted."""
        universe = set()
        for objs in self._pts.values():
            universe |= objs
        bound = max(1, len(universe)) * max(1, len(self._pts))
        assert self._insertions <= bound, f"{self._insertions} insertions > bound {bound}"

    def snapshot(self) -> Dict[Node, FrozenSet[AbstractObject]]:
        return {n: frozenset(s) for n, s in self._pts.items() if s}

    def freeze(self) -> PointsToGraph:
        assert self.at_fixpoint
        self.check_termination_bound()
        var_pts: Dict[Tuple[str, str], FrozenSet[AbstractObject]] = {}
        field_pts: Dict[Tuple[AbstractObject, str], FrozenSet[AbstractObject]] = {}
        for node, objs in self._pts.items():
            if node[0] == "v":
                var_pts[(node[1], node[2])] = frozenset(objs)
            else:
                field_pts[(node[1], node[2])] = frozenset(objs)
        return PointsToGraph(var_pts, field_pts)

    def call_edges(self) -> List[CallEdge]:
        out = []
        for (site, callee), rec in self._edge_data.items():
            out.append(
                CallEdge(
                    site=site,
                    caller=rec["caller"],
                    callee=callee,
                    kind=rec["kind"],
                    rules=tuple(sorted(rec["rules"])),
                )
            )
        return sorted(out, key=CallEdge.sort_key)

    def taint_edges(self) -> List[Tuple[Node, Node]]:
        """All binding edges, ignoring type filters; the substrate for the
        flow-insensitive taint client."""
        out = []
        for src, bucket in self._edges.items():
            for (dst, _filt) in bucket:
                out.append((src, dst))
        return out
