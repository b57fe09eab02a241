"""Reflection resolution joined with the pointer analysis.

Three analysis modes, each a superset of the previous one's rules:

* ``strinf``  — constant-string inference only: reflective inputs resolve
  when the name strings are compile-time constants.
* ``typeinf`` — adds type inference for non-constant but non-null strings:
  unknown-class/unknown-signature metaobjects are minted and refined from
  receiver types, post-dominating casts, and locally built argument arrays.
* ``ripple``  — adds the missing-input rules: empty name sets, missing
  receiver objects, and missing return objects of unmodeled targets.

The missing-input rules carry negated premises (emptiness tests, set
differences, universally quantified guards), so they are never evaluated
inside the monotone worklist. The driver alternates a monotone fixpoint
phase with a snapshot evaluation of those rules until nothing is added.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from . import ir
from .callgraph import KIND_REFLECTIVE, CallGraph, build_call_graph
from .domain import (
    CLASS_META_UNKNOWN,
    SIG_UNKNOWN,
    UNKNOWN,
    AbstractObject,
    ClassMeta,
    HeapAlloc,
    MethodMeta,
    Signature,
    StringObj,
    SynthRecv,
    SynthRet,
    type_of,
)
from .hierarchy import VIEW_DECLARED, VIEW_INVOKE, VIEW_PUBLIC, Hierarchy
from .ir import METHOD_ARRAY, OBJECT, VOID, MethodModel, ProgramModel
from .pta import ARR, RET, THIS, Node, PointsToGraph, Solver, field_node, var_node

logger = logging.getLogger(__name__)

MODE_STRINF = "strinf"
MODE_TYPEINF = "typeinf"
MODE_RIPPLE = "ripple"
MODES = (MODE_STRINF, MODE_TYPEINF, MODE_RIPPLE)

#: Rule names and the analysis case that enables them; a target's producing
#: mode is the highest case on its rule chain.
RULE_CASE = {
    "forname-const": 1,
    "forname-unknown": 2,
    "forname-missing": 3,
    "getmethod-lookup": 1,
    "getmethod-unknown": 2,
    "getmethod-missing": 3,
    "getmethods-lookup": 1,
    "newinstance-known": 1,
    "newinstance-cast": 2,
    "invoke-recv-type": 2,
    "invoke-sig": 2,
    "invoke-missing-recv": 3,
    "invoke-missing-ret": 3,
    "invoke-transform": 1,
}
CASE_MODE = {1: MODE_STRINF, 2: MODE_TYPEINF, 3: MODE_RIPPLE}


@dataclass
class SiteState:
    site: int
    kind: str  # forName | getMethod | getMethods | newInstance | invoke
    method: MethodModel
    stmt: ir.Stmt
    markers: Set[str] = field(default_factory=set)
    produced: bool = False
    # (rendered target, rule) pairs; semantics of "target" depends on kind
    target_rules: Set[Tuple[str, str]] = field(default_factory=set)
    minted: Set[MethodMeta] = field(default_factory=set)
    synth_recv: Set[str] = field(default_factory=set)
    synth_ret: Set[str] = field(default_factory=set)
    # invoke machinery
    seen_classes: Set[ClassMeta] = field(default_factory=set)
    seen_names: Set[StringObj] = field(default_factory=set)
    seen_unknown_metas: Set[MethodMeta] = field(default_factory=set)
    seen_recv_types: Set[str] = field(default_factory=set)
    transformed: Set[MethodMeta] = field(default_factory=set)
    args_bound_to: Set[str] = field(default_factory=set)
    instance_bound: Set[Tuple[MethodMeta, str]] = field(default_factory=set)
    cast: Optional[str] = None
    para_tuples: Optional[List[object]] = None


@dataclass
class SiteReport:
    site: int
    kind: str
    method: str
    status: str  # resolved | partially-resolved | unresolved
    targets: List[dict]  # {target, rules, mode}
    markers: List[str]
    metaobjects: List[str]
    synth_receivers: List[str]
    synth_returns: List[str]

    def target_names(self) -> List[str]:
        return [t["target"] for t in self.targets]


@dataclass
class AnalysisResult:
    program: ProgramModel
    mode: str
    entry_key: str
    exhaustive: bool
    pts: PointsToGraph
    call_graph: CallGraph
    site_reports: List[SiteReport]
    warnings: List[str]
    taint_edges: List[Tuple[Node, Node]]

    def report_at(self, site: int) -> SiteReport:
        for r in self.site_reports:
            if r.site == site:
                return r
        raise KeyError(site)

    def reflective_edges(self):
        return [e for e in self.call_graph.edges if e.kind == KIND_REFLECTIVE]


class ReflectionEngine:
    """Statement hooks plus the between-phase missing-input rules."""

    def __init__(self, program: ProgramModel, hier: Hierarchy, mode: str, exhaustive: bool = False):
        assert mode in MODES, mode
        self.program = program
        self.hier = hier
        self.mode = mode
        self.exhaustive = exhaustive
        self.sites: Dict[int, SiteState] = {}
        # provenance: minted object -> set of (rule, parent or None)
        self.prov: Dict[AbstractObject, Set[Tuple[str, Optional[AbstractObject]]]] = {}
        # reflective edge -> metaobjects whose chains produced it
        self.edge_meta: Dict[Tuple[int, str], Set[MethodMeta]] = {}

    @property
    def typeinf_on(self) -> bool:
        return self.mode in (MODE_TYPEINF, MODE_RIPPLE)

    # -- provenance ----------------------------------------------------------

    def _mint(self, obj: AbstractObject, rule: str, parent: Optional[AbstractObject] = None) -> None:
        self.prov.setdefault(obj, set()).add((rule, parent))

    def rule_chain(self, obj: AbstractObject, _seen: Optional[Set] = None) -> FrozenSet[str]:
        seen = _seen if _seen is not None else set()
        if obj in seen:
            return frozenset()
        seen.add(obj)
        out: Set[str] = set()
        for rule, parent in self.prov.get(obj, ()):
            out.add(rule)
            if parent is not None:
                out |= self.rule_chain(parent, seen)
        return frozenset(out)

    # -- statement hooks -------------------------------------------------------

    def on_reflective_stmt(self, solver: Solver, m: MethodModel, stmt: ir.Stmt) -> None:
        if isinstance(stmt, ir.ForName):
            self._setup_forname(solver, m, stmt)
        elif isinstance(stmt, ir.NewInstance):
            self._setup_newinstance(solver, m, stmt)
        elif isinstance(stmt, ir.GetMethod):
            self._setup_getmethod(solver, m, stmt)
        elif isinstance(stmt, ir.GetMethods):
            self._setup_getmethods(solver, m, stmt)
        elif isinstance(stmt, ir.Invoke):
            self._setup_invoke(solver, m, stmt)
        else:  # pragma: no cover
            raise TypeError(f"not a reflective statement: {stmt!r}")

    def _state(self, m: MethodModel, stmt: ir.Stmt, kind: str) -> SiteState:
        st = self.sites.get(stmt.site)
        if st is None:
            st = SiteState(site=stmt.site, kind=kind, method=m, stmt=stmt)
            self.sites[stmt.site] = st
        return st

    # Class.forName -----------------------------------------------------------

    def _setup_forname(self, solver: Solver, m: MethodModel, stmt: ir.ForName) -> None:
        st = self._state(m, stmt, "forName")
        tgt = var_node(m.key, stmt.target)

        def on_name(delta):
            for o in delta:
                if not isinstance(o, StringObj):
                    continue
                if o.is_constant:
                    t = o.text
                    if t in self.program.classes:
                        meta = ClassMeta(t)
                        self._mint(meta, "forname-const")
                        st.produced = True
                        st.target_rules.add((t, "forname-const"))
                        solver.add_fact(tgt, meta)
                    else:
                        st.markers.add(f"no-such-class:{t}")
                        solver.warn(f"site {stmt.site}: forName of undeclared class {t!r}")
                elif self.typeinf_on:
                    self._mint(CLASS_META_UNKNOWN, "forname-unknown")
                    st.markers.add("name-unknown")
                    solver.add_fact(tgt, CLASS_META_UNKNOWN)
                else:
                    st.markers.add("name-unknown-ignored")

        solver.register(var_node(m.key, stmt.name_var), on_name)

    # clz.newInstance ----------------------------------------------------------

    def _site_cast(self, st: SiteState) -> str:
        if st.cast is None:
            st.cast = ir.post_dominating_cast(st.method, st.site)
        return st.cast

    def _setup_newinstance(self, solver: Solver, m: MethodModel, stmt: ir.NewInstance) -> None:
        st = self._state(m, stmt, "newInstance")
        tgt = var_node(m.key, stmt.target)

        def on_clz(delta):
            for c in delta:
                if not isinstance(c, ClassMeta):
                    continue
                if c.class_part is UNKNOWN:
                    cast = self._site_cast(st)
                    if cast == OBJECT and not self.exhaustive:
                        st.markers.add("unknown-class-under-object-cast")
                        continue
                    types = self.hier.concrete_subtypes(cast)
                    if not types:
                        st.markers.add(f"no-concrete-subtypes:{cast}")
                        continue
                    for t in types:
                        obj = HeapAlloc(stmt.site, t)
                        self._mint(obj, "newinstance-cast", c)
                        st.produced = True
                        st.target_rules.add((t, "newinstance-cast"))
                        solver.add_fact(tgt, obj)
                else:
                    t = c.class_part
                    if not self.hier.is_concrete(t):
                        st.markers.add(f"newinstance-on-interface:{t}")
                        solver.warn(f"site {stmt.site}: newInstance on non-concrete {t}")
                        continue
                    obj = HeapAlloc(stmt.site, t)
                    self._mint(obj, "newinstance-known", c)
                    st.produced = True
                    st.target_rules.add((t, "newinstance-known"))
                    solver.add_fact(tgt, obj)

        solver.register(var_node(m.key, stmt.base), on_clz)

    # clz.getMethod / clz.getDeclaredMethod --------------------------------------

    def _to_mtd_sig(
        self, st: SiteState, c: ClassMeta, s: StringObj, stmt: ir.GetMethod
    ) -> List[Tuple[Signature, str]]:
        """Signatures for one (class metaobject, name string) pair, with the
        rule that justifies each."""
        out: List[Tuple[Signature, str]] = []
        if s.is_constant:
            if c.class_part is UNKNOWN:
                out.append((Signature(UNKNOWN, s.text, UNKNOWN), "getmethod-unknown"))
                st.markers.add("class-unknown")
                return out
            view = VIEW_DECLARED if stmt.declared_only else VIEW_PUBLIC
            matches = [
                mm
                for mm in self.hier.methods_view(c.class_part, view)
                if mm.name == s.text
                and (stmt.type_lits is None or mm.param_types == stmt.type_lits)
            ]
            if not matches:
                st.markers.add(f"no-method:{c.class_part}.{s.text}")
                return out
            for mm in matches:
                st.target_rules.add((mm.key, "getmethod-lookup"))
                out.append(
                    (Signature(mm.return_type, mm.name, tuple(mm.param_types)), "getmethod-lookup")
                )
            return out
        # non-constant, non-null name
        if not self.typeinf_on:
            st.markers.add("name-unknown-ignored")
            return out
        st.markers.add("name-unknown")
        out.append((SIG_UNKNOWN, "getmethod-unknown"))
        return out

    def _setup_getmethod(self, solver: Solver, m: MethodModel, stmt: ir.GetMethod) -> None:
        st = self._state(m, stmt, "getMethod")
        tgt = var_node(m.key, stmt.target)

        def pair(c: ClassMeta, s: StringObj) -> None:
            for sig, rule in self._to_mtd_sig(st, c, s, stmt):
                meta = MethodMeta(c.class_part, sig)
                self._mint(meta, rule, c)
                st.produced = True
                st.minted.add(meta)
                solver.add_fact(tgt, meta)

        def on_clz(delta):
            for c in delta:
                if isinstance(c, ClassMeta) and c not in st.seen_classes:
                    st.seen_classes.add(c)
                    for s in tuple(st.seen_names):
                        pair(c, s)

        def on_name(delta):
            for s in delta:
                if isinstance(s, StringObj) and s not in st.seen_names:
                    st.seen_names.add(s)
                    for c in tuple(st.seen_classes):
                        pair(c, s)

        solver.register(var_node(m.key, stmt.base), on_clz)
        solver.register(var_node(m.key, stmt.name_var), on_name)

    # clz.getMethods / clz.getDeclaredMethods -------------------------------------

    def _setup_getmethods(self, solver: Solver, m: MethodModel, stmt: ir.GetMethods) -> None:
        st = self._state(m, stmt, "getMethods")
        tgt = var_node(m.key, stmt.target)
        view = VIEW_DECLARED if stmt.declared_only else VIEW_PUBLIC

        def on_clz(delta):
            for c in delta:
                if not isinstance(c, ClassMeta):
                    continue
                if c.class_part is UNKNOWN:
                    st.markers.add("class-unknown")
                    continue
                arr_obj = HeapAlloc(stmt.site, METHOD_ARRAY)
                self._mint(arr_obj, "getmethods-lookup", c)
                st.produced = True
                solver.add_fact(tgt, arr_obj)
                slot = field_node(arr_obj, ARR)
                for mm in self.hier.methods_view(c.class_part, view):
                    sig = Signature(mm.return_type, mm.name, tuple(mm.param_types))
                    meta = MethodMeta(c.class_part, sig)
                    self._mint(meta, "getmethods-lookup", c)
                    st.target_rules.add((mm.key, "getmethods-lookup"))
                    st.minted.add(meta)
                    solver.add_fact(slot, meta)

        solver.register(var_node(m.key, stmt.base), on_clz)

    # mtd.invoke -------------------------------------------------------------------

    def recv_node(self, m: MethodModel, stmt: ir.Invoke) -> Node:
        """Receiver facts live in the receiver variable, or in a site-local
        slot when the literal null was written (missing receivers synthesized
        by the ripple rules land there)."""
        if stmt.recv is not None:
            return var_node(m.key, stmt.recv)
        return ("rslot", stmt.site)

    def _para_tuples(self, st: SiteState) -> List[object]:
        if st.para_tuples is None:
            st.para_tuples = to_para_tys(self.hier, st.method, st.stmt)
        return st.para_tuples

    def _setup_invoke(self, solver: Solver, m: MethodModel, stmt: ir.Invoke) -> None:
        st = self._state(m, stmt, "invoke")
        mtd_node = var_node(m.key, stmt.base)
        rnode = self.recv_node(m, stmt)
        solver.pts(rnode)  # materialize the slot

        def on_mtd(delta):
            for mo in delta:
                if not isinstance(mo, MethodMeta):
                    continue
                if self.typeinf_on and mo.class_part is UNKNOWN:
                    if mo not in st.seen_unknown_metas:
                        st.seen_unknown_metas.add(mo)
                        for t in tuple(st.seen_recv_types):
                            self._refine_recv_type(solver, st, mtd_node, mo, t)
                if self.typeinf_on and mo.sig == SIG_UNKNOWN:
                    self._refine_signature(solver, st, mtd_node, mo)
                if mo.class_part is not UNKNOWN and mo.sig != SIG_UNKNOWN:
                    self._transform(solver, st, mo)

        def on_recv(delta):
            if not self.typeinf_on:
                return
            for o in delta:
                t = type_of(o)
                if t not in st.seen_recv_types:
                    st.seen_recv_types.add(t)
                    for mo in tuple(st.seen_unknown_metas):
                        self._refine_recv_type(solver, st, mtd_node, mo, t)

        solver.register(mtd_node, on_mtd)
        solver.register(rnode, on_recv)

    def _refine_recv_type(
        self, solver: Solver, st: SiteState, mtd_node: Node, mo: MethodMeta, t: str
    ) -> None:
        """Unknown class part refined to every dynamic receiver type."""
        if t.endswith("[]"):
            return
        refined = MethodMeta(t, mo.sig)
        self._mint(refined, "invoke-recv-type", mo)
        solver.add_fact(mtd_node, refined)

    def _refine_signature(self, solver: Solver, st: SiteState, mtd_node: Node, mo: MethodMeta) -> None:
        """Fully unknown signature refined from the post-dominating cast (return
        type) and the locally built argument array (parameter slots)."""
        cast = self._site_cast(st)
        if cast == OBJECT:
            ret_cands: List[object] = [UNKNOWN]
        else:
            ret_cands = sorted(self.hier.compat_set(cast))
        paras = self._para_tuples(st)
        para_cands: List[object] = paras if paras else [UNKNOWN]
        for r in ret_cands:
            for p in para_cands:
                sig = Signature(r, UNKNOWN, p)
                if sig == SIG_UNKNOWN:
                    continue
                refined = MethodMeta(mo.class_part, sig)
                self._mint(refined, "invoke-sig", mo)
                solver.add_fact(mtd_node, refined)

    def _transform(self, solver: Solver, st: SiteState, mo: MethodMeta) -> None:
        """Turn the reflective call into regular call bindings for every
        looked-up target, filtering argument objects by declared parameter
        types; receiver objects dispatch to the dynamic target."""
        if mo in st.transformed:
            return
        st.transformed.add(mo)
        stmt: ir.Invoke = st.stmt
        targets = self.hier.mtd_lookup(mo.class_part, mo.sig, VIEW_INVOKE)
        if not targets:
            st.markers.add(f"no-target:{mo.render()}")
            return
        for mm in targets:
            if mm.is_static:
                self._bind_invoke_target(solver, st, mo, mm, recv_obj=None)
            else:
                rnode = self.recv_node(st.method, stmt)
                key = (mo, mm.key)
                if key in st.instance_bound:
                    continue
                st.instance_bound.add(key)

                def on_recv_bind(delta, mo=mo, mm=mm):
                    for o in delta:
                        t = type_of(o)
                        if not self.hier.is_subtype(t, mo.class_part):
                            continue
                        m2 = self.hier.dispatch(t, mm.name, param_types=mm.param_types)
                        if m2 is None or m2.is_static:
                            continue
                        self._bind_invoke_target(solver, st, mo, m2, recv_obj=o)

                solver.register(rnode, on_recv_bind)

    def _bind_invoke_target(
        self,
        solver: Solver,
        st: SiteState,
        mo: MethodMeta,
        callee: MethodModel,
        recv_obj: Optional[AbstractObject],
    ) -> None:
        stmt: ir.Invoke = st.stmt
        solver.record_edge(
            stmt.site, st.method.key, callee.key, KIND_REFLECTIVE, rules=("invoke-transform",)
        )
        meta = self.edge_meta.setdefault((stmt.site, callee.key), set())
        meta.add(mo)
        if recv_obj is not None:
            meta.add(recv_obj)  # receiver origin belongs to the edge's rule chain
        st.produced = True
        solver.reach_method(callee)
        if recv_obj is not None:
            solver.add_fact(var_node(callee.key, THIS), recv_obj)
        if stmt.args_var is not None and callee.key not in st.args_bound_to:
            st.args_bound_to.add(callee.key)
            args_node = var_node(st.method.key, stmt.args_var)

            def on_args(delta, callee=callee):
                for oa in delta:
                    slot = solver.field_slot(oa, ARR) if isinstance(oa, HeapAlloc) else None
                    if slot is None:
                        continue
                    for pname, ptype in callee.params:
                        solver.add_edge(slot, var_node(callee.key, pname), filt=ptype)

            solver.register(args_node, on_args)
        if stmt.target is not None and callee.return_type != VOID:
            solver.add_edge(var_node(callee.key, RET), var_node(st.method.key, stmt.target))

    # -- missing-input rules (between phases, ripple mode only) -----------------

    def phase_b(self, solver: Solver) -> None:
        """Evaluate the negated-premise rules against the current fixpoint and
        apply every derived fact afterwards; deterministic and monotone."""
        assert self.mode == MODE_RIPPLE and solver.at_fixpoint
        pending: List[Tuple[Node, AbstractObject]] = []
        for site in sorted(self.sites):
            st = self.sites[site]
            if st.method.key not in solver.reachable:
                continue
            stmt = st.stmt
            mk = st.method.key
            if st.kind == "forName":
                if not solver.pts(var_node(mk, stmt.name_var)):
                    self._mint(CLASS_META_UNKNOWN, "forname-missing")
                    st.markers.add("name-missing")
                    pending.append((var_node(mk, stmt.target), CLASS_META_UNKNOWN))
            elif st.kind == "getMethod":
                if not solver.pts(var_node(mk, stmt.name_var)):
                    for c in sorted(
                        (o for o in solver.pts(var_node(mk, stmt.base)) if isinstance(o, ClassMeta)),
                        key=lambda c: c.render(),
                    ):
                        meta = MethodMeta(c.class_part, SIG_UNKNOWN)
                        self._mint(meta, "getmethod-missing", c)
                        st.markers.add("name-missing")
                        st.minted.add(meta)
                        st.produced = True
                        pending.append((var_node(mk, stmt.target), meta))
            elif st.kind == "invoke":
                pending.extend(self._missing_receiver(solver, st))
                pending.extend(self._missing_return(solver, st))
        for node, obj in pending:
            solver.add_fact(node, obj)

    def _missing_receiver(self, solver: Solver, st: SiteState) -> List[Tuple[Node, AbstractObject]]:
        stmt: ir.Invoke = st.stmt
        rnode = self.recv_node(st.method, stmt)
        recv_objs = solver.pts(rnode)
        known_classes = {
            mo.class_part
            for mo in solver.pts(var_node(st.method.key, stmt.base))
            if isinstance(mo, MethodMeta) and mo.class_part is not UNKNOWN
        }
        covered: Set[str] = set()
        for o in recv_objs:
            covered |= self.hier.supertypes(type_of(o))
        out: List[Tuple[Node, AbstractObject]] = []
        for t2 in sorted(known_classes - covered - {OBJECT}):
            for t3 in sorted(self.hier.compat_set(t2) - {OBJECT}):
                if not self.hier.is_concrete(t3):
                    continue
                obj = SynthRecv(stmt.site, t3)
                self._mint(obj, "invoke-missing-recv")
                st.synth_recv.add(t3)
                out.append((rnode, obj))
        return out

    def _missing_return(self, solver: Solver, st: SiteState) -> List[Tuple[Node, AbstractObject]]:
        stmt: ir.Invoke = st.stmt
        if stmt.target is None:
            return []
        tnode = var_node(st.method.key, stmt.target)
        existing = solver.pts(tnode)
        out: List[Tuple[Node, AbstractObject]] = []
        done: Set[str] = set()
        for mo in sorted(
            (
                o
                for o in solver.pts(var_node(st.method.key, stmt.base))
                if isinstance(o, MethodMeta) and o.class_part is not UNKNOWN
            ),
            key=lambda o: o.render(),
        ):
            ret = mo.sig.ret
            if ret is UNKNOWN or ret in (OBJECT, VOID) or not isinstance(ret, str):
                continue
            if ret in done:
                continue
            targets = self.hier.mtd_lookup(mo.class_part, mo.sig, VIEW_INVOKE)
            if not any(not mm.has_code for mm in targets):
                continue
            if any(self.hier.is_subtype(type_of(o), ret) for o in existing):
                continue
            done.add(ret)
            for t in self.hier.concrete_subtypes(ret):
                obj = SynthRet(stmt.site, t)
                self._mint(obj, "invoke-missing-ret")
                st.synth_ret.add(t)
                out.append((tnode, obj))
        return out

    # -- reports ------------------------------------------------------------------

    def build_reports(self, solver: Solver) -> List[SiteReport]:
        reports = []
        edges_by_site: Dict[int, Set[str]] = {}
        for (site, callee), rec in solver._edge_data.items():
            if rec["kind"] == KIND_REFLECTIVE:
                edges_by_site.setdefault(site, set()).add(callee)
        for site in sorted(self.sites):
            st = self.sites[site]
            if st.method.key not in solver.reachable:
                continue
            target_rules: Dict[str, Set[str]] = {}
            if st.kind == "invoke":
                for callee in edges_by_site.get(site, ()):  # resolved invoke targets
                    rules = {"invoke-transform"}
                    for mo in self.edge_meta.get((site, callee), ()):
                        rules |= self.rule_chain(mo)
                    target_rules.setdefault(callee, set()).update(rules)
                for mo in solver.pts(var_node(st.method.key, st.stmt.base)):
                    if isinstance(mo, MethodMeta) and mo.class_part is UNKNOWN:
                        st.markers.add("class-never-inferred")
                st.produced = st.produced or bool(target_rules)
            else:
                for tgt, rule in st.target_rules:
                    target_rules.setdefault(tgt, set()).add(rule)
                    for extra in () if st.kind != "newInstance" else (rule,):
                        pass
            if st.kind == "newInstance":
                # carry the class metaobject's history into each object's chain
                for obj in solver.pts(var_node(st.method.key, st.stmt.target)):
                    if isinstance(obj, HeapAlloc) and obj.site == site:
                        target_rules.setdefault(obj.type_name, set()).update(self.rule_chain(obj))
            targets = []
            for name in sorted(target_rules):
                rules = sorted(target_rules[name])
                case = max(RULE_CASE[r] for r in rules)
                targets.append({"target": name, "rules": rules, "mode": CASE_MODE[case]})
            if targets and not st.markers:
                status = "resolved"
            elif targets or st.produced:
                status = "partially-resolved" if st.markers else "resolved"
            else:
                status = "unresolved"
            reports.append(
                SiteReport(
                    site=site,
                    kind=st.kind,
                    method=st.method.key,
                    status=status,
                    targets=targets,
                    markers=sorted(st.markers),
                    metaobjects=sorted(m.render() for m in st.minted),
                    synth_receivers=sorted(st.synth_recv),
                    synth_returns=sorted(st.synth_ret),
                )
            )
        return reports


def to_para_tys(hier: Hierarchy, method: MethodModel, stmt: ir.Invoke) -> List[object]:
    """Parameter-slot tuples inferred intra-procedurally from the argument
    array: null arguments yield the empty tuple; a locally allocated,
    locally stored array yields one tuple whose i-th slot is the set of types
    compatible with the declared type of the i-th stored variable; anything
    else (parameter, loaded, escaping, or multiply-defined arrays) yields
    nothing."""
    if stmt.args_var is None:
        return [()]
    var = stmt.args_var
    if any(v == var for v, _ in method.params):
        return []
    defs = [s for s in method.body if ir.stmt_target(s) == var]
    if len(defs) != 1 or not isinstance(defs[0], ir.ArrayAlloc):
        return []
    for s in method.body:
        if isinstance(s, ir.Copy) and s.source == var:
            return []
        if isinstance(s, (ir.Store, ir.ArrayStore)) and getattr(s, "source", None) == var:
            return []
        if isinstance(s, ir.Return) and s.value == var:
            return []
        if isinstance(s, (ir.VirtualCall, ir.StaticCall)) and var in s.args:
            return []
    slots: List[object] = []
    for s in method.body:
        if isinstance(s, ir.ArrayStore) and s.base == var:
            t = method.var_type(s.source)
            assert t is not None
            slots.append(UNKNOWN if t == OBJECT else frozenset(hier.compat_set(t)))
    return [tuple(slots)]


# ---------------------------------------------------------------------------
# Stratified driver
# ---------------------------------------------------------------------------


def run_stratified(
    program: ProgramModel,
    entry: str,
    mode: str,
    exhaustive: bool = False,
    seed: Optional[int] = None,
) -> AnalysisResult:
    """Joint pointer + reflection analysis to mutual fixpoint.

    Phase A solves the monotone rules; in ripple mode, phase B evaluates the
    missing-input rules on the fixpoint snapshot and the loop repeats until
    phase B derives nothing new.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r} (expected one of {MODES})")
    hier = Hierarchy(program)
    engine = ReflectionEngine(program, hier, mode, exhaustive=exhaustive)
    solver = Solver(program, hier, hooks=engine, seed=seed)
    entry_m = program.find_entry(entry)
    solver.init_constraints(entry_m)
    solver.solve()
    if mode == MODE_RIPPLE:
        rounds = 0
        while True:
            rounds += 1
            before = solver._insertions
            engine.phase_b(solver)
            if solver._insertions == before:
                break
            solver.solve()
        universe = set()
        for objs in solver._pts.values():
            universe |= objs
        assert rounds <= len(universe) + 2, "phase loop exceeded the universe bound"
    reports = engine.build_reports(solver)
    cg = build_call_graph(program, entry_m.key, solver.call_edges(), set(solver.reachable))
    return AnalysisResult(
        program=program,
        mode=mode,
        entry_key=entry_m.key,
        exhaustive=exhaustive,
        pts=solver.freeze(),
        call_graph=cg,
        site_reports=reports,
        warnings=sorted(solver.warnings),
        taint_edges=solver.taint_edges(),
    )
