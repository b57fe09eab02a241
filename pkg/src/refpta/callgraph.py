"""Call-graph materialization, reachability, and DOT export."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Set, Tuple

from .ir import ProgramModel

KIND_STATIC = "static"
KIND_VIRTUAL = "virtual"
KIND_REFLECTIVE = "reflective"


@dataclass(frozen=True)
class CallEdge:
    site: int
    caller: str  # method key
    callee: str  # method key
    kind: str
    rules: Tuple[str, ...] = ()  # rule chain, reflective edges only

    def sort_key(self):
        return (self.site, self.callee)


@dataclass
class CallGraph:
    entry: str
    edges: List[CallEdge]  # sorted by (site, callee), deduplicated
    reachable: List[str]  # sorted method keys reachable from entry

    def edge_set(self) -> Set[Tuple[int, str]]:
        return {(e.site, e.callee) for e in self.edges}


def build_call_graph(program: ProgramModel, entry_key: str, edges: List[CallEdge],
                     analyzed: Set[str]) -> CallGraph:
    """Materialize the edge set and recompute reachability from the entry.

    The post-hoc reachable set must coincide with the set of methods the
    solver analyzed on the fly; a mismatch is a solver bug.
    """
    for e in edges:
        assert e.callee in program.methods, f"edge to undeclared method {e.callee}"
    by_caller: Dict[str, List[CallEdge]] = {}
    for e in edges:
        by_caller.setdefault(e.caller, []).append(e)
    reach: Set[str] = {entry_key}
    work = [entry_key]
    while work:
        m = work.pop()
        for e in by_caller.get(m, ()):
            if e.callee not in reach:
                reach.add(e.callee)
                work.append(e.callee)
    assert reach == analyzed, (
        f"post-hoc reachability disagrees with on-the-fly set: "
        f"{sorted(reach ^ analyzed)}"
    )
    return CallGraph(
        entry=entry_key,
        edges=sorted(edges, key=CallEdge.sort_key),
        reachable=sorted(reach),
    )


def to_dot(program: ProgramModel, cg: CallGraph) -> str:
    """One node per reachable method labeled Class.name/arity; solid edges for
    static/virtual calls, dashed for reflective ones. Deterministic output."""
    label = {key: program.methods[key].label for key in cg.reachable}
    lines = ["digraph callgraph {"]
    for key in cg.reachable:
        lines.append(f'  "{label[key]}";')
    seen = set()
    for e in cg.edges:
        style = ' [style=dashed]' if e.kind == KIND_REFLECTIVE else ""
        line = f'  "{label[e.caller]}" -> "{label[e.callee]}"{style};'
        if line not in seen:
            seen.add(line)
            lines.append(line)
    lines.append("}")
    return "\n".join(lines) + "\n"
