"""Block-diagram export in Graphviz DOT."""

from __future__ import annotations

from .model import ModelGraph, node_sort_key, scope_str


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(graph: ModelGraph) -> str:
    """Boxes labelled ``id:kind``, arrows labelled ``id:kind``, one cluster per subsystem scope."""
    lines = [f"digraph {_q(graph.name)} {{", "  rankdir=LR;", "  node [shape=box];"]
    members: dict[tuple, list] = {}
    for n in sorted(graph.nodes.values(), key=node_sort_key):
        members.setdefault(n.scope, []).append(n)
    scopes = {s[:i] for s in set(graph.scopes) | set(members) for i in range(len(s) + 1)}
    children: dict[tuple, list] = {}
    for s in sorted(scopes):
        if s:
            children.setdefault(s[:-1], []).append(s)

    def emit(scope: tuple, depth: int):
        pad = "  " * depth
        for n in members.get(scope, []):
            lines.append(f"{pad}{_q(n.id)} [label={_q(f'{n.id}:{n.kind.value}')}];")
        for child in children.get(scope, []):
            lines.append(f"{pad}subgraph {_q('cluster_' + scope_str(child))} {{")
            lines.append(f"{pad}  label={_q(child[-1])};")
            emit(child, depth + 1)
            lines.append(f"{pad}}}")

    emit((), 1)
    for eid in sorted(graph.edges):
        e = graph.edges[eid]
        lines.append(f"  {_q(e.src)} -> {_q(e.dst)} [label={_q(f'{e.id}:{e.kind.value}')}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
