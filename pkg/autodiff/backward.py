"""Reverse-mode differentiation over a recorded ``Graph``."""

from typing import Dict, List, Sequence, Set, Tuple, Union

import numpy as np

from errors import DepthError, GraphError, RankError

from .tape import MAX_GENERATION, Graph, Var

Gradient = Union[np.ndarray, Var]


def _relevant_nodes(graph: Graph, scalar: Var, target_ids: Set[int]) -> Tuple[List[int], Set[int]]:
    """Nodes on some path from a target to ``scalar``, highest id first."""
    floor = min(target_ids)
    ancestors: Set[int] = set()
    pending = [scalar.node_id]
    while pending:
        node_id = pending.pop()
        if node_id in ancestors:
            continue
        ancestors.add(node_id)
        for parent in graph.nodes[node_id].parents:
            pid = parent.node_id
            if pid is not None and pid >= floor and pid not in ancestors:
                pending.append(pid)

    depends: Set[int] = set()
    for node_id in sorted(ancestors):
        if node_id in target_ids or any(
            p.node_id in depends for p in graph.nodes[node_id].parents
        ):
            depends.add(node_id)
    return sorted(depends, reverse=True), depends


def grad(scalar: Var, wrt: Sequence[Var], create_graph: bool = False) -> List[Gradient]:
    """
    Gradient of a scalar with respect to each Var in ``wrt``.

    Args:
        scalar: Shape-() Var to differentiate.
        wrt: Differentiation targets, all recorded on ``scalar``'s graph.
        create_graph: Record the reverse pass so the results are Vars that
            can be differentiated again.

    Returns:
        One gradient per target, shaped like the target: Vars when
        ``create_graph`` is set, read-only arrays otherwise.
    """
    if not isinstance(scalar, Var):
        raise GraphError(f"grad: expected a Var, got {type(scalar).__name__}")
    if scalar.shape != ():
        raise RankError(f"grad: target must be a scalar, got shape {scalar.shape}")
    graph = scalar.graph
    for w in wrt:
        if w.graph is not graph:
            raise GraphError("grad: target belongs to a different graph")
        if not w.requires_grad or w.node_id is None:
            raise GraphError(f"grad: {w!r} is not a differentiation target")
    if scalar.requires_grad and scalar.generation >= MAX_GENERATION:
        raise DepthError(
            f"grad: scalar is already generation {scalar.generation}; "
            f"at most {MAX_GENERATION} nested derivative levels are supported"
        )

    def zeros(w: Var) -> Gradient:
        z = np.zeros(w.shape)
        return graph.constant(z) if create_graph else z

    if not scalar.requires_grad or not wrt:
        return [zeros(w) for w in wrt]

    target_ids = {w.node_id for w in wrt}
    order, depends = _relevant_nodes(graph, scalar, target_ids)
    if scalar.node_id not in depends:
        return [zeros(w) for w in wrt]

    found: Dict[int, Var] = {}
    with graph.reverse_scope(scalar.generation + 1, create_graph):
        cotangents: Dict[int, Var] = {scalar.node_id: graph.constant(1.0)}
        for node_id in order:
            ct = cotangents.pop(node_id, None)
            if ct is None:
                continue
            if node_id in target_ids:
                found[node_id] = ct
            node = graph.nodes[node_id]
            if node.vjp is None:
                continue
            for parent, pct in zip(node.parents, node.vjp(node.out, ct)):
                pid = parent.node_id
                if pct is None or pid is None or pid not in depends:
                    continue
                prev = cotangents.get(pid)
                cotangents[pid] = pct if prev is None else prev + pct

    results: List[Gradient] = []
    for w in wrt:
        ct = found.get(w.node_id)
        if ct is None:
            results.append(zeros(w))
        elif create_graph:
            results.append(ct)
        else:
            results.append(ct.value)
    return results
