"""LP-relaxation branch & bound for linear instances (the classical baseline).

Conventions (recorded in every trace): nodes are numbered in creation
order starting at 1; the count reported is the number of LP-solved nodes
including the root; the queue is best-first on the parent's LP bound with
ties broken by lower node id; branching picks the variable with the
largest fractional part (ties: lowest index); pruning compares with <=
against the incumbent, which is safe because leaf data are integral.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from .model import Problem, classify
from .relaxation import Bounds, LpSolution, UnsupportedProblemError, solve_lp_relaxation

BRANCHED = "branched"
INTEGER_LEAF = "integer-leaf"
INFEASIBLE_LEAF = "infeasible-leaf"
PRUNED = "pruned"

BEST_FIRST = "best-first"
DEPTH_FIRST = "depth-first"


@dataclass
class BnBNode:
    node_id: int
    parent_id: int | None
    bounds: dict[int, Bounds]
    parent_bound: Fraction | None
    lp: LpSolution | None = None
    disposition: str | None = None
    branch_var: int | None = None

    def tightened(self, var: int, lo: Fraction | None, hi: Fraction | None) -> dict[int, Bounds]:
        new = dict(self.bounds)
        cur_lo, cur_hi = new.get(var, (None, None))
        new[var] = (lo if lo is not None else cur_lo, hi if hi is not None else cur_hi)
        return new


@dataclass(frozen=True)
class BnBConfig:
    max_nodes: int = 100_000
    search: str = BEST_FIRST


@dataclass(frozen=True)
class BnBResult:
    status: str  # optimal | infeasible | node-limit
    value: Fraction | None
    assignment: tuple[int, ...] | None
    node_count: int
    nodes: tuple[BnBNode, ...]
    search: str


def _fractional_branch_var(point: tuple[Fraction, ...]) -> int | None:
    """Index with the largest fractional part; ties to the lowest index."""
    best_var = None
    best_frac = Fraction(0)
    for i, v in enumerate(point):
        frac = v - (v.numerator // v.denominator)
        if frac > best_frac:
            best_frac = frac
            best_var = i
    return best_var


def solve_bnb(problem: Problem, config: BnBConfig = BnBConfig()) -> BnBResult:
    """Branch & bound over the exact LP relaxation.

    Deterministic by construction: exact rational LPs, fixed node numbering
    and tie rules, single-threaded search.
    """
    if classify(problem) != "linear":
        raise UnsupportedProblemError("branch & bound requires a linear problem")
    if config.search not in (BEST_FIRST, DEPTH_FIRST):
        raise ValueError(f"unknown search order {config.search!r}")

    nodes: list[BnBNode] = []
    incumbent_value: Fraction | None = None
    incumbent_point: tuple[int, ...] | None = None
    next_id = 1

    root = BnBNode(node_id=next_id, parent_id=None, bounds={}, parent_bound=None)
    next_id += 1

    # Best-first pops the largest parent bound first (min-heap on negation);
    # the root's placeholder bound never competes with anything.
    heap: list[tuple[Fraction, int]] = []
    stack: list[BnBNode] = []
    by_id = {root.node_id: root}
    if config.search == BEST_FIRST:
        heapq.heappush(heap, (Fraction(0), root.node_id))
    else:
        stack.append(root)

    def pop() -> BnBNode | None:
        if config.search == BEST_FIRST:
            if not heap:
                return None
            _, node_id = heapq.heappop(heap)
            return by_id[node_id]
        return stack.pop() if stack else None

    def push(node: BnBNode) -> None:
        by_id[node.node_id] = node
        if config.search == BEST_FIRST:
            heapq.heappush(heap, (-node.parent_bound, node.node_id))
        else:
            stack.append(node)

    status = "optimal"
    while True:
        if len(nodes) >= config.max_nodes:
            status = "node-limit"
            break
        node = pop()
        if node is None:
            break
        node.lp = solve_lp_relaxation(problem, node.bounds)
        nodes.append(node)
        if node.lp.status != "optimal":
            node.disposition = INFEASIBLE_LEAF
            continue
        point = node.lp.point
        if all(v.denominator == 1 for v in point):
            node.disposition = INTEGER_LEAF
            if incumbent_value is None or node.lp.value > incumbent_value:
                incumbent_value = node.lp.value
                incumbent_point = tuple(int(v) for v in point)
            continue
        if incumbent_value is not None and node.lp.value <= incumbent_value:
            node.disposition = PRUNED
            continue
        var = _fractional_branch_var(point)
        node.disposition = BRANCHED
        node.branch_var = var
        floor_v = point[var].numerator // point[var].denominator
        down = BnBNode(
            node_id=next_id,
            parent_id=node.node_id,
            bounds=node.tightened(var, None, Fraction(floor_v)),
            parent_bound=node.lp.value,
        )
        next_id += 1
        up = BnBNode(
            node_id=next_id,
            parent_id=node.node_id,
            bounds=node.tightened(var, Fraction(floor_v + 1), None),
            parent_bound=node.lp.value,
        )
        next_id += 1
        if config.search == BEST_FIRST:
            push(down)
            push(up)
        else:
            # LIFO: push the up-branch first so the down-branch pops first.
            push(up)
            push(down)

    if incumbent_value is None and status == "optimal":
        status = "infeasible"
    return BnBResult(
        status=status,
        value=incumbent_value,
        assignment=incumbent_point,
        node_count=len(nodes),
        nodes=tuple(nodes),
        search=config.search,
    )


def trace_records(result: BnBResult) -> list[dict]:
    """JSON-ready node records, enough to redraw the search tree."""
    records = []
    for node in result.nodes:
        lp = node.lp
        records.append(
            {
                "id": node.node_id,
                "parent": node.parent_id,
                "bounds": {
                    str(var): [None if b is None else str(b) for b in bounds]
                    for var, bounds in sorted(node.bounds.items())
                },
                "lp_status": lp.status if lp else None,
                "lp_value": str(lp.value) if lp and lp.value is not None else None,
                "lp_point": [str(v) for v in lp.point] if lp and lp.point else None,
                "disposition": node.disposition,
                "branch_var": node.branch_var,
            }
        )
    return records
