"""Data-utility preservation: exact earth mover's distance between logs.

The variant frequency distributions of an original and an anonymized log are
compared with a balanced transportation problem whose ground cost is the
normalized edit distance between variants.  The minimal reallocation cost is
the utility loss ``ul``; data utility is ``du = 1 - ul``.

The solve is an exact transportation simplex over the bipartite basis tree.
When the problem comes from two logs, marginals are integerized (trace counts
cross-scaled by the other log's total) so the pivoting arithmetic is exact;
floating point enters only through costs and potentials.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .distance import distance_matrix
from .errors import InputError, SolverError
from .event_log import EventLog

_MASS_TOL = 1e-9
_REDUCED_COST_TOL = 1e-9
# Consecutive degenerate pivots before switching the entering rule to
# Bland's, which cannot cycle.
_STALL_LIMIT = 64

LabelTrace = tuple[str, ...]


@dataclass(frozen=True, eq=False)
class TransportProblem:
    """A balanced transportation instance between two variant distributions.

    Sources are the original log's variants (canonical order), sinks the
    anonymized log's.  ``cost`` is oriented sources x sinks, i.e. transposed
    relative to a tableau whose rows are the anonymized variants.  When the
    problem was built from logs, exact trace counts are kept alongside the
    float masses.
    """

    source_variants: tuple[LabelTrace, ...]
    source_masses: tuple[float, ...]
    sink_variants: tuple[LabelTrace, ...]
    sink_masses: tuple[float, ...]
    cost: np.ndarray
    source_counts: tuple[int, ...] | None = None
    source_total: int | None = None
    sink_counts: tuple[int, ...] | None = None
    sink_total: int | None = None

    def __post_init__(self):
        m, n = len(self.source_variants), len(self.sink_variants)
        if len(self.source_masses) != m or len(self.sink_masses) != n:
            raise ValueError("mass vectors must match the variant lists")
        if self.cost.shape != (m, n):
            raise ValueError(f"cost matrix shape {self.cost.shape} != ({m}, {n})")
        if m == 0 or n == 0:
            raise ValueError("a transport problem needs at least one source and one sink")
        if not np.all(np.isfinite(self.cost)) or self.cost.min() < 0.0 or self.cost.max() > 1.0:
            raise ValueError("cost entries must lie in [0, 1]")

    @property
    def sources(self) -> tuple[tuple[LabelTrace, float], ...]:
        return tuple(zip(self.source_variants, self.source_masses))

    @property
    def sinks(self) -> tuple[tuple[LabelTrace, float], ...]:
        return tuple(zip(self.sink_variants, self.sink_masses))


@dataclass(frozen=True)
class TransportPlan:
    """An optimal reallocation: sparse flows plus their total cost."""

    flows: dict[tuple[int, int], float]
    objective: float


@dataclass(frozen=True)
class UtilityReport:
    ul: float
    du: float
    plan: TransportPlan


def build_problem(original: EventLog, anonymized: EventLog) -> TransportProblem:
    """Assemble the balanced problem between two logs' variant distributions.

    Variants from both logs are re-encoded into a joint activity alphabet so
    distances are well-defined across logs with different label sets.
    """
    joint = sorted(set(original.labels) | set(anonymized.labels))
    ids = {lab: i for i, lab in enumerate(joint)}

    def encode(log: EventLog) -> list[tuple[int, ...]]:
        return [tuple(ids[log.labels[a]] for a in v) for v in log.variants]

    rows = encode(original)
    cols = encode(anonymized)
    cost = distance_matrix(rows, cols)
    return TransportProblem(
        source_variants=tuple(original.variant_labels(v) for v in original.variants),
        source_masses=tuple(c / original.total_traces for c in original.counts),
        sink_variants=tuple(anonymized.variant_labels(v) for v in anonymized.variants),
        sink_masses=tuple(c / anonymized.total_traces for c in anonymized.counts),
        cost=cost,
        source_counts=tuple(original.counts),
        source_total=original.total_traces,
        sink_counts=tuple(anonymized.counts),
        sink_total=anonymized.total_traces,
    )


def _validate_masses(problem: TransportProblem) -> None:
    for name, masses in (("source", problem.source_masses), ("sink", problem.sink_masses)):
        if any(mass <= 0 for mass in masses):
            raise InputError(f"{name} masses must all be positive")
        total = sum(masses)
        if abs(total - 1.0) > _MASS_TOL:
            raise InputError(
                f"{name} masses sum to {total!r}, expected 1 within {_MASS_TOL}; "
                "the problem is unbalanced"
            )


def _northwest_corner(supply: list, demand: list):
    """Initial basic feasible solution with exactly m+n-1 (possibly zero) arcs."""
    m, n = len(supply), len(demand)
    flow: dict[tuple[int, int], object] = {}
    i = j = 0
    while i < m and j < n:
        q = min(supply[i], demand[j])
        flow[(i, j)] = q
        supply[i] -= q
        demand[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if supply[i] == 0 and i < m - 1:
            i += 1
        elif j < n - 1:
            j += 1
        else:
            i += 1
    return flow


def _tree_path(adj: list[set[int]], start: int, goal: int) -> list[int]:
    parent = {start: -1}
    queue = [start]
    head = 0
    while head < len(queue):
        node = queue[head]
        head += 1
        if node == goal:
            path = [node]
            while parent[path[-1]] != -1:
                path.append(parent[path[-1]])
            path.reverse()
            return path
        for nb in adj[node]:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    raise SolverError("basis lost its spanning-tree structure")


def _potentials(adj: list[set[int]], cost: np.ndarray, m: int, n: int):
    pot = [None] * (m + n)
    pot[0] = 0.0
    queue = [0]
    head = 0
    while head < len(queue):
        node = queue[head]
        head += 1
        for nb in adj[node]:
            if pot[nb] is None:
                if node < m:
                    pot[nb] = cost[node, nb - m] - pot[node]
                else:
                    pot[nb] = cost[nb, node - m] - pot[node]
                queue.append(nb)
    if any(p is None for p in pot):
        raise SolverError("basis lost its spanning-tree structure")
    return np.array(pot[:m]), np.array(pot[m:])


def solve(problem: TransportProblem) -> TransportPlan:
    """Solve the balanced problem exactly; never returns an uncertified plan.

    Entering arcs are chosen by the most negative reduced cost (first in
    row-major order on ties); leaving arcs by minimal flow with the lowest
    index breaking ties.  After a run of degenerate pivots the entering rule
    falls back to Bland's, which guarantees termination.
    """
    _validate_masses(problem)
    cost = np.asarray(problem.cost, dtype=np.float64)
    m, n = cost.shape

    if problem.source_counts is not None and problem.sink_counts is not None:
        supply = [c * problem.sink_total for c in problem.source_counts]
        demand = [c * problem.source_total for c in problem.sink_counts]
        unit = 1.0 / (problem.source_total * problem.sink_total)
    else:
        supply = list(problem.source_masses)
        demand = list(problem.sink_masses)
        unit = 1.0

    flow = _northwest_corner(supply, demand)
    adj: list[set[int]] = [set() for _ in range(m + n)]
    basic = np.zeros((m, n), dtype=bool)
    for (i, j) in flow:
        adj[i].add(m + j)
        adj[m + j].add(i)
        basic[i, j] = True

    def current_objective() -> float:
        return float(sum(f * cost[i, j] for (i, j), f in sorted(flow.items())))

    max_iter = 1000 + 50 * (m + n)
    bland = False
    stall = 0
    optimal = current_objective() == 0.0  # costs are >= 0, so 0 is a certificate
    iterations = 0
    while not optimal:
        iterations += 1
        if iterations > max_iter:
            raise SolverError(
                f"no optimality certificate after {max_iter} pivots ({m}x{n} problem)"
            )
        pot_row, pot_col = _potentials(adj, cost, m, n)
        reduced = cost - pot_row[:, None] - pot_col[None, :]
        reduced[basic] = np.inf
        if bland:
            negative = reduced.ravel() < -_REDUCED_COST_TOL
            if not negative.any():
                optimal = True
                break
            flat = int(np.argmax(negative))
        else:
            flat = int(np.argmin(reduced))
            if reduced.ravel()[flat] >= -_REDUCED_COST_TOL:
                optimal = True
                break
        ei, ej = divmod(flat, n)

        path = _tree_path(adj, m + ej, ei)
        plus_arcs: list[tuple[int, int]] = []
        minus_arcs: list[tuple[int, int]] = []
        for k in range(len(path) - 1):
            a, b = path[k], path[k + 1]
            arc = (b, a - m) if a >= m else (a, b - m)
            (minus_arcs if k % 2 == 0 else plus_arcs).append(arc)

        theta = min(flow[arc] for arc in minus_arcs)
        leaving = min(arc for arc in minus_arcs if flow[arc] == theta)
        for arc in plus_arcs:
            flow[arc] += theta
        for arc in minus_arcs:
            flow[arc] -= theta
        del flow[leaving]
        adj[leaving[0]].discard(m + leaving[1])
        adj[m + leaving[1]].discard(leaving[0])
        basic[leaving] = False
        flow[(ei, ej)] = theta
        adj[ei].add(m + ej)
        adj[m + ej].add(ei)
        basic[ei, ej] = True

        if theta == 0:
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True
        else:
            stall = 0
            optimal = current_objective() == 0.0

    mass_flows = {
        (i, j): f * unit for (i, j), f in sorted(flow.items()) if f > 0
    }
    objective = float(sum(f * cost[i, j] for (i, j), f in mass_flows.items()))

    row_sums = [0.0] * m
    col_sums = [0.0] * n
    for (i, j), f in mass_flows.items():
        row_sums[i] += f
        col_sums[j] += f
    if any(abs(row_sums[i] - problem.source_masses[i]) > _MASS_TOL for i in range(m)) or any(
        abs(col_sums[j] - problem.sink_masses[j]) > _MASS_TOL for j in range(n)
    ):
        raise SolverError("optimal plan violates marginal conservation")
    return TransportPlan(flows=mass_flows, objective=objective)


def data_utility(original: EventLog, anonymized: EventLog) -> UtilityReport:
    """Utility loss and preserved data utility between two logs."""
    plan = solve(build_problem(original, anonymized))
    ul = plan.objective
    if ul < -_MASS_TOL or ul > 1.0 + _MASS_TOL:
        raise SolverError(f"utility loss {ul!r} escaped [0, 1]")
    ul = min(max(ul, 0.0), 1.0)
    return UtilityReport(ul=ul, du=1.0 - ul, plan=plan)


def write_plan_csv(problem: TransportProblem, plan: TransportPlan, out: TextIO) -> None:
    """Export a plan as ``source,sink,mass,cost`` rows in tableau order."""
    writer = csv.writer(out)
    writer.writerow(["source", "sink", "mass", "cost"])
    for (i, j), mass in sorted(plan.flows.items()):
        writer.writerow(
            [
                "|".join(problem.source_variants[i]),
                "|".join(problem.sink_variants[j]),
                repr(mass),
                repr(float(problem.cost[i, j])),
            ]
        )
