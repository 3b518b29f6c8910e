"""Deterministic quadrature over coordinate boxes, refinement, extrapolation.

Periodic axes use the composite trapezoid rule; non-periodic axes use
composite Gauss-Legendre panels with interior nodes, so chart-edge
coordinate degeneracies are never sampled.  Summation is a fixed pairwise
binary tree over the flattened node ordering, independent of how many
workers evaluate the integrand.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "AxisRule",
    "MeshSpec",
    "ConvergenceTable",
    "mesh_for_chart",
    "integrate_chart",
    "integrate_fibers",
    "refine_until",
    "r_limit_extrapolate",
    "pairwise_sum",
    "geometric_schedule",
]

GL_PANEL = 8


class ResolutionError(ValueError):
    """Too few nodes or levels for the requested operation."""


def pairwise_sum(values: np.ndarray) -> float:
    """Sum by a fixed binary tree; result independent of worker layout."""
    a = np.asarray(values, dtype=float).ravel().copy()
    n = a.size
    if n == 0:
        return 0.0
    while n > 1:
        half = n // 2
        a[:half] += a[half : 2 * half]
        if n % 2:
            a[half] = a[2 * half]
            n = half + 1
        else:
            n = half
    return float(a[0])


@lru_cache(maxsize=None)
def _gauss_nodes(npts: int):
    x, w = np.polynomial.legendre.leggauss(npts)
    return x, w


def _axis_nodes(lo: float, hi: float, rule: str, nodes: int):
    """Nodes and weights for a single axis."""
    if nodes < 4:
        raise ResolutionError("node count per axis must be >= 4")
    if rule == "trapezoid":
        h = (hi - lo) / nodes
        x = lo + h * np.arange(nodes)
        w = np.full(nodes, h)
        return x, w
    if rule == "gauss":
        panels = max(1, -(-nodes // GL_PANEL)) if nodes >= GL_PANEL else 1
        per = GL_PANEL if nodes >= GL_PANEL else nodes
        xs, ws = [], []
        edges = np.linspace(lo, hi, panels + 1)
        gx, gw = _gauss_nodes(per)
        for a, b in zip(edges[:-1], edges[1:]):
            mid, rad = 0.5 * (a + b), 0.5 * (b - a)
            xs.append(mid + rad * gx)
            ws.append(rad * gw)
        return np.concatenate(xs), np.concatenate(ws)
    raise ResolutionError(f"unknown axis rule {rule!r}")


@dataclass(frozen=True)
class AxisRule:
    """Per-axis quadrature recipe.

    base_nodes is the level-1 node count; unless fixed, counts double with
    each refinement level.
    """

    rule: str
    base_nodes: int = GL_PANEL
    fixed: bool = False

    def nodes_at(self, level: int) -> int:
        n = self.base_nodes if self.fixed else self.base_nodes * 2 ** (level - 1)
        return max(4, n)


@dataclass(frozen=True)
class MeshSpec:
    """Fully resolved mesh: nodes and rule per axis plus refinement level."""

    nodes: tuple
    rules: tuple
    level: int = 1

    def __post_init__(self):
        if any(n < 4 for n in self.nodes):
            raise ResolutionError("MeshSpec requires >= 4 nodes per axis")

    @property
    def total_nodes(self) -> int:
        return int(np.prod(self.nodes))


def default_axis_rules(chart) -> tuple:
    hints = getattr(chart, "quad_hints", None)
    if hints is not None:
        return tuple(hints)
    return tuple(
        AxisRule("trapezoid" if per else "gauss") for per in chart.periodic
    )


def mesh_for_chart(chart, level: int) -> MeshSpec:
    """Build the MeshSpec for a chart at a refinement level (1..7)."""
    if not (1 <= level <= 7):
        raise ResolutionError("refinement level must be in 1..7")
    rules = default_axis_rules(chart)
    return MeshSpec(
        nodes=tuple(r.nodes_at(level) for r in rules),
        rules=tuple(r.rule for r in rules),
        level=level,
    )


def _mesh_points(chart, mesh: MeshSpec):
    axes = []
    for (lo, hi), rule, n in zip(chart.bounds, mesh.rules, mesh.nodes):
        axes.append(_axis_nodes(lo, hi, rule, n))
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    w = np.ones(pts.shape[0])
    for g in wgrids:
        w *= g.ravel()
    return pts, w


def _call_node(fn, pt):
    try:
        return fn(pt)
    except Exception as exc:  # noqa: BLE001 - annotate and re-raise
        raise type(exc)(f"{exc} (at node {tuple(float(v) for v in pt)})") from exc


def _evaluate(fn, pts: np.ndarray, workers: int) -> np.ndarray:
    vals = np.empty(pts.shape[0])
    if workers <= 1:
        for i in range(pts.shape[0]):
            vals[i] = _call_node(fn, pts[i])
        return vals
    # Threads only schedule evaluation; values land at fixed indices, so the
    # reduction order (and hence the bits of the result) never changes.
    chunk = max(1, pts.shape[0] // (workers * 8))
    idx = list(range(0, pts.shape[0], chunk))

    def run(start):
        stop = min(start + chunk, pts.shape[0])
        return start, [_call_node(fn, pts[i]) for i in range(start, stop)]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for start, out in pool.map(run, idx):
            vals[start : start + len(out)] = out
    return vals


def integrate_chart(fn, chart, mesh: MeshSpec, workers: int = 1) -> float:
    """Integrate a scalar density (volume factor included) over a chart box.

    Evaluator failures are re-raised with the offending node coordinates.
    """
    pts, w = _mesh_points(chart, mesh)
    vals = _evaluate(fn, pts, workers)
    return pairwise_sum(vals * w)


def integrate_fibers(base_chart, fiber_chart, fn, base_mesh: MeshSpec,
                     fiber_mesh: MeshSpec, workers: int = 1) -> float:
    """Iterated product quadrature for trivial fibrations.

    fn(xb, xf) is a density on base x fiber; the result matches
    integrate_chart over the product chart to quadrature precision.
    """
    bp, bw = _mesh_points(base_chart, base_mesh)
    fp, fw = _mesh_points(fiber_chart, fiber_mesh)

    def fiber_integral(xb):
        vals = np.array([fn(xb, fp[i]) for i in range(fp.shape[0])])
        return pairwise_sum(vals * fw)

    vals = _evaluate(fiber_integral, bp, workers)
    return pairwise_sum(vals * bw)


@dataclass
class ConvergenceTable:
    """Rows of (level, nodes, value, successive diff, estimated order)."""

    rows: list = field(default_factory=list)

    def add(self, level: int, nodes: int, value: float):
        if self.rows and level <= self.rows[-1][0]:
            raise ResolutionError("levels must be strictly increasing")
        diff = order = None
        if self.rows:
            diff = abs(value - self.rows[-1][2])
            prev_diff = self.rows[-1][3]
            if prev_diff not in (None, 0.0) and diff > 0.0:
                order = math.log2(prev_diff / diff)
        self.rows.append((level, nodes, value, diff, order))

    @property
    def value(self) -> float:
        return self.rows[-1][2]

    def to_csv(self) -> str:
        lines = ["level,nodes,value,diff,order"]
        for level, nodes, value, diff, order in self.rows:
            d = "" if diff is None else repr(diff)
            o = "" if order is None else repr(order)
            lines.append(f"{level},{nodes},{value!r},{d},{o}")
        return "\n".join(lines) + "\n"

    def to_rows(self) -> list:
        return [
            {"level": lv, "nodes": nd, "value": v, "diff": d, "order": o}
            for lv, nd, v, d, o in self.rows
        ]


def refine_until(evaluate, tol: float, max_levels: int = 5, start_level: int = 1,
                 nodes_of=None):
    """Refine until the successive difference drops below tol.

    evaluate(level) -> value.  Returns (value, table, converged).  On budget
    exhaustion the last value is returned with converged=False.
    """
    if max_levels > 7:
        raise ResolutionError("max_levels capped at 7")
    table = ConvergenceTable()
    converged = False
    value = None
    for level in range(start_level, start_level + max_levels):
        if level > 7:
            break
        value = evaluate(level)
        table.add(level, nodes_of(level) if nodes_of else 0, value)
        diff = table.rows[-1][3]
        if diff is not None and diff < tol:
            converged = True
            break
    return value, table, converged


def geometric_schedule(r0: float, count: int = 6, ratio: float = 0.5):
    """r_i = r0 * ratio^i, the default sample schedule for radial limits."""
    return [r0 * ratio**i for i in range(count)]


def r_limit_extrapolate(samples, degree: int = 3):
    """Polynomial extrapolation of (r_i, v_i) samples to r = 0.

    Fits sum a_m r^m by least squares on the scaled variable r/r_max and
    returns (value_at_zero, condition_warning).  Serves r -> infinity limits
    via the substitution u = 1/r on the caller's side.
    """
    rs = np.asarray([s[0] for s in samples], dtype=float)
    vs = np.asarray([s[1] for s in samples], dtype=float)
    if rs.size < degree + 2:
        raise ResolutionError("need at least degree+2 samples for extrapolation")
    ratios = rs[1:] / rs[:-1]
    if np.any(ratios <= 0.29) or np.any(ratios >= 0.71):
        raise ResolutionError("sample schedule must be geometric with ratio in [0.3, 0.7]")
    x = rs / rs.max()
    V = np.vander(x, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, vs, rcond=None)
    cond = np.linalg.cond(V)
    return float(coef[0]), bool(cond > 1e8)
