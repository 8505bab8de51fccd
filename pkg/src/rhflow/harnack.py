"""Harnack inequalities: space-time path energies and pointwise floors.

Integrating a gradient estimate |grad f|^2 - A1 f_t <= A2 + A3/t along a
space-time path from (x1, t1) to (x2, t2) yields the lower bound

    u(x2, t2) >= u(x1, t1) * (t2/t1)^(-A3/A1)
                           * exp(-A1 Gamma / 4 - (A2/A1)(t2 - t1))

where Gamma = inf over paths of the integrated squared speed
int |dgamma/dt|^2_{g(t)} dt.  `gamma_inf` computes Gamma on the lattice by
dynamic programming over time layers; the discrete infimum is taken over a
restricted move set, so it can only overestimate the continuum value, which
lowers the floor: the verified inequality is conservative, never optimistic.

Two floor recipes are wired in:
  compact   A1 = 1, A2 = sqrt(2) k n, A3 = n/2 + sqrt(2) n C alpha0, valid
            when the Ricci gate of the global estimate holds on the whole run;
  complete  A1 = beta, A2 = C' b^2 max(k1,k2) + n b^2 k1/(4(b-1)),
            A3 = C' b^2, from the rho-free form of the local estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .estimates import GateEmptyError, HypothesisConstants, extract_constants
from .flow import Trajectory

R_MAX_DEFAULT = 2
SUBSTEPS_FLOOR = 32


def _node_tuple(grid, x) -> tuple:
    x = tuple(int(v) for v in np.atleast_1d(x))
    if len(x) != grid.dim:
        raise ValueError(f"node {x} does not match grid dimension {grid.dim}")
    return tuple(v % n for v, n in zip(x, grid.n_points))


def _floor_snapshot_index(times: np.ndarray, s: float) -> int:
    idx = int(np.searchsorted(times, s + 1e-12 * (1.0 + abs(s)), side="right")) - 1
    return max(idx, 0)


def _cell_distance(grid, x1, x2) -> int:
    return max(
        abs(grid.wrap_delta(a, b, ax)) for ax, (a, b) in enumerate(zip(x1, x2))
    )


def default_substeps(grid, x1, x2, r_max: int = R_MAX_DEFAULT) -> int:
    """Layer count that keeps per-layer moves within r_max cells with slack."""
    d = _cell_distance(grid, x1, x2)
    return max(SUBSTEPS_FLOOR, int(np.ceil(4.0 * d / r_max)))


def _segment_energy(grid, g, x_from, x_to, ds: float) -> float:
    delta = np.array(
        [grid.wrap_delta(a, b, ax) * grid.h[ax]
         for ax, (a, b) in enumerate(zip(x_from, x_to))]
    )
    gbar = 0.5 * (g[x_from] + g[x_to])
    return float(delta @ gbar @ delta) / ds


def path_energy(traj: Trajectory, nodes, t1: float, t2: float) -> float:
    """Energy of an explicit space-time polyline visiting `nodes` at uniform
    times from t1 to t2, metric frozen per segment at the floor snapshot."""
    grid = traj.grid
    nodes = [_node_tuple(grid, x) for x in nodes]
    if len(nodes) < 2:
        raise ValueError("a path needs at least two nodes")
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    K = len(nodes) - 1
    ds = (t2 - t1) / K
    times = traj.times
    total = 0.0
    for j in range(K):
        g = traj.snapshots[_floor_snapshot_index(times, t1 + j * ds)].g
        total += _segment_energy(grid, g, nodes[j], nodes[j + 1], ds)
    return total


def gamma_inf(
    traj: Trajectory,
    x1,
    x2,
    t1: float,
    t2: float,
    substeps: int | None = None,
    r_max: int = R_MAX_DEFAULT,
) -> float:
    """Infimal space-time path energy from (x1, t1) to (x2, t2).

    Dynamic programming over `substeps` uniform time layers; each layer
    allows moves of up to r_max cells per axis, costed with the
    endpoint-averaged metric of the floor snapshot at the layer's start
    time.  On a flat 1d torus the optimum distributes the d-cell offset as
    evenly as possible, giving energy (d^2 + r (K - r)) h^2 / (t2 - t1)
    with r = d mod K: exactly d^2 h^2 / dt whenever K divides d.  The value
    never falls below the continuum infimum.
    """
    grid = traj.grid
    x1 = _node_tuple(grid, x1)
    x2 = _node_tuple(grid, x2)
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    times = traj.times
    if t1 < times[0] - 1e-12 or t2 > times[-1] + 1e-12:
        raise ValueError(
            f"path times [{t1:g}, {t2:g}] outside stored range "
            f"[{times[0]:g}, {times[-1]:g}]"
        )
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    if substeps is None:
        substeps = default_substeps(grid, x1, x2, r_max)
    K = int(substeps)
    if K < 1:
        raise ValueError("substeps must be at least 1")
    if _cell_distance(grid, x1, x2) > K * r_max:
        raise ValueError("target unreachable: cell distance exceeds K * r_max")
    ds = (t2 - t1) / K
    axes = tuple(range(grid.dim))
    offsets = [
        off
        for off in product(range(-r_max, r_max + 1), repeat=grid.dim)
    ]
    hvec = np.asarray(grid.h)

    cost = np.full(grid.shape, np.inf)
    cost[x1] = 0.0
    for k in range(K):
        g = traj.snapshots[_floor_snapshot_index(times, t1 + k * ds)].g
        best = np.full(grid.shape, np.inf)
        for off in offsets:
            delta = hvec * np.asarray(off, dtype=float)
            if not any(off):
                edge = 0.0
            else:
                g_to = np.roll(g, shift=tuple(-o for o in off), axis=axes)
                gbar = 0.5 * (g + g_to)
                edge = np.einsum("...ij,i,j->...", gbar, delta, delta) / ds
            cand = np.roll(cost + edge, shift=off, axis=axes)
            np.minimum(best, cand, out=best)
        cost = best
    return float(cost[x2])


def harnack_floor(
    u1: float,
    t1: float,
    t2: float,
    gamma: float,
    a1: float,
    a2: float,
    a3: float,
) -> float:
    """Pointwise lower bound for u(x2, t2) implied by the integrated
    gradient estimate with constants (a1, a2, a3)."""
    if not 0 < t1 < t2:
        raise ValueError("need 0 < t1 < t2")
    if a1 <= 0:
        raise ValueError("a1 must be positive")
    if u1 <= 0:
        raise ValueError("u1 must be positive")
    return (
        u1
        * (t2 / t1) ** (-a3 / a1)
        * np.exp(-a1 * gamma / 4.0 - (a2 / a1) * (t2 - t1))
    )


@dataclass
class HarnackReport:
    """Per-pair verification of a Harnack floor along a trajectory."""

    mode: str
    beta: float
    pairs: list
    tol_num: float
    c_tol: float
    scale: float
    constants: dict
    notes: dict = field(default_factory=dict)

    @property
    def min_margin(self) -> float:
        return float(min(p["margin_log"] for p in self.pairs))

    @property
    def ok(self) -> bool:
        return bool(self.pairs) and bool(self.min_margin >= -self.tol_num)

    def rows(self) -> list[dict]:
        return [dict(p) for p in self.pairs]

    def summary(self) -> dict:
        return {
            "theorem": "harnack",
            "mode": self.mode,
            "beta": self.beta,
            "ok": self.ok,
            "n_pairs": len(self.pairs),
            "min_margin": self.min_margin,
            "tol_num": self.tol_num,
            "c_tol": self.c_tol,
            "scale": self.scale,
            "constants": self.constants,
            "notes": self.notes,
        }


def check_harnack(
    traj: Trajectory,
    pairs,
    mode: str = "compact",
    beta: float = 2.0,
    cprime: float | None = None,
    c_tol: float = 10.0,
    constants: HypothesisConstants | None = None,
    substeps: int | None = None,
    r_max: int = R_MAX_DEFAULT,
) -> HarnackReport:
    """Check u(x2, t2) >= floor for every pair ((x1, t1), (x2, t2)).

    compact mode gates on nonnegative Ricci curvature over the whole run
    and uses the global-estimate constants; complete mode needs beta > 1
    and a C' (fit one with `estimates.fit_cprime(..., shape="harnack")`).
    Margins are compared in log domain.  Each pair's time must coincide
    with a stored snapshot.
    """
    if mode not in ("compact", "complete"):
        raise ValueError("mode must be 'compact' or 'complete'")
    grid = traj.grid
    if constants is None:
        constants = extract_constants(traj)
    n = grid.dim
    alpha0 = traj.schedule.alpha0
    if mode == "compact":
        if not constants.ric_nonneg:
            raise GateEmptyError(
                "compact Harnack gate requires nonnegative Ricci curvature "
                f"on the whole run (k1 = {constants.k1:g})"
            )
        a1 = 1.0
        a2 = np.sqrt(2.0) * constants.k2 * n
        a3 = n / 2.0 + np.sqrt(2.0) * n * constants.c_phi * alpha0
    else:
        if beta <= 1:
            raise ValueError("complete mode needs beta > 1")
        if cprime is None or cprime <= 0:
            raise ValueError("complete mode needs a positive C'")
        b2 = beta * beta
        kbar = max(constants.k1, constants.k2)
        a1 = beta
        a2 = cprime * b2 * kbar + n * b2 * constants.k1 / (4.0 * (beta - 1.0))
        a3 = cprime * b2

    results = []
    lhs_abs, rhs_abs = [0.0], [0.0]
    for pair in pairs:
        x1, t1, x2, t2 = pair
        x1 = _node_tuple(grid, x1)
        x2 = _node_tuple(grid, x2)
        s1 = traj.snapshots[traj.snapshot_at(t1)]
        s2 = traj.snapshots[traj.snapshot_at(t2)]
        u1 = float(s1.u[x1])
        u2 = float(s2.u[x2])
        gamma = gamma_inf(traj, x1, x2, s1.t, s2.t, substeps=substeps, r_max=r_max)
        floor = harnack_floor(u1, s1.t, s2.t, gamma, a1, a2, a3)
        lhs = np.log(u2) - np.log(u1)
        rhs = np.log(floor) - np.log(u1)
        lhs_abs.append(abs(lhs))
        rhs_abs.append(abs(rhs))
        results.append(
            {
                "x1": x1,
                "t1": float(s1.t),
                "x2": x2,
                "t2": float(s2.t),
                "u1": u1,
                "u2": u2,
                "gamma": gamma,
                "floor": floor,
                "margin_log": float(lhs - rhs),
            }
        )
    if not results:
        raise ValueError("no pairs supplied")
    scale = float(max(max(lhs_abs), max(rhs_abs)))
    tol = float(c_tol * (max(grid.h) ** 2 + traj.dt) * scale)
    for p in results:
        p["ok"] = bool(p["margin_log"] >= -tol)
    return HarnackReport(
        mode=mode,
        beta=beta if mode == "complete" else 1.0,
        pairs=results,
        tol_num=tol,
        c_tol=c_tol,
        scale=scale,
        constants=constants.as_dict(),
        notes={
            "a1": a1,
            "a2": a2,
            "a3": a3,
            "cprime": cprime,
            "r_max": r_max,
            "substeps": substeps,
            "gamma_conservative": "discrete path energy >= continuum infimum; "
            "floors are never optimistic",
        },
    )
