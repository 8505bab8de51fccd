"""Time stepping for the coupled metric/map flow and the heat equation.

The metric and map evolve by one of three variants:

``rh_alpha``        dg/dt = -2 Ric + 2 alpha(t) dphi (x) dphi,   dphi/dt = tension(phi)
``warped_product``  dg/dt = -2 Ric + 2 m dphi (x) dphi,          dphi/dt = Lap phi - mu exp(-2 phi)
``static``          frozen metric and map

and a positive scalar u rides along solving du/dt = Lap_g u in the evolving
metric.  One integration substep applies the heat update with the current
metric, then the flow update (first-order operator splitting).  Explicit
Euler is the default; an RK2 midpoint rule is available per step.

Stability is enforced, not assumed: every step requires
``dt <= c_stab * h_min^2 * min_eig(g)`` and refuses to run otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .geometry import MetricDegenerateError, check_metric, min_metric_eigenvalue
from .grid import Grid

C_STAB_DEFAULT = 0.2


class StabilityError(ValueError):
    """Requested dt violates the explicit-step stability bound."""


class BlowUpError(RuntimeError):
    """A field left the admissible set (degenerate metric, non-finite map,
    non-positive heat solution) during a step."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


ALPHA_FORMS = ("constant", "linear_decay", "exp_decay")


@dataclass(frozen=True)
class AlphaSchedule:
    """Non-increasing coupling schedule alpha(t) with floor alpha_bar >= 0."""

    alpha0: float
    alpha_bar: float = 0.0
    form: str = "constant"
    rate: float = 0.0

    def __post_init__(self):
        if self.form not in ALPHA_FORMS:
            raise ValueError(f"unknown schedule form {self.form!r}; use one of {ALPHA_FORMS}")
        if self.alpha_bar < 0:
            raise ValueError("alpha_bar must be >= 0")
        if self.alpha0 < self.alpha_bar:
            raise ValueError("alpha0 must be >= alpha_bar")
        if self.rate < 0:
            raise ValueError("rate must be >= 0")

    def __call__(self, t) -> float | np.ndarray:
        if self.form == "constant":
            return np.broadcast_to(self.alpha0, np.shape(t)).astype(float) if np.ndim(t) else self.alpha0
        if self.form == "linear_decay":
            return np.maximum(self.alpha_bar, self.alpha0 - self.rate * np.asarray(t, dtype=float))
        return self.alpha_bar + (self.alpha0 - self.alpha_bar) * np.exp(
            -self.rate * np.asarray(t, dtype=float)
        )


VARIANT_KINDS = ("rh_alpha", "warped_product", "static")


@dataclass(frozen=True)
class FlowVariant:
    """Which coupled flow to run.  warped_product carries the fiber dimension
    m >= 1 and the fiber Einstein constant mu (and requires a 1-component map)."""

    kind: str = "rh_alpha"
    m: int = 1
    mu: float = 0.0

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise ValueError(f"unknown flow variant {self.kind!r}; use one of {VARIANT_KINDS}")
        if self.kind == "warped_product" and self.m < 1:
            raise ValueError("warped_product fiber dimension m must be >= 1")

    def coupling(self, schedule: AlphaSchedule, t: float) -> float:
        """Coefficient of dphi (x) dphi in the metric equation at time t."""
        if self.kind == "rh_alpha":
            return float(schedule(t))
        if self.kind == "warped_product":
            return float(self.m)
        return 0.0


@dataclass(frozen=True)
class Snapshot:
    """State at one instant: metric g, map phi, heat solution u."""

    t: float
    g: np.ndarray
    phi: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        check_metric(self.g)
        if not np.all(np.isfinite(self.phi)):
            raise BlowUpError("map field has non-finite values", self.t)
        if not np.all(self.u > 0):
            raise BlowUpError("heat solution is not positive everywhere", self.t)


@dataclass
class Trajectory:
    """Uniformly spaced snapshots of one run, plus per-snapshot diagnostics.

    ``dt`` is the spacing between stored snapshots; the integrator substep is
    ``dt / substride`` and is recorded separately.  ``constants`` holds the
    empirical curvature/map bounds per snapshot (see estimates module).
    """

    grid: Grid
    variant: FlowVariant
    schedule: AlphaSchedule
    snapshots: list[Snapshot]
    dt: float
    dt_sub: float
    halt_reason: str | None = None
    constants: list[dict] = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)
    scenario: dict | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def completed(self) -> bool:
        return self.halt_reason is None

    def snapshot_at(self, t: float, rtol: float = 1e-9) -> int:
        """Index of the snapshot at time t (must match one)."""
        times = self.times
        i = int(np.argmin(np.abs(times - t)))
        scale = max(abs(t), self.dt, 1e-300)
        if abs(times[i] - t) > rtol * scale:
            raise ValueError(f"no snapshot at t={t!r}; nearest is t={times[i]!r}")
        return i


def stability_limit(grid: Grid, g: np.ndarray, c_stab: float = C_STAB_DEFAULT) -> float:
    """Largest admissible explicit timestep for the current metric."""
    return c_stab * grid.h_min**2 * float(np.min(min_metric_eigenvalue(g)))


def _require_stable(grid: Grid, g: np.ndarray, dt: float, c_stab: float) -> None:
    limit = stability_limit(grid, g, c_stab)
    if dt > limit:
        raise StabilityError(
            f"dt={dt:g} exceeds stability bound c_stab*h_min^2*min_eig(g)={limit:g}"
        )


def _flow_rhs(grid: Grid, variant: FlowVariant, schedule: AlphaSchedule, t, g, phi):
    """Right-hand sides (dg/dt, dphi/dt) for the metric/map system."""
    coup = variant.coupling(schedule, t)
    ric = geometry.ricci(grid, g)
    outer = geometry.grad_phi_outer(grid, phi)
    dg = -2.0 * ric + (2.0 * coup) * outer
    if variant.kind == "warped_product":
        dphi = geometry.tension_field(grid, g, phi) - variant.mu * np.exp(-2.0 * phi)
    else:
        dphi = geometry.tension_field(grid, g, phi)
    return dg, dphi


def step_flow(
    grid: Grid,
    snap: Snapshot,
    dt: float,
    variant: FlowVariant,
    schedule: AlphaSchedule,
    method: str = "euler",
    c_stab: float = C_STAB_DEFAULT,
) -> Snapshot:
    """Advance metric and map by one step; u is carried along unchanged.

    Raises StabilityError if dt violates the explicit bound and BlowUpError
    (with the failure time) if the stepped state leaves the admissible set.
    """
    if variant.kind == "static":
        return Snapshot(snap.t + dt, snap.g, snap.phi, snap.u)
    if variant.kind == "warped_product" and snap.phi.shape[-1] != 1:
        raise ValueError("warped_product flow requires a single-component map")
    _require_stable(grid, snap.g, dt, c_stab)
    if method == "euler":
        dg, dphi = _flow_rhs(grid, variant, schedule, snap.t, snap.g, snap.phi)
        g_new = snap.g + dt * dg
        phi_new = snap.phi + dt * dphi
    elif method == "rk2":
        dg1, dphi1 = _flow_rhs(grid, variant, schedule, snap.t, snap.g, snap.phi)
        g_mid = snap.g + 0.5 * dt * dg1
        g_mid = 0.5 * (g_mid + np.swapaxes(g_mid, -1, -2))
        phi_mid = snap.phi + 0.5 * dt * dphi1
        dg2, dphi2 = _flow_rhs(grid, variant, schedule, snap.t + 0.5 * dt, g_mid, phi_mid)
        g_new = snap.g + dt * dg2
        phi_new = snap.phi + dt * dphi2
    else:
        raise ValueError(f"unknown method {method!r}; use 'euler' or 'rk2'")
    # keep the stored metric exactly symmetric
    g_new = 0.5 * (g_new + np.swapaxes(g_new, -1, -2))
    t_new = snap.t + dt
    if not np.all(np.isfinite(phi_new)):
        raise BlowUpError("map field became non-finite", t_new)
    try:
        return Snapshot(t_new, g_new, phi_new, snap.u)
    except MetricDegenerateError as exc:
        raise BlowUpError(f"metric degenerate after step: {exc}", t_new) from exc


def step_heat(
    grid: Grid,
    snap: Snapshot,
    dt: float,
    method: str = "euler",
    c_stab: float = C_STAB_DEFAULT,
) -> np.ndarray:
    """One explicit heat step du/dt = Lap_g u with the snapshot's metric.

    Positivity is asserted, never clamped: a non-positive result raises.
    """
    _require_stable(grid, snap.g, dt, c_stab)
    if method == "euler":
        u_new = snap.u + dt * geometry.laplace_beltrami(grid, snap.g, snap.u)
    elif method == "rk2":
        u_mid = snap.u + 0.5 * dt * geometry.laplace_beltrami(grid, snap.g, snap.u)
        u_new = snap.u + dt * geometry.laplace_beltrami(grid, snap.g, u_mid)
    else:
        raise ValueError(f"unknown method {method!r}; use 'euler' or 'rk2'")
    if not np.all(u_new > 0):
        raise BlowUpError("heat solution lost positivity", snap.t + dt)
    return u_new


def snapshot_constants(grid: Grid, snap: Snapshot) -> dict:
    """Empirical hypothesis bounds at one snapshot.

    k1/k2 are the extreme eigenvalues of Ric relative to g over nodes
    (k1 clipped at 0 from below as a lower-bound constant), and tc_phi is
    t times the largest eigenvalue of dphi (x) dphi relative to g.
    """
    lam_ric = geometry.eig_general(geometry.ricci(grid, snap.g), snap.g)
    lam_outer = geometry.eig_general(geometry.grad_phi_outer(grid, snap.phi), snap.g)
    return {
        "t": float(snap.t),
        "ric_min": float(np.min(lam_ric)),
        "ric_max": float(np.max(lam_ric)),
        "k1": float(max(0.0, -np.min(lam_ric))),
        "k2": float(np.max(lam_ric)),
        "tc_phi": float(snap.t * np.max(lam_outer[..., -1])),
    }


def run(
    grid: Grid,
    variant: FlowVariant,
    schedule: AlphaSchedule,
    initial: Snapshot,
    T: float,
    dt_sub: float,
    substride: int,
    method: str = "euler",
    c_stab: float = C_STAB_DEFAULT,
    scenario: dict | None = None,
) -> Trajectory:
    """Integrate from the initial snapshot to time T, recording every
    ``substride`` substeps.

    On blow-up the partial trajectory is returned with ``halt_reason`` set
    and the failure time appended; callers decide whether that is an error.
    A zero-length run (T == t_start) yields the initial snapshot only.
    """
    if substride < 1:
        raise ValueError("substride must be a positive integer")
    span = T - initial.t
    if span < 0:
        raise ValueError("T must be >= the initial snapshot time")
    dt_snap = dt_sub * substride
    n_snaps = int(round(span / dt_snap)) if span > 0 else 0
    if abs(n_snaps * dt_snap - span) > 1e-9 * max(span, dt_snap):
        raise ValueError(
            f"(T - t_start)={span:g} is not an integer multiple of "
            f"dt*substride={dt_snap:g}"
        )
    snaps = [initial]
    constants = [snapshot_constants(grid, initial)]
    alphas = [float(schedule(initial.t))]
    halt = None
    current = initial
    step_index = 0
    try:
        for _ in range(n_snaps):
            for _ in range(substride):
                # exact time bookkeeping: t derived from the step counter
                u_new = step_heat(grid, current, dt_sub, method=method, c_stab=c_stab)
                current = Snapshot(current.t, current.g, current.phi, u_new)
                current = step_flow(
                    grid, current, dt_sub, variant, schedule, method=method, c_stab=c_stab
                )
                step_index += 1
                t_exact = initial.t + step_index * dt_sub
                current = Snapshot(t_exact, current.g, current.phi, current.u)
            snaps.append(current)
            constants.append(snapshot_constants(grid, current))
            alphas.append(float(schedule(current.t)))
    except (BlowUpError, StabilityError) as exc:
        t_fail = getattr(exc, "t", initial.t + (step_index + 1) * dt_sub)
        halt = f"{exc} (halted at t={t_fail:g})"
    return Trajectory(
        grid=grid,
        variant=variant,
        schedule=schedule,
        snapshots=snaps,
        dt=dt_snap,
        dt_sub=dt_sub,
        halt_reason=halt,
        constants=constants,
        alphas=alphas,
        scenario=scenario,
    )
