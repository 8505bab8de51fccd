"""Space-time cutoff profile with analytic derivatives.

The profile is a product Psi(r, t) = eta(r) * zeta(t):

    zeta(t) = (t / tau)^2 on [0, tau], then 1
    eta(r)  = 1 on [0, rho/2],
              exp(1 - 1/(1 - s^2)) with s = (2r - rho)/rho on (rho/2, rho),
              0 from rho on.

It vanishes at t = 0 and outside the ball of radius rho, equals 1 on the
half ball for t >= tau, and its derivatives obey the bounds the local
estimate's integration-by-parts argument needs:

    |d/dt Psi| <= 2 Psi^(1/2) / tau             (the constant 2 is sharp)
    |d/dr Psi| <= C_a Psi^a / rho               (finite for every a in (0,1))
    |d2/dr2 Psi| <= C / rho^2

All derivatives are exact formulas, not differences; `cutoff_verify`
confirms the bounds on a dense lattice and fits the constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CutoffFunction:
    """Radial space-time cutoff, radius rho, temporal ramp length tau."""

    rho: float
    tau: float

    def __post_init__(self):
        if self.rho <= 0 or self.tau <= 0:
            raise ValueError("cutoff needs rho > 0 and tau > 0")

    # -- temporal factor -------------------------------------------------

    def zeta(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.clip(t / self.tau, 0.0, None) ** 2
        return np.where(t >= self.tau, 1.0, out)

    def zeta_dt(self, t) -> np.ndarray:
        """One-sided (left) value is used at the kink t = tau, where the
        time bound is attained."""
        t = np.asarray(t, dtype=float)
        ramp = 2.0 * np.clip(t, 0.0, None) / self.tau**2
        return np.where((t > self.tau) | (t < 0.0), 0.0, ramp)

    # -- radial factor ---------------------------------------------------

    def _s(self, r) -> np.ndarray:
        return (2.0 * np.asarray(r, dtype=float) - self.rho) / self.rho

    def eta(self, r) -> np.ndarray:
        s = self._s(r)
        inner = s <= 0.0
        outer = s >= 1.0
        mid = ~inner & ~outer
        s_safe = np.where(mid, s, 0.5)
        w = 1.0 - 1.0 / (1.0 - s_safe**2)
        out = np.where(mid, np.exp(w), 0.0)
        return np.where(inner, 1.0, out)

    def eta_dr(self, r) -> np.ndarray:
        s = self._s(r)
        mid = (s > 0.0) & (s < 1.0)
        s_safe = np.where(mid, s, 0.5)
        one = 1.0 - s_safe**2
        w = 1.0 - 1.0 / one
        wp = -2.0 * s_safe / one**2
        val = np.exp(w) * wp * (2.0 / self.rho)
        return np.where(mid, val, 0.0)

    def eta_drr(self, r) -> np.ndarray:
        s = self._s(r)
        mid = (s > 0.0) & (s < 1.0)
        s_safe = np.where(mid, s, 0.5)
        one = 1.0 - s_safe**2
        w = 1.0 - 1.0 / one
        wp = -2.0 * s_safe / one**2
        wpp = -2.0 * (1.0 + 3.0 * s_safe**2) / one**3
        val = np.exp(w) * (wp * wp + wpp) * (4.0 / self.rho**2)
        return np.where(mid, val, 0.0)

    # -- product ----------------------------------------------------------

    def value(self, r, t) -> np.ndarray:
        return self.eta(r) * self.zeta(t)

    def dt(self, r, t) -> np.ndarray:
        return self.eta(r) * self.zeta_dt(t)

    def dr(self, r, t) -> np.ndarray:
        return self.eta_dr(r) * self.zeta(t)

    def drr(self, r, t) -> np.ndarray:
        return self.eta_drr(r) * self.zeta(t)


def cutoff_build(rho: float, tau: float) -> CutoffFunction:
    return CutoffFunction(rho=rho, tau=tau)


def cutoff_verify(
    rho: float,
    tau: float,
    n_r: int = 512,
    n_t: int = 512,
    exponents=(0.25, 0.5, 0.75),
    r_max_factor: float = 1.25,
    t_max_factor: float = 2.0,
) -> dict:
    """Verify the cutoff's structural properties on a dense (r, t) lattice.

    Returns fitted constants (time bound, first/second radial bounds, and
    C_a for each requested exponent a) plus booleans for the support,
    range, and plateau requirements.  Fits use only points where Psi > 0;
    the profile decays faster than any power, so every C_a is finite.
    """
    cf = cutoff_build(rho, tau)
    r = np.linspace(0.0, r_max_factor * rho, n_r)
    t = np.linspace(0.0, t_max_factor * tau, n_t)
    R, T = np.meshgrid(r, t, indexing="ij")
    psi = cf.value(R, T)
    dpsi_dt = cf.dt(R, T)
    dpsi_dr = cf.dr(R, T)
    dpsi_drr = cf.drr(R, T)

    inner = R <= 0.5 * rho
    late = T >= tau
    outside = R >= rho
    pos = psi > 0.0

    report = {
        "rho": rho,
        "tau": tau,
        "n_r": n_r,
        "n_t": n_t,
        "range_ok": bool(np.all((psi >= 0.0) & (psi <= 1.0))),
        "plateau_ok": bool(np.all(psi[inner & late] == 1.0)),
        "support_ok": bool(np.all(psi[outside] == 0.0))
        and bool(np.all(cf.value(r, 0.0) == 0.0)),
        "dr_zero_inner_ok": bool(np.all(dpsi_dr[inner] == 0.0)),
        "monotone_r_ok": bool(np.all(dpsi_dr <= 0.0)),
    }

    # time bound: |dPsi/dt| * tau <= 2 sqrt(Psi), sharp on the inner ramp
    cbar = np.max(np.abs(dpsi_dt[pos]) * tau / np.sqrt(psi[pos]))
    report["cbar_time"] = float(cbar)
    report["cbar_time_ok"] = bool(cbar <= 2.0 + 1e-9)

    report["c_r1"] = float(np.max(np.abs(dpsi_dr)) * rho)
    report["c_r2"] = float(np.max(np.abs(dpsi_drr)) * rho**2)

    c_a = {}
    for a in exponents:
        vals = np.abs(dpsi_dr[pos]) * rho / psi[pos] ** a
        c_a[float(a)] = float(np.max(vals))
    report["c_a"] = c_a
    report["c_a_finite_ok"] = bool(all(np.isfinite(v) for v in c_a.values()))

    report["ok"] = bool(
        report["range_ok"]
        and report["plateau_ok"]
        and report["support_ok"]
        and report["dr_zero_inner_ok"]
        and report["cbar_time_ok"]
        and report["c_a_finite_ok"]
        and np.isfinite(report["c_r1"])
        and np.isfinite(report["c_r2"])
    )
    return report
