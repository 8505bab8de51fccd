"""Discrete Riemannian operators on periodic grids.

Metrics are node fields ``g`` of shape ``grid.shape + (d, d)`` stored exactly
symmetric.  All derivatives are centered second-order periodic stencils, so
each operator below is a second-order-consistent discretization of its
continuum counterpart and commutes exactly with grid translations.

Conventions
-----------
Christoffel symbols   G^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
Ricci (contraction)   R_ij = d_k G^k_ij - d_i G^k_kj + G^k_kl G^l_ij - G^k_il G^l_kj
Laplace-Beltrami      Lap s = (det g)^{-1/2} d_i( (det g)^{1/2} g^{ij} d_j s )

The Laplacian is discretized in divergence form with face-averaged
coefficients, which makes it exactly self-adjoint in the inner product
weighted by sqrt(det g) and exactly mass conserving (both to roundoff).
"""

from __future__ import annotations

import numpy as np

from .grid import Grid

# Relative threshold for the positive-definiteness check: smallest eigenvalue
# must exceed PD_RTOL * trace(g) at every node.
PD_RTOL = 1e-12


class MetricDegenerateError(ValueError):
    """Raised when a metric fails the positive-definiteness check."""

    def __init__(self, message: str, node=None, eigenvalue=None):
        super().__init__(message)
        self.node = node
        self.eigenvalue = eigenvalue


def min_metric_eigenvalue(g: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of the metric at every node.

    Uses closed forms for 1x1 and 2x2 symmetric matrices (hot path in the
    flow loop); anything larger falls back to batched eigvalsh.
    """
    d = g.shape[-1]
    if d == 1:
        return g[..., 0, 0]
    if d == 2:
        tr = g[..., 0, 0] + g[..., 1, 1]
        det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
        disc = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
        return 0.5 * (tr - disc)
    return np.linalg.eigvalsh(g)[..., 0]


def check_metric(g: np.ndarray) -> None:
    """Validate symmetry and positive definiteness; raise if degenerate."""
    if not np.array_equal(g, np.swapaxes(g, -1, -2)):
        raise ValueError("metric is not stored symmetric")
    lam = min_metric_eigenvalue(g)
    tr = np.trace(g, axis1=-2, axis2=-1)
    bad = lam <= PD_RTOL * tr
    if np.any(bad):
        node = np.unravel_index(int(np.argmax(bad)), bad.shape)
        raise MetricDegenerateError(
            f"metric degenerate at node {node}: min eigenvalue "
            f"{lam[node]:g} <= {PD_RTOL:g} * trace {tr[node]:g}",
            node=node,
            eigenvalue=float(lam[node]),
        )


def metric_inverse(g: np.ndarray) -> np.ndarray:
    check_metric(g)
    return np.linalg.inv(g)


def sqrt_det(g: np.ndarray) -> np.ndarray:
    return np.sqrt(np.linalg.det(g))


def christoffel(grid: Grid, g: np.ndarray) -> np.ndarray:
    """Christoffel symbols, shape ``grid.shape + (d, d, d)`` indexed [k, i, j].

    Symmetric in (i, j) exactly because g is stored symmetric.
    """
    ginv = metric_inverse(g)
    # dg[..., a, b, c] = d_a g_bc
    dg = np.stack([grid.d1(g, ax) for ax in range(grid.dim)], axis=-3)
    term = (
        np.einsum("...kl,...ijl->...kij", ginv, dg)
        + np.einsum("...kl,...jil->...kij", ginv, dg)
        - np.einsum("...kl,...lij->...kij", ginv, dg)
    )
    return 0.5 * term


def ricci(grid: Grid, g: np.ndarray) -> np.ndarray:
    """Ricci tensor from the contracted curvature of the Christoffel field.

    The raw contraction is symmetrized; centered stencils leave an
    antisymmetric O(h^2) remainder that the continuum tensor does not have.
    """
    gam = christoffel(grid, g)
    # dgam[..., a, k, i, j] = d_a G^k_ij
    dgam = np.stack([grid.d1(gam, ax) for ax in range(grid.dim)], axis=-4)
    term1 = np.einsum("...kkij->...ij", dgam)
    term2 = np.einsum("...ikkj->...ij", dgam)
    tr_gam = np.einsum("...kkl->...l", gam)
    term3 = np.einsum("...l,...lij->...ij", tr_gam, gam)
    term4 = np.einsum("...kil,...lkj->...ij", gam, gam)
    ric = term1 - term2 + term3 - term4
    return 0.5 * (ric + np.swapaxes(ric, -1, -2))


def scalar_curvature(grid: Grid, g: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ij->...", metric_inverse(g), ricci(grid, g))


def laplace_beltrami(grid: Grid, g: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Divergence-form Laplace-Beltrami operator applied to a scalar field.

    Diagonal terms use face-averaged coefficients with forward/backward
    differences; mixed terms use nested centered differences.  Summation by
    parts then gives exact discrete self-adjointness with respect to the
    sqrt(det g)-weighted inner product, and the nodewise integral
    sum(Lap s * sqrt(det g) * h^n) telescopes to zero.
    """
    w = sqrt_det(g)
    ginv = metric_inverse(g)
    acc = np.zeros_like(s)
    for i in range(grid.dim):
        h_i = grid.h[i]
        for j in range(grid.dim):
            a = w * ginv[..., i, j]
            if i == j:
                face = 0.5 * (a + np.roll(a, -1, axis=i))
                flux = face * (np.roll(s, -1, axis=i) - s)
                acc = acc + (flux - np.roll(flux, 1, axis=i)) / (h_i * h_i)
            else:
                acc = acc + grid.d1(a * grid.d1(s, j), i)
    return acc / w


def gradient_norm_sq(grid: Grid, g: np.ndarray, s: np.ndarray) -> np.ndarray:
    """|grad s|^2 = g^{ij} d_i s d_j s with centered first differences."""
    ds = grid.partial(s)
    return np.einsum("...ij,...i,...j->...", metric_inverse(g), ds, ds)


def hessian(grid: Grid, g: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Covariant Hessian d_i d_j s - G^k_ij d_k s, symmetrized."""
    gam = christoffel(grid, g)
    ds = grid.partial(s)
    hess = np.empty(s.shape + (grid.dim, grid.dim))
    for i in range(grid.dim):
        for j in range(i, grid.dim):
            if i == j:
                hess[..., i, i] = grid.d2(s, i)
            else:
                mixed = 0.5 * (grid.d1(grid.d1(s, i), j) + grid.d1(grid.d1(s, j), i))
                hess[..., i, j] = mixed
                hess[..., j, i] = mixed
    return hess - np.einsum("...kij,...k->...ij", gam, ds)


def grad_phi_outer(grid: Grid, phi: np.ndarray) -> np.ndarray:
    """Pullback-style Gram tensor (dphi (x) dphi)_ij = sum_m d_i phi^m d_j phi^m.

    phi has shape ``grid.shape + (components,)``.  The result is symmetric
    and positive semidefinite by construction.
    """
    # dphi[..., i, m] = d_i phi^m
    dphi = np.stack([grid.d1(phi, ax) for ax in range(grid.dim)], axis=-2)
    return np.einsum("...im,...jm->...ij", dphi, dphi)


def energy_density(grid: Grid, g: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """|grad phi|^2 = g^{ij} (dphi (x) dphi)_ij."""
    return np.einsum("...ij,...ij->...", metric_inverse(g), grad_phi_outer(grid, phi))


def s_tensor(grid: Grid, g: np.ndarray, phi: np.ndarray, alpha: float) -> np.ndarray:
    """Coupled curvature tensor Ric - alpha * (dphi (x) dphi)."""
    return ricci(grid, g) - alpha * grad_phi_outer(grid, phi)


def s_scalar(grid: Grid, g: np.ndarray, phi: np.ndarray, alpha: float) -> np.ndarray:
    """Trace of the coupled curvature tensor: R - alpha |grad phi|^2."""
    return scalar_curvature(grid, g) - alpha * energy_density(grid, g, phi)


def tension_field(grid: Grid, g: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Tension field of a map into flat R^m: componentwise Laplace-Beltrami."""
    return np.stack(
        [laplace_beltrami(grid, g, phi[..., m]) for m in range(phi.shape[-1])], axis=-1
    )


def rough_laplacian_covector(grid: Grid, g: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Connection Laplacian g^{ab} (nabla^2 omega)_{ab i} of a covector field.

    omega has shape ``grid.shape + (d,)``.  Needed for the commutation
    identity between the Laplacian and the gradient.
    """
    gam = christoffel(grid, g)
    # first covariant derivative: T_{b i} = d_b omega_i - G^k_{bi} omega_k
    dom = np.stack([grid.d1(omega, ax) for ax in range(grid.dim)], axis=-2)
    T = dom - np.einsum("...kbi,...k->...bi", gam, omega)
    # second: (nabla T)_{a b i} = d_a T_{bi} - G^k_{ab} T_{ki} - G^k_{ai} T_{bk}
    dT = np.stack([grid.d1(T, ax) for ax in range(grid.dim)], axis=-3)
    nablaT = (
        dT
        - np.einsum("...kab,...ki->...abi", gam, T)
        - np.einsum("...kai,...bk->...abi", gam, T)
    )
    return np.einsum("...ab,...abi->...i", metric_inverse(g), nablaT)


def eig_general(A: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric tensor A relative to the metric g, per node.

    Solves A v = lam g v via the congruence B = g^{-1/2} A g^{-1/2}; returns
    eigenvalues sorted ascending with trailing shape (d,).
    """
    d = g.shape[-1]
    if d == 1:
        return A[..., 0, 0:1] / g[..., 0, 0:1]
    w, V = np.linalg.eigh(g)
    ghalf_inv = np.einsum("...ij,...j,...kj->...ik", V, 1.0 / np.sqrt(w), V)
    B = np.einsum("...ij,...jk,...kl->...il", ghalf_inv, A, ghalf_inv)
    B = 0.5 * (B + np.swapaxes(B, -1, -2))
    return np.linalg.eigvalsh(B)
