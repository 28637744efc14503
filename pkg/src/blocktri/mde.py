"""Self-consistent equation solvers for the limiting singular value law.

The bulk value `m_c` solves ``1/m = -w(1 + m) + |z|^2 (1 + m)^{-1}`` in the
upper half plane. The n-site chain couples neighbors through the three-site
average with zero boundary values; its solution bends near the ends and
relaxes to the bulk value in the middle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import AtomLaw
from .model import sample_periodic
from .spectra import empirical_stieltjes, singular_values

DAMPING_FLOOR = 2.0**-10


class MdeConvergenceError(RuntimeError):
    pass


def _cubic_coeffs(w: complex, z: complex):
    # clearing denominators in the defining equation gives
    # w m^3 + 2w m^2 + (w + 1 - |z|^2) m + 1 = 0
    az2 = abs(z) ** 2
    return w, 2 * w, w + 1 - az2, 1.0


def _defining_residual(m, w: complex, z: complex):
    az2 = abs(z) ** 2
    return np.abs(1.0 / m + w * (1.0 + m) - az2 / (1.0 + m))


def _newton_root(m: complex, w: complex, z: complex, steps: int = 80) -> complex:
    c3, c2, c1, c0 = _cubic_coeffs(w, z)
    for _ in range(steps):
        f = ((c3 * m + c2) * m + c1) * m + c0
        fp = (3 * c3 * m + 2 * c2) * m + c1
        if fp == 0:
            break
        step = f / fp
        m = m - step
        if abs(step) <= 1e-16 * max(1.0, abs(m)):
            break
    return m


def solve_mc(w: complex, z: complex, tol: float = 1e-12) -> complex:
    """Upper-half-plane solution of the bulk self-consistency equation.

    Tracked from the large-|w| asymptote -1/w by continuation in the
    imaginary part, so the admissible root is followed continuously even
    when the cubic has several roots near the spectral edge.
    """
    w = complex(w)
    z = complex(z)
    if w.imag <= 0:
        raise ValueError("spectral parameter must lie in the upper half plane")
    eta_start = max(8.0, 2.0 * abs(w), 2.0 * abs(z) ** 2)
    m = -1.0 / complex(w.real, eta_start)
    for eta in np.geomspace(eta_start, w.imag, 60):
        m = _newton_root(m, complex(w.real, eta), z)
    m = _newton_root(m, w, z)
    res = float(_defining_residual(m, w, z))
    if m.imag <= 0 or not np.isfinite(res) or res > tol:
        raise MdeConvergenceError(f"no admissible root at w={w}, z={z} (residual {res:.3e})")
    return m


@dataclass(frozen=True)
class MdeChain:
    """Converged (or best-effort) site values of the boundary chain."""

    n: int
    w: complex
    z: complex
    m: np.ndarray
    residual: float
    converged: bool


def _three_site_average(m: np.ndarray) -> np.ndarray:
    padded = np.concatenate([[0.0 + 0.0j], m, [0.0 + 0.0j]])
    return (padded[:-2] + padded[1:-1] + padded[2:]) / 3.0


def _chain_residual(m: np.ndarray, w: complex, z: complex) -> float:
    avg = _three_site_average(m)
    az2 = abs(z) ** 2
    return float(np.max(np.abs(1.0 / m + w * (1.0 + avg) - az2 / (1.0 + avg))))


def solve_chain(n: int, w: complex, z: complex, tol: float = 1e-10, max_iter: int = 100_000) -> MdeChain:
    """Damped fixed-point solve of the n-site chain with zero boundary.

    Starts from the bulk value everywhere with damping 1/2; the damping is
    halved whenever a step loses the positive imaginary part or increases
    the residual, and the solve aborts below the damping floor.
    """
    w = complex(w)
    z = complex(z)
    if w.imag <= 0:
        raise ValueError("spectral parameter must lie in the upper half plane")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    az2 = abs(z) ** 2
    m = np.full(n, solve_mc(w, z), dtype=np.complex128)
    damping = 0.5
    residual = _chain_residual(m, w, z)
    for _ in range(max_iter):
        if residual <= tol:
            return MdeChain(n, w, z, m, residual, True)
        avg = _three_site_average(m)
        target = 1.0 / (-w * (1.0 + avg) + az2 / (1.0 + avg))
        candidate = (1.0 - damping) * m + damping * target
        cand_residual = _chain_residual(candidate, w, z) if np.all(candidate.imag > 0) else np.inf
        if not np.isfinite(cand_residual) or cand_residual > residual:
            damping /= 2.0
            if damping < DAMPING_FLOOR:
                raise MdeConvergenceError("damping floor reached without progress")
            continue
        m = candidate
        residual = cand_residual
    return MdeChain(n, w, z, m, residual, False)


def chain_imag_bound(z: complex, eta: float) -> float:
    """Uniform bound on |Im m_i| for the chain at purely imaginary w = i eta."""
    return max(2.0 * abs(complex(z)), np.sqrt(6.0)) / np.sqrt(eta)


@dataclass(frozen=True)
class SelfEnergyProfile:
    """Variance profile of the plain ensemble, reduced to block structure.

    Every structurally nonzero entry has variance 1/(3 ell); a block row in
    the interior touches three blocks, the first and last rows only two.
    """

    n: int
    ell: int

    @property
    def size(self) -> int:
        return self.n * self.ell

    def block_row_sums(self) -> np.ndarray:
        sums = np.full(self.n, 1.0)
        sums[0] = 2.0 / 3.0
        if self.n > 1:
            sums[-1] = 2.0 / 3.0
        else:
            sums[0] = 1.0 / 3.0
        return sums


def self_energy_apply(profile: SelfEnergyProfile, diag_values) -> np.ndarray:
    """Row sums of the variance profile against a diagonal: a sliding block average."""
    v = np.asarray(diag_values, dtype=np.complex128).ravel()
    if v.size != profile.size:
        raise ValueError(f"expected {profile.size} diagonal values, got {v.size}")
    block_means = v.reshape(profile.n, profile.ell).mean(axis=1)
    padded = np.concatenate([[0.0 + 0.0j], block_means, [0.0 + 0.0j]])
    out_blocks = (padded[:-2] + padded[1:-1] + padded[2:]) / 3.0
    return np.repeat(out_blocks, profile.ell)


@dataclass(frozen=True)
class StieltjesDeviationTable:
    """Deviations |trial-averaged empirical transform - bulk solution| per (ell, xi)."""

    ell_values: tuple
    xi_values: tuple
    deviations: np.ndarray
    bulk_values: tuple

    def decreasing_in_ell(self, xi_index: int = 0) -> bool:
        col = self.deviations[:, xi_index]
        return bool(np.all(np.diff(col) < 0))


def mde_vs_empirical(
    n: int,
    ell_values,
    z: complex,
    xi_grid,
    trials: int,
    *,
    law: AtomLaw | None = None,
    master_seed: int = 0,
) -> StieltjesDeviationTable:
    """Trial-averaged empirical transform of the periodic ensemble against the bulk solution."""
    if law is None:
        law = AtomLaw("complex-gaussian")
    xi_values = tuple(complex(x) for x in xi_grid)
    ells = tuple(int(e) for e in ell_values)
    bulk = tuple(solve_mc(xi, z) for xi in xi_values)
    table = np.empty((len(ells), len(xi_values)))
    for i, ell in enumerate(ells):
        sums = np.zeros(len(xi_values), dtype=np.complex128)
        for t in range(trials):
            ens = sample_periodic(n, ell, law, master_seed, trial=i * trials + t)
            measure = singular_values(ens, z)
            sums += np.array([empirical_stieltjes(measure, xi) for xi in xi_values])
        averaged = sums / trials
        table[i] = np.abs(averaged - np.array(bulk))
    return StieltjesDeviationTable(ells, xi_values, table, bulk)


def density_from_stieltjes(m_function, e_grid, eta: float) -> np.ndarray:
    """Stieltjes inversion at height eta: (1/pi) Im m(E + i eta), clipped at 0."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    vals = np.array([m_function(complex(e, eta)) for e in np.asarray(e_grid, dtype=np.float64)])
    return np.maximum(vals.imag / np.pi, 0.0)
