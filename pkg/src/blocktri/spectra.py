"""Spectral diagnostics: singular value measures, eigenvalue clouds, and the
scalar statistics used to compare them against their large-size limits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import AtomLaw, SeedScheme, sample_atoms
from .model import DEFAULT_DENSE_CAP, to_dense
from .numerics import EIGVALS_CAP, eigvals, lu_logdet, svd_values
from .transfer import logdet_via_transfer


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Equal-weight atoms, sorted ascending."""

    atoms: np.ndarray

    @classmethod
    def from_values(cls, values) -> "EmpiricalMeasure":
        a = np.sort(np.asarray(values, dtype=np.float64).ravel())
        if a.size == 0:
            raise ValueError("empirical measure needs at least one atom")
        return cls(a)

    @property
    def count(self) -> int:
        return int(self.atoms.size)

    def cdf(self, x) -> np.ndarray:
        return np.searchsorted(self.atoms, np.asarray(x, dtype=np.float64), side="right") / self.count


@dataclass(frozen=True)
class EsdSummary:
    eigenvalues: np.ndarray
    fraction_in_unit_disk: float
    radial_cdf_distance: float


def singular_values(ensemble, z: complex, max_dense: int = DEFAULT_DENSE_CAP) -> EmpiricalMeasure:
    """Squared singular values of the shifted dense realization."""
    s = svd_values(to_dense(ensemble, z, max_dense))
    return EmpiricalMeasure.from_values(s**2)


def least_singular_value(ensemble, z: complex, max_dense: int = DEFAULT_DENSE_CAP) -> float:
    s = svd_values(to_dense(ensemble, z, max_dense))
    return float(s[-1])


def rigidity_count(measure: EmpiricalMeasure, threshold: float) -> int:
    """Number of atoms at or below the threshold."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    return int(np.searchsorted(measure.atoms, threshold, side="right"))


def empirical_stieltjes(measure: EmpiricalMeasure, xi: complex) -> complex:
    """Mean of (atom - xi)^{-1}, defined for Im xi > 0."""
    xi = complex(xi)
    if xi.imag <= 0:
        raise ValueError("spectral parameter must lie in the upper half plane")
    return complex(np.mean(1.0 / (measure.atoms - xi)))


def kolmogorov_distance(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Sup-norm distance between the two step CDFs, attained at an atom."""
    pts = np.concatenate([mu.atoms, nu.atoms])
    return float(np.max(np.abs(mu.cdf(pts) - nu.cdf(pts))))


def radial_cdf_distance(eigenvalues) -> float:
    """sup over r in [0, 1] of |radial CDF - r^2|."""
    radii = np.sort(np.abs(np.asarray(eigenvalues)))
    n = radii.size
    inside = radii[radii <= 1.0]
    k = inside.size
    best = abs(k / n - 1.0)
    if k:
        i = np.arange(1, k + 1)
        best = max(
            best,
            float(np.max(np.abs(i / n - inside**2))),
            float(np.max(np.abs((i - 1) / n - inside**2))),
        )
    return best


def esd(ensemble, cap: int = EIGVALS_CAP) -> EsdSummary:
    """Eigenvalues of the unshifted dense realization plus circular-law statistics."""
    dense = to_dense(ensemble, 0.0, max_dense=cap)
    ev = eigvals(dense, cap=cap)
    fraction = float(np.mean(np.abs(ev) <= 1.0))
    return EsdSummary(ev, fraction, radial_cdf_distance(ev))


def ginibre_potential(z: complex) -> float:
    """Log potential of the circular law: (|z|^2 - 1)/2 inside the disk, log|z| outside."""
    r = abs(complex(z))
    if r <= 1.0:
        return (r * r - 1.0) / 2.0
    return float(np.log(r))


def log_potential(model, z_values) -> dict:
    """Per-shift normalized log determinant, evaluated through the transfer recursion."""
    size = model.size
    return {complex(z): logdet_via_transfer(model, z) / size for z in z_values}


def ginibre_logdet_check(
    n: int,
    trials: int,
    *,
    law: AtomLaw | None = None,
    master_seed: int = 0,
) -> float:
    """Mean over trials of (1/n) log|det((3n)^{-1/2} A)| for an i.i.d. square matrix."""
    if law is None:
        law = AtomLaw("complex-gaussian")
    scheme = SeedScheme(master_seed)
    scale = 1.0 / np.sqrt(3.0 * n)
    vals = []
    for t in range(trials):
        a = sample_atoms(law, scheme.stream(t, 0, "square-iid"), (n, n), ell=n)
        vals.append(lu_logdet(scale * a).log_magnitude / n)
    return float(np.mean(vals))


def logint_bound_check(mu: EmpiricalMeasure, nu: EmpiricalMeasure, a: float, b: float, beta: float) -> bool:
    """Check the windowed log-moment difference against the CDF-distance bound."""
    if not (0 < a < b):
        raise ValueError("need 0 < a < b")
    if beta < 1:
        raise ValueError("need beta >= 1")

    def integral(m: EmpiricalMeasure) -> float:
        sel = m.atoms[(m.atoms >= a) & (m.atoms <= b)]
        if sel.size == 0:
            return 0.0
        return float(np.sum(np.abs(np.log(sel)) ** beta) / m.count)

    lhs = abs(integral(mu) - integral(nu))
    rhs = 2.0 * (abs(np.log(a)) ** beta + abs(np.log(b)) ** beta) * kolmogorov_distance(mu, nu)
    return lhs <= rhs + 1e-12
