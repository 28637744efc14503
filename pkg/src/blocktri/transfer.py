"""Transfer-operator cocycle over the block rows.

One step maps a 2ell-by-ell frame through the block companion operator
``[[-B^{-1}(A - z), -B^{-1}C], [I, 0]]`` without ever forming ``B^{-1}``, and
QR renormalization keeps the frame orthonormal while the discarded R factors
accumulate the log volume growth. The wedge space is never materialized at
production sizes; frames carry decomposable elements exactly and wedge norms
are Gram log-determinants.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .entropy import SeedScheme
from .model import BlockTridiagonal, BorderedEnsemble, identity_entry_frame, identity_exit_frame, sample_tridiagonal
from .numerics import SingularMatrixError, SizeCapError, lu_logdet, qr_thin, solve_lu


@dataclass(frozen=True)
class TransferState:
    """Orthonormal frame plus accumulated log growth after `step_index` steps."""

    frame: np.ndarray
    log_accum: float
    step_index: int


@dataclass(frozen=True)
class CocycleTrace:
    increments: tuple
    total: float


def apply_transfer(diag_block, upper_block, lower_block, z: complex, frame) -> np.ndarray:
    """One un-normalized transfer application to a 2ell-by-ell frame."""
    a = np.asarray(diag_block, dtype=np.complex128)
    ell = a.shape[0]
    f = np.asarray(frame, dtype=np.complex128)
    u, v = f[:ell], f[ell:]
    w = (a - z * np.eye(ell)) @ u + np.asarray(lower_block, dtype=np.complex128) @ v
    x = solve_lu(upper_block, -w)
    return np.vstack([x, u])


def cocycle_step(state: TransferState, diag_block, upper_block, lower_block, z: complex) -> TransferState:
    """Renormalized step: apply, thin-QR, add log|det R| to the accumulator."""
    y = apply_transfer(diag_block, upper_block, lower_block, z, state.frame)
    q, r = qr_thin(y)
    inc = float(np.sum(np.log(np.diagonal(r).real)))
    return TransferState(q, state.log_accum + inc, state.step_index + 1)


def dense_transfer_matrix(diag_block, upper_block, lower_block, z: complex) -> np.ndarray:
    """Explicit 2ell-by-2ell one-step operator, used as a small-size oracle."""
    a = np.asarray(diag_block, dtype=np.complex128)
    ell = a.shape[0]
    top = solve_lu(upper_block, -np.hstack([a - z * np.eye(ell), np.asarray(lower_block, dtype=np.complex128)]))
    bottom = np.hstack([np.eye(ell), np.zeros((ell, ell))])
    return np.vstack([top, bottom])


def _blocks(model: BlockTridiagonal):
    return zip(model.diag, model.upper, model.lower)


def _propagate(model: BlockTridiagonal, z: complex, entry_frame, renorm_every: int = 1):
    """Run the frame through all rows; returns (final frame, increments, start log)."""
    if renorm_every < 1:
        raise ValueError("renorm_every must be >= 1")
    ell = model.ell
    q, r = qr_thin(np.asarray(entry_frame, dtype=np.complex128))
    log_start = float(np.sum(np.log(np.diagonal(r).real)))
    frame = q
    increments = []
    eye = np.eye(ell)
    for k, (a, b, c) in enumerate(_blocks(model)):
        u, v = frame[:ell], frame[ell:]
        w = (a - z * eye) @ u + c @ v
        x = solve_lu(b, -w)
        frame = np.vstack([x, u])
        if (k + 1) % renorm_every == 0 or k == model.n - 1:
            frame, r = qr_thin(frame)
            increments.append(float(np.sum(np.log(np.diagonal(r).real))))
    return frame, increments, log_start


def cocycle_trace(model: BlockTridiagonal, z: complex, entry_frame=None) -> CocycleTrace:
    """Per-step growth increments for a normalized entry frame."""
    if entry_frame is None:
        entry_frame = identity_entry_frame(model.ell)
    _, increments, log_start = _propagate(model, z, entry_frame)
    return CocycleTrace(tuple(increments), log_start + float(np.sum(increments)))


def _resolve_frames(model, z, exit_frame, entry_frame):
    if isinstance(model, BorderedEnsemble):
        if exit_frame is not None or entry_frame is not None:
            raise ValueError("bordered ensembles carry their own frames")
        return model.inner, model.exit_frame, model.entry_frame
    if exit_frame is None:
        exit_frame = identity_exit_frame(model.ell)
    if entry_frame is None:
        entry_frame = identity_entry_frame(model.ell)
    return model, exit_frame, entry_frame


def projected_growth_log(model, z: complex, exit_frame=None, entry_frame=None, renorm_every: int = 1) -> float:
    """log|det(exit . product of transfer operators . entry)|.

    Returns -inf when the final pairing underflows the pivot floor; that is a
    legitimate outcome at near-singular shifts, not an error.
    """
    inner, pi, xi = _resolve_frames(model, z, exit_frame, entry_frame)
    frame, increments, log_start = _propagate(inner, z, xi, renorm_every)
    try:
        pairing = lu_logdet(np.asarray(pi, dtype=np.complex128) @ frame).log_magnitude
    except SingularMatrixError:
        return -math.inf
    return log_start + float(np.sum(increments)) + pairing


def frame_growth_log(model, z: complex, entry_frame=None, renorm_every: int = 1) -> float:
    """log of the wedge norm of the full product applied to the entry frame."""
    inner, _, xi = _resolve_frames(model, z, None, entry_frame)
    _, increments, log_start = _propagate(inner, z, xi, renorm_every)
    return log_start + float(np.sum(increments))


def logdet_via_transfer(model, z: complex, exit_frame=None, entry_frame=None, renorm_every: int = 1) -> float:
    """log|det| of the shifted matrix through the transfer recursion.

    For a plain ensemble with identity frames this equals log|det(T - zI)|;
    for a bordered ensemble it equals log|det| of the bordered matrix under
    its middle-rows shift convention. The super-diagonal bookkeeping term
    enters with a positive sign and cancels the inverses inside the product.
    """
    inner, pi, xi = _resolve_frames(model, z, exit_frame, entry_frame)
    log_b = 0.0
    for b in inner.upper:
        log_b += lu_logdet(b).log_magnitude
    growth = projected_growth_log(inner, z, pi, xi, renorm_every)
    return log_b + growth


def wedge_power_small(g, ell: int) -> np.ndarray:
    """Explicit ell-fold wedge power in the lexicographic minor basis."""
    if ell > 4:
        raise SizeCapError("wedge power capped at ell <= 4")
    if ell < 1:
        raise ValueError("ell must be positive")
    a = np.asarray(g, dtype=np.complex128)
    m = a.shape[0]
    if a.shape != (m, m) or m < ell:
        raise ValueError("expected a square matrix of size >= ell")
    combos = list(itertools.combinations(range(m), ell))
    dim = len(combos)
    out = np.empty((dim, dim), dtype=np.complex128)
    for i, rows in enumerate(combos):
        sub = a[np.ix_(rows, range(m))]
        for j, cols in enumerate(combos):
            out[i, j] = np.linalg.det(sub[:, cols])
    return out


def plucker_coordinates(frame) -> np.ndarray:
    """Minor coordinates of a tall frame in the same lexicographic basis."""
    f = np.asarray(frame, dtype=np.complex128)
    m, ell = f.shape
    combos = itertools.combinations(range(m), ell)
    return np.array([np.linalg.det(f[list(rows), :]) for rows in combos])


def subsystem_split(n: int, ell: int, d: float) -> tuple[int, list[tuple[int, int]]]:
    """Cut [1, n] into segments of an admissible length with a long remainder.

    The segment length n0 is the smallest integer in [2*ell**d, 4*ell**d]
    leaving a remainder of at least n0/2.
    """
    base = float(ell) ** d
    if n < 10 * base:
        raise ValueError("need n >= 10 * ell**d")
    lo = math.ceil(2 * base)
    hi = math.floor(4 * base)
    for n0 in range(lo, hi + 1):
        whole = n // n0
        if n - n0 * whole >= n0 / 2:
            segments = [((k - 1) * n0 + 1, k * n0) for k in range(1, whole + 1)]
            segments.append((n0 * whole + 1, n))
            return n0, segments
    raise ValueError("no admissible segment length in [2*ell**d, 4*ell**d]")


@dataclass(frozen=True)
class ConcentrationSummary:
    block_counts: tuple
    means: tuple
    std_devs: tuple
    std_dev_decreasing: bool
    values: tuple


def concentration_experiment(
    n: int,
    ell: int,
    z: complex,
    trials: int,
    entry_frame=None,
    *,
    law,
    master_seed: int = 0,
    doublings: int = 0,
) -> ConcentrationSummary:
    """Sample spread of the normalized projected growth, optionally across doublings of n."""
    if trials < 2:
        raise ValueError("need at least 2 trials")
    scheme = SeedScheme(master_seed)
    if entry_frame is None:
        entry_frame = identity_entry_frame(ell)
    pi = identity_exit_frame(ell)
    counts = tuple(n * 2**j for j in range(doublings + 1))
    all_values, means, stds = [], [], []
    for level, n_level in enumerate(counts):
        vals = []
        for t in range(trials):
            model = sample_tridiagonal(n_level, ell, law, scheme, trial=level * trials + t)
            vals.append(projected_growth_log(model, z, pi, entry_frame) / (n_level * ell))
        vals = np.array(vals)
        all_values.append(tuple(float(v) for v in vals))
        means.append(float(vals.mean()))
        stds.append(float(vals.std(ddof=1)))
    decreasing = all(stds[i + 1] < stds[i] for i in range(len(stds) - 1))
    return ConcentrationSummary(counts, tuple(means), tuple(stds), decreasing, tuple(all_values))
