"""Numerical laboratory for non-Hermitian random block tridiagonal matrices."""

__version__ = "0.1.0"

from .entropy import ATOM_KINDS, AtomLaw, SeedScheme, fill_block, sample_atom, sample_atoms
from .model import (
    BlockTridiagonal,
    BorderedEnsemble,
    FrameNormalizationError,
    PeriodicEnsemble,
    build_bordered,
    dump_ensemble,
    identity_entry_frame,
    identity_exit_frame,
    load_ensemble,
    operator_norm_check,
    random_entry_frame,
    random_exit_frame,
    sample_periodic,
    sample_tridiagonal,
    to_dense,
)
from .numerics import (
    EIGVALS_CAP,
    PIVOT_FLOOR,
    EigenConvergenceError,
    LogDetResult,
    NumericsError,
    RankDeficientError,
    SingularMatrixError,
    SizeCapError,
    eigvals,
    inv_sqrt_hermitian,
    lu_logdet,
    qr_thin,
    solve_lu,
    svd_values,
    unitary_complement,
)
from .transfer import (
    CocycleTrace,
    ConcentrationSummary,
    TransferState,
    apply_transfer,
    cocycle_step,
    cocycle_trace,
    concentration_experiment,
    dense_transfer_matrix,
    frame_growth_log,
    logdet_via_transfer,
    plucker_coordinates,
    projected_growth_log,
    subsystem_split,
    wedge_power_small,
)
from .spectra import (
    EmpiricalMeasure,
    EsdSummary,
    empirical_stieltjes,
    esd,
    ginibre_logdet_check,
    ginibre_potential,
    kolmogorov_distance,
    least_singular_value,
    log_potential,
    logint_bound_check,
    radial_cdf_distance,
    rigidity_count,
    singular_values,
)
from .mde import (
    MdeChain,
    MdeConvergenceError,
    SelfEnergyProfile,
    StieltjesDeviationTable,
    chain_imag_bound,
    density_from_stieltjes,
    mde_vs_empirical,
    self_energy_apply,
    solve_chain,
    solve_mc,
)
