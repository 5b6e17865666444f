"""Periodic discrete Schrodinger toolkit.

Scaled transfer-matrix cocycles, band spectra for periodic potentials
of arbitrary period, and two staged constructions of limit-periodic
potentials whose Lyapunov exponent behaves discontinuously at the
bottom of the spectrum.
"""

from .bands import (
    BandList,
    LocalBands,
    Sliver,
    band_edges_exact,
    bottom_crossing,
    bulk_truncated_eigenvalues,
    dist_to_spectrum,
    ids,
    in_spectrum,
    local_bands,
    spectrum_infimum,
    spectrum_measure,
    thouless_lyapunov,
    truncated_eigenvalues,
)
from .chain import BACKEND, chain_transfer, chain_transfer_batch
from .construct_a import (
    ConstructAConfig,
    StageRecordA,
    VerificationReportA,
    run_construction_a,
)
from .construct_b import (
    ConstructBConfig,
    DiscontinuityReport,
    StageRecordB,
    VerificationReportB,
    run_construction_b,
    unshifted_final,
)
from .errors import (
    ConstructionError,
    DegenerateSplittingError,
    EllipticEnergyError,
    EmptyFamilyError,
    LimperError,
    NoBandFoundError,
    NotInSpectrumError,
    PeriodTooLargeError,
)
from .intervals import IntervalFamily, OpenInterval, is_eps_dense, verify_nesting
from .recipes import (
    Overlay,
    PotentialRecipe,
    StepPiece,
    constant_potential,
    from_values,
    step_potential,
)
from .scaled import BatchScaled, ScaledMatrix2
from .stagefile import StageFile, load_stage, save_stage
from .sweep import lyapunov_sweep
from .transfer import (
    BlochVector,
    bloch_solution,
    discriminant,
    finite_lyapunov,
    lyapunov_periodic,
    lyapunov_periodic_batch,
    monodromy,
    monodromy_batch,
    transfer_product,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BandList",
    "BatchScaled",
    "BlochVector",
    "ConstructAConfig",
    "ConstructBConfig",
    "ConstructionError",
    "DegenerateSplittingError",
    "DiscontinuityReport",
    "EllipticEnergyError",
    "EmptyFamilyError",
    "IntervalFamily",
    "LimperError",
    "LocalBands",
    "NoBandFoundError",
    "NotInSpectrumError",
    "OpenInterval",
    "Overlay",
    "PeriodTooLargeError",
    "PotentialRecipe",
    "ScaledMatrix2",
    "Sliver",
    "StageFile",
    "StageRecordA",
    "StageRecordB",
    "StepPiece",
    "VerificationReportA",
    "VerificationReportB",
    "band_edges_exact",
    "bloch_solution",
    "bottom_crossing",
    "chain_transfer",
    "chain_transfer_batch",
    "constant_potential",
    "discriminant",
    "dist_to_spectrum",
    "finite_lyapunov",
    "from_values",
    "ids",
    "in_spectrum",
    "is_eps_dense",
    "load_stage",
    "local_bands",
    "lyapunov_periodic",
    "lyapunov_periodic_batch",
    "lyapunov_sweep",
    "monodromy",
    "monodromy_batch",
    "run_construction_a",
    "run_construction_b",
    "save_stage",
    "spectrum_infimum",
    "spectrum_measure",
    "step_potential",
    "thouless_lyapunov",
    "transfer_product",
    "truncated_eigenvalues",
    "bulk_truncated_eigenvalues",
    "unshifted_final",
    "verify_nesting",
]
