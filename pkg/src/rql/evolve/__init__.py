from .kernel import (
    DiagonalPlusField,
    SizeLimitError,
    check_size,
    expm_krylov,
    max_sites,
    z_table,
)
from .model import (
    ModelVariant,
    VariantError,
    dense_hamiltonian,
    exact_spectrum,
    expectation_energy,
    hamiltonian_at,
    step,
)
from .run import (
    EnsembleSpec,
    EvolutionResult,
    ensemble_mean_sem,
    evolve_variant,
    run_quench,
)
from .state import NormalizationError, SpinState

__all__ = [
    "DiagonalPlusField", "SizeLimitError", "check_size", "expm_krylov", "max_sites", "z_table",
    "ModelVariant", "VariantError", "dense_hamiltonian", "exact_spectrum", "expectation_energy",
    "hamiltonian_at", "step", "EnsembleSpec", "EvolutionResult", "ensemble_mean_sem",
    "evolve_variant", "run_quench", "NormalizationError", "SpinState",
]
