"""Average fidelity and fidelity deviation of continuous-variable teleportation
with non-Gaussian resources, over energy-constrained input ensembles."""

__version__ = "0.1.0"

from .baselines import (  # noqa: E402
    BoundProvenance,
    ClassicalBound,
    applicable_bound,
    classical_bound_coherent_gaussian,
    squeezed_uniform_infinite_bound,
)
from .core import (  # noqa: E402
    NOISELESS,
    FidelityRangeError,
    InputState,
    NoiseSpec,
    ResourceFamily,
    ResourceSpec,
    fidelity_kernel,
    one_shot_fidelity,
)
from .ensembles import InputEnsemble, InputFamily, ensemble_average_energy  # noqa: E402
from .moments import (  # noqa: E402
    InconsistentMomentsError,
    MomentResult,
    average_fidelity,
    entanglement_free_baseline,
    fidelity_deviation,
    moments_at,
    optimize_gain,
    second_moment,
)
from .oracle_mc import McEstimate, mc_moments  # noqa: E402
from .quadrature import AccuracyError  # noqa: E402

__all__ = [
    "AccuracyError",
    "BoundProvenance",
    "ClassicalBound",
    "FidelityRangeError",
    "InconsistentMomentsError",
    "InputEnsemble",
    "InputFamily",
    "InputState",
    "McEstimate",
    "MomentResult",
    "NOISELESS",
    "NoiseSpec",
    "ResourceFamily",
    "ResourceSpec",
    "applicable_bound",
    "average_fidelity",
    "classical_bound_coherent_gaussian",
    "ensemble_average_energy",
    "entanglement_free_baseline",
    "fidelity_deviation",
    "fidelity_kernel",
    "mc_moments",
    "moments_at",
    "one_shot_fidelity",
    "optimize_gain",
    "second_moment",
    "squeezed_uniform_infinite_bound",
]
