"""Classical (measure-prepare) reference values for quantum-advantage labelling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .ensembles import InputEnsemble, InputFamily

SQUEEZED_UNIFORM_INFINITE = 0.815


class BoundProvenance(str, Enum):
    COHERENT_GAUSSIAN_FORMULA = "CoherentGaussianFormula"
    SQUEEZED_UNIFORM_INFINITE = "SqueezedUniformInfinite"
    ENTANGLEMENT_FREE_NUMERIC = "EntanglementFreeNumeric"
    USER_SUPPLIED = "UserSupplied"


@dataclass(frozen=True)
class ClassicalBound:
    value: float
    provenance: BoundProvenance

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"bound {self.value} outside [0, 1]")


def classical_bound_coherent_gaussian(lam: float) -> float:
    """Best measure-prepare fidelity (1 + lam) / (2 + lam) for coherent states
    drawn with density (lam / pi) exp(-lam |beta|^2)."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if math.isinf(lam):
        return 1.0
    return (1.0 + lam) / (2.0 + lam)


def lambda_from_sigma(sigma_c: float) -> float:
    """Width parameter lambda = 1/sigma_c matching exp(-b^2/sigma_c)."""
    if sigma_c <= 0:
        raise ValueError("sigma_c must be positive")
    return 1.0 / sigma_c


def squeezed_uniform_infinite_bound() -> float:
    """Reference threshold for pure squeezed inputs with flat, unbounded energy."""
    return SQUEEZED_UNIFORM_INFINITE


def advantage_label(F: float, bound: float, margin: float = 0.0) -> str:
    return "quantum-advantaged" if F > bound + margin else "not advantaged"


def applicable_bound(ensemble: InputEnsemble, entanglement_free: float | None = None) -> ClassicalBound:
    """Threshold used to flag advantage for an ensemble.

    Gaussian coherent ensembles have the analytic measure-prepare optimum; every
    other ensemble falls back to the entanglement-free (r = 0) value, which must
    then be supplied.
    """
    if not ensemble.is_uniform and ensemble.family is InputFamily.COHERENT:
        lam = lambda_from_sigma(ensemble.kind.sigma_c)
        return ClassicalBound(classical_bound_coherent_gaussian(lam),
                              BoundProvenance.COHERENT_GAUSSIAN_FORMULA)
    if entanglement_free is None:
        raise ValueError("no closed-form bound for this ensemble; pass the entanglement-free value")
    return ClassicalBound(float(entanglement_free), BoundProvenance.ENTANGLEMENT_FREE_NUMERIC)
