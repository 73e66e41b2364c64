"""One-shot teleportation fidelity for squeezed-coherent inputs.

The resource is a squeezed Bell-like state

    S12(zeta) (cos(delta)|00> + exp(i eta) sin(delta)|11>),   zeta = r exp(i gamma)

which covers the two-mode squeezed vacuum (delta = 0) and the photon-added /
photon-subtracted squeezed vacua.  The input is S(xi) D(beta)|0> with
beta = b exp(i phi) and xi = eps exp(i theta).

Noise enters through a lossy fiber (``tau``) acting on the resource and a lossy
Bell measurement modelled by a beam splitter of reflectivity ``R``.  The
noiseless closed form is the ``tau = R = 0`` case of the noisy one, so there is
a single code path for both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

TWO_PI = 2.0 * math.pi

#: largest supported resource squeezing
R_MAX = 5.0

#: f slightly above 1 is treated as rounding and clamped; beyond that it is a bug
CLAMP_TOL = 1e-9


class FidelityRangeError(ArithmeticError):
    """A computed fidelity fell outside [-CLAMP_TOL, 1 + CLAMP_TOL]."""


class ResourceFamily(str, Enum):
    TMSV = "TMSV"
    PHOTON_ADDED = "PA"
    PHOTON_SUBTRACTED = "PS"
    CUSTOM_DELTA = "custom"

    @classmethod
    def parse(cls, value: "str | ResourceFamily") -> "ResourceFamily":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "tmsv": cls.TMSV,
            "pa": cls.PHOTON_ADDED,
            "photon_added": cls.PHOTON_ADDED,
            "photonadded": cls.PHOTON_ADDED,
            "ps": cls.PHOTON_SUBTRACTED,
            "photon_subtracted": cls.PHOTON_SUBTRACTED,
            "photonsubtracted": cls.PHOTON_SUBTRACTED,
            "custom": cls.CUSTOM_DELTA,
            "customdelta": cls.CUSTOM_DELTA,
            "custom_delta": cls.CUSTOM_DELTA,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown resource family {value!r}") from None


def _checked_arccos(x: float) -> float:
    if not (-1.0 - 1e-12 <= x <= 1.0 + 1e-12):
        raise AssertionError(f"arccos argument {x!r} out of range")
    return math.acos(min(1.0, max(-1.0, x)))


def delta_for_family(family: "ResourceFamily | str", r: float) -> float:
    """Bell mixing angle of a named resource family at squeezing ``r``.

    TMSV gives 0; photon-added gives arccos(sinh r / sqrt(cosh 2r)) and
    photon-subtracted gives arccos(cosh r / sqrt(cosh 2r)).
    """
    family = ResourceFamily.parse(family)
    if r < 0:
        raise ValueError("r must be nonnegative")
    if family is ResourceFamily.TMSV:
        return 0.0
    norm = math.sqrt(math.cosh(2.0 * r))
    if family is ResourceFamily.PHOTON_ADDED:
        return _checked_arccos(math.sinh(r) / norm)
    if family is ResourceFamily.PHOTON_SUBTRACTED:
        return _checked_arccos(math.cosh(r) / norm)
    raise ValueError("CustomDelta resources carry an explicit delta")


@dataclass(frozen=True)
class ResourceSpec:
    """Squeezed Bell-like resource.

    ``gamma`` and ``eta`` are kept for provenance only; the fidelity kernel does
    not consume them.  ``lambda2_term`` selects which Delta enters Lambda_2
    ("delta1" is the printed closed form, "delta2" exists for sensitivity runs).
    """

    family: ResourceFamily
    r: float
    delta: float | None = None
    gamma: float = 0.0
    eta: float | None = None
    lambda2_term: str = "delta1"

    def __post_init__(self):
        family = ResourceFamily.parse(self.family)
        object.__setattr__(self, "family", family)
        r = float(self.r)
        if not math.isfinite(r) or r < 0:
            raise ValueError(f"r must be a finite nonnegative number, got {self.r!r}")
        if r > R_MAX:
            raise ValueError(f"r={r} exceeds the supported maximum {R_MAX}")
        object.__setattr__(self, "r", r)
        if family is ResourceFamily.CUSTOM_DELTA:
            if self.delta is None:
                raise ValueError("CustomDelta resource needs an explicit delta")
            delta = float(self.delta)
        else:
            delta = delta_for_family(family, r)
            if self.delta is not None and abs(float(self.delta) - delta) > 1e-12:
                raise ValueError(f"delta={self.delta} inconsistent with family {family.value}")
        if not (0.0 <= delta <= math.pi / 2):
            raise ValueError(f"delta must lie in [0, pi/2], got {delta}")
        object.__setattr__(self, "delta", delta)
        if self.eta is None:
            eta = 0.0 if family is ResourceFamily.TMSV else self.gamma - math.pi
            object.__setattr__(self, "eta", eta)
        if self.lambda2_term not in ("delta1", "delta2"):
            raise ValueError("lambda2_term must be 'delta1' or 'delta2'")

    @classmethod
    def tmsv(cls, r: float) -> "ResourceSpec":
        return cls(ResourceFamily.TMSV, r)

    @classmethod
    def photon_added(cls, r: float) -> "ResourceSpec":
        return cls(ResourceFamily.PHOTON_ADDED, r)

    @classmethod
    def photon_subtracted(cls, r: float) -> "ResourceSpec":
        return cls(ResourceFamily.PHOTON_SUBTRACTED, r)

    def with_r(self, r: float) -> "ResourceSpec":
        if self.family is ResourceFamily.CUSTOM_DELTA:
            return ResourceSpec(self.family, r, delta=self.delta, gamma=self.gamma,
                                eta=self.eta, lambda2_term=self.lambda2_term)
        return ResourceSpec(self.family, r, gamma=self.gamma, lambda2_term=self.lambda2_term)


@dataclass(frozen=True)
class InputState:
    """Pure single-mode Gaussian input S(xi) D(beta)|0>; angles are reduced mod 2 pi."""

    b: float = 0.0
    phi: float = 0.0
    eps: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        for name in ("b", "phi", "eps", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.b < 0 or self.eps < 0:
            raise ValueError("b and eps must be nonnegative")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    @property
    def energy(self) -> float:
        return self.b**2 + math.sinh(self.eps) ** 2


@dataclass(frozen=True)
class NoiseSpec:
    """Fiber loss ``tau`` on the resource and measurement reflectivity ``R``."""

    tau: float = 0.0
    R: float = 0.0
    T: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ValueError(f"tau must be finite and nonnegative, got {self.tau!r}")
        if not (math.isfinite(self.R) and 0.0 <= self.R <= 1.0):
            raise ValueError(f"R must lie in [0, 1], got {self.R!r}")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "T", math.sqrt(1.0 - self.R * self.R))

    @property
    def is_noiseless(self) -> bool:
        return self.tau == 0.0 and self.R == 0.0


NOISELESS = NoiseSpec()


@dataclass(frozen=True)
class FidelityCoefficients:
    delta1: float
    delta2: float
    lambda1: float
    lambda2: float
    omega1sq: float
    omega2sq: float
    gtilde: float
    Gamma: float


def _coefficient_arrays(r, b, phi, eps, g, tau, R, lambda2_term="delta1"):
    """Coefficient block of the noisy closed form (broadcasting).

    Delta_1 and Delta_2 are evaluated in the factored form
    (1 + x)^2 +- e^{4r} (1 - x)^2 with x = e^{tau/2} g T, which is the printed
    quadratic in g~ without its cancellation near unit gain.
    """
    T = np.sqrt(1.0 - R * R)
    gt = g * T
    Gamma = -0.5 * np.expm1(-tau) + g * g * R * R
    x = np.exp(0.5 * tau) * gt
    e4r = np.exp(4.0 * r)
    plus = (1.0 + x) ** 2
    minus = e4r * (1.0 - x) ** 2
    d1 = plus + minus
    d2 = plus - minus
    damp = np.exp(-2.0 * r - tau)
    gain_sq = 1.0 + gt * gt
    d_lam2 = d1 if lambda2_term == "delta1" else d2
    lam1 = damp * d1 + 2.0 * np.exp(2.0 * eps) * gain_sq + 4.0 * Gamma
    lam2 = damp * d_lam2 + 2.0 * np.exp(-2.0 * eps) * gain_sq + 4.0 * Gamma
    shrink = (1.0 - gt) ** 2
    b2 = b * b
    w1 = -4.0 * b2 * np.sin(phi) ** 2 * shrink
    w2 = 4.0 * b2 * np.cos(phi) ** 2 * shrink
    return d1, d2, lam1, lam2, w1, w2, gt, Gamma


def _check_gain(g):
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("gain must be finite")
    if np.any((g < 0.0) | (g > 1.0)):
        raise ValueError("gain must lie in [0, 1]")
    return g


def fidelity_kernel(r, delta, b, phi, eps, g, tau=0.0, R=0.0, lambda2_term="delta1"):
    """Vectorised one-shot fidelity; all arguments broadcast against each other.

    ``theta`` does not appear: the closed form is independent of the input
    squeezing angle.  Returns a float for scalar input, else an ndarray.
    """
    g = _check_gain(g)
    d1, d2, lam1, lam2, w1, w2, _, _ = _coefficient_arrays(r, b, phi, eps, g, tau, R, lambda2_term)
    if lambda2_term != "delta1" and np.any(lam2 <= 0):
        raise FidelityRangeError("Lambda_2 built from Delta_2 is nonpositive here")
    sd, cd = np.sin(delta), np.cos(delta)
    a1 = w1 / lam1
    a2 = w2 / lam2
    inv1 = 1.0 / lam1
    inv2 = 1.0 / lam2
    first = (
        np.exp(-2.0 * r - tau) * sd * (d2 * cd - d1 * sd)
        * (inv1 * (1.0 + 2.0 * a1) + inv2 * (1.0 - 2.0 * a2))
    )
    second = (
        0.25 * np.exp(-4.0 * r - 2.0 * tau) * d2 * d2 * sd * sd
        * (
            inv1 * inv1 * (3.0 + 12.0 * a1 + 4.0 * a1 * a1)
            + inv2 * inv2 * (3.0 - 12.0 * a2 + 4.0 * a2 * a2)
            + 2.0 * inv1 * inv2 * (1.0 + 2.0 * a1 - 2.0 * a2 - 4.0 * a1 * a2)
        )
    )
    f = 4.0 / np.sqrt(lam1 * lam2) * np.exp(a1 - a2) * (1.0 + first + second)
    return _clamp(f)


def _clamp(f):
    f = np.asarray(f, dtype=float)
    bad = ~((f >= -CLAMP_TOL) & (f <= 1.0 + CLAMP_TOL))
    if np.any(bad):
        worst = f[bad].flat[0] if f.ndim else float(f)
        raise FidelityRangeError(f"fidelity {worst!r} outside [0, 1]; closed form misapplied")
    f = np.clip(f, 0.0, 1.0)
    return float(f) if f.ndim == 0 else f


def coefficients(resource: ResourceSpec, state: InputState, g: float,
                 noise: NoiseSpec = NOISELESS) -> FidelityCoefficients:
    values = (resource.r, state.b, state.phi, state.eps, g, noise.tau, noise.R)
    if not all(math.isfinite(v) for v in values):
        raise ValueError("coefficients need finite inputs")
    _check_gain(g)
    d1, d2, lam1, lam2, w1, w2, gt, Gamma = _coefficient_arrays(
        resource.r, state.b, state.phi, state.eps, float(g), noise.tau, noise.R,
        resource.lambda2_term,
    )
    return FidelityCoefficients(
        delta1=float(d1), delta2=float(d2), lambda1=float(lam1), lambda2=float(lam2),
        omega1sq=float(w1), omega2sq=float(w2), gtilde=float(gt), Gamma=float(Gamma),
    )


def one_shot_fidelity(resource: ResourceSpec, state: InputState, g: float,
                      noise: NoiseSpec = NOISELESS) -> float:
    """Fidelity of teleporting ``state`` through ``resource`` at gain ``g``."""
    return fidelity_kernel(
        resource.r, resource.delta, state.b, state.phi, state.eps, g,
        noise.tau, noise.R, resource.lambda2_term,
    )
