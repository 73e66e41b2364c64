"""Input ensembles: energy-constrained uniform and Gaussian-suppressed.

Inputs are S(xi) D(beta)|0> with beta = b e^{i phi}, xi = eps e^{i theta} and
energy b^2 + sinh^2(eps).  An ensemble restricts the family (coherent, squeezed
or squeezed-coherent) and puts a weight on the phase-space measure

    coherent           d^2 beta = b db dphi
    squeezed           d^2 xi   = eps deps dtheta   (2 pi eps deps after theta)
    squeezed-coherent  b eps db dphi deps dtheta

Weights returned here always have the theta integral already carried out.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import TWO_PI, InputState
from .quadrature import DEFAULT_MAX_EVALS, adaptive_gauss_legendre

#: Gaussian sectors are truncated at this many sqrt(sigma)
GAUSSIAN_CUT = 6.0

SIGMA_S_WINDOW = 5.0
SIGMA_C_WINDOW = 10.0


class SamplingError(RuntimeError):
    pass


class InputFamily(str, Enum):
    COHERENT = "coherent"
    SQUEEZED = "squeezed"
    SQUEEZED_COHERENT = "squeezed_coherent"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        key = {"squeezedcoherent": "squeezed_coherent", "sc": "squeezed_coherent"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown input family {value!r}") from None

    @property
    def has_displacement(self):
        return self is not InputFamily.SQUEEZED

    @property
    def has_squeezing(self):
        return self is not InputFamily.COHERENT


@dataclass(frozen=True)
class ConstrainedUniform:
    """Uniform weight on the energy shell b^2 + sinh^2(eps) <= sinh^2(L).

    For coherent inputs ``coherent_cutoff`` picks how ``L`` is read: "energy"
    gives b <= sinh(L) (the same energy budget as squeezing up to L), "radius"
    takes ``L`` as the displacement cutoff itself, b <= L.
    """

    L: float
    coherent_cutoff: str = "energy"

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L >= 0):
            raise ValueError(f"cutoff L must be finite and nonnegative, got {self.L!r}")
        if self.coherent_cutoff not in ("energy", "radius"):
            raise ValueError("coherent_cutoff must be 'energy' or 'radius'")


@dataclass(frozen=True)
class GaussianSuppressed:
    """Weight exp(-b^2/sigma_c) exp(-eps^2/sigma_s)."""

    sigma_s: float | None = None
    sigma_c: float | None = None

    def __post_init__(self):
        for name in ("sigma_s", "sigma_c"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True)
class InputEnsemble:
    kind: ConstrainedUniform | GaussianSuppressed
    family: InputFamily

    def __post_init__(self):
        family = InputFamily.parse(self.family)
        object.__setattr__(self, "family", family)
        kind = self.kind
        if isinstance(kind, GaussianSuppressed):
            if family.has_squeezing and kind.sigma_s is None:
                raise ValueError(f"{family.value} Gaussian ensemble needs sigma_s")
            if family.has_displacement and kind.sigma_c is None:
                raise ValueError(f"{family.value} Gaussian ensemble needs sigma_c")
            if kind.sigma_s is not None and kind.sigma_s > SIGMA_S_WINDOW:
                warnings.warn(f"sigma_s={kind.sigma_s} lies outside the studied window "
                              f"(<= {SIGMA_S_WINDOW})", stacklevel=3)
            if kind.sigma_c is not None and kind.sigma_c > SIGMA_C_WINDOW:
                warnings.warn(f"sigma_c={kind.sigma_c} lies outside the studied window "
                              f"(<= {SIGMA_C_WINDOW})", stacklevel=3)
        elif not isinstance(kind, ConstrainedUniform):
            raise TypeError("kind must be ConstrainedUniform or GaussianSuppressed")

    @classmethod
    def uniform(cls, family, L, coherent_cutoff="energy"):
        return cls(ConstrainedUniform(L, coherent_cutoff), InputFamily.parse(family))

    @classmethod
    def gaussian(cls, family, sigma_s=None, sigma_c=None):
        family = InputFamily.parse(family)
        return cls(
            GaussianSuppressed(
                sigma_s if family.has_squeezing else None,
                sigma_c if family.has_displacement else None,
            ),
            family,
        )

    @property
    def is_uniform(self):
        return isinstance(self.kind, ConstrainedUniform)

    @property
    def energy_budget(self):
        """Largest allowed input energy (uniform ensembles only)."""
        if not self.is_uniform:
            return math.inf
        if self.family is InputFamily.COHERENT:
            return _coherent_radius(self.kind) ** 2
        return math.sinh(self.kind.L) ** 2

    @property
    def is_degenerate(self):
        """True for the vacuum-only ensemble (uniform with L = 0)."""
        return self.is_uniform and self.kind.L == 0.0

    def describe(self):
        if self.is_uniform:
            extra = f", cutoff={self.kind.coherent_cutoff}" if self.family is InputFamily.COHERENT else ""
            return f"uniform {self.family.value} L={self.kind.L:g}{extra}"
        parts = []
        if self.kind.sigma_s is not None:
            parts.append(f"sigma_s={self.kind.sigma_s:g}")
        if self.kind.sigma_c is not None:
            parts.append(f"sigma_c={self.kind.sigma_c:g}")
        return f"gaussian {self.family.value} " + " ".join(parts)


def _coherent_radius(kind: ConstrainedUniform):
    return kind.L if kind.coherent_cutoff == "radius" else math.sinh(kind.L)


def input_energy(state: InputState) -> float:
    """Mean photon-number energy b^2 + sinh^2(eps) of an input state."""
    return state.b**2 + math.sinh(state.eps) ** 2


def _shell_moment(L):
    """int_0^L eps (sinh^2 L - sinh^2 eps) deps."""
    if L < 0.05:
        return L**4 / 4 + L**6 / 9 + L**8 / 60
    inner = L * math.sinh(2 * L) / 4 - math.sinh(L) ** 2 / 4 - L * L / 4
    return math.sinh(L) ** 2 * L * L / 2 - inner


@dataclass(frozen=True)
class IntegrationDomain:
    """Integration box for one ensemble.

    The quadrature works in unit-cube coordinates; :meth:`map_unit` maps them to
    (b, phi, eps) and returns the full weight, including the analytic theta
    factor and the fourfold phi reflection (the fidelity is symmetric under
    phi -> -phi and phi -> pi - phi, so only [0, pi/2] is sampled).
    """

    ensemble: InputEnsemble
    eps_max: float
    b_extent: float
    tail_mass: float
    phi_range: tuple = (0.0, TWO_PI)
    theta_range: tuple = (0.0, TWO_PI)

    @property
    def dims(self):
        fam = self.ensemble.family
        if fam is InputFamily.COHERENT:
            return ("b", "phi")
        if fam is InputFamily.SQUEEZED:
            return ("eps",)
        return ("eps", "b", "phi")

    @property
    def ndim(self):
        return len(self.dims)

    def b_max(self, eps):
        eps = np.asarray(eps, dtype=float)
        if self.ensemble.family is InputFamily.SQUEEZED:
            return np.zeros_like(eps)
        if self.ensemble.is_uniform and self.ensemble.family is InputFamily.SQUEEZED_COHERENT:
            budget = math.sinh(self.ensemble.kind.L) ** 2
            return np.sqrt(np.maximum(budget - np.sinh(eps) ** 2, 0.0))
        return np.full_like(eps, self.b_extent)

    def density(self, b, eps):
        """Unnormalised distribution p(beta, xi) inside the domain."""
        kind = self.ensemble.kind
        if self.ensemble.is_uniform:
            return np.ones(np.broadcast(b, eps).shape)
        out = 1.0
        if kind.sigma_c is not None:
            out = out * np.exp(-np.square(b) / kind.sigma_c)
        if kind.sigma_s is not None:
            out = out * np.exp(-np.square(eps) / kind.sigma_s)
        return np.asarray(out) * np.ones(np.broadcast(b, eps).shape)

    def weight(self, b, eps):
        """Density times measure Jacobian per db dphi deps (theta integrated out)."""
        fam = self.ensemble.family
        b = np.asarray(b, dtype=float)
        eps = np.asarray(eps, dtype=float)
        if fam is InputFamily.COHERENT:
            jac = b
        elif fam is InputFamily.SQUEEZED:
            jac = TWO_PI * eps
        else:
            jac = TWO_PI * b * eps
        return jac * self.density(b, eps)

    def map_unit(self, u):
        """Map unit-cube nodes (ndim, n) to arrays b, phi, eps and node weights."""
        fam = self.ensemble.family
        quarter = 0.5 * math.pi
        if fam is InputFamily.COHERENT:
            b = self.b_extent * u[0]
            phi = quarter * u[1]
            eps = np.zeros_like(b)
            jac = self.b_extent * quarter * 4.0
        elif fam is InputFamily.SQUEEZED:
            eps = self.eps_max * u[0]
            b = np.zeros_like(eps)
            phi = np.zeros_like(eps)
            jac = self.eps_max
        else:
            eps = self.eps_max * u[0]
            bmax = self.b_max(eps)
            b = bmax * u[1]
            phi = quarter * u[2]
            jac = self.eps_max * bmax * quarter * 4.0
        return b, phi, eps, self.weight(b, eps) * jac

    def integrate(self, func, rtol=1e-10, atol=0.0, max_evals=DEFAULT_MAX_EVALS):
        """Integrate ``func(b, phi, eps)`` (values shaped (m, n)) against the weight."""

        def integrand(u):
            b, phi, eps, w = self.map_unit(u)
            return np.atleast_2d(func(b, phi, eps)) * w

        return adaptive_gauss_legendre(integrand, self.ndim, rtol=rtol, atol=atol,
                                       max_evals=max_evals)


def normalization(ensemble: InputEnsemble) -> float:
    """Analytic total weight N = int p(beta, xi) d|psi_in>."""
    kind, fam = ensemble.kind, ensemble.family
    if ensemble.is_uniform:
        if fam is InputFamily.COHERENT:
            return math.pi * _coherent_radius(kind) ** 2
        if fam is InputFamily.SQUEEZED:
            return math.pi * kind.L**2
        return 2 * math.pi**2 * _shell_moment(kind.L)
    out = 1.0
    if fam.has_displacement:
        out *= math.pi * kind.sigma_c
    if fam.has_squeezing:
        out *= math.pi * kind.sigma_s
    return out


def domain(ensemble: InputEnsemble, cut: float = GAUSSIAN_CUT) -> IntegrationDomain:
    """Integration domain of an ensemble, with Gaussian tails truncated at ``cut`` sigma."""
    kind, fam = ensemble.kind, ensemble.family
    if ensemble.is_uniform:
        eps_max = kind.L if fam.has_squeezing else 0.0
        if fam is InputFamily.COHERENT:
            b_extent = _coherent_radius(kind)
        elif fam is InputFamily.SQUEEZED:
            b_extent = 0.0
        else:
            b_extent = math.sinh(kind.L)
        return IntegrationDomain(ensemble, eps_max, b_extent, 0.0)
    eps_max = cut * math.sqrt(kind.sigma_s) if fam.has_squeezing else 0.0
    b_extent = cut * math.sqrt(kind.sigma_c) if fam.has_displacement else 0.0
    # each sector discards a fraction exp(-cut^2) of its weight
    sectors = int(fam.has_squeezing) + int(fam.has_displacement)
    return IntegrationDomain(ensemble, eps_max, b_extent, sectors * math.exp(-cut * cut))


def gaussian_average_energy(sigma_s=None, sigma_c=None) -> float:
    """sigma_c + (1/2) e^{sigma_s} sqrt(pi sigma_s) erf(sqrt(sigma_s)); absent sectors add 0."""
    out = 0.0
    if sigma_c is not None:
        out += sigma_c
    if sigma_s is not None:
        out += 0.5 * math.exp(sigma_s) * math.sqrt(math.pi * sigma_s) * math.erf(math.sqrt(sigma_s))
    return out


def average_energy_quadrature(ensemble: InputEnsemble, rtol=1e-10) -> float:
    """Ensemble-averaged input energy by direct quadrature."""
    if ensemble.is_degenerate:
        return 0.0
    cut = GAUSSIAN_CUT
    if not ensemble.is_uniform and ensemble.family.has_squeezing:
        # sinh^2 shifts the squeezing sector's mass to eps ~ sigma_s
        cut += math.sqrt(ensemble.kind.sigma_s)
    dom = domain(ensemble, cut=cut)

    def energy(b, phi, eps):
        return np.stack([np.ones_like(b), b * b + np.sinh(eps) ** 2])

    res = dom.integrate(energy, rtol=rtol)
    return float(res.value[1] / res.value[0])


def ensemble_average_energy(ensemble: InputEnsemble) -> float:
    """Closed form for Gaussian ensembles, quadrature for constrained-uniform ones."""
    if ensemble.is_uniform:
        return average_energy_quadrature(ensemble)
    return gaussian_average_energy(ensemble.kind.sigma_s, ensemble.kind.sigma_c)


def sample_inputs(ensemble: InputEnsemble, rng: np.random.Generator, n: int,
                  max_rounds: int = 10_000):
    """Draw ``n`` inputs; returns arrays ``(b, phi, eps, theta)``."""
    kind, fam = ensemble.kind, ensemble.family
    phi = rng.uniform(0.0, TWO_PI, n) if fam.has_displacement else np.zeros(n)
    theta = rng.uniform(0.0, TWO_PI, n) if fam.has_squeezing else np.zeros(n)
    if not ensemble.is_uniform:
        b = np.sqrt(kind.sigma_c * rng.standard_exponential(n)) if fam.has_displacement else np.zeros(n)
        eps = np.sqrt(kind.sigma_s * rng.standard_exponential(n)) if fam.has_squeezing else np.zeros(n)
        return b, phi, eps, theta
    if fam is InputFamily.COHERENT:
        b = _coherent_radius(kind) * np.sqrt(rng.uniform(0.0, 1.0, n))
        return b, phi, np.zeros(n), theta
    if fam is InputFamily.SQUEEZED:
        eps = kind.L * np.sqrt(rng.uniform(0.0, 1.0, n))
        return np.zeros(n), phi, eps, theta
    # b eps db deps = d(b^2) d(eps^2) / 4: uniform in (eps^2, b^2), reject off the shell
    budget = math.sinh(kind.L) ** 2
    b_out = np.empty(n)
    eps_out = np.empty(n)
    filled = 0
    for _ in range(max_rounds):
        if filled == n:
            break
        want = n - filled
        batch = max(64, int(want * 2.5))
        eps2 = rng.uniform(0.0, kind.L**2, batch)
        b2 = rng.uniform(0.0, budget, batch)
        eps = np.sqrt(eps2)
        keep = b2 + np.sinh(eps) ** 2 <= budget
        take = min(want, int(keep.sum()))
        b_out[filled:filled + take] = np.sqrt(b2[keep][:take])
        eps_out[filled:filled + take] = eps[keep][:take]
        filled += take
    if filled < n:
        raise SamplingError(f"rejection sampler filled {filled}/{n} after {max_rounds} rounds")
    return b_out, phi, eps_out, theta


def sample(ensemble: InputEnsemble, rng: np.random.Generator) -> InputState:
    b, phi, eps, theta = sample_inputs(ensemble, rng, 1)
    return InputState(float(b[0]), float(phi[0]), float(eps[0]), float(theta[0]))
