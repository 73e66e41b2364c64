"""Average fidelity, second moment and fidelity deviation over an ensemble.

All moments are ratios  (1/N) int p f^k d|psi_in>  evaluated with the adaptive
Gauss-Legendre engine on the ensemble's integration domain.  The deviation is
obtained from moments of (f - c) for a shift c close to the mean, which keeps
<f^2> - F^2 from cancelling catastrophically when the spread is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import NOISELESS, NoiseSpec, ResourceSpec, fidelity_kernel
from .ensembles import InputEnsemble, domain, normalization
from .quadrature import (
    DEFAULT_MAX_EVALS,
    DEFAULT_RTOL,
    AccuracyError,
    adaptive_gauss_legendre,
    apply_rule,
)

RADICAND_TOL = 1e-12
GAIN_GRID = 101
GAIN_XTOL = 1e-7

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class InconsistentMomentsError(ArithmeticError):
    """<f^2> - F^2 is negative beyond rounding; quadrature too loose."""


@dataclass(frozen=True)
class MomentResult:
    F: float
    dF: float
    g_opt: float
    quad_error_F: float
    quad_error_f2: float
    n_evals: int
    f2: float = math.nan

    def __post_init__(self):
        if not (-1e-12 <= self.F <= 1 + 1e-12):
            raise ValueError(f"average fidelity {self.F} outside [0, 1]")
        if not (0.0 <= self.dF <= 0.5):
            raise ValueError(f"fidelity deviation {self.dF} outside [0, 1/2]")


def _kernel(resource: ResourceSpec, noise: NoiseSpec):
    def f(b, phi, eps, gs):
        return fidelity_kernel(
            resource.r, resource.delta, b[None, :], phi[None, :], eps[None, :],
            gs[:, None], noise.tau, noise.R, resource.lambda2_term,
        )

    return f


def _unit_integrand(dom, func):
    def integrand(u):
        b, phi, eps, w = dom.map_unit(u)
        return func(b, phi, eps) * w

    return integrand


def _chunk(m):
    return max(512, (1 << 20) // max(1, m))


def _vacuum_fidelity(resource, gs, noise):
    return np.atleast_1d(fidelity_kernel(resource.r, resource.delta, 0.0, 0.0, 0.0,
                                         gs, noise.tau, noise.R, resource.lambda2_term))


def moment_integrals(resource: ResourceSpec, ensemble: InputEnsemble, gs, noise=NOISELESS,
                     rtol=DEFAULT_RTOL, max_evals=DEFAULT_MAX_EVALS, initial_panels=None):
    """F, <f^2>, their error estimates and the radicand for each gain in ``gs``.

    Returns a dict of arrays keyed ``F, f2, radicand, err_F, err_f2`` plus the
    evaluation count ``n_evals`` and converged ``panels``.
    """
    gs = np.atleast_1d(np.asarray(gs, dtype=float))
    m = gs.size
    if ensemble.is_degenerate:
        f0 = _vacuum_fidelity(resource, gs, noise)
        zero = np.zeros(m)
        return dict(F=f0, f2=f0 * f0, radicand=zero, err_F=zero, err_f2=zero,
                    n_evals=1, panels=())
    dom = domain(ensemble)
    kern = _kernel(resource, noise)
    norm = normalization(ensemble)

    # shift: mean on the coarsest rule
    def plain(b, phi, eps):
        return np.vstack([np.ones((1, b.size)), kern(b, phi, eps, gs)])

    coarse, _ = apply_rule(_unit_integrand(dom, plain), [1] * dom.ndim)
    shift = coarse[1:] / coarse[0]

    def shifted(b, phi, eps):
        dev = kern(b, phi, eps, gs) - shift[:, None]
        return np.vstack([np.ones((1, b.size)), dev, dev * dev])

    atol = np.concatenate([[0.0], np.full(m, rtol * norm), np.full(m, 1e-3 * rtol * norm)])
    res = adaptive_gauss_legendre(
        _unit_integrand(dom, shifted), dom.ndim, rtol=rtol, atol=atol, max_evals=max_evals,
        initial_panels=initial_panels, chunk=_chunk(3 * m),
    )
    i0, i1, i2 = res.value[0], res.value[1:m + 1], res.value[m + 1:]
    e0, e1, e2 = res.error[0], res.error[1:m + 1], res.error[m + 1:]
    mean_dev = i1 / i0
    F = shift + mean_dev
    central = i2 / i0
    f2 = shift * shift + 2.0 * shift * mean_dev + central
    radicand = central - mean_dev * mean_dev
    err_F = e1 / i0 + np.abs(i1) * e0 / i0**2
    err_f2 = 2.0 * np.abs(shift) * err_F + e2 / i0 + np.abs(i2) * e0 / i0**2
    return dict(F=F, f2=f2, radicand=radicand, err_F=err_F, err_f2=err_f2,
                n_evals=res.n_evals, panels=res.panels)


def _deviation(radicand):
    if radicand < -RADICAND_TOL:
        raise InconsistentMomentsError(
            f"<f^2> - F^2 = {radicand:.3e}; tighten the quadrature tolerance")
    return math.sqrt(max(0.0, radicand))


def average_fidelity(resource, ensemble, g, noise=NOISELESS, rtol=DEFAULT_RTOL,
                     max_evals=DEFAULT_MAX_EVALS):
    """Ensemble-averaged fidelity at fixed gain; returns ``(F, error)``."""
    out = moment_integrals(resource, ensemble, [g], noise, rtol, max_evals)
    return float(out["F"][0]), float(out["err_F"][0])


def second_moment(resource, ensemble, g, noise=NOISELESS, rtol=DEFAULT_RTOL,
                  max_evals=DEFAULT_MAX_EVALS):
    """Ensemble average of f^2 at fixed gain; returns ``(<f^2>, error)``."""
    out = moment_integrals(resource, ensemble, [g], noise, rtol, max_evals)
    return float(out["f2"][0]), float(out["err_f2"][0])


def fidelity_deviation(resource, ensemble, g, noise=NOISELESS, rtol=DEFAULT_RTOL,
                       max_evals=DEFAULT_MAX_EVALS):
    out = moment_integrals(resource, ensemble, [g], noise, rtol, max_evals)
    return _deviation(float(out["radicand"][0]))


def moments_at(resource, ensemble, g, noise=NOISELESS, rtol=DEFAULT_RTOL,
               max_evals=DEFAULT_MAX_EVALS, initial_panels=None):
    """Both moments at a fixed gain, packaged as a :class:`MomentResult`."""
    out = moment_integrals(resource, ensemble, [g], noise, rtol, max_evals, initial_panels)
    F = min(1.0, max(0.0, float(out["F"][0])))
    return MomentResult(
        F=F, dF=_deviation(float(out["radicand"][0])), g_opt=float(g),
        quad_error_F=float(out["err_F"][0]), quad_error_f2=float(out["err_f2"][0]),
        n_evals=int(out["n_evals"]), f2=float(out["f2"][0]),
    )


def golden_section_max(func, a, b, xtol=GAIN_XTOL):
    """Maximise a unimodal ``func`` on [a, b]; returns ``(x, func(x))``."""
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = func(d)
    return (c, fc) if fc >= fd else (d, fd)


def _gain_scan(resource, ensemble, gs, noise, rtol, max_evals):
    dom = domain(ensemble)
    kern = _kernel(resource, noise)

    def plain(b, phi, eps):
        return np.vstack([np.ones((1, b.size)), kern(b, phi, eps, gs)])

    res = adaptive_gauss_legendre(_unit_integrand(dom, plain), dom.ndim, rtol=rtol,
                                  max_evals=max_evals, chunk=_chunk(gs.size + 1))
    return res.value[1:] / res.value[0], res.panels, res.n_evals


def gain_profile(resource, ensemble, gs, noise=NOISELESS, rtol=DEFAULT_RTOL,
                 max_evals=DEFAULT_MAX_EVALS):
    """Average fidelity on a grid of gains, sharing one set of quadrature nodes.

    Returns ``(F, panels)``; ``panels`` is the converged rule, reusable through
    :func:`fixed_rule_fidelity`.
    """
    gs = np.atleast_1d(np.asarray(gs, dtype=float))
    if ensemble.is_degenerate:
        return _vacuum_fidelity(resource, gs, noise), ()
    values, panels, _ = _gain_scan(resource, ensemble, gs, noise, rtol, max_evals)
    return values, panels


def fixed_rule_fidelity(resource, ensemble, gs, panels, noise=NOISELESS):
    """Average fidelity for gains ``gs`` on a fixed composite rule."""
    gs = np.atleast_1d(np.asarray(gs, dtype=float))
    if ensemble.is_degenerate:
        return _vacuum_fidelity(resource, gs, noise)
    dom = domain(ensemble)
    kern = _kernel(resource, noise)

    def plain(b, phi, eps):
        return np.vstack([np.ones((1, b.size)), kern(b, phi, eps, gs)])

    value, _ = apply_rule(_unit_integrand(dom, plain), panels, chunk=_chunk(gs.size + 1))
    return value[1:] / value[0]


def optimize_gain(resource: ResourceSpec, ensemble: InputEnsemble, noise: NoiseSpec = NOISELESS,
                  rtol=DEFAULT_RTOL, max_evals=DEFAULT_MAX_EVALS, n_grid=GAIN_GRID):
    """Maximise the average fidelity over g in [0, 1].

    A coarse grid brackets the maximum, golden-section search refines it inside
    the bracket, and both moments are then recomputed at the optimum.  The
    deviation is the one belonging to the F-optimal gain.
    """
    grid = np.linspace(0.0, 1.0, n_grid)
    if ensemble.is_degenerate:
        values, panels, n_scan = _vacuum_fidelity(resource, grid, noise), (), n_grid
    else:
        values, panels, n_scan = _gain_scan(resource, ensemble, grid, noise, rtol, max_evals)
    i = int(np.argmax(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]

    def objective(g):
        return float(fixed_rule_fidelity(resource, ensemble, [g], panels, noise)[0])

    g_best, f_best = golden_section_max(objective, lo, hi)
    if values[i] > f_best:
        g_best = float(grid[i])
    g_best = min(1.0, max(0.0, float(g_best)))
    result = moments_at(resource, ensemble, g_best, noise, rtol, max_evals,
                        initial_panels=panels or None)
    return MomentResult(
        F=result.F, dF=result.dF, g_opt=g_best, quad_error_F=result.quad_error_F,
        quad_error_f2=result.quad_error_f2, n_evals=result.n_evals + n_scan, f2=result.f2,
    )


def entanglement_free_baseline(ensemble: InputEnsemble, rtol=DEFAULT_RTOL,
                               max_evals=DEFAULT_MAX_EVALS) -> float:
    """Gain-optimised F of the same protocol with an unsqueezed (r = 0) resource, noiseless."""
    return optimize_gain(ResourceSpec.tmsv(0.0), ensemble, NOISELESS, rtol, max_evals).F


__all__ = [
    "AccuracyError",
    "InconsistentMomentsError",
    "MomentResult",
    "average_fidelity",
    "entanglement_free_baseline",
    "fidelity_deviation",
    "gain_profile",
    "golden_section_max",
    "moment_integrals",
    "moments_at",
    "optimize_gain",
    "second_moment",
]
