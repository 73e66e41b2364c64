"""Adaptive composite Gauss-Legendre quadrature on the unit hypercube.

Each dimension is split into equal panels carrying a fixed-order Gauss-Legendre
rule.  Refinement is per dimension: the panel count of a dimension is doubled
whenever doing so still moves the estimate by more than the tolerance.  The
integrand may be vector valued, which lets several moments (or several gains)
share one set of nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_ORDER = 10
DEFAULT_RTOL = 1e-7
DEFAULT_MAX_EVALS = 10_000_000


class AccuracyError(RuntimeError):
    """Tolerance not reached within the evaluation budget.

    The best available estimate and its error estimate are attached.
    """

    def __init__(self, message, estimate=None, error=None, n_evals=0):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.n_evals = n_evals


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray
    error: np.ndarray
    n_evals: int
    panels: tuple


@lru_cache(maxsize=64)
def _panel_rule(panels: int, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    edges = np.arange(panels, dtype=float) / panels
    nodes = (edges[:, None] + x[None, :] / panels).ravel()
    weights = np.tile(w / panels, panels)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def tensor_rule(panels, order=DEFAULT_ORDER):
    """Nodes (ndim, n) and weights (n,) of the composite tensor rule on [0, 1]^ndim."""
    rules = [_panel_rule(int(p), order) for p in panels]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([gr.ravel() for gr in grids])
    weights = np.prod(np.stack([wg.ravel() for wg in wgrids]), axis=0)
    return nodes, weights


def apply_rule(func, panels, order=DEFAULT_ORDER, chunk=1 << 16):
    """Integrate ``func`` with a fixed composite rule.

    ``func`` maps nodes of shape (ndim, n) to values of shape (m, n).
    """
    nodes, weights = tensor_rule(panels, order)
    n = weights.size
    total = None
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        vals = np.atleast_2d(func(nodes[:, start:stop]))
        part = vals @ weights[start:stop]
        total = part if total is None else total + part
    return total, n


def adaptive_gauss_legendre(func, ndim, rtol=DEFAULT_RTOL, atol=0.0,
                            max_evals=DEFAULT_MAX_EVALS, order=DEFAULT_ORDER,
                            initial_panels=None, max_panels=4096, chunk=1 << 16):
    """Integrate a vector-valued ``func`` over [0, 1]^ndim.

    Component k has converged when doubling the panels of every dimension moves
    it by at most ``rtol * |I_k| + atol_k``.  ``atol`` may be a scalar or a
    per-component array.  The reported error is the sum over dimensions of
    those last changes.
    """
    panels = list(initial_panels or [1] * ndim)
    if len(panels) != ndim:
        raise ValueError("initial_panels must have one entry per dimension")
    n_evals = 0
    estimate, n = apply_rule(func, panels, order, chunk)
    n_evals += n
    atol = np.broadcast_to(np.asarray(atol, dtype=float), estimate.shape)
    while True:
        changes, trials = [], []
        for d in range(ndim):
            trial = list(panels)
            trial[d] *= 2
            value, n = apply_rule(func, trial, order, chunk)
            n_evals += n
            trials.append(value)
            changes.append(np.abs(value - estimate))
        changes = np.array(changes)
        tol = rtol * np.abs(estimate) + atol
        error = changes.sum(axis=0)
        if np.all(error <= tol):
            return QuadResult(estimate, error, n_evals, tuple(panels))
        refine = [d for d in range(ndim) if np.any(changes[d] > tol / ndim)]
        if not refine:
            refine = [int(np.argmax((changes / np.maximum(tol, 1e-300)).max(axis=1)))]
        next_panels = list(panels)
        for d in refine:
            next_panels[d] *= 2
        next_size = int(np.prod(next_panels)) * order**ndim
        if n_evals + next_size * (ndim + 1) > max_evals or max(next_panels) > max_panels:
            raise AccuracyError(
                f"quadrature did not reach rtol={rtol:g} within {max_evals} evaluations",
                estimate=estimate, error=error, n_evals=n_evals,
            )
        panels = next_panels
        if len(refine) == 1:
            estimate = trials[refine[0]]
        else:
            estimate, n = apply_rule(func, panels, order, chunk)
            n_evals += n
