"""Monte Carlo estimate of F and dF, independent of the quadrature engine.

Samples are drawn in fixed-size blocks, each with its own generator spawned from
``SeedSequence(seed)``, so results do not depend on how blocks are spread over
workers.  Block sums are merged with ``math.fsum``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import NOISELESS, fidelity_kernel
from .ensembles import sample_inputs

BLOCK_SIZE = 1 << 16
MIN_SAMPLES = 1000


@dataclass(frozen=True)
class McEstimate:
    F_hat: float
    dF_hat: float
    stderr_F: float
    stderr_dF: float
    n_samples: int
    seed: int


def _block_sums(resource, ensemble, g, noise, seed_seq, n, shift):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    b, phi, eps, _ = sample_inputs(ensemble, rng, n)
    f = np.atleast_1d(fidelity_kernel(resource.r, resource.delta, b, phi, eps, g,
                                      noise.tau, noise.R, resource.lambda2_term))
    d = f - shift
    d2 = d * d
    return d.sum(), d2.sum(), (d2 * d).sum(), (d2 * d2).sum()


def mc_moments(resource, ensemble, g, noise=NOISELESS, n_samples=1_000_000, seed=0,
               workers=1, block_size=BLOCK_SIZE) -> McEstimate:
    """Sample mean and (unbiased) standard deviation of the one-shot fidelity."""
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be at least {MIN_SAMPLES}")
    sizes = [block_size] * (n_samples // block_size)
    if n_samples % block_size:
        sizes.append(n_samples % block_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    shift = float(fidelity_kernel(resource.r, resource.delta, 0.0, 0.0, 0.0, g,
                                  noise.tau, noise.R, resource.lambda2_term))
    jobs = [(resource, ensemble, g, noise, s, n, shift) for s, n in zip(children, sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _block_sums(*a), jobs))
    else:
        parts = [_block_sums(*a) for a in jobs]
    n = n_samples
    s1, s2, s3, s4 = (math.fsum(p[k] for p in parts) for k in range(4))
    mean_d = s1 / n
    # central moments about the sample mean
    m2 = s2 / n - mean_d**2
    m4 = s4 / n - 4 * mean_d * s3 / n + 6 * mean_d**2 * s2 / n - 3 * mean_d**4
    var = max(0.0, m2) * n / (n - 1)
    sd = math.sqrt(var)
    stderr_F = sd / math.sqrt(n)
    if sd > 0:
        stderr_dF = math.sqrt(max(0.0, m4 - m2 * m2) / (4.0 * m2 * n))
    else:
        stderr_dF = 0.0
    return McEstimate(F_hat=shift + mean_d, dF_hat=sd, stderr_F=stderr_F,
                      stderr_dF=stderr_dF, n_samples=n, seed=seed)
