"""Disorder-chaos and algorithmic-stability experiment harnesses.

Both interpolate between independent disorder draws, G_s = sqrt(1-s^2) G_0
+ s G_1.  The chaos experiment compares exact Gibbs measures (small n, no
MCMC bias); the stability experiment reruns the sampler on G_0 and G_s with
the same driving noise omega (Brownian increments and rounding uniforms are
keyed by the master seed only, so the coupling is automatic).
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .baselines import SampleBatch, empirical_w2, exact_gibbs, exact_sample, overlap_moment
from .disorder import gen_random, interpolate
from .localization import SamplerParams, sample
from .mixture import MixtureSpec

__all__ = ["chaos_experiment", "stability_experiment"]


def chaos_experiment(
    spec: MixtureSpec,
    n: int,
    beta: float,
    s_list,
    seeds,
    batch_size: int = 200,
) -> list[dict]:
    """Cross-overlap and W2 statistics between mu_{G_0} and mu_{G_s}.

    Exact sampling throughout.  Returns one row per (s, seed) with the
    squared-overlap moment and the empirical W2 between the two batches.
    """
    rows = []
    for seed in seeds:
        g0 = gen_random(spec, n, int(seed))
        g1 = gen_random(spec, n, int(seed) + 1_000_003)
        dist0 = exact_gibbs(g0, beta)
        batch0 = exact_sample(dist0, batch_size, seed=int(seed) * 2 + 1)
        for s in s_list:
            gs = interpolate(g0, g1, float(s))
            dists = exact_gibbs(gs, beta)
            batchs = exact_sample(dists, batch_size, seed=int(seed) * 2 + 2)
            rows.append(
                {
                    "s": float(s),
                    "seed": int(seed),
                    "overlap_moment": overlap_moment(batch0, batchs),
                    "w2": empirical_w2(batch0, batchs),
                }
            )
    return rows


def stability_experiment(
    spec: MixtureSpec,
    n: int,
    beta: float,
    s_list,
    params: SamplerParams,
    seeds,
    n_replicas: int = 8,
    beta_prime_list=None,
) -> list[dict]:
    """Output sensitivity of the sampler under coupled perturbations.

    For each s (disorder mode) or beta' (temperature mode, when
    `beta_prime_list` is given) the sampler runs on the base and perturbed
    instances with identical omega; rows report the mean squared spin
    distance (1/n) E||x0 - xs||^2 and its mean-vector analogue.
    """
    temperature_mode = beta_prime_list is not None
    values = list(beta_prime_list) if temperature_mode else list(s_list)
    rows = []
    for seed in seeds:
        g0 = gen_random(spec, n, int(seed))
        g1 = gen_random(spec, n, int(seed) + 1_000_003)
        base = replace(params, beta=beta, seed=int(seed))
        run0 = sample(g0, base, n_replicas=n_replicas)
        x0 = np.atleast_2d(run0.x_alg)
        m0 = np.atleast_2d(run0.mean_final)
        for v in values:
            if temperature_mode:
                g_pert, pert = g0, replace(base, beta=float(v))
            else:
                g_pert, pert = interpolate(g0, g1, float(v)), base
            run_s = sample(g_pert, pert, n_replicas=n_replicas)
            xs = np.atleast_2d(run_s.x_alg)
            ms = np.atleast_2d(run_s.mean_final)
            rows.append(
                {
                    ("beta_prime" if temperature_mode else "s"): float(v),
                    "seed": int(seed),
                    "spin_distance": float(np.mean(np.sum((x0 - xs) ** 2, axis=-1)) / n),
                    "mean_distance": float(np.mean(np.sum((m0 - ms) ** 2, axis=-1)) / n),
                }
            )
    return rows
