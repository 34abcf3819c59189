"""Exact small-n oracles, a Glauber-dynamics baseline, and empirical
optimal-transport metrics.

Everything here is oracle-grade: correctness over speed, capped at
dimensions where full enumeration (2^n states) stays under a minute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from . import rng
from .disorder import (
    ENUMERATION_CAP,
    DisorderTensors,
    GibbsQuery,
    all_spins,
    hamiltonian,
    hamiltonian_table,
)

__all__ = [
    "ExactGibbs",
    "SampleBatch",
    "exact_gibbs",
    "exact_sample",
    "exact_mean_batch",
    "glauber_run",
    "empirical_w2",
    "overlap_moment",
    "write_batch_bits",
    "read_batch_bits",
]

W2_BATCH_CAP = 2000


@dataclass
class ExactGibbs:
    """Exact tilted Gibbs table for one (G, beta, y): log-weights over all
    2^n states (in `all_spins` order), log-partition, mean and covariance."""

    n: int
    beta: float
    y: np.ndarray
    log_weights: np.ndarray  # normalized: logsumexp == 0
    log_z: float
    mean: np.ndarray
    cov: np.ndarray


@dataclass
class SampleBatch:
    """M spin vectors with provenance; entries are +-1 floats."""

    spins: np.ndarray
    provenance: str = "unknown"
    seed: int = 0

    def __post_init__(self):
        self.spins = np.asarray(self.spins, dtype=float)
        if self.spins.ndim != 2 or not np.all(np.abs(self.spins) == 1.0):
            raise ValueError("a batch is a 2-D array of +-1 spins")

    def __len__(self) -> int:
        return self.spins.shape[0]


def exact_gibbs(g: DisorderTensors, beta, y: np.ndarray | None = None) -> ExactGibbs:
    """Enumerate mu(x) ~ exp(beta H(x) + <y, x>) exactly (n <= cap).

    `beta` may also be a GibbsQuery carrying (beta, y) together.
    """
    if isinstance(beta, GibbsQuery):
        beta, y = beta.beta, beta.y
    n = g.n
    if n > ENUMERATION_CAP:
        raise ValueError(f"enumeration cap exceeded: n={n} > {ENUMERATION_CAP}")
    y = np.zeros(n) if y is None else np.asarray(y, dtype=float)
    X = all_spins(n)
    logits = beta * hamiltonian_table(g) + X @ y
    log_z = float(logsumexp(logits))
    logw = logits - log_z
    w = np.exp(logw)
    mean = w @ X
    cov = (X * w[:, None]).T @ X - np.outer(mean, mean)
    return ExactGibbs(n=n, beta=beta, y=y, log_weights=logw, log_z=log_z, mean=mean, cov=cov)


def exact_mean_batch(g: DisorderTensors, beta: float, Y: np.ndarray) -> np.ndarray:
    """Exact tilted means m(G, y) for a batch of tilts Y (rows)."""
    X = all_spins(g.n)
    logits = beta * hamiltonian_table(g)[None, :] + Y @ X.T
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    w /= w.sum(axis=1, keepdims=True)
    return w @ X


def exact_sample(dist: ExactGibbs, M: int, seed: int) -> SampleBatch:
    """M i.i.d. draws by inverse CDF over the exact table."""
    cdf = np.cumsum(np.exp(dist.log_weights))
    cdf[-1] = 1.0
    u = rng.stream(seed, "exact-sample").uniform(size=M)
    idx = np.searchsorted(cdf, u, side="right")
    X = all_spins(dist.n)
    return SampleBatch(spins=X[idx], provenance="exact", seed=seed)


def glauber_run(
    g: DisorderTensors,
    beta: float,
    x0: np.ndarray,
    sweeps: int,
    seed: int,
    burn_in: int = 0,
    thin: int = 1,
) -> SampleBatch:
    """Single-site heat-bath chain, one sweep = n random-site updates.

    The conditional is exact: P(x_i = +1 | rest) = 1/(1 + exp(-beta Delta))
    with Delta = H(x^{i->+}) - H(x^{i->-}).  For a quadratic mixture Delta is
    maintained incrementally through the local field; higher degrees pay two
    Hamiltonian evaluations per update.  States are recorded after `burn_in`
    sweeps, every `thin` sweeps.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = g.n
    if x.shape != (n,) or not np.all(np.abs(x) == 1.0):
        raise ValueError("x0 must be a +-1 vector of length n")
    gen = rng.stream(seed, "glauber")
    quadratic_only = g.active_degrees() == [2]
    if quadratic_only:
        G2 = g.tensors[2]
        S = g.spec.c(2) / math.sqrt(n) * (G2 + G2.T)
        field = S @ x
    out = []
    for sweep in range(sweeps):
        sites = gen.integers(0, n, size=n)
        us = gen.uniform(size=n)
        for i, u in zip(sites, us):
            if quadratic_only:
                delta = 2.0 * (field[i] - S[i, i] * x[i])
            else:
                xp = x.copy()
                xp[i] = 1.0
                xm = x.copy()
                xm[i] = -1.0
                delta = hamiltonian(g, xp) - hamiltonian(g, xm)
            new = 1.0 if u < 1.0 / (1.0 + math.exp(-beta * delta)) else -1.0
            if new != x[i]:
                if quadratic_only:
                    field += S[:, i] * (new - x[i])
                x[i] = new
        if sweep >= burn_in and (sweep - burn_in) % thin == 0:
            out.append(x.copy())
    return SampleBatch(spins=np.array(out), provenance="glauber", seed=seed)


def empirical_w2(a: SampleBatch, b: SampleBatch) -> float:
    """Normalized empirical 2-Wasserstein distance between equal-size batches.

    Exact for empirical measures: optimal assignment under the cost
    ||x - y||^2 / n, returning the square root of the mean matched cost.
    """
    if len(a) != len(b):
        raise ValueError("batches must have equal size")
    if len(a) > W2_BATCH_CAP:
        raise ValueError(f"batch size {len(a)} exceeds the cap {W2_BATCH_CAP}")
    n = a.spins.shape[1]
    cost = (2.0 * n - 2.0 * (a.spins @ b.spins.T)) / n
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(max(cost[rows, cols].mean(), 0.0)))


def overlap_moment(a: SampleBatch, b: SampleBatch) -> float:
    """Mean of squared normalized overlaps over all cross pairs."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("batches must be nonempty")
    n = a.spins.shape[1]
    return float((((a.spins @ b.spins.T) / n) ** 2).mean())


# --- batch serialization: u32 n header, then per sample ceil(n/8) bytes of
# packed sign bits (bit 1 = +1, most significant bit first per byte) --------


def write_batch_bits(path, batch: SampleBatch) -> None:
    n = batch.spins.shape[1]
    bits = ((batch.spins + 1) / 2).astype(np.uint8)
    packed = np.packbits(bits, axis=1)
    with open(path, "wb") as f:
        f.write(int(n).to_bytes(4, "little"))
        f.write(packed.tobytes())


def read_batch_bits(path) -> SampleBatch:
    with open(path, "rb") as f:
        n = int.from_bytes(f.read(4), "little")
        raw = np.frombuffer(f.read(), dtype=np.uint8)
    row_bytes = (n + 7) // 8
    if row_bytes == 0 or raw.size % row_bytes:
        raise ValueError("corrupt batch file")
    rows = raw.reshape(-1, row_bytes)
    bits = np.unpackbits(rows, axis=1)[:, :n]
    return SampleBatch(spins=2.0 * bits.astype(float) - 1.0, provenance="file")
