"""End-to-end sampler: Euler-discretized localization SDE driven by the
two-stage mean estimator, followed by randomized rounding.

One step of the discretized observation process is

    yhat_{l+1} = yhat_l + mhat(G, yhat_l) delta + sqrt(delta) w_{l+1},

where mhat is the message-passing + natural-gradient mean estimate run with
the precomputed fixed point q_*(beta, l delta).  After L steps the final mean
is rounded coordinatewise to a spin vector.

Brownian increments and rounding uniforms come from per-replica labeled
streams, so replicas are reproducible independently of batching, and runs on
coupled disorder instances share their driving noise exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .disorder import DisorderTensors
from .amp import amp_run
from .state_evolution import q_schedule
from .tap import TapParams, ftap_grad, ngd_run

__all__ = [
    "SamplerParams",
    "SampleRun",
    "mean_estimate",
    "sample",
    "round_spins",
    "simulate_planted_path",
]


@dataclass
class SamplerParams:
    """All knobs of one sampler run; T = L * delta.

    warm_start reuses each step's final natural parameter to seed the next
    step's estimator instead of restarting from zero; it is NOT the canonical
    algorithm (which restarts every step) and exists for speed comparisons.
    """

    beta: float
    delta: float = 0.05
    L: int = 400
    k_amp: int = 30
    k_ngd: int = 100
    eta: float = 0.1
    gamma: float = 1.0
    seed: int = 0
    keep_trajectory: bool = False
    warm_start: bool = False

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.L < 1 or self.k_amp < 1 or self.k_ngd < 1:
            raise ValueError("iteration counts must be >= 1")

    @property
    def T(self) -> float:
        return self.L * self.delta


@dataclass
class SampleRun:
    """Output of one sampler invocation (single replica or a batch)."""

    mean_final: np.ndarray
    x_alg: np.ndarray
    seed: int
    replica: int | None = None
    y_trajectory: np.ndarray | None = None
    final_q: float | np.ndarray = 0.0
    grad_norm_last: float | np.ndarray = 0.0
    q_used: np.ndarray = field(default_factory=lambda: np.zeros(0))
    step_grad_norms: np.ndarray | None = None  # (L+1,) or (L+1, replicas)


def mean_estimate(
    g: DisorderTensors,
    y: np.ndarray,
    beta: float,
    q: float,
    k_amp: int = 30,
    k_ngd: int = 100,
    eta: float = 0.1,
    gamma: float = 1.0,
):
    """Two-stage mean of the tilted measure: message passing, then NGD.

    The natural-parameter handoff is u^0 = z^{k_amp} directly.  Returns the
    final magnetization tanh(u^{k_ngd}); accepts y as a vector or a batch.
    """
    final = amp_run(g, y, beta, k_amp, keep_history=False)[-1]
    params = TapParams(beta=beta, q=q, gamma_reg=gamma, y=np.asarray(y, dtype=float))
    out = ngd_run(g, final.z, params, eta, k_ngd, keep_history=False)[-1]
    return out.m


def round_spins(m: np.ndarray, generator: np.random.Generator) -> np.ndarray:
    """Coordinatewise randomized rounding: P(x_i = +1) = (1 + m_i)/2.

    An ulp of overshoot beyond +-1 (means assembled from normalized weights
    can round to 1 + 2e-16) is clipped; anything larger is rejected.
    """
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) > 1.0 + 1e-9):
        raise ValueError("rounding requires m in [-1, 1]")
    m = np.clip(m, -1.0, 1.0)
    u = generator.uniform(size=m.shape)
    return np.where(u < (1.0 + m) / 2.0, 1.0, -1.0)


def _mean_fn_default(params: SamplerParams):
    def fn(g, Y, q):
        z0 = fn.last_u if params.warm_start else None
        final = amp_run(g, Y, params.beta, params.k_amp, keep_history=False, z_init=z0)[-1]
        tp = TapParams(beta=params.beta, q=q, gamma_reg=params.gamma, y=np.asarray(Y, dtype=float))
        out = ngd_run(g, final.z, tp, params.eta, params.k_ngd, keep_history=False)[-1]
        fn.last_grad_norm = np.atleast_1d(out.grad_norm)
        fn.last_u = np.atleast_2d(out.u)
        return out.m

    fn.last_grad_norm = None
    fn.last_u = None
    return fn


def sample(
    g: DisorderTensors,
    params: SamplerParams,
    n_replicas: int = 1,
    mean_fn=None,
    q_values: np.ndarray | None = None,
    replica_start: int = 0,
) -> SampleRun:
    """Run the full localization sampler.

    Replicas evolve as a batch but each draws its Brownian increments from
    its own (seed, "brownian", replica) stream and rounds with its own
    (seed, "round", replica) stream, so per-replica randomness is independent
    of the batch it runs in; `replica_start` offsets the stream labels so a
    run can be split into chunks.  (Changing the batch partition can still
    move float results by an ulp through BLAS reduction order; callers that
    need byte-stable files must pin the partition, as the CLI does.)  `mean_fn(g, Y, q) -> means` replaces the
    default estimator when given (used by the exact-mean mode at tiny n);
    `q_values` overrides the precomputed schedule.
    """
    n = g.n
    if q_values is None:
        sched = q_schedule(g.spec, params.beta, params.delta, params.L)
        if not np.all(sched.converged):
            raise RuntimeError("q schedule did not converge at every step")
        q_values = sched.values
    if len(q_values) < params.L + 1:
        raise ValueError("q_values must cover ell = 0..L")
    default_estimator = mean_fn is None
    if default_estimator:
        mean_fn = _mean_fn_default(params)

    replicas = range(replica_start, replica_start + n_replicas)
    streams = [rng.stream(params.seed, "brownian", r) for r in replicas]
    round_streams = [rng.stream(params.seed, "round", r) for r in replicas]

    Y = np.zeros((n_replicas, n))
    traj = np.zeros((params.L + 1, n_replicas, n)) if params.keep_trajectory else None
    step_gnorms = np.zeros((params.L + 1, n_replicas)) if default_estimator else None
    sqrt_delta = math.sqrt(params.delta)
    for ell in range(params.L):
        means = np.atleast_2d(mean_fn(g, Y, float(q_values[ell])))
        if step_gnorms is not None:
            step_gnorms[ell] = mean_fn.last_grad_norm
        W = np.stack([s.standard_normal(n) for s in streams])
        Y = Y + means * params.delta + sqrt_delta * W
        if traj is not None:
            traj[ell + 1] = Y

    mean_final = np.atleast_2d(mean_fn(g, Y, float(q_values[params.L])))
    if step_gnorms is not None:
        step_gnorms[params.L] = mean_fn.last_grad_norm
    x_alg = np.stack(
        [round_spins(mean_final[r], round_streams[r]) for r in range(n_replicas)]
    )
    final_q = np.sum(mean_final**2, axis=-1) / n
    if default_estimator:
        tp = TapParams(
            beta=params.beta, q=float(q_values[params.L]), gamma_reg=params.gamma, y=Y
        )
        grad_norm = np.linalg.norm(
            np.atleast_2d(ftap_grad(g, mean_final, tp)), axis=-1
        ) / math.sqrt(n)
    else:
        grad_norm = np.zeros(n_replicas)

    single = n_replicas == 1
    return SampleRun(
        mean_final=mean_final[0] if single else mean_final,
        x_alg=x_alg[0] if single else x_alg,
        seed=params.seed,
        replica=replica_start if single else None,
        y_trajectory=(traj[:, 0] if single else traj) if traj is not None else None,
        final_q=float(final_q[0]) if single else final_q,
        grad_norm_last=float(grad_norm[0]) if single else grad_norm,
        q_used=np.asarray(q_values[: params.L + 1]),
        step_grad_norms=(
            (step_gnorms[:, 0] if single else step_gnorms) if step_gnorms is not None else None
        ),
    )


def simulate_planted_path(
    x: np.ndarray, times: np.ndarray, seed: int, replica: int = 0
) -> np.ndarray:
    """Observation path y(t) = t x + B(t) on an increasing time grid.

    Increments are N(0, dt I) draws from the (seed, "path", replica) stream;
    coupled runs sharing (seed, replica) reuse them exactly.  A grid point
    t = 0 yields y = 0.
    """
    x = np.asarray(x, dtype=float)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be strictly increasing and nonnegative")
    g = rng.stream(seed, "path", replica)
    n = x.size
    ys = np.zeros((times.size, n))
    t_prev = 0.0
    b = np.zeros(n)
    for i, t in enumerate(times):
        dt = t - t_prev
        if dt > 0:
            b = b + math.sqrt(dt) * g.standard_normal(n)
        ys[i] = t * x + b
        t_prev = t
    return ys
