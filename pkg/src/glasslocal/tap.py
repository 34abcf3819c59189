"""Quadratically-modified TAP free energy and natural gradient descent.

The functional over magnetizations m in (-1,1)^n is

    F(m; y, q) = -beta H(m) - <y, m> - sum_i h(m_i)
                 - n [ons(q) + ons'(q) (Q(m) - q)]
                 + (n Gamma beta / 8) (Q(m) - q)^2,

with Q(m) = ||m||^2/n and the per-site Onsager term
ons(Q) = (beta^2/2)(xi(1) - xi(Q) - (1-Q) xi'(Q)).  NGD performs plain
gradient steps in the natural parameter u = atanh(m), which is mirror
descent under the binary-entropy Bregman divergence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .disorder import HESSIAN_CAP, DisorderTensors, grad, hamiltonian, hessian
from .mixture import MixtureSpec, binary_entropy_sum

__all__ = [
    "TapParams",
    "TapIterate",
    "ons",
    "ons_prime",
    "ftap_value",
    "ftap_grad",
    "ftap_hessian",
    "relative_hessian_extremes",
    "bregman",
    "ngd_run",
]

logger = logging.getLogger(__name__)

#: tanh(u) is pulled inside +-(1 - BOUNDARY_MARGIN) before any atanh/entropy
#: evaluation, keeping every iterate strictly interior.
BOUNDARY_MARGIN = 1e-12


@dataclass
class TapParams:
    """Linearization point q, regularization weight Gamma, and the tilt y."""

    beta: float
    q: float
    gamma_reg: float
    y: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise ValueError("q must lie in [0, 1)")
        if not np.isfinite(self.gamma_reg) or self.gamma_reg < 0:
            raise ValueError("gamma_reg must be finite and nonnegative")
        self.y = np.asarray(self.y, dtype=float)
        if not np.all(np.isfinite(self.y)):
            raise ValueError("y must be finite")


@dataclass
class TapIterate:
    """NGD iterate: m = tanh(u) exactly, with cached value and grad norm."""

    u: np.ndarray
    m: np.ndarray
    ftap: float | np.ndarray
    grad_norm: float | np.ndarray


def ons(spec: MixtureSpec, beta: float, Q) -> float:
    """Per-site Onsager term (beta^2/2)(xi(1) - xi(Q) - (1-Q) xi'(Q))."""
    Qa = np.asarray(Q, dtype=float)
    out = 0.5 * beta * beta * (spec.xi(1.0) - spec.xi(Qa) - (1.0 - Qa) * spec.xi(Qa, order=1))
    return float(out) if np.ndim(Q) == 0 else out


def ons_prime(spec: MixtureSpec, beta: float, Q) -> float:
    """d ons / dQ = -(beta^2/2)(1-Q) xi''(Q) (matches finite differences)."""
    Qa = np.asarray(Q, dtype=float)
    out = -0.5 * beta * beta * (1.0 - Qa) * spec.xi(Qa, order=2)
    return float(out) if np.ndim(Q) == 0 else out


def _interior_batch(m: np.ndarray, n: int):
    M = np.asarray(m, dtype=float)
    if M.shape[-1] != n:
        raise ValueError(f"dimension mismatch: expected vectors of length {n}")
    if np.any(np.abs(M) >= 1.0):
        raise ValueError("m must lie strictly inside (-1, 1)^n")
    single = M.ndim == 1
    return (M[None, :] if single else M), single


def ftap_value(g: DisorderTensors, m: np.ndarray, params: TapParams):
    """Value of the modified free energy at interior m (vector or batch)."""
    M, single = _interior_batch(m, g.n)
    n = g.n
    beta, q, gam = params.beta, params.q, params.gamma_reg
    Q = np.sum(M * M, axis=-1) / n
    # the tilt supports y as a shared (n,) vector or per-row (M, n)
    y = params.y
    tilt = np.sum(M * y, axis=-1) if y.ndim > 1 else M @ y
    val = (
        -beta * np.atleast_1d(hamiltonian(g, M))
        - tilt
        - binary_entropy_sum(M)
        - n * (ons(g.spec, beta, q) + ons_prime(g.spec, beta, q) * (Q - q))
        + n * gam * beta / 8.0 * (Q - q) ** 2
    )
    return float(val[0]) if single else val


def ftap_grad(g: DisorderTensors, m: np.ndarray, params: TapParams):
    """Gradient: -beta grad H - y + atanh(m) + beta^2 (1-q) xi''(q) m
    + (Gamma beta / 2)(Q(m) - q) m."""
    M, single = _interior_batch(m, g.n)
    beta, q, gam = params.beta, params.q, params.gamma_reg
    Q = np.sum(M * M, axis=-1) / g.n
    out = (
        -beta * grad(g, M)
        - params.y
        + np.arctanh(M)
        + (beta * beta * (1.0 - q) * g.spec.xi(q, order=2)) * M
        + (0.5 * gam * beta) * (Q - q)[:, None] * M
    )
    return out[0] if single else out


def ftap_hessian(g: DisorderTensors, m: np.ndarray, params: TapParams) -> np.ndarray:
    """Hessian: -beta hess H + D(m) + (beta^2(1-q)xi''(q)
    + (Gamma beta/2)(Q-q)) I + (Gamma beta / n) m m^T, D = diag(1/(1-m_i^2))."""
    if g.n > HESSIAN_CAP:
        raise ValueError(f"Hessian cap exceeded: n={g.n} > {HESSIAN_CAP}")
    M, _ = _interior_batch(m, g.n)
    mv = M[0]
    beta, q, gam = params.beta, params.q, params.gamma_reg
    Q = float(mv @ mv) / g.n
    H = -beta * hessian(g, mv)
    H[np.diag_indices(g.n)] += 1.0 / (1.0 - mv * mv)
    H[np.diag_indices(g.n)] += beta * beta * (1.0 - q) * g.spec.xi(q, order=2) + 0.5 * gam * beta * (
        Q - q
    )
    H += (gam * beta / g.n) * np.outer(mv, mv)
    return H


def relative_hessian_extremes(
    g: DisorderTensors, m: np.ndarray, params: TapParams
) -> tuple[float, float]:
    """Extreme eigenvalues of D(m)^{-1/2} hess F D(m)^{-1/2}."""
    M, _ = _interior_batch(m, g.n)
    mv = M[0]
    H = ftap_hessian(g, mv, params)
    d_inv_sqrt = np.sqrt(1.0 - mv * mv)
    A = H * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]
    w = np.linalg.eigvalsh(A)
    return float(w[0]), float(w[-1])


def bregman(m: np.ndarray, nvec: np.ndarray) -> float:
    """Bregman divergence of the negative binary entropy:
    D(m, n) = -h(m) + h(n) + <grad h(n), m - n>, grad h(n) = -atanh(n)."""
    m = np.asarray(m, dtype=float)
    nvec = np.asarray(nvec, dtype=float)
    if np.any(np.abs(m) >= 1.0) or np.any(np.abs(nvec) >= 1.0):
        raise ValueError("bregman requires interior points")
    return float(
        -binary_entropy_sum(m)
        + binary_entropy_sum(nvec)
        - np.arctanh(nvec) @ (m - nvec)
    )


def _clip_interior(m: np.ndarray) -> np.ndarray:
    return np.clip(m, -1.0 + BOUNDARY_MARGIN, 1.0 - BOUNDARY_MARGIN)


def ngd_run(
    g: DisorderTensors,
    u0: np.ndarray,
    params: TapParams,
    eta: float,
    K: int,
    keep_history: bool = True,
    max_halvings: int = 30,
) -> list[TapIterate]:
    """Natural gradient descent u <- u - eta grad F(tanh(u)) for K steps.

    If a step increases F, its learning rate is halved and the step retried
    (at most `max_halvings` times, per batch row); the next step resumes at
    the nominal eta.  Iterates are therefore nonincreasing in F up to the
    floating-point resolution of the value (1e-12 relative: a converged
    iterate's value jitters by an ulp, which must not trip the safeguard);
    an increase beyond that after all halvings raises.  `u0` may be a vector
    or a batch (M, n); rows evolve independently, so results do not depend
    on how a batch is split.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if K < 1:
        raise ValueError("K must be >= 1")
    U = np.asarray(u0, dtype=float)
    single = U.ndim == 1
    if single:
        U = U[None, :]
    M = _clip_interior(np.tanh(U))
    f = np.atleast_1d(ftap_value(g, M, params))

    def _mk_state(U, Mm, f):
        gnorm = np.linalg.norm(np.atleast_2d(ftap_grad(g, Mm, params)), axis=-1)
        return TapIterate(
            u=U[0] if single else U,
            m=Mm[0] if single else Mm,
            ftap=float(f[0]) if single else f,
            grad_norm=float(gnorm[0]) if single else gnorm,
        )

    states: list[TapIterate] = []
    for k in range(K):
        gvec = np.atleast_2d(ftap_grad(g, M, params))
        if not np.all(np.isfinite(gvec)):
            raise FloatingPointError(f"NGD gradient non-finite at step k={k}")
        eta_row = np.full(f.shape, eta)
        noise_tol = 1e-12 * (1.0 + np.abs(f))
        for attempt in range(max_halvings + 1):
            U_try = U - eta_row[:, None] * gvec
            M_try = _clip_interior(np.tanh(U_try))
            f_try = np.atleast_1d(ftap_value(g, M_try, params))
            bad = f_try > f + noise_tol
            if not np.any(bad):
                break
            if attempt == max_halvings:
                raise RuntimeError(
                    f"NGD safeguard exhausted at step k={k} after {max_halvings} halvings"
                )
            eta_row[bad] *= 0.5
            logger.debug("NGD k=%d: halved eta on %d row(s)", k, int(bad.sum()))
        U, M, f = U_try, M_try, f_try
        if not np.all(np.isfinite(U)):
            raise FloatingPointError(f"NGD produced a non-finite iterate at step k={k}")
        if keep_history:
            states.append(_mk_state(U, M, f))
    if not keep_history:
        states = [_mk_state(U, M, f)]
    return states
