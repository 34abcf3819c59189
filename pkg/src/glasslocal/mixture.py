"""Mixture polynomial xi(t) = sum_p c_p^2 t^p and the binary entropy h.

The mixture is stored through the squared coefficients c_p^2 (the canonical
parameterization: it avoids any sign ambiguity, and c_p is recovered by a
square root only where a tensor has to be scaled).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

__all__ = ["MixtureSpec", "binary_entropy", "binary_entropy_sum"]

#: Largest degree for which dense tensors are supported.
TENSOR_DEGREE_CAP = 4

# Falling factorials p!/(p-k)! for p<=8, k<=4, indexed [p][k].
_MAX_ORDER = 4


@dataclass(frozen=True)
class MixtureSpec:
    """The mixture polynomial via its ordered (p, c_p^2) coefficients.

    `coeffs` must have strictly increasing p >= 2 and nonnegative c_p^2 with
    at least one positive entry.  Degrees beyond `TENSOR_DEGREE_CAP` are
    allowed for scalar-only work and flagged through `scalar_only`.
    """

    coeffs: tuple[tuple[int, float], ...]
    scalar_only: bool = field(init=False)

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("mixture needs at least one coefficient")
        prev = 1
        total = 0.0
        for p, csq in self.coeffs:
            if p != int(p) or p < 2:
                raise ValueError(f"degree p={p} must be an integer >= 2")
            if p <= prev:
                raise ValueError("degrees must be strictly increasing")
            if csq < 0:
                raise ValueError(f"c_{p}^2 = {csq} must be nonnegative")
            prev = p
            total += csq
        if total <= 0:
            raise ValueError("at least one c_p^2 must be positive")
        object.__setattr__(
            self, "coeffs", tuple((int(p), float(c)) for p, c in self.coeffs)
        )
        object.__setattr__(self, "scalar_only", self.degree > TENSOR_DEGREE_CAP)

    @property
    def degree(self) -> int:
        """Maximum degree P."""
        return self.coeffs[-1][0]

    @classmethod
    def sk(cls) -> "MixtureSpec":
        """The quadratic model xi(t) = t^2/2."""
        return cls(((2, 0.5),))

    @classmethod
    def pure(cls, p: int, c_sq: float = 1.0) -> "MixtureSpec":
        """Single-degree model xi(t) = c^2 t^p."""
        return cls(((p, c_sq),))

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureSpec":
        """Parse the JSON form {"2": 0.5, "3": 1.0} mapping p -> c_p^2."""
        items = sorted((int(p), float(c)) for p, c in d.items())
        return cls(tuple(items))

    def to_dict(self) -> dict:
        return {str(p): c for p, c in self.coeffs}

    def c(self, p: int) -> float:
        """Tensor scaling coefficient c_p = sqrt(c_p^2)."""
        for pp, csq in self.coeffs:
            if pp == p:
                return math.sqrt(csq)
        return 0.0

    def xi(self, t, order: int = 0):
        """d^order xi / dt^order at t, exactly from the coefficients.

        Supports order <= 4 (falling-factorial coefficients); t must lie in
        [-1, 1].  Accepts scalars or arrays.
        """
        if order < 0 or order > _MAX_ORDER:
            raise ValueError(f"unsupported derivative order {order} (max {_MAX_ORDER})")
        t_arr = np.asarray(t, dtype=float)
        if np.any(np.abs(t_arr) > 1.0 + 1e-15):
            raise ValueError("xi is only evaluated on [-1, 1]")
        out = np.zeros_like(t_arr)
        for p, csq in self.coeffs:
            if csq == 0.0 or p < order:
                continue
            fall = math.perm(p, order)  # p! / (p-order)!
            out = out + csq * fall * t_arr ** (p - order)
        return out if isinstance(t, np.ndarray) else float(out)

    def xi_hat(self, ell: int) -> float:
        """sum_p c_p^2 p^ell."""
        if ell < 0 or ell > 8:
            raise ValueError("ell must lie in [0, 8]")
        return float(sum(csq * p**ell for p, csq in self.coeffs))


def binary_entropy(m):
    """h(m) = -((1+m)/2)log((1+m)/2) - ((1-m)/2)log((1-m)/2) on [-1, 1].

    The boundary convention h(+-1) = 0 is exact (0 log 0 = 0 via xlogy).
    Accepts scalars or arrays.
    """
    m_arr = np.asarray(m, dtype=float)
    if np.any(np.abs(m_arr) > 1.0):
        raise ValueError("binary entropy requires |m| <= 1")
    a = (1.0 + m_arr) / 2.0
    b = (1.0 - m_arr) / 2.0
    out = -(xlogy(a, a) + xlogy(b, b))
    return out if isinstance(m, np.ndarray) else float(out)


def binary_entropy_sum(m) -> float:
    """sum_i h(m_i) for a vector (or batch, summed over the last axis)."""
    m_arr = np.asarray(m, dtype=float)
    if np.any(np.abs(m_arr) > 1.0):
        raise ValueError("binary entropy requires |m| <= 1")
    a = (1.0 + m_arr) / 2.0
    b = (1.0 - m_arr) / 2.0
    return -(xlogy(a, a) + xlogy(b, b)).sum(axis=-1)
