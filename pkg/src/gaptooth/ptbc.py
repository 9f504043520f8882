"""Patch boundary condition stencils on the macroscopic grid.

A stencil turns macroscopic grid values ``U`` into ``H * du/dx`` at the edge
``X_j + sign * r * H`` of patch ``j``.  Weights are derived exactly from the
operator series and converted to floats once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .opcalc import DeltaSeries, expand_edge_derivative, gamma_truncate, shift_expansion

__all__ = [
    "PtbcStencil",
    "as_fraction",
    "stencil_from_series",
    "make_stencil",
    "stencil_pair",
    "eval_edge_gradient",
    "edge_gradients",
    "exactness_order",
]


def as_fraction(r) -> Fraction:
    """Exact rational for ``r``; floats go through their shortest repr so 0.1 -> 1/10."""
    if isinstance(r, float):
        return Fraction(repr(r))
    return Fraction(r)


@dataclass(frozen=True)
class PtbcStencil:
    order: int
    r: Fraction
    sign: int
    weights: dict[int, float]
    exact_weights: dict[int, Fraction] = field(repr=False, compare=False, default_factory=dict)

    @property
    def offsets(self) -> np.ndarray:
        return np.array(sorted(self.weights), dtype=int)

    @property
    def values(self) -> np.ndarray:
        return np.array([self.weights[k] for k in sorted(self.weights)])

    def to_json(self) -> dict:
        return {
            "p": self.order,
            "r": float(self.r),
            "sign": self.sign,
            "weights": {str(k): self.weights[k] for k in sorted(self.weights)},
        }


def stencil_from_series(s: DeltaSeries, r, sign: int) -> PtbcStencil:
    """Numeric stencil for operator ``s`` evaluated at patch ratio ``r``."""
    r = as_fraction(r)
    if not 0 < r <= Fraction(1, 2):
        raise ValueError(f"r must lie in (0, 1/2], got {r}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if not s.has_integer_shifts():
        raise ValueError("series mixes parities; it needs half-integer grid offsets")
    exact: dict[int, Fraction] = {}
    top = 0
    for k, has_mu, coeff in s.terms():
        c = coeff(r)
        if c == 0:
            continue
        top = max(top, k)
        for off, w in shift_expansion(k, has_mu).items():
            exact[off] = exact.get(off, Fraction(0)) + c * w
    p = (top + 1) // 2
    for k in range(-p, p + 1):
        exact.setdefault(k, Fraction(0))
    return PtbcStencil(
        order=p,
        r=r,
        sign=sign,
        weights={k: float(w) for k, w in sorted(exact.items())},
        exact_weights=dict(sorted(exact.items())),
    )


@lru_cache(maxsize=None)
def _edge_series(sign: int, p: int) -> DeltaSeries:
    return gamma_truncate(expand_edge_derivative(sign, 2 * p), p)


def make_stencil(p: int, r, sign: int) -> PtbcStencil:
    """Order-``p`` stencil (delta powers up to ``2p``) at one edge."""
    if p < 1:
        raise ValueError("stencil order p must be >= 1")
    return stencil_from_series(_edge_series(sign, p), r, sign)


def stencil_pair(p: int, r) -> tuple[PtbcStencil, PtbcStencil]:
    """``(minus_edge, plus_edge)`` stencils of order ``p``."""
    return make_stencil(p, r, -1), make_stencil(p, r, +1)


def eval_edge_gradient(st: PtbcStencil, U, j: int) -> float:
    """``H * du/dx`` at the ``st.sign`` edge of patch ``j``, periodic in ``U``."""
    U = np.asarray(U)
    m = U.shape[-1]
    if m < 2:
        raise ValueError("need at least two patches")
    idx = (j + st.offsets) % m
    return float(np.dot(st.values, U[..., idx]))


def edge_gradients(st: PtbcStencil, U: np.ndarray) -> np.ndarray:
    """Vectorised :func:`eval_edge_gradient` over every patch (last axis of ``U``)."""
    m = U.shape[-1]
    if m < 2:
        raise ValueError("need at least two patches")
    out = np.zeros_like(U, dtype=float)
    for k, w in st.weights.items():
        if w:
            # roll by -k brings U[j+k] to position j
            out += w * np.roll(U, -k, axis=-1)
    return out


def exactness_order(st: PtbcStencil, max_degree: int | None = None) -> int:
    """Largest ``d`` with the stencil exact on every polynomial of degree <= d.

    Checked monomial by monomial on an unbounded grid with ``H = 1`` centred at
    the patch, against ``H q'(X_j + sign r H)``.
    """
    if max_degree is None:
        max_degree = 2 * st.order + 6
    offsets = st.offsets.astype(float)
    w = st.values
    edge = st.sign * float(st.r)
    eps = np.finfo(float).eps
    last = -1
    for d in range(max_degree + 1):
        samples = offsets**d
        got = float(np.dot(w, samples))
        want = d * edge ** (d - 1) if d else 0.0
        scale = float(np.dot(np.abs(w), np.abs(samples))) + abs(want)
        if abs(got - want) > 100 * eps * scale:
            break
        last = d
    return last
