"""Classical high-order periodic discretisation of ``u_t = u_xx - c u_x - b u_xxx - a u_xxxx``.

Used as an independent oracle for the slow spectrum of the patch scheme.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError
from .opcalc import expand_edge_derivative, shift_expansion
from .ptbc import as_fraction

__all__ = [
    "MacroOperator",
    "macro_weights",
    "macro_stencil",
    "macro_eigenvalues",
    "symbol_eigenvalues",
    "diffusion_truncation_estimate",
    "write_spectrum_csv",
]

# (delta power, has_mu, coefficient) per coupling order 1, 2, 3
_DIFFUSION = [[(2, False, Fraction(1))], [(4, False, Fraction(-1, 12))], [(6, False, Fraction(1, 90))]]
_ADVECTION = [[(1, True, Fraction(1))], [(3, True, Fraction(-1, 6))], [(5, True, Fraction(1, 30))]]
_DISPERSION = [[], [(3, True, Fraction(1))], [(5, True, Fraction(-1, 4))]]
_FOURTH = [[], [(4, False, Fraction(1))], [(6, False, Fraction(-1, 6))]]


@dataclass(frozen=True)
class MacroOperator:
    matrix: np.ndarray
    weights: dict[int, float]
    p: int
    a: float
    b: float
    c: float
    H: float

    @property
    def m(self) -> int:
        return self.matrix.shape[0]


def _exact_weights(terms, p: int) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for group in terms[:p]:
        for power, has_mu, coeff in group:
            for off, w in shift_expansion(power, has_mu).items():
                out[off] = out.get(off, Fraction(0)) + coeff * w
    return out


def macro_weights(p: int, a: float = 0.0, b: float = 0.0, c: float = 0.0,
                  H: float = 1.0) -> dict[int, float]:
    """Grid-offset weights of the right-hand side for ``U_j``."""
    if p not in (1, 2, 3):
        raise ConfigError(f"p must be 1, 2 or 3, got {p}")
    weights: dict[int, float] = {}
    for terms, scale in ((_DIFFUSION, 1.0 / H**2), (_ADVECTION, -c / H),
                         (_DISPERSION, -b / H**3), (_FOURTH, -a / H**4)):
        if scale == 0.0:
            continue
        for off, w in _exact_weights(terms, p).items():
            weights[off] = weights.get(off, 0.0) + scale * float(w)
    return dict(sorted(weights.items()))


def macro_stencil(p: int, m: int, a: float = 0.0, b: float = 0.0, c: float = 0.0,
                  H: float | None = None) -> MacroOperator:
    """Periodic ``m x m`` banded operator; ``H`` defaults to ``2 pi / m``."""
    if H is None:
        H = 2 * math.pi / m
    weights = macro_weights(p, a, b, c, H)
    half = max(abs(k) for k in weights)
    if m < 2 * half + 1:
        raise ConfigError(f"m={m} is too small for a stencil of half-width {half}")
    A = np.zeros((m, m))
    rows = np.arange(m)
    for off, w in weights.items():
        A[rows, (rows + off) % m] += w
    return MacroOperator(A, weights, p, a, b, c, H)


def symbol_eigenvalues(op: MacroOperator) -> np.ndarray:
    """Eigenvalues from the circulant symbol at wavenumbers ``k = 0..m-1``."""
    theta = 2 * math.pi * np.arange(op.m) / op.m
    lam = np.zeros(op.m, dtype=complex)
    # every term is a difference operator, so the weights sum to zero exactly
    for off, w in op.weights.items():
        lam += w * np.expm1(1j * off * theta)
    return lam


def macro_eigenvalues(op: MacroOperator, method: str = "symbol") -> np.ndarray:
    """All ``m`` eigenvalues, sorted by descending real part."""
    if method == "symbol":
        lam = symbol_eigenvalues(op)
    elif method == "dense":
        lam = np.linalg.eigvals(op.matrix).astype(complex)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return lam[np.lexsort((-lam.imag, -lam.real))]


def diffusion_truncation_estimate(order: int, k: int, H: float, r=None) -> float:
    """Size of the first omitted term in the diffusion rate of wavenumber ``k``.

    With ``r`` the patch scheme's omitted edge-gradient term is used (its
    ``delta**(order+2)`` coefficient divided by ``r``); without it, the
    classical limit ``r -> 0``.
    """
    q = order + 2
    coeff = expand_edge_derivative(+1, q).plain[q]
    if r is None:
        c = coeff.coeffs[1] if len(coeff.coeffs) > 1 else Fraction(0)
    else:
        r = as_fraction(r)
        c = coeff(r) / r
    return abs(float(c)) * (2 * math.sin(k * H / 2)) ** q / H**2


def write_spectrum_csv(lam, fh, dt: float | None = None) -> None:
    """Same columns as the patch spectrum; ``abs_mu`` is ``|exp(lambda dt)|`` when ``dt`` given."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "re_lambda", "im_lambda", "abs_mu", "group"])
    for i, z in enumerate(lam):
        amu = "" if dt is None else f"{math.exp(z.real * dt):.17g}"
        w.writerow([i + 1, f"{z.real:.12g}", f"{z.imag:.12g}", amu, 0])
