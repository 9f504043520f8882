"""Exact formal-series calculus in the centred operators mu and delta.

A :class:`DeltaSeries` is a truncated series

    sum_k plain[k] * delta**k + sum_k mu[k] * mu * delta**k,   k = 0..order

whose coefficients are polynomials in the patch ratio ``r`` with rational
coefficients.  Products are reduced with the identity ``mu**2 = 1 + delta**2/4``
so every series carries at most one factor of ``mu`` per term.

All arithmetic is exact (:class:`fractions.Fraction`); nothing in this module
touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Sequence

__all__ = [
    "RPoly",
    "DeltaSeries",
    "series_add",
    "series_mul",
    "asinh_series",
    "binomial_power",
    "expand_edge_derivative",
    "gamma_truncate",
    "shift_expansion",
]

DEFAULT_ORDER = 8


def _strip(coeffs: Iterable) -> tuple[Fraction, ...]:
    out = [Fraction(c) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class RPoly:
    """Polynomial in ``r`` with rational coefficients; ``coeffs[i]`` multiplies ``r**i``."""

    coeffs: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _strip(self.coeffs))

    @classmethod
    def const(cls, c) -> "RPoly":
        return cls((Fraction(c),))

    @classmethod
    def r(cls) -> "RPoly":
        return cls((Fraction(0), Fraction(1)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "RPoly") -> "RPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return RPoly(tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> "RPoly":
        return RPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "RPoly") -> "RPoly":
        return self + (-other)

    def __mul__(self, other) -> "RPoly":
        if not isinstance(other, RPoly):
            return RPoly(tuple(c * Fraction(other) for c in self.coeffs))
        if self.is_zero() or other.is_zero():
            return RPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return RPoly(tuple(out))

    __rmul__ = __mul__

    def __call__(self, r) -> Fraction:
        """Evaluate at ``r`` (exactly when ``r`` is rational)."""
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * r + c
        return acc

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(f"{c}" if i == 0 else f"{c}*r^{i}")
        return " + ".join(terms)


_ZERO = RPoly()
_ONE = RPoly.const(1)


@dataclass(frozen=True)
class DeltaSeries:
    """Truncated series in ``delta`` with optional single ``mu`` factor per term.

    ``plain[k]`` is the coefficient of ``delta**k`` and ``mu[k]`` the coefficient
    of ``mu * delta**k``.  Terms beyond ``order`` are dropped on construction.
    """

    order: int
    plain: tuple[RPoly, ...]
    mu: tuple[RPoly, ...]

    def __post_init__(self):
        if self.order < 0:
            raise ValueError(f"truncation order must be non-negative, got {self.order}")
        n = self.order + 1
        plain = tuple(self.plain[:n]) + (_ZERO,) * max(0, n - len(self.plain))
        mu = tuple(self.mu[:n]) + (_ZERO,) * max(0, n - len(self.mu))
        object.__setattr__(self, "plain", plain)
        object.__setattr__(self, "mu", mu)

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, order: int = DEFAULT_ORDER) -> "DeltaSeries":
        return cls(order, (), ())

    @classmethod
    def one(cls, order: int = DEFAULT_ORDER) -> "DeltaSeries":
        return cls(order, (_ONE,), ())

    @classmethod
    def term(cls, power: int, coeff=1, has_mu: bool = False,
             order: int = DEFAULT_ORDER) -> "DeltaSeries":
        """Single term ``coeff * [mu] * delta**power``."""
        c = coeff if isinstance(coeff, RPoly) else RPoly.const(coeff)
        row = [_ZERO] * (order + 1)
        if power <= order:
            row[power] = c
        if has_mu:
            return cls(order, (), tuple(row))
        return cls(order, tuple(row), ())

    # -- queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.plain + self.mu)

    def terms(self):
        """Yield ``(delta_power, has_mu, coeff)`` for each nonzero term, ordered by power."""
        for k in range(self.order + 1):
            if not self.mu[k].is_zero():
                yield k, True, self.mu[k]
            if not self.plain[k].is_zero():
                yield k, False, self.plain[k]

    def has_integer_shifts(self) -> bool:
        """True if every term is plain-even or mu-odd, i.e. expands into whole grid shifts."""
        return all(self.plain[k].is_zero() for k in range(1, self.order + 1, 2)) and all(
            self.mu[k].is_zero() for k in range(0, self.order + 1, 2)
        )

    def substitute(self, r) -> "DeltaSeries":
        """Replace ``r`` by the rational number given, leaving constant coefficients."""
        r = Fraction(r)
        return DeltaSeries(
            self.order,
            tuple(RPoly.const(c(r)) for c in self.plain),
            tuple(RPoly.const(c(r)) for c in self.mu),
        )

    def with_order(self, order: int) -> "DeltaSeries":
        return DeltaSeries(order, self.plain, self.mu)

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other: "DeltaSeries") -> "DeltaSeries":
        return series_add(self, other)

    def __neg__(self) -> "DeltaSeries":
        return DeltaSeries(self.order, tuple(-c for c in self.plain), tuple(-c for c in self.mu))

    def __sub__(self, other: "DeltaSeries") -> "DeltaSeries":
        return series_add(self, -other)

    def __mul__(self, other) -> "DeltaSeries":
        if isinstance(other, DeltaSeries):
            return series_mul(self, other)
        return DeltaSeries(
            self.order, tuple(c * other for c in self.plain), tuple(c * other for c in self.mu)
        )

    __rmul__ = __mul__

    # -- serialization ------------------------------------------------

    def to_json(self) -> dict:
        terms = []
        for k, has_mu, c in self.terms():
            coeff = [[f"{q.numerator}/{q.denominator}", i] for i, q in enumerate(c.coeffs) if q]
            terms.append({"delta_power": k, "has_mu": has_mu, "coeff": coeff})
        return {"order": self.order, "terms": terms}

    @classmethod
    def from_json(cls, data: dict) -> "DeltaSeries":
        order = int(data["order"])
        out = cls.zero(order)
        for t in data["terms"]:
            width = max((int(p) for _, p in t["coeff"]), default=-1) + 1
            coeffs = [Fraction(0)] * width
            for q, p in t["coeff"]:
                coeffs[int(p)] += Fraction(q)
            out = out + cls.term(int(t["delta_power"]), RPoly(tuple(coeffs)),
                                 bool(t["has_mu"]), order)
        return out

    def __repr__(self) -> str:
        parts = []
        for k, has_mu, c in self.terms():
            op = ("mu*" if has_mu else "") + (f"d^{k}" if k else "1")
            parts.append(f"({c})*{op}")
        body = " + ".join(parts) if parts else "0"
        return f"DeltaSeries[{self.order}]({body})"


def _check_orders(a: DeltaSeries, b: DeltaSeries):
    if a.order != b.order:
        raise ValueError(f"truncation orders differ: {a.order} != {b.order}")


def series_add(a: DeltaSeries, b: DeltaSeries) -> DeltaSeries:
    _check_orders(a, b)
    return DeltaSeries(
        a.order,
        tuple(x + y for x, y in zip(a.plain, b.plain)),
        tuple(x + y for x, y in zip(a.mu, b.mu)),
    )


def _convolve(x: Sequence[RPoly], y: Sequence[RPoly], order: int, shift: int = 0) -> list[RPoly]:
    # out[i + j + shift] += x[i] * y[j], truncated at ``order``
    out = [_ZERO] * (order + 1)
    for i, xi in enumerate(x):
        if xi.is_zero():
            continue
        for j, yj in enumerate(y):
            k = i + j + shift
            if k > order:
                break
            if not yj.is_zero():
                out[k] = out[k] + xi * yj
    return out


def series_mul(a: DeltaSeries, b: DeltaSeries) -> DeltaSeries:
    """Product truncated at ``delta**order`` with ``mu**2 -> 1 + delta**2/4``."""
    _check_orders(a, b)
    K = a.order
    plain = _convolve(a.plain, b.plain, K)
    mumu = _convolve(a.mu, b.mu, K)
    quarter = _convolve(a.mu, b.mu, K, shift=2)
    plain = [p + q + s * Fraction(1, 4) for p, q, s in zip(plain, mumu, quarter)]
    mixed = [x + y for x, y in zip(_convolve(a.plain, b.mu, K), _convolve(a.mu, b.plain, K))]
    return DeltaSeries(K, tuple(plain), tuple(mixed))


def asinh_series(order: int = DEFAULT_ORDER) -> DeltaSeries:
    """``H d/dx = 2 asinh(delta/2)`` as a series in ``delta``."""
    if order < 1:
        raise ValueError("order must be at least 1")
    plain = [_ZERO] * (order + 1)
    for k in range((order - 1) // 2 + 1):
        c = Fraction((-1) ** k * factorial(2 * k), 16**k * factorial(k) ** 2 * (2 * k + 1))
        plain[2 * k + 1] = RPoly.const(c)
    return DeltaSeries(order, tuple(plain), ())


def _binomial_rpoly(sign: int, k: int) -> RPoly:
    # C(sign*r, k) = prod_{i<k} (sign*r - i) / k!
    acc = _ONE
    for i in range(k):
        acc = acc * RPoly((Fraction(-i), Fraction(sign)))
    return acc * Fraction(1, factorial(k))


def _power_series(w: DeltaSeries, coeff_of_k) -> DeltaSeries:
    if not w.plain[0].is_zero() or not w.mu[0].is_zero():
        raise ValueError("series must have zero constant term")
    K = w.order
    out = DeltaSeries.one(K)
    wk = DeltaSeries.one(K)
    for k in range(1, K + 1):
        wk = wk * w
        if wk.is_zero():
            break
        out = out + wk * coeff_of_k(k)
    return out


def binomial_power(w: DeltaSeries, sign: int, order: int | None = None) -> DeltaSeries:
    """``(1 + w)**(sign*r)`` with ``r`` symbolic, truncated at ``delta**order``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if order is not None:
        w = w.with_order(order)
    return _power_series(w, lambda k: _binomial_rpoly(sign, k))


def _shift_operator_minus_one(order: int) -> DeltaSeries:
    # E - 1 = mu*delta + delta**2/2
    return DeltaSeries.term(1, 1, True, order) + DeltaSeries.term(2, Fraction(1, 2), False, order)


def _inv_sqrt_one_plus_quarter_delta2(order: int) -> DeltaSeries:
    # (1 + delta**2/4)**(-1/2) = 1/mu, as a plain even series
    w = DeltaSeries.term(2, Fraction(1, 4), False, order)
    half = Fraction(-1, 2)
    return _power_series(w, lambda k: RPoly.const(
        Fraction(_falling(half, k), factorial(k))))


def _falling(x: Fraction, k: int) -> Fraction:
    acc = Fraction(1)
    for i in range(k):
        acc *= x - i
    return acc


def expand_edge_derivative(sign: int, order: int = DEFAULT_ORDER) -> DeltaSeries:
    """``E**(sign*r) * H d/dx`` in whole-shift canonical form.

    The raw product of the binomial and asinh series contains only half-grid
    terms (plain odd, mu even); multiplying by ``mu / sqrt(1 + delta**2/4)``,
    which is the identity operator, maps it onto plain-even and mu-odd terms
    that evaluate on the grid values themselves.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    shift = binomial_power(_shift_operator_minus_one(order), sign)
    raw = shift * asinh_series(order)
    mu = DeltaSeries.term(0, 1, True, order)
    return mu * _inv_sqrt_one_plus_quarter_delta2(order) * raw


def gamma_truncate(s: DeltaSeries, p: int) -> DeltaSeries:
    """Keep coupling orders 1..p, i.e. every term with delta power at most ``2p``."""
    if not 1 <= p <= s.order // 2:
        raise ValueError(f"p must lie in 1..{s.order // 2}, got {p}")
    keep = 2 * p + 1
    return DeltaSeries(
        s.order,
        s.plain[:keep] + (_ZERO,) * (s.order + 1 - keep),
        s.mu[:keep] + (_ZERO,) * (s.order + 1 - keep),
    )


def shift_expansion(power: int, has_mu: bool) -> dict[int, Fraction]:
    """Expand ``[mu] delta**power`` into whole grid shifts ``{offset: weight}``.

    Uses ``delta = E^(1/2) - E^(-1/2)`` and ``mu = (E^(1/2) + E^(-1/2))/2``.
    Raises ``ValueError`` for half-integer shifts (plain odd or mu even).
    """
    # work in doubled offsets so half shifts stay integral
    doubled: dict[int, Fraction] = {}
    for j in range(power + 1):
        doubled[power - 2 * j] = Fraction((-1) ** j * comb(power, j))
    if has_mu:
        averaged: dict[int, Fraction] = {}
        for off, w in doubled.items():
            for s in (1, -1):
                averaged[off + s] = averaged.get(off + s, Fraction(0)) + w / 2
        doubled = averaged
    out = {}
    for off, w in doubled.items():
        if w == 0:
            continue
        if off % 2:
            kind = "mu*" if has_mu else ""
            raise ValueError(f"{kind}delta^{power} needs half-integer shifts")
        out[off // 2] = w
    return out
