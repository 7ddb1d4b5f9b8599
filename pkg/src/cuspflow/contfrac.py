"""Gauss-map dynamics with honest precision accounting.

A ``PrecisionReal`` is an exact rational ``num/den`` in (0, 1).  Values
sampled at a finite bit budget (or converted from an mpf, which is an
exact dyadic rational) carry a precision budget: every Gauss step
amplifies the initial sampling uncertainty by ``1/x^2``, so the budget is
decremented by the measured ``2 log2(1/x)`` (rounded up, plus a guard
bit).  The expansion halts with an explicit ``exhausted`` flag before the
budget crosses the safety floor, so the coefficient stream never degrades
silently into noise from the dyadic tail.  Values constructed from exact
rationals carry no budget and expand until the rational terminates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import mpmath

from .hyperbolic import Horoball
from .scalar import INFINITY

SAFETY_FLOOR_BITS = 64


class PrecisionExhaustedError(RuntimeError):
    """Operation requested below the precision safety floor."""


@dataclass(frozen=True)
class PrecisionReal:
    """Exact rational in (0, 1) with an optional remaining precision budget.

    ``bits is None`` means the value is an exact rational (no budget
    bookkeeping); otherwise ``bits`` is the remaining budget in bits.
    """

    num: int
    den: int
    bits: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.num < self.den:
            raise ValueError(f"value {self.num}/{self.den} is not in (0, 1)")

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.den)

    @property
    def exact(self) -> bool:
        return self.bits is None

    @classmethod
    def from_fraction(cls, frac) -> "PrecisionReal":
        frac = Fraction(frac)
        return cls(frac.numerator, frac.denominator, None)

    @classmethod
    def from_mpf(cls, x, bits: Optional[int] = None) -> "PrecisionReal":
        """Exact dyadic conversion of an mpf, with a budget (default: its resolution).

        Reads the mantissa tuple directly; wrapping through ``mpmath.mpf``
        would re-round to the ambient working precision.
        """
        if not isinstance(x, mpmath.mpf):
            x = mpmath.mpf(x)
        sign, man, exp, bc = x._mpf_
        if sign or exp >= 0:
            raise ValueError(f"value {x} is not in (0, 1)")
        if bits is None:
            bits = -exp
        return cls(int(man), 1 << (-exp), bits)

    def to_mpf(self, prec: int):
        with mpmath.mp.workprec(prec):
            return mpmath.mpf(self.num) / self.den


def sample_uniform(bits: int, rng) -> PrecisionReal:
    """Uniform draw from (0, 1) at the given dyadic resolution."""
    if bits <= SAFETY_FLOOR_BITS:
        raise ValueError(f"bit budget {bits} is not above the safety floor")
    num = 0
    while num == 0:
        num = rng.getrandbits(bits)
    return PrecisionReal(num, 1 << bits, bits)


def _step_loss(num: int, den: int) -> int:
    # error amplification of one Gauss step is 1/x^2; measure it from the
    # bit lengths of den/num and round up, with one guard bit
    return 2 * max(1, den.bit_length() - num.bit_length() + 1) + 1


def gauss_step(x: PrecisionReal):
    """One step of the Gauss map: ``a = floor(1/x)``, ``x' = 1/x - a``.

    Returns ``(a, x')`` where ``x'`` is None when the rational terminates
    exactly.  Raises ``PrecisionExhaustedError`` when the remaining budget
    is not above the safety floor.
    """
    if x.bits is not None and x.bits <= SAFETY_FLOOR_BITS:
        raise PrecisionExhaustedError(f"remaining budget {x.bits} bits is at the safety floor")
    a, r = divmod(x.den, x.num)
    if r == 0:
        return a, None
    new_bits = None if x.bits is None else x.bits - _step_loss(x.num, x.den)
    return a, PrecisionReal(r, x.num, new_bits)


@dataclass(frozen=True)
class CfExpansion:
    """Continued fraction coefficients plus an honesty flag.

    ``exhausted`` is True when the expansion stopped because the precision
    budget hit the safety floor rather than because the value terminated
    or ``n_max`` was reached.
    """

    coeffs: tuple
    exhausted: bool

    def __len__(self):
        return len(self.coeffs)


def cf_expand(x: PrecisionReal, n_max: int) -> CfExpansion:
    """First ``min(n_max, available)`` continued fraction coefficients of x."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    coeffs = []
    cur = x
    exhausted = False
    while len(coeffs) < n_max:
        if cur.bits is not None and cur.bits <= SAFETY_FLOOR_BITS:
            exhausted = True
            break
        a, cur = gauss_step(cur)
        coeffs.append(a)
        if cur is None:
            break
    return CfExpansion(tuple(coeffs), exhausted)


def convergents(expansion: Union[CfExpansion, Sequence[int]]):
    """Convergents p_k/q_k of ``[0; a1, a2, ...]`` by the standard recurrence."""
    coeffs = expansion.coeffs if isinstance(expansion, CfExpansion) else tuple(expansion)
    if not coeffs:
        raise ValueError("empty expansion has no convergents")
    out = []
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    for a in coeffs:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append(Fraction(p, q))
    return out


def convergent_pairs(coeffs: Iterable[int]):
    """Generator of (p_k, q_k) integer pairs, avoiding Fraction overhead."""
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    for a in coeffs:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        yield p, q


def ford_horoball(frac, eps: float) -> Horoball:
    """Ford horoball at p/q for the flat torus: diameter eps/q^2, weight 1.

    ``eps`` is the squared-length cutoff; at eps = 1 these are the
    classical Ford circles with pairwise disjoint interiors.  The pair
    (1, 0) denotes the cusp at infinity (region y >= 1/eps).
    """
    if not 0 < eps <= 1:
        raise ValueError(f"eps must be in (0, 1], got {eps}")
    if isinstance(frac, tuple):
        p, q = frac
    else:
        frac = Fraction(frac)
        p, q = frac.numerator, frac.denominator
    if math.gcd(p, q) != 1:
        raise ValueError(f"{p}/{q} is not in lowest terms")
    if q == 0:
        return Horoball(INFINITY, eps, 1.0, "1/0")
    if q < 0:
        p, q = -p, -q
    return Horoball(p / q, eps / q**2, 1.0, f"{p}/{q}")


def trimmed_sum(values):
    """Sum minus one occurrence of the maximum."""
    values = list(values)
    if not values:
        raise ValueError("trimmed sum of an empty sequence")
    return sum(values) - max(values)


def dv_statistic(expansion: Union[CfExpansion, Sequence[int]], n: int) -> float:
    """Trimmed coefficient sum over n log n (natural log)."""
    coeffs = expansion.coeffs if isinstance(expansion, CfExpansion) else tuple(expansion)
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if len(coeffs) < n:
        raise ValueError(f"need {n} coefficients, have {len(coeffs)}")
    return float(trimmed_sum(coeffs[:n])) / (n * math.log(n))


DV_LIMIT = 1 / math.log(2)
