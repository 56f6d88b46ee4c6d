"""High-precision reference values for the numerical tests (50+ significant digits)."""

from __future__ import annotations

import math
from decimal import Decimal, localcontext
from fractions import Fraction

DIGITS = 50


def bessel_j(m: int, x: float, digits: int = DIGITS) -> Decimal:
    """Σ_k (-1)^k (x/2)^{2k+m} / (k! (k+m)!) summed in decimal arithmetic."""

    order = abs(m)
    with localcontext() as ctx:
        # Extra guard digits absorb the cancellation of the alternating terms.
        ctx.prec = digits + int(abs(x)) + 20
        half = Decimal(x) / 2
        term = half**order / math.factorial(order)
        total = term
        k = 0
        threshold = Decimal(10) ** -(digits + 10)
        while True:
            k += 1
            term = -term * half * half / (k * (k + order))
            total += term
            if abs(term) < threshold and k > abs(x):
                break
        if m < 0 and order % 2:
            total = -total
        return +total


def _legendre_coefficients(l: int, k: int) -> dict[int, Fraction]:
    """Coefficients of d^k/dx^k P_l(x) from the explicit sum."""

    coefficients: dict[int, Fraction] = {}
    for j in range(l // 2 + 1):
        power = l - 2 * j
        if power < k:
            continue
        value = Fraction((-1) ** j * math.comb(l, j) * math.comb(2 * l - 2 * j, l), 2**l)
        value *= math.perm(power, k)
        coefficients[power - k] = coefficients.get(power - k, Fraction(0)) + value
    return coefficients


def normalized_legendre(l: int, k: int, x: float, digits: int = DIGITS) -> Decimal:
    """sqrt((l-k)!/(l+k)!) (1-x²)^{k/2} d^k/dx^k P_l(x), no Condon-Shortley phase."""

    with localcontext() as ctx:
        ctx.prec = digits + 2 * l + 20
        xd = Decimal(x)
        polynomial = sum(
            (Decimal(c.numerator) / Decimal(c.denominator) * xd**p for p, c in _legendre_coefficients(l, k).items()),
            Decimal(0),
        )
        sine_power = (1 - xd * xd).sqrt() ** k if k else Decimal(1)
        ratio = (Decimal(math.factorial(l - k)) / Decimal(math.factorial(l + k))).sqrt()
        return +(ratio * sine_power * polynomial)


def bump_integral(center: float, radius: float, digits: int = 30) -> Decimal:
    """∫ bump(center, radius) dx by the composite Simpson rule in decimals.

    The profile is flat to all orders at ±1, so the rule converges faster than any power.
    """

    with localcontext() as ctx:
        ctx.prec = digits + 10
        panels = 4000
        h = Decimal(2) / panels
        total = Decimal(0)
        for i in range(1, panels):
            u = -1 + i * h
            weight = 4 if i % 2 else 2
            total += weight * (-1 / (1 - u * u)).exp()
        return +(total * h / 3 * Decimal(radius))


__all__ = ["DIGITS", "bessel_j", "bump_integral", "normalized_legendre"]
