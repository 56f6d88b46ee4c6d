"""Associated Legendre functions, spherical harmonics and integer-order Bessel functions."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
import numpy.typing as npt

logger = logging.getLogger(__name__)

MAX_DEGREE = 256
BESSEL_SERIES_LIMIT = 8.0
_SERIES_TOLERANCE = 1e-18
_RESCALE_ABOVE = 1e200

RealOrArray = Union[float, np.ndarray]


class DomainError(ValueError):
    """Raised when a special function is evaluated outside its domain."""


def _check_degree(l: int, m: int) -> None:
    if l < 0 or abs(m) > l:
        raise DomainError(f"Invalid degree/order pair l={l}, m={m}")
    if l > MAX_DEGREE:
        raise DomainError(f"Degree {l} exceeds supported maximum {MAX_DEGREE}")


def _as_unit_interval(x: npt.ArrayLike) -> np.ndarray:
    values = np.asarray(x, dtype=float)
    if np.any(np.abs(values) > 1.0 + 1e-14):
        raise DomainError("Legendre argument must lie in [-1, 1]")
    return np.clip(values, -1.0, 1.0)


def _unwrap(values: np.ndarray, like: npt.ArrayLike) -> RealOrArray:
    return values.item() if np.ndim(like) == 0 else values


def normalized_legendre(l: int, k: int, x: npt.ArrayLike) -> RealOrArray:
    """sqrt((l-k)!/(l+k)!) * P_l^k(x) for k >= 0, without the Condon-Shortley phase.

    The normalised recurrence never forms the factorial ratio, so it stays finite
    for every degree up to ``MAX_DEGREE``.
    """

    if k < 0:
        raise DomainError("normalized_legendre expects k >= 0")
    _check_degree(l, k)
    values = _as_unit_interval(x)
    sine = np.sqrt(np.clip(1.0 - values * values, 0.0, None))
    start = math.sqrt(math.prod((2 * j - 1) / (2 * j) for j in range(1, k + 1)))
    previous = start * sine**k
    if l == k:
        return _unwrap(previous, x)
    current = math.sqrt(2 * k + 1) * values * previous
    for degree in range(k + 2, l + 1):
        following = (
            (2 * degree - 1) * values * current
            - math.sqrt((degree + k - 1) * (degree - k - 1)) * previous
        ) / math.sqrt((degree - k) * (degree + k))
        previous, current = current, following
    return _unwrap(current, x)


def _normalisation(l: int, k: int) -> float:
    """sqrt((l-k)!/(l+k)!) for k >= 0."""

    return math.exp(0.5 * (math.lgamma(l - k + 1) - math.lgamma(l + k + 1)))


def assoc_legendre(
    l: int, m: int, x: npt.ArrayLike, *, condon_shortley: bool = True
) -> RealOrArray:
    _check_degree(l, m)
    k = abs(m)
    reduced = np.asarray(normalized_legendre(l, k, x), dtype=float)
    norm = _normalisation(l, k)
    if m >= 0:
        values = reduced / norm
        if condon_shortley and k % 2:
            values = -values
    else:
        values = norm * reduced
        if not condon_shortley and k % 2:
            values = -values
    return _unwrap(values, x)


@dataclass(frozen=True)
class SphHarmConvention:
    """Phase and normalisation choices for spherical harmonics.

    ``Y_l^m = (i^m if unit_phase) * P̄_l^m(cos θ) * exp(phi_sign * i m φ)`` where
    ``P̄_l^m = sqrt((l-m)! / (l+m)!) P_l^m`` comes from :func:`normalized_legendre`,
    taken with or without the Condon-Shortley phase.
    """

    name: str
    condon_shortley: bool
    unit_phase: bool
    phi_sign: int


# Orthonormal under (2l+1) sin θ / (4π) and converging to i^m J_m e^{-imφ}.
VILENKIN = SphHarmConvention(
    name="vilenkin", condon_shortley=False, unit_phase=True, phi_sign=-1
)


def _reduced_harmonic(l: int, m: int, x: np.ndarray, convention: SphHarmConvention) -> np.ndarray:
    """P̄_l^m(x) with the convention's sign for odd and negative orders."""

    k = abs(m)
    reduced = np.asarray(normalized_legendre(l, k, x), dtype=float)
    if m >= 0:
        flip = convention.condon_shortley and k % 2
    else:
        flip = (not convention.condon_shortley) and k % 2
    return -reduced if flip else reduced


def _phase(m: int, phi: np.ndarray, convention: SphHarmConvention) -> np.ndarray:
    prefactor = (1j) ** (m % 4) if convention.unit_phase else 1.0
    return prefactor * np.exp(convention.phi_sign * 1j * m * phi)


def sph_harm(
    l: int,
    m: int,
    theta: npt.ArrayLike,
    phi: npt.ArrayLike,
    *,
    convention: SphHarmConvention = VILENKIN,
) -> Union[complex, np.ndarray]:
    _check_degree(l, m)
    theta_arr, phi_arr = np.broadcast_arrays(
        np.asarray(theta, dtype=float), np.asarray(phi, dtype=float)
    )
    values = _reduced_harmonic(l, m, np.cos(theta_arr), convention) * _phase(m, phi_arr, convention)
    if np.ndim(theta) == 0 and np.ndim(phi) == 0:
        return complex(values)
    return values


def _theta_profile_derivatives(l: int, k: int, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value, first and second θ-derivatives of P̄_l^k(cos θ)."""

    x = np.cos(theta)
    sine = np.sin(theta)
    value = np.asarray(normalized_legendre(l, k, x), dtype=float)
    if k < l:
        upper = np.asarray(normalized_legendre(l, k + 1, x), dtype=float)
    else:
        upper = np.zeros_like(value)
    with np.errstate(divide="ignore", invalid="ignore"):
        cot = x / sine
        first = k * cot * value - math.sqrt((l - k) * (l + k + 1)) * upper
        second = -cot * first - (l * (l + 1) - k * k / (sine * sine)) * value
    return value, first, second


def sph_harm_theta_derivatives(
    l: int, m: int, theta: npt.ArrayLike, phi: npt.ArrayLike
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vilenkin harmonic and its first two θ-derivatives (interior θ only)."""

    _check_degree(l, m)
    theta_arr, phi_arr = np.broadcast_arrays(
        np.asarray(theta, dtype=float), np.asarray(phi, dtype=float)
    )
    value, first, second = _theta_profile_derivatives(l, abs(m), theta_arr)
    phase = _phase(abs(m), np.zeros_like(phi_arr), VILENKIN) * np.exp(-1j * m * phi_arr)
    return value * phase, first * phase, second * phase


def sph_harm_dtheta(l: int, m: int, theta: npt.ArrayLike, phi: npt.ArrayLike) -> np.ndarray:
    return sph_harm_theta_derivatives(l, m, theta, phi)[1]


# --------------------------------------------------------------------------
# Bessel functions


def _bessel_series(order: int, x: np.ndarray) -> np.ndarray:
    half = x / 2.0
    if order == 0:
        term = np.ones_like(x)
    else:
        with np.errstate(divide="ignore"):
            term = np.exp(order * np.log(half) - math.lgamma(order + 1))
    total = term.copy()
    quarter_square = half * half
    for k in range(1, 400):
        term = -term * quarter_square / (k * (k + order))
        total = total + term
        if np.all(np.abs(term) <= _SERIES_TOLERANCE * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _bessel_miller(order: int, x: np.ndarray) -> np.ndarray:
    """Normalised downward recurrence, J_0 + 2 Σ J_2k = 1."""

    scale = max(order, float(x.max()))
    top = 2 * ((int(scale) + 16 + int(math.sqrt(40.0 * scale))) // 2)
    two_over_x = 2.0 / x
    upper = np.zeros_like(x)
    current = np.ones_like(x)
    answer = np.zeros_like(x)
    even_sum = np.zeros_like(x)
    accumulate = False
    for j in range(top, 0, -1):
        lower = j * two_over_x * current - upper
        upper, current = current, lower
        large = np.abs(current) > _RESCALE_ABOVE
        if np.any(large):
            factor = np.where(large, 1.0 / _RESCALE_ABOVE, 1.0)
            current, upper = current * factor, upper * factor
            answer, even_sum = answer * factor, even_sum * factor
        if accumulate:
            even_sum = even_sum + current
        accumulate = not accumulate
        if j == order:
            answer = upper.copy()
    norm = 2.0 * even_sum - current
    if order == 0:
        answer = current
    return answer / norm


def bessel_j(m: int, x: npt.ArrayLike) -> RealOrArray:
    """Bessel function of the first kind of integer order."""

    order = abs(int(m))
    values = np.asarray(x, dtype=float)
    magnitude = np.abs(values)
    flat = magnitude.ravel()
    result = np.empty_like(flat)
    small = flat <= BESSEL_SERIES_LIMIT
    if np.any(small):
        result[small] = _bessel_series(order, flat[small])
    if np.any(~small):
        result[~small] = _bessel_miller(order, flat[~small])
    result = result.reshape(magnitude.shape)
    sign = np.ones_like(result)
    if m < 0 and order % 2:
        sign = -sign
    if order % 2:
        sign = np.where(values < 0, -sign, sign)
    return _unwrap(sign * result, x)


__all__ = [
    "BESSEL_SERIES_LIMIT",
    "DomainError",
    "MAX_DEGREE",
    "SphHarmConvention",
    "VILENKIN",
    "assoc_legendre",
    "bessel_j",
    "normalized_legendre",
    "sph_harm",
    "sph_harm_dtheta",
    "sph_harm_theta_derivatives",
]
