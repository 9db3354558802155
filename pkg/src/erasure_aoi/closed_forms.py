"""Closed-form policies, asymptotic optima and bounds.

Every formula here has an engine counterpart in :mod:`erasure_aoi.analytic`;
where both exist the engine value is the one returned, and printed formulas
are kept only for auditing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from erasure_aoi.analytic import average_aoi, update_moments
from erasure_aoi.policy import ErasureChannel, Policy


@dataclass(frozen=True)
class AoiBounds:
    lower: float
    upper: float


@dataclass(frozen=True)
class ZeroErrorAudit:
    """Engine value of the drop-on-any-erasure policy next to two literal formulas.

    ``printed`` evaluates the literal closed form as written; ``sign_corrected``
    flips the sign of the ``(2K+1)eps/(1-eps)^K`` numerator term, which makes it
    agree with the engine.
    """

    k: int
    epsilon: float
    engine: float
    printed: float
    sign_corrected: float

    @property
    def printed_matches(self) -> bool:
        return math.isclose(self.printed, self.engine, rel_tol=1e-9, abs_tol=1e-9)

    @property
    def corrected_matches(self) -> bool:
        return math.isclose(self.sign_corrected, self.engine, rel_tol=1e-9, abs_tol=1e-9)

    def report(self) -> str:
        verdict = "agrees" if self.printed_matches else "DISAGREES"
        return (
            f"zero-error AoI K={self.k} eps={self.epsilon:g}: engine={self.engine:.12g}, "
            f"printed formula={self.printed:.12g} ({verdict}), "
            f"sign-corrected formula={self.sign_corrected:.12g}"
        )


def _check_k(k: int) -> None:
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"K must be a positive integer, got {k!r}")


def ceil_int(x: float, rel_tol: float = 1e-12) -> int:
    """Ceiling that snaps values within rounding noise of an integer onto it.

    ``1 / (1 - 0.8)`` evaluates to 5.000000000000001 in binary floating point;
    a literal ceiling would return 6.
    """
    r = round(x)
    if abs(x - r) <= rel_tol * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def zero_error_aoi(k: int, channel: ErasureChannel) -> float:
    _check_k(k)
    if channel.epsilon == 0.0:
        return 1.5 * k
    return average_aoi(update_moments(Policy.all_ones(k), channel))


def _zero_error_literal(k: int, eps: float, sign: float) -> float:
    a = 1.0 / (1.0 - eps) ** k
    first = (a - (1.0 + k * eps)) / (2.0 * eps)
    second = (a * a + sign * (2.0 * k * eps + eps) * a + eps - 1.0) / (a - 1.0) / (2.0 * eps)
    return 1.5 * k + first + second


def zero_error_aoi_printed(k: int, channel: ErasureChannel) -> float:
    """The literal zero-error closed form evaluated as written (requires eps > 0)."""
    _check_k(k)
    if channel.epsilon == 0.0:
        raise ValueError("the printed expression divides by epsilon; use eps > 0")
    return _zero_error_literal(k, channel.epsilon, +1.0)


def zero_error_audit(k: int, channel: ErasureChannel) -> ZeroErrorAudit:
    return ZeroErrorAudit(
        k=k,
        epsilon=channel.epsilon,
        engine=zero_error_aoi(k, channel),
        printed=zero_error_aoi_printed(k, channel),
        sign_corrected=_zero_error_literal(k, channel.epsilon, -1.0),
    )


def infinite_error_aoi(k: int, channel: ErasureChannel) -> float:
    _check_k(k)
    eps = channel.epsilon
    return 1.5 * k + eps * (3 * k + 1) / (2.0 * (1.0 - eps))


def small_eps_optimal_policy(k: int) -> Policy:
    """First-order optimal caps as eps -> 0, using 2 wherever any cap > 1 is optimal."""
    _check_k(k)
    if k == 1:
        return Policy((1,))
    if k == 2:
        return Policy((1, 2))
    return Policy((1, 1) + (2,) * (k - 2))


def small_eps_optimal_aoi(k: int, channel: ErasureChannel) -> float:
    """First-order optimal average AoI as eps -> 0 (K=1 and K=2 have their own branches)."""
    _check_k(k)
    eps = channel.epsilon
    if k == 1:
        return 1.5 + eps
    if k == 2:
        return 3.0 + 2.5 * eps
    return 1.5 * k + eps * (3 * k * k - 2 * k + 3) / (2.0 * k)


def aoi_bounds(k: int, channel: ErasureChannel) -> AoiBounds:
    _check_k(k)
    eps = channel.epsilon
    scale = k / (1.0 - eps)
    return AoiBounds(
        lower=scale * (1.0 + (1.0 - eps) ** k / 2.0),
        upper=scale * (1.5 + eps / (2.0 * k)),
    )


def small_eps_optimal_paoi(k: int, channel: ErasureChannel) -> float:
    _check_k(k)
    return 2.0 * k + channel.epsilon * (2 * k - 1)


def paoi_c2_range(channel: ErasureChannel) -> tuple[int, int]:
    """Range ``[lo, hi]`` that contains the PAoI-optimal second cap when K = 2."""
    eps = channel.epsilon
    if eps <= 0.0:
        raise ValueError("the K=2 cap range is stated for 0 < eps < 1")
    return ceil_int(1.0 / (1.0 - eps)), ceil_int((1.0 + eps) / (1.0 - eps))


def paoi_cap_lower_bounds(k: int, channel: ErasureChannel) -> list[int]:
    """Per-packet lower bounds on PAoI-optimal caps: ``[1, ceil(1/(1-eps)), ..., ceil((K-1)/(1-eps))]``."""
    _check_k(k)
    eps = channel.epsilon
    return [1] + [ceil_int((i - 1) / (1.0 - eps)) for i in range(2, k + 1)]


def paoi_lower_bound_policy(k: int, channel: ErasureChannel) -> Policy:
    return Policy(tuple(paoi_cap_lower_bounds(k, channel)))
