"""Domain types shared by every module: caps, policies, channels, moment sets."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Union


class Unbounded(enum.Enum):
    """Marker for a packet that is never dropped, whatever the erasure run."""

    UNBOUNDED = "inf"

    def __repr__(self) -> str:
        return "UNBOUNDED"

    def __str__(self) -> str:
        return "inf"


UNBOUNDED = Unbounded.UNBOUNDED

Cap = Union[int, Unbounded]

# Exact-formula comparisons default to this absolute tolerance.
DEFAULT_ATOL = 1e-12


class PolicyError(ValueError):
    """Raised for malformed cap vectors or policy strings."""


class ChannelError(ValueError):
    """Raised for an erasure probability outside [0, 1)."""


def _coerce_cap(value: object) -> Cap:
    if value is UNBOUNDED:
        return UNBOUNDED
    if isinstance(value, str):
        token = value.strip().lower()
        if token in ("inf", "infinity", "unbounded"):
            return UNBOUNDED
        try:
            value = int(token)
        except ValueError:
            raise PolicyError(f"not a cap: {value!r}") from None
    if isinstance(value, float):
        if math.isinf(value) and value > 0:
            return UNBOUNDED
        if not value.is_integer():
            raise PolicyError(f"cap must be an integer, got {value!r}")
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise PolicyError(f"not a cap: {value!r}")
    if value < 1:
        raise PolicyError(f"finite caps must be >= 1, got {value}")
    return value


def is_unbounded(cap: Cap) -> bool:
    return cap is UNBOUNDED


def cap_sort_key(cap: Cap) -> tuple[int, int]:
    """Order finite caps numerically with UNBOUNDED above all of them."""
    return (1, 0) if cap is UNBOUNDED else (0, cap)


@dataclass(frozen=True)
class Policy:
    """Cap vector ``[c_1, ..., c_K]``.

    ``caps[i]`` is the number of consecutive erasures of packet ``i + 1``
    after which the current update is dropped; ``UNBOUNDED`` never drops.
    """

    caps: tuple[Cap, ...]

    def __post_init__(self) -> None:
        caps = tuple(_coerce_cap(c) for c in self.caps)
        if not caps:
            raise PolicyError("a policy needs at least one packet")
        object.__setattr__(self, "caps", caps)

    @property
    def k(self) -> int:
        return len(self.caps)

    def __len__(self) -> int:
        return len(self.caps)

    def __iter__(self):
        return iter(self.caps)

    def __getitem__(self, i):
        return self.caps[i]

    def __str__(self) -> str:
        return format_policy(self)

    def sort_key(self) -> tuple[tuple[int, int], ...]:
        return tuple(cap_sort_key(c) for c in self.caps)

    def is_nondecreasing(self) -> bool:
        keys = self.sort_key()
        return all(a <= b for a, b in zip(keys, keys[1:]))

    @classmethod
    def all_ones(cls, k: int) -> "Policy":
        return cls((1,) * k)

    @classmethod
    def all_unbounded(cls, k: int) -> "Policy":
        return cls((UNBOUNDED,) * k)


@dataclass(frozen=True)
class ErasureChannel:
    """Memoryless packet-erasure channel with erasure probability ``epsilon``."""

    epsilon: float

    def __post_init__(self) -> None:
        try:
            eps = float(self.epsilon)
        except (TypeError, ValueError):
            raise ChannelError(f"epsilon must be a real number, got {self.epsilon!r}") from None
        if not math.isfinite(eps):
            raise ChannelError(f"epsilon must be finite, got {eps}")
        if eps < 0.0 or eps >= 1.0:
            raise ChannelError(f"epsilon must satisfy 0 <= epsilon < 1, got {eps}")
        object.__setattr__(self, "epsilon", eps)


@dataclass(frozen=True)
class UpdateMoments:
    """First and second moments feeding the average and peak AoI formulas.

    ``e_s``/``e_s2`` describe the duration S of a delivered update, ``e_d``/``e_d2``
    a single dropped update, ``e_D``/``e_D2`` the total dropped time between two
    deliveries. All durations are in channel uses.
    """

    p: float
    e_s: float
    e_s2: float
    e_d: float
    e_d2: float
    e_D: float
    e_D2: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.p, self.e_s, self.e_s2, self.e_d, self.e_d2, self.e_D, self.e_D2)


@dataclass(frozen=True)
class AoiResult:
    average_aoi: float
    peak_aoi: float


def validate_policy(caps: Iterable[object]) -> Policy:
    """Build a :class:`Policy`, accepting ints, ``"inf"``, ``math.inf`` or ``UNBOUNDED``."""
    if isinstance(caps, Policy):
        return caps
    if isinstance(caps, (str, bytes)):
        raise PolicyError("pass a sequence of caps; use parse_policy for text")
    return Policy(tuple(caps))


def make_channel(epsilon: float) -> ErasureChannel:
    return ErasureChannel(epsilon)


def parse_policy(text: str) -> Policy:
    """Parse ``"1,2,inf"`` into a policy."""
    parts = [p.strip() for p in text.split(",")]
    if not text.strip() or any(not p for p in parts):
        raise PolicyError(f"malformed policy string: {text!r}")
    return Policy(tuple(_coerce_cap(p) for p in parts))


def format_policy(policy: Policy) -> str:
    return ",".join(str(c) for c in policy.caps)


def check_moments(m: UpdateMoments, k: int, *, rtol: float = 1e-12) -> None:
    """Assert the invariants every moment set must satisfy.

    Raises AssertionError naming the first violated invariant.
    """
    vals = m.as_tuple()
    assert all(math.isfinite(v) for v in vals), f"non-finite moment in {m}"
    assert 0.0 < m.p <= 1.0, f"p out of range: {m.p}"

    def ge(a: float, b: float) -> bool:
        return a >= b - rtol * max(1.0, abs(a), abs(b))

    assert ge(m.e_s, k), f"E[S]={m.e_s} < K={k}"
    assert ge(m.e_s2, m.e_s**2), f"E[S^2]={m.e_s2} < E[S]^2={m.e_s**2}"
    if m.p < 1.0:
        assert ge(m.e_d2, m.e_d**2), f"E[d^2]={m.e_d2} < E[d]^2={m.e_d**2}"
    assert m.e_D >= 0.0, f"E[D]={m.e_D} < 0"
    assert ge(m.e_D2, m.e_D**2), f"E[D^2]={m.e_D2} < E[D]^2={m.e_D**2}"
