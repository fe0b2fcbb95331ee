"""Resource vectors and dominant-share arithmetic.

Quantities are fixed-point (1/1000 of a unit) and shares are exact
:class:`fractions.Fraction` values, so 0.3 or 0.125 compare exactly.  CPU is
measured in (fractional) cores and memory in megabytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

CPU = "cpu"
MEM = "mem"
DEFAULT_KINDS: tuple[str, ...] = (CPU, MEM)

MB_PER_GB = 1024

Number = Union[int, float, str, Fraction]


class ResourceError(ValueError):
    """Base class for resource arithmetic failures."""


class KindMismatchError(ResourceError):
    pass


class UnderflowError(ResourceError):
    pass


def to_fraction(x: Number) -> Fraction:
    # floats go through repr so 0.1 becomes 1/10, not the binary expansion
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


# Quantities are stored as integer multiples of 1/SCALE of a unit.
SCALE = 1000


def to_units(x: Number) -> int:
    f = to_fraction(x) * SCALE
    if f.denominator != 1:
        raise ResourceError(f"{x} has more precision than 1/{SCALE} of a unit")
    return f.numerator


class ResourceVector:
    """Immutable non-negative quantity per resource kind.

    The kind tuple fixes the canonical order used for tie-breaking.
    Components are fixed-point with three decimal digits; ``values`` exposes
    them as exact fractions.
    """

    __slots__ = ("kinds", "units")

    def __init__(self, values: Iterable[Number], kinds: tuple[str, ...] = DEFAULT_KINDS):
        units = tuple(to_units(v) for v in values)
        self._init(units, tuple(kinds))

    def _init(self, units: tuple[int, ...], kinds: tuple[str, ...]) -> None:
        if len(units) != len(kinds):
            raise KindMismatchError(f"{len(units)} values for kinds {kinds}")
        for k, u in zip(kinds, units):
            if u < 0:
                raise ResourceError(f"negative {k} quantity {Fraction(u, SCALE)}")
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "units", units)

    @classmethod
    def _from_units(cls, units: tuple[int, ...], kinds: tuple[str, ...]) -> "ResourceVector":
        v = object.__new__(cls)
        v._init(units, kinds)
        return v

    def __setattr__(self, name, value):
        raise AttributeError("ResourceVector is immutable")

    @property
    def values(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(u, SCALE) for u in self.units)

    @classmethod
    def of(cls, cpu: Number = 0, mem: Number = 0) -> "ResourceVector":
        return cls((cpu, mem))

    @classmethod
    def zero(cls, kinds: tuple[str, ...] = DEFAULT_KINDS) -> "ResourceVector":
        return cls._from_units((0,) * len(kinds), tuple(kinds))

    @classmethod
    def from_mapping(cls, m: Mapping[str, Number], kinds: tuple[str, ...] = DEFAULT_KINDS) -> "ResourceVector":
        """Build from ``{"cpu": .., "mem": ..}``; a ``mem_gb`` key is converted to MB."""
        m = dict(m)
        if "mem_gb" in m:
            if MEM in m:
                raise ResourceError("both mem and mem_gb given")
            m[MEM] = to_fraction(m.pop("mem_gb")) * MB_PER_GB
        unknown = set(m) - set(kinds)
        if unknown:
            raise KindMismatchError(f"unknown resource kinds {sorted(unknown)}")
        return cls((m.get(k, 0) for k in kinds), kinds)

    def as_dict(self) -> dict[str, Fraction]:
        return dict(zip(self.kinds, self.values))

    def __getitem__(self, kind: str) -> Fraction:
        return Fraction(self.units[self.kinds.index(kind)], SCALE)

    def _check(self, other: "ResourceVector") -> None:
        if self.kinds is not other.kinds and self.kinds != other.kinds:
            raise KindMismatchError(f"{self.kinds} vs {other.kinds}")

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        return vec_add(self, other)

    def __sub__(self, other: "ResourceVector") -> "ResourceVector":
        return vec_sub_checked(self, other)

    def scale(self, c: Number) -> "ResourceVector":
        c = to_fraction(c)
        if c < 0:
            raise ResourceError("negative scale factor")
        return ResourceVector((Fraction(u, SCALE) * c for u in self.units), self.kinds)

    def __mul__(self, c: Number) -> "ResourceVector":
        return self.scale(c)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not any(self.units)

    def __le__(self, other: "ResourceVector") -> bool:
        return vec_fits(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ResourceVector):
            return NotImplemented
        return self.kinds == other.kinds and self.units == other.units

    def __hash__(self) -> int:
        return hash((self.kinds, self.units))

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={_fmt(v)}" for k, v in zip(self.kinds, self.values))
        return f"ResourceVector({inner})"


def _fmt(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else str(float(v))


def vec_add(a: ResourceVector, b: ResourceVector) -> ResourceVector:
    a._check(b)
    return ResourceVector._from_units(tuple(x + y for x, y in zip(a.units, b.units)), a.kinds)


def vec_sub_checked(a: ResourceVector, b: ResourceVector) -> ResourceVector:
    a._check(b)
    out = []
    for k, x, y in zip(a.kinds, a.units, b.units):
        if y > x:
            raise UnderflowError(f"{k}: {_fmt(Fraction(x, SCALE))} - {_fmt(Fraction(y, SCALE))} < 0")
        out.append(x - y)
    return ResourceVector._from_units(tuple(out), a.kinds)


def vec_sub_saturating(a: ResourceVector, b: ResourceVector) -> ResourceVector:
    """Componentwise ``max(a - b, 0)``."""
    a._check(b)
    return ResourceVector._from_units(tuple(max(x - y, 0) for x, y in zip(a.units, b.units)), a.kinds)


def vec_fits(demand: ResourceVector, available: ResourceVector) -> bool:
    demand._check(available)
    return all(d <= v for d, v in zip(demand.units, available.units))


def vec_sum(vectors: Iterable[ResourceVector], kinds: tuple[str, ...] = DEFAULT_KINDS) -> ResourceVector:
    acc = [0] * len(kinds)
    kinds = tuple(kinds)
    for v in vectors:
        if v.kinds != kinds:
            raise KindMismatchError(f"{v.kinds} vs {kinds}")
        for i, u in enumerate(v.units):
            acc[i] += u
    return ResourceVector._from_units(tuple(acc), kinds)


@dataclass(frozen=True)
class DominantShare:
    value: Fraction
    kind: str


@dataclass(frozen=True)
class DominantDemandShare:
    value: Fraction
    kind: str


def _max_ratio(num: ResourceVector, totals: ResourceVector) -> tuple[Fraction, str]:
    num._check(totals)
    best_n, best_t, best_kind = -1, 1, totals.kinds[0]
    for k, n, t in zip(totals.kinds, num.units, totals.units):
        if t <= 0:
            raise ResourceError(f"cluster total for {k} must be positive")
        # strict '>' keeps the first kind in canonical order on ties
        if n * best_t > best_n * t:
            best_n, best_t, best_kind = n, t, k
    return Fraction(best_n, best_t), best_kind


def dominant_share(consumed: ResourceVector, totals: ResourceVector) -> DominantShare:
    """Maximum over kinds of ``consumed[k] / totals[k]``."""
    if not vec_fits(consumed, totals):
        raise ResourceError(f"consumption {consumed} exceeds cluster totals {totals}")
    value, kind = _max_ratio(consumed, totals)
    return DominantShare(value, kind)


def dominant_demand_share(queued_demand: ResourceVector, totals: ResourceVector) -> DominantDemandShare:
    """Like :func:`dominant_share` for queued demand, which may exceed the cluster."""
    value, kind = _max_ratio(queued_demand, totals)
    return DominantDemandShare(value, kind)


def share_value(consumed: ResourceVector, totals: ResourceVector) -> Fraction:
    """Unchecked max ratio, used where provisional allocations may be compared."""
    return _max_ratio(consumed, totals)[0]
