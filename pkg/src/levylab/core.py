"""Discrete random measures on [0,1], test functions, and exact integrals.

The base space is fixed to the unit interval with measure ``theta * Lebesgue``
(every standard Borel space with a continuous finite measure is isomorphic to
it).  A realization of a jump process is a finite atomic measure with charges
stored in non-increasing order plus an explicit bound on the mass lost to
series truncation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate as _integrate

from .errors import DomainError, NotInGroup, ZeroMass

_REL_TOL = 1e-12


@dataclass(frozen=True)
class BaseSpace:
    """Unit interval carrying ``theta`` times Lebesgue measure."""

    theta: float

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ValueError(f"theta must be positive and finite, got {self.theta}")


@dataclass(frozen=True)
class Atom:
    location: float
    charge: float

    def __post_init__(self):
        if not (0.0 <= self.location <= 1.0):
            raise ValueError(f"atom location {self.location} outside [0,1]")
        if not (self.charge > 0):
            raise ValueError(f"atom charge {self.charge} must be positive")


class DiscreteMeasure:
    """Finite positive atomic measure with charges sorted non-increasing.

    ``tail_bound`` is the (expected-mass) bound on the atoms dropped by
    truncation; the cached ``total_charge`` covers the stored atoms only.
    """

    __slots__ = ("locations", "charges", "tail_bound", "total_charge")

    def __init__(self, locations, charges, tail_bound=0.0, *, presorted=False):
        locations = np.ascontiguousarray(locations, dtype=float)
        charges = np.ascontiguousarray(charges, dtype=float)
        if locations.shape != charges.shape or locations.ndim != 1:
            raise ValueError("locations and charges must be 1-d arrays of equal length")
        if not presorted and charges.size and np.any(np.diff(charges) > 0):
            order = np.argsort(-charges, kind="stable")
            locations = locations[order]
            charges = charges[order]
        _validate_atoms(locations, charges)
        if not (tail_bound >= 0 and math.isfinite(tail_bound)):
            raise ValueError(f"tail_bound must be finite and >= 0, got {tail_bound}")
        self.locations = locations
        self.charges = charges
        self.tail_bound = float(tail_bound)
        self.total_charge = float(charges.sum())

    def __len__(self):
        return self.charges.size

    def __repr__(self):
        return (
            f"DiscreteMeasure(n_atoms={len(self)}, total={self.total_charge:.6g}, "
            f"tail_bound={self.tail_bound:.3g})"
        )

    @property
    def atoms(self):
        return tuple(Atom(float(x), float(z)) for x, z in zip(self.locations, self.charges))

    def scale(self, c: float) -> "DiscreteMeasure":
        if not (c > 0):
            raise ValueError("scale factor must be positive")
        return DiscreteMeasure(self.locations, self.charges * c, self.tail_bound * c, presorted=True)

    # -- JSON wire format ----------------------------------------------------

    def to_json(self) -> str:
        """``{"atoms":[{"x":..,"z":..},...],"tail_bound":..}`` with 17-digit floats."""
        items = ",".join(
            '{"x":%s,"z":%s}' % (_f17(x), _f17(z)) for x, z in zip(self.locations, self.charges)
        )
        return '{"atoms":[%s],"tail_bound":%s}' % (items, _f17(self.tail_bound))

    @classmethod
    def from_json(cls, text: str) -> "DiscreteMeasure":
        payload = json.loads(text)
        atoms = payload["atoms"]
        locs = np.array([a["x"] for a in atoms], dtype=float)
        chs = np.array([a["z"] for a in atoms], dtype=float)
        return cls(locs, chs, float(payload.get("tail_bound", 0.0)))


def _f17(x: float) -> str:
    return format(float(x), ".17g")


def _validate_atoms(locations, charges):
    if charges.size == 0:
        return
    if charges.min() <= 0:
        raise ValueError("all charges must be positive")
    if np.any(np.diff(charges) > 0):
        raise ValueError("charges must be non-increasing")
    lo, hi = locations.min(), locations.max()
    if lo < 0.0 or hi > 1.0:
        raise ValueError("atom locations must lie in [0,1]")


@dataclass(frozen=True)
class ConicSequence:
    """Truncated point of the cone: positive non-increasing summable terms."""

    terms: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        terms = np.ascontiguousarray(self.terms, dtype=float)
        object.__setattr__(self, "terms", terms)
        if terms.size:
            if terms.min() <= 0:
                raise ValueError("conic terms must be positive")
            if np.any(np.diff(terms) > 0):
                raise ValueError("conic terms must be non-increasing")
        if not (self.tail_bound >= 0 and math.isfinite(self.tail_bound)):
            raise ValueError("tail_bound must be finite and >= 0")

    def __len__(self):
        return self.terms.size

    @property
    def total(self) -> float:
        return float(self.terms.sum())


@dataclass(frozen=True)
class SimplexSequence:
    """Truncated point of the simplex: terms sum to 1 up to tail_tolerance."""

    terms: np.ndarray
    tail_tolerance: float = 0.0

    def __post_init__(self):
        terms = np.ascontiguousarray(self.terms, dtype=float)
        object.__setattr__(self, "terms", terms)
        if terms.size == 0:
            raise ValueError("simplex sequence cannot be empty")
        if terms.min() <= 0:
            raise ValueError("simplex terms must be positive")
        if np.any(np.diff(terms) > 0):
            raise ValueError("simplex terms must be non-increasing")
        total = terms.sum()
        if not (1.0 - self.tail_tolerance - 1e-9 <= total <= 1.0 + 1e-9):
            raise ValueError(
                f"simplex terms sum to {total}, outside [1-{self.tail_tolerance}, 1]"
            )

    def __len__(self):
        return self.terms.size

    @property
    def total(self) -> float:
        return float(self.terms.sum())


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


class TestFunction:
    """Non-negative function on [0,1]; subclasses provide the integrals.

    Membership in the multiplicator group requires a summable logarithm:
    step functions must be strictly positive, callables must either have a
    positive lower envelope or declare log-summability explicitly.
    """

    lower: float
    upper: float

    def __call__(self, x):
        raise NotImplementedError

    def in_group(self) -> bool:
        raise NotImplementedError

    def require_group(self):
        if not self.in_group():
            raise NotInGroup(f"{self!r} has no summable logarithm")

    # integrals against theta * Lebesgue
    def log_integral(self, base: BaseSpace) -> float:
        raise NotImplementedError

    def log1p_integral(self, z: float, base: BaseSpace) -> float:
        raise NotImplementedError

    def power_integral(self, alpha: float, base: BaseSpace) -> float:
        raise NotImplementedError


class StepFunction(TestFunction):
    """Piecewise-constant function; all its integrals are exact sums."""

    def __init__(self, breakpoints, values):
        """``breakpoints`` are the interior jump points (strictly increasing,
        inside (0,1)); ``values`` has one more entry than ``breakpoints``."""
        inner = np.ascontiguousarray(breakpoints, dtype=float)
        values = np.ascontiguousarray(values, dtype=float)
        if values.ndim != 1 or inner.ndim != 1 or values.size != inner.size + 1:
            raise ValueError("need len(values) == len(breakpoints) + 1")
        if inner.size and (np.any(np.diff(inner) <= 0) or inner[0] <= 0 or inner[-1] >= 1):
            raise ValueError("breakpoints must be strictly increasing inside (0,1)")
        if values.size and values.min() < 0:
            raise ValueError("step values must be non-negative")
        self.edges = np.concatenate([[0.0], inner, [1.0]])
        self.values = values
        self.lengths = np.diff(self.edges)
        self.lower = float(values.min())
        self.upper = float(values.max())

    @classmethod
    def constant(cls, c: float) -> "StepFunction":
        return cls([], [c])

    def __repr__(self):
        vals = ", ".join(f"{v:g}" for v in self.values)
        return f"StepFunction([{vals}])"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.values.size == 1:
            return np.full(x.shape, self.values[0]) if x.shape else float(self.values[0])
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, self.values.size - 1)
        return self.values[idx]

    def in_group(self) -> bool:
        return bool(self.values.min() > 0)

    def combine(self, other: "StepFunction", op) -> "StepFunction":
        """Pointwise combination on the common refinement of the partitions."""
        edges = np.union1d(self.edges, other.edges)
        mids = 0.5 * (edges[:-1] + edges[1:])
        return StepFunction(edges[1:-1], op(self(mids), other(mids)))

    def __mul__(self, other):
        if isinstance(other, StepFunction):
            return self.combine(other, np.multiply)
        return StepFunction(self.edges[1:-1], self.values * float(other))

    __rmul__ = __mul__

    def reciprocal(self) -> "StepFunction":
        self.require_group()
        return StepFunction(self.edges[1:-1], 1.0 / self.values)

    def shifted(self, c: float) -> "StepFunction":
        return StepFunction(self.edges[1:-1], self.values + c)

    # -- exact integrals -----------------------------------------------------

    def log_integral(self, base: BaseSpace) -> float:
        self.require_group()
        return base.theta * float(np.dot(self.lengths, np.log(self.values)))

    def log1p_integral(self, z: float, base: BaseSpace) -> float:
        arg = z * self.values
        if np.any(1.0 + arg <= 0):
            raise DomainError(f"1 + z*a(x) <= 0 for z={z}")
        return base.theta * float(np.dot(self.lengths, np.log1p(arg)))

    def power_integral(self, alpha: float, base: BaseSpace) -> float:
        return base.theta * float(np.dot(self.lengths, self.values**alpha))

    def mean(self) -> float:
        """Mean under the uniform distribution on [0,1]."""
        return float(np.dot(self.lengths, self.values))

    def mean_inverse(self) -> float:
        self.require_group()
        return float(np.dot(self.lengths, 1.0 / self.values))

    def laplace_of_inverse(self, s):
        """E[exp(-s / a(U))] for U uniform; exact mixture of exponentials."""
        self.require_group()
        s = np.asarray(s, dtype=float)
        return np.exp(-s[..., None] / self.values).dot(self.lengths)


class CallableFunction(TestFunction):
    """Wrapper for a vectorized callable with declared envelope bounds."""

    def __init__(self, fn, lower: float, upper: float, log_summable: bool | None = None):
        if lower < 0:
            raise ValueError("test functions are non-negative")
        self.fn = fn
        self.lower = float(lower)
        self.upper = float(upper)
        self.log_summable = bool(lower > 0) if log_summable is None else bool(log_summable)

    def __repr__(self):
        return f"CallableFunction(lower={self.lower:g}, upper={self.upper:g})"

    def __call__(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def in_group(self) -> bool:
        return self.log_summable

    def _quad(self, integrand) -> float:
        val, err = _integrate.quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
        return val

    def log_integral(self, base: BaseSpace) -> float:
        self.require_group()
        return base.theta * self._quad(lambda x: math.log(self.fn(x)))

    def log1p_integral(self, z: float, base: BaseSpace) -> float:
        lo = min(1.0 + z * self.lower, 1.0 + z * self.upper)
        if lo <= 0:
            raise DomainError(f"1 + z*a(x) <= 0 for z={z}")
        return base.theta * self._quad(lambda x: math.log1p(z * self.fn(x)))

    def power_integral(self, alpha: float, base: BaseSpace) -> float:
        return base.theta * self._quad(lambda x: self.fn(x) ** alpha)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def functional_f_a(a: TestFunction, eta: DiscreteMeasure) -> float:
    """Linear functional integral of ``a`` against the atomic measure."""
    if len(eta) == 0:
        return 0.0
    return float(np.dot(a(eta.locations), eta.charges))


def conic_part(eta: DiscreteMeasure) -> ConicSequence:
    """Ordered charge sequence; locations are forgotten."""
    return ConicSequence(eta.charges.copy(), eta.tail_bound)


def normalize(eta: DiscreteMeasure):
    """Split into (total charge, unit-mass measure with the same atoms)."""
    if eta.total_charge <= 0.0:
        raise ZeroMass("cannot normalize a measure with zero total charge")
    total = eta.total_charge
    normalized = DiscreteMeasure(
        eta.locations, eta.charges / total, eta.tail_bound / total, presorted=True
    )
    return total, normalized


def log_integral(a: TestFunction, base: BaseSpace) -> float:
    """Integral of log a against theta * Lebesgue; exact for steps."""
    return a.log_integral(base)


def log1p_integral(a: TestFunction, z: float, base: BaseSpace) -> float:
    """Integral of log(1 + z a) against theta * Lebesgue."""
    return a.log1p_integral(z, base)
