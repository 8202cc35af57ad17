"""Samplers for jump processes, stick-breaking families, and related laws.

All samplers are exact in law up to the documented truncation and draw their
randomness from an explicit :class:`~levylab.rng.RandomStream`.  Jump
processes use the inverse-tail series: unit-rate arrival times ``G_1 < G_2 <
...`` are mapped to charges ``Z_n = m^{-1}(G_n / theta)`` with ``m`` the jump
tail, so charges come out sorted; locations are i.i.d. uniform and
independent of the charges.  Tempered-stable processes default to exact
Poisson thinning of the dominating stable series (retention probability
``exp(-tilt * z)``), which avoids per-atom special-function inversions; the
inverse-tail route remains available as ``method="inverse"`` and the two are
cross-checked in the test suite.

Truncation bookkeeping: sampling stops at whichever of ``max_atoms`` /
``tail_mass_cap`` triggers first.  With ``Z_cut`` the charge of the first
discarded atom, the recorded ``tail_bound`` is ``Z_cut * [cut atom is real] +
theta * int_0^{Z_cut} s dLambda(s)``, the exact conditional expectation of
the discarded mass given the observed cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize as _optimize
import scipy.special as sc

from .core import BaseSpace, ConicSequence, DiscreteMeasure, SimplexSequence
from .errors import InsufficientTerms, TruncationOverflow, ZeroMass
from .models import GammaModel, LevyModel, StableModel, TemperedStableModel
from .rng import RandomStream

_DEFAULT_CHUNK_BUDGET = 6_000_000  # flat atoms per generation chunk


@dataclass(frozen=True)
class TruncationPolicy:
    """Stopping rule for the jump series.

    ``compensate=True`` replaces the recorded tail bound by a single
    deterministic atom of that charge at a uniform location.
    """

    max_atoms: int = 2048
    tail_mass_cap: float = 1e-8
    compensate: bool = False
    hard_cap: bool = False

    def __post_init__(self):
        if self.max_atoms < 1:
            raise ValueError("max_atoms must be >= 1")
        if self.tail_mass_cap < 0:
            raise ValueError("tail_mass_cap must be >= 0")


class LevyDraws:
    """A batch of process realizations stored as flat ragged arrays.

    Heavy Monte Carlo paths work directly on the flat arrays; ``measure(i)``
    materializes a single :class:`DiscreteMeasure` on demand.
    """

    __slots__ = (
        "theta",
        "charges",
        "locations",
        "offsets",
        "tail_bounds",
        "totals",
        "arrivals",
        "_draw_index",
        "_uniform_count",
    )

    def __init__(self, theta, charges, locations, offsets, tail_bounds, arrivals=None):
        self.theta = float(theta)
        self.charges = charges
        self.locations = locations
        self.offsets = offsets
        self.tail_bounds = tail_bounds
        self.arrivals = arrivals
        counts = np.diff(offsets)
        self._uniform_count = int(counts[0]) if counts.size and (counts == counts[0]).all() else 0
        self._draw_index = None
        self.totals = self._segment_sum(charges)

    def _segment_sum(self, values):
        if self._uniform_count:
            return values.reshape(len(self), self._uniform_count).sum(axis=1)
        return np.bincount(self.draw_index, weights=values, minlength=len(self))

    def __len__(self):
        return self.offsets.size - 1

    @property
    def counts(self):
        return np.diff(self.offsets)

    @property
    def draw_index(self):
        if self._draw_index is None:
            self._draw_index = np.repeat(np.arange(len(self)), self.counts)
        return self._draw_index

    def functional(self, a) -> np.ndarray:
        """Per-draw linear functional ``sum a(x_i) z_i``."""
        w = a(self.locations) * self.charges
        return self._segment_sum(w)

    def laplace_samples(self, a) -> np.ndarray:
        return np.exp(-self.functional(a))

    def measure(self, i: int) -> DiscreteMeasure:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return DiscreteMeasure(
            self.locations[lo:hi], self.charges[lo:hi], float(self.tail_bounds[i]), presorted=True
        )

    def __iter__(self):
        return (self.measure(i) for i in range(len(self)))


def charges_from_arrivals(model: LevyModel, arrivals, theta: float) -> np.ndarray:
    """Map unit-rate arrival times to charges through the inverse tail."""
    arrivals = np.asarray(arrivals, dtype=float)
    return model.inverse_tail(arrivals / theta)


def truncation_cut(model: LevyModel, theta: float, trunc: TruncationPolicy) -> float:
    """Charge level below which the expected remaining mass is within cap."""
    if trunc.tail_mass_cap <= 0:
        return 0.0
    f = lambda ly: theta * float(model.small_jump_mean(math.exp(ly))) - trunc.tail_mass_cap
    lo, hi = -16.0, 4.0
    while f(lo) > 0 and lo > -700:
        lo -= 16.0
    while f(hi) < 0 and hi < 32:
        hi += 4.0
    if f(lo) > 0:
        return 0.0
    return math.exp(_optimize.brentq(f, lo, hi, xtol=1e-12))


# ---------------------------------------------------------------------------
# arrival generation
# ---------------------------------------------------------------------------


def _emit_lengths(blk, stop_gamma, need, width):
    """Arrivals to emit per row: up to and including the first terminal one."""
    if blk[:, -1].max() <= stop_gamma:
        first_beyond = np.full(blk.shape[0], width)
    else:
        beyond = blk > stop_gamma
        first_beyond = np.where(beyond.any(axis=1), beyond.argmax(axis=1), width)
    return np.minimum(np.minimum(first_beyond + 1, need), width)


def _arrival_series(stream: RandomStream, n: int, stop_gamma: float, stop_count: int):
    """Unit-rate arrival times per draw, ending with one terminal arrival.

    Emits, for each draw, every arrival ``<= stop_gamma`` (at most
    ``stop_count`` of them) plus the single terminating arrival, so the last
    emitted entry per draw always marks the truncation point.
    """
    if math.isfinite(stop_gamma):
        block = int(min(stop_gamma + 6.0 * math.sqrt(stop_gamma + 1.0) + 16.0, stop_count + 1))
    else:
        block = stop_count + 1
    block = max(8, min(block, 1 << 20))

    ids_pieces, arr_pieces = [], []
    active = np.arange(n)
    carry = np.zeros(n)
    emitted = np.zeros(n, dtype=np.int64)
    while active.size:
        blk = stream.exponential((active.size, block)).cumsum(axis=1) + carry[active, None]
        need = stop_count + 1 - emitted[active]
        take = _emit_lengths(blk, stop_gamma, need, block)
        ids_pieces.append(np.repeat(active, take))
        if take.min() == block:
            arr_pieces.append(blk.ravel())
        else:
            mask = np.arange(block)[None, :] < take[:, None]
            arr_pieces.append(blk[mask])
        emitted[active] += take
        resolved = (take < block) | (blk[:, -1] > stop_gamma) | (take == need)
        carry[active] = blk[:, -1]
        active = active[~resolved]
        block = max(8, block // 2)

    if len(ids_pieces) == 1:
        ids, arr = ids_pieces[0], arr_pieces[0]  # already draw-major, ascending
    else:
        ids = np.concatenate(ids_pieces)
        arr = np.concatenate(arr_pieces)
        # pieces emit ascending arrivals per draw, so a stable sort on the
        # draw id alone restores draw-major order
        order = np.argsort(ids, kind="stable")
        ids, arr = ids[order], arr[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(ids, minlength=n), out=offsets[1:])
    return arr, offsets


def _sample_inverse(model, theta, trunc, stream, n, record_arrivals):
    eps = truncation_cut(model, theta, trunc)
    stop_gamma = theta * float(model.tail(eps)) if eps > 0 else math.inf
    arr, offsets = _arrival_series(stream, n, stop_gamma, trunc.max_atoms)
    last = offsets[1:] - 1
    keep = np.ones(arr.size, dtype=bool)
    keep[last] = False  # terminal arrival marks the cut
    cut_charge = charges_from_arrivals(model, arr[last], theta)
    kept_arrivals = arr[keep]
    charges = charges_from_arrivals(model, kept_arrivals, theta)
    counts = np.diff(offsets) - 1
    # the cut atom is a real atom of the process only when it lies beyond the
    # mass cap; under a count-cap stop it is real as well -- always real here.
    tail_bounds = cut_charge + theta * np.asarray(model.small_jump_mean(cut_charge), dtype=float)
    hit_count_cap = (counts >= trunc.max_atoms) & (arr[last] <= stop_gamma)
    if trunc.tail_mass_cap <= 0:
        hit_count_cap[:] = False  # count cap is the intended stop
    out_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=out_offsets[1:])
    arrivals = kept_arrivals if record_arrivals else None
    return charges, out_offsets, tail_bounds, hit_count_cap, arrivals


def _sample_thinned(model: TemperedStableModel, theta, trunc, stream, n):
    """Tempered-stable jumps by thinning the dominating stable series."""
    dominating = StableModel(model.alpha, model.c)
    eps = truncation_cut(model, theta, trunc)
    stop_gamma = theta * float(dominating.tail(eps)) if eps > 0 else math.inf
    stop_count = trunc.max_atoms
    if math.isfinite(stop_gamma):
        kept_rate = theta * float(model.tail(eps))
        overhead = stop_gamma / max(kept_rate, 1.0)
        block = int(min(stop_gamma, overhead * (stop_count + 1) + 64) + 32)
    else:
        block = 2 * (stop_count + 1)
    block = max(8, min(block, 1 << 20))

    ids_pieces, z_pieces = [], []
    cut_charge = np.zeros(n)
    cut_is_atom = np.zeros(n, dtype=bool)
    hit_count_cap = np.zeros(n, dtype=bool)
    active = np.arange(n)
    carry = np.zeros(n)
    kept_so_far = np.zeros(n, dtype=np.int64)
    while active.size:
        blk = stream.exponential((active.size, block)).cumsum(axis=1) + carry[active, None]
        u = stream.uniform(blk.shape)
        with np.errstate(over="ignore", divide="ignore"):
            z = dominating.inverse_tail(blk / theta)
            keep = u < np.exp(-model.tilt * z)
        beyond = blk > stop_gamma
        kc = keep.cumsum(axis=1)
        need = stop_count + 1 - kept_so_far[active]
        # terminal column: first candidate beyond the mass cap, or the
        # candidate delivering one kept atom past the count cap
        t_mass = np.where(beyond.any(axis=1), beyond.argmax(axis=1), block)
        over = kc >= need[:, None]
        t_count = np.where(over.any(axis=1), over.argmax(axis=1), block)
        term = np.minimum(t_mass, t_count)
        resolved = term < block
        cols = np.arange(block)
        emit = keep & (cols[None, :] < term[:, None])
        ids_pieces.append(np.repeat(active, emit.sum(axis=1)))
        z_pieces.append(z[emit])
        rows = np.nonzero(resolved)[0]
        draws = active[rows]
        cut_charge[draws] = z[rows, term[rows]]
        cut_is_atom[draws] = keep[rows, term[rows]]
        hit_count_cap[draws] = (t_count[rows] < t_mass[rows]) & (trunc.tail_mass_cap > 0)
        kept_so_far[active] += emit.sum(axis=1)
        carry[active] = blk[:, -1]
        active = active[~resolved]
        block = max(8, block // 2)

    if len(ids_pieces) == 1:
        ids, z = ids_pieces[0], z_pieces[0]
    else:
        ids = np.concatenate(ids_pieces)
        z = np.concatenate(z_pieces)
        order = np.argsort(ids, kind="stable")
        ids, z = ids[order], z[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(ids, minlength=n), out=offsets[1:])
    tail_bounds = np.where(cut_is_atom, cut_charge, 0.0) + theta * np.asarray(
        model.small_jump_mean(cut_charge), dtype=float
    )
    return z, offsets, tail_bounds, hit_count_cap, None


def sample_levy_batch(
    model: LevyModel,
    base: BaseSpace,
    n: int,
    trunc: TruncationPolicy,
    rng: RandomStream,
    method: str = "auto",
    record_arrivals: bool = False,
) -> LevyDraws:
    """``n`` independent process realizations in one vectorized pass."""
    theta = base.theta
    if method == "auto":
        method = "thinning" if isinstance(model, TemperedStableModel) else "inverse"
    if method == "inverse":
        charges, offsets, tails, hit_cap, arrivals = _sample_inverse(
            model, theta, trunc, rng, n, record_arrivals
        )
    elif method == "thinning":
        if not isinstance(model, TemperedStableModel):
            raise ValueError("thinning applies to tempered-stable models only")
        charges, offsets, tails, hit_cap, arrivals = _sample_thinned(model, theta, trunc, rng, n)
    else:
        raise ValueError(f"unknown sampling method {method!r}")

    if trunc.hard_cap and hit_cap.any():
        raise TruncationOverflow(
            f"{int(hit_cap.sum())}/{n} draws hit max_atoms={trunc.max_atoms} "
            f"before reaching tail_mass_cap={trunc.tail_mass_cap}"
        )
    locations = rng.uniform(charges.size)
    if trunc.compensate:
        counts = np.diff(offsets)
        comp_locs = rng.uniform(n)
        ids = np.concatenate([np.repeat(np.arange(n), counts), np.arange(n)])
        ch = np.concatenate([charges, tails])
        lc = np.concatenate([locations, comp_locs])
        order = np.lexsort((-ch, ids))
        ids, charges, locations = ids[order], ch[order], lc[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(ids, minlength=n), out=offsets[1:])
        tails = np.zeros(n)
        arrivals = None
    return LevyDraws(theta, charges, locations, offsets, tails, arrivals)


def sample_levy(
    model: LevyModel,
    base: BaseSpace,
    trunc: TruncationPolicy,
    rng: RandomStream,
    method: str = "auto",
) -> DiscreteMeasure:
    """A single realization of the jump process."""
    return sample_levy_batch(model, base, 1, trunc, rng, method=method).measure(0)


def iter_levy_chunks(model, base, n, trunc, seed, label, chunk=None, method="auto"):
    """Yield LevyDraws chunks, one independent stream per chunk.

    Chunk ``i`` always uses ``RandomStream(seed, label_id(label, i))``, so
    results do not depend on how chunks are scheduled.
    """
    if chunk is None:
        per_draw = max(8, _expected_atoms(model, base.theta, trunc))
        chunk = int(np.clip(_DEFAULT_CHUNK_BUDGET // per_draw, 16, 65536))
    done = 0
    idx = 0
    while done < n:
        m = min(chunk, n - done)
        stream = RandomStream(seed).substream(idx, label)
        yield sample_levy_batch(model, base, m, trunc, stream, method=method)
        done += m
        idx += 1


def _expected_atoms(model, theta, trunc) -> int:
    eps = truncation_cut(model, theta, trunc)
    if eps <= 0:
        return trunc.max_atoms
    return int(min(theta * float(model.tail(eps)) + 16, trunc.max_atoms + 1))


# ---------------------------------------------------------------------------
# stick-breaking families
# ---------------------------------------------------------------------------


def _sticks_from_fractions(fractions):
    """Stick lengths from residual fractions; returns (sorted desc, residual)."""
    resid = np.cumprod(1.0 - fractions, axis=1)
    sticks = fractions.copy()
    sticks[:, 1:] *= resid[:, :-1]
    sticks.sort(axis=1)
    return sticks[:, ::-1], resid[:, -1]


def sample_pd_theta_batch(theta: float, n_draws: int, n_terms: int, rng: RandomStream):
    """One-parameter family: fractions i.i.d. Beta(1, theta)."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    v = rng.beta_one(theta, (n_draws, n_terms))
    return _sticks_from_fractions(v)


def _simplex_from_row(sticks_row, resid) -> SimplexSequence:
    # drop sticks that underflowed to exact zero; resid already counts them
    terms = sticks_row[sticks_row > 0.0]
    return SimplexSequence(terms, max(float(resid), 1.0 - float(terms.sum())))


def sample_pd_theta(theta: float, n_terms: int, rng: RandomStream) -> SimplexSequence:
    sticks, resid = sample_pd_theta_batch(theta, 1, n_terms, rng)
    return _simplex_from_row(sticks[0], resid[0])


def sample_pd_alpha_theta_batch(
    alpha: float, theta: float, n_draws: int, n_terms: int, rng: RandomStream
):
    """Two-parameter family: n-th fraction ~ Beta(1-alpha, theta + n*alpha)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0,1)")
    if theta <= -alpha:
        raise ValueError("need theta > -alpha")
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    b = theta + alpha * np.arange(1, n_terms + 1)
    v = rng.beta(np.full(n_terms, 1.0 - alpha), b, (n_draws, n_terms))
    return _sticks_from_fractions(v)


def sample_pd_alpha_theta(alpha, theta, n_terms, rng: RandomStream) -> SimplexSequence:
    sticks, resid = sample_pd_alpha_theta_batch(alpha, theta, 1, n_terms, rng)
    return _simplex_from_row(sticks[0], resid[0])


def sample_cpd_batch(theta: float, n_draws: int, n_terms: int, rng: RandomStream):
    """Cone-level family: total ~ Gamma(theta,1) times an independent simplex draw."""
    totals = rng.gamma(theta, n_draws)
    sticks, resid = sample_pd_theta_batch(theta, n_draws, n_terms, rng)
    return totals[:, None] * sticks, totals * resid, totals


def sample_cpd(theta: float, n_terms: int, rng: RandomStream) -> ConicSequence:
    terms, tails, _ = sample_cpd_batch(theta, 1, n_terms, rng)
    return ConicSequence(terms[0], float(tails[0]))


def cpd_measure_batch(theta: float, n_draws: int, n_terms: int, rng: RandomStream) -> LevyDraws:
    """CPD draws dressed with i.i.d. uniform locations, as a LevyDraws batch."""
    terms, tails, _ = sample_cpd_batch(theta, n_draws, n_terms, rng)
    locs = rng.uniform((n_draws, n_terms))
    offsets = np.arange(n_draws + 1, dtype=np.int64) * n_terms
    return LevyDraws(theta, terms.ravel(), locs.ravel(), offsets, tails)


# ---------------------------------------------------------------------------
# renormalized-stable family and weighted stable draws
# ---------------------------------------------------------------------------


def tilted_scaled_model(alpha: float, k: float) -> TemperedStableModel:
    """Jump model of the exponentially tilted, rescaled stable process.

    Tilting the unit-c stable law by ``exp(-g * total)`` with
    ``g = k / alpha**(1/alpha)`` multiplies the jump density by
    ``exp(-g s)``; rescaling charges by ``g`` then yields the tempered-stable
    density ``(k**alpha/alpha) * alpha/Gamma(1-alpha) * s**(-alpha-1) *
    exp(-s)``.  Working with the pushforward keeps every quantity O(1) even
    when ``g`` itself overflows (alpha < 0.05).
    """
    return TemperedStableModel(alpha=alpha, c=k**alpha / alpha, tilt=1.0)


def sample_tilted_scaled_stable(
    alpha: float, k: float, base: BaseSpace, trunc: TruncationPolicy, rng: RandomStream
) -> DiscreteMeasure:
    return sample_levy(tilted_scaled_model(alpha, k), base, trunc, rng)


def tilted_scaled_laplace(a, alpha: float, k: float, base: BaseSpace) -> float:
    """Closed-form Laplace functional of the tilted, rescaled stable law.

    Equals ``exp(-g**alpha * int ((a+1)**alpha - 1) dnu)`` with
    ``g**alpha = k**alpha / alpha``.
    """
    from .core import StepFunction  # thin import, avoids widening the module deps

    if isinstance(a, StepFunction):
        shifted_power = a.shifted(1.0).power_integral(alpha, base)
    else:
        import scipy.integrate as _integrate

        shifted_power = (
            base.theta
            * _integrate.quad(
                lambda x: (1.0 + float(a(x))) ** alpha, 0.0, 1.0, epsabs=1e-12, limit=200
            )[0]
        )
    return float(np.exp(-(k**alpha / alpha) * (shifted_power - base.theta)))


def sample_p_alpha_theta_weighted(
    alpha: float,
    theta: float,
    base: BaseSpace,
    trunc: TruncationPolicy,
    rng: RandomStream,
    c: float = 1.0,
):
    """A stable draw with the unnormalized reweighting factor ``total**(-theta)``.

    Self-normalized importance sampling with these weights reproduces the
    power-tilted family; the weight has finite mean iff theta > -alpha.
    """
    draws, weights = sample_p_alpha_theta_weighted_batch(alpha, theta, base, 1, trunc, rng, c)
    return draws.measure(0), float(weights[0])


def sample_p_alpha_theta_weighted_batch(
    alpha, theta, base, n, trunc, rng: RandomStream, c: float = 1.0
):
    if theta <= -alpha:
        raise ValueError("need theta > -alpha")
    draws = sample_levy_batch(StableModel(alpha, c), base, n, trunc, rng)
    if np.any(draws.totals <= 0.0):
        raise ZeroMass("stable draw with zero total charge")
    weights = draws.totals ** (-theta)
    return draws, weights


@dataclass(frozen=True)
class StableScaleEstimate:
    """Total-charge reconstruction from a normalized charge sequence."""

    scale: float
    limit: float
    ok: bool
    log_drift: float


def recover_stable_scale(q, alpha: float, c: float = 1.0, min_terms: int = 64):
    """Recover the total charge of a stable draw from its normalized charges.

    The normalized charges satisfy ``n**(1/alpha) * q_n -> limit`` with
    ``limit = (c/Gamma(1-alpha))**(1/alpha) / total``; the limit is estimated
    by the median over the last quartile of available indices.  Inputs from
    the wrong regime (e.g. exponentially decaying sequences) are flagged via
    the fitted log drift across the window.
    """
    terms = q.terms if isinstance(q, (SimplexSequence, ConicSequence)) else np.asarray(q, float)
    n = terms.size
    if n < min_terms:
        raise InsufficientTerms(f"need at least {min_terms} terms, got {n}")
    idx = np.arange(3 * n // 4, n)
    vals = np.maximum((idx + 1.0) ** (1.0 / alpha) * terms[idx], 1e-300)
    limit = float(np.median(vals))
    slope = np.polyfit(np.log(idx + 1.0), np.log(vals), 1)[0]
    drift = float(slope * math.log(idx[-1] / max(idx[0], 1)))
    ok = bool(abs(drift) < math.log(4.0)) and limit > 1e-290
    scale = (c / sc.gamma(1.0 - alpha)) ** (1.0 / alpha) / limit
    return StableScaleEstimate(scale=float(scale), limit=limit, ok=ok, log_drift=drift)


def pd_theta_tail_expectation(theta: float, n_terms: int) -> float:
    """Expected residual stick mass after n_terms fractions."""
    return (theta / (theta + 1.0)) ** n_terms
