"""Multiplicators, change-of-measure densities, and induced Markov operators.

A positive function ``a`` with summable logarithm acts on atomic measures by
scaling each charge by ``a(location)``.  The gamma-process law is
quasi-invariant under this action with density

    rho_a(eta) = exp(-int log a dnu) * exp(-int (1/a - 1) d eta),

computed here in log space.  The same action pushes down to Markov operators
on normalized and unnormalized charge sequences (locations get resampled
uniformly), and the simplex-level density involves a one-dimensional
integral handled by generalized Gauss-Laguerre quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate as _integrate
import scipy.special as sc

from .core import (
    BaseSpace,
    ConicSequence,
    DiscreteMeasure,
    SimplexSequence,
    StepFunction,
    TestFunction,
)
from .errors import QuadratureFailure, ZeroCharge
from .rng import RandomStream
from .samplers import LevyDraws


def apply_multiplicator(a: TestFunction, eta: DiscreteMeasure) -> DiscreteMeasure:
    """Scale each atom charge by ``a`` at its location; locations unchanged."""
    factors = a(eta.locations)
    if np.any(factors <= 0.0):
        raise ZeroCharge("multiplicator vanishes at an atom location")
    return DiscreteMeasure(
        eta.locations, eta.charges * factors, eta.tail_bound * max(a.upper, 0.0)
    )


def multiplied_functional_batch(a: TestFunction, draws: LevyDraws, b: TestFunction) -> np.ndarray:
    """Per-draw value of ``f_b`` on the multiplied measures ``M_a eta``."""
    w = b(draws.locations) * a(draws.locations) * draws.charges
    return draws._segment_sum(w)


def rn_log_density_gamma(a: TestFunction, eta: DiscreteMeasure, base: BaseSpace) -> float:
    """Log density of the pushforward of the gamma law under ``M_a``."""
    a.require_group()
    vals = a(eta.locations)
    return -a.log_integral(base) - float(np.dot(1.0 / vals - 1.0, eta.charges))


def rn_density_gamma(a: TestFunction, eta: DiscreteMeasure, base: BaseSpace) -> float:
    return math.exp(rn_log_density_gamma(a, eta, base))


def rn_log_density_gamma_batch(a: TestFunction, draws: LevyDraws, base: BaseSpace) -> np.ndarray:
    a.require_group()
    vals = a(draws.locations)
    w = (1.0 / vals - 1.0) * draws.charges
    return -a.log_integral(base) - draws._segment_sum(w)


def quasi_lebesgue_weight(eta: DiscreteMeasure, charge_cutoff: float) -> float:
    """Truncated density ``exp(total)`` of the sigma-finite reweighted law.

    The untruncated weight is not integrable, so expectations are only taken
    against functionals vanishing beyond the cutoff; the hard zero makes that
    truncation explicit rather than approximate.
    """
    t = eta.total_charge
    return math.exp(t) if t <= charge_cutoff else 0.0


# ---------------------------------------------------------------------------
# Markov operators on sequences
# ---------------------------------------------------------------------------


def markov_R_a(z: ConicSequence, a: TestFunction, rng: RandomStream) -> ConicSequence:
    """Randomly relabel each term with a uniform location and scale by ``a``."""
    if a.lower <= 0:
        a.require_group()
    locs = rng.uniform(len(z))
    scaled = np.sort(a(locs) * z.terms)[::-1]
    return ConicSequence(scaled, z.tail_bound * a.upper)


def markov_S_a(y: SimplexSequence, a: TestFunction, rng: RandomStream) -> SimplexSequence:
    """Same relabel-and-scale action followed by renormalization.

    The unseen tail is renormalized with its expected multiplier, the mean
    of ``a`` under the uniform distribution.
    """
    if a.lower <= 0:
        a.require_group()
    locs = rng.uniform(len(y))
    scaled = a(locs) * y.terms
    mean_a = a.mean() if isinstance(a, StepFunction) else _callable_mean(a)
    tail = y.tail_tolerance * mean_a
    sigma = scaled.sum() + tail
    terms = np.sort(scaled / sigma)[::-1]
    return SimplexSequence(terms, tail / sigma)


def markov_S_a_batch(Y: np.ndarray, tails: np.ndarray, a: TestFunction, rng: RandomStream):
    locs = rng.uniform(Y.shape)
    scaled = a(locs) * Y
    mean_a = a.mean() if isinstance(a, StepFunction) else _callable_mean(a)
    t = tails * mean_a
    sigma = scaled.sum(axis=1) + t
    scaled /= sigma[:, None]
    scaled.sort(axis=1)
    return scaled[:, ::-1], t / sigma


def _callable_mean(a: TestFunction) -> float:
    val, _ = _integrate.quad(lambda x: float(a(x)), 0.0, 1.0, epsabs=1e-12, limit=200)
    return val


# ---------------------------------------------------------------------------
# simplex-level change-of-measure density
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PdDensity:
    value: float
    log_value: float
    tail_error: float
    nodes: int


def pd_density(
    y: SimplexSequence,
    a: StepFunction,
    theta: float,
    n_product: int = 128,
    quad_nodes: int = 64,
) -> PdDensity:
    """Density of the pushforward of the one-parameter simplex law.

    The density is ``exp(-theta * int_0^1 log a) / Gamma(theta) *
    int_0^inf s^(theta-1) prod_i L(s y_i) ds`` where ``L`` is the Laplace
    transform of ``1/a`` under the uniform distribution -- an exact mixture
    of exponentials for step functions, which is why steps are required.
    The product beyond ``n_product`` terms is replaced by the first-order
    surrogate ``exp(-s * E[1/a] * tail_mass)``; the value difference against
    hard truncation is reported as ``tail_error``.
    """
    vals = pd_log_density_batch(
        y.terms[None, :], np.array([y.tail_tolerance]), a, theta, n_product, quad_nodes
    )
    return PdDensity(
        value=float(np.exp(vals[0][0])),
        log_value=float(vals[0][0]),
        tail_error=float(vals[1][0]),
        nodes=int(vals[2]),
    )


def pd_log_density_batch(
    Y: np.ndarray,
    tails: np.ndarray,
    a: StepFunction,
    theta: float,
    n_product: int = 128,
    quad_nodes: int = 64,
    max_nodes: int = 1024,
    rel_tol: float = 1e-8,
):
    """Vectorized log-density over rows of ``Y``; see :func:`pd_density`."""
    if not isinstance(a, StepFunction):
        raise TypeError("simplex density requires a step multiplicator")
    a.require_group()
    if theta < 0.05:
        import warnings

        warnings.warn(
            "sigma-integral quadrature is untested for theta < 0.05; "
            "treat results as exploratory",
            RuntimeWarning,
            stacklevel=2,
        )
    base1 = BaseSpace(1.0)
    prefactor = -theta * a.log_integral(base1)
    mean_inv = a.mean_inverse()
    scale = a.upper  # matches the slowest decay rate of the product

    keep = min(n_product, Y.shape[1])
    body = np.ascontiguousarray(Y[:, :keep])
    tail_mass = np.maximum(1.0 - body.sum(axis=1), np.maximum(tails, 0.0))

    nodes = quad_nodes
    prev = None
    while True:
        log_int, log_int_notail = _sigma_integral(body, tail_mass, a, theta, mean_inv, scale, nodes)
        if prev is not None:
            if np.all(np.abs(log_int - prev) <= rel_tol * np.maximum(np.abs(log_int), 1.0)):
                break
            if nodes >= max_nodes:
                log_int = _sigma_integral_adaptive(body, tail_mass, a, theta, mean_inv)
                log_int_notail = log_int
                break
        prev = log_int
        nodes *= 2
    log_density = prefactor + log_int
    tail_error = np.abs(np.exp(log_density) - np.exp(prefactor + log_int_notail))
    return log_density, tail_error, nodes


def _sigma_integral(body, tail_mass, a, theta, mean_inv, scale, nodes):
    """log of ``int s^(theta-1) prod_i L(s y_i) ds / Gamma(theta)``.

    Substituting ``s = scale * x`` gives a generalized Gauss-Laguerre form
    with weight ``x^(theta-1) e^(-x)``; the integrand left over is
    ``prod_i L(scale x y_i) * e^x``, evaluated in log space.
    """
    with np.errstate(over="ignore"):  # node recurrences overflow harmlessly
        x, w = sc.roots_genlaguerre(nodes, theta - 1.0)
    # (draws, nodes, terms) product in manageable chunks
    n = body.shape[0]
    out = np.empty(n)
    out_nt = np.empty(n)
    lengths = a.lengths
    inv_vals = 1.0 / a.values
    step = max(1, int(2_000_000 // max(1, nodes * body.shape[1])))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        s = scale * x[None, :, None] * body[lo:hi, None, :]  # (m, nodes, terms)
        lap = np.einsum(
            "j,mntj->mnt", lengths, np.exp(-s[..., None] * inv_vals), optimize=True
        )
        with np.errstate(divide="ignore"):  # underflowed factors -> -inf, fine
            log_prod = np.log(lap).sum(axis=2)  # (m, nodes)
        tail_term = -scale * x[None, :] * (mean_inv * tail_mass[lo:hi, None])
        f = log_prod + tail_term + x[None, :]
        f_nt = log_prod + x[None, :]
        top = f.max(axis=1, keepdims=True)
        out[lo:hi] = (np.log(np.dot(np.exp(f - top), w)) + top[:, 0])
        top = f_nt.max(axis=1, keepdims=True)
        out_nt[lo:hi] = (np.log(np.dot(np.exp(f_nt - top), w)) + top[:, 0])
    log_norm = theta * math.log(scale) - sc.gammaln(theta)
    return out + log_norm, out_nt + log_norm


def _sigma_integral_adaptive(body, tail_mass, a, theta, mean_inv):
    """Per-row adaptive fallback; slow, used when node doubling stalls."""
    out = np.empty(body.shape[0])
    for i, (row, tm) in enumerate(zip(body, tail_mass)):
        def integrand(u):
            # substitute s = u**(1/theta) to flatten the endpoint singularity
            s = u ** (1.0 / theta)
            lap = a.laplace_of_inverse(s * row)
            return float(np.prod(lap) * math.exp(-s * mean_inv * tm)) / theta

        val, err = _integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-9, limit=400)
        if not np.isfinite(val) or (val > 0 and err > 1e-6 * val):
            raise QuadratureFailure("adaptive sigma-integral did not converge")
        out[i] = math.log(val) - sc.gammaln(theta)
    return out
