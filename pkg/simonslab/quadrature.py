"""Principal-value surface integration, tail certificates and moment oracles"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from simonslab.core.errors import (ConfigError, DivergentTailError, IntegrandError,
                                   ParameterError)
from simonslab.core.reduction import rounding_floor, tree_sum
from simonslab.kernels import unit_sphere_area

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240917
MC_CHUNK = 1_000_000
TAIL_SHELLS = 200
SHELL_SAMPLES = 33


@dataclass(frozen=True)
class PVIntegralResult:
    """Truncated PV integral with its delta extrapolation"""
    value: float
    delta: float
    R: float
    tail_bound: float
    extrapolated_value: float
    error_estimate: float
    deltas: tuple = ()
    values: tuple = ()

    def to_record(self):
        return {"value": self.value, "delta": self.delta, "R": self.R,
                "tail_bound": self.tail_bound, "extrapolated_value": self.extrapolated_value,
                "error_estimate": self.error_estimate}


def check_finite(values, rule, mask=None):
    """Raise IntegrandError at the first non-finite retained value"""
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if mask is not None:
        bad &= mask
    if np.any(bad):
        k = int(np.argmax(bad))
        raise IntegrandError(k, rule.points[k], float(values[k]))
    return values


def node_sum(rule, values):
    """Deterministic sum of w_k values_k over the rule"""
    values = check_finite(values, rule)
    if values.ndim == 1:
        return float(tree_sum(rule.weights * values))
    return tree_sum(rule.weights.reshape((-1,) + (1,) * (values.ndim - 1)) * values)


def pv_surface_integral(integrand, rule, delta_schedule=None, gamma=1.0, tail=0.0):
    """Sum w_k integrand(rule)_k outside B_delta for every delta, extrapolated to 0.

    ``integrand`` receives the rule and returns one value per node.  The
    Richardson step fits S(delta) = S0 + a delta^gamma through the last two
    deltas of the (strictly decreasing) schedule.
    """
    deltas = [rule.exclusion] if delta_schedule is None else [float(d) for d in delta_schedule]
    if not deltas:
        raise ParameterError("empty delta schedule")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ParameterError(f"delta schedule must be strictly decreasing: {deltas}")
    if deltas[-1] < rule.exclusion:
        raise ParameterError(f"delta {deltas[-1]} is below the rule exclusion {rule.exclusion}")
    if deltas[0] >= rule.radius_limit:
        raise ParameterError(f"delta {deltas[0]} is not resolved by the rule (limit {rule.radius_limit})")

    values = np.asarray(integrand(rule), dtype=float)
    if values.shape != rule.weights.shape:
        raise ParameterError("integrand must return one value per node")
    check_finite(values, rule, rule.retained(deltas[-1]))
    contributions = rule.weights * np.where(np.isfinite(values), values, 0.0)

    sums = [float(tree_sum(np.where(rule.retained(d), contributions, 0.0))) for d in deltas]
    floor = rounding_floor(contributions)
    if len(sums) == 1:
        extrapolated = sums[0]
        error = floor
    else:
        d1, d2 = deltas[-2] ** gamma, deltas[-1] ** gamma
        slope = (sums[-2] - sums[-1]) / (d1 - d2)
        extrapolated = sums[-1] - slope * d2
        error = abs(extrapolated - sums[-1]) + floor
    logger.debug("PV integral: deltas=%s sums=%s extrapolated=%.12g", deltas, sums, extrapolated)
    return PVIntegralResult(value=sums[-1], delta=deltas[-1], R=rule.truncation,
                            tail_bound=float(tail), extrapolated_value=extrapolated,
                            error_estimate=float(error), deltas=tuple(deltas), values=tuple(sums))


def _shell_sup(kernel, lo, hi, derivative):
    r = np.linspace(lo, hi, SHELL_SAMPLES)
    fn = kernel.profile_derivative if derivative else kernel.profile
    return float(np.max(np.abs(fn(r))))


def tail_bound(rule, kernel, r, derivative=False):
    """Certified bound for the omitted integral of (|H| + 1)|K| outside B_r.

    Uses the rule's growth certificate over dyadic shells [2^k r, 2^(k+1) r]:
    power-law kernels sum the geometric series in closed form, profile
    kernels add sampled shell maxima.
    """
    r = float(r)
    support = kernel.support_radius
    if support is not None and support <= r:
        return 0.0
    growth = rule.growth
    if growth is None:
        raise ConfigError("quadrature.R0", "rule has no growth certificate; lower R0")
    if r < growth.R0:
        raise ParameterError(f"tail radius {r} is below R0={growth.R0}")
    beta, constant = growth.beta, growth.constant

    envelope = kernel.envelope(derivative)
    if envelope is not None:
        amplitude, b = envelope
        if b <= beta:
            raise DivergentTailError(f"kernel decay {b} does not beat the growth exponent {beta}")
        return amplitude * constant * 2.0 ** beta * r ** (beta - b) / (1.0 - 2.0 ** (beta - b))

    if kernel.decay_order <= beta:
        raise DivergentTailError(f"kernel decay {kernel.decay_order} does not beat the growth exponent {beta}")
    total = 0.0
    for k in range(TAIL_SHELLS):
        lo, hi = r * 2.0 ** k, r * 2.0 ** (k + 1)
        if support is not None and lo >= support:
            break
        term = _shell_sup(kernel, lo, hi, derivative) * constant * hi ** beta
        total += term
        if term < 1e-300 or (k > 4 and term < 1e-17 * total):
            break
    return total


def tail_shells(rule, kernel, r, shells=50):
    """Direct partial sums of the power-envelope series, for cross-checks"""
    growth = rule.growth
    amplitude, b = kernel.envelope()
    return sum(amplitude * growth.constant * (2.0 ** (k + 1) * r) ** growth.beta * (2.0 ** k * r) ** -b
               for k in range(shells))


# -- moment oracles -----------------------------------------------------------

def _check_dimension(n):
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise ParameterError(f"dimension must be an integer >= 2, got {n}")
    return int(n)


def ball_moment_x1_4(n):
    """Q = int_{B_1} x_1^4 = 3 |S^{n-1}| / (n (n+2) (n+4))"""
    n = _check_dimension(n)
    return 3.0 * unit_sphere_area(n) / (n * (n + 2) * (n + 4))


def sphere_moment_theta1_4(n):
    """int_{S^{n-1}} theta_1^4 = 3 |S^{n-1}| / (n (n+2))"""
    n = _check_dimension(n)
    return 3.0 * unit_sphere_area(n) / (n * (n + 2))


def ball_moment_x1sq_x2sq(n):
    """D = int_{B_1} x_1^2 x_2^2 = Q / 3"""
    return ball_moment_x1_4(n) / 3.0


def varpi(n):
    """|S^{n-2}| / (n - 1)"""
    n = _check_dimension(n)
    return unit_sphere_area(n - 1) / (n - 1)


def c_star(n):
    """3 varpi / (n + 1), which equals the theta_1^4 moment of S^{n-2}"""
    return 3.0 * varpi(n) / (n + 1)


def moments_table(ns):
    """Rows (n, Q, D, sphere_moment, varpi, c_star)"""
    rows = []
    for n in ns:
        rows.append({"n": int(n), "Q": ball_moment_x1_4(n), "D": ball_moment_x1sq_x2sq(n),
                     "sphere_moment": sphere_moment_theta1_4(n), "varpi": varpi(n),
                     "c_star": c_star(n)})
    return rows


def _mc_ball(n, samples, seed, fn):
    """Monte-Carlo integral of fn over B_1 by rejection from the cube"""
    n = _check_dimension(n)
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        size = min(MC_CHUNK, samples - done)
        x = rng.uniform(-1.0, 1.0, (size, n))
        inside = np.einsum("ij,ij->i", x, x) <= 1.0
        values = np.where(inside, fn(x), 0.0) * 2.0 ** n
        total += float(np.sum(values))
        total_sq += float(np.sum(values ** 2))
        done += size
    mean = total / samples
    variance = max(total_sq / samples - mean ** 2, 0.0)
    return mean, math.sqrt(variance / samples)


def mc_ball_moment_x1_4(n, samples=10 ** 7, seed=DEFAULT_SEED):
    """(estimate, standard error) of int_{B_1} x_1^4"""
    return _mc_ball(n, samples, seed, lambda x: x[:, 0] ** 4)


def mc_rotated_mixed_moment(n, samples=10 ** 7, seed=DEFAULT_SEED):
    """(estimate, standard error) of int_{B_1} 4 X_1^2 X_2^2 under the 45 degree rotation.

    With X_1 = (x_1 + x_2)/sqrt 2 and X_2 = (x_1 - x_2)/sqrt 2 the integrand
    is (x_1^2 - x_2^2)^2, whose exact integral is 2Q - 2D.
    """
    def fn(x):
        big1 = (x[:, 0] + x[:, 1]) / math.sqrt(2.0)
        big2 = (x[:, 0] - x[:, 1]) / math.sqrt(2.0)
        return 4.0 * big1 ** 2 * big2 ** 2
    return _mc_ball(n, samples, seed, fn)


def sphere_product_rule(order=32):
    """Nodes and weights on S^2: Gauss-Legendre in cos(theta) times uniform phi"""
    z, wz = np.polynomial.legendre.leggauss(order)
    m = 2 * order
    phi = 2.0 * math.pi * np.arange(m) / m
    s = np.sqrt(1.0 - z ** 2)
    points = np.stack([np.outer(s, np.cos(phi)).ravel(), np.outer(s, np.sin(phi)).ravel(),
                       np.repeat(z, m)], axis=1)
    weights = np.repeat(wz, m) * (2.0 * math.pi / m)
    return points, weights
