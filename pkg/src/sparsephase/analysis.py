"""Small-instance verifiers for compressive-sensing matrix properties.

Certifying the robust null space property is NP-hard in general, so this
module ships falsifiers and exact brute force for tiny instances only: the
restricted isometry constant by full support enumeration, a randomized
null-space-property prober, and an evaluator for the two-sided norm sandwich
those constants imply.  Intended sizes are N <= 16-ish, s <= 2.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

__all__ = [
    "RicReport",
    "NspReport",
    "CxBoundsReport",
    "brute_force_ric",
    "probe_nsp",
    "nsp_probe_vector",
    "check_cx_bounds",
]

_MAX_ENUMERATION = 10**6


@dataclass(frozen=True)
class RicReport:
    order: int  # 2s
    delta: float  # exact restricted isometry constant of that order
    enumerated_supports: int


@dataclass(frozen=True)
class NspReport:
    s: int
    rho: float
    tau: float
    worst_violation: float  # max over probes of ||x_S||_1 - rho*||x_rest||_1 - tau*||Cx||_2
    satisfied_on_probes: bool  # worst_violation <= 0


@dataclass(frozen=True)
class CxBoundsReport:
    lower: float
    value: float  # ||C x||_2
    upper: float
    lower_ok: bool
    upper_ok: bool


def brute_force_ric(C, s):
    """Exact restricted isometry constant of order 2s by support enumeration.

    For every support T of size 2s, computes the extreme squared singular
    values of the column submatrix and returns
    ``max(sigma_max^2 - 1, 1 - sigma_min^2)`` over all T.  Refuses when the
    enumeration would exceed 10^6 supports.
    """
    C = np.asarray(C, dtype=complex)
    n = C.shape[1]
    order = 2 * s
    if not 1 <= order <= n:
        raise ValueError(f"order 2s={order} must satisfy 1 <= 2s <= {n}")
    count = math.comb(n, order)
    if count > _MAX_ENUMERATION:
        raise ValueError(
            f"C({n},{order}) = {count} supports exceeds the enumeration guard "
            f"({_MAX_ENUMERATION}); shrink N or s"
        )
    delta = 0.0
    for T in combinations(range(n), order):
        sub = C[:, T]
        sv = np.linalg.svd(sub, compute_uv=False)
        smax_sq = float(sv[0] ** 2)
        smin = float(sv[-1]) if sv.size >= order else 0.0  # rank-deficient tall case
        smin_sq = smin**2 if sv.size >= order else 0.0
        delta = max(delta, smax_sq - 1.0, 1.0 - smin_sq)
    return RicReport(order=order, delta=delta, enumerated_supports=count)


def _base_entropy(rng):
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    # derive a stable entropy value so each probe is reproducible by index
    return int(rng.integers(0, 2**63 - 1))


def nsp_probe_vector(n, s, index, entropy):
    """The index-th probe vector: even indices dense Gaussian, odd concentrated.

    Concentrated probes put all their mass on a random size-s support, the
    adversarial direction for the null space property.  Pure function of
    (n, s, index, entropy).
    """
    prng = np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(index,)))
    if index % 2 == 0:
        x = prng.standard_normal(n) + 1j * prng.standard_normal(n)
    else:
        x = np.zeros(n, dtype=complex)
        supp = prng.choice(n, size=s, replace=False)
        x[supp] = prng.standard_normal(s) + 1j * prng.standard_normal(s)
    return x


def _worst_support_gap(x, s, rho, enumerate_supports):
    """max over |S| = s of ||x_S||_1 - rho * ||x_{S^c}||_1.

    The maximum is attained on the s largest-magnitude entries; tiny
    instances enumerate every support as a belt-and-braces check.
    """
    mag = np.abs(x)
    total = float(np.sum(mag))
    if enumerate_supports:
        best = -np.inf
        for S in combinations(range(x.size), s):
            on = float(np.sum(mag[list(S)]))
            best = max(best, on - rho * (total - on))
        return best
    top = float(np.sum(np.sort(mag)[-s:]))
    return top - rho * (total - top)


def probe_nsp(C, s, rho, tau, probes, rng):
    """Search for violations of the order-s robust null space property.

    Evaluates ``||x_S||_1 <= rho*||x_{S^c}||_1 + tau*||Cx||_2`` over the
    worst support of size s for each random probe and reports the worst
    violation found.  This is a falsifier: a nonpositive worst violation
    means no probe disproved the property, not a certificate.

    ``rng`` may be a Generator or an integer entropy; probes are
    reproducible individually via :func:`nsp_probe_vector`.
    """
    C = np.asarray(C, dtype=complex)
    n = C.shape[1]
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not 1 <= s <= n:
        raise ValueError(f"s={s} must satisfy 1 <= s <= {n}")
    entropy = _base_entropy(rng)
    enumerate_supports = math.comb(n, s) <= 20000
    worst = -np.inf
    for i in range(probes):
        x = nsp_probe_vector(n, s, i, entropy)
        gap = _worst_support_gap(x, s, rho, enumerate_supports)
        violation = gap - tau * float(np.linalg.norm(C @ x))
        worst = max(worst, violation)
    return NspReport(
        s=s,
        rho=rho,
        tau=tau,
        worst_violation=float(worst),
        satisfied_on_probes=bool(worst <= 0.0),
    )


def check_cx_bounds(C, s, rho, tau, delta2s, x):
    """Evaluate the two-sided sandwich on ``||C x||_2`` for one vector.

    Lower bound: the worst support gap divided by tau (a direct consequence
    of the null space property).  Upper bound evaluated as
    ``sqrt(1 - delta2s) * (||x||_2 + ||x||_1 / sqrt(2s))``; violations are
    reported in the output, not asserted, since this form is looser or
    tighter depending on the matrix.
    """
    C = np.asarray(C, dtype=complex)
    x = np.asarray(x, dtype=complex).ravel()
    value = float(np.linalg.norm(C @ x))
    if not np.any(x):
        return CxBoundsReport(lower=0.0, value=0.0, upper=0.0, lower_ok=True, upper_ok=True)
    gap = _worst_support_gap(x, s, rho, enumerate_supports=False)
    lower = max(gap, 0.0) / tau
    upper = float(
        np.sqrt(max(1.0 - delta2s, 0.0))
        * (np.linalg.norm(x) + np.sum(np.abs(x)) / np.sqrt(2 * s))
    )
    return CxBoundsReport(
        lower=lower,
        value=value,
        upper=upper,
        lower_ok=bool(lower <= value * (1 + 1e-12) + 1e-12),
        upper_ok=bool(value <= upper * (1 + 1e-12) + 1e-12),
    )
