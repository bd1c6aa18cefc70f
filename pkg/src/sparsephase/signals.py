"""Sparse test signals and phase-invariant error metrics.

Signals recovered from squared-magnitude measurements are identifiable only
up to a global phase factor, so every error metric here first aligns the
estimate to the reference by the optimal phase rotation.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SparseSignal",
    "ErrorReport",
    "gen_sparse_signal",
    "align_phase",
    "best_s_term_error",
]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SparseSignal:
    """An exactly s-sparse complex vector with its support metadata."""

    values: np.ndarray  # complex, length n, unit l2 norm when generated here
    support: np.ndarray  # sorted indices of the nonzero entries
    n: int
    s: int


@dataclass(frozen=True)
class ErrorReport:
    """Phase-aligned reconstruction error between a reference and an estimate.

    ``relative_l2`` and ``relative_db`` are NaN when the reference vector is
    zero (relative error undefined); ``relative_db`` is -inf at exact
    recovery.
    """

    aligned_l2: float
    relative_l2: float
    relative_db: float
    theta_star: float  # optimal global phase, in [0, 2*pi)


def gen_sparse_signal(n, s, rng):
    """Draw a random unit-norm, exactly s-sparse complex vector.

    The support is chosen uniformly without replacement; nonzero entries are
    i.i.d. standard complex Gaussian (real and imaginary parts each
    N(0, 1/2)), and the result is rescaled to unit l2 norm.

    Parameters
    ----------
    n : int
        Ambient dimension.
    s : int
        Number of nonzero entries, 1 <= s <= n.
    rng : numpy.random.Generator
        Seeded random stream; identical streams give identical signals.
    """
    if not 1 <= s <= n:
        raise ValueError(f"sparsity s={s} must satisfy 1 <= s <= n={n}")
    support = np.sort(rng.choice(n, size=s, replace=False))
    nonzeros = np.sqrt(0.5) * (rng.standard_normal(s) + 1j * rng.standard_normal(s))
    values = np.zeros(n, dtype=complex)
    values[support] = nonzeros
    values /= np.linalg.norm(values)
    return SparseSignal(values=values, support=support, n=n, s=s)


def align_phase(x, xhat):
    """Error of ``xhat`` against ``x`` after optimal global-phase alignment.

    Minimizes ``||exp(i*theta)*x - xhat||_2`` over theta.  The minimizer has
    the closed form ``theta* = arg(<x, xhat>)`` with the inner product
    conjugate-linear in its first argument, and the minimum equals
    ``sqrt(||x||^2 + ||xhat||^2 - 2|<x, xhat>|)``.
    """
    x = np.asarray(x, dtype=complex).ravel()
    xhat = np.asarray(xhat, dtype=complex).ravel()
    if x.shape != xhat.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {xhat.shape[0]}")
    inner = np.vdot(x, xhat)  # sum(conj(x) * xhat)
    theta_star = float(np.angle(inner)) % TWO_PI
    nx_sq = float(np.sum(np.abs(x) ** 2))
    # evaluating the rotated difference directly avoids the catastrophic
    # cancellation the expanded form suffers near exact recovery
    aligned_l2 = float(np.linalg.norm(np.exp(1j * theta_star) * x - xhat))
    if nx_sq == 0.0:
        relative_l2 = float("nan")
        relative_db = float("nan")
    else:
        relative_l2 = aligned_l2 / float(np.sqrt(nx_sq))
        relative_db = 20.0 * np.log10(relative_l2) if relative_l2 > 0.0 else float("-inf")
    return ErrorReport(
        aligned_l2=aligned_l2,
        relative_l2=relative_l2,
        relative_db=relative_db,
        theta_star=theta_star,
    )


def best_s_term_error(x, s, norm=2):
    """Distance from ``x`` to its best s-term approximation.

    Keeps the ``s`` largest-magnitude entries (ties broken by lowest index)
    and returns the l1 or l2 norm of the remainder.  Zero whenever ``x`` has
    at most ``s`` nonzeros.
    """
    x = np.asarray(x, dtype=complex).ravel()
    if not 0 <= s <= x.size:
        raise ValueError(f"s={s} must satisfy 0 <= s <= {x.size}")
    if norm not in (1, 2):
        raise ValueError(f"norm must be 1 or 2, got {norm!r}")
    # stable sort keeps equal magnitudes in index order
    order = np.argsort(-np.abs(x), kind="stable")
    tail = x[order[s:]]
    if norm == 1:
        return float(np.sum(np.abs(tail)))
    return float(np.linalg.norm(tail))
