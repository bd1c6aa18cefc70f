"""Stage-2 solver: complex basis pursuit denoising.

Solves ``min ||z||_1  subject to  ||C z - y||_2 <= eta`` by ADMM with three
computational blocks per sweep: an exact projection onto the constraint set
(whose inner solve lives in the small measurement space), the complex
soft-threshold prox of the l1 norm, and the dual update.  The projection
reuses one cached eigendecomposition of ``C C*``, so the ADMM penalty can
adapt freely without any refactorization.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

__all__ = [
    "BpdnOptions",
    "BpdnSolution",
    "soft_threshold_complex",
    "solve_bpdn",
]


@dataclass
class BpdnOptions:
    tol: float = 1e-8  # relative primal/dual residual tolerance
    max_iters: int = 10000
    rho: float | None = None  # initial ADMM penalty; None = scaled to 0.1/eta
    adaptive: bool = True  # residual-balancing penalty adaptation
    adapt_period: int = 10  # iterations between penalty rebalance checks
    over_relax: float = 1.0  # over-relaxation parameter in (0, 2)


@dataclass
class BpdnSolution:
    z_hat: np.ndarray  # complex, length n
    l1_norm: float
    constraint_residual: float  # ||C z_hat - y||_2
    iterations: int
    converged: bool


def soft_threshold_complex(z, kappa):
    """Shrink each entry toward zero by ``kappa`` in modulus, keeping its phase.

    This is the exact prox of ``kappa * ||.||_1`` over complex vectors; zero
    entries stay zero.
    """
    if kappa < 0:
        raise ValueError(f"threshold must be nonnegative, got {kappa}")
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    scale = np.zeros_like(mag)
    np.divide(np.maximum(mag - kappa, 0.0), mag, out=scale, where=mag > 0)
    return z * scale


class _ConstraintProjector:
    """Euclidean projection onto ``{z : ||C z - y||_2 <= eta}``.

    The KKT system reads ``z_proj = z - C* (C C* + I/mu)^{-1} (C z - y)``
    with the multiplier ``mu >= 0`` chosen so the projected residual lands
    exactly on the ball; one eigendecomposition of ``C C*`` serves every mu
    (and the ``eta = 0`` affine limit).
    """

    def __init__(self, C, y, eta):
        self.C = C
        self.CH = C.conj().T
        self.y = y
        self.eta = float(eta)
        evals, evecs = np.linalg.eigh(C @ self.CH)
        self.evals = np.maximum(evals, 0.0)
        self.evecs = evecs
        if eta == 0.0 and self.evals[0] <= 1e-12 * self.evals[-1]:
            raise ValueError("C is row-rank deficient; the eta = 0 constraint set may be empty")

    def _multiplier(self, d_sq):
        """Root of ``sum d_sq / (1 + mu*evals)^2 = eta^2``; monotone in mu."""
        target = self.eta**2

        def excess(mu):
            return float(np.sum(d_sq / (1.0 + mu * self.evals) ** 2)) - target

        hi = 1.0
        for _ in range(400):
            if excess(hi) <= 0.0:
                break
            hi *= 4.0
        else:
            raise NumericalError("constraint projection multiplier diverged; y may lie outside range(C)")
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if excess(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def __call__(self, z):
        r = self.C @ z - self.y
        if np.linalg.norm(r) <= self.eta:
            return z
        d = self.evecs.conj().T @ r
        if self.eta == 0.0:
            return z - self.CH @ (self.evecs @ (d / self.evals))
        mu = self._multiplier(np.abs(d) ** 2)
        return z - self.CH @ (self.evecs @ (d * (mu / (1.0 + mu * self.evals))))


def solve_bpdn(C, y, eta, opts=None):
    """Minimize the l1 norm subject to an l2 residual ball constraint.

    The returned ``z_hat`` is the projected iterate, so it is feasible by
    construction (entries that the true minimizer zeroes are merely
    O(tol)-small rather than exactly zero).  Stopping follows Boyd-style
    primal/dual residual tests at relative tolerance ``opts.tol``.  The
    penalty starts at the scale of the constraint radius (``0.1 / eta``
    unless overridden) and is rebalanced by factor 2 every
    ``opts.adapt_period`` sweeps whenever one normalized residual exceeds
    ten times the other; both pieces are what let the solver resolve
    solution entries living at the scale of ``eta``.  When ``||y|| <= eta``
    the zero vector is already optimal and is returned immediately; hitting
    ``opts.max_iters`` reports ``converged=False``.
    """
    opts = opts if opts is not None else BpdnOptions()
    C = np.asarray(C, dtype=complex)
    y = np.asarray(y, dtype=complex).ravel()
    if C.ndim != 2:
        raise ValueError("C must be a 2-d matrix")
    m, n = C.shape
    if y.shape != (m,):
        raise ValueError(f"length mismatch: C has {m} rows, y has length {y.shape[0]}")
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")

    y_norm = float(np.linalg.norm(y))
    if y_norm <= eta:
        zero = np.zeros(n, dtype=complex)
        return BpdnSolution(
            z_hat=zero, l1_norm=0.0, constraint_residual=y_norm, iterations=0, converged=True
        )

    project = _ConstraintProjector(C, y, eta)
    alpha = float(opts.over_relax)
    if opts.rho is not None:
        rho = float(opts.rho)
    else:
        rho = 1.0 if eta == 0.0 else min(max(0.1 / eta, 1.0), 1e9)
    z = np.zeros(n, dtype=complex)
    v = np.zeros(n, dtype=complex)
    u = np.zeros(n, dtype=complex)  # scaled dual of z - v = 0

    abs_floor = 1e-14 * np.sqrt(n)
    converged = False
    iterations = 0
    for iterations in range(1, opts.max_iters + 1):
        z = project(v - u)
        z_relaxed = alpha * z + (1.0 - alpha) * v if alpha != 1.0 else z
        v_old = v
        v = soft_threshold_complex(z_relaxed + u, 1.0 / rho)
        u = u + z_relaxed - v

        pri = float(np.linalg.norm(z - v))
        dual = rho * float(np.linalg.norm(v - v_old))
        if not (np.isfinite(pri) and np.isfinite(dual)):
            raise NumericalError("bpdn ADMM produced non-finite residuals")
        eps_pri = abs_floor + opts.tol * max(np.linalg.norm(z), np.linalg.norm(v))
        eps_dual = abs_floor + opts.tol * rho * float(np.linalg.norm(u))
        if pri <= eps_pri and dual <= eps_dual:
            converged = True
            break

        if opts.adaptive and iterations % opts.adapt_period == 0:
            ratio_pri = pri / eps_pri
            ratio_dual = dual / eps_dual
            if ratio_pri > 10.0 * ratio_dual:
                rho *= 2.0
                u *= 0.5
            elif ratio_dual > 10.0 * ratio_pri:
                rho *= 0.5
                u *= 2.0

    return BpdnSolution(
        z_hat=z,
        l1_norm=float(np.sum(np.abs(z))),
        constraint_residual=float(np.linalg.norm(C @ z - y)),
        iterations=iterations,
        converged=converged,
    )
