"""Stage-1 solver: recover a short vector, up to global phase, from squared
magnitudes of its random linear measurements.

The measurement map lifts to a linear operator on Hermitian matrices,
``lift(X)_i = p_i* X p_i``, which equals ``|<p_i, y>|^2`` on rank-1
``X = y y*``.  The solver runs accelerated projected gradient descent on

    minimize  0.5 * ||lift(X) - b||_2^2 + lam * trace(X)   over  X >= 0 (PSD)

and extracts the leading eigenpair of the solution as the vector estimate.
Every iterate is projected onto the PSD cone by eigenvalue clipping, with the
trace penalty folded in as a soft shift of the eigenvalues.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

__all__ = [
    "PhaseliftOptions",
    "LiftedSolution",
    "lifted_forward",
    "lifted_adjoint",
    "solve_phaselift",
    "estimate_stage1_noise",
]


@dataclass
class PhaseliftOptions:
    """Knobs for the projected-gradient solver; defaults suit small m."""

    max_iters: int = 5000
    tol: float = 1e-9  # relative objective / iterate change
    lam: float | None = None  # trace weight; None = 1e-10 * ||adjoint(b)||_op
    power_iters: int = 20  # Lipschitz estimation
    eta_floor: float = 1e-8  # stage-2 noise-estimate floor
    kappa: float = 1.0  # stage-2 noise-estimate multiplier


@dataclass
class LiftedSolution:
    """PSD solution matrix with its rank-1 summary and solver diagnostics."""

    X: np.ndarray  # Hermitian PSD, m x m
    top_eigenvalue: float
    top_eigenvector: np.ndarray  # unit norm
    y_hat: np.ndarray  # sqrt(top_eigenvalue) * top_eigenvector
    residual: float  # ||lift(X) - b||_2
    iterations: int
    converged: bool


def _check_hermitian(X, atol=1e-10):
    dev = np.max(np.abs(X - X.conj().T))
    if dev > atol * max(1.0, float(np.max(np.abs(X)))):
        raise ValueError(f"matrix is not Hermitian within tolerance (deviation {dev:.3e})")


def lifted_forward(P, X, check=True):
    """Apply the lifting operator: real vector with entries ``p_i* X p_i``.

    Equals the squared magnitudes ``|P y|^2`` entrywise when ``X = y y*``.
    """
    P = np.asarray(P, dtype=complex)
    X = np.asarray(X, dtype=complex)
    if X.shape != (P.shape[1], P.shape[1]):
        raise ValueError(f"shape mismatch: P is {P.shape}, X is {X.shape}")
    if check:
        _check_hermitian(X)
    PX = P @ X
    return np.einsum("ij,ij->i", PX, P.conj()).real


def lifted_adjoint(P, w):
    """Adjoint of the lifting operator: the Hermitian matrix ``sum_i w_i p_i p_i*``.

    Satisfies ``<lift(X), w> = Re trace(X* adjoint(w))`` for Hermitian X and
    real w.
    """
    P = np.asarray(P, dtype=complex)
    w = np.asarray(w, dtype=float)
    if w.shape != (P.shape[0],):
        raise ValueError(f"shape mismatch: P has {P.shape[0]} rows, w has length {w.shape[0]}")
    return (P.conj().T * w) @ P


def _lipschitz_estimate(P, iters):
    """Power iteration on X -> adjoint(lift(X)), started from the identity."""
    m = P.shape[1]
    X = np.eye(m, dtype=complex) / np.sqrt(m)
    lam = 1.0
    for _ in range(max(iters, 1)):
        Y = lifted_adjoint(P, lifted_forward(P, X, check=False))
        norm = np.linalg.norm(Y)
        if norm == 0.0:
            return 1.0
        lam = float(np.real(np.vdot(X, Y)))
        X = Y / norm
    return max(lam, 1e-12)


def _prox_psd_trace(V, shift):
    """Project a Hermitian matrix onto the PSD cone with eigenvalues soft-shifted down.

    Returns the eigenfactors of the result: (eigvals > 0, eigvecs) so callers
    can exploit low rank.
    """
    V = 0.5 * (V + V.conj().T)
    vals, vecs = np.linalg.eigh(V)
    vals = vals - shift
    keep = vals > 0.0
    return vals[keep], vecs[:, keep]


def _factors_to_matrix(vals, vecs, m):
    if vals.size == 0:
        return np.zeros((m, m), dtype=complex)
    return (vecs * vals) @ vecs.conj().T


def _factors_forward(P, vals, vecs):
    """lift(V diag(vals) V*) computed column-wise: sum_j vals_j |P v_j|^2."""
    if vals.size == 0:
        return np.zeros(P.shape[0])
    PV = P @ vecs
    return (np.abs(PV) ** 2) @ vals


def solve_phaselift(P, b, opts=None):
    """Recover a vector from squared-magnitude measurements via the lifted program.

    Runs FISTA-style accelerated projected gradient with a monotone restart:
    whenever the accelerated step would increase the objective, the step is
    recomputed from the previous iterate without momentum (halving the step
    as a last resort), so the objective is nonincreasing.  Convergence is
    declared when the relative objective change or the relative iterate
    change drops below ``opts.tol``.

    Negative measurement entries (possible under additive noise) are clipped
    to zero before solving.  Non-convergence within ``opts.max_iters`` is
    reported through the ``converged`` flag, not raised; non-finite iterates
    raise :class:`NumericalError`.
    """
    opts = opts if opts is not None else PhaseliftOptions()
    P = np.asarray(P, dtype=complex)
    b = np.asarray(b, dtype=float)
    if P.ndim != 2:
        raise ValueError("P must be a 2-d matrix")
    if b.shape != (P.shape[0],):
        raise ValueError(f"length mismatch: P has {P.shape[0]} rows, b has length {b.shape[0]}")
    m_tilde, m = P.shape
    b = np.clip(b, 0.0, None)

    L = _lipschitz_estimate(P, opts.power_iters)
    step = 0.9 / L
    if opts.lam is not None:
        lam = float(opts.lam)
    else:
        # tie-break toward low rank without biasing the fit measurably
        gram = lifted_adjoint(P, b)
        evals = np.linalg.eigvalsh(gram)
        lam = 1e-10 * float(np.max(np.abs(evals))) if evals.size else 0.0

    def objective(ax, trace):
        return 0.5 * float(np.sum((ax - b) ** 2)) + lam * trace

    X = np.zeros((m, m), dtype=complex)
    AX = np.zeros(m_tilde)
    F = objective(AX, 0.0)
    X_prev, AX_prev = X, AX
    t_momentum = 1.0
    converged = False
    iterations = 0

    for iterations in range(1, opts.max_iters + 1):
        beta = 0.0
        if t_momentum > 1.0:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_momentum**2))
            beta = (t_momentum - 1.0) / t_next
            t_momentum = t_next
        else:
            t_momentum = 0.5 * (1.0 + np.sqrt(5.0))

        # lift() is linear, so the extrapolated measurement vector is free
        Y = X + beta * (X - X_prev) if beta else X
        AY = AX + beta * (AX - AX_prev) if beta else AX
        grad = lifted_adjoint(P, AY - b)
        vals, vecs = _prox_psd_trace(Y - step * grad, step * lam)
        X_new = _factors_to_matrix(vals, vecs, m)
        AX_new = _factors_forward(P, vals, vecs)
        F_new = objective(AX_new, float(np.sum(vals)))

        slack = 1e-12 * max(1.0, abs(F))
        if F_new > F + slack:
            # overshoot from acceleration: restart from X without momentum
            t_momentum = 1.0
            grad = lifted_adjoint(P, AX - b)
            local_step = step
            for _ in range(60):
                vals, vecs = _prox_psd_trace(X - local_step * grad, local_step * lam)
                X_new = _factors_to_matrix(vals, vecs, m)
                AX_new = _factors_forward(P, vals, vecs)
                F_new = objective(AX_new, float(np.sum(vals)))
                if F_new <= F + slack:
                    break
                local_step *= 0.5

        if not np.isfinite(F_new):
            raise NumericalError("lifted solver produced a non-finite objective")

        dX = float(np.linalg.norm(X_new - X))
        norm_X = float(np.linalg.norm(X))
        obj_settled = abs(F - F_new) <= opts.tol * max(abs(F), 1e-30)
        iterate_settled = dX <= opts.tol * max(norm_X, 1e-30)
        X_prev, AX_prev = X, AX
        X, AX, F = X_new, AX_new, F_new
        if obj_settled or iterate_settled:
            converged = True
            break

    evals, evecs = np.linalg.eigh(X)
    top = max(float(evals[-1]), 0.0)
    top_vec = evecs[:, -1]
    y_hat = np.sqrt(top) * top_vec
    residual = float(np.linalg.norm(lifted_forward(P, X, check=False) - b))
    return LiftedSolution(
        X=X,
        top_eigenvalue=top,
        top_eigenvector=top_vec,
        y_hat=y_hat,
        residual=residual,
        iterations=iterations,
        converged=converged,
    )


def estimate_stage1_noise(solution, m_tilde, kappa=1.0, eta_floor=1e-8):
    """Heuristic bound on the stage-1 estimate error, used as the stage-2 radius.

    ``eta = max(eta_floor, kappa * residual / sqrt(m_tilde) / max(||y_hat||, eps))``.
    The residual lives in squared-magnitude units; dividing by the estimate
    norm brings it back to amplitude scale.
    """
    norm_y = float(np.linalg.norm(solution.y_hat))
    eta = kappa * solution.residual / np.sqrt(m_tilde) / max(norm_y, 1e-12)
    return max(float(eta_floor), float(eta))
