"""Measurement-ensemble constructors and the noisy magnitude forward model.

An ensemble is a pair of matrices: a phase-retrieval factor ``P`` acting on a
short compressed vector, and a compressive-sensing factor ``C`` mapping the
ambient space down to that compressed space.  Measurements of a signal ``x``
are the entrywise squared magnitudes of ``P @ C @ x``, optionally plus noise.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "PHASE_KINDS",
    "CS_KINDS",
    "MeasurementEnsemble",
    "MagnitudeMeasurements",
    "gen_phase_matrix",
    "gen_cs_matrix",
    "make_ensemble",
    "forward",
    "add_noise",
    "save_ensemble",
    "load_ensemble",
]

PHASE_KINDS = ("complex-gaussian", "sphere-uniform")
CS_KINDS = ("real-gaussian", "subsampled-dft", "fourier-combination")

# materialize P @ C eagerly up to this many entries; compose lazily above it
_MATERIALIZE_LIMIT = 2**24


@dataclass(frozen=True)
class MeasurementEnsemble:
    """The factor pair (P, C) and, when small enough, their composition."""

    P: np.ndarray  # complex, m_tilde x m
    C: np.ndarray  # complex, m x n
    A: np.ndarray | None  # P @ C, or None when composed lazily
    kinds: tuple  # (phase kind, cs kind)
    seed: int | None  # regeneration seed, None for hand-built ensembles

    @property
    def m_tilde(self):
        return self.P.shape[0]

    @property
    def m(self):
        return self.P.shape[1]

    @property
    def n(self):
        return self.C.shape[1]

    def apply(self, x):
        """Compute ``A @ x`` from the materialized product or stage-wise."""
        x = np.asarray(x, dtype=complex)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected vector of length {self.n}, got {x.shape[-1]}")
        if self.A is not None:
            return self.A @ x
        return self.P @ (self.C @ x)


@dataclass(frozen=True)
class MagnitudeMeasurements:
    """Observed squared-magnitude vector with its realized noise."""

    b: np.ndarray  # real, length m_tilde
    noise: np.ndarray  # realized additive noise, same length
    snr_db: float | None = None
    clean: np.ndarray | None = None  # noiseless |A x|^2, kept for diagnostics


def gen_phase_matrix(m_tilde, m, kind, rng):
    """Random phase-retrieval matrix with ``m_tilde`` rows in C^m.

    ``complex-gaussian``: entries i.i.d. with real and imaginary parts each
    N(0, 1/2), so E|entry|^2 = 1.  ``sphere-uniform``: each row an
    independent complex Gaussian row rescaled to l2 norm sqrt(m).
    """
    if m_tilde < 1 or m < 1:
        raise ValueError(f"dimensions must be positive, got {m_tilde}x{m}")
    if kind not in PHASE_KINDS:
        raise ValueError(f"unknown phase matrix kind {kind!r}; expected one of {PHASE_KINDS}")
    mat = np.sqrt(0.5) * (
        rng.standard_normal((m_tilde, m)) + 1j * rng.standard_normal((m_tilde, m))
    )
    if kind == "sphere-uniform":
        row_norms = np.linalg.norm(mat, axis=1, keepdims=True)
        mat = mat * (np.sqrt(m) / row_norms)
    return mat


def _dft_rows(rows, n):
    """Selected rows of the unitary n x n DFT matrix."""
    k = np.asarray(rows)[:, None]
    j = np.arange(n)[None, :]
    return np.exp(-2j * np.pi * k * j / n) / np.sqrt(n)


def gen_cs_matrix(m, n, kind, rng):
    """Random compressive-sensing matrix, m x n with m < n.

    ``real-gaussian``: entries i.i.d. N(0, 1/m), so columns have unit
    expected norm.  ``subsampled-dft``: m distinct rows of the unitary DFT,
    scaled by sqrt(n/m).  ``fourier-combination``: G @ F with G an m x r
    i.i.d. N(0, 1/m) matrix and F holding r = min(4m, n) random distinct
    unitary-DFT rows.
    """
    if m < 1:
        raise ValueError(f"dimensions must be positive, got {m}x{n}")
    if m >= n:
        raise ValueError(f"compression requires m < n, got m={m}, n={n}")
    if kind not in CS_KINDS:
        raise ValueError(f"unknown cs matrix kind {kind!r}; expected one of {CS_KINDS}")
    if kind == "real-gaussian":
        return rng.standard_normal((m, n)).astype(complex) / np.sqrt(m)
    if kind == "subsampled-dft":
        rows = rng.choice(n, size=m, replace=False)
        return np.sqrt(n / m) * _dft_rows(rows, n)
    r = min(4 * m, n)
    rows = rng.choice(n, size=r, replace=False)
    combiner = rng.standard_normal((m, r)) / np.sqrt(m)
    return combiner @ _dft_rows(rows, n)


def make_ensemble(n, m, m_tilde, p_kind="complex-gaussian", c_kind="real-gaussian", seed=0):
    """Build a measurement ensemble deterministically from a single seed.

    The draw order is fixed (P first, then C) so that (kinds, dims, seed)
    fully determines the ensemble; this is the canonical persistence
    mechanism used by :func:`save_ensemble` / :func:`load_ensemble`.
    """
    rng = np.random.default_rng(seed)
    P = gen_phase_matrix(m_tilde, m, p_kind, rng)
    C = gen_cs_matrix(m, n, c_kind, rng)
    A = P @ C if m_tilde * n <= _MATERIALIZE_LIMIT else None
    return MeasurementEnsemble(P=P, C=C, A=A, kinds=(p_kind, c_kind), seed=seed)


def forward(ensemble, x):
    """Noiseless magnitude measurements ``|P C x|^2`` of a signal."""
    z = ensemble.apply(x)
    return np.abs(z) ** 2


def add_noise(clean, snr_db, rng):
    """Add Gaussian noise rescaled to hit the target SNR exactly.

    The realized noise is ``sigma * g`` with ``g`` i.i.d. standard normal and
    sigma chosen so that ``10*log10(||clean||^2 / ||noise||^2)`` equals
    ``snr_db`` for this draw, not merely in expectation.  ``snr_db = inf``
    means noiseless.
    """
    clean = np.asarray(clean, dtype=float)
    clean_norm = np.linalg.norm(clean)
    if clean_norm == 0.0:
        raise ValueError("cannot set an SNR against an all-zero clean vector")
    if np.isinf(snr_db):
        noise = np.zeros_like(clean)
        return MagnitudeMeasurements(
            b=clean.copy(), noise=noise, snr_db=float("inf"), clean=clean.copy()
        )
    g = rng.standard_normal(clean.shape[0])
    target_norm = clean_norm * 10.0 ** (-float(snr_db) / 20.0)
    noise = g * (target_norm / np.linalg.norm(g))
    return MagnitudeMeasurements(
        b=clean + noise, noise=noise, snr_db=float(snr_db), clean=clean.copy()
    )


def save_ensemble(ensemble, path):
    """Persist an ensemble as its regeneration recipe (kinds, dims, seed)."""
    if ensemble.seed is None:
        raise ValueError("only seed-generated ensembles can be persisted")
    spec = {
        "n": ensemble.n,
        "m": ensemble.m,
        "m_tilde": ensemble.m_tilde,
        "p_kind": ensemble.kinds[0],
        "c_kind": ensemble.kinds[1],
        "seed": ensemble.seed,
    }
    Path(path).write_text(json.dumps(spec, sort_keys=True, indent=2) + "\n")


def load_ensemble(path):
    """Regenerate an ensemble saved by :func:`save_ensemble`."""
    spec = json.loads(Path(path).read_text())
    return make_ensemble(
        n=spec["n"],
        m=spec["m"],
        m_tilde=spec["m_tilde"],
        p_kind=spec["p_kind"],
        c_kind=spec["c_kind"],
        seed=spec["seed"],
    )
