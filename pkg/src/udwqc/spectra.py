"""Extremal and interior eigenpairs of device Hamiltonians.

Interior windows are solved by folded-spectrum Lanczos on ``(H - s)^2``
(matvec only) followed by a Rayleigh-Ritz refinement on ``H``.  A
shift-invert path (sparse LU) is available through ``method="shift-invert"``
and is much faster for windows deep inside a wide spectrum.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as sla

from .bhz import SparseHamiltonian

__all__ = [
    "EigenPair", "SpectralWindow", "SolverOptions", "SolverReport",
    "SolverError", "matvec", "spectral_radius_bound",
    "extremal_eigs", "interior_eigs",
]

# Below this dimension ARPACK is unreliable; a dense solve is used instead.
_DENSE_CUTOFF = 64
_DENSE_FALLBACK = 6000


class SolverError(RuntimeError):
    """Non-convergence; carries the partial report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True, eq=False)
class EigenPair:
    energy: float
    vector: np.ndarray = field(repr=False)
    residual: float


@dataclass(frozen=True)
class SpectralWindow:
    e_min: float
    e_max: float
    max_pairs: int = 64

    def __post_init__(self):
        if not self.e_min < self.e_max:
            raise ValueError("window requires e_min < e_max")
        if self.max_pairs < 1:
            raise ValueError("max_pairs must be positive")

    @property
    def center(self) -> float:
        return 0.5 * (self.e_min + self.e_max)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.e_max - self.e_min)

    def contains(self, e) -> np.ndarray:
        return (np.asarray(e) >= self.e_min) & (np.asarray(e) <= self.e_max)


@dataclass
class SolverOptions:
    method: str = "folded"
    tol: float = 1e-12
    krylov_factor: int = 4
    max_restarts: int = 40
    max_iterations: int = 200_000
    initial_pairs: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("folded", "shift-invert"):
            raise ValueError(f"unknown solver method {self.method!r}")


@dataclass
class SolverReport:
    method: str
    matvecs: int = 0
    restarts: int = 0
    requested: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    radius_estimate: float = 0.0
    converged: bool = False

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "matvecs": self.matvecs,
            "restarts": self.restarts,
            "requested": list(self.requested),
            "max_residual": max(self.residuals) if self.residuals else 0.0,
            "radius_estimate": self.radius_estimate,
            "converged": self.converged,
        }


def matvec(H: SparseHamiltonian, v: np.ndarray) -> np.ndarray:
    """Exact sparse product ``H v``."""
    return H.matvec(v)


def spectral_radius_bound(H: SparseHamiltonian) -> float:
    """Gershgorin bound: maximum absolute row sum."""
    return float(np.max(np.asarray(abs(H.csr).sum(axis=1)).ravel()))


def _start_vector(n, rng):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _rayleigh_ritz(H, vectors):
    """Orthonormalise ``vectors`` and diagonalise ``H`` in their span."""
    q, _ = la.qr(vectors, mode="economic")
    hq = H.csr @ q
    hs = q.conj().T @ hq
    hs = 0.5 * (hs + hs.conj().T)
    e, u = la.eigh(hs)
    v = q @ u
    r = np.linalg.norm(hq @ u - v * e, axis=0)
    return e, v, r


def _pairs(e, v, r):
    return [EigenPair(float(ei), v[:, i].copy(), float(ri)) for i, (ei, ri) in enumerate(zip(e, r))]


def _dense(H):
    e, v = la.eigh(H.toarray())
    r = np.linalg.norm(H.csr @ v - v * e, axis=0)
    return e, v, r


def _arpack(op, k, which, opts, report, n, **kw):
    rng = np.random.default_rng(opts.seed)
    ncv = min(n, max(opts.krylov_factor * k, k + 16))
    for attempt in range(opts.max_restarts + 1):
        try:
            return sla.eigsh(op, k=k, which=which, ncv=ncv, v0=_start_vector(n, rng),
                             tol=opts.tol, maxiter=opts.max_iterations, **kw)
        except sla.ArpackNoConvergence as exc:
            report.restarts = attempt + 1
            last = exc
    raise SolverError(f"ARPACK did not converge after {opts.max_restarts} restarts "
                      f"({len(last.eigenvalues)} of {k} pairs)", report)


def extremal_eigs(H: SparseHamiltonian, count: int, options: SolverOptions | None = None,
                  report: SolverReport | None = None) -> list[EigenPair]:
    """The ``count`` algebraically smallest and largest eigenpairs, sorted."""
    if count < 1:
        raise ValueError("count must be >= 1")
    opts = options or SolverOptions()
    report = report if report is not None else SolverReport("lanczos")
    n = H.dimension
    if n <= _DENSE_CUTOFF or 2 * count >= n - 1:
        e, v, r = _dense(H)
        idx = np.unique(np.r_[np.arange(min(count, n)), np.arange(max(n - count, 0), n)])
        e, v, r = e[idx], v[:, idx], r[idx]
    else:
        calls = [0]

        def mv(x):
            calls[0] += 1
            return H.csr @ x

        op = sla.LinearOperator((n, n), matvec=mv, dtype=complex)
        blocks = [_arpack(op, count, which, opts, report, n) for which in ("SA", "LA")]
        report.matvecs += calls[0]
        e, v, r = _rayleigh_ritz(H, np.hstack([b[1] for b in blocks]))
    report.residuals = list(r)
    report.converged = True
    return _pairs(e, v, r)


def interior_eigs(H: SparseHamiltonian, window: SpectralWindow,
                  options: SolverOptions | None = None,
                  report: SolverReport | None = None) -> list[EigenPair]:
    """All eigenpairs with energy inside ``window`` (up to ``max_pairs``).

    The number of requested pairs grows until at least one converged pair
    falls outside the window, which makes the result complete.  Residuals
    are re-verified with one extra matvec per pair and must stay below
    ``1e-8`` times the spectral radius estimate.
    """
    opts = options or SolverOptions()
    report = report if report is not None else SolverReport(opts.method)
    report.method = opts.method
    n = H.dimension
    radius = spectral_radius_bound(H)
    report.radius_estimate = radius
    sigma = window.center

    # ARPACK needs k well below n; small problems asking for much of the
    # spectrum go straight to the dense solver
    if n <= _DENSE_CUTOFF or (2 * (window.max_pairs + 2) >= n and n <= _DENSE_FALLBACK):
        e, v, r = _dense(H)
    else:
        calls = [0]
        if opts.method == "folded":
            def mv(x):
                calls[0] += 2
                y = H.csr @ x - sigma * x
                return H.csr @ y - sigma * y
            op = sla.LinearOperator((n, n), matvec=mv, dtype=complex)
            which, extra = "SA", {}
        else:
            op, which, extra = H.csr, "LM", {"sigma": sigma}

        limit = n // 2
        cap = min(window.max_pairs + 2, limit)
        k = min(opts.initial_pairs + 2, cap)
        while True:
            report.requested.append(k)
            _, vecs = _arpack(op, k, which, opts, report, n, **extra)
            e, v, r = _rayleigh_ritz(H, vecs)
            # A cut through a cluster of the transformed operator (for the
            # folded one, +-e about sigma) leaves mixed Ritz pairs; widen.
            mixed = (window.contains(e) & (r >= 1e-8 * radius)).any()
            complete = (np.abs(e - sigma) > window.half_width).any() or k >= cap
            if complete and not mixed:
                break
            if k >= limit:
                if n > _DENSE_FALLBACK:
                    report.converged = False
                    raise SolverError("window clusters exceed the Krylov limit", report)
                e, v, r = _dense(H)
                break
            k = min(2 * k, cap) if not complete else min(2 * k, limit)
        report.matvecs += calls[0]

    keep = window.contains(e)
    e, v, r = e[keep], v[:, keep], r[keep]
    order = np.argsort(np.abs(e - sigma), kind="stable")[:window.max_pairs]
    order = np.sort(order)
    e, v = e[order], v[:, order]
    # one extra matvec per pair to certify residuals
    r = np.linalg.norm(H.csr @ v - v * e, axis=0) if e.size else np.zeros(0)
    report.residuals = list(map(float, r))
    bound = 1e-8 * radius
    if e.size and r.max() >= bound:
        report.converged = False
        raise SolverError(f"residual {r.max():.3e} exceeds bound {bound:.3e}", report)
    report.converged = True
    return _pairs(e, v, r)
