"""Edge-state observables: density and spin maps, ribbon bands, edge
velocity and decay length."""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as la

from .bhz import (BhzParams, DeviceGeometry, GAMMA_5, SPIN_Z, hopping_blocks,
                  bulk_gap)
from .constants import HBAR_EV_NS
from .spectra import EigenPair, SpectralWindow

__all__ = [
    "NotAnEdgeStateError", "NoCrossingError",
    "DensityMap", "SpinMap", "RibbonBands",
    "density_map", "spin_map", "ribbon_hamiltonian", "ribbon_bands",
    "expected_decay_sites", "edge_branches", "edge_velocity",
    "decay_length", "profile_decay_length", "edge_weight_fraction",
]

_SZ_DIAG = np.real(np.diag(SPIN_Z))


class NotAnEdgeStateError(ValueError):
    pass


class NoCrossingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DensityMap:
    grid: np.ndarray  # (ny, nx), row-major in y
    window: SpectralWindow
    state_count: int

    @property
    def total(self) -> float:
        return float(self.grid.sum())


@dataclass(frozen=True, eq=False)
class SpinMap:
    grid: np.ndarray
    window: SpectralWindow
    state_count: int


def _site_components(pairs, geometry):
    if not pairs:
        return np.zeros((0, geometry.ny, geometry.nx, 4), dtype=complex)
    vecs = np.stack([p.vector for p in pairs])
    if vecs.shape[1] != geometry.dimension:
        raise ValueError("eigenvector length does not match geometry")
    return vecs.reshape(len(pairs), geometry.ny, geometry.nx, 4)


def _check_window(pairs, window):
    energies = np.array([p.energy for p in pairs])
    if energies.size and not window.contains(energies).all():
        raise ValueError("all pairs must lie inside the window")


def density_map(pairs: Sequence[EigenPair], window: SpectralWindow,
                geometry: DeviceGeometry) -> DensityMap:
    """Sum of ``|psi(x, y, c)|^2`` over states and the four components."""
    _check_window(pairs, window)
    psi = _site_components(pairs, geometry)
    grid = np.sum(np.abs(psi) ** 2, axis=(0, 3))
    return DensityMap(grid, window, len(pairs))


def spin_map(pairs: Sequence[EigenPair], window: SpectralWindow,
             geometry: DeviceGeometry) -> SpinMap:
    """Per-site ``<psi| sigma_z x I2 |psi>`` summed over states."""
    _check_window(pairs, window)
    psi = _site_components(pairs, geometry)
    grid = np.sum(np.abs(psi) ** 2 * _SZ_DIAG, axis=(0, 3))
    return SpinMap(grid, window, len(pairs))


def edge_weight_fraction(density: np.ndarray, fraction: float = 0.25) -> float:
    """Share of a (ny, nx) density grid within ``fraction`` of any edge."""
    ny, nx = density.shape
    by, bx = int(np.ceil(fraction * ny)), int(np.ceil(fraction * nx))
    mask = np.zeros_like(density, dtype=bool)
    mask[:by], mask[-by:], mask[:, :bx], mask[:, -bx:] = True, True, True, True
    return float(density[mask].sum() / density.sum())


# --- ribbons ----------------------------------------------------------------

def ribbon_hamiltonian(params: BhzParams, width: int, kx: float,
                       boundary_y: str = "open") -> np.ndarray:
    """Dense ``4*width`` Bloch Hamiltonian, periodic in x with momentum kx."""
    tx, ty = hopping_blocks(params)
    on = params.mass * GAMMA_5 + tx * np.exp(1j * kx) + tx.conj().T * np.exp(-1j * kx)
    n = 4 * width
    h = np.kron(np.eye(width), on)
    up = np.kron(np.eye(width, k=1), ty)
    if boundary_y == "periodic":
        up[4 * (width - 1):, :4] += ty
    elif boundary_y != "open":
        raise ValueError(f"unknown boundary {boundary_y!r}")
    h = h + up + up.conj().T
    return h.reshape(n, n)


def expected_decay_sites(params: BhzParams) -> float:
    """Continuum estimate of the long edge decay length (amplitude), in sites.

    Returns ``inf`` outside the inverted regime.
    """
    A, B, M = params.to_continuum()
    if B == 0 or M / B <= 0 or A == 0:
        return float("inf")
    s = A / (2 * abs(B))
    disc = s * s - M / B
    inv = s - np.sqrt(disc) if disc > 0 else s
    return float(1.0 / inv) if inv > 0 else float("inf")


@dataclass(frozen=True, eq=False)
class RibbonBands:
    k: np.ndarray              # (nk,)
    energies: np.ndarray       # (nk, 4*width), ascending per k
    spin_z: np.ndarray         # (nk, 4*width)
    top_weight: np.ndarray     # (nk, 4*width) weight in upper half (y >= width/2)
    width: int
    params: BhzParams
    boundary_y: str
    warning: bool = False
    vectors: np.ndarray | None = field(default=None, repr=False)

    def profile(self, ik: int, band: int) -> np.ndarray:
        """Transverse density ``|psi(y)|^2`` of one state (needs vectors)."""
        if self.vectors is None:
            raise ValueError("bands were computed without eigenvectors")
        v = self.vectors[ik][:, band]
        return np.sum(np.abs(v.reshape(self.width, 4)) ** 2, axis=1)


def ribbon_bands(params: BhzParams, width: int, k_count: int,
                 k_range: tuple[float, float] = (-np.pi, np.pi),
                 boundary_y: str = "open", keep_vectors: bool = False,
                 threads: int = 1) -> RibbonBands:
    """Band structure of a ribbon, open (or periodic) across its width."""
    if k_count < 16:
        raise ValueError("k_count must be at least 16")
    lo, hi = k_range
    if not -np.pi <= lo < hi <= np.pi:
        raise ValueError("k_range must lie in [-pi, pi]")
    decay = expected_decay_sites(params)
    warn = bool(np.isfinite(decay) and width < 2 * decay)
    if warn and boundary_y == "open":
        warnings.warn("ribbon narrower than twice the edge decay length; "
                      "expect a hybridisation gap", RuntimeWarning, stacklevel=2)
    ks = np.linspace(lo, hi, k_count)
    upper = (np.arange(width) >= width / 2)

    def solve(k):
        e, v = la.eigh(ribbon_hamiltonian(params, width, k, boundary_y))
        dens = np.abs(v.reshape(width, 4, -1)) ** 2
        sz = np.einsum("ycn,c->n", dens, _SZ_DIAG)
        top = dens[upper].sum(axis=(0, 1))
        return e, sz, top, (v if keep_vectors else None)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            out = list(pool.map(solve, ks))
    else:
        out = [solve(k) for k in ks]
    return RibbonBands(
        k=ks,
        energies=np.array([o[0] for o in out]),
        spin_z=np.array([o[1] for o in out]),
        top_weight=np.array([o[2] for o in out]),
        width=width, params=params, boundary_y=boundary_y, warning=bool(warn),
        vectors=np.array([o[3] for o in out]) if keep_vectors else None,
    )


def edge_branches(bands: RibbonBands, edge: str = "top", min_weight: float = 0.9,
                  e_max: float | None = None) -> dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Mid-gap states localised on one edge, grouped by spin sign.

    Returns ``{+1 or -1: (k, E, band_index)}`` with samples sorted by k.
    ``e_max`` defaults to the bulk gap edge.
    """
    if e_max is None:
        e_max = bulk_gap(bands.params)
    w = bands.top_weight if edge == "top" else 1.0 - bands.top_weight
    sel = (np.abs(bands.energies) < e_max) & (w >= min_weight)
    out = {}
    for sign in (1, -1):
        ik, ib = np.nonzero(sel & (np.sign(bands.spin_z) == sign))
        if ik.size:
            out[sign] = (bands.k[ik], bands.energies[ik, ib], ib)
    return out


def edge_velocity(bands: RibbonBands, edge: str = "top", spin: int = 1,
                  step: float | None = None, min_weight: float = 0.9) -> float:
    """Edge velocity (nm/ns) at the zero crossing of one spin branch.

    Centred finite difference ``(E(k0+h) - E(k0-h)) / 2h`` about the
    interpolated crossing ``k0``.  The default ``h`` reaches half the bulk
    half-gap, which clears the hybridisation gap of finite ribbons.
    """
    branches = edge_branches(bands, edge, min_weight)
    if spin not in branches:
        raise NoCrossingError(f"no spin {spin:+d} branch on the {edge} edge")
    k, e, _ = branches[spin]
    order = np.argsort(k)
    k, e = k[order], e[order]
    flips = np.nonzero(np.sign(e[:-1]) != np.sign(e[1:]))[0]
    if flips.size == 0:
        raise NoCrossingError("branch does not cross E = 0 in the sampled range")
    i = flips[np.argmin(np.abs(e[flips]) + np.abs(e[flips + 1]))]
    k0 = k[i] - e[i] * (k[i + 1] - k[i]) / (e[i + 1] - e[i])
    slope_est = (e[i + 1] - e[i]) / (k[i + 1] - k[i])
    if step is None:
        step = 0.5 * bulk_gap(bands.params) / abs(slope_est)
        step = max(step, abs(k[i + 1] - k0), abs(k0 - k[i]))
    if k0 - step < k[0] or k0 + step > k[-1]:
        raise NoCrossingError("finite-difference stencil leaves the sampled branch")
    e_plus, e_minus = np.interp([k0 + step, k0 - step], k, e)
    slope = (e_plus - e_minus) / (2 * step)
    return float(abs(slope) * bands.params.lattice_constant / HBAR_EV_NS)


def profile_decay_length(profile: np.ndarray, lattice_constant: float) -> float:
    """Amplitude 1/e length (nm) from a density profile starting at an edge.

    Log-linear least squares over the monotone tail after the peak, limited
    to the first half of the profile.
    """
    prof = np.asarray(profile, dtype=float)
    half = max(len(prof) // 2, 3)
    start = int(np.argmax(prof[:half]))
    end = start
    while end + 1 < half and 0 < prof[end + 1] < prof[end]:
        end += 1
    if end - start < 2:
        raise NotAnEdgeStateError("no decaying tail to fit")
    d = np.arange(start, end + 1)
    slope = np.polyfit(d, np.log(prof[start:end + 1]), 1)[0]
    if slope >= 0:
        raise NotAnEdgeStateError("profile does not decay")
    # density decays twice as fast as the amplitude
    return float(-2.0 / slope * lattice_constant)


def decay_length(pair: EigenPair, geometry: DeviceGeometry,
                 lattice_constant: float, min_edge_weight: float = 0.6) -> float:
    """Amplitude decay length (nm) of an edge-localised device eigenstate.

    The state must carry at least ``min_edge_weight`` of its weight within
    the outer quarters along one open direction; the fit runs inward from
    the heavier side.
    """
    dens = np.sum(np.abs(pair.vector.reshape(geometry.ny, geometry.nx, 4)) ** 2, axis=2)
    best = None
    for axis, boundary in ((0, geometry.boundary_y), (1, geometry.boundary_x)):
        if boundary != "open":
            continue
        marginal = dens.sum(axis=1 - axis)
        q = int(np.ceil(len(marginal) / 4))
        frac = (marginal[:q].sum() + marginal[-q:].sum()) / marginal.sum()
        prof = marginal if marginal[:q].sum() >= marginal[-q:].sum() else marginal[::-1]
        if best is None or frac > best[0]:
            best = (frac, prof)
    if best is None or best[0] < min_edge_weight:
        raise NotAnEdgeStateError("state is not localised at an open edge")
    return profile_decay_length(best[1], lattice_constant)
