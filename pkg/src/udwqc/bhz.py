"""BHZ tight-binding model on a square lattice.

Bloch Hamiltonian, continuum parameter map and real-space assembly of gated
rectangular devices with local Zeeman impurities.  Energies are in eV,
lengths in nm, momenta in rad per lattice constant.

Basis ordering is (spin x orbital): component ``c = 2*s + o`` with spin
``s`` (0 = up) and orbital ``o``; the global index of ``(x, y, c)`` is
``4*(y*nx + x) + c``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SIGMA_0", "SIGMA_X", "SIGMA_Y", "SIGMA_Z",
    "GAMMA_5", "GAMMA_X", "GAMMA_Y", "SPIN_Z",
    "DegenerateParameterError", "DimensionCapError",
    "BhzParams", "DeviceGeometry", "GateRegion", "LocalField",
    "SparseHamiltonian", "PAPER_PARAMS",
    "continuum_map", "bloch_hamiltonian", "analytic_dispersion",
    "hopping_blocks", "onsite_block", "assemble", "bulk_gap",
]

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

GAMMA_5 = np.kron(SIGMA_0, SIGMA_Z)
GAMMA_X = np.kron(SIGMA_Z, SIGMA_X)
GAMMA_Y = -np.kron(SIGMA_0, SIGMA_Y)
# Zeeman couples to spin only.
SPIN_OPS = tuple(np.kron(s, SIGMA_0) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))
SPIN_Z = SPIN_OPS[2]

DEFAULT_DIMENSION_CAP = 2_000_000
_INSIDE_TOL = 1e-9  # nm, closed-shape membership


class DegenerateParameterError(ValueError):
    """Raised when the continuum map is asked to invert a degenerate B."""


class DimensionCapError(MemoryError):
    """Raised when an assembly would exceed the configured dimension cap."""


@dataclass(frozen=True)
class BhzParams:
    """Lattice BHZ parameters (eV) and lattice constant (nm).

    ``mass`` is the lattice mass, which differs from the continuum mass
    ``M_cont``; the two are related by ``mass = -4B + M_cont``.
    """

    epsilon: float
    mass: float
    lam: float
    lattice_constant: float = 0.65

    def __post_init__(self):
        for name in ("epsilon", "mass", "lam", "lattice_constant"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.lattice_constant <= 0:
            raise ValueError("lattice_constant must be positive")

    def to_continuum(self) -> tuple[float, float, float]:
        """Return the continuum triple ``(A, B, M_cont)`` in eV."""
        B = -self.epsilon / 2.0
        return self.lam, B, self.mass + 4.0 * B

    @property
    def continuum_mass(self) -> float:
        return self.to_continuum()[2]


def continuum_map(A: float, B: float, M_cont: float, a: float = 0.65) -> BhzParams:
    """Map continuum BHZ parameters onto the lattice model.

    >>> p = continuum_map(0.55, -1.87, -0.0146, 0.65)
    >>> round(p.epsilon, 12), round(p.mass, 12), p.lam
    (3.74, 7.4654, 0.55)
    """
    if B == 0:
        raise DegenerateParameterError("B = 0 gives a flat lattice band (epsilon = 0)")
    return BhzParams(epsilon=-2.0 * B, mass=-4.0 * B + M_cont, lam=A, lattice_constant=a)


PAPER_PARAMS = continuum_map(0.55, -1.87, -0.0146, 0.65)


def bloch_hamiltonian(params: BhzParams, kx: float, ky: float) -> np.ndarray:
    """4x4 Bloch Hamiltonian at momentum ``(kx, ky)``."""
    d5 = params.mass - params.epsilon * (np.cos(kx) + np.cos(ky))
    return (d5 * GAMMA_5
            + params.lam * np.sin(kx) * GAMMA_X
            - params.lam * np.sin(ky) * GAMMA_Y)


def analytic_dispersion(params: BhzParams, kx, ky):
    """Positive branch ``E(k)``; the spectrum is ``{+E, -E}``, each twofold."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    d5 = params.mass - params.epsilon * (np.cos(kx) + np.cos(ky))
    return np.sqrt(d5**2 + params.lam**2 * (np.sin(kx)**2 + np.sin(ky)**2))


def bulk_gap(params: BhzParams, n: int = 401) -> float:
    """Minimum of ``analytic_dispersion`` over the Brillouin zone (half the gap)."""
    k = np.linspace(-np.pi, np.pi, n)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    e = analytic_dispersion(params, kx, ky)
    i, j = np.unravel_index(np.argmin(e), e.shape)
    # refine locally; the minimum is smooth
    dk = k[1] - k[0]
    kk = np.linspace(-dk, dk, 41)
    fx, fy = np.meshgrid(k[i] + kk, k[j] + kk, indexing="ij")
    return float(min(e.min(), analytic_dispersion(params, fx, fy).min()))


def hopping_blocks(params: BhzParams) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-neighbour blocks ``T_x, T_y`` with ``<r|H|r + e> = T_e``."""
    eps, lam = params.epsilon, params.lam
    tx = -(eps / 2) * GAMMA_5 - (1j * lam / 2) * GAMMA_X
    ty = -(eps / 2) * GAMMA_5 + (1j * lam / 2) * GAMMA_Y
    return tx, ty


def onsite_block(params: BhzParams, potential: float = 0.0,
                 b_vec: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    block = params.mass * GAMMA_5 + potential * np.eye(4)
    for b, s in zip(b_vec, SPIN_OPS):
        block = block + b * s
    return block


@dataclass(frozen=True)
class DeviceGeometry:
    nx: int
    ny: int
    boundary_x: str = "open"
    boundary_y: str = "open"

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("nx and ny must be at least 1")
        for b in (self.boundary_x, self.boundary_y):
            if b not in ("open", "periodic"):
                raise ValueError(f"boundary must be 'open' or 'periodic', got {b!r}")

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny

    @property
    def dimension(self) -> int:
        return 4 * self.nx * self.ny

    def size(self, a: float) -> tuple[float, float]:
        return self.nx * a, self.ny * a

    def site_positions(self, a: float) -> tuple[np.ndarray, np.ndarray]:
        """Site centres in nm, flattened in site order ``y*nx + x``."""
        y, x = np.divmod(np.arange(self.n_sites), self.nx)
        return x * a, y * a


@dataclass(frozen=True)
class GateRegion:
    """Scalar gate potential over a closed region.

    ``rectangle`` uses ``center`` and half-extents ``extent``; ``disk`` and
    ``half-disk`` use ``radius``.  A half-disk keeps the side of the chord
    that ``normal`` points into.
    """

    shape: str
    center: tuple[float, float]
    potential: float
    radius: float = 0.0
    extent: tuple[float, float] = (0.0, 0.0)
    normal: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.shape not in ("rectangle", "disk", "half-disk"):
            raise ValueError(f"unknown gate shape {self.shape!r}")
        if not np.isfinite(self.potential):
            raise ValueError("gate potential must be finite")
        if self.shape == "rectangle":
            if min(self.extent) <= 0:
                raise ValueError("rectangle extent must be positive")
        elif self.radius <= 0:
            raise ValueError("radius must be positive")

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        dx = x - self.center[0]
        dy = y - self.center[1]
        if self.shape == "rectangle":
            return ((np.abs(dx) <= self.extent[0] + _INSIDE_TOL)
                    & (np.abs(dy) <= self.extent[1] + _INSIDE_TOL))
        inside = dx**2 + dy**2 <= (self.radius + _INSIDE_TOL) ** 2
        if self.shape == "half-disk":
            nx_, ny_ = self.normal
            inside &= dx * nx_ + dy * ny_ >= -_INSIDE_TOL
        return inside

    def translated(self, shift: tuple[float, float]) -> "GateRegion":
        c = (self.center[0] + shift[0], self.center[1] + shift[1])
        return GateRegion(self.shape, c, self.potential, self.radius, self.extent, self.normal)


@dataclass(frozen=True)
class LocalField:
    """Local Zeeman field ``b_vec`` (eV) on spin, disk or Gaussian profile."""

    center: tuple[float, float]
    b_vec: tuple[float, float, float]
    profile: str = "disk"
    width: float = 3 * 0.65

    def __post_init__(self):
        if self.profile not in ("disk", "gaussian"):
            raise ValueError(f"unknown field profile {self.profile!r}")
        if not np.all(np.isfinite(self.b_vec)) or len(self.b_vec) != 3:
            raise ValueError("b_vec must be a finite 3-vector")
        if self.width <= 0:
            raise ValueError("profile width must be positive")

    def weights(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        r2 = (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2
        if self.profile == "disk":
            return (r2 <= (self.width + _INSIDE_TOL) ** 2).astype(float)
        return np.exp(-r2 / (2 * self.width**2))

    def translated(self, shift: tuple[float, float]) -> "LocalField":
        c = (self.center[0] + shift[0], self.center[1] + shift[1])
        return LocalField(c, self.b_vec, self.profile, self.width)


@dataclass(frozen=True, eq=False)
class SparseHamiltonian:
    """Immutable Hermitian device Hamiltonian in CSR layout."""

    csr: sp.csr_matrix = field(repr=False)
    geometry: DeviceGeometry
    params: BhzParams

    @property
    def dimension(self) -> int:
        return self.csr.shape[0]

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def index(self, x: int, y: int, component: int) -> int:
        return 4 * (y * self.geometry.nx + x) + component

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape[0] != self.dimension:
            raise ValueError(f"vector length {v.shape[0]} != dimension {self.dimension}")
        return self.csr @ v

    def block(self, site_i: int, site_j: int) -> np.ndarray:
        """Dense 4x4 block ``<site_i|H|site_j>``."""
        return self.csr[4 * site_i:4 * site_i + 4, 4 * site_j:4 * site_j + 4].toarray()

    def hermiticity_defect(self) -> float:
        d = self.csr - self.csr.conj().T
        return float(abs(d).max()) if d.nnz else 0.0

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()


def _shift(n: int, periodic: bool) -> sp.csr_matrix:
    """``S[i, i+1] = 1`` (wrapping when periodic)."""
    rows = np.arange(n if periodic else n - 1)
    cols = (rows + 1) % n
    return sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))


def _nearest_image(xs, ys, center, geometry, a):
    """Site coordinates moved to the periodic image closest to ``center``."""
    out = []
    for coord, c, n, b in ((xs, center[0], geometry.nx, geometry.boundary_x),
                           (ys, center[1], geometry.ny, geometry.boundary_y)):
        if b == "periodic":
            L = n * a
            coord = c + np.mod(coord - c + L / 2, L) - L / 2
        out.append(coord)
    return out


def assemble(params: BhzParams, geometry: DeviceGeometry,
             gates: Sequence[GateRegion] = (), fields: Sequence[LocalField] = (),
             max_dimension: int = DEFAULT_DIMENSION_CAP) -> SparseHamiltonian:
    """Assemble the real-space device Hamiltonian.

    Gates add ``V * I4`` on every site whose centre lies in the region
    (overlapping gates add); periodic directions use the nearest image.  Local fields add ``b . (sigma x I2)`` weighted
    by the field profile.
    """
    if geometry.dimension > max_dimension:
        raise DimensionCapError(
            f"dimension {geometry.dimension} exceeds cap {max_dimension}")
    nx, ny = geometry.nx, geometry.ny
    a = params.lattice_constant
    xs, ys = geometry.site_positions(a)

    potential = np.zeros(geometry.n_sites)
    for gate in gates:
        mask = gate.contains(*_nearest_image(xs, ys, gate.center, geometry, a))
        if not mask.any():
            raise ValueError(f"gate region {gate} does not cover any site")
        potential[mask] += gate.potential
    zeeman = np.zeros((3, geometry.n_sites))
    for f in fields:
        w = f.weights(*_nearest_image(xs, ys, f.center, geometry, a))
        if not w.any():
            raise ValueError(f"local field {f} does not cover any site")
        zeeman += np.outer(f.b_vec, w)
    if not (np.all(np.isfinite(potential)) and np.all(np.isfinite(zeeman))):
        raise ValueError("non-finite onsite term")

    tx, ty = hopping_blocks(params)
    ix, iy = sp.identity(nx, format="csr"), sp.identity(ny, format="csr")
    sx = sp.kron(iy, _shift(nx, geometry.boundary_x == "periodic"))
    sy = sp.kron(_shift(ny, geometry.boundary_y == "periodic"), ix)

    h = sp.kron(sp.identity(geometry.n_sites), params.mass * GAMMA_5)
    h = h + sp.kron(sx, tx) + sp.kron(sx.T, tx.conj().T)
    h = h + sp.kron(sy, ty) + sp.kron(sy.T, ty.conj().T)
    if potential.any():
        h = h + sp.kron(sp.diags(potential), np.eye(4))
    for comp, op in zip(zeeman, SPIN_OPS):
        if comp.any():
            h = h + sp.kron(sp.diags(comp), op)
    h = sp.csr_matrix(h, dtype=complex)
    h.eliminate_zeros()
    # exact Hermiticity regardless of summation order in duplicate entries
    h = ((h + h.conj().T) * 0.5).tocsr()
    h.sort_indices()
    return SparseHamiltonian(h, geometry, params)
