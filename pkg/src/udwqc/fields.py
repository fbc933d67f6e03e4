"""Smeared observables of a massless 1+1D boson, their vacuum correlators,
and the bosonized gate library.

Mode conventions.  A linear observable is written ``O = int dk/2pi (g(k) a_k
+ h.c.)`` with ``[a_k, a_q^dag] = 2pi delta(k - q)`` and

    g(k) = c(k) * conj(f(k)) * exp(-i v |k| t),   f(k) = exp(-i k x0 - k^2 s^2 / 2)

where the amplitude ``c`` is ``-i sqrt(|k|/2)`` for the conjugate momentum
and ``i k / sqrt(2|k|)`` for the field gradient.  Chiral momenta keep only
``k > 0`` (right movers) or ``k < 0`` (left movers).  The vacuum two-point
function is then ``W_ij = int dk/2pi g_i conj(g_j)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, special

from .bhz import SIGMA_X, SIGMA_Y

__all__ = [
    "LINEAR_KINDS", "NONLINEAR_KINDS", "UnsupportedObservableError",
    "SmearingProfile", "SwitchingEvent", "DetectorOp", "FieldObservable",
    "GateFactor", "GateSpec", "CorrelatorMatrix", "ContinuumField",
    "DiscreteModeField", "GAUSSIAN_COMPUTABLE", "NON_GAUSSIAN",
    "fourier_profile", "correlator", "correlator_closed_form",
    "commutator_phase", "classify", "correlator_matrix",
    "gaussian_weyl_expectation", "weyl_from_matrix",
    "simple_rank_one_gate", "naive_gate", "chiral_gate", "cross_term_gate",
    "forward_scattering_gate", "back_scattering_gate", "dirac_quadratic_gate",
]

LINEAR_KINDS = ("Pi", "dPhi", "PiChiral+", "PiChiral-")
NONLINEAR_KINDS = ("CosinePhi", "DiracQuadratic")
GAUSSIAN_COMPUTABLE = "GaussianComputable"
NON_GAUSSIAN = "NonGaussian"

# amplitude c(k) / sqrt(|k|/2) on the (k > 0, k < 0) half-lines
_AMPLITUDE = {
    "Pi": (-1j, -1j),
    "dPhi": (1j, -1j),
    "PiChiral+": (-1j, 0.0),
    "PiChiral-": (0.0, -1j),
}


class UnsupportedObservableError(ValueError):
    pass


@dataclass(frozen=True)
class SmearingProfile:
    center: float
    sigma: float
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise UnsupportedObservableError(f"smearing kind {self.kind!r} is not supported")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if not math.isfinite(self.center):
            raise ValueError("smearing center must be finite")

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * ((x - self.center) / self.sigma) ** 2) / math.sqrt(2 * math.pi * self.sigma ** 2)

    def scaled(self, factor: float) -> "SmearingProfile":
        return SmearingProfile(self.center * factor, self.sigma * factor, self.kind)


def fourier_profile(p: SmearingProfile):
    """``k -> exp(-i k x0 - k^2 sigma^2 / 2)``."""
    x0, s2 = p.center, p.sigma ** 2

    def ft(k):
        k = np.asarray(k, dtype=float)
        return np.exp(-1j * k * x0 - 0.5 * k * k * s2)
    return ft


@dataclass(frozen=True)
class SwitchingEvent:
    time: float
    strength: float

    def __post_init__(self):
        if not (math.isfinite(self.time) and math.isfinite(self.strength)):
            raise ValueError("switching time and strength must be finite")


@dataclass(frozen=True)
class DetectorOp:
    """Monopole ``cos(theta + Omega t) sigma_x + sin(theta + Omega t) sigma_y``."""
    theta: float
    gap: float = 0.0  # rad/ns

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.gap)):
            raise ValueError("detector angle and gap must be finite")

    def axis(self, t: float = 0.0) -> float:
        return self.theta + self.gap * t

    def matrix(self, t: float = 0.0) -> np.ndarray:
        a = self.axis(t)
        return math.cos(a) * SIGMA_X + math.sin(a) * SIGMA_Y

    def projector(self, sign: int, t: float = 0.0) -> np.ndarray:
        return 0.5 * (np.eye(2) + sign * self.matrix(t))


@dataclass(frozen=True)
class FieldObservable:
    """A smeared field observable switched on at ``time``.

    ``species`` labels independent boson sectors (for example charge and
    spin); observables of different species commute and are uncorrelated.
    ``coefficient``, ``argument`` and ``klein_sign`` only describe the
    nonlinear kinds.
    """
    kind: str
    smearing: SmearingProfile | None
    time: float = 0.0
    velocity: float = 1.0
    species: str = ""
    coefficient: float = 1.0
    argument: float = 1.0
    klein_sign: int = 1

    def __post_init__(self):
        if self.kind not in LINEAR_KINDS + NONLINEAR_KINDS:
            raise ValueError(f"unknown observable kind {self.kind!r}")
        if self.kind in LINEAR_KINDS and self.smearing is None:
            raise ValueError(f"{self.kind} needs a smearing profile")
        if not (math.isfinite(self.velocity) and self.velocity > 0):
            raise ValueError("velocity must be positive")
        if not math.isfinite(self.time):
            raise ValueError("time must be finite")
        if self.klein_sign not in (1, -1):
            raise ValueError("klein_sign must be +1 or -1")

    @property
    def linear(self) -> bool:
        return self.kind in LINEAR_KINDS

    def shifted(self, dx: float = 0.0, dt: float = 0.0) -> "FieldObservable":
        sm = None if self.smearing is None else replace(self.smearing, center=self.smearing.center + dx)
        return replace(self, smearing=sm, time=self.time + dt)

    def scaled(self, factor: float) -> "FieldObservable":
        """All lengths and times multiplied by ``factor``; velocity kept."""
        sm = None if self.smearing is None else self.smearing.scaled(factor)
        return replace(self, smearing=sm, time=self.time * factor)

    def amplitude(self, k) -> np.ndarray:
        """Mode amplitude ``g(k)`` (see module docstring)."""
        self._require_linear()
        k = np.asarray(k, dtype=float)
        cp, cm = _AMPLITUDE[self.kind]
        c = np.where(k > 0, cp, cm) * np.sqrt(np.abs(k) / 2)
        ft = fourier_profile(self.smearing)(k)
        return c * np.conj(ft) * np.exp(-1j * self.velocity * np.abs(k) * self.time)

    def _require_linear(self):
        if not self.linear:
            raise UnsupportedObservableError(
                f"{self.kind} is non-Gaussian; correlators are only defined for linear kinds")


# --- correlators ----------------------------------------------------------

def _pair_data(o1, o2):
    o1._require_linear()
    o2._require_linear()
    if o1.velocity != o2.velocity:
        raise ValueError("observables must share one field velocity")
    if o1.species != o2.species:
        return None
    a1, a2 = _AMPLITUDE[o1.kind], _AMPLITUDE[o2.kind]
    kp = (a1[0] * np.conj(a2[0])).real
    km = (a1[1] * np.conj(a2[1])).real
    s2 = o1.smearing.sigma ** 2 + o2.smearing.sigma ** 2
    d = o1.smearing.center - o2.smearing.center
    vt = o1.velocity * (o1.time - o2.time)
    return kp, km, s2, d - vt, d + vt


def _quad_moments(alpha, s2, epsabs):
    """``int_0^inf (k/2) e^{-k^2 s2/2} (cos, sin)(k alpha) dk`` by QUADPACK."""
    kmax = math.sqrt(2 * 50.0 / s2)  # envelope below e^-50

    def env(k):
        return 0.5 * k * math.exp(-0.5 * k * k * s2)
    if alpha == 0.0:
        c = integrate.quad(env, 0.0, kmax, epsabs=epsabs, epsrel=1e-13, limit=400)[0]
        return c, 0.0
    kw = dict(wvar=abs(alpha), epsabs=epsabs, epsrel=1e-13, limit=400)
    c = integrate.quad(env, 0.0, kmax, weight="cos", **kw)[0]
    s = integrate.quad(env, 0.0, kmax, weight="sin", **kw)[0]
    return c, math.copysign(s, alpha)


def _closed_moments(alpha, s2):
    a = 0.5 * s2
    y = alpha / (2 * math.sqrt(a))
    c = (1 - 2 * y * special.dawsn(y)) / (4 * a)
    s = math.sqrt(math.pi) * alpha / (8 * a ** 1.5) * math.exp(-y * y)
    return c, s


def _assemble(kp, km, mom_a, mom_b):
    re = kp * mom_a[0] + km * mom_b[0]
    im = kp * mom_a[1] - km * mom_b[1]
    return complex(re, im) / (2 * math.pi)


def correlator(o1: FieldObservable, o2: FieldObservable, epsabs: float = 1e-10) -> complex:
    """Smeared vacuum two-point function ``<0|O1 O2|0>`` by adaptive quadrature.

    ``epsabs`` is the absolute tolerance of each quadrature, scaled down
    for wide smearings so relative accuracy does not degrade.
    """
    data = _pair_data(o1, o2)
    if data is None:
        return 0j
    kp, km, s2, alpha, beta = data
    tol = epsabs * min(1.0, 1.0 / s2)
    ma = _quad_moments(alpha, s2, tol) if kp else (0.0, 0.0)
    mb = _quad_moments(beta, s2, tol) if km else (0.0, 0.0)
    return _assemble(kp, km, ma, mb)


def correlator_closed_form(o1: FieldObservable, o2: FieldObservable) -> complex:
    """Same as :func:`correlator` through the Dawson-function closed form."""
    data = _pair_data(o1, o2)
    if data is None:
        return 0j
    kp, km, s2, alpha, beta = data
    return _assemble(kp, km, _closed_moments(alpha, s2), _closed_moments(beta, s2))


def commutator_phase(o1: FieldObservable, o2: FieldObservable) -> float:
    """``2 Im W(o1, o2) = -i <[O1, O2]>``."""
    return 2.0 * correlator(o1, o2).imag


class ContinuumField:
    """Vacuum of the continuum field; correlators by quadrature."""

    closed_form = False

    def __init__(self, closed_form: bool = False):
        self.closed_form = closed_form

    def two_point(self, o1, o2) -> complex:
        return correlator_closed_form(o1, o2) if self.closed_form else correlator(o1, o2)


@dataclass(frozen=True, eq=False)
class DiscreteModeField:
    """Field restricted to a few modes ``k_m`` with quadrature weights ``w_m``.

    ``O = sum_m sqrt(w_m) (g(k_m) a_m + h.c.)`` with ``[a_m, a_n^dag] = delta_mn``.
    """
    k_values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        k = np.atleast_1d(np.asarray(self.k_values, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if k.shape != w.shape or k.size == 0:
            raise ValueError("k_values and weights must be non-empty and equal length")
        if (w <= 0).any() or (k == 0).any():
            raise ValueError("weights must be positive and k nonzero")
        object.__setattr__(self, "k_values", k)
        object.__setattr__(self, "weights", w)

    @property
    def mode_count(self) -> int:
        return self.k_values.size

    def couplings(self, o: FieldObservable) -> np.ndarray:
        """``sqrt(w_m) g(k_m)`` for each mode (zero for a foreign species)."""
        return np.sqrt(self.weights) * o.amplitude(self.k_values)

    def two_point(self, o1, o2) -> complex:
        _pair_data(o1, o2)
        if o1.species != o2.species:
            return 0j
        return complex(np.sum(self.couplings(o1) * np.conj(self.couplings(o2))))


@dataclass(frozen=True, eq=False)
class CorrelatorMatrix:
    observables: tuple
    W: np.ndarray

    def index(self, o: FieldObservable) -> int:
        for i, p in enumerate(self.observables):
            if p == o:
                return i
        raise KeyError("observable not covered by this correlator matrix")

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.W - self.W.conj().T))) if self.W.size else 0.0

    def min_real_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.W.real).min()) if self.W.size else 0.0


def correlator_matrix(observables: Sequence[FieldObservable], field_model=None) -> CorrelatorMatrix:
    """Hermitian matrix ``W_ij = <O_i O_j>``; the upper triangle is computed."""
    fm = field_model or ContinuumField()
    obs = tuple(observables)
    n = len(obs)
    W = np.zeros((n, n), dtype=complex)
    for i in range(n):
        W[i, i] = fm.two_point(obs[i], obs[i]).real
        for j in range(i + 1, n):
            W[i, j] = fm.two_point(obs[i], obs[j])
            W[j, i] = np.conj(W[i, j])
    return CorrelatorMatrix(obs, W)


def weyl_from_matrix(alphas: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Vacuum value of ordered products ``prod_i exp(i alpha_i O_i)``.

    ``alphas`` has shape (..., n) with entries ordered left to right.
    """
    a = np.asarray(alphas, dtype=float)
    upper = np.triu(W.imag, k=1)
    quad = np.einsum("...i,ij,...j->...", a, W.real, a)
    phase = np.einsum("...i,ij,...j->...", a, upper, a)
    return np.exp(-0.5 * quad - 1j * phase)


def gaussian_weyl_expectation(coeffs: Iterable[tuple[float, FieldObservable]],
                              W: CorrelatorMatrix) -> complex:
    """``<0| e^{i a_1 O_1} ... e^{i a_n O_n} |0>`` for linear observables."""
    coeffs = list(coeffs)
    if not coeffs:
        return 1.0 + 0j
    idx = []
    for _, o in coeffs:
        o._require_linear()
        idx.append(W.index(o))
    alphas = np.array([float(a) for a, _ in coeffs])
    sub = W.W[np.ix_(idx, idx)]
    return complex(weyl_from_matrix(alphas, sub))


# --- gates ----------------------------------------------------------------

@dataclass(frozen=True)
class GateFactor:
    """One rank-one unitary ``exp(i J mu ⊗ O)``."""
    J: float
    detector: DetectorOp
    observable: FieldObservable

    def __post_init__(self):
        if not math.isfinite(self.J):
            raise ValueError("coupling J must be finite")

    @property
    def event(self) -> SwitchingEvent:
        return SwitchingEvent(self.observable.time, self.J)


@dataclass(frozen=True)
class GateSpec:
    """Product of rank-one factors written left to right; the last acts first."""
    factors: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("a gate needs at least one factor")

    def application_order(self) -> tuple:
        return self.factors[::-1]

    def with_couplings(self, couplings: Sequence[float]) -> "GateSpec":
        if len(couplings) != len(self.factors):
            raise ValueError("one coupling per factor required")
        return replace(self, factors=tuple(replace(f, J=float(J)) for f, J in zip(self.factors, couplings)))

    def shifted(self, dx: float = 0.0, dt: float = 0.0) -> "GateSpec":
        return replace(self, factors=tuple(replace(f, observable=f.observable.shifted(dx, dt))
                                           for f in self.factors))

    def scaled(self, factor: float) -> "GateSpec":
        return replace(self, factors=tuple(replace(f, observable=f.observable.scaled(factor))
                                           for f in self.factors))

    @property
    def times(self) -> list[float]:
        return [f.observable.time for f in self.factors]


def classify(g: GateSpec) -> str:
    if all(f.observable.linear for f in g.factors):
        return GAUSSIAN_COMPUTABLE
    return NON_GAUSSIAN


def _obs(kind, x, sigma, t, v, species=""):
    return FieldObservable(kind, SmearingProfile(x, sigma), t, v, species)


def simple_rank_one_gate(J, detector, x, sigma, t=0.0, v=1.0) -> GateSpec:
    """``exp(i J mu ⊗ Pi(f))``."""
    return GateSpec((GateFactor(J, detector, _obs("Pi", x, sigma, t, v)),), "simple")


def naive_gate(J_plus, J_minus, det_plus, det_minus, x, sigma, t=0.0, v=1.0) -> GateSpec:
    """``exp(i J- mu- ⊗ Pi) exp(i J+ mu+ ⊗ dPhi)`` from the charge and current densities."""
    return GateSpec((GateFactor(J_minus, det_minus, _obs("Pi", x, sigma, t, v)),
                     GateFactor(J_plus, det_plus, _obs("dPhi", x, sigma, t, v))), "naive")


def chiral_gate(J1, J2, det1, det2, x1, x2, sigma, t=0.0, v=1.0, direction="+") -> GateSpec:
    """Two chiral-momentum factors, ``exp(i J2 mu2 ⊗ Pi_r(f2)) exp(i J1 mu1 ⊗ Pi_r(f1))``.

    For a chiral field the gradient is proportional to the momentum, so the
    pair differs only through the smearing centers ``x1`` and ``x2``.
    """
    if direction not in "+-" or len(direction) != 1:
        raise ValueError("direction must be '+' or '-'")
    kind = "PiChiral" + direction
    return GateSpec((GateFactor(J2, det2, _obs(kind, x2, sigma, t, v)),
                     GateFactor(J1, det1, _obs(kind, x1, sigma, t, v))), "chiral")


def cross_term_gate(J, detector, t=0.0, v=1.0, klein_sign=1) -> GateSpec:
    """Backscattering cosine ``(1/2pi) cos(sqrt(4 pi) phi)``, unsmeared.

    ``klein_sign`` records the sign picked up from the Klein factors when
    the two backscattering terms are combined.
    """
    o = FieldObservable("CosinePhi", None, t, v, coefficient=klein_sign / (2 * math.pi),
                        argument=math.sqrt(4 * math.pi), klein_sign=klein_sign)
    return GateSpec((GateFactor(J, detector, o),), "cross-term")


def forward_scattering_gate(J, detector, x, sigma, t=0.0, v=1.0) -> GateSpec:
    """``exp(i J mu ⊗ (2/sqrt(pi)) (Pi_c + dPhi_s))`` split into commuting factors."""
    g = 2 * J / math.sqrt(math.pi)
    return GateSpec((GateFactor(g, detector, _obs("Pi", x, sigma, t, v, "charge")),
                     GateFactor(g, detector, _obs("dPhi", x, sigma, t, v, "spin"))),
                    "forward-scattering")


def back_scattering_gate(J, detector, t=0.0, v=1.0, klein_sign=1) -> GateSpec:
    """``(1/2pi) cos(sqrt(2 pi) (phi_c + theta_s))``."""
    o = FieldObservable("CosinePhi", None, t, v, species="charge+spin-dual",
                        coefficient=klein_sign / (2 * math.pi), argument=math.sqrt(2 * math.pi),
                        klein_sign=klein_sign)
    return GateSpec((GateFactor(J, detector, o),), "back-scattering")


def dirac_quadratic_gate(J, detector, x, sigma, t=0.0, v=1.0) -> GateSpec:
    """Smeared ``Pi^2 + (dPhi)^2``."""
    o = FieldObservable("DiracQuadratic", SmearingProfile(x, sigma), t, v)
    return GateSpec((GateFactor(J, detector, o),), "dirac-quadratic")
