"""Qubit-field-qubit channel: joint output state of reference and target,
coherent information and parameter sweeps.

Each factor ``exp(i J mu ⊗ O)`` splits over the eigenprojectors of ``mu``
into ``sum_s P_s ⊗ exp(i s J O)``.  Tracing the field out of
``U (rho_CA ⊗ |0><0|_B ⊗ |vac><vac|) U^dag`` leaves, for every pair of
branch strings, a vacuum expectation of an ordered product of Weyl
operators, which is Gaussian in the smeared correlators.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fields import (GAUSSIAN_COMPUTABLE, GateSpec, UnsupportedObservableError,
                     classify, commutator_phase, correlator_matrix, weyl_from_matrix)

__all__ = [
    "BranchLimitError", "ChannelSetup", "ChannelResult", "SweepRow",
    "MAX_BRANCH_PAIRS", "bell_state", "initial_state", "output_state",
    "evaluate", "von_neumann_entropy", "coherent_information",
    "partial_trace", "trace_distance", "matched_couplings",
    "capacity_sweep", "is_monotone", "scaled_couplings",
]

MAX_BRANCH_PAIRS = 2 ** 20
ENTROPY_FLOOR = 1e-12


class BranchLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChannelSetup:
    """Encoder acting on qubit A, then decoder acting on qubit B."""
    encoder: GateSpec
    decoder: GateSpec

    def __post_init__(self):
        if self.t_B < self.t_A:
            raise ValueError("decoder must act no earlier than the encoder")

    @property
    def t_A(self) -> float:
        return max(self.encoder.times)

    @property
    def t_B(self) -> float:
        return min(self.decoder.times)

    @property
    def classification(self) -> str:
        if classify(self.encoder) == classify(self.decoder) == GAUSSIAN_COMPUTABLE:
            return GAUSSIAN_COMPUTABLE
        return "NonGaussian"

    def steps(self):
        """``(qubit, factor)`` in the order they act; qubit 1 is A, 2 is B."""
        return ([(1, f) for f in self.encoder.application_order()]
                + [(2, f) for f in self.decoder.application_order()])

    def scaled(self, factor: float) -> "ChannelSetup":
        """All lengths and times multiplied by ``factor``."""
        return ChannelSetup(self.encoder.scaled(factor), self.decoder.scaled(factor))

    def swapped(self) -> "ChannelSetup":
        """Encoder and decoder specs exchanged, placements kept."""
        def moved(spec, ref):
            dx = ref.factors[0].observable.smearing.center - spec.factors[0].observable.smearing.center
            dt = ref.factors[0].observable.time - spec.factors[0].observable.time
            return spec.shifted(dx, dt)
        return ChannelSetup(moved(self.decoder, self.encoder), moved(self.encoder, self.decoder))


@dataclass(frozen=True, eq=False)
class ChannelResult:
    rho_CB: np.ndarray
    coherent_info: float
    branch_count: int


def bell_state() -> np.ndarray:
    """``(|00> + |11>) / sqrt 2`` on C and A."""
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / math.sqrt(2)
    return v


def initial_state() -> np.ndarray:
    """Pure initial qubit state on C ⊗ A ⊗ B."""
    return np.kron(bell_state(), np.array([1, 0], dtype=complex))


def embed(op2: np.ndarray, qubit: int) -> np.ndarray:
    """Single-qubit operator on position ``qubit`` of C ⊗ A ⊗ B."""
    mats = [np.eye(2, dtype=complex)] * 3
    mats[qubit] = op2
    return np.kron(mats[0], np.kron(mats[1], mats[2]))


def partial_trace(rho: np.ndarray, keep: Sequence[int], dims=(2, 2, 2)) -> np.ndarray:
    n = len(dims)
    r = rho.reshape(dims + dims)
    letters = "abcdefghijklmnop"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    r = np.einsum("".join(row) + "".join(col) + "->" + out, r)
    d = int(np.prod([dims[i] for i in keep]))
    return r.reshape(d, d)


def output_state(setup: ChannelSetup, field_model=None, return_count: bool = False):
    """Joint state ``rho_CB`` of reference and target after the circuit."""
    if setup.classification != GAUSSIAN_COMPUTABLE:
        raise UnsupportedObservableError("channel contains a non-Gaussian gate; "
                                         "only Gaussian-computable specs are supported")
    # exp(i 0 mu O) is the identity; dropping such factors keeps J = 0 exact
    steps = [(q, f) for q, f in setup.steps() if f.J != 0]
    n = len(steps)
    pairs = 4 ** n
    if pairs > MAX_BRANCH_PAIRS:
        raise BranchLimitError(f"{pairs} branch pairs exceed the limit {MAX_BRANCH_PAIRS}")

    obs = [f.observable for _, f in steps]
    W = correlator_matrix(obs, field_model).W
    J = np.array([f.J for _, f in steps])
    strings = np.array(list(itertools.product((1, -1), repeat=n)), dtype=float).reshape(2 ** n, n)

    # qubit part: column L is Q_L psi0 with Q_L = P^(n) ... P^(1)
    # unnormalised Bell amplitudes; the 1/2 is applied to rho so J = 0 is exact
    psi0 = initial_state() * math.sqrt(2)
    psi0[np.abs(psi0) > 0] = 1.0
    Y = np.empty((8, len(strings)), dtype=complex)
    projectors = [{s: embed(f.detector.projector(s, f.observable.time), q) for s in (1, -1)}
                  for q, f in steps]
    for col, s in enumerate(strings):
        v = psi0
        for proj, si in zip(projectors, s):
            v = proj[int(si)] @ v
        Y[:, col] = v

    # field part: D_R^dag D_L as one ordered product
    idx = np.r_[np.arange(n), np.arange(n)[::-1]]
    Wp = W[np.ix_(idx, idx)]
    aL = (strings * J)[:, ::-1]
    aR = -(strings * J)
    alphas = np.concatenate([np.broadcast_to(aR[None, :, :], (len(strings),) * 2 + (n,)),
                             np.broadcast_to(aL[:, None, :], (len(strings),) * 2 + (n,))], axis=2)
    C = weyl_from_matrix(alphas, Wp)  # C[L, R]

    rho = 0.5 * (Y @ C @ Y.conj().T)
    rho = 0.5 * (rho + rho.conj().T)
    rho_CB = partial_trace(rho, keep=(0, 2))
    return (rho_CB, pairs) if return_count else rho_CB


def von_neumann_entropy(rho: np.ndarray) -> float:
    e = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    e = e[e > ENTROPY_FLOOR]
    return float(-np.sum(e * np.log2(e)))


def coherent_information(rho_CB: np.ndarray) -> float:
    """``S(B) - S(CB)`` in bits."""
    rho_B = partial_trace(rho_CB, keep=(1,), dims=(2, 2))
    return von_neumann_entropy(rho_B) - von_neumann_entropy(rho_CB)


def evaluate(setup: ChannelSetup, field_model=None) -> ChannelResult:
    rho, count = output_state(setup, field_model, return_count=True)
    return ChannelResult(rho, coherent_information(rho), count)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


# --- sweeps ---------------------------------------------------------------

def _matched(spec: GateSpec, J: float) -> GateSpec:
    """Primary factor gets ``J``; the other gets ``pi / (4 J |c|)``.

    ``c`` is the commutator phase of the two observables, so the secondary
    coupling makes the two displacements maximally non-commuting.  The
    primary factor is the one with the larger template coupling; template
    signs are kept.
    """
    if len(spec.factors) != 2:
        raise ValueError("matched couplings need two-factor gates")
    a, b = spec.factors
    if abs(a.J) == abs(b.J):
        raise ValueError("template must mark the primary factor with the larger |J|")
    primary = 0 if abs(a.J) > abs(b.J) else 1
    if J == 0:
        return spec.with_couplings([0.0, 0.0])
    c = abs(commutator_phase(a.observable, b.observable))
    if c == 0:
        raise ValueError("matched couplings need non-commuting observables")
    mags = [0.0, 0.0]
    mags[primary] = J
    mags[1 - primary] = math.pi / (4 * J * c)
    return spec.with_couplings([math.copysign(m, f.J) for m, f in zip(mags, spec.factors)])


def matched_couplings(setup: ChannelSetup, J: float) -> ChannelSetup:
    return ChannelSetup(_matched(setup.encoder, J), _matched(setup.decoder, J))


def scaled_couplings(setup: ChannelSetup, J: float) -> ChannelSetup:
    return ChannelSetup(setup.encoder.with_couplings([J * f.J for f in setup.encoder.factors]),
                        setup.decoder.with_couplings([J * f.J for f in setup.decoder.factors]))


@dataclass(frozen=True)
class SweepRow:
    J: float
    sigma: float
    coherent_info: float
    branch_count: int


def capacity_sweep(setup: ChannelSetup, J_values: Sequence[float],
                   sigma_values: Sequence[float] | None = None,
                   coupling: str = "scale", reference_sigma: float | None = None,
                   threads: int = 1, field_model=None) -> list[SweepRow]:
    """Coherent information over a (J, sigma) grid.

    ``coupling="scale"`` multiplies every template coupling by ``J``;
    ``coupling="matched"`` uses :func:`matched_couplings`.  For each sigma
    the whole template (positions, widths, times) is rescaled by
    ``sigma / reference_sigma``; the reference defaults to the encoder's
    first smearing width.
    """
    if coupling not in ("scale", "matched"):
        raise ValueError(f"unknown coupling mode {coupling!r}")
    ref = reference_sigma or setup.encoder.factors[0].observable.smearing.sigma
    sigmas = list(sigma_values) if sigma_values is not None else [ref]
    grid = [(float(J), float(s)) for s in sigmas for J in J_values]

    def run(point):
        J, s = point
        base = setup.scaled(s / ref) if s != ref else setup
        st = matched_couplings(base, J) if coupling == "matched" else scaled_couplings(base, J)
        res = evaluate(st, field_model)
        return SweepRow(J, s, res.coherent_info, res.branch_count)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(run, grid))
    return [run(p) for p in grid]


def is_monotone(values: Sequence[float], increasing: bool = True, tol: float = 1e-12) -> bool:
    d = np.diff(np.asarray(values, dtype=float))
    return bool(np.all(d >= -tol) if increasing else np.all(d <= tol))
