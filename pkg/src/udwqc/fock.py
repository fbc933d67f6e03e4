"""Brute-force reference for the channel engine: a few field modes in a
truncated Fock space, exact factor unitaries, numerical partial trace."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .channel import ChannelSetup, embed, initial_state
from .fields import DiscreteModeField

__all__ = ["OracleResult", "fock_oracle", "LEAK_THRESHOLD"]

LEAK_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class OracleResult:
    rho_CB: np.ndarray
    top_population: float
    reliable: bool


def _ladder(n_max, mode, modes):
    a = sp.diags(np.sqrt(np.arange(1, n_max + 1)), 1, format="csr", dtype=complex)
    eye = sp.identity(n_max + 1, format="csr", dtype=complex)
    out = None
    for m in range(modes):
        f = a if m == mode else eye
        out = f if out is None else sp.kron(out, f, format="csr")
    return out


def fock_oracle(setup: ChannelSetup, mode_count: int, k_values, n_max: int,
                weights=None) -> OracleResult:
    """Reference ``rho_CB`` from an explicit truncated-Fock simulation.

    The field keeps ``mode_count`` modes at ``k_values`` with quadrature
    ``weights`` (default ``1/2pi`` each).  The engine reproduces this
    result exactly when given the same :class:`DiscreteModeField`.
    """
    if not 1 <= mode_count <= 3:
        raise ValueError("mode_count must be 1, 2 or 3")
    if not 1 <= n_max <= 12:
        raise ValueError("n_max must be between 1 and 12")
    k = np.atleast_1d(np.asarray(k_values, dtype=float))
    if k.size != mode_count:
        raise ValueError("one k value per mode required")
    w = np.full(mode_count, 1 / (2 * np.pi)) if weights is None else np.asarray(weights, float)
    field = DiscreteModeField(k, w)

    steps = setup.steps()
    species = {f.observable.species for _, f in steps}
    if len(species) > 1:
        raise ValueError("the oracle supports a single field species")

    ladders = [_ladder(n_max, m, mode_count) for m in range(mode_count)]
    fdim = (n_max + 1) ** mode_count
    psi = np.kron(initial_state(), np.eye(fdim, 1).ravel()).astype(complex)
    for q, f in steps:
        u = field.couplings(f.observable)
        O = sum(u[m] * ladders[m] + np.conj(u[m]) * ladders[m].getH() for m in range(mode_count))
        mu = embed(f.detector.matrix(f.observable.time), q)
        gen = sp.kron(sp.csr_matrix(1j * f.J * mu), O, format="csr")
        psi = expm_multiply(gen, psi)

    occ = np.indices((n_max + 1,) * mode_count).reshape(mode_count, -1)
    top = (occ == n_max).any(axis=0)
    pops = np.abs(psi.reshape(8, fdim)) ** 2
    top_pop = float(pops[:, top].sum())

    Psi = psi.reshape(2, 2, 2, fdim)
    rho = np.einsum("cabf,dagf->cbdg", Psi, Psi.conj()).reshape(4, 4)
    return OracleResult(rho, top_pop, top_pop <= LEAK_THRESHOLD)
