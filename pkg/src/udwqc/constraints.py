"""Closed-form design constraints: gate localization, switching times,
thermal polarization and link distances."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import ESR_GHZ_PER_T, HBAR_EV_NS, POLARIZATION_K_PER_T

__all__ = [
    "MaterialScenario", "PolarizationRow", "SCENARIOS", "TABLE_I_CONDITIONS",
    "q_loc", "switching_time", "thermal_polarization", "esr_frequency",
    "moire_velocity", "max_link_distance", "table_i", "scenario_table",
]


def _positive(name, value, allow_zero=False):
    if not math.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        raise ValueError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value!r}")


def q_loc(t_sw: float, v: float, lambda_s: float) -> float:
    """Gate-localization quality ``t_sw * v / lambda_s``."""
    _positive("t_sw", t_sw, allow_zero=True)
    _positive("v", v)
    _positive("lambda_s", lambda_s)
    return t_sw * v / lambda_s


def switching_time(lambda_s: float, v: float) -> float:
    """Switching time (ns) for smearing length ``lambda_s`` (nm) at speed ``v``."""
    _positive("lambda_s", lambda_s)
    _positive("v", v)
    return lambda_s / v


def thermal_polarization(T: float, B0: float) -> float:
    _positive("T", T)
    if not math.isfinite(B0):
        raise ValueError("B0 must be finite")
    return math.tanh(POLARIZATION_K_PER_T * B0 / T)


def esr_frequency(B0: float) -> float:
    """Electron spin resonance frequency in GHz."""
    _positive("B0", B0, allow_zero=True)
    return ESR_GHZ_PER_T * B0


def moire_velocity(W: float, a_M: float) -> float:
    """Flat-band velocity ``W a_M / (hbar pi)`` in nm/ns."""
    _positive("W", W)
    _positive("a_M", a_M)
    return W * a_M / (HBAR_EV_NS * math.pi)


def max_link_distance(v: float, t_s: float) -> float:
    """Scrambling-limited qubit separation ``v * t_s`` (nm).

    Implemented as a product on dimensional grounds.
    """
    _positive("v", v)
    _positive("t_s", t_s, allow_zero=True)
    return v * t_s


@dataclass(frozen=True)
class MaterialScenario:
    name: str
    velocity: float          # nm/ns
    smearing: float          # nm
    bandwidth: float | None = None   # eV
    moire_constant: float | None = None  # nm

    def __post_init__(self):
        _positive("velocity", self.velocity)
        _positive("smearing", self.smearing)

    @classmethod
    def moire(cls, name, bandwidth, moire_constant, smearing):
        return cls(name, moire_velocity(bandwidth, moire_constant), smearing,
                   bandwidth, moire_constant)

    @property
    def switching_time(self) -> float:
        return switching_time(self.smearing, self.velocity)


@dataclass(frozen=True)
class PolarizationRow:
    T: float
    B0: float
    f_e: float
    p_th: float

    @classmethod
    def compute(cls, T, B0):
        return cls(T, B0, esr_frequency(B0), thermal_polarization(T, B0))


SCENARIOS = (
    MaterialScenario("graphene", 1e6, 30.0),
    MaterialScenario("HgTe", 0.54e6, 30.0),
    # v for this scenario is only known to one significant figure
    MaterialScenario("TMD", 5000.0, 10.0, bandwidth=0.001, moire_constant=10.0),
)

TABLE_I_CONDITIONS = ((4.2, 1.4), (4.2, 4.5), (4.2, 9.0), (2.1, 9.0))


def table_i() -> list[PolarizationRow]:
    return [PolarizationRow.compute(T, B) for T, B in TABLE_I_CONDITIONS]


def scenario_table(scenarios=SCENARIOS) -> list[dict]:
    rows = []
    for s in scenarios:
        t = s.switching_time
        rows.append({"name": s.name, "v_nm_per_ns": s.velocity, "lambda_s_nm": s.smearing,
                     "t_sw_ns": t, "t_sw_fs": t * 1e6,
                     "q_loc": q_loc(t, s.velocity, s.smearing)})
    return rows
