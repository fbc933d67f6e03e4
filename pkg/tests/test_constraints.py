import math

import pytest

from udwqc.constants import HBAR_EV_FS, HBAR_EV_NS
from udwqc.constraints import (SCENARIOS, MaterialScenario, esr_frequency, max_link_distance,
                               moire_velocity, q_loc, scenario_table, switching_time,
                               table_i, thermal_polarization)

PAPER_ROWS = [(4.2, 1.4, 39.2, 0.22), (4.2, 4.5, 126.0, 0.62),
              (4.2, 9.0, 252.0, 0.89), (2.1, 9.0, 252.0, 0.99)]


@pytest.mark.parametrize("T,B,f,p", PAPER_ROWS)
def test_polarization_rows(T, B, f, p):
    assert abs(esr_frequency(B) - f) <= 0.5
    assert abs(thermal_polarization(T, B) - p) <= 0.005


def test_table_i_order():
    rows = table_i()
    assert [(r.T, r.B0) for r in rows] == [(T, B) for T, B, _, _ in PAPER_ROWS]


def test_polarization_monotone():
    ps = [thermal_polarization(4.2, B) for B in (0.5, 1.0, 2.0, 5.0, 9.0)]
    assert all(a < b for a, b in zip(ps, ps[1:]))
    ps = [thermal_polarization(T, 5.0) for T in (1.0, 2.0, 4.2, 10.0, 300.0)]
    assert all(a > b for a, b in zip(ps, ps[1:]))
    assert thermal_polarization(4.2, 0.0) == 0.0


def test_switching_times():
    t = {s.name: s.switching_time * 1e6 for s in SCENARIOS}  # fs
    assert t["graphene"] == pytest.approx(30.0)
    assert t["HgTe"] == pytest.approx(55.0, rel=0.02)
    assert t["TMD"] == pytest.approx(2000.0)


def test_moire_velocity():
    v = moire_velocity(1e-3, 10.0)
    assert v == pytest.approx(4836.0, rel=1e-3)
    assert v == pytest.approx(5000.0, rel=0.05)
    s = MaterialScenario.moire("tmd", 1e-3, 10.0, 10.0)
    assert s.velocity == v and s.bandwidth == 1e-3


def test_unit_round_trips():
    # eV -> meV and nm/ns -> nm/fs
    assert moire_velocity(1.0, 10.0) == pytest.approx(1000 * moire_velocity(1e-3, 10.0), rel=1e-12)
    assert HBAR_EV_FS == pytest.approx(HBAR_EV_NS * 1e6, rel=1e-12)
    t_ns = switching_time(30.0, 1e6)
    assert t_ns * 1e6 == pytest.approx(switching_time(30.0, 1e6 * 1e-6), rel=1e-12)
    assert q_loc(t_ns, 1e6, 30.0) == pytest.approx(q_loc(t_ns * 1e6, 1.0, 30.0), rel=1e-12)


def test_q_loc_at_switching_time_is_one():
    for row in scenario_table():
        assert row["q_loc"] == pytest.approx(1.0)
    assert q_loc(0.0, 1.0, 1.0) == 0.0


def test_link_distance_is_product():
    assert max_link_distance(0.54e6, 2e-3) == pytest.approx(1080.0)
    assert max_link_distance(1.0, 0.0) == 0.0


@pytest.mark.parametrize("call", [
    lambda: q_loc(-1.0, 1.0, 1.0),
    lambda: switching_time(0.0, 1.0),
    lambda: switching_time(1.0, math.nan),
    lambda: thermal_polarization(0.0, 1.0),
    lambda: esr_frequency(-1.0),
    lambda: moire_velocity(1.0, -1.0),
    lambda: max_link_distance(0.0, 1.0),
    lambda: MaterialScenario("x", -1.0, 1.0),
])
def test_invalid_inputs(call):
    with pytest.raises(ValueError):
        call()
