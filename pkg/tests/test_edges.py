import warnings

import numpy as np
import pytest

from udwqc.bhz import PAPER_PARAMS, BhzParams, DeviceGeometry, assemble, bulk_gap
from udwqc.constants import HBAR_EV_NS
from udwqc.edges import (NoCrossingError, NotAnEdgeStateError, decay_length, density_map,
                         edge_branches, edge_velocity, edge_weight_fraction,
                         expected_decay_sites, profile_decay_length, ribbon_bands, spin_map)
from udwqc.spectra import EigenPair, SpectralWindow, interior_eigs

STRONG = BhzParams(1.0, 1.0, 1.0)
NARROW_DECAY = BhzParams(1.0, 1.6, 0.3)


@pytest.fixture(scope="module")
def ribbon_device():
    geo = DeviceGeometry(12, 60)
    window = SpectralWindow(-0.1, 0.1, 32)
    pairs = interior_eigs(assemble(STRONG, geo), window)
    return geo, window, pairs


@pytest.fixture(scope="module")
def narrow_bands():
    return ribbon_bands(NARROW_DECAY, 40, 161, (-0.6, 0.6))


def test_density_total_counts_states(ribbon_device):
    geo, window, pairs = ribbon_device
    dens = density_map(pairs, window, geo)
    assert dens.grid.shape == (60, 12)
    assert dens.state_count == len(pairs) == 8
    assert abs(dens.total - len(pairs)) < 1e-10


def test_in_gap_states_live_on_edges(ribbon_device):
    geo, window, pairs = ribbon_device
    assert edge_weight_fraction(density_map(pairs, window, geo).grid) >= 0.8


def test_kramers_partners_cancel_spin(ribbon_device):
    geo, window, pairs = ribbon_device
    s = spin_map(pairs, window, geo)
    assert np.max(np.abs(s.grid)) < 1e-10
    single = spin_map(pairs[:1], window, geo).grid
    assert np.max(np.abs(single)) > 1e-3


def test_maps_reject_states_outside_window(ribbon_device):
    geo, _, pairs = ribbon_device
    with pytest.raises(ValueError):
        density_map(pairs, SpectralWindow(-0.01, 0.01), geo)


def test_empty_map():
    geo = DeviceGeometry(4, 4)
    d = density_map([], SpectralWindow(-1, 1), geo)
    assert d.total == 0.0 and d.grid.shape == (4, 4)


def test_spin_momentum_locking(narrow_bands):
    br = edge_branches(narrow_bands, "top")
    assert set(br) == {1, -1}
    slopes = {}
    for s, (k, e, _) in br.items():
        o = np.argsort(k)
        slopes[s] = np.polyfit(k[o], e[o], 1)[0]
    assert slopes[1] * slopes[-1] < 0
    bottom = edge_branches(narrow_bands, "bottom")
    for s in (1, -1):
        kb, eb, _ = bottom[s]
        assert np.sign(np.polyfit(kb, eb, 1)[0]) == -np.sign(slopes[s])


def test_velocity_both_spins_equal(narrow_bands):
    v = [edge_velocity(narrow_bands, edge, s) for edge in ("top", "bottom") for s in (1, -1)]
    np.testing.assert_allclose(v, v[0], rtol=1e-6)


def test_velocity_scales_with_lambda():
    a = ribbon_bands(BhzParams(1.0, 1.6, 0.3), 40, 161, (-0.6, 0.6))
    b = ribbon_bands(BhzParams(1.0, 1.6, 0.6), 40, 161, (-0.6, 0.6))
    ratio = edge_velocity(b) / edge_velocity(a)
    assert ratio == pytest.approx(2.0, rel=0.05)


def test_velocity_near_lambda_a_over_hbar(narrow_bands):
    p = NARROW_DECAY
    v = edge_velocity(narrow_bands)
    assert v == pytest.approx(p.lam * p.lattice_constant / HBAR_EV_NS, rel=0.05)


def test_periodic_ribbon_has_no_edge_branches():
    bands = ribbon_bands(NARROW_DECAY, 40, 33, (-0.6, 0.6), boundary_y="periodic")
    assert not (np.abs(bands.energies) < 0.5 * bulk_gap(NARROW_DECAY)).any()
    with pytest.raises(NoCrossingError):
        edge_velocity(bands)


def test_trivial_mass_has_no_crossing():
    # mass beyond 2 epsilon: normal insulator
    bands = ribbon_bands(BhzParams(1.0, 2.5, 0.5), 30, 33, (-0.6, 0.6))
    with pytest.raises(NoCrossingError):
        edge_velocity(bands)


def test_zero_lambda_has_no_edge_velocity():
    bands = ribbon_bands(BhzParams(1.0, 1.6, 0.0), 30, 33, (-0.6, 0.6))
    with pytest.raises(NoCrossingError):
        edge_velocity(bands)


def test_hybridisation_warning():
    assert expected_decay_sites(PAPER_PARAMS) > 30
    with pytest.warns(RuntimeWarning):
        b = ribbon_bands(PAPER_PARAMS, 40, 16, (-0.05, 0.05))
    assert b.warning
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ribbon_bands(NARROW_DECAY, 40, 16, (-0.05, 0.05))


def test_profile_decay_length_of_exponential():
    y = np.arange(60)
    prof = np.exp(-2 * y / 7.0)
    assert profile_decay_length(prof, 0.5) == pytest.approx(3.5, rel=1e-10)


def test_profile_without_tail():
    with pytest.raises(NotAnEdgeStateError):
        profile_decay_length(np.ones(20), 0.65)


def test_decay_length_device_matches_ribbon():
    geo = DeviceGeometry(40, 8, "open", "periodic")
    pairs = interior_eigs(assemble(NARROW_DECAY, geo), SpectralWindow(-0.05, 0.05, 32))
    assert len(pairs) == 4
    lengths = [decay_length(p, geo, 0.65) for p in pairs]
    bands = ribbon_bands(NARROW_DECAY, 40, 17, (-0.1, 0.1), keep_vectors=True)
    ib = int(np.argmin(np.abs(bands.energies[8])))
    prof = bands.profile(8, ib)
    if bands.top_weight[8, ib] > 0.5:
        prof = prof[::-1]
    ref = profile_decay_length(prof, 0.65)
    np.testing.assert_allclose(lengths, ref, rtol=1e-3)
    assert 0.65 < ref < 10 * 0.65


def test_bulk_state_is_not_an_edge_state():
    geo = DeviceGeometry(12, 12)
    H = assemble(STRONG, geo)
    e, v = np.linalg.eigh(H.toarray())
    i = int(np.argmin(np.abs(e - 2.2)))
    pair = EigenPair(e[i], v[:, i], 0.0)
    with pytest.raises(NotAnEdgeStateError):
        decay_length(pair, geo, 0.65, min_edge_weight=0.9)


def test_bands_validation():
    with pytest.raises(ValueError):
        ribbon_bands(STRONG, 10, 8)
    with pytest.raises(ValueError):
        ribbon_bands(STRONG, 10, 16, (0.0, 4.0))
