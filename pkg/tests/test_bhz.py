import numpy as np
import pytest

from udwqc.bhz import (PAPER_PARAMS, BhzParams, DegenerateParameterError, DeviceGeometry,
                       DimensionCapError, GateRegion, LocalField, analytic_dispersion,
                       assemble, bloch_hamiltonian, bulk_gap, continuum_map, hopping_blocks)


def bloch_multiset(params, nx, ny):
    kx = 2 * np.pi * np.arange(nx) / nx
    ky = 2 * np.pi * np.arange(ny) / ny
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    e = analytic_dispersion(params, KX, KY).ravel()
    return np.sort(np.concatenate([e, e, -e, -e]))


def periodic(nx, ny):
    return DeviceGeometry(nx, ny, "periodic", "periodic")


def test_paper_parameters_from_continuum():
    p = PAPER_PARAMS
    assert p.epsilon == pytest.approx(3.74, abs=1e-12)
    assert p.mass == pytest.approx(7.4654, abs=1e-12)
    assert p.lam == 0.55
    assert p.lattice_constant == 0.65
    A, B, M = p.to_continuum()
    assert (A, B, M) == pytest.approx((0.55, -1.87, -0.0146), abs=1e-12)


def test_continuum_map_rejects_flat_band():
    with pytest.raises(DegenerateParameterError):
        continuum_map(0.55, 0.0, -0.0146)


def test_bulk_gap_matches_continuum_mass():
    assert bulk_gap(PAPER_PARAMS) == pytest.approx(0.0146, rel=1e-6)


@pytest.mark.parametrize("nx,ny", [(2, 2), (3, 5), (4, 4), (6, 9), (12, 12)])
def test_bloch_oracle(nx, ny):
    H = assemble(PAPER_PARAMS, periodic(nx, ny))
    e = np.linalg.eigvalsh(H.toarray())
    assert np.max(np.abs(e - bloch_multiset(PAPER_PARAMS, nx, ny))) < 1e-10


def test_bloch_hamiltonian_eigenvalues():
    for kx, ky in [(0.0, 0.0), (0.3, -1.1), (np.pi, 2.0)]:
        e = np.linalg.eigvalsh(bloch_hamiltonian(PAPER_PARAMS, kx, ky))
        E = analytic_dispersion(PAPER_PARAMS, kx, ky)
        np.testing.assert_allclose(e, [-E, -E, E, E], atol=1e-12)


def test_hopping_blocks_reproduce_bloch_form():
    tx, ty = hopping_blocks(PAPER_PARAMS)
    kx, ky = 0.7, -0.4
    h = (PAPER_PARAMS.mass * np.kron(np.eye(2), np.diag([1, -1]))
         + tx * np.exp(1j * kx) + tx.conj().T * np.exp(-1j * kx)
         + ty * np.exp(1j * ky) + ty.conj().T * np.exp(-1j * ky))
    np.testing.assert_allclose(h, bloch_hamiltonian(PAPER_PARAMS, kx, ky), atol=1e-14)


def test_hermiticity_is_exact():
    geo = DeviceGeometry(7, 5)
    gates = [GateRegion("half-disk", (2.0, 1.3), 15.0, radius=1.4, normal=(0, 1))]
    fields = [LocalField((1.3, 1.3), (0.2, -0.5, 1.0), "gaussian", 1.0)]
    H = assemble(PAPER_PARAMS, geo, gates, fields)
    assert H.hermiticity_defect() == 0.0


def test_kramers_pairs_without_fields():
    e = np.linalg.eigvalsh(assemble(PAPER_PARAMS, periodic(5, 4)).toarray())
    np.testing.assert_allclose(e[0::2], e[1::2], atol=1e-10)
    e = np.linalg.eigvalsh(assemble(PAPER_PARAMS, DeviceGeometry(5, 4)).toarray())
    np.testing.assert_allclose(e[0::2], e[1::2], atol=1e-10)


def test_zeeman_field_lifts_kramers():
    f = [LocalField((0.0, 0.0), (0.0, 0.0, 0.3))]
    e = np.linalg.eigvalsh(assemble(PAPER_PARAMS, periodic(4, 4), fields=f).toarray())
    assert np.max(np.abs(e[0::2] - e[1::2])) > 1e-3


def test_translation_covariance():
    a = PAPER_PARAMS.lattice_constant
    geo = periodic(6, 5)
    gate = GateRegion("disk", (2 * a, 2 * a), 0.8, radius=1.1 * a)
    field = LocalField((4 * a, 1 * a), (0.1, 0.0, 0.4))
    e0 = np.linalg.eigvalsh(assemble(PAPER_PARAMS, geo, [gate], [field]).toarray())
    for shift in [(a, 0.0), (0.0, a)]:
        H = assemble(PAPER_PARAMS, geo, [gate.translated(shift)], [field.translated(shift)])
        np.testing.assert_allclose(np.linalg.eigvalsh(H.toarray()), e0, atol=1e-10)


def test_basis_ordering():
    geo = DeviceGeometry(3, 2)
    gate = GateRegion("rectangle", (2 * 0.65, 0.65), 5.0, extent=(0.1, 0.1))
    H = assemble(PAPER_PARAMS, geo, [gate])
    site = 1 * 3 + 2
    assert H.index(2, 1, 0) == 4 * site
    np.testing.assert_allclose(np.diag(H.block(site, site)).real,
                               5.0 + PAPER_PARAMS.mass * np.array([1, -1, 1, -1]))


def test_half_disk_membership():
    g = GateRegion("half-disk", (0.0, 0.0), 1.0, radius=1.0, normal=(0.0, -1.0))
    x = np.array([0.0, 0.0, 0.0, 1.0, 0.0])
    y = np.array([0.0, -1.0, 0.5, 0.0, -1.01])
    assert g.contains(x, y).tolist() == [True, True, False, True, False]


def test_gate_outside_device_is_rejected():
    with pytest.raises(ValueError):
        assemble(PAPER_PARAMS, DeviceGeometry(3, 3), [GateRegion("disk", (50.0, 50.0), 1.0, radius=1.0)])


def test_dimension_cap_checked_before_assembly():
    geo = DeviceGeometry(400, 200)
    assert geo.dimension == 320_000
    with pytest.raises(DimensionCapError):
        assemble(PAPER_PARAMS, geo, max_dimension=100_000)


def test_bar_size_assembles():
    H = assemble(PAPER_PARAMS, DeviceGeometry(400, 200))
    assert H.dimension == 320_000
    assert H.hermiticity_defect() == 0.0
    v = np.ones(H.dimension, dtype=complex)
    assert np.isfinite(H.matvec(v)).all()


def test_zero_hopping_parameters_allowed():
    p = BhzParams(0.0, 1.0, 0.0)
    e = np.linalg.eigvalsh(assemble(p, periodic(3, 3)).toarray())
    np.testing.assert_allclose(np.abs(e), 1.0)


@pytest.mark.parametrize("bad", [dict(epsilon=np.nan), dict(lattice_constant=0.0), dict(mass=np.inf)])
def test_invalid_params(bad):
    kw = dict(epsilon=1.0, mass=1.0, lam=1.0, lattice_constant=0.65)
    kw.update(bad)
    with pytest.raises(ValueError):
        BhzParams(**kw)


def test_geometry_validation():
    with pytest.raises(ValueError):
        DeviceGeometry(0, 5)
    with pytest.raises(ValueError):
        DeviceGeometry(4, 4, "twisted")


def test_continuum_map_trivial_case():
    p = continuum_map(0.0, -0.5, 0.0, 1.0)
    assert (p.epsilon, p.mass, p.lam) == (1.0, 2.0, 0.0)
    assert 130 / 200 == PAPER_PARAMS.lattice_constant


def test_bloch_special_points():
    p = PAPER_PARAMS
    e0 = np.linalg.eigvalsh(bloch_hamiltonian(p, 0.0, 0.0))
    np.testing.assert_allclose(e0, [-0.0146, -0.0146, 0.0146, 0.0146], atol=1e-12)
    epi = np.linalg.eigvalsh(bloch_hamiltonian(p, np.pi, np.pi))
    np.testing.assert_allclose(np.abs(epi), 14.9454, atol=1e-12)
    assert analytic_dispersion(p, 0.0, 0.0) == pytest.approx(0.0146, abs=1e-12)


def test_dispersion_reductions():
    kx, ky = 0.9, -2.1
    flat = BhzParams(1.3, 0.4, 0.0)
    e = np.linalg.eigvalsh(bloch_hamiltonian(flat, kx, ky))
    np.testing.assert_allclose(np.abs(e), abs(0.4 - 1.3 * (np.cos(kx) + np.cos(ky))), atol=1e-12)
    dirac = BhzParams(0.0, 0.0, 0.7)
    assert analytic_dispersion(dirac, kx, ky) == pytest.approx(
        0.7 * np.hypot(np.sin(kx), np.sin(ky)), abs=1e-14)


def test_gate_shifts_onsite_trace():
    geo = DeviceGeometry(1, 1)
    clean = assemble(PAPER_PARAMS, geo).block(0, 0)
    gated = assemble(PAPER_PARAMS, geo, [GateRegion("disk", (0.0, 0.0), 5.0, radius=0.1)]).block(0, 0)
    assert np.trace(gated - clean).real == pytest.approx(20.0)


def test_one_by_two_toy_matches_hand_built_matrix():
    p = BhzParams(0.8, 1.1, 0.6)
    tx, _ = hopping_blocks(p)
    on = p.mass * np.kron(np.eye(2), np.diag([1, -1]))
    ref = np.block([[on, tx], [tx.conj().T, on]])
    np.testing.assert_allclose(assemble(p, DeviceGeometry(2, 1)).toarray(), ref, atol=1e-15)
