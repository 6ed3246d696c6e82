import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spdc.errors import SpdError
from spdc.lbm import (Lattice, LbmConstants, cell_stages, channel, closed_box, lbm_step_reference, max_rel_error,
                      pipeline_step, read_lattice, run_steps, simulate_cells, uniform, write_lattice)
from spdc.lbm.lattice import C, IN_FIELDS, OPP, OUTLET, PRESSURE, WALL, W, from_packet, snapshot_csv, to_packet
from spdc.lbm.reference import boundaries, collide, equilibrium, macro, translate

K = LbmConstants.standard()


def _cells(rng, n):
    """Near-equilibrium random populations, as a running simulation would see."""
    rho = rng.uniform(0.9, 1.1, n)
    u, v = rng.uniform(-0.1, 0.1, n), rng.uniform(-0.1, 0.1, n)
    feq = equilibrium(rho, u, v)
    return (feq * rng.uniform(0.95, 1.05, feq.shape)).astype(np.float32)


# -- constants and stages -------------------------------------------------------

def test_constants():
    assert sum(K.A) == pytest.approx(1.0, abs=1e-15)
    for i in range(9):
        assert K.B[i] == 3 * K.A[i] and K.C[i] == 4.5 * K.A[i] and K.D[i] == 1.5 * K.A[i]
    assert K.tau_inv == 0.516262261 and (K.rho_in, K.rho_out) == (1.05, 0.95)


def test_macro_examples(rng):
    rho, u, v = macro(np.full((9, 1), 1 / 9))
    assert rho[0] == pytest.approx(1.0) and u[0] == pytest.approx(0.0, abs=1e-15) and v[0] == pytest.approx(0.0, abs=1e-15)
    f = np.zeros((9, 1)); f[1] = 1
    assert [x[0] for x in macro(f)] == [1.0, 1.0, 0.0]
    f = rng.uniform(0, 1, (9, 5))
    for j in range(5):
        r = sum(f[i, j] for i in range(9))
        mu = sum(C[i, 0] * f[i, j] for i in range(9)) / r
        mv = sum(C[i, 1] * f[i, j] for i in range(9)) / r
        got = macro(f[:, j:j + 1])
        assert got[0][0] == pytest.approx(r) and got[1][0] == pytest.approx(mu) and got[2][0] == pytest.approx(mv)


def test_equilibrium_examples():
    assert np.allclose(equilibrium(1.0, 0.0, 0.0), W)
    assert np.allclose(equilibrium(2.0, 0.0, 0.0), 2 * W)
    u = 0.1
    want = [W[i] * (1 + 3 * C[i, 0] * u + 4.5 * (C[i, 0] * u) ** 2 - 1.5 * u * u) for i in range(9)]
    assert np.array_equal(equilibrium(1.0, u, 0.0).astype(np.float32), np.float32(want))


def test_collide_examples(rng):
    f = rng.uniform(0, 1, 9)
    feq = rng.uniform(0, 1, 9)
    assert np.array_equal(collide(f, f, 0.5), f)
    assert np.allclose(collide(f, feq, 1.0), feq)
    assert np.allclose(collide(f, feq, K.tau_inv), [f[i] - K.tau_inv * (f[i] - feq[i]) for i in range(9)])


def test_spd_mode_tracks_double_mode(rng):
    f = _cells(rng, 512)
    assert max_rel_error(cell_stages(f, "spd"), cell_stages(f, "double")) <= 1e-5


def test_translate_impulse_and_rest():
    f = np.zeros((9, 4, 4), np.float32)
    f[1, 1, 1] = 1.0
    f[0] = np.arange(16).reshape(4, 4)
    g = translate(f)
    assert g[1, 1, 2] == 1.0 and g[1].sum() == 1.0
    assert np.array_equal(g[0], f[0])


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 8), st.integers(3, 8), st.integers(0, 2**31))
def test_translate_permutes_interior(nx, ny, seed):
    f = np.random.default_rng(seed).uniform(0, 1, (9, ny, nx)).astype(np.float32)
    g = translate(f)
    for i in range(9):
        cx, cy = C[i]
        src = f[i, max(0, -cy):ny - max(0, cy), max(0, -cx):nx - max(0, cx)]
        dst = g[i, max(0, cy):ny - max(0, -cy) or None, max(0, cx):nx - max(0, -cx) or None]
        assert np.array_equal(np.sort(src, axis=None), np.sort(dst, axis=None))


def test_boundaries_interior_unchanged(rng):
    f = rng.uniform(0, 1, (9, 3, 3))
    assert np.array_equal(boundaries(f, np.zeros((3, 3), np.uint32)), f)


def test_boundaries_ignore_undefined_bits(rng):
    f = rng.uniform(0, 1, (9, 3, 3))
    attr = np.full((3, 3), 0xFFFFFFFF ^ (WALL | PRESSURE | OUTLET), np.uint32)
    assert np.array_equal(boundaries(f, attr), f)


def test_bounce_back_swaps_pairs():
    f = np.zeros((9, 1, 1)); f[1] = 1.0
    g = boundaries(f, np.full((1, 1), WALL, np.uint32))
    assert g[3, 0, 0] == 1.0 and g[1, 0, 0] == 0.0
    f = np.arange(9, dtype=float).reshape(9, 1, 1)
    g = boundaries(f, np.full((1, 1), WALL, np.uint32))
    assert [g[i, 0, 0] for i in range(9)] == [f[OPP[i], 0, 0] for i in range(9)]


@pytest.mark.parametrize("attr, rho", [(PRESSURE, 1.05), (PRESSURE | OUTLET, 0.95)])
def test_pressure_cells_close_mass(attr, rho):
    f = np.full((9, 1, 1), 1 / 9)
    for dtype, tol in ((np.float64, 1e-12), (np.float32, 1e-5)):
        g = boundaries(f.astype(dtype), np.full((1, 1), attr, np.uint32), dtype=dtype)
        assert abs(g.astype(float).sum() - rho) / rho <= tol


def test_inlet_recomputes_east_movers():
    f = np.arange(1, 10, dtype=float).reshape(9, 1, 1)
    g = boundaries(f, np.full((1, 1), PRESSURE, np.uint32))
    changed = {i for i in range(9) if g[i, 0, 0] != f[i, 0, 0]}
    assert changed == {1, 5, 8}
    g = boundaries(f, np.full((1, 1), PRESSURE | OUTLET, np.uint32))
    assert {i for i in range(9) if g[i, 0, 0] != f[i, 0, 0]} == {3, 6, 7}


# -- whole steps ----------------------------------------------------------------

@pytest.mark.parametrize("mode", ["double", "spd"])
def test_rest_fixpoint(mode):
    lat = uniform(6, 5)
    assert lbm_step_reference(lat, mode) == lat


def test_closed_box_conserves_mass():
    lat, masses = run_steps(closed_box(24, 24, seed=3), 100)
    assert abs(masses[-1] - masses[0]) / masses[0] <= 1e-3
    assert np.isfinite(lat.f).all()


def test_unknown_mode():
    with pytest.raises(ValueError):
        lbm_step_reference(uniform(2, 2), "half")


# -- lattice files and streams ----------------------------------------------------

def test_lattice_file_round_trip(tmp_path, rng):
    lat = channel(10, 6)
    lat.f[:] = rng.uniform(-1, 1, lat.f.shape)
    write_lattice(tmp_path / "x.lat", lat)
    assert read_lattice(tmp_path / "x.lat") == lat
    assert (tmp_path / "x.lat").stat().st_size == 16 + 40 * 60


def test_lattice_file_errors(tmp_path):
    (tmp_path / "a.lat").write_bytes(b"nope")
    with pytest.raises(SpdError) as ei:
        read_lattice(tmp_path / "a.lat")
    assert ei.value.code == "BAD_LATTICE_FILE"
    write_lattice(tmp_path / "b.lat", uniform(2, 2))
    (tmp_path / "b.lat").write_bytes((tmp_path / "b.lat").read_bytes()[:-4])
    with pytest.raises(SpdError) as ei:
        read_lattice(tmp_path / "b.lat")
    assert ei.value.code == "SIZE_MISMATCH"
    with pytest.raises(SpdError) as ei:
        read_lattice(tmp_path / "c.lat")
    assert ei.value.code == "FILE_NOT_FOUND"


def test_bundled_lattice():
    from importlib import resources
    with resources.as_file(resources.files("spdc.data") / "channel_64x32.lat") as p:
        lat = read_lattice(p)
    assert (lat.nx, lat.ny) == (64, 32)
    assert (lat.attr[0] & WALL).all() and (lat.attr[1:-1, -1] & OUTLET).all()


def test_row_major_order():
    lat = uniform(2, 2)
    lat.f[0] = [[0, 1], [2, 3]]
    pk = to_packet(lat)
    assert pk.fields == IN_FIELDS
    assert pk.as_floats()[:, 0].tolist() == [0, 1, 2, 3]   # (0,0) (1,0) (0,1) (1,1)
    assert from_packet(pk, 2, 2) == lat
    with pytest.raises(SpdError) as ei:
        from_packet(pk, 4, 2)
    assert ei.value.code == "SIZE_MISMATCH"


def test_snapshot_csv():
    text = snapshot_csv(uniform(3, 2, rho=1.0, u=0.05))
    lines = text.splitlines()
    assert lines[0] == "x,y,rho,u,v" and len(lines) == 7
    x, y, rho, u, v = lines[-1].split(",")
    assert (x, y) == ("2", "1") and float(rho) == pytest.approx(1.0, rel=1e-6) and float(u) == pytest.approx(0.05, rel=1e-5)


def test_lattice_shape_check():
    with pytest.raises(SpdError):
        Lattice(np.zeros((9, 2, 3)), np.zeros((3, 2)))


# -- the compiled pipeline ------------------------------------------------------------

def test_cell_pipeline_bit_exact(cell_design, rng):
    f = _cells(rng, 300)
    got = simulate_cells(cell_design, f)
    assert np.array_equal(got.view(np.uint32), cell_stages(f, "spd").view(np.uint32))


def test_cell_pipeline_equilibrium_fixpoint(cell_design):
    f = uniform(4, 1).f.reshape(9, 4)
    got = simulate_cells(cell_design, f)
    assert np.array_equal(got.view(np.uint32), f.view(np.uint32))


def test_full_step_small(rng):
    from spdc.lbm import lbm_design
    lat = channel(8, 6, obstacle=(4, 3, 1))
    design = lbm_design(8)
    got = pipeline_step(design, lat)
    assert got == lbm_step_reference(lat, "spd")
    assert max_rel_error(got.f, lbm_step_reference(lat, "double").f) <= 1e-5


def test_full_step_width_mismatch(lbm):
    with pytest.raises(SpdError) as ei:
        pipeline_step(lbm, uniform(8, 4))
    assert ei.value.code == "SIZE_MISMATCH"


def test_full_step_under_stalls():
    from spdc.lbm import lbm_design
    from spdc.sim import StallPattern
    lat = channel(6, 5, obstacle=None)
    design = lbm_design(6)
    assert pipeline_step(design, lat, stalls=StallPattern.parse("random:0.5:3")) == pipeline_step(design, lat)
