import datetime as dt
import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lstfill.errors import NoReferencesError, ServiceabilityError
from lstfill.fusion import Provenance, ReconstructionMode as M, fuse, reconstruct
from lstfill.raster import GeoRef, LandCoverGrid, LstGrid
from lstfill.scene import Scene
from lstfill.spatial import SpatialParams
from lstfill.synthetic import make_case
from lstfill.temporal import SceneCatalog

GEO = GeoRef((0.0, 0.0), (30.0, -30.0), "EPSG:32615")
SP = SpatialParams(f=15)


def _grid(v, shape=(3, 3)):
    return LstGrid(GEO, np.full(shape, float(v)))


def test_mode_parse_and_label():
    assert M.parse("m3") is M.M3 and M.parse("M5") is M.M5
    with pytest.raises(ValueError):
        M.parse("m6")
    assert M.M1.label == "M1"


def test_fuse_examples():
    assert fuse(_grid(300), _grid(304), 0.25).values[0, 0] == 301.0
    assert np.array_equal(fuse(_grid(300), _grid(304), 0.0).values, _grid(300).values)
    assert np.array_equal(fuse(_grid(300), _grid(304), 1.0).values, _grid(304).values)
    with pytest.raises(ValueError):
        fuse(_grid(300), _grid(304), 1.5)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(200, 380), b=st.floats(200, 380), theta=st.floats(0, 1))
def test_fuse_is_convex(a, b, theta):
    v = fuse(_grid(a, (1, 1)), _grid(b, (1, 1)), theta).values[0, 0]
    assert min(a, b) - 1e-9 <= v <= max(a, b) + 1e-9


@pytest.fixture(scope="module")
def case():
    return make_case(seed=21, shape=(48, 48), target_theta=0.05)


def test_m1_is_weighted_m2_m3(case):
    res = {m: reconstruct(case.catalog, case.target_date, m, SP) for m in (M.M1, M.M2, M.M3)}
    theta = res[M.M1].theta
    want = (1 - theta) * res[M.M2].output.values + theta * res[M.M3].output.values
    assert np.max(np.abs(res[M.M1].output.values - want)) < 1e-6
    assert res[M.M1].references_used == res[M.M3].references_used
    assert len(res[M.M1].references_used) >= 1


def test_m4_equals_m1_on_constant_land_cover(case):
    m4 = reconstruct(case.catalog, case.target_date, M.M4, SP)
    flat = LandCoverGrid.constant_like(case.catalog.land)
    m1 = reconstruct(case.catalog, case.target_date, M.M1, SP, land=flat)
    assert np.array_equal(m4.output.values, m1.output.values)


def test_m5_fills_with_clear_mean():
    vals = np.full((4, 4), 290.0)
    vals[:, 2:] = 310.0
    occ = np.zeros((4, 4), dtype=bool)
    occ[1:3, 1:3] = True  # removes two 290s and two 310s
    t = dt.date(2020, 7, 1)
    cat = SceneCatalog([Scene.from_arrays(t, GEO, vals, occ)], LandCoverGrid(GEO, np.ones((4, 4), dtype=int)))
    r = reconstruct(cat, t, M.M5)
    assert np.all(r.output.values[occ] == 300.0)
    assert np.all(r.provenance[occ] == Provenance.FALLBACK)


@pytest.mark.parametrize("mode", list(M))
def test_clear_pixels_pass_through_and_provenance(case, mode):
    r = reconstruct(case.catalog, case.target_date, mode, SP)
    target = case.catalog.scene_on(case.target_date)
    clear = target.clear
    assert np.array_equal(r.output.values[clear], target.lst.values[clear])
    assert np.array_equal(r.provenance == Provenance.OBSERVED, clear)
    assert r.output.valid.all()


def _lonely_catalog():
    rng = np.random.default_rng(0)
    t = dt.date(2020, 7, 1)
    vals = 300 + rng.normal(0, 1, (20, 20))
    occ = rng.random((20, 20)) < 0.2
    far = Scene.from_arrays(t + dt.timedelta(120), GEO, vals, np.zeros((20, 20), dtype=bool))
    return SceneCatalog([Scene.from_arrays(t, GEO, vals, occ), far], LandCoverGrid(GEO, np.ones((20, 20), dtype=int))), t


def test_m1_degrades_to_spatial_with_warning(caplog):
    cat, t = _lonely_catalog()
    with caplog.at_level(logging.WARNING):
        m1 = reconstruct(cat, t, M.M1, SP)
    m2 = reconstruct(cat, t, M.M2, SP)
    assert np.array_equal(m1.output.values, m2.output.values)
    assert m1.warnings and "no admissible reference" in m1.warnings[0]
    assert "no admissible reference" in caplog.text
    assert m1.references_used == []


def test_m3_fails_without_references():
    cat, t = _lonely_catalog()
    with pytest.raises(NoReferencesError):
        reconstruct(cat, t, M.M3, SP)


def _theta_scene(theta, date, shape=(20, 20)):
    occ = np.zeros(shape[0] * shape[1], dtype=bool)
    occ[: int(round(theta * occ.size))] = True
    return Scene.from_arrays(date, GEO, np.full(shape, 300.0), occ.reshape(shape))


def test_serviceability_bound():
    t = dt.date(2020, 7, 1)
    land = LandCoverGrid(GEO, np.ones((20, 20), dtype=int))
    cat = SceneCatalog([_theta_scene(0.99, t), _theta_scene(0.0, t + dt.timedelta(16))], land)
    with pytest.raises(ServiceabilityError, match="exceeds serviceability bound"):
        reconstruct(cat, t, M.M1)
    cat = SceneCatalog([_theta_scene(0.98, t), _theta_scene(0.0, t + dt.timedelta(16))], land)
    r = reconstruct(cat, t, M.M1, SpatialParams(f=9))
    assert r.output.valid.all() and np.isfinite(r.output.values).all()


def test_reconstruction_is_pure(case):
    a = reconstruct(case.catalog, case.target_date, M.M1, SP)
    b = reconstruct(case.catalog, case.target_date, M.M1, SP, cache={})
    assert np.array_equal(a.output.values, b.output.values)
    assert np.array_equal(a.provenance, b.provenance)
