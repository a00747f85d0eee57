import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lstfill.errors import EmptyMaskError, PlacementError
from lstfill.evaluation import (
    AblationTable,
    EvalReport,
    InsituParams,
    OcclusionSpec,
    StationRecord,
    ablation_suite,
    broadband_emissivity,
    default_overpass,
    insitu_lst,
    insitu_validate,
    read_station_records,
    score,
    simulate_occlusion,
    upwelling_flux,
)
from lstfill.fusion import ReconstructionMode as M
from lstfill.raster import GeoRef, LandCoverGrid, LstGrid
from lstfill.scene import Scene
from lstfill.spatial import SpatialParams
from lstfill.synthetic import make_case
from lstfill.temporal import SceneCatalog
from conftest import random_scene
from oracles import insitu_scalar

GEO = GeoRef((0.0, 0.0), (30.0, -30.0), "EPSG:32615")
D = dt.date(2020, 7, 1)


def _clear_scene(shape=(16, 16), value=300.0):
    return Scene.from_arrays(D, GEO, np.full(shape, value), np.zeros(shape, dtype=bool))


def test_spec_validation():
    with pytest.raises(ValueError):
        OcclusionSpec(0, 1)
    with pytest.raises(ValueError):
        OcclusionSpec(4, 0)


def test_single_square_area():
    aug, art = simulate_occlusion(_clear_scene(), OcclusionSpec(s=4, n=1, seed=3))
    assert art.sum() == 16
    assert np.array_equal(aug.occluded, art)
    assert not aug.lst.valid[art].any()
    assert aug.theta == 16 / 256


def test_same_seed_same_placement():
    a = simulate_occlusion(_clear_scene((40, 40)), OcclusionSpec(5, 4, seed=9))[1]
    b = simulate_occlusion(_clear_scene((40, 40)), OcclusionSpec(5, 4, seed=9))[1]
    assert np.array_equal(a, b)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.integers(1, 4), n=st.integers(1, 6))
def test_artificial_never_overlaps_real_or_itself(seed, s, n):
    rng = np.random.default_rng(seed)
    scene, _ = random_scene(rng, shape=(32, 32), theta=0.02)
    aug, art = simulate_occlusion(scene, OcclusionSpec(s, n, seed=seed))
    assert not (art & scene.occluded).any()
    assert art.sum() % (s * s) == 0
    squares = art.sum() // (s * s)
    assert 1 <= squares <= n
    assert aug.occluded.sum() == scene.occluded.sum() + art.sum()


def test_no_room_raises():
    occ = np.ones((10, 10), dtype=bool)
    occ[0, 0] = False
    scene = Scene.from_arrays(D, GEO, np.full((10, 10), 300.0), occ)
    with pytest.raises(PlacementError):
        simulate_occlusion(scene, OcclusionSpec(2, 1))
    with pytest.raises(PlacementError):
        simulate_occlusion(_clear_scene((4, 4)), OcclusionSpec(5, 1))


def test_partial_placement_warns(caplog):
    # 8x8 clear: only one 5x5 square can ever fit
    spec = next(OcclusionSpec(5, 3, seed=k) for k in range(100)
                if np.random.default_rng(k).integers(1, 4) > 1)
    _, art = simulate_occlusion(_clear_scene((8, 8)), spec)
    assert art.sum() == 25
    assert "placed 1 of" in caplog.text


def _truth(shape=(2, 2)):
    return LstGrid(GEO, np.full(shape, 300.0))


def test_score_examples():
    truth = _truth()
    art = np.ones((2, 2), dtype=bool)
    r = score(truth, truth, art)
    assert (r.mae, r.rmse, r.bias) == (0.0, 0.0, 0.0)
    r = score(LstGrid(GEO, np.full((2, 2), 302.0)), truth, art)
    assert (r.mae, r.rmse, r.bias) == (2.0, 2.0, 2.0)
    r = score(LstGrid(GEO, 300.0 + np.array([[1.0, -1.0], [3.0, -3.0]])), truth, art)
    assert r.mae == 2.0 and r.bias == 0.0
    assert r.rmse == pytest.approx(math.sqrt(5), abs=1e-12)
    assert r.n_pixels == 4


def test_score_only_uses_artificial_pixels():
    vals = np.full((2, 2), 300.0)
    vals[0, 0] = 350.0  # error outside the scored area
    art = np.array([[False, True], [True, True]])
    r = score(LstGrid(GEO, vals), _truth(), art)
    assert r.mae == 0.0 and r.n_pixels == 3


def test_score_empty_mask_raises():
    with pytest.raises(EmptyMaskError):
        score(_truth(), _truth(), np.zeros((2, 2), dtype=bool))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.floats(-20, 20))
def test_score_ordering_and_translation(seed, k):
    rng = np.random.default_rng(seed)
    truth = LstGrid(GEO, rng.uniform(280, 320, (8, 8)))
    rec = LstGrid(GEO, truth.values + rng.normal(0, 2, (8, 8)))
    art = rng.random((8, 8)) < 0.5
    art[0, 0] = True
    r = score(rec, truth, art)
    assert r.rmse + 1e-12 >= r.mae >= abs(r.bias) - 1e-12
    shifted = score(LstGrid(GEO, rec.values + k), truth, art)
    assert shifted.bias == pytest.approx(r.bias + k, abs=1e-9)


def test_broadband_emissivity_examples():
    assert broadband_emissivity(1, 1, 1, 1, 1) == 0.999
    assert broadband_emissivity(0, 0, 0, 0, 0) == 0.128
    rng = np.random.default_rng(0)
    for _ in range(50):
        e = rng.uniform(0.8, 1.0, 5)
        want = 0.128 + 0.014 * e[0] + 0.145 * e[1] + 0.241 * e[2] + 0.467 * e[3] + 0.004 * e[4]
        assert broadband_emissivity(*e) == pytest.approx(want, rel=1e-15)


def test_insitu_lst_examples():
    rec = StationRecord(dt.datetime(2020, 7, 1, 16), 400.0, 300.0, 0.97)
    assert insitu_lst(rec) == pytest.approx(insitu_scalar(400.0, 300.0, 0.97), rel=1e-14)
    assert insitu_lst(rec) == pytest.approx(290.3, abs=0.1)
    one = StationRecord(rec.timestamp, 400.0, 123.0, 1.0)
    assert insitu_lst(one) == pytest.approx((400.0 / 5.670374419e-8) ** 0.25, rel=1e-14)
    with pytest.raises(ValueError):
        insitu_lst(StationRecord(rec.timestamp, 5.0, 300.0, 0.9))
    with pytest.raises(ValueError):
        StationRecord(rec.timestamp, 400.0, 300.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(ts=st.floats(200, 350), eps=st.floats(0.8, 1.0), f_down=st.floats(100, 500))
def test_forward_inverse_round_trip(ts, eps, f_down):
    f_up = upwelling_flux(ts, eps, f_down)
    assert insitu_lst(StationRecord(dt.datetime(2020, 1, 1), f_up, f_down, eps)) == pytest.approx(ts, rel=1e-9)


def test_read_station_records(tmp_path):
    p = tmp_path / "st.csv"
    p.write_text("timestamp,f_up,f_down\n2020-07-01T16:10:00Z,450.5,380.25\n2020-07-01T16:11:00,451,381\n")
    recs = read_station_records(p, 0.97, lat=40.0, lon=-105.0)
    assert len(recs) == 2
    assert recs[0].timestamp == dt.datetime(2020, 7, 1, 16, 10)
    assert recs[0].f_down == 380.25 and recs[0].emissivity == 0.97 and recs[1].lon == -105.0


def test_default_overpass_uses_longitude():
    assert default_overpass(D, 0.0) == dt.datetime(2020, 7, 1, 10, 11)
    assert default_overpass(D, -90.0) == dt.datetime(2020, 7, 1, 16, 11)


def _station_for(catalog, truth_by_date, pixel, eps=0.97, f_down=350.0, offset_min=3):
    recs = []
    for d in catalog.dates:
        t = truth_by_date[d][pixel]
        when = default_overpass(d, 0.0) + dt.timedelta(minutes=offset_min)
        recs.append(StationRecord(when, upwelling_flux(t, eps, f_down), f_down, eps, lon=0.0))
    return recs


def test_insitu_clear_sky_rmse_zero_when_station_matches_pixel():
    case = make_case(seed=31, shape=(32, 32), n_scenes=4, target_theta=0.05)
    cat = case.catalog
    pixel = next(zip(*np.nonzero(np.logical_and.reduce([s.clear for s in cat.scenes]))))
    truth = case.truth
    res = insitu_validate(cat, _station_for(cat, truth, pixel), pixel, s_params=SpatialParams(f=9))
    st_clear = res.stats("clear")
    assert st_clear["n"] == len(cat.scenes)
    assert st_clear["rmse"] == pytest.approx(0.0, abs=1e-9)
    assert res.stats("cloudy")["n"] == 0
    assert res.to_csv().count("\n") == 1 + len(cat.scenes)


def test_insitu_cloudy_pixel_uses_reconstruction():
    case = make_case(seed=32, shape=(32, 32), n_scenes=4, target_theta=0.2)
    cat = case.catalog
    target = cat.scene_on(case.target_date)
    pixel = tuple(int(v) for v in np.argwhere(target.occluded)[0])
    truth = case.truth
    res = insitu_validate(cat, _station_for(cat, truth, pixel), pixel, s_params=SpatialParams(f=9))
    cloudy = [p for p in res.pairs if p.sky == "cloudy"]
    assert case.target_date in [p.date for p in cloudy]
    assert all(abs(p.landsat - p.insitu) < 5.0 for p in cloudy)


def test_insitu_window_and_empty_records():
    case = make_case(seed=33, shape=(24, 24), n_scenes=3)
    cat = case.catalog
    truth = case.truth
    late = _station_for(cat, truth, (0, 0), offset_min=30)
    res = insitu_validate(cat, late, (0, 0))
    assert res.pairs == [] and len(res.skipped) == 3
    res = insitu_validate(cat, late, (0, 0), InsituParams(window_minutes=45))
    assert len(res.pairs) == 3
    empty = insitu_validate(cat, [], (0, 0))
    assert empty.stats("clear") == {"sky": "clear", "n": 0, "rmse": None, "bias": None}
    with pytest.raises(ValueError):
        insitu_validate(cat, [], (99, 0))


def test_insitu_footprint_averages_window():
    vals = np.full((5, 5), 300.0)
    vals[2, 2] = 309.0
    cat = SceneCatalog([Scene.from_arrays(D, GEO, vals, np.zeros((5, 5), dtype=bool))],
                       LandCoverGrid(GEO, np.ones((5, 5), dtype=int)))
    rec = [StationRecord(default_overpass(D, 0.0), upwelling_flux(300.0, 1.0, 300.0), 300.0, 1.0, lon=0.0)]
    assert insitu_validate(cat, rec, (2, 2)).pairs[0].landsat == 309.0
    assert insitu_validate(cat, rec, (2, 2), InsituParams(footprint=3)).pairs[0].landsat == 301.0


def test_ablation_suite_plumbing():
    case = make_case(seed=41, shape=(48, 48), n_scenes=4, target_theta=0.05)
    spec = OcclusionSpec(6, 2, seed=1)
    table = ablation_suite(case.catalog, spec, s_params=SpatialParams(f=15))
    n_ok = len(case.catalog) - len({d for d, _, _ in table.failures})
    assert n_ok >= 1
    for d in {r.date for r in table.reports}:
        assert sorted(r.mode for r in table.reports if r.date == d) == ["M1", "M2", "M3", "M4", "M5"]
    csv_text = table.to_csv()
    assert csv_text.splitlines()[0] == "region,date,s,n,squares,theta,mode,mae,rmse,bias,n_pixels"
    assert len(csv_text.splitlines()) == 1 + len(table.reports)
    again = ablation_suite(case.catalog, spec, s_params=SpatialParams(f=15))
    assert again.to_csv() == csv_text
    assert "RMSE M1" in table.format_table()


def test_ablation_records_failures_and_continues():
    case = make_case(seed=42, shape=(32, 32), n_scenes=3)
    table = ablation_suite(case.catalog, OcclusionSpec(40, 1), modes=[M.M2])
    assert table.reports == [] and len(table.failures) == 3
    assert table.format_table() == "(no scored scenes)"


def test_summary_pools_pixels():
    reps = [EvalReport(1.0, 1.0, 1.0, 10, "M1"), EvalReport(3.0, 3.0, -3.0, 30, "M1")]
    (s,) = AblationTable(reps).summary()
    assert s.mae == 2.5 and s.bias == -2.0 and s.n_pixels == 40
    assert s.rmse == pytest.approx(math.sqrt((10 + 270) / 40))
