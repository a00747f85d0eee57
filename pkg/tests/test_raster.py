import numpy as np
import pytest
import rasterio
from hypothesis import given, settings, strategies as st
from rasterio.transform import Affine

from lstfill.errors import GeoreferenceError, MisalignmentError
from lstfill.qa import OcclusionMask
from lstfill.raster import (
    C2_ST_OFFSET,
    C2_ST_SCALE,
    BitfieldGrid,
    GeoRef,
    GridShape,
    LandCoverGrid,
    LstGrid,
    check_aligned,
    read_grid,
    write_grid,
)


def _raw_tif(path, arr, nodata=None, crs="EPSG:32615", transform=Affine(30, 0, 1000, 0, -30, 2000)):
    with rasterio.open(path, "w", driver="GTiff", height=arr.shape[0], width=arr.shape[1], count=1,
                       dtype=arr.dtype, crs=crs, transform=transform, nodata=nodata) as dst:
        dst.write(arr, 1)


def test_gridshape_rejects_empty():
    with pytest.raises(ValueError):
        GridShape(0, 5)


def test_georef_rejects_zero_pixel():
    with pytest.raises(ValueError):
        GeoRef((0, 0), (30.0, 0.0), "EPSG:4326")


def test_constant_file_reads_as_valid_lst(tmp_path):
    _raw_tif(tmp_path / "a.tif", np.full((10, 10), 300.0, dtype=np.float32))
    g = read_grid(tmp_path / "a.tif")
    assert isinstance(g, LstGrid)
    assert g.valid.sum() == 100
    assert np.all(g.values == 300.0)
    assert g.georef == GeoRef((1000, 2000), (30, -30), "EPSG:32615")


def test_nodata_zero_marks_pixel_invalid(tmp_path):
    arr = np.full((4, 4), 290.0, dtype=np.float32)
    arr[1, 2] = 0
    _raw_tif(tmp_path / "a.tif", arr, nodata=0)
    g = read_grid(tmp_path / "a.tif")
    assert not g.valid[1, 2]
    assert g.valid.sum() == 15
    assert np.isnan(g.values[1, 2])


def test_integer_band_uses_collection2_scaling(tmp_path):
    dn = np.array([[0, 44000], [45000, 46000]], dtype=np.uint16)
    _raw_tif(tmp_path / "st.tif", dn, nodata=0)
    g = read_grid(tmp_path / "st.tif")
    assert not g.valid[0, 0]
    assert g.values[0, 1] == pytest.approx(44000 * C2_ST_SCALE + C2_ST_OFFSET)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_grid(tmp_path / "nope.tif")


@pytest.mark.filterwarnings("ignore::rasterio.errors.NotGeoreferencedWarning")
def test_missing_georeferencing_is_an_error(tmp_path):
    _raw_tif(tmp_path / "a.tif", np.full((3, 3), 300.0, dtype=np.float32), crs=None, transform=Affine.identity())
    with pytest.raises(GeoreferenceError):
        read_grid(tmp_path / "a.tif")


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), hole_frac=st.floats(0, 0.5))
def test_lst_roundtrip_bit_identical(tmp_path_factory, seed, hole_frac):
    rng = np.random.default_rng(seed)
    vals = rng.uniform(200, 350, (32, 32)).astype(np.float32).astype(np.float64)
    valid = rng.random((32, 32)) >= hole_frac
    g = LstGrid(GeoRef((123.0, 456.0), (30.0, -30.0), "EPSG:32614"), vals, valid)
    path = tmp_path_factory.mktemp("rt") / "g.tif"
    write_grid(g, path)
    back = read_grid(path)
    assert back.georef == g.georef
    assert back.shape == g.shape
    assert np.array_equal(back.valid, g.valid)
    assert np.array_equal(back.values, g.values, equal_nan=True)
    with rasterio.open(path) as src:
        assert src.dtypes[0] == "float32"
        assert src.nodata == 0.0


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_landcover_and_bitfield_roundtrip(tmp_path_factory, seed):
    rng = np.random.default_rng(seed)
    geo = GeoRef((0.0, 0.0), (30.0, -30.0), "EPSG:32615")
    lc = LandCoverGrid(geo, rng.choice([11, 21, 24, 41, 95], (32, 32)))
    qa = BitfieldGrid(geo, rng.integers(0, 2**16, (32, 32), dtype=np.uint16))
    d = tmp_path_factory.mktemp("rt")
    write_grid(lc, d / "lc.tif")
    write_grid(qa, d / "qa.tif")
    assert np.array_equal(read_grid(d / "lc.tif", kind="landcover").classes, lc.classes)
    back = read_grid(d / "qa.tif", kind="bitfield")
    assert back.bits.dtype == np.uint16 and np.array_equal(back.bits, qa.bits)


def test_mask_written_as_uint8_zero_one(tmp_path, georef):
    m = OcclusionMask(georef, np.eye(5, dtype=bool))
    write_grid(m, tmp_path / "m.tif")
    with rasterio.open(tmp_path / "m.tif") as src:
        arr = src.read(1)
        assert src.dtypes[0] == "uint8"
    assert set(np.unique(arr)) == {0, 1}
    assert np.array_equal(arr.astype(bool), m.occluded)


def test_check_aligned(georef):
    a = LstGrid(georef, np.full((100, 100), 300.0))
    check_aligned([a, LandCoverGrid(georef, np.ones((100, 100), dtype=int))])
    with pytest.raises(MisalignmentError, match="grid\\[1\\]"):
        check_aligned([a, LstGrid(georef, np.full((100, 101), 300.0))])
    other = GeoRef(georef.origin, (60.0, -60.0), georef.crs_id)
    with pytest.raises(MisalignmentError, match="landcover"):
        check_aligned([a, LandCoverGrid(other, np.ones((100, 100), dtype=int))], ["lst", "landcover"])


def test_lst_grid_rejects_implausible_values(georef):
    with pytest.raises(ValueError):
        LstGrid(georef, np.full((2, 2), 500.0))
    g = LstGrid(georef, np.full((2, 2), 500.0), np.zeros((2, 2), dtype=bool))
    assert np.isnan(g.values).all()


def test_grids_are_immutable_copies(georef):
    vals = np.full((3, 3), 300.0)
    g = LstGrid(georef, vals)
    vals[0, 0] = 310.0
    assert g.values[0, 0] == 300.0
    with pytest.raises(ValueError):
        g.values[0, 0] = 1.0
