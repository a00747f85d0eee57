import datetime as dt
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lstfill.qa import OcclusionMask
from lstfill.raster import GeoRef, LandCoverGrid, LstGrid
from lstfill.scene import Scene


@pytest.fixture
def georef():
    return GeoRef((500000.0, 3300000.0), (30.0, -30.0), "EPSG:32615")


def random_scene(rng, shape=(64, 64), n_classes=3, theta=0.05, georef=None, date=dt.date(2020, 7, 1)):
    """Scene with i.i.d. class labels, smooth-ish temperatures and scattered occlusion."""
    georef = georef or GeoRef((0.0, 0.0), (30.0, -30.0), "EPSG:32615")
    h, w = shape
    classes = rng.integers(0, n_classes, size=shape).astype(np.int32) * 10 + 11
    base = 290.0 + 5.0 * (classes - 11) / 10.0
    yy, xx = np.mgrid[0:h, 0:w]
    values = base + 0.05 * xx - 0.03 * yy + rng.normal(0, 0.7, shape)
    occluded = np.zeros(h * w, dtype=bool)
    occluded[rng.choice(h * w, int(round(theta * h * w)), replace=False)] = True
    occluded = occluded.reshape(shape)
    scene = Scene(date, LstGrid(georef, values), OcclusionMask(georef, occluded))
    return scene, LandCoverGrid(georef, classes)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Append ``(criterion, passed, detail)`` lines; echoed in the terminal summary."""
    log = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        log.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
