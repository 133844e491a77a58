from __future__ import annotations

import numpy as np
import pytest

from weldsense.pipeline import calibrate_specular_table
from weldsense.sim import SphericalCapPool, default_specular_scene, render_specular_dataset

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    """Remember one acceptance outcome and echo it to stdout."""
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def cap_scene():
    return default_specular_scene(SphericalCapPool(R=10.0, depth=1.0))


@pytest.fixture(scope="session")
def cap_dataset(cap_scene):
    return render_specular_dataset(cap_scene)


@pytest.fixture(scope="session")
def cap_calibration(cap_dataset):
    obs, _ = cap_dataset
    return calibrate_specular_table(obs)


def surface_rms(positions: np.ndarray, ids: np.ndarray, truth) -> float:
    """RMS distance between reconstructed points and the traced surface
    points of the same ray ids."""
    idx = np.searchsorted(truth.ids, ids)
    assert np.array_equal(truth.ids[idx], ids)
    return float(np.sqrt(np.mean(np.sum((positions - truth.surface_points[idx]) ** 2, axis=1))))
