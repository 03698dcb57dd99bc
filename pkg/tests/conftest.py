import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cnt.events import EventStream  # noqa: E402
from cnt.scene import SceneConfig  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_scene():
    return SceneConfig(grid_width=64, grid_height=48, speckle_grain=4.0, rng_seed=3,
                       max_displacement=1.0)


def random_stream(rng, n=500, width=32, height=24, duration_us=100_000):
    t = np.sort(rng.integers(0, duration_us, n))
    x = rng.integers(0, width, n)
    y = rng.integers(0, height, n)
    p = rng.choice([-1, 1], n)
    return EventStream(t, x, y, p, width, height, duration_us).sorted()


# --- acceptance reporting --------------------------------------------------------------

_SESSION = {}


def pytest_sessionstart(session):
    import time
    _SESSION["start"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    import time

    from acceptance_log import RESULTS
    if not RESULTS:
        return
    elapsed = time.perf_counter() - _SESSION.get("start", time.perf_counter())
    if 8 in RESULTS:
        ok, detail = RESULTS[8]
        RESULTS[8] = (ok and elapsed < 600,
                      f"{detail}; session wall time {elapsed:.0f} s (limit 600 s)")
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, detail = RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} | {detail}")
