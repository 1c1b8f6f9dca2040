import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from axialmap import OpenSpace, parse_scene_arg, synth_scene  # noqa: E402


def square(size=10.0, holes=()):
    outer = np.array([[0, 0], [size, 0], [size, size], [0, size]], dtype=float)
    return OpenSpace(outer, tuple(np.asarray(h, dtype=float) for h in holes), "square")


def box(x0, y0, x1, y1):
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


@pytest.fixture(scope="session")
def scene():
    cache = {}

    def get(arg):
        if arg not in cache:
            cache[arg] = synth_scene(parse_scene_arg(arg))
        return cache[arg]

    return get


ACCEPTANCE: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Store and print one acceptance line."""
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
