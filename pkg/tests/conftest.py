import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from support import manufactured_spec  # noqa: E402

from fracisaacs.solver import SchemeConfig, solve  # noqa: E402


@pytest.fixture(scope="session")
def solved_manufactured():
    """Cache of solved manufactured problems keyed by grid size."""
    cache = {}

    def get(points, tolerance=1e-9):
        key = (points, tolerance)
        if key not in cache:
            spec = manufactured_spec(points)
            cache[key] = (spec, solve(spec, SchemeConfig(tolerance=tolerance)))
        return cache[key]

    return get
