import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from peanut import lame  # noqa: E402


@pytest.fixture(scope="session", autouse=True)
def eigen_cache(tmp_path_factory):
    path = os.environ.get("PEANUT_CACHE") or tmp_path_factory.mktemp("cache") / "eigen.json"
    cache = lame.EigenCache(path)
    lame.set_cache(cache)
    yield cache
    cache.save()
    lame.set_cache(None)
