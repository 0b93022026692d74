import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from csplab import library  # noqa: E402

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SMALL = ["a2semi", "a2join", "a2maj", "a2aff", "a2proj", "z3aff", "mixed4", "p4", "trivial"]


@pytest.fixture(params=SMALL)
def small_algebra(request):
    return library.builtin(request.param)


@pytest.fixture
def lib():
    return library
