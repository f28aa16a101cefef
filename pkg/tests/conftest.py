import functools
import tempfile
from pathlib import Path

import pytest
from hypothesis import settings

from eqts.equalize import build_equalized
from eqts.langc import build_transition_system
from eqts.scenario import load_scenario
from eqts.scenarios import bundle_path, gen_blocksworld, write_bundle

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

_UNLABELED = Path(tempfile.mkdtemp(prefix="eqts-bw-"))


@functools.lru_cache(maxsize=None)
def load(path):
    """(scenario, transition system, equalized system) for a bundle path."""
    sc = load_scenario(path)
    ts = build_transition_system(sc.ad, sc.states_mode)
    es = build_equalized(ts, sc.classification(ts.fluents))
    return sc, ts, es


def shipped(name):
    return load(str(bundle_path(name)))


@functools.lru_cache(maxsize=None)
def unlabeled_blocksworld(n):
    """Blocksworld without the labeled move actions (proper under both conditions)."""
    cal, scn = gen_blocksworld(n, moves=False)
    return load(str(write_bundle(_UNLABELED, f"blocksworld{n}", cal, scn)))


@pytest.fixture
def grid():
    return {k: shipped(f"grid_{k}") for k in "abc"}
