import json
from pathlib import Path

import numpy as np
import pytest

from teamspectra.synth import SynthConfig, generate

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name):
    return json.loads((FIXTURES / name).read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_corpus():
    """60 synthetic matches: (matches, timelines, truth)."""
    return generate(SynthConfig(n_matches=60, seed=7))


def write_config(path, out_dir, n_matches=120, seed=3, extra=""):
    path.write_text(
        f"""[pipeline]
out_dir = {out_dir}
source = synth
seed = {seed}

[synth]
n_matches = {n_matches}

[efa]
max_iter = 500
{extra}
"""
    )
    return path
