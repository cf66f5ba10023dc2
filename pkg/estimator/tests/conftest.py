import os
import pathlib
import subprocess
import sys

import pytest

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "2")

# Desk-scale artifacts are produced once per test session.  Dataset
# generation shells out to the workbench CLI (the only coupling between the
# two packages is the file contract), so the workbench must be installed.
RECORDS_SMALL = 3000


def _gen_dataset(path, count, seed, k=None):
    cmd = [sys.executable, "-m", "levmap.cli", "gen-dataset",
           "--count", str(count), "--seed", str(seed), "--out", str(path)]
    if k is not None:
        cmd += ["--k", str(k)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        pytest.skip(f"workbench CLI unavailable: {proc.stderr[-200:]}")
    return path


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "train_small.csv"
    return _gen_dataset(path, RECORDS_SMALL, seed=42)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "train_tiny.csv"
    return _gen_dataset(path, 300, seed=43)
