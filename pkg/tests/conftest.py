import os
from pathlib import Path

import numpy as np
import pytest
from scipy import sparse

from geomsarah import LogisticNcvx, RngStream, SparseDataset, synth_logistic

ROOT = Path(__file__).resolve().parent.parent

# one-hot group sizes of a 22-attribute categorical table with 112 columns
ONEHOT_GROUPS = (6, 4, 10, 2, 9, 2, 2, 2, 12, 2, 4, 4, 4, 9, 9, 2, 4, 3, 5, 9, 6, 2)


def mushrooms_path():
    """Location of the LibSVM ``mushrooms`` file, or None.

    Looked up in ``$GEOMSARAH_MUSHROOMS`` and then ``data/mushrooms`` at the
    repository root.  The file is not shipped with the package.
    """
    env = os.environ.get("GEOMSARAH_MUSHROOMS")
    for cand in (env, ROOT / "data" / "mushrooms", ROOT / "data" / "mushrooms.libsvm"):
        if cand and Path(cand).is_file():
            return Path(cand)
    return None


def onehot_dataset(n=8124, seed=0, noise=0.5):
    """Binary one-hot rows (22 ones out of 112 columns) with linear-threshold labels."""
    rng = RngStream(seed, 99)
    cols, off = [], 0
    for g, size in enumerate(ONEHOT_GROUPS):
        cols.append(off + rng.child(g).below(size, size=n))
        off += size
    C = np.stack(cols, axis=1)
    X = sparse.csr_matrix(
        (np.ones(C.size), C.ravel(), np.arange(0, C.size + 1, C.shape[1])), shape=(n, off)
    )
    w = rng.child(100).normal(off)
    y = np.where(X @ w + noise * rng.child(101).normal(n) > 0, 1.0, -1.0)
    return SparseDataset(X, y)


@pytest.fixture(scope="session")
def small_obj():
    return LogisticNcvx(synth_logistic(100, 5, 11, 1.0), 0.1)


@pytest.fixture(scope="session")
def obj64():
    return LogisticNcvx(synth_logistic(64, 8, 5, 1.0), 0.1)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
