import os
import sys
from pathlib import Path

os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numpy as np
import pytest

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
MANIFEST = DATA_DIR / "middlebury.manifest"


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)


def middlebury_entries():
    """The benchmark entries, or None when the image files are absent."""
    try:
        from csstereo import load_manifest

        return load_manifest(MANIFEST)
    except Exception:
        return None


def random_color(rng, h, w):
    from csstereo import ColorImage

    return ColorImage(rng.random((h, w, 3)))


def shifted_pair(rng, h, w, shift):
    """A rectified pair with constant true disparity `shift`: the right
    image is the left one's content slid left by `shift` columns, so
    left(x) == right(x - shift)."""
    from csstereo import ColorImage

    base = rng.random((h, w + shift, 3))
    return ColorImage(base[:, :w]), ColorImage(base[:, shift : w + shift])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod else None
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
