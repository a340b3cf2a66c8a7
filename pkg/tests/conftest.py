import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def run_cli(*args, timeout=600):
    """Run ``python -m cslattice`` in a subprocess; return the CompletedProcess."""
    return subprocess.run(
        [sys.executable, "-m", "cslattice", *map(str, args)],
        capture_output=True, text=True, timeout=timeout, cwd=ROOT,
    )


@pytest.fixture
def cli():
    return run_cli


@pytest.fixture
def write_config(tmp_path):
    def _write(text, name="run.toml"):
        path = tmp_path / name
        path.write_text(text)
        return path
    return _write
