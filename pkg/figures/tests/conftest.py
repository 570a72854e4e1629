"""Produce real pipeline outputs once per session via `kavg verify`."""

import subprocess
import sys

import pytest

# figure job -> its main series CSV inside the verify output tree
_SERIES = {
    "fig2": "fig2/fig2_samples.csv",
    "fig4": "fig4/fig4_densities.csv",
    "fig5": "fig5/fig5_entropy.csv",
    "poc": "poc/poc_rate.csv",
    "w2": "w2/w2_contraction.csv",
    "continuous": "cont/continuous_decay.csv",
}


@pytest.fixture(scope="session")
def experiment_outputs(tmp_path_factory):
    """Map figure job -> path of its main series CSV from a verify run."""
    root = tmp_path_factory.mktemp("verify")
    subprocess.run(
        [sys.executable, "-m", "kavg.cli", "verify", "--out", str(root)],
        check=True,
        capture_output=True,
    )
    out = {job: root / rel for job, rel in _SERIES.items()}
    missing = [str(p) for p in out.values() if not p.exists()]
    assert not missing, f"verify run did not produce: {missing}"
    return out
