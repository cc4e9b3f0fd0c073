import json

import numpy as np
import pytest

from linkcalc.cli.main import main


@pytest.fixture
def run_cli(tmp_path, capsys):
    """Run the CLI in-process; returns (exit code, report dict, stdout)."""
    counter = {"n": 0}

    def run(*argv):
        counter["n"] += 1
        report = tmp_path / f"report{counter['n']}.json"
        code = main(list(argv) + ["--report", str(report)])
        out = capsys.readouterr().out
        return code, json.loads(report.read_text()), out
    return run


def fd_jacobian(m, u, h=1e-6):
    """Central finite differences of a SmoothMap at ``u``."""
    u = np.asarray(u, dtype=float)
    J = np.empty((m.dim, m.k))
    for i in range(m.k):
        e = np.zeros(m.k)
        e[i] = h
        J[:, i] = (m.eval(u + e) - m.eval(u - e)) / (2 * h)
    return J
