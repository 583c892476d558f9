import os
import subprocess
import sys

import numpy as np
import pytest

from cubic_rigidity import kernels

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("case", ["one_line", "two_lines", "three_lines"])
def test_line_backends_agree(case):
    for T in (1, 2, 3):
        assert kernels.line_sweep(case, T, 7, "numba") == kernels.line_sweep(case, T, 7, "numpy")


def crafted():
    # a single tuple where a tiny D makes some cells negative
    return dict(N=4, tup_s1p=[0, 4], tup_s1m=[0, 0], tup_qp=[0, 400], tup_qm=[0, 0], sig0=[0, 1],
                sig1=[1, 2], epsp=[1, 2], epsm=[0, 1], evals=[1, 2, 3])


def brute(d):
    rows, mins = [], None
    for t in range(len(d["tup_s1p"])):
        for s0 in d["sig0"]:
            for s1 in d["sig1"]:
                for ep in d["epsp"]:
                    for em in d["epsm"]:
                        for E in d["evals"]:
                            N = d["N"]
                            X = (2 * s0 + s1) * N + ep * d["tup_s1p"][t] + em * d["tup_s1m"][t] + E
                            U = 3 * N * N * s0 + 4 * N * E + ep * d["tup_qp"][t] + em * d["tup_qm"][t]
                            phi = X * X - (s0 + s1) * U
                            mins = phi if mins is None else min(mins, phi)
                            if phi < 0:
                                rows.append((t, s0, s1, ep, em, E, phi))
    return rows, mins


@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_exclusion_grid_against_loops(backend):
    if backend == "numba" and not kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    d = crafted()
    rows, mins = brute(d)
    count, feasible, min_phi, dump = kernels.exclusion_grid(**d, max_dump=500, backend=backend)
    assert feasible == len(rows) and min_phi == mins
    assert sorted(map(tuple, dump.tolist())) == sorted(rows)


def test_dump_is_capped():
    d = crafted()
    rows, _ = brute(d)
    assert len(rows) > 2
    _, feasible, _, dump = kernels.exclusion_grid(**d, max_dump=2, backend="numpy")
    assert feasible == len(rows) and dump.shape == (2, kernels.DUMP_COLS)


def test_env_flag_selects_numpy():
    code = "from cubic_rigidity import kernels; print(kernels.default_backend())"
    env = dict(os.environ, CUBIC_RIGIDITY_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["CUBIC_RIGIDITY_NO_NUMBA"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("numba" if kernels.HAVE_NUMBA else "numpy")


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.resolve_backend("cuda")
