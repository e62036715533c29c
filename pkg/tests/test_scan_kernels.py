from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwork_semistable import scan
from dwork_semistable._scan_py import evaluate_grid as py_eval
from dwork_semistable.finite_field import parse_field


def naive_eval(q, m, start, stop, polys):
    """Oracle: integer arithmetic mod a prime q, one point at a time."""
    out = []
    for idx, digits in enumerate(product(range(q), repeat=m)):
        if not start <= idx < stop:
            continue
        row = []
        for coeffs, exps in polys:
            row.append(sum(int(c) * np.prod([d ** int(e) for d, e in zip(digits, ex)]) for c, ex in zip(coeffs, exps)) % q)
        out.append(row)
    return np.array(out, dtype=np.int64)


def tables(q, maxexp):
    F = parse_field(q)
    powt = np.array([[F.pow(a, e) for e in range(maxexp + 1)] for a in range(q)], dtype=np.int64)
    return F.add_table, F.mul_table, powt


@st.composite
def packed_polys(draw, q, m):
    out = []
    for _ in range(draw(st.integers(1, 3))):
        t = draw(st.integers(0, 4))
        coeffs = np.array(draw(st.lists(st.integers(1, q - 1), min_size=t, max_size=t)), dtype=np.int64)
        exps = np.array(
            draw(st.lists(st.lists(st.integers(0, 3), min_size=m, max_size=m), min_size=t, max_size=t)), dtype=np.int64
        ).reshape(t, m)
        out.append((coeffs, exps))
    return out


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_python_kernel_matches_oracle(data):
    q = data.draw(st.sampled_from([3, 5, 7]))
    m = data.draw(st.integers(1, 3))
    polys = data.draw(packed_polys(q, m))
    total = q**m
    start = data.draw(st.integers(0, total - 1))
    stop = data.draw(st.integers(start + 1, total))
    add, mul, powt = tables(q, 3)
    np.testing.assert_array_equal(py_eval(add, mul, powt, m, start, stop, polys), naive_eval(q, m, start, stop, polys))


@pytest.mark.skipif("cython" not in scan.kernels(), reason="compiled kernel not built")
@settings(max_examples=60, deadline=None)
@given(st.data())
def test_compiled_kernel_matches_python(data):
    q = data.draw(st.sampled_from([4, 5, 7, 9, 11]))
    m = data.draw(st.integers(1, 4))
    polys = data.draw(packed_polys(q, m))
    total = q**m
    start = data.draw(st.integers(0, total - 1))
    stop = data.draw(st.integers(start + 1, total))
    add, mul, powt = tables(q, 3)
    fast = scan.kernels()["cython"](add, mul, powt, m, start, stop, polys)
    np.testing.assert_array_equal(fast, py_eval(add, mul, powt, m, start, stop, polys))


def test_default_kernel_is_registered():
    assert scan.evaluate_grid is scan.kernels()[scan.KERNEL]


def test_pure_fallback_selected_by_environment():
    import os
    import subprocess
    import sys

    env = {**os.environ, "DWORK_SEMISTABLE_PURE": "1"}
    out = subprocess.run(
        [sys.executable, "-c", "from dwork_semistable import scan; print(scan.KERNEL, sorted(scan.kernels()))"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split()[0] == "python"
