import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linprog

from varreg import _kernels_py
from varreg.kernels import BACKEND
from varreg.polyhedral import check_solution, nonzero_solution

try:
    from varreg import _kernels as _kernels_c
except ImportError:  # pragma: no cover - compiled extension missing
    _kernels_c = None

BACKENDS = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])

small = st.integers(-3, 3).map(float)


def lp_feasible(A, b):
    res = linprog(np.zeros(A.shape[1]), A_ub=A, b_ub=b, bounds=[(None, None)] * A.shape[1], method="highs")
    return res.status == 0


@st.composite
def systems(draw):
    n = draw(st.integers(1, 4))
    m = draw(st.integers(1, 7))
    A = draw(arrays(float, (m, n), elements=small))
    b = draw(arrays(float, m, elements=small))
    return A, b


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@settings(max_examples=150, deadline=None)
@given(systems())
def test_fm_solve_matches_linprog(mod, system):
    A, b = system
    ok, x = mod.fm_solve(A, b, 1e-9)
    assert ok == lp_feasible(A, b)
    if ok:
        assert np.all(A @ x <= b + 1e-7)


@pytest.mark.skipif(_kernels_c is None, reason="compiled kernels not built")
@settings(max_examples=50, deadline=None)
@given(arrays(float, (20, 2), elements=st.floats(-5, 5)), arrays(float, (7, 2), elements=st.floats(-5, 5)))
def test_polyline_backends_agree(points, verts):
    d1, s1, t1 = _kernels_py.polyline_distance(points, verts)
    d2, s2, t2 = _kernels_c.polyline_distance(points, verts)
    assert np.allclose(d1, d2, atol=1e-12)


def test_polyline_distance_simple():
    d, seg, t = _kernels_py.polyline_distance([[0.5, 1.0], [3.0, 0.0]], [[0, 0], [1, 0], [1, 1]])
    assert np.allclose(d, [0.5, 2.0])
    assert list(seg) == [0, 1] or d[0] == 0.5


def test_backend_is_reported():
    assert BACKEND in ("cython", "python")


def lp_nonzero(E, G, n, probe):
    for i in probe:
        for s in (1.0, -1.0):
            A_eq = np.vstack([E.reshape(-1, n), np.eye(n)[i]])
            b_eq = np.concatenate([np.zeros(E.shape[0]), [s]])
            res = linprog(np.zeros(n), A_ub=G if G.size else None, b_ub=np.zeros(G.shape[0]) if G.size else None,
                          A_eq=A_eq, b_eq=b_eq, bounds=[(None, None)] * n, method="highs")
            if res.status == 0:
                return True
    return False


@st.composite
def cone_systems(draw):
    n = draw(st.integers(1, 4))
    E = draw(arrays(float, (draw(st.integers(0, 2)), n), elements=small))
    G = draw(arrays(float, (draw(st.integers(1, 5)), n), elements=small))
    return n, E, G


@settings(max_examples=150, deadline=None)
@given(cone_systems())
def test_nonzero_solution_matches_lp(system):
    n, E, G = system
    x = nonzero_solution(E, G, n)
    assert (x is not None) == lp_nonzero(E, G, n, range(n))
    if x is not None:
        assert check_solution(x, E, G)


def test_orthant_only_origin():
    # x >= 0 and x <= 0 componentwise leaves only the origin
    G = np.vstack([np.eye(3), -np.eye(3)])
    assert nonzero_solution(np.zeros((0, 3)), G, 3) is None


def test_probe_restricts_coordinates():
    # x0 = 0 forced, x1 free
    E = np.array([[1.0, 0.0]])
    assert nonzero_solution(E, np.zeros((0, 2)), 2, probe=[0]) is None
    assert nonzero_solution(E, np.zeros((0, 2)), 2, probe=[1]) is not None
