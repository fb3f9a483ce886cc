import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from admissibility_lab.spectral_core import (
    BOUNDED,
    UNBOUNDED,
    BetaProfile,
    DiagonalSystem,
    Tails,
    INTEGERS,
    classify_control,
    is_in_I1,
    make_diagonal,
    make_example1,
    make_example2,
    perturbation_between,
    truncate,
)

E1 = math.exp(-1.0)


# -- example 1 ------------------------------------------------------------------

def test_example1_square_and_nonsquare_controls():
    sys = make_example1(20)
    assert sys.control(4) == pytest.approx(0.594604, abs=1e-6)
    assert sys.control(4) == pytest.approx(4 ** -0.375, rel=1e-15)
    assert sys.control(3) == 1 / 3
    assert sys.eigenvalue(9) == complex(-1 / 9, 9)


def test_example1_rejects_nonpositive_index():
    sys = make_example1(5)
    with pytest.raises(ValueError):
        sys.eigenvalue(0)
    with pytest.raises(ValueError):
        sys.control(-2)


def test_example1_custom_beta_profile():
    sys = make_example1(6, BetaProfile((0.5, 2.0, 7.0), slope=3.0))
    assert sys.eigenvalue(2).imag == 2.0
    assert sys.eigenvalue(5).imag == 7.0 + 2 * 3.0
    sys2 = make_example1(6, lambda k: np.asarray(k, dtype=float) ** 2)
    assert sys2.eigenvalue(3) == complex(-1 / 3, 9)


@pytest.mark.parametrize("table", [(1.0, 1.0), (3.0, 2.0)])
def test_beta_profile_rejects_non_increasing(table):
    with pytest.raises(ValueError):
        BetaProfile(table)


def test_beta_profile_rejects_bad_slope():
    with pytest.raises(ValueError):
        BetaProfile.linear(0.0)


def test_beta_first_index_reaching():
    beta = BetaProfile.linear(0.5)
    assert beta.first_index_reaching(10.0, 1) == 20
    assert beta.first_index_reaching(0.1, 7) == 7


def test_example1_eigenvalues_go_to_axis_and_infinity():
    for N in (10, 100, 1000):
        tr = truncate(make_example1(N), N)
        assert np.max(tr.lam.real) == pytest.approx(-1 / N, rel=1e-15)
        assert np.all(tr.lam.real < 0)
    # modulus grows without bound (beta_k = k)
    k = np.array([10, 100, 1000])
    assert np.all(np.diff(np.abs(make_example1(1000).eigenvalues[k - 1])) > 0)


# -- example 2 ------------------------------------------------------------------

def test_example2_spec_values():
    A, Ap = make_example2(10)
    assert A.eigenvalue(1) == complex(-1, 1)
    assert Ap.eigenvalue(1) == pytest.approx(complex(-E1, 1), rel=1e-15)
    assert A.control(1) == 1
    assert A.eigenvalue(0) == Ap.eigenvalue(0) == -1
    assert A.control(0) == 0
    assert A.eigenvalue(-4) == pytest.approx(-math.sqrt(5), rel=1e-15)
    assert Ap.eigenvalue(-4) == A.eigenvalue(-4)
    assert A.control(-4) == 0.5


def test_example2_abscissa_trend():
    prev_A, prev_Ap = -math.inf, -math.inf
    for N in (10, 100, 1000):
        A, Ap = make_example2(N)
        a = float(np.max(truncate(A, N).lam.real))
        ap = float(np.max(truncate(Ap, N).lam.real))
        assert a == pytest.approx(-N ** -0.5, rel=1e-14)
        assert ap == pytest.approx(-math.exp(-N), rel=1e-14) if N < 745 else ap <= 0
        assert prev_A < a < 0 and prev_Ap < ap
        prev_A, prev_Ap = a, ap


def test_example2_underflow_modes_are_reported():
    _, Ap = make_example2(800)
    assert Ap.underflowed_modes == 800 - 745
    _, Ap = make_example2(100)
    assert Ap.underflowed_modes == 0


# -- perfect squares ----------------------------------------------------------------

def test_is_in_I1_examples():
    assert is_in_I1(16)
    assert not is_in_I1(15)
    assert is_in_I1(10 ** 8)
    assert is_in_I1(1)
    with pytest.raises(ValueError):
        is_in_I1(0)


def test_is_in_I1_brute_force():
    squares = {l * l for l in range(1, 400)}
    assert all(is_in_I1(k) == (k in squares) for k in range(1, 10 ** 5 + 1))


@given(st.integers(min_value=1, max_value=10 ** 12))
def test_is_in_I1_large_squares(l):
    assert is_in_I1(l * l)
    assert not is_in_I1(l * l + 1) or l * l + 1 == 1


def test_control_mask_agrees_with_scalar_test():
    tr = truncate(make_example1(5000), 5000)
    k = tr.indices
    expect = np.array([k_ ** -0.375 if is_in_I1(int(k_)) else 1 / k_ for k_ in k])
    np.testing.assert_array_equal(tr.b.real, expect)


# -- classification -------------------------------------------------------------------

def test_classify_example1_bounded():
    assert classify_control(make_example1(100)).kind == BOUNDED


def test_classify_example2_unbounded():
    A, Ap = make_example2(50)
    assert classify_control(A).kind == UNBOUNDED
    assert classify_control(truncate(Ap, 50)).kind == UNBOUNDED


def _synthetic_quadratic(N):
    """b_k = 1, lambda_k = -1 + i k^2 with integral-test tails."""
    def eig(k):
        return -1.0 + 1j * np.asarray(k, dtype=float) ** 2

    def ctl(k):
        return np.ones(np.shape(k), dtype=complex)

    tails = Tails(
        b_sq=lambda lo, hi: math.inf,
        weighted=lambda lo, hi: 1.0 / (3.0 * hi ** 3),
        m_bound=lambda lo, hi, side: (math.inf, math.inf),
        criterion=lambda lo, hi, z: math.inf,
        sup_re=-1.0,
    )
    return DiagonalSystem(eig, ctl, (1, N), "synthetic", "N", tails, True)


def test_classify_synthetic_quadratic_unbounded():
    rep = classify_control(_synthetic_quadratic(200))
    assert rep.kind == UNBOUNDED
    # sum 1/(1 + |lambda_k|^2) = sum 1/(2 + k^4 - ... ) converges
    assert rep.x_minus1_norm_sq < 1.0


def test_example1_b_sq_tail_is_an_upper_bound():
    N = 100
    tr = truncate(make_example1(N), N)
    big = truncate(make_example1(10 ** 6), 10 ** 6)
    brute = float(np.sum(np.abs(big.b[N:]) ** 2))
    squares = np.arange(11, 1001, dtype=float) ** 2
    squares_only = float(np.sum(squares ** -0.75))
    assert squares_only <= brute <= tr.tail_b_sq
    # the bound is not absurdly loose
    assert tr.tail_b_sq < 4 * brute


def test_synthetic_finite_system_checks():
    with pytest.raises(ValueError):
        make_diagonal([-1, -1], [1, 1])
    with pytest.raises(ValueError):
        make_diagonal([-1, 0.5], [1, 1])
    with pytest.raises(ValueError):
        make_diagonal([-1, 0.0], [1, 1])
    with pytest.raises(ValueError):
        make_diagonal([-1, -2], [1])
    sys = make_diagonal([-1, -2], [1, 1], start=3)
    assert sys.window == (3, 4)
    assert classify_control(sys).kind == BOUNDED


# -- truncation and perturbation ------------------------------------------------

def test_truncate_windows():
    tr = truncate(make_example1(10), 10)
    assert tr.size == 10
    np.testing.assert_array_equal(tr.lam, [complex(-1 / k, k) for k in range(1, 11)])
    A, _ = make_example2(5)
    tr2 = truncate(A, 5)
    assert tr2.size == 11 and tr2.window == (-5, 5)
    with pytest.raises(ValueError):
        truncate(A, 6)


def test_truncate_matches_parent_values():
    sys = make_example1(300)
    tr = truncate(sys, 120)
    for k in (1, 17, 64, 120):
        assert tr.lam[tr.position(k)] == sys.eigenvalue(k)
        assert tr.b[tr.position(k)] == sys.control(k)


def test_perturbation_example2_values():
    A, Ap = make_example2(200)
    q = perturbation_between(A, Ap)
    assert q.entry(1) == pytest.approx(1 - E1, rel=1e-15)
    assert q.entry(1).real == pytest.approx(0.632121, abs=1e-6)
    assert q.entry(-3) == 0
    assert abs(q.entry(100)) == pytest.approx(0.1, rel=1e-12)
    assert q.declared_rank == "infinite"
    assert q.nonzero_count == 200
    assert np.all(q.entries[q.indices <= 0] == 0)


def test_perturbation_tail_decreasing_and_bounded():
    A, Ap = make_example2(500)
    tail = perturbation_between(A, Ap).tail_sup()
    assert np.all(np.diff(tail) <= 0)
    for K in range(1, 501):
        assert tail[K] <= K ** -0.5 + math.exp(-K)
    assert tail[-1] < 0.05


@pytest.mark.parametrize("N,M", [(50, 20), (100, 100), (30, 1)])
def test_truncate_commutes_with_perturbation(N, M):
    A, Ap = make_example2(N)
    whole = perturbation_between(A, Ap).restrict(M, INTEGERS)
    small = perturbation_between(truncate(A, M), truncate(Ap, M))
    np.testing.assert_array_equal(whole.entries, small.entries)
    assert whole.beyond_window_bound == small.beyond_window_bound


def test_perturbation_window_mismatch():
    A, _ = make_example2(10)
    _, Ap = make_example2(11)
    with pytest.raises(ValueError):
        perturbation_between(A, Ap)


def test_finite_perturbation_rank():
    a = make_diagonal([-1, -2, -3], [1, 1, 1])
    b = make_diagonal([-1, -2.5, -3], [1, 1, 1])
    q = perturbation_between(a, b)
    assert q.declared_rank == 1 and q.sup_abs == 0.5


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=400))
def test_example2_q_bound_property(k):
    A, Ap = make_example2(k)
    q = Ap.eigenvalue(k) - A.eigenvalue(k)
    assert abs(q) <= k ** -0.5 + math.exp(-k)
    assert Ap.eigenvalue(-k) == A.eigenvalue(-k)
