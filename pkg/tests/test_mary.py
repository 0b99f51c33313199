import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cqmeta.channel import bell_vectors, depolarize, pure_state_channel
from cqmeta.datasets import example1_average_state, example1_problem
from cqmeta.errors import ConvergenceError, DimensionMismatchError, InvariantError
from cqmeta.mary import (
    MaryProblem,
    Povm,
    error_probability,
    hykl_verify,
    lambda_operator,
    mu0_star,
    solve_optimal_povm,
    theorem1_value,
    tight_spectrum_argmax,
    tight_spectrum_max,
    tight_spectrum_objective,
)
from oracles import EX1_C0, EX1_EPS, EX1_TIGHT_AVG, classical_map_error, ex1_povm, random_state, random_unitary


def random_problem(rng, max_d=4, max_M=5):
    d = int(rng.integers(1, max_d + 1))
    M = int(rng.integers(2, max_M + 1))
    states = [random_state(rng, d, int(rng.integers(1, d + 1))) for _ in range(M)]
    return MaryProblem(tuple(states), rng.dirichlet(np.ones(M)))


def random_povm(rng, d, M):
    g = [random_state(rng, d) for _ in range(M)]
    s = sum(g)
    w, v = np.linalg.eigh(s)
    inv = (v / np.sqrt(w)) @ v.conj().T
    elems = [inv @ x @ inv for x in g]
    elems[-1] = elems[-1] + np.eye(d) - sum(elems)
    return Povm(tuple(elems))


def orthogonal_problem(M):
    return MaryProblem.uniform([np.diag(np.eye(M)[i]) for i in range(M)])


def test_problem_validation():
    with pytest.raises(InvariantError):
        MaryProblem((np.eye(2) / 2,), [1.0])
    with pytest.raises(InvariantError):
        MaryProblem((np.eye(2) / 2, np.eye(2) / 2), [0.7, 0.7])
    with pytest.raises(DimensionMismatchError):
        MaryProblem((np.eye(2) / 2, np.eye(3) / 3), [0.5, 0.5])


def test_povm_validation():
    with pytest.raises(InvariantError):
        Povm((np.eye(2) / 2, np.eye(2) / 3))
    with pytest.raises(InvariantError):
        Povm((np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])))


def test_error_probability_examples():
    assert error_probability(example1_problem(), Povm(tuple(ex1_povm()))) == pytest.approx(float(EX1_EPS), abs=1e-14)
    prob = orthogonal_problem(3)
    assert error_probability(prob, Povm(tuple(prob.states))) == pytest.approx(0.0)
    pair = MaryProblem.uniform([np.diag([1.0, 0]), np.diag([0, 1.0])])
    assert error_probability(pair, Povm((np.eye(2) / 2, np.eye(2) / 2))) == pytest.approx(0.5)


def test_lambda_four_state():
    lam = lambda_operator(example1_problem(), Povm(tuple(ex1_povm())))
    np.testing.assert_allclose(lam, np.diag([2 / 5, 2 / 15]), atol=1e-15)


def test_lambda_orthogonal_projective():
    prob = orthogonal_problem(4)
    np.testing.assert_allclose(lambda_operator(prob, Povm(tuple(prob.states))), np.eye(4) / 4, atol=1e-15)


def test_lambda_bell_depolarizing_decoder():
    M, p = 8, 0.1
    vecs = bell_vectors(2, M)
    channel = depolarize(pure_state_channel(vecs), p)
    prob = MaryProblem.uniform([channel[x] for x in sorted(vecs)])
    povm = Povm(tuple(4 / M * np.outer(vecs[x], vecs[x].conj()) for x in sorted(vecs)))
    np.testing.assert_allclose(lambda_operator(prob, povm), (4 - 3 * p) / (4 * M) * np.eye(4), atol=1e-15)
    assert hykl_verify(prob, povm).passed


def test_hykl_examples():
    assert hykl_verify(example1_problem(), Povm(tuple(ex1_povm())), tol=1e-9).passed
    pair = MaryProblem.uniform([np.diag([1.0, 0]), np.diag([0, 1.0])])
    report = hykl_verify(pair, Povm((np.eye(2) / 2, np.eye(2) / 2)))
    assert not report.passed
    assert max(report.stationarity_residuals) > 0.1


def test_hykl_rejects_bad_tol():
    with pytest.raises(ValueError):
        hykl_verify(example1_problem(), Povm(tuple(ex1_povm())), tol=0)


def test_solver_four_state(backend):
    povm, report, iters = solve_optimal_povm(example1_problem())
    assert report.passed
    assert error_probability(example1_problem(), povm) == pytest.approx(float(EX1_EPS), abs=1e-8)
    assert np.linalg.norm(povm.elements[3]) < 1e-6


def test_solver_orthogonal_pair():
    prob = MaryProblem.uniform([np.diag([1.0, 0]), np.diag([0, 1.0])])
    povm, report, _ = solve_optimal_povm(prob)
    assert report.passed
    assert error_probability(prob, povm) == pytest.approx(0.0, abs=1e-12)


def test_solver_strict_raises():
    prob = example1_problem()
    with pytest.raises(ConvergenceError) as info:
        solve_optimal_povm(prob, max_iter=1, strict=True)
    povm, report, iters = info.value.result
    assert iters == 1 and not report.passed


def test_solver_argument_checks():
    with pytest.raises(ValueError):
        solve_optimal_povm(example1_problem(), tol=-1)
    with pytest.raises(ValueError):
        solve_optimal_povm(example1_problem(), max_iter=0)


def test_mu0_star_four_state():
    povm = Povm(tuple(ex1_povm()))
    mu, c0 = mu0_star(example1_problem(), povm)
    np.testing.assert_allclose(mu, np.diag([0.75, 0.25]), atol=1e-14)
    assert c0 == pytest.approx(float(EX1_C0))


def test_mu0_star_orthogonal():
    prob = orthogonal_problem(3)
    mu, c0 = mu0_star(prob, Povm(tuple(prob.states)))
    np.testing.assert_allclose(mu, np.eye(3) / 3, atol=1e-15)
    assert c0 == pytest.approx(1.0)


def test_mu0_star_bell_depolarizing():
    M, p = 8, 0.1
    vecs = bell_vectors(2, M)
    channel = depolarize(pure_state_channel(vecs), p)
    prob = MaryProblem.uniform([channel[x] for x in sorted(vecs)])
    povm, report, _ = solve_optimal_povm(prob)
    mu, c0 = mu0_star(prob, povm)
    np.testing.assert_allclose(mu, np.eye(4) / 4, atol=1e-7)
    assert c0 == pytest.approx((4 - 3 * p) / M, abs=1e-8)


def test_mu0_star_requires_optimality():
    pair = MaryProblem.uniform([np.diag([1.0, 0]), np.diag([0, 1.0])])
    with pytest.raises(InvariantError):
        mu0_star(pair, Povm((np.eye(2) / 2, np.eye(2) / 2)))


@pytest.mark.parametrize(
    "mu0, expected, tol",
    [(np.diag([0.75, 0.25]), 7 / 15, 1e-12), (example1_average_state(), 16 / 35, 1e-12)],
)
def test_bayes_bound_four_state(mu0, expected, tol):
    assert theorem1_value(example1_problem(), mu0) == pytest.approx(expected, abs=tol)


def test_bayes_bound_orthogonal():
    assert theorem1_value(orthogonal_problem(4), np.eye(4) / 4) == pytest.approx(0.0, abs=1e-14)


def test_bayes_bound_dimension_check():
    with pytest.raises(DimensionMismatchError):
        theorem1_value(example1_problem(), np.eye(3) / 3)


def test_tight_spectrum_four_state():
    prob = example1_problem()
    value, t = tight_spectrum_argmax(prob, np.diag([0.75, 0.25]))
    assert value == pytest.approx(7 / 15, abs=1e-12)
    assert t == pytest.approx(8 / 15, abs=1e-9)
    assert tight_spectrum_max(prob, example1_average_state()) == pytest.approx(float(EX1_TIGHT_AVG), abs=1e-12)
    assert tight_spectrum_objective(prob, example1_average_state(), 0.0) == pytest.approx(0.0, abs=1e-15)


def test_tight_spectrum_negative_t():
    with pytest.raises(ValueError):
        tight_spectrum_objective(example1_problem(), np.eye(2) / 2, -0.1)


def test_classical_oracle(backend):
    rng = np.random.default_rng(31)
    for _ in range(60):
        d = int(rng.integers(1, 5))
        M = int(rng.integers(2, 5))
        dists = rng.dirichlet(np.ones(d), size=M)
        priors = rng.dirichlet(np.ones(M))
        u = random_unitary(rng, d)
        prob = MaryProblem(tuple(u @ np.diag(q) @ u.conj().T for q in dists), priors)
        povm, report, _ = solve_optimal_povm(prob)
        assert report.passed
        assert error_probability(prob, povm) == pytest.approx(classical_map_error(priors, dists), abs=1e-10)


def test_weak_duality_and_ordering():
    rng = np.random.default_rng(41)
    for _ in range(100):
        prob = random_problem(rng)
        mu0 = random_state(rng, prob.dim)
        lower = theorem1_value(prob, mu0)
        assert lower <= error_probability(prob, random_povm(rng, prob.dim, prob.M)) + 1e-8
        assert tight_spectrum_max(prob, mu0) <= lower + 1e-8


def test_strong_duality():
    rng = np.random.default_rng(43)
    for _ in range(50):
        prob = random_problem(rng, max_d=2, max_M=3)
        povm, report, _ = solve_optimal_povm(prob)
        assert report.passed
        eps = error_probability(prob, povm)
        mu, c0 = mu0_star(prob, povm)
        assert theorem1_value(prob, mu) == pytest.approx(eps, abs=1e-7)
        assert c0 == pytest.approx(1 - eps, abs=1e-7)
        assert tight_spectrum_max(prob, mu) == pytest.approx(eps, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.01, 0.5))
def test_hykl_only_if(seed, mix):
    # solver output passes; mixing in a random POVM that costs > 1e-4 fails
    rng = np.random.default_rng(seed)
    prob = random_problem(rng, max_d=3, max_M=4)
    povm, report, _ = solve_optimal_povm(prob)
    assert report.passed
    eps = error_probability(prob, povm)
    other = random_povm(rng, prob.dim, prob.M)
    mixed = Povm(tuple((1 - mix) * a + mix * b for a, b in zip(povm.elements, other.elements)))
    if error_probability(prob, mixed) - eps > 1e-4:
        assert not hykl_verify(prob, mixed).passed


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_sdp_oracle_min_error():
    pytest.importorskip("cvxpy")
    from oracles import sdp_min_error

    rng = np.random.default_rng(909)
    for _ in range(20):
        prob = random_problem(rng)
        povm, report, _ = solve_optimal_povm(prob)
        assert report.passed
        assert error_probability(prob, povm) == pytest.approx(sdp_min_error(prob.priors, prob.states), abs=1e-6)
