import json

import numpy as np
import pytest

from cqmeta.channel import (
    Channel,
    Code,
    bell_code,
    bell_code_n,
    bell_vectors,
    code_problem,
    depolarize,
    erase,
    erasure_mu0,
    pe_of_code,
    pure_state_channel,
)
from cqmeta.errors import DecoderUnavailableError, NotSymmetricError
from cqmeta.mary import Povm, error_probability, hykl_verify
from cqmeta.qp import (
    certify,
    e_projector,
    f_open,
    f_value,
    g_open,
    g_value,
    gap_formula_value,
    optimality_gap,
    packing_radius,
    qp_decoder,
    qp_error_probability,
    symmetry_check,
    theorem4_verify,
)
from oracles import bell_closed_form

I4 = np.eye(4) / 4


def three_orthogonal():
    return pure_state_channel({i: np.eye(4)[i] for i in range(3)}), Code((0, 1, 2))


def family(kind, n, M, param):
    """(channel, code, mu) for one Bell-code family member."""
    channel, code = bell_code_n(n, M)
    d = 2**n
    if kind == "depolarizing":
        return depolarize(channel, param), code, np.eye(d) / d
    if kind == "erasure":
        return erase(channel, param), code, erasure_mu0(d, param)
    return channel, code, np.eye(d) / d


def test_e_projector_pure_state():
    channel, _ = bell_code(4)
    np.testing.assert_allclose(e_projector(channel, 1, 4.0, I4, "closed"), channel[1], atol=1e-12)
    np.testing.assert_allclose(e_projector(channel, 1, 4.0, I4, "open"), 0, atol=1e-12)
    np.testing.assert_allclose(e_projector(channel, 1, -0.5, I4, "closed"), np.eye(4), atol=1e-12)
    np.testing.assert_allclose(e_projector(channel, 1, -0.5, I4, "open"), np.eye(4), atol=1e-12)


def test_e_projector_eps_mode():
    channel, _ = bell_code(4)
    # W - 5 mu has eigenvalues -1/4 (x1) and -5/4 (x3)
    assert np.trace(e_projector(channel, 1, 5.0, I4, "eps", 0.3)).real == pytest.approx(1)
    with pytest.raises(ValueError):
        e_projector(channel, 1, 5.0, I4, "eps", -0.1)
    with pytest.raises(ValueError):
        e_projector(channel, 1, 5.0, I4, "half-open")


@pytest.mark.parametrize("t, expected", [(0.0, 1.0), (2.0, 1.0), (4.0, 1.0), (4.01, 0.0), (7.0, 0.0)])
def test_f_pure_state(t, expected):
    channel, _ = bell_code(8)
    assert f_value(channel, 3, t, I4) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5])
def test_f_depolarizing(p):
    channel, _ = bell_code(8)
    ch = depolarize(channel, p)
    for t in np.linspace(p + 1e-3, 4 - 3 * p, 7):
        assert f_value(ch, 1, t, I4) == pytest.approx(1 - 3 * p / 4, abs=1e-12)


@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_f_erasure(eps):
    channel, _ = bell_code(8)
    ch = erase(channel, eps)
    mu = erasure_mu0(4, eps)
    for t in np.linspace(0, 4 - 3 * eps, 7):
        assert f_value(ch, 2, t, mu) == pytest.approx(1.0, abs=1e-12)


def test_open_and_closed_functionals():
    channel, _ = bell_code(4)
    assert f_open(channel, 1, 4.0, I4) == pytest.approx(0.0, abs=1e-12)
    assert g_value(channel, 1, 4.0, I4) == pytest.approx(0.25)
    assert g_open(channel, 1, 1.0, I4) == pytest.approx(0.25)


@pytest.mark.parametrize("kind, param", [("ideal", 0.0), ("depolarizing", 0.3)])
def test_symmetric_channels(kind, param):
    channel, _, mu = family(kind, 2, 8, param)
    report = symmetry_check(channel, mu)
    assert report.symmetric
    assert report.t_breakpoints


def test_asymmetric_channel():
    ch = Channel({0: np.diag([1.0, 0.0]), 1: np.eye(2) / 2})
    report = symmetry_check(ch, np.eye(2) / 2, extra_t_samples=[0.99, 1.01])
    assert not report.symmetric
    assert report.max_deviation > 0.1
    with pytest.raises(NotSymmetricError):
        qp_error_probability(ch, Code((0, 1)), 1.5, np.eye(2) / 2)


@pytest.mark.parametrize(
    "kind, param, expected",
    [("ideal", 0.0, 4.0), ("depolarizing", 0.1, 3.7), ("depolarizing", 0.5, 2.5),
     ("erasure", 0.2, 3.4), ("erasure", 0.9, 1.3)],
)
def test_packing_radius(kind, param, expected):
    channel, code, mu = family(kind, 2, 8, param)
    assert packing_radius(channel, code, mu) == pytest.approx(expected, rel=1e-9)


def test_packing_radius_bell_sizes():
    for M in (4, 6, 16):
        channel, code = bell_code(M)
        assert packing_radius(channel, code, I4) == pytest.approx(4.0)


def test_gap_examples():
    channel, code = bell_code(8)
    gap, part = optimality_gap(channel, code, I4, 4.0)
    assert gap == 0.0
    ch3, code3 = three_orthogonal()
    gap3, _ = optimality_gap(ch3, code3, I4, packing_radius(ch3, code3, I4))
    assert gap3 > 0


def test_erasure_gap_and_cover():
    channel, code, mu = family("erasure", 2, 8, 0.2)
    t_bar = packing_radius(channel, code, mu)
    assert t_bar == pytest.approx(3.4)
    gap, _ = optimality_gap(channel, code, mu, t_bar)
    assert gap == 0.0
    total = sum(e_projector(channel, x, t_bar, mu) for x in code.codewords)
    np.testing.assert_allclose(total, np.diag([2, 2, 2, 2, 8]), atol=1e-9)


@pytest.mark.parametrize(
    "build, status",
    [(lambda: bell_code(4) + (I4,), "perfect"),
     (lambda: bell_code(8) + (I4,), "quasi_perfect"),
     (lambda: three_orthogonal() + (I4,), "neither")],
)
def test_certify_examples(build, status):
    channel, code, mu = build()
    cert = certify(channel, code, mu)
    assert cert.status == status
    assert cert.symmetric
    json.dumps(cert.to_dict())


def test_certify_depolarizing_full_basis():
    channel, code, mu = family("depolarizing", 2, 4, 0.3)
    cert = certify(channel, code, mu)
    assert cert.status == "quasi_perfect"
    assert cert.t_bar == pytest.approx(0.3)


@pytest.mark.parametrize(
    "kind, n, M, param",
    [("ideal", 2, 8, 0.0), ("ideal", 2, 16, 0.0), ("depolarizing", 2, 8, 0.3),
     ("erasure", 3, 16, 0.5), ("erasure", 4, 32, 0.1), ("depolarizing", 3, 24, 0.9)],
)
def test_qp_error_probability(kind, n, M, param):
    channel, code, mu = family(kind, n, M, param)
    t_bar = packing_radius(channel, code, mu)
    assert qp_error_probability(channel, code, t_bar, mu) == pytest.approx(bell_closed_form(n, M, param), abs=1e-10)


@pytest.mark.parametrize("p", [0.1, 0.3])
def test_decoder_depolarizing(p):
    channel, code, mu = family("depolarizing", 2, 8, p)
    povm = qp_decoder(channel, code, packing_radius(channel, code, mu), mu)
    problem = code_problem(channel, code)
    # reference decoder Pi_i = (4/M)|phi_i><phi_i|
    vecs = bell_vectors(2, 8)
    ref = Povm(tuple(0.5 * np.outer(vecs[x], vecs[x].conj()) for x in code.codewords))
    assert error_probability(problem, povm) == pytest.approx(error_probability(problem, ref), abs=1e-10)
    assert hykl_verify(problem, povm).passed


def test_decoder_bell4_projective():
    channel, code = bell_code(4)
    povm = qp_decoder(channel, code, 4.0, I4)
    for e in povm.elements:
        np.testing.assert_allclose(e @ e, e, atol=1e-10)
    assert error_probability(code_problem(channel, code), povm) == pytest.approx(0.0, abs=1e-12)


def test_decoder_erasure():
    channel, code, mu = family("erasure", 2, 8, 0.2)
    povm = qp_decoder(channel, code, packing_radius(channel, code, mu), mu)
    problem = code_problem(channel, code)
    assert error_probability(problem, povm) == pytest.approx(bell_closed_form(2, 8, 0.2), abs=1e-10)
    assert hykl_verify(problem, povm).passed


def test_decoder_unavailable_for_three_phases():
    # K = 3 phases: no projective decoder of this form is optimal
    channel, code = bell_code(6)
    with pytest.raises(DecoderUnavailableError):
        qp_decoder(channel, code, 4.0, I4)
    assert pe_of_code(channel, code)[0] == pytest.approx(1 - 4 / 6, abs=1e-8)


def test_decoder_infinite_radius():
    ch = Channel({0: np.eye(2) / 2, 1: np.eye(2) / 2})
    with pytest.raises(DecoderUnavailableError):
        qp_decoder(ch, Code((0, 1)), float("inf"), np.eye(2) / 2)


@pytest.mark.parametrize(
    "kind, n, M, param", [("ideal", 2, 8, 0.0), ("depolarizing", 2, 8, 0.2), ("ideal", 3, 16, 0.0)]
)
def test_qp_code_attains_meta_converse(kind, n, M, param):
    channel, code, mu = family(kind, n, M, param)
    pe, bound, equal = theorem4_verify(channel, code, mu)
    assert equal
    assert pe == pytest.approx(bell_closed_form(n, M, param), abs=1e-8)
    assert bound == pytest.approx(pe, abs=1e-8)


def test_attainment_check_neither_code():
    ch, code = three_orthogonal()
    pe, bound, equal = theorem4_verify(ch, code, I4)
    assert pe == pytest.approx(0.0, abs=1e-10)
    assert bound == pytest.approx(0.0, abs=1e-10)
    # single-codeword bound alpha_{1/3}(W_x || I/4) is 0 too, so the tuple agrees
    assert equal


@pytest.mark.parametrize(
    "kind, n, M, param",
    [("ideal", 2, 8, 0.0), ("depolarizing", 2, 8, 0.3), ("erasure", 2, 8, 0.2), ("erasure", 3, 8, 0.5)],
)
def test_gap_formula_bell(kind, n, M, param):
    channel, code, mu = family(kind, n, M, param)
    value, bare = gap_formula_value(channel, code, mu)
    pe, _ = pe_of_code(channel, code)
    assert value == pytest.approx(pe, abs=1e-7)
    assert bare == pytest.approx(pe, abs=1e-7)


def test_gap_formula_neither_code():
    ch, code = three_orthogonal()
    value, bare = gap_formula_value(ch, code, I4)
    pe, _ = pe_of_code(ch, code)
    assert value == pytest.approx(pe, abs=1e-7)
    assert bare == pytest.approx(-1 / 3, abs=1e-12)
    assert pe > bare + 1e-9


def test_open_rank_shrinks():
    rng = np.random.default_rng(3)
    for kind, param in [("ideal", 0.0), ("depolarizing", 0.4), ("erasure", 0.3)]:
        channel, code, mu = family(kind, 2, 8, param)
        for x in code.codewords[:3]:
            ts = np.sort(np.concatenate([[0.0, 0.3, 1.3, 2.5, 3.4, 4.0, 5.0], rng.uniform(0, 5, 20)]))
            ranks = [round(np.trace(e_projector(channel, x, t, mu, "open")).real) for t in ts]
            assert all(b <= a for a, b in zip(ranks, ranks[1:]))
