"""Classical-quantum channels, codes and the meta-converse.

A channel maps each input label to an output density operator.  Labels
are ints or strings; every ordering over the alphabet uses the canonical
key ``(isinstance(x, str), x)`` so mixed alphabets sort deterministically.
Operators on the joint classical-quantum space are block-diagonal and
are handed around as block lists ordered by that key.
"""

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .binary import alpha_beta
from .errors import DimensionMismatchError, InvariantError
from .herm import density
from .mary import MaryProblem, Povm, error_probability, solve_optimal_povm

NORM_TOL = 1e-10
WEIGHT_TOL = 1e-12


def label_key(x):
    return (isinstance(x, str), x)


@dataclass(frozen=True)
class Channel:
    """Finite-input channel x -> W_x with a common output dimension."""

    outputs: Mapping

    def __post_init__(self):
        if not self.outputs:
            raise InvariantError("a channel needs at least one input")
        table = {x: density(w) for x, w in sorted(dict(self.outputs).items(), key=lambda kv: label_key(kv[0]))}
        if len({w.shape for w in table.values()}) != 1:
            raise DimensionMismatchError("all channel outputs must share one dimension")
        object.__setattr__(self, "outputs", MappingProxyType(table))

    @property
    def input_alphabet(self):
        return tuple(self.outputs)

    @property
    def output_dim(self):
        return next(iter(self.outputs.values())).shape[0]

    def __getitem__(self, x):
        return self.outputs[x]


@dataclass(frozen=True)
class Code:
    """Ordered codeword list x_1..x_M; repeated codewords are allowed."""

    codewords: tuple

    def __post_init__(self):
        cw = tuple(self.codewords)
        if not cw:
            raise InvariantError("a code needs at least one codeword")
        object.__setattr__(self, "codewords", cw)

    @property
    def M(self):
        return len(self.codewords)

    def check(self, channel: Channel):
        missing = [x for x in self.codewords if x not in channel.outputs]
        if missing:
            raise InvariantError(f"codewords not in the channel alphabet: {missing[:5]}")


@dataclass(frozen=True)
class InputDistribution:
    """Probability weights over input labels (zero weights are dropped)."""

    weights: Mapping

    def __post_init__(self):
        w = {x: float(v) for x, v in dict(self.weights).items()}
        if any(v < 0 for v in w.values()):
            raise InvariantError("input weights must be non-negative")
        if abs(sum(w.values()) - 1.0) > WEIGHT_TOL:
            raise InvariantError(f"input weights sum to {sum(w.values())!r}, not 1")
        w = {x: w[x] for x in sorted(w, key=label_key) if w[x] > 0}
        object.__setattr__(self, "weights", MappingProxyType(w))

    @property
    def support(self):
        return tuple(self.weights)

    @classmethod
    def from_code(cls, code: Code):
        """P_C: uniform over codewords, so a repeated codeword carries its multiplicity."""
        w = {}
        for x in code.codewords:
            w[x] = w.get(x, 0.0) + 1.0 / code.M
        return cls(w)

    @classmethod
    def uniform(cls, labels):
        labels = list(labels)
        return cls({x: 1.0 / len(labels) for x in labels})


def pure_state_channel(amplitude_table: Mapping) -> Channel:
    """W_x = |phi_x><phi_x| from unit vectors phi_x."""
    outs = {}
    for x, vec in amplitude_table.items():
        v = np.asarray(vec, dtype=complex).ravel()
        n = np.linalg.norm(v)
        if abs(n - 1.0) > NORM_TOL:
            raise InvariantError(f"amplitude vector for {x!r} has norm {n!r}")
        outs[x] = np.outer(v, v.conj())
    return Channel(outs)


def bell_vectors(n_qubits: int, M: int):
    """Output vectors of the N-qubit Bell code, keyed by codeword index 1..M.

    With K = M / 2^(N-1) phases phi_k = 2 pi k / K, codeword 1 + 2k + 2Kl
    is (|00> + e^{i phi_k}|11>)/sqrt(2) (x) |l> and codeword 2 + 2k + 2Kl is
    (|01> + e^{i phi_k}|10>)/sqrt(2) (x) |l>, with the two leading qubits
    most significant.
    """
    if n_qubits < 2:
        raise ValueError("Bell codes need at least 2 qubits")
    half = 2 ** (n_qubits - 1)
    if M < 2 * half or M % half:
        raise ValueError(f"M must be a multiple of {half} and at least {2 * half}, got {M}")
    K = M // half
    tail = 2 ** (n_qubits - 2)
    d = 2**n_qubits
    vecs = {}
    for l in range(tail):
        for k in range(K):
            phase = np.exp(2j * np.pi * k / K)
            a = np.zeros(d, complex)
            a[0 * tail + l] = 1 / np.sqrt(2)
            a[3 * tail + l] = phase / np.sqrt(2)
            b = np.zeros(d, complex)
            b[1 * tail + l] = 1 / np.sqrt(2)
            b[2 * tail + l] = phase / np.sqrt(2)
            vecs[1 + 2 * k + 2 * K * l] = a
            vecs[2 + 2 * k + 2 * K * l] = b
    return vecs


def bell_code_n(n_qubits: int, M: int):
    """Ideal N-qubit channel restricted to the Bell code of size M, and the code."""
    vecs = bell_vectors(n_qubits, M)
    return pure_state_channel(vecs), Code(tuple(range(1, M + 1)))


def bell_code(M: int):
    """Two-qubit Bell code (M even, M >= 4)."""
    if M < 4 or M % 2:
        raise ValueError(f"two-qubit Bell codes need even M >= 4, got {M}")
    return bell_code_n(2, M)


def depolarize(channel: Channel, p: float) -> Channel:
    """W_x -> p I/d + (1 - p) W_x."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing parameter must lie in [0, 1], got {p!r}")
    d = channel.output_dim
    return Channel({x: p * np.eye(d) / d + (1 - p) * w for x, w in channel.outputs.items()})


def erase(channel: Channel, epsilon: float) -> Channel:
    """W_x -> diag((1 - eps) W_x, eps) on the output space plus an erasure flag."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"erasure probability must lie in [0, 1], got {epsilon!r}")
    return Channel(
        {x: scipy.linalg.block_diag((1 - epsilon) * w, [[epsilon]]) for x, w in channel.outputs.items()}
    )


def erasure_mu0(dim: int, epsilon: float):
    """diag((1 - eps) I_dim, eps) / (dim (1 - eps) + eps)."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"erasure probability must lie in [0, 1], got {epsilon!r}")
    return density(np.diag([1 - epsilon] * dim + [epsilon]) / (dim * (1 - epsilon) + epsilon))


def _check_support(P, channel):
    missing = [x for x in P.support if x not in channel.outputs]
    if missing:
        raise InvariantError(f"distribution support outside the channel alphabet: {missing[:5]}")


def pw_blocks(P: InputDistribution, channel: Channel):
    """Diagonal blocks P(x) W_x of PW, over supp(P) in canonical order."""
    _check_support(P, channel)
    return [P.weights[x] * channel[x] for x in P.support]


def p_mu_blocks(P: InputDistribution, mu):
    """Diagonal blocks P(x) mu of P x mu, over supp(P) in canonical order."""
    mu = density(mu)
    return [P.weights[x] * mu for x in P.support]


def pw_operator(P: InputDistribution, channel: Channel):
    return density(scipy.linalg.block_diag(*pw_blocks(P, channel)))


def p_tensor_mu(P: InputDistribution, mu):
    return density(scipy.linalg.block_diag(*p_mu_blocks(P, mu)))


def code_problem(channel: Channel, code: Code) -> MaryProblem:
    code.check(channel)
    if code.M < 2:
        raise InvariantError("discrimination needs at least two codewords")
    return MaryProblem.uniform([channel[x] for x in code.codewords])


def pe_of_code(channel: Channel, code: Code, tol: float = 1e-8, strict: bool = True):
    """Minimum error probability of the code under uniform messages.

    Returns ``(pe, povm)``.  A single codeword is decoded without error.
    With ``strict`` (the default) a solver that fails the optimality
    certificate raises :class:`ConvergenceError`; otherwise the best
    iterate is returned.
    """
    code.check(channel)
    if code.M == 1:
        return 0.0, Povm((np.eye(channel.output_dim),))
    problem = code_problem(channel, code)
    povm, report, _ = solve_optimal_povm(problem, tol=tol, strict=strict)
    return error_probability(problem, povm), povm


def _check_mu(channel, mu):
    mu = density(mu)
    if mu.shape[0] != channel.output_dim:
        raise DimensionMismatchError(
            f"mu has dim {mu.shape[0]}, channel outputs have dim {channel.output_dim}"
        )
    return mu


def meta_converse(channel: Channel, P: InputDistribution, mu, M: int) -> float:
    """alpha_{1/M}(PW || P x mu): a lower bound on the error of any size-M code with P_C = P."""
    if M < 1:
        raise ValueError("M must be at least 1")
    mu = _check_mu(channel, mu)
    return alpha_beta(pw_blocks(P, channel), p_mu_blocks(P, mu), 1.0 / M)[0]


def meta_converse_min(channel: Channel, candidate_Ps: Sequence, candidate_mus: Sequence, M: int):
    """min over P of max over mu of :func:`meta_converse`, on finite candidate sets."""
    if not candidate_Ps or not candidate_mus:
        raise ValueError("candidate sets must be non-empty")
    return min(max(meta_converse(channel, P, mu, M) for mu in candidate_mus) for P in candidate_Ps)


def lemma4_decompose(channel: Channel, P: InputDistribution, mu, beta_total: float):
    """Split the joint Neyman-Pearson test on (PW, P x mu) into per-input tests.

    The optimal joint test is block-diagonal with blocks T_x; each block
    spends type-II budget beta'_x = tr(mu T_x).  The returned value is
    sum_x P(x) alpha_{beta'_x}(W_x || mu), with every term computed on its
    own, so it can be checked against the joint alpha_beta.

    Returns ``(value, betas)`` with ``betas`` mapping x to beta'_x.
    """
    mu = _check_mu(channel, mu)
    _, test = alpha_beta(pw_blocks(P, channel), p_mu_blocks(P, mu), beta_total)
    betas, value = {}, 0.0
    for x, block in zip(P.support, test.blocks):
        b = float(np.clip(np.trace(mu @ block).real, 0.0, 1.0))
        betas[x] = b
        value += P.weights[x] * alpha_beta(channel[x], mu, b)[0]
    return float(value), betas
