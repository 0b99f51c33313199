"""JSON descriptors for channels, codes, states and M-ary problems.

Channel::

    {"kind": "pure" | "depolarizing" | "erasure", "n_qubits": 2,
     "p": 0.1, "epsilon": 0.2,
     "amplitudes": {"a": [[re, im], ...], ...}}

Code::

    {"kind": "bell" | "explicit", "M": 8, "codewords": ["a", "b", ...]}

A Bell code supplies the pure outputs itself, so ``amplitudes`` is only
needed for explicit codes.  Complex numbers are ``[re, im]`` pairs; plain
numbers are read as real.  Labels that look like integers become ints.
"""

import json
from pathlib import Path

import numpy as np

from .channel import Code, bell_code_n, depolarize, erase, pure_state_channel
from .mary import MaryProblem

KINDS = ("pure", "depolarizing", "erasure")
CODE_KINDS = ("bell", "explicit")


class DescriptorError(ValueError):
    """A descriptor file is unreadable, malformed or inconsistent."""


def load_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DescriptorError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DescriptorError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _label(x):
    if isinstance(x, str):
        try:
            return int(x)
        except ValueError:
            return x
    if isinstance(x, int) and not isinstance(x, bool):
        return x
    raise DescriptorError(f"labels must be strings or integers, got {x!r}")


def _number(z):
    if isinstance(z, (list, tuple)):
        if len(z) != 2:
            raise DescriptorError(f"complex numbers are [re, im] pairs, got {z!r}")
        return complex(float(z[0]), float(z[1]))
    if isinstance(z, (int, float)) and not isinstance(z, bool):
        return complex(z)
    raise DescriptorError(f"expected a number or [re, im] pair, got {z!r}")


def parse_vector(v):
    if not isinstance(v, list) or not v:
        raise DescriptorError("amplitude vectors must be non-empty lists")
    return np.array([_number(z) for z in v])


def parse_matrix(m):
    if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
        raise DescriptorError("matrices are lists of rows")
    if len({len(r) for r in m}) != 1:
        raise DescriptorError("matrix rows have different lengths")
    return np.array([[_number(z) for z in row] for row in m])


def complex_pairs(a):
    """Nested [re, im] lists for a complex array."""
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [complex_pairs(x) for x in a]


def _require(desc, key, kind):
    if key not in desc:
        raise DescriptorError(f"{kind} descriptor needs {key!r}")
    return desc[key]


def build(channel_desc, code_desc):
    """Channel and code described by a pair of descriptor dicts."""
    if not isinstance(channel_desc, dict) or not isinstance(code_desc, dict):
        raise DescriptorError("descriptors must be JSON objects")
    kind = channel_desc.get("kind")
    if kind not in KINDS:
        raise DescriptorError(f"channel kind must be one of {KINDS}, got {kind!r}")
    ckind = code_desc.get("kind")
    if ckind not in CODE_KINDS:
        raise DescriptorError(f"code kind must be one of {CODE_KINDS}, got {ckind!r}")
    try:
        if ckind == "bell":
            n = int(_require(channel_desc, "n_qubits", "channel"))
            M = int(_require(code_desc, "M", "code"))
            channel, code = bell_code_n(n, M)
        else:
            amps = _require(channel_desc, "amplitudes", "channel")
            if not isinstance(amps, dict):
                raise DescriptorError("amplitudes must map labels to vectors")
            channel = pure_state_channel({_label(k): parse_vector(v) for k, v in amps.items()})
            code = Code(tuple(_label(x) for x in _require(code_desc, "codewords", "code")))
            if "M" in code_desc and int(code_desc["M"]) != code.M:
                raise DescriptorError(f"code lists {code.M} codewords but M = {code_desc['M']}")
            code.check(channel)
        if kind == "depolarizing":
            channel = depolarize(channel, float(_require(channel_desc, "p", "channel")))
        elif kind == "erasure":
            channel = erase(channel, float(_require(channel_desc, "epsilon", "channel")))
    except DescriptorError:
        raise
    except (ValueError, TypeError) as exc:
        raise DescriptorError(str(exc)) from exc
    return channel, code


def load_problem(path):
    """M-ary problem from {"states": [matrix, ...], "priors": [...]} (priors default uniform)."""
    desc = load_json(path)
    try:
        states = [parse_matrix(s) for s in _require(desc, "states", "problem")]
        priors = desc.get("priors")
        if priors is None:
            return MaryProblem.uniform(states)
        return MaryProblem(tuple(states), np.array(priors, dtype=float))
    except DescriptorError:
        raise
    except (ValueError, TypeError) as exc:
        raise DescriptorError(f"{path}: {exc}") from exc
