"""Factories for the quantum/classical machines and their classical baselines."""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConstructionFailed, InvalidArgument
from .model import (
    DFA,
    LEFT_MARK,
    MOQFA,
    RIGHT_MARK,
    OneWayQCFA,
    TwoWayQCFA,
)
from .quantum import (
    ProjectiveMeasurement,
    StateVector,
    UnitaryOp,
    amplitude_split,
    basis_state,
    block_rotation,
    complete_unitary_from_first_column,
    computational_measurement,
    identity,
    kron,
    phase_flip,
    pi_rotation,
    rotation,
)

UNARY = ("a",)
EQ_ALPHABET = ("0", "1", "#")
SQRT2_PI = math.sqrt(2.0) * math.pi


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _check_eps(eps, upper=Fraction(1, 2)) -> Fraction:
    try:
        e = _as_fraction(eps)
    except (TypeError, ValueError) as exc:
        raise InvalidArgument(f"bad error bound {eps!r}") from exc
    if not 0 < e <= upper:
        raise InvalidArgument(f"error bound must lie in (0, {upper}], got {eps!r}")
    return e


# ---------------------------------------------------------------- classical baselines

def dfa_mod(p: int) -> DFA:
    """Cycle of ``p`` states over {a}; accepts a^k iff p divides k (k = 0 included)."""
    if not isinstance(p, int) or p < 1:
        raise InvalidArgument(f"p must be a positive integer, got {p!r}")
    states = tuple(f"r{i}" for i in range(p))
    trans = {(f"r{i}", "a"): f"r{(i + 1) % p}" for i in range(p)}
    return DFA(states, UNARY, trans, "r0", frozenset({"r0"}), name=f"dfa_mod({p})")


def dfa_len(m: int, alphabet=("a", "b")) -> DFA:
    """Chain ``c0..cm`` plus a dead state, accepting exactly the words of length m."""
    if not isinstance(m, int) or m < 1:
        raise InvalidArgument(f"m must be a positive integer, got {m!r}")
    alphabet = tuple(alphabet)
    if not alphabet:
        raise InvalidArgument("alphabet must be nonempty")
    states = tuple(f"c{i}" for i in range(m + 1)) + ("dead",)
    trans = {}
    for a in alphabet:
        for i in range(m):
            trans[(f"c{i}", a)] = f"c{i + 1}"
        trans[(f"c{m}", a)] = "dead"
        trans[("dead", a)] = "dead"
    return DFA(states, alphabet, trans, "c0", frozenset({f"c{m}"}), name=f"dfa_len({m})")


# ---------------------------------------------------------------- languages and promises

def in_mod_language(w: str, p: int) -> bool:
    return len(w) > 0 and len(w) % p == 0


def mod_classifier(p: int):
    return lambda w: "yes" if in_mod_language(w, p) else "no"


def len_classifier(m: int):
    return lambda w: "yes" if len(w) == m else "no"


@dataclass(frozen=True)
class PromiseInstance:
    x: str
    y: str

    def __post_init__(self):
        if len(self.x) != len(self.y) or set(self.x + self.y) - {"0", "1"}:
            raise InvalidArgument("promise instances need two bit strings of equal length")

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def word(self) -> str:
        return f"{self.x}#{self.y}"

    @property
    def hamming(self) -> int:
        return sum(a != b for a, b in zip(self.x, self.y))

    @property
    def label(self) -> str:
        if self.x == self.y:
            return "yes"
        if 2 * self.hamming == self.n:
            return "no"
        return "outside"

    @classmethod
    def from_word(cls, w: str) -> "PromiseInstance":
        x, sep, y = w.partition("#")
        if not sep:
            raise InvalidArgument(f"{w!r} has no separator")
        return cls(x, y)


def eq_classifier(n: int):
    def classify(w):
        try:
            inst = PromiseInstance.from_word(w)
        except InvalidArgument:
            return "outside"
        return inst.label if inst.n == n else "outside"
    return classify


def promise_instances(n: int, *, include_no: bool = True):
    """All yes-instances, then all no-instances (Hamming distance n/2) for even n."""
    bits = ["".join(b) for b in itertools.product("01", repeat=n)]
    for x in bits:
        yield PromiseInstance(x, x)
    if include_no and n % 2 == 0:
        for x in bits:
            for pos in itertools.combinations(range(n), n // 2):
                y = list(x)
                for i in pos:
                    y[i] = "1" if y[i] == "0" else "0"
                yield PromiseInstance(x, "".join(y))


# ---------------------------------------------------------------- equality promise, one-way

def eq_1qcfa(n: int) -> OneWayQCFA:
    """Exact one-way machine for the promised equality problem on n-bit strings.

    Register of dimension n. ``s1..s{n+1}`` track the position inside x and
    ``t1..t{n+1}`` the position inside y; bit i of either string flips the
    sign of basis state i. At the right end-marker the inverse of the
    opening unitary is applied and basis state 0 means accept. Malformed
    inputs fall into ``dead`` and are rejected.
    """
    if not isinstance(n, int) or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    uniform = StateVector(np.full(n, 1 / math.sqrt(n)))
    u_s = complete_unitary_from_first_column(uniform)
    gates = {
        "I": identity(n),
        "U_s": u_s,
        "final": computational_measurement(n, pre=u_s.dagger()),
    }
    for i in range(1, n + 1):
        for b in (0, 1):
            gates[f"U_{i}_{b}"] = phase_flip(n, i - 1, b)

    xs = [f"s{i}" for i in range(1, n + 2)]
    ys = [f"t{i}" for i in range(1, n + 2)]
    states = ("s0",) + tuple(xs) + tuple(ys) + ("dead", "acc", "rej")
    theta, du, dm = {}, {}, {}

    def unit(s, sym, gate, nxt):
        theta[(s, sym)] = gate
        du[(s, sym)] = (nxt, 1)

    def final(s, accept_label=None):
        theta[(s, RIGHT_MARK)] = "final"
        for label in range(n):
            dm[(s, RIGHT_MARK, label)] = ("acc" if label == accept_label else "rej", 1)

    for s in ("s0", "dead") + tuple(xs) + tuple(ys):
        for sym in EQ_ALPHABET + (LEFT_MARK,):
            unit(s, sym, "I", "dead")
        final(s)
    unit("s0", LEFT_MARK, "U_s", "s1")
    for i in range(1, n + 1):
        for b in (0, 1):
            unit(f"s{i}", str(b), f"U_{i}_{b}", f"s{i + 1}")
            unit(f"t{i}", str(b), f"U_{i}_{b}", f"t{i + 1}")
    unit(f"s{n + 1}", "#", "I", "t1")
    final(f"t{n + 1}", accept_label=0)

    return OneWayQCFA(
        quantum_dim=n, states=states, alphabet=EQ_ALPHABET, gates=gates, theta=theta,
        delta_unitary=du, delta_measure=dm, initial_quantum=basis_state(n, 0),
        initial_state="s0", accepting={"acc"}, rejecting={"rej"},
        name=f"eq_1qcfa({n})", params={"family": "eq-1qcfa", "n": n},
    )


# ---------------------------------------------------------------- L(p), two-way

def _fill_unreachable(states, tape_symbols, theta, du, halting):
    # totality for (state, symbol) pairs the control never reaches
    for s in states:
        if s in halting:
            continue
        for sym in tape_symbols:
            if (s, sym) not in theta:
                theta[(s, sym)] = "I"
                du[(s, sym)] = ("rej", 0)


def mod_2qcfa(p: int, eps) -> TwoWayQCFA:
    """Two-basis-state machine recognising L(p) with one-sided error eps.

    Each iteration sweeps the input rotating by pi/p per symbol, rejects on
    observing |1>, otherwise splits |0> so that weight 4 eps / p^2 stays on
    |0>, accepts on observing |0>, and else resets to |0> and starts over.
    """
    if not isinstance(p, int) or p < 1:
        raise InvalidArgument(f"p must be a positive integer, got {p!r}")
    e = _check_eps(eps)
    ratio = Fraction(p * p) / (4 * e)
    # p = 1 with eps > 1/4 would need ratio < 1; every length is then a multiple anyway
    ratio = max(ratio, Fraction(1))
    gates = {
        "I": identity(2),
        "U_p": pi_rotation(Fraction(1, p)),
        "U_split": amplitude_split(ratio),
        "M": computational_measurement(2),
        "reset": pi_rotation(Fraction(-1, 2)),
    }
    states = ("rewind", "lead", "scan", "split", "check", "reset", "acc", "rej")
    theta, du, dm = {}, {}, {}
    theta[("rewind", LEFT_MARK)] = "I"; du[("rewind", LEFT_MARK)] = ("lead", 1)
    # "lead" only exists to reject the empty word; it costs no extra step
    theta[("lead", "a")] = "U_p"; du[("lead", "a")] = ("scan", 1)
    theta[("lead", RIGHT_MARK)] = "I"; du[("lead", RIGHT_MARK)] = ("rej", 0)
    theta[("rewind", "a")] = "I"; du[("rewind", "a")] = ("rewind", -1)
    theta[("rewind", RIGHT_MARK)] = "I"; du[("rewind", RIGHT_MARK)] = ("rewind", -1)
    theta[("scan", "a")] = "U_p"; du[("scan", "a")] = ("scan", 1)
    theta[("scan", RIGHT_MARK)] = "M"
    dm[("scan", RIGHT_MARK, 0)] = ("split", 0)
    dm[("scan", RIGHT_MARK, 1)] = ("rej", 0)
    theta[("split", RIGHT_MARK)] = "U_split"; du[("split", RIGHT_MARK)] = ("check", 0)
    theta[("check", RIGHT_MARK)] = "M"
    dm[("check", RIGHT_MARK, 0)] = ("acc", 0)
    dm[("check", RIGHT_MARK, 1)] = ("reset", 0)
    theta[("reset", RIGHT_MARK)] = "reset"; du[("reset", RIGHT_MARK)] = ("rewind", -1)
    _fill_unreachable(states, UNARY + (LEFT_MARK, RIGHT_MARK), theta, du, {"acc", "rej"})
    return TwoWayQCFA(
        quantum_dim=2, states=states, alphabet=UNARY, gates=gates, theta=theta,
        delta_unitary=du, delta_measure=dm, initial_quantum=basis_state(2, 0),
        initial_state="rewind", accepting={"acc"}, rejecting={"rej"}, loop_state="rewind",
        name=f"mod_2qcfa({p}, {e})",
        params={"family": "mod-2qcfa", "p": p, "eps": str(e), "split_ratio": str(ratio)},
    )


# ---------------------------------------------------------------- C(m), two-way

def len_2qcfa(m: int, eps, alphabet=("a", "b")) -> TwoWayQCFA:
    """Two-basis-state machine recognising C(m) with one-sided error eps.

    Per iteration: rotate by -sqrt(2) m pi on the left end-marker and by
    sqrt(2) pi per symbol, reject on observing |1>; then run two unbiased
    random walks from cell 1, each coin flip made by rotating |0> by pi/4
    and measuring. Only if both walks exit on the right end-marker is the
    split with weight eps / (2 m^2) applied and measured for acceptance.
    """
    if not isinstance(m, int) or m < 1:
        raise InvalidArgument(f"m must be a positive integer, got {m!r}")
    e = _check_eps(eps)
    alphabet = tuple(alphabet)
    if not alphabet:
        raise InvalidArgument("alphabet must be nonempty")
    ratio = Fraction(2 * m * m) / e
    gates = {
        "I": identity(2),
        "U_left": rotation(-m * SQRT2_PI),
        "U_alpha": rotation(SQRT2_PI),
        "M": computational_measurement(2),
        "coin": pi_rotation(Fraction(1, 4)),
        "reset": pi_rotation(Fraction(-1, 2)),
        "U_split": amplitude_split(ratio),
    }
    walks = ("1", "2s", "2f")
    states = (("rewind", "sweep", "home1")
              + tuple(f"{kind}{w}" for w in walks for kind in ("flip", "coin", "fix"))
              + ("home2s", "split", "check", "reset", "acc", "rej"))
    theta, du, dm = {}, {}, {}

    def unit(s, sym, gate, nxt, move):
        theta[(s, sym)] = gate
        du[(s, sym)] = (nxt, move)

    unit("rewind", LEFT_MARK, "U_left", "sweep", 1)
    unit("rewind", RIGHT_MARK, "I", "rewind", -1)
    for a in alphabet:
        unit("rewind", a, "I", "rewind", -1)
        unit("sweep", a, "U_alpha", "sweep", 1)
        unit("home1", a, "I", "home1", -1)
        unit("home2s", a, "I", "home2s", -1)
    theta[("sweep", RIGHT_MARK)] = "M"
    dm[("sweep", RIGHT_MARK, 0)] = ("home1", 0)
    dm[("sweep", RIGHT_MARK, 1)] = ("rej", 0)
    unit("home1", RIGHT_MARK, "I", "home1", -1)
    unit("home1", LEFT_MARK, "I", "flip1", 1)
    unit("home2s", RIGHT_MARK, "I", "home2s", -1)
    unit("home2s", LEFT_MARK, "I", "flip2s", 1)

    # walk bodies: flip (rotate by pi/4), coin (measure, move), fix (undo |1>)
    for w in walks:
        for a in alphabet:
            unit(f"flip{w}", a, "coin", f"coin{w}", 0)
            theta[(f"coin{w}", a)] = "M"
            dm[(f"coin{w}", a, 0)] = (f"flip{w}", 1)
            dm[(f"coin{w}", a, 1)] = (f"fix{w}", -1)
        for sym in alphabet + (LEFT_MARK, RIGHT_MARK):
            unit(f"fix{w}", sym, "reset", f"flip{w}", 0)
    # exits: walk 1 decides which copy of walk 2 runs
    unit("flip1", LEFT_MARK, "I", "flip2f", 1)
    unit("flip1", RIGHT_MARK, "I", "home2s", -1)
    unit("flip2s", LEFT_MARK, "I", "rewind", 0)
    unit("flip2s", RIGHT_MARK, "I", "split", 0)
    unit("flip2f", LEFT_MARK, "I", "rewind", 0)
    unit("flip2f", RIGHT_MARK, "I", "rewind", -1)

    unit("split", RIGHT_MARK, "U_split", "check", 0)
    theta[("check", RIGHT_MARK)] = "M"
    dm[("check", RIGHT_MARK, 0)] = ("acc", 0)
    dm[("check", RIGHT_MARK, 1)] = ("reset", 0)
    unit("reset", RIGHT_MARK, "reset", "rewind", -1)
    _fill_unreachable(states, alphabet + (LEFT_MARK, RIGHT_MARK), theta, du, {"acc", "rej"})
    return TwoWayQCFA(
        quantum_dim=2, states=states, alphabet=alphabet, gates=gates, theta=theta,
        delta_unitary=du, delta_measure=dm, initial_quantum=basis_state(2, 0),
        initial_state="rewind", accepting={"acc"}, rejecting={"rej"}, loop_state="rewind",
        name=f"len_2qcfa({m}, {e})",
        params={"family": "len-2qcfa", "m": m, "eps": str(e), "split_ratio": str(ratio)},
    )


# ---------------------------------------------------------------- L(p), measure-once

def moqfa_acceptance_profile(pi_multiples, p: int) -> np.ndarray:
    """Acceptance probability of the parallel-rotation machine on a^1..a^(p-1)."""
    th = np.pi * np.array([float(f) for f in pi_multiples])
    i = np.arange(1, p)
    return np.abs(np.cos(np.outer(th, i)).mean(axis=0)) ** 2


def _search(p, k, convention, eps, rng, budget):
    if convention == "2pi":
        draws = rng.integers(1, p, size=(budget, k))
        scale = Fraction(2, p)
    else:
        draws = 2 * rng.integers(0, p, size=(budget, k)) + 1
        scale = Fraction(1, p)
    th = np.pi * float(scale) * draws
    i = np.arange(1, p)
    acc = np.abs(np.cos(th[:, :, None] * i[None, None, :]).mean(axis=1)) ** 2
    worst = acc.max(axis=1)
    best = int(np.argmin(worst))
    return sorted(int(g) for g in draws[best]), scale, float(worst[best])


def moqfa_mod(p: int, eps, seed: int = 0, budget: int = 1000,
              max_blocks: int | None = None) -> MOQFA:
    """Certified parallel-rotation MO-1QFA for L(p) with one-sided error eps.

    Block j rotates by ``g_j * 2pi/p`` (convention ``"2pi"``) or by odd
    ``g_j * pi/p`` (convention ``"pi-odd"``). The smallest block count k for
    which a random draw passes the exhaustive residue check is returned.
    """
    if not isinstance(p, int) or p < 2:
        raise InvalidArgument(f"p must be an integer >= 2, got {p!r}")
    e = _check_eps(eps, upper=Fraction(1))
    k_max = math.ceil(4 * math.log(2 * p) / float(e))
    if max_blocks is not None:
        k_max = min(k_max, max_blocks)
    rng = np.random.default_rng(seed)
    best_err = math.inf
    for k in range(1, k_max + 1):
        for convention in ("2pi", "pi-odd"):
            g, scale, err = _search(p, k, convention, float(e), rng, budget)
            best_err = min(best_err, err)
            if err <= float(e):
                return _build_moqfa(p, e, g, scale, convention, err)
    raise ConstructionFailed(
        f"no certified MO-1QFA for p={p}, eps={e} with k <= {k_max}", best_error=best_err)


def _build_moqfa(p, e, g, scale, convention, err) -> MOQFA:
    k = len(g)
    multiples = [scale * gj for gj in g]
    psi0 = np.zeros(2 * k)
    psi0[0::2] = 1 / math.sqrt(k)
    init = StateVector(psi0)
    final = complete_unitary_from_first_column(init).dagger()
    return MOQFA(
        quantum_dim=2 * k, alphabet=UNARY, unitaries={"a": block_rotation(multiples)},
        initial=init, final=final, accepting=frozenset({0}), name=f"moqfa_mod({p}, {e})",
        params={"family": "moqfa-mod", "p": p, "eps": str(e), "k": k, "g": list(g),
                "convention": convention, "max_error": err},
    )


# ---------------------------------------------------------------- one-way lifts and products

def lift_moqfa(mq: MOQFA) -> OneWayQCFA:
    """The MO-1QFA as a one-way machine with classical states run/acc/rej."""
    d = mq.quantum_dim
    acc_idx = sorted(mq.accepting)
    rest = sorted(set(range(d)) - set(acc_idx))
    outcomes = [(0, acc_idx)] + ([(1, rest)] if rest else [])
    gates = {"I": identity(d), "final": ProjectiveMeasurement(d, tuple(outcomes), pre=mq.final)}
    theta, du, dm = {("run", LEFT_MARK): "I"}, {("run", LEFT_MARK): ("run", 1)}, {}
    for a in mq.alphabet:
        gates[f"U_{a}"] = mq.unitaries[a]
        theta[("run", a)] = f"U_{a}"
        du[("run", a)] = ("run", 1)
    theta[("run", RIGHT_MARK)] = "final"
    dm[("run", RIGHT_MARK, 0)] = ("acc", 1)
    if rest:
        dm[("run", RIGHT_MARK, 1)] = ("rej", 1)
    return OneWayQCFA(
        quantum_dim=d, states=("run", "acc", "rej"), alphabet=mq.alphabet, gates=gates,
        theta=theta, delta_unitary=du, delta_measure=dm, initial_quantum=mq.initial,
        initial_state="run", accepting={"acc"}, rejecting={"rej"},
        name=f"lift({mq.name})", params=dict(mq.params),
    )


def lift_dfa(d: DFA) -> OneWayQCFA:
    """The DFA as a one-way machine with a single quantum basis state."""
    if {"acc", "rej"} & set(d.states):
        raise InvalidArgument("DFA state names clash with the halting states")
    gates = {"I": identity(1), "final": computational_measurement(1)}
    theta, du, dm = {}, {}, {}
    for s in d.states:
        theta[(s, LEFT_MARK)] = "I"
        du[(s, LEFT_MARK)] = (s, 1)
        for a in d.alphabet:
            theta[(s, a)] = "I"
            du[(s, a)] = (d.transition[(s, a)], 1)
        theta[(s, RIGHT_MARK)] = "final"
        dm[(s, RIGHT_MARK, 0)] = ("acc" if s in d.accepting else "rej", 1)
    return OneWayQCFA(
        quantum_dim=1, states=d.states + ("acc", "rej"), alphabet=d.alphabet, gates=gates,
        theta=theta, delta_unitary=du, delta_measure=dm, initial_quantum=basis_state(1, 0),
        initial_state=d.start, accepting={"acc"}, rejecting={"rej"}, name=f"lift({d.name})",
    )


def accept_all_1qcfa(alphabet) -> OneWayQCFA:
    """Trivial one-way machine accepting every word with probability 1."""
    alphabet = tuple(alphabet)
    gates = {"I": identity(1), "final": computational_measurement(1)}
    theta = {("run", s): "I" for s in alphabet + (LEFT_MARK,)}
    du = {("run", s): ("run", 1) for s in alphabet + (LEFT_MARK,)}
    theta[("run", RIGHT_MARK)] = "final"
    dm = {("run", RIGHT_MARK, 0): ("acc", 1)}
    return OneWayQCFA(
        quantum_dim=1, states=("run", "acc", "rej"), alphabet=alphabet, gates=gates,
        theta=theta, delta_unitary=du, delta_measure=dm, initial_quantum=basis_state(1, 0),
        initial_state="run", accepting={"acc"}, rejecting={"rej"}, name="accept_all",
    )


def _pair(s1, s2) -> str:
    return f"({s1},{s2})"


def intersect_1qcfa(a1: OneWayQCFA, a2: OneWayQCFA) -> OneWayQCFA:
    """Tensor-product machine accepting iff both components accept.

    Quantum dimension and classical state count both multiply. Pairs with
    a halting component halt: accept only if both components accept.
    """
    if set(a1.alphabet) != set(a2.alphabet):
        raise InvalidArgument("one-way machines must share the input alphabet")
    d1, d2 = a1.quantum_dim, a2.quantum_dim
    states = tuple(_pair(s1, s2) for s1 in a1.states for s2 in a2.states)
    accepting = {_pair(s1, s2) for s1 in a1.accepting for s2 in a2.accepting}
    rejecting = {_pair(s1, s2) for s1 in a1.states for s2 in a2.states
                 if (s1 in a1.halting or s2 in a2.halting) and _pair(s1, s2) not in accepting}
    gates, theta, du, dm = {}, {}, {}, {}
    for s1 in a1.states:
        if s1 in a1.halting:
            continue
        for s2 in a2.states:
            if s2 in a2.halting:
                continue
            s = _pair(s1, s2)
            for sym in a1.tape_alphabet:
                k1, k2 = a1.theta[(s1, sym)], a2.theta[(s2, sym)]
                name = f"{k1}*{k2}"
                g1, g2 = a1.gates[k1], a2.gates[k2]
                if name not in gates:
                    gates[name] = _product_action(g1, g2)
                theta[(s, sym)] = name
                if isinstance(g1, UnitaryOp):
                    n1, n2 = a1.delta_unitary[(s1, sym)][0], a2.delta_unitary[(s2, sym)][0]
                    du[(s, sym)] = (_pair(n1, n2), 1)
                else:
                    width = max(g2.labels) + 1
                    for l1 in g1.labels:
                        for l2 in g2.labels:
                            n1 = a1.delta_measure[(s1, sym, l1)][0]
                            n2 = a2.delta_measure[(s2, sym, l2)][0]
                            dm[(s, sym, l1 * width + l2)] = (_pair(n1, n2), 1)
    init = StateVector(np.kron(a1.initial_quantum.amps, a2.initial_quantum.amps))
    return OneWayQCFA(
        quantum_dim=d1 * d2, states=states, alphabet=a1.alphabet, gates=gates, theta=theta,
        delta_unitary=du, delta_measure=dm, initial_quantum=init,
        initial_state=_pair(a1.initial_state, a2.initial_state), accepting=accepting,
        rejecting=rejecting, name=f"({a1.name})&({a2.name})",
        params={"components": [a1.name, a2.name]},
    )


def _product_action(g1, g2):
    if isinstance(g1, UnitaryOp) and isinstance(g2, UnitaryOp):
        return kron(g1, g2)
    if isinstance(g1, ProjectiveMeasurement) and isinstance(g2, ProjectiveMeasurement):
        d2 = g2.dim
        width = max(g2.labels) + 1
        outcomes = tuple(
            (l1 * width + l2, [i1 * d2 + i2 for i1 in idx1 for i2 in idx2])
            for l1, idx1 in g1.outcomes for l2, idx2 in g2.outcomes)
        pre = None
        if g1.pre is not None or g2.pre is not None:
            pre = kron(g1.pre or identity(g1.dim), g2.pre or identity(d2))
        return ProjectiveMeasurement(g1.dim * d2, outcomes, pre)
    raise InvalidArgument("components disagree on whether to measure at this step")


def trim_1qcfa(a: OneWayQCFA) -> OneWayQCFA:
    """Drop classically unreachable states and merge halting states into acc/rej."""
    def canon(s):
        if s in a.accepting:
            return "acc"
        if s in a.rejecting:
            return "rej"
        return s

    seen = {a.initial_state}
    queue = deque([a.initial_state])
    while queue:
        s = queue.popleft()
        if s in a.halting:
            continue
        targets = [a.delta_unitary[k][0] for k in a.delta_unitary if k[0] == s]
        targets += [a.delta_measure[k][0] for k in a.delta_measure if k[0] == s]
        for t in targets:
            if t not in seen:
                seen.add(t)
                queue.append(t)
    live = [s for s in a.states if s in seen and s not in a.halting]
    states = tuple(live) + ("acc", "rej")
    keep = set(live)
    theta = {k: v for k, v in a.theta.items() if k[0] in keep}
    du = {k: (canon(v[0]), v[1]) for k, v in a.delta_unitary.items() if k[0] in keep}
    dm = {k: (canon(v[0]), v[1]) for k, v in a.delta_measure.items() if k[0] in keep}
    gates = {g: a.gates[g] for g in set(theta.values())}
    return OneWayQCFA(
        quantum_dim=a.quantum_dim, states=states, alphabet=a.alphabet, gates=gates, theta=theta,
        delta_unitary=du, delta_measure=dm, initial_quantum=a.initial_quantum,
        initial_state=canon(a.initial_state), accepting={"acc"}, rejecting={"rej"},
        name=f"trim({a.name})", params=dict(a.params),
    )


# ---------------------------------------------------------------- trade-off

def factorize(p: int) -> list:
    """Prime-power factorization ``[(prime, exponent), ...]`` in increasing order."""
    if not isinstance(p, int) or p < 1:
        raise InvalidArgument(f"cannot factor {p!r}")
    out = []
    q = 2
    while q * q <= p:
        if p % q == 0:
            e = 0
            while p % q == 0:
                p //= q
                e += 1
            out.append((q, e))
        q += 1
    if p > 1:
        out.append((p, 1))
    return out


@dataclass(frozen=True)
class TradeoffPartition:
    """Split of the prime-power factors of p between the quantum side (q1)
    and the classical side (q2). ``first`` and ``second`` hold 0-based
    indices into ``factorize(p)``."""

    p: int
    first: frozenset
    second: frozenset

    def __post_init__(self):
        if not isinstance(self.p, int) or self.p < 2:
            raise InvalidArgument(f"p must be an integer >= 2, got {self.p!r}")
        object.__setattr__(self, "first", frozenset(self.first))
        object.__setattr__(self, "second", frozenset(self.second))
        s = len(factorize(self.p))
        if self.first & self.second or (self.first | self.second) != set(range(s)):
            raise InvalidArgument("index sets must partition the prime factors")
        if not self.first or not self.second:
            raise InvalidArgument("both sides of the partition must be nonempty")

    @property
    def factors(self) -> list:
        return factorize(self.p)

    @property
    def q1(self) -> int:
        return math.prod(self.factors[i][0] ** self.factors[i][1] for i in self.first)

    @property
    def q2(self) -> int:
        return math.prod(self.factors[i][0] ** self.factors[i][1] for i in self.second)

    @classmethod
    def from_moduli(cls, p: int, q1: int) -> "TradeoffPartition":
        fac = factorize(p)
        first = {i for i, (r, e) in enumerate(fac) if q1 % (r ** e) == 0}
        part = cls(p, first, set(range(len(fac))) - first)
        if part.q1 != q1:
            raise InvalidArgument(f"{q1} is not a product of prime-power factors of {p}")
        return part


def tradeoff_partitions(p: int) -> list:
    """Every ordered split of the prime-power factors with both sides nonempty."""
    s = len(factorize(p))
    out = []
    for r in range(1, s):
        for first in itertools.combinations(range(s), r):
            out.append(TradeoffPartition(p, frozenset(first), frozenset(range(s)) - set(first)))
    return out


def tradeoff_1qcfa(t: TradeoffPartition, eps, seed: int = 0) -> OneWayQCFA:
    """One-way machine for L(p): MO-1QFA on the q1 part times a DFA on the q2 part."""
    _check_eps(eps)
    quantum = lift_moqfa(moqfa_mod(t.q1, eps, seed=seed))
    classical = lift_dfa(dfa_mod(t.q2))
    product = intersect_1qcfa(quantum, classical)
    m = trim_1qcfa(product)
    params = {"family": "tradeoff-1qcfa", "p": t.p, "q1": t.q1, "q2": t.q2,
              "eps": str(_as_fraction(eps)), "product_classical": product.classical_count,
              "moqfa": quantum.params}
    return OneWayQCFA(
        quantum_dim=m.quantum_dim, states=m.states, alphabet=m.alphabet, gates=m.gates,
        theta=m.theta, delta_unitary=m.delta_unitary, delta_measure=m.delta_measure,
        initial_quantum=m.initial_quantum, initial_state=m.initial_state,
        accepting=m.accepting, rejecting=m.rejecting,
        name=f"tradeoff_1qcfa({t.p}; q1={t.q1}, q2={t.q2}, {eps})", params=params,
    )
