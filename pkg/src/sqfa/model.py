"""Machine descriptions and their step semantics.

Tape layout for an input ``w`` of length n: position 0 holds ``LEFT_MARK``,
positions 1..n hold the input, position n+1 holds ``RIGHT_MARK``. Words are
plain strings, one character per symbol.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import IllFormedMachine, InvalidArgument, UnsupportedMachine
from .quantum import (
    ProjectiveMeasurement,
    StateVector,
    UnitaryOp,
    canonical_phase,
    global_phase_key,
    measure,
)

LEFT_MARK = "^"
RIGHT_MARK = "$"
MOVES = (-1, 0, 1)


# ---------------------------------------------------------------- DFA

@dataclass(frozen=True)
class DFA:
    states: tuple
    alphabet: tuple
    transition: dict
    start: str
    accepting: frozenset
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        states = set(self.states)
        if len(states) != len(self.states):
            raise IllFormedMachine("duplicate DFA states")
        if self.start not in states:
            raise IllFormedMachine(f"start state {self.start!r} is not a state")
        if not self.accepting <= states:
            raise IllFormedMachine("accepting states must be a subset of the states")
        for s in self.states:
            for a in self.alphabet:
                t = self.transition.get((s, a))
                if t is None:
                    raise IllFormedMachine(f"DFA transition missing for ({s!r}, {a!r})")
                if t not in states:
                    raise IllFormedMachine(f"transition ({s!r}, {a!r}) targets unknown state {t!r}")

    @property
    def classical_count(self) -> int:
        return len(self.states)


def dfa_run(d: DFA, w: str) -> bool:
    s = d.start
    for a in w:
        if a not in d.alphabet:
            raise InvalidArgument(f"symbol {a!r} not in alphabet {d.alphabet}")
        s = d.transition[(s, a)]
    return s in d.accepting


def dfa_product(d1: DFA, d2: DFA) -> DFA:
    """Intersection automaton on the reachable part of the product."""
    if set(d1.alphabet) != set(d2.alphabet):
        raise InvalidArgument("alphabets differ")

    def name(pair):
        return f"{pair[0]}|{pair[1]}"

    start = (d1.start, d2.start)
    seen = {start}
    order = [start]
    queue = deque([start])
    trans = {}
    while queue:
        pair = queue.popleft()
        for a in d1.alphabet:
            nxt = (d1.transition[(pair[0], a)], d2.transition[(pair[1], a)])
            trans[(name(pair), a)] = name(nxt)
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    acc = {name(p) for p in order if p[0] in d1.accepting and p[1] in d2.accepting}
    return DFA(tuple(name(p) for p in order), d1.alphabet, trans, name(start), frozenset(acc),
               name=f"({d1.name})&({d2.name})")


def dfa_minimize(d: DFA) -> DFA:
    """Minimal equivalent DFA by partition refinement over reachable states.

    States of the result are named ``m0, m1, ...`` in breadth-first order
    from the start state, so equal languages give identical machines.
    """
    reach = [d.start]
    seen = {d.start}
    queue = deque([d.start])
    while queue:
        s = queue.popleft()
        for a in d.alphabet:
            t = d.transition[(s, a)]
            if t not in seen:
                seen.add(t)
                reach.append(t)
                queue.append(t)

    block = {s: int(s in d.accepting) for s in reach}
    while True:
        sigs = {s: (block[s],) + tuple(block[d.transition[(s, a)]] for a in d.alphabet)
                for s in reach}
        ids: dict = {}
        new_block = {s: ids.setdefault(sigs[s], len(ids)) for s in reach}
        if len(ids) == len(set(block.values())):
            break
        block = new_block

    # canonical BFS naming of the blocks
    names = {block[d.start]: "m0"}
    queue = deque([d.start])
    rep = {block[d.start]: d.start}
    while queue:
        s = queue.popleft()
        for a in d.alphabet:
            t = d.transition[(s, a)]
            if block[t] not in names:
                names[block[t]] = f"m{len(names)}"
                rep[block[t]] = t
                queue.append(t)
    trans = {(names[b], a): names[block[d.transition[(s, a)]]]
             for b, s in rep.items() for a in d.alphabet}
    states = tuple(sorted(names.values(), key=lambda n: int(n[1:])))
    acc = frozenset(names[b] for b, s in rep.items() if s in d.accepting)
    return DFA(states, d.alphabet, trans, "m0", acc, name=f"min({d.name})")


# ---------------------------------------------------------------- quantum machines

Action = Union[UnitaryOp, ProjectiveMeasurement]


@dataclass(frozen=True)
class TwoWayQCFA:
    """Two-way automaton with a quantum register and classical control.

    ``theta`` maps ``(state, tape symbol)`` to a key of ``gates``. Unitary
    actions are followed by ``delta_unitary[(state, symbol)]``; measurements
    by ``delta_measure[(state, symbol, outcome label)]``. Both give
    ``(next state, head move)``. ``loop_state`` marks the classical state in
    which every iteration of a looping machine starts (head on the left
    end-marker); the analysis module relies on it.
    """

    quantum_dim: int
    states: tuple
    alphabet: tuple
    gates: dict
    theta: dict
    delta_unitary: dict
    delta_measure: dict
    initial_quantum: StateVector
    initial_state: str
    accepting: frozenset
    rejecting: frozenset
    loop_state: Optional[str] = None
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "rejecting", frozenset(self.rejecting))
        self.validate()

    @property
    def tape_alphabet(self) -> tuple:
        return self.alphabet + (LEFT_MARK, RIGHT_MARK)

    @property
    def halting(self) -> frozenset:
        return self.accepting | self.rejecting

    @property
    def classical_count(self) -> int:
        return len(self.states)

    def action(self, state, symbol) -> Action:
        key = self.theta.get((state, symbol))
        if key is None:
            raise IllFormedMachine(f"no quantum action for ({state!r}, {symbol!r})")
        return self.gates[key]

    def validate(self):
        states = set(self.states)
        if len(states) != len(self.states):
            raise IllFormedMachine("duplicate classical states")
        if self.accepting & self.rejecting:
            raise IllFormedMachine("accepting and rejecting states overlap")
        if not self.halting <= states:
            raise IllFormedMachine("halting states must be classical states")
        if self.initial_state not in states:
            raise IllFormedMachine(f"initial state {self.initial_state!r} is not a state")
        if self.loop_state is not None and self.loop_state not in states:
            raise IllFormedMachine(f"loop state {self.loop_state!r} is not a state")
        if self.quantum_dim < 1 or self.initial_quantum.dim != self.quantum_dim:
            raise IllFormedMachine("initial quantum state has the wrong dimension")
        for sym in self.alphabet:
            if sym in (LEFT_MARK, RIGHT_MARK) or len(sym) != 1:
                raise IllFormedMachine(f"bad input symbol {sym!r}")
        for name, g in self.gates.items():
            if not isinstance(g, (UnitaryOp, ProjectiveMeasurement)):
                raise IllFormedMachine(f"gate {name!r} is neither a unitary nor a measurement")
            if g.dim != self.quantum_dim:
                raise IllFormedMachine(f"gate {name!r} has dimension {g.dim}, expected {self.quantum_dim}")

        def check_target(where, target):
            nxt, move = target
            if nxt not in states:
                raise IllFormedMachine(f"{where} targets unknown state {nxt!r}")
            if move not in MOVES:
                raise IllFormedMachine(f"{where} has bad head move {move!r}")

        for s in self.states:
            if s in self.halting:
                continue
            for sym in self.tape_alphabet:
                key = self.theta.get((s, sym))
                if key is None:
                    raise IllFormedMachine(f"theta undefined on ({s!r}, {sym!r})")
                if key not in self.gates:
                    raise IllFormedMachine(f"theta({s!r}, {sym!r}) names unknown gate {key!r}")
                g = self.gates[key]
                if isinstance(g, UnitaryOp):
                    if (s, sym) not in self.delta_unitary:
                        raise IllFormedMachine(f"delta undefined on unitary step ({s!r}, {sym!r})")
                    check_target(f"delta({s!r}, {sym!r})", self.delta_unitary[(s, sym)])
                else:
                    for label in g.labels:
                        if (s, sym, label) not in self.delta_measure:
                            raise IllFormedMachine(
                                f"delta undefined on measurement outcome ({s!r}, {sym!r}, {label})")
                        check_target(f"delta({s!r}, {sym!r}, {label})",
                                     self.delta_measure[(s, sym, label)])
                if sym == LEFT_MARK and isinstance(g, UnitaryOp) and self.delta_unitary[(s, sym)][1] == -1:
                    raise IllFormedMachine(f"({s!r}, left end-marker) moves off the tape")


@dataclass(frozen=True)
class OneWayQCFA(TwoWayQCFA):
    """Measure-once one-way restriction: every move is +1 and the only
    measurement happens on the right end-marker, leading to a halting state."""

    def validate(self):
        super().validate()
        for (s, sym), (nxt, move) in self.delta_unitary.items():
            if move != 1:
                raise IllFormedMachine(f"one-way machine moves {move} on ({s!r}, {sym!r})")
        for (s, sym, label), (nxt, move) in self.delta_measure.items():
            if move != 1:
                raise IllFormedMachine(f"one-way machine moves {move} on ({s!r}, {sym!r}, {label})")
            if nxt not in self.halting:
                raise IllFormedMachine("the end-marker measurement must halt")
        for s in self.states:
            if s in self.halting:
                continue
            for sym in self.tape_alphabet:
                is_meas = isinstance(self.action(s, sym), ProjectiveMeasurement)
                if is_meas != (sym == RIGHT_MARK):
                    raise IllFormedMachine(
                        f"one-way machine must measure exactly on the right end-marker ({s!r}, {sym!r})")


@dataclass(frozen=True)
class MOQFA:
    """Measure-once one-way quantum automaton."""

    quantum_dim: int
    alphabet: tuple
    unitaries: dict
    initial: StateVector
    final: UnitaryOp
    accepting: frozenset
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        if set(self.unitaries) != set(self.alphabet):
            raise IllFormedMachine("MO-1QFA needs exactly one unitary per symbol")
        ops = list(self.unitaries.values()) + [self.final]
        if any(u.dim != self.quantum_dim for u in ops) or self.initial.dim != self.quantum_dim:
            raise IllFormedMachine("MO-1QFA components disagree on the quantum dimension")
        if not self.accepting or not all(0 <= i < self.quantum_dim for i in self.accepting):
            raise IllFormedMachine("accepting basis indices out of range")

    @property
    def classical_count(self) -> int:
        return 0


# ---------------------------------------------------------------- configurations

@dataclass(frozen=True)
class Configuration:
    classical: str
    head: int
    quantum: StateVector
    steps: int = 0


@dataclass(frozen=True)
class Halt:
    accept: bool
    steps: int


def initial_configuration(m: TwoWayQCFA) -> Configuration:
    return Configuration(m.initial_state, 0, m.initial_quantum, 0)


def make_tape(m, w: str) -> tuple:
    for a in w:
        if a not in m.alphabet:
            raise InvalidArgument(f"symbol {a!r} not in alphabet {m.alphabet}")
    return (LEFT_MARK,) + tuple(w) + (RIGHT_MARK,)


def _successor(m, nxt, head, psi, steps, tape_len):
    if nxt in m.accepting:
        return Halt(True, steps)
    if nxt in m.rejecting:
        return Halt(False, steps)
    if not 0 <= head < tape_len:
        raise IllFormedMachine(f"head moved off the tape to position {head}")
    return Configuration(nxt, head, psi, steps)


def step_on_tape(m: TwoWayQCFA, c: Configuration, tape: tuple) -> list:
    if c.classical in m.accepting:
        return [(1.0, Halt(True, c.steps))]
    if c.classical in m.rejecting:
        return [(1.0, Halt(False, c.steps))]
    sym = tape[c.head]
    act = m.action(c.classical, sym)
    steps = c.steps + 1
    if isinstance(act, UnitaryOp):
        target = m.delta_unitary.get((c.classical, sym))
        if target is None:
            raise IllFormedMachine(f"delta undefined on ({c.classical!r}, {sym!r})")
        nxt, move = target
        return [(1.0, _successor(m, nxt, c.head + move, act.apply(c.quantum), steps, len(tape)))]
    out = []
    for label, prob, post in measure(act, c.quantum):
        target = m.delta_measure.get((c.classical, sym, label))
        if target is None:
            raise IllFormedMachine(f"delta undefined on ({c.classical!r}, {sym!r}, {label})")
        nxt, move = target
        out.append((prob, _successor(m, nxt, c.head + move, post, steps, len(tape))))
    return out


def qcfa_step(m: TwoWayQCFA, c: Configuration, w: str) -> list:
    """Successor distribution of configuration ``c`` on input ``w``.

    Returns ``[(probability, Configuration | Halt), ...]``. A unitary action
    has exactly one successor; a measurement has one per outcome with
    non-negligible probability.
    """
    return step_on_tape(m, c, make_tape(m, w))


# ---------------------------------------------------------------- configuration graphs

ACCEPT = -1
REJECT = -2
LOOP = -3


@dataclass
class ConfigurationGraph:
    """Finite reachable configuration graph of a machine on one input.

    ``edges[i]`` lists ``(probability, target)`` in the order produced by
    :func:`step_on_tape`; a target is a node index or one of ``ACCEPT``,
    ``REJECT``, ``LOOP``.
    """

    nodes: list
    edges: list
    start: int = 0


def _node_key(c: Configuration) -> tuple:
    return (c.classical, c.head) + global_phase_key(c.quantum.amps)


def configuration_graph(m: TwoWayQCFA, w: str, *, cut_at_loop: bool = False,
                        max_nodes: int = 500_000) -> ConfigurationGraph:
    """Explore every configuration reachable from the initial one.

    Quantum states are identified up to global phase. With ``cut_at_loop``
    the start configuration becomes the absorbing target ``LOOP`` whenever
    it is re-entered, which splits a looping machine into iterations.
    """
    tape = make_tape(m, w)
    c0 = initial_configuration(m)
    c0 = Configuration(c0.classical, 0, canonical_phase(c0.quantum))
    start_key = _node_key(c0)
    index = {start_key: 0}
    nodes = [c0]
    edges: list = []
    i = 0
    while i < len(nodes):
        c = nodes[i]
        out = []
        for prob, nxt in step_on_tape(m, c, tape):
            if isinstance(nxt, Halt):
                out.append((prob, ACCEPT if nxt.accept else REJECT))
                continue
            nxt = Configuration(nxt.classical, nxt.head, canonical_phase(nxt.quantum))
            key = _node_key(nxt)
            if cut_at_loop:
                if key == start_key:
                    out.append((prob, LOOP))
                    continue
                if nxt.classical == c0.classical and nxt.head == 0:
                    raise UnsupportedMachine(
                        "loop state re-entered with a quantum state different from the initial one")
            j = index.get(key)
            if j is None:
                j = len(nodes)
                if j >= max_nodes:
                    raise UnsupportedMachine(f"more than {max_nodes} reachable configurations")
                index[key] = j
                nodes.append(nxt)
            out.append((prob, j))
        edges.append(out)
        i += 1
    return ConfigurationGraph(nodes, edges)


# ---------------------------------------------------------------- acceptance modes

@dataclass(frozen=True)
class AcceptanceMode:
    kind: str
    eps: Optional[float] = None
    cut: Optional[float] = None
    gap: Optional[float] = None

    def __post_init__(self):
        if self.kind == "one-sided":
            if self.eps is None or not 0 < self.eps <= 0.5:
                raise InvalidArgument("one-sided error needs 0 < eps <= 1/2")
        elif self.kind == "error":
            if self.eps is None or not 0 < self.eps < 0.5:
                raise InvalidArgument("error probability needs 0 < eps < 1/2")
        elif self.kind == "cut-point":
            if self.cut is None or not 0 < self.cut < 1 or self.gap is None or self.gap <= 0:
                raise InvalidArgument("cut point needs 0 < lambda < 1 and gap > 0")
        elif self.kind != "exact":
            raise InvalidArgument(f"unknown acceptance mode {self.kind!r}")

    @classmethod
    def one_sided(cls, eps):
        return cls("one-sided", eps=eps)

    @classmethod
    def error_probability(cls, eps):
        return cls("error", eps=eps)

    @classmethod
    def cut_point(cls, cut, gap):
        return cls("cut-point", cut=cut, gap=gap)

    @classmethod
    def exact(cls):
        return cls("exact")

    def __str__(self):
        if self.kind in ("one-sided", "error"):
            return f"{self.kind}({self.eps})"
        if self.kind == "cut-point":
            return f"cut-point({self.cut}, {self.gap})"
        return "exact"
