import itertools
import math

import pytest

from sqfa.constructions import (
    dfa_len,
    dfa_mod,
    eq_1qcfa,
    len_2qcfa,
    mod_2qcfa,
    moqfa_mod,
    lift_moqfa,
    tradeoff_1qcfa,
    TradeoffPartition,
)
from sqfa.errors import IllFormedMachine, InvalidArgument
from sqfa.model import (
    DFA,
    AcceptanceMode,
    Configuration,
    Halt,
    OneWayQCFA,
    configuration_graph,
    dfa_minimize,
    dfa_product,
    dfa_run,
    qcfa_step,
)
from sqfa.quantum import TOL_NORM, basis_state, rotation


def test_dfa_run_examples():
    assert dfa_run(dfa_mod(3), "aaa")
    assert not dfa_run(dfa_mod(3), "aaaa")
    assert dfa_run(dfa_len(2), "ab")


def test_dfa_run_unknown_symbol():
    with pytest.raises(InvalidArgument):
        dfa_run(dfa_mod(3), "ab")


def brute_force_classes(d, max_len=12):
    # Myhill-Nerode oracle: distinguish reachable states by their accepted suffix sets
    def state_after(w):
        s = d.start
        for a in w:
            s = d.transition[(s, a)]
        return s

    words = ["".join(t) for k in range(max_len + 1) for t in itertools.product(d.alphabet, repeat=k)]
    short = [w for w in words if len(w) <= max_len // 2]
    sigs = set()
    for w in short:
        s = state_after(w)
        sigs.add(tuple(dfa_run(DFA(d.states, d.alphabet, d.transition, s, d.accepting), v)
                       for v in short))
    return len(sigs)


@pytest.mark.parametrize("p", [1, 2, 5, 6])
def test_minimize_mod(p):
    assert dfa_minimize(dfa_mod(p)).classical_count == p == brute_force_classes(dfa_mod(p))


def test_minimize_product():
    prod = dfa_product(dfa_mod(2), dfa_mod(3))
    assert dfa_minimize(prod).classical_count == 6


@pytest.mark.parametrize("m", [1, 2, 4])
def test_minimize_len(m):
    assert dfa_minimize(dfa_len(m)).classical_count == m + 2 == brute_force_classes(dfa_len(m), 10)


def test_minimize_drops_unreachable():
    d = dfa_mod(3)
    trans = dict(d.transition)
    trans[("x", "a")] = "r0"
    big = DFA(d.states + ("x",), d.alphabet, trans, "r0", d.accepting)
    small = dfa_minimize(big)
    assert small.classical_count == 3
    for k in range(13):
        assert dfa_run(small, "a" * k) == dfa_run(big, "a" * k)


def test_dfa_validation():
    with pytest.raises(IllFormedMachine):
        DFA(("s",), ("a",), {}, "s", frozenset())


def test_step_scan_rotates():
    m = mod_2qcfa(3, 0.25)
    c = Configuration("scan", 1, basis_state(2, 0))
    (prob, nxt), = qcfa_step(m, c, "aaa")
    assert prob == 1.0 and nxt.head == 2 and nxt.classical == "scan"
    assert nxt.quantum == rotation(math.pi / 3).apply(basis_state(2, 0))


def test_step_check_measurement():
    m = mod_2qcfa(3, 0.25)
    psi = rotation(2 * math.pi / 3).apply(basis_state(2, 0))
    out = qcfa_step(m, Configuration("scan", 3, psi), "aa")
    probs = {("halt" if isinstance(n, Halt) else n.classical): p for p, n in out}
    assert probs["halt"] == pytest.approx(0.75)
    assert probs["split"] == pytest.approx(0.25)
    assert [n for _, n in out if isinstance(n, Halt)][0].accept is False


def test_step_from_halting_state():
    m = mod_2qcfa(3, 0.25)
    out = qcfa_step(m, Configuration("acc", 0, basis_state(2, 0)), "a")
    assert len(out) == 1 and out[0][0] == 1.0 and out[0][1].accept


LOOPING_MACHINES = [
    lambda: mod_2qcfa(3, 0.25),
    lambda: mod_2qcfa(5, 0.5),
    lambda: len_2qcfa(2, 0.5),
    lambda: len_2qcfa(3, 0.25),
]


@pytest.mark.parametrize("make", LOOPING_MACHINES)
def test_distributions_and_head_bounds(make):
    m = make()
    for k in range(0, 13):
        w = m.alphabet[0] * k
        g = configuration_graph(m, w)
        for node, out in zip(g.nodes, g.edges):
            assert 0 <= node.head <= k + 1
            assert abs(sum(p for p, _ in out) - 1) < TOL_NORM


def test_one_way_machines_move_right_and_measure_once():
    for m in (eq_1qcfa(3), lift_moqfa(moqfa_mod(5, 0.5)),
              tradeoff_1qcfa(TradeoffPartition.from_moduli(6, 2), 0.25)):
        assert isinstance(m, OneWayQCFA)
        for k in range(6):
            w = m.alphabet[0] * k
            g = configuration_graph(m, w)
            measured = 0
            for node, out in zip(g.nodes, g.edges):
                if len(out) > 1 or all(t < 0 for _, t in out):
                    measured += 1
                    assert node.head == k + 1
                for _, t in out:
                    if t >= 0:
                        assert g.nodes[t].head == node.head + 1
            assert measured == 1


def test_qcfa_validation_errors():
    m = mod_2qcfa(3, 0.25)
    theta = dict(m.theta)
    del theta[("scan", "a")]
    with pytest.raises(IllFormedMachine):
        type(m)(**{**m.__dict__, "theta": theta})
    du = dict(m.delta_unitary)
    du[("rewind", "^")] = ("scan", -1)
    with pytest.raises(IllFormedMachine):
        type(m)(**{**m.__dict__, "delta_unitary": du})
    with pytest.raises(IllFormedMachine):
        type(m)(**{**m.__dict__, "rejecting": frozenset({"rej", "acc"})})


def test_one_way_restriction_enforced():
    m = eq_1qcfa(2)
    du = dict(m.delta_unitary)
    du[("s1", "0")] = ("s2", 0)
    with pytest.raises(IllFormedMachine):
        OneWayQCFA(**{**m.__dict__, "delta_unitary": du})


def test_acceptance_modes():
    assert str(AcceptanceMode.one_sided(0.25)) == "one-sided(0.25)"
    with pytest.raises(InvalidArgument):
        AcceptanceMode.one_sided(0.6)
    with pytest.raises(InvalidArgument):
        AcceptanceMode.error_probability(0.5)
    with pytest.raises(InvalidArgument):
        AcceptanceMode.cut_point(1.2, 0.1)
    AcceptanceMode.exact()
