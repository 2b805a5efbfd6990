import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqfa.analysis import acceptance, acceptance_oneway
from sqfa.constructions import (
    PromiseInstance,
    TradeoffPartition,
    accept_all_1qcfa,
    dfa_len,
    dfa_mod,
    eq_1qcfa,
    eq_classifier,
    factorize,
    intersect_1qcfa,
    len_2qcfa,
    lift_dfa,
    lift_moqfa,
    moqfa_acceptance_profile,
    mod_2qcfa,
    moqfa_mod,
    promise_instances,
    tradeoff_1qcfa,
    tradeoff_partitions,
)
from sqfa.errors import ConstructionFailed, InvalidArgument
from sqfa.model import dfa_minimize, dfa_run
from sqfa.quantum import TOL_NORM


def eq_amplitude(x, y):
    n = len(x)
    return sum((-1) ** (int(a) + int(b)) for a, b in zip(x, y)) / n


def test_dfa_mod_examples():
    d = dfa_mod(1)
    assert d.classical_count == 1 and all(dfa_run(d, "a" * k) for k in range(5))
    d = dfa_mod(5)
    assert dfa_run(d, "aaaaa") and not dfa_run(d, "aaaa")
    assert dfa_minimize(dfa_mod(6)).classical_count == 6
    with pytest.raises(InvalidArgument):
        dfa_mod(0)


def test_dfa_len_examples():
    d = dfa_len(2)
    assert dfa_run(d, "ab") and dfa_run(d, "ba")
    assert not dfa_run(d, "a") and not dfa_run(d, "abb")
    assert all(dfa_run(dfa_len(1), s) for s in "ab")
    assert d.classical_count == 4
    with pytest.raises(InvalidArgument):
        dfa_len(0)


def test_eq_examples():
    assert acceptance_oneway(eq_1qcfa(2), "01#01") == pytest.approx((1, 0), abs=TOL_NORM)
    assert acceptance_oneway(eq_1qcfa(2), "00#01") == pytest.approx((0, 1), abs=TOL_NORM)
    # outside the promise: x != y but every bit differs
    assert acceptance_oneway(eq_1qcfa(4), "0101#1010")[0] == pytest.approx(1, abs=TOL_NORM)
    with pytest.raises(InvalidArgument):
        eq_1qcfa(0)


def test_eq_counts():
    for n in (1, 2, 5, 8):
        m = eq_1qcfa(n)
        assert m.quantum_dim == n and m.classical_count == 2 * n + 6


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_eq_amplitude_formula_exhaustive(n):
    m = eq_1qcfa(n)
    for x in itertools.product("01", repeat=n):
        for y in itertools.product("01", repeat=n):
            x_, y_ = "".join(x), "".join(y)
            pa, _ = acceptance_oneway(m, f"{x_}#{y_}")
            assert pa == pytest.approx(eq_amplitude(x_, y_) ** 2, abs=TOL_NORM)


@settings(max_examples=25, deadline=None)
@given(st.integers(9, 16).flatmap(lambda n: st.tuples(
    st.text("01", min_size=n, max_size=n), st.text("01", min_size=n, max_size=n))))
def test_eq_amplitude_formula_sampled(xy):
    x, y = xy
    pa, _ = acceptance_oneway(eq_1qcfa(len(x)), f"{x}#{y}")
    assert pa == pytest.approx(eq_amplitude(x, y) ** 2, abs=TOL_NORM)


def test_eq_malformed_inputs_are_rejected():
    m = eq_1qcfa(2)
    for w in ("", "#", "00", "0#1", "01#01#", "00#00#00", "011#011", "01#0"):
        assert eq_classifier(2)(w) == "outside"
        assert acceptance_oneway(m, w) == pytest.approx((0, 1), abs=TOL_NORM)


def test_promise_instances():
    inst = list(promise_instances(4))
    assert sum(i.label == "yes" for i in inst) == 16
    assert sum(i.label == "no" for i in inst) == 16 * 6
    assert list(promise_instances(3))[-1].label == "yes"
    assert PromiseInstance.from_word("0101#1010").label == "outside"


def test_mod_machine_shape():
    counts = {mod_2qcfa(p, e).classical_count for p in (2, 3, 7, 30) for e in (0.5, 0.1)}
    assert counts == {8}
    assert mod_2qcfa(3, 0.25).quantum_dim == 2
    with pytest.raises(InvalidArgument):
        mod_2qcfa(3, 0.6)
    with pytest.raises(InvalidArgument):
        mod_2qcfa(3, 0)
    with pytest.raises(InvalidArgument):
        mod_2qcfa(0, 0.25)


def test_mod_rejects_empty_word():
    for p in (1, 3, 6):
        a = acceptance(mod_2qcfa(p, 0.25), "")
        assert (a.p_reject, a.expected_steps) == (1.0, 2.0)


def test_mod_split_matrix_first_column():
    m = mod_2qcfa(3, 0.25)
    r = 9 / (4 * 0.25)
    col = m.gates["U_split"].entries[:, 0].real
    assert col == pytest.approx([1 / math.sqrt(r), math.sqrt(r - 1) / math.sqrt(r)])


def test_mod_p1_degenerate_accepts_everything():
    m = mod_2qcfa(1, 0.5)
    for k in range(1, 5):
        assert acceptance(m, "a" * k).p_accept == pytest.approx(1.0)


def test_len_machine_shape():
    counts = {len_2qcfa(m, e).classical_count for m in (1, 2, 8) for e in (0.5, 0.25)}
    assert counts == {18}
    m = len_2qcfa(2, 0.5)
    assert m.quantum_dim == 2
    assert m.gates["U_left"].entries[1, 0].real == pytest.approx(math.sin(-2 * math.sqrt(2) * math.pi))
    with pytest.raises(InvalidArgument):
        len_2qcfa(2, 0.75)


def test_len_state_after_sweep_is_q0_on_members():
    m = len_2qcfa(2, 0.5)
    psi = m.gates["U_left"].entries[:, 0]
    for _ in range(2):
        psi = m.gates["U_alpha"].entries @ psi
    assert np.allclose(psi, [1, 0], atol=TOL_NORM)


def test_coin_flip_is_fair():
    m = len_2qcfa(2, 0.5)
    col = m.gates["coin"].entries[:, 0]
    assert np.abs(col) ** 2 == pytest.approx([0.5, 0.5])


def test_moqfa_p2_uses_quarter_turn():
    q = moqfa_mod(2, 0.25)
    assert q.params["k"] == 1 and q.params["convention"] == "pi-odd"
    assert acceptance_oneway(q, "a")[0] == pytest.approx(0, abs=TOL_NORM)
    assert acceptance_oneway(q, "aa")[0] == pytest.approx(1, abs=TOL_NORM)


@pytest.mark.parametrize("p,eps", [(5, 0.5), (7, 0.25), (11, 0.1), (15, 0.25)])
def test_moqfa_certified(p, eps):
    q = moqfa_mod(p, eps, seed=3)
    k = q.params["k"]
    assert q.quantum_dim == 2 * k <= 2 * math.ceil(4 * math.log(2 * p) / eps)
    if (p, eps) == (5, 0.5):
        assert k <= 8
    for i in range(1, 3 * p + 1):
        pa, _ = acceptance_oneway(q, "a" * i)
        if i % p == 0:
            assert pa == pytest.approx(1, abs=TOL_NORM)
        else:
            assert pa <= eps + TOL_NORM
    # acceptance agrees with the cosine-average formula
    profile = moqfa_acceptance_profile(
        [Fraction(s) for s in q.unitaries["a"].gate["pi_multiples"]], p)
    for i in range(1, p):
        assert acceptance_oneway(q, "a" * i)[0] == pytest.approx(profile[i - 1], abs=TOL_NORM)


def test_moqfa_is_seed_deterministic():
    assert moqfa_mod(7, 0.25, seed=11).params == moqfa_mod(7, 0.25, seed=11).params


def test_moqfa_failure_reports_best_error():
    with pytest.raises(ConstructionFailed) as info:
        moqfa_mod(97, 0.01, budget=2, max_blocks=3)
    assert info.value.best_error is not None and info.value.best_error > 0.01


def test_intersect_counts():
    a1 = lift_moqfa(moqfa_mod(2, 0.5))  # 2 quantum, 3 classical
    a2 = lift_dfa(dfa_mod(2))  # 1 quantum, 4 classical
    prod = intersect_1qcfa(a1, a2)
    assert (prod.quantum_dim, prod.classical_count) == (2, 12)


def test_intersect_with_accept_all_is_identity():
    a = lift_moqfa(moqfa_mod(5, 0.5))
    prod = intersect_1qcfa(a, accept_all_1qcfa(("a",)))
    for k in range(11):
        assert acceptance_oneway(prod, "a" * k)[0] == pytest.approx(
            acceptance_oneway(a, "a" * k)[0], abs=TOL_NORM)


def test_intersect_multiplies_acceptance():
    e1, e2 = 0.25, 0.5
    a1, a2 = lift_moqfa(moqfa_mod(2, e1)), lift_moqfa(moqfa_mod(3, e2, seed=2))
    prod = intersect_1qcfa(a1, a2)
    for k in range(1, 13):
        w = "a" * k
        p1, p2 = acceptance_oneway(a1, w)[0], acceptance_oneway(a2, w)[0]
        pa = acceptance_oneway(prod, w)[0]
        assert pa == pytest.approx(p1 * p2, abs=TOL_NORM)
        if k % 6 == 0:
            assert pa == pytest.approx(1, abs=TOL_NORM)
        else:
            assert 1 - pa >= 1 - (e1 + e2 - e1 * e2) - TOL_NORM


def test_intersect_alphabet_mismatch():
    with pytest.raises(InvalidArgument):
        intersect_1qcfa(eq_1qcfa(2), lift_dfa(dfa_mod(2)))


def test_factorize_and_partitions():
    assert factorize(360) == [(2, 3), (3, 2), (5, 1)]
    assert factorize(1) == []
    parts = tradeoff_partitions(30)
    assert len(parts) == 6
    for t in parts:
        assert t.q1 * t.q2 == 30 and math.gcd(t.q1, t.q2) == 1
    assert tradeoff_partitions(8) == []
    with pytest.raises(InvalidArgument):
        TradeoffPartition(6, {0, 1}, set())
    with pytest.raises(InvalidArgument):
        TradeoffPartition.from_moduli(12, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 400))
def test_partition_products(p):
    for t in tradeoff_partitions(p):
        assert t.q1 * t.q2 == p and math.gcd(t.q1, t.q2) == 1


def test_tradeoff_p6():
    t = TradeoffPartition.from_moduli(6, 2)
    m = tradeoff_1qcfa(t, 0.25)
    assert m.quantum_dim == moqfa_mod(2, 0.25).quantum_dim == 2
    assert m.classical_count <= 3 * (t.q2 + 1)
    for k in range(1, 25):
        pa = acceptance_oneway(m, "a" * k)[0]
        if k % 6 == 0:
            assert pa == pytest.approx(1, abs=TOL_NORM)
        else:
            assert 1 - pa >= 0.75 - TOL_NORM
