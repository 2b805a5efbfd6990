"""Exact acceptance probabilities, expected running times and reports.

One-way machines are evaluated by enumerating their (tiny) branching tree.
Looping two-way machines are split into iterations at their loop state:
one iteration is a finite absorbing Markov chain over configurations, solved
by a sparse linear system, and the iterations combine geometrically.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve

from .constructions import (
    dfa_len,
    dfa_mod,
    eq_1qcfa,
    len_2qcfa,
    mod_2qcfa,
    moqfa_mod,
    tradeoff_1qcfa,
    tradeoff_partitions,
)
from .errors import InvalidArgument, NonTermination, UnsupportedMachine
from .model import (
    ACCEPT,
    DFA,
    LOOP,
    MOQFA,
    REJECT,
    AcceptanceMode,
    Halt,
    OneWayQCFA,
    TwoWayQCFA,
    configuration_graph,
    dfa_minimize,
    dfa_run,
    initial_configuration,
    make_tape,
    step_on_tape,
)
from .quantum import TOL_NORM


# ---------------------------------------------------------------- one-way

def acceptance_oneway(m, w: str) -> tuple:
    """``(p_accept, p_reject)`` of a MOQFA or one-way machine on ``w``."""
    if isinstance(m, MOQFA):
        psi = m.initial.amps
        for a in w:
            if a not in m.alphabet:
                raise InvalidArgument(f"symbol {a!r} not in alphabet {m.alphabet}")
            psi = m.unitaries[a].entries @ psi
        psi = m.final.entries @ psi
        p_acc = float(sum(abs(psi[i]) ** 2 for i in m.accepting))
        return p_acc, 1.0 - p_acc
    if not isinstance(m, OneWayQCFA):
        raise InvalidArgument(f"{type(m).__name__} is not a one-way machine")
    tape = make_tape(m, w)
    p_acc = p_rej = 0.0
    stack = [(1.0, initial_configuration(m))]
    while stack:
        weight, c = stack.pop()
        for prob, nxt in step_on_tape(m, c, tape):
            if isinstance(nxt, Halt):
                if nxt.accept:
                    p_acc += weight * prob
                else:
                    p_rej += weight * prob
            else:
                stack.append((weight * prob, nxt))
    return p_acc, p_rej


# ---------------------------------------------------------------- looping two-way

@dataclass(frozen=True)
class IterationOutcome:
    """Probabilities of one iteration (unconditional) and its expected length.

    ``exact`` holds the same quantities as Fractions when they could be
    derived in rational arithmetic, else None.
    """

    p_accept: float
    p_reject: float
    p_continue: float
    expected_steps: float
    exact: Optional[dict] = None

    def __post_init__(self):
        total = self.p_accept + self.p_reject + self.p_continue
        if abs(total - 1.0) > TOL_NORM:
            raise InvalidArgument(f"iteration probabilities sum to {total!r}")

    @property
    def representation(self) -> str:
        return "rational" if self.exact is not None else "float"


def _absorbing_solve(graph):
    n = len(graph.nodes)
    rows, cols, vals = [], [], []
    rhs = np.zeros((n, 4))  # accept, reject, loop, step count
    for i, out in enumerate(graph.edges):
        rhs[i, 3] = 1.0
        for prob, t in out:
            if t >= 0:
                rows.append(i)
                cols.append(t)
                vals.append(prob)
            elif t == ACCEPT:
                rhs[i, 0] += prob
            elif t == REJECT:
                rhs[i, 1] += prob
            elif t == LOOP:
                rhs[i, 2] += prob
    q = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    a = (sp.identity(n, format="csr") - q).tocsc()
    sol = spsolve(a, rhs)
    sol = np.asarray(sol).reshape(n, 4)
    if not np.all(np.isfinite(sol)):
        raise NonTermination("some configurations can never leave the iteration")
    return sol[graph.start]


def iteration_analysis(m: TwoWayQCFA, w: str) -> IterationOutcome:
    """Exact outcome of one iteration of a looping machine on ``w``.

    The machine must mark its loop state and start there with the head on
    the left end-marker; an iteration ends on halting or on returning to
    that configuration. Walk phases are solved inside the same chain.
    """
    if isinstance(m, OneWayQCFA) or m.loop_state is None:
        raise UnsupportedMachine("machine does not mark a loop state")
    if m.initial_state != m.loop_state:
        raise UnsupportedMachine("loop state must be the initial state")
    graph = configuration_graph(m, w, cut_at_loop=True)
    p_acc, p_rej, p_loop, steps = (float(x) for x in _absorbing_solve(graph))
    total = p_acc + p_rej + p_loop
    if abs(total - 1.0) > 1e-8:
        raise NonTermination(f"iteration absorbs with probability {total!r} only")
    p_acc, p_rej = max(p_acc, 0.0), max(p_rej, 0.0)
    p_cont = max(1.0 - p_acc - p_rej, 0.0)
    exact = exact_iteration(m, w)
    if exact is not None:
        p_acc, p_rej, p_cont = (float(exact[k]) for k in ("p_accept", "p_reject", "p_continue"))
        steps = float(exact["expected_steps"])
    return IterationOutcome(p_acc, p_rej, p_cont, steps, exact)


# sin^2(r pi) = (1 - cos(2 r pi)) / 2 is rational exactly when 2r mod 2 has
# denominator 1, 2 or 3
_COS_PI = {Fraction(0): Fraction(1), Fraction(1): Fraction(-1),
           Fraction(1, 2): Fraction(0), Fraction(3, 2): Fraction(0),
           Fraction(1, 3): Fraction(1, 2), Fraction(5, 3): Fraction(1, 2),
           Fraction(2, 3): Fraction(-1, 2), Fraction(4, 3): Fraction(-1, 2)}


def rational_sin2(r) -> Optional[Fraction]:
    """Exact sin^2(r * pi) when it is rational, else None."""
    c = _COS_PI.get((2 * Fraction(r)) % 2)
    return None if c is None else (1 - c) / 2


def exact_iteration(m: TwoWayQCFA, w: str) -> Optional[dict]:
    """Rational per-iteration values for the L(p) machine family.

    Uses the gate tags, not floating point: after the sweep the register is
    rotated by ``n * pi_multiple * pi``; the check rejects with sin^2 of that,
    the split keeps weight ``1/ratio``. Returns None when a value is irrational
    or the machine is not of that family.
    """
    if m.params.get("family") != "mod-2qcfa":
        return None
    try:
        r = Fraction(m.gates["U_p"].gate["pi_multiple"])
        ratio = Fraction(m.gates["U_split"].gate["ratio"])
    except (KeyError, TypeError):
        return None
    n = len(w)
    make_tape(m, w)
    if n == 0:
        return {"p_accept": Fraction(0), "p_reject": Fraction(1), "p_continue": Fraction(0),
                "expected_steps": Fraction(2)}
    s2 = rational_sin2(n * r)
    if s2 is None:
        return None
    c2 = 1 - s2
    p_acc = c2 / ratio
    # sweep + first measurement; then split and check; then reset and rewind
    steps = (n + 2) + c2 * (2 + (1 - 1 / ratio) * (1 + n))
    return {"p_accept": p_acc, "p_reject": s2, "p_continue": 1 - p_acc - s2,
            "expected_steps": steps}


def geometric_totals(p_a, p_r) -> tuple:
    """Totals of the accept/reject loop with sweep rejection ``p_r`` and
    split-check acceptance ``p_a`` (the latter given that the sweep was survived).

    Returns ``(accept_total, reject_total, expected_iterations)`` where the
    reject total is ``p_r / (p_a + p_r - p_a p_r)``. Works on floats and on
    Fractions.
    """
    d = p_a + p_r - p_a * p_r
    if d <= 0:
        raise NonTermination("an iteration never halts (P_a = P_r = 0)")
    return (1 - p_r) * p_a / d, p_r / d, 1 / d


def loop_total(o: IterationOutcome) -> tuple:
    """``(p_accept_total, p_reject_total, expected_iterations)`` for ``o``."""
    def conditional(pa, pr):
        return pa / (1 - pr) if pr < 1 else 0 * pa

    if o.exact is not None:
        e = o.exact
        return geometric_totals(conditional(e["p_accept"], e["p_reject"]), e["p_reject"])
    return geometric_totals(conditional(o.p_accept, o.p_reject), o.p_reject)


def truncated_series(p_a: float, p_r: float, tol: float = 1e-12) -> tuple:
    """Direct sum of the geometric series, as an independent check."""
    q = (1 - p_a) * (1 - p_r)
    k = 1 if q == 0 else max(1, math.ceil(math.log(tol) / math.log(q)) + 1)
    i = np.arange(k)
    weights = q ** i
    return float(np.sum(weights * (1 - p_r) * p_a)), float(np.sum(weights * p_r))


def walk_absorption(n: int) -> tuple:
    """Symmetric walk on cells 0..n+1 from cell 1: ``(P[reach n+1 first], E[T])``."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    ab = np.zeros((3, n))
    ab[0, 1:] = -0.5
    ab[1, :] = 1.0
    ab[2, :-1] = -0.5
    b = np.zeros((n, 2))
    b[-1, 0] = 0.5  # boundary value at cell n+1
    b[:, 1] = 1.0
    x = solve_banded((1, 1), ab, b)
    return float(x[0, 0]), float(x[0, 1])


# ---------------------------------------------------------------- dispatch

@dataclass(frozen=True)
class Acceptance:
    """Acceptance/rejection totals and expected steps; unpacks as a 3-tuple."""

    p_accept: float
    p_reject: float
    expected_steps: float
    exact: Optional[dict] = None

    def __iter__(self):
        return iter((self.p_accept, self.p_reject, self.expected_steps))

    @property
    def representation(self) -> str:
        return "rational" if self.exact is not None else "float"


def acceptance(m, w: str) -> Acceptance:
    if isinstance(m, DFA):
        ok = dfa_run(m, w)
        return Acceptance(float(ok), float(not ok), float(len(w)),
                          {"p_accept": Fraction(int(ok)), "p_reject": Fraction(int(not ok)),
                           "expected_steps": Fraction(len(w))})
    if isinstance(m, (MOQFA, OneWayQCFA)):
        pa, pr = acceptance_oneway(m, w)
        return Acceptance(pa, pr, float(len(w) + 2))
    if isinstance(m, TwoWayQCFA):
        o = iteration_analysis(m, w)
        pa, pr, iters = loop_total(o)
        exact = None
        if o.exact is not None:
            exact = {"p_accept": pa, "p_reject": pr,
                     "expected_steps": iters * o.exact["expected_steps"],
                     "expected_iterations": iters}
        return Acceptance(float(pa), float(pr), float(iters) * o.expected_steps, exact)
    raise InvalidArgument(f"unsupported machine type {type(m).__name__}")


# ---------------------------------------------------------------- verification

@dataclass(frozen=True)
class VerificationRow:
    word: str
    p_accept: float
    p_reject: float
    expected_steps: float
    classification: str
    passed: bool
    margin: float


def _check(mode: AcceptanceMode, label: str, pa: float, pr: float) -> tuple:
    """``(passed, margin)``; margin is the slack of the mode inequality."""
    if label not in ("yes", "no"):
        return True, math.inf
    if mode.kind == "exact":
        margin = (pa if label == "yes" else pr) - 1.0
    elif mode.kind == "one-sided":
        margin = pa - 1.0 if label == "yes" else pr - (1.0 - mode.eps)
    elif mode.kind == "error":
        margin = (pa if label == "yes" else pr) - (1.0 - mode.eps)
    else:
        margin = pa - (mode.cut + mode.gap) if label == "yes" else (mode.cut - mode.gap) - pa
    return margin >= -TOL_NORM, margin


@dataclass
class VerificationReport:
    machine: str
    mode: AcceptanceMode
    rows: list = field(default_factory=list)

    COLUMNS = ("word", "length", "classification", "p_accept", "p_reject",
               "expected_steps", "margin", "pass")

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def failures(self) -> list:
        return [r for r in self.rows if not r.passed]

    @property
    def min_margin(self) -> float:
        return min((r.margin for r in self.rows), default=math.inf)

    @property
    def max_steps(self) -> float:
        return max((r.expected_steps for r in self.rows), default=0.0)

    def summary(self) -> dict:
        return {"machine": self.machine, "mode": str(self.mode), "words": len(self.rows),
                "failures": len(self.failures), "min_margin": self.min_margin,
                "max_steps": self.max_steps, "pass": self.passed}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(self.COLUMNS)
        for r in self.rows:
            wr.writerow([r.word, len(r.word), r.classification, repr(r.p_accept),
                         repr(r.p_reject), repr(r.expected_steps), repr(r.margin),
                         int(r.passed)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        rows = []
        for r in self.rows:
            d = asdict(r)
            if math.isinf(d["margin"]):
                d["margin"] = None
            rows.append(d)
        summary = self.summary()
        if math.isinf(summary["min_margin"]):
            summary["min_margin"] = None
        return {"summary": summary, "rows": rows}


def verify_mode(m, mode: AcceptanceMode, classifier: Callable[[str], str],
                words: Iterable[str], evaluate: Callable = acceptance) -> VerificationReport:
    """Check the acceptance-mode inequalities word by word.

    ``classifier`` maps a word to ``"yes"``, ``"no"`` or ``"outside"``;
    outside-promise words are reported but cannot fail.
    """
    rows = []
    for w in sorted(set(words), key=lambda s: (len(s), s)):
        pa, pr, steps = evaluate(m, w)
        label = classifier(w)
        ok, margin = _check(mode, label, pa, pr)
        rows.append(VerificationRow(w, pa, pr, steps, label, ok, margin))
    return VerificationReport(getattr(m, "name", ""), mode, rows)


# ---------------------------------------------------------------- state complexity

@dataclass(frozen=True)
class ComplexityRow:
    family: str
    parameter: int
    model: str
    quantum_states: object
    classical_states: object
    source: str
    note: str = ""


EQ_NOTE = ("quantum count is n for this construction; a count of 2n is also "
           "quoted for the same machine elsewhere")
PFA_NOTE = "lower bound, constant b unspecified in source"


def twopfa_bound(x: int, b: float) -> float:
    return (math.log2(x) / b) ** (1 / 3)


def complexity_report(family: str, params: Iterable[int], b: float = 1.0,
                      eps=Fraction(1, 4)) -> list:
    """State counts for the families ``L``, ``C``, ``EQ`` and ``tradeoff``.

    Constructed rows read counts from built machines; formula rows carry
    the evaluated lower bounds.
    """
    if b <= 0:
        raise InvalidArgument("b must be positive")
    rows = []
    for x in params:
        if family == "L":
            rows.append(ComplexityRow("L", x, "dfa", 0, dfa_minimize(dfa_mod(x)).classical_count,
                                      "constructed", "minimized"))
            q = mod_2qcfa(x, eps)
            rows.append(ComplexityRow("L", x, "2qcfa", q.quantum_dim, q.classical_count,
                                      "constructed"))
            rows.append(ComplexityRow("L", x, "2pfa", None, twopfa_bound(x, b), "formula", PFA_NOTE))
        elif family == "C":
            rows.append(ComplexityRow("C", x, "dfa", 0, dfa_minimize(dfa_len(x)).classical_count,
                                      "constructed", "minimized"))
            q = len_2qcfa(x, eps)
            rows.append(ComplexityRow("C", x, "2qcfa", q.quantum_dim, q.classical_count,
                                      "constructed"))
            rows.append(ComplexityRow("C", x, "2pfa", None, twopfa_bound(x, b), "formula", PFA_NOTE))
        elif family == "EQ":
            q = eq_1qcfa(x)
            rows.append(ComplexityRow("EQ", x, "1qcfa", q.quantum_dim, q.classical_count,
                                      "constructed", EQ_NOTE))
            rows.append(ComplexityRow("EQ", x, "dfa", None, "2^Omega(n)", "formula",
                                      "not empirically validated"))
        elif family == "tradeoff":
            for t in tradeoff_partitions(x):
                q = tradeoff_1qcfa(t, eps)
                rows.append(ComplexityRow(
                    "tradeoff", x, f"1qcfa(q1={t.q1},q2={t.q2})", q.quantum_dim,
                    q.classical_count, "constructed",
                    f"moqfa_dim={moqfa_mod(t.q1, eps).quantum_dim};"
                    f"untrimmed_classical={q.params['product_classical']}"))
        else:
            raise InvalidArgument(f"unknown family {family!r}")
    return rows


REPORT_COLUMNS = {
    "L": ("p", "dfa_states", "2qcfa_quantum", "2qcfa_classical", "2pfa_lower_bound"),
    "C": ("m", "dfa_states", "2qcfa_quantum", "2qcfa_classical", "2pfa_lower_bound"),
    "EQ": ("n", "1qcfa_quantum", "1qcfa_classical", "dfa_lower_bound"),
    "tradeoff": ("p", "q1", "q2", "quantum", "classical", "moqfa_quantum", "untrimmed_classical"),
}


def report_table(family: str, rows: list) -> list:
    """Pivot long-format rows into one record per parameter (column order fixed)."""
    out: dict = {}
    for r in rows:
        if family == "tradeoff":
            q1, q2 = (int(s.split("=")[1]) for s in r.model[6:-1].split(","))
            extra = dict(kv.split("=") for kv in r.note.split(";"))
            out[(r.parameter, q1)] = {
                "p": r.parameter, "q1": q1, "q2": q2, "quantum": r.quantum_states,
                "classical": r.classical_states, "moqfa_quantum": int(extra["moqfa_dim"]),
                "untrimmed_classical": int(extra["untrimmed_classical"])}
            continue
        rec = out.setdefault(r.parameter, {REPORT_COLUMNS[family][0]: r.parameter})
        if r.model == "dfa" and r.source == "constructed":
            rec["dfa_states"] = r.classical_states
        elif r.model == "dfa":
            rec["dfa_lower_bound"] = r.classical_states
        elif r.model == "2pfa":
            rec["2pfa_lower_bound"] = r.classical_states
        else:
            rec[f"{r.model}_quantum"] = r.quantum_states
            rec[f"{r.model}_classical"] = r.classical_states
    return list(out.values())


def report_csv(family: str, rows: list) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    cols = REPORT_COLUMNS[family]
    wr.writerow(cols)
    for rec in report_table(family, rows):
        wr.writerow([fmt_cell(rec.get(c)) for c in cols])
    if family == "EQ":
        buf.write(f"# {EQ_NOTE}\n")
    if family in ("L", "C"):
        buf.write(f"# 2pfa_lower_bound: {PFA_NOTE}\n")
    return buf.getvalue()


def fmt_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return "" if v is None else str(v)
