"""Seeded stochastic execution of machines.

Run ``i`` of an estimate with seed ``s`` draws its uniforms from a Philox
stream keyed by ``(s, i)``, so results do not depend on scheduling. A
branching step consumes exactly one uniform ``u``: with cumulative branch
weights ``c_1 <= ... <= c_k`` the branch taken is the first ``j`` with
``c_j > u * c_k``. Deterministic steps consume nothing. The fast path runs
the same protocol on a compiled configuration graph, so it reproduces
:func:`simulate_run` exactly.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numba
import numpy as np

from .analysis import acceptance
from .constructions import lift_moqfa
from .errors import InvalidArgument, NonTermination, UnsupportedMachine
from .model import (
    ACCEPT,
    DFA,
    LOOP,
    MOQFA,
    REJECT,
    Halt,
    OneWayQCFA,
    configuration_graph,
    dfa_run,
    initial_configuration,
    make_tape,
    step_on_tape,
)

DEFAULT_STEP_CAP = 10_000_000
_FIRST_BLOCK = 256


@dataclass(frozen=True)
class RunResult:
    outcome: str  # "accept", "reject" or "censored"
    steps: int
    iterations: int


@dataclass(frozen=True)
class Estimate:
    n_runs: int
    p_accept_hat: float
    ci_halfwidth: float
    mean_steps: float
    censored_count: int
    usable: bool = True

    @property
    def p_reject_hat(self) -> float:
        return 1.0 - self.p_accept_hat if self.usable else math.nan

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p_reject_hat"] = self.p_reject_hat
        return d


def run_stream(seed: int, i: int) -> np.random.Generator:
    """Independent uniform stream for run ``i`` of seed ``seed``."""
    if seed < 0 or i < 0:
        raise InvalidArgument("seed and run index must be nonnegative")
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) + int(i)))


def _as_runnable(m):
    if isinstance(m, MOQFA):
        return lift_moqfa(m)
    return m


def simulate_run(m, w: str, seed: int, step_cap: int = DEFAULT_STEP_CAP,
                 run_index: int = 0) -> RunResult:
    """One trajectory, stepping the machine directly."""
    if step_cap <= 0:
        raise InvalidArgument("step_cap must be positive")
    if isinstance(m, DFA):
        ok = dfa_run(m, w)
        return RunResult("accept" if ok else "reject", len(w), 1)
    m = _as_runnable(m)
    tape = make_tape(m, w)
    rng = run_stream(seed, run_index)
    c = initial_configuration(m)
    loop = m.loop_state
    iterations = 1
    steps = 0
    while steps < step_cap:
        succ = step_on_tape(m, c, tape)
        steps += 1
        if len(succ) == 1:
            nxt = succ[0][1]
        else:
            # cumulative sums in the same order as the compiled graph
            cum = np.cumsum([p for p, _ in succ])
            x = rng.random() * cum[-1]
            hit = np.flatnonzero(cum > x)
            nxt = succ[int(hit[0]) if hit.size else len(succ) - 1][1]
        if isinstance(nxt, Halt):
            return RunResult("accept" if nxt.accept else "reject", steps, iterations)
        if loop is not None and nxt.classical == loop and nxt.head == 0:
            iterations += 1
        c = nxt
    return RunResult("censored", steps, iterations)


@dataclass(frozen=True)
class CompiledChain:
    offsets: np.ndarray
    cum: np.ndarray
    targets: np.ndarray


def compile_chain(m, w: str) -> CompiledChain:
    """Configuration graph as CSR arrays; a return to the loop start maps to node 0."""
    m = _as_runnable(m)
    looping = m.loop_state is not None and m.initial_state == m.loop_state \
        and not isinstance(m, OneWayQCFA)
    g = configuration_graph(m, w, cut_at_loop=looping)
    offsets = np.zeros(len(g.nodes) + 1, dtype=np.int64)
    cum, targets = [], []
    for i, out in enumerate(g.edges):
        s = 0.0
        for p, t in out:
            s += p
            cum.append(s)
            targets.append(t)
        offsets[i + 1] = len(cum)
    return CompiledChain(offsets, np.array(cum), np.array(targets, dtype=np.int64))


@numba.njit(cache=True)
def _advance(offsets, cum, targets, u, node, steps, iters, cap):
    """Walk until halt, cap, or the uniforms run out.

    Returns (status, node, steps, iters, used) with status 1 accept,
    2 reject, 3 censored, 0 needs more uniforms.
    """
    used = 0
    while steps < cap:
        lo = offsets[node]
        hi = offsets[node + 1]
        if hi - lo == 1:
            j = lo
        else:
            if used == u.shape[0]:
                return 0, node, steps, iters, used
            x = u[used] * cum[hi - 1]
            used += 1
            j = lo
            while j < hi - 1 and not cum[j] > x:
                j += 1
        steps += 1
        t = targets[j]
        if t == ACCEPT:
            return 1, node, steps, iters, used
        if t == REJECT:
            return 2, node, steps, iters, used
        if t == LOOP:
            iters += 1
            t = 0
        node = t
    return 3, node, steps, iters, used


def run_compiled(chain: CompiledChain, seed: int, i: int, step_cap: int) -> RunResult:
    rng = run_stream(seed, i)
    node, steps, iters = 0, 0, 1
    block = _FIRST_BLOCK
    while True:
        u = rng.random(block)
        status, node, steps, iters, used = _advance(
            chain.offsets, chain.cum, chain.targets, u, node, steps, iters, step_cap)
        if status == 0:
            block *= 4
            continue
        return RunResult(("", "accept", "reject", "censored")[status], int(steps), int(iters))


def default_step_cap(m, w: str) -> int:
    """100 x the analytic expected steps when available, else 10^7."""
    try:
        steps = acceptance(m, w).expected_steps
    except (UnsupportedMachine, NonTermination):
        return DEFAULT_STEP_CAP
    if not math.isfinite(steps) or steps <= 0:
        return DEFAULT_STEP_CAP
    return max(1, math.ceil(100 * steps))


def estimate(m, w: str, n_runs: int, seed: int, step_cap=None) -> Estimate:
    """Aggregate ``n_runs`` independent runs; ``p_accept_hat`` excludes censored runs."""
    if n_runs < 1:
        raise InvalidArgument("n_runs must be at least 1")
    if step_cap is None:
        step_cap = default_step_cap(m, w)
    if isinstance(m, DFA):
        r = simulate_run(m, w, seed, step_cap)
        return _aggregate(n_runs, n_runs if r.outcome == "accept" else 0, 0,
                          float(r.steps) * n_runs)
    chain = compile_chain(m, w)
    acc = cens = 0
    total_steps = 0
    for i in range(n_runs):
        r = run_compiled(chain, seed, i, step_cap)
        total_steps += r.steps
        if r.outcome == "accept":
            acc += 1
        elif r.outcome == "censored":
            cens += 1
    return _aggregate(n_runs, acc, cens, float(total_steps))


def _aggregate(n_runs, acc, cens, total_steps) -> Estimate:
    done = n_runs - cens
    if done == 0:
        return Estimate(n_runs, math.nan, math.nan, total_steps / n_runs, cens, usable=False)
    p = acc / done
    return Estimate(n_runs, p, 3.0 * math.sqrt(p * (1 - p) / done), total_steps / n_runs, cens)
