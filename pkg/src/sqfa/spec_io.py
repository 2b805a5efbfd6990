"""JSON-compatible machine documents.

Every document carries ``"format_version": 1`` and a ``"model"`` field
(``dfa``, ``moqfa``, ``1qcfa`` or ``2qcfa``). Unitaries are stored as named
parametric gates when the factory tagged them, otherwise as explicit
matrices of ``[re, im]`` pairs. Loading re-runs every invariant check and
reports failures as :class:`SpecError` with a dotted location.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import IllFormedMachine, InvalidArgument, SpecError
from .model import DFA, MOQFA, OneWayQCFA, TwoWayQCFA
from .quantum import (
    ProjectiveMeasurement,
    StateVector,
    UnitaryOp,
    amplitude_split,
    block_rotation,
    complete_unitary_from_first_column,
    identity,
    kron,
    phase_flip,
    pi_rotation,
    rotation,
)

FORMAT_VERSION = 1
MODELS = ("dfa", "moqfa", "1qcfa", "2qcfa")


# ---------------------------------------------------------------- saving

def _pairs(a) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(a).ravel()]


def _matrix_doc(m) -> list:
    return [_pairs(row) for row in np.asarray(m)]


def gate_doc(u: UnitaryOp) -> dict:
    if u.gate is not None:
        return dict(u.gate)
    return {"gate": "matrix", "entries": _matrix_doc(u.entries)}


def _action_doc(g) -> dict:
    if isinstance(g, UnitaryOp):
        return {"kind": "unitary", **gate_doc(g)}
    return {
        "kind": "measurement",
        "dim": g.dim,
        "outcomes": [[label, sorted(idx)] for label, idx in g.outcomes],
        "pre": None if g.pre is None else gate_doc(g.pre),
    }


def spec_save(m) -> dict:
    """Structured document for a DFA, MOQFA, OneWayQCFA or TwoWayQCFA."""
    if isinstance(m, DFA):
        return {
            "format_version": FORMAT_VERSION,
            "model": "dfa",
            "name": m.name,
            "states": list(m.states),
            "alphabet": list(m.alphabet),
            "transitions": [[s, a, m.transition[(s, a)]] for s in m.states for a in m.alphabet],
            "start": m.start,
            "accepting": sorted(m.accepting),
        }
    if isinstance(m, MOQFA):
        return {
            "format_version": FORMAT_VERSION,
            "model": "moqfa",
            "name": m.name,
            "params": m.params,
            "quantum_dim": m.quantum_dim,
            "alphabet": list(m.alphabet),
            "gates": {a: gate_doc(m.unitaries[a]) for a in m.alphabet},
            "initial": _pairs(m.initial.amps),
            "final": gate_doc(m.final),
            "accepting": sorted(m.accepting),
        }
    if isinstance(m, TwoWayQCFA):
        delta = [[s, sym, None, nxt, move] for (s, sym), (nxt, move) in m.delta_unitary.items()]
        delta += [[s, sym, label, nxt, move]
                  for (s, sym, label), (nxt, move) in m.delta_measure.items()]
        return {
            "format_version": FORMAT_VERSION,
            "model": "1qcfa" if isinstance(m, OneWayQCFA) else "2qcfa",
            "name": m.name,
            "params": m.params,
            "quantum_dim": m.quantum_dim,
            "classical_states": list(m.states),
            "alphabet": list(m.alphabet),
            "gates": {name: _action_doc(g) for name, g in m.gates.items()},
            "theta": [[s, sym, g] for (s, sym), g in m.theta.items()],
            "delta": delta,
            "initial": {"quantum": _pairs(m.initial_quantum.amps), "classical": m.initial_state},
            "accepting": sorted(m.accepting),
            "rejecting": sorted(m.rejecting),
            "loop_state": m.loop_state,
        }
    raise InvalidArgument(f"cannot serialize {type(m).__name__}")


def dumps(m) -> str:
    return json.dumps(spec_save(m), indent=1) + "\n"


def save_file(m, path) -> None:
    Path(path).write_text(dumps(m))


# ---------------------------------------------------------------- loading

def _require(doc, key, where, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise SpecError(where, f"missing field {key!r}")
    v = doc[key]
    if kind is not None and not isinstance(v, kind):
        raise SpecError(f"{where}.{key}", f"expected {kind.__name__}, got {type(v).__name__}")
    return v


def _complex_vec(data, where) -> np.ndarray:
    try:
        arr = np.array([complex(float(re), float(im)) for re, im in data], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise SpecError(where, f"expected a list of [re, im] pairs ({exc})") from None
    return arr


def _frac(v, where) -> Fraction:
    try:
        return Fraction(v)
    except (TypeError, ValueError, ZeroDivisionError):
        raise SpecError(where, f"bad rational {v!r}") from None


def gate_from_doc(doc, where="gate") -> UnitaryOp:
    kind = _require(doc, "gate", where, str)
    try:
        if kind == "rotation":
            if "pi_multiple" in doc:
                return pi_rotation(_frac(doc["pi_multiple"], f"{where}.pi_multiple"))
            theta = float(_require(doc, "theta", where))
            if not math.isfinite(theta):
                raise SpecError(f"{where}.theta", "angle must be finite")
            return rotation(theta)
        if kind == "split":
            return amplitude_split(_frac(_require(doc, "ratio", where), f"{where}.ratio"))
        if kind == "identity":
            return identity(int(_require(doc, "dim", where)))
        if kind == "phase_flip":
            return phase_flip(int(_require(doc, "dim", where)), int(_require(doc, "index", where)),
                              int(_require(doc, "bit", where)))
        if kind == "householder":
            col = _complex_vec(_require(doc, "column", where, list), f"{where}.column")
            return complete_unitary_from_first_column(StateVector(col))
        if kind == "dagger":
            return gate_from_doc(_require(doc, "of", where, dict), f"{where}.of").dagger()
        if kind == "kron":
            parts = _require(doc, "of", where, list)
            if len(parts) != 2:
                raise SpecError(f"{where}.of", "kron needs exactly two factors")
            return kron(gate_from_doc(parts[0], f"{where}.of[0]"),
                        gate_from_doc(parts[1], f"{where}.of[1]"))
        if kind == "block_rotation":
            mult = _require(doc, "pi_multiples", where, list)
            return block_rotation([_frac(x, f"{where}.pi_multiples") for x in mult])
        if kind == "matrix":
            rows = _require(doc, "entries", where, list)
            m = np.array([_complex_vec(r, f"{where}.entries") for r in rows])
            return UnitaryOp(m)
    except InvalidArgument as exc:
        raise SpecError(where, str(exc)) from None
    raise SpecError(f"{where}.gate", f"unknown gate kind {kind!r}")


def _action_from_doc(doc, where):
    kind = _require(doc, "kind", where, str)
    if kind == "unitary":
        return gate_from_doc(doc, where)
    if kind != "measurement":
        raise SpecError(f"{where}.kind", f"unknown action kind {kind!r}")
    dim = _require(doc, "dim", where, int)
    outcomes = _require(doc, "outcomes", where, list)
    pre_doc = doc.get("pre")
    pre = None if pre_doc is None else gate_from_doc(pre_doc, f"{where}.pre")
    try:
        return ProjectiveMeasurement(dim, tuple((label, idx) for label, idx in outcomes), pre)
    except (InvalidArgument, TypeError, ValueError) as exc:
        raise SpecError(f"{where}.outcomes", str(exc)) from None


def spec_load(doc: dict):
    """Inverse of :func:`spec_save`."""
    if not isinstance(doc, dict):
        raise SpecError("$", "document must be an object")
    version = _require(doc, "format_version", "$")
    if version != FORMAT_VERSION:
        raise SpecError("format_version", f"unsupported version {version!r}")
    model = _require(doc, "model", "$", str)
    if model not in MODELS:
        raise SpecError("model", f"unknown model {model!r}")
    try:
        if model == "dfa":
            return _load_dfa(doc)
        if model == "moqfa":
            return _load_moqfa(doc)
        return _load_qcfa(doc, OneWayQCFA if model == "1qcfa" else TwoWayQCFA)
    except SpecError:
        raise
    except IllFormedMachine as exc:
        raise SpecError("machine", str(exc)) from None
    except InvalidArgument as exc:
        raise SpecError("machine", str(exc)) from None
    except (TypeError, ValueError, KeyError) as exc:
        raise SpecError("$", f"malformed document ({exc!r})") from None


def _load_dfa(doc) -> DFA:
    trans = {}
    for i, entry in enumerate(_require(doc, "transitions", "$", list)):
        if len(entry) != 3:
            raise SpecError(f"transitions[{i}]", "expected [state, symbol, target]")
        s, a, t = entry
        trans[(s, a)] = t
    return DFA(tuple(_require(doc, "states", "$", list)), tuple(_require(doc, "alphabet", "$", list)),
               trans, _require(doc, "start", "$"), frozenset(_require(doc, "accepting", "$", list)),
               name=doc.get("name", ""))


def _load_moqfa(doc) -> MOQFA:
    gates = _require(doc, "gates", "$", dict)
    unitaries = {a: gate_from_doc(g, f"gates.{a}") for a, g in gates.items()}
    try:
        init = StateVector(_complex_vec(_require(doc, "initial", "$", list), "initial"))
    except InvalidArgument as exc:
        raise SpecError("initial", str(exc)) from None
    return MOQFA(
        quantum_dim=_require(doc, "quantum_dim", "$", int),
        alphabet=tuple(_require(doc, "alphabet", "$", list)), unitaries=unitaries, initial=init,
        final=gate_from_doc(_require(doc, "final", "$", dict), "final"),
        accepting=frozenset(_require(doc, "accepting", "$", list)),
        name=doc.get("name", ""), params=doc.get("params") or {},
    )


def _load_qcfa(doc, cls):
    gates = {name: _action_from_doc(g, f"gates.{name}")
             for name, g in _require(doc, "gates", "$", dict).items()}
    theta = {}
    for i, entry in enumerate(_require(doc, "theta", "$", list)):
        if len(entry) != 3:
            raise SpecError(f"theta[{i}]", "expected [state, symbol, gate]")
        s, sym, g = entry
        if g not in gates:
            raise SpecError(f"theta[{i}]", f"unknown gate {g!r}")
        theta[(s, sym)] = g
    du, dm = {}, {}
    for i, entry in enumerate(_require(doc, "delta", "$", list)):
        if len(entry) != 5:
            raise SpecError(f"delta[{i}]", "expected [state, symbol, outcome|null, target, move]")
        s, sym, label, nxt, move = entry
        if label is None:
            du[(s, sym)] = (nxt, move)
        else:
            dm[(s, sym, label)] = (nxt, move)
    init = _require(doc, "initial", "$", dict)
    try:
        psi = StateVector(_complex_vec(_require(init, "quantum", "initial", list), "initial.quantum"))
    except InvalidArgument as exc:
        raise SpecError("initial.quantum", str(exc)) from None
    return cls(
        quantum_dim=_require(doc, "quantum_dim", "$", int),
        states=tuple(_require(doc, "classical_states", "$", list)),
        alphabet=tuple(_require(doc, "alphabet", "$", list)), gates=gates, theta=theta,
        delta_unitary=du, delta_measure=dm, initial_quantum=psi,
        initial_state=_require(init, "classical", "initial"),
        accepting=frozenset(_require(doc, "accepting", "$", list)),
        rejecting=frozenset(_require(doc, "rejecting", "$", list)),
        loop_state=doc.get("loop_state"), name=doc.get("name", ""),
        params=doc.get("params") or {},
    )


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno}", f"not valid JSON: {exc.msg}") from None
    return spec_load(doc)


def load_file(path):
    return loads(Path(path).read_text())
