"""Pure-state quantum registers of small dimension.

Amplitudes are stored as complex128 numpy arrays. Every object here is
immutable after construction (arrays are flagged read-only).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import InvalidArgument

TOL_NORM = 1e-9
TOL_UNITARY = 1e-9
TOL_PRUNE = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    amps: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        arr = _frozen(self.amps)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidArgument("state vector must be a non-empty 1-d array")
        if self.check:
            if not np.all(np.isfinite(arr)):
                raise InvalidArgument("state vector has non-finite amplitudes")
            norm = float(np.vdot(arr, arr).real)
            if abs(norm - 1.0) > TOL_NORM:
                raise InvalidArgument(f"state vector not normalized (|psi|^2 = {norm!r})")
        object.__setattr__(self, "amps", arr)

    @property
    def dim(self) -> int:
        return self.amps.size

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.dim == other.dim and bool(
            np.allclose(self.amps, other.amps, rtol=0, atol=TOL_NORM))

    __hash__ = None

    def __repr__(self):
        return f"StateVector({np.array2string(self.amps, precision=6)})"


def basis_state(dim: int, index: int = 0) -> StateVector:
    if not 0 <= index < dim:
        raise InvalidArgument(f"basis index {index} out of range for dim {dim}")
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return StateVector(v)


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """A unitary matrix, optionally tagged with the named gate it came from.

    ``gate`` is a JSON-compatible dict (for example
    ``{"gate": "rotation", "pi_multiple": "1/5"}``) used by the machine
    document format; it does not take part in equality.
    """

    entries: np.ndarray
    gate: Optional[dict] = None

    def __post_init__(self):
        m = _frozen(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise InvalidArgument(f"unitary must be a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidArgument("unitary has non-finite entries")
        err = unitarity_error(m)
        if err > TOL_UNITARY:
            raise InvalidArgument(f"matrix is not unitary (max |U^dag U - I| = {err:.3g})")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def apply(self, psi: StateVector) -> StateVector:
        if psi.dim != self.dim:
            raise InvalidArgument(f"dimension mismatch: unitary {self.dim}, state {psi.dim}")
        return StateVector(self.entries @ psi.amps, check=False)

    def dagger(self) -> "UnitaryOp":
        gate = None
        if self.gate is not None:
            gate = {"gate": "dagger", "of": self.gate}
        return UnitaryOp(self.entries.conj().T, gate=gate)

    def __matmul__(self, other: "UnitaryOp") -> "UnitaryOp":
        return UnitaryOp(self.entries @ other.entries)

    def __eq__(self, other):
        if not isinstance(other, UnitaryOp):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool(
            np.allclose(self.entries, other.entries, rtol=0, atol=TOL_UNITARY))

    __hash__ = None

    def __repr__(self):
        if self.gate is not None:
            return f"UnitaryOp({self.gate})"
        return f"UnitaryOp(dim={self.dim})"


def unitarity_error(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=np.complex128)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    """Measurement in the computational basis, grouped into outcomes.

    Each outcome is ``(label, indices)`` and projects onto the span of the
    listed basis states. ``pre`` is an optional unitary applied in the same
    step, right before projecting (the one-way end-marker step does this).
    """

    dim: int
    outcomes: tuple
    pre: Optional[UnitaryOp] = None

    def __post_init__(self):
        outs = tuple((int(label), frozenset(int(i) for i in idx)) for label, idx in self.outcomes)
        labels = [label for label, _ in outs]
        if len(set(labels)) != len(labels):
            raise InvalidArgument("measurement outcome labels must be distinct")
        seen: set = set()
        for label, idx in outs:
            if not idx:
                raise InvalidArgument(f"outcome {label} has an empty index set")
            if seen & idx:
                raise InvalidArgument("measurement projectors overlap")
            seen |= idx
        if seen != set(range(self.dim)):
            raise InvalidArgument("measurement projectors do not sum to the identity")
        if self.pre is not None and self.pre.dim != self.dim:
            raise InvalidArgument("pre-measurement unitary has the wrong dimension")
        object.__setattr__(self, "outcomes", outs)

    @property
    def labels(self) -> tuple:
        return tuple(label for label, _ in self.outcomes)

    def projector(self, label: int) -> np.ndarray:
        p = np.zeros((self.dim, self.dim))
        for i in dict(self.outcomes)[label]:
            p[i, i] = 1.0
        return p

    def __eq__(self, other):
        if not isinstance(other, ProjectiveMeasurement):
            return NotImplemented
        return (self.dim, self.outcomes, self.pre) == (other.dim, other.outcomes, other.pre)

    __hash__ = None


def computational_measurement(dim: int, pre: Optional[UnitaryOp] = None) -> ProjectiveMeasurement:
    return ProjectiveMeasurement(dim, tuple((i, (i,)) for i in range(dim)), pre)


def measure(m: ProjectiveMeasurement, psi: StateVector) -> list:
    """Outcome distribution of ``m`` on ``psi``.

    Returns a list of ``(label, probability, post_state)``; outcomes with
    probability below ``TOL_PRUNE`` are dropped.
    """
    if m.dim != psi.dim:
        raise InvalidArgument(f"dimension mismatch: measurement {m.dim}, state {psi.dim}")
    amps = psi.amps if m.pre is None else m.pre.entries @ psi.amps
    result = []
    for label, idx in m.outcomes:
        sel = np.fromiter(sorted(idx), dtype=np.intp)
        prob = float(np.sum(np.abs(amps[sel]) ** 2))
        if prob < TOL_PRUNE:
            continue
        post = np.zeros_like(amps)
        post[sel] = amps[sel] / math.sqrt(prob)
        result.append((label, prob, StateVector(post, check=False)))
    return result


def rotation(theta: float) -> UnitaryOp:
    """Real 2x2 rotation by ``theta`` radians."""
    if not math.isfinite(theta):
        raise InvalidArgument(f"rotation angle must be finite, got {theta!r}")
    c, s = math.cos(theta), math.sin(theta)
    return UnitaryOp(np.array([[c, -s], [s, c]]), gate={"gate": "rotation", "theta": float(theta)})


def pi_rotation(multiple) -> UnitaryOp:
    """Rotation by ``multiple * pi`` with the rational multiple kept for exact work."""
    frac = Fraction(multiple)
    op = rotation(math.pi * frac.numerator / frac.denominator)
    return UnitaryOp(op.entries, gate={"gate": "rotation", "pi_multiple": str(frac)})


def amplitude_split(ratio) -> UnitaryOp:
    """Rotation whose first column is ``(1/sqrt(r), sqrt(r-1)/sqrt(r))``.

    Applied to ``|0>`` it leaves weight exactly ``1/r`` on ``|0>``. ``ratio``
    is kept as a Fraction in the gate tag.
    """
    r = Fraction(ratio)
    if r < 1:
        raise InvalidArgument(f"split ratio must be >= 1, got {r}")
    a = 1.0 / math.sqrt(r)
    b = math.sqrt(r - 1) / math.sqrt(r)
    return UnitaryOp(np.array([[a, -b], [b, a]]), gate={"gate": "split", "ratio": str(r)})


def identity(dim: int) -> UnitaryOp:
    return UnitaryOp(np.eye(dim), gate={"gate": "identity", "dim": dim})


def phase_flip(dim: int, index: int, bit: int) -> UnitaryOp:
    """Diagonal unitary multiplying basis state ``index`` by ``(-1)**bit``."""
    d = np.ones(dim)
    d[index] = (-1) ** bit
    return UnitaryOp(np.diag(d), gate={"gate": "phase_flip", "dim": dim, "index": index, "bit": bit})


def complete_unitary_from_first_column(v: StateVector) -> UnitaryOp:
    """Deterministic unitary whose first column is ``v``.

    Householder reflection sending e1 to ``v`` after the phase of ``v[0]``
    is factored out; ``v == e1`` gives the identity.
    """
    if not isinstance(v, StateVector):
        v = StateVector(v)
    amps = v.amps
    norm = float(np.vdot(amps, amps).real)
    if abs(norm - 1.0) > TOL_NORM:
        raise InvalidArgument(f"column is not normalized (|v|^2 = {norm!r})")
    dim = amps.size
    phase = amps[0] / abs(amps[0]) if abs(amps[0]) > TOL_NORM else 1.0 + 0j
    u = amps * np.conj(phase)
    w = -u.copy()
    w[0] += 1.0
    wn = float(np.vdot(w, w).real)
    if wn < TOL_NORM ** 2:
        h = np.eye(dim, dtype=np.complex128)
    else:
        h = np.eye(dim, dtype=np.complex128) - 2.0 * np.outer(w, w.conj()) / wn
    h[:, 0] *= phase
    gate = {"gate": "householder", "column": [[float(z.real), float(z.imag)] for z in amps]}
    return UnitaryOp(h, gate=gate)


def kron(a: UnitaryOp, b: UnitaryOp) -> UnitaryOp:
    gate = None
    if a.gate is not None and b.gate is not None:
        gate = {"gate": "kron", "of": [a.gate, b.gate]}
    return UnitaryOp(np.kron(a.entries, b.entries), gate=gate)


def global_phase_key(amps: np.ndarray, decimals: int = 10) -> tuple:
    """Hashable key identifying a state up to global phase and rounding noise."""
    mags = np.abs(amps)
    nz = np.flatnonzero(mags > 1e-9)
    if nz.size:
        amps = amps * (np.conj(amps[nz[0]]) / mags[nz[0]])
    re = np.round(amps.real, decimals) + 0.0
    im = np.round(amps.imag, decimals) + 0.0
    return tuple(re.tolist()) + tuple(im.tolist())


def canonical_phase(psi: StateVector) -> StateVector:
    amps = psi.amps
    mags = np.abs(amps)
    nz = np.flatnonzero(mags > 1e-9)
    if nz.size == 0:
        return psi
    return StateVector(amps * (np.conj(amps[nz[0]]) / mags[nz[0]]), check=False)


def block_rotation(pi_multiples) -> UnitaryOp:
    """Direct sum of 2x2 rotations, block j rotating by ``pi_multiples[j] * pi``."""
    fracs = [Fraction(f) for f in pi_multiples]
    k = len(fracs)
    m = np.zeros((2 * k, 2 * k))
    for j, f in enumerate(fracs):
        t = math.pi * f.numerator / f.denominator
        c, s = math.cos(t), math.sin(t)
        m[2 * j:2 * j + 2, 2 * j:2 * j + 2] = [[c, -s], [s, c]]
    return UnitaryOp(m, gate={"gate": "block_rotation", "pi_multiples": [str(f) for f in fracs]})
