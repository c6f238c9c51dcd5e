"""Exact complex statevector simulation for small parameterized circuits.

Conventions (fixed for the whole package):

* amplitude ordering is little-endian: qubit 0 is the least-significant bit
  of the basis-state index,
* rotations are ``R_a(theta) = exp(-1j * theta * sigma_a / 2)``, so the
  expectation of Z after ``R_y(theta)|0>`` is ``cos(theta)``,
* observables are weighted Z-strings, i.e. diagonal in the computational
  basis, which keeps every expectation an O(2^n) dot product.

The array kernels at the bottom operate on amplitudes of shape
``(..., 2**n)`` so that batches of states can share one gate application.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import cos, sin

import numpy as np

MAX_QUBITS = 14

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


@dataclass(frozen=True)
class Rotation:
    """Single-qubit rotation exp(-i*angle*sigma_axis/2)."""

    axis: str  # 'x' | 'y' | 'z'
    qubit: int
    angle: float


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int


GateOp = Rotation | Cnot


@dataclass
class QuantumState:
    """Wavefunction of ``n_qubits`` qubits as a dense complex vector."""

    n_qubits: int
    amplitudes: np.ndarray

    def norm_sq(self) -> float:
        return float(np.real(np.vdot(self.amplitudes, self.amplitudes)))

    def copy(self) -> "QuantumState":
        return QuantumState(self.n_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class Observable:
    """Weighted sum of Z-strings: sum_k c_k * prod_{j in support_k} Z_j.

    An empty support is the identity term; its expectation on any
    normalized state is the bare coefficient.
    """

    terms: tuple[tuple[float, frozenset[int]], ...]

    @staticmethod
    def from_terms(terms) -> "Observable":
        return Observable(tuple((float(c), frozenset(s)) for c, s in terms))

    def __add__(self, other: "Observable") -> "Observable":
        return Observable(self.terms + other.terms)

    def scaled(self, factor: float) -> "Observable":
        return Observable(tuple((factor * c, s) for c, s in self.terms))


def mean_z(n_qubits: int) -> Observable:
    """Average magnetization (1/n) * sum_j Z_j; eigenvalues lie in [-1, 1]."""
    return Observable.from_terms([(1.0 / n_qubits, {j}) for j in range(n_qubits)])


def z_on(qubit: int) -> Observable:
    return Observable.from_terms([(1.0, {qubit})])


def zero_state(n_qubits: int) -> QuantumState:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(
            f"n_qubits must be between 1 and {MAX_QUBITS}, got {n_qubits}"
        )
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return QuantumState(n_qubits, amps)


def apply_gate(state: QuantumState, gate: GateOp) -> QuantumState:
    """Apply one gate, returning a new state (value semantics)."""
    n = state.n_qubits
    out = state.amplitudes.copy()
    if isinstance(gate, Rotation):
        if not 0 <= gate.qubit < n:
            raise IndexError(f"qubit {gate.qubit} out of range for {n} qubits")
        apply_rotation_inplace(out, gate.axis, gate.qubit, gate.angle)
    elif isinstance(gate, Cnot):
        if not (0 <= gate.control < n and 0 <= gate.target < n):
            raise IndexError(
                f"cnot ({gate.control},{gate.target}) out of range for {n} qubits"
            )
        if gate.control == gate.target:
            raise IndexError("cnot control and target must differ")
        apply_cnot_inplace(out, gate.control, gate.target)
    else:
        raise TypeError(f"unknown gate {gate!r}")
    return QuantumState(n, out)


def apply_circuit(state: QuantumState, gates) -> QuantumState:
    out = state.copy()
    for gate in gates:
        out = apply_gate(out, gate)
    return out


def term_eigenvalues(support: frozenset[int], n_qubits: int) -> np.ndarray:
    """Eigenvalue of a Z-string on every basis state: +1/-1 by bit parity."""
    idx = np.arange(2**n_qubits, dtype=np.int64)
    parity = np.zeros(2**n_qubits, dtype=np.int64)
    for q in support:
        if not 0 <= q < n_qubits:
            raise IndexError(f"observable qubit {q} out of range for {n_qubits}")
        parity ^= (idx >> q) & 1
    return (1 - 2 * parity).astype(float)


def observable_diagonal(obs: Observable, n_qubits: int) -> np.ndarray:
    """Full diagonal of the observable as a real vector of length 2^n."""
    diag = np.zeros(2**n_qubits)
    for coeff, support in obs.terms:
        diag += coeff * term_eigenvalues(support, n_qubits)
    return diag


def expectation(state: QuantumState, obs: Observable) -> float:
    """<state|obs|state>, exact (no sampling).

    Terms are accumulated strictly left to right so that extending an
    observable by one term changes the result by exactly one float
    addition (the defined summation order).
    """
    probs = np.abs(state.amplitudes) ** 2
    contributions = [
        coeff * float(np.dot(probs, term_eigenvalues(support, state.n_qubits)))
        for coeff, support in obs.terms
    ]
    return reduce(lambda a, b: a + b, contributions, 0.0)


# --- array kernels ----------------------------------------------------------
#
# All kernels act on amplitudes of shape (..., 2**n); leading axes are batch
# dimensions. In-place variants mutate their argument and return it.


def _qubit_axis(shape_reshaped_ndim: int, n: int, qubit: int) -> int:
    # after reshaping the last axis to [2]*n, qubit q sits at this axis
    return shape_reshaped_ndim - n + (n - 1 - qubit)


def _axis_slices(x: np.ndarray, n: int, qubit: int):
    ax = _qubit_axis(x.ndim, n, qubit)
    i0 = tuple(slice(None) if k != ax else 0 for k in range(x.ndim))
    i1 = tuple(slice(None) if k != ax else 1 for k in range(x.ndim))
    return i0, i1


def _as_qubit_view(amps: np.ndarray) -> tuple[np.ndarray, int]:
    dim = amps.shape[-1]
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise ValueError(f"amplitude axis length {dim} is not a power of two")
    if not amps.flags.c_contiguous:
        # reshape would copy and the in-place kernels would mutate the copy
        raise ValueError("amplitude array must be C-contiguous")
    return amps.reshape(amps.shape[:-1] + (2,) * n), n


def apply_rotation_inplace(amps: np.ndarray, axis: str, qubit: int, angle: float) -> np.ndarray:
    x, n = _as_qubit_view(amps)
    i0, i1 = _axis_slices(x, n, qubit)
    c, s = cos(angle / 2.0), sin(angle / 2.0)
    x0, x1 = x[i0], x[i1]
    if axis == "y":
        tmp = c * x0 - s * x1
        x[i1] = s * x0 + c * x1
        x[i0] = tmp
    elif axis == "x":
        tmp = c * x0 - 1j * s * x1
        x[i1] = -1j * s * x0 + c * x1
        x[i0] = tmp
    elif axis == "z":
        x[i0] = (c - 1j * s) * x0
        x[i1] = (c + 1j * s) * x1
    else:
        raise ValueError(f"unknown rotation axis {axis!r}")
    return amps


def apply_cnot_inplace(amps: np.ndarray, control: int, target: int) -> np.ndarray:
    x, n = _as_qubit_view(amps)
    axc = _qubit_axis(x.ndim, n, control)
    axt = _qubit_axis(x.ndim, n, target)
    i10 = tuple(
        1 if k == axc else (0 if k == axt else slice(None)) for k in range(x.ndim)
    )
    i11 = tuple(
        1 if k == axc else (1 if k == axt else slice(None)) for k in range(x.ndim)
    )
    tmp = x[i10].copy()
    x[i10] = x[i11]
    x[i11] = tmp
    return amps


def apply_pauli(amps: np.ndarray, axis: str, qubit: int) -> np.ndarray:
    """Return sigma_axis on `qubit` applied to amps (out of place)."""
    x, n = _as_qubit_view(amps)
    i0, i1 = _axis_slices(x, n, qubit)
    out = np.empty_like(x)
    if axis == "x":
        out[i0] = x[i1]
        out[i1] = x[i0]
    elif axis == "y":
        out[i0] = -1j * x[i1]
        out[i1] = 1j * x[i0]
    elif axis == "z":
        out[i0] = x[i0]
        out[i1] = -x[i1]
    else:
        raise ValueError(f"unknown pauli axis {axis!r}")
    return out.reshape(amps.shape)


def zero_amplitudes(n_qubits: int, batch: int | None = None) -> np.ndarray:
    shape = (2**n_qubits,) if batch is None else (batch, 2**n_qubits)
    amps = np.zeros(shape, dtype=complex)
    amps[..., 0] = 1.0
    return amps


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    return (
        np.cos(angle / 2.0) * np.eye(2, dtype=complex)
        - 1j * np.sin(angle / 2.0) * _PAULI[axis]
    )
