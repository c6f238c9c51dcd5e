"""Quantum universal function approximators.

A model is: one feature-map register per input variable (Chebyshev or
Fourier tower), a hardware-efficient variational ansatz over all qubits,
and a Z-diagonal observable readout. Inputs are mapped into the feature
map's domain by a per-variable affine prescale; all derivatives elsewhere
in the package are taken with respect to the *original* coordinates by
chain-ruling through this prescale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import acos, pi, sqrt

import numpy as np

from .statevector import (
    Cnot,
    GateOp,
    Observable,
    Rotation,
    apply_cnot_inplace,
    apply_rotation_inplace,
    mean_z,
    observable_diagonal,
    zero_amplitudes,
    MAX_QUBITS,
)

CHEBYSHEV = "chebyshev_tower"
FOURIER = "fourier_tower"

# feature inputs are prescaled into +-PRESCALE_MARGIN, not +-1, because the
# arccos chain factor diverges at the domain edge
PRESCALE_MARGIN = 0.95


@dataclass(frozen=True)
class FeatureMapSpec:
    """Tower feature map on a contiguous register.

    Register-local qubit j (1-based) encodes angle j*arccos(s) for the
    Chebyshev tower or j*s for the Fourier tower.
    """

    nonlinearity: str
    n_qubits: int
    axis: str = "y"

    def __post_init__(self):
        if self.nonlinearity not in (CHEBYSHEV, FOURIER):
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.n_qubits < 1:
            raise ValueError("feature register needs at least one qubit")

    def angles(self, s: float) -> list[float]:
        if self.nonlinearity == CHEBYSHEV:
            if not -1.0 < s < 1.0:
                raise ValueError(
                    f"chebyshev feature input must satisfy |s| < 1, got {s}"
                )
            base = acos(s)
        else:
            base = s
        return [(j + 1) * base for j in range(self.n_qubits)]


@dataclass(frozen=True)
class AnsatzSpec:
    """Hardware-efficient ansatz: per layer Ry then Rz on every qubit and a
    linear CNOT ladder, plus one final Ry layer.

    Angle order is layer-major and qubit-minor with Ry before Rz, so the
    parameter count is 2*n*depth + n.
    """

    n_qubits: int
    depth: int

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("ansatz depth must be >= 0")

    @property
    def n_params(self) -> int:
        return 2 * self.n_qubits * self.depth + self.n_qubits

    def operations(self) -> tuple[tuple, ...]:
        """Gate program as ('ry'|'rz', qubit, param_index) or ('cnot', c, t)."""
        return _ansatz_operations(self.n_qubits, self.depth)


@lru_cache(maxsize=None)
def _ansatz_operations(n: int, depth: int) -> tuple[tuple, ...]:
    ops: list[tuple] = []
    idx = 0
    for _ in range(depth):
        for q in range(n):
            ops.append(("ry", q, idx))
            idx += 1
        for q in range(n):
            ops.append(("rz", q, idx))
            idx += 1
        for q in range(n - 1):
            ops.append(("cnot", q, q + 1))
    for q in range(n):
        ops.append(("ry", q, idx))
        idx += 1
    return tuple(ops)


@dataclass(frozen=True)
class Prescale:
    """Affine map s(x) = slope*x + offset into the feature-map domain."""

    slope: float
    offset: float

    def __post_init__(self):
        if self.slope == 0.0:
            raise ValueError("prescale slope must be nonzero")

    def __call__(self, x):
        return self.slope * x + self.offset

    @staticmethod
    def identity() -> "Prescale":
        return Prescale(1.0, 0.0)

    @staticmethod
    def from_domain(lo: float, hi: float, margin: float = PRESCALE_MARGIN) -> "Prescale":
        if not hi > lo:
            raise ValueError(f"empty domain [{lo}, {hi}]")
        slope = 2.0 * margin / (hi - lo)
        return Prescale(slope, -margin - slope * lo)


@dataclass(frozen=True)
class UfaModel:
    """Feature registers + ansatz + observable + input prescales."""

    registers: tuple[tuple[str, FeatureMapSpec], ...]
    ansatz: AnsatzSpec
    observable: Observable
    prescale: dict[str, Prescale] = field(default_factory=dict)

    def __post_init__(self):
        n = sum(spec.n_qubits for _, spec in self.registers)
        if n != self.ansatz.n_qubits:
            raise ValueError(
                f"registers cover {n} qubits but ansatz has {self.ansatz.n_qubits}"
            )
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit cap")
        names = [v for v, _ in self.registers]
        if len(set(names)) != len(names):
            raise ValueError("duplicate register variable names")

    @property
    def n_qubits(self) -> int:
        return self.ansatz.n_qubits

    @property
    def input_vars(self) -> list[str]:
        return [v for v, _ in self.registers]

    @property
    def n_params(self) -> int:
        return self.ansatz.n_params

    def register_qubits(self, var: str) -> range:
        start = 0
        for name, spec in self.registers:
            if name == var:
                return range(start, start + spec.n_qubits)
            start += spec.n_qubits
        raise KeyError(f"model has no input variable {var!r}")

    def feature_spec(self, var: str) -> FeatureMapSpec:
        for name, spec in self.registers:
            if name == var:
                return spec
        raise KeyError(f"model has no input variable {var!r}")

    def prescale_for(self, var: str) -> Prescale:
        return self.prescale.get(var, Prescale.identity())

    def check_theta(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(
                f"theta has shape {theta.shape}, expected ({self.n_params},)"
            )
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta contains non-finite values")
        return theta


def make_ufa(
    variables,
    qubits,
    depth: int | None = None,
    nonlinearity: str = CHEBYSHEV,
    observable: Observable | None = None,
    domains: dict[str, tuple[float, float]] | None = None,
) -> UfaModel:
    """Convenience constructor.

    `qubits` is either one int shared by all registers or a per-variable
    mapping; `domains` gives (lo, hi) per variable for the prescale and
    defaults to the identity map.
    """
    variables = list(variables)
    if isinstance(qubits, int):
        qubits = {v: qubits for v in variables}
    registers = tuple(
        (v, FeatureMapSpec(nonlinearity, qubits[v])) for v in variables
    )
    n = sum(qubits[v] for v in variables)
    if depth is None:
        depth = n
    prescale = {}
    if domains:
        for v, (lo, hi) in domains.items():
            prescale[v] = Prescale.from_domain(lo, hi)
    obs = observable if observable is not None else mean_z(n)
    return UfaModel(registers, AnsatzSpec(n, depth), obs, prescale)


def feature_angles(model: UfaModel, point: dict[str, float]) -> list[tuple[int, str, float]]:
    """(qubit, axis, angle) for every feature rotation at this input point."""
    out = []
    start = 0
    for var, spec in model.registers:
        if var not in point:
            raise KeyError(f"point is missing input variable {var!r}")
        s = model.prescale_for(var)(float(point[var]))
        for j, angle in enumerate(spec.angles(s)):
            out.append((start + j, spec.axis, angle))
        start += spec.n_qubits
    return out


def build_feature_circuit(model: UfaModel, point: dict[str, float]) -> list[GateOp]:
    return [Rotation(axis, q, angle) for q, axis, angle in feature_angles(model, point)]


def ansatz_circuit(model: UfaModel, theta: np.ndarray) -> list[GateOp]:
    theta = model.check_theta(theta)
    gates: list[GateOp] = []
    for op in model.ansatz.operations():
        if op[0] == "cnot":
            gates.append(Cnot(op[1], op[2]))
        else:
            gates.append(Rotation(op[0][1], op[1], float(theta[op[2]])))
    return gates


# --- evaluation -------------------------------------------------------------


def feature_state(model: UfaModel, point: dict[str, float], shifts=None) -> np.ndarray:
    """Statevector after the feature map, optionally with shifted angles.

    `shifts` maps global qubit index -> additive angle shift (used by the
    parameter-shift rule).
    """
    amps = zero_amplitudes(model.n_qubits)
    for q, axis, angle in feature_angles(model, point):
        if shifts:
            angle = angle + shifts.get(q, 0.0)
        apply_rotation_inplace(amps, axis, q, angle)
    return amps


def apply_ansatz_inplace(amps: np.ndarray, model: UfaModel, theta: np.ndarray) -> np.ndarray:
    for op in model.ansatz.operations():
        if op[0] == "cnot":
            apply_cnot_inplace(amps, op[1], op[2])
        else:
            apply_rotation_inplace(amps, op[0][1], op[1], float(theta[op[2]]))
    return amps


@lru_cache(maxsize=64)
def _cached_diagonal(obs: Observable, n: int) -> np.ndarray:
    return observable_diagonal(obs, n)


def model_diagonal(model: UfaModel) -> np.ndarray:
    return _cached_diagonal(model.observable, model.n_qubits)


def evaluate(model: UfaModel, point: dict[str, float], theta: np.ndarray) -> float:
    """<0| U_phi^+ U_theta^+ C U_theta U_phi |0>, computed exactly."""
    theta = model.check_theta(theta)
    amps = feature_state(model, point)
    apply_ansatz_inplace(amps, model, theta)
    diag = model_diagonal(model)
    return float(np.real(np.vdot(amps, diag * amps)))


def evaluate_batch(model: UfaModel, points, theta: np.ndarray) -> list[float]:
    theta = model.check_theta(theta)
    out = []
    for i, point in enumerate(points):
        try:
            out.append(evaluate(model, point, theta))
        except (ValueError, KeyError) as exc:
            raise type(exc)(f"point {i}: {exc}") from exc
    return out


def random_theta(model: UfaModel, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 2.0 * pi, size=model.n_params)


def observable_bound(model: UfaModel) -> float:
    """max |eigenvalue| of the readout observable."""
    return float(np.max(np.abs(model_diagonal(model))))


# --- chain factors for input derivatives ------------------------------------


def tower_chain_factors(
    spec: FeatureMapSpec, prescale: Prescale, x: float
) -> tuple[np.ndarray, np.ndarray]:
    """d(phi_j)/dx and d2(phi_j)/dx2 at original coordinate x, per register
    qubit (1-based tower index j)."""
    a = prescale.slope
    s = prescale(x)
    j = np.arange(1, spec.n_qubits + 1, dtype=float)
    if spec.nonlinearity == CHEBYSHEV:
        if not -1.0 < s < 1.0:
            raise ValueError(f"chebyshev feature input must satisfy |s| < 1, got {s}")
        d1 = -1.0 / sqrt(1.0 - s * s)
        d2 = -s / (1.0 - s * s) ** 1.5
        return j * d1 * a, j * d2 * a * a
    return j * a, np.zeros(spec.n_qubits)
