"""Analytic derivatives of quantum UFAs.

Two interchangeable modes:

* ``shift`` — the parameter-shift rule, evaluated by re-simulating the
  circuit with shifted angles. Each shifted rotation enters through an
  involutory generator, so the rule is exact. This is the reference
  semantics (it is what hardware would run).
* ``adjoint`` — a single-simulation analytic path (see `engine`), required
  to match shift mode to 1e-9 and used for training.

First derivatives w.r.t. an input x follow
``du/dx = sum_j phi_j'(x) * D_j`` with
``D_j = (f(phi_j + pi/2) - f(phi_j - pi/2)) / 2``; second derivatives add
the diagonal +-pi shift, the four-term +-pi/2 cross shift and the
``phi_j''`` chain term. All chain factors are w.r.t. the *original*
coordinates (prescale included).
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from math import pi

import numpy as np

from . import engine
from .qnn import (
    UfaModel,
    apply_ansatz_inplace,
    feature_state,
    model_diagonal,
    tower_chain_factors,
)

_MODES = ("shift", "adjoint")


@dataclass
class _EvalCounter:
    count: int = 0


_counters: list[_EvalCounter] = []


@contextlib.contextmanager
def count_circuit_evals():
    """Context manager counting full circuit simulations (shift mode)."""
    counter = _EvalCounter()
    _counters.append(counter)
    try:
        yield counter
    finally:
        _counters.remove(counter)


def _expect_shifted(model: UfaModel, point, theta, shifts=None) -> float:
    """One full circuit simulation with optional feature-angle shifts."""
    for c in _counters:
        c.count += 1
    amps = feature_state(model, point, shifts)
    apply_ansatz_inplace(amps, model, theta)
    diag = model_diagonal(model)
    return float(np.real(np.vdot(amps, diag * amps)))


@dataclass(frozen=True)
class DerivativeRequest:
    """Validated derivative order map; mixed input derivatives are not
    supported (no library here needs them)."""

    orders: tuple[tuple[str, int], ...]

    @staticmethod
    def single(var: str, order: int) -> "DerivativeRequest":
        return DerivativeRequest(((var, order),))

    def __post_init__(self):
        total = 0
        for var, order in self.orders:
            if order not in (0, 1, 2):
                raise ValueError(f"unsupported derivative order {order} for {var!r}")
            total += order
        if total > 2:
            raise ValueError("total derivative order must be <= 2")
        active = [v for v, o in self.orders if o > 0]
        if len(active) > 1:
            raise ValueError("mixed input derivatives are not supported")


@dataclass
class ShiftPlan:
    """Linear combination of shifted-circuit expectations.

    Evaluating sum_k coeff_k * f(feature angles + shifts_k) reproduces the
    requested input derivative exactly.
    """

    entries: list[tuple[float, dict[int, float]]] = field(default_factory=list)

    def add(self, coeff: float, shifts: dict[int, float]):
        self.entries.append((coeff, dict(shifts)))

    def merged(self) -> "ShiftPlan":
        acc: dict[tuple, float] = {}
        for coeff, shifts in self.entries:
            key = tuple(sorted(shifts.items()))
            acc[key] = acc.get(key, 0.0) + coeff
        out = ShiftPlan()
        for key, coeff in acc.items():
            if coeff != 0.0:
                out.add(coeff, dict(key))
        return out

    def evaluate(self, model: UfaModel, point, theta) -> float:
        return sum(
            coeff * _expect_shifted(model, point, theta, shifts)
            for coeff, shifts in self.entries
        )


def build_shift_plan(model: UfaModel, point, var: str, order: int) -> ShiftPlan:
    """Parameter-shift plan for d^order u / d var^order at `point`."""
    if order not in (1, 2):
        raise ValueError(f"unsupported derivative order {order}")
    spec = model.feature_spec(var)
    qubits = list(model.register_qubits(var))
    phi1, phi2 = tower_chain_factors(spec, model.prescale_for(var), float(point[var]))
    plan = ShiftPlan()
    if order == 1:
        for j, q in enumerate(qubits):
            plan.add(0.5 * phi1[j], {q: +pi / 2})
            plan.add(-0.5 * phi1[j], {q: -pi / 2})
        return plan.merged()
    for j, q in enumerate(qubits):
        # chain term phi'' * D_j
        plan.add(0.5 * phi2[j], {q: +pi / 2})
        plan.add(-0.5 * phi2[j], {q: -pi / 2})
        # diagonal second shift: (f(+pi) + f(-pi) - 2 f) / 4
        plan.add(0.25 * phi1[j] ** 2, {q: +pi})
        plan.add(0.25 * phi1[j] ** 2, {q: -pi})
        plan.add(-0.5 * phi1[j] ** 2, {})
    for j in range(len(qubits)):
        for k in range(j + 1, len(qubits)):
            qj, qk = qubits[j], qubits[k]
            c = 2.0 * phi1[j] * phi1[k] * 0.25
            plan.add(c, {qj: +pi / 2, qk: +pi / 2})
            plan.add(-c, {qj: +pi / 2, qk: -pi / 2})
            plan.add(-c, {qj: -pi / 2, qk: +pi / 2})
            plan.add(c, {qj: -pi / 2, qk: -pi / 2})
    return plan.merged()


def _single_profile(model, point, theta, requests):
    pts = engine.points_array([point], model.input_vars)
    return engine.build_profile(model, theta, pts, requests)


def d_input(model: UfaModel, point, theta, var: str, order: int, mode: str = "shift") -> float:
    """Exact d^order u / d var^order at `point` w.r.t. the original coordinate."""
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}")
    DerivativeRequest.single(var, order)
    theta = model.check_theta(theta)
    if mode == "shift":
        return build_shift_plan(model, point, var, order).evaluate(model, point, theta)
    prof = _single_profile(model, point, theta, [(var, order)])
    return float(prof.derivs[(var, order)][0])


def grad_theta(model: UfaModel, point, theta, mode: str = "shift") -> np.ndarray:
    """du/dtheta_k for every ansatz angle."""
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}")
    theta = model.check_theta(theta)
    if mode == "adjoint":
        prof = _single_profile(model, point, theta, [])
        vgrad, _ = prof.grad_theta_quantities()
        return vgrad[0]
    grad = np.empty(model.n_params)
    for k in range(model.n_params):
        tp = theta.copy()
        tp[k] += pi / 2
        tm = theta.copy()
        tm[k] -= pi / 2
        grad[k] = 0.5 * (
            _expect_shifted(model, point, tp) - _expect_shifted(model, point, tm)
        )
    return grad


def grad_theta_of_d_input(
    model: UfaModel, point, theta, var: str, order: int, mode: str = "shift"
) -> np.ndarray:
    """Theta-gradient of the input derivative d^order u / d var^order."""
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}")
    DerivativeRequest.single(var, order)
    theta = model.check_theta(theta)
    if mode == "adjoint":
        prof = _single_profile(model, point, theta, [(var, order)])
        _, dgrads = prof.grad_theta_quantities()
        return dgrads[(var, order)][0]
    plan = build_shift_plan(model, point, var, order)
    grad = np.zeros(model.n_params)
    for coeff, shifts in plan.entries:
        for k in range(model.n_params):
            tp = theta.copy()
            tp[k] += pi / 2
            tm = theta.copy()
            tm[k] -= pi / 2
            grad[k] += coeff * 0.5 * (
                _expect_shifted(model, point, tp, shifts)
                - _expect_shifted(model, point, tm, shifts)
            )
    return grad


def adjoint_evaluate_all(model: UfaModel, point, theta, requests):
    """Value, requested input derivatives, and theta-gradients of all of
    them, from one simulation pass.

    `requests` is an iterable of (var, order). Returns
    (value, {(var, order): derivative}, {'value' | (var, order): gradient}).
    """
    theta = model.check_theta(theta)
    requests = [tuple(r) for r in requests]
    for var, order in requests:
        DerivativeRequest.single(var, order)
    prof = _single_profile(model, point, theta, requests)
    vgrad, dgrads = prof.grad_theta_quantities()
    value = float(prof.value[0])
    derivs = {k: float(prof.derivs[k][0]) for k in requests}
    grads = {"value": vgrad[0]}
    for k in requests:
        grads[k] = dgrads[k][0]
    return value, derivs, grads
