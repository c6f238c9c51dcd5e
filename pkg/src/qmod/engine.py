"""Batched adjoint evaluation of UFA values, input derivatives and
theta-gradients.

Everything rests on two identities for psi(x) = U_theta U_phi(x) |0> and a
diagonal observable C:

* d/dx |psi> = U_theta * D1 with D1 = (-i/2) sum_j phi_j'(x) sigma_j U_phi|0>,
  and the second derivative adds the chain term with phi_j''. So u' and u''
  are cross-expectations between a handful of feature-layer states:
      u'  = 2 Re <psi|C|U D1>
      u'' = 2 Re <psi|C|U D2> + 2 Re <U D1|C|U D1>
* the theta-gradient of any 2 Re <U a|C|U b> is accumulated by one backward
  sweep over the ansatz gates: at a rotation gate with generator sigma/2 the
  contribution is Im[<B_a|sigma|K_b> + <B_b|sigma|K_a>], where K are the
  partially-unwound kets and B the observable-applied, partially-unwound
  states.

States carry a leading batch axis so a whole collocation set shares each
gate application.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qnn import CHEBYSHEV, UfaModel
from .statevector import apply_cnot_inplace, apply_rotation_inplace
from .qnn import model_diagonal

BASE = "base"


def points_array(points, var_order: list[str]) -> np.ndarray:
    """Normalize a list of {var: value} maps to a (B, V) float array."""
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != len(var_order):
            raise ValueError(
                f"points array must have shape (B, {len(var_order)}), got {arr.shape}"
            )
        return arr
    rows = []
    for p in points:
        rows.append([float(p[v]) for v in var_order])
    return np.asarray(rows, dtype=float)


def _feature_qubit_vectors(axis: str, angles: np.ndarray) -> np.ndarray:
    """R_axis(angle)|0> per batch entry: (B, 2) complex."""
    half = angles / 2.0
    c, s = np.cos(half), np.sin(half)
    out = np.empty(angles.shape + (2,), dtype=complex)
    if axis == "y":
        out[..., 0] = c
        out[..., 1] = s
    elif axis == "x":
        out[..., 0] = c
        out[..., 1] = -1j * s
    elif axis == "z":
        out[..., 0] = np.exp(-1j * half)
        out[..., 1] = 0.0
    else:
        raise ValueError(f"unknown rotation axis {axis!r}")
    return out


def _sigma_weighted_sum(amps: np.ndarray, axis: str, qubits, weights: np.ndarray) -> np.ndarray:
    """sum_j weights[:, j] * sigma_{qubits[j]} |amps>, batched."""
    batch, dim = amps.shape
    n = dim.bit_length() - 1
    out = np.zeros_like(amps)
    for j, q in enumerate(qubits):
        r = amps.reshape(batch, dim >> (q + 1), 2, 1 << q)
        o = out.reshape(batch, dim >> (q + 1), 2, 1 << q)
        w = weights[:, j, None, None]
        if axis == "y":
            o[:, :, 0, :] += w * (-1j) * r[:, :, 1, :]
            o[:, :, 1, :] += w * 1j * r[:, :, 0, :]
        elif axis == "x":
            o[:, :, 0, :] += w * r[:, :, 1, :]
            o[:, :, 1, :] += w * r[:, :, 0, :]
        elif axis == "z":
            o[:, :, 0, :] += w * r[:, :, 0, :]
            o[:, :, 1, :] -= w * r[:, :, 1, :]
        else:
            raise ValueError(f"unknown pauli axis {axis!r}")
    return out


def _chain_factors(model: UfaModel, var: str, x: np.ndarray):
    """Batched d(phi_j)/dx and d2(phi_j)/dx2 w.r.t. the original coordinate."""
    spec = model.feature_spec(var)
    pre = model.prescale_for(var)
    s = pre(x)
    j = np.arange(1, spec.n_qubits + 1, dtype=float)[None, :]
    if spec.nonlinearity == CHEBYSHEV:
        bad = np.abs(s) >= 1.0
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(
                f"chebyshev feature input out of domain at point {i}: s={s[i]:.6g}"
            )
        root = np.sqrt(1.0 - s * s)
        d1 = (-1.0 / root) * pre.slope
        d2 = (-s / root**3) * pre.slope**2
        return j * d1[:, None], j * d2[:, None]
    d1 = np.full_like(x, pre.slope)
    return j * d1[:, None], np.zeros((x.shape[0], spec.n_qubits))


def feature_block(model: UfaModel, pts: np.ndarray, requests) -> dict:
    """Feature-layer states: 'base' plus ('d', var, order) derivative states.

    `pts` is (B, V) ordered like model.input_vars; `requests` is an iterable
    of (var, order) with order in {1, 2}.
    """
    var_order = model.input_vars
    batch = pts.shape[0]
    # base state as a tensor product of per-qubit 2-vectors, little-endian
    state = np.ones((batch, 1), dtype=complex)
    qubit_vecs: list[np.ndarray] = [None] * model.n_qubits
    start = 0
    for var, spec in model.registers:
        col = var_order.index(var)
        s = model.prescale_for(var)(pts[:, col])
        if spec.nonlinearity == CHEBYSHEV:
            bad = np.abs(s) >= 1.0
            if np.any(bad):
                i = int(np.argmax(bad))
                raise ValueError(
                    f"chebyshev feature input out of domain at point {i} "
                    f"(variable {var!r}): s={s[i]:.6g}"
                )
            base_angle = np.arccos(s)
        else:
            base_angle = s
        for j in range(spec.n_qubits):
            qubit_vecs[start + j] = _feature_qubit_vectors(spec.axis, (j + 1) * base_angle)
        start += spec.n_qubits
    for q in range(model.n_qubits - 1, -1, -1):
        state = np.einsum("bi,bj->bij", state, qubit_vecs[q]).reshape(batch, -1)
    states = {BASE: state}

    orders: dict[str, int] = {}
    for var, order in requests:
        if order not in (1, 2):
            raise ValueError(f"unsupported derivative order {order}")
        orders[var] = max(orders.get(var, 0), order)
    for var, order in orders.items():
        qubits = list(model.register_qubits(var))
        axis = model.feature_spec(var).axis
        col = var_order.index(var)
        phi1, phi2 = _chain_factors(model, var, pts[:, col])
        d1 = -0.5j * _sigma_weighted_sum(state, axis, qubits, phi1)
        states[("d", var, 1)] = d1
        if order >= 2:
            # d2 = (-i/2) sum_j phi_j'' sigma_j base + (-i/2) sum_j phi_j' sigma_j d1
            d2 = -0.5j * (
                _sigma_weighted_sum(state, axis, qubits, phi2)
                + _sigma_weighted_sum(d1, axis, qubits, phi1)
            )
            states[("d", var, 2)] = d2
    return states


def apply_ansatz_batch(model: UfaModel, theta: np.ndarray, amps: np.ndarray) -> np.ndarray:
    for op in model.ansatz.operations():
        if op[0] == "cnot":
            apply_cnot_inplace(amps, op[1], op[2])
        else:
            apply_rotation_inplace(amps, op[0][1], op[1], float(theta[op[2]]))
    return amps


def _diag_inner(a: np.ndarray, diag: np.ndarray, b: np.ndarray) -> np.ndarray:
    """<a|C|b> per batch entry for diagonal C."""
    return np.einsum("bi,i,bi->b", a.conj(), diag, b)


def _sigma_im_inner(bc: np.ndarray, k: np.ndarray, axis: str, qubit: int) -> np.ndarray:
    """Im <B|sigma_qubit|K> per batch entry, with bc = conj(B).

    Works on half-views so sigma|K> is never materialized.
    """
    batch, dim = k.shape
    r = k.reshape(batch, dim >> (qubit + 1), 2, 1 << qubit)
    b = bc.reshape(batch, dim >> (qubit + 1), 2, 1 << qubit)
    k0, k1 = r[:, :, 0, :], r[:, :, 1, :]
    b0, b1 = b[:, :, 0, :], b[:, :, 1, :]
    if axis == "y":
        # <B|sigma_y|K> = i * (sum b1 k0 - sum b0 k1)
        w = np.einsum("bhl,bhl->b", b1, k0) - np.einsum("bhl,bhl->b", b0, k1)
        return w.real
    if axis == "x":
        w = np.einsum("bhl,bhl->b", b0, k1) + np.einsum("bhl,bhl->b", b1, k0)
        return w.imag
    if axis == "z":
        w = np.einsum("bhl,bhl->b", b0, k0) - np.einsum("bhl,bhl->b", b1, k1)
        return w.imag
    raise ValueError(f"unknown pauli axis {axis!r}")


def adjoint_sweep(
    model: UfaModel,
    theta: np.ndarray,
    propagated: dict,
    quantities: dict,
    reduce_batch: bool = False,
) -> dict:
    """Theta-gradients of quantities sum_p c_p * 2Re<U a_p|C|U b_p>.

    `propagated` maps state key -> U_theta-propagated amplitudes (B, D).
    `quantities` maps name -> list of (coeff, key_a, key_b) where coeff is a
    scalar or a (B,) array. Returns per name a (B, P) array, or (P,) with the
    batch folded in when `reduce_batch` (coefficients then carry any
    per-point weights).
    """
    diag = model_diagonal(model)
    keys = sorted({k for pairs in quantities.values() for (_, a, b) in pairs for k in (a, b)}, key=str)
    K = {k: propagated[k].copy() for k in keys}
    Bc = {k: (propagated[k] * diag).conj() for k in keys}
    batch = next(iter(K.values())).shape[0]
    n_params = model.n_params
    out = {
        name: (np.zeros(n_params) if reduce_batch else np.zeros((batch, n_params)))
        for name in quantities
    }
    for op in reversed(model.ansatz.operations()):
        if op[0] == "cnot":
            for k in keys:
                apply_cnot_inplace(K[k], op[1], op[2])
                apply_cnot_inplace(Bc[k], op[1], op[2])
            continue
        kind, q, pidx = op
        axis = kind[1]
        angle = float(theta[pidx])
        for name, pairs in quantities.items():
            acc = None
            for coeff, a, b in pairs:
                if a == b:
                    g = 2.0 * _sigma_im_inner(Bc[a], K[a], axis, q)
                else:
                    g = _sigma_im_inner(Bc[a], K[b], axis, q) + _sigma_im_inner(
                        Bc[b], K[a], axis, q
                    )
                term = coeff * g
                acc = term if acc is None else acc + term
            if acc is not None:
                if reduce_batch:
                    out[name][pidx] = float(np.sum(acc))
                else:
                    out[name][:, pidx] = acc
        # unwind one gate: kets with R(-angle); conjugated bras pick up the
        # conjugate inverse, which is R(-angle) for y and R(+angle) for x/z
        for k in keys:
            apply_rotation_inplace(K[k], axis, q, -angle)
            apply_rotation_inplace(Bc[k], axis, q, -angle if axis == "y" else angle)
    return out


@dataclass
class QuantumProfile:
    """Values, input derivatives and gradient plumbing for one point batch."""

    model: UfaModel
    theta: np.ndarray
    requests: tuple
    propagated: dict
    value: np.ndarray
    derivs: dict

    def grad_theta_weighted(self, value_w, deriv_w: dict) -> np.ndarray:
        """sum_i [ value_w_i * du/dtheta + sum_d deriv_w_d_i * dD_d/dtheta ]."""
        pairs = []
        batch = self.value.shape[0]
        if value_w is not None:
            vw = np.broadcast_to(np.asarray(value_w, dtype=float), (batch,))
            pairs.append((0.5 * vw, BASE, BASE))
        combo = None  # base-paired derivative states fold into one state
        for (var, order), w in deriv_w.items():
            w = np.broadcast_to(np.asarray(w, dtype=float), (batch,))[:, None]
            if order == 1:
                part = w * self.propagated[("d", var, 1)]
            else:
                part = w * self.propagated[("d", var, 2)]
                pairs.append((w[:, 0], ("d", var, 1), ("d", var, 1)))
            combo = part if combo is None else combo + part
        props = dict(self.propagated)
        if combo is not None:
            props["combo"] = combo
            pairs.append((1.0, BASE, "combo"))
        grads = adjoint_sweep(self.model, self.theta, props, {"g": pairs}, reduce_batch=True)
        return grads["g"]

    def grad_theta_quantities(self) -> tuple[np.ndarray, dict]:
        """Per-point theta-gradients of the value and of each derivative."""
        quantities = {"value": [(0.5, BASE, BASE)]}
        for var, order in self.requests:
            if order == 1:
                quantities[(var, 1)] = [(1.0, BASE, ("d", var, 1))]
            else:
                quantities[(var, 2)] = [
                    (1.0, BASE, ("d", var, 2)),
                    (1.0, ("d", var, 1), ("d", var, 1)),
                ]
        grads = adjoint_sweep(self.model, self.theta, self.propagated, quantities)
        return grads["value"], {k: v for k, v in grads.items() if k != "value"}


def build_profile(model: UfaModel, theta: np.ndarray, pts: np.ndarray, requests) -> QuantumProfile:
    """Propagate the feature block and read out value + derivative arrays."""
    theta = model.check_theta(theta)
    requests = tuple(requests)
    full = set(requests)
    for var, order in requests:
        if order == 2:
            full.add((var, 1))
    states = feature_block(model, pts, sorted(full))
    propagated = {k: apply_ansatz_batch(model, theta, v) for k, v in states.items()}
    diag = model_diagonal(model)
    base = propagated[BASE]
    value = _diag_inner(base, diag, base).real
    derivs = {}
    for var, order in sorted(full):
        if order == 1:
            derivs[(var, 1)] = 2.0 * _diag_inner(base, diag, propagated[("d", var, 1)]).real
        else:
            d1 = propagated[("d", var, 1)]
            d2 = propagated[("d", var, 2)]
            derivs[(var, 2)] = (
                2.0 * _diag_inner(base, diag, d2).real
                + 2.0 * _diag_inner(d1, diag, d1).real
            )
    return QuantumProfile(model, theta, requests, propagated, value, derivs)
