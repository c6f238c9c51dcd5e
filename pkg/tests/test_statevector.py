import numpy as np
import pytest

from qmod.statevector import (
    Cnot,
    Observable,
    Rotation,
    apply_circuit,
    apply_gate,
    apply_pauli,
    expectation,
    mean_z,
    observable_diagonal,
    zero_state,
)


def test_zero_state_definitions():
    assert np.allclose(zero_state(1).amplitudes, [1, 0])
    assert np.allclose(zero_state(2).amplitudes, [1, 0, 0, 0])


def test_zero_state_bounds():
    with pytest.raises(ValueError):
        zero_state(15)
    with pytest.raises(ValueError):
        zero_state(0)


def test_ry_pi_flips_to_one():
    state = apply_gate(zero_state(1), Rotation("y", 0, np.pi))
    assert expectation(state, Observable.from_terms([(1.0, {0})])) == pytest.approx(-1.0, abs=1e-12)


def test_ry_gives_cos_theta():
    state = apply_gate(zero_state(1), Rotation("y", 0, 0.7))
    z = expectation(state, Observable.from_terms([(1.0, {0})]))
    assert z == pytest.approx(np.cos(0.7), abs=1e-12)


def test_cnot_truth_table():
    # |10> in little-endian labelling: qubit 0 is 1, qubit 1 is 0
    state = apply_gate(zero_state(2), Rotation("y", 0, np.pi))
    state = apply_gate(state, Cnot(0, 1))
    probs = np.abs(state.amplitudes) ** 2
    assert probs[3] == pytest.approx(1.0, abs=1e-12)  # |11>


def test_cnot_is_involution():
    rng = np.random.default_rng(0)
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    amps /= np.linalg.norm(amps)
    from qmod.statevector import QuantumState

    state = QuantumState(3, amps)
    twice = apply_gate(apply_gate(state, Cnot(0, 2)), Cnot(0, 2))
    assert np.max(np.abs(twice.amplitudes - amps)) < 1e-15


def test_expectation_trivial_cases():
    assert expectation(zero_state(1), Observable.from_terms([(1.0, {0})])) == 1.0
    plus = apply_gate(zero_state(1), Rotation("y", 0, np.pi / 2))
    assert expectation(plus, Observable.from_terms([(1.0, {0})])) == pytest.approx(0.0, abs=1e-12)
    # |01>: qubit 0 set, qubit 1 clear -> (Z0+Z1)/2 averages -1 and +1
    state = apply_gate(zero_state(2), Rotation("y", 0, np.pi))
    obs = Observable.from_terms([(0.5, {0}), (0.5, {1})])
    assert expectation(state, obs) == pytest.approx(0.0, abs=1e-12)


def test_identity_term_expectation_is_coefficient():
    rng = np.random.default_rng(1)
    state = zero_state(3)
    for _ in range(20):
        state = apply_gate(state, Rotation("y", rng.integers(3), rng.uniform(0, 2 * np.pi)))
    obs = Observable.from_terms([(0.37, set())])
    assert expectation(state, obs) == pytest.approx(0.37, abs=1e-14)


def _random_circuit(rng, n, length):
    gates = []
    for _ in range(length):
        if rng.random() < 0.7:
            gates.append(
                Rotation(rng.choice(["x", "y", "z"]), int(rng.integers(n)), float(rng.uniform(0, 2 * np.pi)))
            )
        else:
            c, t = rng.choice(n, size=2, replace=False)
            gates.append(Cnot(int(c), int(t)))
    return gates


def test_norm_preservation_random_circuits():
    rng = np.random.default_rng(7)
    for n in (2, 5, 10):
        state = apply_circuit(zero_state(n), _random_circuit(rng, n, 200))
        assert abs(state.norm_sq() - 1.0) < 1e-10


def test_rotation_composition():
    rng = np.random.default_rng(3)
    for axis in ("x", "y", "z"):
        a, b = rng.uniform(-np.pi, np.pi, size=2)
        state = apply_circuit(zero_state(2), _random_circuit(rng, 2, 10))
        one = apply_gate(apply_gate(state, Rotation(axis, 1, a)), Rotation(axis, 1, b))
        two = apply_gate(state, Rotation(axis, 1, a + b))
        assert np.max(np.abs(one.amplitudes - two.amplitudes)) < 1e-12


def test_observable_linearity_single_term_extension_exact():
    # summation is strictly left to right, so appending one term changes the
    # expectation by exactly one addition
    rng = np.random.default_rng(5)
    state = apply_circuit(zero_state(3), _random_circuit(rng, 3, 30))
    terms = [(0.5, {0}), (-0.25, {1, 2}), (1.5, set()), (0.125, {0, 2})]
    acc = Observable.from_terms(terms[:1])
    for extra in terms[1:]:
        extended = acc + Observable.from_terms([extra])
        lhs = expectation(state, extended)
        rhs = expectation(state, acc) + expectation(state, Observable.from_terms([extra]))
        assert lhs == rhs  # bitwise
        acc = extended


def test_observable_linearity_general():
    rng = np.random.default_rng(6)
    state = apply_circuit(zero_state(4), _random_circuit(rng, 4, 40))
    a = Observable.from_terms([(rng.normal(), set(rng.choice(4, size=2, replace=False))) for _ in range(3)])
    b = Observable.from_terms([(rng.normal(), {int(rng.integers(4))}) for _ in range(3)])
    assert expectation(state, a + b) == pytest.approx(
        expectation(state, a) + expectation(state, b), abs=1e-14
    )


def test_invalid_gate_indices():
    with pytest.raises(IndexError):
        apply_gate(zero_state(2), Rotation("y", 2, 0.1))
    with pytest.raises(IndexError):
        apply_gate(zero_state(2), Cnot(0, 0))
    with pytest.raises(IndexError):
        apply_gate(zero_state(2), Cnot(0, 5))


def test_apply_pauli_matches_matrix():
    rng = np.random.default_rng(11)
    n = 3
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    paulis = {
        "x": np.array([[0, 1], [1, 0]], dtype=complex),
        "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "z": np.array([[1, 0], [0, -1]], dtype=complex),
    }
    eye = np.eye(2, dtype=complex)
    for axis in ("x", "y", "z"):
        for q in range(n):
            mats = [paulis[axis] if j == q else eye for j in range(n)]
            full = mats[2]
            for m in (mats[1], mats[0]):
                full = np.kron(full, m)  # little-endian: qubit 0 least significant
            expected = full @ amps
            got = apply_pauli(amps.copy(), axis, q)
            assert np.max(np.abs(got - expected)) < 1e-13


def test_mean_z_diagonal_range():
    diag = observable_diagonal(mean_z(4), 4)
    assert diag.max() == pytest.approx(1.0)
    assert diag.min() == pytest.approx(-1.0)
    assert diag[0] == pytest.approx(1.0)


def test_batched_kernels_match_single():
    from qmod.statevector import apply_rotation_inplace, apply_cnot_inplace

    rng = np.random.default_rng(13)
    batch = rng.normal(size=(5, 8)) + 1j * rng.normal(size=(5, 8))
    singles = [row.copy() for row in batch]
    ops = [("y", 1, 0.3), ("z", 0, -0.7), ("x", 2, 1.1)]
    work = batch.copy()
    for axis, q, angle in ops:
        apply_rotation_inplace(work, axis, q, angle)
        for row in singles:
            apply_rotation_inplace(row, axis, q, angle)
    apply_cnot_inplace(work, 0, 2)
    for row in singles:
        apply_cnot_inplace(row, 0, 2)
    for i, row in enumerate(singles):
        assert np.array_equal(work[i], row)
