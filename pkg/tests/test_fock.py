import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from guposc import DomainExceeded, OscillatorParams
from guposc.fock import (
    DenseOperator,
    FockState,
    basis_state,
    build_hamiltonian,
    build_ladder,
    build_number,
    build_p_operator,
    build_qP,
    commutator,
    exact_ladder,
    exact_residual,
    ground_state_wavefunction,
    matrix_function,
    random_state,
    spectrum_table,
    uncertainty_check,
)

UNIT = OscillatorParams()


def beta_for_edge_ratio(dim, ratio, params=UNIT):
    """beta such that sqrt(beta) * max|eig(P)| equals ratio."""
    _, P = build_qP(params, dim)
    lam = np.max(np.abs(np.linalg.eigvalsh(P.entries)))
    return (ratio / lam) ** 2


def max_herm_dev(op):
    return np.max(np.abs(op.entries - op.entries.conj().T))


# ---- DenseOperator / FockState


def test_dense_operator_validation():
    with pytest.raises(ValueError):
        DenseOperator(np.eye(1))
    with pytest.raises(ValueError):
        DenseOperator(np.ones((2, 3)))
    with pytest.raises(ValueError):
        DenseOperator(np.array([[1, np.nan], [0, 1]]))
    with pytest.raises(ValueError):
        DenseOperator(np.array([[0, 1], [0, 0]]), hermitian=True)
    op = DenseOperator(np.eye(3), "I", hermitian=True)
    with pytest.raises(ValueError):
        op.entries[0, 0] = 2


def test_fock_state_norm_check():
    with pytest.raises(ValueError):
        FockState(np.array([1.0, 1.0]))
    s = FockState(np.array([1.0, 1.0]), normalized=False)
    assert s.norm() == pytest.approx(math.sqrt(2))


# ---- ladder algebra


def test_ladder_examples():
    a, _ = build_ladder(3)
    out = (a @ basis_state(1, 3)).amplitudes
    assert np.array_equal(out, [1, 0, 0])
    assert not np.any((a @ basis_state(0, 3)).amplitudes)
    _, a_dag = build_ladder(4)
    out = (a_dag @ basis_state(2, 4)).amplitudes
    assert np.allclose(out, [0, 0, 0, math.sqrt(3)], rtol=0, atol=1e-15)
    assert not np.any((a_dag @ basis_state(3, 4)).amplitudes)


@pytest.mark.parametrize("dim", [2, 5, 16, 33])
def test_adag_is_exact_conjugate_transpose(dim):
    a, a_dag = build_ladder(dim)
    assert np.array_equal(a_dag.entries, a.entries.conj().T)


@pytest.mark.parametrize("bad", [1, 0, -3, 2.5])
def test_ladder_rejects_small_dim(bad):
    with pytest.raises(ValueError):
        build_ladder(bad)


@pytest.mark.parametrize("dim", [2, 3, 8, 16, 24])
def test_exact_ladder_algebra(dim):
    a, a_dag = exact_ladder(dim)
    c = a * a_dag - a_dag * a
    assert c[: dim - 1, : dim - 1] == sympy.eye(dim - 1)
    assert c[dim - 1, dim - 1] == -(dim - 1)
    N = a_dag * a
    assert N == sympy.diag(*range(dim))
    assert N * a - a * N == -a
    assert N * a_dag - a_dag * N == a_dag
    assert exact_residual(N * a - a * N + a) == 0.0


@pytest.mark.parametrize("dim", [4, 16, 40])
def test_float_ladder_algebra_to_roundoff(dim):
    a, a_dag = build_ladder(dim)
    N = build_number(dim)
    c = commutator(a, a_dag).entries
    assert np.max(np.abs(c[: dim - 1, : dim - 1] - np.eye(dim - 1))) < 1e-13
    assert c[dim - 1, dim - 1] == pytest.approx(-(dim - 1), abs=1e-12)
    assert np.array_equal(np.diag(N.entries).real, np.arange(dim))
    assert np.max(np.abs((a_dag @ a).entries - N.entries)) < 1e-13
    # n*sqrt(n+1) - (n+1)*sqrt(n+1) rounds; exactness lives in the symbolic test
    assert np.max(np.abs(commutator(N, a).entries + a.entries)) < 1e-13 * dim
    assert np.max(np.abs(commutator(N, a_dag).entries - a_dag.entries)) < 1e-13 * dim


# ---- q, P, p


@pytest.mark.parametrize("dim", [2, 7, 16])
def test_qP_vacuum_parity_and_hermitian(dim):
    q, P = build_qP(UNIT, dim)
    vac = basis_state(0, dim)
    assert vac.expect(q) == 0
    assert vac.expect(P) == 0
    assert max_herm_dev(q) == 0 and max_herm_dev(P) == 0


@pytest.mark.parametrize("params", [UNIT, OscillatorParams(hbar=0.5, mass=2.0, omega=3.0)])
def test_canonical_commutator(params):
    dim = 16
    q, P = build_qP(params, dim)
    c = commutator(q, P).entries
    block = c[: dim - 1, : dim - 1] - 1j * params.hbar * np.eye(dim - 1)
    assert np.max(np.abs(block)) <= 1e-12
    # truncation corner is visibly wrong
    assert abs(c[dim - 1, dim - 1] - 1j * params.hbar) > 1


@pytest.mark.parametrize("params", [UNIT, OscillatorParams(hbar=0.5, mass=2.0, omega=3.0)])
def test_vacuum_position_variance(params):
    q, _ = build_qP(params, 16)
    vac = basis_state(0, 16)
    assert vac.expect(q @ q).real == pytest.approx(params.hbar / (2 * params.mass * params.omega), abs=1e-12)


def test_p_operator_undeformed_is_P():
    for dim in (3, 16):
        _, P = build_qP(UNIT, dim)
        assert np.array_equal(build_p_operator(UNIT, dim).entries, P.entries)


def test_p_operator_eigenvalues_follow_scalar_map():
    dim = 24
    beta = beta_for_edge_ratio(dim, 0.5)
    params = OscillatorParams(beta=beta)
    _, P = build_qP(params, dim)
    lam = np.linalg.eigvalsh(P.entries)
    expected = np.sort(np.tan(math.sqrt(beta) * lam) / math.sqrt(beta))
    p = build_p_operator(params, dim)
    assert np.max(np.abs(np.linalg.eigvalsh(p.entries) - expected)) <= 1e-10
    assert max_herm_dev(p) <= 1e-10


def test_deformed_commutator_on_leading_block():
    dim = 24
    beta = beta_for_edge_ratio(dim, 0.5)
    params = OscillatorParams(beta=beta)
    q, _ = build_qP(params, dim)
    p = build_p_operator(params, dim).entries
    k = dim - 4
    lhs = commutator(q, DenseOperator(p)).entries[:k, :k]
    rhs = (1j * params.hbar * (np.eye(dim) + beta * p @ p))[:k, :k]
    assert np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs) <= 5e-3


def test_p_operator_domain_exceeded_names_eigenvalue():
    dim = 16
    beta = beta_for_edge_ratio(dim, 1.6)
    with pytest.raises(DomainExceeded) as info:
        build_p_operator(OscillatorParams(beta=beta), dim)
    _, P = build_qP(UNIT, dim)
    assert abs(info.value.value) == pytest.approx(np.max(np.abs(np.linalg.eigvalsh(P.entries))))
    assert "eigenvalue" in str(info.value)


@pytest.mark.parametrize("dim", [8, 24])
def test_p_operator_tends_to_P(dim):
    _, P = build_qP(UNIT, dim)
    norm_P = np.linalg.norm(P.entries, 2)
    dists = []
    for ratio in (0.1, 0.03, 0.01):
        beta = (ratio / norm_P) ** 2
        p = build_p_operator(OscillatorParams(beta=beta), dim)
        dists.append(np.max(np.abs(p.entries - P.entries)))
        if beta * norm_P**2 <= 0.01:
            assert np.linalg.norm(p.entries - P.entries, 2) / norm_P <= 0.01
    assert dists[0] > dists[1] > dists[2]


def test_matrix_function_reproduces_square():
    _, P = build_qP(UNIT, 12)
    sq = matrix_function(P, np.square)
    assert np.max(np.abs(sq.entries - P.entries @ P.entries)) < 1e-12


# ---- Hamiltonian


def test_ladder_hamiltonian_example():
    H = build_hamiltonian(UNIT, 5, "ladder")
    assert np.array_equal(H.entries, np.diag([0.5, 1.5, 2.5, 3.5, 4.5]))


def test_quadratic_hamiltonian_spectrum():
    dim = 64
    w = np.linalg.eigvalsh(build_hamiltonian(UNIT, dim, "quadratic").entries)
    assert np.max(np.abs(w[:32] - (np.arange(32) + 0.5))) <= 1e-8


@pytest.mark.parametrize("params", [UNIT, OscillatorParams(hbar=2.0, mass=0.3, omega=1.7)])
def test_hamiltonian_forms_agree_on_block(params):
    dim = 20
    lad = build_hamiltonian(params, dim, "ladder").entries
    quad = build_hamiltonian(params, dim, "quadratic").entries
    assert np.max(np.abs(lad - quad)[: dim - 2, : dim - 2]) <= 1e-10


def test_hamiltonian_ignores_beta():
    for form in ("ladder", "quadratic"):
        h0 = build_hamiltonian(OscillatorParams(beta=0.0), 32, form).entries
        h3 = build_hamiltonian(OscillatorParams(beta=0.3), 32, form).entries
        assert np.array_equal(h0, h3)


def test_hamiltonian_rejects_unknown_form():
    with pytest.raises(ValueError):
        build_hamiltonian(UNIT, 4, "bogus")


def test_spectrum_table_rows():
    rows = spectrum_table(UNIT, 64)
    assert len(rows) == 32
    n, numeric, exact, err = rows[0]
    assert n == 0 and exact == 0.5 and numeric == pytest.approx(0.5, abs=1e-12)
    assert max(r[3] for r in rows) <= 1e-8


@pytest.mark.parametrize("dim", [4, 16, 32])
def test_operators_hermitian(dim):
    params = OscillatorParams(beta=1e-3)
    q, P = build_qP(params, dim)
    for op in (q, P, build_p_operator(params, dim), build_hamiltonian(params, dim, "quadratic")):
        assert max_herm_dev(op) <= 1e-10


# ---- ground state


def test_ground_state_values():
    psi = ground_state_wavefunction(UNIT, [0.0])
    assert psi[0] == pytest.approx(math.pi ** -0.25, rel=1e-15)
    assert psi[0] == pytest.approx(0.7511255, abs=1e-7)
    q = np.linspace(0, 3, 31)
    assert np.array_equal(ground_state_wavefunction(UNIT, -q[::-1])[::-1], ground_state_wavefunction(UNIT, q))


@pytest.mark.parametrize("params", [UNIT, OscillatorParams(hbar=0.7, mass=1.9, omega=0.4)])
def test_ground_state_normalized(params):
    width = 8 * math.sqrt(params.hbar / (params.mass * params.omega))
    q = np.linspace(-width, width, 4001)
    psi = ground_state_wavefunction(params, q)
    assert np.trapezoid(psi**2, q) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("params", [UNIT, OscillatorParams(hbar=0.7, mass=1.9, omega=0.4)])
def test_ground_state_is_annihilated(params):
    # (q + iP/m w) psi with P = -i hbar d/dq is q psi + (hbar/m w) psi'
    L = math.sqrt(params.hbar / (params.mass * params.omega))
    q = np.linspace(-8 * L, 8 * L, 2001)
    h = q[1] - q[0]
    psi = ground_state_wavefunction(params, q)
    dpsi = (psi[2:] - psi[:-2]) / (2 * h)
    residual = q[1:-1] * psi[1:-1] + L**2 * dpsi
    # central-difference error is h^2/6 |psi'''|; psi''' = (3x - x^3) psi / L^3 with x = q/L
    x = q / L
    third = np.abs((3 * x - x**3) * psi) / L**3
    bound = L**2 * h**2 / 6 * np.max(third) * 1.01
    assert np.max(np.abs(residual)) <= bound


@pytest.mark.parametrize("grid", [[], [[0.0, 1.0]], [1.0, 0.0], [0.0, np.inf]])
def test_ground_state_rejects_bad_grid(grid):
    with pytest.raises(ValueError):
        ground_state_wavefunction(UNIT, grid)


# ---- uncertainty


def test_uncertainty_vacuum_undeformed_is_minimal():
    r = uncertainty_check(basis_state(0, 16), UNIT)
    assert r.dq * r.dp == pytest.approx(0.5, abs=1e-12)
    assert r.rhs_bound == 0.5
    assert r.satisfied


def test_uncertainty_examples_deformed():
    params = OscillatorParams(beta=1e-3)
    assert uncertainty_check(basis_state(0, 32), params).satisfied
    v = np.zeros(32, dtype=complex)
    v[0] = v[3] = 1 / math.sqrt(2)
    r = uncertainty_check(FockState(v), params)
    assert r.satisfied and r.margin > 0
    assert r.rhs_bound == pytest.approx(0.5 * (1 + 1e-3 * r.dp**2))


def test_uncertainty_propagates_domain_error():
    with pytest.raises(DomainExceeded):
        uncertainty_check(basis_state(0, 32), OscillatorParams(beta=1.0))


def test_uncertainty_rejects_unnormalized():
    with pytest.raises(ValueError):
        uncertainty_check(FockState(np.ones(4), normalized=False), UNIT)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([0.0, 1e-4, 1e-3]))
def test_uncertainty_random_states(seed, beta):
    r = uncertainty_check(random_state(32, seed), OscillatorParams(beta=beta))
    assert r.satisfied


def test_random_state_reproducible():
    a = random_state(10, 7).amplitudes
    b = random_state(10, 7).amplitudes
    assert np.array_equal(a, b)
    assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-12)
