"""Ansatz builders, analytic gradients, and the classical optimizers."""

import numpy as np
import pytest

from hartree.encoding import JW, PARITY, EncodingScheme, encode_operator, encode_state
from hartree.fermion import (
    FermionSum,
    build_molecular_hamiltonian,
    hf_energy,
    hf_occupation,
    number_operator,
    uccsd_generators,
)
from hartree.io_cli import load_fixture
from hartree.pauli import PauliString, PauliSum, canonicalize, to_matrix
from hartree.reduction import sector_for, taper_two_qubits
from hartree.simulator import Circuit, Gate, NoiseModel, make_rng
from hartree.vqe import (
    GRADIENT_DESCENT,
    HAMILTONIAN_VARIATIONAL,
    HARDWARE_EFFICIENT,
    LDCA,
    NELDER_MEAD,
    SPSA,
    UCCSD,
    Ansatz,
    HamiltonianParts,
    NotAntiHermitian,
    OptimizerConfig,
    PartitionIncomplete,
    UnsupportedGate,
    analytic_gradient,
    build_hamiltonian_variational,
    build_hardware_efficient,
    build_ldca,
    build_uccsd,
    estimate_energy,
    initial_parameters,
    optimize,
    partition_hamiltonian,
    penalty_hamiltonian,
    preparation_gates,
)

CHEMICAL_ACCURACY = 1.6e-3


@pytest.fixture(scope="module")
def h2():
    ints = load_fixture("h2_sto3g_0.7414")
    scheme = EncodingScheme(JW, 4)
    ferm = build_molecular_hamiltonian(ints)
    h = encode_operator(ferm, scheme)
    fci = float(np.linalg.eigvalsh(to_matrix(h, 4))[0])
    return ints, scheme, ferm, h, fci


@pytest.fixture(scope="module")
def h2_tapered(h2):
    ints, _, ferm, _, _ = h2
    scheme = EncodingScheme(PARITY, 4)
    full = encode_operator(ferm, scheme)
    reduced = taper_two_qubits(full, scheme,
                               sector_for(ints.n_electrons, ints.n_up))
    fci = float(np.linalg.eigvalsh(to_matrix(reduced, 2))[0])
    return reduced, fci


@pytest.fixture(scope="module")
def h2_uccsd(h2):
    ints, scheme, _, _, _ = h2
    hf = hf_occupation(ints)
    gens = uccsd_generators(4, hf.occupied(),
                            [p for p in range(4) if p not in hf.occupied()])
    return build_uccsd(gens, scheme, hf)


def toy_rx_ansatz() -> Ansatz:
    circuit = Circuit(1)
    circuit.rx(0, slot=0)
    return Ansatz(circuit, [], HARDWARE_EFFICIENT)


# ------------------------------------------------------------------- builders


class TestUccsd:
    def test_one_parameter_per_generator(self, h2_uccsd):
        assert h2_uccsd.n_params == 3
        assert h2_uccsd.family == UCCSD

    def test_theta_zero_prepares_reference(self, h2, h2_uccsd):
        ints, scheme, _, _, _ = h2
        psi = h2_uccsd.state(np.zeros(3))
        encoded = encode_state(hf_occupation(ints), scheme)
        index = sum(1 << q for q in encoded.occupied())
        expected = np.zeros(16)
        expected[index] = 1.0
        assert np.allclose(psi.amplitudes, expected, atol=1e-12)

    def test_theta_zero_energy_is_mean_field(self, h2, h2_uccsd):
        ints, _, _, h, _ = h2
        e0 = estimate_energy(h2_uccsd, np.zeros(3), h).mean
        assert e0 == pytest.approx(hf_energy(ints), abs=1e-10)

    def test_rejects_non_anti_hermitian_generator(self, h2):
        _, scheme, _, _, _ = h2
        bare = FermionSum.single([(1, True), (0, False)])
        with pytest.raises(NotAntiHermitian):
            build_uccsd([bare], scheme, hf_occupation(load_fixture("h2_sto3g_0.7414")))

    def test_extra_product_steps_match_single_step(self, h2):
        # strings within one generator's image commute, so the split is exact
        ints, scheme, _, _, _ = h2
        hf = hf_occupation(ints)
        double = [g for g in uccsd_generators(4, hf.occupied(), [1, 3])
                  if g.label.startswith("d:")]
        assert len(double) == 1
        base = build_uccsd(double, scheme, hf)
        split = build_uccsd(double, scheme, hf, trotter_steps=3)
        assert len(split.circuit.gates) == 3 * len(base.circuit.gates)
        theta = np.array([0.37])
        assert np.allclose(split.state(theta).amplitudes,
                           base.state(theta).amplitudes, atol=1e-12)

    def test_rejects_bad_step_count(self, h2, h2_uccsd):
        ints, scheme, _, _, _ = h2
        with pytest.raises(ValueError):
            build_uccsd([], scheme, hf_occupation(ints), trotter_steps=0)

    def test_reaches_exact_ground_energy(self, h2, h2_uccsd):
        _, _, _, h, fci = h2
        config = OptimizerConfig(method=NELDER_MEAD, max_evals=2000,
                                 tolerance=1e-12, seed=7)
        result = optimize(h2_uccsd, h, config)
        assert result.converged
        assert result.best_energy == pytest.approx(fci, abs=1e-8)

    def test_shot_mode_estimate_at_optimum(self, h2, h2_uccsd):
        _, _, _, h, fci = h2
        config = OptimizerConfig(method=NELDER_MEAD, max_evals=2000,
                                 tolerance=1e-12, seed=7)
        best = optimize(h2_uccsd, h, config).best_params
        estimate = estimate_energy(h2_uccsd, best, h, shots=10 ** 4,
                                   rng=make_rng(20260816))
        assert abs(estimate.mean - fci) < CHEMICAL_ACCURACY
        assert estimate.std_error > 0


class TestHardwareEfficient:
    def test_parameter_count(self):
        assert build_hardware_efficient(4, 2).n_params == 24
        assert build_hardware_efficient(1, 1).n_params == 4
        assert build_hardware_efficient(3, 3).n_params == 24

    def test_entangler_selection(self):
        kinds_cnot = {g.kind for g in build_hardware_efficient(3, 1).circuit.gates}
        kinds_cz = {g.kind for g in
                    build_hardware_efficient(3, 1, entangler="cz").circuit.gates}
        assert "cnot" in kinds_cnot and "cz" not in kinds_cnot
        assert "cz" in kinds_cz and "cnot" not in kinds_cz

    def test_validation(self):
        with pytest.raises(ValueError):
            build_hardware_efficient(3, 0)
        with pytest.raises(ValueError):
            build_hardware_efficient(3, 1, entangler="swap")

    @pytest.mark.parametrize("entangler", ["cnot", "cz"])
    def test_zero_parameters_fix_the_all_zeros_state(self, entangler):
        ansatz = build_hardware_efficient(3, 2, entangler=entangler)
        psi = ansatz.state(np.zeros(ansatz.n_params))
        expected = np.zeros(8)
        expected[0] = 1.0
        assert np.allclose(psi.amplitudes, expected, atol=1e-12)

    def test_single_qubit_form_reaches_arbitrary_states(self):
        rng = make_rng(5)
        raw = rng.normal(size=2) + 1j * rng.normal(size=2)
        target = raw / np.linalg.norm(raw)
        bloch = {
            "X0": np.vdot(target, np.array([target[1], target[0]])).real,
            "Y0": np.vdot(target, np.array([-1j * target[1], 1j * target[0]])).real,
            "Z0": (abs(target[0]) ** 2 - abs(target[1]) ** 2),
        }
        h = canonicalize(PauliSum.identity(-0.5) - 0.5 * PauliSum.from_text(
            {k: v for k, v in bloch.items()}))
        ansatz = build_hardware_efficient(1, 1)
        config = OptimizerConfig(method=NELDER_MEAD, max_evals=2000,
                                 tolerance=1e-14, seed=3)
        result = optimize(ansatz, h, config)
        # -<psi| t><t |psi> reaches -1 exactly when the state is reached
        assert result.best_energy == pytest.approx(-1.0, abs=1e-8)

    def test_tapered_two_qubit_ground(self, h2_tapered):
        reduced, fci = h2_tapered
        ansatz = build_hardware_efficient(2, 2)
        config = OptimizerConfig(method=NELDER_MEAD, max_evals=4000,
                                 tolerance=1e-12, seed=5)
        result = optimize(ansatz, reduced, config)
        assert result.best_energy == pytest.approx(fci, abs=1e-8)


class TestHamiltonianVariational:
    def test_partition_groups_structure(self, h2):
        _, _, ferm, _, _ = h2
        diagonal, hopping, exchange = partition_hamiltonian(ferm)
        for term in diagonal:
            created = {m for m, dagger in term.factors if dagger}
            destroyed = {m for m, dagger in term.factors if not dagger}
            assert created == destroyed
        assert not list(hopping)
        assert len(list(exchange)) == 4

    def test_parts_sum_to_full_operator(self, h2):
        _, scheme, ferm, h, _ = h2
        parts = HamiltonianParts.from_fermion(ferm, scheme)
        residue = canonicalize(parts.total() - h)
        assert all(abs(c) < 1e-12 for _, c in residue.items())

    def test_three_parameters_per_step(self, h2):
        ints, scheme, ferm, h, _ = h2
        parts = HamiltonianParts.from_fermion(ferm, scheme)
        prep = preparation_gates(hf_occupation(ints), scheme)
        for steps in (1, 2, 3):
            assert build_hamiltonian_variational(parts, steps, prep).n_params \
                == 3 * steps

    def test_incomplete_partition_rejected(self, h2):
        _, scheme, ferm, h, _ = h2
        parts = HamiltonianParts.from_fermion(ferm, scheme)
        gutted = HamiltonianParts(parts.diagonal, parts.hopping,
                                  PauliSum.identity(0.0))
        with pytest.raises(PartitionIncomplete):
            build_hamiltonian_variational(gutted, 1, [], full=h)

    def test_theta_zero_is_reference(self, h2):
        ints, scheme, ferm, _, _ = h2
        parts = HamiltonianParts.from_fermion(ferm, scheme)
        prep = preparation_gates(hf_occupation(ints), scheme)
        ansatz = build_hamiltonian_variational(parts, 2, prep)
        psi = ansatz.state(np.zeros(6))
        encoded = encode_state(hf_occupation(ints), scheme)
        index = sum(1 << q for q in encoded.occupied())
        assert abs(psi.amplitudes[index]) == pytest.approx(1.0, abs=1e-12)

    def test_two_steps_reach_exact_ground(self, h2):
        ints, scheme, ferm, h, fci = h2
        parts = HamiltonianParts.from_fermion(ferm, scheme)
        prep = preparation_gates(hf_occupation(ints), scheme)
        ansatz = build_hamiltonian_variational(parts, 2, prep, full=h)
        config = OptimizerConfig(method=NELDER_MEAD, max_evals=3000,
                                 tolerance=1e-12, seed=11)
        result = optimize(ansatz, h, config)
        assert result.best_energy == pytest.approx(fci, abs=1e-6)
        assert ansatz.family == HAMILTONIAN_VARIATIONAL


class TestLdca:
    def test_parameter_count_four_qubits_one_cycle(self):
        ansatz = build_ldca(4, 1)
        assert ansatz.n_params == 19
        assert ansatz.family == LDCA

    def test_gate_pattern(self):
        ansatz = build_ldca(4, 1)
        gates = ansatz.circuit.gates
        assert [g.kind for g in gates[:4]] == ["rz"] * 4
        block = gates[4:9]
        assert [str(g.string) for g in block] == \
            ["X0 X1", "Y0 Y1", "Z0 Z1", "X0 Y1", "Y0 X1"]
        assert [g.scale for g in block] == [1.0, -1.0, 1.0, 1.0, -1.0]
        pair_heads = [min(g.string.indices()) for g in gates[4::5]]
        assert pair_heads == [0, 2, 1]

    def test_every_rotation_owns_a_parameter(self):
        ansatz = build_ldca(6, 2)
        slots = [g.slot for g in ansatz.circuit.gates]
        assert slots == list(range(len(slots)))

    def test_validation(self):
        with pytest.raises(ValueError):
            build_ldca(1, 1)
        with pytest.raises(ValueError):
            build_ldca(4, 0)

    def test_two_cycles_reach_chemical_accuracy(self, h2):
        _, _, _, h, fci = h2
        ansatz = build_ldca(4, 2)
        config = OptimizerConfig(method=GRADIENT_DESCENT, max_evals=1500,
                                 tolerance=1e-9, learning_rate=0.1, seed=1)
        result = optimize(ansatz, h, config)
        assert result.best_energy - fci < CHEMICAL_ACCURACY


# ------------------------------------------------------------------ gradients


class TestGradient:
    def test_single_rotation_toy_case(self):
        ansatz = toy_rx_ansatz()
        h = PauliSum.from_text({"Y0": 1.0})
        gradient = analytic_gradient(ansatz, [0.0], h)
        assert gradient[0] == pytest.approx(-1.0, abs=1e-12)
        for theta in (0.3, 1.1, -0.7):
            energy = estimate_energy(ansatz, [theta], h).mean
            assert energy == pytest.approx(-np.sin(theta), abs=1e-12)
            slope = analytic_gradient(ansatz, [theta], h)[0]
            assert slope == pytest.approx(-np.cos(theta), abs=1e-12)

    @pytest.mark.parametrize("family", [UCCSD, HARDWARE_EFFICIENT,
                                        HAMILTONIAN_VARIATIONAL, LDCA])
    def test_matches_central_differences(self, family, h2, h2_uccsd):
        ints, scheme, ferm, h, _ = h2
        if family == UCCSD:
            ansatz = h2_uccsd
        elif family == HARDWARE_EFFICIENT:
            ansatz = build_hardware_efficient(4, 2)
        elif family == HAMILTONIAN_VARIATIONAL:
            parts = HamiltonianParts.from_fermion(ferm, scheme)
            ansatz = build_hamiltonian_variational(
                parts, 2, preparation_gates(hf_occupation(ints), scheme))
        else:
            ansatz = build_ldca(4, 1)
        rng = make_rng(hash(family) % 2 ** 31)
        step = 1e-5
        for _ in range(5):
            theta = rng.uniform(-1.0, 1.0, ansatz.n_params)
            exact = analytic_gradient(ansatz, theta, h)
            numeric = np.zeros_like(exact)
            for k in range(len(theta)):
                plus, minus = theta.copy(), theta.copy()
                plus[k] += step
                minus[k] -= step
                numeric[k] = (estimate_energy(ansatz, plus, h).mean
                              - estimate_energy(ansatz, minus, h).mean) / (2 * step)
            assert np.max(np.abs(exact - numeric)) < 1e-6

    def test_shared_slot_occurrences_accumulate(self):
        circuit = Circuit(1)
        circuit.rx(0, slot=0)
        circuit.rx(0, slot=0)
        ansatz = Ansatz(circuit, [], HARDWARE_EFFICIENT)
        h = PauliSum.from_text({"Z0": 1.0})
        theta = 0.4
        slope = analytic_gradient(ansatz, [theta], h)[0]
        # E = cos(2 theta), so dE/dtheta = -2 sin(2 theta)
        assert slope == pytest.approx(-2.0 * np.sin(2 * theta), abs=1e-12)

    def test_unsupported_parametrized_gate(self):
        circuit = Circuit(1)
        circuit.add(Gate("t", (0,), slot=0))
        ansatz = Ansatz(circuit, [], HARDWARE_EFFICIENT)
        with pytest.raises(UnsupportedGate):
            analytic_gradient(ansatz, [0.1], PauliSum.from_text({"Z0": 1.0}))

    def test_reference_prep_must_be_fixed(self):
        with pytest.raises(ValueError):
            Ansatz(Circuit(1), [Gate("rx", (0,), slot=0)], HARDWARE_EFFICIENT)


# -------------------------------------------------------------------- penalty


class TestPenalty:
    def test_z_minus_identity_squared(self):
        h = PauliSum.from_text({"X0": 1.0})
        out = penalty_hamiltonian(h, [(PauliSum.from_text({"Z0": 1.0}), 1.0, 1.0)])
        assert out.coeff("") == pytest.approx(2.0)
        assert out.coeff("Z0") == pytest.approx(-2.0)
        assert out.coeff("X0") == pytest.approx(1.0)

    def test_in_sector_energies_unchanged(self, h2, h2_uccsd):
        ints, scheme, _, h, _ = h2
        charge = encode_operator(number_operator(range(4)), scheme)
        penalized = penalty_hamiltonian(h, [(charge, float(ints.n_electrons), 5.0)])
        rng = make_rng(8)
        for _ in range(5):
            theta = rng.uniform(-0.5, 0.5, 3)
            bare = estimate_energy(h2_uccsd, theta, h).mean
            shifted = estimate_energy(h2_uccsd, theta, penalized).mean
            assert abs(bare - shifted) < 1e-10

    def test_out_of_sector_energies_rise(self, h2):
        _, scheme, _, h, _ = h2
        charge = encode_operator(number_operator(range(4)), scheme)
        penalized = penalty_hamiltonian(h, [(charge, 2.0, 5.0)])
        vacuum = build_hardware_efficient(4, 1)
        theta = np.zeros(vacuum.n_params)
        bare = estimate_energy(vacuum, theta, h).mean
        shifted = estimate_energy(vacuum, theta, penalized).mean
        assert shifted == pytest.approx(bare + 5.0 * 4.0, abs=1e-10)

    def test_validation(self):
        h = PauliSum.from_text({"Z0": 1.0})
        with pytest.raises(ValueError):
            penalty_hamiltonian(h, [(PauliSum.from_text({"Z0": 1.0}), 0.0, -1.0)])
        skew = PauliSum.from_text({"X0": 1j})
        with pytest.raises(ValueError):
            penalty_hamiltonian(h, [(skew, 0.0, 1.0)])


# ----------------------------------------------------------------- optimizers


class TestOptimizers:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            OptimizerConfig(method="newton")
        with pytest.raises(ValueError):
            OptimizerConfig(tolerance=0.0)
        with pytest.raises(ValueError):
            OptimizerConfig(max_evals=0)

    def test_simplex_solves_single_rotation(self):
        ansatz = toy_rx_ansatz()
        h = PauliSum.from_text({"Z0": 1.0})
        config = OptimizerConfig(method=NELDER_MEAD, max_evals=500,
                                 tolerance=1e-12)
        result = optimize(ansatz, h, config, initial=[1.0])
        assert result.converged
        assert result.best_energy == pytest.approx(-1.0, abs=1e-9)
        assert result.best_params[0] == pytest.approx(np.pi, abs=1e-4)

    def test_perturbation_search_solves_single_rotation(self):
        ansatz = toy_rx_ansatz()
        h = PauliSum.from_text({"Z0": 1.0})
        config = OptimizerConfig(method=SPSA, max_evals=2000, seed=1,
                                 spsa_a=0.5, spsa_c=0.1)
        result = optimize(ansatz, h, config, initial=[1.0])
        assert result.best_energy == pytest.approx(-1.0, abs=1e-3)

    def test_descent_solves_cluster_ansatz(self, h2, h2_uccsd):
        _, _, _, h, fci = h2
        config = OptimizerConfig(method=GRADIENT_DESCENT, max_evals=400,
                                 tolerance=1e-10, learning_rate=0.3, seed=0)
        result = optimize(h2_uccsd, h, config)
        assert result.converged
        assert result.best_energy == pytest.approx(fci, abs=1e-8)

    def test_budget_exhaustion_is_soft(self, h2, h2_uccsd):
        _, _, _, h, _ = h2
        config = OptimizerConfig(method=NELDER_MEAD, max_evals=5,
                                 tolerance=1e-12, seed=0)
        result = optimize(h2_uccsd, h, config)
        assert not result.converged
        assert result.best_params is not None
        assert np.isfinite(result.best_energy)

    def test_best_energy_is_trace_minimum(self, h2, h2_uccsd):
        _, _, _, h, _ = h2
        for method, kwargs in ((NELDER_MEAD, {}), (SPSA, {"spsa_a": 0.4}),
                               (GRADIENT_DESCENT, {"learning_rate": 0.2})):
            config = OptimizerConfig(method=method, max_evals=120,
                                     tolerance=1e-12, seed=2, **kwargs)
            result = optimize(h2_uccsd, h, config)
            energies = [e for e, _ in result.trace]
            assert result.best_energy == pytest.approx(min(energies), abs=1e-12)
            counts = [n for _, n in result.trace]
            assert counts == sorted(counts)
            assert counts[-1] <= 120

    def test_exact_mode_respects_variational_bound(self, h2, h2_uccsd):
        _, _, _, h, fci = h2
        config = OptimizerConfig(method=NELDER_MEAD, max_evals=600,
                                 tolerance=1e-12, seed=4)
        result = optimize(h2_uccsd, h, config)
        assert all(e >= fci - 1e-9 for e, _ in result.trace)

    def test_seeded_runs_reproduce_exactly(self, h2_tapered):
        reduced, _ = h2_tapered
        ansatz = build_hardware_efficient(2, 2)
        config = OptimizerConfig(method=SPSA, max_evals=400, seed=9)
        first = optimize(ansatz, reduced, config, shots=64)
        second = optimize(ansatz, reduced, config, shots=64)
        assert first.best_energy == second.best_energy
        assert np.array_equal(first.best_params, second.best_params)
        assert first.trace == second.trace
        assert first.shots_used == second.shots_used > 0

    def test_initial_parameters_by_family(self, h2_uccsd):
        assert np.array_equal(initial_parameters(h2_uccsd), np.zeros(3))
        spread = initial_parameters(build_hardware_efficient(3, 1), seed=1)
        assert spread.shape == (12,)
        assert np.all(np.abs(spread) <= 0.01)
        assert np.any(spread != 0)


class TestEstimateEnergy:
    def test_exact_mode_reports_zero_spread(self, h2, h2_uccsd):
        _, _, _, h, _ = h2
        estimate = estimate_energy(h2_uccsd, np.zeros(3), h)
        assert estimate.std_error == 0.0
        assert estimate.shots == 1

    def test_shots_need_a_generator(self, h2, h2_uccsd):
        _, _, _, h, _ = h2
        with pytest.raises(ValueError):
            estimate_energy(h2_uccsd, np.zeros(3), h, shots=100)

    def test_zero_rate_noise_matches_exact(self, h2, h2_uccsd):
        _, _, _, h, _ = h2
        exact = estimate_energy(h2_uccsd, np.zeros(3), h).mean
        noisy = estimate_energy(h2_uccsd, np.zeros(3), h,
                                noise=NoiseModel(0.0, 0.0),
                                rng=make_rng(1), trajectories=8)
        assert noisy.mean == pytest.approx(exact, abs=1e-12)
        assert noisy.std_error == 0.0

    def test_noisy_estimate_reports_spread(self, h2, h2_uccsd):
        _, _, _, h, _ = h2
        noisy = estimate_energy(h2_uccsd, np.zeros(3), h,
                                noise=NoiseModel(0.02, 0.02),
                                rng=make_rng(1), trajectories=64)
        assert noisy.std_error > 0
        assert noisy.shots == 64

    def test_parameter_length_checked(self, h2, h2_uccsd):
        _, _, _, h, _ = h2
        with pytest.raises(ValueError):
            estimate_energy(h2_uccsd, np.zeros(2), h)
