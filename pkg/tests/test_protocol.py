"""Protocol algebra and trial-engine unit tests."""

import numpy as np
import pytest

from nlcnot import cavity, harness, noise, protocol
from nlcnot.protocol import (
    InvalidParams,
    MeasurementRecord,
    NodeInput,
    TrialEngine,
    build_initial_state,
    correction_table,
    derive_correction_table,
    reference_cnot,
    run_ideal,
    run_trial,
    step_a,
    step_b,
)
from nlcnot.qstate import NotNormalized

IDEAL_CHANNEL = cavity.cpf_channel(0.0, mode=cavity.IDEAL)


def random_pair(rng):
    return NodeInput.random(rng), NodeInput.random(rng)


class TestNodeInput:
    def test_balanced(self):
        n = NodeInput.balanced()
        assert abs(n.amp0) == pytest.approx(1 / np.sqrt(2))

    def test_unnormalized_rejected(self):
        with pytest.raises(NotNormalized):
            NodeInput(1.0, 1.0)

    def test_random_normalized(self):
        rng = np.random.default_rng(5)
        n = NodeInput.random(rng)
        assert abs(n.amp0) ** 2 + abs(n.amp1) ** 2 == pytest.approx(1.0)


class TestReferenceCnot:
    def test_basis_states(self):
        out = reference_cnot(NodeInput(1, 0), NodeInput(1, 0))
        assert np.allclose(out, [1, 0, 0, 0])
        out = reference_cnot(NodeInput(0, 1), NodeInput(1, 0))
        assert np.allclose(out, [0, 0, 0, 1])  # |11>

    def test_general_amplitudes(self):
        alpha, beta = 0.6, 0.8
        a, b = 0.8, 0.6j
        out = reference_cnot(NodeInput(alpha, beta), NodeInput(a, b))
        # alpha*a|00> + alpha*b|01> + beta*b|10> + beta*a|11>
        assert np.allclose(out, [alpha * a, alpha * b, beta * b, beta * a])


class TestInitialState:
    def test_ebit_amplitudes(self):
        rho = build_initial_state(NodeInput(1, 0), NodeInput(1, 0))
        # support on |00 1 0> (idx 0b0010) and |00 0 1> (idx 0b0001)
        assert rho.mat[0b0010, 0b0010] == pytest.approx(0.5)
        assert rho.mat[0b0001, 0b0001] == pytest.approx(0.5)
        assert rho.mat[0b0010, 0b0001] == pytest.approx(0.5)
        assert rho.trace == pytest.approx(1.0)

    def test_photon_marginal_maximally_mixed(self):
        rho = build_initial_state(NodeInput.balanced(), NodeInput.balanced())
        marg = rho.partial_trace(("A1",))
        assert np.max(np.abs(marg.mat - np.eye(2) / 2)) < 1e-12


def eq1_expected(node_a):
    """Post-step-A amplitudes on (A, A1, B1), A the most significant bit."""
    alpha, beta = node_a.amp0, node_a.amp1
    v = np.zeros(8, dtype=complex)
    v[0b010] = alpha / np.sqrt(2)  # |0>_A |1 0>
    v[0b001] = alpha / np.sqrt(2)  # |0>_A |0 1>
    v[0b100] = beta / np.sqrt(2)   # |1>_A |0 0>
    v[0b111] = beta / np.sqrt(2)   # |1>_A |1 1>
    return v


def eq2_expected(node_a, node_b):
    """Post-step-B amplitudes on (A, B, B1) for the branch r_a = v."""
    alpha, beta = node_a.amp0, node_a.amp1
    a, b = node_b.amp0, node_b.amp1
    v = np.zeros(8, dtype=complex)
    # |1>_B1 branch: -alpha*a|01> - alpha*b|00> + beta*a|10> + beta*b|11>
    v[0b011] += -alpha * a
    v[0b001] += -alpha * b
    v[0b101] += beta * a
    v[0b111] += beta * b
    # |0>_B1 branch: +alpha*a|01> + alpha*b|00> + beta*a|10> + beta*b|11>
    v[0b010] += alpha * a
    v[0b000] += alpha * b
    v[0b100] += beta * a
    v[0b110] += beta * b
    return v / np.sqrt(2.0)


class TestGoldenAmplitudes:
    def test_step_a_matches_display(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            node_a, node_b = random_pair(rng)
            state, survival = step_a(build_initial_state(node_a, node_b), IDEAL_CHANNEL)
            assert survival == pytest.approx(1.0, abs=1e-12)
            marg = state.partial_trace(("A", "A1", "B1"))
            expect = eq1_expected(node_a)
            assert np.max(np.abs(marg.mat - np.outer(expect, expect.conj()))) < 1e-12

    def test_step_b_branch_v_matches_display(self):
        rng = np.random.default_rng(22)
        for _ in range(10):
            node_a, node_b = random_pair(rng)
            state, _ = step_a(build_initial_state(node_a, node_b), IDEAL_CHANNEL)
            _, branch = state.project("A1", 0)  # r_a = v
            reduced = branch.partial_trace(("A", "B", "B1"))
            after, _ = step_b(reduced, IDEAL_CHANNEL)
            expect = eq2_expected(node_a, node_b)
            assert np.max(np.abs(after.mat - np.outer(expect, expect.conj()))) < 1e-12


class TestCorrectionTable:
    def test_worked_example_entry(self):
        assert correction_table().correction("v", "h") == ("Z", "X")

    def test_full_table(self):
        assert correction_table().entries == {
            ("v", "v"): ("I", "X"),
            ("v", "h"): ("Z", "X"),
            ("h", "v"): ("I", "I"),
            ("h", "h"): ("Z", "I"),
        }

    def test_stability(self):
        tables = [derive_correction_table() for _ in range(3)]
        assert all(t.entries == tables[0].entries for t in tables)

    def test_record_validation(self):
        with pytest.raises(ValueError):
            MeasurementRecord("x", "v")


class TestRunIdeal:
    def test_basis_input(self):
        results = run_ideal(NodeInput(1, 0), NodeInput(0, 1))
        for res in results:
            assert res.fidelity == pytest.approx(1.0, abs=1e-12)
            # corrected state is |01>
            assert res.state.mat[0b01, 0b01] == pytest.approx(1.0, abs=1e-12)

    def test_creates_remote_entanglement(self):
        results = run_ideal(NodeInput.balanced(), NodeInput(1, 0))
        bell = np.zeros(4, dtype=complex)
        bell[0b00] = bell[0b11] = 1 / np.sqrt(2)
        for res in results:
            assert res.state.fidelity(bell) == pytest.approx(1.0, abs=1e-12)

    def test_random_inputs_exact(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            results = run_ideal(*random_pair(rng))
            assert sum(r.probability for r in results) == pytest.approx(1.0, abs=1e-12)
            for res in results:
                assert res.probability == pytest.approx(0.25, abs=1e-12)
                assert res.fidelity >= 1 - 1e-12

    def test_correction_is_involution(self):
        # applying a table entry twice restores the uncorrected branch state
        node_a, node_b = NodeInput.balanced(), NodeInput.balanced()
        for record, prob, reduced in protocol._enumerate_branches(
            node_a, node_b, IDEAL_CHANNEL
        ):
            names = correction_table().correction(record.r_a, record.r_b)
            twice = protocol.apply_correction(
                protocol.apply_correction(reduced, names), names
            )
            assert np.max(np.abs(twice.mat - reduced.mat)) < 1e-12


class TestTrialEngine:
    def test_ideal_no_noise_accepts_with_unit_fidelity(self):
        out = run_trial(
            NodeInput.balanced(), NodeInput.balanced(), 100.0, 100.0,
            noise.NoiseParams(), harness.trial_tape(0, 0), mode=cavity.IDEAL,
        )
        assert out.status == "accepted"
        assert out.fidelity == pytest.approx(1.0, abs=1e-12)

    def test_total_loss_never_accepts(self):
        engine = TrialEngine(
            NodeInput.balanced(), NodeInput.balanced(), 100.0, 100.0,
            noise.NoiseParams(p_l=1.0),
        )
        for i in range(50):
            assert engine.run(harness.trial_tape(0, i)).status == "discard"

    def test_deterministic_given_tape(self):
        engine = TrialEngine(
            NodeInput.balanced(), NodeInput.balanced(), 50.0, 50.0,
            noise.NoiseParams(p_l=0.1, p_dc=0.01, f=0.02),
        )
        a = [engine.run(harness.trial_tape(9, i)).status for i in range(100)]
        b = [engine.run(harness.trial_tape(9, i)).status for i in range(100)]
        assert a == b

    def test_imperfect_fidelity_near_analytic(self):
        engine = TrialEngine(
            NodeInput.balanced(), NodeInput.balanced(), 100.0, 100.0,
            noise.NoiseParams(),
        )
        fids = [engine.run(harness.trial_tape(1, i)).fidelity for i in range(2000)]
        target = noise.analytic_fidelity(
            *NodeInput.balanced().vector, *NodeInput.balanced().vector, 100.0, 100.0
        )
        assert np.mean(fids) == pytest.approx(target, abs=5e-4)

    def test_loss_scatter_model_discards(self):
        engine = TrialEngine(
            NodeInput.balanced(), NodeInput.balanced(), 1.0, 1.0,
            noise.NoiseParams(), scatter="loss",
        )
        statuses = {engine.run(harness.trial_tape(2, i)).status for i in range(500)}
        assert "discard" in statuses  # cavity scattering removes the photon

    def test_dark_counts_can_false_positive(self):
        engine = TrialEngine(
            NodeInput.balanced(), NodeInput.balanced(), 100.0, 100.0,
            noise.NoiseParams(p_l=0.5, p_dc=0.2),
        )
        statuses = [engine.run(harness.trial_tape(3, i)).status for i in range(2000)]
        assert "false_positive" in statuses

    def test_mismatch_skips_interaction(self):
        # f = 1: the photon never enters the cavity, the gate degrades but
        # detection still happens
        engine = TrialEngine(
            NodeInput.balanced(), NodeInput.balanced(), 100.0, 100.0,
            noise.NoiseParams(f=1.0),
        )
        outs = [engine.run(harness.trial_tape(4, i)) for i in range(200)]
        assert all(o.status == "accepted" for o in outs)
        assert np.mean([o.fidelity for o in outs]) < 0.9

    def test_invalid_mode_and_scatter(self):
        with pytest.raises(InvalidParams):
            TrialEngine(
                NodeInput.balanced(), NodeInput.balanced(), 1.0, 1.0,
                noise.NoiseParams(), mode="bogus",
            )
        with pytest.raises(InvalidParams):
            TrialEngine(
                NodeInput.balanced(), NodeInput.balanced(), 1.0, 1.0,
                noise.NoiseParams(), scatter="bogus",
            )
