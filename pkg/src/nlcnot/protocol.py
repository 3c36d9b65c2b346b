"""Nonlocal CNOT protocol between two cavity nodes.

Node A holds the control atom, node B the target atom, and a shared
polarization-entangled photon pair (A1 at Alice, B1 at Bob, encoded
h -> |1>, v -> |0>) acts as the channel resource.

Step A: photon A1 is Hadamard-rotated, reflects off cavity A (controlled
phase flip with atom A), is rotated again and detected -> result r_a.
Step B: atom B is Hadamard-conjugated around the CPF with photon B1 (a CNOT
with the photon as control), the photon is Hadamard-rotated and detected
-> result r_b.  Step C: local Pauli corrections keyed on (r_a, r_b) finish
the gate.

`run_trial` adds the noise model: per-side mode mismatch, cavity-induced
photon loss, exogenous photon loss, and detector dark counts, with the joint
density matrix as ground truth throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import cavity, noise
from .qstate import (
    DEFAULT_REGISTER,
    H,
    I2,
    X,
    Z,
    DensityMatrix,
    KrausChannel,
    NotNormalized,
    pure_state,
)

V, HPOL = "v", "h"  # detector/polarization outcomes; v -> bit 0, h -> bit 1

PAULIS = {"I": I2, "X": X, "Z": Z, "ZX": Z @ X}


class ProtocolError(Exception):
    pass


class NoValidCorrection(ProtocolError):
    pass


class AmbiguousCorrection(ProtocolError):
    pass


class InvalidParams(ProtocolError):
    pass


@dataclass(frozen=True)
class NodeInput:
    """Single-qubit input amplitudes (amp0*|0> + amp1*|1>), normalized."""

    amp0: complex
    amp1: complex

    def __post_init__(self):
        n = abs(self.amp0) ** 2 + abs(self.amp1) ** 2
        if abs(n - 1.0) > 1e-12:
            raise NotNormalized(f"|amp0|^2 + |amp1|^2 = {n} != 1")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)

    @staticmethod
    def balanced() -> "NodeInput":
        return NodeInput(1 / np.sqrt(2), 1 / np.sqrt(2))

    @staticmethod
    def random(rng: np.random.Generator) -> "NodeInput":
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        return NodeInput(v[0], v[1])


@dataclass(frozen=True)
class MeasurementRecord:
    """Recorded detector results for one accepted branch/trial."""

    r_a: str
    r_b: str

    def __post_init__(self):
        if self.r_a not in (V, HPOL) or self.r_b not in (V, HPOL):
            raise ValueError(f"results must be 'v' or 'h', got {self.r_a!r}, {self.r_b!r}")


@dataclass(frozen=True)
class CorrectionTable:
    """Map (r_a, r_b) -> (Pauli on A, Pauli on B), names in {I, X, Z, ZX}."""

    entries: dict[tuple[str, str], tuple[str, str]]

    def correction(self, r_a: str, r_b: str) -> tuple[str, str]:
        return self.entries[(r_a, r_b)]


@dataclass
class ProtocolResult:
    """One enumerated branch of the ideal protocol."""

    record: MeasurementRecord
    probability: float
    state: DensityMatrix  # post-correction joint state of (A, B)
    fidelity: float


@dataclass
class TrialOutcome:
    """Per-trial record of a noisy protocol run."""

    status: str  # accepted | discard | false_positive
    record: MeasurementRecord | None
    fidelity: float | None
    side_a: noise.ClickPattern | None = None
    side_b: noise.ClickPattern | None = None

    @property
    def accepted(self) -> bool:
        return self.status in ("accepted", "false_positive")


# --------------------------------------------------------------------- ideal


def reference_cnot(node_a: NodeInput, node_b: NodeInput) -> np.ndarray:
    """CNOT (control A, target B) applied to the product input, as amplitudes
    over |A B> in the engine's bit convention."""
    psi = np.kron(node_a.vector, node_b.vector)
    cnot = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    )
    return cnot @ psi


def build_initial_state(node_a: NodeInput, node_b: NodeInput) -> DensityMatrix:
    """Product of the two node states with the symmetric photon pair
    (|h>_A1 |v>_B1 + |v>_A1 |h>_B1)/sqrt(2) on register (A, B, A1, B1)."""
    ebit = np.zeros(4, dtype=complex)
    ebit[0b10] = 1 / np.sqrt(2)  # |1>_A1 |0>_B1
    ebit[0b01] = 1 / np.sqrt(2)  # |0>_A1 |1>_B1
    psi = np.kron(np.kron(node_a.vector, node_b.vector), ebit)
    return pure_state(DEFAULT_REGISTER, psi)


def step_a(state: DensityMatrix, channel: KrausChannel) -> tuple[DensityMatrix, float]:
    """Alice's half: H on photon A1, CPF with atom A, H on photon A1.

    Returns (state, survival); the state is left unnormalized when the
    channel is sub-normalized.
    """
    state = state.apply_unitary(H, ("A1",))
    state, survival = state.apply_kraus(channel, ("A", "A1"))
    state = state.apply_unitary(H, ("A1",))
    return state, survival


def step_b(state: DensityMatrix, channel: KrausChannel) -> tuple[DensityMatrix, float]:
    """Bob's half: CNOT with photon B1 as control (H on atom B around the
    CPF), then H on photon B1 before detection."""
    state = state.apply_unitary(H, ("B",))
    state, survival = state.apply_kraus(channel, ("B", "B1"))
    state = state.apply_unitary(H, ("B",))
    state = state.apply_unitary(H, ("B1",))
    return state, survival


_PROBE_INPUTS = [
    (NodeInput(1, 0), NodeInput(1, 0)),
    (NodeInput(0, 1), NodeInput(1, 0)),
    (NodeInput(1, 0), NodeInput(0, 1)),
    (NodeInput.balanced(), NodeInput.balanced()),
    (NodeInput(1 / np.sqrt(2), 1j / np.sqrt(2)), NodeInput.balanced()),
    (NodeInput.balanced(), NodeInput(1 / np.sqrt(2), 1j / np.sqrt(2))),
]

_OUTCOME_BIT = {V: 0, HPOL: 1}


def _enumerate_branches(node_a: NodeInput, node_b: NodeInput, channel: KrausChannel):
    """Yield (record, probability, uncorrected (A, B) state) for all branches."""
    state = build_initial_state(node_a, node_b)
    state, _ = step_a(state, channel)
    for r_a in (V, HPOL):
        p_a, st_a = state.project("A1", _OUTCOME_BIT[r_a])
        st_a = st_a.partial_trace(("A", "B", "B1"))
        st_b_full, _ = step_b(st_a, channel)
        for r_b in (V, HPOL):
            p_b, st_b = st_b_full.project("B1", _OUTCOME_BIT[r_b])
            reduced = st_b.partial_trace(("A", "B"))
            yield MeasurementRecord(r_a, r_b), p_a * p_b, reduced


def apply_correction(state: DensityMatrix, names: tuple[str, str]) -> DensityMatrix:
    state = state.apply_unitary(PAULIS[names[0]], ("A",))
    return state.apply_unitary(PAULIS[names[1]], ("B",))


def derive_correction_table() -> CorrectionTable:
    """Brute-force search of the Pauli feed-forward table.

    For every measurement branch, the unique pair from {I, X, Z, ZX}^2 that
    maps the branch state onto the reference CNOT output (fidelity 1 within
    1e-10) across an informationally complete probe set.
    """
    channel = cavity.cpf_channel(0.0, mode=cavity.IDEAL)
    branch_states: dict[tuple[str, str], list] = {}
    references = []
    for node_a, node_b in _PROBE_INPUTS:
        references.append(reference_cnot(node_a, node_b))
        for record, _, reduced in _enumerate_branches(node_a, node_b, channel):
            branch_states.setdefault((record.r_a, record.r_b), []).append(reduced)

    entries = {}
    for key, states in sorted(branch_states.items()):
        winners = []
        for pa, pb in product(PAULIS, PAULIS):
            ok = all(
                apply_correction(st, (pa, pb)).fidelity(ref) >= 1 - 1e-10
                for st, ref in zip(states, references)
            )
            if ok:
                winners.append((pa, pb))
        if not winners:
            raise NoValidCorrection(f"no Pauli pair corrects branch {key}")
        if len(winners) > 1:
            raise AmbiguousCorrection(f"branch {key} admits {winners}")
        entries[key] = winners[0]
    return CorrectionTable(entries)


_TABLE_CACHE: CorrectionTable | None = None


def correction_table() -> CorrectionTable:
    """Cached table; derivation is deterministic so one derivation suffices."""
    global _TABLE_CACHE
    if _TABLE_CACHE is None:
        _TABLE_CACHE = derive_correction_table()
    return _TABLE_CACHE


def run_ideal(node_a: NodeInput, node_b: NodeInput) -> list[ProtocolResult]:
    """Exact enumeration of all four measurement branches with the ideal CPF."""
    table = correction_table()
    reference = reference_cnot(node_a, node_b)
    channel = cavity.cpf_channel(0.0, mode=cavity.IDEAL)
    results = []
    for record, prob, reduced in _enumerate_branches(node_a, node_b, channel):
        corrected = apply_correction(reduced, table.correction(record.r_a, record.r_b))
        results.append(
            ProtocolResult(record, prob, corrected, corrected.fidelity(reference))
        )
    return results


# --------------------------------------------------------------------- noisy


TAPE_LENGTH = 12  # uniforms consumed per trial, fixed layout (6 per side)


@dataclass
class TrialEngine:
    """Deterministic trial sampler for one parameter point.

    Consumes a fixed-layout tape of TAPE_LENGTH uniforms per trial:
    per side (A then B): [mismatch, cavity loss, exogenous loss, click
    outcome, dark v, dark h].  The conditional quantum evolution depends
    only on the discrete event prefix, so states and probabilities are
    memoized per prefix; per-trial cost is then dictionary lookups.
    """

    node_a: NodeInput
    node_b: NodeInput
    big_g_a: float
    big_g_b: float
    noise_params: noise.NoiseParams
    mode: str = cavity.NARROWBAND_IMPERFECT
    p_z_a: float = 1.0
    p_z_b: float = 1.0
    # Semantics of the imperfect reflection's missing coherence weight.
    # "dephase" (default): each reflection phase-damps the node atom's
    # energy-basis coherence by the narrowband reflection amplitude r1 while
    # populations and the detection path are untouched.  This reproduces the
    # closed-form gate fidelity 1 - 2(|ab|^2 Delta_B + |alpha beta|^2 Delta_A)
    # at first order in 1/G.
    # "loss": the literal sub-normalized Kraus model; the scattered photon is
    # removed (no click, trial discarded).  Accepted branches then stay pure,
    # so their infidelity is O(1/G^2): post-selection cancels the first-order
    # coherence damage.  Kept as a diagnostic.
    scatter: str = "dephase"

    def __post_init__(self):
        if self.mode not in (cavity.IDEAL, cavity.NARROWBAND_IMPERFECT):
            raise InvalidParams(f"unknown mode {self.mode!r}")
        if self.scatter not in ("dephase", "loss"):
            raise InvalidParams(f"unknown scatter model {self.scatter!r}")
        self.noise_params.validate()
        self._channel_a, self._damp_a = self._build_channel(self.big_g_a, self.p_z_a)
        self._channel_b, self._damp_b = self._build_channel(self.big_g_b, self.p_z_b)
        self._table = correction_table()
        self._reference = reference_cnot(self.node_a, self.node_b)
        self._initial = build_initial_state(self.node_a, self.node_b)
        self._cache_a: dict = {}
        self._cache_b: dict = {}
        self._cache_fid: dict = {}

    def _build_channel(self, big_g: float, p_z: float) -> tuple[KrausChannel, KrausChannel | None]:
        """(CPF channel on (atom, photon), optional atom phase-damping channel)."""
        if self.mode == cavity.IDEAL:
            return cavity.cpf_channel(big_g, p_z, cavity.IDEAL), None
        if self.scatter == "loss":
            return cavity.cpf_channel(big_g, p_z, cavity.NARROWBAND_IMPERFECT), None
        r1 = cavity.ideal_reflection(p_z, big_g)
        damp = KrausChannel(
            [
                np.diag([1.0, r1]).astype(complex),
                np.diag([0.0, math.sqrt(max(0.0, 1.0 - r1 * r1))]).astype(complex),
            ]
        )
        return cavity.cpf_channel(big_g, p_z, cavity.IDEAL), damp

    # -- side A -------------------------------------------------------------

    def _side_a(self, mismatch: bool):
        """State after H-CPF-H on A1, with survival and click probabilities."""
        key = mismatch
        if key not in self._cache_a:
            pre = self._initial.apply_unitary(H, ("A1",))
            if mismatch:
                state, survival = pre, 1.0
            else:
                state, survival = pre.apply_kraus(self._channel_a, ("A", "A1"))
                if self._damp_a is not None:
                    state, _ = state.apply_kraus(self._damp_a, ("A",))
            lost_state = None
            if survival < 1.0 - 1e-15:
                # cavity loss branch: atom relaxes to |0>, photon scattered
                lost, w = state_after_loss(pre, self._channel_a, ("A", "A1"))
                lost_state = lost.partial_trace(("A", "B", "B1")) if w > 1e-15 else None
            kept = DensityMatrix(state.register, state.mat / survival)
            kept = kept.apply_unitary(H, ("A1",))
            p_v, _ = kept.project("A1", 0, renormalize=False)
            self._cache_a[key] = (kept, survival, lost_state, p_v)
        return self._cache_a[key]

    def _after_a(self, mismatch: bool, loss: str | None, outcome: int | None):
        """Reduced (A, B, B1) state after side A's photon is gone."""
        key = (mismatch, loss, outcome)
        if key not in self._cache_a.setdefault("post", {}):
            kept, survival, lost_state, p_v = self._side_a(mismatch)
            if loss == "cavity":
                st = lost_state
            elif loss == "exogenous":
                st = kept.partial_trace(("A", "B", "B1"))
            else:
                _, projected = kept.project("A1", outcome)
                st = projected.partial_trace(("A", "B", "B1"))
            self._cache_a["post"][key] = st
        return self._cache_a["post"][key]

    # -- side B -------------------------------------------------------------

    def _side_b(self, key_a, mismatch: bool):
        key = (key_a, mismatch)
        if key not in self._cache_b:
            pre = self._after_a(*key_a).apply_unitary(H, ("B",))
            if mismatch:
                state, survival = pre, 1.0
            else:
                state, survival = pre.apply_kraus(self._channel_b, ("B", "B1"))
            lost_state = None
            if survival < 1.0 - 1e-15:
                lost, w = state_after_loss(pre, self._channel_b, ("B", "B1"))
                if w > 1e-15:
                    lost = lost.apply_unitary(H, ("B",))
                    lost_state = lost.partial_trace(("A", "B"))
            kept = DensityMatrix(state.register, state.mat / survival)
            kept = kept.apply_unitary(H, ("B",))
            if not mismatch and self._damp_b is not None:
                # atom-B coherence damage, in the energy basis after the step
                kept, _ = kept.apply_kraus(self._damp_b, ("B",))
            kept = kept.apply_unitary(H, ("B1",))
            p_v, _ = kept.project("B1", 0, renormalize=False)
            self._cache_b[key] = (kept, survival, lost_state, p_v)
        return self._cache_b[key]

    def _after_b(self, key_a, mismatch: bool, loss: str | None, outcome: int | None):
        key = (key_a, mismatch, loss, outcome)
        if key not in self._cache_b.setdefault("post", {}):
            kept, survival, lost_state, p_v = self._side_b(key_a, mismatch)
            if loss == "cavity":
                st = lost_state
            elif loss == "exogenous":
                st = kept.partial_trace(("A", "B"))
            else:
                _, projected = kept.project("B1", outcome)
                st = projected.partial_trace(("A", "B"))
            self._cache_b["post"][key] = st
        return self._cache_b["post"][key]

    def _corrected_fidelity(self, key_b, record: MeasurementRecord) -> float:
        key = (key_b, record.r_a, record.r_b)
        if key not in self._cache_fid:
            state = self._after_b(*key_b)
            corrected = apply_correction(state, self._table.correction(record.r_a, record.r_b))
            self._cache_fid[key] = corrected.fidelity(self._reference)
        return self._cache_fid[key]

    # -- sampling -----------------------------------------------------------

    def _sample_side(self, tape, off, survival_fn, p_v_fn):
        """Walk the six tape slots of one side; returns the event tuple."""
        np_ = self.noise_params
        mismatch = tape[off + 0] < np_.f
        survival = survival_fn(mismatch)
        loss = None
        if tape[off + 1] >= survival:
            loss = "cavity"
        elif tape[off + 2] < np_.p_l:
            loss = "exogenous"
        outcome = None
        if loss is None:
            outcome = 0 if tape[off + 3] < p_v_fn(mismatch) else 1
        dark_v = tape[off + 4] < np_.p_dc
        dark_h = tape[off + 5] < np_.p_dc
        return mismatch, loss, outcome, dark_v, dark_h

    def run(self, tape: np.ndarray) -> TrialOutcome:
        """One trial from a TAPE_LENGTH uniform tape."""
        mm_a, loss_a, out_a, dv_a, dh_a = self._sample_side(
            tape, 0, lambda mm: self._side_a(mm)[1], lambda mm: self._side_a(mm)[3]
        )
        pattern_a = noise.classify_clicks(out_a, dv_a, dh_a)
        key_a = (mm_a, loss_a, out_a)

        mm_b, loss_b, out_b, dv_b, dh_b = self._sample_side(
            tape,
            6,
            lambda mm: self._side_b(key_a, mm)[1],
            lambda mm: self._side_b(key_a, mm)[3],
        )
        pattern_b = noise.classify_clicks(out_b, dv_b, dh_b)
        key_b = (key_a, mm_b, loss_b, out_b)

        if pattern_a.status != "accept" or pattern_b.status != "accept":
            return TrialOutcome("discard", None, None, pattern_a, pattern_b)

        record = MeasurementRecord(pattern_a.recorded, pattern_b.recorded)
        fid = self._corrected_fidelity(key_b, record)
        status = (
            "false_positive"
            if pattern_a.false_positive or pattern_b.false_positive
            else "accepted"
        )
        return TrialOutcome(status, record, fid, pattern_a, pattern_b)


def state_after_loss(
    state: DensityMatrix, channel: KrausChannel, targets: tuple[str, str]
) -> tuple[DensityMatrix, float]:
    """Normalized state conditioned on the channel's loss branch, with weight."""
    loss_channel = KrausChannel(channel.loss_matrices)
    lost, w = state.apply_kraus(loss_channel, targets)
    if w > 1e-15:
        lost = DensityMatrix(lost.register, lost.mat / w)
    return lost, w


def run_trial(
    node_a: NodeInput,
    node_b: NodeInput,
    big_g_a: float,
    big_g_b: float,
    noise_params: noise.NoiseParams,
    rng_tape: np.ndarray,
    mode: str = cavity.NARROWBAND_IMPERFECT,
    p_z_a: float = 1.0,
    p_z_b: float = 1.0,
    scatter: str = "dephase",
) -> TrialOutcome:
    """One-shot convenience wrapper around TrialEngine (prefer the engine for
    repeated trials at the same parameter point)."""
    engine = TrialEngine(
        node_a, node_b, big_g_a, big_g_b, noise_params, mode, p_z_a, p_z_b, scatter
    )
    return engine.run(np.asarray(rng_tape, dtype=float))
