"""Closed-form noise layer and the detector click model.

Analytic formulas: per-node coherence damage Delta and the gate fidelity
built from it, the dark-count shrinking factor, the mode-mismatch fidelity
factor, the post-selection success probability, and their N-gate
compositions.  The paper-style aggregates are first order in the dark-count
probability; `side_event_probabilities` provides the exact Bernoulli algebra
used as the internal oracle for Monte Carlo tests.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .cavity import resonant_R


class NoiseError(Exception):
    pass


class InvalidRegime(NoiseError):
    pass


class DegenerateDenominator(NoiseError):
    pass


@dataclass(frozen=True)
class NoiseParams:
    """Photon-loss probability p_l, dark-count probability p_dc per detector
    per attempt, and mode-mismatch probability f."""

    p_l: float = 0.0
    p_dc: float = 0.0
    f: float = 0.0

    def validate(self) -> None:
        for name in ("p_l", "p_dc", "f"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidRegime(f"{name} = {v} outside [0, 1]")


@dataclass(frozen=True)
class GateBudget:
    """N chained nonlocal CNOTs with per-side coupling ratios."""

    n_gates: int = 1
    big_g_a: float = 100.0
    big_g_b: float = 100.0
    p_z_a: float = 1.0
    p_z_b: float = 1.0

    def __post_init__(self):
        if self.n_gates < 1:
            raise ValueError(f"n_gates must be >= 1, got {self.n_gates}")


def delta(big_g: float, p_z: float = 1.0) -> float:
    """Per-node coherence damage 8G / (1 + 4G*P_z)^2."""
    if big_g < 0 or p_z < 0:
        raise ValueError("G and P_z must be >= 0")
    return 8.0 * big_g / (1.0 + 4.0 * big_g * p_z) ** 2


def analytic_fidelity(
    alpha: complex,
    beta: complex,
    a: complex,
    b: complex,
    big_g_a: float,
    big_g_b: float,
    p_z_a: float = 1.0,
    p_z_b: float = 1.0,
) -> float:
    """Gate fidelity F = 1 - 2(|ab|^2 Delta_B + |alpha beta|^2 Delta_A).

    First-order in 1/G; clamped to [0, 1] with a warning when the inputs put
    the formula out of its regime of validity.
    """
    for pair in ((alpha, beta), (a, b)):
        n = abs(pair[0]) ** 2 + abs(pair[1]) ** 2
        if abs(n - 1.0) > 1e-12:
            from .qstate import NotNormalized

            raise NotNormalized(f"amplitude pair norm {n} != 1")
    f = 1.0 - 2.0 * (
        abs(a * b) ** 2 * delta(big_g_b, p_z_b) + abs(alpha * beta) ** 2 * delta(big_g_a, p_z_a)
    )
    if f < 0.0 or f > 1.0:
        warnings.warn(f"analytic fidelity {f} clamped to [0, 1]", stacklevel=2)
        f = min(1.0, max(0.0, f))
    return f


def shrinking_factor(p_l: float, p_dc: float, n_gates: int = 1) -> float:
    """Dark-count fidelity shrinking factor 1 - 2*N*p_l*p_dc (first order)."""
    if n_gates < 1:
        raise ValueError(f"n_gates must be >= 1, got {n_gates}")
    return 1.0 - 2.0 * n_gates * p_l * p_dc


def shrinking_factor_compounded(p_l: float, p_dc: float, n_gates: int = 1) -> float:
    """Diagnostic multiplicative alternative (1 - 2*p_l*p_dc)^N."""
    if n_gates < 1:
        raise ValueError(f"n_gates must be >= 1, got {n_gates}")
    return (1.0 - 2.0 * p_l * p_dc) ** n_gates


def mismatch_factor(f: float, big_g: float, p_z: float = 1.0, n_gates: int = 1) -> float:
    """Mode-mismatch fidelity factor [ (1-f) R / (f + (1-f) R) ]^(2N)."""
    if not 0.0 <= f < 1.0:
        raise InvalidRegime(f"f = {f} outside [0, 1)")
    if n_gates < 1:
        raise ValueError(f"n_gates must be >= 1, got {n_gates}")
    big_r = resonant_R(big_g, p_z)
    denom = f + (1.0 - f) * big_r
    if denom == 0.0:
        raise DegenerateDenominator("f = 0 and R = 0")
    # per-gate factor first, then the N-fold power, so that the N-gate value
    # equals the single-gate value raised to N bit for bit
    per_gate = ((1.0 - f) * big_r / denom) ** 2
    return per_gate**n_gates


def success_probability(p_l: float, p_dc: float, n_gates: int = 1) -> float:
    """Post-selection success probability (1-p_l)^N (1-p_l-2*p_dc)^N."""
    if n_gates < 1:
        raise ValueError(f"n_gates must be >= 1, got {n_gates}")
    if 1.0 - p_l - 2.0 * p_dc < 0.0:
        raise InvalidRegime(f"1 - p_l - 2*p_dc = {1 - p_l - 2 * p_dc} < 0")
    return (1.0 - p_l) ** n_gates * (1.0 - p_l - 2.0 * p_dc) ** n_gates


def total_fidelity_factor(
    params: NoiseParams, big_g: float, p_z: float = 1.0, n_gates: int = 1
) -> float:
    """Aggregate fidelity reduction: shrinking factor times mismatch factor."""
    params.validate()
    return shrinking_factor(params.p_l, params.p_dc, n_gates) * mismatch_factor(
        params.f, big_g, p_z, n_gates
    )


# ----------------------------------------------------------- detector model


@dataclass(frozen=True)
class ClickPattern:
    """Click record of one detector pair (one protocol side)."""

    clicks_v: bool
    clicks_h: bool
    status: str  # accept | discard
    recorded: str | None  # 'v' | 'h' when accepted
    false_positive: bool


def classify_clicks(true_outcome: int | None, dark_v: bool, dark_h: bool) -> ClickPattern:
    """Classify one side given the true photon detector (0 = v, 1 = h, None =
    photon lost) and the two dark-count draws.

    Exactly one click accepts the side; zero or two clicks discard it.  An
    accepted click with no underlying photon is a false positive.
    """
    clicks_v = dark_v or true_outcome == 0
    clicks_h = dark_h or true_outcome == 1
    n = int(clicks_v) + int(clicks_h)
    if n != 1:
        return ClickPattern(clicks_v, clicks_h, "discard", None, False)
    recorded = "v" if clicks_v else "h"
    return ClickPattern(clicks_v, clicks_h, "accept", recorded, true_outcome is None)


def detection_events(
    rng: np.random.Generator,
    p_l: float,
    p_dc: float,
    photon_lost: bool | None = None,
    true_detector: int = 0,
) -> ClickPattern:
    """Sample one side's detector events.

    When `photon_lost` is None the loss itself is sampled with probability
    p_l; otherwise the flag is taken as given (the protocol layer decides it
    from the quantum state and the cavity loss channel).
    """
    if photon_lost is None:
        photon_lost = bool(rng.random() < p_l)
    dark_v = bool(rng.random() < p_dc)
    dark_h = bool(rng.random() < p_dc)
    return classify_clicks(None if photon_lost else true_detector, dark_v, dark_h)


def side_event_probabilities(p_l: float, p_dc: float) -> dict[str, float]:
    """Exact per-side Bernoulli algebra: accept, discard and false-positive
    probabilities (false positives are a subset of accepts)."""
    q = 1.0 - p_dc
    accept_with_photon = (1.0 - p_l) * q  # true click, no dark on the other arm
    accept_without_photon = p_l * 2.0 * p_dc * q  # exactly one dark click
    accept = accept_with_photon + accept_without_photon
    return {
        "accept": accept,
        "discard": 1.0 - accept,
        "false_positive": accept_without_photon,
    }


def exact_acceptance(p_l: float, p_dc: float) -> float:
    """Exact two-sided acceptance probability (both sides exactly one click)."""
    return side_event_probabilities(p_l, p_dc)["accept"] ** 2


def exact_false_positive_rate(p_l: float, p_dc: float) -> float:
    """Exact probability a trial is accepted with at least one dark-only click."""
    side = side_event_probabilities(p_l, p_dc)
    genuine = side["accept"] - side["false_positive"]
    return side["accept"] ** 2 - genuine**2
