"""Deterministic Monte Carlo runner, parameter sweeps, and result tables.

Reproducibility contract: every trial draws a fixed-length tape of uniforms
from a counter-based generator keyed by (master seed, trial index), so the
outcome of trial i depends only on the seed and i.  Reduction over trials is
ordered by index, which makes sweep output byte-identical regardless of how
many workers executed it.
"""

from __future__ import annotations

import io
import json
import math
import configparser
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from itertools import product

import numpy as np

from . import cavity, noise, protocol


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RngStream:
    """Counter-based per-trial random stream (Philox)."""

    master_seed: int
    stream_index: int

    def generator(self) -> np.random.Generator:
        bitgen = np.random.Philox(
            key=[self.master_seed & 0xFFFFFFFFFFFFFFFF, 0],
            counter=[0, 0, 0, self.stream_index],
        )
        return np.random.Generator(bitgen)

    def uniforms(self, n: int) -> np.ndarray:
        return self.generator().random(n)


def trial_tape(master_seed: int, trial_index: int) -> np.ndarray:
    return RngStream(master_seed, trial_index).uniforms(protocol.TAPE_LENGTH)


def estimate(values: np.ndarray) -> tuple[float, float]:
    """Sample mean and standard error of the mean."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty sample")
    mean = float(np.mean(values))
    if values.size == 1:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(values.size))


def binomial_stderr(k: int, n: int) -> float:
    p = k / n
    return math.sqrt(p * (1.0 - p) / n)


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: input amplitudes x cavity grid x noise grid."""

    inputs: tuple = (("balanced", "balanced"),)  # pairs of NodeInput or "balanced"
    big_g_a: tuple[float, ...] = (100.0,)
    big_g_b: tuple[float, ...] | None = None  # defaults to big_g_a values
    p_z_a: float = 1.0
    p_z_b: float = 1.0
    p_l: tuple[float, ...] = (0.0,)
    p_dc: tuple[float, ...] = (0.0,)
    f: tuple[float, ...] = (0.0,)
    n_gates: int = 1
    trials: int = 1000
    seed: int = 0
    mode: str = cavity.NARROWBAND_IMPERFECT
    workers: int = 1

    def validate(self) -> None:
        if not self.inputs:
            raise ConfigError("inputs grid is empty")
        for grid, name in ((self.big_g_a, "big_g_a"), (self.p_l, "p_l"), (self.p_dc, "p_dc"), (self.f, "f")):
            if not grid:
                raise ConfigError(f"{name} grid is empty")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.n_gates < 1:
            raise ConfigError(f"N must be >= 1, got {self.n_gates}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit value, got {self.seed}")
        if self.mode not in (cavity.IDEAL, cavity.NARROWBAND_IMPERFECT):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


@dataclass
class ResultRow:
    big_g_a: float
    big_g_b: float
    p_z_a: float
    p_z_b: float
    p_l: float
    p_dc: float
    f: float
    n_gates: int
    trials: int
    accepted: int
    discarded: int
    false_positive: int
    acceptance_rate: float
    acceptance_stderr: float
    mean_fidelity: float | None
    fidelity_stderr: float | None
    analytic_fidelity: float
    analytic_success: float
    analytic_total_factor: float
    seed: int


CSV_COLUMNS = (
    "G_A", "G_B", "Pz_A", "Pz_B", "p_l", "p_dc", "f", "N", "trials",
    "accepted", "discarded", "false_positive", "acceptance_rate",
    "acceptance_stderr", "mean_fidelity", "fidelity_stderr", "analytic_F",
    "analytic_success", "analytic_total_factor", "seed",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(value, ".17g")


def rows_to_csv(rows: list[ResultRow]) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in rows:
        cells = (
            r.big_g_a, r.big_g_b, r.p_z_a, r.p_z_b, r.p_l, r.p_dc, r.f,
            r.n_gates, r.trials, r.accepted, r.discarded, r.false_positive,
            r.acceptance_rate, r.acceptance_stderr, r.mean_fidelity,
            r.fidelity_stderr, r.analytic_fidelity, r.analytic_success,
            r.analytic_total_factor, r.seed,
        )
        out.write(",".join(_fmt(c) for c in cells) + "\n")
    return out.getvalue()


def rows_to_json(rows: list[ResultRow]) -> str:
    payload = []
    for r in rows:
        d = asdict(r)
        payload.append({col: d[key] for col, key in zip(CSV_COLUMNS, d)})
    return json.dumps(payload, indent=2)


def _resolve_input(spec) -> protocol.NodeInput:
    if isinstance(spec, protocol.NodeInput):
        return spec
    if spec == "balanced":
        return protocol.NodeInput.balanced()
    if isinstance(spec, (tuple, list)) and len(spec) == 2:
        return protocol.NodeInput(complex(spec[0]), complex(spec[1]))
    raise ConfigError(f"cannot interpret node input {spec!r}")


def random_inputs(count: int, seed: int) -> tuple:
    """Seeded random input pairs (an extra sweep axis)."""
    rng = RngStream(seed, 2**32 - 1).generator()
    return tuple(
        (protocol.NodeInput.random(rng), protocol.NodeInput.random(rng))
        for _ in range(count)
    )


@dataclass
class _Point:
    """One grid point, picklable for worker processes."""

    node_a: protocol.NodeInput
    node_b: protocol.NodeInput
    big_g_a: float
    big_g_b: float
    p_z_a: float
    p_z_b: float
    noise_params: noise.NoiseParams
    mode: str
    seed: int


def _run_chunk(point: _Point, start: int, stop: int):
    """Run trials [start, stop) for one grid point; returns per-trial arrays."""
    engine = protocol.TrialEngine(
        point.node_a, point.node_b, point.big_g_a, point.big_g_b,
        point.noise_params, point.mode, point.p_z_a, point.p_z_b,
    )
    n = stop - start
    status = np.zeros(n, dtype=np.int8)  # 0 discard, 1 accepted, 2 false positive
    fidelity = np.full(n, np.nan)
    for i in range(n):
        tape = trial_tape(point.seed, start + i)
        outcome = engine.run(tape)
        if outcome.accepted:
            status[i] = 2 if outcome.status == "false_positive" else 1
            fidelity[i] = outcome.fidelity
    return status, fidelity


def _run_point(point: _Point, trials: int, workers: int, executor=None):
    if workers <= 1 or trials < 2 * workers:
        statuses, fidelities = _run_chunk(point, 0, trials)
    else:
        bounds = np.linspace(0, trials, workers + 1, dtype=int)
        chunks = list(
            executor.map(
                _run_chunk,
                [point] * workers,
                bounds[:-1].tolist(),
                bounds[1:].tolist(),
            )
        )
        statuses = np.concatenate([c[0] for c in chunks])
        fidelities = np.concatenate([c[1] for c in chunks])
    return statuses, fidelities


def run_sweep(config: SweepConfig) -> list[ResultRow]:
    """One ResultRow per grid point; deterministic for a fixed seed regardless
    of worker count (ordered reduction over trial indices)."""
    config.validate()
    g_b_grid = config.big_g_b if config.big_g_b is not None else config.big_g_a
    if len(g_b_grid) != len(config.big_g_a):
        raise ConfigError("big_g_b grid length must match big_g_a")

    rows = []
    executor = None
    try:
        if config.workers > 1:
            executor = ProcessPoolExecutor(max_workers=config.workers)
        for (in_a, in_b), (g_a, g_b), p_l, p_dc, f in product(
            config.inputs, zip(config.big_g_a, g_b_grid), config.p_l, config.p_dc, config.f
        ):
            node_a, node_b = _resolve_input(in_a), _resolve_input(in_b)
            noise_params = noise.NoiseParams(p_l=p_l, p_dc=p_dc, f=f)
            point = _Point(
                node_a, node_b, g_a, g_b, config.p_z_a, config.p_z_b,
                noise_params, config.mode, config.seed,
            )
            statuses, fidelities = _run_point(point, config.trials, config.workers, executor)

            accepted_mask = statuses > 0
            accepted = int(np.sum(accepted_mask))
            false_pos = int(np.sum(statuses == 2))
            fid_sample = fidelities[accepted_mask]
            if accepted > 0:
                mean_fid, fid_err = estimate(fid_sample)
            else:
                mean_fid, fid_err = None, None
            rows.append(
                ResultRow(
                    big_g_a=g_a, big_g_b=g_b,
                    p_z_a=config.p_z_a, p_z_b=config.p_z_b,
                    p_l=p_l, p_dc=p_dc, f=f,
                    n_gates=config.n_gates, trials=config.trials,
                    accepted=accepted,
                    discarded=config.trials - accepted,
                    false_positive=false_pos,
                    acceptance_rate=accepted / config.trials,
                    acceptance_stderr=binomial_stderr(accepted, config.trials),
                    mean_fidelity=mean_fid, fidelity_stderr=fid_err,
                    analytic_fidelity=noise.analytic_fidelity(
                        node_a.amp0, node_a.amp1, node_b.amp0, node_b.amp1,
                        g_a, g_b, config.p_z_a, config.p_z_b,
                    ),
                    analytic_success=noise.success_probability(p_l, p_dc, config.n_gates),
                    analytic_total_factor=noise.total_fidelity_factor(
                        noise_params, g_a, config.p_z_a, config.n_gates
                    ),
                    seed=config.seed,
                )
            )
    finally:
        if executor is not None:
            executor.shutdown()
    return rows


# ------------------------------------------------------------- config files


def parse_config_file(text: str, overrides: dict | None = None) -> SweepConfig:
    """INI-style sweep definition; CLI flag overrides win over file values.

    Sections: [inputs] (alpha/beta/a/b as 're,im', or balanced=true, or
    random=<count>), [cavity] (G or G_A/G_B as comma lists, Pz_A, Pz_B,
    mode), [noise] (p_l, p_dc, f as comma lists, N), [run] (trials, seed,
    workers).
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"bad config file: {exc}") from exc

    def get(section, key, default=None):
        if overrides and key in overrides and overrides[key] is not None:
            return overrides[key]
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    def floats(value) -> tuple[float, ...]:
        if isinstance(value, (tuple, list)):
            return tuple(float(v) for v in value)
        try:
            return tuple(float(v) for v in str(value).split(","))
        except ValueError as exc:
            raise ConfigError(f"bad float list {value!r}") from exc

    seed = int(get("run", "seed", 0))
    if str(get("inputs", "balanced", "")).lower() in ("1", "true", "yes"):
        inputs = (("balanced", "balanced"),)
    elif get("inputs", "random") is not None:
        inputs = random_inputs(int(get("inputs", "random")), seed)
    elif get("inputs", "alpha") is not None:
        inputs = (
            (
                (parse_complex(get("inputs", "alpha")), parse_complex(get("inputs", "beta"))),
                (parse_complex(get("inputs", "a")), parse_complex(get("inputs", "b"))),
            ),
        )
    else:
        inputs = (("balanced", "balanced"),)

    g_a = floats(get("cavity", "G_A", get("cavity", "G", "100")))
    g_b_raw = get("cavity", "G_B")
    mode = get("cavity", "mode", cavity.NARROWBAND_IMPERFECT)
    if mode == "imperfect":
        mode = cavity.NARROWBAND_IMPERFECT
    return SweepConfig(
        inputs=inputs,
        big_g_a=g_a,
        big_g_b=floats(g_b_raw) if g_b_raw is not None else None,
        p_z_a=float(get("cavity", "Pz_A", get("cavity", "Pz", 1.0))),
        p_z_b=float(get("cavity", "Pz_B", get("cavity", "Pz", 1.0))),
        p_l=floats(get("noise", "p_l", "0")),
        p_dc=floats(get("noise", "p_dc", "0")),
        f=floats(get("noise", "f", "0")),
        n_gates=int(get("noise", "N", 1)),
        trials=int(get("run", "trials", 1000)),
        seed=seed,
        mode=mode,
        workers=int(get("run", "workers", 1)),
    )


def parse_complex(text) -> complex:
    """Parse 're,im' (or a bare real) into a complex amplitude."""
    if isinstance(text, complex):
        return text
    parts = str(text).split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"bad complex literal {text!r} (expected 're,im')")
