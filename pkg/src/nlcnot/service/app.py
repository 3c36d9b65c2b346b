"""FastAPI service wrapping the simulator core.

Endpoints mirror the CLI subcommands: /simulate, /sweep, /table1, /spectrum,
/formulas.  Configuration errors surface as HTTP 400 with a one-line message;
unexpected failures as HTTP 500.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse

from .. import cavity, harness, noise, protocol
from ..qstate import NotNormalized
from . import schemas


def _config_inputs(spec: schemas.InputsSpec, seed: int):
    if spec.random_count is not None:
        return harness.random_inputs(spec.random_count, seed)
    if spec.alpha is not None:
        missing = [k for k in ("beta", "a", "b") if getattr(spec, k) is None]
        if missing:
            raise harness.ConfigError(f"missing amplitude fields: {missing}")
        return (
            (
                (spec.alpha.value(), spec.beta.value()),
                (spec.a.value(), spec.b.value()),
            ),
        )
    return (("balanced", "balanced"),)


def _to_config(req: schemas.SweepRequest) -> harness.SweepConfig:
    mode = req.cavity.mode
    if mode == "imperfect":
        mode = cavity.NARROWBAND_IMPERFECT
    return harness.SweepConfig(
        inputs=_config_inputs(req.inputs, req.seed),
        big_g_a=tuple(req.cavity.big_g_a),
        big_g_b=tuple(req.cavity.big_g_b) if req.cavity.big_g_b is not None else None,
        p_z_a=req.cavity.p_z_a,
        p_z_b=req.cavity.p_z_b,
        p_l=tuple(req.noise.p_l),
        p_dc=tuple(req.noise.p_dc),
        f=tuple(req.noise.f),
        n_gates=req.noise.n_gates,
        trials=req.trials,
        seed=req.seed,
        mode=mode,
        workers=req.workers,
    )


def _row_model(row: harness.ResultRow) -> schemas.ResultRowModel:
    return schemas.ResultRowModel(
        G_A=row.big_g_a, G_B=row.big_g_b, Pz_A=row.p_z_a, Pz_B=row.p_z_b,
        p_l=row.p_l, p_dc=row.p_dc, f=row.f, N=row.n_gates,
        trials=row.trials, accepted=row.accepted, discarded=row.discarded,
        false_positive=row.false_positive,
        acceptance_rate=row.acceptance_rate,
        acceptance_stderr=row.acceptance_stderr,
        mean_fidelity=row.mean_fidelity, fidelity_stderr=row.fidelity_stderr,
        analytic_F=row.analytic_fidelity,
        analytic_success=row.analytic_success,
        analytic_total_factor=row.analytic_total_factor,
        seed=row.seed,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="nonlocal-cnot-simulator", version="0.1.0")

    @app.exception_handler(harness.ConfigError)
    async def _config_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(NotNormalized)
    async def _not_normalized(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SweepRequest):
        config = _to_config(req)
        try:
            rows = harness.run_sweep(config)
        except harness.ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if len(rows) != 1:
            raise HTTPException(
                status_code=400,
                detail=f"simulate expects a single grid point, got {len(rows)} rows",
            )
        return schemas.SimulateResponse(row=_row_model(rows[0]))

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest):
        try:
            rows = harness.run_sweep(_to_config(req))
        except harness.ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.SweepResponse(
            rows=[_row_model(r) for r in rows], csv=harness.rows_to_csv(rows)
        )

    @app.get("/table1", response_model=schemas.CorrectionTableResponse)
    def table1():
        table = protocol.correction_table()
        return schemas.CorrectionTableResponse(
            entries=[
                schemas.CorrectionEntry(r_a=k[0], r_b=k[1], pauli_a=v[0], pauli_b=v[1])
                for k, v in sorted(table.entries.items())
            ]
        )

    @app.get("/spectrum", response_model=schemas.SpectrumResponse)
    def spectrum(
        g: float = Query(default=10.0),
        gamma: float = Query(default=1.0),
        gamma_s: float = Query(default=1.0),
        p_z: float = Query(default=1.0, alias="Pz"),
        omega_min: float = Query(default=-5.0),
        omega_max: float = Query(default=5.0),
        points: int = Query(default=101, ge=2),
    ):
        try:
            params = cavity.CavityParams(g=g, gamma=gamma, gamma_s=gamma_s)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        step = (omega_max - omega_min) / (points - 1)
        out = []
        for i in range(points):
            w = omega_min + i * step
            r = cavity.reflection_coefficient(w, p_z, params)
            out.append(schemas.SpectrumPoint(omega=w, re=r.real, im=r.imag, abs=abs(r)))
        return schemas.SpectrumResponse(points=out)

    @app.get("/formulas", response_model=schemas.FormulasResponse)
    def formulas(
        big_g_a: float = Query(default=100.0, alias="G_A"),
        big_g_b: float = Query(default=100.0, alias="G_B"),
        p_z_a: float = Query(default=1.0, alias="Pz_A"),
        p_z_b: float = Query(default=1.0, alias="Pz_B"),
        alpha_re: float = Query(default=2**-0.5),
        alpha_im: float = Query(default=0.0),
        beta_re: float = Query(default=2**-0.5),
        beta_im: float = Query(default=0.0),
        a_re: float = Query(default=2**-0.5),
        a_im: float = Query(default=0.0),
        b_re: float = Query(default=2**-0.5),
        b_im: float = Query(default=0.0),
        p_l: float = Query(default=0.0),
        p_dc: float = Query(default=0.0),
        f: float = Query(default=0.0),
        n_gates: int = Query(default=1, alias="N", ge=1),
    ):
        alpha = complex(alpha_re, alpha_im)
        beta = complex(beta_re, beta_im)
        a = complex(a_re, a_im)
        b = complex(b_re, b_im)
        try:
            params = noise.NoiseParams(p_l=p_l, p_dc=p_dc, f=f)
            params.validate()
            return schemas.FormulasResponse(
                big_g_a=big_g_a, big_g_b=big_g_b, p_z_a=p_z_a, p_z_b=p_z_b,
                n_gates=n_gates,
                delta_a=noise.delta(big_g_a, p_z_a),
                delta_b=noise.delta(big_g_b, p_z_b),
                analytic_fidelity=noise.analytic_fidelity(
                    alpha, beta, a, b, big_g_a, big_g_b, p_z_a, p_z_b
                ),
                ideal_reflection_a=cavity.ideal_reflection(p_z_a, big_g_a),
                coherence_survival_a=cavity.coherence_survival(big_g_a, p_z_a),
                resonant_R_a=cavity.resonant_R(big_g_a, p_z_a),
                shrinking_factor=noise.shrinking_factor(p_l, p_dc, n_gates),
                mismatch_factor=noise.mismatch_factor(f, big_g_a, p_z_a, n_gates),
                success_probability=noise.success_probability(p_l, p_dc, n_gates),
                total_fidelity_factor=noise.total_fidelity_factor(
                    params, big_g_a, p_z_a, n_gates
                ),
            )
        except (ValueError, noise.NoiseError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    return app
