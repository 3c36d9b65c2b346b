"""Command-line client for the simulation service.

The CLI is a thin HTTP client: every subcommand maps its flags onto a service
request and renders the response.  By default the service app is mounted
in-process, so no server needs to be running; `--server URL` targets a remote
instance instead.

Exit codes: 0 success, 2 configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys

import httpx

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _make_client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _complex_flag(text: str) -> list[float]:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return [float(parts[0]), 0.0]
        if len(parts) == 2:
            return [float(parts[0]), float(parts[1])]
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}")


def _add_common_flags(p: argparse.ArgumentParser, lists: bool = False):
    gtype = _float_list if lists else float
    p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--G", type=gtype, default=None, help="coupling ratio, both sides")
    p.add_argument("--G-A", dest="G_A", type=gtype, default=None)
    p.add_argument("--G-B", dest="G_B", type=gtype, default=None)
    for side in ("", "-A", "-B"):
        key = side.replace("-", "_")
        p.add_argument(f"--g{side}", dest=f"g{key}", type=float, default=None)
        p.add_argument(f"--gamma{side}", dest=f"gamma{key}", type=float, default=None)
        p.add_argument(f"--gamma-s{side}", dest=f"gamma_s{key}", type=float, default=None)
    p.add_argument("--Pz", dest="Pz", type=float, default=None)
    p.add_argument("--Pz-A", dest="Pz_A", type=float, default=None)
    p.add_argument("--Pz-B", dest="Pz_B", type=float, default=None)
    p.add_argument("--pl", type=gtype, default=None)
    p.add_argument("--pdc", type=gtype, default=None)
    p.add_argument("--f", type=gtype, default=None)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--alpha", type=_complex_flag, default=None, metavar="RE,IM")
    p.add_argument("--beta", type=_complex_flag, default=None, metavar="RE,IM")
    p.add_argument("--a", type=_complex_flag, default=None, metavar="RE,IM")
    p.add_argument("--b", type=_complex_flag, default=None, metavar="RE,IM")
    p.add_argument("--balanced", action="store_true")
    p.add_argument("--random", type=int, default=None, metavar="COUNT")
    p.add_argument("--mode", choices=["ideal", "imperfect"], default="imperfect")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def _side_g(args, suffix: str, file_vals: dict):
    """Resolve one side's G grid from flags (G, or g/gamma/gamma_s) or file."""
    explicit = getattr(args, f"G_{suffix}", None)
    if explicit is not None:
        return explicit if isinstance(explicit, list) else [explicit]
    def rate(name):
        per_side = getattr(args, f"{name}_{suffix}", None)
        return per_side if per_side is not None else getattr(args, name, None)

    g, gamma, gamma_s = rate("g"), rate("gamma"), rate("gamma_s")
    if g is not None or gamma is not None or gamma_s is not None:
        if None in (g, gamma, gamma_s):
            raise ValueError("--g, --gamma and --gamma-s must be given together")
        if gamma <= 0 or gamma_s <= 0:
            raise ValueError("gamma and gamma-s must be positive")
        return [g * g / (gamma * gamma_s)]
    if args.G is not None:
        return args.G if isinstance(args.G, list) else [args.G]
    if f"G_{suffix}" in file_vals:
        return file_vals[f"G_{suffix}"]
    if "G" in file_vals:
        return file_vals["G"]
    return None  # service default


def _inputs_payload(args, file_vals: dict) -> dict:
    if args.random is not None:
        return {"random_count": args.random}
    if args.alpha is not None or args.beta is not None or args.a is not None or args.b is not None:
        if None in (args.alpha, args.beta, args.a, args.b):
            raise ValueError("--alpha, --beta, --a and --b must be given together")
        return {
            "alpha": {"re": args.alpha[0], "im": args.alpha[1]},
            "beta": {"re": args.beta[0], "im": args.beta[1]},
            "a": {"re": args.a[0], "im": args.a[1]},
            "b": {"re": args.b[0], "im": args.b[1]},
        }
    if args.balanced:
        return {"balanced": True}
    if "inputs" in file_vals:
        return file_vals["inputs"]
    return {"balanced": True}


def _read_config_file(path: str) -> dict:
    """Flatten an INI sweep file into request-ready values."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_string(fh.read())
    vals: dict = {}

    def floats(s):
        return [float(v) for v in str(s).split(",")]

    if parser.has_option("cavity", "G"):
        vals["G"] = floats(parser.get("cavity", "G"))
    for suffix in ("A", "B"):
        if parser.has_option("cavity", f"G_{suffix}"):
            vals[f"G_{suffix}"] = floats(parser.get("cavity", f"G_{suffix}"))
        if parser.has_option("cavity", f"Pz_{suffix}"):
            vals[f"Pz_{suffix}"] = parser.getfloat("cavity", f"Pz_{suffix}")
    if parser.has_option("cavity", "Pz"):
        vals.setdefault("Pz_A", parser.getfloat("cavity", "Pz"))
        vals.setdefault("Pz_B", parser.getfloat("cavity", "Pz"))
    if parser.has_option("cavity", "mode"):
        vals["mode"] = parser.get("cavity", "mode")
    for key in ("p_l", "p_dc", "f"):
        if parser.has_option("noise", key):
            vals[key] = floats(parser.get("noise", key))
    if parser.has_option("noise", "N"):
        vals["N"] = parser.getint("noise", "N")
    for key in ("trials", "seed", "workers"):
        if parser.has_option("run", key):
            vals[key] = parser.getint("run", key)
    if parser.has_section("inputs"):
        if parser.has_option("inputs", "random"):
            vals["inputs"] = {"random_count": parser.getint("inputs", "random")}
        elif parser.has_option("inputs", "alpha"):
            def cplx(key):
                re_im = _complex_flag(parser.get("inputs", key))
                return {"re": re_im[0], "im": re_im[1]}

            vals["inputs"] = {k: cplx(k) for k in ("alpha", "beta", "a", "b")}
        else:
            vals["inputs"] = {"balanced": True}
    return vals


def _sweep_payload(args, file_vals: dict) -> dict:
    def pick(flag, key, default):
        if flag is not None:
            return flag if isinstance(flag, list) else [flag]
        return file_vals.get(key, default)

    mode = file_vals.get("mode", args.mode)
    if mode == "imperfect":
        mode = "narrowband-imperfect"
    g_a = _side_g(args, "A", file_vals)
    g_b = _side_g(args, "B", file_vals)
    cavity_payload = {
        "p_z_a": args.Pz_A if args.Pz_A is not None else (
            args.Pz if args.Pz is not None else file_vals.get("Pz_A", 1.0)
        ),
        "p_z_b": args.Pz_B if args.Pz_B is not None else (
            args.Pz if args.Pz is not None else file_vals.get("Pz_B", 1.0)
        ),
        "mode": mode,
    }
    if g_a is not None:
        cavity_payload["big_g_a"] = g_a
    if g_b is not None and g_b != g_a:
        cavity_payload["big_g_b"] = g_b
    return {
        "inputs": _inputs_payload(args, file_vals),
        "cavity": cavity_payload,
        "noise": {
            "p_l": pick(args.pl, "p_l", [0.0]),
            "p_dc": pick(args.pdc, "p_dc", [0.0]),
            "f": pick(args.f, "f", [0.0]),
            "n_gates": args.N if args.N != 1 else file_vals.get("N", 1),
        },
        "trials": args.trials if args.trials != 1000 else file_vals.get("trials", 1000),
        "seed": args.seed if args.seed != 0 else file_vals.get("seed", 0),
        "workers": args.workers if args.workers != 1 else file_vals.get("workers", 1),
    }


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _row_csv(row: dict) -> str:
    header = ",".join(row)
    cells = ",".join("" if v is None else (format(v, ".17g") if isinstance(v, float) else str(v)) for v in row.values())
    return header + "\n" + cells + "\n"


def _check(resp) -> dict | None:
    """Returns parsed JSON, or None after printing the error (caller exits)."""
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        print(f"error: status={resp.status_code} detail={json.dumps(detail)}", file=sys.stderr)
        return None
    return resp.json()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlcnot", description="Nonlocal CNOT gate simulator client"
    )
    parser.add_argument("--server", default=None, help="remote service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one configuration and print its result row")
    _add_common_flags(p_sim)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep from a config file and/or flags")
    p_sweep.add_argument("--config", default=None, help="INI sweep definition; flags override")
    _add_common_flags(p_sweep, lists=True)

    p_table = sub.add_parser("table1", help="print the derived measurement-correction table")
    p_table.add_argument("--format", choices=["csv", "json"], default="csv")
    p_table.add_argument("--out", default=None)

    p_spec = sub.add_parser("spectrum", help="tabulate the reflection coefficient over a frequency grid")
    p_spec.add_argument("--g", type=float, default=10.0)
    p_spec.add_argument("--gamma", type=float, default=1.0)
    p_spec.add_argument("--gamma-s", dest="gamma_s", type=float, default=1.0)
    p_spec.add_argument("--Pz", type=float, default=1.0)
    p_spec.add_argument("--omega-min", dest="omega_min", type=float, default=-5.0)
    p_spec.add_argument("--omega-max", dest="omega_max", type=float, default=5.0)
    p_spec.add_argument("--points", type=int, default=101)
    p_spec.add_argument("--format", choices=["csv", "json"], default="csv")
    p_spec.add_argument("--out", default=None)

    p_form = sub.add_parser("formulas", help="evaluate the closed-form fidelity and noise factors")
    _add_common_flags(p_form)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    try:
        client = _make_client(args.server)
    except Exception as exc:
        return _fail(f"cannot create client: {exc}", EXIT_RUNTIME)

    try:
        with client:
            return _dispatch(client, args)
    except httpx.HTTPError as exc:
        return _fail(f"transport failure: {exc}", EXIT_RUNTIME)
    except ValueError as exc:
        return _fail(str(exc), EXIT_CONFIG)


def _dispatch(client, args) -> int:
    if args.command == "simulate":
        payload = _sweep_payload(args, {})
        data = _check(client.post("/simulate", json=payload))
        if data is None:
            return EXIT_CONFIG
        row = data["row"]
        _emit(_row_csv(row) if args.format == "csv" else json.dumps(row, indent=2), args.out)
        return EXIT_OK

    if args.command == "sweep":
        file_vals = {}
        if args.config:
            try:
                file_vals = _read_config_file(args.config)
            except (OSError, ValueError, configparser.Error) as exc:
                return _fail(f"bad config file: {exc}", EXIT_CONFIG)
        payload = _sweep_payload(args, file_vals)
        data = _check(client.post("/sweep", json=payload))
        if data is None:
            return EXIT_CONFIG
        text = data["csv"] if args.format == "csv" else json.dumps(data["rows"], indent=2)
        _emit(text, args.out)
        return EXIT_OK

    if args.command == "table1":
        data = _check(client.get("/table1"))
        if data is None:
            return EXIT_RUNTIME
        if args.format == "json":
            _emit(json.dumps(data["entries"], indent=2), args.out)
        else:
            lines = ["r_a,r_b,pauli_A,pauli_B"]
            lines += [f"{e['r_a']},{e['r_b']},{e['pauli_a']},{e['pauli_b']}" for e in data["entries"]]
            _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK

    if args.command == "spectrum":
        params = {
            "g": args.g, "gamma": args.gamma, "gamma_s": args.gamma_s,
            "Pz": args.Pz, "omega_min": args.omega_min,
            "omega_max": args.omega_max, "points": args.points,
        }
        data = _check(client.get("/spectrum", params=params))
        if data is None:
            return EXIT_CONFIG
        if args.format == "json":
            _emit(json.dumps(data["points"], indent=2), args.out)
        else:
            lines = ["omega,re,im,abs"]
            lines += [
                ",".join(format(p[k], ".17g") for k in ("omega", "re", "im", "abs"))
                for p in data["points"]
            ]
            _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK

    if args.command == "formulas":
        g_a = _side_g(args, "A", {})
        g_b = _side_g(args, "B", {})
        amps = _inputs_payload(args, {})
        params = {
            "G_A": (g_a or [100.0])[0],
            "G_B": (g_b or g_a or [100.0])[0],
            "Pz_A": args.Pz_A if args.Pz_A is not None else (args.Pz or 1.0),
            "Pz_B": args.Pz_B if args.Pz_B is not None else (args.Pz or 1.0),
            "p_l": (args.pl or [0.0])[0] if isinstance(args.pl, list) else (args.pl or 0.0),
            "p_dc": (args.pdc or [0.0])[0] if isinstance(args.pdc, list) else (args.pdc or 0.0),
            "f": (args.f or [0.0])[0] if isinstance(args.f, list) else (args.f or 0.0),
            "N": args.N,
        }
        if "alpha" in amps:
            params.update(
                alpha_re=amps["alpha"]["re"], alpha_im=amps["alpha"]["im"],
                beta_re=amps["beta"]["re"], beta_im=amps["beta"]["im"],
                a_re=amps["a"]["re"], a_im=amps["a"]["im"],
                b_re=amps["b"]["re"], b_im=amps["b"]["im"],
            )
        data = _check(client.get("/formulas", params=params))
        if data is None:
            return EXIT_CONFIG
        if args.format == "json":
            _emit(json.dumps(data, indent=2), args.out)
        else:
            _emit("\n".join(f"{k} = {v:.17g}" if isinstance(v, float) else f"{k} = {v}" for k, v in data.items()) + "\n", args.out)
        return EXIT_OK

    return _fail(f"unknown command {args.command!r}", EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
