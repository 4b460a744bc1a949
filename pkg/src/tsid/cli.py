"""Command-line interface.

Each subcommand is a thin client of the HTTP service: it reads its inputs
from files, builds a JSON request, posts it (to an in-process application
by default, or to a remote server given ``--server``), and writes the
response back to files in the toolkit's text formats. Keeping the CLI on
the service's wire format means both front ends exercise identical code
paths and stay interchangeable.

Exit codes: 0 on success, 2 for bad input (malformed files, rejected
requests), 1 for anything else. Failures print a single ``error: ...``
line on stderr.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from pathlib import Path

import httpx
import numpy as np

from . import __version__
from .dataset import TimeSeriesDataset
from .errors import TsidError
from .estimation import FitReport
from .fileio import (
    load_experiment_config,
    load_filsub_config,
    load_signal_config,
    load_system,
    save_fit_report,
    save_model,
)
from .lti import rtf


class CliError(Exception):
    """A failure with a chosen exit code and a one-line message."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# =====================================================================
# Service transport
# =====================================================================


def _check(response: httpx.Response) -> dict:
    if response.status_code == 200:
        return response.json()
    if response.status_code == 400:
        try:
            message = response.json()["message"]
        except Exception:
            message = response.text
        raise CliError(2, message)
    if response.status_code == 422:
        # Request-shape rejection from the validation layer.
        raise CliError(2, f"invalid request: {response.text}")
    raise CliError(1, f"service returned HTTP {response.status_code}: {response.text}")


def _post(server: str | None, path: str, payload: dict) -> dict:
    if server is not None:
        try:
            with httpx.Client(base_url=server, timeout=None) as client:
                return _check(client.post(path, json=payload))
        except httpx.HTTPError as exc:
            raise CliError(1, f"cannot reach server {server!r}: {exc}")

    async def run() -> httpx.Response:
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://tsid") as client:
            return await client.post(path, json=payload)

    return _check(asyncio.run(run()))


# =====================================================================
# JSON <-> file bridges
# =====================================================================


def _signal_payload(path) -> dict:
    config = load_signal_config(path)
    return {
        "n_samples": config.n_samples,
        "sampling_time": config.sampling_time,
        "amplitude": config.amplitude,
        "seed": config.seed,
        "switch_time": config.switch_time,
        "switch_probability": config.switch_probability,
        "slow_switch_time": config.slow_switch_time,
        "noise_to_signal": config.noise_to_signal,
        "noise_shaping": config.noise_shaping,
    }


def _system_payload(path) -> dict:
    system = load_system(path)
    return {
        "numerator": [float(v) for v in system.num.coeffs],
        "denominator": [float(v) for v in system.den.coeffs],
        "sampling_time": system.sampling_time,
    }


def _dataset_payload(path) -> dict:
    data = TimeSeriesDataset.load(path)
    return {
        "sampling_time": data.sampling_time,
        "inputs": [[float(v) for v in c] for c in data.inputs],
        "outputs": [[float(v) for v in c] for c in data.outputs],
        "clean_outputs": None if data.clean_outputs is None
        else [[float(v) for v in c] for c in data.clean_outputs],
        "burn_in": data.burn_in,
    }


def _solver_payload(args) -> dict:
    return {
        "max_iterations": args.max_iterations,
        "loss_tolerance": args.loss_tolerance,
        "init_order": getattr(args, "init_order", None),
        "stability_enforcement": None,
    }


def _write_dataset(payload: dict, path) -> int:
    data = TimeSeriesDataset(
        sampling_time=payload["sampling_time"],
        inputs=[np.asarray(c) for c in payload["inputs"]],
        outputs=[np.asarray(c) for c in payload["outputs"]],
        clean_outputs=None if payload.get("clean_outputs") is None
        else [np.asarray(c) for c in payload["clean_outputs"]],
        burn_in=payload.get("burn_in", 0),
    )
    data.save(path)
    return data.n_samples


def _model_from_payload(payload: dict):
    ts = payload["sampling_time"] if payload["domain"] == "discrete" else None
    process = rtf(payload["numerator"], payload["denominator"], ts)
    noise = None
    if payload.get("noise_numerator") is not None:
        noise = rtf(payload["noise_numerator"], payload["noise_denominator"], ts)
    return process, noise


def _write_model(payload: dict, path, metadata: dict) -> None:
    process, noise = _model_from_payload(payload)
    save_model(path, process, noise, metadata)


def _report_from_payload(payload: dict, residuals) -> FitReport:
    return FitReport(
        method=payload["method"],
        order=payload["order"],
        noise_order=payload["noise_order"],
        n_parameters=payload["n_parameters"],
        loss_value=payload["loss"],
        foe_value=payload["foe"],
        iterations_used=payload["iterations"],
        converged=payload["converged"],
        relative_error=payload.get("relative_error"),
        residuals=None if residuals is None else np.asarray(residuals, dtype=float),
    )


def _parse_orders(text: str) -> list:
    """``lo:hi`` (inclusive) or a comma/space-separated list."""
    try:
        if ":" in text:
            lo_text, _, hi_text = text.partition(":")
            lo, hi = int(lo_text), int(hi_text)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        parts = text.replace(",", " ").split()
        if not parts:
            raise ValueError
        return [int(p) for p in parts]
    except ValueError:
        raise CliError(2, f"cannot parse order range {text!r}; use 'lo:hi' or a list")


# =====================================================================
# Subcommands
# =====================================================================


def cmd_gbn(args) -> int:
    payload = _signal_payload(args.signal)
    response = _post(args.server, "/gbn", payload)
    n = _write_dataset(response, args.out)
    print(f"wrote {args.out} ({n} samples)")
    return 0


def cmd_simulate(args) -> int:
    request = {"system": _system_payload(args.system),
               "signal": _signal_payload(args.signal)}
    response = _post(args.server, "/simulate", request)
    n = _write_dataset(response, args.out)
    print(f"wrote {args.out} ({n} samples)")
    return 0


def cmd_identify(args) -> int:
    request = {
        "data": _dataset_payload(args.data),
        "method": args.method,
        "order": args.order,
        "noise_order": args.noise_order,
        "solver": _solver_payload(args),
        "filsub": None,
    }
    if args.method == "filsub":
        if args.filsub is None:
            raise CliError(2, "method 'filsub' requires --filsub CONFIG")
        config = load_filsub_config(args.filsub)
        request["filsub"] = {
            "fast_cutoff": config.fast_cutoff,
            "slow_cutoff": config.slow_cutoff,
            "order": config.order,
            "fast_order": config.fast_order,
            "slow_order": config.slow_order,
            "estimator": config.estimator,
            "noise_order": config.noise_order,
            "filter_cutoff": config.filter_cutoff,
            "filter_order": config.filter_order,
            "decimate": config.decimate,
            "scale_ratio_min": config.scale_ratio_min,
            "band_power_min": config.band_power_min,
        }
    response = _post(args.server, "/identify", request)

    report = response["report"]
    metadata = {"method": report["method"]}
    if response.get("decimation_factor") is not None:
        metadata["decimation_factor"] = str(response["decimation_factor"])
    _write_model(response["model"], args.model_out, metadata)
    written = [str(args.model_out)]
    if args.fast_out is not None:
        if response.get("fast") is None:
            raise CliError(2, "--fast-out applies to method 'filsub' only")
        _write_model(response["fast"], args.fast_out, {"method": "filsub", "stage": "fast"})
        written.append(str(args.fast_out))
    if args.slow_out is not None:
        if response.get("slow") is None:
            raise CliError(2, "--slow-out applies to method 'filsub' only")
        _write_model(response["slow"], args.slow_out, {"method": "filsub", "stage": "slow"})
        written.append(str(args.slow_out))
    if args.report_out is not None:
        fit = _report_from_payload(report, response.get("residuals"))
        save_fit_report(args.report_out, fit, residual_path=args.residuals_out)
        written.append(str(args.report_out))
        if args.residuals_out is not None:
            written.append(str(args.residuals_out))
    elif args.residuals_out is not None:
        raise CliError(2, "--residuals-out requires --report-out")

    re_text = ""
    if report.get("relative_error") is not None:
        re_text = f" relative_error={report['relative_error']:.6g}"
    print(f"method={report['method']} order={report['order']} "
          f"loss={report['loss']:.6g} foe={report['foe']:.6g} "
          f"converged={str(report['converged']).lower()}{re_text}")
    print("wrote " + " ".join(written))
    return 0


def cmd_order_scan(args) -> int:
    request = {
        "data": _dataset_payload(args.data),
        "orders": _parse_orders(args.orders),
        "method": args.method,
        "noise_order": args.noise_order,
        "solver": _solver_payload(args),
    }
    response = _post(args.server, "/order-scan", request)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("order,foe,loss,n_parameters,converged\n")
        for row in response["rows"]:
            fh.write(f"{row['order']},{row['foe']!r},{row['loss']!r},"
                     f"{row['n_parameters']},{'true' if row['converged'] else 'false'}\n")
    print(f"selected order: {response['selected_order']}")
    print(f"wrote {args.out} ({len(response['rows'])} rows)")
    return 0


def cmd_experiment(args) -> int:
    config = load_experiment_config(args.config)
    request = {
        "scenario": config.scenario,
        "seeds": config.seeds,
        "noise_to_signal": config.noise_to_signal,
        "duration": config.duration,
        "amplitude": config.amplitude,
        "step_horizon": config.step_horizon,
        "solver_iterations": config.solver_iterations,
        "solver_tolerance": config.solver_tolerance,
        "filter_order": config.filter_order,
        "decimate": config.decimate,
        "include_steps": not args.no_steps,
    }
    response = _post(args.server, "/experiment", request)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "report.csv"
    lines = ["seed,method,re"]
    lines += [f"{r['seed']},{r['method']},{r['re']!r}" for r in response["records"]]
    path.write_text("\n".join(lines) + "\n")
    written.append(path)

    counts: dict = {}
    for record in response["records"]:
        counts[record["method"]] = counts.get(record["method"], 0) + 1
    path = out / "summary.csv"
    lines = ["method,count,q1,median,q3"]
    for method in sorted(response["summary"]):
        s = response["summary"][method]
        lines.append(f"{method},{counts.get(method, 0)},{s['first_quartile']!r},"
                     f"{s['median']!r},{s['third_quartile']!r}")
    path.write_text("\n".join(lines) + "\n")
    written.append(path)

    if response["metrics"]:
        path = out / "metrics.csv"
        lines = ["seed,method,metric,value"]
        lines += [f"{m['seed']},{m['method']},{m['metric']},{m['value']!r}"
                  for m in response["metrics"]]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

    for key, ens in response.get("steps", {}).items():
        path = out / f"steps_{key}.csv"
        header = "time,true," + ",".join(f"seed_{s}" for s in response["seeds"])
        rows = [header]
        for i in range(len(ens["time"])):
            vals = [repr(ens["time"][i]), repr(ens["true"][i])]
            vals += [repr(series[i]) for series in ens["responses"]]
            rows.append(",".join(vals))
        path.write_text("\n".join(rows) + "\n")
        written.append(path)

    for method in sorted(response["summary"]):
        s = response["summary"][method]
        print(f"{method}: median RE {s['median']:.6g} "
              f"(quartiles {s['first_quartile']:.6g} / {s['third_quartile']:.6g})")
    print("wrote " + " ".join(str(p) for p in written))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


# =====================================================================
# Argument parsing
# =====================================================================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsid",
        description="Two-time-scale system identification toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"tsid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in-process")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--max-iterations", type=int, default=None)
    solver.add_argument("--loss-tolerance", type=float, default=None)

    p = sub.add_parser("gbn", parents=[common],
                       help="generate a binary test signal into a dataset CSV")
    p.add_argument("--signal", required=True, help="signal config file")
    p.add_argument("--out", required=True, help="output dataset CSV")
    p.set_defaults(handler=cmd_gbn)

    p = sub.add_parser("simulate", parents=[common],
                       help="simulate a system under a test signal")
    p.add_argument("--system", required=True, help="system config file")
    p.add_argument("--signal", required=True, help="signal config file")
    p.add_argument("--out", required=True, help="output dataset CSV")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("identify", parents=[common, solver],
                       help="fit a model to a dataset CSV")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--method", default="oe", choices=("oe", "bj", "filsub"))
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--noise-order", type=int, default=1)
    p.add_argument("--filsub", default=None,
                   help="filtering-subtraction config file (method 'filsub')")
    p.add_argument("--model-out", required=True, help="output model file")
    p.add_argument("--fast-out", default=None, help="fast-stage model file (filsub)")
    p.add_argument("--slow-out", default=None, help="slow-stage model file (filsub)")
    p.add_argument("--report-out", default=None, help="fit report file")
    p.add_argument("--residuals-out", default=None,
                   help="residual CSV (requires --report-out)")
    p.set_defaults(handler=cmd_identify)

    p = sub.add_parser("order-scan", parents=[common, solver],
                       help="rank candidate model orders by FOE")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--orders", required=True,
                   help="candidates: 'lo:hi' (inclusive) or a comma-separated list")
    p.add_argument("--method", default="oe", choices=("oe", "bj"))
    p.add_argument("--noise-order", type=int, default=1)
    p.add_argument("--out", required=True, help="output scan table CSV")
    p.add_argument("--init-order", type=int, default=None, dest="init_order",
                   help="equation-error initialization order for every candidate")
    p.set_defaults(handler=cmd_order_scan)

    p = sub.add_parser("experiment", parents=[common],
                       help="run a Monte Carlo scenario and write its report CSVs")
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--out-dir", required=True, help="directory for the report CSVs")
    p.add_argument("--no-steps", action="store_true",
                   help="skip the per-seed step-response CSVs")
    p.set_defaults(handler=cmd_experiment)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return exc.code
    except TsidError as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # last resort: keep the one-line contract
        print(f"error: internal: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
