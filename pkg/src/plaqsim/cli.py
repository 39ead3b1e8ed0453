"""Command-line client for the experiment service.

Runs the service-layer functions in-process by default; ``--server URL``
sends the same payloads to a running HTTP instance instead.  Exit codes:
0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import service
from .circuits import NonCommutingTerms
from .harness import ExperimentConfig, NoiseConfig, write_csv, write_svg
from .mitigation import ResponseMatrix

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class ConfigError(Exception):
    pass


def _load_json(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"no such file: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from e


def _load_config(path: str, seed_override: int | None = None) -> ExperimentConfig:
    data = _load_json(path)
    if seed_override is not None:
        data["master_seed"] = seed_override
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{path}: {e}") from e


def _post(server: str, route: str, payload: dict) -> dict:
    import httpx

    resp = httpx.post(server.rstrip("/") + route, json=payload, timeout=600.0)
    if resp.status_code != 200:
        raise RuntimeError(f"server returned {resp.status_code}: {resp.text}")
    return resp.json()


def _safe_name(observable: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "-" for c in observable)


def _cmd_run(args) -> int:
    cfg = _load_config(args.config, args.seed)
    if args.server:
        resp = service.RunResponse.model_validate(
            _post(args.server, "/run", cfg.model_dump())
        )
    else:
        resp = service.run_payload(cfg)
    table = resp.to_table()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(table, out / "results.csv")
    for name in table.observables():
        write_svg(table, out / f"results_{_safe_name(name)}.svg", name)
    print(f"wrote {out / 'results.csv'} ({resp.executed_circuits} circuit executions)")
    return EXIT_OK


def _cmd_exact(args) -> int:
    cfg = _load_config(args.config)
    req = service.ExactRequest(config=cfg, n_points=args.points)
    if args.server:
        resp = service.ExactResponse.model_validate(
            _post(args.server, "/exact", req.model_dump())
        )
    else:
        resp = service.exact_payload(req)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "exact.csv"
    lines = ["time,observable,value"]
    for name, curve in resp.curves.items():
        for t, v in zip(curve.times, curve.values):
            lines.append(f"{t:.17g},{name},{v:.17g}")
    path.write_text("\n".join(lines) + "\n")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    noise_data = _load_json(args.noise)
    try:
        noise = NoiseConfig.model_validate(noise_data)
    except ValidationError as e:
        raise ConfigError(f"{args.noise}: {e}") from e
    req = service.CalibrateRequest(
        n_qubits=args.qubits, noise=noise, shots=args.shots, seed=args.seed
    )
    if args.server:
        resp = service.CalibrateResponse.model_validate(
            _post(args.server, "/calibrate", req.model_dump())
        )
    else:
        resp = service.calibrate_payload(req)
    rm = ResponseMatrix(resp.n_qubits, np.array(resp.matrix))
    Path(args.out).write_text(rm.to_json() + "\n")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    cfg = _load_config(args.config)
    req = service.InspectRequest(config=cfg, circuit_dump=args.circuit_dump)
    if args.server:
        resp = service.InspectResponse.model_validate(
            _post(args.server, "/inspect", req.model_dump())
        )
    else:
        resp = service.inspect_payload(req)
    v = resp.volume
    print(f"qubits (m): {v['m']}")
    print(f"two-qubit depth (d): {v['d']}")
    print(f"circuit volume (m*d): {v['circuit_volume']}")
    print(f"quantum volume 2^min(d,m): {v['quantum_volume']}")
    if resp.device_quantum_volume is not None:
        rel = "exceeds" if v["circuit_volume"] > resp.device_quantum_volume else "fits"
        print(
            f"device V_Q ({cfg.topology}): {resp.device_quantum_volume} "
            f"-- circuit volume {rel} device V_Q"
        )
    if resp.layout is not None:
        print(f"final layout (logical->physical): {resp.layout}")
    if resp.circuit_dump is not None:
        print(resp.circuit_dump)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plaqsim",
        description="Plaquette gauge-model dynamics with error mitigation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_server(p):
        p.add_argument("--server", help="base URL of a running service instance")

    p_run = sub.add_parser("run", help="run the mitigated experiment pipeline")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    add_server(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_exact = sub.add_parser("exact", help="write the exact reference curves")
    p_exact.add_argument("--config", required=True)
    p_exact.add_argument("--out", required=True)
    p_exact.add_argument("--points", type=int, default=200)
    add_server(p_exact)
    p_exact.set_defaults(fn=_cmd_exact)

    p_cal = sub.add_parser("calibrate", help="measure a readout response matrix")
    p_cal.add_argument("--qubits", type=int, required=True)
    p_cal.add_argument("--noise", required=True, help="JSON file with p2/eps01/eps10")
    p_cal.add_argument("--out", required=True)
    p_cal.add_argument("--shots", type=int, default=100_000)
    p_cal.add_argument("--seed", type=int, default=0)
    add_server(p_cal)
    p_cal.set_defaults(fn=_cmd_calibrate)

    p_ins = sub.add_parser("inspect", help="show circuit volume and gate listing")
    p_ins.add_argument("--config", required=True)
    p_ins.add_argument("--circuit-dump", action="store_true")
    add_server(p_ins)
    p_ins.set_defaults(fn=_cmd_inspect)
    return parser


def cli(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValidationError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonCommutingTerms, ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
