"""
Command-line entry point.

    superbath run --config run.json [--out DIR] [--resume]
    superbath verify SUITE [--seed N] [--out report.json]
    superbath sweep --config run.json --param g --values 0.5,0.25 [--out DIR]
    superbath nuclear isomers.csv OUTDIR [--region-map map.json]

Configuration is a flat JSON object (see ``CONFIG_SCHEMA``). Exit codes: 0 on
success, 1 on a validation error, 2 when a verification suite fails. The
environment variable ``SUPERBATH_OUTPUT_DIR`` overrides the output directory.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import nuclear, verify
from .core import PRESETS, build_operator_set, matrix_from_document, preset_hamiltonian
from .solver import RunRecord, SqeConfig, config_hash, run_sqe
from .spectral import ExpCutoffDensity, TabulatedDensity

OUTPUT_ENV = "SUPERBATH_OUTPUT_DIR"

# key -> (type, default); a default of None means optional without a value
CONFIG_SCHEMA = {
    "preset": (str, None),
    "hamiltonian_file": (str, None),
    "n_qubits": (int, None),
    "operators": (str, "qubit"),
    "density_family": (str, "super-ohmic-exp-cutoff"),
    "density_s": (float, 3.0),
    "density_cutoff": (float, 1.0),
    "density_scale": (float, 1.0),
    "density_file": (str, None),
    "T": (float, 0.1),
    "g": (float, 0.5),
    "sigma": (float, 10.0),
    "M": (int, 1000),
    "K": (int, 7),
    "L_max": (int, 10),
    "delta": (float, None),
    "b": (float, 1.0),
    "generator": (str, "redfield"),
    "window": (int, 3),
    "stop_rel": (float, 1e-6),
    "seed": (int, 0),
    "T_sup": (float, 1.0),
    "output_dir": (str, "out"),
}
DENSITY_FAMILIES = ("super-ohmic-exp-cutoff", "tabulated")
SWEEP_PARAMS = ("T", "g", "sigma", "M", "K", "seed", "density_scale", "density_cutoff")


class ConfigError(ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("<file>", f"{path} does not exist") from None
    except json.JSONDecodeError as err:
        raise ConfigError("<file>", f"not valid JSON ({err})") from None
    return validate_config(raw, base=os.path.dirname(os.path.abspath(path)))


def validate_config(raw: dict, base: str = ".") -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    unknown = sorted(set(raw) - set(CONFIG_SCHEMA))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    cfg = {}
    for key, (typ, default) in CONFIG_SCHEMA.items():
        if key not in raw or raw[key] is None:
            cfg[key] = default
            continue
        val = raw[key]
        if typ is float and isinstance(val, (int, float)) and not isinstance(val, bool):
            val = float(val)
        elif typ is int and isinstance(val, int) and not isinstance(val, bool):
            pass
        elif typ is str and isinstance(val, str):
            pass
        else:
            raise ConfigError(key, f"expected {typ.__name__}, got {type(val).__name__}")
        cfg[key] = val

    if (cfg["preset"] is None) == (cfg["hamiltonian_file"] is None):
        raise ConfigError("preset", "give exactly one of 'preset' and 'hamiltonian_file'")
    if cfg["preset"] is not None and cfg["preset"] not in PRESETS:
        raise ConfigError("preset", f"unknown preset, choose from {sorted(PRESETS)}")
    for key in ("hamiltonian_file", "density_file"):
        if cfg[key] is not None:
            cfg[key] = os.path.join(base, cfg[key])
            if not os.path.exists(cfg[key]):
                raise ConfigError(key, f"file {cfg[key]} does not exist")
    if cfg["hamiltonian_file"] is not None and cfg["n_qubits"] is None:
        raise ConfigError("n_qubits", "required with 'hamiltonian_file'")
    if cfg["operators"] not in ("qubit", "fermion"):
        raise ConfigError("operators", "must be 'qubit' or 'fermion'")
    if cfg["density_family"] not in DENSITY_FAMILIES:
        raise ConfigError("density_family", f"must be one of {list(DENSITY_FAMILIES)}")
    if cfg["density_family"] == "tabulated" and cfg["density_file"] is None:
        raise ConfigError("density_file", "required for the tabulated family")
    if cfg["generator"] not in ("redfield", "lindblad"):
        raise ConfigError("generator", "must be 'redfield' or 'lindblad'")
    for key in ("g", "sigma", "density_s", "density_cutoff", "T_sup", "stop_rel"):
        if not cfg[key] > 0:
            raise ConfigError(key, "must be positive")
    for key in ("T", "density_scale", "b"):
        if cfg[key] < 0:
            raise ConfigError(key, "must be non-negative")
    if cfg["delta"] is not None and not cfg["delta"] > 0:
        raise ConfigError("delta", "must be positive")
    for key in ("K", "L_max", "window"):
        if cfg[key] < 1:
            raise ConfigError(key, "must be at least 1")
    if cfg["M"] < 0:
        raise ConfigError("M", "must be non-negative")
    return cfg


def _hamiltonian(cfg):
    if cfg["preset"] is not None:
        return preset_hamiltonian(cfg["preset"])
    path = cfg["hamiltonian_file"]
    if path.endswith(".npy"):
        h = np.load(path)
    else:
        with open(path) as fh:
            h = matrix_from_document(json.load(fh))
    n = cfg["n_qubits"]
    if h.shape != (2 ** n, 2 ** n):
        raise ConfigError("hamiltonian_file", f"matrix shape {h.shape} does not match n_qubits={n}")
    return h, n


def _density(cfg):
    if cfg["density_family"] == "tabulated":
        return TabulatedDensity.from_csv(cfg["density_file"]).scaled(cfg["density_scale"])
    return ExpCutoffDensity(s=cfg["density_s"], cutoff=cfg["density_cutoff"], scale=cfg["density_scale"])


def _hash_doc(cfg) -> dict:
    doc = {k: v for k, v in cfg.items() if k != "output_dir"}
    for key in ("hamiltonian_file", "density_file"):
        if doc.get(key):
            with open(doc[key], "rb") as fh:
                doc[key + "_sha256"] = hashlib.sha256(fh.read()).hexdigest()
            doc[key] = os.path.basename(doc[key])
    return doc


def build_sqe_config(cfg) -> SqeConfig:
    h, n = _hamiltonian(cfg)
    ops = build_operator_set(cfg["operators"], n)
    return SqeConfig(
        hamiltonian=h, ops=ops, density=_density(cfg), T=cfg["T"], g=cfg["g"], sigma=cfg["sigma"], M=cfg["M"],
        K=cfg["K"], L_max=cfg["L_max"], delta=cfg["delta"], b=cfg["b"] or 1.0, generator_kind=cfg["generator"],
        window=cfg["window"], stop_rel=cfg["stop_rel"], seed=cfg["seed"], T_sup=cfg["T_sup"],
        tag=config_hash(_hash_doc(cfg)),
    )


def _outdir(cli_value, cfg_value=None):
    out = os.environ.get(OUTPUT_ENV) or cli_value or cfg_value or "out"
    os.makedirs(out, exist_ok=True)
    return out


def _prepend_meta(path, meta):
    with open(path) as fh:
        body = fh.read()
    with open(path, "w") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}: {v}\n")
        fh.write(body)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    sqe = build_sqe_config(cfg)
    out = _outdir(args.out, cfg["output_dir"])
    ckpt = os.path.join(out, "checkpoint.json")
    resume = None
    if args.resume and os.path.exists(ckpt):
        resume = RunRecord.load(ckpt)
        if resume.tag != sqe.tag:
            raise ConfigError("<file>", "checkpoint belongs to a different configuration")
    rec = run_sqe(sqe, resume=resume, checkpoint=ckpt)
    meta = {"config_hash": sqe.tag, "seed": sqe.seed}
    doc = {**meta, "config": _hash_doc(cfg), "record": rec.to_document()}
    with open(os.path.join(out, "run.json"), "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    for name, writer in (("energy_trace.csv", rec.write_energy_trace), ("params_history.csv", rec.write_params_history)):
        path = os.path.join(out, name)
        writer(path)
        _prepend_meta(path, meta)
    print(f"E_min = {rec.E_min:.12g}  stop = {rec.stop_reason}  batches = {len(rec.batches)}  -> {out}")
    return 0


def cmd_verify(args) -> int:
    kwargs = {}
    if args.seed is not None:
        if args.suite in ("kms", "appendixE", "lemma1"):
            raise ConfigError("seed", f"suite {args.suite} is deterministic and takes no seed")
        kwargs["seed"] = args.seed
    report = verify.run_suite(args.suite, **kwargs)
    report["config_hash"] = config_hash({"suite": args.suite, **kwargs})
    report["seed"] = kwargs.get("seed", 0)
    text = json.dumps(report, indent=1, sort_keys=True, default=float)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(f"{args.suite}: {'PASS' if report['passed'] else 'FAIL'} "
          f"({report['n_checks'] - report['n_failed']}/{report['n_checks']} checks)")
    return 0 if report["passed"] else 2


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.param not in SWEEP_PARAMS:
        raise ConfigError(args.param, f"not sweepable, choose from {list(SWEEP_PARAMS)}")
    typ = CONFIG_SCHEMA[args.param][0]
    try:
        values = [typ(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(args.param, f"cannot parse sweep values {args.values!r}") from None
    out = _outdir(args.out, cfg["output_dir"])
    rows = []
    for v in values:
        c = validate_config({k: w for k, w in {**cfg, args.param: v}.items() if w is not None})
        sqe = build_sqe_config(c)
        rec = run_sqe(sqe)
        rows.append([repr(v), sqe.tag, sqe.seed, repr(rec.E_min), rec.stop_reason, len(rec.batches),
                     repr(rec.batches[-1]["ground_population"])])
    path = os.path.join(out, "sweep.csv")
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash: {config_hash({**_hash_doc(cfg), 'sweep': args.param, 'values': values})}\n")
        fh.write(f"# seed: {cfg['seed']}\n")
        w = csv.writer(fh)
        w.writerow([args.param, "config_hash", "seed", "E_min", "stop_reason", "batches", "ground_population"])
        w.writerows(rows)
    print(f"{len(rows)} runs -> {path}")
    return 0


def cmd_nuclear(args) -> int:
    try:
        records = nuclear.parse_isomer_table(args.input)
    except FileNotFoundError:
        raise ConfigError("input", f"{args.input} does not exist") from None
    except nuclear.TableError as err:
        raise ConfigError("input", str(err)) from None
    if not records:
        raise ConfigError("input", "table has no records")
    rmap = nuclear.RegionMap.from_file(args.region_map) if args.region_map else None
    with open(args.input, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()[:16]
    out = _outdir(args.outdir)
    paths = nuclear.write_outputs(records, out, rmap, meta={"config_hash": digest, "seed": "none (deterministic)"})
    print(f"{len(records)} isomers -> {', '.join(sorted(paths))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superbath", description="Super-bath cooling simulator and checks.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the cooling / measurement loop")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--resume", action="store_true", help="continue from OUT/checkpoint.json")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=verify.SUITES)
    v.add_argument("--seed", type=int)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="repeat a run over values of one parameter")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    n = sub.add_parser("nuclear", help="isomer half-life statistics")
    n.add_argument("input")
    n.add_argument("outdir")
    n.add_argument("--region-map")
    n.set_defaults(func=cmd_nuclear)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors count as validation errors
        return 1 if exc.code else 0
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
