"""Command-line interface wiring the library into reproducible runs.

Every artifact-producing command writes a manifest next to its primary
output (resolved configuration, seed, and SHA-256 digests of every
input), contains no timestamps, and never mutates its inputs, so a run
can be reproduced byte for byte from the manifest alone.  Report paths
emit a delimited table plus a rendered PNG figure.

Exit codes: 0 success, 2 validation/usage errors, 1 internal errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__, chemfeat, dataio, graphrep, molparse
from .models import (
    ModelConfig,
    load_checkpoint,
    save_checkpoint,
    train,
    transfer,
)
from .sepplan import elution, trace as trace_mod
from .sepplan.planner import CandidateCondition, rank_conditions

CHECKPOINT_DIR_ENV = "CCPRED_CHECKPOINT_DIR"

CONFIG_KEYS = {
    "num_layers": int,
    "embed_dim": int,
    "max_epochs": int,
    "batch_size": int,
    "lr": float,
    "early_stop_patience": int,
    "seed": int,
    "lr_gamma": float,
    "lr_step_size": int,
    "lr_floor": float,
}


def read_config_file(path) -> dict:
    """Parse a ``key = value`` config file; unknown keys are rejected."""
    values: dict = {}
    for line_number, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_number}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}:{line_number}: unknown key {key!r}")
        values[key] = CONFIG_KEYS[key](value.strip())
    return values


def resolve_model_config(args) -> ModelConfig:
    """Defaults < config file < command-line flags."""
    values: dict = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return ModelConfig.from_dict({**ModelConfig().to_dict(), **values})


def resolve_checkpoint_path(path: str) -> Path:
    """Literal path, else relative to $CCPRED_CHECKPOINT_DIR."""
    candidate = Path(path)
    if candidate.exists():
        return candidate
    env_dir = os.environ.get(CHECKPOINT_DIR_ENV)
    if env_dir and not candidate.is_absolute():
        in_dir = Path(env_dir) / path
        if in_dir.exists():
            return in_dir
    raise FileNotFoundError(f"checkpoint {path!r} not found"
                            + (f" (also tried {env_dir})" if env_dir else ""))


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(output_path, command: str, config: dict,
                   inputs: list, extra: dict | None = None) -> None:
    manifest = {
        "tool": f"ccpred {__version__}",
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
    }
    if extra:
        manifest.update(extra)
    path = Path(str(output_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _read_smiles_args(args) -> list[str]:
    entries = list(args.smiles or [])
    if args.file:
        for line in Path(args.file).read_text().splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                entries.append(line.split()[0])
    if not entries:
        raise ValueError("no SMILES given (arguments or --file)")
    return entries


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def cmd_parse(args) -> int:
    for smiles in _read_smiles_args(args):
        mol = molparse.parse_smiles(smiles)
        print(mol.debug_dump())
        print()
    return 0


def cmd_featurize(args) -> int:
    if args.dump_tables:
        print(graphrep.dump_tables())
        return 0
    overrides_table = (chemfeat.load_override_table(args.overrides)
                       if args.overrides else {})
    rows = []
    for smiles in _read_smiles_args(args):
        mol = molparse.parse_smiles(smiles)
        overrides, injected_fp = overrides_table.get(smiles, ({}, None))
        desc = chemfeat.descriptor_vector(mol, overrides or None)
        fp = injected_fp or chemfeat.fingerprint(mol)
        row = {"smiles": smiles}
        row.update({name: repr(value) for name, value
                    in zip(chemfeat.DESCRIPTOR_NAMES, desc.values)})
        row["fingerprint"] = "".join("1" if b else "0" for b in fp.bits)
        row["fingerprint_scheme"] = fp.scheme
        rows.append(row)
    if args.output:
        dataio.write_table(args.output, rows)
        inputs = [p for p in (args.file, args.overrides) if p]
        write_manifest(args.output, "featurize", {}, inputs)
        print(f"wrote {args.output}")
    else:
        for row in rows:
            printable = {k: v for k, v in row.items() if k != "fingerprint"}
            print(json.dumps(printable))
    return 0


def cmd_synth(args) -> int:
    columns = tuple(args.columns.split(","))
    dataset = dataio.synth_dataset(args.n, seed=args.seed,
                                   column_specs=columns,
                                   noise_scale=args.noise_scale)
    dataio.save_records(args.output, dataset.records)
    if args.truth:
        dataio.write_table(args.truth, [
            {"index": i, "v_start_law": repr(row[0]), "v_end_law": repr(row[1])}
            for i, row in enumerate(dataset.truth)
        ])
    write_manifest(args.output, "synth",
                   {"n": args.n, "seed": args.seed, "columns": columns,
                    "noise_scale": args.noise_scale}, [])
    print(f"wrote {args.output} ({args.n} records)")
    return 0


def _metric_rows(pred: np.ndarray, truth: np.ndarray) -> list[dict]:
    rows = []
    for t, label in enumerate(("v_start", "v_end")):
        rows.append({
            "target": label,
            "r2": dataio.r_squared(pred[:, t], truth[:, t]),
            "mae": dataio.mae(pred[:, t], truth[:, t]),
            "n": len(truth),
        })
    return rows


def _print_metrics(rows: list[dict]) -> None:
    for row in rows:
        print(f"  {row['target']}: r2={row['r2']:.4f} mae={row['mae']:.4f} "
              f"(n={row['n']})")


def cmd_train(args) -> int:
    from . import plots

    config = resolve_model_config(args)
    records, report = dataio.load_records(args.data)
    print(report.summary())
    model, split = train(records, config)
    usable = dataio.valid_records(records)
    test = [usable[i] for i in split.test]
    pred = model.predict_records(test)
    truth = dataio.volume_targets(test)
    rows = _metric_rows(pred[:, :, 1], truth)
    print("test metrics:")
    _print_metrics(rows)
    save_checkpoint(args.output, model)
    stem = str(Path(args.output).with_suffix(""))
    dataio.write_table(stem + ".metrics.csv", rows)
    curve_rows = [{"epoch": i, "train_loss": tr, "val_loss": vl}
                  for i, (tr, vl) in enumerate(zip(
                      model.metadata["curve_train"],
                      model.metadata["curve_val"]))]
    dataio.write_table(stem + ".curve.csv", curve_rows)
    plots.save_training_figure(stem + ".loss.png",
                               model.metadata["curve_train"],
                               model.metadata["curve_val"])
    plots.save_parity_figure(stem + ".parity.png", pred[:, :, 1], truth)
    write_manifest(args.output, "train", config.to_dict(), [args.data])
    print(f"wrote {args.output}")
    return 0


def cmd_transfer(args) -> int:
    from . import plots

    base = load_checkpoint(resolve_checkpoint_path(args.base))
    records, report = dataio.load_records(args.data)
    print(report.summary())
    model, split = transfer(base, records, lr=args.lr,
                            max_epochs=args.max_epochs, seed=args.seed)
    usable = dataio.valid_records(records)
    test = [usable[i] for i in split.test]
    pred = model.predict_records(test)
    truth = dataio.volume_targets(test)
    rows = _metric_rows(pred[:, :, 1], truth)
    print("test metrics (transferred model):")
    _print_metrics(rows)
    save_checkpoint(args.output, model)
    stem = str(Path(args.output).with_suffix(""))
    dataio.write_table(stem + ".metrics.csv", rows)
    plots.save_parity_figure(stem + ".parity.png", pred[:, :, 1], truth)
    write_manifest(args.output, "transfer",
                   {"lr": args.lr, "max_epochs": args.max_epochs,
                    "seed": args.seed},
                   [resolve_checkpoint_path(args.base), args.data])
    print(f"wrote {args.output}")
    return 0


def cmd_eval(args) -> int:
    from . import plots

    model = load_checkpoint(resolve_checkpoint_path(args.checkpoint))
    records, report = dataio.load_records(args.data)
    print(report.summary())
    usable = dataio.valid_records(records)
    pred = model.predict_records(usable)
    truth = dataio.volume_targets(usable)
    rows = _metric_rows(pred[:, :, 1], truth)
    print("metrics:")
    _print_metrics(rows)
    if args.output:
        dataio.write_table(args.output, rows)
        stem = str(Path(args.output).with_suffix(""))
        plots.save_parity_figure(stem + ".parity.png", pred[:, :, 1], truth)
        write_manifest(args.output, "eval", {},
                       [resolve_checkpoint_path(args.checkpoint), args.data])
        print(f"wrote {args.output}")
    return 0


def cmd_sweep(args) -> int:
    from . import plots

    config = resolve_model_config(args)
    if args.data:
        records, _ = dataio.load_records(args.data)
        inputs = [args.data]
    else:
        records = dataio.synth_dataset(args.synth_n, seed=config.seed).records
        inputs = []
    grid = ([float(g) for g in args.grid.split(",")] if args.grid else None)
    rows = dataio.sweep(records, args.kind, grid=grid, config=config,
                        seed=config.seed)
    table_rows = [{k: (repr(v) if isinstance(v, float) else v)
                   for k, v in row.items()} for row in rows]
    dataio.write_table(args.output, table_rows)
    stem = str(Path(args.output).with_suffix(""))
    xlabel = ("training proportion" if args.kind == "proportion"
              else "noise ratio")
    plots.save_curve_figure(
        stem + ".png", [row["grid"] for row in rows],
        {"r2 v_start": [row["r2_v_start"] for row in rows],
         "r2 v_end": [row["r2_v_end"] for row in rows]},
        xlabel, "r2")
    write_manifest(args.output, "sweep",
                   {"kind": args.kind, "grid": grid, **config.to_dict()},
                   inputs)
    for row in rows:
        print(f"  {xlabel}={row['grid']}: r2 v_start={row['r2_v_start']:.3f} "
              f"v_end={row['r2_v_end']:.3f} (n_train={row['n_train']})")
    print(f"wrote {args.output}")
    return 0


def _candidate_from_args(args, ratio: str) -> CandidateCondition:
    return CandidateCondition(
        column_spec=args.column,
        pe_ea_ratio=ratio,
        sample_mass_mg=args.mass,
        loading_solvent=args.loading_solvent,
        loading_volume_ml=args.loading_volume,
    )


def cmd_predict(args) -> int:
    model = load_checkpoint(resolve_checkpoint_path(args.checkpoint))
    condition = _candidate_from_args(args, args.ratio)
    overrides = None
    if args.overrides:
        table = chemfeat.load_override_table(args.overrides)
        overrides = table.get(args.smiles, ({}, None))[0] or None
    prediction = model.predict_one(args.smiles, condition.features(),
                                   overrides)
    flow = args.flow or graphrep.column_flow_rate(args.column)
    print(f"compound: {args.smiles}")
    print(f"condition: column={args.column} PE/EA={args.ratio} "
          f"flow={flow} mL/min")
    for label, triple in (("v_start", prediction.v_start),
                          ("v_end", prediction.v_end)):
        q10, q50, q90 = triple
        print(f"  {label}: q10={q10:.2f} q50={q50:.2f} q90={q90:.2f} mL "
              f"(t50={q50 / flow:.2f} min)")
    return 0


def cmd_plan(args) -> int:
    from . import plots

    model = load_checkpoint(resolve_checkpoint_path(args.checkpoint))
    ratios = args.ratios.split(",")
    candidates = [_candidate_from_args(args, ratio) for ratio in ratios]
    ranked = rank_conditions(model, args.a, args.b, candidates)
    print(f"separation plan for A={args.a}  B={args.b} "
          f"(column {args.column})")
    header = (f"{'PE/EA':>8s} {'sp':>6s} {'first':>6s} "
              f"{'A window (q50) mL':>20s} {'B window (q50) mL':>20s}")
    print(header)
    rows = []
    for item in ranked:
        a, b = item.window_a, item.window_b
        print(f"{item.condition.pe_ea_ratio:>8s} {item.assessment.sp:6.3f} "
              f"{item.assessment.first_eluter:>6s} "
              f"{a.v_start.q50:9.2f}-{a.v_end.q50:<10.2f} "
              f"{b.v_start.q50:9.2f}-{b.v_end.q50:<10.2f}")
        rows.append({
            "pe_ea_ratio": item.condition.pe_ea_ratio,
            "sp": repr(item.assessment.sp),
            "first_eluter": item.assessment.first_eluter,
            "overlap_ml": repr(item.assessment.overlap_ml),
            "total_ml": repr(item.assessment.total_ml),
            "a_v_start_q10": repr(a.v_start.q10),
            "a_v_start_q50": repr(a.v_start.q50),
            "a_v_start_q90": repr(a.v_start.q90),
            "a_v_end_q10": repr(a.v_end.q10),
            "a_v_end_q50": repr(a.v_end.q50),
            "a_v_end_q90": repr(a.v_end.q90),
            "b_v_start_q10": repr(b.v_start.q10),
            "b_v_start_q50": repr(b.v_start.q50),
            "b_v_start_q90": repr(b.v_start.q90),
            "b_v_end_q10": repr(b.v_end.q10),
            "b_v_end_q50": repr(b.v_end.q50),
            "b_v_end_q90": repr(b.v_end.q90),
        })
    if args.output:
        dataio.write_table(args.output, rows)
        stem = str(Path(args.output).with_suffix(""))
        plots.save_windows_figure(
            stem + ".png",
            [(item.condition.pe_ea_ratio, item.window_a, item.window_b,
              item.assessment.sp) for item in ranked])
        write_manifest(args.output, "plan",
                       {"a": args.a, "b": args.b, "column": args.column,
                        "ratios": ratios},
                       [resolve_checkpoint_path(args.checkpoint)])
        print(f"wrote {args.output}")
    return 0


def cmd_trace(args) -> int:
    from . import plots

    signal = trace_mod.read_trace(args.input)
    bounds = trace_mod.detect_peak_bounds(signal, k_sigma=args.k_sigma,
                                          min_run=args.min_run)
    if not bounds.valid:
        print("no peak detected: t1 = t2 = -1 (invalid data)")
    else:
        v1, v2, dv = elution.volumes_from_times(signal.flow_ml_min,
                                                bounds.t1_min, bounds.t2_min)
        print(f"t1={bounds.t1_min:.3f} min  t2={bounds.t2_min:.3f} min  "
              f"v_start={v1:.2f} mL  v_end={v2:.2f} mL  width={dv:.2f} mL")
    if args.output:
        row = {"t1_min": repr(bounds.t1_min), "t2_min": repr(bounds.t2_min),
               "valid": bounds.valid}
        if bounds.valid:
            v1, v2, dv = elution.volumes_from_times(
                signal.flow_ml_min, bounds.t1_min, bounds.t2_min)
            row.update({"v_start_ml": repr(v1), "v_end_ml": repr(v2),
                        "width_ml": repr(dv)})
        dataio.write_table(args.output, [row])
        stem = str(Path(args.output).with_suffix(""))
        plots.save_trace_figure(
            stem + ".png", signal, bounds,
            trace_mod.detection_threshold(signal, args.k_sigma))
        write_manifest(args.output, "trace",
                       {"k_sigma": args.k_sigma, "min_run": args.min_run},
                       [args.input])
        print(f"wrote {args.output}")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file")
    for key, kind in CONFIG_KEYS.items():
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key,
                            type=kind, default=None)


def _add_condition_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--column", default="4g",
                        help="column size class (4g/8g/25g/40g)")
    parser.add_argument("--mass", type=float, default=40.0,
                        help="sample mass, mg")
    parser.add_argument("--loading-solvent", default="DCM")
    parser.add_argument("--loading-volume", type=float, default=1.0,
                        help="loading volume, mL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccpred",
        description="Column-chromatography elution prediction and "
                    "separation planning")
    parser.add_argument("--version", action="version",
                        version=f"ccpred {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse SMILES and dump the graph")
    p.add_argument("smiles", nargs="*")
    p.add_argument("--file", help="one SMILES per line")
    p.set_defaults(handler=cmd_parse)

    p = sub.add_parser("featurize",
                       help="descriptor/fingerprint table for molecules")
    p.add_argument("smiles", nargs="*")
    p.add_argument("--file")
    p.add_argument("--overrides", help="descriptor/fingerprint override table")
    p.add_argument("--output")
    p.add_argument("--dump-tables", action="store_true",
                   help="print the codebook and solvent/column tables")
    p.set_defaults(handler=cmd_featurize)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--columns", default="4g", help="comma-separated sizes")
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--output", required=True)
    p.add_argument("--truth", help="also write the noiseless law table")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("train", help="train a model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--output", required=True)
    _add_model_flags(p)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("transfer",
                       help="fine-tune a checkpoint on a new column dataset")
    p.add_argument("--base", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(handler=cmd_transfer)

    p = sub.add_parser("eval", help="metrics of a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--output")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("sweep",
                       help="training-proportion or noise robustness curves")
    p.add_argument("--kind", choices=("proportion", "noise"), required=True)
    p.add_argument("--data")
    p.add_argument("--synth-n", type=int, default=600)
    p.add_argument("--grid", help="comma-separated grid values")
    p.add_argument("--output", required=True)
    _add_model_flags(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("predict",
                       help="quantile elution windows for one compound")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--smiles", required=True)
    p.add_argument("--ratio", default="20/1")
    p.add_argument("--flow", type=float, default=None)
    p.add_argument("--overrides")
    _add_condition_flags(p)
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("plan",
                       help="rank eluent ratios for separating a pair")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--a", required=True, help="SMILES of compound A")
    p.add_argument("--b", required=True, help="SMILES of compound B")
    p.add_argument("--ratios", default="50/1,20/1,10/1,5/1,2/1,1/1")
    p.add_argument("--output")
    _add_condition_flags(p)
    p.set_defaults(handler=cmd_plan)

    p = sub.add_parser("trace",
                       help="detect peak bounds in a UV trace file")
    p.add_argument("--input", required=True)
    p.add_argument("--k-sigma", type=float, default=3.0)
    p.add_argument("--min-run", type=int, default=5)
    p.add_argument("--output")
    p.set_defaults(handler=cmd_trace)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
