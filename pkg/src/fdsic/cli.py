"""
Command-line front end: ``fdsic {generate,train,eval,complexity,sweep}``.

Every table is printed as aligned text and written as CSV under ``--out``.
Errors exit with status 1 and a one-line message on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .architectures import PRESET_NAMES, TABLE_PRESETS, ArchitectureConfig, iq_pairs, preset
from .complexity import complexity_of, reduction_table, table_csv, table_text
from .metrics import evaluate_canceler, psd_welch, reports_csv
from .pipeline import fit_canceler, load_canceler
from .signals import (DATASET_PRESETS, dataset_preset, generate_dataset, load_dataset,
                      save_dataset, split_dataset)

#: search bounds for the hybrid-network grid
SWEEP_BOUNDS = {"L": (2, 3), "R": (2, 13), "S": (1, 2), "n_hr": (4, 10), "n_hd": (4, 12)}


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _aligned(header, rows) -> str:
    cells = [[str(h) for h in header]] + [
        [f"{v:.4f}" if isinstance(v, float) else str(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _int_list(text: str) -> list[int]:
    """``"2,3"`` or ``"4-10"`` or a mix such as ``"2,5-7"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _custom_config(args) -> ArchitectureConfig | None:
    fields = {k: getattr(args, k) for k in ("L", "R", "S", "n_hr", "n_hd")
              if getattr(args, k, None) is not None}
    if getattr(args, "hidden", None):
        fields["hidden_layer_sizes"] = tuple(_int_list(args.hidden))
    if not fields and not getattr(args, "kind", None):
        return None
    kind = args.kind or ("hcrdnn" if "n_hd" in fields else "hcrnn")
    name = kind + "(" + ",".join(f"{k}={v}" for k, v in fields.items()) + ")"
    extra = {"activation": args.activation} if getattr(args, "activation", None) else {}
    return ArchitectureConfig(kind=kind, name=name, **fields, **extra)


def _resolve_config(args) -> ArchitectureConfig:
    custom = _custom_config(args)
    if custom is not None:
        if args.arch:
            raise CliError("give either --arch or an explicit configuration, not both")
        return custom
    return preset(args.arch or "hcrnn_opt")


def _dataset(args):
    if args.data and args.preset:
        raise CliError("give either --data or --preset, not both")
    if args.data:
        return load_dataset(args.data), f"file {args.data}"
    name = args.preset or "noisy"
    cfg = dataset_preset(name, n_samples=args.n, seed=args.data_seed)
    return generate_dataset(cfg), f"preset {name} (n={args.n}, seed={args.data_seed})"


# ---------------------------------------------------------------------------
# training runs


@dataclass(frozen=True)
class TrainJob:
    config: ArchitectureConfig
    seed: int
    epochs: int | None
    batch: int | None
    lr: float | None
    optimizer: str | None


def _fit_one(job: TrainJob, split):
    tr_tx, tr_rx, te_tx, te_rx = split
    can = fit_canceler(job.config, tr_tx, tr_rx, seed=job.seed, validation=(te_tx, te_rx),
                       epochs=job.epochs, batch_size=job.batch, learning_rate=job.lr,
                       optimizer=job.optimizer)
    return can, evaluate_canceler(can, te_tx, te_rx)


def run_inits(config, split, *, inits: int, seed: int, epochs=None, batch=None, lr=None,
              optimizer=None):
    """Fit ``inits`` cancellers with seeds ``seed, seed+1, ...``."""
    if inits < 1:
        raise CliError("--inits must be at least 1")
    if not config.executable:
        inits = 1  # deterministic fits give identical results for every seed
    return [_fit_one(TrainJob(config, seed + i, epochs, batch, lr, optimizer), split)
            for i in range(inits)]


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    cfg = dataset_preset(args.preset or "noisy", n_samples=args.n, seed=args.seed)
    tx, rx = generate_dataset(cfg)
    stem = save_dataset(args.out, tx, rx,
                        description=f"synthetic preset={args.preset or 'noisy'} "
                                    f"n={args.n} seed={args.seed}")
    print(f"wrote {stem}.tx.csv, {stem}.rx.csv, {stem}.meta.json")
    print(f"{len(tx)} samples at {tx.sample_rate_hz / 1e6:g} MHz; "
          f"tx power {tx.power:.4g}, rx power {rx.power:.4g}")
    return 0


def cmd_train(args) -> int:
    config = _resolve_config(args)
    (tx, rx), source = _dataset(args)
    split = split_dataset(tx, rx, args.split)
    results = run_inits(config, split, inits=args.inits, seed=args.seed, epochs=args.epochs,
                        batch=args.batch, lr=args.lr, optimizer=args.optimizer)
    out = Path(args.out) / config.label
    rows = []
    for i, (can, rep) in enumerate(results):
        can.save(out / f"init_{i:02d}.ckpt.json")
        rows.append((i, can.seed, rep.linear_db, rep.total_db, rep.mse))
    header = ("init", "seed", "linear_db", "total_db", "test_mse")
    totals = np.array([r[3] for r in rows])
    summary = {"arch": config.label, "data": source, "inits": len(rows),
               "mean_total_db": float(np.mean(totals)), "linear_db": rows[0][2],
               "flops": results[0][1].flops, "params": results[0][1].params}
    _write(out / "inits.csv", _csv_text(header, rows))
    _write(out / "report.csv", reports_csv([r for _, r in results]))
    _write(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    print(f"{config.label} on {source}")
    print(_aligned(header, rows), end="")
    print(f"mean total cancellation over {len(rows)} init(s): {summary['mean_total_db']:.2f} dB "
          f"(linear only {summary['linear_db']:.2f} dB); "
          f"{summary['params']} params, {summary['flops']} FLOPs")
    print(f"checkpoints and CSVs in {out}")
    return 0


def cmd_eval(args) -> int:
    if not args.checkpoint:
        raise CliError("--checkpoint is required")
    can = load_canceler(args.checkpoint)
    (tx, rx), source = _dataset(args)
    tr_tx, tr_rx, te_tx, te_rx = split_dataset(tx, rx, args.split)
    seg_tx, seg_rx = {"test": (te_tx, te_rx), "train": (tr_tx, tr_rx), "all": (tx, rx)}[args.on]
    if len(seg_tx) <= can.warmup:
        raise CliError("checkpoint mismatch: dataset segment shorter than the canceller memory")
    rep = evaluate_canceler(can, seg_tx, seg_rx)
    stages = can.cancel(seg_tx, seg_rx)
    si = stages.linear_residual + stages.linear_estimate
    out = Path(args.out)
    actual, pred = iq_pairs(stages.linear_residual), iq_pairs(stages.nonlinear_estimate)
    n0 = can.warmup
    _write(out / "predictions.csv", _csv_text(
        ("n", "residual_i", "residual_q", "predicted_i", "predicted_q"),
        [(n0 + i, *a, *p) for i, (a, p) in enumerate(zip(actual.tolist(), pred.tolist()))]))
    _write(out / "residual.csv", _csv_text(("i", "q"), iq_pairs(stages.total_residual).tolist()))
    _write(out / "si.csv", _csv_text(("i", "q"), iq_pairs(si).tolist()))
    if can.history is not None:
        h = can.history
        test = h.test_mse or [None] * len(h.train_mse)
        _write(out / "history.csv", _csv_text(("epoch", "train_mse", "test_mse"),
                                              [(e, a, b) for e, (a, b) in
                                               enumerate(zip(h.train_mse, test))]))
    seg = min(args.segment, len(si))
    fs = getattr(seg_tx, "sample_rate_hz", None)
    psd_rows = []
    for name, sig in (("raw", si), ("linear", stages.linear_residual),
                      ("full", stages.total_residual)):
        est = psd_welch(sig, seg, sample_rate_hz=fs)
        _write(out / f"psd_{name}.csv", est.to_csv())
        psd_rows.append((name, est.band_power_db()))
    _write(out / "report.csv", reports_csv([rep]))
    print(f"{rep.name} evaluated on the {args.on} split of {source} ({rep.n_samples} samples)")
    print(f"linear-only cancellation {rep.linear_db:.2f} dB, total {rep.total_db:.2f} dB, "
          f"mse {rep.mse:.6g}")
    print(_aligned(("psd", "band_centre_db_per_bin"), psd_rows), end="")
    print(f"CSVs in {out}")
    return 0


def cmd_complexity(args) -> int:
    custom = _custom_config(args)
    configs = [preset(a) for a in (args.arch or [])]
    if custom is not None:
        configs.append(custom)
    if not configs:
        configs = [preset(n) for n in TABLE_PRESETS]
    rows = reduction_table(configs, preset(args.baseline), recurrent_mode=args.recurrent_mode)
    text = table_text(rows)
    print(f"complexity relative to {args.baseline}")
    print(text, end="")
    out = Path(args.out)
    _write(out / "complexity.csv", table_csv(rows))
    _write(out / "complexity.txt", text)
    return 0


SWEEP_HEADER = ("rank", "grid_index", "kind", "L", "R", "S", "n_hr", "n_hd", "params", "flops",
                "mean_total_db", "linear_db")


def _sweep_point(payload):
    index, config, split, inits, seed, epochs, batch, lr, optimizer = payload
    results = run_inits(config, split, inits=inits, seed=seed, epochs=epochs, batch=batch, lr=lr,
                        optimizer=optimizer)
    cx = complexity_of(config)
    mean_db = float(np.mean([r.total_db for _, r in results]))
    return (index, config.kind, config.L, config.R, config.S, config.n_hr,
            config.n_hd if config.n_hd is not None else "", cx.params_total, cx.flops_total,
            mean_db, results[0][1].linear_db)


def sweep_grid(L, R, S, n_hr, n_hd=None, M: int = 13):
    for name, values in (("L", L), ("R", R), ("S", S), ("n_hr", n_hr), ("n_hd", n_hd or [])):
        lo, hi = SWEEP_BOUNDS[name]
        bad = [v for v in values if not lo <= v <= hi]
        if bad:
            raise CliError(f"{name} values {bad} outside the search range [{lo}, {hi}]")
    grid = []
    for l, r, s, h in itertools.product(L, R, S, n_hr):
        for d in (n_hd or [None]):
            kw = dict(L=l, R=r, S=s, n_hr=h, M=M)
            if d is None:
                cfg = ArchitectureConfig(kind="hcrnn", **kw)
            else:
                cfg = ArchitectureConfig(kind="hcrdnn", n_hd=d, **kw)
            grid.append(cfg.with_(name=f"{cfg.kind}(L={l},R={r},S={s},n_hr={h}"
                                       + (f",n_hd={d})" if d is not None else ")")))
    if not grid:
        raise CliError("empty grid")
    return grid


def cmd_sweep(args) -> int:
    grid = sweep_grid(_int_list(args.L), _int_list(args.R), _int_list(args.S),
                      _int_list(args.n_hr_list), _int_list(args.n_hd_list) if args.n_hd_list else None)
    (tx, rx), source = _dataset(args)
    split = split_dataset(tx, rx, args.split)
    payloads = [(i, cfg, split, args.inits, args.seed, args.epochs, args.batch, args.lr,
                 args.optimizer) for i, cfg in enumerate(grid)]
    if args.workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_point, payloads))
    else:
        results = [_sweep_point(p) for p in payloads]
    results.sort(key=lambda r: r[0])  # merge by grid index
    ranked = sorted(results, key=lambda r: (-r[9], r[8], r[0]))
    rows = [(rank, *r) for rank, r in enumerate(ranked, start=1)]
    out = Path(args.out)
    _write(out / "sweep.csv", _csv_text(SWEEP_HEADER, rows))
    print(f"{len(grid)} configuration(s) on {source}, {args.epochs} epoch(s), "
          f"{args.inits} init(s) each")
    print(_aligned(SWEEP_HEADER, rows), end="")
    print(f"CSV in {out / 'sweep.csv'}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_data_flags(p):
    p.add_argument("--data", help="dataset stem or any of its .tx.csv/.rx.csv/.meta.json files")
    p.add_argument("--preset", choices=DATASET_PRESETS,
                   help="generate a synthetic dataset instead of reading --data "
                        "(default noisy)")
    p.add_argument("--n", type=int, default=20480, help="samples when generating (default 20480)")
    p.add_argument("--data-seed", type=int, default=0, help="seed when generating (default 0)")
    p.add_argument("--split", type=float, default=0.9, help="training fraction (default 0.9)")


def _add_training_flags(p, epochs_default=None):
    p.add_argument("--seed", type=int, default=0, help="first initialisation seed")
    p.add_argument("--inits", type=int, default=1, help="random initialisations (default 1)")
    p.add_argument("--epochs", type=int, default=epochs_default,
                   help="override the preset's epoch count")
    p.add_argument("--batch", type=int, help="override the preset's batch size")
    p.add_argument("--lr", type=float, help="override the preset's learning rate")
    p.add_argument("--optimizer", choices=("sgd", "adam", "rmsprop", "adadelta", "adamax"),
                   help="override the preset's optimizer")


def _add_config_flags(p):
    p.add_argument("--kind", choices=("hcrnn", "hcrdnn", "rv_tdnn", "rnn", "cv_tdnn", "lwgs",
                                      "mwgs"),
                   help="architecture kind of an explicit configuration")
    p.add_argument("--L", type=int, help="number of conv filters")
    p.add_argument("--R", type=int, help="filter rows")
    p.add_argument("--S", type=int, help="filter columns")
    p.add_argument("--n-hr", dest="n_hr", type=int, help="recurrent neurons")
    p.add_argument("--n-hd", dest="n_hd", type=int, help="dense neurons (implies hcrdnn)")
    p.add_argument("--hidden", help="hidden layer sizes for baseline kinds, e.g. 10,10,10")
    p.add_argument("--activation", help="hidden activation of an explicit configuration")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdsic", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic tx/rx dataset")
    p.add_argument("--preset", choices=DATASET_PRESETS, default="noisy")
    p.add_argument("--n", type=int, default=20480)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="data/synth", help="output stem (default data/synth)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="fit linear + non-linear canceller, evaluate on test split")
    p.add_argument("--arch", choices=PRESET_NAMES, help="preset name (default hcrnn_opt)")
    _add_config_flags(p)
    _add_data_flags(p)
    _add_training_flags(p)
    p.add_argument("--out", default="runs", help="output directory (default runs)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint: predictions, MSE curves, PSDs")
    p.add_argument("--checkpoint", help="canceller checkpoint written by train")
    _add_data_flags(p)
    p.add_argument("--on", choices=("test", "train", "all"), default="test",
                   help="which part of the dataset to evaluate (default test)")
    p.add_argument("--segment", type=int, default=1024, help="Welch segment length")
    p.add_argument("--out", default="eval", help="output directory (default eval)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("complexity", help="FLOP / parameter table against a baseline")
    p.add_argument("--arch", action="append", choices=PRESET_NAMES,
                   help="preset to include (repeatable; default: the full comparison)")
    _add_config_flags(p)
    p.add_argument("--baseline", choices=PRESET_NAMES, default="poly_p5")
    p.add_argument("--recurrent-mode", choices=("single", "per_step"), default="single")
    p.add_argument("--out", default="complexity", help="output directory (default complexity)")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("sweep", help="train a grid of hybrid networks and rank them")
    p.add_argument("--L", default="2,3")
    p.add_argument("--R", default="12")
    p.add_argument("--S", default="1")
    p.add_argument("--n-hr", dest="n_hr_list", default="9")
    p.add_argument("--n-hd", dest="n_hd_list", help="dense sizes; switches the grid to hcrdnn")
    _add_data_flags(p)
    _add_training_flags(p, epochs_default=5)
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--arch", help=argparse.SUPPRESS)
    p.add_argument("--out", default="sweep", help="output directory (default sweep)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130
    except (CliError, ValueError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

