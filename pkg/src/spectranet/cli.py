"""Command-line pipeline: phantom -> split -> train/ablate -> eval/compare/roc.

Every report JSON embeds {seed, config_hash, version}; reports are
byte-identical across reruns with the same triple. Wall-clock timing is
never written into reports (it would break that guarantee) -- cmd_eval
puts it in a separate timing file and on stdout.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, fields, replace
from pathlib import Path

import numpy as np

from . import __version__, data, metrics, model, rngs, train
from .errors import ConfigError, DataError, NumericError, SpectranetError

VERSION_STRING = f"spectranet-{__version__}"

TRAIN_KEYS = {f.name for f in fields(train.TrainConfig)}
NET_KEYS = {f.name for f in fields(model.NetworkConfig)}


def _parse_onoff(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError(f"expected on|off, got {value!r}")
    return value == "on"


def load_run_config(args: argparse.Namespace) -> tuple[train.TrainConfig, model.NetworkConfig]:
    """Defaults <- config file <- CLI flags, in increasing precedence."""
    overrides: dict = {}
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(overrides) - TRAIN_KEYS - {"network"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    net_overrides = dict(overrides.pop("network", {}))
    if set(net_overrides) - NET_KEYS:
        raise ConfigError(f"unknown network keys: {sorted(set(net_overrides) - NET_KEYS)}")

    for flag, key in (("seed", "seed"), ("epochs", "epochs"), ("batch", "batch"),
                      ("lr", "lr"), ("l2", "l2_lambda"), ("patience", "patience"),
                      ("se", "se_enabled"), ("virtual", "virtual_enabled")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    try:
        cfg = train.TrainConfig(**overrides)
        net = model.NetworkConfig(**net_overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg, net


def config_hash(cfg: train.TrainConfig, net: model.NetworkConfig) -> str:
    blob = json.dumps({"train": asdict(cfg), "network": asdict(net)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def dataset_hash(data_dir: str | Path) -> str:
    manifest = Path(data_dir) / "manifest.json"
    if not manifest.exists():
        raise DataError(f"no manifest.json under {data_dir}")
    return hashlib.sha256(manifest.read_bytes()).hexdigest()[:16]


def write_report(path: Path, body: dict, seed: int, cfg_hash: str) -> None:
    report = {"seed": seed, "config_hash": cfg_hash, "version": VERSION_STRING}
    report.update(body)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def _load_split(path: str | Path) -> data.FoldSplit:
    try:
        return data.FoldSplit.from_json(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"cannot read split file {path}: {exc}") from exc


def _store(args) -> data.CaseStore:
    return data.CaseStore(args.data)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_phantom(args) -> int:
    if args.spec:
        specs = data.load_phantom_config(args.spec)
    elif args.preset == "separable":
        specs = data.phantom_config_from_dict(data.separable_phantom_config())
    else:
        specs = data.phantom_config_from_dict(data.ambiguous_phantom_config())
    n_per_class = tuple(int(x) for x in args.n_per_class.split(","))
    if len(n_per_class) != 3:
        raise ConfigError(f"--n-per-class needs 3 comma-separated counts, got {args.n_per_class!r}")
    records = data.generate_dataset(args.out, specs, n_per_class, args.seed)
    print(f"wrote {len(records)} cases to {args.out}")
    return 0


def cmd_split(args) -> int:
    store = _store(args)
    ids = store.case_ids()
    labels = [store.label(c) for c in ids]
    n = len(ids)
    if args.train_n is not None and args.test_n is not None:
        train_n, test_n = args.train_n, args.test_n
    else:
        train_n = round(n * 151 / 227)  # same holdout proportion as the source protocol
        test_n = n - train_n
    split = data.make_fold_split(ids, labels, train_n, test_n, args.folds, args.seed)

    assigned = {cid: ("test" if cid in set(split.holdout) else "train") for cid in ids}
    records = [replace(store.records[cid], split=assigned[cid]) for cid in ids]
    data.write_manifest(Path(args.data) / "manifest.json", records)
    out = Path(args.out or args.data) / "split.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = {"seed": args.seed, "version": VERSION_STRING}
    payload.update(split.to_json())
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"split: {train_n} train / {test_n} test, {args.folds} folds -> {out}")
    return 0


def cmd_train(args) -> int:
    cfg, net = load_run_config(args)
    store = _store(args)
    split = _load_split(args.splits or Path(args.data) / "split.json")
    chash = config_hash(cfg, net)
    dhash = dataset_hash(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    folds = range(split.k) if args.fold is None else [args.fold]
    summary = []
    for fold in folds:
        ckpt, history = train.train_fold(cfg, net, store, split, fold)
        ckpt.config_hash = chash
        ckpt.dataset_hash = dhash
        path = out / f"checkpoint_fold{fold}.svol"
        train.save_checkpoint(path, ckpt)
        summary.append({"fold": fold, "best_epoch": ckpt.epoch, "val_auc": ckpt.val_auc,
                        "epochs_run": len(history.val_auc), "checkpoint": path.name})
        print(f"fold {fold}: best val AUC {ckpt.val_auc:.4f} at epoch {ckpt.epoch}")
    write_report(out / "train_report.json", {"folds": summary, "dataset_hash": dhash},
                 cfg.seed, chash)
    return 0


def cmd_ablate(args) -> int:
    cfg, net = load_run_config(args)
    store = _store(args)
    split = _load_split(args.splits or Path(args.data) / "split.json")
    chash = config_hash(cfg, net)
    report = train.run_ablation_grid(cfg, net, store, split, bootstrap_b=args.bootstrap)
    report["dataset_hash"] = dataset_hash(args.data)
    out = Path(args.out)
    write_report(out / "ablation_report.json", report, cfg.seed, chash)
    table = train.format_ablation_table(report)
    (out / "ablation_table.txt").write_text(table + "\n")
    print(table)
    return 0


def cmd_eval(args) -> int:
    cfg, net = load_run_config(args)
    store = _store(args)
    split = _load_split(args.splits or Path(args.data) / "split.json")
    ckpt = train.load_checkpoint(args.checkpoint)
    dhash = dataset_hash(args.data)
    if ckpt.dataset_hash and ckpt.dataset_hash != dhash:
        raise ConfigError(
            f"checkpoint was trained on dataset {ckpt.dataset_hash}, this is {dhash}")
    proba, y = train.evaluate_checkpoint(ckpt, store, split, args.fold)

    body: dict = {"fold": args.fold, "n_test": int(len(y)), "dataset_hash": dhash,
                  "checkpoint_val_auc": ckpt.val_auc}
    res = metrics.auc_bca_ci(proba, y, b=args.bootstrap,
                             rng=rngs.stream(cfg.seed, rngs.BOOTSTRAP, args.fold))
    body["micro_auc"] = res.auc
    body["ci_low"], body["ci_high"] = res.ci_low, res.ci_high
    if args.metric == "perclass":
        per_class = []
        for c in range(proba.shape[1]):
            r = metrics.binary_auc(proba[:, c], (y == c).astype(int))
            per_class.append({"class": data.LABEL_TOKENS[c], "auc": r.auc})
        body["per_class"] = per_class
    out = Path(args.out)
    write_report(out / "eval_report.json", body, cfg.seed, config_hash(cfg, net))

    # Timing is hardware noise; keep it out of the deterministic report.
    ids = sorted(split.holdout)
    stats = data.fit_normalization(
        [store.get_raw(c) for c in split.train_ids(args.fold)], source="train")
    volumes = [data.prepare_volume(store.get_raw(c), stats, ckpt.net_config.input_hw)
               for c in ids]
    t0 = time.perf_counter()
    for vol in volumes:
        model.predict(ckpt.net_config, ckpt.params, vol)
    elapsed = (time.perf_counter() - t0) / max(len(volumes), 1)
    (out / "eval_timing.txt").write_text(f"mean_per_case_seconds={elapsed:.6f}\n")
    print(f"micro AUC {res.auc:.4f} [{res.ci_low:.4f}, {res.ci_high:.4f}] "
          f"(~{elapsed * 1e3:.1f} ms/case)")
    return 0


def cmd_compare(args) -> int:
    cfg, net = load_run_config(args)
    store = _store(args)
    split = _load_split(args.splits or Path(args.data) / "split.json")
    ckpt_a = train.load_checkpoint(args.checkpoint_a)
    ckpt_b = train.load_checkpoint(args.checkpoint_b)
    proba_a, y = train.evaluate_checkpoint(ckpt_a, store, split, args.fold)
    proba_b, _ = train.evaluate_checkpoint(ckpt_b, store, split, args.fold)
    results = metrics.per_class_delong(proba_a, proba_b, y)
    corrected = metrics.bonferroni([r.p for r in results], m=len(results))
    rows = []
    for c, (r, cp) in enumerate(zip(results, corrected)):
        rows.append({"class": data.LABEL_TOKENS[c], "auc_a": r.auc_a, "auc_b": r.auc_b,
                     "z": r.z, "p": r.p, "corrected_p": float(cp),
                     "significant": bool(abs(r.z) > 1.96)})
        print(f"{data.LABEL_TOKENS[c]:8s} AUC {r.auc_a:.4f} vs {r.auc_b:.4f}  "
              f"z={r.z:+.3f}  p={r.p:.4f}  corrected={cp:.4f}")
    write_report(Path(args.out) / "compare_report.json",
                 {"fold": args.fold, "per_class": rows, "m": len(results)},
                 cfg.seed, config_hash(cfg, net))
    return 0


def cmd_roc(args) -> int:
    cfg, net = load_run_config(args)
    store = _store(args)
    split = _load_split(args.splits or Path(args.data) / "split.json")
    curves: list[tuple[str, metrics.RocCurve]] = []
    for spec in args.checkpoints:
        name, _, path = spec.partition("=")
        if not path:
            name, path = Path(spec).stem, spec
        ckpt = train.load_checkpoint(path)
        proba, y = train.evaluate_checkpoint(ckpt, store, split, args.fold)
        if args.metric == "perclass":
            for c in range(proba.shape[1]):
                curve = metrics.roc_curve(proba[:, c], (y == c).astype(int))
                curves.append((f"{name}_{data.LABEL_TOKENS[c]}", curve))
        else:
            curves.append((name, metrics.micro_roc_curve(proba, y)))
    written = metrics.roc_export(curves, args.out)
    print("\n".join(str(p) for p in written))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, *, needs_data: bool = True) -> None:
    p.add_argument("--config", help="JSON config file; CLI flags override its keys")
    p.add_argument("--seed", type=int, default=None, help="random seed (default 42)")
    p.add_argument("--out", required=True, help="output directory")
    if needs_data:
        p.add_argument("--data", required=True, help="dataset directory (manifest.json)")
        p.add_argument("--splits", default=None, help="split.json (default <data>/split.json)")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--se", type=_parse_onoff, default=None, help="channel gate on|off")
    p.add_argument("--virtual", type=_parse_onoff, default=None, help="virtual class on|off")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectranet",
                                     description="Spectral-volume classifier pipeline")
    parser.add_argument("--version", action="version", version=VERSION_STRING)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a synthetic dataset")
    p.add_argument("--spec", help="phantom spec JSON (see docs)")
    p.add_argument("--preset", choices=("separable", "ambiguous"), default="separable",
                   help="built-in spec when --spec is not given")
    p.add_argument("--n-per-class", default="131,58,38",
                   help="cases per class, comma separated")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("split", help="stratified holdout + k folds")
    p.add_argument("--data", required=True)
    p.add_argument("--train-n", type=int, default=None)
    p.add_argument("--test-n", type=int, default=None)
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None, help="directory for split.json (default: --data)")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train one cell on one or all folds")
    _add_common(p)
    _add_train_flags(p)
    p.add_argument("--fold", type=int, default=None, help="train only this fold")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ablate", help="full 2x2 component grid over all folds")
    _add_common(p)
    _add_train_flags(p)
    p.add_argument("--bootstrap", type=int, default=2000, help="BCa replicates")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the holdout")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--fold", type=int, required=True,
                   help="fold whose training stats normalize the test data")
    p.add_argument("--metric", choices=("micro", "perclass"), default="micro")
    p.add_argument("--bootstrap", type=int, default=2000)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="per-class DeLong between two checkpoints")
    _add_common(p)
    p.add_argument("--checkpoint-a", required=True)
    p.add_argument("--checkpoint-b", required=True)
    p.add_argument("--fold", type=int, required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("roc", help="export ROC curves (CSV + SVG)")
    _add_common(p)
    p.add_argument("--checkpoints", nargs="+", required=True,
                   help="checkpoint paths, optionally name=path")
    p.add_argument("--fold", type=int, required=True)
    p.add_argument("--metric", choices=("micro", "perclass"), default="micro")
    p.set_defaults(func=cmd_roc)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, SpectranetError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
