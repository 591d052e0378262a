"""Command-line front end.

    eegemo synth    --config run.yaml --seed 3 --out runs/a
    eegemo features --config run.yaml --out runs/a
    eegemo evaluate --config run.yaml --out runs/a
    eegemo report   --out runs/a [--metric sensitivity]

Layout under ``--out``::

    dataset/                      synth output (unless the config names a dataset)
    features/<key>/w4s_band-beta.csv
    report/table_{accuracy,sensitivity,specificity}.csv, report.json

The feature directory ``<key>`` hashes everything the tables depend on
(dataset bytes, window length, overlap, channels, reference), so a classifier
sweep reuses cached tables.  ``--set a.b=value`` overrides any config key;
values are parsed as YAML.

Exit codes: 0 ok, 1 unexpected error, 2 invalid configuration,
3 missing or unreadable input, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

import yaml
from pydantic import ValidationError

from .classify import DivergenceError, SvmError
from .config import RunConfig, SyntheticParams, config_hash, load_config
from .dataset import Dataset, DatasetError, generate_synthetic, load_dataset, save_dataset
from .evaluation import WORKERS_ENV, ExperimentError, ExperimentReport, FoldError, experiment_features, run_experiment
from .features import FeatureError, FeatureMatrix
from .pca import PcaError
from .preprocess import WindowError
from .wavelet import BandConfigurationError

log = logging.getLogger("eegemo")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_NUMERIC = 4

_NUMERIC = (SvmError, DivergenceError, PcaError, FloatingPointError)
_CONFIG = (ValidationError, FoldError, BandConfigurationError, FeatureError, WindowError)
_MISSING = (FileNotFoundError, DatasetError)


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _parse_sets(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise CliError(f"--set expects key=value, got {item!r}", EXIT_CONFIG)
        out[key.strip()] = yaml.safe_load(value)
    return out


def _config(args) -> RunConfig:
    overrides = _parse_sets(args.set)
    if args.seed is not None:
        overrides["experiment.seed"] = args.seed
    if args.out is not None:
        overrides["output"] = str(args.out)
    if getattr(args, "workers", None) is not None:
        overrides["experiment.workers"] = args.workers
    if args.config is not None and not Path(args.config).is_file():
        raise CliError(f"config file not found: {args.config}", EXIT_MISSING)
    try:
        return load_config(args.config, overrides)
    except (ValidationError, ValueError, yaml.YAMLError) as exc:
        raise CliError(f"invalid configuration:\n{exc}", EXIT_CONFIG) from exc


def run_hash(cfg: RunConfig) -> str:
    """Hash of the run configuration minus the output location."""
    return config_hash(cfg.model_dump(mode="json", exclude={"output"}))


def _provenance(cfg: RunConfig) -> dict:
    return {"config_hash": run_hash(cfg), "seed": cfg.seed}


def _dataset_dir(cfg: RunConfig) -> Path:
    return Path(cfg.dataset) if cfg.dataset is not None else Path(cfg.output) / "dataset"


def _manifest(cfg: RunConfig) -> Path:
    path = _dataset_dir(cfg)
    manifest = path / "manifest.json" if path.is_dir() or not path.suffix else path
    if not manifest.is_file():
        hint = "" if cfg.dataset is not None else " (run 'eegemo synth' first or set 'dataset')"
        raise CliError(f"dataset not found: {manifest}{hint}", EXIT_MISSING)
    return manifest


def _dataset_digest(manifest: Path) -> str:
    """sha256 over every file of the dataset directory, in sorted order."""
    root = manifest.parent
    h = hashlib.sha256()
    for p in sorted(q for q in root.rglob("*") if q.is_file()):
        h.update(str(p.relative_to(root)).encode() + b"\0")
        with open(p, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
    return h.hexdigest()


def feature_key(cfg: RunConfig, digest: str, window_seconds: float) -> str:
    exp = cfg.experiment
    return config_hash({
        "dataset": digest,
        "window_seconds": float(window_seconds),
        "overlap": exp.overlap,
        "channels": list(exp.channels),
        "reference": exp.reference,
        "format": 1,
    })


def _table_name(window_seconds: float, mode: str) -> str:
    return f"w{window_seconds:g}s_{mode.replace(':', '-')}.csv"


def _features(cfg: RunConfig, manifest: Path, progress):
    """Load cached feature tables or compute and cache them.

    Returns ``({window: {mode: FeatureMatrix}}, {window: {mode: path}})``.
    """
    digest = _dataset_digest(manifest)
    dataset: Dataset | None = None
    prov = _provenance(cfg)
    out: dict[float, dict[str, FeatureMatrix]] = {}
    files: dict[float, dict[str, Path]] = {}
    for win in cfg.experiment.window_lengths:
        key = feature_key(cfg, digest, win)
        cache = Path(cfg.output) / "features" / key
        paths = {m: cache / _table_name(win, m) for m in cfg.experiment.modes()}
        files[float(win)] = paths
        if all(p.is_file() for p in paths.values()):
            progress(f"features for {win:g} s windows: cached ({cache})")
            out[float(win)] = {m: FeatureMatrix.from_csv(p) for m, p in paths.items()}
            continue
        progress(f"features for {win:g} s windows: computing")
        if dataset is None:
            dataset = load_dataset(manifest)
        mats = experiment_features(dataset, cfg.experiment, win)
        cache.mkdir(parents=True, exist_ok=True)
        header = [f"config_hash={prov['config_hash']}", f"seed={prov['seed']}", f"feature_key={key}",
                  f"window_seconds={win:g}"]
        for m, p in paths.items():
            tmp = p.with_suffix(".tmp")
            mats[m].to_csv(tmp, header + [f"mode={m}"])
            os.replace(tmp, p)
        out[float(win)] = mats
    return out, files


def cmd_synth(cfg: RunConfig, progress) -> Path:
    if cfg.dataset is not None:
        raise CliError("config names an existing dataset; synth needs a 'synthetic' section", EXIT_CONFIG)
    params = cfg.synthetic or SyntheticParams()
    try:
        spec = params.to_spec()
    except ValueError as exc:
        raise CliError(f"invalid synthetic spec: {exc}", EXIT_CONFIG) from exc
    progress(f"generating {spec.n_participants} x {spec.n_trials} trials (seed {cfg.seed})")
    dataset = generate_synthetic(spec, seed=cfg.seed)
    final = Path(cfg.output) / "dataset"
    final.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".dataset-", dir=final.parent))
    try:
        save_dataset(dataset, tmp, provenance=_provenance(cfg))
        if final.exists():
            shutil.rmtree(final)
        os.replace(tmp, final)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    print(f"wrote {final / 'manifest.json'}")
    return final


def cmd_features(cfg: RunConfig, progress) -> list[Path]:
    feats, files = _features(cfg, _manifest(cfg), progress)
    written = []
    for win, mats in feats.items():
        for m, fm in mats.items():
            p = files[win][m]
            written.append(p)
            print(f"{p}  rows={fm.n_rows} features={fm.values.shape[1]}")
    return written


def cmd_evaluate(cfg: RunConfig, progress) -> ExperimentReport:
    feats, _ = _features(cfg, _manifest(cfg), progress)
    report = run_experiment(None, cfg.experiment, features=feats, progress=progress,
                            run_config=cfg.model_dump(mode="json", exclude={"output"}))
    out = Path(cfg.output) / "report"
    report.write(out)
    print(report.table("accuracy"), end="")
    print(f"wrote {out}")
    return report


def cmd_report(cfg: RunConfig, metric: str, source: str | None) -> ExperimentReport:
    path = Path(source) if source else Path(cfg.output) / "report" / "report.json"
    if path.is_dir():
        path = path / "report.json"
    if not path.is_file():
        raise CliError(f"report not found: {path} (run 'eegemo evaluate' first)", EXIT_MISSING)
    report = ExperimentReport.read(path)
    metrics = ("accuracy", "sensitivity", "specificity") if metric == "all" else (metric,)
    for i, m in enumerate(metrics):
        if i:
            print()
        print(report.table(m), end="")
    return report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON run configuration")
    common.add_argument("--seed", type=int, help="override experiment.seed (also the synthetic generator seed)")
    common.add_argument("--out", help="output directory (overrides 'output')")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. experiment.axis=pair")
    common.add_argument("-q", "--quiet", action="store_true", help="no progress messages")

    parser = argparse.ArgumentParser(prog="eegemo", description="EEG emotion recognition from wavelet entropy features")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    sub.add_parser("features", parents=[common], help="compute (or reuse cached) feature tables")
    ev = sub.add_parser("evaluate", parents=[common], help="cross-validate and write report tables")
    ev.add_argument("--workers", type=int, help=f"worker processes (capped by ${WORKERS_ENV})")
    rp = sub.add_parser("report", parents=[common], help="print tables from an existing report")
    rp.add_argument("--metric", default="accuracy", choices=("accuracy", "sensitivity", "specificity", "all"))
    rp.add_argument("--from", dest="source", help="report.json or its directory")
    return parser


def _classify(exc: BaseException) -> int:
    seen = exc
    while seen is not None:
        if isinstance(seen, _NUMERIC):
            return EXIT_NUMERIC
        if isinstance(seen, _MISSING):
            return EXIT_MISSING
        if isinstance(seen, _CONFIG):
            return EXIT_CONFIG
        seen = seen.__cause__
    return EXIT_ERROR


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    def progress(msg: str) -> None:
        if not args.quiet:
            print(msg, file=sys.stderr, flush=True)

    try:
        cfg = _config(args)
        if args.command == "synth":
            cmd_synth(cfg, progress)
        elif args.command == "features":
            cmd_features(cfg, progress)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, progress)
        else:
            cmd_report(cfg, args.metric, args.source)
    except CliError as exc:
        print(f"eegemo {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except (ExperimentError, *_NUMERIC, *_MISSING, *_CONFIG) as exc:
        print(f"eegemo {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _classify(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
