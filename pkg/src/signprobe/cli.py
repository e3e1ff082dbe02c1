"""``signprobe`` command-line interface."""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bundle import model_to_bundle, read_bundle, write_bundle
from .core import rng_new
from .data import DATASETS, extreme_pairs, fetch_dataset, load_dataset, make_pair_task, ssim_distance_matrix
from .harness import (
    DEFAULT_NOISE_GRID,
    DEFAULT_PRUNE_GRID,
    ModelBank,
    complexity_correlation,
    complexity_matrices,
    run_sweep,
)
from .mlp import TrainConfig, train
from .plotting import heatmap, line_plot
from .probes import apply_to_matrices, parse_probe
from .randomize import KINDS, RewireConfig


class UsageError(Exception):
    pass


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"class pair must look like 'a,b', got {text!r}") from None
    if a == b:
        raise UsageError(f"class pair needs two distinct classes, got {text!r}")
    if not (0 <= a <= 9 and 0 <= b <= 9):
        raise UsageError(f"classes must lie in 0..9, got {text!r}")
    return a, b


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    dataset: str = "mnist"
    pairs: dict = field(default_factory=lambda: {"E": (0, 7), "H": (7, 9)})
    hidden_dim: int = 64
    base_seed: int = 0
    replications: int = 100
    grid: list | None = None
    kinds: tuple = KINDS
    output_dir: Path = Path("results")
    epochs: int = 10
    batch_size: int = 128
    lr: float = 1e-3
    swap_attempts: int = 100
    workers: int = 1
    cache_dir: Path | None = None

    def train_config(self) -> TrainConfig:
        return TrainConfig(max_epochs=self.epochs, batch_size=self.batch_size, peak_lr=self.lr)


def parse_config_text(text: str) -> RunConfig:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    cfg = RunConfig()
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise UsageError(f"config line {lineno}: expected key=value, got {raw!r}")
        try:
            if key == "dataset":
                cfg.dataset = value
            elif key in ("easy", "easy_pair"):
                pairs["E"] = _pair(value)
            elif key in ("hard", "hard_pair"):
                pairs["H"] = _pair(value)
            elif key == "classes":
                pairs["T"] = _pair(value)
            elif key == "hidden_dim":
                cfg.hidden_dim = int(value)
            elif key in ("base_seed", "seed"):
                cfg.base_seed = int(value)
            elif key == "replications":
                cfg.replications = int(value)
            elif key == "grid":
                cfg.grid = _floats(value)
            elif key == "kinds":
                cfg.kinds = tuple(k.strip().upper() for k in value.split(",") if k.strip())
            elif key == "output_dir":
                cfg.output_dir = Path(value)
            elif key == "epochs":
                cfg.epochs = int(value)
            elif key == "batch_size":
                cfg.batch_size = int(value)
            elif key == "lr":
                cfg.lr = float(value)
            elif key == "swap_attempts":
                cfg.swap_attempts = int(value)
            elif key == "workers":
                cfg.workers = int(value)
            elif key == "cache_dir":
                cfg.cache_dir = Path(value)
            else:
                raise UsageError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise UsageError(f"config line {lineno}: {exc}") from None
    if cfg.dataset not in DATASETS:
        raise UsageError(f"unknown dataset {cfg.dataset!r}")
    cfg.pairs = pairs or dict(DATASETS[cfg.dataset]["pairs"])
    if cfg.hidden_dim < 1 or cfg.replications < 1 or cfg.epochs < 1:
        raise UsageError("hidden_dim, replications and epochs must be >= 1")
    if any(k not in KINDS for k in cfg.kinds):
        raise UsageError(f"kinds must be drawn from {','.join(KINDS)}")
    return cfg


# ---------------------------------------------------------------------------
# Output bookkeeping
# ---------------------------------------------------------------------------

class Outputs:
    """Collects written files so a failing command can remove its partial output."""

    def __init__(self):
        self.written: list[Path] = []

    def write(self, path, content) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, bytes):
            path.write_bytes(content)
        else:
            path.write_text(content, encoding="utf-8", newline="\n")
        self.written.append(path)
        return path

    def track(self, path) -> Path:
        self.written.append(Path(path))
        return Path(path)

    def rollback(self):
        for p in self.written:
            p.unlink(missing_ok=True)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_fetch(args, out: Outputs):
    mirrors = args.mirror or None
    path = fetch_dataset(args.dataset, args.cache_dir, mirrors=mirrors, source_dir=args.from_dir)
    print(f"{args.dataset} cached in {path}")


def cmd_ssim(args, out: Outputs):
    train_ds, _ = load_dataset(args.dataset, args.cache_dir)
    dist = ssim_distance_matrix(train_ds)
    names = DATASETS[args.dataset]["classes"]
    rows = ["class," + ",".join(str(i) for i in range(10))]
    rows += [f"{i}," + ",".join(repr(float(v)) for v in dist[i]) for i in range(10)]
    stem = Path(args.out_dir) / f"ssim_{args.dataset}"
    out.write(stem.with_suffix(".csv"), "\n".join(rows) + "\n")
    out.write(stem.with_suffix(".svg"), heatmap(dist, names, title=f"SSIM distance ({args.dataset})"))
    easy, hard = extreme_pairs(dist)
    print(f"easiest pair (max distance): {easy}  {dist[easy]:.4f}")
    print(f"hardest pair (min distance): {hard}  {dist[hard]:.4f}")


def cmd_train(args, out: Outputs):
    a, b = _pair(args.classes)
    train_ds, test_ds = load_dataset(args.dataset, args.cache_dir)
    task = make_pair_task(train_ds, test_ds, a, b)
    config = TrainConfig(max_epochs=args.epochs, batch_size=args.batch_size, peak_lr=args.lr, seed=args.seed)
    outcome = train(task, args.hidden_dim, config)
    print(f"best test accuracy {outcome.best_test_accuracy:.4f} (epoch {outcome.best_epoch + 1})")
    if args.export:
        meta = {"dataset": args.dataset, "classes": f"{a},{b}", "hidden_dim": str(args.hidden_dim),
                "seed": str(args.seed), "probe_exclude": "b1,b2"}
        out.track(write_bundle(model_to_bundle(outcome.best_model, meta), args.export))


def cmd_probe(args, out: Outputs):
    spec = parse_probe(args.probe)
    bundle = read_bundle(args.bundle)
    if args.matrices:
        names = [n.strip() for n in args.matrices.split(",") if n.strip()]
        unknown = set(names) - set(bundle.names)
        if unknown:
            raise UsageError(f"bundle has no matrices named {sorted(unknown)}")
    else:
        skip = {n.strip() for n in bundle.metadata.get("probe_exclude", "").split(",") if n.strip()}
        names = [n for n in bundle.names if n not in skip]
    selected = [np.asarray(bundle[n], dtype=np.float64) for n in names]
    probed = dict(zip(names, apply_to_matrices(selected, spec, rng_new(args.seed))))
    new = bundle.with_values(probed.get(n, m) for n, m in bundle.matrices)
    out.track(write_bundle(new, args.out))
    print(f"wrote {args.out} ({len(names)} matrices probed with {args.probe})")


_FAMILY_LABEL = {
    "prune": "fraction of removed edges",
    "noise": "noise amplitude a",
    "flip": "fraction of smallest-magnitude signs flipped",
    "randomize": "randomization kind",
    "randomize-prune": "fraction of removed edges",
}


def cmd_sweep(args, out: Outputs):
    cfg = parse_config_text(Path(args.config).read_text()) if args.config else RunConfig()
    if args.replications:
        cfg.replications = args.replications
    if args.workers:
        cfg.workers = args.workers
    if args.out_dir:
        cfg.output_dir = Path(args.out_dir)
    if args.cache_dir:
        cfg.cache_dir = Path(args.cache_dir)
    train_ds, test_ds = load_dataset(cfg.dataset, cfg.cache_dir)
    tasks = {label: make_pair_task(train_ds, test_ds, a, b) for label, (a, b) in cfg.pairs.items()}
    bank = ModelBank(cfg.hidden_dim, cfg.base_seed, cfg.train_config())
    family = args.family
    rewire = RewireConfig(cfg.swap_attempts)
    kwargs = {}
    if family == "randomize":
        grid = ["orig", *cfg.kinds]
        kwargs["rewire"] = rewire
    elif family == "noise":
        grid = cfg.grid or list(DEFAULT_NOISE_GRID)
    else:
        grid = cfg.grid or list(DEFAULT_PRUNE_GRID)
        if family == "randomize-prune":
            kinds = tuple(k for k in cfg.kinds if k in ("B", "E", "F")) or ("B", "E", "F")
            kwargs.update(kinds=kinds, rewire=rewire)
    result = run_sweep(family, tasks, cfg.replications, grid, bank, cfg.workers, **kwargs)
    stem = cfg.output_dir / f"{cfg.dataset}_{family}_d{cfg.hidden_dim}"
    out.write(f"{stem}_raw.csv", result.raw_csv())
    out.write(f"{stem}_aggregate.csv", result.aggregate_csv())
    out.write(f"{stem}.svg", line_plot(result, title=f"{cfg.dataset}: {family} (d={cfg.hidden_dim})",
                                       xlabel=_FAMILY_LABEL[family], log_x=(family == "noise")))
    for variant in result.variants:
        med = result.medians(variant)
        print(f"{variant:>14}: median accuracy {med[0]:.3f} at {result.grid[0]}, "
              f"max {med.max():.3f} at {result.grid[int(np.argmax(med))]}")
    print(f"wrote {stem}_raw.csv, {stem}_aggregate.csv, {stem}.svg")


def cmd_complexity(args, out: Outputs):
    probes = ("binarize", "randomize-b") if args.probe == "both" else (args.probe,)
    train_ds, test_ds = load_dataset(args.dataset, args.cache_dir)
    bank = ModelBank(args.hidden_dim, args.seed,
                     TrainConfig(max_epochs=args.epochs, batch_size=args.batch_size, peak_lr=args.lr))

    def progress(done, total):
        print(f"  pair {done}/{total}", file=sys.stderr)

    mats = complexity_matrices(train_ds, test_ds, args.realizations, probes, bank, args.dataset,
                               progress=progress if args.verbose else None)
    names = DATASETS[args.dataset]["classes"]
    out_dir = Path(args.out_dir)
    for probe, m in mats.items():
        stem = out_dir / f"complexity_{args.dataset}_{probe}"
        out.write(f"{stem}.csv", m.csv())
        out.write(f"{stem}_delta.svg", heatmap(m.delta_accuracy, names, title=f"accuracy drop after {probe}"))
        print(f"{probe}: mean drop {np.nanmean(m.delta_accuracy):.4f}")
    first = next(iter(mats.values()))
    out.write(out_dir / f"complexity_{args.dataset}_base.svg",
              heatmap(first.base_accuracy, names, title="base test accuracy", fmt=".3f"))
    if len(mats) == 2:
        rho = complexity_correlation(mats["binarize"], mats["randomize-b"])
        out.write(out_dir / f"complexity_{args.dataset}_spearman.txt", f"{rho!r}\n")
        print(f"Spearman rho (binarize vs randomize-b): {rho:.4f}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="signprobe", description=__doc__)
    p.add_argument("--version", action="version", version=f"signprobe {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def dataset_opts(sp):
        sp.add_argument("--dataset", choices=sorted(DATASETS), default="mnist")
        sp.add_argument("--cache-dir", type=Path, default=None,
                        help="IDX cache root (default: $SIGNPROBE_CACHE or ~/.cache/signprobe)")

    def train_opts(sp):
        sp.add_argument("--hidden-dim", type=int, default=64)
        sp.add_argument("--epochs", type=int, default=10)
        sp.add_argument("--batch-size", type=int, default=128)
        sp.add_argument("--lr", type=float, default=1e-3)

    sp = sub.add_parser("fetch-data", help="download, verify and cache IDX files")
    dataset_opts(sp)
    sp.add_argument("--from-dir", type=Path, default=None, help="import IDX files from a local directory")
    sp.add_argument("--mirror", action="append", help="base URL to try (repeatable)")
    sp.set_defaults(func=cmd_fetch)

    sp = sub.add_parser("ssim-matrix", help="SSIM distance between class-mean images")
    dataset_opts(sp)
    sp.add_argument("--out-dir", type=Path, default=Path("results"))
    sp.set_defaults(func=cmd_ssim)

    sp = sub.add_parser("train", help="train one MLP on a class pair")
    dataset_opts(sp)
    train_opts(sp)
    sp.add_argument("--classes", required=True, help="class pair, e.g. 0,7")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--export", type=Path, default=None, help="write the best model as a weights bundle")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("probe", help="apply one probe to the matrices of a weights bundle")
    sp.add_argument("--bundle", type=Path, required=True)
    sp.add_argument("--probe", required=True, help="prune:P | binarize | noise:A | flip:Q | randomize:K")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--matrices", default=None, help="comma-separated names to probe (default: all "
                    "except those listed in the bundle's probe_exclude metadata)")
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("sweep", help="run a probe sweep over replications")
    sp.add_argument("--family", required=True, choices=sorted(_FAMILY_LABEL))
    sp.add_argument("--config", type=Path, default=None, help="key=value run configuration")
    sp.add_argument("--replications", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--out-dir", type=Path, default=None)
    sp.add_argument("--cache-dir", type=Path, default=None)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("complexity", help="per-pair accuracy drop matrices")
    dataset_opts(sp)
    train_opts(sp)
    sp.add_argument("--probe", choices=("binarize", "randomize-b", "both"), default="both")
    sp.add_argument("--realizations", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-dir", type=Path, default=Path("results"))
    sp.add_argument("--verbose", action="store_true")
    sp.set_defaults(func=cmd_complexity)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Outputs()
    try:
        args.func(args, out)
    except (UsageError, ValueError, OSError, KeyError) as exc:
        out.rollback()
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"signprobe {args.command}: error: {msg}", file=sys.stderr)
        return 2
    except BaseException:
        out.rollback()
        raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
