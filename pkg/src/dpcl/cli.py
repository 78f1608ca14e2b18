"""Command-line entry points: `run` trains through a task stream and emits
CSV artifacts; `budget-curve` compares cumulative privacy totals under the
two composition policies."""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .accountant import Policy, TaskBudget, budget_lemma1, budget_lemma2
from .data import load_idx_archive, make_permuted_stream, make_synthetic
from .dp import NoiseConfig
from .errors import ConfigError, InputError, NumericError, ParseError, StateError
from .metrics import average_accuracy, forgetting, lca
from .trainer import Mode, ProjectionRule, TrainConfig, run_stream

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


@dataclass
class RunSpec:
    """Everything needed to reproduce one `run` invocation."""

    mode: str = "dp_cl"
    tasks: int = 5
    epochs: int = 1
    batch: int | None = None
    ref_batch: int = 50
    sampling_rate: float = 0.1
    sigma: float = 1.0
    clip: float = 0.1
    delta: float = 1e-4
    lambda_max: int = 64
    policy: str = "lemma2"
    projection: str = "always"
    seed: int = 0
    out: str = "runs/out"
    images: str | None = None
    labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    synth_dim: int = 64
    synth_classes: int = 10
    synth_per_class: int = 60
    synth_margin: float = 0.6
    ref_fraction: float = 0.1
    hidden: str = "64,64"
    lca_beta: int = 10
    learning_rate: float = 0.1

    def manifest_lines(self):
        lines = [f"{key} = {value}" for key, value in sorted(vars(self).items())]
        lines.append(f"timestamp = {time.strftime('%Y-%m-%dT%H:%M:%S')}")
        return lines


def _build_stream(spec: RunSpec):
    if spec.images:
        if not spec.labels:
            raise ConfigError("--labels is required with --images")
        base = load_idx_archive(spec.images, spec.labels)
        test = None
        if spec.test_images and spec.test_labels:
            test = load_idx_archive(spec.test_images, spec.test_labels)
        return make_permuted_stream(base, spec.tasks, spec.seed,
                                   ref_fraction=spec.ref_fraction, test=test)
    base = make_synthetic(spec.synth_dim, spec.synth_classes, spec.synth_per_class,
                          spec.synth_margin, spec.seed)
    return make_permuted_stream(base, spec.tasks, spec.seed,
                                ref_fraction=spec.ref_fraction)


def _build_config(spec: RunSpec, train_size: int) -> TrainConfig:
    p = spec.sampling_rate
    if spec.batch is not None:
        p = min(1.0, spec.batch / train_size)
    hidden = tuple(int(h) for h in spec.hidden.split(",") if h)
    return TrainConfig(
        mode=Mode(spec.mode),
        learning_rate=spec.learning_rate,
        sampling_rate=p,
        ref_batch_size=spec.ref_batch,
        epochs_per_task=spec.epochs,
        noise=NoiseConfig(sigma=spec.sigma, clip_bound=spec.clip, seed=spec.seed),
        projection_rule=ProjectionRule(spec.projection),
        hidden_dims=hidden,
        delta=spec.delta,
        policy=Policy(spec.policy),
        lambda_max=spec.lambda_max,
        lca_beta=spec.lca_beta,
        seed=spec.seed,
    )


def cmd_run(spec: RunSpec) -> int:
    try:
        stream = _build_stream(spec)
        cfg = _build_config(spec, len(stream.tasks[0][0]))
    except (ConfigError, ParseError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_stream(stream, cfg)
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    result.matrix.write_csv(out / "accuracy_matrix.csv")

    t = stream.num_tasks
    with open(out / "metrics.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["metric", "value"])
        for k in range(1, t + 1):
            w.writerow([f"avg_accuracy_after_{k}", repr(average_accuracy(result.matrix, k))])
        if t >= 2:
            f_mean, f_worst = forgetting(result.matrix, t)
            w.writerow(["forgetting", repr(f_mean)])
            w.writerow(["worst_case_forgetting", repr(f_worst)])
        beta = min(cfg.lca_beta, len(result.curve.z) - 1)
        w.writerow(["lca", repr(lca(result.curve, beta))])

    result.report.write_csv(out / "budget_report.csv",
                            result.ledger.task_budgets(cfg.delta))
    with open(out / "run_manifest.cfg", "w") as f:
        f.write("\n".join(spec.manifest_lines()) + "\n")
    print(f"wrote artifacts to {out}")
    return EXIT_OK


def budget_curve_table(eps_mean, eps_std, n_tasks, seed):
    """Rows (T, lemma1_total, lemma2_total) for T = 1..n_tasks with budgets
    drawn i.i.d. Gaussian per task."""
    if n_tasks < 1:
        raise ConfigError("number of tasks must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(401,)))
    eps_train = eps_mean + eps_std * rng.standard_normal(n_tasks)
    eps_ref = eps_mean + eps_std * rng.standard_normal(n_tasks)
    budgets = [TaskBudget(i + 1, float(eps_train[i]), float(eps_ref[i]))
               for i in range(n_tasks)]
    rows = []
    for t in range(1, n_tasks + 1):
        rows.append((t, budget_lemma1(budgets, t).total, budget_lemma2(budgets, t).total))
    return rows


def cmd_budget_curve(eps_mean, eps_std, n_tasks, seed, out=None) -> int:
    try:
        rows = budget_curve_table(eps_mean, eps_std, n_tasks, seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    lines = [["T", "lemma1_total", "lemma2_total"]]
    lines += [[t, repr(a), repr(b)] for t, a, b in rows]
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as f:
            csv.writer(f).writerows(lines)
    for row in lines:
        print(",".join(str(v) for v in row))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="dpcl")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train through a task stream and emit CSVs")
    run.add_argument("--mode", choices=[m.value for m in Mode], default="dp_cl")
    run.add_argument("--tasks", type=int, default=5)
    run.add_argument("--epochs", type=int, default=1)
    run.add_argument("--batch", type=int, default=None)
    run.add_argument("--ref-batch", type=int, default=50, dest="ref_batch")
    run.add_argument("--sampling-rate", type=float, default=0.1, dest="sampling_rate")
    run.add_argument("--sigma", type=float, default=1.0)
    run.add_argument("--clip", type=float, default=0.1)
    run.add_argument("--delta", type=float, default=1e-4)
    run.add_argument("--lambda-max", type=int, default=64, dest="lambda_max")
    run.add_argument("--policy", choices=["lemma1", "lemma2"], default="lemma2")
    run.add_argument("--projection", choices=["always", "conflict"], default="always")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="runs/out")
    run.add_argument("--images", default=None)
    run.add_argument("--labels", default=None)
    run.add_argument("--test-images", default=None, dest="test_images")
    run.add_argument("--test-labels", default=None, dest="test_labels")
    run.add_argument("--synth-dim", type=int, default=64, dest="synth_dim")
    run.add_argument("--synth-classes", type=int, default=10, dest="synth_classes")
    run.add_argument("--synth-per-class", type=int, default=60, dest="synth_per_class")
    run.add_argument("--synth-margin", type=float, default=0.6, dest="synth_margin")
    run.add_argument("--ref-fraction", type=float, default=0.1, dest="ref_fraction")
    run.add_argument("--hidden", default="64,64")
    run.add_argument("--lca-beta", type=int, default=10, dest="lca_beta")
    run.add_argument("--learning-rate", type=float, default=0.1, dest="learning_rate")

    curve = sub.add_parser("budget-curve", help="compare the two composition policies")
    curve.add_argument("--eps-mean", type=float, default=1.0, dest="eps_mean")
    curve.add_argument("--eps-std", type=float, default=0.02, dest="eps_std")
    curve.add_argument("--tasks", type=int, default=17)
    curve.add_argument("--seed", type=int, default=0)
    curve.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        fields = {k: v for k, v in vars(args).items() if k != "command"}
        try:
            spec = RunSpec(**fields)
        except (ConfigError, TypeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_run(spec)
    return cmd_budget_curve(args.eps_mean, args.eps_std, args.tasks, args.seed, args.out)


if __name__ == "__main__":
    sys.exit(main())
