"""Command-line entry point: ``stcn <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import model as core
from . import stats
from .baselines.fcm import FcmModel, activation_bounds
from .harness import (PROTOCOL_DEFAULTS, BenchmarkConfig, DataError, Dataset, load_csv,
                      run_benchmark, unit_scale, write_csv)
from .initialization import (INIT_MODES, DegenerateColumnError, apply_bounds, build_initial_model,
                             to_sigmoid_space)
from .learning import (LearnerConfig, TransferParams, error_gradient, finite_difference_gradient,
                       train_network)

log = logging.getLogger("stcn")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3
SHAPE_POINTS = 256


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def weights_hash(w) -> str:
    return hashlib.sha256(np.ascontiguousarray(w, dtype=np.float64).tobytes()).hexdigest()


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("STCN_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"STCN_SEED must be an integer, got {env!r}") from None


def learner_config(args) -> LearnerConfig:
    return LearnerConfig(eta=args.eta, beta=args.beta, epochs=args.epochs,
                         max_iterations=args.max_iterations, xi1=args.xi1, xi2=args.xi2)


def out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(out: Path, command: str, config: dict, seed: int | None) -> None:
    doc = {"command": command, "version": __version__, "seed": seed, "config": config}
    (out / "manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n",
                                       encoding="utf-8")


def class_column(args):
    return None if args.class_column.lower() == "none" else args.class_column


def read_dataset(path, args) -> Dataset:
    col = class_column(args)
    try:
        with open(path, encoding="utf-8") as fh:
            header = [h.strip() for h in fh.readline().split(",")]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if col is not None and col not in header and not col.lstrip("-").isdigit():
        col = None  # the default 'class' column is optional
    return load_csv(path, class_column=col)


def read_weights(path) -> np.ndarray:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    w = np.array(doc["weights"], dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DataError(f"{path}: weights must be a square matrix")
    return w


# -- commands -----------------------------------------------------------------

def cmd_train(args) -> int:
    seed = resolve_seed(args.seed)
    ds = read_dataset(args.data, args)
    data, bounds = to_sigmoid_space(ds.values)
    expert = read_weights(args.weights) if args.weights else None
    m0 = build_initial_model(data, bounds, init=args.init, seed=seed, weights=expert,
                             allow_self_loops=args.allow_self_loops, names=ds.columns)
    before = weights_hash(m0.weights)
    cfg = learner_config(args)
    trained, trace = train_network(m0, data, cfg)
    after = weights_hash(trained.weights)
    if before != after:
        raise NumericFailure("weight matrix changed during training")
    if expert is not None and weights_hash(core.effective_weights(expert, args.allow_self_loops)) != after:
        raise NumericFailure("expert weights were not preserved")

    out = out_dir(args)
    trained.save(out / "model.json")
    with (out / "trace.jsonl").open("w", encoding="utf-8") as fh:
        for rec in trace.layers:
            d = rec.to_dict()
            d["chosen"] = rec.t == trace.chosen_T
            fh.write(json.dumps(d) + "\n")
    write_shapes(out / "shapes.csv", trained)
    config = {"data": str(args.data), "weights": args.weights, "init": args.init,
              "allow_self_loops": args.allow_self_loops, "learner": asdict(cfg),
              "weights_sha256": after, "stop_reason": trace.stop_reason.value,
              "chosen_T": trace.chosen_T}
    write_manifest(out, "train", config, seed)
    print(f"trained {trained.iterations} iteration(s), stop: {trace.stop_reason.value}, "
          f"E={trace.per_iteration_error[trace.chosen_T - 1]:.6g}; wrote {out}")
    return 0


def write_shapes(path: Path, model: core.StcnModel) -> None:
    x, y = core.transfer_shapes(model.params, bound=float(model.m), n=SHAPE_POINTS)
    lines = ["t,neuron,x,y"]
    for t in range(y.shape[0]):
        for i in range(y.shape[1]):
            lines.extend(f"{t + 1},{i},{xv:.6g},{yv:.10g}" for xv, yv in zip(x, y[t, i]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_plot_data(args) -> int:
    model = core.StcnModel.load(args.model)
    out = out_dir(args)
    write_shapes(out / "shapes.csv", model)
    write_manifest(out, "plot-data", {"model": str(args.model), "points": SHAPE_POINTS}, None)
    return 0


def cmd_simulate(args) -> int:
    model = core.StcnModel.load(args.model)
    ds = read_dataset(args.data, args)
    if ds.m != model.m or (model.names and tuple(ds.columns) != model.names):
        expected = list(model.names) or [f"<{model.m} columns>"]
        missing = sorted(set(expected) - set(ds.columns))
        extra = sorted(set(ds.columns) - set(expected))
        raise DataError(f"probe columns {list(ds.columns)} do not match model columns {expected}"
                        f" (missing: {missing}, unexpected: {extra})")
    probe = apply_bounds(ds.values, model.bounds)
    normalized = core.predict(model, probe)
    pred = core.to_original_units(model, normalized)
    clamped = int(np.sum(unit_scale(normalized) < 0) + np.sum(unit_scale(normalized) > 1))
    out = out_dir(args)
    write_csv(out / "predictions.csv", model.names or [f"X{i + 1}" for i in range(model.m)], pred)
    write_manifest(out, "simulate", {"model": str(args.model), "data": str(args.data),
                                     "rows": int(pred.shape[0]), "clamped_values": clamped},
                   model.seed)
    print(f"wrote {pred.shape[0]} prediction(s) to {out / 'predictions.csv'}")
    return 0


def cmd_benchmark(args) -> int:
    seed = resolve_seed(args.seed)
    datasets = [read_dataset(p, args) for p in args.data]
    cfg = BenchmarkConfig(folds=args.folds, learner=learner_config(args), init=args.init,
                          corrupt_p=args.corrupt_p, corrupt_mode=args.corrupt_mode)
    algorithms = args.algorithms.split(",") if args.algorithms else list(PROTOCOL_DEFAULTS[args.protocol])
    report = run_benchmark(datasets, algorithms, args.protocol, cfg, seed, jobs=args.jobs)
    out = out_dir(args)
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    write_manifest(out, "benchmark", {"data": [str(p) for p in args.data], "protocol": args.protocol,
                                      "algorithms": algorithms, **cfg.to_dict()}, seed)
    sys.stdout.write(report.to_csv())
    return 0


def gradcheck(n: int, seed: int, perturb: str | None = None, rtol: float = 1e-5,
              atol: float = 1e-8, step: float = 1e-6) -> dict:
    """Compare analytic partials with central differences on random instances."""
    rng = np.random.default_rng(seed)
    names = list(core.PARAM_NAMES)
    worst = 0.0
    worst_case = None
    failures = 0
    for case in range(n):
        p = TransferParams(rng.uniform(0.5, 5.0), rng.uniform(-1.0, 1.0),
                           rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0))
        k = int(rng.integers(1, 30))
        raw = rng.uniform(-2.0, 2.0, k)
        y = rng.uniform(0.01, 0.99, k)
        g = error_gradient(p, raw, y).partials.copy()
        if perturb:
            g[names.index(perturb)] *= 1.01
        fd = finite_difference_gradient(p, raw, y, step)
        err = np.abs(g - fd)
        rel = err / np.maximum(np.abs(fd), atol / rtol)
        if np.any(err > np.maximum(rtol * np.abs(fd), atol)):
            failures += 1
        if rel.max() > worst:
            worst = float(rel.max())
            worst_case = {"case": case, "param": names[int(rel.argmax())]}
    return {"instances": n, "failures": failures, "worst_relative_error": worst,
            "worst_case": worst_case, "passed": failures == 0, "rtol": rtol, "atol": atol}


def cmd_gradcheck(args) -> int:
    seed = resolve_seed(args.seed)
    report = gradcheck(args.instances, seed, args.perturb)
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if args.out:
        out = out_dir(args)
        (out / "gradcheck.json").write_text(text, encoding="utf-8")
        write_manifest(out, "gradcheck", {"instances": args.instances, "perturb": args.perturb}, seed)
    sys.stdout.write(text)
    print("PASS" if report["passed"] else "FAIL")
    return 0 if report["passed"] else EXIT_NUMERIC


def cmd_stats(args) -> int:
    out = out_dir(args)
    if args.pvalues:
        with open(args.pvalues, encoding="utf-8") as fh:
            rows = [line.strip().split(",") for line in fh if line.strip()]
        if rows and rows[0][0].lower() == "algorithm":
            rows = rows[1:]
        try:
            unadjusted = [(r[0].strip(), float(r[1])) for r in rows]
        except (IndexError, ValueError):
            raise DataError(f"{args.pvalues}: expected 'algorithm,p' rows") from None
        table = stats.SignificanceTable(args.control, float("nan"), float("nan"),
                                        stats.corrected_rows(unadjusted))
        config = {"pvalues": str(args.pvalues)}
    else:
        datasets, algorithms, x = stats.read_mse_table(args.data[0])
        table = stats.significance_table(x, algorithms, args.control)
        config = {"data": str(args.data[0]), "control": args.control,
                  "datasets": len(datasets), "algorithms": algorithms}
    (out / "significance.csv").write_text(table.to_csv(), encoding="utf-8")
    summary = {"control": table.control, "friedman_statistic": table.friedman_statistic,
               "friedman_p": table.friedman_p, "rows": [asdict(r) for r in table.rows]}
    (out / "significance.json").write_text(json.dumps(summary, indent=1) + "\n", encoding="utf-8")
    write_manifest(out, "stats", config, None)
    if np.isfinite(table.friedman_p):
        print(f"Friedman chi2={table.friedman_statistic:.6g}, p={table.friedman_p:.6g}")
    sys.stdout.write(table.to_csv())
    return 0


def cmd_bounds(args) -> int:
    doc = json.loads(Path(args.weights).read_text(encoding="utf-8"))
    fcm = FcmModel(np.array(doc["weights"], dtype=np.float64), lam=args.fcm_lambda)
    lines = ["neuron,lower,upper"]
    for i in range(fcm.m):
        lo, hi = activation_bounds(fcm, i)
        lines.append(f"{i},{lo:.10g},{hi:.10g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        out = out_dir(args)
        (out / "bounds.csv").write_text(text, encoding="utf-8")
        write_manifest(out, "bounds", {"weights": str(args.weights), "lambda": args.fcm_lambda}, None)
    sys.stdout.write(text)
    return 0


# -- parser -------------------------------------------------------------------

def _learner_flags(p):
    d = LearnerConfig()
    p.add_argument("--eta", type=float, default=d.eta)
    p.add_argument("--beta", type=float, default=d.beta)
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--max-iterations", type=int, default=d.max_iterations)
    p.add_argument("--xi1", type=float, default=d.xi1)
    p.add_argument("--xi2", type=float, default=d.xi2)
    p.add_argument("--init", choices=INIT_MODES, default="regression")


def _data_flags(p, multiple=False):
    p.add_argument("--data", required=True, nargs="+" if multiple else None)
    p.add_argument("--class-column", default="class",
                   help="column to drop before modeling, by name or index ('none' keeps all)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="stcn", description="Short-term Cognitive Networks")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="initialize and train an STCN on a CSV dataset")
    _data_flags(p)
    _learner_flags(p)
    p.add_argument("--weights", help="expert weight matrix (JSON with a 'weights' key)")
    p.add_argument("--allow-self-loops", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", help="run a trained model on probe rows")
    _data_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="cross-validated comparison")
    _data_flags(p, multiple=True)
    _learner_flags(p)
    p.add_argument("--protocol", choices=sorted(PROTOCOL_DEFAULTS), default="regression")
    p.add_argument("--algorithms", help="comma-separated subset of STCN,LREG,FCM,Hopfield")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--corrupt-p", type=float, default=0.2)
    p.add_argument("--corrupt-mode", choices=("field", "record"), default="field")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--perturb", choices=core.PARAM_NAMES, help="corrupt one partial (mutation test)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("stats", help="Friedman + Wilcoxon/post-hoc analysis of an MSE table")
    p.add_argument("--data", nargs=1, help="MSE table CSV (dataset,alg1,alg2,...)")
    p.add_argument("--pvalues", help="CSV of algorithm,p to correct instead of testing a table")
    p.add_argument("--control", default="STCN")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bounds", help="activation bounds of a sigmoid FCM")
    p.add_argument("--weights", required=True)
    p.add_argument("--lambda", dest="fcm_lambda", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("plot-data", help="sample every transfer function of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_plot_data)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "stats" and not (args.data or args.pvalues):
        ap.error("stats needs --data or --pvalues")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"stcn: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DegenerateColumnError, FileNotFoundError, KeyError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"stcn: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericFailure, FloatingPointError, ArithmeticError) as exc:
        print(f"stcn: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
