"""Command-line pipeline: gen, svd-report, train, predict, evaluate, experiment.

Exit codes: 0 success, 2 usage error, 3 data or shape error, 4 numerical
failure (training divergence). Heavy imports happen after argument parsing
so ``--threads`` can cap the BLAS pools before numpy loads.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import DataError, TrainingDiverged

_QUIET = False


def _say(*parts) -> None:
    if not _QUIET:
        print(*parts)


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        widths = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad hidden widths {text!r}") from None
    if not widths:
        raise argparse.ArgumentTypeError("hidden widths cannot be empty")
    return widths


def _load_space(path: str):
    from .dataset import ParameterSpace

    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, dict) and "space" in payload and isinstance(payload["space"], dict):
        payload = payload["space"]
    return ParameterSpace.from_dict(payload)


def _csv_header(path: str) -> tuple[str, ...]:
    import csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        try:
            return tuple(h.strip() for h in next(csv.reader(fh)))
        except StopIteration:
            raise DataError(f"{path}: empty design file") from None


def cmd_gen(args) -> int:
    from .dataset import save_design, save_outputs
    from .experiments import derive_seed
    from .synth import SynthConfig, build_model, generate_dataset

    config = SynthConfig(
        n_loc=args.n_loc,
        n_year=args.n_year,
        rank=args.rank,
        viability_threshold=args.threshold,
        cold_fraction=args.cold_fraction,
        seed=args.seed,
    )
    model = build_model(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    files = {}
    seeds = {}
    for tag, m in (("train", args.m_train), ("test", args.m_test)):
        design_seed = derive_seed(args.seed, 100 if tag == "train" else 200)
        design, outputs = generate_dataset(
            model, m, design_seed, restrict_viable=args.restrict_viable
        )
        design_path = out_dir / f"design_{tag}.csv"
        outputs_path = out_dir / f"outputs_{tag}.smx"
        save_design(design, design_path)
        save_outputs(outputs, outputs_path)
        files[f"design_{tag}"] = design_path.name
        files[f"outputs_{tag}"] = outputs_path.name
        seeds[f"design_{tag}"] = design_seed
        _say(
            f"{tag}: {design.n_samples} x {design.dim} design, "
            f"{outputs.n_samples} x {outputs.n_outputs} outputs"
        )

    space = design.space
    manifest = {
        "synth_config": config.to_dict(),
        "space": space.to_dict(),
        "restrict_viable": args.restrict_viable,
        "seeds": seeds,
        "files": files,
    }
    with open(out_dir / "gen_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_svd_report(args) -> int:
    from .dataset import load_outputs
    from .svd import info_fraction, truncated_svd

    outputs = load_outputs(args.outputs)
    k_full = min(outputs.n_samples, outputs.n_outputs)
    k_max = args.k_max
    if k_max > k_full:
        print(f"warning: k-max {k_max} clamped to min(m, n) = {k_full}", file=sys.stderr)
        k_max = k_full
    basis, _ = truncated_svd(outputs, 1)
    if basis.degenerate:
        _say("note: matrix is numerically rank deficient")
    print(f"{'k':>4}  {'singular value':>18}  {'cumulative fraction':>20}")
    for k in range(1, k_max + 1):
        sigma = basis.singular_values_all[k - 1]
        frac = info_fraction(basis, k)
        print(f"{k:>4}  {sigma:>18.8g}  {frac:>20.8f}")
    return 0


def cmd_train(args) -> int:
    from .bundle import save_bundle
    from .dataset import ParameterSpace, load_design, load_outputs
    from .experiments import derive_seed
    from .pipeline import fit_surrogate
    from .tpe import TpeConfig, save_history_csv

    if args.case2 and (args.k is not None or args.target_fraction is not None):
        print("error: --case2 does not take --k or --target-fraction", file=sys.stderr)
        return 2
    if args.k is not None and args.target_fraction is not None:
        print("error: set only one of --k / --target-fraction", file=sys.stderr)
        return 2
    k = args.k
    if not args.case2 and k is None and args.target_fraction is None:
        k = 5

    if args.space:
        space = _load_space(args.space)
    else:
        space = ParameterSpace.unit_cube(_csv_header(args.design))
    design = load_design(args.design, space)
    outputs = load_outputs(args.outputs)

    tpe_config = None
    if args.tune:
        tpe_config = TpeConfig(n_trials=args.trials, seed=derive_seed(args.seed, 7))

    fit = fit_surrogate(
        design,
        outputs,
        k=k,
        target_fraction=args.target_fraction,
        direct=args.case2,
        hidden_widths=args.hidden,
        learning_rate=args.lr,
        max_epochs=args.max_epochs,
        patience=args.patience,
        fixed_val=args.fixed_val,
        tpe_config=tpe_config,
        seed=derive_seed(args.seed, 8),
    )

    out_dir = Path(args.out)
    save_bundle(fit.bundle, out_dir)
    fit.report.save_loss_curve(out_dir / "loss_curve.csv")
    if fit.tpe_history is not None:
        save_history_csv(fit.tpe_history, out_dir / "trials.csv")
        _say(f"tuning history: {len(fit.tpe_history)} trials -> {out_dir / 'trials.csv'}")
    _say(
        f"trained {fit.bundle.metadata['mode']} surrogate: hidden "
        f"{fit.bundle.arch.hidden_widths}, {fit.parameter_count} parameters, "
        f"best val loss {fit.report.best_val_loss:.6g} at epoch {fit.report.best_epoch} "
        f"(stopped {fit.report.stopped_epoch})"
    )
    _say(f"bundle written to {out_dir}")
    return 0


def cmd_predict(args) -> int:
    from .bundle import load_bundle
    from .dataset import OutputMatrix, load_design, save_outputs

    bundle = load_bundle(args.bundle)
    design = load_design(args.design, bundle.space)
    predictions = bundle.predict(design.values)
    save_outputs(OutputMatrix(predictions, bundle.index_map), args.out)
    _say(f"wrote {predictions.shape[0]} x {predictions.shape[1]} predictions to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    from .dataset import load_outputs
    from .metrics import evaluate, save_report_csvs

    truth = load_outputs(args.truth)
    pred = load_outputs(args.predictions)
    if pred.index_map != truth.index_map:
        raise DataError(
            f"prediction grid {pred.index_map} does not match truth {truth.index_map}"
        )
    report = evaluate(truth, pred.values)
    out_dir = Path(args.out_dir)
    save_report_csvs(report, truth.index_map, out_dir)
    if not _QUIET:
        print(report.summary_text(), end="")
        print(f"reports written to {out_dir}")
    return 0


def cmd_experiment(args) -> int:
    from . import experiments
    from .experiments import write_rows_csv
    from .synth import SynthConfig

    config = SynthConfig(n_loc=args.n_loc, n_year=args.n_year, seed=args.seed)
    if args.name == "case-compare":
        rows = experiments.case_compare(
            config, m_test=args.m_test, tpe_trials=args.trials, seed=args.seed
        )
    elif args.name == "ntrain-sweep":
        rows = experiments.ntrain_sweep(config, m_test=args.m_test, seed=args.seed)
    else:
        rows = experiments.subdomain_compare(config, m_test=args.m_test, seed=args.seed)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{args.name}.csv"
    write_rows_csv(rows, out_path)

    cols = list(rows[0].keys())
    _say("  ".join(cols))
    for row in rows:
        _say("  ".join(str(row[c]) for c in cols))
    _say(f"table written to {out_path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svdsurrogate",
        description="Build and evaluate SVD-compressed neural surrogates.",
    )
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    parser.add_argument("--threads", type=int, default=0, help="cap BLAS thread pools")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic train/test datasets")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--m-train", type=int, default=20)
    p.add_argument("--m-test", type=int, default=1000)
    p.add_argument("--n-loc", type=int, default=1422)
    p.add_argument("--n-year", type=int, default=30)
    p.add_argument("--rank", type=int, default=5)
    p.add_argument("--threshold", type=float, default=0.3)
    p.add_argument("--cold-fraction", type=float, default=0.15)
    p.add_argument("--restrict-viable", action="store_true",
                   help="sample only the subdomain without forced zeros")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("svd-report", help="print the singular spectrum of an output file")
    p.add_argument("--outputs", required=True)
    p.add_argument("--k-max", type=int, default=20)
    p.set_defaults(func=cmd_svd_report)

    p = sub.add_parser("train", help="fit a surrogate bundle from design/output files")
    p.add_argument("--design", required=True)
    p.add_argument("--outputs", required=True)
    p.add_argument("--out", required=True, help="bundle directory to create")
    p.add_argument("--space", help="JSON file with parameter bounds (default: unit cube)")
    p.add_argument("--k", type=int, default=None, help="retained rank (default 5)")
    p.add_argument("--target-fraction", type=float, default=None,
                   help="pick the smallest rank reaching this info fraction")
    p.add_argument("--case2", action="store_true",
                   help="skip compression and train directly on all outputs")
    p.add_argument("--hidden", type=_parse_hidden, default=(10, 10),
                   help="comma-separated hidden widths (default 10,10)")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--max-epochs", type=int, default=800)
    p.add_argument("--patience", type=int, default=100)
    p.add_argument("--fixed-val", action="store_true",
                   help="freeze one validation split instead of re-drawing per epoch")
    p.add_argument("--tune", action="store_true", help="pick hyperparameters by TPE")
    p.add_argument("--trials", type=int, default=100, help="tuning trials (default 100)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="evaluate a bundle at new design points")
    p.add_argument("--bundle", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--out", required=True, help="output .smx path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against truth")
    p.add_argument("--predictions", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run a scripted benchmark comparison")
    p.add_argument("name", choices=["case-compare", "ntrain-sweep", "subdomain"])
    p.add_argument("--out-dir", required=True)
    p.add_argument("--m-test", type=int, default=1000)
    p.add_argument("--trials", type=int, default=100, help="tuning trials for case-compare")
    p.add_argument("--n-loc", type=int, default=1422)
    p.add_argument("--n-year", type=int, default=30)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    global _QUIET
    args = _build_parser().parse_args(argv)
    if args.threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    _QUIET = bool(args.quiet)
    try:
        return args.func(args)
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
