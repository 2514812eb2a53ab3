"""Command-line surface: simulate, infer, evaluate, crossval.

Exit codes: 0 success, 1 usage error, 2 data error. Every subcommand
validates its inputs before writing anything, and all files are written
atomically, so a failing run leaves no partial outputs.
"""

import argparse
import os
import sys
import time

from . import dataset, evaluation, methods, simgen
from .dataset import ConsistencyError, EvalReport, ParseError

DEFAULT_JOBS_ENV = "SPIKECONN_JOBS"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_method_options(parser):
    group = parser.add_argument_group("method hyperparameters")
    group.add_argument("--lag", type=int, default=1,
                       help="cross-correlation lag in frames (default 1)")
    group.add_argument("--lambda", "--penalty", dest="penalty", type=float,
                       default=None,
                       help="graphical lasso l1 penalty "
                            "(default: 5%% of the largest off-diagonal covariance)")
    group.add_argument("--variance-kept", type=float, default=0.80,
                       help="variance fraction kept by the pca precision (default 0.80)")
    group.add_argument("--iterations", type=int, default=100,
                       help="excitation-model EM iterations (default 100)")
    group.add_argument("--theta-init", type=float, default=10.0,
                       help="initial kernel decay in 1/s (default 10)")
    group.add_argument("--refractory", type=float, default=1.0,
                       help="span-candidate refractory window in seconds (default 1.0)")
    group.add_argument("--svm-c", type=float, default=1.0,
                       help="SVM soft-margin constant (default 1.0)")
    group.add_argument("--gamma", type=float, default=None,
                       help="RBF kernel width (default: 1/(dims * feature variance))")
    group.add_argument("--threshold", type=float, default=0.12,
                       help="spike discretization threshold (default 0.12)")


def _method_params(args):
    return dict(
        lag=args.lag, penalty=args.penalty, variance_kept=args.variance_kept,
        iterations=args.iterations, theta_init=args.theta_init,
        refractory_s=args.refractory, C=args.svm_c, gamma=args.gamma,
    )


def build_parser():
    parser = _Parser(prog="spikeconn",
                     description="Directed connectivity inference from "
                                 "neural activation time series.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic benchmark network")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--neurons", type=int, default=25)
    sim.add_argument("--density", type=float, default=0.10)
    sim.add_argument("--duration", type=float, default=400.0, help="seconds")
    sim.add_argument("--rate", type=float, default=50.0, help="sample rate in Hz")
    sim.add_argument("--mu", type=float, default=0.7, help="background rate in Hz")
    sim.add_argument("--weight", type=float, default=0.4, help="edge excitation weight")
    sim.add_argument("--kernel-decay", type=float, default=5.0, help="1/seconds")
    sim.add_argument("--calcium-decay", type=float, default=0.9, help="per frame")
    sim.add_argument("--noise", type=float, default=0.0425, help="observation noise std")
    sim.add_argument("--scatter", type=float, default=0.15, help="scatter amplitude")
    sim.add_argument("--seed", type=int, default=0)

    infer = sub.add_parser("infer", help="score one network with one method")
    infer.add_argument("--in", dest="input_dir", required=True,
                       help="directory with fluorescence.csv and positions.csv")
    infer.add_argument("--method", required=True, choices=methods.available_methods())
    infer.add_argument("--out", required=True, help="score matrix CSV path")
    infer.add_argument("--pgm", default=None, help="also write a PGM heatmap here")
    infer.add_argument("--png", default=None, help="also write a PNG heatmap here")
    infer.add_argument("--train", action="append", default=[],
                       help="training network directory (repeatable; "
                            "required for supervised methods)")
    _add_method_options(infer)

    ev = sub.add_parser("evaluate", help="score one network and compare to ground truth")
    ev.add_argument("--in", dest="input_dir", required=True,
                    help="network directory including network.csv")
    ev.add_argument("--method", default=None, choices=methods.available_methods())
    ev.add_argument("--scores", default=None,
                    help="evaluate an existing score matrix instead of running a method")
    ev.add_argument("--out", required=True, help="report path")
    ev.add_argument("--train", action="append", default=[])
    ev.add_argument("--no-figures", action="store_true",
                    help="skip the PNG figures next to the report")
    _add_method_options(ev)

    cv = sub.add_parser("crossval",
                        help="leave-one-network-out over a directory of networks")
    cv.add_argument("--in", dest="input_dir", required=True,
                    help="parent directory of network subdirectories")
    cv.add_argument("--methods", default=",".join(methods.available_methods()),
                    help="comma-separated method list (default: all)")
    cv.add_argument("--out", required=True, help="output directory")
    cv.add_argument("--jobs", type=int,
                    default=int(os.environ.get(DEFAULT_JOBS_ENV, "1")),
                    help=f"parallel folds (default from ${DEFAULT_JOBS_ENV} or 1)")
    cv.add_argument("--no-figures", action="store_true")
    _add_method_options(cv)
    return parser


def _load_network_data(directory, threshold, require_network=False):
    panel, layout, truth = dataset.load_benchmark_dir(
        directory, require_network=require_network
    )
    return methods.NetworkData(
        network_id=os.path.basename(os.path.normpath(directory)),
        panel=panel, layout=layout, ground_truth=truth,
        spike_threshold=threshold,
    )


def _load_training(args):
    return [_load_network_data(d, args.threshold, require_network=True)
            for d in args.train]


def _cmd_simulate(args):
    spec = simgen.BenchmarkSpec(
        neuron_count=args.neurons, density=args.density, duration_s=args.duration,
        sample_rate_hz=args.rate, mu_hz=args.mu, weight_scale=args.weight,
        kernel_decay=args.kernel_decay, calcium_decay=args.calcium_decay,
        noise_std=args.noise, scatter_amplitude=args.scatter, seed=args.seed,
    )
    truth, _, _, panel, raster = simgen.generate_benchmark(spec, args.out)
    print(f"wrote {args.out}: {spec.neuron_count} neurons, "
          f"{panel.frame_count} frames, {int(truth.edges.sum())} edges, "
          f"{int(raster.events.sum())} spikes")
    return 0


def _cmd_infer(args):
    method = methods.build_method(args.method, **_method_params(args))
    data = _load_network_data(args.input_dir, args.threshold)
    train = _load_training(args)
    if method.supervised:
        if not train:
            raise _UsageError(f"method {args.method} needs at least one --train directory")
        scores = method.score(data, train)
    else:
        scores = method.score(data)
    dataset.write_score_matrix(scores, args.out, pgm_path=args.pgm)
    if args.png:
        from . import figures
        figures.save_score_heatmap(scores, args.png, title=args.method)
    print(f"wrote {args.out} ({args.method}, {scores.neuron_count} neurons)")
    return 0


def _single_network_report(args, data, train):
    if args.scores is not None:
        tag = os.path.splitext(os.path.basename(args.scores))[0]
        scores = dataset.load_score_matrix(args.scores, method_tag=tag)
        elapsed = 0.0
    elif args.method is not None:
        method = methods.build_method(args.method, **_method_params(args))
        if method.supervised and not train:
            raise _UsageError(f"method {args.method} needs at least one --train directory")
        begin = time.perf_counter()
        scores = method.score(data, train) if method.supervised else method.score(data)
        elapsed = time.perf_counter() - begin
    else:
        raise _UsageError("evaluate needs either --method or --scores")
    auc, prc = evaluation.evaluate_scores(scores, data.ground_truth)
    tag = scores.method_tag or "scores"
    report = EvalReport.from_folds(tag, [(data.network_id, auc, prc)], [elapsed])
    return report, scores


def _cmd_evaluate(args):
    data = _load_network_data(args.input_dir, args.threshold, require_network=True)
    train = _load_training(args)
    report, scores = _single_network_report(args, data, train)
    dataset.write_report(report, args.out)
    if not args.no_figures:
        from . import figures
        stem, _ = os.path.splitext(args.out)
        figures.save_fold_breakdown(report, stem + "_folds.png")
        figures.save_score_heatmap(scores, stem + "_scores.png",
                                   title=report.method_tag)
    print(f"{report.method_tag}: auc={report.auc:.4f} prc={report.prc:.4f} "
          f"({report.wall_clock_seconds:.1f}s)")
    return 0


def _discover_networks(parent):
    found = []
    for entry in sorted(os.listdir(parent)):
        full = os.path.join(parent, entry)
        if os.path.isdir(full) and os.path.exists(os.path.join(full, "fluorescence.csv")):
            found.append(full)
    return found


def _cmd_crossval(args):
    wanted = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in wanted if m not in methods.METHODS]
    if unknown:
        raise _UsageError(f"unknown methods: {', '.join(unknown)}; "
                          f"valid: {', '.join(methods.available_methods())}")
    dirs = _discover_networks(args.input_dir)
    if len(dirs) < 2:
        raise ConsistencyError(
            f"{args.input_dir}: cross-validation needs at least two network "
            f"directories, found {len(dirs)}"
        )
    datasets = [_load_network_data(d, args.threshold, require_network=True)
                for d in dirs]
    os.makedirs(args.out, exist_ok=True)
    reports = []
    for name in wanted:
        method = methods.build_method(name, **_method_params(args))
        report = evaluation.leave_one_network_out(datasets, method, jobs=args.jobs)
        reports.append(report)
        dataset.write_report(report, os.path.join(args.out, f"report_{name}.txt"))
        print(dataset.summary_line(report))
    dataset.write_summary(reports, os.path.join(args.out, "summary.csv"))
    if not args.no_figures:
        from . import figures
        figures.save_method_comparison(reports, os.path.join(args.out, "summary.png"))
        for report in reports:
            figures.save_fold_breakdown(
                report, os.path.join(args.out, f"folds_{report.method_tag}.png")
            )
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "infer": _cmd_infer,
    "evaluate": _cmd_evaluate,
    "crossval": _cmd_crossval,
}


def run(argv=None):
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, ConsistencyError, FileNotFoundError, NotADirectoryError,
            PermissionError, IsADirectoryError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
