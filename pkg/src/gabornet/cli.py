"""Command-line entry point.

Commands: train, eval, grad-check, param-count, freq-dump, kernel-dump, synth.
Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

Heavy imports happen after the thread count is pinned, so --threads can
reliably bound the linear-algebra thread pools; results are guaranteed
reproducible only at --threads 1 (reduction order may differ otherwise).
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import time

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)


def _pin_threads(n: int) -> None:
    for var in _THREAD_ENV_VARS:
        os.environ[var] = str(n)


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gabornet",
        description="Train and inspect networks with Gabor-parameterized convolution kernels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, precision=True):
        p.add_argument("--threads", type=int, default=1,
                       help="linear-algebra thread cap (determinism only at 1)")
        if precision:
            p.add_argument("--precision", choices=("f32", "f64"), default=None,
                           help="override the config precision")

    p = sub.add_parser("train", help="train a network and write run artifacts")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--runs", type=int, default=1,
                   help="repeat training N times varying only the seed")
    p.add_argument("--mode", default=None, help="override the config mode")
    add_common(p)

    p = sub.add_parser("eval", help="evaluate a model snapshot on the configured test split")
    p.add_argument("--model", required=True, help="snapshot directory written by train")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="write the metrics report here instead of stdout")
    p.add_argument("--map-out", default=None,
                   help="write the predicted per-pixel label grid (integer CSV)")
    add_common(p)

    p = sub.add_parser("grad-check", help="finite-difference check of every learnable scalar")
    p.add_argument("--config", required=True)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=7)
    add_common(p, precision=False)

    p = sub.add_parser("param-count", help="print the exact learnable-parameter count")
    p.add_argument("--config", required=True)
    add_common(p, precision=False)

    p = sub.add_parser("freq-dump", help="dump squared frequency magnitudes over [-pi, pi]")
    p.add_argument("--omega0", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--phase", type=float, required=True)
    p.add_argument("--samples", type=int, default=257)
    p.add_argument("--out", default=None,
                   help="CSV path (a .png figure lands next to it); default stdout")
    add_common(p, precision=False)

    p = sub.add_parser("kernel-dump", help="dump synthesized kernels of one conv layer")
    p.add_argument("--model", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--layer", type=int, default=1, help="1-based conv layer index")
    p.add_argument("--out", default=None, help="output path; default stdout")
    add_common(p, precision=False)

    p = sub.add_parser("synth", help="generate a seeded synthetic scene as cube/label files")
    p.add_argument("--out-cube", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--bands", type=int, default=103)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--classes", type=int, default=9)
    p.add_argument("--noise", type=float, default=0.4)
    p.add_argument("--seed", type=int, default=0)
    add_common(p, precision=False)

    return parser


def _load_run_config(args):
    from gabornet.config import load_config

    cfg = load_config(args.config)
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    if getattr(args, "seed", None) is not None and args.command == "train":
        cfg.seed = args.seed
    if getattr(args, "precision", None):
        cfg.precision = args.precision
    return cfg


def _load_scene(cfg):
    from gabornet.config import ConfigError
    from gabornet.data import load_cube, load_labels, normalize_cube

    if not cfg.cube_path or not cfg.labels_path:
        raise ConfigError("cube_path and labels_path are required for this command")
    cube = normalize_cube(load_cube(cfg.cube_path))
    gt = load_labels(cfg.labels_path)
    if (gt.labels.shape[0], gt.labels.shape[1]) != (cube.height, cube.width):
        raise ValueError(
            f"label grid {gt.labels.shape} does not match cube "
            f"{cube.height}x{cube.width}"
        )
    if cfg.input_bands is not None and cfg.input_bands != cube.bands:
        raise ConfigError(f"config input_bands={cfg.input_bands} but cube has {cube.bands}")
    if cfg.n_classes is not None and cfg.n_classes != gt.n_classes:
        raise ConfigError(f"config n_classes={cfg.n_classes} but labels declare {gt.n_classes}")
    return cube, gt


def _single_train_run(cfg, out_dir: str, seed: int) -> dict:
    from gabornet import network as N
    from gabornet import plots
    from gabornet.data import PatchDataset, split_per_class

    cube, gt = _load_scene(cfg)
    net_config = cfg.network_config(gt.n_classes, cube.bands)
    net_config.seed = seed
    split = split_per_class(gt, cfg.train_per_class, seed=seed)
    train_data = PatchDataset.from_entries(
        cube, split.train, cfg.patch_size, augment=cfg.augment
    )
    test_data = PatchDataset.from_entries(cube, split.test, cfg.patch_size)

    os.makedirs(out_dir, exist_ok=True)
    started = time.perf_counter()
    net = N.initialize(net_config, seed=seed)
    history = N.fit(net, train_data, net_config)
    report = N.evaluate(net, test_data)
    wall = time.perf_counter() - started

    artifacts = {}

    history_csv = os.path.join(out_dir, "history.csv")
    with open(history_csv, "w") as f:
        f.write(N.history_to_csv(history))
    artifacts["history_csv"] = history_csv
    if history:
        history_png = os.path.join(out_dir, "history.png")
        plots.save_history_plot(history, history_png)
        artifacts["history_png"] = history_png

    param_count = N.count_parameters(net_config)
    metrics_path = os.path.join(out_dir, "metrics.txt")
    with open(metrics_path, "w") as f:
        f.write(
            N.format_metrics_report(
                report, param_count, wall, header="test evaluation",
                extra_lines=[f"mode: {net_config.mode}", f"seed: {seed}"],
            )
        )
    artifacts["metrics"] = metrics_path

    snapshot_dir = os.path.join(out_dir, "model")
    N.save_snapshot(net, snapshot_dir)
    artifacts["model"] = snapshot_dir

    if net_config.mode != "regular":
        records = N.dump_learned_frequencies(net, layer=1)
        freq_csv = os.path.join(out_dir, "frequencies_layer1.csv")
        with open(freq_csv, "w") as f:
            f.write(N.frequency_records_to_csv(records))
        artifacts["frequencies_csv"] = freq_csv
        freq_png = os.path.join(out_dir, "frequencies_layer1.png")
        plots.save_frequency_scatter(records, freq_png)
        artifacts["frequencies_png"] = freq_png
        kernel_txt = os.path.join(out_dir, "kernels_layer1.txt")
        with open(kernel_txt, "w") as f:
            f.write(N.format_kernel_dump(net, layer=1))
        artifacts["kernel_dump"] = kernel_txt

    return {
        "seed": seed,
        "overall_accuracy": report.overall_accuracy,
        "parameter_count": param_count,
        "wall_clock_seconds": wall,
        "artifacts": artifacts,
    }


def cmd_train(args) -> int:
    import numpy as np

    from gabornet.config import config_snapshot

    cfg = _load_run_config(args)
    if args.runs < 1:
        raise ValueError(f"--runs must be >= 1, got {args.runs}")
    os.makedirs(args.out, exist_ok=True)
    manifest = {
        "command": "train",
        "config": config_snapshot(cfg),
        "started": _now(),
        "runs": [],
    }
    results = []
    if args.runs == 1:
        results.append(_single_train_run(cfg, args.out, cfg.seed))
    else:
        for r in range(args.runs):
            run_dir = os.path.join(args.out, f"run{r}")
            results.append(_single_train_run(cfg, run_dir, cfg.seed + r))
    manifest["runs"] = results
    manifest["finished"] = _now()

    accs = np.array([r["overall_accuracy"] for r in results])
    if args.runs > 1:
        agg_path = os.path.join(args.out, "metrics.txt")
        with open(agg_path, "w") as f:
            f.write(f"== aggregate over {args.runs} runs ==\n")
            f.write(f"mean_accuracy: {accs.mean():.6f}\n")
            f.write(f"std_accuracy: {accs.std(ddof=1):.6f}\n")
            for r in results:
                f.write(f"run seed={r['seed']}: {r['overall_accuracy']:.6f}\n")
        manifest["aggregate_metrics"] = agg_path
    manifest_path = os.path.join(args.out, "manifest.json")
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2)
    print(f"trained {args.runs} run(s); mean test accuracy {accs.mean():.4f}")
    return 0


def cmd_eval(args) -> int:
    from gabornet import network as N
    from gabornet.data import PatchDataset, split_per_class

    cfg = _load_run_config(args)
    cube, gt = _load_scene(cfg)
    net_config = cfg.network_config(gt.n_classes, cube.bands)
    net = N.load_snapshot(args.model, net_config)
    split = split_per_class(gt, cfg.train_per_class, seed=cfg.seed)
    test_data = PatchDataset.from_entries(cube, split.test, cfg.patch_size)
    started = time.perf_counter()
    report = N.evaluate(net, test_data)
    wall = time.perf_counter() - started
    text = N.format_metrics_report(
        report, N.count_parameters(net_config), wall, header="test evaluation",
        extra_lines=[f"mode: {net_config.mode}", f"model: {args.model}"],
    )
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    if args.map_out:
        grid = N.predict_label_grid(net, cube)
        with open(args.map_out, "w") as f:
            for row in grid:
                f.write(",".join(str(int(v)) for v in row) + "\n")
    return 0


def cmd_grad_check(args) -> int:
    from gabornet.config import ConfigError
    from gabornet.oracle import grad_check_network

    cfg = _load_run_config(args)
    cfg.precision = "f64"
    net_config = cfg.network_config()
    if len(net_config.blocks) > 2 or net_config.blocks[0].kernel_size != 3 or net_config.patch_size > 7:
        raise ConfigError(
            "grad-check needs a tiny config: at most 2 blocks, kernel_size=3, patch_size<=7"
        )
    reports = grad_check_network(net_config, tolerance=args.tolerance, seed=args.seed)
    failures = 0
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        failures += 0 if r.passed else 1
        print(f"{status} {r.name} analytic={r.analytic:.9e} numeric={r.numeric:.9e} "
              f"rel_error={r.rel_error:.3e}")
    print(f"{len(reports) - failures}/{len(reports)} gradients within {args.tolerance:g}")
    return 1 if failures else 0


def cmd_param_count(args) -> int:
    from gabornet.network import count_parameters

    cfg = _load_run_config(args)
    print(count_parameters(cfg.network_config()))
    return 0


def cmd_freq_dump(args) -> int:
    from gabornet.frequency import sample_squared_magnitudes

    if args.sigma <= 0:
        raise ValueError(f"sigma must be positive, got {args.sigma}")
    cos_resp, sin_resp = sample_squared_magnitudes(
        args.omega0, args.sigma, args.phase, args.samples
    )
    omega, sq_cos, sq_sin = cos_resp.omega_axis, cos_resp.values, sin_resp.values
    lines = ["omega,sq_mag_cos,sq_mag_sin"]
    for w, c, s in zip(omega, sq_cos, sq_sin):
        lines.append(f"{w:.17g},{c:.17g},{s:.17g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        from gabornet import plots

        fig_path = os.path.splitext(args.out)[0] + ".png"
        plots.save_freq_response_plot(
            omega, sq_cos, sq_sin, args.omega0, args.sigma, args.phase, fig_path
        )
    else:
        sys.stdout.write(text)
    return 0


def cmd_kernel_dump(args) -> int:
    from gabornet import network as N

    cfg = _load_run_config(args)
    if cfg.cube_path and cfg.labels_path:
        cube, gt = _load_scene(cfg)
        net_config = cfg.network_config(gt.n_classes, cube.bands)
    else:
        net_config = cfg.network_config()
    net = N.load_snapshot(args.model, net_config)
    text = N.format_kernel_dump(net, args.layer)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_synth(args) -> int:
    from gabornet.data import save_cube, save_labels
    from gabornet.synthetic import synthetic_scene

    cube, gt = synthetic_scene(
        bands=args.bands,
        height=args.height,
        width=args.width,
        n_classes=args.classes,
        noise=args.noise,
        seed=args.seed,
    )
    save_cube(cube, args.out_cube)
    save_labels(gt, args.out_labels)
    print(f"wrote {args.out_cube} ({cube.bands}x{cube.height}x{cube.width}) "
          f"and {args.out_labels} ({gt.n_classes} classes)")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "grad-check": cmd_grad_check,
    "param-count": cmd_param_count,
    "freq-dump": cmd_freq_dump,
    "kernel-dump": cmd_kernel_dump,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _pin_threads(max(1, args.threads))
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # map to the stable exit-code contract
        from gabornet.config import ConfigError

        code = 2 if isinstance(exc, ConfigError) else 1
        print(f"gabornet {args.command}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
