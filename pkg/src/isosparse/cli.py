"""Command-line interface.

Exit codes: 0 success, 1 usage/parameter error, 2 invariant or self-test
failure.
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .groups import GroupLayout, ThresholdParams
from .prox import prox_full
from .sigio import write_result_csv
from .selftest import SABOTAGE_MODES, run_selftest


def _parse_floats(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError as exc:
        raise ValueError(f"could not parse float list {text!r}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isosparse",
                                     description="Group-sparse thresholding toolkit")
    parser.add_argument("--version", action="version", version=f"isosparse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prox", help="apply the group threshold operator to a vector")
    p.add_argument("--z", required=True, help="comma-separated input values")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--group-size", type=int, default=None,
                   help="contiguous group size (default: one group)")
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")

    for name, help_text in (("sweep", "SNR-gain sweep over lam*gamma"),
                            ("scale-sweep", "sweep repeated across noise scales")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--n", type=int, default=10)
        p.add_argument("--K", type=int, default=1)
        p.add_argument("--snr", type=float, default=5.0)
        p.add_argument("--lambda-coeff", type=float, default=0.5)
        p.add_argument("--grid", default=None, help="comma-separated lam*gamma grid in (0,1)")
        p.add_argument("--trials", type=int, default=1000)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out", required=True)
        if name == "scale-sweep":
            p.add_argument("--sigma-grid", default="0.3,0.6,1.0,1.8,3.0")

    p = sub.add_parser("denoise", help="tonal-scene denoising comparison")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--snr", type=float, default=5.0)
    p.add_argument("--dr-iters", type=int, default=120)
    p.add_argument("--out", required=True)

    p = sub.add_parser("deconv", help="spike-train deconvolution benchmark")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--snrs", default="5,10,15,20", help="comma-separated input SNRs in dB")
    p.add_argument("--full", action="store_true",
                   help="paper-scale run: 500 trials over all four SNRs")
    p.add_argument("--out", required=True)

    p = sub.add_parser("selftest", help="run built-in invariant checks")
    p.add_argument("--cases", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--sabotage", choices=SABOTAGE_MODES, default=None,
                   help="inject a deliberate fault to verify the checks can fail")
    return parser


def cmd_prox(args) -> int:
    z = _parse_floats(args.z)
    params = ThresholdParams(args.lam, args.gamma)
    if args.group_size is None:
        layout = GroupLayout.single(z.size)
    else:
        layout = GroupLayout.contiguous(z.size, args.group_size)
    result = prox_full(z, layout, params)
    lines = [",".join(f"{v:.12g}" for v in result.minimizer)]
    for k, h in zip(result.support_counts, result.thresholds):
        lines.append(f"k={k},h={h:.12g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _write_result(args, result) -> None:
    timestamp = datetime.now(timezone.utc).isoformat()
    summary_path = write_result_csv(args.out, result, timestamp=timestamp)
    print(f"wrote {args.out} and {summary_path}")


def cmd_sweep(args) -> int:
    from .experiments import SweepConfig, run_threshold_sweep

    kwargs = dict(n=args.n, K=args.K, input_snr_db=args.snr, lambda_coeff=args.lambda_coeff,
                  trials=args.trials, seed=args.seed)
    if args.grid:
        kwargs["lambda_gamma_grid"] = tuple(_parse_floats(args.grid).tolist())
    _write_result(args, run_threshold_sweep(SweepConfig(**kwargs)))
    return 0


def cmd_scale_sweep(args) -> int:
    from .experiments import SweepConfig, run_scale_invariance_sweep

    kwargs = dict(n=args.n, K=args.K, input_snr_db=args.snr, lambda_coeff=args.lambda_coeff,
                  trials=args.trials, seed=args.seed)
    if args.grid:
        kwargs["lambda_gamma_grid"] = tuple(_parse_floats(args.grid).tolist())
    sigma_grid = _parse_floats(args.sigma_grid)
    _write_result(args, run_scale_invariance_sweep(SweepConfig(**kwargs), sigma_grid))
    return 0


def cmd_denoise(args) -> int:
    from .experiments import DenoiseExperimentConfig, run_denoise_experiment

    cfg = DenoiseExperimentConfig(seed=args.seed, input_snr_db=args.snr, dr_iters=args.dr_iters)
    result = run_denoise_experiment(cfg)
    for row in result.summary:
        print(f"{row['penalty']:>9}: output SNR {row['output_snr_db']:.2f} dB "
              f"(lam={row['lam']:.4g}, gamma={row['gamma']:.4g})")
    _write_result(args, result)
    return 0


def cmd_deconv(args) -> int:
    from .experiments import DeconvExperimentConfig, run_deconv_experiment

    if args.full:
        cfg = DeconvExperimentConfig(seed=args.seed, trials=500, snrs=(5.0, 10.0, 15.0, 20.0))
    else:
        snrs = tuple(_parse_floats(args.snrs).tolist())
        cfg = DeconvExperimentConfig(seed=args.seed, trials=args.trials, snrs=snrs)
    result = run_deconv_experiment(cfg)
    for row in result.summary:
        print(f"{row['input_snr_db']:5.1f} dB {row['method']:>9}: "
              f"SRER {row['mean_srer_db']:.2f} +/- {row['std_srer_db']:.2f} dB")
    _write_result(args, result)
    return 0


def cmd_selftest(args) -> int:
    all_ok, results = run_selftest(cases=args.cases, seed=args.seed, sabotage=args.sabotage)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if all_ok else 2


_HANDLERS = {
    "prox": cmd_prox,
    "sweep": cmd_sweep,
    "scale-sweep": cmd_scale_sweep,
    "denoise": cmd_denoise,
    "deconv": cmd_deconv,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _HANDLERS[args.command](args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
