"""Signal generators, metrics, and the reproducible benchmark experiments.

Three experiment families: threshold parameter sweeps on short noisy groups,
analysis-prior denoising of a synthetic tonal scene in pink noise, and sparse
spike-train deconvolution against sparse-group and p-shrinkage baselines.
Every run derives all randomness from ``(seed, trial index)`` streams so
serial and parallel execution give identical aggregates.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .groups import GroupLayout, ThresholdParams
from .prox import prox_elasso_grouped, prox_full, prox_single_group_linear, soft_threshold
from .solvers import ConvOperator, DeconvProblem, DenoiseProblem, dr_denoise, fbs_deconvolve, spectral_norm
from .stft import StftFrame, tf_group_layout

__all__ = [
    "SweepConfig",
    "ReflectivityConfig",
    "DenoiseExperimentConfig",
    "DeconvExperimentConfig",
    "ExperimentResult",
    "gen_reflectivity",
    "gen_ricker",
    "add_noise_at_snr",
    "metrics_snr",
    "make_tonal_scene",
    "run_threshold_sweep",
    "run_scale_invariance_sweep",
    "run_denoise_experiment",
    "run_deconv_experiment",
]

SNR_SENTINEL_DB = 300.0


@dataclass
class ExperimentResult:
    """Raw per-trial rows, aggregate summary rows, and run metadata."""

    rows: list
    summary: list
    meta: dict


def _plain(value):
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    return value


def _result_meta(config_obj, seed: int) -> dict:
    from . import __version__

    return {"version": __version__, "seed": seed, "config": _plain(asdict(config_obj))}


def metrics_snr(reference, estimate) -> float:
    """Fidelity in dB: 20*log10(||ref|| / ||ref - est||), capped at a sentinel.

    A perfect estimate returns the sentinel 300 dB; a zero estimate returns
    0 dB since the error then equals the reference.
    """
    reference = np.asarray(reference, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if reference.shape != estimate.shape:
        raise ValueError("reference and estimate must have equal shapes")
    ref_norm = np.linalg.norm(reference)
    if ref_norm == 0.0:
        raise ValueError("reference signal must be nonzero")
    err = np.linalg.norm(reference - estimate)
    if err == 0.0:
        return SNR_SENTINEL_DB
    return float(20.0 * np.log10(ref_norm / err))


def add_noise_at_snr(x, snr_db: float, kind: str = "white", seed=0):
    """Add scaled noise so the realized SNR equals ``snr_db`` exactly.

    ``kind="pink"`` shapes white noise by a 1/sqrt(f) magnitude filter (zero
    DC) before rescaling.  ``seed`` may be an int or a Generator.  Returns
    ``(noisy, sigma)`` with sigma the RMS of the realized noise.
    """
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise ValueError("signal must not be identically zero")
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    if kind not in ("white", "pink"):
        raise ValueError(f"unknown noise kind {kind!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    w = rng.standard_normal(x.size)
    if kind == "pink":
        spec = np.fft.rfft(w)
        spec[0] = 0.0
        spec[1:] /= np.sqrt(np.arange(1, spec.size))
        w = np.fft.irfft(spec, n=x.size)
    wnorm = np.linalg.norm(w)
    scale = np.linalg.norm(x) / (wnorm * 10.0 ** (snr_db / 20.0))
    noise = scale * w
    sigma = float(np.linalg.norm(noise) / np.sqrt(x.size))
    return x + noise, sigma


@dataclass
class ReflectivityConfig:
    length: int = 512
    spike_prob: float = 0.1
    refractory: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.spike_prob < 1.0:
            raise ValueError("spike_prob must lie strictly between 0 and 1")
        if self.refractory < 0:
            raise ValueError("refractory must be nonnegative")


def gen_reflectivity(cfg: ReflectivityConfig) -> np.ndarray:
    """Sparse spike train with a refractory gap after every nonzero.

    At each sample a standard-normal spike fires with probability
    ``spike_prob`` unless any nonzero occurred within the previous
    ``refractory`` samples.
    """
    rng = np.random.default_rng(cfg.seed)
    x = np.zeros(cfg.length)
    last = -cfg.refractory - 1
    for i in range(cfg.length):
        if i - last > cfg.refractory and rng.random() < cfg.spike_prob:
            x[i] = rng.standard_normal()
            last = i
    return x


def gen_ricker(fs: float = 300.0, duration: float = 0.5, peak_freq: float = 25.0) -> np.ndarray:
    """Symmetric Ricker wavelet (1 - 2*pi^2*f^2*t^2) * exp(-pi^2*f^2*t^2).

    Sampled at ``fs`` on a centered grid and truncated where the magnitude
    falls below 1e-4 of the peak.
    """
    if fs <= 2.0 * peak_freq:
        raise ValueError("fs must exceed twice the peak frequency")
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = int(round(duration * fs)) | 1  # odd sample count centers t = 0
    t = (np.arange(n) - n // 2) / fs
    a = (np.pi * peak_freq * t) ** 2
    r = (1.0 - 2.0 * a) * np.exp(-a)
    keep = np.flatnonzero(np.abs(r) >= 1e-4 * np.abs(r).max())
    return r[keep[0] : keep[-1] + 1]


@dataclass
class SweepConfig:
    """Threshold sweep over lam*gamma for short noisy groups."""

    n: int = 10
    K: int = 1
    input_snr_db: float = 5.0
    lambda_coeff: float = 0.5  # lam = lambda_coeff * noise sigma
    lambda_gamma_grid: tuple = tuple(np.round(np.linspace(0.05, 0.95, 19), 4))
    trials: int = 1000
    seed: int = 42

    def __post_init__(self):
        grid = np.asarray(self.lambda_gamma_grid, dtype=float)
        if np.any(grid <= 0.0) or np.any(grid >= 1.0):
            raise ValueError("lambda_gamma_grid values must lie strictly inside (0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 1 <= self.K <= self.n:
            raise ValueError("K must lie in 1..n")


def _sparse_group_signal(rng, n, K):
    x = np.zeros(n)
    pos = rng.choice(n, size=K, replace=False)
    x[pos] = rng.standard_normal(K)
    if not np.any(x):  # measure-zero guard: re-draw an all-zero amplitude set
        x[pos] = 1.0
    return x


GAIN_RESOLUTION_DB = 0.05


def argmax_at_resolution(means, resolution_db: float = GAIN_RESOLUTION_DB) -> int:
    """Smallest grid index whose mean attains the maximum at the given resolution.

    Past the point where every group keeps a single survivor, the gain curve
    is exactly flat in lam*gamma, so a plain argmax is decided by sampling
    noise; this picks the onset of the maximal plateau instead.
    """
    means = np.asarray(means, dtype=float)
    return int(np.argmax(means >= means.max() - resolution_db))


def run_threshold_sweep(cfg: SweepConfig) -> ExperimentResult:
    """SNR gain of the group threshold across a lam*gamma grid.

    Per trial: a length-n signal with K Gaussian nonzeros at uniform
    positions, white noise at the configured input SNR, lam tied to the noise
    level, one prox evaluation per grid point.  Rows record every
    (trial, grid point) gain; the summary aggregates per grid point.
    """
    grid = np.asarray(cfg.lambda_gamma_grid, dtype=float)
    rows = []
    gains = np.empty((cfg.trials, grid.size))
    for trial in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, trial])
        x = _sparse_group_signal(rng, cfg.n, cfg.K)
        y, sigma = add_noise_at_snr(x, cfg.input_snr_db, "white", rng)
        lam = cfg.lambda_coeff * sigma
        for gi, lg in enumerate(grid):
            params = ThresholdParams(lam, lg / lam)
            xhat, _, _ = prox_single_group_linear(y, params)
            gain = metrics_snr(x, xhat) - cfg.input_snr_db
            gains[trial, gi] = gain
            rows.append({"trial": trial, "lam_gamma": float(lg), "snr_gain_db": gain})
    summary = [
        {
            "lam_gamma": float(lg),
            "mean_snr_gain_db": float(gains[:, gi].mean()),
            "std_snr_gain_db": float(gains[:, gi].std(ddof=0)),
        }
        for gi, lg in enumerate(grid)
    ]
    return ExperimentResult(rows, summary, _result_meta(cfg, cfg.seed))


def run_scale_invariance_sweep(cfg: SweepConfig, sigma_grid: Sequence[float]) -> ExperimentResult:
    """Repeat the threshold sweep at several noise scales, pinning the input SNR.

    The signal energy is co-scaled against fixed-scale noise so that the
    realized SNR stays at ``cfg.input_snr_db``; lam follows the nominal noise
    scale.  The summary reports every (sigma, grid point) mean and the
    gain-maximizing lam*gamma per sigma.
    """
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    if sigma_grid.size < 1 or np.any(sigma_grid <= 0):
        raise ValueError("sigma_grid must hold positive scales")
    grid = np.asarray(cfg.lambda_gamma_grid, dtype=float)
    rows = []
    summary = []
    target = 10.0 ** (cfg.input_snr_db / 20.0)
    for si, sig in enumerate(sigma_grid):
        gains = np.empty((cfg.trials, grid.size))
        for trial in range(cfg.trials):
            rng = np.random.default_rng([cfg.seed, si, trial])
            x = _sparse_group_signal(rng, cfg.n, cfg.K)
            w = sig * rng.standard_normal(cfg.n)
            x *= target * np.linalg.norm(w) / np.linalg.norm(x)
            y = x + w
            lam = cfg.lambda_coeff * sig
            for gi, lg in enumerate(grid):
                params = ThresholdParams(lam, lg / lam)
                xhat, _, _ = prox_single_group_linear(y, params)
                gain = metrics_snr(x, xhat) - cfg.input_snr_db
                gains[trial, gi] = gain
                rows.append({"sigma": float(sig), "trial": trial,
                             "lam_gamma": float(lg), "snr_gain_db": gain})
        means = gains.mean(axis=0)
        best = argmax_at_resolution(means)
        for gi, lg in enumerate(grid):
            summary.append({
                "sigma": float(sig),
                "lam_gamma": float(lg),
                "mean_snr_gain_db": float(means[gi]),
                "std_snr_gain_db": float(gains[:, gi].std(ddof=0)),
                "argmax_lam_gamma": float(grid[best]),
                "argmax_grid_index": best,
            })
    return ExperimentResult(rows, summary, _result_meta(cfg, cfg.seed))


@dataclass
class DenoiseExperimentConfig:
    """Synthetic tonal scene denoised with five interchangeable penalties."""

    fs: float = 16000.0
    duration: float = 2.0
    fundamental: float = 220.0
    n_harmonics: int = 8
    amp_decay: float = 0.8
    events: tuple = ((0.15, 0.90), (1.10, 1.85))
    ramp: float = 0.01
    input_snr_db: float = 5.0
    noise_kind: str = "pink"
    window_length: int = 960
    hop: int = 240
    freq_group_width: int = 16
    time_group_length: int = 8
    hybrid_stack: int = 16
    n_lambda: int = 15
    n_lam_gamma: int = 15
    dr_alpha: float = 1.0
    dr_iters: int = 120
    dr_tol: float = 1e-6
    penalties: tuple = ("l1", "elasso", "l21", "proposed", "hybrid")
    seed: int = 42


def make_tonal_scene(cfg: DenoiseExperimentConfig) -> np.ndarray:
    """Gated harmonic stack: decaying harmonics switched on during the events.

    The length is rounded up to a hop multiple so the frame tiles the signal
    periodically.
    """
    n = int(np.ceil(cfg.duration * cfg.fs / cfg.hop)) * cfg.hop
    t = np.arange(n) / cfg.fs
    tone = np.zeros(n)
    for k in range(cfg.n_harmonics):
        tone += cfg.amp_decay ** k * np.sin(2.0 * np.pi * cfg.fundamental * (k + 1) * t + 0.7 * k)
    gate = np.zeros(n)
    for start, stop in cfg.events:
        seg = np.clip((t - start) / cfg.ramp, 0.0, 1.0) * np.clip((stop - t) / cfg.ramp, 0.0, 1.0)
        gate = np.maximum(gate, seg)
    return tone * gate


def _log_grid(center: float, n: int, span: float = 30.0) -> np.ndarray:
    return np.geomspace(center / span, center * span ** 0.5, n)


def _sweep_lambda(run_fn, grid: np.ndarray, widenings: int = 3):
    """Evaluate ``run_fn(lam)`` over the grid, widening while the argmax sits on an edge."""
    grid = np.asarray(grid, dtype=float)
    scores = [run_fn(lam) for lam in grid]
    for _ in range(widenings):
        best = int(np.argmax(scores))
        if best == 0:
            ext = grid[0] * np.geomspace(1.0 / 16.0, 1.0, 5)[:-1]
            grid = np.concatenate([ext, grid])
            scores = [run_fn(lam) for lam in ext] + scores
        elif best == len(grid) - 1:
            ext = grid[-1] * np.geomspace(1.0, 16.0, 5)[1:]
            grid = np.concatenate([grid, ext])
            scores = scores + [run_fn(lam) for lam in ext]
        else:
            break
    return grid, np.asarray(scores)


def run_denoise_experiment(cfg: DenoiseExperimentConfig) -> ExperimentResult:
    """Tune and compare the five analysis-prior regularizers on the tonal scene.

    Plain penalties sweep lam; the proposed penalty reuses half the best l1
    lam and sweeps gamma (lam*gamma < 1), the hybrid reuses half the best
    group-norm lam likewise.  The summary also counts surviving noisy-grid
    coefficients inside silent regions for the elitist and proposed
    thresholds at their tuned parameters.
    """
    clean = make_tonal_scene(cfg)
    y, _ = add_noise_at_snr(clean, cfg.input_snr_db, cfg.noise_kind, cfg.seed)
    frame = StftFrame(clean.size, cfg.window_length, cfg.hop)
    freq_layout = tf_group_layout(frame, cfg.freq_group_width, 1)
    time_layout = tf_group_layout(frame, 1, cfg.time_group_length)
    hybrid_layout = tf_group_layout(frame, 1, cfg.time_group_length, cfg.hybrid_stack)
    layouts = {"l1": None, "elasso": freq_layout, "proposed": freq_layout,
               "l21": time_layout, "hybrid": hybrid_layout}

    rows = []

    def solve(penalty, lam, gamma=0.0):
        problem = DenoiseProblem(y=y, frame=frame, lam=lam, penalty=penalty,
                                 gamma=gamma, layout=layouts[penalty], dr_alpha=cfg.dr_alpha)
        xhat, report = dr_denoise(problem, max_iters=cfg.dr_iters, tol=cfg.dr_tol)
        snr = metrics_snr(clean, xhat)
        rows.append({"penalty": penalty, "lam": float(lam), "gamma": float(gamma),
                     "output_snr_db": snr, "iterations": report.iterations})
        return snr

    coeff_mag = np.abs(frame.analyze(y))
    lam0 = float(np.percentile(coeff_mag, 99.5))
    lam_grid = _log_grid(lam0, cfg.n_lambda)
    lg_grid = np.linspace(0.08, 0.95, cfg.n_lam_gamma)

    best: dict[str, dict] = {}
    for penalty in ("l1", "elasso", "l21"):
        if penalty not in cfg.penalties:
            continue
        grid, scores = _sweep_lambda(lambda lam, p=penalty: solve(p, lam), lam_grid)
        bi = int(np.argmax(scores))
        best[penalty] = {"lam": float(grid[bi]), "gamma": 0.0, "output_snr_db": float(scores[bi])}
    for penalty, base in (("proposed", "l1"), ("hybrid", "l21")):
        if penalty not in cfg.penalties:
            continue
        if base not in best:
            raise ValueError(f"{penalty!r} reuses the tuned {base!r} weight; include {base!r} in penalties")
        lam = 0.5 * best[base]["lam"]
        scores = np.array([solve(penalty, lam, lg / lam) for lg in lg_grid])
        bi = int(np.argmax(scores))
        best[penalty] = {"lam": lam, "gamma": float(lg_grid[bi] / lam),
                         "output_snr_db": float(scores[bi])}

    summary = [{"penalty": p, "input_snr_db": cfg.input_snr_db, **v} for p, v in best.items()]

    if "elasso" in best and "proposed" in best:
        silent = _silent_frame_mask(cfg, frame, clean)
        flat = frame.analyze(y).ravel()
        el = prox_elasso_grouped(flat, freq_layout, best["elasso"]["lam"])
        pr = prox_full(flat, freq_layout,
                       ThresholdParams(best["proposed"]["lam"],
                                       best["proposed"]["gamma"])).minimizer
        mask = np.tile(silent, frame.n_bins)
        counts = {"elasso": int(np.count_nonzero(el[mask])),
                  "proposed": int(np.count_nonzero(pr[mask]))}
        for row in summary:
            if row["penalty"] in counts:
                row["silent_region_nonzeros"] = counts[row["penalty"]]

    return ExperimentResult(rows, summary, _result_meta(cfg, cfg.seed))


def _silent_frame_mask(cfg: DenoiseExperimentConfig, frame: StftFrame, clean: np.ndarray) -> np.ndarray:
    """Frames whose window sees only silence in the clean scene."""
    energy = clean * clean
    mask = np.zeros(frame.n_frames, dtype=bool)
    for fi in range(frame.n_frames):
        idx = (fi * frame.hop + np.arange(frame.window.size)) % clean.size
        mask[fi] = energy[idx].sum() == 0.0
    return mask


@dataclass
class DeconvExperimentConfig:
    """Spike-train deconvolution benchmark across input SNRs and methods.

    The reflectivity seed fixes the one spike train used by every trial;
    only the noise realization varies.
    """

    snrs: tuple = (5.0, 10.0, 15.0, 20.0)
    trials: int = 100
    pilot_trials: int = 24
    methods: tuple = ("sgl", "ips", "proposed")
    reflectivity: ReflectivityConfig = field(default_factory=lambda: ReflectivityConfig(seed=4))
    wavelet_fs: float = 300.0
    wavelet_peak_freq: float = 25.0
    conv_mode: str = "linear"
    group_size: int = 8
    lam_gamma: float = 0.9
    sgl_beta: float = 0.95
    ips_p: float = -0.5
    n_lambda: int = 13
    fbs_iters: int = 4000
    fbs_tol: float = 1e-9
    seed: int = 42


def run_deconv_experiment(cfg: DeconvExperimentConfig) -> ExperimentResult:
    """Reconstruction quality (SRER, dB) per method and input SNR.

    Each (SNR, method) pair picks one lam by sweep search (log grid,
    auto-widened while the argmax sits on an edge) maximizing the mean SRER
    over the first ``pilot_trials`` noise realizations, then measures SRER
    over all ``trials`` realizations of the same stream at that lam.
    """
    x = gen_reflectivity(cfg.reflectivity)
    kernel = gen_ricker(cfg.wavelet_fs, peak_freq=cfg.wavelet_peak_freq)
    op = ConvOperator(kernel, x.size, mode=cfg.conv_mode)
    sigma = spectral_norm(op)
    clean_trace = op.forward(x)
    layout = GroupLayout.contiguous(x.size, cfg.group_size)

    def run_once(method, lam, y):
        kwargs = {"y": y, "operator": op, "lam": lam, "penalty": method, "sigma": sigma}
        if method == "proposed":
            kwargs.update(layout=layout, gamma=cfg.lam_gamma / lam)
        elif method == "sgl":
            kwargs.update(layout=layout, beta=cfg.sgl_beta)
        else:
            kwargs.update(p=cfg.ips_p)
        problem = DeconvProblem(**kwargs)
        xhat, _ = fbs_deconvolve(problem, max_iters=cfg.fbs_iters, tol=cfg.fbs_tol)
        return metrics_snr(x, xhat)

    lam0 = float(np.abs(op.adjoint(clean_trace)).max())
    base_grid = np.geomspace(lam0 / 400.0, lam0 / 1.5, cfg.n_lambda)
    rows = []
    summary = []
    for si, snr in enumerate(cfg.snrs):
        observations = [add_noise_at_snr(clean_trace, snr, "white",
                                         np.random.default_rng([cfg.seed, 17, si, t]))[0]
                        for t in range(cfg.trials)]
        pilot = observations[: min(cfg.pilot_trials, cfg.trials)]
        for method in cfg.methods:
            def pilot_score(lam):
                return float(np.mean([run_once(method, lam, yp) for yp in pilot]))

            grid, scores = _sweep_lambda(pilot_score, base_grid)
            lam_best = float(grid[int(np.argmax(scores))])
            srers = np.empty(cfg.trials)
            for t, y in enumerate(observations):
                srers[t] = run_once(method, lam_best, y)
                rows.append({"input_snr_db": float(snr), "method": method, "trial": t,
                             "lam": lam_best, "srer_db": float(srers[t])})
            summary.append({"input_snr_db": float(snr), "method": method,
                            "lam": lam_best, "trials": cfg.trials,
                            "mean_srer_db": float(srers.mean()),
                            "std_srer_db": float(srers.std(ddof=0))})
    return ExperimentResult(rows, summary, _result_meta(cfg, cfg.seed))
