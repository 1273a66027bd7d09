"""Built-in invariant checks for the CLI self-test command."""

from __future__ import annotations

import numpy as np

from .groups import GroupLayout, ThresholdParams
from .oracle import OracleConfig, PairProductCost, brute_force_prox
from .prox import prox_single_group_binary, prox_single_group_linear, soft_threshold
from .solvers import ConvOperator, DeconvProblem, fbs_deconvolve
from .stft import StftFrame

SABOTAGE_MODES = ("h-offset",)


def _analytic(z, params, sabotage):
    xhat, k, h = prox_single_group_linear(z, params)
    if sabotage == "h-offset":
        xhat = soft_threshold(z, h + 1e-3) / (1.0 - params.lam_gamma)
    return xhat, k, h


def check_oracle_agreement(cases: int, seed: int, sabotage: str | None = None):
    """Analytic threshold vs brute-force minimizer on randomized instances."""
    rng = np.random.default_rng(seed)
    cfg = OracleConfig()
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 7))
        z = rng.uniform(-3.0, 3.0, n)
        lam = rng.uniform(0.05, 2.0)
        lam_gamma = rng.uniform(1e-4, 0.99)
        params = ThresholdParams(lam, lam_gamma / lam)
        xa, _, _ = _analytic(z, params, sabotage)
        xb, kb, hb = prox_single_group_binary(z, params)
        if sabotage is None and not np.array_equal(xa, xb):
            return False, "linear and binary searches disagreed"
        xo = brute_force_prox(z, PairProductCost(params.lam, params.gamma), cfg)
        worst = max(worst, float(np.abs(xa - xo).max()))
        if worst > 1e-6:
            return False, f"analytic vs oracle mismatch {worst:.3e}"
    return True, f"max |analytic - oracle| = {worst:.3e} over {cases} cases"


def check_frame_parseval(seed: int):
    """Energy preservation and perfect reconstruction of the default frame."""
    rng = np.random.default_rng(seed)
    frame = StftFrame(signal_length=4800, window_length=960, hop=240)
    worst_energy = worst_recon = 0.0
    for _ in range(5):
        x = rng.standard_normal(frame.signal_length)
        c = frame.analyze(x)
        worst_energy = max(worst_energy, abs(float(np.vdot(c, c).real) - float(x @ x)))
        worst_recon = max(worst_recon, float(np.abs(frame.synthesize(c) - x).max()))
    ok = worst_energy < 1e-10 and worst_recon < 1e-10
    return ok, f"energy residual {worst_energy:.2e}, reconstruction residual {worst_recon:.2e}"


def check_fbs_monotone(seed: int):
    """Forward-backward cost trace never increases under the safe step cap."""
    rng = np.random.default_rng(seed)
    for trial in range(3):
        n = 96
        kernel = rng.standard_normal(9)
        op = ConvOperator(kernel, n, mode="circular")
        x = np.zeros(n)
        x[rng.choice(n, 5, replace=False)] = rng.standard_normal(5)
        y = op.forward(x) + 0.05 * rng.standard_normal(n)
        lam = 0.1 * float(np.abs(op.adjoint(y)).max())
        problem = DeconvProblem(y=y, operator=op, lam=lam, penalty="proposed",
                                layout=GroupLayout.contiguous(n, 8), gamma=0.9 / lam)
        _, report = fbs_deconvolve(problem, max_iters=150)
        rises = np.diff(report.cost_trace)
        if rises.size and float(rises.max()) > 1e-9:
            return False, f"cost increased by {float(rises.max()):.3e}"
    return True, "cost traces monotone within 1e-9"


def run_selftest(cases: int = 1000, seed: int = 42, sabotage: str | None = None):
    """Run all invariant checks; returns (all_ok, [(name, ok, detail), ...])."""
    if sabotage is not None and sabotage not in SABOTAGE_MODES:
        raise ValueError(f"unknown sabotage mode {sabotage!r}; expected one of {SABOTAGE_MODES}")
    checks = [
        ("oracle-agreement", lambda: check_oracle_agreement(cases, seed, sabotage)),
        ("frame-parseval", lambda: check_frame_parseval(seed)),
        ("fbs-monotone", lambda: check_fbs_monotone(seed)),
    ]
    results = []
    all_ok = True
    for name, fn in checks:
        ok, detail = fn()
        results.append((name, ok, detail))
        all_ok = all_ok and ok
    return all_ok, results
