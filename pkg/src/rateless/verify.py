"""End-to-end acceptance checks.

Each check runs the engine at a fixed seed and compares against bounds or
independent oracles, returning a :class:`CheckResult`.  ``scale`` shrinks
the expensive Monte Carlo runs for a fast smoke pass; the thresholds being
checked never change.
"""

import contextlib
import itertools
import math
import time
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import bounds as bnd
from . import mixture
from .mixture import CountMatrix, kt_conditional, ml_log_prob, mixture_log_prob, redundancy_bound
from .sim import ExperimentConfig, martingale_audit, run_experiment

VERIFY_SEED = 20240601


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


# independent oracle for the mixture probability ----------------------------

_NODES, _WEIGHTS = leggauss(64)
_PHI = (_NODES + 1) * (math.pi / 4)  # Gauss-Legendre on [0, pi/2]
_PHI_W = _WEIGHTS * (math.pi / 4)


def simplex_mixture_oracle(counts) -> float:
    """Jeffreys-weighted average of prod theta^n over binary backward channels, by quadrature.

    Each output column carries an independent Beta(1/2, 1/2) weight.  The
    substitution theta = sin^2(phi) removes the endpoint singularities: the
    density times d theta becomes (2/pi) d phi.  Columns are integrated
    jointly on a tensor-product grid rather than factorised.
    """
    counts = np.asarray(counts)
    if counts.shape[0] != 2:
        raise ValueError("the oracle handles binary inputs only")
    s2, c2 = np.sin(_PHI) ** 2, np.cos(_PHI) ** 2
    grids = np.meshgrid(*([np.arange(len(_PHI))] * counts.shape[1]), indexing="ij")
    total = np.ones(grids[0].shape)
    for j, g in enumerate(grids):
        total = total * (2 / math.pi) * _PHI_W[g] * s2[g] ** counts[0, j] * c2[g] ** counts[1, j]
    return float(total.sum())


# fault injection -----------------------------------------------------------


@contextlib.contextmanager
def injected_fault(name: str | None):
    """Temporarily corrupt a constant so a check can be shown to fail."""
    if name is None:
        yield
        return
    if name != "kt":
        raise ValueError(f"unknown fault {name!r}")
    saved = mixture.PSEUDOCOUNT
    mixture.PSEUDOCOUNT = 0.45
    try:
        yield
    finally:
        mixture.PSEUDOCOUNT = saved


# helpers -------------------------------------------------------------------


def _n(trials, scale, floor=200):
    return max(floor, int(round(trials * scale)))


def _cfg(**kw):
    kw.setdefault("seed", VERIFY_SEED)
    return ExperimentConfig(**kw)


def _timed(number, name, fn):
    t0 = time.perf_counter()
    passed, detail = fn()
    return CheckResult(number, name, bool(passed), detail, time.perf_counter() - t0)


# checks --------------------------------------------------------------------


def check_bec_repetition(scale=1.0, workers=1):
    def run():
        worst, ok = 0.0, True
        for delta in (0.25, 0.5, 0.75):
            r = run_experiment(_cfg(scheme="bec_repetition", channel={"type": "bec", "delta": delta},
                                    trials=100_000, worker_count=workers))
            rel = abs(r.mean_T * (1 - delta) - 1)
            worst = max(worst, rel)
            ok &= rel <= 0.02
        return ok, f"worst relative deviation from 1/(1-delta) = {worst:.4f} (limit 0.02)"

    return _timed(1, "retransmit-until-unerased mean", run)


def known_grid(scale=1.0):
    for p in (0.25, 0.11):
        for M in (2**8, 2**12):
            for eps in (2.0**-4, 2.0**-8):
                trials = 10_000 if M == 2**8 else _n(10_000, scale)
                yield _cfg(scheme="known", channel={"type": "bsc", "p": p}, M=M, epsilon=eps, trials=trials)


def check_known_achievability(scale=1.0, workers=1, reports=None):
    def run():
        bad = []
        for cfg in known_grid(scale):
            r = run_experiment(cfg.replace(worker_count=workers))
            if reports is not None:
                reports.append(r)
            b = r.bounds
            ok = (r.error_upper <= cfg.epsilon
                  and r.mean_T <= b["wald_time_bound"] + r.mean_T_ci
                  and r.rate >= b["rate_known"] - r.rate_ci)
            if not ok:
                bad.append(f"p={cfg.channel['p']} M={cfg.M} eps={cfg.epsilon}")
        return not bad, "8/8 configurations within error, time and rate bounds" if not bad else "violations: " + "; ".join(bad)

    return _timed(2, "known-channel threshold decoder", run)


def check_martingales(scale=1.0, workers=1):
    def run():
        res = martingale_audit(_cfg(scheme="known", channel={"type": "bsc", "p": 0.25}, M=2),
                               horizon=200, samples=_n(100_000, scale, 20_000), log2_A=10.0)
        ok = all(a.mean_ok and a.crossing_ok for a in res.values())
        detail = ", ".join(
            f"{k}: mean {a.mean:.4f}±{a.ci_half:.4f}, crossing {a.crossing_fraction:.5f}≤{a.crossing_bound:.5f}"
            for k, a in res.items()
        )
        return ok, detail

    return _timed(3, "stopped likelihood-ratio products have unit mean", run)


def check_mixture_oracle(scale=1.0, workers=1):
    def run():
        worst = 0.0
        oracle_cache = {}
        for y_size in (1, 2):
            for n in range(0, 9):
                for xs in itertools.product((0, 1), repeat=n):
                    for ys in itertools.product(range(y_size), repeat=n):
                        cm = CountMatrix.empty(2, y_size)
                        seq = 0.0
                        for x, y in zip(xs, ys):
                            seq += math.log2(kt_conditional(cm, x, y))
                            cm.add(x, y)
                        key = cm.counts.tobytes() + bytes([y_size])
                        if key not in oracle_cache:
                            oracle_cache[key] = math.log2(simplex_mixture_oracle(cm.counts))
                        ref = oracle_cache[key]
                        worst = max(worst, abs(seq - ref), abs(mixture_log_prob(cm) - ref))
        return worst <= 1e-6, f"max |log2 p - oracle| = {worst:.2e} over all binary sequences of length <= 8"

    return _timed(4, "mixture probability vs simplex integration", run)


def check_redundancy(scale=1.0, workers=1):
    def run():
        rng = np.random.default_rng(VERIFY_SEED)
        violations, worst = 0, -math.inf
        pairs = _n(10_000, scale, 2_000)
        for i in range(pairs):
            x_size, y_size = ((2, 2), (3, 2))[i % 2]
            t = int(rng.integers(1, 501))
            cells = rng.dirichlet(np.full(x_size * y_size, rng.choice([0.1, 0.5, 2.0])))
            cm = CountMatrix(rng.multinomial(t, cells).reshape(x_size, y_size))
            gap = ml_log_prob(cm) - mixture_log_prob(cm) - redundancy_bound(t, x_size, y_size)
            worst = max(worst, gap)
            violations += gap > 1e-9
        return violations == 0, f"{violations} violations in {pairs} pairs; max(gap - bound) = {worst:.3f}"

    return _timed(5, "ML-vs-mixture redundancy bound", run)


def universal_config(scale=1.0):
    return _cfg(scheme="universal", channel={"type": "bsc", "p": 0.25}, M=2**12, epsilon=2.0**-6,
                trials=_n(5_000, scale))


def check_universal_achievability(scale=1.0, workers=1, reports=None):
    def run():
        r = run_experiment(universal_config(scale).replace(worker_count=workers))
        if reports is not None:
            reports.append(r)
        b = r.bounds
        ok = (r.error_upper <= 2.0**-6 and r.mean_T <= b["universal_time_bound"] + r.mean_T_ci
              and r.extras["replay_violations"] == 0)
        return ok, (f"error≤{r.error_upper:.4f}, mean T {r.mean_T:.1f} vs bound {b['universal_time_bound']:.1f}, "
                    f"replay violations {r.extras['replay_violations']}")

    return _timed(6, "universal decoder", run)


def check_randomized_wrapper(scale=1.0, workers=1):
    def run():
        alpha = 0.3
        base_cfg = _cfg(scheme="known", channel={"type": "bsc", "p": 0.25}, M=2**8, epsilon=2.0**-4,
                        trials=10_000, worker_count=workers)
        base = run_experiment(base_cfg)
        rnd = run_experiment(base_cfg.replace(randomize_alpha=alpha))
        ratio = rnd.mean_T / base.mean_T
        target = alpha + (1 - alpha) * base.error_rate
        lo, hi = rnd.error_ci
        ok = abs(ratio / (1 - alpha) - 1) <= 0.02 and lo <= target <= hi
        return ok, f"mean T ratio {ratio:.4f} (target 0.7±2%), error {rnd.error_rate:.4f} vs {target:.4f}"

    return _timed(7, "randomised early termination", run)


def check_converse(known_reports, universal_reports):
    def run():
        bad = 0
        for r in list(known_reports) + list(universal_reports):
            c = r.config
            limit = bnd.converse_rate(r.bounds["capacity"], 2 ** round(math.log2(c["M"])), c["epsilon"])
            bad += r.rate > limit
        n = len(known_reports) + len(universal_reports)
        return bad == 0 and n > 0, f"{bad} of {n} empirical rates above the converse bound"

    return _timed(8, "converse bound on empirical rates", run)


def check_joint_source_channel(scale=1.0, workers=1):
    def run():
        eps = 2.0**-6
        r = run_experiment(_cfg(scheme="joint_sc", channel={"type": "noiseless", "size": 2},
                                source={"type": "zipf", "M": 2**10}, epsilon=eps, trials=10_000, worker_count=workers))
        bound = r.bounds["joint_sc_expected_time"]
        ok = r.mean_T <= bound + r.mean_T_ci and r.error_upper <= eps
        return ok, f"mean T {r.mean_T:.3f} vs {bound:.3f}, error≤{r.error_upper:.4f}"

    return _timed(9, "weighted thresholds for a skewed source", run)


def check_slepian_wolf(scale=1.0, workers=1):
    def run():
        eps = 2.0**-4
        r = run_experiment(_cfg(scheme="slepian_wolf", channel={"type": "noiseless", "size": 2},
                                source={"type": "binary_pair", "L": 6, "flip": 0.2}, epsilon=eps,
                                trials=10_000, worker_count=workers))
        b, e = r.bounds, r.extras
        ok = (e["R1"] <= b["R1_bound"] + e["R1_ci"] and e["R2"] <= b["R2_bound"] + e["R2_ci"]
              and r.error_upper <= eps and b["H2_given_1"] >= 4 and b["H1"] >= 4)
        return ok, (f"R1 {e['R1']:.2f}≤{b['R1_bound']:.2f}, R2 {e['R2']:.2f}≤{b['R2_bound']:.2f}, "
                    f"error≤{r.error_upper:.4f}")

    return _timed(10, "two-stage decoding with side information", run)


def check_complete_universal(scale=1.0, workers=1):
    def run():
        eps = 2.0**-4
        r = run_experiment(_cfg(scheme="complete_universal", channel={"type": "bsc", "p": 0.25},
                                source={"type": "iid", "gamma": [0.3, 0.7], "L": 12}, epsilon=eps,
                                trials=_n(2_000, scale), worker_count=workers))
        lo, hi = r.extras["report_band"]
        ok = r.error_upper <= eps and lo - r.rate_ci <= r.rate <= hi + r.rate_ci
        return ok, f"error≤{r.error_upper:.4f}, rate {r.rate:.4f} in [{lo:.4f}, {hi:.4f}]"

    return _timed(11, "unknown source and unknown channel", run)


def check_limited_feedback(scale=1.0, workers=1):
    def run():
        base = _cfg(scheme="known", channel={"type": "bec", "delta": 0.5}, M=2**8, epsilon=2.0**-4,
                    trials=10_000, worker_count=workers)
        recs, reps = {}, {}
        for s in (1, 2, 8):
            out = []
            reps[s] = run_experiment(base.replace(feedback_period=s), out)
            recs[s] = out
        violations = sum(b.T > a.T + s - 1 for s in (2, 8) for a, b in zip(recs[1], recs[s]))
        rates_ok = all(
            reps[s].rate >= bnd.rate_limited_feedback(reps[s].bounds["capacity"], 2**8, 2.0**-4, s) - reps[s].rate_ci
            for s in (1, 2, 8)
        )
        return violations == 0 and rates_ok, f"{violations} per-trial violations; rates {[round(reps[s].rate, 4) for s in (1, 2, 8)]}"

    return _timed(12, "periodic feedback", run)


def check_determinism(scale=1.0, workers=4):
    def run():
        cfg = _cfg(scheme="known", channel={"type": "bsc", "p": 0.25}, M=2**8, epsilon=2.0**-4, trials=10_000)
        one = run_experiment(cfg.replace(worker_count=1)).to_json()
        many = run_experiment(cfg.replace(worker_count=max(2, workers))).to_json()
        return one == many, "reports byte-identical across worker counts" if one == many else "reports differ"

    return _timed(13, "worker-count independence", run)


def run_acceptance(scale: float = 1.0, workers: int = 1, fault: str | None = None, only=None,
                   echo=None) -> list[CheckResult]:
    """Run the acceptance checks in order; ``echo`` receives each result as it completes."""
    known, universal = [], []
    plan = {
        1: lambda: check_bec_repetition(scale, workers),
        2: lambda: check_known_achievability(scale, workers, known),
        3: lambda: check_martingales(scale, workers),
        4: lambda: check_mixture_oracle(scale, workers),
        5: lambda: check_redundancy(scale, workers),
        6: lambda: check_universal_achievability(scale, workers, universal),
        7: lambda: check_randomized_wrapper(scale, workers),
        8: lambda: check_converse(known, universal),
        9: lambda: check_joint_source_channel(scale, workers),
        10: lambda: check_slepian_wolf(scale, workers),
        11: lambda: check_complete_universal(scale, workers),
        12: lambda: check_limited_feedback(scale, workers),
        13: lambda: check_determinism(scale, max(workers, 4)),
    }
    wanted = sorted(plan) if only is None else sorted(only)
    if 8 in wanted:
        wanted = sorted(set(wanted) | {2, 6})
    results = []
    with injected_fault(fault):
        for k in wanted:
            res = plan[k]()
            results.append(res)
            if echo is not None:
                echo(res)
    return results


QUICK_CHECKS = (1, 3, 4, 5, 7, 9, 10, 12)
QUICK_SCALE = 0.1
