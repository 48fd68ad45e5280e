"""Monte Carlo experiment engine.

A trial draws a message, streams its codeword through the channel and runs
the sequential decoder until some codeword crosses its threshold.  Every
random draw is addressed by ``(master seed, trial index, stream role)``
through the counter hash in ``_rng``, so a trial is a pure function of its
index and a Report does not depend on how trials are spread over workers.
The codebook itself is redrawn per trial, so averages are over the random
coding ensemble as well as over messages and noise.
"""

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache

import numpy as np

from . import _rng
from . import bounds as bnd
from . import sequential as sq
from ._kernels import (
    audit_log_products,
    bec_repetition,
    decode_known_awgn,
    decode_known_dmc,
    decode_universal_dmc,
    int_cdf,
)
from .channel import AwgnChannel, capacity, channel_from_spec, score_table
from .codebook import Codebook, codeword_block
from .errors import ConfigError, DomainError, RatelessError
from .mixture import redundancy_constants
from .sources import (
    CorrelatedPairSource,
    IidSymbolSource,
    MessageSource,
    conditional_entropy,
    source_from_spec,
    uniform_source,
    universal_log_prob_from_counts,
)

SCHEMES = ("known", "universal", "bec_repetition", "joint_sc", "slepian_wolf", "complete_universal")
DEFAULT_SEED = 20240601
Z95 = 1.959963984540054
Z99 = 2.5758293035489004
MAX_SYMBOLS_FACTOR = 64


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    channel: dict
    source: dict | None = None
    M: int | None = None
    codebook_seed: int = 0
    codebook_prior: list | None = None
    epsilon: float = 2.0**-6
    trials: int = 1000
    feedback_period: int = 1
    randomize_alpha: float = 0.0
    max_symbols: int | None = None
    worker_count: int = 1
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {', '.join(SCHEMES)}")
        if not isinstance(self.channel, dict):
            raise ConfigError("channel must be an object")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if self.max_symbols is not None and (int(self.max_symbols) != self.max_symbols or self.max_symbols < 1):
            raise ConfigError("max_symbols must be a positive integer")
        if int(self.feedback_period) != self.feedback_period or self.feedback_period < 1:
            raise ConfigError("feedback_period must be a positive integer")
        if not 0 <= self.randomize_alpha < 1:
            raise ConfigError("randomize_alpha must lie in [0, 1)")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        if int(self.worker_count) != self.worker_count or self.worker_count < 1:
            raise ConfigError("worker_count must be a positive integer")
        if self.seed < 0 or self.codebook_seed < 0:
            raise ConfigError("seeds must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("experiment config must be an object")
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(extra))}")
        if "scheme" not in d or "channel" not in d:
            raise ConfigError("config needs 'scheme' and 'channel'")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        return ExperimentConfig(**{**self.to_dict(), **changes})

    def key(self) -> str:
        """Canonical JSON of everything that affects trial outcomes."""
        d = self.to_dict()
        del d["worker_count"]
        return json.dumps(d, sort_keys=True)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    w: int
    w_hat: int
    T: int
    error: bool
    tie: bool
    truncated: bool
    aborted: bool = False
    T1: int = 0
    T2: int = 0
    replay_ok: bool = True

    CSV_COLUMNS = ("trial", "w", "w_hat", "T", "error", "tie", "truncated")


@dataclass
class Report:
    scheme: str
    trials: int
    errors: int
    error_rate: float
    error_ci: tuple
    mean_T: float
    mean_T_ci: float | None
    rate: float | None
    rate_ci: float | None
    ties: int
    truncations: int
    aborted: int
    bounds: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def error_upper(self) -> float:
        return self.error_ci[1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["error_ci"] = list(self.error_ci)
        return _json_safe(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


# statistics ---------------------------------------------------------------


def wilson_interval(errors: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n < 1:
        raise ValueError("need at least one trial")
    p = errors / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == n else min(1.0, centre + half)
    return lo, hi


def mean_interval(values, z: float = Z95) -> tuple[float, float | None]:
    """(mean, half-width of the normal interval); half-width is None for one sample."""
    vals = [float(v) for v in values]
    n = len(vals)
    mean = math.fsum(vals) / n
    if n < 2:
        return mean, None
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    return mean, z * math.sqrt(var / n)


# experiment setup ---------------------------------------------------------


@dataclass(eq=False)
class _Setup:
    cfg: ExperimentConfig
    C: float = 0.0
    dmc: object = None
    awgn: AwgnChannel | None = None
    prior: object = None
    table: np.ndarray | None = None
    zmax: float = 0.0
    prior_icdf: np.ndarray | None = None
    fwd_icdf: np.ndarray | None = None
    log2_prior: np.ndarray | None = None
    message_cdf: np.ndarray | None = None
    message_count: int = 0
    thresholds: np.ndarray | None = None
    max_symbols: int = 0
    source: object = None
    extras: dict = field(default_factory=dict)


def _message_source(cfg: ExperimentConfig):
    if cfg.source is not None:
        src = source_from_spec(cfg.source)
    elif cfg.M is not None:
        src = uniform_source(int(cfg.M))
    else:
        raise ConfigError("config needs either 'source' or 'M'")
    if cfg.M is not None and getattr(src, "message_count", cfg.M) != cfg.M:
        raise ConfigError(f"M={cfg.M} disagrees with the source's {src.message_count} messages")
    return src


def _iid_message_probs(src: IidSymbolSource) -> np.ndarray:
    return np.exp2(src.symbol_counts() @ np.log2(src.probs))


def _cdf(p):
    c = np.cumsum(p)
    c[-1] = 1.0
    return c


def _default_cap(cfg, C, a_max):
    if cfg.max_symbols is not None:
        return int(cfg.max_symbols)
    if not C > 0:
        raise ConfigError("zero-capacity channel: set max_symbols explicitly")
    return int(math.ceil(MAX_SYMBOLS_FACTOR * (a_max + C) / C))


def _channel_setup(st: _Setup, ch):
    cfg = st.cfg
    if isinstance(ch, AwgnChannel):
        if cfg.scheme != "known":
            raise ConfigError("the Gaussian channel is supported by the known-channel scheme only")
        st.awgn = ch
        st.C = ch.capacity_bits
        return
    st.dmc = ch
    if cfg.codebook_prior is not None:
        from .channel import make_prior, mutual_information

        st.prior = make_prior(cfg.codebook_prior)
        if len(st.prior.probs) != ch.input_size:
            raise ConfigError("codebook_prior length differs from the channel input alphabet")
        st.C = mutual_information(ch, st.prior)
    else:
        res = capacity(ch)
        st.prior, st.C = res.optimal_prior, res.capacity_bits
    st.table = score_table(ch, st.prior)
    finite = st.table[np.isfinite(st.table)]
    st.zmax = float(finite.max()) if finite.size else 0.0
    st.prior_icdf = int_cdf(st.prior.cdf)
    st.fwd_icdf = int_cdf(ch.row_cdf)
    with np.errstate(divide="ignore"):
        st.log2_prior = np.log2(st.prior.probs)


def _build(cfg: ExperimentConfig) -> _Setup:
    st = _Setup(cfg)
    ch = channel_from_spec(cfg.channel)
    if cfg.scheme == "bec_repetition":
        if cfg.channel.get("type") != "bec":
            raise ConfigError("bec_repetition needs a 'bec' channel")
        st.extras["delta"] = float(cfg.channel["delta"])
        st.C = 1 - st.extras["delta"]
        st.max_symbols = int(cfg.max_symbols) if cfg.max_symbols is not None else 10_000
        return st
    _channel_setup(st, ch)
    eps = cfg.epsilon

    if cfg.scheme == "slepian_wolf":
        src = source_from_spec(cfg.source) if cfg.source is not None else None
        if not isinstance(src, CorrelatedPairSource):
            raise ConfigError("slepian_wolf needs a 'pair' or 'binary_pair' source")
        st.source = src
        with np.errstate(divide="ignore"):
            st.thresholds = -np.log2(src.first_marginal) - math.log2(eps / 2)
        st.message_cdf = _cdf(src.joint.ravel())
        st.message_count = src.joint.shape[0]
        cond = src.conditional
        with np.errstate(divide="ignore"):
            st.extras["thresholds2"] = -math.log2(eps / 2) - np.log2(cond)
        finite = np.concatenate([st.thresholds, st.extras["thresholds2"].ravel()])
        st.max_symbols = _default_cap(cfg, st.C, float(finite[np.isfinite(finite)].max()))
        return st

    src = _message_source(cfg)
    st.source = src
    if cfg.scheme == "complete_universal":
        if not isinstance(src, IidSymbolSource):
            raise ConfigError("complete_universal needs an 'iid' source")
        probs = _iid_message_probs(src)
        st.thresholds = -math.log2(eps) - universal_log_prob_from_counts(src.symbol_counts())
    elif isinstance(src, MessageSource):
        probs = src.probs
        if cfg.scheme == "joint_sc":
            st.thresholds = sq.make_thresholds_weighted(probs, eps).per_message_log_thresholds
        else:
            st.thresholds = sq.make_thresholds_equiprobable(src.message_count, eps).per_message_log_thresholds
    else:
        raise ConfigError(f"scheme {cfg.scheme!r} needs a single-message source")
    st.message_count = len(probs)
    st.message_cdf = _cdf(probs)
    if cfg.scheme in ("universal", "complete_universal"):
        if st.dmc is None:
            raise ConfigError("universal schemes need a discrete channel")
        st.zmax = float(np.max(-st.log2_prior[np.isfinite(st.log2_prior)]))
    st.max_symbols = _default_cap(cfg, st.C, float(st.thresholds.max()))
    return st


@lru_cache(maxsize=8)
def _setup_for(key: str) -> _Setup:
    return _build(ExperimentConfig(**json.loads(key)))


def _setup(cfg: ExperimentConfig) -> _Setup:
    return _setup_for(cfg.key())


# single trials -------------------------------------------------------------


def _draw(cdf, key) -> int:
    return int(np.searchsorted(cdf, _rng.KeyedStream(key).random(), side="right"))


def _decode(st: _Setup, cb: Codebook, w: int, thresholds, noise_key: int, buffers):
    """One sequential decode; returns (T, crossers, ys).  T > cap means truncation."""
    ys_i, ys_f, crossers = buffers
    keys = cb.message_keys()
    nk = np.uint64(noise_key)
    cap = st.max_symbols
    if st.awgn is not None:
        T, n = decode_known_awgn(keys, st.awgn.signal_power, st.awgn.noise_variance, w, nk, thresholds, cap, ys_f, crossers)
        return T, crossers[:n].copy(), ys_f
    if st.cfg.scheme in ("universal", "complete_universal"):
        T, n = decode_universal_dmc(
            keys, st.prior_icdf, st.log2_prior, w, nk, st.fwd_icdf, st.dmc.input_size, st.dmc.output_size,
            thresholds, st.zmax, cap, ys_i, crossers,
        )
    else:
        T, n = decode_known_dmc(keys, st.prior_icdf, w, nk, st.fwd_icdf, st.table, thresholds, st.zmax, cap, ys_i, crossers)
    return T, crossers[:n].copy(), ys_i


def _outcome(crossers, tie_key):
    """(w_hat, tie) from the crossing set at the stopping time."""
    if len(crossers) == 1:
        return int(crossers[0]), False
    tied = sq.Decision(sq.TIE, 0, None, tuple(int(c) for c in crossers))
    w_hat, _ = sq.resolve_tie(tied, _rng.KeyedStream(tie_key))
    return int(w_hat), True


def _latch(T: int, s: int) -> int:
    """Decisions reach the encoder only at multiples of the feedback period."""
    return -(-T // s) * s


def _replay_universal(st: _Setup, cb: Codebook, w: int, T: int, ys) -> bool:
    """Known-channel score of the true codeword stays under the regret-inflated threshold before T."""
    rc = redundancy_constants(st.dmc.input_size, st.dmc.output_size)
    a = float(st.thresholds[w])
    xs = codeword_block(cb, [w], 0, T)[0]
    z = st.table[xs, np.asarray(ys[:T])]
    cum = np.cumsum(z)
    t = np.arange(1, T + 1)
    slack = 1e-9 * (1 + abs(a))
    limit = a + rc.loose_coeff * np.log2(t) + rc.beta
    before_ok = bool(np.all(cum[:-1] <= limit[:-1] + slack))
    at_stop_ok = bool(cum[-1] <= limit[-1] + z[-1] + slack)
    return before_ok and at_stop_ok


def _buffers(st: _Setup):
    n = st.max_symbols
    return np.zeros(n, np.int64), np.zeros(n, np.float64), np.zeros(max(st.message_count, 1), np.int64)


def _single_stage_trial(st: _Setup, i: int, buffers) -> TrialRecord:
    cfg = st.cfg
    seed = cfg.seed
    w = _draw(st.message_cdf, _rng.derive_path(seed, i, _rng.ROLE_SOURCE))

    def decide():
        cb_seed = _rng.derive_path(seed, i, _rng.ROLE_CODEBOOK, cfg.codebook_seed)
        cb = Codebook(cb_seed, st.message_count, prior=st.prior) if st.awgn is None else Codebook(
            cb_seed, st.message_count, gaussian_power=st.awgn.signal_power
        )
        T, crossers, ys = _decode(st, cb, w, st.thresholds, _rng.derive_path(seed, i, _rng.ROLE_CHANNEL), buffers)
        return cb, T, crossers, ys

    wrapped = sq.randomize(lambda: sq.Decision(sq.CONTINUE), cfg.randomize_alpha,
                           _rng.KeyedStream(_rng.derive_path(seed, i, _rng.ROLE_RANDOMIZE)))
    if wrapped().kind == sq.ABORT:
        return TrialRecord(i, w, -1, 0, True, False, False, aborted=True)
    cb, T, crossers, ys = decide()
    T_s = _latch(T, cfg.feedback_period)
    if T > st.max_symbols or T_s > st.max_symbols:
        return TrialRecord(i, w, -1, st.max_symbols, True, False, True)
    w_hat, tie = _outcome(crossers, _rng.derive_path(seed, i, _rng.ROLE_TIE))
    replay = True
    if cfg.scheme in ("universal", "complete_universal"):
        replay = _replay_universal(st, cb, w, T, ys)
    return TrialRecord(i, w, w_hat, T_s, tie or w_hat != w, tie, False, replay_ok=replay)


def _slepian_wolf_trial(st: _Setup, i: int, buffers) -> TrialRecord:
    cfg = st.cfg
    seed = cfg.seed
    src = st.source
    m1, m2 = src.joint.shape
    w1, w2 = divmod(_draw(st.message_cdf, _rng.derive_path(seed, i, _rng.ROLE_SOURCE)), m2)
    w_flat = w1 * m2 + w2

    cb1 = Codebook(_rng.derive_path(seed, i, _rng.ROLE_CODEBOOK, cfg.codebook_seed), m1, prior=st.prior)
    T1, cr1, _ = _decode(st, cb1, w1, st.thresholds, _rng.derive_path(seed, i, _rng.ROLE_CHANNEL), buffers)
    if T1 > st.max_symbols:
        return TrialRecord(i, w_flat, -1, st.max_symbols, True, False, True, T1=st.max_symbols)
    w1_hat, tie1 = _outcome(cr1, _rng.derive_path(seed, i, _rng.ROLE_TIE))

    th2 = st.extras["thresholds2"][w1_hat]
    buf2 = (buffers[0], buffers[1], np.zeros(max(m2, 1), np.int64))
    cb2 = Codebook(_rng.derive_path(seed, i, _rng.ROLE_CODEBOOK_2, cfg.codebook_seed), m2, prior=st.prior)
    T2, cr2, _ = _decode(st, cb2, w2, th2, _rng.derive_path(seed, i, _rng.ROLE_CHANNEL_2), buf2)
    if T2 > st.max_symbols:
        return TrialRecord(i, w_flat, -1, T1 + st.max_symbols, True, tie1, True, T1=T1, T2=st.max_symbols)
    w2_hat, tie2 = _outcome(cr2, _rng.derive_path(seed, i, _rng.ROLE_TIE_2))
    w_hat = w1_hat * m2 + w2_hat
    tie = tie1 or tie2
    return TrialRecord(i, w_flat, w_hat, T1 + T2, tie or w_hat != w_flat, tie, False, T1=T1, T2=T2)


def _bec_trials(st: _Setup, indices) -> list[TrialRecord]:
    seed = st.cfg.seed
    keys = np.array([_rng.derive_path(seed, i, _rng.ROLE_CHANNEL) for i in indices], dtype=np.uint64)
    out = np.zeros(len(indices), np.int64)
    bec_repetition(keys, st.extras["delta"], st.max_symbols, out)
    recs = []
    for i, t in zip(indices, out):
        t = int(t)
        if t > st.max_symbols:
            recs.append(TrialRecord(i, 0, -1, st.max_symbols, True, False, True))
        else:
            recs.append(TrialRecord(i, 0, 0, t, False, False, False))
    return recs


def _run_indices(cfg: ExperimentConfig, indices) -> list[TrialRecord]:
    st = _setup(cfg)
    indices = list(indices)
    if cfg.scheme == "bec_repetition":
        return _bec_trials(st, indices)
    buffers = _buffers(st)
    one = _slepian_wolf_trial if cfg.scheme == "slepian_wolf" else _single_stage_trial
    return [one(st, i, buffers) for i in indices]


def run_trial(cfg: ExperimentConfig, trial_index: int) -> TrialRecord:
    """One complete trial, deterministic in (config, seed, trial_index)."""
    if not 0 <= trial_index:
        raise ConfigError("trial index must be nonnegative")
    return _run_indices(cfg, [trial_index])[0]


def _worker(args):
    cfg_dict, lo, hi = args
    return _run_indices(ExperimentConfig(**cfg_dict), range(lo, hi))


def run_trials(cfg: ExperimentConfig) -> list[TrialRecord]:
    """All trial records in index order, spread over ``cfg.worker_count`` processes."""
    n, k = cfg.trials, min(cfg.worker_count, cfg.trials)
    if k == 1:
        return _run_indices(cfg, range(n))
    bounds_ = [n * j // k for j in range(k + 1)]
    chunks = [(cfg.to_dict(), bounds_[j], bounds_[j + 1]) for j in range(k)]
    with ProcessPoolExecutor(max_workers=k) as pool:
        parts = list(pool.map(_worker, chunks))
    return [r for part in parts for r in part]


# reports -----------------------------------------------------------------


def _safe(fn, *args):
    try:
        return fn(*args)
    except DomainError:
        return None


def _attach_bounds(st: _Setup) -> tuple[dict, dict]:
    cfg = st.cfg
    C, eps = st.C, cfg.epsilon
    out, extras = {"capacity": C}, {}
    s = cfg.feedback_period
    if cfg.scheme == "bec_repetition":
        out["expected_transmissions"] = 1 / (1 - st.extras["delta"])
        return out, extras
    if cfg.scheme == "slepian_wolf":
        h1, h21, hj = conditional_entropy(st.source)
        r1, r2, rs = _safe(bnd.slepian_wolf_rates, h1, h21, eps) or (None, None, None)
        out.update(H1=h1, H2_given_1=h21, H_joint=hj, R1_bound=r1, R2_bound=r2, sum_rate_bound=rs)
        return out, extras
    M = st.message_count
    a = float(np.max(st.thresholds))
    out["threshold_bits"] = a
    if cfg.scheme in ("known", "universal"):
        out["rate_known"] = _safe(bnd.rate_known, C, M, eps)
        out["wald_time_bound"] = _safe(bnd.wald_time_bound, C, a)
        out["converse_rate"] = _safe(bnd.converse_rate, C, M, eps)
        if s > 1:
            out["rate_limited_feedback"] = _safe(bnd.rate_limited_feedback, C, M, eps, s)
        if cfg.randomize_alpha > 0 and out["rate_known"] is not None:
            out["randomized_rate"], out["randomized_error"] = bnd.randomized_decoder_transform(out["rate_known"], eps, cfg.randomize_alpha)
    if cfg.scheme == "universal":
        x, y = st.dmc.input_size, st.dmc.output_size
        out["rate_universal"] = _safe(bnd.rate_universal, C, M, eps, x, y)
        out["universal_time_bound"] = _safe(bnd.universal_time_bound, C, M, eps, x, y)
    if cfg.scheme in ("joint_sc", "complete_universal"):
        H = st.source.entropy_bits
        out["entropy_bits"] = H
        out["per_bit_entropy"] = st.source.per_bit_entropy
        out["joint_sc_converse_rate"] = _safe(bnd.joint_sc_converse_rate, C, M, eps, H)
    if cfg.scheme == "joint_sc":
        out["joint_sc_expected_time"] = _safe(bnd.joint_sc_expected_time, H, C, eps)
        out["joint_sc_rate"] = _safe(bnd.joint_sc_rate, C, st.source.per_bit_entropy, math.log2(M), eps)
    if cfg.scheme == "complete_universal":
        src = st.source
        out["rate_complete_universal"] = _safe(
            bnd.rate_complete_universal, C, M, eps, st.dmc.input_size, st.dmc.output_size,
            src.per_bit_entropy, src.alphabet_size, src.block_len,
        )
        extras["report_band"] = [out["rate_complete_universal"], out["joint_sc_converse_rate"]]
    return out, extras


def summarize(cfg: ExperimentConfig, records: list[TrialRecord]) -> Report:
    """Aggregate trial records (in index order) into a Report."""
    st = _setup(cfg)
    n = len(records)
    errors = sum(r.error for r in records)
    mean_T, ci_T = mean_interval(r.T for r in records)
    bounds_, extras = _attach_bounds(st)
    if cfg.scheme == "slepian_wolf":
        r1, ci1 = mean_interval(r.T1 for r in records)
        r2, ci2 = mean_interval(r.T2 for r in records)
        extras.update(R1=r1, R1_ci=ci1, R2=r2, R2_ci=ci2)
        rate, rate_ci = mean_T, ci_T
    elif cfg.scheme == "bec_repetition":
        rate = 1 / mean_T
        rate_ci = None if ci_T is None else ci_T / mean_T**2
    else:
        K = math.log2(st.message_count)
        rate = K / mean_T if mean_T > 0 else None
        rate_ci = None if (ci_T is None or rate is None) else K * ci_T / mean_T**2
    if cfg.scheme in ("universal", "complete_universal"):
        extras["replay_violations"] = sum(not r.replay_ok for r in records if not r.truncated and not r.aborted)
    extras["max_symbols"] = st.max_symbols
    cfg_dict = cfg.to_dict()
    del cfg_dict["worker_count"]
    return Report(
        scheme=cfg.scheme,
        trials=n,
        errors=errors,
        error_rate=errors / n,
        error_ci=wilson_interval(errors, n),
        mean_T=mean_T,
        mean_T_ci=ci_T,
        rate=rate,
        rate_ci=rate_ci,
        ties=sum(r.tie for r in records),
        truncations=sum(r.truncated for r in records),
        aborted=sum(r.aborted for r in records),
        bounds=bounds_,
        extras=extras,
        config=cfg_dict,
    )


def run_experiment(cfg: ExperimentConfig, records_out: list | None = None) -> Report:
    records = run_trials(cfg)
    if records_out is not None:
        records_out.extend(records)
    return summarize(cfg, records)


def run_slepian_wolf(cfg: ExperimentConfig, records_out: list | None = None) -> Report:
    if cfg.scheme != "slepian_wolf":
        raise ConfigError("run_slepian_wolf needs scheme 'slepian_wolf'")
    return run_experiment(cfg, records_out)


def trials_csv(records) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(TrialRecord.CSV_COLUMNS)
    for r in records:
        wr.writerow([r.trial, r.w, r.w_hat, r.T, int(r.error), int(r.tie), int(r.truncated)])
    return buf.getvalue()


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON ({e})") from None
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    return ExperimentConfig.from_dict(data)


# martingale audit --------------------------------------------------------


@dataclass(frozen=True)
class AuditResult:
    construction: str
    samples: int
    horizon: int
    log2_A: float
    mean: float
    ci_half: float
    crossing_fraction: float
    crossing_bound: float

    @property
    def mean_ok(self) -> bool:
        return abs(self.mean - 1.0) <= self.ci_half

    @property
    def crossing_ok(self) -> bool:
        return self.crossing_fraction <= self.crossing_bound


def martingale_audit(cfg: ExperimentConfig, horizon: int = 200, samples: int = 100_000,
                     log2_A: float = 10.0) -> dict[str, AuditResult]:
    """Monte Carlo mean of the stopped likelihood-ratio products for independent codeword/output streams.

    Both constructions are run: the known backward channel (``"known"``) and
    the Jeffreys mixture (``"universal"``).  The product stops updating once
    it exceeds A = 2**log2_A; its expectation is exactly 1 at every horizon.
    The mean is reported with a 99% normal interval and the crossing fraction
    against 1/A + 3 sigma.
    """
    if horizon < 1:
        raise ConfigError("horizon must be at least 1")
    if samples < 2:
        raise ConfigError("need at least two samples")
    st = _Setup(cfg)
    ch = channel_from_spec(cfg.channel)
    if isinstance(ch, AwgnChannel):
        raise ConfigError("the audit needs a discrete channel")
    _channel_setup(st, ch)
    seed = cfg.seed
    idx = np.arange(samples, dtype=np.uint64)
    base = _rng.derive_path(seed, 0xA0D17)
    keys = {role: _rng.derive_np_keys(_rng.derive_np(base, idx), role)
            for role in (_rng.ROLE_CODEBOOK, _rng.ROLE_SOURCE, _rng.ROLE_CHANNEL)}
    p = 2.0**-log2_A
    bound = p + 3 * math.sqrt(p * (1 - p) / samples)
    out = {}
    for name, universal in (("known", False), ("universal", True)):
        logs = np.zeros(samples)
        audit_log_products(
            keys[_rng.ROLE_CODEBOOK], keys[_rng.ROLE_SOURCE], keys[_rng.ROLE_CHANNEL], st.prior_icdf, st.fwd_icdf,
            st.table, st.log2_prior, ch.input_size, ch.output_size, universal, horizon, log2_A, logs,
        )
        vals = np.exp2(logs)
        mean, half = mean_interval(vals.tolist(), Z99)
        out[name] = AuditResult(name, samples, horizon, log2_A, mean, half,
                                float(np.count_nonzero(logs > log2_A)) / samples, bound)
    return out


__all__ = [
    "SCHEMES", "DEFAULT_SEED", "ExperimentConfig", "TrialRecord", "Report", "AuditResult",
    "wilson_interval", "mean_interval", "run_trial", "run_trials", "run_experiment", "run_slepian_wolf",
    "summarize", "trials_csv", "load_config", "martingale_audit", "RatelessError",
]
