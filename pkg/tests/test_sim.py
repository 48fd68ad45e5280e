import csv
import io
import math

import numpy as np
import pytest

from rateless import bounds as b
from rateless.errors import ConfigError
from rateless.mixture import redundancy_bound
from rateless.sim import (
    ExperimentConfig,
    Report,
    mean_interval,
    martingale_audit,
    run_experiment,
    run_trial,
    run_trials,
    summarize,
    trials_csv,
    wilson_interval,
)

BSC11 = {"type": "bsc", "p": 0.11}
NOISELESS = {"type": "noiseless", "size": 2}


def cfg(**kw):
    return ExperimentConfig.from_dict(kw)


def run(**kw):
    recs = []
    return run_experiment(cfg(**kw), recs), recs


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.04
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - 0.5 == pytest.approx(0.5 - lo)
    with pytest.raises(ValueError):
        wilson_interval(1, 0)


def test_mean_interval():
    m, h = mean_interval([1.0, 2.0, 3.0])
    assert m == 2 and h == pytest.approx(1.959963984540054 / math.sqrt(3))
    assert mean_interval([4.0]) == (4.0, None)


def test_config_validation():
    with pytest.raises(ConfigError):
        cfg(scheme="nope", channel=BSC11, M=4)
    with pytest.raises(ConfigError):
        cfg(scheme="known", channel=BSC11, M=4, epsilon=1.5)
    with pytest.raises(ConfigError):
        cfg(scheme="known", channel=BSC11, M=4, bogus=1)
    with pytest.raises(ConfigError):
        cfg(scheme="known", channel=BSC11, M=4, feedback_period=0)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"channel": BSC11})
    with pytest.raises(ConfigError):
        run(scheme="known", channel={"type": "bsc", "p": 0.5}, M=4)  # zero capacity needs a cap
    with pytest.raises(ConfigError):
        run(scheme="known", channel=BSC11)  # neither M nor a source


def test_single_trial_matches_batch():
    c = cfg(scheme="known", channel=BSC11, M=64, trials=20)
    recs = run_trials(c)
    assert [run_trial(c, i) for i in (0, 7, 19)] == [recs[0], recs[7], recs[19]]


def test_determinism_and_worker_invariance():
    base = dict(scheme="universal", channel=BSC11, M=32, trials=60, seed=5)
    r1, recs1 = run(**base)
    r2, recs2 = run(**base, worker_count=3)
    assert recs1 == recs2
    assert r1.to_json() == r2.to_json()
    r3, recs3 = run(**{**base, "seed": 6})
    assert recs3 != recs1


def test_noiseless_channel_stops_at_threshold():
    # threshold log2 32 + 1 = 6 bits, one bit of evidence per symbol
    r, recs = run(scheme="known", channel=NOISELESS, M=32, epsilon=0.5, trials=300)
    assert {x.T for x in recs} == {6}
    assert all(x.w_hat == x.w for x in recs if not x.tie)
    assert all(x.error == (x.tie or x.w_hat != x.w) for x in recs)
    assert r.error_upper >= r.error_rate


def test_useless_channel_truncates():
    r, recs = run(scheme="known", channel={"type": "bsc", "p": 0.5}, M=16, trials=40, max_symbols=100)
    assert r.truncations == 40 and r.errors == 40
    assert all(x.T == 100 and x.w_hat == -1 for x in recs)


def test_bec_repetition_mean_time():
    r, _ = run(scheme="bec_repetition", channel={"type": "bec", "delta": 0.5}, trials=20000)
    assert r.mean_T == pytest.approx(2.0, abs=0.03)
    assert r.errors == 0


def test_known_bsc_example():
    r, _ = run(scheme="known", channel=BSC11, M=2**10, epsilon=2.0**-6, trials=2000)
    assert r.error_upper <= 2.0**-6
    assert r.mean_T <= r.bounds["wald_time_bound"] + r.mean_T_ci
    assert r.rate >= r.bounds["rate_known"]
    assert r.bounds["converse_rate"] > r.rate


def test_randomized_wrapper():
    plain, _ = run(scheme="known", channel=BSC11, M=16, trials=400)
    wrapped, recs = run(scheme="known", channel=BSC11, M=16, trials=400, randomize_alpha=0.3)
    aborted = [x for x in recs if x.aborted]
    assert wrapped.aborted == len(aborted) and all(x.T == 0 and x.error for x in aborted)
    assert abs(len(aborted) / 400 - 0.3) < 0.07
    assert wrapped.mean_T < plain.mean_T


def test_limited_feedback_latches_to_period():
    r, recs = run(scheme="known", channel=BSC11, M=16, trials=100, feedback_period=4)
    assert all(x.T % 4 == 0 for x in recs)


def test_universal_replay_and_time():
    r, recs = run(scheme="universal", channel=BSC11, M=64, trials=300)
    assert r.extras["replay_violations"] == 0
    assert all(x.replay_ok for x in recs)
    known, _ = run(scheme="known", channel=BSC11, M=64, trials=300)
    assert r.mean_T > known.mean_T


def test_universal_time_close_to_known_per_trial():
    C = 1.0
    _, known = run(scheme="known", channel=NOISELESS, M=2, trials=200)
    _, univ = run(scheme="universal", channel=NOISELESS, M=2, trials=200)
    for k, u in zip(known, univ):
        assert u.T <= k.T + redundancy_bound(u.T, 2, 2) / C


def test_slepian_wolf_identical_messages():
    joint = (np.eye(4) / 4).tolist()
    r, recs = run(scheme="slepian_wolf", channel=NOISELESS, source={"type": "pair", "joint": joint},
                  epsilon=0.25, trials=1000)
    assert r.error_upper <= 0.25
    assert r.extras["R1"] <= 2 - math.log2(0.125) + 1
    # a wrong first-stage decision leaves no admissible second message; the bound applies given a correct first stage
    good = [x.T2 for x in recs if not x.truncated and x.w_hat // 4 == x.w // 4]
    m, h = mean_interval(good)
    assert m - h <= 4


def test_slepian_wolf_independent_pair_sum():
    joint = (np.ones((4, 4)) / 16).tolist()
    r, _ = run(scheme="slepian_wolf", channel=NOISELESS, source={"type": "pair", "joint": joint},
               epsilon=0.25, trials=500)
    _, _, total = b.slepian_wolf_rates(2, 2, 0.25)
    assert r.extras["R1"] + r.extras["R2"] <= total
    assert r.rate == pytest.approx(r.extras["R1"] + r.extras["R2"])


def test_joint_source_channel_weighted_thresholds():
    r, _ = run(scheme="joint_sc", channel=NOISELESS, source={"type": "zipf", "M": 256}, epsilon=2.0**-4,
               trials=1000)
    assert r.error_upper <= 2.0**-4 + 0.01
    assert r.bounds["joint_sc_expected_time"] >= r.mean_T - r.mean_T_ci


def test_complete_universal_band():
    r, _ = run(scheme="complete_universal", channel=BSC11, source={"type": "iid", "gamma": [0.2, 0.8], "L": 8},
               epsilon=2.0**-3, trials=300)
    lo, hi = r.extras["report_band"]
    assert lo <= hi
    assert r.extras["replay_violations"] == 0


def test_martingale_audit_horizon_one():
    out = martingale_audit(cfg(scheme="known", channel=BSC11, M=4), horizon=1, samples=20000)
    assert set(out) == {"known", "universal"}
    for res in out.values():
        assert res.mean_ok and res.crossing_ok
    with pytest.raises(ConfigError):
        martingale_audit(cfg(scheme="known", channel=BSC11, M=4), horizon=0)


def test_trials_csv_columns():
    _, recs = run(scheme="known", channel=BSC11, M=8, trials=5)
    rows = list(csv.reader(io.StringIO(trials_csv(recs))))
    assert rows[0] == ["trial", "w", "w_hat", "T", "error", "tie", "truncated"]
    assert len(rows) == 6 and rows[1][0] == "0"


def test_report_json_roundtrip():
    r, recs = run(scheme="known", channel=BSC11, M=8, trials=30)
    d = r.to_dict()
    assert "worker_count" not in d["config"]
    assert d["trials"] == 30 and len(d["error_ci"]) == 2
    assert summarize(cfg(scheme="known", channel=BSC11, M=8, trials=30), recs).to_json() == r.to_json()
    assert isinstance(r, Report)
