import math

import pytest

import histent


def test_version():
    assert histent.__version__ == "0.1.0"


def test_urn_probability_against_one_step_rule():
    # From n0 = 2 of 2 balls, one move always leaves 1 ball in A.
    assert histent.urn_exact_prob(1, 1, 2, 1) == pytest.approx(1.0, abs=1e-12)
    assert histent.urn_coefficients(2, 0) == [1, 0, -2, 0, 1]


def test_entropy_functional():
    assert histent.entropy_functional([0.25] * 4) == pytest.approx(2.0)
    with pytest.raises(histent.InvariantViolation):
        histent.entropy_functional([1.5, -0.5])


def test_exact_random_walk_anchor():
    report = histent.exact_entropy({"model": "rw", "V": 16, "N": 8}, {"dx": 1, "dt": 1})
    assert report["units"] == "bits"
    assert report["S_hs"] == pytest.approx(8.0, abs=1e-9)
    assert report["D_LP"] == pytest.approx(24.0, abs=1e-9)
    assert report["S_sbs"] == pytest.approx(8.0, abs=1e-9)


def test_monte_carlo_close_to_exact():
    model = {"model": "rw", "V": 8, "N": 4}
    graining = {"dx": 2, "dt": 1}
    exact = histent.exact_entropy(model, graining)["S_hs"]
    mc = histent.mc_entropy(model, graining, count=50000, seed=3, resamples=50)
    assert mc["S_hs"] == pytest.approx(exact, abs=0.03)
    assert mc["ci_lo"] <= mc["ci_hi"]


def test_sweep_is_worker_invariant():
    model = {"model": "rw", "V": 32, "N": 16}
    a = histent.sweep(model, dx=[1, 4, 32], dt=[1, 4, 16], count=3000, seed=2, workers=1)
    b = histent.sweep(model, dx=[1, 4, 32], dt=[1, 4, 16], count=3000, seed=2, workers=4)
    assert a["rows"] == b["rows"]
    assert len(a["rows"]) == 9


def test_urn_curves_ordering():
    curves = histent.urn_curves(t1=range(0, 10))
    by_key = {(r["k"], r["t1"]): r["S_hs_bits"] for r in curves["rows"]}
    for t in range(10):
        assert by_key[(1, t)] >= by_key[(2, t)] >= by_key[(3, t)]
    assert by_key[(1, 0)] == pytest.approx(60.0)


def test_maxent_inequalities():
    report = histent.maxent_report({"model": "random", "V": 4, "N": 3, "kernel_seed": 5}, {"dx": 2, "dt": 1})
    assert report["S_ic"] <= report["S_dc"] + 1e-6
    assert report["S_dc"] <= report["S_hs"] + 1e-6


def test_config_errors_name_the_key():
    with pytest.raises(histent.ConfigError, match="model.speed"):
        histent.exact_entropy({"model": "rw", "speed": 3})
    assert histent.run_cli("sweep", "--bogus") == 2


def test_cli_check_runs():
    assert histent.run_cli("check", "--workers", "2") == 0
    assert not math.isnan(histent.urn_exact_prob(3, 5, 4, 3))
