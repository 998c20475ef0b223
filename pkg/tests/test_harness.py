import math

import numpy as np
import pytest

from oamlink.config import golden_configs, load, validate, with_overrides
from oamlink.harness import ScenarioError, run_scenario
from oamlink.report import emit_json


def analytic(name):
    return run_scenario(with_overrides(load(golden_configs()[name]), mode="analytic"), timestamp=False)


class TestAnalyticScenarios:
    def test_noiseless_qubits(self):
        r = analytic("qubit-tomography")
        for label in "RLHD":
            assert r.metric(f"fidelity:{label}").value == pytest.approx(1.0, abs=1e-6)
            assert r.metric(f"fidelity:{label}").sigma == 0.0

    def test_werner_qubit_fidelity_net(self):
        # net counts are exactly the Werner state's, so F = (1 + V)/2
        r = analytic("qubit-tomography-lab")
        for label, v in zip("RLHD", (0.945, 0.95, 0.934, 0.872)):
            assert r.metric(f"fidelity:{label}", "net").value == pytest.approx((1 + v) / 2, abs=1e-6)

    def test_hybrid_tomography_net(self):
        r = analytic("hybrid-tomography")
        assert r.metric("fidelity", "net").value == pytest.approx((1 + 3 * 0.8147) / 4, abs=1e-5)

    def test_fringe_visibilities(self):
        r = analytic("hybrid-fringes")
        assert r.metric("visibility:d", "net").value == pytest.approx(0.972, abs=1e-9)
        assert r.metric("visibility:r", "net").value == pytest.approx(0.907, abs=1e-9)

    def test_raw_visibility_from_accidentals(self):
        # raw fringe: (V B)/(B + A) with B the mean signal and A the accidentals
        cfg = load(golden_configs()["hybrid-fringes"])
        r = analytic("hybrid-fringes")
        b = cfg.options["pair_rate"] * cfg.options["duration"] / 4
        acc = 1515 * 1e4 * 1.6e-9 * cfg.options["duration"]
        assert r.metric("visibility:d").value == pytest.approx(0.972 * b / (b + acc), abs=1e-9)

    def test_chsh(self):
        r = analytic("oam-chsh")
        assert r.metric("S").value == pytest.approx(-2 * math.sqrt(2) * 0.845, abs=1e-12)

    def test_tables(self):
        r = analytic("oam-chsh")
        assert len(r.tables["chsh"]["rows"]) == 16
        assert r.tables["metrics"]["columns"] == ["metric", "raw_value", "raw_sigma", "net_value", "net_sigma"]

    def test_efficiency_budget(self):
        r = analytic("efficiency-budget")
        assert r.metric("conversion_efficiency").value == pytest.approx(0.01)
        assert "net" not in r.metrics["signal_efficiency"]


class TestSampled:
    def test_records_and_sigmas(self):
        r = run_scenario(load(golden_configs()["oam-chsh"]), timestamp=False)
        assert all(rec["sampled"] is not None for rec in r.records)
        assert r.metric("abs_S").sigma > 0
        assert r.metric("abs_S").resamples == r.config.get("resamples", 200)

    def test_net_at_least_raw(self):
        r = run_scenario(load(golden_configs()["qubit-tomography-lab"]), timestamp=False)
        for label in "RLHD":
            assert r.metric(f"fidelity:{label}", "net").value >= r.metric(f"fidelity:{label}").value

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["oam-chsh", "oam-fringes", "hybrid-witness-lab"])
    def test_sampled_means_match_analytic(self, name):
        cfg = load(golden_configs()[name])
        exact = analytic(name)
        runs = [run_scenario(with_overrides(cfg, seed=s), timestamp=False) for s in range(20)]
        for metric, pair in exact.metrics.items():
            for kind, target in pair.items():
                values = np.array([r.metric(metric, kind).value for r in runs])
                sigma = np.mean([r.metric(metric, kind).sigma for r in runs])
                # mean of 20 seeds within 3 standard errors of the analytic value
                assert abs(values.mean() - target.value) < 3 * sigma / math.sqrt(20), (metric, kind)
                # bootstrap sigma tracks the seed-to-seed spread
                assert 0.6 < values.std(ddof=1) / sigma < 1.6, (metric, kind)

    def test_seed_changes_output(self):
        cfg = load(golden_configs()["oam-chsh"])
        a = run_scenario(with_overrides(cfg, seed=1), timestamp=False)
        b = run_scenario(with_overrides(cfg, seed=2), timestamp=False)
        assert a.metric("S").value != b.metric("S").value

    @pytest.mark.parametrize("name", sorted(golden_configs()))
    def test_reproducible(self, name):
        cfg = load(golden_configs()[name])
        a, b = run_scenario(cfg), run_scenario(cfg)
        a.generated_at = b.generated_at = ""
        assert emit_json(a) == emit_json(b)


def test_failure_wraps_scenario():
    cfg = validate({"scenario": "oam-chsh", "mode": "analytic", "pair_rate": 1e-300, "duration": 1e-300})
    with pytest.raises(ScenarioError, match="oam-chsh"):
        run_scenario(cfg)
