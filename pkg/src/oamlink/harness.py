"""End-to-end scenario runs: prepare, convert, measure, reconstruct, analyse.

Every run is a pure function of its config. Coincidence records draw from
consecutive sub-streams of the run seed in the order they are created;
each bootstrap gets its own seed derived from ``(run seed, metric index)``.
In analytic mode nothing is sampled: raw counts are the exact means
(signal plus accidentals), net counts the signal means, and every sigma is 0.
"""

from __future__ import annotations

import itertools
from datetime import datetime, timezone

import numpy as np

from .config import ExperimentConfig
from .conversion import (
    IDLER_CHAIN,
    LASER_CONVERSION_EFFICIENCY,
    SIGNAL_CHAIN,
    SOURCE_WINDOWS,
    SfgParams,
    apply_conversion,
    conversion_efficiency,
    efficiency_budget,
    spectral_acceptance,
)
from .errors import ConvergenceError, ResamplingError, ValidationError
from .measurement import MeasurementSetting, describe_spec, measure
from .metrics import MetricWithError, chsh_S, fit_fringe, FringeScan, poisson_error, witness
from .quantum import Ket, density_from_ket, fidelity
from .report import ResultsReport
from .states import basis_state, bell_state, make_qubit, mode_capacity
from .tomography import (
    OAM_SIDE,
    POL_SIDE,
    QUBIT_BASIS,
    TomographyCounts,
    qubit_mle_fit,
    two_qubit_mle_fit,
)

RECORD_COLUMNS = ("expected", "sampled", "accidental", "duration_s")


class ScenarioError(RuntimeError):
    """A module failed while running a scenario."""

    def __init__(self, scenario, cause):
        super().__init__(f"scenario {scenario!r} failed: {cause}")
        self.scenario = scenario


class _Run:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.opts = cfg.options
        self.report = ResultsReport(cfg.scenario, cfg.mode, cfg.seed, dict(cfg.raw))
        self.next_stream = 0
        self.n_metrics = 0

    def noise_for(self, group):
        return self.opts["noise_overrides"].get(group, self.opts["noise"])

    def measure(self, group, settings, rho):
        _, success = apply_conversion(rho, self.opts["conversion_eta"])
        records = measure(
            settings,
            rho,
            self.noise_for(group),
            self.opts["pair_rate"] * success,
            self.opts["duration"],
            seed=self.cfg.seed if self.cfg.sampled else None,
            first_index=self.next_stream,
        )
        self.next_stream += len(records)
        for rec in records:
            s = rec.setting
            self.report.records.append({
                "group": group,
                "setting": s.label() if isinstance(s, MeasurementSetting) else describe_spec(s),
                "duration_s": rec.duration,
                "expected": rec.expected,
                "sampled": rec.sampled,
                "accidental": rec.accidental,
                "raw": rec.raw,
                "net": rec.net,
                "clamped": rec.clamped,
            })
        return records

    def add_metric(self, name, fn, records, net_fn=None):
        """Evaluate ``fn`` on raw and background-subtracted counts, with bootstrap errors.

        ``net_fn`` replaces ``fn`` for the subtracted counts when given.
        """
        net_fn = net_fn or fn
        raw = np.array([r.raw for r in records])
        acc = np.array([r.accidental for r in records])
        subtract = lambda x: np.maximum(x - acc, 0.0)  # noqa: E731
        k = self.n_metrics
        self.n_metrics += 1
        if not self.cfg.sampled:
            pair = {"raw": MetricWithError(float(fn(raw)), 0.0, 0), "net": MetricWithError(float(net_fn(subtract(raw))), 0.0, 0)}
        else:
            seeds = np.random.SeedSequence([self.cfg.seed, 1, k]).generate_state(2)
            pair = {
                "raw": poisson_error(fn, raw, self.cfg.resamples, int(seeds[0])),
                "net": poisson_error(net_fn, raw, self.cfg.resamples, int(seeds[1]), transform=subtract),
            }
        self.report.metrics[name] = pair
        return pair

    def add_exact(self, name, value):
        self.report.metrics[name] = {"raw": MetricWithError(float(value), 0.0, 0)}

    def add_table(self, name, columns, rows):
        self.report.tables[name] = {"columns": list(columns), "rows": [list(r) for r in rows]}

    def record_rows(self, records, key):
        return [[*key(r), r.expected, r.sampled, r.accidental, r.duration] for r in records]

    def finish(self):
        rows = []
        for name, pair in self.report.metrics.items():
            raw = pair["raw"]
            net = pair.get("net")
            rows.append([name, raw.value, raw.sigma, net.value if net else None, net.sigma if net else None])
        self.add_table("metrics", ("metric", "raw_value", "raw_sigma", "net_value", "net_sigma"), rows)
        return self.report


def _qubit_ket(spec) -> Ket:
    return basis_state(spec) if isinstance(spec, str) else make_qubit(spec)


def _run_qubit_tomography(run: _Run):
    table = []
    count_rows = []
    for label, spec in run.opts["states"]:
        target = _qubit_ket(spec)
        records = run.measure(label, QUBIT_BASIS, density_from_ket(target))
        fits = {}
        for kind in ("raw", "net"):
            counts = [getattr(r, kind) for r in records]
            fits[kind] = qubit_mle_fit(TomographyCounts.qubit(counts), seed=run.cfg.seed)

        def fid(counts, x0):
            rho = qubit_mle_fit(TomographyCounts.qubit(counts), starts=1, x0=x0).rho
            return fidelity(rho, target)

        # resamples warm-start from the point estimate of the matching kind
        pair = run.add_metric(
            f"fidelity:{label}",
            lambda c: fid(c, fits["raw"].params),
            records,
            net_fn=lambda c: fid(c, fits["net"].params),
        )
        raw_metric, net_metric = pair["raw"], pair["net"]
        run.report.density_matrices[label] = {"raw": fits["raw"].rho, "net": fits["net"].rho}
        table.append([label, raw_metric.value, raw_metric.sigma, net_metric.value, net_metric.sigma])
        count_rows += run.record_rows(records, lambda r: (label, r.setting))
    run.add_table("fidelity_table", ("state", "raw_fidelity", "raw_sigma", "net_fidelity", "net_sigma"), table)
    run.add_table("tomography_counts", ("group", "basis", *RECORD_COLUMNS), count_rows)


def _fringe_group(run: _Run, group, settings, angles, rho):
    records = run.measure(group, settings, rho)
    duration = run.opts["duration"]
    vis = lambda c: fit_fringe(FringeScan(tuple(angles), tuple(c), duration)).visibility  # noqa: E731
    run.add_metric(f"visibility:{group}", vis, records)
    run.add_table(f"fringe_{group}", ("theta_rad", *RECORD_COLUMNS), run.record_rows(records, lambda r: (r.setting.side_b["theta"],)))
    return records


def _run_hybrid_fringes(run: _Run):
    (_, kind), = run.opts["states"]
    rho = density_from_ket(bell_state(kind))
    angles = run.opts["angles"]
    per_basis = []
    for basis in run.opts["idler_bases"]:
        settings = [MeasurementSetting(basis, {"theta": th}) for th in angles]
        per_basis.append(_fringe_group(run, basis, settings, angles, rho))
    return per_basis


def _run_hybrid_witness(run: _Run):
    first, second = _run_hybrid_fringes(run)
    angles = tuple(run.opts["angles"])
    n = len(angles)
    duration = run.opts["duration"]

    def w(c):
        v1 = fit_fringe(FringeScan(angles, tuple(c[:n]), duration)).visibility
        v2 = fit_fringe(FringeScan(angles, tuple(c[n:]), duration)).visibility
        return witness(v1, v2)

    run.add_metric("witness", w, first + second)


def _run_hybrid_tomography(run: _Run):
    (_, kind), = run.opts["states"]
    target = bell_state(kind)
    # measured OAM-major over {R,L,H,D} x {h,v,d,r}; each setting keeps the
    # polarization projector on side a to match the (hR, hL, vR, vL) ordering
    settings = tuple(MeasurementSetting(p, o) for o, p in itertools.product(OAM_SIDE, POL_SIDE))
    records = run.measure(kind, settings, density_from_ket(target))
    fits = {}
    for k in ("raw", "net"):
        counts = [getattr(r, k) for r in records]
        fits[k] = two_qubit_mle_fit(TomographyCounts(settings, counts), seed=run.cfg.seed)

    def fid(counts, x0):
        rho = two_qubit_mle_fit(TomographyCounts(settings, counts), starts=1, x0=x0).rho
        return fidelity(rho, target)

    run.add_metric(
        "fidelity",
        lambda c: fid(c, fits["raw"].params),
        records,
        net_fn=lambda c: fid(c, fits["net"].params),
    )
    run.report.density_matrices[kind] = {"raw": fits["raw"].rho, "net": fits["net"].rho}
    run.add_table(
        "tomography_counts",
        ("group", "basis", *RECORD_COLUMNS),
        run.record_rows(records, lambda r: (kind, r.setting.label())),
    )


def _run_oam_fringes(run: _Run):
    (_, kind), = run.opts["states"]
    rho = density_from_ket(bell_state(kind))
    angles = run.opts["angles"]
    for k, a in enumerate(run.opts["a_angles"]):
        settings = [MeasurementSetting({"theta": a}, {"theta": th}) for th in angles]
        _fringe_group(run, f"a{k}", settings, angles, rho)


def _run_oam_chsh(run: _Run):
    (_, kind), = run.opts["states"]
    s = run.opts["chsh"]
    records = run.measure(kind, s.settings(), density_from_ket(bell_state(kind)))
    run.add_metric("S", lambda c: chsh_S(s, counts=c).S, records)
    run.add_metric("abs_S", lambda c: chsh_S(s, counts=c).abs_S, records)
    for k, (a, b) in enumerate(s.pairs()):
        run.add_metric(f"E:{a:.6g},{b:.6g}", lambda c, k=k: chsh_S(s, counts=c).correlations[k], records)
    run.add_table(
        "chsh",
        ("theta_a", "theta_b", *RECORD_COLUMNS),
        run.record_rows(records, lambda r: (r.setting.side_a["theta"], r.setting.side_b["theta"])),
    )


def _run_efficiency_budget(run: _Run):
    signal = run.opts.get("signal_chain", SIGNAL_CHAIN)
    idler = run.opts.get("idler_chain", IDLER_CHAIN)
    windows = run.opts.get("spectral", SOURCE_WINDOWS)
    run.add_exact("signal_efficiency", efficiency_budget(signal))
    run.add_exact("idler_efficiency", efficiency_budget(idler))
    acceptance = spectral_acceptance(windows)
    run.add_exact("spectral_acceptance", acceptance)
    run.add_exact("single_photon_conversion", LASER_CONVERSION_EFFICIENCY * acceptance)
    if run.opts.get("xi_t") is not None:
        run.add_exact("conversion_efficiency", conversion_efficiency(SfgParams(run.opts["xi_t"])))
    rows = [["signal", s.name, s.eta] for s in signal] + [["idler", s.name, s.eta] for s in idler]
    run.add_table("efficiency_stages", ("chain", "stage", "eta"), rows)


def _run_mode_capacity(run: _Run):
    rows = []
    for g in run.opts["geometries"]:
        modes = mode_capacity(g)
        run.add_exact(f"mode_capacity:w_max={g.w_max:g}", modes)
        rows.append([g.w0, g.w_max, (modes - 1) // 2, modes])
    run.add_table("mode_capacity", ("w0_um", "w_max_um", "l_max", "modes"), rows)


RUNNERS = {
    "qubit-tomography": _run_qubit_tomography,
    "hybrid-fringes": _run_hybrid_fringes,
    "hybrid-witness": _run_hybrid_witness,
    "hybrid-tomography": _run_hybrid_tomography,
    "oam-fringes": _run_oam_fringes,
    "oam-chsh": _run_oam_chsh,
    "efficiency-budget": _run_efficiency_budget,
    "mode-capacity": _run_mode_capacity,
}


def run_scenario(cfg: ExperimentConfig, timestamp: bool = True) -> ResultsReport:
    """Run one validated config and return its report."""
    run = _Run(cfg)
    try:
        RUNNERS[cfg.scenario](run)
    except (ValidationError, ConvergenceError, ResamplingError, ArithmeticError) as exc:
        raise ScenarioError(cfg.scenario, exc) from exc
    report = run.finish()
    if timestamp:
        report.generated_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return report

