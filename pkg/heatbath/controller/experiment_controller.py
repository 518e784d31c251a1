import logging
import os
from dataclasses import asdict, dataclass
from typing import List

import numpy as np

from heatbath.core import coupling, realization, statmech
from heatbath.core.errors import ConfigError, DegenerateInputError, HeatBathError, ReflectionWindowError
from heatbath.core.localization import tr
from heatbath.core.poly_rational import evaluate, is_inner
from heatbath.core.utils import format_float, match_spectra, print_status, spectral_radius
from heatbath.io import artifacts, formats
from heatbath.io.config_file import ExperimentConfig
from heatbath.simulation import lattice, waveline

logger = logging.getLogger(__name__)

DEFAULT_LOADS = ("k0 = 1", "tank = 0.5,1")
AUTOCORR_DEFAULTS = {"M": 2000, "dt": 0.5, "t_max": 1500.0}


@dataclass
class Check:
    criterion: str
    name: str
    value: float
    threshold: float
    passed: bool

    def to_dict(self):
        return asdict(self)


def _value(x):
    x = float(x)
    return x if np.isfinite(x) else float("inf")


class ExperimentController:
    def __init__(self, config: ExperimentConfig):
        """初始化实验控制器 / one controller per subcommand run

        Args:
            config: merged file and command-line configuration
        """
        self.config = config
        self.checks: List[Check] = []
        self.report = {}
        self.rng = np.random.default_rng(config.seed)

    # ---- bookkeeping -------------------------------------------------

    def _check(self, criterion, name, value, threshold, passed=None, at_most=True):
        value = _value(value)
        if passed is None:
            passed = value <= threshold if at_most else value >= threshold
        check = Check(str(criterion), name, value, float(threshold), bool(passed))
        self.checks.append(check)
        key = "check_pass" if check.passed else "check_fail"
        status = "SUCCESS" if check.passed else "ERROR"
        print_status(tr(key).format(check.criterion, name, format_float(value)), status)
        return check

    def _path(self, name):
        return os.path.join(self.config.out, name)

    def _loads(self):
        text = self.config.get("foster")
        return [formats.parse_foster(text)] if text else [formats.parse_foster(t) for t in DEFAULT_LOADS]

    def run(self) -> int:
        """Run the configured command, write summary.json, return the exit status."""
        command = self.config.command
        handler = {
            "synth": self.run_synth,
            "couple": self.run_couple,
            "line-sim": self.run_line_sim,
            "string-sim": self.run_string_sim,
            "lattice-sim": self.run_lattice_sim,
            "autocorr": self.run_autocorr,
            "mb-stats": self.run_mb_stats,
            "invert": self.run_invert,
        }.get(command)
        if handler is None:
            raise ConfigError(tr("unknown_section").format(command))
        self.validate()
        print_status(tr("run_start").format(command, self.config.seed, self.config.out), "INFO")
        os.makedirs(self.config.out, exist_ok=True)
        handler()
        passed = all(c.passed for c in self.checks)
        artifacts.write_json(self._path(artifacts.SUMMARY_FILE), {
            "command": command,
            "seed": self.config.seed,
            "params": self.config.params,
            "passed": passed,
            "checks": [c.to_dict() for c in self.checks],
        })
        n_pass = sum(c.passed for c in self.checks)
        print_status(tr("run_done").format(command, n_pass, len(self.checks)), "SUCCESS" if passed else "ERROR")
        return 0 if passed else 1

    def validate(self):
        """Build the typed run configuration up front; bad values become a ConfigError."""
        command = self.config.command
        get = self.config.get
        try:
            if command in ("line-sim", "string-sim"):
                prm = self._line_params()
                for _, _, cfg in self._line_configs(prm):
                    line_cfg = cfg.line_config() if command == "string-sim" else cfg
                    start, end = prm["window"]
                    if not 0 <= start < end <= line_cfg.t_max:
                        raise DegenerateInputError(f"decay window ({start}, {end}) must lie in [0, {line_cfg.t_max}]")
                if (get("noise_sigma") or 0.0) < 0:
                    raise DegenerateInputError(f"noise_sigma must be non-negative, got {get('noise_sigma')}")
            elif command == "lattice-sim":
                self._chain_config()
            elif command == "autocorr":
                self._chain_config(**AUTOCORR_DEFAULTS)
                if get("runs", 200) < 1:
                    raise DegenerateInputError(f"runs must be at least 1, got {get('runs')}")
            elif command == "mb-stats":
                statmech.MBParams(get("mass", 1.0), get("kT", 1.0), get("k", 1.0))
                if get("n", 100_000) < 1:
                    raise DegenerateInputError(f"n must be at least 1, got {get('n')}")
        except (DegenerateInputError, ReflectionWindowError) as exc:
            raise ConfigError(tr("invalid_value").format(command, exc)) from exc

    # ---- realization -------------------------------------------------

    def run_synth(self):
        text = self.config.get("foster")
        if text:
            specs = [formats.parse_foster(text)]
        else:
            n = self.config.get("random_specs", 100)
            specs = [realization.random_foster_spec(self.rng, self.config.get("max_dim", 8)) for _ in range(n)]
        worst_tf = worst_cert = worst_eig = worst_energy = 0.0
        minimal = True
        for spec in specs:
            Z = realization.foster_to_rational(spec)
            load = realization.foster_realize(spec)
            Z_ss = realization.transfer_function(load.ss)
            points = self.rng.uniform(-2, 2, 20) + 1j * self.rng.uniform(-3, 3, 20)
            for s in points:
                ref = evaluate(Z, s)
                worst_tf = max(worst_tf, abs(evaluate(Z_ss, s) - ref) / abs(ref))
            cert = realization.verify_lossless_certificate(load)
            worst_cert = max(worst_cert, cert.lyapunov_residual, cert.port_residual, cert.max_real_eig)
            minimal = minimal and cert.controllable and cert.observable
            worst_eig = max(worst_eig, match_spectra(np.linalg.eigvals(load.A), spec.eigenvalues()))
            worst_energy = max(worst_energy, realization.energy_drift(load, self.rng.standard_normal(load.n)))
        if len(specs) == 1:
            load = realization.foster_realize(specs[0])
            self.report = {
                "foster": formats.format_foster(specs[0]),
                "Z0": formats.rational_to_dict(realization.foster_to_rational(specs[0])),
                "realization": formats.realization_to_dict(load),
                "certificate": realization.verify_lossless_certificate(load).to_dict(),
            }
            artifacts.write_json(self._path("realization.json"), self.report)
        self._check("synth", "transfer_roundtrip", worst_tf, 1e-9)
        self._check("synth", "lossless_certificate", worst_cert, 1e-8)
        self._check("synth", "minimal", float(minimal), 1.0, passed=minimal)
        self._check("synth", "eigenvalues", worst_eig, 1e-9)
        self._check("synth", "energy_drift", worst_energy, 1e-10)

    # ---- coupling ----------------------------------------------------

    def run_couple(self):
        text = self.config.get("foster")
        if text:
            specs = [formats.parse_foster(text)]
        else:
            n = self.config.get("random_loads", 100)
            specs = [realization.random_foster_spec(self.rng, self.config.get("max_dim", 8)) for _ in range(n)]
        n_obs = self.config.get("observables", 20)
        worst_mirror = worst_allpass = worst_route = worst_obs = 0.0
        max_re = -np.inf
        for spec in specs:
            summary = coupling.load_summary(spec)
            pair, load = summary["pair"], summary["load"]
            radius = max(1.0, spectral_radius(pair.gamma_eigs()))
            worst_mirror = max(worst_mirror, summary["mirror_residual"] / radius)
            worst_allpass = max(worst_allpass, summary["allpass_residual"])
            worst_route = max(worst_route, summary["K_route_distance"])
            max_re = max(max_re, summary["max_re_gamma"])
            for _ in range(n_obs):
                W, W_bar = coupling.observable_transfers(pair, coupling.random_observable(self.rng, load))
                worst_obs = max(worst_obs, (W / W_bar).identity_residual(pair.K))
        if len(specs) == 1:
            pair = summary["pair"]
            self.report = {
                "Z0": formats.rational_to_dict(summary["Z0"]),
                "gamma_eigs": formats.complex_list(pair.gamma_eigs()),
                "gamma_bar_eigs": formats.complex_list(pair.gamma_bar_eigs()),
                "K_num": [float(c) for c in pair.K.num.coeffs],
                "K_den": [float(c) for c in pair.K.den.coeffs],
                "K": pair.K.pretty(),
                "allpass_residual": summary["allpass_residual"],
                "mirror_residual": summary["mirror_residual"],
            }
            artifacts.write_json(self._path("couple.json"), self.report)
            print_status(tr("scattering_report").format(pair.K.pretty()), "INFO")
        self._check(1, "max_re_eig_gamma", max_re, 0.0, passed=max_re < 0)
        self._check(1, "eigenvalue_mirror", worst_mirror, 1e-8)
        self._check(2, "allpass_residual", worst_allpass, 1e-8)
        self._check(2, "scattering_routes_agree", worst_route, 1e-8)
        if n_obs:
            self._check(3, "observable_invariance", worst_obs, 1e-8)

    # ---- wave line / string -----------------------------------------

    def _line_configs(self, prm):
        """(spec, load, typed config) per load of a line or string run."""
        items = []
        for spec in self._loads():
            load = realization.foster_realize(spec)
            if self.config.command == "string-sim":
                tau = self.config.get("tau", 1.0)
                cfg = waveline.StringConfig(prm["dx"], prm["x_max"], prm["t_max"], load, tau,
                                            self.config.get("rho", tau), prm["far_end"])
            else:
                cfg = waveline.LineConfig(prm["dx"], prm["x_max"], prm["t_max"], load, prm["far_end"])
            items.append((spec, load, cfg))
        return items

    def _line_params(self):
        get = self.config.get
        return {
            "dx": get("dx", 1e-2),
            "x_max": get("x_max", 50.0),
            "t_max": get("t_max", 80.0),
            "far_end": get("far_end", "open"),
            "center": get("bump_center", 5.0),
            "width": get("bump_width", 1.0),
            "window": (get("window_start", 15.0), get("window_end", 75.0)),
        }

    def _bump_field(self, prm):
        x = np.arange(int(round(prm["x_max"] / prm["dx"])) + 1) * prm["dx"]
        profile = waveline.bump(x, prm["center"], prm["width"])
        return waveline.init_waves(profile, profile, prm["dx"])

    def _boundary_checks(self, tag, load, pair, trace, prm):
        obs = coupling.Observable.state(load)
        rate = waveline.decay_rate_probe(trace, prm["window"])
        expected = float(np.max(pair.gamma_eigs().real))
        self._check(4, f"{tag}_decay_rate", abs(rate - expected) / abs(expected), 0.05)
        self._check(4, f"{tag}_energy_drift", trace.energy_drift(), 1e-9)
        self._check(4, f"{tag}_boundary_consistency", trace.boundary_residual(load), 1e-12)
        self._check(4, f"{tag}_eigenvalue_mirror", coupling.mirror_residual(pair), 1e-8)
        xi_f, y_f = waveline.reduced_forward(pair, obs, trace.w, trace.xi[0], trace.dt)
        xi_b, _ = waveline.reduced_backward(pair, obs, trace.w_bar, trace.xi[-1], trace.dt)
        self._check(5, f"{tag}_forward_reconstruction", np.max(np.abs(xi_f - trace.xi)), 1e-6)
        self._check(5, f"{tag}_backward_reconstruction", np.max(np.abs(xi_b - trace.xi)), 1e-6)
        self._check(5, f"{tag}_forward_output", np.max(np.abs(y_f - trace.y)), 1e-6)
        measured, exact = waveline.frequency_response_probe(pair, obs, 1.0, dt=prm["dx"])
        self._check(5, f"{tag}_frequency_response", abs(measured - exact) / abs(exact), 1e-4)

    def run_line_sim(self):
        prm = self._line_params()
        summary = {}
        for k, (spec, load, cfg) in enumerate(self._line_configs(prm)):
            coupler = waveline.BoundaryCoupler(load, cfg.dt, observable=coupling.Observable.state(load))
            _, trace = waveline.propagate(self._bump_field(prm), cfg.steps, coupler, cfg.far_end)
            tag = f"load{k + 1}"
            artifacts.write_boundary_trace(self._path(f"line_{tag}_trace.csv"), trace)
            self._boundary_checks(tag, load, coupler.pair, trace, prm)
            summary[tag] = {"foster": formats.format_foster(spec),
                            "decay_rate": waveline.decay_rate_probe(trace, prm["window"]),
                            "gamma_eigs": formats.complex_list(coupler.pair.gamma_eigs())}
        sigma = self.config.get("noise_sigma")
        if sigma:
            _, load, cfg = self._line_configs(prm)[0]
            summary["noise"] = self._noise_run(load, cfg, sigma)
        self.report = summary
        artifacts.write_json(self._path("line.json"), summary)

    def _noise_run(self, load, cfg, sigma):
        """White-noise initial data; w(t) is white with variance sigma^2 / (2 dx) until t = x_max."""
        field_ = waveline.white_noise_field(cfg.n_cells + 1, cfg.dx, sigma, self.rng)
        obs = coupling.Observable.state(load)
        coupler = waveline.BoundaryCoupler(load, cfg.dt, observable=obs)
        _, trace = waveline.propagate(field_, cfg.steps, coupler, cfg.far_end)
        artifacts.write_boundary_trace(self._path("line_noise_trace.csv"), trace)
        w = waveline.free_incoming(trace, cfg.x_max)
        stats = statmech.autocovariance(w, min(200, w.size // 5), dt=cfg.dt)
        artifacts.write_series_stats(self.config.out, "line_noise_w", stats)
        self._check(4, "noise_energy_drift", trace.energy_drift(), 1e-9)
        self._check(4, "noise_boundary_consistency", trace.boundary_residual(load), 1e-12)
        xi_f, _ = waveline.reduced_forward(coupler.pair, obs, trace.w, trace.xi[0], trace.dt)
        scale = max(1.0, float(np.max(np.abs(trace.xi))))
        self._check(5, "noise_forward_reconstruction", np.max(np.abs(xi_f - trace.xi)) / scale, 1e-6)
        return {"sigma": sigma, "w_variance": float(stats.acov[0]),
                "w_variance_expected": sigma ** 2 / (2.0 * cfg.dx),
                "w_band_fraction": stats.inside_band_fraction()}

    def run_string_sim(self):
        prm = self._line_params()
        tau = self.config.get("tau", 1.0)
        rho = self.config.get("rho", tau)
        summary = {}
        for k, (spec, load, cfg) in enumerate(self._line_configs(prm)):
            line_load = cfg.line_config().load
            observable = coupling.Observable.state(line_load)
            pair, strace = waveline.string_simulation(cfg, self._bump_field(prm), observable=observable)
            tag = f"string{k + 1}"
            artifacts.write_csv(self._path(f"{tag}_trace.csv"), ["t", "v0", "f0", "a_prime", "b_prime"],
                                [strace.t_grid, strace.v0, strace.f0, strace.a_prime, strace.b_prime])
            self._boundary_checks(tag, line_load, pair, strace.line, prm)
            if abs(rho - 1.0) < 1e-12:
                line_cfg = waveline.LineConfig(prm["dx"], prm["x_max"], prm["t_max"], load, prm["far_end"])
                coupler = waveline.BoundaryCoupler(load, line_cfg.dt)
                _, ltrace = waveline.propagate(self._bump_field(prm), line_cfg.steps, coupler, line_cfg.far_end)
                self._check(4, f"{tag}_matches_line", np.max(np.abs(ltrace.xi - strace.xi)), 1e-12)
            summary[tag] = {"foster": formats.format_foster(spec), "rho": rho,
                            "gamma_eigs": formats.complex_list(pair.gamma_eigs())}
        self.report = summary
        artifacts.write_json(self._path("string.json"), summary)

    # ---- lattice -----------------------------------------------------

    def _chain_config(self, **defaults):
        get = self.config.get
        return lattice.ChainConfig(
            half_width=get("M", defaults.get("M", 2000)),
            c=get("c", 1.0),
            beta=get("beta", 1.0),
            dt=get("dt", defaults.get("dt", 0.01)),
            t_max=get("t_max", defaults.get("t_max", 20.0)),
            seed=self.config.seed,
        )

    def run_lattice_sim(self):
        cfg = self._chain_config()
        state = lattice.sample_invariant(cfg, self.rng)
        trace = lattice.integrate(state, cfg)
        artifacts.write_particle_trace(self._path("particle_trace.csv"), trace)
        forward_order, backward_order = lattice.convergence_order(state, cfg)
        models = lattice.reduced_models(cfg.c)
        c = cfg.c
        eig_err = max(match_spectra(models.gamma_eigs(), [0.0, -2 * c]),
                      match_spectra(models.gamma_bar_eigs(), [0.0, 2 * c]))
        fwd, bwd = lattice.langevin_residual(trace, c)
        self._check(6, "forward_order", forward_order, 1.9, at_most=False)
        self._check(6, "backward_order", backward_order, 1.9, at_most=False)
        self._check(6, "gamma_eigenvalues", eig_err, 1e-12)
        self._check(6, "Q_inner", float(is_inner(models.Q)), 1.0, passed=is_inner(models.Q))
        self._check(6, "not_time_reflection", float(models.is_time_reflection()), 0.0)
        self._check(6, "energy_drift", trace.energy_drift(), 1e-10)
        symbol = lattice.factor_symbol(c)
        self._check(6, "symbol_factorization", float(not symbol.reproduces_potential), 0.0)
        self.report = {"langevin_residual": [fwd, bwd], "orders": [forward_order, backward_order],
                       "Q": models.Q.pretty(), "symbol_product": list(symbol.product_stencil)}
        artifacts.write_json(self._path("lattice.json"), self.report)

    def run_autocorr(self):
        cfg = self._chain_config(**AUTOCORR_DEFAULTS)
        runs = self.config.get("runs", 200)
        max_lag = 0.5 * cfg.half_width / cfg.c
        report = lattice.momentum_autocorr(cfg, runs, max_lag=max_lag, workers=self.config.get("workers"))
        artifacts.write_autocorr(self._path("autocorr.csv"), report)
        artifacts.write_csv(self._path("wave_autocorr.csv"), ["lag", "empirical", "oracle"],
                            [report.lags, report.wave_empirical, report.wave_oracle])
        beta = cfg.beta
        self._check(7, "p0_variance", abs(report.p0_variance - beta) / beta, 0.02)
        self._check(7, "lag0", abs(report.empirical[0] - beta) / beta, 0.02)
        self._check(7, "autocorr_vs_symbol_oracle", report.max_deviation(beta), 0.05)
        n_samples = 2000
        cov = lattice.whitening_covariance(cfg, n_samples, self.rng)
        gap = np.abs(cov - lattice.whitening_target(cfg))
        off = ~np.eye(gap.shape[0], dtype=bool)
        # sample variance of a unit diagonal entry is 2 / n
        self._check(7, "whitening_offdiag", np.max(gap[off]), 3.0 / np.sqrt(n_samples))
        self._check(7, "whitening_diag", np.max(np.diag(gap)), 3.0 * np.sqrt(2.0 / n_samples))

        trace = lattice.integrate(lattice.sample_invariant(cfg, self.rng), cfg)
        stats = lattice.wave_spectrum(trace, max_lag=min(200, trace.t_grid.size // 5))
        artifacts.write_series_stats(self.config.out, "wave", stats)

        threshold = self.config.get("threshold", 1e-5)
        counts = {}
        for n_sites in range(3, self.config.get("max_n", 8) + 1):
            counts[n_sites] = lattice.isolated_peak_count(n_sites, cfg.c, threshold=threshold)
            self._check(9, f"isolated_chain_{n_sites}_peaks", abs(counts[n_sites] - n_sites), 0.0)
        bath_peaks = statmech.periodicity_probe(trace.p0, cfg.dt, threshold)
        print_status(tr("broadband_report").format(bath_peaks, counts), "INFO")
        self.report = {
            "msd_slope": report.msd_slope,
            "msd_slope_expected": beta / cfg.c,
            "wave_band_fraction": stats.inside_band_fraction(),
            "isolated_peak_counts": counts,
            "bath_peak_count": bath_peaks,
            "max_deviation_truncated": float(np.max(np.abs(report.empirical - report.truncated_oracle)) / beta),
        }
        artifacts.write_json(self._path("autocorr.json"), self.report)

    # ---- statistics --------------------------------------------------

    def run_mb_stats(self):
        get = self.config.get
        params = statmech.MBParams(get("mass", 1.0), get("kT", 1.0), get("k", 1.0))
        n = get("n", 100_000)
        speeds = statmech.sample_mb(params, n, self.rng)
        kinetic = float(np.mean(0.5 * params.mass * speeds ** 2))
        expected = 1.5 * params.kT
        self._check(8, "mean_kinetic_energy", abs(kinetic - expected) / expected, 0.02)
        stat, critical = statmech.ks_chi2_test(speeds, params)
        self._check(8, "ks_chi2_3", stat, critical)
        self._check(8, "pdf_normalization", abs(statmech.mb_normalization(params) - 1.0), 1e-8)
        grid = [0.25, 0.5, 1.0, 2.0, 4.0]
        kl_gap = max(abs(statmech.kl_mb(a, b) - statmech.kl_mb_quadrature(a, b, params.mass))
                     for a in grid for b in grid)
        self._check(8, "kl_closed_vs_quadrature", kl_gap, 1e-6)
        kl_sign_ok = all((statmech.kl_mb(a, b) > 0) == (a != b) and statmech.kl_mb(a, b) >= 0
                         for a in grid for b in grid)
        self._check(8, "kl_nonnegative", float(not kl_sign_ok), 0.0)
        h_gap = abs(statmech.negentropy_mb(params) - statmech.negentropy_mb_closed(params))
        self._check(8, "negentropy_closed_vs_quadrature", h_gap, 1e-6)
        temps = params.kT * np.array([0.5, 1.0, 2.0, 4.0])
        values = [statmech.negentropy_mb(statmech.MBParams(params.mass, t, params.k_boltzmann)) for t in temps]
        self._check(8, "negentropy_decreasing", float(not np.all(np.diff(values) < 0)), 0.0)

        v = np.linspace(0.0, 5.0 * params.sigma, 201)
        artifacts.write_csv(self._path("mb_pdf.csv"), ["v", "pdf"], [v, statmech.mb_speed_pdf(params, v)])
        component = statmech.sample_mb_velocities(params, min(n, 20_000), self.rng)[:, 0]
        stats = statmech.autocovariance(component, 50)
        artifacts.write_series_stats(self.config.out, "velocity", stats)
        self.report = {"mean_kinetic_energy": kinetic, "ks_statistic": stat, "ks_critical": critical,
                       "negentropy": statmech.negentropy_mb(params), "velocity_band_fraction": stats.inside_band_fraction()}
        artifacts.write_json(self._path("mb.json"), self.report)

    # ---- inverse synthesis ------------------------------------------

    def run_invert(self):
        text = self.config.get("phi")
        if text:
            Phi = formats.parse_rational(text)
            try:
                bath = coupling.spectrum_to_bath(Phi)
            except HeatBathError as exc:
                print_status(tr("stage_failed").format(getattr(exc, "stage", "?"), exc), "ERROR")
                self._check(10, "spectrum_to_bath", 1.0, 0.0)
                return
            self.report = {
                "Phi": formats.rational_to_dict(Phi),
                "W": formats.rational_to_dict(bath.W),
                "K": formats.rational_to_dict(bath.K),
                "Z0": formats.rational_to_dict(bath.Z),
                "foster": formats.format_foster(bath.spec),
                "realization": formats.realization_to_dict(bath.load),
            }
            artifacts.write_json(self._path("invert.json"), self.report)
            print_status(tr("impedance_report").format(bath.Z.pretty()), "INFO")
            self._check(10, "spectrum_residual", bath.spectrum_residual(), 1e-6)
            self._check(10, "K_roundtrip", self._roundtrip(bath.K), 1e-8)
            return
        n = self.config.get("random_spectra", 50)
        worst_z = worst_k = worst_phi = 0.0
        failures = 0
        for _ in range(n):
            spec, Phi = coupling.random_spectral_density(self.rng, self.config.get("max_dim", 8))
            try:
                bath = coupling.spectrum_to_bath(Phi)
                z_gap = bath.Z.coefficient_distance(realization.foster_to_rational(spec))
                k_gap = self._roundtrip(bath.K)
            except HeatBathError as exc:
                failures += 1
                logger.warning("spectrum %s failed at stage %s: %s", Phi.pretty(), getattr(exc, "stage", "?"), exc)
                continue
            worst_z = max(worst_z, z_gap)
            worst_k = max(worst_k, k_gap)
            worst_phi = max(worst_phi, bath.spectrum_residual())
        self._check(10, "failed_spectra", failures, 0)
        self._check(10, "recovered_Z0", worst_z, 1e-7)
        self._check(10, "K_roundtrip", worst_k, 1e-8)
        self._check(10, "spectrum_residual", worst_phi, 1e-6)

    @staticmethod
    def _roundtrip(K):
        return coupling.scattering_K(coupling.invert_K_to_Z(K)).coefficient_distance(K)


def collect_reports(run_dirs):
    """Merge summary.json files into rows keyed by criterion id.

    Returns (rows, missing) where rows maps criterion -> list of checks.
    """
    rows, missing = {}, []
    for directory in run_dirs:
        path = os.path.join(directory, artifacts.SUMMARY_FILE)
        if not os.path.isfile(path):
            missing.append(directory)
            continue
        for check in artifacts.read_json(path).get("checks", []):
            rows.setdefault(str(check["criterion"]), []).append(dict(check, run=directory))
    return rows, missing


def _criterion_order(key):
    return (0, int(key), "") if key.isdigit() else (1, 0, key)


def report(run_dirs) -> int:
    """Print the consolidated acceptance table; 0 iff every criterion passed and no summary is missing."""
    if not run_dirs:
        raise ConfigError(tr("usage_no_dirs"))
    rows, missing = collect_reports(run_dirs)
    for directory in missing:
        print_status(tr("summary_missing").format(directory), "ERROR")
    print_status(tr("report_header").format(len(run_dirs)), "INFO")
    failed = []
    for key in sorted(rows, key=_criterion_order):
        ok = all(check["passed"] for check in rows[key])
        names = ", ".join(sorted({check["name"] for check in rows[key]}))
        print_status(tr("report_row").format(key, names[:40], "PASS" if ok else "FAIL"),
                     "SUCCESS" if ok else "ERROR")
        if not ok:
            failed.append(key)
    if failed:
        print_status(tr("report_failed").format(", ".join(failed)), "ERROR")
    elif not missing:
        print_status(tr("report_all_pass"), "SUCCESS")
    return 1 if failed or missing else 0
