use std::path::{Path, PathBuf};

use cvtp_core::gaussian::GaussianState;
use cvtp_core::spectral::{self, BandAverage};
use cvtp_core::teleporter::{self, NoiseBudget, Regime, TeleporterConfig};
use cvtp_core::timetrace::{self, ModeField};
use cvtp_core::validation::{run_validation, Level, ValidationSummary};
use cvtp_core::EstimatorReport;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{verify_run, RunDir, REPORT_SCHEMA};

fn snapshot(dir: &mut RunDir, cfg: &RunConfig) -> CliResult<serde_json::Value> {
    dir.write("config.toml", cfg.to_toml().as_bytes())?;
    Ok(serde_json::to_value(cfg).expect("config serialises"))
}

#[derive(Debug, Serialize)]
struct RegimeBudget {
    #[serde(flatten)]
    budget: NoiseBudget,
    circuit_var_x: f64,
    circuit_var_p: f64,
}

#[derive(Debug, Serialize)]
struct BudgetReport {
    schema: u32,
    command: &'static str,
    config: TeleporterConfig,
    quantum: RegimeBudget,
    classical: RegimeBudget,
}

fn circuit_variances(cfg: &TeleporterConfig) -> CliResult<(f64, f64)> {
    let out = if cfg.is_unity_gain() {
        teleporter::run_teleport(cfg, &GaussianState::vacuum(1)?)?
    } else {
        teleporter::run_teleport_uncalibrated(cfg, &GaussianState::vacuum(1)?)?
    };
    let q = out.quad_statistics(0)?;
    Ok((q.var_x, q.var_p))
}

fn regime_budget(cfg: &TeleporterConfig) -> CliResult<RegimeBudget> {
    let (vx, vp) = circuit_variances(cfg)?;
    Ok(RegimeBudget {
        budget: teleporter::analytic_noise_budget(cfg)?,
        circuit_var_x: vx,
        circuit_var_p: vp,
    })
}

pub fn budget(cfg: &RunConfig, out_dir: Option<&Path>) -> CliResult<PathBuf> {
    let base = cfg.teleporter_config()?;
    let report = BudgetReport {
        schema: REPORT_SCHEMA,
        command: "budget",
        config: base,
        quantum: regime_budget(&base.with_regime(Regime::Quantum))?,
        classical: regime_budget(&base.with_regime(Regime::Classical))?,
    };
    println!("{:<10} {:>10} {:>10} {:>10}", "regime", "N_out", "N_out_dB", "F_vacuum");
    for (name, r) in [("quantum", &report.quantum), ("classical", &report.classical)] {
        println!(
            "{name:<10} {:>10.4} {:>10.4} {:>10.4}",
            r.budget.n_out, r.budget.n_out_db, r.budget.fidelity_vacuum
        );
    }
    let mut dir = RunDir::create(out_dir, "budget")?;
    let snap = snapshot(&mut dir, cfg)?;
    dir.write_json("report.json", &report)?;
    dir.finish(None, snap)
}

#[derive(Debug, Serialize)]
struct SpectrumReport {
    schema: u32,
    command: &'static str,
    seed: u64,
    regime: Regime,
    bins: usize,
    jitter_sigma_db: f64,
    plateau_db: f64,
    band: BandAverage,
    report: EstimatorReport,
}

pub fn spectrum(cfg: &RunConfig, regime: Option<Regime>, seed: u64, out_dir: Option<&Path>) -> CliResult<PathBuf> {
    let tcfg = cfg.teleporter_with_regime(regime.unwrap_or(cfg.teleporter.regime))?;
    let s = &cfg.spectrum;
    let grid = spectral::uniform_grid(s.bins, s.span_thz);
    let clean = spectral::synthesize_spectrum(&tcfg, &cfg.profile()?, &grid)?;
    let record = spectral::apply_measurement_jitter(&clean, s.jitter_sigma_db, seed)?;
    let band = spectral::band_average(&record, s.exclude_below_thz, s.band_edge_thz)
        .map_err(|e| CliError::config("spectrum.exclude_below_thz", e))?;
    let report = spectral::spectrum_report_with_bands(&record, tcfg.eta_meas, s.exclude_below_thz, s.band_edge_thz)?;
    let out = SpectrumReport {
        schema: REPORT_SCHEMA,
        command: "spectrum",
        seed,
        regime: tcfg.regime,
        bins: record.bins.len(),
        jitter_sigma_db: s.jitter_sigma_db,
        plateau_db: spectral::plateau_db(&tcfg)?,
        band,
        report,
    };
    println!(
        "raw {:.3}/{:.3} dB  intrinsic {:.3}/{:.3} dB  F_raw {:.4}  F_int {:.4} ± {:.4}",
        report.vx_raw_db, report.vp_raw_db, report.vx_int_db, report.vp_int_db, report.f_raw, report.f_int, report.f_int_se
    );
    let mut dir = RunDir::create(out_dir, "spectrum")?;
    let snap = snapshot(&mut dir, cfg)?;
    dir.write_csv(
        "spectrum.csv",
        &["omega_thz", "vx_db", "vp_db"],
        record.bins.iter().map(|b| vec![b.omega_thz.into(), b.vx_db.into(), b.vp_db.into()]),
    )?;
    dir.write_json("report.json", &out)?;
    dir.finish(Some(seed), snap)
}

#[derive(Debug, Serialize)]
struct Analytic {
    n_out: f64,
    n_out_db: f64,
    intrinsic_db: f64,
}

#[derive(Debug, Serialize)]
struct Correlations {
    x: f64,
    p: f64,
    in_x: f64,
    in_p: f64,
}

#[derive(Debug, Serialize)]
struct TimetraceReport {
    schema: u32,
    command: &'static str,
    seed: u64,
    regime: Regime,
    traces: usize,
    modes_per_trace: usize,
    window_ps: f64,
    analytic: Analytic,
    ensemble_var_shot_estimate: f64,
    adjacent_correlation: Correlations,
    report: EstimatorReport,
}

pub fn timetrace(
    cfg: &RunConfig,
    regime: Option<Regime>,
    traces: Option<usize>,
    seed: u64,
    out_dir: Option<&Path>,
) -> CliResult<PathBuf> {
    let tcfg = cfg.teleporter_with_regime(regime.unwrap_or(cfg.teleporter.regime))?;
    let t = &cfg.timetrace;
    let n_traces = traces.unwrap_or(t.traces);
    if n_traces < 1 {
        return Err(CliError::config("--traces", "must be >= 1"));
    }
    let acq = cfg.acquisition()?;
    tcfg.require_unity_gain().map_err(|e| CliError::config("teleporter.tap_reflectivity", e))?;
    let run = timetrace::run_timetrace(&tcfg, &cfg.source_spec()?, &acq, n_traces, t.modes_per_trace, t.enob, seed)?;
    let pooled: Vec<_> = run.modes.iter().flat_map(|m| m.modes.iter().copied()).collect();
    let corr = |f| timetrace::adjacent_mode_correlation(&run.modes, f).unwrap_or(f64::NAN);
    let budget = teleporter::analytic_noise_budget(&tcfg)?;
    let out = TimetraceReport {
        schema: REPORT_SCHEMA,
        command: "timetrace",
        seed,
        regime: tcfg.regime,
        traces: n_traces,
        modes_per_trace: run.modes[0].modes.len(),
        window_ps: acq.window_ps,
        analytic: Analytic {
            n_out: budget.n_out,
            n_out_db: budget.n_out_db,
            intrinsic_db: teleporter::intrinsic_from_raw_db(budget.n_out_db, tcfg.eta_meas)?,
        },
        ensemble_var_shot_estimate: timetrace::ensemble_variance(&pooled),
        adjacent_correlation: Correlations {
            x: corr(ModeField::X),
            p: corr(ModeField::P),
            in_x: corr(ModeField::InX),
            in_p: corr(ModeField::InP),
        },
        report: run.report,
    };
    let r = &run.report;
    println!(
        "{} modes  raw {:.3}/{:.3} dB  intrinsic {:.3}/{:.3} dB ± {:.3}  F_raw {:.4}  F_int {:.4}",
        r.n_modes, r.vx_raw_db, r.vp_raw_db, r.vx_int_db, r.vp_int_db, r.se_int_db, r.f_raw, r.f_int
    );
    let mut dir = RunDir::create(out_dir, "timetrace")?;
    let snap = snapshot(&mut dir, cfg)?;
    dir.write_csv(
        "modes.csv",
        &["trace_id", "k", "x_k", "p_k", "in_x_k", "in_p_k"],
        run.modes.iter().flat_map(|w| {
            w.modes.iter().map(move |m| {
                vec![w.trace_id.into(), m.k.into(), m.x_k.into(), m.p_k.into(), m.in_x_k.into(), m.in_p_k.into()]
            })
        }),
    )?;
    for tr in run.traces.iter().take(t.dump_traces) {
        let dt = tr.dt_ps();
        dir.write_csv(
            &format!("trace_{:03}.csv", tr.trace_id),
            &["t_ps", "x", "p", "in_x", "in_p"],
            (0..tr.len()).map(|i| {
                vec![
                    (i as f64 * dt).into(),
                    tr.x_samples[i].into(),
                    tr.p_samples[i].into(),
                    tr.input_mean_x[i].into(),
                    tr.input_mean_p[i].into(),
                ]
            }),
        )?;
    }
    dir.write_json("report.json", &out)?;
    dir.finish(Some(seed), snap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    NSq,
    EtaBell,
    EtaMeas,
    FfGainDb,
}

impl SweepParam {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "n_sq" => Ok(Self::NSq),
            "eta_bell" => Ok(Self::EtaBell),
            "eta_meas" => Ok(Self::EtaMeas),
            "ff_gain_db" => Ok(Self::FfGainDb),
            other => Err(CliError::config(
                "--param",
                format!("unknown parameter `{other}` (expected n_sq, eta_bell, eta_meas or ff_gain_db)"),
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::NSq => "n_sq",
            Self::EtaBell => "eta_bell",
            Self::EtaMeas => "eta_meas",
            Self::FfGainDb => "ff_gain_db",
        }
    }
}

/// `start:stop:n`, inclusive of both ends.
pub fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let bad = |m: &str| CliError::config("--range", format!("`{s}`: {m}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected start:stop:n"));
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad("start is not a number"))?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad("stop is not a number"))?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad("n is not a positive integer"))?;
    if !start.is_finite() || !stop.is_finite() {
        return Err(bad("bounds must be finite"));
    }
    match n {
        0 => Err(bad("n must be >= 1")),
        1 => Ok(vec![start]),
        _ => Ok((0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect()),
    }
}

#[derive(Debug, Serialize)]
struct SweepPoint {
    value: f64,
    n_out: f64,
    n_out_db: f64,
    fidelity: f64,
    circuit_var_x: f64,
    circuit_var_p: f64,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    schema: u32,
    command: &'static str,
    param: &'static str,
    regime: Regime,
    points: Vec<SweepPoint>,
}

pub fn sweep(cfg: &RunConfig, param: &str, range: &str, out_dir: Option<&Path>) -> CliResult<PathBuf> {
    let param = SweepParam::parse(param)?;
    let values = parse_range(range)?;
    let mut points = Vec::with_capacity(values.len());
    for &v in &values {
        let mut c = cfg.clone();
        c.teleporter.tap_reflectivity = None;
        match param {
            SweepParam::NSq => c.teleporter.n_sq = v,
            SweepParam::EtaBell => c.teleporter.eta_bell = v,
            SweepParam::EtaMeas => c.teleporter.eta_meas = v,
            SweepParam::FfGainDb => c.teleporter.ff_gain_db = v,
        }
        let tcfg = c.teleporter_config().map_err(|e| match e {
            CliError::Config { message, .. } => CliError::config("--range", format!("{} = {v}: {message}", param.name())),
            other => other,
        })?;
        let b = teleporter::analytic_noise_budget(&tcfg)?;
        let (vx, vp) = circuit_variances(&tcfg)?;
        points.push(SweepPoint {
            value: v,
            n_out: b.n_out,
            n_out_db: b.n_out_db,
            fidelity: b.fidelity_vacuum,
            circuit_var_x: vx,
            circuit_var_p: vp,
        });
    }
    for p in &points {
        println!(
            "{}={:<12.6} N_out {:.6} ({:.4} dB)  F {:.4}  circuit {:.6}",
            param.name(),
            p.value,
            p.n_out,
            p.n_out_db,
            p.fidelity,
            p.circuit_var_x
        );
    }
    let mut dir = RunDir::create(out_dir, "sweep")?;
    let snap = snapshot(&mut dir, cfg)?;
    dir.write_csv(
        "sweep.csv",
        &[param.name(), "n_out", "n_out_db", "fidelity", "circuit_var_x", "circuit_var_p"],
        points.iter().map(|p| {
            vec![
                p.value.into(),
                p.n_out.into(),
                p.n_out_db.into(),
                p.fidelity.into(),
                p.circuit_var_x.into(),
                p.circuit_var_p.into(),
            ]
        }),
    )?;
    let report = SweepReport {
        schema: REPORT_SCHEMA,
        command: "sweep",
        param: param.name(),
        regime: cfg.teleporter.regime,
        points,
    };
    dir.write_json("report.json", &report)?;
    dir.finish(None, snap)
}

#[derive(Debug, Serialize)]
struct ValidateReport<'a> {
    schema: u32,
    command: &'static str,
    passed: bool,
    #[serde(flatten)]
    summary: &'a ValidationSummary,
}

pub fn validate(cfg: Option<&RunConfig>, level: Level, out_dir: Option<&Path>) -> CliResult<()> {
    let tcfg = cfg.map(|c| c.teleporter_config()).transpose()?;
    let summary = run_validation(level, tcfg.as_ref());
    for c in &summary.checks {
        println!("{} {}  {}", if c.passed { "ok  " } else { "FAIL" }, c.id, c.detail);
    }
    let failed: Vec<&str> = summary.failures().map(|c| c.id.as_str()).collect();
    println!("{} checks, {} failed", summary.checks.len(), failed.len());
    if let Some(p) = out_dir {
        let mut dir = RunDir::create(Some(p), "validate")?;
        let snap = match cfg {
            Some(c) => snapshot(&mut dir, c)?,
            None => serde_json::Value::Null,
        };
        dir.write_json(
            "report.json",
            &ValidateReport {
                schema: REPORT_SCHEMA,
                command: "validate",
                passed: summary.passed(),
                summary: &summary,
            },
        )?;
        dir.finish(None, snap)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}

pub fn verify(dir: &Path) -> CliResult<()> {
    let bad = verify_run(dir)?;
    if bad.is_empty() {
        println!("manifest ok: {}", dir.display());
        Ok(())
    } else {
        Err(CliError::Validation(format!("digest mismatch: {}", bad.join(", "))))
    }
}
