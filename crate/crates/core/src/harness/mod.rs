//! Experiment orchestration: configuration in, manifest / CSV / JSON / SVG out.
//! All file I/O happens here.

pub mod checkpoint;
pub mod config;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::diagnostics::{fit_decay, log_log_regression, scattering_monitor, DiagnosticsRecord};
use crate::error::{Result, SvpError};
use crate::evolution::{domain_for, run, RunEvent, RunOptions, Scheme, StepPlan};
use crate::linear_oracle::{pl_inequality_check, verify_lemma, AnalyticProfile, LemmaOptions};
use crate::phase_space::{sample_initial, Frame, PhaseGrid, PhaseProfile};
use crate::screened_poisson::green_table;

use checkpoint::{load_checkpoint, save_checkpoint};
use config::{CheckKind, CheckSpec, Experiment, RunConfig};
use report::{column_series, csv_table, decay_svg, diagnostics_csv, write_json};

pub const MEMORY_FORMULA: &str =
    "8 B * 6 * nx^d * nv^d (state, next state, spline coefficients, scratch) + 16 B * (2 n_omega)^d * (3 + d + d^2) (padded complex field spectra on the grown domain at t_end)";

/// Footprint estimate in bytes for a run on `grid` up to `plan.t_end`.
pub fn memory_estimate(grid: &PhaseGrid, plan: &StepPlan) -> u64 {
    let d = grid.d as u32;
    let omega = domain_for(grid, plan.t_end);
    let phase = 8 * 6 * grid.len() as u64;
    let field = 16 * (2 * omega.n as u64).pow(d) * (3 + grid.d + grid.d * grid.d) as u64;
    phase + field
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

fn near(t: f64, targets: &[f64], dt: f64) -> bool {
    targets.iter().any(|&s| (s - t).abs() < 0.5 * dt)
}

fn evaluate_check(c: &CheckSpec, records: &[DiagnosticsRecord]) -> CheckResult {
    let series = column_series(records, &c.column);
    let in_range = |v: f64| c.lower.is_none_or(|lo| v >= lo) && c.upper.is_none_or(|hi| v <= hi);
    let (value, detail) = match c.kind {
        CheckKind::Exponent => {
            let window = (c.t1.unwrap_or(f64::NAN), c.t2.unwrap_or(f64::NAN));
            match fit_decay(&series, window) {
                Ok(f) => (Some(f.exponent), format!("exponent {:.4} ± {:.4}", f.exponent, f.half_width)),
                Err(e) => (None, e.to_string()),
            }
        }
        CheckKind::Drift | CheckKind::Growth => match series.first() {
            Some(&(_, y0)) if y0 != 0.0 => {
                let v = series
                    .iter()
                    .filter(|(t, _)| c.t1.is_none_or(|a| *t >= a) && c.t2.is_none_or(|b| *t <= b))
                    .map(|&(_, y)| if c.kind == CheckKind::Drift { (y / y0 - 1.0).abs() } else { y / y0 })
                    .fold(f64::NEG_INFINITY, f64::max);
                (Some(v), format!("{:?} {v:.6e}", c.kind).to_lowercase())
            }
            _ => (None, "reference value is zero or missing".into()),
        },
    };
    CheckResult {
        name: c.name.clone(),
        value,
        pass: value.is_some_and(in_range),
        detail,
    }
}

fn fit_with_plot(out: &Path, label: &str, series: &[(f64, f64)], window: (f64, f64), plots: bool) -> Result<Value> {
    match fit_decay(series, window) {
        Ok(fit) => {
            if plots {
                let pts: Vec<(f64, f64)> = series.iter().filter(|(t, _)| *t >= window.0 && *t <= window.1).cloned().collect();
                let (_, intercept, _, _) = log_log_regression(&pts)?;
                fs::write(out.join(format!("{label}.svg")), decay_svg(label, series, &fit, intercept))?;
            }
            Ok(json!({ "label": label, "fit": fit }))
        }
        Err(e) => Ok(json!({ "label": label, "error": e.kind(), "message": e.to_string() })),
    }
}

fn manifest(cfg: &RunConfig, extra: Value) -> Value {
    json!({
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "checkpoint_format_version": checkpoint::VERSION,
        "threads": rayon::current_num_threads(),
        "config_hash": cfg.hash(),
        "config": cfg,
        "extra": extra,
    })
}

/// Run the configured experiment, writing outputs into `out`.
/// `base` resolves relative paths inside the configuration.
pub fn execute(cfg: &RunConfig, out: &Path, base: &Path, resume: Option<&Path>) -> Result<Value> {
    fs::create_dir_all(out)?;
    match cfg.run.experiment {
        Experiment::Simulate => simulate(cfg, out, resume),
        Experiment::LinearOracle => linear_oracle(cfg, out),
        Experiment::ScatterAnalyze => scatter_analyze(cfg, out, base),
        Experiment::GreenTable => green(cfg, out),
    }
}

fn simulate(cfg: &RunConfig, out: &Path, resume: Option<&Path>) -> Result<Value> {
    let grid = cfg.grid()?;
    let plan = cfg.plan()?;
    let estimate = memory_estimate(&grid, &plan);
    write_json(
        &out.join("manifest.json"),
        &manifest(cfg, json!({ "memory_estimate_bytes": estimate, "memory_formula": MEMORY_FORMULA })),
    )?;
    if estimate > cfg.run.memory_ceiling {
        return Err(SvpError::MemoryCeiling {
            estimate,
            ceiling: cfg.run.memory_ceiling,
        });
    }
    let frame = match plan.scheme {
        Scheme::FilteredStrang => Frame::Filtered,
        Scheme::PhysicalReference => Frame::Physical,
    };
    let initial = match resume {
        Some(path) => {
            let p = load_checkpoint(path)?;
            if p.grid != grid {
                return Err(SvpError::Config(format!("checkpoint grid {:?} differs from the configured grid {:?}", p.grid, grid)));
            }
            p.expect_frame(frame)?;
            p
        }
        None => {
            let mut p = sample_initial(&cfg.initial, grid)?;
            p.frame = frame;
            p
        }
    };
    let d = &cfg.diagnostics;
    let mut snapshot_times = d.snapshot_times.clone();
    snapshot_times.extend(&cfg.checkpoint.times);
    let opts = RunOptions {
        plan,
        tol: cfg.numerics,
        record_every: d.record_every,
        snapshot_times,
        energy: d.energy,
        moment_order: d.moment_order.unwrap_or((grid.d + 1) as f64),
    };
    let start = Instant::now();
    let mut records = Vec::new();
    let mut scatter_snaps: Vec<PhaseProfile> = Vec::new();
    let result = run(initial, &opts, &mut |ev| {
        match ev {
            RunEvent::Record(r) => records.push(r.clone()),
            RunEvent::Snapshot(s) => {
                if near(s.time, &cfg.checkpoint.times, plan.dt) {
                    save_checkpoint(s, &out.join(format!("checkpoint_t{:.6}.svpk", s.time)))?;
                }
                if near(s.time, &d.snapshot_times, plan.dt) {
                    scatter_snaps.push(s.clone());
                }
            }
        }
        Ok(())
    });
    fs::write(out.join("diagnostics.csv"), diagnostics_csv(&records))?;
    let final_state = match result {
        Ok(s) => s,
        Err(e) => {
            write_json(
                &out.join("summary.json"),
                &json!({
                    "experiment": "simulate",
                    "config_hash": cfg.hash(),
                    "error": { "kind": e.kind(), "message": e.to_string() },
                    "records": records.len(),
                }),
            )?;
            return Err(e);
        }
    };
    if cfg.checkpoint.last {
        save_checkpoint(&final_state, &out.join("final.svpk"))?;
    }
    let mut fits = Vec::new();
    for f in &d.fits {
        let series = column_series(&records, &f.column);
        fits.push(fit_with_plot(out, &f.column, &series, (f.t1, f.t2), d.plots)?);
    }
    let checks: Vec<CheckResult> = cfg.checks.iter().map(|c| evaluate_check(c, &records)).collect();
    let scattering = if scatter_snaps.len() >= 4 {
        Some(scattering_monitor(&scatter_snaps)?)
    } else {
        None
    };
    let summary = json!({
        "experiment": "simulate",
        "config_hash": cfg.hash(),
        "final_time": final_state.time,
        "records": records.len(),
        "wall_seconds": start.elapsed().as_secs_f64(),
        "fits": fits,
        "checks": checks,
        "all_checks_pass": checks.iter().all(|c| c.pass),
        "scattering": scattering,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn linear_oracle(cfg: &RunConfig, out: &Path) -> Result<Value> {
    write_json(&out.join("manifest.json"), &manifest(cfg, Value::Null))?;
    let dim = cfg.oracle_dim()?;
    let o = &cfg.oracle;
    let mut profile = AnalyticProfile::new(dim, &cfg.initial)?;
    profile.v_derivative_order = o.v_derivative_order;
    profile.moment_order = o.moment_order.unwrap_or(dim + 1);
    profile.analytic = o.analytic;
    let mut reports = Vec::new();
    let mut csv = String::from("lemma,t,value\n");
    for (i, spec) in o.lemmas.iter().enumerate() {
        let opts = LemmaOptions {
            alpha: spec.alpha.clone(),
            n: spec.n,
            samples: spec.samples,
        };
        let rep = verify_lemma(spec.lemma, &profile, (spec.t1, spec.t2), &opts)?;
        for &(t, v) in &rep.series {
            csv.push_str(&format!("{},{},{}\n", rep.lemma, report::fmt_f64(t), report::fmt_f64(v)));
        }
        if cfg.diagnostics.plots {
            let (_, intercept, _, _) = log_log_regression(&rep.series)?;
            fs::write(out.join(format!("{}_{i}.svg", rep.lemma)), decay_svg(rep.lemma, &rep.series, &rep.fit, intercept))?;
        }
        reports.push(rep);
    }
    fs::write(out.join("oracle.csv"), csv)?;
    let shift = if o.shift_times.is_empty() {
        None
    } else {
        Some(pl_inequality_check(&profile, &o.shift_times)?)
    };
    let pass = reports.iter().all(|r| r.pass) && shift.as_ref().is_none_or(|s| s.pass);
    let summary = json!({
        "experiment": "linear-oracle",
        "config_hash": cfg.hash(),
        "lemmas": reports,
        "velocity_shift": shift,
        "all_checks_pass": pass,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn scatter_analyze(cfg: &RunConfig, out: &Path, base: &Path) -> Result<Value> {
    write_json(&out.join("manifest.json"), &manifest(cfg, Value::Null))?;
    let paths: Vec<PathBuf> = cfg.scatter_section()?.snapshots.iter().map(|s| base.join(s)).collect();
    let snaps = paths.iter().map(|p| load_checkpoint(p)).collect::<Result<Vec<_>>>()?;
    let rep = scattering_monitor(&snaps)?;
    let rows: Vec<Vec<Option<f64>>> = (0..rep.delta_l2.len())
        .map(|k| vec![Some(rep.times[k + 1]), Some(rep.delta_l2[k]), Some(rep.delta_h1[k]), Some(rep.delta_z[k])])
        .collect();
    fs::write(out.join("scattering.csv"), csv_table(&["t", "delta_l2", "delta_h1", "delta_z"], &rows))?;
    let summary = json!({
        "experiment": "scatter-analyze",
        "config_hash": cfg.hash(),
        "scattering": rep,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn green(cfg: &RunConfig, out: &Path) -> Result<Value> {
    write_json(&out.join("manifest.json"), &manifest(cfg, Value::Null))?;
    let g = cfg.green_section()?;
    let table = green_table(g.d, &g.radii()?)?;
    let rows: Vec<Vec<Option<f64>>> = table.iter().map(|&(r, v)| vec![Some(r), Some(v)]).collect();
    fs::write(out.join("green.csv"), csv_table(&["r", "green"], &rows))?;
    let summary = json!({
        "experiment": "green-table",
        "config_hash": cfg.hash(),
        "d": g.d,
        "rows": table.len(),
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
