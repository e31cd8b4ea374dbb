//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line and
//! then asserts it. Criterion 7 is the heavyweight d = 2 run and is ignored
//! by default (`cargo test --test acceptance -- --ignored`).

use std::time::Instant;

use svp::diagnostics::{fit_decay, scattering_monitor, DecayFit, EnergyParams};
use svp::evolution::{reference_physical_step, run, strang_step, RunEvent, RunOptions, Scheme, StepPlan, Tolerances};
use svp::linear_oracle::{log_times, pl_inequality_check, potential_sup, verify_lemma, AnalyticProfile, Lemma, LemmaOptions};
use svp::phase_space::{sample_initial, to_filtered, Bump, Frame, InitialDataSpec, PhaseGrid, PhaseProfile};
use svp::screened_poisson::GreenKernel;

fn report(n: u32, pass: bool, detail: &str, start: Instant) {
    println!(
        "criterion {n}: {} ({detail}; {:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
}

fn fit_line(f: &DecayFit) -> String {
    format!("exponent {:.4} ± {:.4} on [{}, {}]", f.exponent, f.half_width, f.t1, f.t2)
}

#[test]
fn criterion_1_green_closed_forms() {
    let start = Instant::now();
    let closed: [fn(f64) -> f64; 3] = [
        |r| 0.5 * (-r).exp(),
        |r| bessel_k0(r) / (2.0 * std::f64::consts::PI),
        |r| (-r).exp() / (4.0 * std::f64::consts::PI * r),
    ];
    let mut worst = 0.0f64;
    let mut worst_mass = 0.0f64;
    for d in 1..=3 {
        let g = GreenKernel::new(d).unwrap();
        for i in 0..=400 {
            let r = 1e-2 * (2000f64).powf(i as f64 / 400.0);
            worst = worst.max((g.eval(r).unwrap() - closed[d - 1](r)).abs());
        }
        worst_mass = worst_mass.max((g.total_mass() - 1.0).abs());
    }
    let pass = worst < 1e-8 && worst_mass < 1e-6;
    report(1, pass, &format!("max abs error {worst:.2e}, max |mass - 1| {worst_mass:.2e}"), start);
    assert!(pass);
}

/// `K_0` by its power series for small `r` and its integral representation otherwise.
fn bessel_k0(r: f64) -> f64 {
    if r < 2.0 {
        let x2 = r * r / 4.0;
        let mut term = 1.0;
        let mut harmonic = 0.0;
        let mut i0 = 1.0;
        let mut rest = 0.0;
        for k in 1..40 {
            term *= x2 / (k * k) as f64;
            harmonic += 1.0 / k as f64;
            i0 += term;
            rest += term * harmonic;
        }
        -((r / 2.0).ln() + 0.577_215_664_901_532_9) * i0 + rest
    } else {
        svp::numerics::quadrature::adaptive(|s: f64| (-r * s.cosh()).exp(), 0.0, 40.0, 1e-14, 0.0, 2000).value
    }
}

#[test]
fn criterion_2_linear_decay_d3() {
    let start = Instant::now();
    let h = AnalyticProfile::gaussian(3, 1.0, 1.0, 1.0);
    let rep = verify_lemma(Lemma::GradPhiSharpD3, &h, (10.0, 100.0), &LemmaOptions::default()).unwrap();
    let e = rep.fit.exponent;
    let pass = rep.pass && (-4.0 - 0.2..=-4.0 + 0.1).contains(&e);
    report(2, pass, &format!("||grad phi||_inf {}", fit_line(&rep.fit)), start);
    assert!(pass);
}

#[test]
fn criterion_3_linear_decay_d2() {
    let start = Instant::now();
    let h = AnalyticProfile::gaussian(2, 1.0, 1.0, 1.0);
    let window = (10.0, 100.0);
    let opts = LemmaOptions::default();
    let rho = verify_lemma(Lemma::RhoSupD2, &h, window, &opts).unwrap();
    let field = verify_lemma(Lemma::FieldSupSharpD2, &h, window, &opts).unwrap();
    let l2_opts = LemmaOptions {
        alpha: vec![2, 1],
        ..LemmaOptions::default()
    };
    let l2 = verify_lemma(Lemma::FieldL2D2, &h, window, &l2_opts).unwrap();
    let pass = (rho.fit.exponent + 2.0).abs() <= 0.05 && field.fit.exponent <= -3.0 + 0.1 && l2.fit.exponent <= -0.5 - 3.0 + 0.1;
    report(
        3,
        pass,
        &format!(
            "sup rho {}; ||grad phi||_inf {}; ||d^(2,1) grad phi||_2 {}",
            fit_line(&rho.fit),
            fit_line(&field.fit),
            fit_line(&l2.fit)
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_4_linear_decay_d1() {
    let start = Instant::now();
    let h = AnalyticProfile::gaussian(1, 1.0, 1.0, 1.0);
    let window = (10.0, 200.0);
    let series: Vec<(f64, f64)> = log_times(window.0, window.1, 16)
        .into_iter()
        .map(|t| (t, potential_sup(&h, &[1], t).unwrap().value))
        .collect();
    let fit = fit_decay(&series, window).unwrap();
    let weighted = verify_lemma(Lemma::ForceSeriesD1, &h, window, &LemmaOptions::default()).unwrap();
    let pass = fit.exponent <= -1.5 + 0.05 && weighted.pass;
    report(
        4,
        pass,
        &format!("||d_x phi||_inf {}; <t>-weighted {}", fit_line(&fit), fit_line(&weighted.fit)),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_5_velocity_shift_inequality() {
    let start = Instant::now();
    let times = log_times(4.0, 256.0, 13);
    let bump = |amp: f64, x0: [f64; 2], v0: [f64; 2], sx: f64, sv: f64| Bump {
        amplitude: amp,
        x0: x0.to_vec(),
        v0: v0.to_vec(),
        sigma_x: sx,
        sigma_v: sv,
    };
    let profiles = [
        vec![bump(1.0, [0.0, 0.0], [0.0, 0.0], 1.0, 1.0)],
        vec![bump(1.0, [0.5, -0.3], [0.4, 0.2], 0.8, 1.2)],
        vec![bump(1.0, [-1.0, 0.0], [0.5, 0.0], 1.0, 0.7), bump(-0.6, [1.0, 0.5], [-0.3, 0.4], 0.6, 1.0)],
    ];
    let mut pass = true;
    let mut slopes = Vec::new();
    for bumps in profiles {
        let h = AnalyticProfile::new(2, &InitialDataSpec { bumps }).unwrap();
        let rep = pl_inequality_check(&h, &times).unwrap();
        pass &= rep.pass;
        slopes.push(rep.slope.map_or("none".to_string(), |s| format!("{s:.3}")));
    }
    report(5, pass, &format!("log-log slopes of the ratio: {}", slopes.join(", ")), start);
    assert!(pass);
}

fn nonlinear_run(grid: PhaseGrid, eps: f64, dt: f64, t_end: f64, record_every: usize, snapshots: Vec<f64>, energy: EnergyParams) -> (Vec<svp::diagnostics::DiagnosticsRecord>, Vec<PhaseProfile>) {
    let spec = InitialDataSpec::single(Bump::centered(grid.d, eps, 1.0, 1.0));
    let mut gamma = sample_initial(&spec, grid).unwrap();
    gamma.frame = Frame::Filtered;
    let opts = RunOptions {
        plan: StepPlan {
            dt,
            t_end,
            scheme: Scheme::FilteredStrang,
            field_cadence: 1,
        },
        tol: Tolerances::default(),
        record_every,
        snapshot_times: snapshots,
        energy,
        moment_order: (grid.d + 1) as f64,
    };
    let mut records = Vec::new();
    let mut snaps = Vec::new();
    run(gamma, &opts, &mut |ev| {
        match ev {
            RunEvent::Record(r) => records.push(r.clone()),
            RunEvent::Snapshot(s) => snaps.push(s.clone()),
        }
        Ok(())
    })
    .unwrap();
    (records, snaps)
}

#[test]
fn criterion_6_nonlinear_d1() {
    let start = Instant::now();
    let grid = PhaseGrid::new(1, 512, 512, 8.0, 8.0).unwrap();
    let energy = EnergyParams {
        radius: 1.0,
        epsilon: 0.05,
        c: 1.0,
        ..EnergyParams::default()
    };
    let (records, _) = nonlinear_run(grid, 0.05, 0.05, 40.0, 4, Vec::new(), energy);
    let l0 = records[0].l2;
    let drift = records.iter().map(|r| (r.l2 - l0).abs() / l0).fold(0.0, f64::max);
    let e0 = records[0].energies.unwrap();
    let mut growth = 0.0f64;
    for r in &records {
        let e = r.energies.expect("energies while lambda_t >= 0");
        for k in 0..4 {
            growth = growth.max(e[k] / e0[k]);
        }
    }
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.field.sup[0])).collect();
    let fit = fit_decay(&series, (5.0, 40.0)).unwrap();
    let pass_a = drift < 1e-6;
    let pass_b = growth <= 1.5;
    let pass_c = fit.exponent <= -1.4;
    report(
        6,
        pass_a && pass_b && pass_c,
        &format!(
            "(a) L2 drift {drift:.2e}; (b) max energy ratio {growth:.4}; (c) ||d_x phi||_inf {}",
            fit_line(&fit)
        ),
        start,
    );
    assert!(pass_a && pass_b && pass_c);
}

#[test]
#[ignore = "heavyweight d = 2 run (about two hours on one core)"]
fn criterion_7_nonlinear_d2() {
    let start = Instant::now();
    let grid = PhaseGrid::new(2, 64, 64, 8.0, 7.5).unwrap();
    let snaps_at = vec![2.0, 4.0, 8.0, 16.0, 32.0];
    let (records, snaps) = nonlinear_run(grid, 0.05, 0.1, 32.0, 5, snaps_at, EnergyParams::default());
    let z0 = records[0].z_norm;
    let z_dev = records.iter().map(|r| (r.z_norm - z0).abs() / z0).fold(0.0, f64::max);
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.field.sup[0])).collect();
    let fit = fit_decay(&series, (4.0, 32.0)).unwrap();
    let scat = scattering_monitor(&snaps).unwrap();
    let h1 = scat.exponent_h1.unwrap_or(f64::INFINITY);
    let pass_a = z_dev <= 0.05;
    let pass_b = fit.exponent <= -2.5;
    let pass_c = h1 <= -0.7;
    report(
        7,
        pass_a && pass_b && pass_c,
        &format!(
            "(a) max z-norm deviation {:.2}%; (b) ||grad phi||_inf {}; (c) H1 Cauchy exponent {h1:.3}",
            100.0 * z_dev,
            fit_line(&fit)
        ),
        start,
    );
    assert!(pass_a && pass_b && pass_c);
}

fn filtered_run(initial: &PhaseProfile, dt: f64, t_end: f64) -> PhaseProfile {
    let tol = Tolerances::default();
    let mut s = initial.clone();
    s.frame = Frame::Filtered;
    let n = (t_end / dt).round() as usize;
    for k in 0..n {
        s = strang_step(&s, k as f64 * dt, dt, &tol).unwrap();
    }
    s
}

fn l2_diff(a: &PhaseProfile, b: &PhaseProfile) -> f64 {
    let s: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y) * (x - y)).sum();
    (s * a.grid.cell_volume()).sqrt()
}

#[test]
fn criterion_8_scheme_self_consistency() {
    let start = Instant::now();
    let grid = PhaseGrid::new(1, 256, 128, 16.0, 8.0).unwrap();
    let mu0 = sample_initial(&InitialDataSpec::single(Bump::centered(1, 0.05, 1.0, 1.0)), grid).unwrap();
    let tol = Tolerances::default();

    let coarse = filtered_run(&mu0, 0.1, 2.0);
    let mid = filtered_run(&mu0, 0.05, 2.0);
    let fine = filtered_run(&mu0, 0.025, 2.0);
    let order = (l2_diff(&coarse, &mid) / l2_diff(&mid, &fine)).log2();

    let dt = 0.025;
    let mut mu = mu0.clone();
    for k in 0..80 {
        mu = reference_physical_step(&mu, k as f64 * dt, dt, &tol).unwrap();
    }
    let twin = l2_diff(&to_filtered(&mu, 2.0).unwrap(), &fine);

    let pass = twin < 1e-4 && (1.8..=2.2).contains(&order);
    report(8, pass, &format!("twin L2 difference {twin:.2e}; Strang order {order:.3}"), start);
    assert!(pass);
}

#[test]
fn criterion_9_scope_statement() {
    println!(
        "criterion 9: PASS (informational: continuum statements are probed only through the finite-time fits, invariants and convergence orders above)"
    );
}
