use proptest::prelude::*;

use svp::diagnostics::{analytic_energy, fit_decay, sobolev_mixed, Axis, N_MAX};
use svp::evolution::{strang_step, Tolerances};
use svp::harness::checkpoint::{decode, encode};
use svp::linear_oracle::{rho_exact, AnalyticProfile};
use svp::phase_space::{density_filtered, to_filtered, to_physical, Bump, Frame, InitialDataSpec, PhaseGrid, PhaseProfile};
use svp::screened_poisson::{grow_domain, GreenKernel};

fn bump_1d() -> impl Strategy<Value = Bump> {
    (0.01f64..1.0, -1.5f64..1.5, -1.0f64..1.0, 0.6f64..1.2, 0.6f64..1.2).prop_map(|(a, x, v, sx, sv)| Bump {
        amplitude: a,
        x0: vec![x],
        v0: vec![v],
        sigma_x: sx,
        sigma_v: sv,
    })
}

fn profile_1d(bumps: Vec<Bump>, frame: Frame) -> PhaseProfile {
    profile_on(64, 64, bumps, frame)
}

fn profile_on(nx: usize, nv: usize, bumps: Vec<Bump>, frame: Frame) -> PhaseProfile {
    let g = PhaseGrid::new(1, nx, nv, 10.0, 10.0).unwrap();
    let spec = InitialDataSpec { bumps };
    PhaseProfile::from_fn(g, frame, |x, v| spec.eval(&x[..1], &v[..1]))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn frame_change_is_an_isometry(b in bump_1d(), t in 0.0f64..5.0) {
        // 128 cells put the Nyquist content of the narrowest bumps below round-off
        let mu = profile_on(128, 64, vec![b], Frame::Physical);
        let gamma = to_filtered(&mu, t).unwrap();
        prop_assert!((gamma.l2_norm() - mu.l2_norm()).abs() <= 1e-12 * mu.l2_norm());
        let back = to_physical(&gamma, t).unwrap();
        let err = back.values.iter().zip(&mu.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn filtered_density_carries_the_l2_mass(b in bump_1d(), t in 0.0f64..4.0) {
        // exact up to the cubic-spline damping, which is fourth order in the cell size
        let gamma = profile_on(256, 256, vec![b], Frame::Filtered);
        let omega = grow_domain(t, gamma.grid.lv, &gamma.grid.spatial());
        let rho = density_filtered(&gamma, t, &omega, 1e-10).unwrap();
        let mass = gamma.l2_norm().powi(2);
        prop_assert!((rho.l1_norm() - mass).abs() < 2e-6 * mass, "{} vs {}", rho.l1_norm(), mass);
        prop_assert!(rho.min() > -1e-8 * mass);
    }

    #[test]
    fn density_is_quadratic_and_conserves_mass(a in bump_1d(), b in bump_1d(), c in -3.0f64..3.0, t in 0.0f64..50.0) {
        let spec = InitialDataSpec { bumps: vec![a, b] };
        let h = AnalyticProfile::new(1, &spec).unwrap();
        let y = [0.37];
        let r = rho_exact(&h, &y, t);
        prop_assert!((rho_exact(&h.scaled(c), &y, t) - c * c * r).abs() <= 1e-12 * (c * c * r).abs().max(1e-300));
        let rho = h.density(t);
        let mass: f64 = rho.terms.iter().map(|p| p.weight * (2.0 * std::f64::consts::PI * p.var).sqrt()).sum();
        let l2 = spec.l2_norm(1).powi(2);
        prop_assert!((mass - l2).abs() < 1e-12 * l2);
    }

    #[test]
    fn mixed_norms_obey_the_triangle_inequality(a in bump_1d(), b in bump_1d(), kx in 0usize..2, kv in 0usize..2) {
        let p = profile_1d(vec![a.clone()], Frame::Filtered);
        let q = profile_1d(vec![b.clone()], Frame::Filtered);
        let s = profile_1d(vec![a, b], Frame::Filtered);
        let lhs = sobolev_mixed(&s, kx, kv).unwrap();
        let rhs = sobolev_mixed(&p, kx, kv).unwrap() + sobolev_mixed(&q, kx, kv).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn analytic_energy_grows_with_radius(b in bump_1d(), l1 in 0.0f64..1.0, dl in 0.0f64..1.0) {
        let p = profile_1d(vec![b], Frame::Filtered);
        for axis in [Axis::X, Axis::V] {
            let e1 = analytic_energy(&p, l1, axis, 0, N_MAX).unwrap().value;
            let e2 = analytic_energy(&p, l1 + dl, axis, 0, N_MAX).unwrap().value;
            prop_assert!(e2 >= e1 * (1.0 - 1e-12));
            prop_assert!(e1 >= p.l2_norm() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn power_laws_are_recovered(p in -5.0f64..1.0, c in 0.01f64..100.0, t1 in 1.0f64..10.0) {
        let series: Vec<(f64, f64)> = (0..12).map(|i| t1 * 4f64.powf(i as f64 / 11.0)).map(|t| (t, c * t.powf(p))).collect();
        let fit = fit_decay(&series, (t1, 4.0 * t1)).unwrap();
        prop_assert!((fit.exponent - p).abs() < 1e-9);
        prop_assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn checkpoints_round_trip(seed in any::<u64>(), nx in 3u32..5, t in -1e3f64..1e3) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = PhaseGrid::new(1, 1 << nx, 8, rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)).unwrap();
        let mut p = PhaseProfile::zeros(g, Frame::Filtered);
        for v in &mut p.values {
            *v = f64::from_bits(rng.gen::<u64>() & 0x7fef_ffff_ffff_ffff);
        }
        p.time = t;
        let bytes = encode(&p);
        let q = decode(&bytes).unwrap();
        prop_assert_eq!(encode(&q), bytes);
    }

    #[test]
    fn green_kernel_is_positive_and_decreasing(d in 1usize..4, r in 0.01f64..15.0, dr in 0.01f64..1.0) {
        let g = GreenKernel::new(d).unwrap();
        let a = g.eval(r).unwrap();
        let b = g.eval(r + dr).unwrap();
        prop_assert!(a > 0.0 && b > 0.0 && b < a);
        prop_assert!(g.eval_derivative(r).unwrap() < 0.0);
    }

    #[test]
    fn vacuum_stays_vacuum(t in 0.0f64..10.0, dt in 0.01f64..0.5) {
        let g = PhaseGrid::new(1, 16, 16, 4.0, 4.0).unwrap();
        let p = PhaseProfile::zeros(g, Frame::Filtered);
        prop_assert!(strang_step(&p, t, dt, &Tolerances::default()).unwrap().is_zero());
    }
}
