use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use cavitraj::config::parse_config;
use cavitraj::ensemble::Welford;
use cavitraj::model::{ModelFields, TrapSpec};
use cavitraj::observables::{odd_even_imbalance, site_decompose_with, wrap_phase, SiteLayout};
use cavitraj::presets::preset;
use cavitraj::sde::{
    run_trajectory, Integrator, NoiseUpdate, Observers, RecorderConfig, StepScheme, TrajectoryState,
};
use cavitraj::{make_grid, normalize, ComplexField};

fn lattice_trap() -> TrapSpec {
    TrapSpec {
        harmonic_strength: 0.5,
        lattice_depth_s: 10.0,
        lattice_wavenumber: 8.1,
    }
}

fn random_field(grid: &Arc<cavitraj::Grid>, coeffs: &[(f64, f64)]) -> ComplexField {
    ComplexField::from_fn(grid.clone(), |x| {
        let mut z = Complex64::new((-x * x / 6.0).exp(), 0.0);
        for (k, &(a, b)) in coeffs.iter().enumerate() {
            let q = (k + 1) as f64 * 0.7;
            z += Complex64::new(a * (q * x).cos(), b * (q * x).sin()) * (-x * x / 10.0).exp();
        }
        z
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_rotation_conserves_norm(seed in 0u64..1000, h in 0.1f64..3.0, k_c in 0.2f64..9.0) {
        let mut rc = preset("kohn").unwrap();
        rc.grid.n_points = 128;
        rc.grid.extent = 16.0;
        rc.params.pump.h0g0_over_delta = h;
        rc.params.cavity.k_c = k_c;
        let grid = rc.grid.build().unwrap();
        let fields = Arc::new(ModelFields::new(&rc.params, grid.clone()).unwrap());
        let psi = normalize(&random_field(&grid, &[(0.2, 0.1)]), 750.0).unwrap();
        let scheme = StepScheme { dt: 1e-3, noise_update: NoiseUpdate::ExactRotation, ..StepScheme::default() };
        let out = run_trajectory(
            &fields, &scheme, &TrajectoryState::new(psi), 0.05,
            &RecorderConfig { stride: 10, ..RecorderConfig::default() },
            &Observers::default(), seed,
        ).unwrap();
        for r in &out.records {
            prop_assert!((r.norm / 750.0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn measurement_rate_is_non_negative(seed in 0u64..1000) {
        let mut rc = preset("lattice-selforg").unwrap();
        rc.grid.n_points = 256;
        let grid = rc.grid.build().unwrap();
        let fields = Arc::new(ModelFields::new(&rc.params, grid.clone()).unwrap());
        let integ = Integrator::new(fields, rc.scheme).unwrap();
        let coeffs: Vec<(f64, f64)> = (0..4).map(|i| (((seed + i) as f64).sin(), ((seed * 3 + i) as f64).cos())).collect();
        let state = TrajectoryState::new(normalize(&random_field(&grid, &coeffs), 750.0).unwrap());
        prop_assert!(integ.measurement_rate(&state) >= 0.0);
    }

    #[test]
    fn sites_partition_the_norm(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..6)) {
        let grid = make_grid(512, 12.0).unwrap();
        let layout = SiteLayout::new(&lattice_trap(), &grid).unwrap();
        let psi = random_field(&grid, &coeffs);
        let d = site_decompose_with(&psi, &layout).unwrap();
        let total: f64 = d.site_populations.iter().sum();
        prop_assert!((total - psi.norm()).abs() <= 1e-12 * psi.norm());
        let imb = odd_even_imbalance(&d).unwrap();
        prop_assert!((-1.0..=1.0).contains(&imb));
        for p in &d.site_phases {
            prop_assert!(p.abs() <= PI);
        }
    }

    #[test]
    fn wrap_phase_is_a_representative(phi in -100.0f64..100.0) {
        let w = wrap_phase(phi);
        prop_assert!(w > -PI && w <= PI);
        let turns = (phi - w) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn welford_matches_two_pass(xs in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let mut w = Welford::default();
        xs.iter().for_each(|&x| w.push(x));
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        prop_assert!((w.mean - mean).abs() <= 1e-9 * (1.0 + mean.abs()));
        prop_assert!((w.variance() - var).abs() <= 1e-9 * (1.0 + var));
        prop_assert!((w.std_err() - (var / n).sqrt()).abs() <= 1e-9 * (1.0 + var));
    }

    #[test]
    fn config_round_trips(
        name in prop::sample::select(cavitraj::presets::PRESET_NAMES.to_vec()),
        log_n in 6u32..11,
        kappa in 1.0f64..500.0,
        dt in 1e-5f64..1e-2,
        seed in any::<u64>(),
        nu in 0.0f64..200.0,
    ) {
        let mut rc = preset(name).unwrap();
        rc.grid.n_points = 1 << log_n;
        rc.params.cavity.kappa = kappa;
        rc.scheme.dt = dt;
        rc.ensemble.base_seed = seed;
        rc.params.nu = nu;
        let text = rc.to_toml().unwrap();
        prop_assert_eq!(parse_config(&text).unwrap(), rc);
    }
}
