//! Acceptance suite. Runs as a plain program (`harness = false`) so that every
//! criterion prints exactly one line, even when it passes.
//!
//! `cargo test --test acceptance -- 3 7` runs a subset.

use std::f64::consts::PI;
use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use cavitraj::bdg::solve_bdg;
use cavitraj::ensemble::Welford;
use cavitraj::groundstate::{onset_pump_scale, solve_ground_state, stationary_alpha};
use cavitraj::model::{
    CavitySpec, ModelFields, ModelParams, PumpProfile, PumpShape, TrapSpec, Variant,
};
use cavitraj::observables::wrap_phase;
use cavitraj::pipeline::{prepare, run_configured_ensemble, run_threshold_scan};
use cavitraj::presets::{preset, THIRD_MODE_K_C};
use cavitraj::sde::{
    run_trajectory, Integrator, NoiseUpdate, Observers, RecorderConfig, Splitting, StepScheme,
    TrajectoryState,
};
use cavitraj::{make_grid, normalize, ComplexField, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

type Criterion = fn() -> Result<Outcome>;

const CRITERIA: [(&str, Criterion); 11] = [
    ("Kohn mode at the trap frequency", kohn_theorem),
    ("noninteracting spectrum", noninteracting_spectrum),
    ("phase diffusion law", phase_diffusion),
    ("norm conservation", norm_conservation),
    ("strong order of the Milstein step", strong_order),
    ("adiabatic elimination consistency", adiabatic_elimination),
    ("vacuum floor of the cavity field", vacuum_floor),
    ("self-organization threshold", selforg_threshold),
    ("dynamical symmetry breaking", symmetry_breaking),
    ("mode selectivity", mode_selectivity),
    ("Gaussian pump locality", gaussian_locality),
];

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut out = std::io::stdout();
    let mut failures = 0;
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        let secs = start.elapsed().as_secs_f64();
        writeln!(
            out,
            "criterion {n:>2} [{name}]: {verdict} ({detail}; {secs:.1} s)"
        )
        .ok();
        out.flush().ok();
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        writeln!(out, "{failures} acceptance criteria failed").ok();
        ExitCode::FAILURE
    }
}

fn harmonic_grid() -> Result<Arc<cavitraj::Grid>> {
    make_grid(512, 20.0)
}

fn kohn_theorem() -> Result<Outcome> {
    let grid = harmonic_grid()?;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for nu in [0.0, 16.0, 64.0] {
        let params = ModelParams::harmonic(nu, 750.0);
        let gs = solve_ground_state(&params, &grid, 1e-11)?;
        let modes = solve_bdg(&gs, &params, 3)?;
        let e1 = modes.energies()[0];
        worst = worst.max((e1 - 1.0).abs());
        parts.push(format!("NU={nu}: {e1:.7}"));
    }
    outcome(
        worst <= 1e-3,
        format!("{}; max |e1 - 1| = {worst:.2e} <= 1e-3", parts.join(", ")),
    )
}

fn noninteracting_spectrum() -> Result<Outcome> {
    let grid = harmonic_grid()?;
    let params = ModelParams::harmonic(0.0, 750.0);
    let gs = solve_ground_state(&params, &grid, 1e-12)?;
    let modes = solve_bdg(&gs, &params, 5)?;
    let energies = modes.energies();
    let worst = energies
        .iter()
        .enumerate()
        .map(|(i, e)| (e - (i + 1) as f64).abs())
        .fold(0.0, f64::max);
    let dmu = (gs.mu - 0.5).abs();
    outcome(
        energies.len() == 5 && worst <= 1e-4 && dmu <= 1e-6,
        format!("max |e_j - j| = {worst:.2e} <= 1e-4, |mu - 0.5| = {dmu:.2e} <= 1e-6"),
    )
}

/// Frozen field: no kinetic term, no trap, NU = 0, pump light shift compensated,
/// so the only evolution is the measurement phase −a(x)W(t).
fn phase_diffusion() -> Result<Outcome> {
    let grid = make_grid(64, 8.0)?;
    let params = ModelParams {
        trap: TrapSpec {
            harmonic_strength: 0.0,
            lattice_depth_s: 0.0,
            lattice_wavenumber: 0.0,
        },
        cavity: CavitySpec {
            g0_sq_over_delta: 0.0256,
            k_c: 1.3,
            kappa: 100.0,
            ..CavitySpec::default()
        },
        pump: PumpProfile {
            shape: PumpShape::Uniform { amplitude: 1.0 },
            h0g0_over_delta: 2.0,
            h0_sq_over_delta: 4.0 / 0.0256,
        },
        nu: 0.0,
        atom_number: 750.0,
        compensate_pump_lightshift: true,
        variant: Variant::TransverseEliminated,
    };
    let fields = Arc::new(ModelFields::new(&params, grid.clone())?);
    let scheme = StepScheme {
        dt: 0.01,
        noise_update: NoiseUpdate::ExactRotation,
        kinetic: false,
        ..StepScheme::default()
    };
    let probes = [0.4, 1.0, 2.2];
    let recorder = RecorderConfig {
        stride: 40,
        density: false,
        probe_points: probes.to_vec(),
        store_wiener: false,
    };
    let psi = normalize(
        &ComplexField::from_fn(grid.clone(), |x| Complex64::new((-x * x / 8.0).exp(), 0.0)),
        750.0,
    )?;
    let initial = TrajectoryState::new(psi);
    let t_final = 4.0;
    let n = 10_000;

    // oracle: a(x) = sqrt(2/κ)·(h0g0/Δ)·sin(k_c x), evaluated at the probe grid points
    let idx: Vec<usize> = probes.iter().map(|&x| grid.nearest_index(x)).collect();
    let a: Vec<f64> = idx
        .iter()
        .map(|&i| (2.0 / params.cavity.kappa).sqrt() * 2.0 * (1.3 * grid.positions()[i]).sin())
        .collect();

    let first = run_trajectory(
        &fields,
        &scheme,
        &initial,
        t_final,
        &recorder,
        &Observers::default(),
        0,
    )?;
    let times = first.times();
    let phase0: Vec<Complex64> = first.records[0].probes.clone();
    let n_t = times.len();
    let mut var = vec![vec![Welford::default(); n_t]; probes.len()];
    let mut cos = [Welford::default(), Welford::default(), Welford::default()];
    let pairs = [(0, 1), (0, 2), (1, 2)];
    for seed in 0..n {
        let traj = if seed == 0 {
            first.clone()
        } else {
            run_trajectory(
                &fields,
                &scheme,
                &initial,
                t_final,
                &recorder,
                &Observers::default(),
                seed,
            )?
        };
        for (ti, rec) in traj.records.iter().enumerate() {
            for (p, v) in rec.probes.iter().enumerate() {
                var[p][ti].push(wrap_phase((v / phase0[p]).arg()));
            }
        }
        let last = &traj.records[n_t - 1];
        let phi: Vec<f64> = last
            .probes
            .iter()
            .zip(&phase0)
            .map(|(v, z)| (v / z).arg())
            .collect();
        for (w, &(i, j)) in cos.iter_mut().zip(&pairs) {
            w.push((phi[i] - phi[j]).cos());
        }
    }

    let mut pass = true;
    let mut parts = Vec::new();
    for p in 0..probes.len() {
        // least-squares slope through the origin of Var[Φ](t)
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for ti in 0..n_t {
            sxy += times[ti] * var[p][ti].variance();
            sxx += times[ti] * times[ti];
        }
        let slope = sxy / sxx;
        let expected = a[p] * a[p];
        let rel = (slope / expected - 1.0).abs();
        pass &= rel <= 0.05;
        parts.push(format!(
            "x={}: slope {slope:.5} vs {expected:.5} ({:.1}%)",
            probes[p],
            100.0 * rel
        ));
    }
    for (w, &(i, j)) in cos.iter().zip(&pairs) {
        let d = a[i] - a[j];
        let expected = (-d * d * t_final / 2.0).exp();
        let z = (w.mean - expected).abs() / w.std_err();
        pass &= z <= 3.0;
        parts.push(format!(
            "<cos> ({i},{j}) {:.5} vs {expected:.5} ({z:.1} SE)",
            w.mean
        ));
    }
    outcome(pass, parts.join(", "))
}

fn lattice_state(rc: &cavitraj::config::RunConfig) -> Result<(Arc<ModelFields>, TrajectoryState)> {
    let prep = prepare(rc, false)?;
    Ok((prep.fields.clone(), prep.initial_state(rc)?))
}

/// Per-step relative norm changes over `steps` steps.
fn norm_steps(
    rc: &cavitraj::config::RunConfig,
    scheme: StepScheme,
    steps: usize,
) -> Result<(Vec<f64>, Vec<[f64; 2]>, f64)> {
    let (fields, initial) = lattice_state(rc)?;
    let recorder = RecorderConfig {
        stride: 1,
        density: false,
        probe_points: Vec::new(),
        store_wiener: true,
    };
    let traj = run_trajectory(
        &fields,
        &scheme,
        &initial,
        steps as f64 * scheme.dt,
        &recorder,
        &Observers::default(),
        7,
    )?;
    let rel: Vec<f64> = traj
        .records
        .windows(2)
        .map(|w| (w[1].norm - w[0].norm) / w[0].norm)
        .collect();
    let a_max = Integrator::new(fields, scheme)?
        .noise_coefficient()
        .iter()
        .fold(0.0_f64, |m, a| m.max(a.abs()));
    Ok((rel, traj.wiener.unwrap_or_default(), a_max))
}

fn norm_conservation() -> Result<Outcome> {
    let rc = preset("lattice-selforg")?;
    let steps = 1000;
    let exact = StepScheme {
        noise_update: NoiseUpdate::ExactRotation,
        ..rc.scheme
    };
    let (rel, _, _) = norm_steps(&rc, exact, steps)?;
    let worst_exact = rel.iter().fold(0.0_f64, |m, r| m.max(r.abs()));

    let milstein = StepScheme {
        noise_update: NoiseUpdate::Milstein,
        ..rc.scheme
    };
    let (rel_m, dw, a_max) = norm_steps(&rc, milstein, steps)?;
    // ΔN/N = ⟨a⁴⟩dW⁴/4 for the Milstein factor; bounded by a_max⁴dW⁴/4
    let mut within = true;
    let mut mean_m = 0.0;
    for (r, w) in rel_m.iter().zip(&dw) {
        within &= r.abs() <= a_max.powi(4) * w[0].powi(4) / 4.0 + 1e-12;
        mean_m += r.abs() / steps as f64;
    }
    let half = StepScheme {
        dt: milstein.dt / 2.0,
        ..milstein
    };
    let (rel_h, _, _) = norm_steps(&rc, half, steps)?;
    let mean_h = rel_h.iter().map(|r| r.abs()).sum::<f64>() / steps as f64;
    let order = mean_m / mean_h;
    let pass = rel.len() == steps && worst_exact <= 1e-12 && within && (3.0..=5.0).contains(&order);
    outcome(
        pass,
        format!(
            "exact rotation max |dN/N| per step {worst_exact:.1e} <= 1e-12; Milstein within a^4 dW^4/4 bound: {within}, \
             mean per-step drift {mean_m:.2e}, halving dt reduces it {order:.2}x (expect 4)"
        ),
    )
}

/// Pathwise error of coarse steps against a dt/8 reference driven by the
/// same Brownian path.
fn strong_order() -> Result<Outcome> {
    let grid = make_grid(128, 16.0)?;
    let params = ModelParams {
        cavity: CavitySpec {
            g0_sq_over_delta: 0.0256,
            k_c: 0.9,
            kappa: 1.0,
            ..CavitySpec::default()
        },
        pump: PumpProfile {
            shape: PumpShape::Uniform { amplitude: 1.0 },
            h0g0_over_delta: 1.0,
            h0_sq_over_delta: 1.0 / 0.0256,
        },
        compensate_pump_lightshift: true,
        ..ModelParams::harmonic(10.0, 750.0)
    };
    let gs = solve_ground_state(&params, &grid, 1e-10)?;
    let fields = Arc::new(ModelFields::new(&params, grid.clone())?);
    let psi0 = normalize(&gs.psi0, params.atom_number)?;
    let coarse: [f64; 2] = [4e-3, 2e-3];
    let fine_dt = coarse[1] / 8.0;
    let t_final: f64 = 0.5;
    let n_fine = (t_final / fine_dt).round() as usize;
    let scheme = |dt| StepScheme {
        dt,
        splitting: Splitting::Strang,
        noise_update: NoiseUpdate::Milstein,
        noise_strength: 1.0,
        kinetic: true,
    };
    let run = |dt: f64, fine: &[f64]| -> Result<ComplexField> {
        let per = (dt / fine_dt).round() as usize;
        let mut integ = Integrator::new(fields.clone(), scheme(dt))?;
        let mut state = TrajectoryState::new(psi0.clone());
        for chunk in fine.chunks(per) {
            integ.step(&mut state, [chunk.iter().sum(), 0.0])?;
        }
        Ok(state.psi)
    };
    let distance = |a: &ComplexField, b: &ComplexField| -> f64 {
        let d: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        (d / b.values().iter().map(|y| y.norm_sqr()).sum::<f64>()).sqrt()
    };
    let paths = 20;
    let mut err_sq = [0.0; 2];
    for p in 0..paths {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + p);
        let fine: Vec<f64> = (0..n_fine)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * fine_dt.sqrt()
            })
            .collect::<Vec<f64>>();
        let reference = run(fine_dt, &fine)?;
        for (e, &dt) in err_sq.iter_mut().zip(&coarse) {
            *e += distance(&run(dt, &fine)?, &reference).powi(2) / paths as f64;
        }
    }
    let e = [err_sq[0].sqrt(), err_sq[1].sqrt()];
    let ratio = e[0] / e[1];
    outcome(
        (1.6..=2.4).contains(&ratio),
        format!(
            "rms error dt={}: {:.3e}, dt={}: {:.3e}, ratio {ratio:.3} in [1.6, 2.4]",
            coarse[0], e[0], coarse[1], e[1]
        ),
    )
}

/// Full model, noise off, frozen atoms: α relaxes to the stationary value,
/// which differs from the bad-cavity form (η − iY)(1 + iΔ̃/κ)/κ at second
/// order in Δ̃/κ.
fn adiabatic_elimination() -> Result<Outcome> {
    let grid = make_grid(128, 12.0)?;
    let base = ModelParams {
        trap: TrapSpec {
            harmonic_strength: 0.0,
            lattice_depth_s: 0.0,
            lattice_wavenumber: 0.0,
        },
        cavity: CavitySpec {
            g0_sq_over_delta: 0.0256,
            k_c: 0.7,
            kappa: 100.0,
            eta: 40.0,
            ..CavitySpec::default()
        },
        pump: PumpProfile {
            shape: PumpShape::Uniform { amplitude: 1.0 },
            h0g0_over_delta: 0.5,
            h0_sq_over_delta: 0.25 / 0.0256,
        },
        nu: 0.0,
        atom_number: 750.0,
        compensate_pump_lightshift: false,
        variant: Variant::FullCavity,
    };
    let psi = normalize(
        &ComplexField::from_fn(grid.clone(), |x| {
            Complex64::new((-(x - 1.0).powi(2) / 4.0).exp(), 0.0)
        }),
        750.0,
    )?;
    let scheme = StepScheme {
        dt: 1e-3,
        noise_strength: 0.0,
        kinetic: false,
        ..StepScheme::default()
    };
    let mut parts = Vec::new();
    let mut scaled = Vec::new();
    let mut relax_err: f64 = 0.0;
    for delta in [0.01, 0.05, 0.1] {
        let probe = Integrator::new(Arc::new(ModelFields::new(&base, grid.clone())?), scheme)?;
        let (x, y) = probe.cavity_integrals(&psi);
        let mut params = base;
        params.cavity.delta_pc = x + delta * params.cavity.kappa;
        let mut integ =
            Integrator::new(Arc::new(ModelFields::new(&params, grid.clone())?), scheme)?;
        let mut state = TrajectoryState::new(psi.clone());
        for _ in 0..300 {
            integ.step(&mut state, [0.0, 0.0])?;
        }
        let kappa = params.cavity.kappa;
        let eliminated = Complex64::new(params.cavity.eta, -y) * Complex64::new(1.0, delta) / kappa;
        let exact = stationary_alpha(&params, x, y);
        relax_err = relax_err.max((state.alpha - exact).norm() / exact.norm());
        let rel = (state.alpha - eliminated).norm() / state.alpha.norm();
        scaled.push(rel / (delta * delta));
        parts.push(format!("d={delta}: rel err {rel:.3e}"));
    }
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    outcome(
        hi / lo <= 2.0 && relax_err < 1e-9,
        format!(
            "{}; err/d^2 spans [{lo:.3}, {hi:.3}] (factor {:.3} <= 2); relaxed alpha matches (eta - iY)/(kappa - i dpc) to {relax_err:.1e}",
            parts.join(", "),
            hi / lo
        ),
    )
}

fn vacuum_floor() -> Result<Outcome> {
    let grid = make_grid(64, 8.0)?;
    let params = ModelParams {
        cavity: CavitySpec {
            g0_sq_over_delta: 0.0,
            kappa: 100.0,
            eta: 0.0,
            ..CavitySpec::default()
        },
        pump: PumpProfile::off(),
        variant: Variant::FullCavity,
        ..ModelParams::harmonic(10.0, 750.0)
    };
    let gs = solve_ground_state(&params, &grid, 1e-10)?;
    let fields = Arc::new(ModelFields::new(&params, grid.clone())?);
    let initial = TrajectoryState::new(normalize(&gs.psi0, 750.0)?);
    let scheme = StepScheme::with_dt(1e-3);
    let recorder = RecorderConfig {
        stride: 100,
        ..RecorderConfig::default()
    };
    let mut photons = Welford::default();
    let mut rate = Welford::default();
    for seed in 0..10_000 {
        let traj = run_trajectory(
            &fields,
            &scheme,
            &initial,
            0.1,
            &recorder,
            &Observers::default(),
            seed,
        )?;
        let last = traj.records.last().expect("final record");
        photons.push(last.alpha.norm_sqr());
        rate.push(last.rate);
    }
    let z = (photons.mean - 0.5).abs() / photons.std_err();
    outcome(
        z <= 3.0,
        format!(
            "<|alpha|^2> = {:.5} +- {:.5} ({z:.2} SE from 0.5); mean rate {:.3} +- {:.3}",
            photons.mean,
            photons.std_err(),
            rate.mean,
            rate.std_err()
        ),
    )
}

fn selforg_threshold() -> Result<Outcome> {
    let rc = preset("threshold-scan")?;
    let scan = run_threshold_scan(&rc)?;
    match onset_pump_scale(&scan) {
        Some(p) => outcome(
            (5.0..=20.0).contains(&p),
            format!("onset at pump scale {p} in [5, 20]"),
        ),
        None => outcome(false, "no onset in the scanned range".into()),
    }
}

fn symmetry_breaking() -> Result<Outcome> {
    let mut rc = preset("lattice-selforg")?;
    rc.grid.n_points = 512;
    rc.ensemble.n_trajectories = 100;
    rc.ensemble.t_final = 2.0 * 2.0 * PI;
    rc.ensemble.recorder.stride = 628;
    rc.ensemble.recorder.density = false;
    rc.ensemble.keep_trajectories = true;
    let (_, res) = run_configured_ensemble(&rc, false)?;
    let s = &res.stats;
    let floor = s.imbalance.iter().map(|w| w.std_err()).fold(0.0, f64::max);
    let reached = res
        .trajectories
        .iter()
        .filter(|t| {
            t.records
                .iter()
                .any(|r| r.imbalance.is_some_and(|i| i.abs() > 5.0 * floor))
        })
        .count();
    let frac = reached as f64 / res.trajectories.len() as f64;
    let worst_z = s
        .imbalance
        .iter()
        .skip(1)
        .map(|w| w.mean.abs() / w.std_err())
        .fold(0.0, f64::max);
    let final_abs = s.abs_imbalance.last().map(|w| w.mean).unwrap_or_default();
    outcome(
        frac >= 0.8 && worst_z <= 3.0,
        format!(
            "{reached}/{} trajectories exceed 5 x floor ({:.4}); ensemble mean within {worst_z:.2} SE of 0 (<= 3); final <|I|> = {final_abs:.3}",
            res.trajectories.len(),
            5.0 * floor
        ),
    )
}

fn argmax(values: &[Welford]) -> usize {
    values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
        .map(|(i, _)| i + 1)
        .unwrap_or(0)
}

fn harmonic_run(name: &str, t_final: f64) -> Result<cavitraj::config::RunConfig> {
    let mut rc = preset(name)?;
    rc.grid.n_points = 512;
    rc.ensemble.n_trajectories = 100;
    rc.ensemble.t_final = t_final;
    rc.ensemble.recorder.density = false;
    Ok(rc)
}

fn mode_selectivity() -> Result<Outcome> {
    let t_scan = 0.16 * 2.0 * PI;
    let mut parts = Vec::new();

    let rc = harmonic_run("kohn", t_scan)?;
    let (_, res) = run_configured_ensemble(&rc, false)?;
    let pops = res.stats.bdg_populations.last().expect("records");
    let kohn_top = argmax(pops);
    let kohn_q1 = res.stats.abs_q1.last().map(|w| w.mean).unwrap_or_default();
    parts.push(format!(
        "k_c={}: largest mode {kohn_top} (n1 {:.3}, n2 {:.3})",
        rc.params.cavity.k_c, pops[0].mean, pops[1].mean
    ));

    let mut rc = harmonic_run("third-mode", t_scan)?;
    rc.params.cavity.k_c = THIRD_MODE_K_C;
    let (_, res) = run_configured_ensemble(&rc, false)?;
    let pops = res.stats.bdg_populations.last().expect("records");
    let third_top = argmax(pops);
    parts.push(format!(
        "k_c={THIRD_MODE_K_C}: largest mode {third_top} (n3 {:.3})",
        pops[2].mean
    ));

    let mut rc = harmonic_run("breathing", 2.0 * PI)?;
    rc.ensemble.recorder.stride = 400;
    let (prep, res) = run_configured_ensemble(&rc, false)?;
    let s = &res.stats;
    let q1_max = s.abs_q1.iter().map(|w| w.mean).fold(0.0, f64::max);
    let odd_max = s
        .bdg_populations
        .iter()
        .flat_map(|p| p.iter().step_by(2).map(|w| w.mean))
        .fold(0.0, f64::max);
    let even_max = s
        .bdg_populations
        .iter()
        .map(|p| p[1].mean)
        .fold(0.0, f64::max);
    let dq: Vec<f64> = s.delta_q.iter().map(|w| w.mean).collect();
    let turns = turning_times(&s.times, &dq, 1e-3 * dq[0]);
    // successive extrema of the width are half a breathing period apart
    let half_period = PI
        / prep
            .modes
            .as_ref()
            .expect("harmonic runs carry modes")
            .modes[1]
            .energy;
    let mean_spacing = if turns.len() >= 2 {
        (turns[turns.len() - 1] - turns[0]) / (turns.len() - 1) as f64
    } else {
        f64::NAN
    };
    let spacing_ok = (mean_spacing / half_period - 1.0).abs() <= 0.25;
    let spacings: Vec<String> = turns
        .windows(2)
        .map(|w| format!("{:.2}", w[1] - w[0]))
        .collect();
    let dq_lo = dq.iter().cloned().fold(f64::INFINITY, f64::min);
    let dq_hi = dq.iter().cloned().fold(0.0, f64::max);
    let floor_ok = q1_max <= 1e-8 && odd_max <= 1e-8 * even_max.max(1e-300);
    parts.push(format!(
        "breathing: max <|q1|> {q1_max:.1e} (Kohn run {kohn_q1:.3}), max odd-mode population {odd_max:.1e} vs n2 {even_max:.3}, \
         dq in [{dq_lo:.4}, {dq_hi:.4}] with {} turning points spaced [{}], mean {mean_spacing:.2} vs pi/e2 = {half_period:.2}",
        turns.len(),
        spacings.join(", ")
    ));
    outcome(
        kohn_top == 1 && third_top == 3 && floor_ok && spacing_ok,
        parts.join("; "),
    )
}

/// Times of the extrema of `v`, ignoring reversals smaller than `swing`.
fn turning_times(t: &[f64], v: &[f64], swing: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut ext = 0;
    let mut rising: Option<bool> = None;
    for i in 1..v.len() {
        match rising {
            None => {
                if (v[i] - v[0]).abs() > swing {
                    rising = Some(v[i] > v[0]);
                    ext = i;
                }
            }
            Some(up) => {
                if (up && v[i] > v[ext]) || (!up && v[i] < v[ext]) {
                    ext = i;
                } else if (v[i] - v[ext]).abs() > swing {
                    out.push(t[ext]);
                    rising = Some(!up);
                    ext = i;
                }
            }
        }
    }
    out
}

fn gaussian_locality() -> Result<Outcome> {
    let mut rc = preset("gaussian-pump")?;
    rc.grid.n_points = 512;
    rc.ensemble.n_trajectories = 100;
    rc.ensemble.t_final = 0.5 * 2.0 * PI;
    rc.ensemble.recorder.density = false;
    rc.ensemble.cos_pairs = vec![(16, 17), (8, 9)];
    let (_, res) = run_configured_ensemble(&rc, false)?;
    let last = res.stats.cos_phase.last().expect("records");
    let (lit, dark) = (&last[0], &last[1]);
    let gap = dark.mean - lit.mean;
    let se = (lit.std_err().powi(2) + dark.std_err().powi(2)).sqrt();
    outcome(
        dark.mean > 0.95 && gap > 3.0 * se,
        format!(
            "<cos> (8,9) = {:.4} > 0.95; (16,17) = {:.4} +- {:.4}, below (8,9) by {:.1} SE; (16,17) below 0.95: {}",
            dark.mean,
            lit.mean,
            lit.std_err(),
            gap / se,
            lit.mean < 0.95
        ),
    )
}
