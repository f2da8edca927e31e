//! Conditioned stochastic evolution for the three model variants.
//!
//! Every step is a split step: kinetic half step, potential and nonlinear
//! phase, measurement substep, kinetic half step. For the eliminated variants
//! the measurement noise is −i a(x) ψ dW with real a(x), and the Itô flow
//! dψ = −i a ψ dW − ½a²ψ dt is solved exactly by ψ·exp(−i a ΔW).

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bdg::BdgModeSet;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, SpectralFilter};
use crate::model::{eval_trap_potential, ModelFields, Variant};
use crate::observables::{
    bdg_populations, moments, odd_even_imbalance, site_decompose_with, MomentSet, SiteLayout,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseUpdate {
    /// Exact unit-modulus phase factor per step.
    ExactRotation,
    /// ψ·(1 − i a ΔW − a²ΔW²/2).
    Milstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    /// K/2 · (V, M) · K/2
    Strang,
    /// K · (V, M)
    Lie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepScheme {
    pub dt: f64,
    pub splitting: Splitting,
    pub noise_update: NoiseUpdate,
    /// Multiplies every Wiener increment; 0 gives the deterministic limit.
    pub noise_strength: f64,
    /// Turns the kinetic substep off (frozen-dynamics checks).
    pub kinetic: bool,
}

impl Default for StepScheme {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            splitting: Splitting::Strang,
            noise_update: NoiseUpdate::ExactRotation,
            noise_strength: 1.0,
            kinetic: true,
        }
    }
}

impl StepScheme {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.noise_strength >= 0.0) {
            return Err(Error::InvalidParameter(
                "noise strength must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    /// Carries the atom number: ∫|ψ|² = N.
    pub psi: ComplexField,
    /// Cavity amplitude, used by the full-cavity variant only.
    pub alpha: Complex64,
    pub t: f64,
}

impl TrajectoryState {
    pub fn new(psi: ComplexField) -> Self {
        Self {
            psi,
            alpha: Complex64::new(0.0, 0.0),
            t: 0.0,
        }
    }

    pub fn with_alpha(mut self, alpha: Complex64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// Wiener increments for one step: the measurement channel uses `[0]`, the
/// full-cavity variant uses both quadratures.
pub type Increment = [f64; 2];

/// Integrator for a fixed model and scheme; owns its scratch buffers, so one
/// instance per worker.
pub struct Integrator {
    fields: Arc<ModelFields>,
    scheme: StepScheme,
    u: f64,
    v_det: Vec<f64>,
    noise_coeff: Vec<f64>,
    g2: Vec<f64>,
    hg: Vec<f64>,
    axial_drift: Vec<f64>,
    half: Option<SpectralFilter>,
    full: Option<SpectralFilter>,
    alpha_noise_scale: f64,
}

impl Integrator {
    pub fn new(fields: Arc<ModelFields>, scheme: StepScheme) -> Result<Self> {
        scheme.validate()?;
        let p = fields.params;
        p.validate()?;
        let grid = fields.grid.clone();
        let g2 = fields.g_sq_over_delta();
        let hg = fields.hg_over_delta();
        let kappa = p.cavity.kappa;
        let eta = p.cavity.eta;
        let (v_det, noise_coeff, axial_drift) = match p.variant {
            Variant::AxialEliminated { .. } => {
                let v = eval_trap_potential(&p.trap, &grid);
                let a = (2.0 * eta * eta / kappa.powi(3)).sqrt();
                let c = eta * eta / (kappa * kappa);
                (
                    v,
                    g2.iter().map(|x| a * x).collect(),
                    g2.iter().map(|x| c * x).collect(),
                )
            }
            Variant::TransverseEliminated => {
                let mut v = fields.static_potential();
                v.iter_mut()
                    .zip(fields.h_sq_over_delta())
                    .for_each(|(a, b)| *a += b);
                let a = (2.0 / kappa).sqrt();
                (v, hg.iter().map(|x| a * x).collect(), Vec::new())
            }
            Variant::FullCavity => {
                let mut v = fields.static_potential();
                v.iter_mut()
                    .zip(fields.h_sq_over_delta())
                    .for_each(|(a, b)| *a += b);
                (v, Vec::new(), Vec::new())
            }
        };
        let dt = scheme.dt;
        let (half, full) = if scheme.kinetic {
            (
                Some(SpectralFilter::new(grid.clone(), |k| {
                    Complex64::from_polar(1.0, -0.25 * k * k * dt)
                })),
                Some(SpectralFilter::new(grid.clone(), |k| {
                    Complex64::from_polar(1.0, -0.5 * k * k * dt)
                })),
            )
        } else {
            (None, None)
        };
        // exact OU transition: matches the per-step variance (1 − e^{−2κdt})/2
        let kdt = kappa * dt;
        let alpha_noise_scale =
            (0.5 * kappa).sqrt() * ((-(-2.0 * kdt).exp_m1()) / (2.0 * kdt)).sqrt();
        Ok(Self {
            u: p.interaction_u(),
            fields,
            scheme,
            v_det,
            noise_coeff,
            g2,
            hg,
            axial_drift,
            half,
            full,
            alpha_noise_scale,
        })
    }

    pub fn scheme(&self) -> &StepScheme {
        &self.scheme
    }

    pub fn fields(&self) -> &Arc<ModelFields> {
        &self.fields
    }

    /// Noise coefficient a(x) of the eliminated variants (empty for the full model).
    pub fn noise_coefficient(&self) -> &[f64] {
        &self.noise_coeff
    }

    /// X = ∫(g²/Δ)|ψ|², Y = ∫(hg/Δ)|ψ|² for a number-carrying field.
    pub fn cavity_integrals(&self, psi: &ComplexField) -> (f64, f64) {
        let mut x = 0.0;
        let mut y = 0.0;
        for ((p, g2), hg) in psi.values().iter().zip(&self.g2).zip(&self.hg) {
            let r = p.norm_sqr();
            x += g2 * r;
            y += hg * r;
        }
        let dx = psi.grid().spacing();
        (x * dx, y * dx)
    }

    /// Photon detection rate for the current state.
    pub fn measurement_rate(&self, state: &TrajectoryState) -> f64 {
        let c = &self.fields.params.cavity;
        match self.fields.params.variant {
            Variant::FullCavity => 2.0 * c.kappa * (state.alpha.norm_sqr() - 0.5),
            Variant::AxialEliminated { .. } => {
                let (x, _) = self.cavity_integrals(&state.psi);
                2.0 * c.eta * c.eta / c.kappa.powi(3) * x * x
            }
            Variant::TransverseEliminated => {
                let (_, y) = self.cavity_integrals(&state.psi);
                2.0 / c.kappa * y * y
            }
        }
    }

    fn check_state(&self, state: &TrajectoryState) -> Result<()> {
        if state.psi.grid() != &self.fields.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// One full step with externally supplied Wiener increments (each with
    /// variance dt before scaling by `noise_strength`).
    pub fn step(&mut self, state: &mut TrajectoryState, dw: Increment) -> Result<()> {
        self.check_state(state)?;
        match self.scheme.splitting {
            Splitting::Strang => {
                self.kinetic(state, false);
                self.local(state, dw);
                self.kinetic(state, false);
            }
            Splitting::Lie => {
                self.kinetic(state, true);
                self.local(state, dw);
            }
        }
        state.t += self.scheme.dt;
        Ok(())
    }

    /// `n_steps` steps drawing increments from `rng`; adjacent kinetic half
    /// steps are fused. Increments are appended to `wiener` when given.
    pub fn advance<R: rand::Rng + ?Sized>(
        &mut self,
        state: &mut TrajectoryState,
        n_steps: usize,
        rng: &mut R,
        mut wiener: Option<&mut Vec<Increment>>,
    ) -> Result<()> {
        self.check_state(state)?;
        if n_steps == 0 {
            return Ok(());
        }
        let sq = self.scheme.dt.sqrt();
        let draw = |rng: &mut R| -> Increment {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            [a * sq, b * sq]
        };
        match self.scheme.splitting {
            Splitting::Strang => {
                self.kinetic(state, false);
                for i in 0..n_steps {
                    let dw = draw(rng);
                    if let Some(w) = wiener.as_deref_mut() {
                        w.push(dw);
                    }
                    self.local(state, dw);
                    self.kinetic(state, i + 1 < n_steps);
                    state.t += self.scheme.dt;
                }
            }
            Splitting::Lie => {
                for _ in 0..n_steps {
                    let dw = draw(rng);
                    if let Some(w) = wiener.as_deref_mut() {
                        w.push(dw);
                    }
                    self.kinetic(state, true);
                    self.local(state, dw);
                    state.t += self.scheme.dt;
                }
            }
        }
        Ok(())
    }

    fn kinetic(&mut self, state: &mut TrajectoryState, whole: bool) {
        let f = if whole {
            &mut self.full
        } else {
            &mut self.half
        };
        if let Some(f) = f {
            f.apply(state.psi.values_mut());
        }
    }

    /// Potential, nonlinear and measurement substeps over one dt.
    fn local(&mut self, state: &mut TrajectoryState, dw: Increment) {
        let dt = self.scheme.dt;
        let s = self.scheme.noise_strength;
        let dw0 = dw[0] * s;
        let p = &self.fields.params;
        let u = self.u;
        let milstein = self.scheme.noise_update == NoiseUpdate::Milstein;
        match p.variant {
            Variant::FullCavity => {
                let (x, y) = self.cavity_integrals(&state.psi);
                let c = &p.cavity;
                let lambda = Complex64::new(c.kappa, -(c.delta_pc - x));
                let a_ss = Complex64::new(c.eta, -y) / lambda;
                let decay = (-lambda * dt).exp();
                let noise = Complex64::new(dw[0], dw[1]) * (self.alpha_noise_scale * s);
                let old = state.alpha;
                let new = a_ss + (old - a_ss) * decay + noise;
                state.alpha = new;
                let n2 = 0.5 * (old.norm_sqr() + new.norm_sqr()) - 0.5;
                let re = 0.5 * (old.re + new.re);
                for (i, psi) in state.psi.values_mut().iter_mut().enumerate() {
                    let v = self.v_det[i]
                        + u * psi.norm_sqr()
                        + self.g2[i] * n2
                        + 2.0 * self.hg[i] * re;
                    *psi *= Complex64::from_polar(1.0, -v * dt);
                }
            }
            Variant::AxialEliminated { f_order } => {
                let f = if f_order == 1 {
                    let (x, _) = self.cavity_integrals(&state.psi);
                    1.0 + p.cavity.delta_pc / (p.cavity.kappa * p.cavity.kappa) * x
                } else {
                    1.0
                };
                for (i, psi) in state.psi.values_mut().iter_mut().enumerate() {
                    let v = self.v_det[i] + u * psi.norm_sqr() + self.axial_drift[i] * f;
                    apply_phase(psi, v * dt, self.noise_coeff[i], dw0, milstein);
                }
            }
            Variant::TransverseEliminated => {
                for (i, psi) in state.psi.values_mut().iter_mut().enumerate() {
                    let v = self.v_det[i] + u * psi.norm_sqr();
                    apply_phase(psi, v * dt, self.noise_coeff[i], dw0, milstein);
                }
            }
        }
    }
}

#[inline]
fn apply_phase(psi: &mut Complex64, vdt: f64, a: f64, dw: f64, milstein: bool) {
    if milstein {
        let adw = a * dw;
        *psi *= Complex64::from_polar(1.0, -vdt) * Complex64::new(1.0 - 0.5 * adw * adw, -adw);
    } else {
        *psi *= Complex64::from_polar(1.0, -vdt - a * dw);
    }
}

/// Drift potential of the axial model, (η²/κ²)(g²/Δ)·F with
/// F = 1 + (Δ_pc/κ²)X for `f_order` 1.
pub fn axial_potential(fields: &ModelFields, psi: &ComplexField, f_order: u8) -> Vec<f64> {
    let c = &fields.params.cavity;
    let g2 = fields.g_sq_over_delta();
    let f = if f_order == 1 {
        let x: f64 = psi
            .values()
            .iter()
            .zip(&g2)
            .map(|(p, g)| g * p.norm_sqr())
            .sum::<f64>()
            * psi.grid().spacing();
        1.0 + c.delta_pc / (c.kappa * c.kappa) * x
    } else {
        1.0
    };
    g2.iter()
        .map(|g| c.eta * c.eta / (c.kappa * c.kappa) * g * f)
        .collect()
}

/// What to record along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecorderConfig {
    /// Steps between records; the initial and final states are always recorded.
    pub stride: usize,
    pub density: bool,
    /// Positions at which the complex field is kept (nearest grid points).
    pub probe_points: Vec<f64>,
    pub store_wiener: bool,
}

impl Default for RecorderConfig {
    fn default() -> Self {
        Self {
            stride: 100,
            density: false,
            probe_points: Vec::new(),
            store_wiener: false,
        }
    }
}

/// Optional analysis context applied to every record.
#[derive(Debug, Clone, Default)]
pub struct Observers {
    pub sites: Option<SiteLayout>,
    pub modes: Option<Arc<BdgModeSet>>,
    /// The initial state carried Wigner vacuum noise.
    pub wigner_sampled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub rate: f64,
    pub norm: f64,
    pub alpha: Complex64,
    pub moments: MomentSet,
    pub imbalance: Option<f64>,
    pub site_phases: Vec<f64>,
    pub site_populations: Vec<f64>,
    pub bdg_populations: Vec<f64>,
    pub density: Vec<f64>,
    pub probes: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryOutput {
    pub seed: u64,
    pub records: Vec<Record>,
    /// Time and reason of a numerical failure; records stop there.
    pub failure: Option<(f64, String)>,
    pub wiener: Option<Vec<Increment>>,
    pub final_state: TrajectoryState,
}

impl TrajectoryOutput {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rate).collect()
    }
}

fn record(
    integ: &Integrator,
    state: &TrajectoryState,
    cfg: &RecorderConfig,
    probes: &[usize],
    obs: &Observers,
) -> Result<Record> {
    let psi = &state.psi;
    let (imbalance, site_phases, site_populations) = match &obs.sites {
        Some(layout) => {
            let d = site_decompose_with(psi, layout)?;
            (
                Some(odd_even_imbalance(&d)?),
                d.site_phases,
                d.site_populations,
            )
        }
        None => (None, Vec::new(), Vec::new()),
    };
    let bdg = match &obs.modes {
        Some(m) => bdg_populations(psi, m, state.t, obs.wigner_sampled)?,
        None => Vec::new(),
    };
    Ok(Record {
        t: state.t,
        rate: integ.measurement_rate(state),
        norm: psi.norm(),
        alpha: state.alpha,
        moments: moments(psi)?,
        imbalance,
        site_phases,
        site_populations,
        bdg_populations: bdg,
        density: if cfg.density {
            psi.density()
        } else {
            Vec::new()
        },
        probes: probes.iter().map(|&i| psi.values()[i]).collect(),
    })
}

/// Integrates from `initial` to `t_final`, recording every `recorder.stride`
/// steps. The outcome is a deterministic function of the arguments.
pub fn run_trajectory(
    fields: &Arc<ModelFields>,
    scheme: &StepScheme,
    initial: &TrajectoryState,
    t_final: f64,
    recorder: &RecorderConfig,
    observers: &Observers,
    seed: u64,
) -> Result<TrajectoryOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_trajectory_with_rng(
        fields, scheme, initial, t_final, recorder, observers, seed, &mut rng,
    )
}

/// As [`run_trajectory`] but continuing an existing generator stream (used
/// when the initial state was sampled from the same stream).
#[allow(clippy::too_many_arguments)]
pub fn run_trajectory_with_rng(
    fields: &Arc<ModelFields>,
    scheme: &StepScheme,
    initial: &TrajectoryState,
    t_final: f64,
    recorder: &RecorderConfig,
    observers: &Observers,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<TrajectoryOutput> {
    if !(t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "final time must be non-negative, got {t_final}"
        )));
    }
    if recorder.stride == 0 {
        return Err(Error::InvalidParameter(
            "recorder stride must be positive".into(),
        ));
    }
    let mut integ = Integrator::new(fields.clone(), *scheme)?;
    integ.check_state(initial)?;
    let grid = &fields.grid;
    let probes: Vec<usize> = recorder
        .probe_points
        .iter()
        .map(|&x| grid.nearest_index(x))
        .collect();
    let n_steps = (t_final / scheme.dt).round() as usize;
    let mut state = initial.clone();
    let mut records = vec![record(&integ, &state, recorder, &probes, observers)?];
    let mut wiener = recorder.store_wiener.then(Vec::new);
    let mut done = 0;
    let mut failure = None;
    while done < n_steps {
        let chunk = recorder.stride.min(n_steps - done);
        integ.advance(&mut state, chunk, rng, wiener.as_mut())?;
        done += chunk;
        // re-anchor the clock to avoid accumulated rounding in t
        state.t = initial.t + done as f64 * scheme.dt;
        if !state.psi.is_finite() || !state.alpha.is_finite() {
            failure = Some((state.t, "non-finite field or cavity amplitude".to_string()));
            break;
        }
        records.push(record(&integ, &state, recorder, &probes, observers)?);
    }
    Ok(TrajectoryOutput {
        seed,
        records,
        failure,
        wiener,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, normalize};
    use crate::model::{ModelParams, PumpProfile, PumpShape};

    fn transverse_fields(n: usize) -> Arc<ModelFields> {
        let g = make_grid(n, 12.0).unwrap();
        let mut p = ModelParams::harmonic(38.0, 750.0);
        p.cavity.k_c = 1.3;
        p.cavity.g0_sq_over_delta = 0.0256;
        p.pump = PumpProfile {
            shape: PumpShape::Uniform { amplitude: 1.0 },
            h0g0_over_delta: 0.51,
            h0_sq_over_delta: 10.0,
        };
        Arc::new(ModelFields::new(&p, g).unwrap())
    }

    fn gaussian(fields: &ModelFields, n: f64) -> ComplexField {
        let f = ComplexField::from_fn(fields.grid.clone(), |x| {
            Complex64::new((-0.5 * (x - 0.3) * (x - 0.3)).exp(), 0.0)
        });
        normalize(&f, n).unwrap()
    }

    #[test]
    fn exact_rotation_conserves_density_pointwise() {
        let f = transverse_fields(64);
        let mut s = StepScheme::with_dt(1e-3);
        s.kinetic = false;
        let mut integ = Integrator::new(f.clone(), s).unwrap();
        let mut st = TrajectoryState::new(gaussian(&f, 750.0));
        let before = st.psi.density();
        integ.step(&mut st, [0.7, 0.0]).unwrap();
        for (a, b) in before.iter().zip(st.psi.density()) {
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn rejects_bad_scheme() {
        let f = transverse_fields(64);
        assert!(Integrator::new(f.clone(), StepScheme::with_dt(0.0)).is_err());
        let s = StepScheme {
            noise_strength: -1.0,
            ..StepScheme::default()
        };
        assert!(Integrator::new(f, s).is_err());
    }

    #[test]
    fn fused_and_unfused_steps_agree() {
        let f = transverse_fields(64);
        let s = StepScheme::with_dt(1e-3);
        let mut a = Integrator::new(f.clone(), s).unwrap();
        let mut b = Integrator::new(f.clone(), s).unwrap();
        let init = TrajectoryState::new(gaussian(&f, 750.0));
        let mut sa = init.clone();
        let mut sb = init;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut w = Vec::new();
        a.advance(&mut sa, 20, &mut rng, Some(&mut w)).unwrap();
        for dw in w {
            b.step(&mut sb, dw).unwrap();
        }
        let err = sa
            .psi
            .values()
            .iter()
            .zip(sb.psi.values())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn full_cavity_empty_relaxation() {
        let g = make_grid(16, 10.0).unwrap();
        let mut p = ModelParams::harmonic(0.0, 1.0);
        p.variant = Variant::FullCavity;
        p.cavity.eta = 5.0;
        p.cavity.kappa = 10.0;
        let f = Arc::new(ModelFields::new(&p, g.clone()).unwrap());
        let mut s = StepScheme::with_dt(1e-3);
        s.noise_strength = 0.0;
        let mut integ = Integrator::new(f, s).unwrap();
        let mut st = TrajectoryState::new(ComplexField::zeros(g));
        for k in 1..=200 {
            integ.step(&mut st, [0.0, 0.0]).unwrap();
            let t = k as f64 * 1e-3;
            let want = 0.5 * (-10.0 * t).exp();
            assert!(((st.alpha.re - 0.5).abs() - want).abs() < 1e-8);
        }
    }

    #[test]
    fn measurement_rate_floor_and_parity() {
        let g = make_grid(64, 12.0).unwrap();
        let mut p = ModelParams::harmonic(0.0, 1.0);
        p.variant = Variant::FullCavity;
        let f = Arc::new(ModelFields::new(&p, g.clone()).unwrap());
        let integ = Integrator::new(f, StepScheme::default()).unwrap();
        let st = TrajectoryState::new(ComplexField::zeros(g.clone()))
            .with_alpha(Complex64::new(0.5f64.sqrt(), 0.0));
        assert!(integ.measurement_rate(&st).abs() < 1e-12);

        // symmetric field, odd cavity mode: Y vanishes
        let f = transverse_fields(64);
        let integ = Integrator::new(f.clone(), StepScheme::default()).unwrap();
        let psi = normalize(
            &ComplexField::from_fn(f.grid.clone(), |x| Complex64::new((-x * x).exp(), 0.0)),
            750.0,
        )
        .unwrap();
        // make the grid field exactly even about the mirror map
        let vals: Vec<Complex64> = (0..64)
            .map(|i| {
                let m = f.grid.mirror_index(i);
                0.5 * (psi.values()[i] + psi.values()[m])
            })
            .collect();
        let mut sym = ComplexField::new(f.grid.clone(), vals).unwrap();
        sym.values_mut()[0] = Complex64::new(0.0, 0.0);
        let st = TrajectoryState::new(sym);
        assert!(integ.measurement_rate(&st) < 1e-20);
    }

    #[test]
    fn same_seed_same_output() {
        let f = transverse_fields(64);
        let init = TrajectoryState::new(gaussian(&f, 750.0));
        let rec = RecorderConfig {
            stride: 10,
            ..RecorderConfig::default()
        };
        let s = StepScheme::with_dt(1e-3);
        let a = run_trajectory(&f, &s, &init, 0.1, &rec, &Observers::default(), 9).unwrap();
        let b = run_trajectory(&f, &s, &init, 0.1, &rec, &Observers::default(), 9).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 11);
        let c = run_trajectory(&f, &s, &init, 0.1, &rec, &Observers::default(), 10).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn f_order_changes_potential_by_factor() {
        let g = make_grid(64, 12.0).unwrap();
        let mut p = ModelParams::harmonic(0.0, 100.0);
        p.variant = Variant::AxialEliminated { f_order: 1 };
        p.cavity.eta = 20.0;
        p.cavity.delta_pc = 15.0;
        p.cavity.g0_sq_over_delta = 0.03;
        p.cavity.k_c = 2.0;
        let f = ModelFields::new(&p, g.clone()).unwrap();
        let psi = gaussian(&f, 100.0);
        let v0 = axial_potential(&f, &psi, 0);
        let v1 = axial_potential(&f, &psi, 1);
        let g2 = f.g_sq_over_delta();
        let x: f64 = psi
            .values()
            .iter()
            .zip(&g2)
            .map(|(a, b)| b * a.norm_sqr())
            .sum::<f64>()
            * g.spacing();
        let factor = 1.0 + 15.0 / 1e4 * x;
        for (a, b) in v0.iter().zip(&v1) {
            assert!((a * factor - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }
}
