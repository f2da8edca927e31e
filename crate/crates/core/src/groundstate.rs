//! Stationary states: the imaginary-time ground state and the self-consistent
//! self-organized steady state of the transversely pumped lattice.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{normalize, ComplexField, Grid, SpectralFilter};
use crate::model::{eval_trap_potential, ModelFields, ModelParams};
use crate::observables::{odd_even_imbalance, site_decompose_with, SiteLayout};

/// Knobs of the ground-state solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundStateOptions {
    /// Target for both the per-step energy change and the sup-norm of (H−μ)ψ.
    pub tol: f64,
    /// Initial imaginary time step.
    pub dt: f64,
    pub max_iterations: usize,
    /// Keep the energy after every accepted imaginary-time step.
    pub record_energies: bool,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            dt: 1e-3,
            max_iterations: 400_000,
            record_energies: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    /// Real, non-negative, ∫|ψ0|² = 1.
    pub psi0: ComplexField,
    pub mu: f64,
    /// Gross-Pitaevskii energy per atom.
    pub energy: f64,
    /// Sup-norm of (H − μ)ψ0 at exit.
    pub residual: f64,
    pub iterations: usize,
    /// Energies of accepted steps, when requested.
    pub energy_history: Vec<f64>,
}

/// Gross-Pitaevskii energy per atom of a unit-norm field,
/// E = ∫ψ*(T+V)ψ + (NU/2)∫|ψ|⁴.
pub fn gp_energy(psi: &ComplexField, potential: &[f64], nu: f64) -> f64 {
    let grid = psi.grid();
    let dx = grid.spacing();
    let mut spec = psi.values().to_vec();
    let mut scratch = grid.fft_scratch();
    grid.forward_in_place(&mut spec, &mut scratch);
    let n = grid.n_points() as f64;
    let kinetic: f64 = spec
        .iter()
        .zip(grid.wavenumbers())
        .map(|(c, k)| 0.5 * k * k * c.norm_sqr())
        .sum::<f64>()
        * dx
        / n;
    let local: f64 = psi
        .values()
        .iter()
        .zip(potential)
        .map(|(p, v)| {
            let r = p.norm_sqr();
            v * r + 0.5 * nu * r * r
        })
        .sum::<f64>()
        * dx;
    kinetic + local
}

/// Returns (μ, sup|(H−μ)ψ|) for a unit-norm field, H = T + V + NU|ψ|².
pub fn gp_residual(psi: &ComplexField, potential: &[f64], nu: f64) -> (f64, f64) {
    let h = apply_gp_hamiltonian(psi, potential, nu);
    let dx = psi.grid().spacing();
    let mu: f64 = psi
        .values()
        .iter()
        .zip(&h)
        .map(|(p, hp)| (p.conj() * hp).re)
        .sum::<f64>()
        * dx;
    let res = psi
        .values()
        .iter()
        .zip(&h)
        .map(|(p, hp)| (hp - p * mu).norm())
        .fold(0.0, f64::max);
    (mu, res)
}

fn apply_gp_hamiltonian(psi: &ComplexField, potential: &[f64], nu: f64) -> Vec<Complex64> {
    let grid = psi.grid();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.n_points()];
    let mut scratch = grid.fft_scratch();
    crate::grid::apply_kinetic(grid, psi.values(), &mut out, &mut scratch);
    for ((o, p), v) in out.iter_mut().zip(psi.values()).zip(potential) {
        *o += p * (v + nu * p.norm_sqr());
    }
    out
}

/// Ground state of H0 + NU|ψ|² for the trap in `params`; the pump is ignored.
pub fn solve_ground_state(params: &ModelParams, grid: &Arc<Grid>, tol: f64) -> Result<GroundState> {
    params.validate()?;
    let opts = GroundStateOptions {
        tol,
        ..GroundStateOptions::default()
    };
    let potential = eval_trap_potential(&params.trap, grid);
    solve_ground_state_in(&potential, params.nu, grid, &opts, None)
}

/// Ground state in an arbitrary real potential, optionally warm-started.
pub fn solve_ground_state_in(
    potential: &[f64],
    nu: f64,
    grid: &Arc<Grid>,
    opts: &GroundStateOptions,
    initial: Option<&ComplexField>,
) -> Result<GroundState> {
    if !(opts.tol > 0.0) || !(opts.dt > 0.0) {
        return Err(Error::InvalidParameter(
            "ground-state tolerance and step must be positive".into(),
        ));
    }
    if potential.len() != grid.n_points() {
        return Err(Error::LengthMismatch {
            expected: grid.n_points(),
            actual: potential.len(),
        });
    }
    let start = match initial {
        Some(f) => {
            if f.grid() != grid {
                return Err(Error::GridMismatch);
            }
            normalize(f, 1.0)?
        }
        None => normalize(
            &ComplexField::from_fn(grid.clone(), |x| Complex64::new((-0.5 * x * x).exp(), 0.0)),
            1.0,
        )?,
    };
    let mut history = Vec::new();
    let mut stepper = ImagTimeStepper::new(grid.clone(), opts.dt);
    let mut psi = start;
    let mut energy = gp_energy(&psi, potential, nu);
    if opts.record_energies {
        history.push(energy);
    }
    let mut iterations = 0;

    // Stage 1: split-step imaginary time until the energy settles.
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut trial = psi.clone();
        stepper.step(&mut trial, potential, nu);
        let trial = normalize(&trial, 1.0)?;
        let e = gp_energy(&trial, potential, nu);
        if !e.is_finite() {
            return Err(Error::NumericalBlowup {
                t: iterations as f64 * stepper.dt,
                detail: "imaginary-time energy is not finite".into(),
            });
        }
        if e > energy + 1e-12 * energy.abs().max(1.0) {
            if stepper.dt < 1e-9 {
                break;
            }
            stepper = ImagTimeStepper::new(grid.clone(), 0.5 * stepper.dt);
            continue;
        }
        let change = energy - e;
        psi = trial;
        energy = e;
        if opts.record_energies {
            history.push(energy);
        }
        if change < opts.tol {
            break;
        }
    }

    // Stage 2: preconditioned gradient flow, whose fixed point is exactly
    // stationary rather than stationary up to the splitting error.
    let mut polish = Polisher::new(grid.clone(), potential, nu);
    let (mut mu, mut residual) = gp_residual(&psi, potential, nu);
    let mut best = residual;
    let mut stalled = 0;
    while residual > opts.tol && iterations < opts.max_iterations {
        iterations += 1;
        psi = polish.step(&psi, mu)?;
        let (m, r) = gp_residual(&psi, potential, nu);
        mu = m;
        residual = r;
        if opts.record_energies {
            history.push(gp_energy(&psi, potential, nu));
        }
        if residual < 0.999 * best {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
            // roundoff floor: residual no longer improves but is already tiny
            if stalled > 2000 && residual < 1e3 * opts.tol {
                break;
            }
        }
    }
    if residual > 1e3 * opts.tol {
        return Err(Error::NotConverged {
            what: "ground state",
            iterations,
            last_change: residual,
        });
    }
    let psi0 = fix_phase(&psi)?;
    let energy = gp_energy(&psi0, potential, nu);
    Ok(GroundState {
        psi0,
        mu,
        energy,
        residual,
        iterations,
        energy_history: history,
    })
}

/// Rotates the field so its largest component is real positive, then zeroes
/// the residual imaginary part and sign noise.
fn fix_phase(psi: &ComplexField) -> Result<ComplexField> {
    let peak = psi
        .values()
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .ok_or(Error::ZeroNorm)?;
    let rot = peak.conj() / peak.norm();
    let vals: Vec<Complex64> = psi
        .values()
        .iter()
        .map(|v| Complex64::new((v * rot).norm(), 0.0))
        .collect();
    normalize(&ComplexField::new(psi.grid().clone(), vals)?, 1.0)
}

/// Strang split step of imaginary-time evolution in a given potential.
struct ImagTimeStepper {
    dt: f64,
    kinetic: SpectralFilter,
}

impl ImagTimeStepper {
    fn new(grid: Arc<Grid>, dt: f64) -> Self {
        let kinetic = SpectralFilter::new(grid, |k| Complex64::new((-0.5 * k * k * dt).exp(), 0.0));
        Self { dt, kinetic }
    }

    fn step(&mut self, psi: &mut ComplexField, potential: &[f64], nu: f64) {
        let half = 0.5 * self.dt;
        for (p, v) in psi.values_mut().iter_mut().zip(potential) {
            *p *= (-(v + nu * p.norm_sqr()) * half).exp();
        }
        self.kinetic.apply(psi.values_mut());
        for (p, v) in psi.values_mut().iter_mut().zip(potential) {
            *p *= (-(v + nu * p.norm_sqr()) * half).exp();
        }
    }
}

/// ψ ← normalize[(1 + τ(T+β))⁻¹ (1 + τ(β + μ − V − NU|ψ|²)) ψ].
struct Polisher {
    grid: Arc<Grid>,
    potential: Vec<f64>,
    nu: f64,
    tau: f64,
    beta: f64,
    inverse: Option<SpectralFilter>,
}

impl Polisher {
    fn new(grid: Arc<Grid>, potential: &[f64], nu: f64) -> Self {
        Self {
            grid,
            potential: potential.to_vec(),
            nu,
            tau: 0.0,
            beta: -1.0,
            inverse: None,
        }
    }

    fn step(&mut self, psi: &ComplexField, mu: f64) -> Result<ComplexField> {
        let v_max = psi
            .values()
            .iter()
            .zip(&self.potential)
            .map(|(p, v)| v + self.nu * p.norm_sqr())
            .fold(f64::MIN, f64::max);
        let beta = (v_max - mu).max(1.0);
        if self.inverse.is_none() || beta > self.beta * 1.01 || beta < self.beta * 0.5 {
            self.beta = beta;
            self.tau = 1.0 / beta;
            let (tau, b) = (self.tau, self.beta);
            self.inverse = Some(SpectralFilter::new(self.grid.clone(), move |k| {
                Complex64::new(1.0 / (1.0 + tau * (0.5 * k * k + b)), 0.0)
            }));
        }
        let (tau, b) = (self.tau, self.beta);
        let mut vals: Vec<Complex64> = psi
            .values()
            .iter()
            .zip(&self.potential)
            .map(|(p, v)| p * (1.0 + tau * (b + mu - v - self.nu * p.norm_sqr())))
            .collect();
        self.inverse.as_mut().expect("set above").apply(&mut vals);
        normalize(&ComplexField::new(self.grid.clone(), vals)?, 1.0)
    }
}

/// Knobs of the self-consistent steady-state search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadyStateOptions {
    /// Mixing weight λ in α ← (1−λ)α + λα_new.
    pub damping: f64,
    /// Imaginary-time steps between cavity-field updates.
    pub inner_steps: usize,
    pub dt: f64,
    pub max_outer: usize,
    /// Relative convergence tolerance on α and on the imbalance.
    pub tol: f64,
    /// +1 seeds the pattern with excess in odd sites, −1 in even sites.
    pub seed_sign: f64,
    /// Imbalance of the seeding cavity field.
    pub seed_imbalance: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            damping: 0.3,
            inner_steps: 40,
            dt: 1e-3,
            max_outer: 20_000,
            tol: 1e-7,
            seed_sign: 1.0,
            seed_imbalance: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    /// Unit-norm steady-state profile.
    pub psi_ss: ComplexField,
    pub alpha_ss: Complex64,
    pub imbalance: f64,
    pub pump_scale: f64,
    pub iterations: usize,
}

/// Imbalance magnitude above which a steady state counts as organized.
pub const ORGANIZED_IMBALANCE: f64 = 1e-2;

/// Cavity-induced mean-field potential for a classical amplitude α,
/// (1/Δ)[h² + g²|α|² + 2hg Re α], with the light shift dropped when compensated.
pub fn cavity_potential(fields: &ModelFields, alpha: Complex64) -> Vec<f64> {
    let g2 = fields.g_sq_over_delta();
    let hg = fields.hg_over_delta();
    let h2 = fields.h_sq_over_delta();
    let keep_h2 = !fields.params.compensate_pump_lightshift;
    (0..g2.len())
        .map(|i| {
            let mut v = g2[i] * alpha.norm_sqr() + 2.0 * hg[i] * alpha.re;
            if keep_h2 {
                v += h2[i];
            }
            v
        })
        .collect()
}

/// Stationary cavity amplitude for frozen atomic integrals
/// X = N∫(g²/Δ)|ψ|², Y = N∫(hg/Δ)|ψ|²: α = (η − iY)/(κ − i(Δ_pc − X)).
pub fn stationary_alpha(params: &ModelParams, x: f64, y: f64) -> Complex64 {
    let c = &params.cavity;
    Complex64::new(c.eta, -y) / Complex64::new(c.kappa, -(c.delta_pc - x))
}

/// Returns (X, Y) for a unit-norm profile carrying `params.atom_number` atoms.
pub(crate) fn cavity_integrals(fields: &ModelFields, psi: &ComplexField) -> (f64, f64) {
    let n = fields.params.atom_number;
    let dx = fields.grid.spacing();
    let g2 = fields.g_sq_over_delta();
    let hg = fields.hg_over_delta();
    let mut x = 0.0;
    let mut y = 0.0;
    for (i, p) in psi.values().iter().enumerate() {
        let r = p.norm_sqr();
        x += g2[i] * r;
        y += hg[i] * r;
    }
    (n * x * dx, n * y * dx)
}

/// Self-consistent steady state of the transversely pumped lattice with the
/// pump amplitude multiplied by `pump_scale`. `warm` continues from a
/// previous solution.
pub fn solve_selforg_steady_state(
    params: &ModelParams,
    grid: &Arc<Grid>,
    pump_scale: f64,
    opts: &SteadyStateOptions,
    warm: Option<&SteadyStateResult>,
) -> Result<SteadyStateResult> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "damping must lie in (0, 1], got {}",
            opts.damping
        )));
    }
    let scaled = params.with_pump_scale(pump_scale);
    let fields = ModelFields::new(&scaled, grid.clone())?;
    let layout = SiteLayout::new(&scaled.trap, grid)?;
    let static_v = eval_trap_potential(&scaled.trap, grid);

    let gs_opts = GroundStateOptions {
        tol: 1e-9,
        ..GroundStateOptions::default()
    };
    if scaled.pump.is_off() {
        let gs = solve_ground_state_in(&static_v, scaled.nu, grid, &gs_opts, None)?;
        let imbalance = odd_even_imbalance(&site_decompose_with(&gs.psi0, &layout)?)?;
        return Ok(SteadyStateResult {
            psi_ss: gs.psi0,
            alpha_ss: Complex64::new(0.0, 0.0),
            imbalance,
            pump_scale,
            iterations: 0,
        });
    }

    let (mut psi, mut alpha) = match warm {
        Some(w) => (w.psi_ss.clone(), w.alpha_ss),
        None => {
            let gs = solve_ground_state_in(&static_v, scaled.nu, grid, &gs_opts, None)?;
            let alpha = seed_alpha(&fields, &gs.psi0, &layout, opts)?;
            (gs.psi0, alpha)
        }
    };

    let mut stepper = ImagTimeStepper::new(grid.clone(), opts.dt);
    let mut prev_delta: Option<Complex64> = None;
    let mut flips = 0usize;
    let mut last_imbalance = f64::NAN;
    for outer in 1..=opts.max_outer {
        let mut v = cavity_potential(&fields, alpha);
        v.iter_mut().zip(&static_v).for_each(|(a, b)| *a += b);
        for _ in 0..opts.inner_steps {
            stepper.step(&mut psi, &v, scaled.nu);
            psi = normalize(&psi, 1.0)?;
        }
        let (x, y) = cavity_integrals(&fields, &psi);
        let target = stationary_alpha(&scaled, x, y);
        let delta = (target - alpha) * opts.damping;
        alpha += delta;
        if !alpha.is_finite() {
            return Err(Error::NumericalBlowup {
                t: outer as f64,
                detail: "cavity amplitude diverged in steady-state search".into(),
            });
        }
        if let Some(p) = prev_delta {
            if (p.conj() * delta).re < 0.0 && delta.norm() > 0.9 * p.norm() {
                flips += 1;
            } else {
                flips = flips.saturating_sub(1);
            }
        }
        prev_delta = Some(delta);
        if flips > 50 {
            return Err(Error::Oscillating {
                suggested_damping: 0.5 * opts.damping,
            });
        }
        let imbalance = odd_even_imbalance(&site_decompose_with(&psi, &layout)?)?;
        let scale = alpha.norm().max(1.0);
        if delta.norm() < opts.tol * scale
            && (imbalance - last_imbalance).abs() < opts.tol.max(1e-9)
        {
            return Ok(SteadyStateResult {
                psi_ss: psi,
                alpha_ss: alpha,
                imbalance,
                pump_scale,
                iterations: outer,
            });
        }
        last_imbalance = imbalance;
    }
    Err(Error::NotConverged {
        what: "self-organization steady state",
        iterations: opts.max_outer,
        last_change: prev_delta.map_or(f64::NAN, |d| d.norm()),
    })
}

/// Cavity amplitude that would be produced by a pattern with imbalance
/// `seed_sign · seed_imbalance`, used to break the parity symmetry.
fn seed_alpha(
    fields: &ModelFields,
    psi0: &ComplexField,
    layout: &SiteLayout,
    opts: &SteadyStateOptions,
) -> Result<Complex64> {
    // weight each site by (1 ± ε) according to label parity
    let eps = opts.seed_sign * opts.seed_imbalance;
    let mut vals = psi0.values().to_vec();
    for (site, range) in layout.ranges().iter().enumerate() {
        let odd = layout.labels()[site].rem_euclid(2) == 1;
        let w = if odd {
            (1.0 + eps).sqrt()
        } else {
            (1.0 - eps).sqrt()
        };
        for v in &mut vals[range.clone()] {
            *v *= w;
        }
    }
    let seeded = normalize(&ComplexField::new(psi0.grid().clone(), vals)?, 1.0)?;
    let (x, y) = cavity_integrals(fields, &seeded);
    Ok(stationary_alpha(&fields.params, x, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub pump_scale: f64,
    pub imbalance: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub iterations: usize,
}

/// Steady-state imbalance over a sequence of pump scales, each point warm
/// started from the previous one.
pub fn threshold_scan(
    params: &ModelParams,
    grid: &Arc<Grid>,
    pump_scales: &[f64],
    opts: &SteadyStateOptions,
) -> Result<Vec<ThresholdPoint>> {
    let mut out = Vec::with_capacity(pump_scales.len());
    let mut prev: Option<SteadyStateResult> = None;
    for &p in pump_scales {
        let mut res = solve_selforg_steady_state(params, grid, p, opts, prev.as_ref());
        if prev.is_some() && matches!(res, Err(Error::NotConverged { .. })) {
            // a warm start from the other branch can stall near the onset
            res = solve_selforg_steady_state(params, grid, p, opts, None);
        }
        let r = res?;
        out.push(ThresholdPoint {
            pump_scale: p,
            imbalance: r.imbalance,
            alpha_re: r.alpha_ss.re,
            alpha_im: r.alpha_ss.im,
            iterations: r.iterations,
        });
        // keep continuing from an organized state only; the trivial branch
        // cannot seed symmetry breaking
        prev = if r.imbalance.abs() > ORGANIZED_IMBALANCE {
            Some(r)
        } else {
            None
        };
    }
    Ok(out)
}

/// First pump scale in a scan whose steady state is organized.
pub fn onset_pump_scale(scan: &[ThresholdPoint]) -> Option<f64> {
    scan.iter()
        .find(|p| p.imbalance.abs() > ORGANIZED_IMBALANCE)
        .map(|p| p.pump_scale)
}
