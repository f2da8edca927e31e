//! Physical parameters of a simulation variant and their evaluation on a grid.
//!
//! Only the coupling combinations that enter the equations of motion are
//! stored: g0²/Δ_pa, h0g0/Δ_pa and h0²/Δ_pa, all in units of ω. The cavity
//! mode and pump profiles are stored as dimensionless shapes g̃(x), h̃(x).

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{integrate, ComplexField, Grid};

/// Harmonic trap plus optional static lattice, V(x) = c·x² + s·E_R·cos²(k_L x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapSpec {
    /// Coefficient of x²; ½ in oscillator units.
    pub harmonic_strength: f64,
    /// Lattice depth in units of the recoil energy.
    pub lattice_depth_s: f64,
    /// Lattice wavenumber k_L in x0^{-1}.
    pub lattice_wavenumber: f64,
}

impl Default for TrapSpec {
    fn default() -> Self {
        Self {
            harmonic_strength: 0.5,
            lattice_depth_s: 0.0,
            lattice_wavenumber: 0.0,
        }
    }
}

impl TrapSpec {
    pub fn harmonic() -> Self {
        Self::default()
    }

    /// E_R = k_L²/2.
    pub fn recoil_energy(&self) -> f64 {
        0.5 * self.lattice_wavenumber * self.lattice_wavenumber
    }

    pub fn has_lattice(&self) -> bool {
        self.lattice_depth_s > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lattice_depth_s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lattice depth must be non-negative, got {}",
                self.lattice_depth_s
            )));
        }
        if self.lattice_depth_s > 0.0 && !(self.lattice_wavenumber > 0.0) {
            return Err(Error::InvalidParameter(
                "lattice wavenumber must be positive when the lattice is on".into(),
            ));
        }
        if !(self.harmonic_strength >= 0.0) {
            return Err(Error::InvalidParameter(
                "harmonic strength must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Single cavity mode g(x) = g0 sin(k_c x + offset), damping κ, detuning Δ_pc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    /// g0²/Δ_pa in units of ω.
    pub g0_sq_over_delta: f64,
    /// Cavity wavenumber in x0^{-1}.
    pub k_c: f64,
    /// 0 puts the trap centre on a node, π/2 on an antinode.
    pub phase_offset: f64,
    pub kappa: f64,
    /// Pump-cavity detuning Δ_pc in units of ω.
    pub delta_pc: f64,
    /// Axial pump amplitude, taken real and non-negative.
    pub eta: f64,
    /// Reference photon number for the validity estimate ε_n = 1/n.
    pub photon_scale_n: f64,
}

impl Default for CavitySpec {
    fn default() -> Self {
        Self {
            g0_sq_over_delta: 0.0,
            k_c: 1.0,
            phase_offset: 0.0,
            kappa: 100.0,
            delta_pc: 0.0,
            eta: 0.0,
            photon_scale_n: 1.0,
        }
    }
}

impl CavitySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cavity linewidth kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(0.0..TAU).contains(&self.phase_offset) {
            return Err(Error::InvalidParameter(format!(
                "phase offset must lie in [0, 2π), got {}",
                self.phase_offset
            )));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::InvalidParameter(
                "axial pump amplitude eta must be real and non-negative".into(),
            ));
        }
        if !(self.photon_scale_n > 0.0) {
            return Err(Error::InvalidParameter(
                "photon scale must be positive".into(),
            ));
        }
        if !self.k_c.is_finite() || !self.g0_sq_over_delta.is_finite() {
            return Err(Error::InvalidParameter(
                "non-finite cavity parameter".into(),
            ));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        if self.k_c == 0.0 {
            f64::INFINITY
        } else {
            TAU / self.k_c.abs()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PumpShape {
    Zero,
    Uniform {
        amplitude: f64,
    },
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

/// Transverse pump profile h(x) = h0·h̃(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpProfile {
    pub shape: PumpShape,
    /// h0g0/Δ_pa in units of ω.
    pub h0g0_over_delta: f64,
    /// h0²/Δ_pa in units of ω.
    pub h0_sq_over_delta: f64,
}

impl PumpProfile {
    pub fn off() -> Self {
        Self {
            shape: PumpShape::Zero,
            h0g0_over_delta: 0.0,
            h0_sq_over_delta: 0.0,
        }
    }

    pub fn is_off(&self) -> bool {
        matches!(self.shape, PumpShape::Zero)
            || (self.h0g0_over_delta == 0.0 && self.h0_sq_over_delta == 0.0)
    }

    /// Multiplies the pump field amplitude h0 by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            shape: self.shape,
            h0g0_over_delta: self.h0g0_over_delta * scale,
            h0_sq_over_delta: self.h0_sq_over_delta * scale * scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let PumpShape::Gaussian { width, .. } = self.shape {
            if !(width > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "Gaussian pump width must be positive, got {width}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Variant {
    /// Coupled atom field and cavity amplitude.
    FullCavity,
    /// Cavity eliminated, axial pumping; `f_order` 0 or 1 selects the
    /// photon-exchange correction to the optical potential.
    AxialEliminated { f_order: u8 },
    /// Cavity eliminated, transverse pumping.
    TransverseEliminated,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::FullCavity => write!(f, "full-cavity"),
            Variant::AxialEliminated { f_order } => {
                write!(f, "axial-eliminated(f_order={f_order})")
            }
            Variant::TransverseEliminated => write!(f, "transverse-eliminated"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub trap: TrapSpec,
    pub cavity: CavitySpec,
    pub pump: PumpProfile,
    /// Nonlinearity N·U in units of ħω·x0.
    pub nu: f64,
    pub atom_number: f64,
    pub compensate_pump_lightshift: bool,
    pub variant: Variant,
}

impl ModelParams {
    /// Harmonic trap, no light, given nonlinearity.
    pub fn harmonic(nu: f64, atom_number: f64) -> Self {
        Self {
            trap: TrapSpec::harmonic(),
            cavity: CavitySpec::default(),
            pump: PumpProfile::off(),
            nu,
            atom_number,
            compensate_pump_lightshift: false,
            variant: Variant::TransverseEliminated,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.trap.validate()?;
        self.cavity.validate()?;
        self.pump.validate()?;
        if !(self.nu >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nonlinearity NU must be non-negative, got {}",
                self.nu
            )));
        }
        if !(self.atom_number > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "atom number must be positive, got {}",
                self.atom_number
            )));
        }
        if let Variant::AxialEliminated { f_order } = self.variant {
            if f_order > 1 {
                return Err(Error::InvalidParameter(format!(
                    "f_order must be 0 or 1, got {f_order}"
                )));
            }
        }
        Ok(())
    }

    /// Single-atom interaction strength U = NU/N.
    pub fn interaction_u(&self) -> f64 {
        self.nu / self.atom_number
    }

    pub fn with_pump_scale(&self, scale: f64) -> Self {
        Self {
            pump: self.pump.scaled(scale),
            ..*self
        }
    }

    /// h0²g0²/(κΔ_pa²), the single rate setting the transverse measurement strength.
    pub fn transverse_measurement_strength(&self) -> f64 {
        self.pump.h0g0_over_delta.powi(2) / self.cavity.kappa
    }
}

/// V(x_i) = c·x_i² + s·E_R·cos²(k_L x_i).
pub fn eval_trap_potential(trap: &TrapSpec, grid: &Grid) -> Vec<f64> {
    let depth = trap.lattice_depth_s * trap.recoil_energy();
    grid.positions()
        .iter()
        .map(|&x| {
            let lattice = if depth > 0.0 {
                depth * (trap.lattice_wavenumber * x).cos().powi(2)
            } else {
                0.0
            };
            trap.harmonic_strength * x * x + lattice
        })
        .collect()
}

/// g̃(x_i) = sin(k_c x_i + offset).
pub fn eval_cavity_mode(cavity: &CavitySpec, grid: &Grid) -> Vec<f64> {
    grid.positions()
        .iter()
        .map(|&x| (cavity.k_c * x + cavity.phase_offset).sin())
        .collect()
}

/// h̃(x_i) for the pump shape.
pub fn eval_pump(pump: &PumpProfile, grid: &Grid) -> Vec<f64> {
    let n = grid.n_points();
    match pump.shape {
        PumpShape::Zero => vec![0.0; n],
        PumpShape::Uniform { amplitude } => vec![amplitude; n],
        PumpShape::Gaussian {
            amplitude,
            center,
            width,
        } => grid
            .positions()
            .iter()
            .map(|&x| {
                let z = (x - center) / width;
                amplitude * (-0.5 * z * z).exp()
            })
            .collect(),
    }
}

/// Model profiles evaluated once on a grid and shared read-only.
#[derive(Debug, Clone)]
pub struct ModelFields {
    pub grid: Arc<Grid>,
    pub params: ModelParams,
    /// Static trap potential V(x).
    pub potential: Vec<f64>,
    /// g̃(x).
    pub cavity_mode: Vec<f64>,
    /// h̃(x).
    pub pump: Vec<f64>,
    /// Relative detuning profile Δ_pa(x)/Δ_pa, 1 everywhere unless set.
    pub detuning_scale: Vec<f64>,
}

impl ModelFields {
    pub fn new(params: &ModelParams, grid: Arc<Grid>) -> Result<Self> {
        params.validate()?;
        let potential = eval_trap_potential(&params.trap, &grid);
        let cavity_mode = eval_cavity_mode(&params.cavity, &grid);
        let pump = eval_pump(&params.pump, &grid);
        let detuning_scale = vec![1.0; grid.n_points()];
        Ok(Self {
            grid,
            params: *params,
            potential,
            cavity_mode,
            pump,
            detuning_scale,
        })
    }

    /// Sets a spatially varying pump-atom detuning Δ_pa(x) = Δ_pa·d(x).
    pub fn with_detuning_profile(mut self, profile: impl Fn(f64) -> f64) -> Result<Self> {
        let scale: Vec<f64> = self.grid.positions().iter().map(|&x| profile(x)).collect();
        if scale.iter().any(|d| !d.is_finite() || *d == 0.0) {
            return Err(Error::InvalidParameter(
                "detuning profile must be finite and nonzero".into(),
            ));
        }
        self.detuning_scale = scale;
        Ok(self)
    }

    /// g²(x)/Δ_pa(x).
    pub fn g_sq_over_delta(&self) -> Vec<f64> {
        let c = self.params.cavity.g0_sq_over_delta;
        self.cavity_mode
            .iter()
            .zip(&self.detuning_scale)
            .map(|(g, d)| c * g * g / d)
            .collect()
    }

    /// h(x)g(x)/Δ_pa(x).
    pub fn hg_over_delta(&self) -> Vec<f64> {
        let c = self.params.pump.h0g0_over_delta;
        self.cavity_mode
            .iter()
            .zip(&self.pump)
            .zip(&self.detuning_scale)
            .map(|((g, h), d)| c * g * h / d)
            .collect()
    }

    /// h²(x)/Δ_pa(x).
    pub fn h_sq_over_delta(&self) -> Vec<f64> {
        let c = self.params.pump.h0_sq_over_delta;
        self.pump
            .iter()
            .zip(&self.detuning_scale)
            .map(|(h, d)| c * h * h / d)
            .collect()
    }

    /// Static potential including the pump light shift compensation, if any.
    pub fn static_potential(&self) -> Vec<f64> {
        if self.params.compensate_pump_lightshift {
            self.potential
                .iter()
                .zip(self.h_sq_over_delta())
                .map(|(v, s)| v - s)
                .collect()
        } else {
            self.potential.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidityWarning {
    /// NU → 0: no interactions, Tonks parameter vanishes.
    ClassicalLimit,
    /// Fewer than one atom per healing length.
    FewAtomsPerHealingLength,
    /// |Δ̃_pc|/κ is not small.
    AdiabaticParameterLarge,
    /// Grid spacing exceeds the healing length.
    GridCoarserThanHealingLength,
    /// Grid spacing exceeds one eighth of the cavity wavelength.
    GridCoarserThanCavityWavelength,
}

/// Threshold on |Δ̃_pc|/κ above which adiabatic elimination is flagged.
pub const ADIABATIC_PARAMETER_LIMIT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub tonks_gamma: f64,
    pub healing_length: f64,
    pub atoms_per_healing_length: f64,
    pub eps_n: f64,
    /// 1/N_ξ, the inverse occupation of a healing-length cell at peak density.
    pub min_site_occupation_eps: f64,
    pub adiabatic_small_parameter: f64,
    pub warnings: Vec<ValidityWarning>,
}

impl ValidityReport {
    pub fn has(&self, w: ValidityWarning) -> bool {
        self.warnings.contains(&w)
    }
}

/// Weak-fluctuation and adiabatic-elimination diagnostics for a normalized
/// condensate profile `psi` (∫|ψ|² = 1) under `params`.
pub fn validity_diagnostics(psi: &ComplexField, params: &ModelParams) -> Result<ValidityReport> {
    let norm = psi.norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let grid = psi.grid();
    let n = params.atom_number;
    let peak = psi
        .values()
        .iter()
        .map(|v| v.norm_sqr())
        .fold(0.0, f64::max)
        / norm;
    let rho = n * peak;
    if !(rho > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let u = params.interaction_u();
    let mut warnings = Vec::new();
    let (gamma, xi, n_xi) = if u > 0.0 {
        let gamma = u / rho;
        let xi = 1.0 / (2.0 * rho * u).sqrt();
        (gamma, xi, 1.0 / (2.0 * gamma).sqrt())
    } else {
        warnings.push(ValidityWarning::ClassicalLimit);
        (0.0, f64::INFINITY, f64::INFINITY)
    };
    if n_xi < 1.0 {
        warnings.push(ValidityWarning::FewAtomsPerHealingLength);
    }
    let g = eval_cavity_mode(&params.cavity, grid);
    let weighted: Vec<f64> = psi
        .values()
        .iter()
        .zip(&g)
        .map(|(p, g)| params.cavity.g0_sq_over_delta * g * g * p.norm_sqr() / norm)
        .collect();
    let shift = n * integrate(&weighted, grid)?;
    let adiabatic = (params.cavity.delta_pc - shift).abs() / params.cavity.kappa;
    if adiabatic >= ADIABATIC_PARAMETER_LIMIT {
        warnings.push(ValidityWarning::AdiabaticParameterLarge);
    }
    let dx = grid.spacing();
    if dx > xi {
        warnings.push(ValidityWarning::GridCoarserThanHealingLength);
    }
    if params.cavity.k_c != 0.0 && dx > params.cavity.wavelength() / 8.0 {
        warnings.push(ValidityWarning::GridCoarserThanCavityWavelength);
    }
    Ok(ValidityReport {
        tonks_gamma: gamma,
        healing_length: xi,
        atoms_per_healing_length: n_xi,
        eps_n: 1.0 / params.cavity.photon_scale_n,
        min_site_occupation_eps: if n_xi.is_finite() { 1.0 / n_xi } else { 0.0 },
        adiabatic_small_parameter: adiabatic,
        warnings,
    })
}

/// Lattice period π/k_L, the spacing between adjacent wells.
pub fn lattice_period(trap: &TrapSpec) -> f64 {
    PI / trap.lattice_wavenumber
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, normalize};
    use num_complex::Complex64;

    #[test]
    fn pure_harmonic_potential() {
        let g = make_grid(8, 8.0).unwrap();
        let v = eval_trap_potential(&TrapSpec::harmonic(), &g);
        let i = g.nearest_index(2.0);
        assert_eq!(v[i], 2.0);
        for i in 1..8 {
            assert_eq!(v[i], v[g.mirror_index(i)]);
        }
    }

    #[test]
    fn lattice_depth_at_centre() {
        let g = make_grid(64, 8.0).unwrap();
        let trap = TrapSpec {
            harmonic_strength: 0.5,
            lattice_depth_s: 10.0,
            lattice_wavenumber: 8.1,
        };
        let v = eval_trap_potential(&trap, &g);
        let i0 = g.nearest_index(0.0);
        assert!((v[i0] - 10.0 * trap.recoil_energy()).abs() < 1e-12);
    }

    #[test]
    fn lattice_wells_sit_on_cavity_antinodes() {
        let trap = TrapSpec {
            harmonic_strength: 0.5,
            lattice_depth_s: 10.0,
            lattice_wavenumber: 8.1,
        };
        let cav = CavitySpec {
            k_c: 8.1,
            ..CavitySpec::default()
        };
        let g = make_grid(1024, 4.0).unwrap();
        let v = eval_trap_potential(&trap, &g);
        let gm = eval_cavity_mode(&cav, &g);
        // local minima of the lattice part coincide with |g̃| = 1
        for i in 1..1023 {
            let lat = v[i] - 0.5 * g.positions()[i].powi(2);
            let lp = v[i - 1] - 0.5 * g.positions()[i - 1].powi(2);
            let ln = v[i + 1] - 0.5 * g.positions()[i + 1].powi(2);
            if lat <= lp && lat <= ln {
                assert!(
                    gm[i].abs() > 0.999,
                    "well at x={} has |g|={}",
                    g.positions()[i],
                    gm[i]
                );
            }
        }
    }

    #[test]
    fn cavity_mode_parity() {
        let g = make_grid(128, 10.0).unwrap();
        let node = CavitySpec {
            k_c: 1.3,
            ..CavitySpec::default()
        };
        let anti = CavitySpec {
            phase_offset: std::f64::consts::FRAC_PI_2,
            ..node
        };
        let gn = eval_cavity_mode(&node, &g);
        let ga = eval_cavity_mode(&anti, &g);
        let i0 = g.nearest_index(0.0);
        assert_eq!(gn[i0], 0.0);
        assert!((ga[i0] - 1.0).abs() < 1e-15);
        for i in 0..128 {
            let m = g.mirror_index(i);
            if m == 0 {
                continue; // the periodic edge point has no in-box mirror value
            }
            assert!((gn[i] + gn[m]).abs() < 1e-12);
            assert!((ga[i] - ga[m]).abs() < 1e-12);
        }
    }

    #[test]
    fn pump_shapes() {
        let g = make_grid(256, 20.0).unwrap();
        let zero = eval_pump(&PumpProfile::off(), &g);
        assert!(zero.iter().all(|&v| v == 0.0));
        let uni = PumpProfile {
            shape: PumpShape::Uniform { amplitude: 1.0 },
            h0g0_over_delta: 1.0,
            h0_sq_over_delta: 1.0,
        };
        assert!(eval_pump(&uni, &g).iter().all(|&v| v == 1.0));
        let gauss = PumpProfile {
            shape: PumpShape::Gaussian {
                amplitude: 2.0,
                center: 3.2,
                width: 1.0,
            },
            ..uni
        };
        let fine = make_grid(8, 1.0).unwrap();
        let _ = fine;
        let h = eval_pump(&gauss, &g);
        // sample the analytic shape exactly at the quoted points
        let at = |x: f64| {
            let z: f64 = (x - 3.2) / 1.0;
            2.0 * (-0.5 * z * z).exp()
        };
        assert_eq!(at(3.2), 2.0);
        assert!(at(3.2 + 3.0) < 0.012 * 2.0);
        assert!(at(3.2 - 3.0) < 0.012 * 2.0);
        let imax = h
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!((g.positions()[imax] - 3.2).abs() <= g.spacing());
        let bad = PumpProfile {
            shape: PumpShape::Gaussian {
                amplitude: 1.0,
                center: 0.0,
                width: 0.0,
            },
            ..uni
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut p = ModelParams::harmonic(10.0, 100.0);
        p.cavity.kappa = -1.0;
        assert!(p.validate().is_err());
        let mut p = ModelParams::harmonic(10.0, 100.0);
        p.nu = -1.0;
        assert!(p.validate().is_err());
        let mut p = ModelParams::harmonic(10.0, 100.0);
        p.atom_number = 0.0;
        assert!(p.validate().is_err());
        let mut p = ModelParams::harmonic(10.0, 100.0);
        p.trap.lattice_depth_s = 5.0;
        assert!(p.validate().is_err());
    }

    fn gaussian(grid: &Arc<Grid>) -> ComplexField {
        let f = ComplexField::from_fn(grid.clone(), |x| Complex64::new((-0.5 * x * x).exp(), 0.0));
        normalize(&f, 1.0).unwrap()
    }

    #[test]
    fn classical_limit_flag() {
        let g = make_grid(256, 20.0).unwrap();
        let psi = gaussian(&g);
        let r = validity_diagnostics(&psi, &ModelParams::harmonic(0.0, 500.0)).unwrap();
        assert_eq!(r.tonks_gamma, 0.0);
        assert!(r.healing_length.is_infinite());
        assert!(r.has(ValidityWarning::ClassicalLimit));
    }

    #[test]
    fn atoms_per_healing_length_formula() {
        // choose N so that γ = U/ρ = 0.02 exactly
        let g = make_grid(256, 20.0).unwrap();
        let psi = gaussian(&g);
        let peak = psi.density().iter().cloned().fold(0.0, f64::max);
        let nu = 1.0;
        // γ = NU / (N² peak) → N = sqrt(NU / (γ peak))
        let n = (nu / (0.02 * peak)).sqrt();
        let r = validity_diagnostics(&psi, &ModelParams::harmonic(nu, n)).unwrap();
        assert!((r.tonks_gamma - 0.02).abs() < 1e-12);
        assert!((r.atoms_per_healing_length - 5.0).abs() < 1e-9);
    }

    #[test]
    fn tonks_parameter_scales_inverse_square_in_atom_number() {
        let g = make_grid(256, 20.0).unwrap();
        let psi = gaussian(&g);
        let a = validity_diagnostics(&psi, &ModelParams::harmonic(20.0, 500.0)).unwrap();
        let b = validity_diagnostics(&psi, &ModelParams::harmonic(20.0, 1000.0)).unwrap();
        assert!((b.tonks_gamma - a.tonks_gamma / 4.0).abs() < 1e-12 * a.tonks_gamma);
    }

    #[test]
    fn detuning_profile_rescales_couplings() {
        let g = make_grid(64, 10.0).unwrap();
        let mut p = ModelParams::harmonic(1.0, 10.0);
        p.cavity.g0_sq_over_delta = 0.5;
        p.pump = PumpProfile {
            shape: PumpShape::Uniform { amplitude: 1.0 },
            h0g0_over_delta: 2.0,
            h0_sq_over_delta: 8.0,
        };
        let f = ModelFields::new(&p, g.clone()).unwrap();
        let f2 = f.clone().with_detuning_profile(|_| 2.0).unwrap();
        for (a, b) in f.hg_over_delta().iter().zip(f2.hg_over_delta()) {
            assert!((a / 2.0 - b).abs() < 1e-15);
        }
        assert!(f.clone().with_detuning_profile(|_| 0.0).is_err());
    }
}
