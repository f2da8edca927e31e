//! Turns a [`RunConfig`] into prepared states and runnable jobs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bdg::{overlap_integral, solve_bdg_in, BdgModeSet};
use crate::config::RunConfig;
use crate::ensemble::{run_ensemble, EnsembleJob, EnsembleResult, InitialCondition};
use crate::error::{Error, Result};
use crate::grid::{normalize, Grid};
use crate::groundstate::{solve_ground_state_in, threshold_scan, GroundState, ThresholdPoint};
use crate::model::{
    eval_cavity_mode, eval_trap_potential, validity_diagnostics, ModelFields, ValidityReport,
};
use crate::observables::SiteLayout;
use crate::sde::{Observers, TrajectoryState};

/// Ground state, model fields and optional analysis context for a config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub grid: Arc<Grid>,
    pub ground: GroundState,
    pub fields: Arc<ModelFields>,
    pub modes: Option<Arc<BdgModeSet>>,
    pub layout: Option<SiteLayout>,
    pub validity: ValidityReport,
}

impl Prepared {
    /// √N ψ0 with the configured initial cavity amplitude.
    pub fn initial_state(&self, rc: &RunConfig) -> Result<TrajectoryState> {
        let psi = normalize(&self.ground.psi0, rc.params.atom_number)?;
        Ok(TrajectoryState::new(psi).with_alpha(rc.initial_alpha))
    }

    pub fn observers(&self, rc: &RunConfig) -> Observers {
        Observers {
            sites: self.layout.clone(),
            modes: self.modes.clone(),
            wigner_sampled: rc.sample_noise,
        }
    }
}

/// Whether Bogoliubov modes are needed: harmonic (non-lattice) runs record
/// mode populations, and noisy or thermal initial states are sampled from them.
pub fn needs_modes(rc: &RunConfig) -> bool {
    !rc.params.trap.has_lattice() || rc.sample_noise || rc.temperature > 0.0
}

/// Solves the pump-free ground state of the trap and, if `with_modes`,
/// its Bogoliubov spectrum.
pub fn prepare(rc: &RunConfig, with_modes: bool) -> Result<Prepared> {
    rc.validate()?;
    let grid = rc.grid.build()?;
    let potential = eval_trap_potential(&rc.params.trap, &grid);
    let ground = solve_ground_state_in(&potential, rc.params.nu, &grid, &rc.groundstate, None)?;
    let fields = Arc::new(ModelFields::new(&rc.params, grid.clone())?);
    let modes = if with_modes {
        Some(Arc::new(solve_bdg_in(
            &ground,
            &potential,
            rc.params.nu,
            rc.bdg_modes,
        )?))
    } else {
        None
    };
    let layout = if rc.params.trap.has_lattice() {
        Some(SiteLayout::new(&rc.params.trap, &grid)?)
    } else {
        None
    };
    let validity = validity_diagnostics(&ground.psi0, &rc.params)?;
    Ok(Prepared {
        grid,
        ground,
        fields,
        modes,
        layout,
        validity,
    })
}

/// Turns validity warnings into an error when `strict`.
pub fn check_validity(report: &ValidityReport, strict: bool) -> Result<()> {
    if strict && !report.warnings.is_empty() {
        let names: Vec<String> = report.warnings.iter().map(|w| format!("{w:?}")).collect();
        return Err(Error::Validity(names.join(", ")));
    }
    Ok(())
}

pub fn ensemble_job(rc: &RunConfig, prep: &Prepared) -> Result<EnsembleJob> {
    let initial = if rc.sample_noise || rc.temperature > 0.0 {
        let modes = prep.modes.clone().ok_or_else(|| {
            Error::InvalidParameter("Bogoliubov sampling needs the mode set".into())
        })?;
        InitialCondition::Bogoliubov {
            modes,
            temperature: rc.temperature,
            atom_number: rc.params.atom_number,
            noise: rc.sample_noise,
        }
    } else {
        InitialCondition::Fixed(prep.initial_state(rc)?)
    };
    Ok(EnsembleJob {
        fields: prep.fields.clone(),
        scheme: rc.scheme,
        initial,
        observers: prep.observers(rc),
        config: rc.ensemble.clone(),
    })
}

/// Steady-state imbalance over the configured pump scales.
pub fn run_threshold_scan(rc: &RunConfig) -> Result<Vec<ThresholdPoint>> {
    if rc.pump_scales.is_empty() {
        return Err(Error::Config("scan.pump_scales is empty".into()));
    }
    let grid = rc.grid.build()?;
    threshold_scan(&rc.params, &grid, &rc.pump_scales, &rc.steady)
}

/// One row of a cavity-wavelength scan, sampled at the final time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthPoint {
    pub k_c: f64,
    /// Overlap of the cavity mode with the Kohn mode.
    pub overlap: f64,
    pub kohn_population: f64,
    pub kohn_population_se: f64,
    pub abs_q1: f64,
    pub abs_q1_se: f64,
}

/// Runs the configured ensemble once per cavity wavenumber.
pub fn run_wavelength_scan(rc: &RunConfig) -> Result<Vec<WavelengthPoint>> {
    if rc.k_c_values.is_empty() {
        return Err(Error::Config("scan.k_c_values is empty".into()));
    }
    let prep = prepare(rc, true)?;
    let modes = prep.modes.clone().expect("requested above");
    let mut out = Vec::with_capacity(rc.k_c_values.len());
    for &k_c in &rc.k_c_values {
        let mut scanned = rc.clone();
        scanned.params.cavity.k_c = k_c;
        let fields = Arc::new(ModelFields::new(&scanned.params, prep.grid.clone())?);
        let cavity_mode = eval_cavity_mode(&scanned.params.cavity, &prep.grid);
        let overlap = overlap_integral(1, &cavity_mode, &modes)?;
        let p = Prepared {
            fields,
            ..prep.clone()
        };
        let res = run_ensemble(&ensemble_job(&scanned, &p)?)?;
        let s = &res.stats;
        let last = s.times.len() - 1;
        let kohn = s.bdg_populations[last].first().copied().unwrap_or_default();
        out.push(WavelengthPoint {
            k_c,
            overlap,
            kohn_population: kohn.mean,
            kohn_population_se: kohn.std_err(),
            abs_q1: s.abs_q1[last].mean,
            abs_q1_se: s.abs_q1[last].std_err(),
        });
    }
    Ok(out)
}

/// Runs the configured ensemble from scratch.
pub fn run_configured_ensemble(rc: &RunConfig, strict: bool) -> Result<(Prepared, EnsembleResult)> {
    let prep = prepare(rc, needs_modes(rc))?;
    check_validity(&prep.validity, strict)?;
    let res = run_ensemble(&ensemble_job(rc, &prep)?)?;
    Ok((prep, res))
}
