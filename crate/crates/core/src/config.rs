//! Run configuration: a fully resolved [`RunConfig`] and the TOML file
//! format, an overlay of optional keys applied on top of a preset or the
//! defaults.
//!
//! All quantities are in oscillator units (ħ = m = ω = 1). Couplings may be
//! given either as the combinations g0²/Δ_pa, h0g0/Δ_pa, h0²/Δ_pa or as raw
//! g0, h0, Δ_pa, which are combined on load.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::groundstate::{GroundStateOptions, SteadyStateOptions};
use crate::model::{CavitySpec, ModelParams, PumpProfile, PumpShape, TrapSpec, Variant};
use crate::presets::preset;
use crate::sde::{NoiseUpdate, RecorderConfig, Splitting, StepScheme};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Preset the configuration started from, if any.
    pub preset: Option<String>,
    pub grid: GridSpec,
    pub params: ModelParams,
    /// Initial-state temperature in ħω/k_B.
    pub temperature: f64,
    /// Sample Bogoliubov vacuum noise into the initial state.
    pub sample_noise: bool,
    /// Initial cavity amplitude (full-cavity variant).
    pub initial_alpha: Complex64,
    pub scheme: StepScheme,
    pub ensemble: EnsembleConfig,
    pub groundstate: GroundStateOptions,
    pub bdg_modes: usize,
    pub steady: SteadyStateOptions,
    pub pump_scales: Vec<f64>,
    pub k_c_values: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            grid: GridSpec {
                n_points: 1024,
                extent: 20.0,
            },
            params: ModelParams::harmonic(0.0, 750.0),
            temperature: 0.0,
            sample_noise: false,
            initial_alpha: Complex64::new(0.0, 0.0),
            scheme: StepScheme::default(),
            ensemble: EnsembleConfig::default(),
            groundstate: GroundStateOptions::default(),
            bdg_modes: 8,
            steady: SteadyStateOptions::default(),
            pump_scales: Vec::new(),
            k_c_values: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.params.validate()?;
        self.scheme.validate()?;
        self.ensemble.validate()?;
        if !(self.temperature >= 0.0) {
            return Err(Error::Config(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        if self.bdg_modes == 0 {
            return Err(Error::Config("bdg.n_modes must be positive".into()));
        }
        Ok(())
    }

    /// Canonical TOML text; [`parse_config`] of it reproduces `self`.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&FileConfig::from_run(self))
            .map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub trap: TrapSection,
    #[serde(default)]
    pub cavity: CavitySection,
    #[serde(default)]
    pub pump: PumpSection,
    #[serde(default)]
    pub atoms: AtomsSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub recorder: RecorderSection,
    #[serde(default)]
    pub groundstate: GroundStateSection,
    #[serde(default)]
    pub bdg: BdgSection,
    #[serde(default)]
    pub scan: ScanSection,
}

macro_rules! section {
    ($name:ident { $($field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

section!(GridSection {
    n_points: usize,
    extent: f64
});
section!(TrapSection {
    harmonic_strength: f64,
    lattice_depth_s: f64,
    // lattice depth in ħω, converted with E_R = k_L²/2
    lattice_depth: f64,
    lattice_wavenumber: f64,
});
section!(CavitySection {
    g0_sq_over_delta: f64,
    g0: f64,
    delta_pa: f64,
    k_c: f64,
    phase_offset: f64,
    kappa: f64,
    delta_pc: f64,
    eta: f64,
    photon_scale_n: f64,
    initial_alpha: [f64; 2],
});
section!(PumpSection {
    shape: String,
    amplitude: f64,
    center: f64,
    width: f64,
    h0g0_over_delta: f64,
    h0_sq_over_delta: f64,
    h0: f64,
});
section!(AtomsSection {
    nu: f64,
    atom_number: f64,
    temperature: f64,
    sample_noise: bool,
});
section!(ModelSection {
    variant: String,
    f_order: u8,
    compensate_pump_lightshift: bool,
});
section!(SchemeSection {
    dt: f64,
    splitting: Splitting,
    noise_update: NoiseUpdate,
    noise_strength: f64,
    kinetic: bool,
});
section!(EnsembleSection {
    n_trajectories: usize,
    base_seed: u64,
    t_final: f64,
    cos_pairs: Vec<[i64; 2]>,
    keep_trajectories: bool,
    batch_size: usize,
});
section!(RecorderSection {
    stride: usize,
    density: bool,
    probe_points: Vec<f64>,
    store_wiener: bool,
});
section!(GroundStateSection {
    tol: f64,
    dt: f64,
    max_iterations: usize,
});
section!(BdgSection { n_modes: usize });
section!(ScanSection {
    pump_scales: Vec<f64>,
    k_c_values: Vec<f64>,
    damping: f64,
    inner_steps: usize,
    max_outer: usize,
    tol: f64,
    seed_sign: f64,
    seed_imbalance: f64,
});

fn variant_name(v: Variant) -> (&'static str, Option<u8>) {
    match v {
        Variant::FullCavity => ("full-cavity", None),
        Variant::AxialEliminated { f_order } => ("axial-eliminated", Some(f_order)),
        Variant::TransverseEliminated => ("transverse-eliminated", None),
    }
}

impl FileConfig {
    /// Every key spelled out, combined couplings only.
    pub fn from_run(rc: &RunConfig) -> Self {
        let p = &rc.params;
        let (variant, f_order) = variant_name(p.variant);
        let (shape, amplitude, center, width) = match p.pump.shape {
            PumpShape::Zero => ("zero", None, None, None),
            PumpShape::Uniform { amplitude } => ("uniform", Some(amplitude), None, None),
            PumpShape::Gaussian {
                amplitude,
                center,
                width,
            } => ("gaussian", Some(amplitude), Some(center), Some(width)),
        };
        let e = &rc.ensemble;
        Self {
            preset: rc.preset.clone(),
            grid: GridSection {
                n_points: Some(rc.grid.n_points),
                extent: Some(rc.grid.extent),
            },
            trap: TrapSection {
                harmonic_strength: Some(p.trap.harmonic_strength),
                lattice_depth_s: Some(p.trap.lattice_depth_s),
                lattice_depth: None,
                lattice_wavenumber: Some(p.trap.lattice_wavenumber),
            },
            cavity: CavitySection {
                g0_sq_over_delta: Some(p.cavity.g0_sq_over_delta),
                g0: None,
                delta_pa: None,
                k_c: Some(p.cavity.k_c),
                phase_offset: Some(p.cavity.phase_offset),
                kappa: Some(p.cavity.kappa),
                delta_pc: Some(p.cavity.delta_pc),
                eta: Some(p.cavity.eta),
                photon_scale_n: Some(p.cavity.photon_scale_n),
                initial_alpha: Some([rc.initial_alpha.re, rc.initial_alpha.im]),
            },
            pump: PumpSection {
                shape: Some(shape.to_string()),
                amplitude,
                center,
                width,
                h0g0_over_delta: Some(p.pump.h0g0_over_delta),
                h0_sq_over_delta: Some(p.pump.h0_sq_over_delta),
                h0: None,
            },
            atoms: AtomsSection {
                nu: Some(p.nu),
                atom_number: Some(p.atom_number),
                temperature: Some(rc.temperature),
                sample_noise: Some(rc.sample_noise),
            },
            model: ModelSection {
                variant: Some(variant.to_string()),
                f_order,
                compensate_pump_lightshift: Some(p.compensate_pump_lightshift),
            },
            scheme: SchemeSection {
                dt: Some(rc.scheme.dt),
                splitting: Some(rc.scheme.splitting),
                noise_update: Some(rc.scheme.noise_update),
                noise_strength: Some(rc.scheme.noise_strength),
                kinetic: Some(rc.scheme.kinetic),
            },
            ensemble: EnsembleSection {
                n_trajectories: Some(e.n_trajectories),
                base_seed: Some(e.base_seed),
                t_final: Some(e.t_final),
                cos_pairs: Some(e.cos_pairs.iter().map(|&(a, b)| [a, b]).collect()),
                keep_trajectories: Some(e.keep_trajectories),
                batch_size: Some(e.batch_size),
            },
            recorder: RecorderSection {
                stride: Some(e.recorder.stride),
                density: Some(e.recorder.density),
                probe_points: Some(e.recorder.probe_points.clone()),
                store_wiener: Some(e.recorder.store_wiener),
            },
            groundstate: GroundStateSection {
                tol: Some(rc.groundstate.tol),
                dt: Some(rc.groundstate.dt),
                max_iterations: Some(rc.groundstate.max_iterations),
            },
            bdg: BdgSection {
                n_modes: Some(rc.bdg_modes),
            },
            scan: ScanSection {
                pump_scales: Some(rc.pump_scales.clone()),
                k_c_values: Some(rc.k_c_values.clone()),
                damping: Some(rc.steady.damping),
                inner_steps: Some(rc.steady.inner_steps),
                max_outer: Some(rc.steady.max_outer),
                tol: Some(rc.steady.tol),
                seed_sign: Some(rc.steady.seed_sign),
                seed_imbalance: Some(rc.steady.seed_imbalance),
            },
        }
    }

    /// Applies the overlay to `base`.
    pub fn apply(&self, base: &RunConfig) -> Result<RunConfig> {
        let mut rc = base.clone();
        if let Some(p) = &self.preset {
            rc.preset = Some(p.clone());
        }
        set(&mut rc.grid.n_points, self.grid.n_points);
        set(&mut rc.grid.extent, self.grid.extent);

        let t = &self.trap;
        let trap: &mut TrapSpec = &mut rc.params.trap;
        set(&mut trap.harmonic_strength, t.harmonic_strength);
        set(&mut trap.lattice_wavenumber, t.lattice_wavenumber);
        set(&mut trap.lattice_depth_s, t.lattice_depth_s);
        if let Some(depth) = t.lattice_depth {
            if t.lattice_depth_s.is_some() {
                return Err(Error::Config(
                    "give either trap.lattice_depth_s or trap.lattice_depth, not both".into(),
                ));
            }
            let er = trap.recoil_energy();
            if !(er > 0.0) {
                return Err(Error::Config(
                    "trap.lattice_depth needs a positive lattice_wavenumber".into(),
                ));
            }
            trap.lattice_depth_s = depth / er;
        }

        let c = &self.cavity;
        let cav: &mut CavitySpec = &mut rc.params.cavity;
        set(&mut cav.k_c, c.k_c);
        set(&mut cav.phase_offset, c.phase_offset);
        set(&mut cav.kappa, c.kappa);
        set(&mut cav.delta_pc, c.delta_pc);
        set(&mut cav.eta, c.eta);
        set(&mut cav.photon_scale_n, c.photon_scale_n);
        if let Some([re, im]) = c.initial_alpha {
            rc.initial_alpha = Complex64::new(re, im);
        }
        match (c.g0_sq_over_delta, c.g0, c.delta_pa) {
            (Some(_), Some(_), _) => {
                return Err(Error::Config(
                    "give either cavity.g0_sq_over_delta or cavity.g0, not both".into(),
                ))
            }
            (Some(v), None, _) => cav.g0_sq_over_delta = v,
            (None, Some(g0), Some(d)) => cav.g0_sq_over_delta = g0 * g0 / nonzero(d)?,
            (None, Some(_), None) => {
                return Err(Error::Config("cavity.g0 requires cavity.delta_pa".into()))
            }
            (None, None, _) => {}
        }

        let p = &self.pump;
        let pump: &mut PumpProfile = &mut rc.params.pump;
        if let Some(shape) = &p.shape {
            pump.shape = match shape.as_str() {
                "zero" => PumpShape::Zero,
                "uniform" => PumpShape::Uniform {
                    amplitude: p.amplitude.unwrap_or(1.0),
                },
                "gaussian" => PumpShape::Gaussian {
                    amplitude: p.amplitude.unwrap_or(1.0),
                    center: p.center.unwrap_or(0.0),
                    width: p.width.ok_or_else(|| {
                        Error::Config("pump.width is required for a Gaussian pump".into())
                    })?,
                },
                other => {
                    return Err(Error::Config(format!(
                        "unknown pump.shape `{other}` (expected zero, uniform or gaussian)"
                    )))
                }
            };
        } else {
            match &mut pump.shape {
                PumpShape::Zero => {}
                PumpShape::Uniform { amplitude } => set(amplitude, p.amplitude),
                PumpShape::Gaussian {
                    amplitude,
                    center,
                    width,
                } => {
                    set(amplitude, p.amplitude);
                    set(center, p.center);
                    set(width, p.width);
                }
            }
        }
        if let Some(h0) = p.h0 {
            if p.h0g0_over_delta.is_some() || p.h0_sq_over_delta.is_some() {
                return Err(Error::Config(
                    "give either pump.h0 or the combined pump couplings, not both".into(),
                ));
            }
            let (Some(g0), Some(d)) = (c.g0, c.delta_pa) else {
                return Err(Error::Config(
                    "pump.h0 requires cavity.g0 and cavity.delta_pa".into(),
                ));
            };
            let d = nonzero(d)?;
            pump.h0g0_over_delta = h0 * g0 / d;
            pump.h0_sq_over_delta = h0 * h0 / d;
        }
        set(&mut pump.h0g0_over_delta, p.h0g0_over_delta);
        set(&mut pump.h0_sq_over_delta, p.h0_sq_over_delta);

        set(&mut rc.params.nu, self.atoms.nu);
        set(&mut rc.params.atom_number, self.atoms.atom_number);
        set(&mut rc.temperature, self.atoms.temperature);
        set(&mut rc.sample_noise, self.atoms.sample_noise);

        let m = &self.model;
        if let Some(v) = &m.variant {
            rc.params.variant = match v.as_str() {
                "full-cavity" => Variant::FullCavity,
                "axial-eliminated" => Variant::AxialEliminated {
                    f_order: m.f_order.unwrap_or(0),
                },
                "transverse-eliminated" => Variant::TransverseEliminated,
                other => {
                    return Err(Error::Config(format!(
                        "unknown model.variant `{other}` (expected full-cavity, axial-eliminated or transverse-eliminated)"
                    )))
                }
            };
        } else if let Some(f) = m.f_order {
            match &mut rc.params.variant {
                Variant::AxialEliminated { f_order } => *f_order = f,
                _ => {
                    return Err(Error::Config(
                        "model.f_order applies to the axial-eliminated variant only".into(),
                    ))
                }
            }
        }
        set(
            &mut rc.params.compensate_pump_lightshift,
            m.compensate_pump_lightshift,
        );

        let s = &self.scheme;
        set(&mut rc.scheme.dt, s.dt);
        set(&mut rc.scheme.splitting, s.splitting);
        set(&mut rc.scheme.noise_update, s.noise_update);
        set(&mut rc.scheme.noise_strength, s.noise_strength);
        set(&mut rc.scheme.kinetic, s.kinetic);

        let e = &self.ensemble;
        set(&mut rc.ensemble.n_trajectories, e.n_trajectories);
        set(&mut rc.ensemble.base_seed, e.base_seed);
        set(&mut rc.ensemble.t_final, e.t_final);
        if let Some(pairs) = &e.cos_pairs {
            rc.ensemble.cos_pairs = pairs.iter().map(|p| (p[0], p[1])).collect();
        }
        set(&mut rc.ensemble.keep_trajectories, e.keep_trajectories);
        set(&mut rc.ensemble.batch_size, e.batch_size);

        let r = &self.recorder;
        let rec: &mut RecorderConfig = &mut rc.ensemble.recorder;
        set(&mut rec.stride, r.stride);
        set(&mut rec.density, r.density);
        set(&mut rec.probe_points, r.probe_points.clone());
        set(&mut rec.store_wiener, r.store_wiener);

        set(&mut rc.groundstate.tol, self.groundstate.tol);
        set(&mut rc.groundstate.dt, self.groundstate.dt);
        set(
            &mut rc.groundstate.max_iterations,
            self.groundstate.max_iterations,
        );
        set(&mut rc.bdg_modes, self.bdg.n_modes);

        let sc = &self.scan;
        set(&mut rc.pump_scales, sc.pump_scales.clone());
        set(&mut rc.k_c_values, sc.k_c_values.clone());
        set(&mut rc.steady.damping, sc.damping);
        set(&mut rc.steady.inner_steps, sc.inner_steps);
        set(&mut rc.steady.max_outer, sc.max_outer);
        set(&mut rc.steady.tol, sc.tol);
        set(&mut rc.steady.seed_sign, sc.seed_sign);
        set(&mut rc.steady.seed_imbalance, sc.seed_imbalance);

        rc.validate().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })?;
        Ok(rc)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn nonzero(d: f64) -> Result<f64> {
    if d == 0.0 || !d.is_finite() {
        Err(Error::Config(
            "cavity.delta_pa must be finite and nonzero".into(),
        ))
    } else {
        Ok(d)
    }
}

/// Parses configuration text. A `preset` key selects the base; otherwise
/// the defaults are used.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_over(text, None)
}

/// Parses configuration text on top of the named preset. A `preset` key in
/// the text must agree with `preset_name` when both are given.
pub fn parse_config_over(text: &str, preset_name: Option<&str>) -> Result<RunConfig> {
    let file: FileConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let name = match (preset_name, file.preset.as_deref()) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!(
                "config names preset `{b}` but `{a}` was requested"
            )))
        }
        (Some(a), _) => Some(a),
        (None, b) => b,
    };
    let base = match name {
        Some(name) => preset(name)?,
        None => RunConfig::default(),
    };
    file.apply(&base)
}

/// Configuration text from a TOML file or from the config embedded in a run
/// manifest (`.json`).
pub fn read_config_text(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        return v
            .get("config")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| {
                Error::Config(format!(
                    "{}: manifest has no embedded config",
                    path.display()
                ))
            });
    }
    Ok(text)
}

/// Loads a TOML config, or the config embedded in a run manifest.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    resolve_config(None, Some(path))
}

/// Preset, config file, or the file overlaid on the preset.
pub fn resolve_config(preset_name: Option<&str>, path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => match preset_name {
            Some(name) => preset(name),
            None => Ok(RunConfig::default()),
        },
        Some(path) => {
            let text = read_config_text(path)?;
            parse_config_over(&text, preset_name).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
                other => other,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let rc = RunConfig::default();
        let text = rc.to_toml().unwrap();
        assert_eq!(parse_config(&text).unwrap(), rc);
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let err = parse_config("[cavity]\nkappa = 10.0\nkapa = 3.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("kapa"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn negative_kappa_is_rejected() {
        assert!(matches!(
            parse_config("[cavity]\nkappa = -1.0\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn raw_couplings_are_combined() {
        let rc = parse_config(
            "[cavity]\ng0 = 0.16\ndelta_pa = 1.0\n[pump]\nshape = \"uniform\"\nh0 = 12.8\n",
        )
        .unwrap();
        assert!((rc.params.cavity.g0_sq_over_delta - 0.0256).abs() < 1e-15);
        assert!((rc.params.pump.h0g0_over_delta - 2.048).abs() < 1e-12);
        assert!((rc.params.pump.h0_sq_over_delta - 163.84).abs() < 1e-9);
        assert!(parse_config("[cavity]\ng0 = 0.16\n").is_err());
        assert!(
            parse_config("[cavity]\ng0 = 0.16\ng0_sq_over_delta = 1.0\ndelta_pa = 1.0\n").is_err()
        );
    }

    #[test]
    fn lattice_depth_in_oscillator_units() {
        let rc = parse_config("[trap]\nlattice_wavenumber = 2.0\nlattice_depth = 4.0\n").unwrap();
        assert!((rc.params.trap.lattice_depth_s - 2.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_variant_is_rejected() {
        assert!(parse_config("[model]\nvariant = \"dispersive\"\n").is_err());
    }
}
