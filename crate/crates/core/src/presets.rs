//! Named experiment presets. Each returns a complete, runnable [`RunConfig`].

use std::f64::consts::{FRAC_PI_2, PI};

use crate::config::RunConfig;
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{CavitySpec, ModelParams, PumpProfile, PumpShape, TrapSpec, Variant};
use crate::sde::{NoiseUpdate, RecorderConfig, Splitting, StepScheme};

pub const PRESET_NAMES: [&str; 7] = [
    "lattice-selforg",
    "gaussian-pump",
    "threshold-scan",
    "kohn",
    "breathing",
    "wavelength-scan",
    "third-mode",
];

pub fn preset_description(name: &str) -> Option<&'static str> {
    Some(match name {
        "lattice-selforg" => {
            "BEC in a deep lattice, uniform transverse pump; odd/even symmetry breaking"
        }
        "gaussian-pump" => "lattice BEC under a Gaussian pump centered between sites 16 and 17",
        "threshold-scan" => "steady-state odd/even imbalance versus pump strength in the lattice",
        "kohn" => "harmonic BEC, cavity wavelength chosen to address the dipole (Kohn) mode",
        "breathing" => "harmonic BEC, cavity antinode at the center addressing the breathing mode",
        "wavelength-scan" => "Kohn population and <|q1|> at t = 0.16*2pi versus cavity wavenumber",
        "third-mode" => "harmonic BEC with k_c = 1.03, where the third mode dominates",
        _ => return None,
    })
}

pub const LATTICE_WAVENUMBER: f64 = 8.1;
pub const LATTICE_DEPTH_S: f64 = 10.0;
pub const LATTICE_NU: f64 = 38.0;
pub const ATOM_NUMBER: f64 = 750.0;
pub const KAPPA: f64 = 100.0;
/// g0²/Δ_pa from g0/√Δ_pa = 0.16.
pub const G0_SQ_OVER_DELTA: f64 = 0.0256;
/// h0²g0²/(κΔ_pa²) in the lattice.
pub const LATTICE_MEASUREMENT_STRENGTH: f64 = 2.6e-3;
/// Bare pump-cavity detuning placing the self-organization onset near a
/// pump factor of 10 (see the threshold-scan preset).
pub const LATTICE_DELTA_PC: f64 = 13.0;

pub const KOHN_NU: f64 = 64.0;
/// h0/√Δ_pa.
pub const KOHN_H0: f64 = 12.8;
/// Cavity wavenumber maximizing the dipole-mode overlap, node at the trap center.
pub const KOHN_K_C: f64 = 0.453;
/// Cavity wavenumber maximizing the breathing-mode overlap, antinode at the center.
pub const BREATHING_K_C: f64 = 0.725;
pub const THIRD_MODE_K_C: f64 = 1.03;
/// Time at which the wavelength scan samples populations.
pub const SCAN_TIME: f64 = 0.16 * 2.0 * PI;

/// Center of the Gaussian pump: midway between sites 16 and 17.
pub fn gaussian_pump_center() -> f64 {
    4.0 * PI / LATTICE_WAVENUMBER
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let mut rc = match name {
        "lattice-selforg" => lattice(),
        "gaussian-pump" => gaussian_pump(),
        "threshold-scan" => threshold_scan(),
        "kohn" => kohn(),
        "breathing" => breathing(),
        "wavelength-scan" => wavelength_scan(),
        "third-mode" => third_mode(),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    rc.preset = Some(name.to_string());
    Ok(rc)
}

fn lattice_params() -> ModelParams {
    let h0g0 = (LATTICE_MEASUREMENT_STRENGTH * KAPPA).sqrt();
    ModelParams {
        trap: TrapSpec {
            harmonic_strength: 0.5,
            lattice_depth_s: LATTICE_DEPTH_S,
            lattice_wavenumber: LATTICE_WAVENUMBER,
        },
        cavity: CavitySpec {
            g0_sq_over_delta: G0_SQ_OVER_DELTA,
            k_c: LATTICE_WAVENUMBER,
            phase_offset: 0.0,
            kappa: KAPPA,
            delta_pc: LATTICE_DELTA_PC,
            eta: 0.0,
            photon_scale_n: 1.0,
        },
        pump: PumpProfile {
            shape: PumpShape::Uniform { amplitude: 1.0 },
            h0g0_over_delta: h0g0,
            h0_sq_over_delta: h0g0 * h0g0 / G0_SQ_OVER_DELTA,
        },
        nu: LATTICE_NU,
        atom_number: ATOM_NUMBER,
        compensate_pump_lightshift: false,
        variant: Variant::TransverseEliminated,
    }
}

fn lattice() -> RunConfig {
    RunConfig {
        grid: GridSpec {
            n_points: 1024,
            extent: 12.0,
        },
        params: lattice_params(),
        scheme: StepScheme {
            dt: 1e-4,
            splitting: Splitting::Strang,
            noise_update: NoiseUpdate::Milstein,
            noise_strength: 1.0,
            kinetic: true,
        },
        ensemble: EnsembleConfig {
            n_trajectories: 400,
            base_seed: 1,
            t_final: 3.0 * 2.0 * PI,
            recorder: RecorderConfig {
                stride: 314,
                density: true,
                probe_points: Vec::new(),
                store_wiener: false,
            },
            cos_pairs: [2, -2, -7, 3, -1, 1].iter().map(|d| (12, 12 - d)).collect(),
            keep_trajectories: false,
            batch_size: 8,
        },
        bdg_modes: 8,
        ..RunConfig::default()
    }
}

fn gaussian_pump() -> RunConfig {
    let mut rc = lattice();
    rc.params.pump.shape = PumpShape::Gaussian {
        amplitude: 1.0,
        center: gaussian_pump_center(),
        width: 0.5,
    };
    rc.params.compensate_pump_lightshift = true;
    rc.ensemble.n_trajectories = 200;
    rc.ensemble.t_final = 2.5 * 2.0 * PI;
    let mut pairs = vec![(16, 17), (16, 13), (16, 12), (8, 9)];
    pairs.extend(
        (0..=25)
            .filter(|&j| j != 16 && j != 17 && j != 13 && j != 12)
            .map(|j| (16, j)),
    );
    rc.ensemble.cos_pairs = pairs;
    rc.ensemble.recorder.stride = 157;
    rc
}

fn threshold_scan() -> RunConfig {
    let mut rc = lattice();
    rc.pump_scales = (0..=30).map(f64::from).collect();
    rc
}

fn harmonic_params(k_c: f64, phase_offset: f64) -> ModelParams {
    let h0g0 = KOHN_H0 * G0_SQ_OVER_DELTA.sqrt();
    ModelParams {
        trap: TrapSpec::harmonic(),
        cavity: CavitySpec {
            g0_sq_over_delta: G0_SQ_OVER_DELTA,
            k_c,
            phase_offset,
            kappa: KAPPA,
            delta_pc: 0.0,
            eta: 0.0,
            photon_scale_n: 1.0,
        },
        pump: PumpProfile {
            shape: PumpShape::Uniform { amplitude: 1.0 },
            h0g0_over_delta: h0g0,
            h0_sq_over_delta: KOHN_H0 * KOHN_H0,
        },
        nu: KOHN_NU,
        atom_number: ATOM_NUMBER,
        compensate_pump_lightshift: true,
        variant: Variant::TransverseEliminated,
    }
}

fn harmonic_run(k_c: f64, phase_offset: f64) -> RunConfig {
    RunConfig {
        grid: GridSpec {
            n_points: 1024,
            extent: 20.0,
        },
        params: harmonic_params(k_c, phase_offset),
        scheme: StepScheme {
            dt: 2.5e-4,
            splitting: Splitting::Strang,
            noise_update: NoiseUpdate::ExactRotation,
            noise_strength: 1.0,
            kinetic: true,
        },
        ensemble: EnsembleConfig {
            n_trajectories: 400,
            base_seed: 1,
            t_final: 2.0 * 2.0 * PI,
            recorder: RecorderConfig {
                stride: 100,
                density: true,
                probe_points: vec![0.0, 3.0],
                store_wiener: false,
            },
            cos_pairs: Vec::new(),
            keep_trajectories: false,
            batch_size: 8,
        },
        bdg_modes: 8,
        ..RunConfig::default()
    }
}

fn kohn() -> RunConfig {
    harmonic_run(KOHN_K_C, 0.0)
}

fn breathing() -> RunConfig {
    harmonic_run(BREATHING_K_C, FRAC_PI_2)
}

fn third_mode() -> RunConfig {
    harmonic_run(THIRD_MODE_K_C, 0.0)
}

fn wavelength_scan() -> RunConfig {
    let mut rc = harmonic_run(KOHN_K_C, 0.0);
    rc.ensemble.t_final = SCAN_TIME;
    rc.ensemble.recorder.density = false;
    rc.k_c_values = (1..=24).map(|i| 0.1 * f64::from(i)).collect();
    rc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for name in PRESET_NAMES {
            let rc = preset(name).unwrap();
            rc.validate().unwrap();
            assert!(preset_description(name).is_some());
            let text = rc.to_toml().unwrap();
            assert_eq!(parse_config(&text).unwrap(), rc, "{name}");
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn lattice_couplings() {
        let p = preset("lattice-selforg").unwrap().params;
        assert_eq!(p.trap.lattice_depth_s, 10.0);
        assert!((p.transverse_measurement_strength() - 2.6e-3).abs() < 1e-15);
        assert_eq!(p.nu, 38.0);
    }

    #[test]
    fn kohn_couplings() {
        let p = preset("kohn").unwrap().params;
        assert!((p.transverse_measurement_strength() - 0.042).abs() < 1e-3);
        assert!((p.pump.h0g0_over_delta - 12.8 * 0.16).abs() < 1e-12);
        assert_eq!(p.cavity.kappa, 100.0);
        assert_eq!(p.atom_number, 750.0);
    }

    #[test]
    fn overlay_on_preset() {
        let rc = parse_config("preset = \"kohn\"\n[ensemble]\nn_trajectories = 3\n").unwrap();
        assert_eq!(rc.ensemble.n_trajectories, 3);
        assert_eq!(rc.params.nu, KOHN_NU);
        assert_eq!(rc.preset.as_deref(), Some("kohn"));
    }
}
