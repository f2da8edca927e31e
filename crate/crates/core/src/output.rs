//! CSV and manifest output.
//!
//! Every CSV is UTF-8 with a header row and a fixed column order. Floats are
//! written with Rust's shortest round-trip formatting, so values read back
//! bit-identically.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bdg::{overlap_integral, BdgModeSet};
use crate::config::RunConfig;
use crate::ensemble::{EnsembleResult, EnsembleStats, Welford};
use crate::error::{Error, Result};
use crate::groundstate::{GroundState, ThresholdPoint};
use crate::model::{eval_cavity_mode, ModelFields, ValidityReport};
use crate::pipeline::WavelengthPoint;
use crate::sde::TrajectoryOutput;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const MANIFEST_FORMAT: u32 = 1;

/// An output directory that records the hash of every file written to it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

impl OutputDir {
    /// Opens `root`, creating it if needed. An existing non-empty directory
    /// is refused unless `force`.
    pub fn create(root: &Path, force: bool) -> Result<Self> {
        if root.exists() {
            let mut entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
            if entries.next().is_some() && !force {
                return Err(Error::WouldOverwrite(root.to_path_buf()));
            }
        } else {
            fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        }
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(path)
    }

    /// Writes a CSV built by `fill`.
    pub fn write_csv<F>(&mut self, name: &str, header: &[&str], fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut CsvRows) -> Result<()>,
    {
        let mut rows = CsvRows {
            inner: csv::Writer::from_writer(Vec::new()),
            width: header.len(),
        };
        rows.inner.write_record(header).map_err(csv_err)?;
        fill(&mut rows)?;
        let bytes = rows
            .inner
            .into_inner()
            .map_err(|e| Error::Serialization(e.to_string()))?;
        self.write_bytes(name, &bytes)
    }

    /// Writes the manifest; it is not listed among the hashed files.
    pub fn finish(self, manifest: &Manifest) -> Result<PathBuf> {
        let path = self.root.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(manifest)
            .map_err(|e| Error::Serialization(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

/// Row sink handed to [`OutputDir::write_csv`].
pub struct CsvRows {
    inner: csv::Writer<Vec<u8>>,
    width: usize,
}

/// One CSV cell.
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v)
    }
}

impl CsvRows {
    pub fn row(&mut self, cells: &[Cell]) -> Result<()> {
        debug_assert_eq!(cells.len(), self.width);
        let text: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::F(v) => format!("{v:?}"),
                Cell::I(v) => v.to_string(),
                Cell::U(v) => v.to_string(),
            })
            .collect();
        self.inner.write_record(&text).map_err(csv_err)
    }
}

macro_rules! cells {
    ($($e:expr),* $(,)?) => { &[$(Cell::from($e)),*] };
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub format: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub preset: Option<String>,
    /// Canonical TOML of the full configuration; loadable with `load_config`.
    pub config: String,
    pub params_hash: Option<String>,
    pub base_seed: u64,
    pub n_trajectories: usize,
    pub seeds: Vec<u64>,
    pub failed_trajectories: Vec<usize>,
    pub validity: Option<ValidityReport>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn new(command: &str, rc: &RunConfig, out: &OutputDir) -> Result<Self> {
        Ok(Self {
            format: MANIFEST_FORMAT,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            preset: rc.preset.clone(),
            config: rc.to_toml()?,
            params_hash: None,
            base_seed: rc.ensemble.base_seed,
            n_trajectories: rc.ensemble.n_trajectories,
            seeds: Vec::new(),
            failed_trajectories: Vec::new(),
            validity: None,
            files: out.files().to_vec(),
        })
    }
}

fn mean_se(w: &Welford) -> [Cell; 2] {
    [Cell::F(w.mean), Cell::F(w.std_err())]
}

/// `ground_state.csv`: x, V(x), ψ0(x), N|ψ0|².
pub fn write_ground_state(
    out: &mut OutputDir,
    ground: &GroundState,
    potential: &[f64],
    atom_number: f64,
) -> Result<()> {
    let grid = ground.psi0.grid().clone();
    out.write_csv(
        "ground_state.csv",
        &["x", "potential", "psi0", "density"],
        |w| {
            for (i, &x) in grid.positions().iter().enumerate() {
                let p = ground.psi0.values()[i].re;
                w.row(cells![x, potential[i], p, atom_number * p * p])?;
            }
            Ok(())
        },
    )?;
    Ok(())
}

/// `bdg.csv` (j, energy, overlap with the cavity mode) and `modes.csv`
/// (x, then u_j and v_j for every mode).
pub fn write_modes(out: &mut OutputDir, modes: &BdgModeSet, fields: &ModelFields) -> Result<()> {
    let cavity_mode = eval_cavity_mode(&fields.params.cavity, &fields.grid);
    out.write_csv("bdg.csv", &["j", "energy", "overlap"], |w| {
        for (j, m) in modes.modes.iter().enumerate() {
            let o = overlap_integral(j + 1, &cavity_mode, modes)?;
            w.row(cells![j + 1, m.energy, o])?;
        }
        Ok(())
    })?;
    let mut header = vec!["x".to_string()];
    for j in 1..=modes.len() {
        header.push(format!("u{j}"));
        header.push(format!("v{j}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let grid = modes.grid().clone();
    out.write_csv("modes.csv", &header, |w| {
        for (i, &x) in grid.positions().iter().enumerate() {
            let mut row = vec![Cell::F(x)];
            for m in &modes.modes {
                row.push(Cell::F(m.u.values()[i].re));
                row.push(Cell::F(m.v.values()[i].re));
            }
            w.row(&row)?;
        }
        Ok(())
    })?;
    Ok(())
}

/// Single-trajectory output: `trajectory.csv` plus density, site and mode
/// files when those were recorded.
pub fn write_trajectory(
    out: &mut OutputDir,
    traj: &TrajectoryOutput,
    fields: &ModelFields,
    site_labels: &[i64],
) -> Result<()> {
    out.write_csv(
        "trajectory.csv",
        &[
            "t",
            "rate",
            "norm",
            "alpha_re",
            "alpha_im",
            "q1",
            "q2",
            "delta_q",
            "imbalance",
        ],
        |w| {
            for r in &traj.records {
                w.row(cells![
                    r.t,
                    r.rate,
                    r.norm,
                    r.alpha.re,
                    r.alpha.im,
                    r.moments.q1,
                    r.moments.q2,
                    r.moments.delta_q,
                    r.imbalance.unwrap_or(f64::NAN),
                ])?;
            }
            Ok(())
        },
    )?;
    if traj.records.iter().any(|r| !r.density.is_empty()) {
        let xs = fields.grid.positions();
        out.write_csv("density.csv", &["t", "x", "density"], |w| {
            for r in &traj.records {
                for (x, d) in xs.iter().zip(&r.density) {
                    w.row(cells![r.t, *x, *d])?;
                }
            }
            Ok(())
        })?;
    }
    if !site_labels.is_empty() {
        out.write_csv("sites.csv", &["t", "site", "population", "phase"], |w| {
            for r in &traj.records {
                for (k, &label) in site_labels.iter().enumerate() {
                    w.row(cells![r.t, label, r.site_populations[k], r.site_phases[k]])?;
                }
            }
            Ok(())
        })?;
    }
    if traj.records.iter().any(|r| !r.bdg_populations.is_empty()) {
        out.write_csv("bdg_populations.csv", &["t", "mode", "population"], |w| {
            for r in &traj.records {
                for (j, p) in r.bdg_populations.iter().enumerate() {
                    w.row(cells![r.t, j + 1, *p])?;
                }
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// Ensemble statistics: `observables.csv` and, when recorded, density,
/// site population, cos-phase, mode population and g1 files.
pub fn write_ensemble(
    out: &mut OutputDir,
    res: &EnsembleResult,
    fields: &ModelFields,
    modes: Option<&BdgModeSet>,
    wigner: bool,
) -> Result<()> {
    let s: &EnsembleStats = &res.stats;
    let lattice = !s.site_labels.is_empty();
    let mut header = vec!["t", "n"];
    let mut names = vec![
        "rate", "norm", "alpha_sq", "alpha_re", "alpha_im", "q1", "abs_q1", "q2", "delta_q",
    ];
    if lattice {
        names.extend(["imbalance", "abs_imbalance"]);
    }
    let cols: Vec<String> = names
        .iter()
        .flat_map(|n| [format!("{n}_mean"), format!("{n}_se")])
        .collect();
    header.extend(cols.iter().map(String::as_str));
    out.write_csv("observables.csv", &header, |w| {
        for (i, &t) in s.times.iter().enumerate() {
            let mut row = vec![Cell::F(t), Cell::U(s.rate[i].n as usize)];
            let mut series = vec![
                &s.rate,
                &s.norm,
                &s.alpha_sq,
                &s.alpha_re,
                &s.alpha_im,
                &s.q1,
                &s.abs_q1,
                &s.q2,
                &s.delta_q,
            ];
            if lattice {
                series.extend([&s.imbalance, &s.abs_imbalance]);
            }
            for v in series {
                row.extend(mean_se(&v[i]));
            }
            w.row(&row)?;
        }
        Ok(())
    })?;
    if s.density.iter().any(|d| !d.is_empty()) {
        let xs = fields.grid.positions();
        out.write_csv("density.csv", &["t", "x", "density", "density_se"], |w| {
            for (i, &t) in s.times.iter().enumerate() {
                for (x, d) in xs.iter().zip(&s.density[i]) {
                    let [m, se] = mean_se(d);
                    w.row(&[Cell::F(t), Cell::F(*x), m, se])?;
                }
            }
            Ok(())
        })?;
    }
    if lattice {
        out.write_csv(
            "site_populations.csv",
            &["t", "site", "population_mean", "population_se"],
            |w| {
                for (i, &t) in s.times.iter().enumerate() {
                    for (k, &label) in s.site_labels.iter().enumerate() {
                        let [m, se] = mean_se(&s.site_populations[i][k]);
                        w.row(&[Cell::F(t), Cell::I(label), m, se])?;
                    }
                }
                Ok(())
            },
        )?;
    }
    if !s.cos_pairs.is_empty() {
        out.write_csv(
            "cos_phase.csv",
            &["t", "site_i", "site_j", "cos_mean", "cos_se"],
            |w| {
                for (i, &t) in s.times.iter().enumerate() {
                    for (k, &(a, b)) in s.cos_pairs.iter().enumerate() {
                        let [m, se] = mean_se(&s.cos_phase[i][k]);
                        w.row(&[Cell::F(t), Cell::I(a), Cell::I(b), m, se])?;
                    }
                }
                Ok(())
            },
        )?;
    }
    if s.bdg_populations.iter().any(|p| !p.is_empty()) {
        out.write_csv(
            "bdg_populations.csv",
            &["t", "mode", "population_mean", "population_se"],
            |w| {
                for (i, &t) in s.times.iter().enumerate() {
                    for (j, p) in s.bdg_populations[i].iter().enumerate() {
                        let [m, se] = mean_se(p);
                        w.row(&[Cell::F(t), Cell::U(j + 1), m, se])?;
                    }
                }
                Ok(())
            },
        )?;
    }
    let np = s.probe_points.len();
    if np >= 2 && s.included() > 0 {
        let grid_idx: Vec<usize> = s
            .probe_points
            .iter()
            .map(|&x| fields.grid.nearest_index(x))
            .collect();
        let offsets = match (wigner, modes) {
            (true, Some(m)) => Some((m, grid_idx.as_slice())),
            _ => None,
        };
        out.write_csv("g1.csv", &["t", "x", "x_prime", "g1"], |w| {
            for (i, &t) in s.times.iter().enumerate() {
                for a in 0..np {
                    for b in a + 1..np {
                        let g = s.g1(i, a, b, offsets).unwrap_or(f64::NAN);
                        w.row(cells![t, s.probe_points[a], s.probe_points[b], g])?;
                    }
                }
            }
            Ok(())
        })?;
    }
    Ok(())
}

pub fn write_threshold_scan(out: &mut OutputDir, scan: &[ThresholdPoint]) -> Result<()> {
    out.write_csv(
        "threshold_scan.csv",
        &[
            "pump_scale",
            "imbalance",
            "alpha_re",
            "alpha_im",
            "iterations",
        ],
        |w| {
            for p in scan {
                w.row(cells![
                    p.pump_scale,
                    p.imbalance,
                    p.alpha_re,
                    p.alpha_im,
                    p.iterations
                ])?;
            }
            Ok(())
        },
    )?;
    Ok(())
}

pub fn write_wavelength_scan(out: &mut OutputDir, scan: &[WavelengthPoint]) -> Result<()> {
    out.write_csv(
        "wavelength_scan.csv",
        &[
            "k_c",
            "overlap",
            "kohn_population_mean",
            "kohn_population_se",
            "abs_q1_mean",
            "abs_q1_se",
        ],
        |w| {
            for p in scan {
                w.row(cells![
                    p.k_c,
                    p.overlap,
                    p.kohn_population,
                    p.kohn_population_se,
                    p.abs_q1,
                    p.abs_q1_se
                ])?;
            }
            Ok(())
        },
    )?;
    Ok(())
}
