//! Many independent trajectories: seeding, parallel execution, ordered
//! streaming reduction and checkpoint/resume.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bdg::{sample_initial_state, BdgModeSet};
use crate::error::{Error, Result};
use crate::model::ModelFields;
use crate::observables::{wigner_g1_offset, wrap_phase};
use crate::sde::{
    run_trajectory_with_rng, Observers, Record, RecorderConfig, StepScheme, TrajectoryOutput,
    TrajectoryState,
};

/// Streaming mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    pub fn std_err(&self) -> f64 {
        if self.n > 0 {
            (self.variance() / self.n as f64).sqrt()
        } else {
            f64::NAN
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub n_trajectories: usize,
    pub base_seed: u64,
    pub t_final: f64,
    pub recorder: RecorderConfig,
    /// Site label pairs for ⟨cos(Φ_i − Φ_j)⟩.
    pub cos_pairs: Vec<(i64, i64)>,
    pub keep_trajectories: bool,
    /// Trajectories simulated concurrently before each ordered reduction.
    pub batch_size: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_trajectories: 1,
            base_seed: 0,
            t_final: 1.0,
            recorder: RecorderConfig::default(),
            cos_pairs: Vec::new(),
            keep_trajectories: false,
            batch_size: 8,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories == 0 {
            return Err(Error::InvalidParameter(
                "an ensemble needs at least one trajectory".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "batch size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Seed of trajectory `k`.
pub fn trajectory_seed(base_seed: u64, k: usize) -> u64 {
    base_seed.wrapping_add(k as u64)
}

#[derive(Debug, Clone)]
pub enum InitialCondition {
    /// Every trajectory starts from the same state.
    Fixed(TrajectoryState),
    /// Bogoliubov sample drawn from the trajectory's own generator.
    Bogoliubov {
        modes: Arc<BdgModeSet>,
        temperature: f64,
        atom_number: f64,
        noise: bool,
    },
}

impl InitialCondition {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<TrajectoryState> {
        match self {
            InitialCondition::Fixed(s) => Ok(s.clone()),
            InitialCondition::Bogoliubov {
                modes,
                temperature,
                atom_number,
                noise,
            } => Ok(TrajectoryState::new(sample_initial_state(
                modes,
                *temperature,
                *atom_number,
                rng,
                *noise,
            )?)),
        }
    }

    pub fn wigner_sampled(&self) -> bool {
        matches!(self, InitialCondition::Bogoliubov { noise: true, .. })
    }

    fn fingerprint(&self) -> String {
        match self {
            InitialCondition::Fixed(s) => {
                let mut h = Sha256::new();
                for v in s.psi.values() {
                    h.update(v.re.to_le_bytes());
                    h.update(v.im.to_le_bytes());
                }
                h.update(s.alpha.re.to_le_bytes());
                h.update(s.alpha.im.to_le_bytes());
                h.update(s.t.to_le_bytes());
                format!("fixed:{}", hex::encode(h.finalize()))
            }
            InitialCondition::Bogoliubov {
                modes,
                temperature,
                atom_number,
                noise,
            } => format!(
                "bogoliubov:T={temperature:e}:N={atom_number:e}:noise={noise}:modes={}:mu={:e}",
                modes.len(),
                modes.ground.mu
            ),
        }
    }
}

/// Everything needed to run an ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleJob {
    pub fields: Arc<ModelFields>,
    pub scheme: StepScheme,
    pub initial: InitialCondition,
    pub observers: Observers,
    pub config: EnsembleConfig,
}

impl EnsembleJob {
    /// Content hash of every input that influences the statistics.
    pub fn params_hash(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Key<'a> {
            params: &'a crate::model::ModelParams,
            grid: crate::grid::GridSpec,
            detuning: &'a [f64],
            scheme: &'a StepScheme,
            n_trajectories: usize,
            base_seed: u64,
            t_final: f64,
            recorder: &'a RecorderConfig,
            cos_pairs: &'a [(i64, i64)],
            initial: String,
            sites: bool,
            modes: usize,
        }
        let c = &self.config;
        let key = Key {
            params: &self.fields.params,
            grid: self.fields.grid.spec(),
            detuning: &self.fields.detuning_scale,
            scheme: &self.scheme,
            n_trajectories: c.n_trajectories,
            base_seed: c.base_seed,
            t_final: c.t_final,
            recorder: &c.recorder,
            cos_pairs: &c.cos_pairs,
            initial: self.initial.fingerprint(),
            sites: self.observers.sites.is_some(),
            modes: self.observers.modes.as_ref().map_or(0, |m| m.len()),
        };
        let bytes = serde_json::to_vec(&key).map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(bytes)))
    }
}

/// Per-time-index accumulators over included trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    /// Trajectories processed so far, including failed ones.
    pub completed: usize,
    /// Indices of trajectories excluded because they failed.
    pub failed: Vec<usize>,
    pub rate: Vec<Welford>,
    pub norm: Vec<Welford>,
    pub alpha_sq: Vec<Welford>,
    pub alpha_re: Vec<Welford>,
    pub alpha_im: Vec<Welford>,
    pub q1: Vec<Welford>,
    pub abs_q1: Vec<Welford>,
    pub q2: Vec<Welford>,
    pub delta_q: Vec<Welford>,
    pub imbalance: Vec<Welford>,
    pub abs_imbalance: Vec<Welford>,
    pub site_labels: Vec<i64>,
    /// [time][site]
    pub site_populations: Vec<Vec<Welford>>,
    pub cos_pairs: Vec<(i64, i64)>,
    /// [time][pair]
    pub cos_phase: Vec<Vec<Welford>>,
    /// [time][mode]
    pub bdg_populations: Vec<Vec<Welford>>,
    /// [time][grid point]
    pub density: Vec<Vec<Welford>>,
    pub probe_points: Vec<f64>,
    /// [time][pair index over a ≤ b] sums of ψ*(x_a)ψ(x_b).
    pub probe_cross: Vec<Vec<Complex64>>,
}

impl EnsembleStats {
    fn new(labels: Vec<i64>, cos_pairs: Vec<(i64, i64)>, probe_points: Vec<f64>) -> Self {
        Self {
            times: Vec::new(),
            completed: 0,
            failed: Vec::new(),
            rate: Vec::new(),
            norm: Vec::new(),
            alpha_sq: Vec::new(),
            alpha_re: Vec::new(),
            alpha_im: Vec::new(),
            q1: Vec::new(),
            abs_q1: Vec::new(),
            q2: Vec::new(),
            delta_q: Vec::new(),
            imbalance: Vec::new(),
            abs_imbalance: Vec::new(),
            site_labels: labels,
            site_populations: Vec::new(),
            cos_pairs,
            cos_phase: Vec::new(),
            bdg_populations: Vec::new(),
            density: Vec::new(),
            probe_points,
            probe_cross: Vec::new(),
        }
    }

    /// Trajectories contributing to the accumulators.
    pub fn included(&self) -> usize {
        self.completed - self.failed.len()
    }

    fn grow(&mut self, rec: &Record, pair_idx: &[(usize, usize)]) {
        let w = Welford::default();
        self.times.push(rec.t);
        for v in [
            &mut self.rate,
            &mut self.norm,
            &mut self.alpha_sq,
            &mut self.alpha_re,
            &mut self.alpha_im,
            &mut self.q1,
            &mut self.abs_q1,
            &mut self.q2,
            &mut self.delta_q,
            &mut self.imbalance,
            &mut self.abs_imbalance,
        ] {
            v.push(w);
        }
        self.site_populations
            .push(vec![w; rec.site_populations.len()]);
        self.cos_phase.push(vec![w; pair_idx.len()]);
        self.bdg_populations
            .push(vec![w; rec.bdg_populations.len()]);
        self.density.push(vec![w; rec.density.len()]);
        let np = rec.probes.len();
        self.probe_cross
            .push(vec![Complex64::new(0.0, 0.0); np * (np + 1) / 2]);
    }

    fn absorb(&mut self, out: &TrajectoryOutput, pair_idx: &[(usize, usize)]) -> Result<()> {
        if self.times.is_empty() {
            // the first included trajectory fixes the time axis
            for r in &out.records {
                self.grow(r, pair_idx);
            }
        }
        if out.records.len() != self.times.len() {
            return Err(Error::LengthMismatch {
                expected: self.times.len(),
                actual: out.records.len(),
            });
        }
        for (i, r) in out.records.iter().enumerate() {
            self.rate[i].push(r.rate);
            self.norm[i].push(r.norm);
            self.alpha_sq[i].push(r.alpha.norm_sqr());
            self.alpha_re[i].push(r.alpha.re);
            self.alpha_im[i].push(r.alpha.im);
            self.q1[i].push(r.moments.q1);
            self.abs_q1[i].push(r.moments.q1.abs());
            self.q2[i].push(r.moments.q2);
            self.delta_q[i].push(r.moments.delta_q);
            if let Some(imb) = r.imbalance {
                self.imbalance[i].push(imb);
                self.abs_imbalance[i].push(imb.abs());
            }
            for (w, p) in self.site_populations[i].iter_mut().zip(&r.site_populations) {
                w.push(*p);
            }
            for (w, &(a, b)) in self.cos_phase[i].iter_mut().zip(pair_idx) {
                w.push(wrap_phase(r.site_phases[a] - r.site_phases[b]).cos());
            }
            for (w, p) in self.bdg_populations[i].iter_mut().zip(&r.bdg_populations) {
                w.push(*p);
            }
            for (w, p) in self.density[i].iter_mut().zip(&r.density) {
                w.push(*p);
            }
            let np = r.probes.len();
            let mut k = 0;
            for a in 0..np {
                for b in a..np {
                    self.probe_cross[i][k] += r.probes[a].conj() * r.probes[b];
                    k += 1;
                }
            }
        }
        Ok(())
    }

    /// Ensemble |g1| between probe points `a` and `b` at time index `ti`.
    /// `wigner` removes the symmetric-ordering offsets of sampled modes.
    pub fn g1(
        &self,
        ti: usize,
        a: usize,
        b: usize,
        wigner: Option<(&BdgModeSet, &[usize])>,
    ) -> Result<f64> {
        let np = self.probe_points.len();
        if a >= np || b >= np || ti >= self.probe_cross.len() {
            return Err(Error::IndexOutOfRange {
                index: a.max(b),
                len: np,
            });
        }
        let idx = |i: usize, j: usize| {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            i * np - i * (i + 1) / 2 + j
        };
        let n = self.included() as f64;
        let mut cross = self.probe_cross[ti][idx(a, b)] / n;
        if a > b {
            cross = cross.conj();
        }
        let mut da = self.probe_cross[ti][idx(a, a)].re / n;
        let mut db = self.probe_cross[ti][idx(b, b)].re / n;
        if let Some((modes, grid_idx)) = wigner {
            let (ia, ib) = (grid_idx[a], grid_idx[b]);
            cross -= wigner_g1_offset(modes, ia, ib);
            da -= wigner_g1_offset(modes, ia, ia).re;
            db -= wigner_g1_offset(modes, ib, ib).re;
        }
        if !(da > 0.0 && db > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(cross.norm() / (da * db).sqrt())
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub stats: EnsembleStats,
    pub params_hash: String,
    /// Present when `keep_trajectories` is set (trajectories run in this call only).
    pub trajectories: Vec<TrajectoryOutput>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    format: u32,
    params_hash: String,
    n_trajectories: usize,
    stats: EnsembleStats,
    content_hash: String,
}

fn checkpoint_hash(params_hash: &str, n: usize, stats: &EnsembleStats) -> Result<String> {
    let bytes = serde_json::to_vec(&(params_hash, n, stats))
        .map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn write_checkpoint(path: &Path, params_hash: &str, n: usize, stats: &EnsembleStats) -> Result<()> {
    let ck = Checkpoint {
        format: 1,
        params_hash: params_hash.to_string(),
        n_trajectories: n,
        stats: stats.clone(),
        content_hash: checkpoint_hash(params_hash, n, stats)?,
    };
    let text = serde_json::to_string(&ck).map_err(|e| Error::Serialization(e.to_string()))?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| Error::Checkpoint(format!("unreadable checkpoint: {e}")))?;
    let want = checkpoint_hash(&ck.params_hash, ck.n_trajectories, &ck.stats)?;
    if want != ck.content_hash {
        return Err(Error::Checkpoint(
            "content hash does not match (corrupted file)".into(),
        ));
    }
    Ok(ck)
}

/// Options controlling persistence of a run.
#[derive(Debug, Clone, Default)]
pub struct RunControl {
    /// Checkpoint file rewritten after every reduced trajectory.
    pub checkpoint: Option<PathBuf>,
    /// Stop after this many trajectories have been processed in total.
    pub stop_after: Option<usize>,
}

pub fn run_ensemble(job: &EnsembleJob) -> Result<EnsembleResult> {
    run_ensemble_with(job, &RunControl::default())
}

/// Runs trajectories 0..n, reducing in index order.
pub fn run_ensemble_with(job: &EnsembleJob, control: &RunControl) -> Result<EnsembleResult> {
    job.config.validate()?;
    let hash = job.params_hash()?;
    let stats = fresh_stats(job)?;
    drive(job, control, hash, stats)
}

/// Continues a checkpointed run. A complete checkpoint is returned as is.
pub fn resume_ensemble(
    job: &EnsembleJob,
    checkpoint: &Path,
    control: &RunControl,
) -> Result<EnsembleResult> {
    job.config.validate()?;
    let ck = read_checkpoint(checkpoint)?;
    let hash = job.params_hash()?;
    if ck.params_hash != hash {
        return Err(Error::Checkpoint(format!(
            "checkpoint was written for parameters {} but this run has {}",
            ck.params_hash, hash
        )));
    }
    let control = RunControl {
        checkpoint: control
            .checkpoint
            .clone()
            .or_else(|| Some(checkpoint.to_path_buf())),
        stop_after: control.stop_after,
    };
    drive(job, &control, hash, ck.stats)
}

fn fresh_stats(job: &EnsembleJob) -> Result<EnsembleStats> {
    let labels = job
        .observers
        .sites
        .as_ref()
        .map(|l| l.labels().to_vec())
        .unwrap_or_default();
    Ok(EnsembleStats::new(
        labels,
        job.config.cos_pairs.clone(),
        job.config.recorder.probe_points.clone(),
    ))
}

fn pair_indices(job: &EnsembleJob) -> Result<Vec<(usize, usize)>> {
    if job.config.cos_pairs.is_empty() {
        return Ok(Vec::new());
    }
    let layout = job.observers.sites.as_ref().ok_or_else(|| {
        Error::InvalidParameter("phase pairs requested without a lattice site layout".into())
    })?;
    job.config
        .cos_pairs
        .iter()
        .map(|&(a, b)| {
            let ia = layout.index_of_label(a);
            let ib = layout.index_of_label(b);
            match (ia, ib) {
                (Some(x), Some(y)) => Ok((x, y)),
                _ => Err(Error::InvalidParameter(format!(
                    "site pair ({a}, {b}) is not on the grid"
                ))),
            }
        })
        .collect()
}

fn run_one(job: &EnsembleJob, k: usize) -> Result<TrajectoryOutput> {
    let seed = trajectory_seed(job.config.base_seed, k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = job.initial.sample(&mut rng)?;
    run_trajectory_with_rng(
        &job.fields,
        &job.scheme,
        &init,
        job.config.t_final,
        &job.config.recorder,
        &job.observers,
        seed,
        &mut rng,
    )
}

fn drive(
    job: &EnsembleJob,
    control: &RunControl,
    hash: String,
    mut stats: EnsembleStats,
) -> Result<EnsembleResult> {
    let pairs = pair_indices(job)?;
    let n = job.config.n_trajectories;
    let end = control.stop_after.map_or(n, |s| s.min(n));
    let mut kept = Vec::new();
    let mut k = stats.completed;
    while k < end {
        let hi = (k + job.config.batch_size).min(end);
        let outs: Vec<Result<TrajectoryOutput>> =
            (k..hi).into_par_iter().map(|i| run_one(job, i)).collect();
        for (i, out) in (k..hi).zip(outs) {
            let out = out?;
            if out.failure.is_some() {
                stats.failed.push(i);
            } else {
                stats.absorb(&out, &pairs)?;
            }
            stats.completed = i + 1;
            if let Some(path) = &control.checkpoint {
                write_checkpoint(path, &hash, n, &stats)?;
            }
            if job.config.keep_trajectories {
                kept.push(out);
            }
        }
        k = hi;
    }
    if let Some(path) = &control.checkpoint {
        write_checkpoint(path, &hash, n, &stats)?;
    }
    Ok(EnsembleResult {
        stats,
        params_hash: hash,
        trajectories: kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, -2.5, 7.25, 0.5];
        let mut w = Welford::default();
        xs.iter().for_each(|&x| w.push(x));
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((w.mean - mean).abs() < 1e-14);
        assert!((w.variance() - var).abs() < 1e-12);
        let mut one = Welford::default();
        one.push(0.3);
        assert_eq!(one.mean, 0.3);
        assert_eq!(one.variance(), 0.0);
    }

    #[test]
    fn seeds_are_offsets() {
        assert_eq!(trajectory_seed(10, 5), 15);
        assert_eq!(trajectory_seed(u64::MAX, 1), 0);
    }

    #[test]
    fn zero_trajectories_rejected() {
        let c = EnsembleConfig {
            n_trajectories: 0,
            ..EnsembleConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
