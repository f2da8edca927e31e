//! Quantities derived from field snapshots: lattice sites, relative phases,
//! coherence, position moments and Bogoliubov mode populations.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bdg::{project_amplitudes, BdgModeSet};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::model::{eval_trap_potential, TrapSpec};

/// Label of the site just left of x = 0; its right neighbour is one higher.
pub const CENTRAL_LEFT_LABEL: i64 = 12;

/// Population fraction below which a site phase is flagged unreliable.
pub const EMPTY_SITE_FRACTION: f64 = 1e-6;

/// Partition of the grid into lattice wells, bounded by local maxima of the
/// static potential.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteLayout {
    ranges: Vec<Range<usize>>,
    centers: Vec<f64>,
    labels: Vec<i64>,
    widths: Vec<f64>,
}

impl SiteLayout {
    pub fn new(trap: &TrapSpec, grid: &Arc<Grid>) -> Result<Self> {
        if !trap.has_lattice() {
            return Err(Error::InvalidParameter(
                "site decomposition needs a lattice (s > 0)".into(),
            ));
        }
        let v = eval_trap_potential(trap, grid);
        let n = v.len();
        let mut cuts = vec![0];
        for i in 1..n - 1 {
            if v[i] > v[i - 1] && v[i] >= v[i + 1] {
                cuts.push(i);
            }
        }
        cuts.push(n);
        if cuts.len() < 3 {
            return Err(Error::InvalidParameter(
                "potential has no lattice wells on this grid".into(),
            ));
        }
        let period = PI / trap.lattice_wavenumber;
        let x = grid.positions();
        let mut ranges = Vec::new();
        let mut centers = Vec::new();
        let mut labels = Vec::new();
        let mut widths = Vec::new();
        for w in cuts.windows(2) {
            let r = w[0]..w[1];
            if r.is_empty() {
                continue;
            }
            let imin = r
                .clone()
                .min_by(|&a, &b| v[a].total_cmp(&v[b]))
                .expect("non-empty range");
            centers.push(x[imin]);
            labels.push((x[imin] / period + CENTRAL_LEFT_LABEL as f64 + 0.5).round() as i64);
            widths.push(r.len() as f64 * grid.spacing());
            ranges.push(r);
        }
        Ok(Self {
            ranges,
            centers,
            labels,
            widths,
        })
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn index_of_label(&self, label: i64) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSiteDecomposition {
    pub site_labels: Vec<i64>,
    pub site_centers: Vec<f64>,
    /// ∫_well ψ dx divided by the well width.
    pub site_amplitudes: Vec<Complex64>,
    pub site_populations: Vec<f64>,
    pub site_phases: Vec<f64>,
    /// Sites whose population is below 1e-6 of the total.
    pub unreliable: Vec<bool>,
}

impl LatticeSiteDecomposition {
    fn index(&self, label: i64) -> Result<usize> {
        self.site_labels
            .iter()
            .position(|&l| l == label)
            .ok_or(Error::IndexOutOfRange {
                index: label.max(0) as usize,
                len: self.site_labels.len(),
            })
    }

    pub fn population(&self, label: i64) -> Result<f64> {
        Ok(self.site_populations[self.index(label)?])
    }

    pub fn is_reliable(&self, label: i64) -> Result<bool> {
        Ok(!self.unreliable[self.index(label)?])
    }
}

pub fn site_decompose(psi: &ComplexField, trap: &TrapSpec) -> Result<LatticeSiteDecomposition> {
    let layout = SiteLayout::new(trap, psi.grid())?;
    site_decompose_with(psi, &layout)
}

/// Decomposition against a precomputed layout (reused across time steps).
pub fn site_decompose_with(
    psi: &ComplexField,
    layout: &SiteLayout,
) -> Result<LatticeSiteDecomposition> {
    let n = psi.grid().n_points();
    if layout.ranges.last().map(|r| r.end) != Some(n) {
        return Err(Error::GridMismatch);
    }
    let dx = psi.grid().spacing();
    let vals = psi.values();
    let mut amps = Vec::with_capacity(layout.len());
    let mut pops = Vec::with_capacity(layout.len());
    for (r, w) in layout.ranges.iter().zip(&layout.widths) {
        let s: Complex64 = vals[r.clone()].iter().sum();
        amps.push(s * dx / w);
        pops.push(vals[r.clone()].iter().map(|v| v.norm_sqr()).sum::<f64>() * dx);
    }
    let total: f64 = pops.iter().sum();
    let unreliable = pops
        .iter()
        .map(|&p| p < EMPTY_SITE_FRACTION * total)
        .collect();
    Ok(LatticeSiteDecomposition {
        site_labels: layout.labels.clone(),
        site_centers: layout.centers.clone(),
        site_phases: amps.iter().map(|a: &Complex64| a.arg()).collect(),
        site_amplitudes: amps,
        site_populations: pops,
        unreliable,
    })
}

/// (N_odd − N_even)/(N_odd + N_even) by site label parity.
pub fn odd_even_imbalance(decomp: &LatticeSiteDecomposition) -> Result<f64> {
    if decomp.site_labels.len() < 2 {
        return Err(Error::InvalidParameter(
            "imbalance needs at least two sites".into(),
        ));
    }
    let (mut odd, mut even) = (0.0, 0.0);
    for (l, p) in decomp.site_labels.iter().zip(&decomp.site_populations) {
        if l.rem_euclid(2) == 1 {
            odd += p;
        } else {
            even += p;
        }
    }
    let total = odd + even;
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok((odd - even) / total)
}

/// arg(a_i a_j*) in (−π, π] for sites labelled `i` and `j`.
pub fn relative_phase(decomp: &LatticeSiteDecomposition, i: i64, j: i64) -> Result<f64> {
    let a = decomp.site_amplitudes[decomp.index(i)?];
    let b = decomp.site_amplitudes[decomp.index(j)?];
    if i == j {
        return Ok(0.0);
    }
    Ok(wrap_phase((a * b.conj()).arg()))
}

/// Wraps an angle to (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub count: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_err: f64::NAN,
                count: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_err,
            count: n,
        }
    }

    /// |mean − target| ≤ k standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_err
    }
}

/// Ensemble mean of cos(Φ_i − Φ_j) with its standard error.
pub fn ensemble_cos_phase(set: &[LatticeSiteDecomposition], i: i64, j: i64) -> Result<Estimate> {
    if set.len() < 2 {
        return Err(Error::InvalidParameter(
            "ensemble average needs at least two trajectories".into(),
        ));
    }
    let c = set
        .iter()
        .map(|d| relative_phase(d, i, j).map(f64::cos))
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_samples(&c))
}

/// Symmetric-ordering offset ½Σ_j[u_j*(x)u_j(x') − v_j(x)v_j*(x')] of the
/// sampled Bogoliubov modes.
pub fn wigner_g1_offset(modes: &BdgModeSet, ix: usize, jx: usize) -> Complex64 {
    modes
        .modes
        .iter()
        .map(|m| {
            let u = m.u.values();
            let v = m.v.values();
            u[ix].conj() * u[jx] - v[ix] * v[jx].conj()
        })
        .sum::<Complex64>()
        * 0.5
}

/// |⟨ψ*(x)ψ(x')⟩| / √(⟨|ψ(x)|²⟩⟨|ψ(x')|²⟩) over an ensemble of fields at grid
/// indices `ix`, `jx`. With `wigner`, the symmetric-ordering offsets of the
/// sampled modes are removed first.
pub fn g1_coherence(
    fields: &[ComplexField],
    ix: usize,
    jx: usize,
    wigner: Option<&BdgModeSet>,
) -> Result<f64> {
    let first = fields.first().ok_or(Error::InvalidParameter(
        "coherence needs at least one field".into(),
    ))?;
    let n = first.grid().n_points();
    if ix >= n || jx >= n {
        return Err(Error::IndexOutOfRange {
            index: ix.max(jx),
            len: n,
        });
    }
    let mut cross = Complex64::new(0.0, 0.0);
    let (mut di, mut dj) = (0.0, 0.0);
    for f in fields {
        if !f.same_grid(first) {
            return Err(Error::GridMismatch);
        }
        let a = f.values()[ix];
        let b = f.values()[jx];
        cross += a.conj() * b;
        di += a.norm_sqr();
        dj += b.norm_sqr();
    }
    let m = fields.len() as f64;
    cross /= m;
    di /= m;
    dj /= m;
    if let Some(modes) = wigner {
        cross -= wigner_g1_offset(modes, ix, jx);
        di -= wigner_g1_offset(modes, ix, ix).re;
        dj -= wigner_g1_offset(modes, jx, jx).re;
    }
    if !(di > 0.0 && dj > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(cross.norm() / (di * dj).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub q1: f64,
    pub q2: f64,
    pub delta_q: f64,
}

/// Position moments of |ψ|², normalized by ∫|ψ|².
pub fn moments(psi: &ComplexField) -> Result<MomentSet> {
    let norm = psi.norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let dx = psi.grid().spacing();
    let (mut s1, mut s2) = (0.0, 0.0);
    for (v, x) in psi.values().iter().zip(psi.grid().positions()) {
        let r = v.norm_sqr();
        s1 += x * r;
        s2 += x * x * r;
    }
    let q1 = s1 * dx / norm;
    let q2 = s2 * dx / norm;
    Ok(MomentSet {
        q1,
        q2,
        delta_q: (q2 - q1 * q1).max(0.0).sqrt(),
    })
}

/// |α_j|² of every mode. The condensate phase is removed before projecting so
/// that a globally rotated condensate does not register as excitation.
/// With `wigner_sampled`, ½ is subtracted per mode; results are clamped at 0.
pub fn bdg_populations(
    psi: &ComplexField,
    modes: &BdgModeSet,
    t: f64,
    wigner_sampled: bool,
) -> Result<Vec<f64>> {
    let amps = project_amplitudes(psi, modes, t)?;
    let phase = if amps.alpha0.norm() > 0.0 {
        amps.alpha0.conj() / amps.alpha0.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let locked = if phase == Complex64::new(1.0, 0.0) {
        amps
    } else {
        project_amplitudes(&psi.scaled(phase), modes, t)?
    };
    let offset = if wigner_sampled { 0.5 } else { 0.0 };
    Ok(locked
        .alphas
        .iter()
        .map(|a| (a.norm_sqr() - offset).max(0.0))
        .collect())
}
