//! Bogoliubov-de Gennes modes about a real ground state, mode projections,
//! cavity overlap integrals and Bogoliubov initial-state sampling.
//!
//! With real ψ0 the eigenproblem reduces to (L'+B)(L'−B) f₊ = ε² f₊ for
//! f± = u ± v, where L' = H0 − μ + 2NUψ0² and B = NUψ0². The problem is posed
//! on the complement of ψ0 (a Householder basis), which removes the
//! condensate zero mode exactly and leaves u and v orthogonal to ψ0.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::groundstate::GroundState;
use crate::model::{eval_trap_potential, ModelParams};

/// Modes with |ε| below this are treated as the condensate mode.
pub const ZERO_MODE_ENERGY: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BdgMode {
    pub energy: f64,
    pub u: ComplexField,
    pub v: ComplexField,
}

#[derive(Debug, Clone)]
pub struct BdgModeSet {
    pub ground: GroundState,
    /// Ascending ε > 0; `modes[0]` is mode 1.
    pub modes: Vec<BdgMode>,
    /// Solutions dropped for negative ε² or vanishing energy.
    pub excluded: usize,
}

impl BdgModeSet {
    pub fn grid(&self) -> &Arc<Grid> {
        self.ground.psi0.grid()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Mode `j` counted from 1.
    pub fn mode(&self, j: usize) -> Result<&BdgMode> {
        if j == 0 || j > self.modes.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.modes.len(),
            });
        }
        Ok(&self.modes[j - 1])
    }

    pub fn energies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.energy).collect()
    }
}

/// Dense matrix of −½∂² on the periodic grid (a real symmetric circulant).
fn kinetic_matrix(grid: &Grid) -> DMatrix<f64> {
    let n = grid.n_points();
    let mut c: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|k| Complex64::new(0.5 * k * k, 0.0))
        .collect();
    let mut scratch = grid.fft_scratch();
    grid.inverse_in_place(&mut c, &mut scratch);
    DMatrix::from_fn(n, n, |i, j| c[(i + n - j) % n].re)
}

/// Householder reflector H = I − 2wwᵀ/(wᵀw) with H·q ∝ e₀ for unit `q`.
struct Reflector {
    w: DVector<f64>,
    ww: f64,
}

impl Reflector {
    fn new(q: &DVector<f64>) -> Self {
        let mut w = q.clone();
        let s = if q[0] >= 0.0 { 1.0 } else { -1.0 };
        w[0] += s * q.norm();
        let ww = w.dot(&w);
        Self { w, ww }
    }

    /// H A H for symmetric A.
    fn conjugate(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let aw = a * &self.w;
        let waw = self.w.dot(&aw);
        let c = 2.0 / self.ww;
        let mut out = a.clone();
        out.ger(-c, &self.w, &aw, 1.0);
        out.ger(-c, &aw, &self.w, 1.0);
        out.ger(c * c * waw, &self.w, &self.w, 1.0);
        out
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let c = 2.0 * self.w.dot(x) / self.ww;
        x - &self.w * c
    }
}

/// Lowest `n_modes` positive-energy BdG modes about `ground` for the trap
/// and nonlinearity in `params`.
pub fn solve_bdg(ground: &GroundState, params: &ModelParams, n_modes: usize) -> Result<BdgModeSet> {
    let grid = ground.psi0.grid().clone();
    let potential = eval_trap_potential(&params.trap, &grid);
    solve_bdg_in(ground, &potential, params.nu, n_modes)
}

/// As [`solve_bdg`] for an arbitrary static potential.
pub fn solve_bdg_in(
    ground: &GroundState,
    potential: &[f64],
    nu: f64,
    n_modes: usize,
) -> Result<BdgModeSet> {
    let grid = ground.psi0.grid().clone();
    let n = grid.n_points();
    if n_modes == 0 || n_modes >= n - 1 {
        return Err(Error::InvalidParameter(format!(
            "n_modes must lie in 1..{}, got {n_modes}",
            n - 1
        )));
    }
    if potential.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: potential.len(),
        });
    }
    let dx = grid.spacing();
    let psi0: Vec<f64> = ground.psi0.values().iter().map(|v| v.re).collect();
    let mu = ground.mu;

    let kin = kinetic_matrix(&grid);
    let mut plus = kin.clone(); // L' + B
    let mut minus = kin; // L' − B
    for i in 0..n {
        let d = nu * psi0[i] * psi0[i];
        plus[(i, i)] += potential[i] - mu + 3.0 * d;
        minus[(i, i)] += potential[i] - mu + d;
    }

    let q = DVector::from_iterator(n, psi0.iter().map(|p| p * dx.sqrt()));
    let refl = Reflector::new(&q);
    let plus_c = refl
        .conjugate(&plus)
        .view((1, 1), (n - 1, n - 1))
        .into_owned();
    let minus_c = refl
        .conjugate(&minus)
        .view((1, 1), (n - 1, n - 1))
        .into_owned();

    let chol = plus_c
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Eigensolver("L'+B is not positive definite".into()))?;
    let c = chol.l();
    let reduced = c.transpose() * &minus_c * &c;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(reduced, 1e-14, 0)
        .ok_or_else(|| Error::Eigensolver("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut modes = Vec::with_capacity(n_modes);
    let mut excluded = 0;
    for &idx in &order {
        if modes.len() == n_modes {
            break;
        }
        let e2 = eig.eigenvalues[idx];
        if e2 <= 0.0 || e2.sqrt() < ZERO_MODE_ENERGY {
            excluded += 1;
            continue;
        }
        let eps = e2.sqrt();
        let g = eig.eigenvectors.column(idx).into_owned();
        let fp_c = &c * g;
        let fm_c = &minus_c * &fp_c / eps;
        let embed = |v: &DVector<f64>| {
            let mut full = DVector::zeros(n);
            full.rows_mut(1, n - 1).copy_from(v);
            refl.apply(&full)
        };
        let fp = embed(&fp_c);
        let fm = embed(&fm_c);
        let mut u: Vec<f64> = (0..n).map(|i| 0.5 * (fp[i] + fm[i])).collect();
        let mut v: Vec<f64> = (0..n).map(|i| 0.5 * (fp[i] - fm[i])).collect();
        let norm: f64 = u.iter().zip(&v).map(|(a, b)| a * a - b * b).sum::<f64>() * dx;
        if !(norm > 0.0) {
            excluded += 1;
            continue;
        }
        let mut scale = 1.0 / norm.sqrt();
        // sign convention: leftmost large entry of u is positive
        let umax = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = u.iter().find(|x| x.abs() > 0.5 * umax) {
            if *first < 0.0 {
                scale = -scale;
            }
        }
        u.iter_mut().for_each(|x| *x *= scale);
        v.iter_mut().for_each(|x| *x *= scale);
        modes.push(BdgMode {
            energy: eps,
            u: real_field(&grid, &u)?,
            v: real_field(&grid, &v)?,
        });
    }
    if modes.len() < n_modes {
        return Err(Error::Eigensolver(format!(
            "only {} positive-energy modes found, {} requested",
            modes.len(),
            n_modes
        )));
    }
    Ok(BdgModeSet {
        ground: ground.clone(),
        modes,
        excluded,
    })
}

fn real_field(grid: &Arc<Grid>, vals: &[f64]) -> Result<ComplexField> {
    ComplexField::from_real(grid.clone(), vals)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeAmplitudes {
    pub alpha0: Complex64,
    /// α_j for j = 1..; `alphas[0]` is mode 1.
    pub alphas: Vec<Complex64>,
    pub time: f64,
}

/// α0 = ∫ψ0*ψ e^{iμt}, α_j = ∫[u_j*ψ e^{iμt} + v_j*ψ* e^{−iμt}].
pub fn project_amplitudes(
    psi: &ComplexField,
    modes: &BdgModeSet,
    t: f64,
) -> Result<ModeAmplitudes> {
    if psi.grid() != modes.grid() {
        return Err(Error::GridMismatch);
    }
    let dx = psi.grid().spacing();
    let rot = Complex64::from_polar(1.0, modes.ground.mu * t);
    let vals = psi.values();
    let alpha0 = modes
        .ground
        .psi0
        .values()
        .iter()
        .zip(vals)
        .map(|(p0, p)| p0.conj() * p)
        .sum::<Complex64>()
        * dx
        * rot;
    let alphas = modes
        .modes
        .iter()
        .map(|m| {
            let mut a = Complex64::new(0.0, 0.0);
            let mut b = Complex64::new(0.0, 0.0);
            for ((u, v), p) in m.u.values().iter().zip(m.v.values()).zip(vals) {
                a += u.conj() * p;
                b += v.conj() * p.conj();
            }
            (a * rot + b * rot.conj()) * dx
        })
        .collect();
    Ok(ModeAmplitudes {
        alpha0,
        alphas,
        time: t,
    })
}

/// √N ψ0 + Σ_j (α_j u_j − α_j* v_j*).
pub fn reconstruct(
    modes: &BdgModeSet,
    alpha0: Complex64,
    alphas: &[Complex64],
) -> Result<ComplexField> {
    if alphas.len() > modes.len() {
        return Err(Error::IndexOutOfRange {
            index: alphas.len(),
            len: modes.len(),
        });
    }
    let mut vals: Vec<Complex64> = modes
        .ground
        .psi0
        .values()
        .iter()
        .map(|p| p * alpha0)
        .collect();
    for (a, m) in alphas.iter().zip(&modes.modes) {
        for ((out, u), v) in vals.iter_mut().zip(m.u.values()).zip(m.v.values()) {
            *out += a * u - a.conj() * v.conj();
        }
    }
    ComplexField::new(modes.grid().clone(), vals)
}

/// O_j = ∫ g̃ ψ0*(u_j − v_j) dx for mode `j` (counted from 1).
pub fn overlap_integral(j: usize, cavity_mode: &[f64], modes: &BdgModeSet) -> Result<f64> {
    let m = modes.mode(j)?;
    let grid = modes.grid();
    if cavity_mode.len() != grid.n_points() {
        return Err(Error::LengthMismatch {
            expected: grid.n_points(),
            actual: cavity_mode.len(),
        });
    }
    let s: Complex64 = cavity_mode
        .iter()
        .zip(modes.ground.psi0.values())
        .zip(m.u.values().iter().zip(m.v.values()))
        .map(|((g, p), (u, v))| p.conj() * (u - v) * *g)
        .sum();
    Ok(s.re * grid.spacing())
}

/// Bose-Einstein occupation 1/(e^{ε/T} − 1), zero at T = 0.
pub fn bose_occupation(energy: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        0.0
    } else {
        1.0 / (energy / temperature).exp_m1()
    }
}

/// Complex Gaussian with E|α|² = `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Bogoliubov sample ψ = √N ψ0 + Σ_j (α_j u_j − α_j* v_j*) with
/// E|α_j|² = n_BE(ε_j, T) + ½. With `noise` off, returns √N ψ0.
pub fn sample_initial_state<R: Rng + ?Sized>(
    modes: &BdgModeSet,
    temperature: f64,
    atom_number: f64,
    rng: &mut R,
    noise: bool,
) -> Result<ComplexField> {
    if !(temperature >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "temperature must be non-negative, got {temperature}"
        )));
    }
    if !(atom_number > 0.0) {
        return Err(Error::InvalidParameter(
            "atom number must be positive".into(),
        ));
    }
    let alpha0 = Complex64::new(atom_number.sqrt(), 0.0);
    if !noise {
        return reconstruct(modes, alpha0, &[]);
    }
    let alphas: Vec<Complex64> = modes
        .modes
        .iter()
        .map(|m| complex_gaussian(rng, bose_occupation(m.energy, temperature) + 0.5))
        .collect();
    reconstruct(modes, alpha0, &alphas)
}
