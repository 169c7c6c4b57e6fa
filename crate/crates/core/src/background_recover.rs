//! Recovery of a shared background from sampled values of the decoherence
//! form.
//!
//! `B[i][j] = θ(e_i, f_j)` over an orthonormal family `e` of one branch space
//! and `f` of a reference ("vacuum") space. Column `j` of `B` holds the
//! coordinates of `f_j` in the `e` family, so `B` is the identification
//! `H_η → H_g`. Its polar factor `U` (`B = U·P`) is the closest unitary and
//! carries a reference projector `Q` to `U·Q·U†` on `H_g`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{inner_product, Grid, WaveFunction};

/// Forms with a larger condition number count as degenerate.
pub const MAX_CONDITION_NUMBER: f64 = 1e8;
/// Orthonormality tolerance of sampled bases.
pub const BASIS_TOLERANCE: f64 = 1e-10;
/// Tolerance of projector-valued-measure checks.
pub const MEASURE_TOLERANCE: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct FormSample {
    pub basis_g: Vec<WaveFunction>,
    pub basis_eta: Vec<WaveFunction>,
    pub matrix: CMatrix,
    pub condition_number: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundMap {
    pub unitary: CMatrix,
    pub condition_number: f64,
    pub recovered_projectors: Vec<CMatrix>,
}

/// Matrix entries as `[re, im]` pairs, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let entries = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
        Self { rows: m.nrows(), cols: m.ncols(), entries }
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.entries[i][j];
            Complex64::new(re, im)
        })
    }
}

fn check_orthonormal(basis: &[WaveFunction], name: &str) -> Result<()> {
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let expected = if i == j { 1.0 } else { 0.0 };
            let z = inner_product(a, b)?;
            if (z - Complex64::new(expected, 0.0)).norm() > BASIS_TOLERANCE {
                return Err(Error::Domain(format!("{name} is not orthonormal: <{i}|{j}> = {z}")));
            }
        }
    }
    Ok(())
}

/// Ratio of extreme singular values; infinite for singular matrices.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Fills `B[i][j] = oracle(e_i, f_j)`. Oracle calls run in parallel.
pub fn sample_form<F>(basis_g: &[WaveFunction], basis_eta: &[WaveFunction], oracle: F) -> Result<FormSample>
where
    F: Fn(&WaveFunction, &WaveFunction) -> Result<Complex64> + Sync,
{
    let n = basis_g.len();
    if n < 2 || basis_eta.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "need two families of equal size >= 2, got {} and {}",
            n,
            basis_eta.len()
        )));
    }
    check_orthonormal(basis_g, "basis_g")?;
    check_orthonormal(basis_eta, "basis_eta")?;
    let values =
        (0..n * n).into_par_iter().map(|k| oracle(&basis_g[k / n], &basis_eta[k % n])).collect::<Result<Vec<_>>>()?;
    let matrix = CMatrix::from_row_slice(n, n, &values);
    let cond = condition_number(&matrix);
    if cond.is_nan() || cond > MAX_CONDITION_NUMBER {
        return Err(Error::DegenerateForm { condition_number: cond, limit: MAX_CONDITION_NUMBER });
    }
    Ok(FormSample { basis_g: basis_g.to_vec(), basis_eta: basis_eta.to_vec(), matrix, condition_number: cond })
}

/// Unitary factor of the polar decomposition `B = U·P`, from the SVD
/// `B = W Σ V†` as `U = W V†`.
pub fn polar_unitary(b: &CMatrix) -> Result<CMatrix> {
    if !b.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", b.nrows(), b.ncols())));
    }
    let cond = condition_number(b);
    if cond.is_nan() || cond > MAX_CONDITION_NUMBER {
        return Err(Error::DegenerateForm { condition_number: cond, limit: MAX_CONDITION_NUMBER });
    }
    let svd = b.clone().svd(true, true);
    let (w, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
    Ok(w * v_t)
}

/// Identification of the two spaces through the polar-unitary part of `B`.
pub fn riesz_isomorphism(sample: &FormSample) -> Result<BackgroundMap> {
    Ok(BackgroundMap {
        unitary: polar_unitary(&sample.matrix)?,
        condition_number: sample.condition_number,
        recovered_projectors: Vec::new(),
    })
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Checks Hermiticity, idempotence and completeness. Orthogonal projectors
/// summing to the identity are mutually orthogonal, so pairs are not
/// multiplied out.
pub fn check_measure(projectors: &[CMatrix], n: usize) -> Result<()> {
    if projectors.is_empty() {
        return Err(Error::InvalidMeasure("empty measure".into()));
    }
    let mut total = CMatrix::zeros(n, n);
    for (i, p) in projectors.iter().enumerate() {
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::InvalidMeasure(format!(
                "projector {i} is {}x{}, expected {n}x{n}",
                p.nrows(),
                p.ncols()
            )));
        }
        if max_abs(&(p - p.adjoint())) > MEASURE_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("projector {i} is not Hermitian")));
        }
        if max_abs(&(p * p - p)) > MEASURE_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("projector {i} is not idempotent")));
        }
        total += p;
    }
    if max_abs(&(total - CMatrix::identity(n, n))) > MEASURE_TOLERANCE {
        return Err(Error::InvalidMeasure("projectors do not sum to the identity".into()));
    }
    Ok(())
}

/// `P_i = U·Q_i·U†`.
pub fn pull_back_position_measure(map: &BackgroundMap, eta_projectors: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let n = map.unitary.nrows();
    check_measure(eta_projectors, n)?;
    let u_adj = map.unitary.adjoint();
    let recovered: Vec<CMatrix> = eta_projectors.iter().map(|q| &map.unitary * q * &u_adj).collect();
    check_measure(&recovered, n)?;
    Ok(recovered)
}

impl BackgroundMap {
    /// Pulls back `eta_projectors` and stores the result.
    pub fn recover(mut self, eta_projectors: &[CMatrix]) -> Result<Self> {
        self.recovered_projectors = pull_back_position_measure(&self, eta_projectors)?;
        Ok(self)
    }

    /// Index of the basis element each recovered projector is concentrated on.
    pub fn localization_indices(&self) -> Vec<usize> {
        localization_indices(&self.recovered_projectors)
    }
}

pub fn localization_indices(projectors: &[CMatrix]) -> Vec<usize> {
    projectors
        .iter()
        .map(|p| (0..p.nrows()).max_by(|&a, &b| p[(a, a)].re.total_cmp(&p[(b, b)].re)).unwrap_or(0))
        .collect()
}

/// Spectral norm of `[A, B]` for Hermitian `A`, `B`: the commutator is
/// anti-Hermitian, so its norm is the largest `|λ|` of `i[A, B]`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    let ab = a * b;
    let h = (&ab - ab.adjoint()) * Complex64::new(0.0, 1.0);
    h.symmetric_eigenvalues().iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// `max_{i,j} ‖[P_i, Q_j]‖` between the recovered projectors and the native
/// position projectors of the branch space.
pub fn commutation_check(map: &BackgroundMap, native_projectors: &[CMatrix]) -> Result<f64> {
    let n = map.unitary.nrows();
    if map.recovered_projectors.is_empty() {
        return Err(Error::InvalidMeasure("map carries no recovered projectors".into()));
    }
    if native_projectors.iter().chain(&map.recovered_projectors).any(|p| p.nrows() != n || p.ncols() != n) {
        return Err(Error::DimensionMismatch(format!("projectors must be {n}x{n}")));
    }
    let pairs: Vec<(usize, usize)> =
        (0..map.recovered_projectors.len()).flat_map(|i| (0..native_projectors.len()).map(move |j| (i, j))).collect();
    Ok(pairs
        .par_iter()
        .map(|&(i, j)| commutator_norm(&map.recovered_projectors[i], &native_projectors[j]))
        .reduce(|| 0.0, f64::max))
}

/// `E_jj`, the coordinate projectors of an `n`-element position basis.
pub fn position_projectors(n: usize) -> Vec<CMatrix> {
    (0..n)
        .map(|j| {
            let mut m = CMatrix::zeros(n, n);
            m[(j, j)] = Complex64::new(1.0, 0.0);
            m
        })
        .collect()
}

/// Normalized cell indicators on a 1D grid, `block` cells each.
pub fn cell_basis(grid: &Grid, block: usize) -> Result<Vec<WaveFunction>> {
    if grid.dim() != 1 {
        return Err(Error::DimensionMismatch("cell bases are defined on 1D grids".into()));
    }
    let n = grid.len();
    if block == 0 || !n.is_multiple_of(block) {
        return Err(Error::Domain(format!("block {block} does not divide {n} points")));
    }
    let height = 1.0 / (block as f64 * grid.spacing(0)).sqrt();
    (0..n / block)
        .map(|i| {
            let mut amps = vec![Complex64::new(0.0, 0.0); n];
            amps[i * block..(i + 1) * block].iter_mut().for_each(|z| *z = Complex64::new(height, 0.0));
            WaveFunction::new(grid.clone(), amps, format!("cell_{i}"))
        })
        .collect()
}

/// Circular shift of every element by `cells` grid points along a 1D grid.
pub fn translated_basis(basis: &[WaveFunction], cells: isize) -> Result<Vec<WaveFunction>> {
    basis
        .iter()
        .map(|psi| {
            let n = psi.amplitudes().len() as isize;
            let amps = (0..n).map(|i| psi.amplitudes()[(i - cells).rem_euclid(n) as usize]).collect();
            psi.with_amplitudes(amps)
        })
        .collect()
}

/// `f'_j = Σ_m W_mj f_m`.
pub fn rotated_basis(basis: &[WaveFunction], w: &CMatrix) -> Result<Vec<WaveFunction>> {
    let n = basis.len();
    if w.nrows() != n || w.ncols() != n {
        return Err(Error::DimensionMismatch(format!("{}x{} rotation for {n} elements", w.nrows(), w.ncols())));
    }
    (0..n)
        .map(|j| {
            let len = basis[0].amplitudes().len();
            let mut amps = vec![Complex64::new(0.0, 0.0); len];
            for (m, f) in basis.iter().enumerate() {
                let c = w[(m, j)];
                for (a, z) in amps.iter_mut().zip(f.amplitudes()) {
                    *a += c * z;
                }
            }
            Ok(basis[0].with_amplitudes(amps)?.with_label(format!("rotated_{j}")))
        })
        .collect()
}

/// Seeded Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal folded into `Q`.
pub fn random_unitary(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            out[(i, j)] *= phase;
        }
    }
    out
}
