//! Dense complex linear-algebra kernels used by the beamforming designs.
//!
//! Eigen- and singular-value decompositions are delegated to `nalgebra`;
//! this module adds the contracts the design code relies on (descending
//! order, Hermitian/PSD validation, rank checks) plus water-filling,
//! log-determinants and phase quantization.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{BeamError, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative asymmetry tolerated before a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative (to the spectral radius) negative eigenvalue tolerated for PSD input.
pub const PSD_TOL: f64 = 1e-10;
/// Smallest eigenvalue ratio accepted for a Gram matrix that must be inverted.
pub const RANK_TOL: f64 = 1e-10;

const ABS_FLOOR: f64 = 1e-12;

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(BeamError::NonFinite)
    }
}

/// ‖M − Mᴴ‖_F / ‖M‖_F, or 0 for the zero matrix.
pub fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

/// (M + Mᴴ)/2.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(BeamError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m)?;
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > HERMITIAN_TOL {
        return Err(BeamError::NotHermitian { asymmetry });
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `i` pairs with `values[i]`.
    pub vectors: CMatrix,
}

pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEigen> {
    check_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Thin singular value decomposition `M = U diag(σ) Vᴴ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// m × r, orthonormal columns.
    pub u: CMatrix,
    /// Descending, length r = min(m, n).
    pub singular_values: Vec<f64>,
    /// n × r, orthonormal columns (not conjugated).
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r == 0 {
        return Ok(Svd {
            u: CMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: CMatrix::zeros(cols, 0),
        });
    }
    let dec = nalgebra::SVD::new(m.clone(), true, true);
    let u = dec.u.expect("left singular vectors requested");
    let v_t = dec.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    Ok(Svd {
        u: CMatrix::from_fn(rows, r, |i, c| u[(i, order[c])]),
        singular_values: order.iter().map(|&i| dec.singular_values[i]).collect(),
        v: CMatrix::from_fn(cols, r, |i, c| v_t[(order[c], i)].conj()),
    })
}

/// Per-channel powers from water-filling, with the common water level.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub water_level: f64,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// Σ log2(1 + g·p).
pub fn sum_log_rate(gains: &[f64], powers: &[f64]) -> f64 {
    gains
        .iter()
        .zip(powers)
        .map(|(g, p)| (g * p).ln_1p())
        .sum::<f64>()
        / std::f64::consts::LN_2
}

/// Maximizes Σ log2(1 + gᵢ pᵢ) subject to Σ pᵢ ≤ budget.
///
/// Zero gains are allowed and receive no power; at least one gain must be
/// positive. The active set is found by sorting and testing the analytic
/// water level of each candidate prefix.
pub fn water_filling(gains: &[f64], budget: f64) -> Result<PowerAllocation> {
    if gains.is_empty() {
        return Err(BeamError::Empty("water-filling gains"));
    }
    if !(budget.is_finite() && budget > 0.0) {
        return Err(BeamError::InvalidParameter(format!(
            "power budget must be positive, got {budget}"
        )));
    }
    if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(BeamError::InvalidParameter(
            "water-filling gains must be finite and nonnegative".into(),
        ));
    }
    let mut active: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if active.is_empty() {
        return Err(BeamError::InvalidParameter(
            "water-filling needs at least one positive gain".into(),
        ));
    }
    active.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));

    let inv: Vec<f64> = active.iter().map(|&i| 1.0 / gains[i]).collect();
    let mut prefix = 0.0;
    let mut level = budget + inv[0];
    for m in 1..=inv.len() {
        prefix += inv[m - 1];
        let candidate = (budget + prefix) / m as f64;
        if candidate > inv[m - 1] {
            level = candidate;
        } else {
            break;
        }
    }

    let mut alloc = allocation_at(gains, level);
    let residual = (alloc.total() - budget).abs();
    if residual > 1e-10 * budget {
        alloc = water_level_bisection(gains, budget);
    }
    Ok(alloc)
}

fn allocation_at(gains: &[f64], level: f64) -> PowerAllocation {
    let powers = gains
        .iter()
        .map(|&g| if g > 0.0 { (level - 1.0 / g).max(0.0) } else { 0.0 })
        .collect();
    PowerAllocation {
        powers,
        water_level: level,
    }
}

fn water_level_bisection(gains: &[f64], budget: f64) -> PowerAllocation {
    let min_inv = gains
        .iter()
        .filter(|g| **g > 0.0)
        .map(|g| 1.0 / g)
        .fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (min_inv, min_inv + budget);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if allocation_at(gains, mid).total() > budget {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    allocation_at(gains, lo)
}

/// Cholesky factor of a Hermitian matrix, `None` unless it is positive definite.
///
/// nalgebra's complex factorization takes square roots of negative pivots
/// without failing, so the pivots are checked explicitly; pivots that are
/// negligible against the largest diagonal entry count as singular.
fn pd_cholesky(m: &CMatrix) -> Option<Cholesky<C64, nalgebra::Dyn>> {
    let scale = (0..m.nrows()).fold(0.0f64, |a, i| a.max(m[(i, i)].re));
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let positive = (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.re * d.re > 1e-14 * scale && d.im.abs() <= 1e-12 * d.re
    });
    positive.then_some(chol)
}

/// Natural-log determinant of a Hermitian positive-semidefinite matrix.
///
/// Uses a Cholesky factorization when the matrix is positive definite and
/// falls back to the eigenvalues otherwise; a singular PSD matrix yields
/// `-inf`.
pub fn logdet_psd(m: &CMatrix) -> Result<f64> {
    check_hermitian(m)?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let herm = hermitian_part(m);
    if let Some(chol) = pd_cholesky(&herm) {
        let l = chol.l_dirty();
        let ld: f64 = (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum();
        if ld.is_finite() {
            return Ok(2.0 * ld);
        }
    }
    let eig = hermitian_eig(&herm)?;
    let scale = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = *eig.values.last().expect("nonempty");
    if min < -PSD_TOL * scale.max(ABS_FLOOR) {
        return Err(BeamError::NotPositiveSemidefinite { min_eigenvalue: min });
    }
    Ok(eig.values.iter().map(|v| v.max(0.0).ln()).sum())
}

/// log2 det(M) for Hermitian PSD `M`.
pub fn log2det_psd(m: &CMatrix) -> Result<f64> {
    Ok(logdet_psd(m)? / std::f64::consts::LN_2)
}

/// Validates that `m` is Hermitian PSD within tolerance; returns its eigenvalues.
pub fn check_psd(m: &CMatrix) -> Result<Vec<f64>> {
    let eig = hermitian_eig(m)?;
    let scale = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if let Some(&min) = eig.values.last() {
        if min < -PSD_TOL * scale.max(ABS_FLOOR) {
            return Err(BeamError::NotPositiveSemidefinite { min_eigenvalue: min });
        }
    }
    Ok(eig.values)
}

/// Q^{-1/2} for a Hermitian positive-definite Gram matrix.
pub fn inverse_sqrt_pd(q: &CMatrix, what: &'static str) -> Result<CMatrix> {
    let eig = hermitian_eig(q)?;
    let n = eig.values.len();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let max = eig.values[0];
    let min = eig.values[n - 1];
    if !(max > 0.0) || min <= RANK_TOL * max {
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        return Err(BeamError::RankDeficient { what, ratio });
    }
    let mut scaled = eig.vectors.clone();
    for (c, &lambda) in eig.values.iter().enumerate() {
        let s = 1.0 / lambda.sqrt();
        scaled.column_mut(c).scale_mut(s);
    }
    Ok(&scaled * eig.vectors.adjoint())
}

/// Solves `A X = B` for Hermitian positive-definite `A`.
pub fn solve_pd(a: &CMatrix, b: &CMatrix, what: &'static str) -> Result<CMatrix> {
    let chol = pd_cholesky(&hermitian_part(a)).ok_or(BeamError::Singular(what))?;
    let x = chol.solve(b);
    if is_finite(&x) {
        Ok(x)
    } else {
        Err(BeamError::Singular(what))
    }
}

/// Phase-shifter resolution: continuous phases or a `2^b`-point uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PhaseResolution {
    #[default]
    Unbounded,
    Bits(u8),
}

/// Largest supported quantizer resolution.
pub const MAX_PHASE_BITS: u8 = 16;

impl PhaseResolution {
    pub fn is_quantized(&self) -> bool {
        matches!(self, PhaseResolution::Bits(_))
    }

    /// Number of grid points, `None` when unbounded.
    pub fn levels(&self) -> Option<usize> {
        match *self {
            PhaseResolution::Unbounded => None,
            PhaseResolution::Bits(b) => Some(1usize << b),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PhaseResolution::Bits(b) if b == 0 || b > MAX_PHASE_BITS => Err(
                BeamError::InvalidParameter(format!(
                    "phase resolution must be 1..={MAX_PHASE_BITS} bits, got {b}"
                )),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PhaseResolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseResolution::Unbounded => f.write_str("unbounded"),
            PhaseResolution::Bits(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for PhaseResolution {
    type Err = BeamError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unbounded" | "inf" | "infinite" => Ok(PhaseResolution::Unbounded),
            other => {
                let bits: u8 = other.parse().map_err(|_| {
                    BeamError::InvalidParameter(format!("invalid phase resolution `{other}`"))
                })?;
                let res = PhaseResolution::Bits(bits);
                res.validate()?;
                Ok(res)
            }
        }
    }
}

/// ω^k with ω = e^{j2π/levels}. Multiples of a quarter turn are exact.
pub fn grid_point(k: usize, levels: usize) -> C64 {
    let k = k % levels;
    if (4 * k) % levels == 0 {
        return match 4 * k / levels {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, 2.0 * PI * k as f64 / levels as f64)
}

/// Index of the grid point maximizing Re{g* z}; ties go to the smaller index.
pub fn quantize_index(z: C64, levels: usize) -> usize {
    let mag = z.norm();
    if mag == 0.0 {
        return 0;
    }
    let step = 2.0 * PI / levels as f64;
    let nearest = (z.arg().rem_euclid(2.0 * PI) / step).round() as usize % levels;
    let mut candidates = [
        (nearest + levels - 1) % levels,
        nearest,
        (nearest + 1) % levels,
    ];
    candidates.sort_unstable();
    let tie = 1e-12 * mag;
    let mut best = candidates[0];
    let mut best_score = (grid_point(best, levels).conj() * z).re;
    for &k in &candidates[1..] {
        let score = (grid_point(k, levels).conj() * z).re;
        if score > best_score + tie {
            best = k;
            best_score = score;
        }
    }
    best
}

/// Projects `z` onto the unit circle, or onto the phase grid when quantized.
/// `z = 0` maps to 1.
pub fn quantize_phase(z: C64, resolution: PhaseResolution) -> C64 {
    match resolution.levels() {
        None => {
            let mag = z.norm();
            if mag == 0.0 {
                C64::new(1.0, 0.0)
            } else {
                z / mag
            }
        }
        Some(levels) => grid_point(quantize_index(z, levels), levels),
    }
}

/// True when `z` is exactly one of the grid points of `resolution`.
pub fn on_phase_grid(z: C64, resolution: PhaseResolution) -> bool {
    match resolution.levels() {
        None => (z.norm() - 1.0).abs() < 1e-12,
        Some(levels) => grid_point(quantize_index(z, levels), levels) == z,
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn random_complex<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
    }

    pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
        hermitian_part(&random_complex(rng, n, n))
    }

    pub fn random_psd<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
        let a = random_complex(rng, n, n);
        hermitian_part(&(&a * a.adjoint()))
    }
}
