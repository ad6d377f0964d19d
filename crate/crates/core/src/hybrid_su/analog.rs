use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::StructureMask;
use crate::error::{BeamError, Result};
use crate::numerics::{
    check_psd, ensure_finite, grid_point, hermitian_eig, hermitian_part, log2det_psd,
    quantize_phase, solve_pd, CMatrix, CVector, PhaseResolution, C64, RANK_TOL,
};

/// Stopping and initialization settings for the coordinate descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalogDesignOptions {
    pub max_sweeps: usize,
    /// Relative objective gain per sweep below which an unquantized run stops.
    pub rel_tol: f64,
    /// Seed of the random initial phases.
    pub init_seed: u64,
    /// Keep the objective value after each sweep.
    pub record_trace: bool,
    /// On a phase grid, refuse updates that make the columns linearly
    /// dependent and redraw dependent initial points.
    pub full_rank_guard: bool,
}

impl Default for AnalogDesignOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 50,
            rel_tol: 1e-6,
            init_seed: 0,
            record_trace: false,
            full_rank_guard: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalogDesign {
    pub matrix: CMatrix,
    /// Final value of `log2 det(I + c·Vᴴ F V)`.
    pub objective: f64,
    pub sweeps: usize,
    /// Objective before the first sweep and after each sweep, when recorded.
    pub trace: Vec<f64>,
}

/// F₁ = (1/K) Σ_k H[k]ᴴ H[k].
pub fn average_covariance(channels: &[CMatrix]) -> Result<CMatrix> {
    let first = channels.first().ok_or(BeamError::Empty("channel list"))?;
    let (nr, nt) = first.shape();
    let mut acc = CMatrix::zeros(nt, nt);
    for h in channels {
        if h.shape() != (nr, nt) {
            return Err(BeamError::Dimension(format!(
                "subcarrier channel is {}x{}, expected {nr}x{nt}",
                h.nrows(),
                h.ncols()
            )));
        }
        ensure_finite(h)?;
        acc += h.adjoint() * h;
    }
    acc /= C64::new(channels.len() as f64, 0.0);
    Ok(hermitian_part(&acc))
}

/// F₂ = (1/K) Σ_k H[k] V_t[k] V_t[k]ᴴ H[k]ᴴ.
pub fn combiner_covariance(channels: &[CMatrix], transmit: &[CMatrix]) -> Result<CMatrix> {
    let first = channels.first().ok_or(BeamError::Empty("channel list"))?;
    if channels.len() != transmit.len() {
        return Err(BeamError::Dimension(format!(
            "{} channels but {} precoders",
            channels.len(),
            transmit.len()
        )));
    }
    let nr = first.nrows();
    let mut acc = CMatrix::zeros(nr, nr);
    for (h, vt) in channels.iter().zip(transmit) {
        if h.shape() != first.shape() || vt.nrows() != h.ncols() {
            return Err(BeamError::Dimension(format!(
                "channel {}x{} incompatible with precoder {}x{}",
                h.nrows(),
                h.ncols(),
                vt.nrows(),
                vt.ncols()
            )));
        }
        let y = h * vt;
        acc += &y * y.adjoint();
    }
    acc /= C64::new(channels.len() as f64, 0.0);
    Ok(hermitian_part(&acc))
}

/// log2 det(I + c·Vᴴ F V).
pub fn analog_objective(v: &CMatrix, f: &CMatrix, c: f64) -> Result<f64> {
    if f.nrows() != v.nrows() || !f.is_square() {
        return Err(BeamError::Dimension(format!(
            "analog matrix has {} rows, covariance is {}x{}",
            v.nrows(),
            f.nrows(),
            f.ncols()
        )));
    }
    let n = v.ncols();
    let m = CMatrix::identity(n, n) + v.adjoint() * f * v * C64::new(c, 0.0);
    log2det_psd(&hermitian_part(&m))
}

fn validate_inputs(f: &CMatrix, mask: &StructureMask, c: f64) -> Result<()> {
    if f.shape() != (mask.rows, mask.rows) {
        return Err(BeamError::Dimension(format!(
            "covariance is {}x{}, mask expects {} antennas",
            f.nrows(),
            f.ncols(),
            mask.rows
        )));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(BeamError::InvalidParameter(format!(
            "objective scale must be positive, got {c}"
        )));
    }
    check_psd(f)?;
    Ok(())
}

fn has_full_column_rank(v: &CMatrix) -> bool {
    if v.ncols() <= 1 {
        return v.iter().any(|z| *z != C64::new(0.0, 0.0));
    }
    match hermitian_eig(&hermitian_part(&(v.adjoint() * v))) {
        Ok(eig) => {
            let max = eig.values[0];
            max > 0.0 && eig.values[eig.values.len() - 1] > RANK_TOL * max
        }
        Err(_) => false,
    }
}

/// Whether setting entry (i, j) to `value` leaves the columns independent.
/// On a coarse phase grid the descent can otherwise duplicate a column,
/// which leaves no invertible Gram matrix for the digital stage.
fn keeps_full_rank(v: &CMatrix, i: usize, j: usize, value: C64) -> bool {
    let mut candidate = v.clone();
    candidate[(i, j)] = value;
    has_full_column_rank(&candidate)
}

/// Seeded random initial point: uniform phases, or uniform grid indices
/// redrawn until the columns are independent when `guard` is set.
fn initial_point(mask: &StructureMask, phase: PhaseResolution, seed: u64, guard: bool) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = CMatrix::zeros(mask.rows, mask.cols);
    for _ in 0..1000 {
        for (i, j) in mask.entries() {
            v[(i, j)] = match phase.levels() {
                None => C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)),
                Some(levels) => grid_point(rng.random_range(0..levels), levels),
            };
        }
        if !(guard && phase.is_quantized()) || has_full_column_rank(&v) {
            break;
        }
    }
    v
}

/// Maximizes `log2 det(I + c·Vᴴ F V)` over unit-modulus `V` supported on `mask`.
///
/// Entries are visited column by column; each one is set to the phase of its
/// coupling term `η_ij`, which is the exact coordinate-wise maximizer. With a
/// finite phase resolution the maximizer is projected onto the grid and only
/// accepted when it raises the objective and, under the full-rank guard,
/// keeps the columns linearly independent.
pub fn design_analog(
    f: &CMatrix,
    mask: &StructureMask,
    c: f64,
    phase: PhaseResolution,
    opts: &AnalogDesignOptions,
) -> Result<AnalogDesign> {
    phase.validate()?;
    let init = initial_point(mask, phase, opts.init_seed, opts.full_rank_guard);
    refine_analog(f, mask, c, phase, init, opts, |_| {})
}

/// Analog combiner design: the same descent with `c = 1/(σ² τ)`, where τ is
/// the number of antennas per RF chain column.
pub fn design_analog_combiner(
    f2: &CMatrix,
    mask: &StructureMask,
    noise_power: f64,
    phase: PhaseResolution,
    opts: &AnalogDesignOptions,
) -> Result<AnalogDesign> {
    if !(noise_power.is_finite() && noise_power > 0.0) {
        return Err(BeamError::InvalidParameter("noise power must be positive".into()));
    }
    design_analog(f2, mask, 1.0 / (noise_power * mask.column_weight()), phase, opts)
}

/// Runs the coordinate descent from `initial`, calling `observer` with the
/// current matrix after every single-entry visit.
pub fn refine_analog(
    f: &CMatrix,
    mask: &StructureMask,
    c: f64,
    phase: PhaseResolution,
    initial: CMatrix,
    opts: &AnalogDesignOptions,
    mut observer: impl FnMut(&CMatrix),
) -> Result<AnalogDesign> {
    validate_inputs(f, mask, c)?;
    phase.validate()?;
    if !mask.is_satisfied_by(&initial, 1e-9) {
        return Err(BeamError::InvalidParameter(
            "initial analog matrix violates its structure or modulus constraint".into(),
        ));
    }
    let f = hermitian_part(f);
    let mut v = initial;
    let mut objective = analog_objective(&v, &f, c)?;
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(objective);
    }

    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for j in 0..mask.cols {
            let g = column_coupling(&f, &v, j, c)?;
            let mut gv: CVector = &g * v.column(j);
            for i in mask.rows_of(j) {
                let old = v[(i, j)];
                let eta = gv[i] - g[(i, i)] * old;
                let new = match phase.levels() {
                    None => quantize_phase(eta, phase),
                    Some(_) => {
                        let candidate = quantize_phase(eta, phase);
                        let gain = (candidate.conj() * eta).re - (old.conj() * eta).re;
                        if gain > 1e-12 * eta.norm()
                            && (!opts.full_rank_guard || keeps_full_rank(&v, i, j, candidate))
                        {
                            candidate
                        } else {
                            old
                        }
                    }
                };
                if new != old {
                    changed = true;
                    let delta = new - old;
                    gv.axpy(delta, &g.column(i), C64::new(1.0, 0.0));
                    v[(i, j)] = new;
                }
                observer(&v);
            }
        }
        let next = analog_objective(&v, &f, c)?;
        let gain = next - objective;
        objective = next;
        if opts.record_trace {
            trace.push(objective);
        }
        let converged = if phase.is_quantized() {
            !changed
        } else {
            gain <= opts.rel_tol * objective.abs().max(f64::MIN_POSITIVE)
        };
        if converged {
            break;
        }
    }

    Ok(AnalogDesign {
        matrix: v,
        objective,
        sweeps,
        trace,
    })
}

/// G_j = cF − c² F V̄ (I + c V̄ᴴ F V̄)⁻¹ V̄ᴴ F, where V̄ drops column `j`.
///
/// With `v` the `j`-th column, det(I + c VᴴFV) = det(I + c V̄ᴴFV̄)·(1 + vᴴ G_j v),
/// so column `j` only sees the objective through the quadratic form in G_j.
fn column_coupling(f: &CMatrix, v: &CMatrix, j: usize, c: f64) -> Result<CMatrix> {
    let n = f.nrows();
    let cf = f * C64::new(c, 0.0);
    if v.ncols() == 1 {
        return Ok(cf);
    }
    let others = v.clone().remove_column(j);
    let fv = f * &others;
    let m = others.ncols();
    let cj = CMatrix::identity(m, m) + others.adjoint() * &fv * C64::new(c, 0.0);
    let x = solve_pd(&cj, &fv.adjoint(), "analog column coupling")?;
    let g = cf - &fv * x * C64::new(c * c, 0.0);
    debug_assert_eq!(g.shape(), (n, n));
    Ok(hermitian_part(&g))
}

/// Natural-log determinant of the column-`j` factorization; exposed to tests.
#[cfg(test)]
fn split_objective(f: &CMatrix, v: &CMatrix, j: usize, c: f64) -> f64 {
    let g = column_coupling(f, v, j, c).unwrap();
    let col = v.column(j).into_owned();
    let quad = (col.adjoint() * &g * &col)[(0, 0)].re;
    let rest = if v.ncols() == 1 {
        0.0
    } else {
        let others = v.clone().remove_column(j);
        let m = others.ncols();
        let cj = CMatrix::identity(m, m) + others.adjoint() * f * &others * C64::new(c, 0.0);
        crate::numerics::logdet_psd(&hermitian_part(&cj)).unwrap()
    };
    (rest + (1.0 + quad).ln()) / std::f64::consts::LN_2
}
