//! Downlink multiuser MISO precoding with a shared analog stage.
//!
//! The analog precoder reuses the single-user descent on the covariance of
//! the stacked user channels. Digital precoders come from a weighted MMSE
//! iteration under a per-subcarrier power limit: receivers, MSE weights and
//! precoders are updated in turn, and the precoder step finds its Lagrange
//! multiplier by bisection on the monotone power map.
//!
//! The iteration runs in SNR-normalized units (`g̃ = g·√P/σ`), so the power
//! budget and the noise power are both one. Reported multipliers are in
//! those units; returned precoders are in physical units.

use std::f64::consts::LN_2;

use rand::Rng;

use crate::channel::{realize_multiuser, CellEnvironment, MultiuserChannel, UserPlacement};
use crate::error::{BeamError, Result};
use crate::hybrid_su::{average_covariance, design_analog, AnalogDesignOptions, StructureMask, Structure};
use crate::numerics::{
    hermitian_eig, hermitian_part, solve_pd, CMatrix, CVector, PhaseResolution, C64, RANK_TOL,
};

/// Rate of `user` under interference from all other columns of `vd`:
/// log2(1 + |gᴴ v_n|² / (σ² + Σ_{i≠n} |gᴴ v_i|²)) with `gᴴ = hᴴ V_RF`.
pub fn rate_mu(
    h: &CVector,
    v_rf: &CMatrix,
    vd: &CMatrix,
    user: usize,
    noise_power: f64,
) -> Result<f64> {
    if h.len() != v_rf.nrows() || v_rf.ncols() != vd.nrows() || user >= vd.ncols() {
        return Err(BeamError::Dimension(format!(
            "user {user}: channel length {}, analog {}x{}, digital {}x{}",
            h.len(),
            v_rf.nrows(),
            v_rf.ncols(),
            vd.nrows(),
            vd.ncols()
        )));
    }
    let received = h.adjoint() * v_rf * vd;
    let signal = received[(0, user)].norm_sqr();
    let interference: f64 = (0..vd.ncols())
        .filter(|&i| i != user)
        .map(|i| received[(0, i)].norm_sqr())
        .sum();
    Ok((1.0 + signal / (noise_power + interference)).log2())
}

/// Rates of every user from effective channel rows `G = H V_RF` (Nu × N_RF).
fn rates_from_effective(g: &CMatrix, vd: &CMatrix, noise_power: f64) -> Vec<f64> {
    let received = g * vd;
    (0..g.nrows())
        .map(|n| {
            let signal = received[(n, n)].norm_sqr();
            let floor: f64 = noise_power
                + (0..received.ncols())
                    .filter(|&i| i != n)
                    .map(|i| received[(n, i)].norm_sqr())
                    .sum::<f64>();
            (signal / floor).ln_1p() / LN_2
        })
        .collect()
}

/// Per-user rates on one subcarrier; `h` stacks the users' channels as rows.
pub fn user_rates(h: &CMatrix, v_rf: &CMatrix, vd: &CMatrix, noise_power: f64) -> Result<Vec<f64>> {
    if h.ncols() != v_rf.nrows() || v_rf.ncols() != vd.nrows() || vd.ncols() != h.nrows() {
        return Err(BeamError::Dimension(format!(
            "stacked channel {}x{}, analog {}x{}, digital {}x{}",
            h.nrows(),
            h.ncols(),
            v_rf.nrows(),
            v_rf.ncols(),
            vd.nrows(),
            vd.ncols()
        )));
    }
    Ok(rates_from_effective(&(h * v_rf), vd, noise_power))
}

/// Σ_k Σ_n β_n R_n[k] / K.
pub fn weighted_sum_rate(per_subcarrier: &[Vec<f64>], weights: &[f64]) -> f64 {
    let total: f64 = per_subcarrier
        .iter()
        .map(|rates| rates.iter().zip(weights).map(|(r, b)| r * b).sum::<f64>())
        .sum();
    total / per_subcarrier.len().max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WmmseOptions {
    pub max_iters: usize,
    /// Relative weighted-sum-rate change that ends the iteration.
    pub rel_tol: f64,
    /// Relative width of the final multiplier bracket.
    pub bisection_tol: f64,
}

impl Default for WmmseOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            rel_tol: 1e-5,
            bisection_tol: 1e-10,
        }
    }
}

/// Auxiliary variables at the last iteration, indexed `[k][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WmmseState {
    pub receivers: Vec<Vec<C64>>,
    pub mse_weights: Vec<Vec<f64>>,
    /// Normalized-unit multiplier per subcarrier.
    pub lambdas: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct WmmseResult {
    /// N_RF × Nu digital precoders per subcarrier.
    pub precoders: Vec<CMatrix>,
    /// Weighted sum rate at the initial point and after every iteration.
    pub trace: Vec<f64>,
    /// Final per-subcarrier, per-user rates.
    pub rates: Vec<Vec<f64>>,
    pub state: WmmseState,
    /// Normalized power `Tr(V_Dᴴ Q V_D)/P` per subcarrier.
    pub power_fractions: Vec<f64>,
}

impl WmmseResult {
    pub fn weighted_sum_rate(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial point")
    }
}

fn solve_lu(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    let x = a.clone().lu().solve(b)?;
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(x)
}

/// Precoder step on one subcarrier in Woodbury form.
///
/// With Y = Q⁻¹G, M = GᴴY, D = diag(β t |u|²) and C = diag(β t u), the
/// multiplier-λ precoders are V = Y Z with Z = (λI + D M)⁻¹ C and power
/// Tr(Zᴴ M Z).
struct PrecoderStep<'a> {
    y: &'a CMatrix,
    m: &'a CMatrix,
    dm: CMatrix,
    c: CMatrix,
}

impl PrecoderStep<'_> {
    fn coefficients(&self, lambda: f64) -> Option<CMatrix> {
        let n = self.dm.nrows();
        let a = &self.dm + CMatrix::identity(n, n) * C64::new(lambda, 0.0);
        solve_lu(&a, &self.c)
    }

    fn power(z: &CMatrix, m: &CMatrix) -> f64 {
        (z.adjoint() * m * z).trace().re
    }

    /// Smallest feasible multiplier and its precoders.
    fn solve(&self, tol: f64) -> Result<(f64, CMatrix)> {
        if let Some(z) = self.coefficients(0.0) {
            if Self::power(&z, self.m) <= 1.0 {
                return Ok((0.0, self.y * z));
            }
        }
        let feasible = |lambda: f64| {
            self.coefficients(lambda)
                .map(|z| (Self::power(&z, self.m) <= 1.0, z))
        };
        let mut hi = 1.0;
        let mut z_hi = loop {
            match feasible(hi) {
                Some((true, z)) => break z,
                _ if hi > 1e300 => return Err(BeamError::Singular("WMMSE precoder system")),
                _ => hi *= 2.0,
            }
        };
        let mut lo = 0.0;
        while hi - lo >= tol * hi {
            let mid = 0.5 * (lo + hi);
            match feasible(mid) {
                Some((true, z)) => {
                    hi = mid;
                    z_hi = z;
                }
                _ => lo = mid,
            }
        }
        Ok((hi, self.y * z_hi))
    }
}

/// Weighted MMSE digital precoding for fixed effective channels.
///
/// `effective[k]` is `H[k] V_RF` (Nu × N_RF, row n is `h_nᴴ V_RF`) and
/// `gram` is `V_RFᴴ V_RF`. Every subcarrier obeys
/// `Tr(V_RF V_D V_Dᴴ V_RFᴴ) ≤ power`.
pub fn wmmse_digital(
    effective: &[CMatrix],
    gram: &CMatrix,
    weights: &[f64],
    power: f64,
    noise_power: f64,
    opts: &WmmseOptions,
) -> Result<WmmseResult> {
    let first = effective.first().ok_or(BeamError::Empty("subcarrier channels"))?;
    let (nu, nrf) = first.shape();
    if weights.len() != nu {
        return Err(BeamError::Dimension(format!(
            "{} weights for {nu} users",
            weights.len()
        )));
    }
    if weights.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(BeamError::InvalidParameter("user weights must be positive".into()));
    }
    if !(power > 0.0 && noise_power > 0.0) {
        return Err(BeamError::InvalidParameter(
            "power and noise power must be positive".into(),
        ));
    }
    if gram.shape() != (nrf, nrf) || effective.iter().any(|g| g.shape() != (nu, nrf)) {
        return Err(BeamError::Dimension("inconsistent effective channels".into()));
    }
    let scale = C64::new((power / noise_power).sqrt(), 0.0);

    // Columns g̃_n of the normalized channel, with Y = Q⁻¹G and M = GᴴQ⁻¹G.
    let mut cols = Vec::with_capacity(effective.len());
    let mut ys = Vec::with_capacity(effective.len());
    let mut ms = Vec::with_capacity(effective.len());
    for g in effective {
        let gc = g.adjoint() * scale;
        let y = solve_pd(gram, &gc, "analog precoder Gram matrix")?;
        ms.push(hermitian_part(&(gc.adjoint() * &y)));
        ys.push(y);
        cols.push(gc);
    }

    // Matched-filter start at full power.
    let mut v: Vec<CMatrix> = Vec::with_capacity(effective.len());
    for (y, m) in ys.iter().zip(&ms) {
        let p = m.trace().re;
        if !(p > 0.0) {
            return Err(BeamError::Singular("effective channel"));
        }
        v.push(y / C64::new(p.sqrt(), 0.0));
    }

    let rates_of = |v: &[CMatrix]| -> Vec<Vec<f64>> {
        cols.iter()
            .zip(v)
            .map(|(gc, vk)| rates_from_effective(&gc.adjoint(), vk, 1.0))
            .collect()
    };
    let mut rates = rates_of(&v);
    let mut trace = vec![weighted_sum_rate(&rates, weights)];
    let k_total = effective.len();
    let mut state = WmmseState {
        receivers: vec![vec![C64::new(0.0, 0.0); nu]; k_total],
        mse_weights: vec![vec![1.0; nu]; k_total],
        lambdas: vec![0.0; k_total],
        iterations: 0,
    };

    for iter in 1..=opts.max_iters {
        for k in 0..k_total {
            let received = cols[k].adjoint() * &v[k];
            let mut d = CMatrix::zeros(nu, nu);
            let mut c = CMatrix::zeros(nu, nu);
            for n in 0..nu {
                let signal = received[(n, n)].norm_sqr();
                let rest: f64 = 1.0
                    + (0..nu)
                        .filter(|&i| i != n)
                        .map(|i| received[(n, i)].norm_sqr())
                        .sum::<f64>();
                let total = rest + signal;
                let u = received[(n, n)] / total;
                // 1 - |r|²/total, written without the cancellation at high SINR.
                let t = total / rest;
                d[(n, n)] = C64::new(weights[n] * t * u.norm_sqr(), 0.0);
                c[(n, n)] = u * (weights[n] * t);
                state.receivers[k][n] = u;
                state.mse_weights[k][n] = t;
            }
            let step = PrecoderStep {
                y: &ys[k],
                m: &ms[k],
                dm: &d * &ms[k],
                c,
            };
            let (lambda, vk) = step.solve(opts.bisection_tol)?;
            state.lambdas[k] = lambda;
            v[k] = vk;
        }
        rates = rates_of(&v);
        let wsr = weighted_sum_rate(&rates, weights);
        let prev = *trace.last().expect("nonempty");
        trace.push(wsr);
        state.iterations = iter;
        if (wsr - prev).abs() <= opts.rel_tol * prev.abs() {
            break;
        }
    }

    let power_fractions = v
        .iter()
        .map(|vk| (vk.adjoint() * gram * vk).trace().re)
        .collect();
    let amplitude = C64::new(power.sqrt(), 0.0);
    Ok(WmmseResult {
        precoders: v.into_iter().map(|vk| vk * amplitude).collect(),
        trace,
        rates,
        state,
        power_fractions,
    })
}

/// Fully-digital WMMSE: one RF chain per antenna (`V_RF = I`).
pub fn fully_digital_wmmse(
    channel: &MultiuserChannel,
    weights: &[f64],
    power: f64,
    noise_power: f64,
    opts: &WmmseOptions,
) -> Result<WmmseResult> {
    let nt = channel.nt();
    wmmse_digital(
        &channel.per_subcarrier,
        &CMatrix::identity(nt, nt),
        weights,
        power,
        noise_power,
        opts,
    )
}

/// Analog network of the multiuser hybrid precoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuArchitecture {
    pub num_rf: usize,
    pub structure: Structure,
    pub phase: PhaseResolution,
}

#[derive(Debug, Clone)]
pub struct MuPrecoder {
    /// V_RF, Nt × N_RF.
    pub analog_precoder: CMatrix,
    /// V_D[k] = [v_D1[k], …, v_DNu[k]], N_RF × Nu.
    pub digital_precoders: Vec<CMatrix>,
    pub weights: Vec<f64>,
    pub wmmse: WmmseResult,
}

impl MuPrecoder {
    /// Tr(V_RF V_D[k] V_D[k]ᴴ V_RFᴴ) per subcarrier.
    pub fn transmit_powers(&self) -> Vec<f64> {
        self.digital_precoders
            .iter()
            .map(|vd| (&self.analog_precoder * vd).norm_squared())
            .collect()
    }

    pub fn weighted_sum_rate(&self) -> f64 {
        self.wmmse.weighted_sum_rate()
    }
}

/// Hybrid design: analog precoder from the stacked-channel covariance with
/// equal user priority, then weighted MMSE digital precoders.
pub fn hybrid_mu_design(
    channel: &MultiuserChannel,
    arch: &MuArchitecture,
    weights: &[f64],
    power: f64,
    noise_power: f64,
    analog_opts: &AnalogDesignOptions,
    wmmse_opts: &WmmseOptions,
) -> Result<MuPrecoder> {
    let nt = channel.nt();
    let mask = StructureMask::new(nt, arch.num_rf, arch.structure)?;
    let gamma2 = match arch.structure {
        Structure::FullyConnected => power / (nt * arch.num_rf) as f64,
        Structure::PartiallyConnected => power / nt as f64,
    };
    let f1 = average_covariance(&channel.per_subcarrier)?;
    let v_rf = design_analog(&f1, &mask, gamma2 / noise_power, arch.phase, analog_opts)?.matrix;
    let basis = whitening_basis(&v_rf)?;
    let effective: Vec<CMatrix> = channel
        .per_subcarrier
        .iter()
        .map(|h| h * &v_rf * &basis)
        .collect();
    let r = basis.ncols();
    let mut wmmse = wmmse_digital(
        &effective,
        &CMatrix::identity(r, r),
        weights,
        power,
        noise_power,
        wmmse_opts,
    )?;
    for p in &mut wmmse.precoders {
        *p = &basis * &*p;
    }
    Ok(MuPrecoder {
        analog_precoder: v_rf,
        digital_precoders: wmmse.precoders.clone(),
        weights: weights.to_vec(),
        wmmse,
    })
}

/// Maps digital coordinates onto the column space of `v_rf`: with
/// `V_RFᴴ V_RF = U Σ Uᴴ`, returns `U_r Σ_r^{-1/2}` over the eigenvalues above
/// `RANK_TOL` times the largest, so that `V_RF` times the result has
/// orthonormal columns. At low SNR the analog descent can steer several RF
/// chains at the same direction, and the digital stage then works in the
/// reduced space instead of inverting a singular Gram matrix.
fn whitening_basis(v_rf: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(&hermitian_part(&(v_rf.adjoint() * v_rf)))?;
    let max = eig.values[0];
    if !(max > 0.0) {
        return Err(BeamError::Singular("analog precoder Gram matrix"));
    }
    let kept: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] > RANK_TOL * max)
        .collect();
    let mut basis = CMatrix::zeros(v_rf.ncols(), kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let s = C64::new(eig.values[i].sqrt().recip(), 0.0);
        basis.set_column(col, &(eig.vectors.column(i) * s));
    }
    Ok(basis)
}

/// Guard added to average rates before inversion.
pub const WEIGHT_EPSILON: f64 = 1e-6;

/// Priority weights ∝ 1/(ε + average rate), normalized to sum to Nu.
pub fn adapt_weights(average_rates: &[f64]) -> Result<Vec<f64>> {
    if average_rates.is_empty() {
        return Err(BeamError::Empty("rate history"));
    }
    if average_rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(BeamError::InvalidParameter(
            "average rates must be finite and nonnegative".into(),
        ));
    }
    let raw: Vec<f64> = average_rates.iter().map(|r| 1.0 / (WEIGHT_EPSILON + r)).collect();
    let total: f64 = raw.iter().sum();
    let nu = average_rates.len() as f64;
    Ok(raw.into_iter().map(|b| b * nu / total).collect())
}

/// Interference-free rate of each user when it alone gets the full power
/// with matched-filter transmission, `mean_k log2(1 + P‖h_n[k]‖²/σ²)`.
pub fn single_user_rates(channel: &MultiuserChannel, power: f64, noise_power: f64) -> Vec<f64> {
    let k = channel.num_subcarriers() as f64;
    (0..channel.num_users())
        .map(|n| {
            channel
                .per_subcarrier
                .iter()
                .map(|h| (1.0 + power * h.row(n).norm_squared() / noise_power).log2())
                .sum::<f64>()
                / k
        })
        .collect()
}

/// Static priority weights ∝ 1/expected rate for placed users.
///
/// The expectation is a Monte Carlo average of [`single_user_rates`] over
/// `samples` fresh small-scale fading draws at the reference `power`.
#[allow(clippy::too_many_arguments)]
pub fn expected_rate_weights<R: Rng + ?Sized>(
    env: &CellEnvironment,
    users: &[UserPlacement],
    num_subcarriers: usize,
    max_delay_fraction: f64,
    power: f64,
    noise_power: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(BeamError::InvalidParameter("sample count must be positive".into()));
    }
    let mut mean = vec![0.0; users.len()];
    for _ in 0..samples {
        let draw = realize_multiuser(env, users, num_subcarriers, max_delay_fraction, rng)?;
        for (m, r) in mean.iter_mut().zip(single_user_rates(&draw, power, noise_power)) {
            *m += r / samples as f64;
        }
    }
    adapt_weights(&mean)
}

/// Per-subcarrier power in watts for a PSD in dBm/Hz spread over `bandwidth_hz`.
pub fn psd_to_subcarrier_power(psd_dbm_hz: f64, bandwidth_hz: f64, num_subcarriers: usize) -> f64 {
    let dbm = psd_dbm_hz + 10.0 * (bandwidth_hz / num_subcarriers as f64).log10();
    10f64.powf((dbm - 30.0) / 10.0)
}
