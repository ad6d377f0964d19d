use crate::error::{BeamError, Result};
use crate::numerics::{
    hermitian_eig, hermitian_part, inverse_sqrt_pd, solve_pd, svd, water_filling, CMatrix, C64,
    RANK_TOL,
};

/// Per-subcarrier digital precoder for a fixed analog precoder.
///
/// With Q = V_RFᴴ V_RF and the whitened effective channel H V_RF Q^{-1/2},
/// the precoder is `Q^{-1/2} U_e Γ_e`: U_e holds the `num_streams` dominant
/// right singular vectors and Γ_e the water-filling (or equal) amplitudes.
/// The transmit power `Tr(V_RF V_D V_Dᴴ V_RFᴴ)` equals `power` exactly.
pub fn digital_precoder(
    h: &CMatrix,
    v_rf: &CMatrix,
    num_streams: usize,
    power: f64,
    noise_power: f64,
    equal_power: bool,
) -> Result<CMatrix> {
    if h.ncols() != v_rf.nrows() {
        return Err(BeamError::Dimension(format!(
            "channel has {} transmit antennas, analog precoder has {} rows",
            h.ncols(),
            v_rf.nrows()
        )));
    }
    if num_streams == 0 || num_streams > v_rf.ncols().min(h.nrows()) {
        return Err(BeamError::InvalidParameter(format!(
            "{num_streams} streams do not fit {} RF chains and {} receive antennas",
            v_rf.ncols(),
            h.nrows()
        )));
    }
    if !(power > 0.0 && noise_power > 0.0) {
        return Err(BeamError::InvalidParameter(
            "power and noise power must be positive".into(),
        ));
    }
    let q = v_rf.adjoint() * v_rf;
    let q_isqrt = inverse_sqrt_pd(&q, "analog precoder Gram matrix")?;
    let dec = svd(&(h * v_rf * &q_isqrt))?;

    let gains: Vec<f64> = dec.singular_values[..num_streams]
        .iter()
        .map(|s| s * s / noise_power)
        .collect();
    let powers = if equal_power || gains.iter().all(|&g| g == 0.0) {
        vec![power / num_streams as f64; num_streams]
    } else {
        water_filling(&gains, power)?.powers
    };

    let mut vd = q_isqrt * dec.v.columns(0, num_streams);
    for (s, p) in powers.iter().enumerate() {
        let mut col = vd.column_mut(s);
        col *= C64::new(p.sqrt(), 0.0);
    }
    Ok(vd)
}

/// MMSE digital combiner `J⁻¹ W_RFᴴ H V_t` for a fixed analog combiner, with
/// `J = W_RFᴴ H V_t V_tᴴ Hᴴ W_RF + σ² W_RFᴴ W_RF`.
pub fn mmse_combiner(
    h: &CMatrix,
    vt: &CMatrix,
    w_rf: &CMatrix,
    noise_power: f64,
) -> Result<CMatrix> {
    if h.nrows() != w_rf.nrows() || h.ncols() != vt.nrows() {
        return Err(BeamError::Dimension(format!(
            "channel {}x{} incompatible with combiner {} rows and precoder {} rows",
            h.nrows(),
            h.ncols(),
            w_rf.nrows(),
            vt.nrows()
        )));
    }
    if !(noise_power > 0.0) {
        return Err(BeamError::InvalidParameter("noise power must be positive".into()));
    }
    let b = w_rf.adjoint() * h * vt;
    let j = &b * b.adjoint() + w_rf.adjoint() * w_rf * C64::new(noise_power, 0.0);
    solve_pd(&j, &b, "MMSE receive covariance")
}

/// MMSE combiner that tolerates a rank-deficient analog combiner.
///
/// When `W_RF` has linearly dependent columns, `J` is singular but the
/// right-hand side lies in its range, and the minimum-norm solution `J⁺ b`
/// yields the MMSE combiner over span(W_RF). Full-rank inputs give exactly
/// [`mmse_combiner`].
pub fn mmse_combiner_min_norm(
    h: &CMatrix,
    vt: &CMatrix,
    w_rf: &CMatrix,
    noise_power: f64,
) -> Result<CMatrix> {
    match mmse_combiner(h, vt, w_rf, noise_power) {
        Err(BeamError::Singular(_)) => {}
        other => return other,
    }
    let b = w_rf.adjoint() * h * vt;
    let j = hermitian_part(&(&b * b.adjoint() + w_rf.adjoint() * w_rf * C64::new(noise_power, 0.0)));
    let eig = hermitian_eig(&j)?;
    let cutoff = RANK_TOL * eig.values.first().copied().unwrap_or(0.0);
    let mut scaled = eig.vectors.clone();
    for (c, &lambda) in eig.values.iter().enumerate() {
        let inv = if lambda > cutoff { 1.0 / lambda } else { 0.0 };
        let mut col = scaled.column_mut(c);
        col *= C64::new(inv, 0.0);
    }
    Ok(scaled * (eig.vectors.adjoint() * b))
}
