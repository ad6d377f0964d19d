use super::{digital_precoder, mmse_combiner, mmse_combiner_min_norm, HybridBeamformer};
use crate::channel::ChannelRealization;
use crate::error::{BeamError, Result};
use crate::numerics::{water_filling, CMatrix, C64};

/// Indices of the `count` strongest paths by |α|², ties broken by path index.
fn strongest_paths(gains: &[C64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].norm_sqr().total_cmp(&gains[a].norm_sqr()));
    order.truncate(count);
    order
}

/// Large-array design that beams along the strongest propagation paths.
///
/// The analog stages are the transmit and receive steering vectors of the
/// `num_streams` paths with the largest gain, scaled to unit-modulus entries.
/// Per subcarrier the streams get water-filled powers on their effective
/// gains `‖H[k] v_i‖² / (σ² ‖v_i‖²)`, and the receiver uses MMSE digital
/// combiners.
pub fn asymptotic_design(
    channel: &ChannelRealization,
    num_streams: usize,
    power: f64,
    noise_power: f64,
) -> Result<HybridBeamformer> {
    asymptotic_design_with_rf(channel, num_streams, num_streams, power, noise_power)
}

/// Steering-vector design with `num_rf ≥ num_streams` RF chains.
///
/// The analog stages take the `num_rf` strongest paths. With
/// `num_rf == num_streams` this is [`asymptotic_design`]. Otherwise the
/// digital precoders are the water-filled eigen-precoders of the effective
/// channels and the combiners are MMSE.
pub fn asymptotic_design_with_rf(
    channel: &ChannelRealization,
    num_rf: usize,
    num_streams: usize,
    power: f64,
    noise_power: f64,
) -> Result<HybridBeamformer> {
    let paths = &channel.paths;
    if num_streams == 0 || num_rf < num_streams {
        return Err(BeamError::InvalidParameter(format!(
            "need 0 < Ns <= N_RF, got Ns = {num_streams}, N_RF = {num_rf}"
        )));
    }
    if paths.len() < num_rf {
        return Err(BeamError::InvalidParameter(format!(
            "{} paths cannot feed {num_rf} RF chains",
            paths.len()
        )));
    }
    if !(power > 0.0 && noise_power > 0.0) {
        return Err(BeamError::InvalidParameter(
            "power and noise power must be positive".into(),
        ));
    }
    let (nt, nr) = (channel.nt(), channel.nr());
    let selected = strongest_paths(&paths.gains, num_rf);
    let pick = |m: &CMatrix, n: usize| {
        CMatrix::from_fn(m.nrows(), selected.len(), |i, c| {
            m[(i, selected[c])] * (n as f64).sqrt()
        })
    };
    let v_rf = pick(&channel.at, nt);
    let w_rf = pick(&channel.ar, nr);

    let gamma = (power / (nt * num_streams) as f64).sqrt();
    if num_rf > num_streams {
        let mut digital_precoders = Vec::with_capacity(channel.num_subcarriers());
        let mut digital_combiners = Vec::with_capacity(channel.num_subcarriers());
        for h in &channel.per_subcarrier {
            let vd = digital_precoder(h, &v_rf, num_streams, power, noise_power, false)?;
            let vt = &v_rf * &vd;
            digital_combiners.push(mmse_combiner_min_norm(h, &vt, &w_rf, noise_power)?);
            digital_precoders.push(vd);
        }
        return Ok(HybridBeamformer {
            analog_precoder: v_rf,
            digital_precoders,
            analog_combiner: w_rf,
            digital_combiners,
            gamma,
        });
    }

    let mut digital_precoders = Vec::with_capacity(channel.num_subcarriers());
    let mut digital_combiners = Vec::with_capacity(channel.num_subcarriers());
    for h in &channel.per_subcarrier {
        let hv = h * &v_rf;
        let gains: Vec<f64> = (0..num_streams)
            .map(|i| hv.column(i).norm_squared() / (noise_power * nt as f64))
            .collect();
        let powers = if gains.iter().all(|&g| g == 0.0) {
            vec![power / num_streams as f64; num_streams]
        } else {
            water_filling(&gains, power)?.powers
        };
        let vd = CMatrix::from_diagonal(
            &powers
                .iter()
                .map(|p| C64::new((p / nt as f64).sqrt(), 0.0))
                .collect::<Vec<_>>()
                .into(),
        );
        let vt = &v_rf * &vd;
        digital_combiners.push(mmse_combiner(h, &vt, &w_rf, noise_power)?);
        digital_precoders.push(vd);
    }

    Ok(HybridBeamformer {
        analog_precoder: v_rf,
        digital_precoders,
        analog_combiner: w_rf,
        digital_combiners,
        gamma,
    })
}
