//! Spectral-efficiency evaluation, fully-digital baselines and the paired
//! Monte Carlo harness.
//!
//! All rates are in bits/s/Hz. The harness seeds trial `i` with
//! `master_seed + i`, evaluates every method on the same draw and reduces in
//! trial order, so results are reproducible bit for bit regardless of the
//! number of worker threads.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::ChannelRealization;
use crate::error::{BeamError, Result};
use crate::hybrid_su::HybridBeamformer;
use crate::numerics::{
    hermitian_eig, hermitian_part, logdet_psd, svd, water_filling, CMatrix, C64, RANK_TOL,
};

fn check_product(h: &CMatrix, vt: &CMatrix) -> Result<()> {
    if h.ncols() != vt.nrows() {
        return Err(BeamError::Dimension(format!(
            "channel has {} transmit antennas, precoder has {} rows",
            h.ncols(),
            vt.nrows()
        )));
    }
    Ok(())
}

/// Rate with a linear receiver `W_t`:
/// `log2 det(I + C H V_t V_tᴴ Hᴴ / σ²)` with `C` the projector onto span(W_t),
/// computed as `log2 det(WᴴW + WᴴXW/σ²) − log2 det(WᴴW)`.
pub fn rate_su(h: &CMatrix, vt: &CMatrix, wt: &CMatrix, noise_power: f64) -> Result<f64> {
    check_product(h, vt)?;
    if wt.nrows() != h.nrows() {
        return Err(BeamError::Dimension(format!(
            "combiner has {} rows, channel has {} receive antennas",
            wt.nrows(),
            h.nrows()
        )));
    }
    let gram = hermitian_part(&(wt.adjoint() * wt));
    let eig = hermitian_eig(&gram)?;
    let max = eig.values.first().copied().unwrap_or(0.0);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if !(max > 0.0) || min <= RANK_TOL * max {
        return Err(BeamError::RankDeficient {
            what: "combiner",
            ratio: if max > 0.0 { min / max } else { 0.0 },
        });
    }
    let b = wt.adjoint() * h * vt;
    let signal = &gram + &b * b.adjoint() / C64::new(noise_power, 0.0);
    Ok((logdet_psd(&hermitian_part(&signal))? - logdet_psd(&gram)?) / LN_2)
}

/// Rate with an ideal receiver: `log2 det(I + V_tᴴ Hᴴ H V_t / σ²)`.
pub fn rate_su_ideal(h: &CMatrix, vt: &CMatrix, noise_power: f64) -> Result<f64> {
    check_product(h, vt)?;
    let y = h * vt;
    let n = y.ncols();
    let m = CMatrix::identity(n, n) + y.adjoint() * &y / C64::new(noise_power, 0.0);
    Ok(logdet_psd(&hermitian_part(&m))? / LN_2)
}

/// Rates of a spectral channel whose `Ns` strongest squared singular values
/// are `modes`, after water-filling `power` across them.
fn waterfilled_rate(modes: &[f64], power: f64, noise_power: f64) -> Result<(f64, Vec<f64>)> {
    let gains: Vec<f64> = modes.iter().map(|s2| s2 / noise_power).collect();
    if gains.iter().all(|&g| g == 0.0) {
        return Ok((0.0, vec![power / gains.len() as f64; gains.len()]));
    }
    let alloc = water_filling(&gains, power)?;
    let rate = gains
        .iter()
        .zip(&alloc.powers)
        .map(|(g, p)| (1.0 + g * p).log2())
        .sum();
    Ok((rate, alloc.powers))
}

/// Eigen-beamforming with water-filling on every subcarrier.
#[derive(Debug, Clone)]
pub struct DigitalBaseline {
    pub per_subcarrier_rates: Vec<f64>,
    pub mean_rate: f64,
    /// Nt × Ns precoders.
    pub precoders: Vec<CMatrix>,
}

pub fn fully_digital_baseline(
    channels: &[CMatrix],
    num_streams: usize,
    power: f64,
    noise_power: f64,
) -> Result<DigitalBaseline> {
    if channels.is_empty() {
        return Err(BeamError::Empty("channel list"));
    }
    let mut rates = Vec::with_capacity(channels.len());
    let mut precoders = Vec::with_capacity(channels.len());
    for h in channels {
        if num_streams == 0 || num_streams > h.nrows().min(h.ncols()) {
            return Err(BeamError::InvalidParameter(format!(
                "{num_streams} streams exceed the {}x{} channel",
                h.nrows(),
                h.ncols()
            )));
        }
        let dec = svd(h)?;
        let modes: Vec<f64> = dec.singular_values[..num_streams].iter().map(|s| s * s).collect();
        let (rate, powers) = waterfilled_rate(&modes, power, noise_power)?;
        let mut v = dec.v.columns(0, num_streams).into_owned();
        for (c, p) in powers.iter().enumerate() {
            let mut col = v.column_mut(c);
            col *= C64::new(p.sqrt(), 0.0);
        }
        rates.push(rate);
        precoders.push(v);
    }
    let mean_rate = rates.iter().sum::<f64>() / rates.len() as f64;
    Ok(DigitalBaseline {
        per_subcarrier_rates: rates,
        mean_rate,
        precoders,
    })
}

/// Fully-digital mean rate from the path factorization `A_r diag(α[k]) A_tᴴ`.
///
/// Both steering matrices are reduced by QR once; each subcarrier then needs
/// only the singular values of a core of size at most L × L.
pub fn fully_digital_rate_factored(
    channel: &ChannelRealization,
    num_streams: usize,
    power: f64,
    noise_power: f64,
) -> Result<f64> {
    let (nt, nr) = (channel.nt(), channel.nr());
    let k_total = channel.num_subcarriers();
    if k_total == 0 {
        return Err(BeamError::Empty("channel list"));
    }
    if num_streams == 0 || num_streams > nt.min(nr) {
        return Err(BeamError::InvalidParameter(format!(
            "{num_streams} streams exceed the {nr}x{nt} channel"
        )));
    }
    let r_r = channel.ar.clone().qr().r();
    let r_t = channel.at.clone().qr().r();
    let mut total = 0.0;
    for k in 1..=k_total {
        let alpha = channel.paths.subcarrier_gains(k, k_total);
        let mut scaled = r_r.clone();
        for (p, a) in alpha.iter().enumerate() {
            let mut col = scaled.column_mut(p);
            col *= *a;
        }
        let core = scaled * r_t.adjoint();
        let mut sv: Vec<f64> = core.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv.resize(num_streams.max(sv.len()), 0.0);
        let modes: Vec<f64> = sv[..num_streams].iter().map(|s| s * s).collect();
        total += waterfilled_rate(&modes, power, noise_power)?.0;
    }
    Ok(total / k_total as f64)
}

/// Per-subcarrier and mean rate of one evaluated design.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_subcarrier_rates: Vec<f64>,
    pub mean_rate: f64,
    /// Per-user rates averaged over subcarriers (multiuser mode only).
    pub per_user_rates: Vec<f64>,
    pub metadata: ReportMetadata,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportMetadata {
    pub scenario: String,
    pub seed: u64,
    pub method: String,
}

impl RateReport {
    pub fn from_subcarrier_rates(rates: Vec<f64>, metadata: ReportMetadata) -> Self {
        let mean_rate = if rates.is_empty() {
            0.0
        } else {
            rates.iter().sum::<f64>() / rates.len() as f64
        };
        Self {
            per_subcarrier_rates: rates,
            mean_rate,
            per_user_rates: Vec::new(),
            metadata,
        }
    }
}

/// Mean rate of a hybrid transceiver with its own combiners. Streams with
/// zero allocated power are left out of the evaluation.
pub fn hybrid_rate(channels: &[CMatrix], bf: &HybridBeamformer, noise_power: f64) -> Result<f64> {
    Ok(hybrid_rates(channels, bf, noise_power)?.iter().sum::<f64>() / channels.len() as f64)
}

pub fn hybrid_rates(
    channels: &[CMatrix],
    bf: &HybridBeamformer,
    noise_power: f64,
) -> Result<Vec<f64>> {
    if channels.len() != bf.num_subcarriers() || channels.is_empty() {
        return Err(BeamError::Dimension(format!(
            "{} channels for a design with {} subcarriers",
            channels.len(),
            bf.num_subcarriers()
        )));
    }
    channels
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let (vt, wt) = active_streams(&bf.precoder(k), &bf.combiner(k));
            if vt.ncols() == 0 {
                Ok(0.0)
            } else {
                rate_su(h, &vt, &wt, noise_power)
            }
        })
        .collect()
}

/// Drops streams that water-filling left without power. Their precoder
/// columns are exactly zero, and so are the matching MMSE combiner columns.
fn active_streams(vt: &CMatrix, wt: &CMatrix) -> (CMatrix, CMatrix) {
    let keep: Vec<usize> = (0..vt.ncols())
        .filter(|&s| vt.column(s).iter().any(|z| *z != C64::new(0.0, 0.0)))
        .collect();
    if keep.len() == vt.ncols() {
        return (vt.clone(), wt.clone());
    }
    (vt.select_columns(keep.iter()), wt.select_columns(keep.iter()))
}

/// Aggregate of one method over the trials of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodStats {
    pub mean: f64,
    /// Sample standard deviation over √trials; 0 with fewer than two trials.
    pub stderr: f64,
    /// Successful trials.
    pub trials: usize,
    pub failed: usize,
    /// Per-trial values in trial order, `None` for failed trials.
    pub values: Vec<Option<f64>>,
}

impl MethodStats {
    pub fn from_values(values: Vec<Option<f64>>) -> Self {
        let ok: Vec<f64> = values.iter().flatten().copied().collect();
        let n = ok.len();
        let mean = if n == 0 { f64::NAN } else { ok.iter().sum::<f64>() / n as f64 };
        let stderr = if n < 2 {
            0.0
        } else {
            let var = ok.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self {
            mean,
            stderr,
            trials: n,
            failed: values.len() - n,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis: f64,
    pub methods: BTreeMap<String, MethodStats>,
}

/// Per-method statistics along one sweep axis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub axis_name: String,
    pub points: Vec<SweepPoint>,
}

/// Trial configuration of the paired Monte Carlo harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub trials: usize,
    pub master_seed: u64,
    /// ChaCha stream selector, keeping sweep points statistically independent.
    pub stream: u64,
    /// Worker cap; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl MonteCarlo {
    /// Generator of trial `index`.
    pub fn trial_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed.wrapping_add(index as u64));
        rng.set_stream(self.stream);
        rng
    }

    /// Evaluates `f` on every trial and returns the outputs in trial order.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
    {
        if self.trials == 0 {
            return Err(BeamError::InvalidParameter("trials must be positive".into()));
        }
        let job = || -> Vec<T> {
            (0..self.trials)
                .into_par_iter()
                .map(|i| f(i, &mut self.trial_rng(i)))
                .collect()
        };
        match self.threads {
            Some(n) => Ok(rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| BeamError::InvalidParameter(format!("thread pool: {e}")))?
                .install(job)),
            None => Ok(job()),
        }
    }

    /// Runs `evaluate` on every trial and aggregates per method.
    ///
    /// `evaluate` draws the trial's random inputs from the supplied generator
    /// and returns one outcome per entry of `methods`, in that order. An
    /// outer error marks the trial failed for every method.
    pub fn run<F>(&self, methods: &[String], evaluate: F) -> Result<BTreeMap<String, MethodStats>>
    where
        F: Fn(usize, &mut ChaCha8Rng) -> Result<Vec<Result<f64>>> + Sync,
    {
        let rows = self.map(|i, rng| match evaluate(i, rng) {
            Ok(outcomes) => {
                let mut row: Vec<Option<f64>> = outcomes.into_iter().map(|r| r.ok()).collect();
                row.resize(methods.len(), None);
                row
            }
            Err(_) => vec![None; methods.len()],
        })?;
        Ok(methods
            .iter()
            .enumerate()
            .map(|(m, name)| {
                let values = rows.iter().map(|row| row[m]).collect();
                (name.clone(), MethodStats::from_values(values))
            })
            .collect())
    }
}

/// Empirical CDF: sorted samples paired with plotting positions i/n.
pub fn rate_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(BeamError::Empty("rate samples"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(BeamError::NonFinite);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, x)| (x, (i + 1) as f64 / n))
        .collect())
}
