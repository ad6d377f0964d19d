//! Executes scenarios through the paired Monte Carlo harness and writes CSV.

use std::collections::BTreeMap;
use std::io::{self, Write};

use beamkit::channel::{
    realize_channel, realize_multiuser, sample_multiuser_channel, sample_paths, CellEnvironment,
    CellParams, ClusterParams, MultiuserChannel, UserPlacement, HALF_WAVELENGTH,
};
use beamkit::eval::{
    fully_digital_rate_factored, hybrid_rate, rate_cdf, MonteCarlo, SweepPoint, SweepResult,
};
use beamkit::hybrid_su::{asymptotic_design_with_rf, design_transceiver, AnalogDesignOptions, DesignOptions};
use beamkit::mu_miso::{
    adapt_weights, expected_rate_weights, fully_digital_wmmse, hybrid_mu_design,
    psd_to_subcarrier_power, WmmseOptions, WmmseResult,
};
use beamkit::{BeamError, MuArchitecture, Result};
use log::warn;
use rand::Rng;

use crate::config::{Method, Mode, Scenario, WeightProtocol, FORMAT_VERSION};

/// Empirical CDF of one method's long-term per-user rates.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    pub method: String,
    pub points: Vec<(f64, f64)>,
    /// Cells dropped because a design failed in some slot.
    pub failed_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Sweep(SweepResult),
    Cdf(Vec<CdfCurve>),
}

fn axis_name(mode: Mode) -> &'static str {
    match mode {
        Mode::SuSweepSnr => "snr_db",
        Mode::SuSweepAntennas => "nt",
        Mode::AsymptoticSweep => "n",
        Mode::MuSumRate => "psd_dbm_hz",
        Mode::MuCdf => "rate",
    }
}

/// Runs every sweep point (or every cell, in CDF mode).
pub fn run(scenario: &Scenario, threads: Option<usize>) -> Result<Output> {
    let names: Vec<String> = scenario.methods.iter().map(|m| m.to_string()).collect();
    if scenario.mode == Mode::MuCdf {
        let harness = MonteCarlo {
            trials: scenario.trials,
            master_seed: scenario.seed,
            stream: 0,
            threads,
        };
        return cdf_run(scenario, &names, &harness).map(Output::Cdf);
    }
    let mut points = Vec::with_capacity(scenario.sweep.values.len());
    for (index, &axis) in scenario.sweep.values.iter().enumerate() {
        let harness = MonteCarlo {
            trials: scenario.trials,
            master_seed: scenario.seed,
            stream: index as u64,
            threads,
        };
        let methods = harness.run(&names, |trial, rng| {
            let outcomes = if scenario.mode.is_multiuser() {
                mu_sum_rate_trial(scenario, axis, rng)
            } else {
                su_trial(scenario, axis, rng)
            };
            outcomes.inspect_err(|e| warn!("axis {axis}, trial {trial}: {e}"))
        })?;
        points.push(SweepPoint { axis, methods });
    }
    Ok(Output::Sweep(SweepResult {
        axis_name: axis_name(scenario.mode).to_string(),
        points,
    }))
}

fn cluster_params(s: &Scenario) -> ClusterParams {
    ClusterParams {
        num_clusters: s.channel.num_clusters,
        scatterers_per_cluster: s.channel.scatterers_per_cluster,
        angular_spread: s.channel.angular_spread_deg.to_radians(),
        max_delay_fraction: s.channel.max_delay_fraction,
        antenna_spacing: HALF_WAVELENGTH,
    }
}

fn cell_params(s: &Scenario) -> CellParams {
    CellParams {
        num_env_clusters: s.multiuser.cell_clusters,
        scatterers_per_cluster: s.channel.scatterers_per_cluster,
        angular_spread: s.channel.angular_spread_deg.to_radians(),
        radius_km: s.multiuser.radius_km,
        min_distance_km: s.multiuser.min_distance_km,
        max_delay_fraction: s.channel.max_delay_fraction,
        antenna_spacing: HALF_WAVELENGTH,
    }
}

fn su_trial<R: Rng>(s: &Scenario, axis: f64, rng: &mut R) -> Result<Vec<Result<f64>>> {
    let base = s.su_spec(axis, Method::FullyDigital);
    let k = base.num_subcarriers;
    let paths = sample_paths(&cluster_params(s), base.nt, base.nr, k, rng)?;
    let channel = realize_channel(&paths, base.nt, base.nr, k, HALF_WAVELENGTH)?;
    let init_seed: u64 = rng.random();
    Ok(s.methods
        .iter()
        .map(|&method| {
            let spec = s.su_spec(axis, method);
            let (ns, p, s2) = (spec.num_streams, spec.power, spec.noise_power);
            match method {
                Method::FullyDigital => fully_digital_rate_factored(&channel, ns, p, s2),
                Method::Asymptotic => asymptotic_design_with_rf(&channel, spec.num_rf, ns, p, s2)
                    .and_then(|bf| hybrid_rate(&channel.per_subcarrier, &bf, s2)),
                Method::Hybrid { .. } => {
                    let opts = DesignOptions {
                        analog: AnalogDesignOptions { init_seed, ..Default::default() },
                        equal_power: s.architecture.equal_power,
                    };
                    design_transceiver(&channel.per_subcarrier, &spec, &opts)
                        .and_then(|bf| hybrid_rate(&channel.per_subcarrier, &bf, s2))
                }
                _ => Err(BeamError::InvalidParameter(format!("{method} is a multiuser method"))),
            }
        })
        .collect())
}

/// Keeps the first `antennas` transmit elements of every user channel.
fn truncate_array(channel: &MultiuserChannel, antennas: usize) -> MultiuserChannel {
    MultiuserChannel {
        per_subcarrier: channel
            .per_subcarrier
            .iter()
            .map(|h| h.columns(0, antennas).into_owned())
            .collect(),
        ..channel.clone()
    }
}

/// Designs the digital (or hybrid) MU precoders of one method.
pub fn mu_design(
    method: Method,
    channel: &MultiuserChannel,
    weights: &[f64],
    power: f64,
    noise_power: f64,
    init_seed: u64,
) -> Result<WmmseResult> {
    let opts = WmmseOptions::default();
    match method {
        Method::WmmseDigital { antennas: None } => {
            fully_digital_wmmse(channel, weights, power, noise_power, &opts)
        }
        Method::WmmseDigital { antennas: Some(n) } => {
            fully_digital_wmmse(&truncate_array(channel, n), weights, power, noise_power, &opts)
        }
        Method::WmmseHybrid { num_rf, structure, bits } => {
            let arch = MuArchitecture { num_rf, structure, phase: Method::phase(bits) };
            let analog = AnalogDesignOptions { init_seed, ..Default::default() };
            hybrid_mu_design(channel, &arch, weights, power, noise_power, &analog, &opts)
                .map(|p| p.wmmse)
        }
        _ => Err(BeamError::InvalidParameter(format!("{method} is a single-user method"))),
    }
}

fn mu_sum_rate_trial<R: Rng>(s: &Scenario, psd: f64, rng: &mut R) -> Result<Vec<Result<f64>>> {
    let mu = &s.multiuser;
    let k = s.architecture.num_subcarriers;
    let cell = cell_params(s);
    let (env, channel) = sample_multiuser_channel(s.architecture.nt, mu.num_users, k, &cell, rng)?;
    let noise = psd_to_subcarrier_power(mu.noise_psd_dbm_hz, mu.bandwidth_hz, k);
    let power = psd_to_subcarrier_power(psd, mu.bandwidth_hz, k);
    let weights = match mu.weights {
        WeightProtocol::Static => expected_rate_weights(
            &env,
            &channel.users,
            k,
            cell.max_delay_fraction,
            psd_to_subcarrier_power(mu.reference_psd_dbm_hz, mu.bandwidth_hz, k),
            noise,
            mu.weight_samples,
            rng,
        )?,
        _ => vec![1.0; mu.num_users],
    };
    let init_seed: u64 = rng.random();
    Ok(s.methods
        .iter()
        .map(|&m| {
            mu_design(m, &channel, &weights, power, noise, init_seed).map(|r| r.weighted_sum_rate())
        })
        .collect())
}

/// Long-term average rate of every user of one cell, per method; `None`
/// where the method failed in some slot.
fn cdf_cell<R: Rng>(s: &Scenario, rng: &mut R) -> Result<Vec<Option<Vec<f64>>>> {
    let mu = &s.multiuser;
    let k = s.architecture.num_subcarriers;
    let cell = cell_params(s);
    let env = CellEnvironment::sample(s.architecture.nt, &cell, rng)?;
    let population: Vec<UserPlacement> =
        (0..mu.cell_users).map(|_| UserPlacement::sample(&cell, rng)).collect();
    let noise = psd_to_subcarrier_power(mu.noise_psd_dbm_hz, mu.bandwidth_hz, k);
    let power = psd_to_subcarrier_power(mu.cdf_psd_dbm_hz, mu.bandwidth_hz, k);

    let mut totals = vec![Some(vec![0.0; mu.cell_users]); s.methods.len()];
    for slot in 0..mu.slots {
        let scheduled = rand::seq::index::sample(rng, mu.cell_users, mu.num_users).into_vec();
        let users: Vec<UserPlacement> = scheduled.iter().map(|&i| population[i]).collect();
        let channel = realize_multiuser(&env, &users, k, cell.max_delay_fraction, rng)?;
        let fixed_weights = match mu.weights {
            WeightProtocol::Static => Some(expected_rate_weights(
                &env,
                &users,
                k,
                cell.max_delay_fraction,
                psd_to_subcarrier_power(mu.reference_psd_dbm_hz, mu.bandwidth_hz, k),
                noise,
                mu.weight_samples,
                rng,
            )?),
            WeightProtocol::Equal => Some(vec![1.0; mu.num_users]),
            WeightProtocol::Adaptive => None,
        };
        let init_seed: u64 = rng.random();
        for (&method, total) in s.methods.iter().zip(totals.iter_mut()) {
            let Some(sums) = total else { continue };
            let weights = match &fixed_weights {
                Some(w) => w.clone(),
                None => {
                    let averages: Vec<f64> = scheduled
                        .iter()
                        .map(|&i| if slot == 0 { 0.0 } else { sums[i] / slot as f64 })
                        .collect();
                    adapt_weights(&averages)?
                }
            };
            match mu_design(method, &channel, &weights, power, noise, init_seed) {
                Ok(result) => {
                    for (n, &user) in scheduled.iter().enumerate() {
                        let mean: f64 = result.rates.iter().map(|r| r[n]).sum::<f64>()
                            / result.rates.len() as f64;
                        sums[user] += mean;
                    }
                }
                Err(e) => {
                    warn!("{method}, slot {slot}: {e}");
                    *total = None;
                }
            }
        }
    }
    Ok(totals
        .into_iter()
        .map(|t| t.map(|sums| sums.into_iter().map(|x| x / mu.slots as f64).collect()))
        .collect())
}

fn cdf_run(s: &Scenario, names: &[String], harness: &MonteCarlo) -> Result<Vec<CdfCurve>> {
    let cells = harness.map(|trial, rng| {
        cdf_cell(s, rng).inspect_err(|e| warn!("cell {trial}: {e}"))
    })?;
    let mut by_name: BTreeMap<&str, (Vec<f64>, usize)> =
        names.iter().map(|n| (n.as_str(), (Vec::new(), 0))).collect();
    for cell in &cells {
        for (m, name) in names.iter().enumerate() {
            let entry = by_name.get_mut(name.as_str()).expect("every name is present");
            match cell.as_ref().ok().and_then(|c| c[m].as_ref()) {
                Some(rates) => entry.0.extend_from_slice(rates),
                None => entry.1 += 1,
            }
        }
    }
    by_name
        .into_iter()
        .map(|(name, (samples, failed_cells))| {
            let points = if samples.is_empty() { Vec::new() } else { rate_cdf(&samples)? };
            Ok(CdfCurve { method: name.to_string(), points, failed_cells })
        })
        .collect()
}

/// Writes the versioned CSV for `output`.
pub fn write_csv<W: Write>(output: &Output, w: &mut W) -> io::Result<()> {
    writeln!(w, "# format_version={FORMAT_VERSION}")?;
    match output {
        Output::Sweep(sweep) => {
            writeln!(w, "axis,method,mean_rate,stderr,trials,failed")?;
            for point in &sweep.points {
                for (method, stats) in &point.methods {
                    writeln!(
                        w,
                        "{:.6},{},{:.6},{:.6},{},{}",
                        point.axis, method, stats.mean, stats.stderr, stats.trials, stats.failed
                    )?;
                }
            }
        }
        Output::Cdf(curves) => {
            writeln!(w, "rate,cdf,method")?;
            for curve in curves {
                for (rate, p) in &curve.points {
                    writeln!(w, "{rate:.6},{p:.6},{}", curve.method)?;
                }
            }
        }
    }
    Ok(())
}

/// Renders `output` as a CSV string.
pub fn to_csv(output: &Output) -> String {
    let mut buf = Vec::new();
    write_csv(output, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use rand::SeedableRng;

    fn small_su() -> Scenario {
        parse_config(
            "mode = \"su_sweep_snr\"\nseed = 3\ntrials = 3\n\
             methods = [\"hybrid_full\", \"fully_digital\", \"asymptotic\", \"hybrid_partial:b1\"]\n\
             [architecture]\nnt = 8\nnr = 4\nnum_rf = 2\nnum_streams = 1\nnum_subcarriers = 4\n\
             [channel]\nnum_clusters = 2\nscatterers_per_cluster = 2\n\
             [sweep]\nvalues = [0.0, 10.0]\n",
        )
        .unwrap()
    }

    #[test]
    fn csv_rows_are_axis_major_and_sorted() {
        let csv = to_csv(&run(&small_su(), Some(2)).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# format_version=1");
        assert_eq!(lines[1], "axis,method,mean_rate,stderr,trials,failed");
        let keys: Vec<(&str, &str)> = lines[2..]
            .iter()
            .map(|l| {
                let mut f = l.split(',');
                (f.next().unwrap(), f.next().unwrap())
            })
            .collect();
        assert_eq!(
            keys,
            vec![
                ("0.000000", "asymptotic"),
                ("0.000000", "fully_digital"),
                ("0.000000", "hybrid_full"),
                ("0.000000", "hybrid_partial:b1"),
                ("10.000000", "asymptotic"),
                ("10.000000", "fully_digital"),
                ("10.000000", "hybrid_full"),
                ("10.000000", "hybrid_partial:b1"),
            ]
        );
        assert!(lines[2..].iter().all(|l| l.ends_with(",3,0")));
    }

    #[test]
    fn same_seed_same_csv() {
        let s = small_su();
        assert_eq!(to_csv(&run(&s, Some(1)).unwrap()), to_csv(&run(&s, Some(3)).unwrap()));
    }

    #[test]
    fn cdf_mode_schema() {
        let s = parse_config(
            "mode = \"mu_cdf\"\nseed = 1\ntrials = 2\n\
             methods = [\"wmmse_digital\", \"wmmse_hybrid:rf2\"]\n\
             [architecture]\nnt = 8\nnum_subcarriers = 2\n\
             [multiuser]\nnum_users = 2\ncell_users = 3\nslots = 3\n",
        )
        .unwrap();
        let out = run(&s, None).unwrap();
        let csv = to_csv(&out);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "rate,cdf,method");
        assert_eq!(lines.len(), 2 + 2 * 2 * 3);
        assert!(lines[2].ends_with(",wmmse_digital"));
        assert!(lines.last().unwrap().starts_with(|c: char| c.is_ascii_digit()));
        assert!(lines.last().unwrap().contains(",1.000000,wmmse_hybrid:rf2"));
    }

    #[test]
    fn truncated_array_keeps_leading_columns() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let (_, ch) =
            sample_multiuser_channel(8, 2, 2, &CellParams::default(), &mut rng).unwrap();
        let t = truncate_array(&ch, 3);
        assert_eq!(t.nt(), 3);
        assert_eq!(t.per_subcarrier[1].column(2), ch.per_subcarrier[1].column(2));
    }
}
