//! Clustered geometric mmWave channels for OFDM systems.
//!
//! A single-user realization sums `Nc × Nsc` rank-one paths between two
//! uniform linear arrays; each cluster carries a delay that rotates its
//! paths' phases across subcarriers. Multiuser drops place single-antenna
//! users on a disc around the base station, attach each to one cluster of a
//! shared scattering environment and scale the channel by the distance
//! pathloss.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{BeamError, Result};
use crate::numerics::{CMatrix, CVector, C64};

/// Half-wavelength element spacing.
pub const HALF_WAVELENGTH: f64 = 0.5;

/// Statistics of the clustered single-user channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    pub num_clusters: usize,
    pub scatterers_per_cluster: usize,
    /// Standard deviation of the Laplacian angle offsets within a cluster.
    pub angular_spread: f64,
    /// Cluster delays are drawn uniformly from `[0, max_delay_fraction · K]`.
    pub max_delay_fraction: f64,
    pub antenna_spacing: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            num_clusters: 5,
            scatterers_per_cluster: 10,
            angular_spread: 10f64.to_radians(),
            max_delay_fraction: 0.25,
            antenna_spacing: HALF_WAVELENGTH,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_clusters == 0 || self.scatterers_per_cluster == 0 {
            return Err(BeamError::InvalidParameter(
                "cluster and scatterer counts must be positive".into(),
            ));
        }
        if !(self.angular_spread.is_finite() && self.angular_spread >= 0.0) {
            return Err(BeamError::InvalidParameter(
                "angular spread must be finite and nonnegative".into(),
            ));
        }
        if !(self.max_delay_fraction.is_finite() && self.max_delay_fraction >= 0.0) {
            return Err(BeamError::InvalidParameter(
                "max delay fraction must be finite and nonnegative".into(),
            ));
        }
        if !(self.antenna_spacing.is_finite() && self.antenna_spacing > 0.0) {
            return Err(BeamError::InvalidParameter(
                "antenna spacing must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn num_paths(&self) -> usize {
        self.num_clusters * self.scatterers_per_cluster
    }
}

/// ULA steering vector: entry n is `exp(j 2π d n sin φ) / √N`.
pub fn ula_response(angle: f64, num_antennas: usize, spacing: f64) -> CVector {
    let scale = 1.0 / (num_antennas as f64).sqrt();
    let step = 2.0 * PI * spacing * angle.sin();
    CVector::from_fn(num_antennas, |n, _| C64::from_polar(scale, step * n as f64))
}

/// Path parameters of one realization. Path `p` belongs to cluster
/// `p / scatterers_per_cluster`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub num_clusters: usize,
    pub scatterers_per_cluster: usize,
    pub gains: Vec<C64>,
    pub aoa: Vec<f64>,
    pub aod: Vec<f64>,
    /// Normalized delay ψ_c per cluster.
    pub cluster_delays: Vec<f64>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn cluster_of(&self, path: usize) -> usize {
        path / self.scatterers_per_cluster
    }

    /// Path gains rotated by their cluster's delay at subcarrier `k` (1-based).
    pub fn subcarrier_gains(&self, k: usize, num_subcarriers: usize) -> Vec<C64> {
        self.gains
            .iter()
            .enumerate()
            .map(|(p, &g)| {
                let theta = 2.0 * PI * self.cluster_delays[self.cluster_of(p)] * k as f64
                    / num_subcarriers as f64;
                g * C64::from_polar(1.0, -theta)
            })
            .collect()
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Zero-mean Laplacian with the given standard deviation.
fn laplacian<R: Rng + ?Sized>(rng: &mut R, std_dev: f64) -> f64 {
    let scale = std_dev / SQRT_2;
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(2.0 * PI)
}

/// Draws cluster means, Laplacian offsets, complex gains and cluster delays.
pub fn sample_paths<R: Rng + ?Sized>(
    params: &ClusterParams,
    nt: usize,
    nr: usize,
    num_subcarriers: usize,
    rng: &mut R,
) -> Result<PathSet> {
    params.validate()?;
    let nc = params.num_clusters;
    let nsc = params.scatterers_per_cluster;
    let variance = (nt * nr) as f64 / (nc * nsc) as f64;
    let max_delay = params.max_delay_fraction * num_subcarriers as f64;

    let mut gains = Vec::with_capacity(nc * nsc);
    let mut aoa = Vec::with_capacity(nc * nsc);
    let mut aod = Vec::with_capacity(nc * nsc);
    let mut cluster_delays = Vec::with_capacity(nc);
    for _ in 0..nc {
        let mean_aoa = rng.random::<f64>() * 2.0 * PI;
        let mean_aod = rng.random::<f64>() * 2.0 * PI;
        cluster_delays.push(rng.random::<f64>() * max_delay);
        for _ in 0..nsc {
            aoa.push(wrap_angle(mean_aoa + laplacian(rng, params.angular_spread)));
            aod.push(wrap_angle(mean_aod + laplacian(rng, params.angular_spread)));
            gains.push(complex_gaussian(rng, variance));
        }
    }
    Ok(PathSet {
        num_clusters: nc,
        scatterers_per_cluster: nsc,
        gains,
        aoa,
        aod,
        cluster_delays,
    })
}

/// Per-subcarrier channel matrices together with their generating factors.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `H[k]`, Nr × Nt, for subcarriers k = 1..K stored at index k − 1.
    pub per_subcarrier: Vec<CMatrix>,
    pub paths: PathSet,
    /// Nt × L transmit steering vectors.
    pub at: CMatrix,
    /// Nr × L receive steering vectors.
    pub ar: CMatrix,
}

impl ChannelRealization {
    pub fn nt(&self) -> usize {
        self.at.nrows()
    }

    pub fn nr(&self) -> usize {
        self.ar.nrows()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.per_subcarrier.len()
    }
}

fn steering_matrix(angles: &[f64], n: usize, spacing: f64) -> CMatrix {
    let mut m = CMatrix::zeros(n, angles.len());
    for (p, &a) in angles.iter().enumerate() {
        m.set_column(p, &ula_response(a, n, spacing));
    }
    m
}

/// `A_r diag(α[k]) A_tᴴ`.
fn compact_channel(ar: &CMatrix, at: &CMatrix, alpha: &[C64]) -> CMatrix {
    let mut scaled = ar.clone();
    for (p, a) in alpha.iter().enumerate() {
        let mut col = scaled.column_mut(p);
        col *= *a;
    }
    scaled * at.adjoint()
}

/// Channel at subcarrier `k` (1-based) as an explicit sum of rank-one paths.
pub fn channel_sum_form(
    paths: &PathSet,
    nt: usize,
    nr: usize,
    k: usize,
    num_subcarriers: usize,
    spacing: f64,
) -> CMatrix {
    let mut h = CMatrix::zeros(nr, nt);
    for p in 0..paths.len() {
        let c = paths.cluster_of(p);
        let phase = C64::from_polar(
            1.0,
            -2.0 * PI * paths.cluster_delays[c] * k as f64 / num_subcarriers as f64,
        );
        let a_r = ula_response(paths.aoa[p], nr, spacing);
        let a_t = ula_response(paths.aod[p], nt, spacing);
        h += (a_r * a_t.adjoint()) * (paths.gains[p] * phase);
    }
    h
}

/// Builds `H[k]` for k = 1..K from the compact factorization. Debug builds
/// cross-check every subcarrier against the path-sum form.
pub fn realize_channel(
    paths: &PathSet,
    nt: usize,
    nr: usize,
    num_subcarriers: usize,
    spacing: f64,
) -> Result<ChannelRealization> {
    if nt == 0 || nr == 0 || num_subcarriers == 0 {
        return Err(BeamError::InvalidParameter(
            "antenna and subcarrier counts must be positive".into(),
        ));
    }
    if paths.is_empty() || paths.aoa.len() != paths.len() || paths.aod.len() != paths.len() {
        return Err(BeamError::Dimension("inconsistent path set".into()));
    }
    let at = steering_matrix(&paths.aod, nt, spacing);
    let ar = steering_matrix(&paths.aoa, nr, spacing);
    let per_subcarrier: Vec<CMatrix> = (1..=num_subcarriers)
        .map(|k| compact_channel(&ar, &at, &paths.subcarrier_gains(k, num_subcarriers)))
        .collect();

    if cfg!(debug_assertions) {
        for (idx, h) in per_subcarrier.iter().enumerate() {
            let direct = channel_sum_form(paths, nt, nr, idx + 1, num_subcarriers, spacing);
            let err = (&direct - h).norm();
            debug_assert!(
                err <= 1e-10 * h.norm().max(1e-300),
                "compact and sum forms disagree at subcarrier {}: {err:e}",
                idx + 1
            );
        }
    }

    Ok(ChannelRealization {
        per_subcarrier,
        paths: paths.clone(),
        at,
        ar,
    })
}

/// Distance pathloss in dB for a distance in kilometres.
pub fn pathloss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km.is_finite() && distance_km > 0.0) {
        return Err(BeamError::InvalidParameter(format!(
            "distance must be positive, got {distance_km}"
        )));
    }
    Ok(128.1 + 37.6 * distance_km.log10())
}

/// Parameters of the multiuser cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    pub num_env_clusters: usize,
    pub scatterers_per_cluster: usize,
    pub angular_spread: f64,
    pub radius_km: f64,
    pub min_distance_km: f64,
    /// Per-path delays are drawn uniformly from `[0, max_delay_fraction · K]`.
    pub max_delay_fraction: f64,
    pub antenna_spacing: f64,
}

impl Default for CellParams {
    fn default() -> Self {
        Self {
            num_env_clusters: 10,
            scatterers_per_cluster: 10,
            angular_spread: 10f64.to_radians(),
            radius_km: 0.2,
            min_distance_km: 0.01,
            max_delay_fraction: 0.25,
            antenna_spacing: HALF_WAVELENGTH,
        }
    }
}

impl CellParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_env_clusters == 0 || self.scatterers_per_cluster == 0 {
            return Err(BeamError::InvalidParameter(
                "cluster and scatterer counts must be positive".into(),
            ));
        }
        if !(self.radius_km.is_finite() && self.radius_km >= 0.0) {
            return Err(BeamError::InvalidParameter("radius must be nonnegative".into()));
        }
        if !(self.min_distance_km.is_finite() && self.min_distance_km > 0.0) {
            return Err(BeamError::InvalidParameter(
                "minimum distance must be positive".into(),
            ));
        }
        if !(self.max_delay_fraction.is_finite() && self.max_delay_fraction >= 0.0) {
            return Err(BeamError::InvalidParameter(
                "max delay fraction must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Transmit-side scattering clusters shared by every user in the cell.
#[derive(Debug, Clone)]
pub struct CellEnvironment {
    /// Per cluster, Nt × Nsc steering vectors.
    pub cluster_responses: Vec<CMatrix>,
    pub mean_angles: Vec<f64>,
}

impl CellEnvironment {
    pub fn sample<R: Rng + ?Sized>(nt: usize, params: &CellParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        if nt == 0 {
            return Err(BeamError::InvalidParameter("Nt must be positive".into()));
        }
        let mut cluster_responses = Vec::with_capacity(params.num_env_clusters);
        let mut mean_angles = Vec::with_capacity(params.num_env_clusters);
        for _ in 0..params.num_env_clusters {
            let mean = rng.random::<f64>() * 2.0 * PI;
            let angles: Vec<f64> = (0..params.scatterers_per_cluster)
                .map(|_| wrap_angle(mean + laplacian(rng, params.angular_spread)))
                .collect();
            mean_angles.push(mean);
            cluster_responses.push(steering_matrix(&angles, nt, params.antenna_spacing));
        }
        Ok(Self {
            cluster_responses,
            mean_angles,
        })
    }

    pub fn nt(&self) -> usize {
        self.cluster_responses[0].nrows()
    }
}

/// Large-scale placement of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPlacement {
    pub distance_km: f64,
    pub cluster: usize,
}

impl UserPlacement {
    /// Uniform position on the disc (distance floored at the minimum) and a
    /// uniformly chosen environment cluster.
    pub fn sample<R: Rng + ?Sized>(params: &CellParams, rng: &mut R) -> Self {
        let distance = params.radius_km * rng.random::<f64>().sqrt();
        let cluster = rng.random_range(0..params.num_env_clusters);
        Self {
            distance_km: distance.max(params.min_distance_km),
            cluster,
        }
    }
}

/// Downlink channels of a set of single-antenna users.
#[derive(Debug, Clone)]
pub struct MultiuserChannel {
    /// Stacked `H[k] = [h_1[k], …, h_Nu[k]]ᴴ`, Nu × Nt, index k − 1.
    pub per_subcarrier: Vec<CMatrix>,
    pub users: Vec<UserPlacement>,
    pub pathloss_db: Vec<f64>,
    /// Small-scale gains per user, one per scatterer of the user's cluster.
    pub gains: Vec<Vec<C64>>,
    /// Normalized delay per user and scatterer.
    pub delays: Vec<Vec<f64>>,
}

impl MultiuserChannel {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn nt(&self) -> usize {
        self.per_subcarrier[0].ncols()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.per_subcarrier.len()
    }

    /// Column vector `h_n[k]` (the user's channel row is its adjoint).
    pub fn user_channel(&self, user: usize, k_index: usize) -> CVector {
        self.per_subcarrier[k_index].row(user).adjoint()
    }
}

/// Draws small-scale fading for already placed users. Users in the same
/// cluster share transmit steering vectors; gains and delays are independent.
pub fn realize_multiuser<R: Rng + ?Sized>(
    env: &CellEnvironment,
    users: &[UserPlacement],
    num_subcarriers: usize,
    max_delay_fraction: f64,
    rng: &mut R,
) -> Result<MultiuserChannel> {
    if users.is_empty() {
        return Err(BeamError::Empty("user set"));
    }
    if num_subcarriers == 0 {
        return Err(BeamError::InvalidParameter(
            "subcarrier count must be positive".into(),
        ));
    }
    let nt = env.nt();
    let max_delay = max_delay_fraction * num_subcarriers as f64;
    let mut per_subcarrier = vec![CMatrix::zeros(users.len(), nt); num_subcarriers];
    let mut pathloss = Vec::with_capacity(users.len());
    let mut all_gains = Vec::with_capacity(users.len());
    let mut all_delays = Vec::with_capacity(users.len());

    for (n, user) in users.iter().enumerate() {
        let responses = env.cluster_responses.get(user.cluster).ok_or_else(|| {
            BeamError::InvalidParameter(format!("user {n} refers to unknown cluster"))
        })?;
        let paths = responses.ncols();
        let pl = pathloss_db(user.distance_km)?;
        let amplitude = 10f64.powf(-pl / 20.0);
        let variance = nt as f64 / paths as f64;
        let gains: Vec<C64> = (0..paths).map(|_| complex_gaussian(rng, variance)).collect();
        let delays: Vec<f64> = (0..paths).map(|_| rng.random::<f64>() * max_delay).collect();
        for (idx, h) in per_subcarrier.iter_mut().enumerate() {
            let k = (idx + 1) as f64;
            // h_nᴴ[k] = Σ α e^{-jθ} a_tᴴ, i.e. h_n[k] = Σ conj(α e^{-jθ}) a_t.
            let mut column = CVector::zeros(nt);
            for p in 0..paths {
                let rot = C64::from_polar(
                    amplitude,
                    -2.0 * PI * delays[p] * k / num_subcarriers as f64,
                );
                column.axpy((gains[p] * rot).conj(), &responses.column(p), C64::new(1.0, 0.0));
            }
            h.set_row(n, &column.adjoint());
        }
        pathloss.push(pl);
        all_gains.push(gains);
        all_delays.push(delays);
    }

    Ok(MultiuserChannel {
        per_subcarrier,
        users: users.to_vec(),
        pathloss_db: pathloss,
        gains: all_gains,
        delays: all_delays,
    })
}

/// One independent drop: fresh environment, user positions and fading.
pub fn sample_multiuser_channel<R: Rng + ?Sized>(
    nt: usize,
    num_users: usize,
    num_subcarriers: usize,
    params: &CellParams,
    rng: &mut R,
) -> Result<(CellEnvironment, MultiuserChannel)> {
    if num_users == 0 {
        return Err(BeamError::InvalidParameter("Nu must be positive".into()));
    }
    let env = CellEnvironment::sample(nt, params, rng)?;
    let users: Vec<UserPlacement> = (0..num_users)
        .map(|_| UserPlacement::sample(params, rng))
        .collect();
    let channel = realize_multiuser(&env, &users, num_subcarriers, params.max_delay_fraction, rng)?;
    Ok((env, channel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_vec_close(a: &CVector, b: &[C64]) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn ula_broadside() {
        assert_vec_close(&ula_response(0.0, 4, 0.5), &[c(0.5, 0.0); 4]);
    }

    #[test]
    fn ula_endfire_alternates() {
        let s = 1.0 / 2f64.sqrt();
        assert_vec_close(&ula_response(PI / 2.0, 2, 0.5), &[c(s, 0.0), c(-s, 0.0)]);
    }

    #[test]
    fn ula_thirty_degrees_quarter_turns() {
        assert_vec_close(
            &ula_response(PI / 6.0, 4, 0.5),
            &[c(0.5, 0.0), c(0.0, 0.5), c(-0.5, 0.0), c(0.0, -0.5)],
        );
    }

    #[test]
    fn single_path_gain_variance() {
        let params = ClusterParams {
            num_clusters: 1,
            scatterers_per_cluster: 1,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (nt, nr) = (8, 4);
        let draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let p = sample_paths(&params, nt, nr, 16, &mut rng).unwrap();
            assert_eq!(p.len(), 1);
            acc += p.gains[0].norm_sqr();
        }
        let mean = acc / draws as f64;
        let expect = (nt * nr) as f64;
        assert!((mean - expect).abs() < 0.05 * expect, "{mean} vs {expect}");
    }

    #[test]
    fn five_by_ten_environment() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = sample_paths(&ClusterParams::default(), 16, 16, 32, &mut rng).unwrap();
        assert_eq!(p.len(), 50);
        assert_eq!(p.cluster_delays.len(), 5);
        assert!(p.cluster_delays.iter().all(|d| (0.0..=8.0).contains(d)));
        assert!(p.aoa.iter().chain(&p.aod).all(|a| (0.0..2.0 * PI).contains(a)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let params = ClusterParams::default();
        let a = sample_paths(&params, 8, 8, 8, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_paths(&params, 8, 8, 8, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_cluster_has_constant_norm() {
        let params = ClusterParams {
            num_clusters: 1,
            scatterers_per_cluster: 6,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = sample_paths(&params, 8, 6, 16, &mut rng).unwrap();
        let ch = realize_channel(&p, 8, 6, 16, 0.5).unwrap();
        let n0 = ch.per_subcarrier[0].norm();
        for h in &ch.per_subcarrier {
            assert!((h.norm() - n0).abs() < 1e-10 * n0);
        }
    }

    #[test]
    fn zero_delays_are_frequency_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut p = sample_paths(&ClusterParams::default(), 6, 4, 8, &mut rng).unwrap();
        p.cluster_delays.iter_mut().for_each(|d| *d = 0.0);
        let ch = realize_channel(&p, 6, 4, 8, 0.5).unwrap();
        for h in &ch.per_subcarrier[1..] {
            assert!((h - &ch.per_subcarrier[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn compact_form_matches_sum_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let p = sample_paths(&ClusterParams::default(), 12, 7, 16, &mut rng).unwrap();
            let ch = realize_channel(&p, 12, 7, 16, 0.5).unwrap();
            for (idx, h) in ch.per_subcarrier.iter().enumerate() {
                let direct = channel_sum_form(&p, 12, 7, idx + 1, 16, 0.5);
                assert!((&direct - h).norm() <= 1e-10 * h.norm());
            }
            let at_mod = 1.0 / 12f64.sqrt();
            let ar_mod = 1.0 / 7f64.sqrt();
            assert!(ch.at.iter().all(|z| (z.norm() - at_mod).abs() < 1e-14));
            assert!(ch.ar.iter().all(|z| (z.norm() - ar_mod).abs() < 1e-14));
        }
    }

    #[test]
    fn pathloss_values() {
        assert!((pathloss_db(1.0).unwrap() - 128.1).abs() < 1e-12);
        assert!((pathloss_db(0.1).unwrap() - 90.5).abs() < 1e-12);
        let expect = 128.1 + 37.6 * 0.2f64.log10();
        assert!((pathloss_db(0.2).unwrap() - expect).abs() < 1e-12);
        assert!(pathloss_db(0.0).is_err());
        assert!(pathloss_db(-1.0).is_err());
    }

    #[test]
    fn same_cluster_users_share_steering_vectors() {
        let params = CellParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let env = CellEnvironment::sample(16, &params, &mut rng).unwrap();
        let users = [
            UserPlacement { distance_km: 0.05, cluster: 3 },
            UserPlacement { distance_km: 0.15, cluster: 3 },
        ];
        let ch = realize_multiuser(&env, &users, 4, 0.25, &mut rng).unwrap();
        assert_ne!(ch.gains[0], ch.gains[1]);
        let at = &env.cluster_responses[3];
        for (n, user) in users.iter().enumerate() {
            let amp = 10f64.powf(-pathloss_db(user.distance_km).unwrap() / 20.0);
            for k in 0..4 {
                let mut expect = CVector::zeros(16);
                for p in 0..at.ncols() {
                    let rot = C64::from_polar(
                        amp,
                        -2.0 * PI * ch.delays[n][p] * (k + 1) as f64 / 4.0,
                    );
                    expect += at.column(p) * (ch.gains[n][p] * rot).conj();
                }
                let got = ch.user_channel(n, k);
                assert!((got - expect).norm() < 1e-12 * amp * 16.0);
            }
        }
    }

    #[test]
    fn zero_radius_hits_distance_floor() {
        let params = CellParams {
            radius_km: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (_, ch) = sample_multiuser_channel(8, 3, 2, &params, &mut rng).unwrap();
        let floor = pathloss_db(params.min_distance_km).unwrap();
        assert!(ch.pathloss_db.iter().all(|pl| (pl - floor).abs() < 1e-12));
    }

    #[test]
    fn multiuser_reproducible() {
        let params = CellParams::default();
        let a = sample_multiuser_channel(8, 4, 4, &params, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = sample_multiuser_channel(8, 4, 4, &params, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a.1.per_subcarrier, b.1.per_subcarrier);
        assert_eq!(a.1.users, b.1.users);
    }
}
