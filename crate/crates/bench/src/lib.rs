//! Seeded channel fixtures shared by the benchmarks.

use beamkit::channel::{
    realize_channel, sample_multiuser_channel, sample_paths, CellParams, ChannelRealization,
    ClusterParams, MultiuserChannel, HALF_WAVELENGTH,
};
use beamkit::mu_miso::{expected_rate_weights, psd_to_subcarrier_power};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Single-user clustered channel with default cluster parameters.
pub fn su_channel(nt: usize, nr: usize, k: usize, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = sample_paths(&ClusterParams::default(), nt, nr, k, &mut rng)
        .expect("valid fixture parameters");
    realize_channel(&paths, nt, nr, k, HALF_WAVELENGTH).expect("valid fixture parameters")
}

pub struct MuFixture {
    pub channel: MultiuserChannel,
    pub weights: Vec<f64>,
    pub power: f64,
    pub noise: f64,
}

/// One multiuser drop with rate-based user weights at -55 dBm/Hz, transmitting
/// at `psd_dbm_hz` over 32 MHz with noise at -139 dBm/Hz.
pub fn mu_drop(nt: usize, users: usize, k: usize, psd_dbm_hz: f64, seed: u64) -> MuFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = CellParams::default();
    let (env, channel) =
        sample_multiuser_channel(nt, users, k, &params, &mut rng).expect("valid fixture parameters");
    let noise = psd_to_subcarrier_power(-139.0, 32e6, k);
    let reference = psd_to_subcarrier_power(-55.0, 32e6, k);
    let weights = expected_rate_weights(
        &env,
        &channel.users,
        k,
        params.max_delay_fraction,
        reference,
        noise,
        5,
        &mut rng,
    )
    .expect("valid fixture parameters");
    MuFixture {
        channel,
        weights,
        power: psd_to_subcarrier_power(psd_dbm_hz, 32e6, k),
        noise,
    }
}
