use beamkit::channel::{realize_channel, sample_paths, ChannelRealization, ClusterParams, HALF_WAVELENGTH};
use beamkit::eval::{fully_digital_baseline, hybrid_rate, rate_su_ideal};
use beamkit::hybrid_su::{
    analog_objective, average_covariance, design_transceiver, AnalogDesignOptions, DesignOptions,
};
use beamkit::numerics::on_phase_grid;
use beamkit::{ArchitectureSpec, CMatrix, PhaseResolution, Structure, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn channel(seed: u64, nt: usize, nr: usize, k: usize) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = ClusterParams { num_clusters: 3, scatterers_per_cluster: 4, ..Default::default() };
    let paths = sample_paths(&params, nt, nr, k, &mut rng).unwrap();
    realize_channel(&paths, nt, nr, k, HALF_WAVELENGTH).unwrap()
}

fn spec(structure: Structure, phase: PhaseResolution, noise_power: f64) -> ArchitectureSpec {
    ArchitectureSpec {
        nt: 16,
        nr: 8,
        num_rf: 4,
        num_streams: 2,
        num_subcarriers: 4,
        structure,
        phase,
        power: 1.0,
        noise_power,
    }
}

fn opts(seed: u64) -> DesignOptions {
    DesignOptions {
        analog: AnalogDesignOptions { init_seed: seed, ..Default::default() },
        equal_power: false,
    }
}

#[test]
fn outputs_satisfy_all_constraints() {
    let phases = [PhaseResolution::Unbounded, PhaseResolution::Bits(1), PhaseResolution::Bits(3)];
    for seed in 0..100u64 {
        let structure = if seed % 2 == 0 { Structure::FullyConnected } else { Structure::PartiallyConnected };
        let phase = phases[(seed % 3) as usize];
        let s = spec(structure, phase, 0.1);
        let ch = channel(seed, s.nt, s.nr, s.num_subcarriers);
        let bf = design_transceiver(&ch.per_subcarrier, &s, &opts(seed)).unwrap();
        let tx = s.transmit_mask().unwrap();
        let rx = s.receive_mask().unwrap();
        assert!(tx.is_satisfied_by(&bf.analog_precoder, 1e-12));
        assert!(rx.is_satisfied_by(&bf.analog_combiner, 1e-12));
        for (i, j) in tx.entries() {
            assert!(on_phase_grid(bf.analog_precoder[(i, j)], phase));
        }
        for (i, j) in rx.entries() {
            assert!(on_phase_grid(bf.analog_combiner[(i, j)], phase));
        }
        for p in bf.transmit_powers() {
            assert!(p <= s.power * (1.0 + 1e-8));
        }
        if structure == Structure::PartiallyConnected {
            let gram = bf.analog_precoder.adjoint() * &bf.analog_precoder;
            let expect = CMatrix::identity(4, 4) * C64::new(4.0, 0.0);
            assert!((gram - expect).iter().all(|z| z.norm() <= 1e-12));
        }
    }
}

#[test]
fn hybrid_never_beats_fully_digital() {
    for seed in 0..40u64 {
        for structure in [Structure::FullyConnected, Structure::PartiallyConnected] {
            let s = spec(structure, PhaseResolution::Unbounded, 0.05);
            let ch = channel(1000 + seed, s.nt, s.nr, s.num_subcarriers);
            let bf = design_transceiver(&ch.per_subcarrier, &s, &opts(seed)).unwrap();
            let hybrid = hybrid_rate(&ch.per_subcarrier, &bf, s.noise_power).unwrap();
            let digital = fully_digital_baseline(&ch.per_subcarrier, 2, s.power, s.noise_power).unwrap();
            assert!(hybrid <= digital.mean_rate + 1e-6, "{hybrid} > {}", digital.mean_rate);
        }
    }
}

#[test]
fn average_rate_is_bounded_by_analog_objective() {
    for seed in 0..30u64 {
        let s = ArchitectureSpec { num_rf: 2, num_streams: 2, structure: Structure::PartiallyConnected, ..spec(Structure::PartiallyConnected, PhaseResolution::Unbounded, 0.2) };
        let ch = channel(2000 + seed, s.nt, s.nr, s.num_subcarriers);
        let o = DesignOptions { equal_power: true, ..opts(seed) };
        let bf = design_transceiver(&ch.per_subcarrier, &s, &o).unwrap();
        let avg: f64 = (0..s.num_subcarriers)
            .map(|k| rate_su_ideal(&ch.per_subcarrier[k], &bf.precoder(k), s.noise_power).unwrap())
            .sum::<f64>()
            / s.num_subcarriers as f64;
        let f1 = average_covariance(&ch.per_subcarrier).unwrap();
        let bound = analog_objective(&bf.analog_precoder, &f1, s.gamma().powi(2) / s.noise_power).unwrap();
        assert!(avg <= bound + 1e-6, "{avg} > {bound}");
    }
}

#[test]
fn rates_grow_with_power() {
    for seed in 0..10u64 {
        let ch = channel(3000 + seed, 16, 8, 4);
        let mut prev_digital = 0.0;
        for p in [0.1, 1.0, 10.0, 100.0] {
            let d = fully_digital_baseline(&ch.per_subcarrier, 2, p, 1.0).unwrap().mean_rate;
            assert!(d >= prev_digital);
            prev_digital = d;
        }
        for structure in [Structure::FullyConnected, Structure::PartiallyConnected] {
            let mut prev = 0.0;
            for p in [0.1, 1.0, 10.0, 100.0] {
                let s = ArchitectureSpec { power: p, noise_power: 1.0, ..spec(structure, PhaseResolution::Unbounded, 1.0) };
                let bf = design_transceiver(&ch.per_subcarrier, &s, &opts(seed)).unwrap();
                let r = hybrid_rate(&ch.per_subcarrier, &bf, 1.0).unwrap();
                assert!(r >= prev - 1e-9, "seed {seed} {structure}: {r} < {prev} at P = {p}");
                prev = r;
            }
        }
    }
}

#[test]
fn mismatched_subcarrier_count_is_rejected() {
    let s = spec(Structure::FullyConnected, PhaseResolution::Unbounded, 0.1);
    let ch = channel(1, s.nt, s.nr, 3);
    assert!(design_transceiver(&ch.per_subcarrier, &s, &opts(0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn design_is_deterministic(seed in 0u64..1000) {
        let s = spec(Structure::FullyConnected, PhaseResolution::Bits(2), 0.1);
        let ch = channel(seed, s.nt, s.nr, s.num_subcarriers);
        let a = design_transceiver(&ch.per_subcarrier, &s, &opts(seed)).unwrap();
        let b = design_transceiver(&ch.per_subcarrier, &s, &opts(seed)).unwrap();
        prop_assert_eq!(a.analog_precoder, b.analog_precoder);
        prop_assert_eq!(a.digital_combiners, b.digital_combiners);
    }
}
