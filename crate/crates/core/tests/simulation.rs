mod common;

use proptest::prelude::*;
use rand::Rng;
use statecap::codingsim::{
    joint_typicality, simulate_bc, simulate_mac, simulate_relay, simulate_single_user, Decoder,
    SimConfig, SimReport,
};
use statecap::probcore::{Axis, JointPmf, Pmf};
use statecap::seeding::{task_rng, Cdf};

fn event_total(r: &SimReport) -> usize {
    r.events.iter().map(|e| e.1).sum()
}

fn decoder(typical: bool) -> Decoder {
    if typical {
        Decoder::Typicality { epsilon: 0.3 }
    } else {
        Decoder::MaximumLikelihood
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn single_user_events_cover_errors(
        seed in any::<u64>(), n in 4usize..12, rate in 0.0f64..1.2, typical in any::<bool>(),
    ) {
        let mut rng = common::rng(seed);
        let ch = common::state_channel(&mut rng, 2, 2, 2);
        let pmf = Pmf::new(common::pmf(&mut rng, 4)).unwrap();
        let mut cfg = SimConfig::new(n, 40, seed);
        cfg.rate = rate;
        cfg.decoder = decoder(typical);
        let r = simulate_single_user(&ch, &pmf, &cfg).unwrap();
        prop_assert!(r.overall.errors <= event_total(&r));
    }

    #[test]
    fn bc_events_cover_errors(seed in any::<u64>(), n in 4usize..10, typical in any::<bool>()) {
        let mut rng = common::rng(seed);
        let ch = common::degraded_bc(&mut rng, 2, 1, 2, 2);
        let p_u2 = common::pmf(&mut rng, 3);
        let p_t: Vec<Vec<f64>> = (0..3).map(|_| common::pmf(&mut rng, 2)).collect();
        let mut cfg = SimConfig::new(n, 40, seed);
        cfg.rate = rng.random_range(0.0..0.8);
        cfg.rate2 = rng.random_range(0.0..0.8);
        cfg.decoder = decoder(typical);
        let r = simulate_bc(&ch, &p_u2, &p_t, &cfg).unwrap();
        prop_assert!(r.overall.errors <= event_total(&r));
    }

    #[test]
    fn relay_events_cover_errors(seed in any::<u64>(), n in 4usize..9, typical in any::<bool>()) {
        let mut rng = common::rng(seed);
        let ch = common::degraded_relay(&mut rng, 2, 2, 1, 2, 2);
        let q = JointPmf::new(
            vec![Axis::new("T", 2), Axis::new("T1", 2)],
            common::pmf(&mut rng, 4),
        )
        .unwrap();
        let mut cfg = SimConfig::new(n, 20, seed);
        cfg.rate = rng.random_range(0.0..0.6);
        cfg.bin_rate = rng.random_range(0.0..0.8);
        cfg.blocks = 3;
        cfg.decoder = decoder(typical);
        let r = simulate_relay(&ch, &q, &cfg).unwrap();
        prop_assert!(r.overall.errors <= event_total(&r));
    }

    #[test]
    fn mac_events_cover_errors(seed in any::<u64>(), n in 4usize..10, typical in any::<bool>()) {
        let mut rng = common::rng(seed);
        let ch = common::mac(&mut rng, 2, 2, 1, 3);
        let p1 = Pmf::new(common::pmf(&mut rng, 2)).unwrap();
        let p2 = Pmf::new(common::pmf(&mut rng, 2)).unwrap();
        let mut cfg = SimConfig::new(n, 40, seed);
        cfg.rate = rng.random_range(0.0..0.8);
        cfg.rate2 = rng.random_range(0.0..0.8);
        cfg.decoder = decoder(typical);
        let r = simulate_mac(&ch, &p1, &p2, &cfg).unwrap();
        prop_assert!(r.overall.errors <= event_total(&r));
    }
}

#[test]
fn reports_ignore_thread_count() {
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let three = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let ch = common::xor_channel(0.2);
    let pmf = Pmf::new(vec![0.0, 0.5, 0.5, 0.0]).unwrap();
    let mut cfg = SimConfig::new(12, 200, 11);
    cfg.rate = 0.7;
    let a = one.install(|| simulate_single_user(&ch, &pmf, &cfg).unwrap());
    let b = three.install(|| simulate_single_user(&ch, &pmf, &cfg).unwrap());
    assert_eq!(a, b);

    let q = JointPmf::new(vec![Axis::new("T", 2), Axis::new("T1", 2)], vec![0.25; 4]).unwrap();
    let mut cfg = SimConfig::new(8, 100, 12);
    cfg.rate = 0.25;
    cfg.bin_rate = 0.5;
    cfg.blocks = 4;
    let relay = common::two_hop();
    let a = one.install(|| simulate_relay(&relay, &q, &cfg).unwrap());
    let b = three.install(|| simulate_relay(&relay, &q, &cfg).unwrap());
    assert_eq!(a, b);

    let u = Pmf::uniform(2);
    let mut cfg = SimConfig::new(10, 100, 13);
    cfg.rate = 0.4;
    cfg.rate2 = 0.4;
    let mac = common::adder_mac();
    let a = one.install(|| simulate_mac(&mac, &u, &u, &cfg).unwrap());
    let b = three.install(|| simulate_mac(&mac, &u, &u, &cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn iid_samples_are_typical_at_n64() {
    // X ~ Bern(1/2), Y = X
    let joint = JointPmf::new(
        vec![Axis::new("X", 2), Axis::new("Y", 2)],
        vec![0.5, 0.0, 0.0, 0.5],
    )
    .unwrap();
    let cdf = Cdf::new(joint.probs());
    let mut rng = task_rng(64, &[]);
    let passes = (0..200)
        .filter(|_| {
            let cells: Vec<usize> = (0..64).map(|_| cdf.sample(&mut rng)).collect();
            let x: Vec<usize> = cells.iter().map(|c| c / 2).collect();
            let y: Vec<usize> = cells.iter().map(|c| c % 2).collect();
            joint_typicality(&[&x, &y], &joint, 0.25).unwrap()
        })
        .count();
    assert!(passes as f64 / 200.0 >= 0.9, "{passes} / 200");
}

#[test]
fn typicality_pass_rate_grows_with_n() {
    let probs = vec![0.4, 0.1, 0.2, 0.3];
    let joint = JointPmf::new(vec![Axis::new("X", 2), Axis::new("Y", 2)], probs).unwrap();
    let cdf = Cdf::new(joint.probs());
    let rate = |n: usize| {
        let mut rng = task_rng(n as u64, &[]);
        (0..400)
            .filter(|_| {
                let cells: Vec<usize> = (0..n).map(|_| cdf.sample(&mut rng)).collect();
                let x: Vec<usize> = cells.iter().map(|c| c / 2).collect();
                let y: Vec<usize> = cells.iter().map(|c| c % 2).collect();
                joint_typicality(&[&x, &y], &joint, 0.25).unwrap()
            })
            .count()
    };
    let (short, long) = (rate(64), rate(2048));
    assert!(long > short, "{short} vs {long}");
    assert!(long >= 360, "{long}");
}
