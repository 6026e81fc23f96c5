use rand::Rng;

use crate::channels::{
    check_bc_degraded, enumerate_strategies, induced_bc_strategy_channel, BcDegradedness,
    BroadcastStateChannel, DEFAULT_DEGRADED_TOL,
};
use crate::seeding::Cdf;

use super::typicality::TypicalSet;
use super::{
    check_pmf_len, log2_table, outranks, pruned_sum, run_trials, Codebook, Decoder, ErrorEstimate,
    Result, SimConfig, SimError, SimReport,
};

const ERROR: usize = 0;
const RX1: usize = 1;
const RX2: usize = 2;
const RX2_TRUE_ATYPICAL: usize = 3;
const RX2_WRONG_CLOUD: usize = 4;
const RX1_TRUE_ATYPICAL: usize = 5;
const RX1_WRONG_CLOUD: usize = 6;
const RX1_WRONG_SATELLITE: usize = 7;

/// Superposition coding over a degraded broadcast channel.
///
/// Cloud centers `u2^n(w2)` are i.i.d. from `p_u2`; satellites
/// `u1^n(w1, w2)` are strategy sequences drawn symbol-wise from
/// `p_t_given_u2[u2_i]`. Receiver 2 decodes `w2` from `y2^n`; receiver 1
/// decodes the pair `(w1, w2)` from `y1^n`. The rate `R1` is `cfg.rate`,
/// `R2` is `cfg.rate2`.
pub fn simulate_bc(
    ch: &BroadcastStateChannel,
    p_u2: &[f64],
    p_t_given_u2: &[Vec<f64>],
    cfg: &SimConfig,
) -> Result<SimReport> {
    cfg.validate()?;
    if let BcDegradedness::NotDegraded { witness } = check_bc_degraded(ch, DEFAULT_DEGRADED_TOL) {
        return Err(SimError::BcNotDegraded(witness));
    }
    let strategies = enumerate_strategies(ch.x_size(), ch.s_size(), cfg.strategy_cap)?;
    let nt = strategies.len();
    let k = p_u2.len();
    check_pmf_len("p(t|u2)", p_t_given_u2.len(), k)?;
    for row in p_t_given_u2 {
        check_pmf_len("p(t|u2) row", row.len(), nt)?;
    }
    let m2 = cfg.count("cloud messages", cfg.rate2)?;
    let m1 = cfg.count("satellite messages", cfg.rate)?;

    let (n, ny1, ny2) = (cfg.blocklength, ch.y1_size(), ch.y2_size());
    let joint = induced_bc_strategy_channel(ch, cfg.strategy_cap)?;
    let mut w1 = vec![0.0; nt * ny1];
    let mut w2 = vec![0.0; nt * ny2];
    for t in 0..nt {
        for (c, &p) in joint.row(t).iter().enumerate() {
            w1[t * ny1 + c / ny2] += p;
            w2[t * ny2 + c % ny2] += p;
        }
    }
    // receiver 2 sees p(y2 | u2) = sum_t p(t | u2) p(y2 | t)
    let mut v2 = vec![0.0; k * ny2];
    for (u2, row) in p_t_given_u2.iter().enumerate() {
        for (t, &b) in row.iter().enumerate() {
            for y in 0..ny2 {
                v2[u2 * ny2 + y] += b * w2[t * ny2 + y];
            }
        }
    }
    let metric2 = log2_table(&v2);
    let metric1 = log2_table(&w1);
    let bound1: Vec<f64> = (0..k * ny1)
        .map(|c| {
            let (u2, y) = (c / ny1, c % ny1);
            (0..nt)
                .filter(|&t| p_t_given_u2[u2][t] > 0.0)
                .map(|t| metric1[t * ny1 + y])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    let typical = match cfg.decoder {
        Decoder::Typicality { epsilon } => {
            let j2: Vec<f64> = (0..k * ny2).map(|c| p_u2[c / ny2] * v2[c]).collect();
            let j1: Vec<f64> = (0..k * nt * ny1)
                .map(|c| {
                    let (u2, t, y) = (c / (nt * ny1), (c / ny1) % nt, c % ny1);
                    p_u2[u2] * p_t_given_u2[u2][t] * w1[t * ny1 + y]
                })
                .collect();
            Some((
                TypicalSet::new(&j2, n, epsilon),
                TypicalSet::new(&j1, n, epsilon),
            ))
        }
        Decoder::MaximumLikelihood => None,
    };

    let state = Cdf::new(ch.state_pmf().probs());
    let rows: Vec<Cdf> = ch.kernel().chunks(ny1 * ny2).map(Cdf::new).collect();

    let tally = run_trials(cfg, 8, |trial, rng, tally| {
        let clouds = Codebook::iid(cfg.codebook_key(trial, 0), n, p_u2);
        let sats = Codebook::superposed(cfg.codebook_key(trial, 1), n, p_t_given_u2);
        let msg2 = rng.random_range(0..m2);
        let msg1 = rng.random_range(0..m1);
        let pair = msg2 * m1 + msg1;
        let u2 = clouds.codeword(msg2 as u64, None);
        let t = sats.codeword(pair as u64, Some(&u2));
        let mut y1 = Vec::with_capacity(n);
        let mut y2 = Vec::with_capacity(n);
        for &ti in &t {
            let s = state.sample(rng);
            let x = strategies[ti].apply(s);
            let c = rows[x * ch.s_size() + s].sample(rng);
            y1.push(c / ny2);
            y2.push(c % ny2);
        }

        let (rx1_wrong, rx2_wrong) = match &typical {
            None => {
                let truth2: f64 = (0..n).map(|i| metric2[u2[i] * ny2 + y2[i]]).sum();
                let rx2_wrong = (0..m2).filter(|&c| c != msg2).any(|c| {
                    pruned_sum(n, truth2, |i| {
                        metric2[clouds.symbol(c as u64, i, 0) * ny2 + y2[i]]
                    })
                    .is_some_and(|s| outranks(c, s, msg2, truth2))
                });

                let truth1: f64 = (0..n).map(|i| metric1[t[i] * ny1 + y1[i]]).sum();
                let (mut wrong_cloud, mut wrong_sat) = (false, false);
                for c2 in 0..m2 {
                    let done = if c2 == msg2 { wrong_sat } else { wrong_cloud };
                    if done {
                        continue;
                    }
                    let cloud = clouds.codeword(c2 as u64, None);
                    if pruned_sum(n, truth1, |i| bound1[cloud[i] * ny1 + y1[i]]).is_none() {
                        continue;
                    }
                    let hit = (0..m1)
                        .map(|c1| c2 * m1 + c1)
                        .filter(|&idx| idx != pair)
                        .any(|idx| {
                            pruned_sum(n, truth1, |i| {
                                metric1[sats.symbol(idx as u64, i, cloud[i]) * ny1 + y1[i]]
                            })
                            .is_some_and(|s| outranks(idx, s, pair, truth1))
                        });
                    if c2 == msg2 {
                        wrong_sat = hit;
                    } else {
                        wrong_cloud |= hit;
                    }
                }
                tally.bump(RX2_WRONG_CLOUD, rx2_wrong);
                tally.bump(RX1_WRONG_CLOUD, wrong_cloud);
                tally.bump(RX1_WRONG_SATELLITE, wrong_sat);
                (wrong_cloud || wrong_sat, rx2_wrong)
            }
            Some((set2, set1)) => {
                let mut counts2 = vec![0; set2.cells()];
                let mut counts1 = vec![0; set1.cells()];
                let rx2_wrong = if m2 == 1 {
                    false
                } else {
                    let true_ok = set2.check(&mut counts2, |i| u2[i] * ny2 + y2[i]);
                    let other = (0..m2).filter(|&c| c != msg2).any(|c| {
                        set2.check(&mut counts2, |i| {
                            clouds.symbol(c as u64, i, 0) * ny2 + y2[i]
                        })
                    });
                    tally.bump(RX2_TRUE_ATYPICAL, !true_ok);
                    tally.bump(RX2_WRONG_CLOUD, other);
                    !true_ok || other
                };
                let rx1_wrong = if m1 * m2 == 1 {
                    false
                } else {
                    let cell = |u: usize, tt: usize, y: usize| (u * nt + tt) * ny1 + y;
                    let true_ok = set1.check(&mut counts1, |i| cell(u2[i], t[i], y1[i]));
                    let (mut wrong_cloud, mut wrong_sat) = (false, false);
                    for c2 in 0..m2 {
                        if wrong_cloud && (wrong_sat || c2 != msg2) {
                            continue;
                        }
                        let cloud = clouds.codeword(c2 as u64, None);
                        for c1 in 0..m1 {
                            let idx = c2 * m1 + c1;
                            if idx == pair {
                                continue;
                            }
                            let ok = set1.check(&mut counts1, |i| {
                                cell(cloud[i], sats.symbol(idx as u64, i, cloud[i]), y1[i])
                            });
                            if ok {
                                if c2 == msg2 {
                                    wrong_sat = true;
                                } else {
                                    wrong_cloud = true;
                                }
                                break;
                            }
                        }
                    }
                    tally.bump(RX1_TRUE_ATYPICAL, !true_ok);
                    tally.bump(RX1_WRONG_CLOUD, wrong_cloud);
                    tally.bump(RX1_WRONG_SATELLITE, wrong_sat);
                    !true_ok || wrong_cloud || wrong_sat
                };
                (rx1_wrong, rx2_wrong)
            }
        };
        tally.bump(RX1, rx1_wrong);
        tally.bump(RX2, rx2_wrong);
        tally.bump(ERROR, rx1_wrong || rx2_wrong);
    });

    let mut events = Vec::new();
    if typical.is_some() {
        events.push(("rx2_true_atypical", tally.get(RX2_TRUE_ATYPICAL)));
    }
    events.push(("rx2_wrong_cloud", tally.get(RX2_WRONG_CLOUD)));
    if typical.is_some() {
        events.push(("rx1_true_atypical", tally.get(RX1_TRUE_ATYPICAL)));
    }
    events.push(("rx1_wrong_cloud", tally.get(RX1_WRONG_CLOUD)));
    events.push(("rx1_wrong_satellite", tally.get(RX1_WRONG_SATELLITE)));
    Ok(SimReport::new(
        cfg,
        tally.get(ERROR),
        vec![
            ("rx1", ErrorEstimate::new(tally.get(RX1), cfg.trials)),
            ("rx2", ErrorEstimate::new(tally.get(RX2), cfg.trials)),
        ],
        events,
        vec![("cloud", m2), ("satellite", m1)],
    ))
}
