use rand::Rng;

use crate::channels::{enumerate_strategies, MacStateChannel};
use crate::probcore::Pmf;
use crate::seeding::Cdf;

use super::typicality::TypicalSet;
use super::{
    check_pmf_len, log2_table, outranks, pruned_sum, run_trials, Codebook, Decoder, Result,
    SimConfig, SimReport,
};

const ERROR: usize = 0;
const WRONG_W1_ONLY: usize = 1;
const WRONG_W2_ONLY: usize = 2;
const WRONG_BOTH: usize = 3;
const TRUE_ATYPICAL: usize = 4;

/// Two independent codebooks `u1^n(w1)`, `u2^n(w2)` drawn from `p_t1` and
/// `p_t2`, per-sender strategy encoders, and a joint decoder over all message
/// pairs. Rates are `cfg.rate` (sender 1) and `cfg.rate2` (sender 2).
pub fn simulate_mac(
    ch: &MacStateChannel,
    p_t1: &Pmf,
    p_t2: &Pmf,
    cfg: &SimConfig,
) -> Result<SimReport> {
    cfg.validate()?;
    let t1s = enumerate_strategies(ch.x1_size(), ch.s_size(), cfg.strategy_cap)?;
    let t2s = enumerate_strategies(ch.x2_size(), ch.s_size(), cfg.strategy_cap)?;
    let (n1, n2) = (t1s.len(), t2s.len());
    check_pmf_len("sender 1 strategy pmf", p_t1.len(), n1)?;
    check_pmf_len("sender 2 strategy pmf", p_t2.len(), n2)?;
    let m1 = cfg.count("sender 1 messages", cfg.rate)?;
    let m2 = cfg.count("sender 2 messages", cfg.rate2)?;

    let (n, ns, ny) = (cfg.blocklength, ch.s_size(), ch.y_size());
    let mut v = vec![0.0; n1 * n2 * ny];
    for a in 0..n1 {
        for b in 0..n2 {
            for (s, &ps) in ch.state_pmf().probs().iter().enumerate() {
                let row = ch.row(t1s[a].apply(s), t2s[b].apply(s), s);
                for (y, &p) in row.iter().enumerate() {
                    v[(a * n2 + b) * ny + y] += ps * p;
                }
            }
        }
    }
    let (p1, p2) = (p_t1.probs(), p_t2.probs());
    let metric = log2_table(&v);
    let bound: Vec<f64> = (0..n1 * ny)
        .map(|c| {
            let (a, y) = (c / ny, c % ny);
            (0..n2)
                .filter(|&b| p2[b] > 0.0)
                .map(|b| metric[(a * n2 + b) * ny + y])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let typical = match cfg.decoder {
        Decoder::Typicality { epsilon } => {
            let joint: Vec<f64> = (0..n1 * n2 * ny)
                .map(|c| p1[c / (n2 * ny)] * p2[(c / ny) % n2] * v[c])
                .collect();
            Some(TypicalSet::new(&joint, n, epsilon))
        }
        Decoder::MaximumLikelihood => None,
    };

    let state = Cdf::new(ch.state_pmf().probs());
    let rows: Vec<Cdf> = ch.kernel().chunks(ny).map(Cdf::new).collect();
    let x2n = ch.x2_size();

    let tally = run_trials(cfg, 5, |trial, rng, tally| {
        let book1 = Codebook::iid(cfg.codebook_key(trial, 0), n, p1);
        let book2 = Codebook::iid(cfg.codebook_key(trial, 1), n, p2);
        let w1 = rng.random_range(0..m1);
        let w2 = rng.random_range(0..m2);
        let u1 = book1.codeword(w1 as u64, None);
        let u2 = book2.codeword(w2 as u64, None);
        let y: Vec<usize> = (0..n)
            .map(|i| {
                let s = state.sample(rng);
                let x1 = t1s[u1[i]].apply(s);
                let x2 = t2s[u2[i]].apply(s);
                rows[(x1 * x2n + x2) * ns + s].sample(rng)
            })
            .collect();
        let cell = |a: usize, b: usize, i: usize| (a * n2 + b) * ny + y[i];

        let wrong = match &typical {
            None => {
                let truth = w1 * m2 + w2;
                let truth_metric: f64 = (0..n).map(|i| metric[cell(u1[i], u2[i], i)]).sum();
                // classes: wrong w1 only, wrong w2 only, both wrong
                let mut found = [false; 3];
                for c1 in 0..m1 {
                    let pending = if c1 == w1 {
                        !found[1]
                    } else {
                        !(found[0] && found[2])
                    };
                    if !pending {
                        continue;
                    }
                    let ok = pruned_sum(n, truth_metric, |i| {
                        bound[book1.symbol(c1 as u64, i, 0) * ny + y[i]]
                    });
                    if ok.is_none() {
                        continue;
                    }
                    let cw1 = book1.codeword(c1 as u64, None);
                    for c2 in 0..m2 {
                        let class = match (c1 == w1, c2 == w2) {
                            (true, true) => continue,
                            (false, true) => 0,
                            (true, false) => 1,
                            (false, false) => 2,
                        };
                        if found[class] {
                            continue;
                        }
                        let idx = c1 * m2 + c2;
                        found[class] = pruned_sum(n, truth_metric, |i| {
                            metric[cell(cw1[i], book2.symbol(c2 as u64, i, 0), i)]
                        })
                        .is_some_and(|s| outranks(idx, s, truth, truth_metric));
                    }
                }
                tally.bump(WRONG_W1_ONLY, found[0]);
                tally.bump(WRONG_W2_ONLY, found[1]);
                tally.bump(WRONG_BOTH, found[2]);
                found.iter().any(|&f| f)
            }
            Some(set) => {
                if m1 * m2 == 1 {
                    false
                } else {
                    let mut counts = vec![0; set.cells()];
                    let true_ok = set.check(&mut counts, |i| cell(u1[i], u2[i], i));
                    let mut found = [false; 3];
                    'outer: for c1 in 0..m1 {
                        let cw1 = book1.codeword(c1 as u64, None);
                        for c2 in 0..m2 {
                            let class = match (c1 == w1, c2 == w2) {
                                (true, true) => continue,
                                (false, true) => 0,
                                (true, false) => 1,
                                (false, false) => 2,
                            };
                            if found[class] {
                                continue;
                            }
                            found[class] = set.check(&mut counts, |i| {
                                cell(cw1[i], book2.symbol(c2 as u64, i, 0), i)
                            });
                            if found.iter().all(|&f| f) {
                                break 'outer;
                            }
                        }
                    }
                    tally.bump(TRUE_ATYPICAL, !true_ok);
                    tally.bump(WRONG_W1_ONLY, found[0]);
                    tally.bump(WRONG_W2_ONLY, found[1]);
                    tally.bump(WRONG_BOTH, found[2]);
                    !true_ok || found.iter().any(|&f| f)
                }
            }
        };
        tally.bump(ERROR, wrong);
    });

    let mut events = Vec::new();
    if typical.is_some() {
        events.push(("true_atypical", tally.get(TRUE_ATYPICAL)));
    }
    events.extend([
        ("wrong_w1_only", tally.get(WRONG_W1_ONLY)),
        ("wrong_w2_only", tally.get(WRONG_W2_ONLY)),
        ("wrong_both", tally.get(WRONG_BOTH)),
    ]);
    Ok(SimReport::new(
        cfg,
        tally.get(ERROR),
        Vec::new(),
        events,
        vec![("sender1", m1), ("sender2", m2)],
    ))
}
