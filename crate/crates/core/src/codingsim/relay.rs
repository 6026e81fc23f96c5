use rand::Rng;

use crate::channels::{
    check_relay_degraded, enumerate_strategies, RelayDegradedness, RelayStateChannel,
    DEFAULT_DEGRADED_TOL,
};
use crate::probcore::JointPmf;
use crate::seeding::{unit_at, Cdf};

use super::typicality::TypicalSet;
use super::{
    conditional_rows, log2_table, outranks, pruned_sum, run_trials, Codebook, Decoder,
    ErrorEstimate, Incumbent, Result, SimConfig, SimError, SimReport,
};

const ERROR: usize = 0;
const MESSAGE_ERRORS: usize = 1;
const RELAY_DECODE: usize = 2;
const DEST_BIN: usize = 3;
const DEST_MESSAGE: usize = 4;

/// Random partition of the messages into bins, stored as a counting sort.
struct Bins {
    of: Vec<usize>,
    start: Vec<usize>,
    members: Vec<usize>,
}

impl Bins {
    fn new(key: u64, messages: usize, bins: usize) -> Self {
        let of: Vec<usize> = (0..messages as u64)
            .map(|w| ((unit_at(key, w) * bins as f64) as usize).min(bins - 1))
            .collect();
        let mut start = vec![0usize; bins + 1];
        for &b in &of {
            start[b + 1] += 1;
        }
        for b in 0..bins {
            start[b + 1] += start[b];
        }
        let mut fill = start.clone();
        let mut members = vec![0; messages];
        for (w, &b) in of.iter().enumerate() {
            members[fill[b]] = w;
            fill[b] += 1;
        }
        Self { of, start, members }
    }

    fn members(&self, bin: usize) -> &[usize] {
        &self.members[self.start[bin]..self.start[bin + 1]]
    }
}

/// Decoding rule shared by the three relay stages: pick among `candidates`
/// the index `metric`/`typical` selects; `None` is a typicality failure.
enum Rule<'a> {
    Ml(&'a [f64]),
    Typical(&'a TypicalSet),
}

/// `cell(c, i)` is the metric or typicality cell of candidate `c` at position `i`.
fn decode(
    rule: &Rule<'_>,
    candidates: &[usize],
    seed: usize,
    n: usize,
    counts: &mut [u32],
    cell: impl Fn(usize, usize) -> usize,
) -> Option<usize> {
    if candidates.len() == 1 {
        return Some(candidates[0]);
    }
    match rule {
        Rule::Ml(metric) => {
            let mut best = Incumbent {
                index: seed,
                metric: (0..n).map(|i| metric[cell(seed, i)]).sum(),
            };
            for &c in candidates.iter().filter(|&&c| c != seed) {
                if let Some(s) = pruned_sum(n, best.metric, |i| metric[cell(c, i)]) {
                    best.offer(c, s);
                }
            }
            Some(best.index)
        }
        Rule::Typical(set) => {
            let mut found = None;
            for &c in candidates {
                if set.check(counts, |i| cell(c, i)) {
                    if found.is_some() {
                        return None;
                    }
                    found = Some(c);
                }
            }
            found
        }
    }
}

/// Whether `rule` would return `truth` among `candidates`, stopping at the
/// first candidate that beats it.
fn decodes_truth(
    rule: &Rule<'_>,
    candidates: &[usize],
    truth: usize,
    n: usize,
    counts: &mut [u32],
    cell: impl Fn(usize, usize) -> usize,
) -> bool {
    if candidates.len() == 1 {
        return true;
    }
    let others = candidates.iter().copied().filter(|&c| c != truth);
    match rule {
        Rule::Ml(metric) => {
            let t: f64 = (0..n).map(|i| metric[cell(truth, i)]).sum();
            !others.into_iter().any(|c| {
                pruned_sum(n, t, |i| metric[cell(c, i)]).is_some_and(|s| outranks(c, s, truth, t))
            })
        }
        Rule::Typical(set) => {
            set.check(counts, |i| cell(truth, i))
                && !others
                    .into_iter()
                    .any(|c| set.check(counts, |i| cell(c, i)))
        }
    }
}

/// Block-Markov decode-and-forward over `B = cfg.blocks` blocks of length
/// `n`, carrying `B - 1` messages at rate `cfg.rate` with bin rate
/// `cfg.bin_rate`.
///
/// In block `b` the source sends `u^n(w(b) | t(w(b-1)))` and the relay sends
/// `u1^n` of the bin of its own estimate of `w(b-1)`; the message before the
/// first block and the one in the last block are fixed to 0. The relay
/// decodes `w(b)` from `(y1^n, s^n)` and its own bin context. The destination
/// decodes the bin of `w(b-1)` from `y^n(b)`, then `w(b-1)` inside that bin
/// from `y^n(b-1)` with the true bin of `w(b-2)` as side information.
pub fn simulate_relay(ch: &RelayStateChannel, q: &JointPmf, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    if cfg.blocks < 2 {
        return Err(SimError::InvalidConfig(
            "relay needs at least 2 blocks".into(),
        ));
    }
    if let RelayDegradedness::NotDegraded { witness } =
        check_relay_degraded(ch, DEFAULT_DEGRADED_TOL)
    {
        return Err(SimError::RelayNotDegraded(witness));
    }
    let ts = enumerate_strategies(ch.x_size(), ch.s_size(), cfg.strategy_cap)?;
    let t1s = enumerate_strategies(ch.x1_size(), ch.s_size(), cfg.strategy_cap)?;
    let (nt, n1) = (ts.len(), t1s.len());
    if q.shape() != [nt, n1] {
        return Err(SimError::Channel(
            crate::channels::ChannelError::StrategyShape {
                expected: vec![nt, n1],
                got: q.shape(),
            },
        ));
    }
    let m = cfg.count("messages", cfg.rate)?;
    let m0 = cfg.count("bins", cfg.bin_rate)?;

    let (n, ns, ny1, ny) = (cfg.blocklength, ch.s_size(), ch.y1_size(), ch.y_size());
    let (nx, nx1) = (ch.x_size(), ch.x1_size());
    let qp = q.probs();
    let state_probs = ch.state_pmf().probs();
    let q1: Vec<f64> = (0..n1)
        .map(|b| (0..nt).map(|a| qp[a * n1 + b]).sum())
        .collect();
    let by_parent: Vec<f64> = (0..n1 * nt).map(|c| qp[(c % nt) * n1 + c / nt]).collect();
    let u_given_u1 = conditional_rows(&by_parent, n1);

    // p(y1 | x, x1, s) and p(y | t, t1)
    let mut k1 = vec![0.0; nx * nx1 * ns * ny1];
    for x in 0..nx {
        for x1 in 0..nx1 {
            for s in 0..ns {
                for (y1, chunk) in ch.row(x, x1, s).chunks(ny).enumerate() {
                    k1[((x * nx1 + x1) * ns + s) * ny1 + y1] = chunk.iter().sum();
                }
            }
        }
    }
    let mut vd = vec![0.0; nt * n1 * ny];
    for a in 0..nt {
        for b in 0..n1 {
            for (s, &ps) in state_probs.iter().enumerate() {
                let row = ch.row(ts[a].apply(s), t1s[b].apply(s), s);
                for (c, &v) in row.iter().enumerate() {
                    vd[(a * n1 + b) * ny + c % ny] += ps * v;
                }
            }
        }
    }
    let mut v1 = vec![0.0; n1 * ny];
    for b in 0..n1 {
        for a in 0..nt {
            for y in 0..ny {
                v1[b * ny + y] += u_given_u1[b][a] * vd[(a * n1 + b) * ny + y];
            }
        }
    }

    // cell layouts: stage 1 (u, u1, s, y1); stage 2 (u1, y); stage 3 (u, u1, y)
    let cell1 = |u: usize, u1: usize, s: usize, y1: usize| ((u * n1 + u1) * ns + s) * ny1 + y1;
    let stage1_cells = nt * n1 * ns * ny1;
    let (rules, tables);
    match cfg.decoder {
        Decoder::MaximumLikelihood => {
            let l1: Vec<f64> = (0..stage1_cells)
                .map(|c| {
                    let y1 = c % ny1;
                    let s = (c / ny1) % ns;
                    let b = (c / (ny1 * ns)) % n1;
                    let a = c / (ny1 * ns * n1);
                    let x = ts[a].apply(s);
                    let x1 = t1s[b].apply(s);
                    k1[((x * nx1 + x1) * ns + s) * ny1 + y1]
                })
                .collect();
            tables = (log2_table(&l1), log2_table(&v1), log2_table(&vd));
            rules = None;
        }
        Decoder::Typicality { epsilon } => {
            let j1: Vec<f64> = (0..stage1_cells)
                .map(|c| {
                    let y1 = c % ny1;
                    let s = (c / ny1) % ns;
                    let b = (c / (ny1 * ns)) % n1;
                    let a = c / (ny1 * ns * n1);
                    let x = ts[a].apply(s);
                    let x1 = t1s[b].apply(s);
                    qp[a * n1 + b] * state_probs[s] * k1[((x * nx1 + x1) * ns + s) * ny1 + y1]
                })
                .collect();
            let j2: Vec<f64> = (0..n1 * ny).map(|c| q1[c / ny] * v1[c]).collect();
            let j3: Vec<f64> = (0..nt * n1 * ny).map(|c| qp[c / ny] * vd[c]).collect();
            rules = Some((
                TypicalSet::new(&j1, n, epsilon),
                TypicalSet::new(&j2, n, epsilon),
                TypicalSet::new(&j3, n, epsilon),
            ));
            tables = (Vec::new(), Vec::new(), Vec::new());
        }
    }
    let (rule1, rule2, rule3) = match &rules {
        Some((a, b, c)) => (Rule::Typical(a), Rule::Typical(b), Rule::Typical(c)),
        None => (
            Rule::Ml(&tables.0),
            Rule::Ml(&tables.1),
            Rule::Ml(&tables.2),
        ),
    };
    let max_cells = rules
        .as_ref()
        .map_or(0, |(a, b, c)| a.cells().max(b.cells()).max(c.cells()));

    let state = Cdf::new(state_probs);
    let rows: Vec<Cdf> = ch.kernel().chunks(ny1 * ny).map(Cdf::new).collect();
    let blocks = cfg.blocks;
    let all_messages: Vec<usize> = (0..m).collect();
    let all_bins: Vec<usize> = (0..m0).collect();

    let tally = run_trials(cfg, 5, |trial, rng, tally| {
        let relay_book = Codebook::iid(cfg.codebook_key(trial, 0), n, &q1);
        let source_book = Codebook::superposed(cfg.codebook_key(trial, 1), n, &u_given_u1);
        let bins = Bins::new(cfg.codebook_key(trial, 2), m, m0);
        let mut counts = vec![0u32; max_cells];

        let mut w = vec![0usize; blocks + 1];
        for wb in &mut w[1..blocks] {
            *wb = rng.random_range(0..m);
        }
        let mut relay_est = vec![0usize; blocks + 1];
        let mut dest_bin = vec![0usize; blocks + 1];
        let mut dest_est = vec![0usize; blocks + 1];
        let mut y_prev: Vec<usize> = Vec::new();
        let mut y_cur = Vec::with_capacity(n);
        let mut y1 = Vec::with_capacity(n);
        let mut s_seq = Vec::with_capacity(n);

        for b in 1..=blocks {
            let true_bin = bins.of[w[b - 1]];
            let relay_bin = bins.of[relay_est[b - 1]];
            let u1_true = relay_book.codeword(true_bin as u64, None);
            let u1_sent = relay_book.codeword(relay_bin as u64, None);
            let u = source_book.codeword((true_bin * m + w[b]) as u64, Some(&u1_true));
            y1.clear();
            y_cur.clear();
            s_seq.clear();
            for i in 0..n {
                let s = state.sample(rng);
                let x = ts[u[i]].apply(s);
                let x1 = t1s[u1_sent[i]].apply(s);
                let c = rows[(x * nx1 + x1) * ns + s].sample(rng);
                s_seq.push(s);
                y1.push(c / ny);
                y_cur.push(c % ny);
            }

            if b < blocks {
                relay_est[b] = if m == 1 {
                    0
                } else {
                    let seed = if relay_bin == true_bin { w[b] } else { 0 };
                    decode(&rule1, &all_messages, seed, n, &mut counts, |c, i| {
                        let sym = source_book.symbol((relay_bin * m + c) as u64, i, u1_sent[i]);
                        cell1(sym, u1_sent[i], s_seq[i], y1[i])
                    })
                    .unwrap_or(usize::MAX)
                };
            }

            if b >= 2 {
                let target = b - 1;
                if m == 1 {
                    dest_bin[b] = true_bin;
                    dest_est[target] = 0;
                } else {
                    let bin_ok =
                        decodes_truth(&rule2, &all_bins, true_bin, n, &mut counts, |c, i| {
                            relay_book.symbol(c as u64, i, 0) * ny + y_cur[i]
                        });
                    dest_bin[b] = if bin_ok { true_bin } else { usize::MAX };
                    // genie: true bin of w(b - 2) for block b - 1
                    let ctx = bins.of[w[target - 1]];
                    let u1_ctx = relay_book.codeword(ctx as u64, None);
                    let msg_ok = bin_ok
                        && decodes_truth(
                            &rule3,
                            bins.members(true_bin),
                            w[target],
                            n,
                            &mut counts,
                            |c, i| {
                                let sym = source_book.symbol((ctx * m + c) as u64, i, u1_ctx[i]);
                                (sym * n1 + u1_ctx[i]) * ny + y_prev[i]
                            },
                        );
                    dest_est[target] = if msg_ok { w[target] } else { usize::MAX };
                }
            }
            std::mem::swap(&mut y_prev, &mut y_cur);
            // relay forwards the bin of message 0 after a decoding failure
            if b < blocks && relay_est[b] == usize::MAX {
                relay_est[b] = 0;
                tally.bump(RELAY_DECODE, true);
            } else if b < blocks {
                tally.bump(RELAY_DECODE, relay_est[b] != w[b]);
            }
        }

        let mut any = false;
        for b in 1..blocks {
            let bin_ok = dest_bin[b + 1] == bins.of[w[b]];
            let wrong = dest_est[b] != w[b];
            tally.bump(DEST_BIN, !bin_ok);
            tally.bump(DEST_MESSAGE, bin_ok && wrong);
            tally.bump(MESSAGE_ERRORS, wrong);
            any |= wrong;
        }
        tally.bump(ERROR, any);
    });

    Ok(SimReport::new(
        cfg,
        tally.get(ERROR),
        vec![(
            "messages",
            ErrorEstimate::new(tally.get(MESSAGE_ERRORS), cfg.trials * (blocks - 1)),
        )],
        vec![
            ("relay_decode", tally.get(RELAY_DECODE)),
            ("dest_bin", tally.get(DEST_BIN)),
            ("dest_message", tally.get(DEST_MESSAGE)),
        ],
        vec![("messages", m), ("bins", m0)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::{Axis, Pmf};

    fn two_hop() -> RelayStateChannel {
        let to_relay = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let to_dest = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        RelayStateChannel::degraded(2, 2, 1, 2, 2, &to_relay, &to_dest, Pmf::uniform(1)).unwrap()
    }

    fn uniform_q() -> JointPmf {
        JointPmf::new(vec![Axis::new("T", 2), Axis::new("T1", 2)], vec![0.25; 4]).unwrap()
    }

    fn cfg(rate: f64, bin_rate: f64, n: usize, trials: usize) -> SimConfig {
        let mut c = SimConfig::new(n, trials, 41);
        c.rate = rate;
        c.bin_rate = bin_rate;
        c.blocks = 5;
        c
    }

    #[test]
    fn zero_rate_never_errs() {
        let r = simulate_relay(&two_hop(), &uniform_q(), &cfg(0.0, 0.5, 8, 50)).unwrap();
        assert_eq!(r.overall.errors, 0);
    }

    #[test]
    fn binning_with_slack_is_reliable() {
        let r = simulate_relay(&two_hop(), &uniform_q(), &cfg(0.25, 0.625, 16, 200)).unwrap();
        assert!(r.breakdown[0].1.rate <= 0.05, "{r:?}");
        let events: usize = r.events.iter().map(|e| e.1).sum();
        assert!(r.breakdown[0].1.errors <= events);
    }

    #[test]
    fn equal_bin_and_message_rates_collide() {
        // the destination sees nothing of the source directly, so bins carry all information
        let r = simulate_relay(&two_hop(), &uniform_q(), &cfg(0.25, 0.25, 8, 200)).unwrap();
        assert!(r.overall.rate >= 0.3, "{r:?}");
        assert!(r.event("dest_message").unwrap() > 0);
    }

    #[test]
    fn no_bins_fails() {
        let r = simulate_relay(&two_hop(), &uniform_q(), &cfg(0.5, 0.0, 8, 100)).unwrap();
        assert!(r.overall.rate >= 0.5, "{r:?}");
        assert!(r.event("dest_message").unwrap() > 0);
    }

    #[test]
    fn typicality_decoder_runs() {
        let mut c = cfg(0.25, 0.75, 12, 50);
        c.decoder = Decoder::Typicality { epsilon: 0.6 };
        let r = simulate_relay(&two_hop(), &uniform_q(), &c).unwrap();
        let events: usize = r.events.iter().map(|e| e.1).sum();
        assert!(r.breakdown[0].1.errors <= events);
    }
}
