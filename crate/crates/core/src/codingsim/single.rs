use rand::Rng;

use crate::channels::{enumerate_strategies, induced_strategy_channel, StateChannel};
use crate::probcore::Pmf;
use crate::seeding::Cdf;

use super::typicality::TypicalSet;
use super::{
    check_pmf_len, log2_table, outranks, pruned_sum, run_trials, Codebook, Decoder, Result,
    SimConfig, SimReport,
};

const ERROR: usize = 0;
const WRONG: usize = 1;
const TRUE_ATYPICAL: usize = 2;

/// Point-to-point random coding over the strategy alphabet: codewords
/// `u^n(w)` i.i.d. from `strategy_pmf`, inputs `x_i = u_i(s_i)`.
pub fn simulate_single_user(
    ch: &StateChannel,
    strategy_pmf: &Pmf,
    cfg: &SimConfig,
) -> Result<SimReport> {
    cfg.validate()?;
    let strategies = enumerate_strategies(ch.x_size(), ch.s_size(), cfg.strategy_cap)?;
    check_pmf_len("strategy pmf", strategy_pmf.len(), strategies.len())?;
    let v = induced_strategy_channel(ch, cfg.strategy_cap)?;
    let m = cfg.count("messages", cfg.rate)?;
    let (n, ny) = (cfg.blocklength, ch.y_size());
    let metric = log2_table(v.rows());
    let pmf = strategy_pmf.probs();

    let typical = match cfg.decoder {
        Decoder::Typicality { epsilon } => {
            let joint: Vec<f64> = (0..strategies.len())
                .flat_map(|u| v.row(u).iter().map(move |w| pmf[u] * w))
                .collect();
            Some(TypicalSet::new(&joint, n, epsilon))
        }
        Decoder::MaximumLikelihood => None,
    };
    let state = Cdf::new(ch.state_pmf().probs());
    let rows: Vec<Cdf> = ch.kernel().chunks(ny).map(Cdf::new).collect();

    let tally = run_trials(cfg, 3, |trial, rng, tally| {
        let book = Codebook::iid(cfg.codebook_key(trial, 0), n, pmf);
        let w = rng.random_range(0..m);
        let u = book.codeword(w as u64, None);
        let y: Vec<usize> = u
            .iter()
            .map(|&ui| {
                let s = state.sample(rng);
                let x = strategies[ui].apply(s);
                rows[x * ch.s_size() + s].sample(rng)
            })
            .collect();

        match &typical {
            None => {
                let truth = (0..n).map(|i| metric[u[i] * ny + y[i]]).sum();
                let wrong = (0..m).filter(|&c| c != w).any(|c| {
                    pruned_sum(n, truth, |i| {
                        metric[book.symbol(c as u64, i, 0) * ny + y[i]]
                    })
                    .is_some_and(|s| outranks(c, s, w, truth))
                });
                tally.bump(ERROR, wrong);
                tally.bump(WRONG, wrong);
            }
            Some(set) => {
                if m == 1 {
                    return;
                }
                let mut counts = vec![0; set.cells()];
                let true_ok = set.check(&mut counts, |i| u[i] * ny + y[i]);
                let other = (0..m)
                    .filter(|&c| c != w)
                    .any(|c| set.check(&mut counts, |i| book.symbol(c as u64, i, 0) * ny + y[i]));
                tally.bump(ERROR, !true_ok || other);
                tally.bump(WRONG, other);
                tally.bump(TRUE_ATYPICAL, !true_ok);
            }
        }
    });

    let events = match cfg.decoder {
        Decoder::MaximumLikelihood => vec![("wrong_codeword", tally.get(WRONG))],
        Decoder::Typicality { .. } => vec![
            ("true_atypical", tally.get(TRUE_ATYPICAL)),
            ("wrong_typical", tally.get(WRONG)),
        ],
    };
    Ok(SimReport::new(
        cfg,
        tally.get(ERROR),
        Vec::new(),
        events,
        vec![("messages", m)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{tests::xor_channel, Dmc};
    use crate::codingsim::CodebookMode;
    use crate::solvers::single_user_capacity;

    fn xor_pmf() -> Pmf {
        // strategies (0,1) and (1,0) cancel the state
        Pmf::new(vec![0.0, 0.5, 0.5, 0.0]).unwrap()
    }

    #[test]
    fn xor_half_rate_is_reliable() {
        let mut cfg = SimConfig::new(16, 500, 21);
        cfg.rate = 0.5;
        let r = simulate_single_user(&xor_channel(0.3), &xor_pmf(), &cfg).unwrap();
        assert!(r.overall.rate <= 0.05, "{:?}", r.overall);
        assert!(r.overall.errors <= r.event("wrong_codeword").unwrap());
    }

    #[test]
    fn zero_rate_never_errs() {
        let cfg = SimConfig::new(8, 50, 1);
        let r = simulate_single_user(&xor_channel(0.3), &xor_pmf(), &cfg).unwrap();
        assert_eq!(r.overall.errors, 0);
        let mut typ = cfg.clone();
        typ.decoder = Decoder::Typicality { epsilon: 0.1 };
        let r = simulate_single_user(&xor_channel(0.3), &xor_pmf(), &typ).unwrap();
        assert_eq!(r.overall.errors, 0);
    }

    #[test]
    fn useless_channel_is_chance_level() {
        let same = Dmc::new(2, 2, vec![0.4, 0.6, 0.4, 0.6]).unwrap();
        let ch = StateChannel::state_independent(&same, Pmf::uniform(2)).unwrap();
        let mut cfg = SimConfig::new(8, 400, 2);
        cfg.rate = 0.5;
        let r = simulate_single_user(&ch, &Pmf::uniform(4), &cfg).unwrap();
        assert!(
            r.overall.rate >= 1.0 - 2.0 * (-4f64).exp2(),
            "{:?}",
            r.overall
        );
    }

    #[test]
    fn deterministic_and_cached_mode() {
        let ch = xor_channel(0.1);
        let pmf = single_user_capacity(&ch, 1e-10, 10_000, 4096)
            .unwrap()
            .report
            .argmax[0]
            .clone();
        let mut cfg = SimConfig::new(8, 100, 9);
        cfg.rate = 0.8;
        cfg.decoder = Decoder::Typicality { epsilon: 0.5 };
        let pmf = Pmf::new(pmf).unwrap();
        let a = simulate_single_user(&ch, &pmf, &cfg).unwrap();
        assert_eq!(a, simulate_single_user(&ch, &pmf, &cfg).unwrap());
        cfg.codebook = CodebookMode::Cached;
        let b = simulate_single_user(&ch, &pmf, &cfg).unwrap();
        assert_eq!(b, simulate_single_user(&ch, &pmf, &cfg).unwrap());
        assert!(a.overall.errors <= a.events.iter().map(|e| e.1).sum());
    }
}
