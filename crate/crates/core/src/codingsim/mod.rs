//! Monte Carlo random coding: codebooks drawn from strategy pmfs, strategy
//! encoders driven by the causal state, and typicality or maximum-likelihood
//! decoders.
//!
//! Every trial derives its own seed from the configured seed and the trial
//! index, so reports are identical for any worker count. Codewords are
//! addressed by counter (see [`Codebook`]), which lets decoders touch only the
//! symbols they need.
//!
//! Maximum-likelihood decoders rank candidates by single-letter metrics of the
//! strategy channel seen by each decoder; ties go to the lowest index. Error
//! events count trials in which some wrong candidate of the named class is
//! typical (typicality) or outranks the transmitted one (maximum likelihood),
//! so a decoding error always triggers at least one event.

mod bc;
mod codebook;
mod mac;
mod relay;
mod single;
mod typicality;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channels::{BcWitness, ChannelError, RelayWitness};
use crate::probcore::ProbError;
use crate::seeding::{derive_seed, task_rng};

pub use bc::simulate_bc;
pub use codebook::Codebook;
pub use mac::simulate_mac;
pub use relay::simulate_relay;
pub use single::simulate_single_user;
pub use typicality::joint_typicality;

/// Default bound on any single message or bin count.
pub const DEFAULT_MESSAGE_CAP: usize = 1 << 20;

/// Default typicality slack.
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("broadcast channel is not physically degraded (x={}, s={}, y1={}, residual {:.3e})", .0.x, .0.s, .0.y1, .0.residual)]
    BcNotDegraded(BcWitness),
    #[error("relay channel is not physically degraded (x={}, x1={}, s={}, y1={}, residual {:.3e})", .0.x, .0.x1, .0.s, .0.y1, .0.residual)]
    RelayNotDegraded(RelayWitness),
    #[error("{what}: 2^({blocklength} * {rate}) codewords exceed the cap of {cap}")]
    CodebookCap {
        what: &'static str,
        blocklength: usize,
        rate: f64,
        cap: usize,
    },
    #[error("sequence {index} has length {got}, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("{got} sequences for a joint pmf with {expected} axes")]
    AxisMismatch { expected: usize, got: usize },
    #[error("symbol {symbol} out of range for axis `{axis}` of size {size}")]
    SymbolOutOfRange {
        axis: String,
        symbol: usize,
        size: usize,
    },
    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decoder {
    MaximumLikelihood,
    /// Strong typicality with relative slack `epsilon`; the decoded index
    /// must be the unique typical candidate.
    Typicality {
        epsilon: f64,
    },
}

impl Decoder {
    pub fn name(&self) -> &'static str {
        match self {
            Decoder::MaximumLikelihood => "ml",
            Decoder::Typicality { .. } => "typicality",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodebookMode {
    /// A new random codebook in every trial.
    Fresh,
    /// One codebook per configuration, shared by all trials.
    Cached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub blocklength: usize,
    /// `R` for single-user and relay, `R1` for broadcast and multiple access.
    pub rate: f64,
    /// `R2` for broadcast and multiple access.
    pub rate2: f64,
    /// Relay bin rate `R0`.
    pub bin_rate: f64,
    /// Relay blocks `B`; `B - 1` messages are sent.
    pub blocks: usize,
    pub trials: usize,
    pub seed: u64,
    pub decoder: Decoder,
    pub codebook: CodebookMode,
    pub message_cap: usize,
    pub strategy_cap: usize,
}

impl SimConfig {
    pub fn new(blocklength: usize, trials: usize, seed: u64) -> Self {
        Self {
            blocklength,
            rate: 0.0,
            rate2: 0.0,
            bin_rate: 0.0,
            blocks: 2,
            trials,
            seed,
            decoder: Decoder::MaximumLikelihood,
            codebook: CodebookMode::Fresh,
            message_cap: DEFAULT_MESSAGE_CAP,
            strategy_cap: crate::channels::DEFAULT_STRATEGY_CAP,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.blocklength == 0 || self.trials == 0 {
            return Err(SimError::InvalidConfig(
                "blocklength and trials must be positive".into(),
            ));
        }
        for r in [self.rate, self.rate2, self.bin_rate] {
            if !(r.is_finite() && r >= 0.0) {
                return Err(SimError::InvalidConfig(format!(
                    "rate {r} is not a nonnegative number"
                )));
            }
        }
        if let Decoder::Typicality { epsilon } = self.decoder {
            if !(epsilon.is_finite() && epsilon >= 0.0) {
                return Err(SimError::InvalidConfig(format!(
                    "epsilon {epsilon} is invalid"
                )));
            }
        }
        Ok(())
    }

    fn count(&self, what: &'static str, rate: f64) -> Result<usize> {
        message_count(self.blocklength, rate, self.message_cap).ok_or(SimError::CodebookCap {
            what,
            blocklength: self.blocklength,
            rate,
            cap: self.message_cap,
        })
    }

    /// Seed of the codebook named `tag` in `trial`.
    fn codebook_key(&self, trial: u64, tag: u64) -> u64 {
        match self.codebook {
            CodebookMode::Fresh => derive_seed(self.seed, &[trial, tag]),
            CodebookMode::Cached => derive_seed(self.seed, &[u64::MAX, tag]),
        }
    }
}

/// `ceil(2^(n R))`, or `None` above `cap`.
pub fn message_count(blocklength: usize, rate: f64, cap: usize) -> Option<usize> {
    let exponent = blocklength as f64 * rate;
    if exponent > (cap as f64).log2() + 1e-9 {
        return None;
    }
    let count = (exponent.exp2() * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (count <= cap).then_some(count)
}

/// Wilson score interval at 95% confidence: `(lower, upper)`.
pub fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.96;
    let n = trials as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + Z * Z / n;
    let center = (p + Z * Z / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + Z * Z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub errors: usize,
    pub trials: usize,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ErrorEstimate {
    pub fn new(errors: usize, trials: usize) -> Self {
        let (lower, upper) = wilson_interval(errors, trials);
        Self {
            errors,
            trials,
            rate: if trials == 0 {
                0.0
            } else {
                errors as f64 / trials as f64
            },
            lower,
            upper,
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.upper - self.lower) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Fraction of trials with any decoding error.
    pub overall: ErrorEstimate,
    /// Per-receiver or per-message error rates.
    pub breakdown: Vec<(&'static str, ErrorEstimate)>,
    /// Error-event counts; every failed trial triggers at least one event.
    pub events: Vec<(&'static str, usize)>,
    /// Message, pair and bin counts actually used.
    pub message_counts: Vec<(&'static str, usize)>,
    /// `log2(count) / n` for each entry of `message_counts`.
    pub effective_rates: Vec<(&'static str, f64)>,
    pub config: SimConfig,
}

impl SimReport {
    fn new(
        config: &SimConfig,
        overall: usize,
        breakdown: Vec<(&'static str, ErrorEstimate)>,
        events: Vec<(&'static str, usize)>,
        message_counts: Vec<(&'static str, usize)>,
    ) -> Self {
        let n = config.blocklength as f64;
        let effective_rates = message_counts
            .iter()
            .map(|&(k, m)| (k, (m as f64).log2() / n))
            .collect();
        Self {
            overall: ErrorEstimate::new(overall, config.trials),
            breakdown,
            events,
            message_counts,
            effective_rates,
            config: config.clone(),
        }
    }

    pub fn event(&self, name: &str) -> Option<usize> {
        self.events
            .iter()
            .find(|(k, _)| *k == name)
            .map(|&(_, v)| v)
    }
}

/// Tallies merged across trials, with fixed slot names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Tally(Vec<usize>);

impl Tally {
    pub(crate) fn zeros(slots: usize) -> Self {
        Self(vec![0; slots])
    }

    pub(crate) fn bump(&mut self, slot: usize, by: bool) {
        self.0[slot] += by as usize;
    }

    pub(crate) fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
        self
    }

    pub(crate) fn get(&self, slot: usize) -> usize {
        self.0[slot]
    }
}

/// Runs `trial` for every trial index in parallel and sums the tallies.
pub(crate) fn run_trials<F>(cfg: &SimConfig, slots: usize, trial: F) -> Tally
where
    F: Fn(u64, &mut ChaCha8Rng, &mut Tally) + Sync,
{
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut tally = Tally::zeros(slots);
            trial(t, &mut task_rng(cfg.seed, &[t]), &mut tally);
            tally
        })
        .reduce(|| Tally::zeros(slots), Tally::merge)
}

/// `log2` of each entry, with `log2 0 = -inf`.
pub(crate) fn log2_table(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .map(|&p| if p > 0.0 { p.log2() } else { f64::NEG_INFINITY })
        .collect()
}

/// Sum of `term(0..n)` unless the partial sum drops below `floor`.
///
/// Terms are nonpositive, so partial sums only decrease and pruning never
/// discards a candidate that could reach `floor`.
#[inline]
pub(crate) fn pruned_sum(n: usize, floor: f64, mut term: impl FnMut(usize) -> f64) -> Option<f64> {
    let mut acc = 0.0;
    for i in 0..n {
        acc += term(i);
        if acc < floor {
            return None;
        }
    }
    Some(acc)
}

/// Whether candidate `(index, metric)` would be decoded ahead of the
/// transmitted candidate under the lowest-index tie rule.
#[inline]
pub(crate) fn outranks(index: usize, metric: f64, truth: usize, truth_metric: f64) -> bool {
    metric > truth_metric || (metric == truth_metric && index < truth)
}

/// Maximum-likelihood incumbent, seeded with the transmitted candidate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Incumbent {
    pub index: usize,
    pub metric: f64,
}

impl Incumbent {
    pub(crate) fn offer(&mut self, index: usize, metric: f64) {
        if metric > self.metric || (metric == self.metric && index < self.index) {
            self.index = index;
            self.metric = metric;
        }
    }
}

pub(crate) fn check_pmf_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(SimError::InvalidConfig(format!(
            "{what} has {got} entries, expected {expected}"
        )));
    }
    Ok(())
}

/// Conditional rows `p(child | parent)` from a joint flattened parent-outer;
/// rows of parents with zero mass are uniform.
pub(crate) fn conditional_rows(joint: &[f64], parents: usize) -> Vec<Vec<f64>> {
    let children = joint.len() / parents;
    joint
        .chunks(children)
        .map(|row| {
            let m: f64 = row.iter().sum();
            if m > 0.0 {
                row.iter().map(|v| v / m).collect()
            } else {
                vec![1.0 / children as f64; children]
            }
        })
        .collect()
}
