//! Decode-and-forward relay capacity
//! `max_q min{I(T,T1;Y), I(T;Y1|T1,S)}` over joint strategy pmfs `q(t,t1)`.

use rayon::prelude::*;

use crate::channels::{
    check_relay_degraded, enumerate_strategies, RelayDegradedness, RelayStateChannel,
    DEFAULT_DEGRADED_TOL, DEFAULT_STRATEGY_CAP,
};
use crate::seeding::{task_rng, uniform_simplex};

use super::simplex::{kl_bits, project_simplex};
use super::{improves, BoundLabel, Result, SolveReport, SolveStatus, SolverError};

/// Soft-min temperatures, coarse to sharp.
const BETAS: [f64; 8] = [4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0, 16384.0, 65536.0];

#[derive(Debug, Clone, PartialEq)]
pub struct RelayConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Per-stage stopping threshold on the smoothed objective gain.
    pub tol: f64,
    pub max_iter_per_stage: usize,
    pub strategy_cap: usize,
    pub degraded_tol: f64,
}

impl Default for RelayConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            seed: 0,
            tol: 1e-12,
            max_iter_per_stage: 300,
            strategy_cap: DEFAULT_STRATEGY_CAP,
            degraded_tol: DEFAULT_DEGRADED_TOL,
        }
    }
}

/// The two mutual-information terms of the max-min expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayTerms {
    /// `I(T, T1; Y)`.
    pub destination: f64,
    /// `I(T; Y1 | T1, S)`.
    pub relay: f64,
}

impl RelayTerms {
    pub fn min(&self) -> f64 {
        self.destination.min(self.relay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingTerm {
    Destination,
    Relay,
    /// Terms agree within `1e-6`.
    Both,
}

impl BindingTerm {
    pub fn as_str(&self) -> &'static str {
        match self {
            BindingTerm::Destination => "destination",
            BindingTerm::Relay => "relay",
            BindingTerm::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayReport {
    /// `argmax[0]` is `q(t, t1)` flattened with `t` outer.
    pub report: SolveReport,
    pub terms: RelayTerms,
    pub binding: BindingTerm,
    pub t_size: usize,
    pub t1_size: usize,
}

/// Strategy-level kernels of a relay channel.
pub(crate) struct RelayProblem {
    nt: usize,
    n1: usize,
    ns: usize,
    ny: usize,
    ny1: usize,
    state: Vec<f64>,
    /// `p(y | t, t1)`, rows `(t, t1)`.
    dest: Vec<f64>,
    /// `p(y1 | t, t1, s)`, rows `(t1, s, t)`.
    relay: Vec<f64>,
}

impl RelayProblem {
    pub(crate) fn new(ch: &RelayStateChannel, cap: usize) -> Result<Self> {
        let ts = enumerate_strategies(ch.x_size(), ch.s_size(), cap)?;
        let t1s = enumerate_strategies(ch.x1_size(), ch.s_size(), cap)?;
        let (nt, n1, ns) = (ts.len(), t1s.len(), ch.s_size());
        let (ny1, ny) = (ch.y1_size(), ch.y_size());
        let state = ch.state_pmf().probs().to_vec();
        let mut dest = vec![0.0; nt * n1 * ny];
        let mut relay = vec![0.0; n1 * ns * nt * ny1];
        for (t, ts_) in ts.iter().enumerate() {
            for (t1, t1s_) in t1s.iter().enumerate() {
                for (s, &ps) in state.iter().enumerate() {
                    let row = ch.row(ts_.apply(s), t1s_.apply(s), s);
                    let d = &mut dest[(t * n1 + t1) * ny..][..ny];
                    let r = &mut relay[((t1 * ns + s) * nt + t) * ny1..][..ny1];
                    for (y1, chunk) in row.chunks(ny).enumerate() {
                        for (dy, &v) in d.iter_mut().zip(chunk) {
                            *dy += ps * v;
                        }
                        r[y1] = chunk.iter().sum();
                    }
                }
            }
        }
        Ok(Self {
            nt,
            n1,
            ns,
            ny,
            ny1,
            state,
            dest,
            relay,
        })
    }

    fn dest_row(&self, cell: usize) -> &[f64] {
        &self.dest[cell * self.ny..][..self.ny]
    }

    fn relay_row(&self, t1: usize, s: usize, t: usize) -> &[f64] {
        &self.relay[((t1 * self.ns + s) * self.nt + t) * self.ny1..][..self.ny1]
    }

    /// Relay-output mixture for `(t1, s)`; the plain row mean when `q1(t1) = 0`.
    fn relay_mixture(&self, q: &[f64], t1: usize, s: usize) -> Vec<f64> {
        let q1: f64 = (0..self.nt).map(|t| q[t * self.n1 + t1]).sum();
        let mut m = vec![0.0; self.ny1];
        for t in 0..self.nt {
            let w = if q1 > 0.0 {
                q[t * self.n1 + t1] / q1
            } else {
                1.0 / self.nt as f64
            };
            for (a, &b) in m.iter_mut().zip(self.relay_row(t1, s, t)) {
                *a += w * b;
            }
        }
        m
    }

    fn dest_mixture(&self, q: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.ny];
        for (cell, &w) in q.iter().enumerate() {
            for (a, &b) in m.iter_mut().zip(self.dest_row(cell)) {
                *a += w * b;
            }
        }
        m
    }

    /// Both terms and their per-cell gradients (each up to an additive constant).
    fn terms_and_gradients(&self, q: &[f64]) -> (RelayTerms, Vec<f64>, Vec<f64>) {
        let m = self.dest_mixture(q);
        let ga: Vec<f64> = (0..q.len())
            .map(|c| kl_bits(self.dest_row(c), &m))
            .collect();
        let mut gb = vec![0.0; q.len()];
        for t1 in 0..self.n1 {
            for (s, &ps) in self.state.iter().enumerate() {
                if ps == 0.0 {
                    continue;
                }
                let mix = self.relay_mixture(q, t1, s);
                for t in 0..self.nt {
                    gb[t * self.n1 + t1] += ps * kl_bits(self.relay_row(t1, s, t), &mix);
                }
            }
        }
        let dot = |g: &[f64]| q.iter().zip(g).map(|(a, b)| a * b).sum::<f64>().max(0.0);
        let terms = RelayTerms {
            destination: dot(&ga),
            relay: dot(&gb),
        };
        (terms, ga, gb)
    }

    pub(crate) fn terms(&self, q: &[f64]) -> RelayTerms {
        self.terms_and_gradients(q).0
    }

    pub(crate) fn sizes(&self) -> (usize, usize) {
        (self.nt, self.n1)
    }
}

fn soft_min(terms: RelayTerms, beta: f64) -> f64 {
    let (a, b) = (terms.destination, terms.relay);
    let lo = a.min(b);
    lo - ((-beta * (a - lo)).exp2() + (-beta * (b - lo)).exp2()).log2() / beta
}

struct Run {
    value: f64,
    q: Vec<f64>,
    iterations: usize,
}

fn anneal(problem: &RelayProblem, mut q: Vec<f64>, cfg: &RelayConfig) -> Run {
    let mut best_q = q.clone();
    let mut best = problem.terms(&q).min();
    let mut iterations = 0;
    let mut eta = 1.0;
    for &beta in &BETAS {
        let (mut terms, mut ga, mut gb) = problem.terms_and_gradients(&q);
        let mut value = soft_min(terms, beta);
        for _ in 0..cfg.max_iter_per_stage {
            iterations += 1;
            let lo = terms.destination.min(terms.relay);
            let wa = (-beta * (terms.destination - lo)).exp2();
            let wb = (-beta * (terms.relay - lo)).exp2();
            let (wa, wb) = (wa / (wa + wb), wb / (wa + wb));
            let grad: Vec<f64> = ga.iter().zip(&gb).map(|(a, b)| wa * a + wb * b).collect();

            let mut accepted = false;
            for _ in 0..40 {
                let step: Vec<f64> = q.iter().zip(&grad).map(|(x, g)| x + eta * g).collect();
                let trial = project_simplex(&step);
                let (t_terms, t_ga, t_gb) = problem.terms_and_gradients(&trial);
                let t_value = soft_min(t_terms, beta);
                if t_value >= value {
                    let gain = t_value - value;
                    q = trial;
                    terms = t_terms;
                    ga = t_ga;
                    gb = t_gb;
                    value = t_value;
                    eta = (eta * 1.5).min(1e3);
                    accepted = gain >= cfg.tol;
                    break;
                }
                eta *= 0.5;
            }
            let exact = terms.min();
            if improves(exact, &[q.clone()], best, &[best_q.clone()]) {
                best = exact;
                best_q = q.clone();
            }
            if !accepted {
                break;
            }
        }
    }
    Run {
        value: best,
        q: best_q,
        iterations,
    }
}

/// Evaluates both terms at a given joint strategy pmf `q(t,t1)` (flattened, `t` outer).
pub fn relay_terms(ch: &RelayStateChannel, q: &[f64], cap: usize) -> Result<RelayTerms> {
    let problem = RelayProblem::new(ch, cap)?;
    let (nt, n1) = problem.sizes();
    if q.len() != nt * n1 {
        return Err(SolverError::InvalidConfig(format!(
            "q has {} cells, expected {}",
            q.len(),
            nt * n1
        )));
    }
    Ok(problem.terms(q))
}

pub fn relay_capacity(ch: &RelayStateChannel, cfg: &RelayConfig) -> Result<RelayReport> {
    if cfg.restarts == 0 {
        return Err(SolverError::InvalidConfig("need at least 1 restart".into()));
    }
    if let RelayDegradedness::NotDegraded { witness } = check_relay_degraded(ch, cfg.degraded_tol) {
        return Err(SolverError::RelayNotDegraded(witness));
    }
    let problem = RelayProblem::new(ch, cfg.strategy_cap)?;
    let (nt, n1) = problem.sizes();
    let cells = nt * n1;

    let runs: Vec<Run> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                vec![1.0 / cells as f64; cells]
            } else {
                uniform_simplex(&mut task_rng(cfg.seed, &[r as u64]), cells)
            };
            anneal(&problem, start, cfg)
        })
        .collect();

    let mut best = &runs[0];
    for run in &runs[1..] {
        if improves(
            run.value,
            std::slice::from_ref(&run.q),
            best.value,
            std::slice::from_ref(&best.q),
        ) {
            best = run;
        }
    }
    let terms = problem.terms(&best.q);
    let binding = if (terms.destination - terms.relay).abs() <= 1e-6 {
        BindingTerm::Both
    } else if terms.destination < terms.relay {
        BindingTerm::Destination
    } else {
        BindingTerm::Relay
    };
    Ok(RelayReport {
        report: SolveReport {
            value: terms.min(),
            upper_bound: None,
            argmax: vec![best.q.clone()],
            iterations: runs.iter().map(|r| r.iterations).sum(),
            restarts: cfg.restarts,
            oracle_gap: None,
            status: SolveStatus::RestartLimit,
            label: BoundLabel::AchievableLowerBound,
        },
        terms,
        binding,
        t_size: nt,
        t1_size: n1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::Pmf;
    use crate::solvers::{grid_oracle_maximize, DEFAULT_ORACLE_BUDGET};
    use rand::Rng;

    fn two_hop() -> RelayStateChannel {
        let to_relay = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        // y = x1 regardless of y1
        let to_dest = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        RelayStateChannel::degraded(2, 2, 1, 2, 2, &to_relay, &to_dest, Pmf::uniform(1)).unwrap()
    }

    fn quick() -> RelayConfig {
        RelayConfig {
            restarts: 4,
            seed: 3,
            ..RelayConfig::default()
        }
    }

    fn random_stochastic<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<f64> {
        (0..rows).flat_map(|_| uniform_simplex(rng, cols)).collect()
    }

    #[test]
    fn noiseless_two_hop_carries_one_bit() {
        let r = relay_capacity(&two_hop(), &quick()).unwrap();
        assert!((r.report.value - 1.0).abs() < 1e-3, "{}", r.report.value);
        assert!(r.terms.destination >= r.report.value - 1e-9);
        assert!(r.terms.relay >= r.report.value - 1e-9);
    }

    #[test]
    fn useless_destination_gives_zero() {
        let to_relay = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let to_dest = [0.3, 0.7, 0.3, 0.7, 0.3, 0.7, 0.3, 0.7];
        let ch = RelayStateChannel::degraded(2, 2, 1, 2, 2, &to_relay, &to_dest, Pmf::uniform(1))
            .unwrap();
        let r = relay_capacity(&ch, &quick()).unwrap();
        assert!(r.report.value.abs() < 1e-6);
    }

    #[test]
    fn matches_lattice_with_two_states() {
        let mut rng = task_rng(77, &[]);
        for _ in 0..2 {
            let to_relay = random_stochastic(&mut rng, 8, 2);
            let to_dest = random_stochastic(&mut rng, 8, 2);
            let state = Pmf::new(uniform_simplex(&mut rng, 2)).unwrap();
            let ch =
                RelayStateChannel::degraded(2, 2, 2, 2, 2, &to_relay, &to_dest, state).unwrap();
            let solved = relay_capacity(&ch, &quick()).unwrap();
            let problem = RelayProblem::new(&ch, DEFAULT_STRATEGY_CAP).unwrap();
            let oracle = grid_oracle_maximize(
                |p| problem.terms(&p[0]).min(),
                &[16],
                4,
                DEFAULT_ORACLE_BUDGET,
            )
            .unwrap();
            assert!(solved.report.value >= oracle.value - 1e-3);
        }
    }

    #[test]
    fn reproducible() {
        let a = relay_capacity(&two_hop(), &quick()).unwrap();
        let b = relay_capacity(&two_hop(), &quick()).unwrap();
        assert_eq!(a, b);
    }
}
