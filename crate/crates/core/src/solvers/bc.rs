//! Degraded broadcast region: boundary tracing of
//! `{R1 <= I(T; Y1 | U2), R2 <= I(U2; Y2)}` by weighted-sum scalarization.

use rayon::prelude::*;

use crate::channels::{
    check_bc_degraded, induced_bc_strategy_channel, BcDegradedness, BroadcastStateChannel, Dmc,
    DEFAULT_DEGRADED_TOL, DEFAULT_STRATEGY_CAP,
};
use crate::probcore::entropy_of;
use crate::seeding::{task_rng, uniform_simplex};

use super::simplex::{exponentiated_step, kl_bits};
use super::{
    improves, single_user_capacity, BoundLabel, RatePoint, RateRegion, Result, SingleUserReport,
    SolveReport, SolveStatus, SolverError,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BcConfig {
    pub lambda_points: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Cloud-center alphabet size; `None` means `|T| + 1`.
    pub cloud_size: Option<usize>,
    /// Alternating sweeps per restart.
    pub max_iter: usize,
    /// A restart stops once a sweep gains less than this.
    pub tol: f64,
    pub strategy_cap: usize,
    pub degraded_tol: f64,
}

impl Default for BcConfig {
    fn default() -> Self {
        Self {
            lambda_points: 33,
            restarts: 32,
            seed: 0,
            cloud_size: None,
            max_iter: 2000,
            tol: 1e-13,
            strategy_cap: DEFAULT_STRATEGY_CAP,
            degraded_tol: DEFAULT_DEGRADED_TOL,
        }
    }
}

/// Best point found for one weight `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct BcPoint {
    pub lambda: f64,
    pub rate: RatePoint,
    pub p_u2: Vec<f64>,
    /// `p_t_given_u2[k]` is the strategy pmf of cloud letter `k`.
    pub p_t_given_u2: Vec<Vec<f64>>,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcRegion {
    pub region: RateRegion,
    pub points: Vec<BcPoint>,
    /// Capacity of the strong receiver alone, giving the corner `(C1, 0)`.
    pub strong: SingleUserReport,
    /// Capacity of the weak receiver alone, giving the corner `(0, C2)`.
    pub weak: SingleUserReport,
    pub cloud_size: usize,
}

/// Strategy channels to each receiver.
pub(crate) struct BcProblem {
    w1: Dmc,
    w2: Dmc,
}

pub(crate) struct BcEval {
    pub r1: f64,
    pub r2: f64,
}

impl BcProblem {
    pub(crate) fn new(ch: &BroadcastStateChannel, cap: usize) -> Result<Self> {
        let joint = induced_bc_strategy_channel(ch, cap)?;
        let (n1, n2) = (ch.y1_size(), ch.y2_size());
        let nt = joint.inputs();
        let mut w1 = Vec::with_capacity(nt * n1);
        let mut w2 = Vec::with_capacity(nt * n2);
        for t in 0..nt {
            let row = joint.row(t);
            w1.extend(row.chunks(n2).map(|c| c.iter().sum::<f64>()));
            let mut m = vec![0.0; n2];
            for c in row.chunks(n2) {
                for (a, &b) in m.iter_mut().zip(c) {
                    *a += b;
                }
            }
            w2.extend(m);
        }
        Ok(Self {
            w1: Dmc::from_rows_unchecked(nt, n1, w1),
            w2: Dmc::from_rows_unchecked(nt, n2, w2),
        })
    }

    fn strategies(&self) -> usize {
        self.w1.inputs()
    }

    pub(crate) fn evaluate(&self, a: &[f64], b: &[Vec<f64>]) -> BcEval {
        let mut r1 = 0.0;
        let mut mix2 = vec![0.0; self.w2.outputs()];
        let mut cond_h2 = 0.0;
        for (&ak, bk) in a.iter().zip(b) {
            let m1 = self.w1.output_distribution(bk);
            let i1: f64 = bk
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(t, &p)| p * kl_bits(self.w1.row(t), &m1))
                .sum();
            let m2 = self.w2.output_distribution(bk);
            r1 += ak * i1;
            cond_h2 += ak * entropy_of(&m2);
            for (r, &m) in mix2.iter_mut().zip(&m2) {
                *r += ak * m;
            }
        }
        BcEval {
            r1: r1.max(0.0),
            r2: (entropy_of(&mix2) - cond_h2).max(0.0),
        }
    }

    fn objective(&self, lambda: f64, a: &[f64], b: &[Vec<f64>]) -> f64 {
        let e = self.evaluate(a, b);
        lambda * e.r1 + (1.0 - lambda) * e.r2
    }

    /// Gradients w.r.t. `a` and, per cloud letter, w.r.t. `b[k]` divided by `a[k]`.
    fn gradients(&self, lambda: f64, a: &[f64], b: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let ny2 = self.w2.outputs();
        let m1s: Vec<Vec<f64>> = b.iter().map(|bk| self.w1.output_distribution(bk)).collect();
        let m2s: Vec<Vec<f64>> = b.iter().map(|bk| self.w2.output_distribution(bk)).collect();
        let mut mix2 = vec![0.0; ny2];
        for (&ak, m2) in a.iter().zip(&m2s) {
            for (r, &m) in mix2.iter_mut().zip(m2) {
                *r += ak * m;
            }
        }
        let log_mix: Vec<f64> = mix2
            .iter()
            .map(|&r| if r > 0.0 { r.log2() } else { 0.0 })
            .collect();

        let mut ga = Vec::with_capacity(a.len());
        let mut gb = Vec::with_capacity(a.len());
        for (k, bk) in b.iter().enumerate() {
            let d1: Vec<f64> = (0..bk.len())
                .map(|t| kl_bits(self.w1.row(t), &m1s[k]))
                .collect();
            let i1: f64 = bk.iter().zip(&d1).map(|(p, d)| p * d).sum();
            let log_m2: Vec<f64> = m2s[k]
                .iter()
                .map(|&m| if m > 0.0 { m.log2() } else { 0.0 })
                .collect();
            let cross: f64 = m2s[k].iter().zip(&log_mix).map(|(m, l)| m * l).sum();
            ga.push(lambda * i1 + (1.0 - lambda) * (-cross - entropy_of(&m2s[k])));

            let g: Vec<f64> = (0..bk.len())
                .map(|t| {
                    let row = self.w2.row(t);
                    let spread: f64 = row
                        .iter()
                        .zip(log_m2.iter().zip(&log_mix))
                        .filter(|(&w, _)| w > 0.0)
                        .map(|(&w, (lm, lr))| w * (lm - lr))
                        .sum();
                    lambda * d1[t] + (1.0 - lambda) * spread
                })
                .collect();
            gb.push(g);
        }
        (ga, gb)
    }
}

struct Ascent {
    value: f64,
    a: Vec<f64>,
    b: Vec<Vec<f64>>,
    sweeps: usize,
}

/// Backtracking exponentiated-gradient step that never decreases `f`.
fn eg_block<F>(x: &mut Vec<Vec<f64>>, grad: &[Vec<f64>], eta: &mut f64, current: f64, f: F) -> f64
where
    F: Fn(&[Vec<f64>]) -> f64,
{
    for _ in 0..40 {
        let mut trial = x.clone();
        for (t, g) in trial.iter_mut().zip(grad) {
            exponentiated_step(t, g, *eta);
        }
        let v = f(&trial);
        if v >= current {
            *x = trial;
            *eta = (*eta * 1.5).min(1e4);
            return v;
        }
        *eta *= 0.5;
    }
    current
}

fn ascend(
    problem: &BcProblem,
    lambda: f64,
    mut a: Vec<f64>,
    mut b: Vec<Vec<f64>>,
    cfg: &BcConfig,
) -> Ascent {
    let mut value = problem.objective(lambda, &a, &b);
    let (mut eta_a, mut eta_b) = (1.0, 1.0);
    let mut sweeps = 0;
    while sweeps < cfg.max_iter {
        sweeps += 1;
        let start = value;

        let (ga, _) = problem.gradients(lambda, &a, &b);
        let mut wrapped = vec![a];
        value = eg_block(&mut wrapped, &[ga], &mut eta_a, value, |x| {
            problem.objective(lambda, &x[0], &b)
        });
        a = wrapped.pop().unwrap();

        let (_, gb) = problem.gradients(lambda, &a, &b);
        value = eg_block(&mut b, &gb, &mut eta_b, value, |x| {
            problem.objective(lambda, &a, x)
        });

        if value - start < cfg.tol {
            break;
        }
    }
    Ascent {
        value,
        a,
        b,
        sweeps,
    }
}

/// Traces the broadcast region over a uniform `lambda` grid on `[0, 1]`.
pub fn bc_region(ch: &BroadcastStateChannel, cfg: &BcConfig) -> Result<BcRegion> {
    if cfg.lambda_points < 2 || cfg.restarts == 0 {
        return Err(SolverError::InvalidConfig(
            "need at least 2 lambda points and 1 restart".into(),
        ));
    }
    if let BcDegradedness::NotDegraded { witness } = check_bc_degraded(ch, cfg.degraded_tol) {
        return Err(SolverError::BcNotDegraded(witness));
    }
    let problem = BcProblem::new(ch, cfg.strategy_cap)?;
    let nt = problem.strategies();
    let k = cfg.cloud_size.unwrap_or(nt + 1).max(1);

    let strong = single_user_capacity(&ch.strong_marginal(), 1e-10, 200_000, cfg.strategy_cap)?;
    let weak = single_user_capacity(&ch.weak_marginal(), 1e-10, 200_000, cfg.strategy_cap)?;

    let tasks: Vec<(usize, usize)> = (0..cfg.lambda_points)
        .flat_map(|l| (0..cfg.restarts).map(move |r| (l, r)))
        .collect();
    let runs: Vec<Ascent> = tasks
        .par_iter()
        .map(|&(l, r)| {
            let lambda = l as f64 / (cfg.lambda_points - 1) as f64;
            let mut rng = task_rng(cfg.seed, &[l as u64, r as u64]);
            let a = uniform_simplex(&mut rng, k);
            let b = (0..k).map(|_| uniform_simplex(&mut rng, nt)).collect();
            ascend(&problem, lambda, a, b, cfg)
        })
        .collect();

    let mut points = Vec::with_capacity(cfg.lambda_points);
    for (l, chunk) in runs.chunks(cfg.restarts).enumerate() {
        let lambda = l as f64 / (cfg.lambda_points - 1) as f64;
        let mut best = &chunk[0];
        let mut best_params: Vec<Vec<f64>> = params(best);
        for run in &chunk[1..] {
            let p = params(run);
            if improves(run.value, &p, best.value, &best_params) {
                best = run;
                best_params = p;
            }
        }
        let e = problem.evaluate(&best.a, &best.b);
        points.push(BcPoint {
            lambda,
            rate: RatePoint::new(e.r1, e.r2),
            p_u2: best.a.clone(),
            p_t_given_u2: best.b.clone(),
            report: SolveReport {
                value: best.value,
                upper_bound: None,
                argmax: best_params,
                iterations: chunk.iter().map(|r| r.sweeps).sum(),
                restarts: cfg.restarts,
                oracle_gap: None,
                status: SolveStatus::RestartLimit,
                label: BoundLabel::AchievableLowerBound,
            },
        });
    }

    let mut all: Vec<RatePoint> = points.iter().map(|p| p.rate).collect();
    all.push(RatePoint::new(strong.report.value, 0.0));
    all.push(RatePoint::new(0.0, weak.report.value));
    Ok(BcRegion {
        region: RateRegion::from_points(&all),
        points,
        strong,
        weak,
        cloud_size: k,
    })
}

fn params(run: &Ascent) -> Vec<Vec<f64>> {
    std::iter::once(run.a.clone())
        .chain(run.b.iter().cloned())
        .collect()
}
