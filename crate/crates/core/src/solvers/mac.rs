//! Multiple-access regions: pentagon unions over product strategy pmfs
//! (inner) and over joint strategy pmfs (outer).

use rayon::prelude::*;

use crate::channels::{enumerate_strategies, Dmc, MacStateChannel, DEFAULT_STRATEGY_CAP};
use crate::probcore::entropy_of;
use crate::seeding::{task_rng, uniform_simplex};

use super::oracle::lattice_points;
use super::{blahut_arimoto, BoundLabel, RatePoint, RateRegion, Result, SolverError};

/// Largest `|T1| * |T2|` product handled.
pub const MAX_STRATEGY_PAIRS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct MacConfig {
    /// Random draws per family (product, and additionally joint for the outer region).
    pub samples: usize,
    pub seed: u64,
    /// Denominator of the deterministic lattice added to the random draws.
    pub lattice_resolution: usize,
    /// The lattice is skipped when it would exceed this many points.
    pub lattice_limit: usize,
    pub strategy_cap: usize,
}

impl Default for MacConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            seed: 0,
            lattice_resolution: 2,
            lattice_limit: 20_000,
            strategy_cap: DEFAULT_STRATEGY_CAP,
        }
    }
}

/// Pentagon constraints of one input law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacTerms {
    /// `I(T1; Y | T2)`.
    pub i1: f64,
    /// `I(T2; Y | T1)`.
    pub i2: f64,
    /// `I(T1, T2; Y)`.
    pub sum: f64,
}

impl MacTerms {
    pub fn corners(&self) -> [RatePoint; 2] {
        [
            RatePoint::new(self.i1, self.i2.min(self.sum - self.i1)),
            RatePoint::new(self.i1.min(self.sum - self.i2), self.i2),
        ]
    }

    /// Whether `p` lies in this pentagon with the given margin.
    pub fn contains(&self, p: RatePoint, margin: f64) -> bool {
        p.r1 <= self.i1 - margin && p.r2 <= self.i2 - margin && p.sum() <= self.sum - margin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacPoint {
    pub terms: MacTerms,
    /// `p(t1, t2)` flattened with `t1` outer.
    pub joint: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacRegion {
    pub region: RateRegion,
    pub points: Vec<MacPoint>,
    pub label: BoundLabel,
    pub t1_size: usize,
    pub t2_size: usize,
}

impl MacRegion {
    /// Candidate whose pentagon contains `p` with the largest slack.
    pub fn best_containing(&self, p: RatePoint) -> Option<&MacPoint> {
        let slack = |t: &MacTerms| (t.i1 - p.r1).min(t.i2 - p.r2).min(t.sum - p.sum());
        self.points
            .iter()
            .filter(|m| slack(&m.terms) >= 0.0)
            .max_by(|a, b| slack(&a.terms).total_cmp(&slack(&b.terms)))
    }
}

/// `p(y | t1, t2)` for all strategy pairs.
pub(crate) struct MacProblem {
    n1: usize,
    n2: usize,
    ny: usize,
    kernel: Vec<f64>,
}

impl MacProblem {
    pub(crate) fn new(ch: &MacStateChannel, cap: usize) -> Result<Self> {
        let t1s = enumerate_strategies(ch.x1_size(), ch.s_size(), cap)?;
        let t2s = enumerate_strategies(ch.x2_size(), ch.s_size(), cap)?;
        let (n1, n2, ny) = (t1s.len(), t2s.len(), ch.y_size());
        if n1.saturating_mul(n2) > MAX_STRATEGY_PAIRS {
            return Err(SolverError::InvalidConfig(format!(
                "{n1} x {n2} strategy pairs exceed {MAX_STRATEGY_PAIRS}"
            )));
        }
        let mut kernel = vec![0.0; n1 * n2 * ny];
        for (a, t1) in t1s.iter().enumerate() {
            for (b, t2) in t2s.iter().enumerate() {
                let dst = &mut kernel[(a * n2 + b) * ny..][..ny];
                for (s, &ps) in ch.state_pmf().probs().iter().enumerate() {
                    if ps == 0.0 {
                        continue;
                    }
                    for (d, &v) in dst.iter_mut().zip(ch.row(t1.apply(s), t2.apply(s), s)) {
                        *d += ps * v;
                    }
                }
            }
        }
        Ok(Self { n1, n2, ny, kernel })
    }

    fn row(&self, a: usize, b: usize) -> &[f64] {
        &self.kernel[(a * self.n2 + b) * self.ny..][..self.ny]
    }

    pub(crate) fn sizes(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub(crate) fn terms(&self, joint: &[f64]) -> MacTerms {
        let ny = self.ny;
        let mut out = vec![0.0; ny];
        let mut by_t1 = vec![0.0; self.n1 * ny];
        let mut by_t2 = vec![0.0; self.n2 * ny];
        let mut h_cond = 0.0;
        for a in 0..self.n1 {
            for b in 0..self.n2 {
                let w = joint[a * self.n2 + b];
                if w == 0.0 {
                    continue;
                }
                let row = self.row(a, b);
                h_cond += w * entropy_of(row);
                for y in 0..ny {
                    let v = w * row[y];
                    out[y] += v;
                    by_t1[a * ny + y] += v;
                    by_t2[b * ny + y] += v;
                }
            }
        }
        // sum over groups of p(group) H(Y | group)
        let grouped = |rows: &[f64]| -> f64 {
            rows.chunks(ny)
                .map(|r| {
                    let m: f64 = r.iter().sum();
                    if m > 0.0 {
                        m * entropy_of(&r.iter().map(|v| v / m).collect::<Vec<_>>())
                    } else {
                        0.0
                    }
                })
                .sum()
        };
        let h_given_t1 = grouped(&by_t1);
        let h_given_t2 = grouped(&by_t2);
        MacTerms {
            i1: (h_given_t2 - h_cond).max(0.0),
            i2: (h_given_t1 - h_cond).max(0.0),
            sum: (entropy_of(&out) - h_cond).max(0.0),
        }
    }

    /// Best single-sender laws with the other sender pinned to one strategy.
    fn pinned_optima(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        if self.n1 * self.n2 > 4096 {
            return out;
        }
        for b in 0..self.n2 {
            let rows: Vec<f64> = (0..self.n1).flat_map(|a| self.row(a, b).to_vec()).collect();
            let p1 = blahut_arimoto(
                &Dmc::from_rows_unchecked(self.n1, self.ny, rows),
                1e-10,
                100_000,
            )
            .argmax
            .remove(0);
            out.push(product(&p1, &unit(self.n2, b)));
        }
        for a in 0..self.n1 {
            let rows: Vec<f64> = (0..self.n2).flat_map(|b| self.row(a, b).to_vec()).collect();
            let p2 = blahut_arimoto(
                &Dmc::from_rows_unchecked(self.n2, self.ny, rows),
                1e-10,
                100_000,
            )
            .argmax
            .remove(0);
            out.push(product(&unit(self.n1, a), &p2));
        }
        out
    }
}

fn unit(n: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[at] = 1.0;
    v
}

fn product(p1: &[f64], p2: &[f64]) -> Vec<f64> {
    p1.iter()
        .flat_map(|&a| p2.iter().map(move |&b| a * b))
        .collect()
}

fn lattice_count(d: usize, res: usize) -> Option<usize> {
    super::lattice_size(&[d], res).and_then(|n| usize::try_from(n).ok())
}

fn product_candidates(problem: &MacProblem, cfg: &MacConfig) -> Vec<Vec<f64>> {
    let (n1, n2) = problem.sizes();
    let mut out = problem.pinned_optima();
    let res = cfg.lattice_resolution.max(1);
    if let (Some(l1), Some(l2)) = (lattice_count(n1, res), lattice_count(n2, res)) {
        if l1.saturating_mul(l2) <= cfg.lattice_limit {
            let g1 = lattice_points(n1, res);
            let g2 = lattice_points(n2, res);
            for a in &g1 {
                for b in &g2 {
                    out.push(product(a, b));
                }
            }
        }
    }
    for i in 0..cfg.samples {
        let mut rng = task_rng(cfg.seed, &[0, i as u64]);
        let p1 = uniform_simplex(&mut rng, n1);
        let p2 = uniform_simplex(&mut rng, n2);
        out.push(product(&p1, &p2));
    }
    out
}

fn joint_candidates(problem: &MacProblem, cfg: &MacConfig) -> Vec<Vec<f64>> {
    let (n1, n2) = problem.sizes();
    let cells = n1 * n2;
    let mut out = Vec::new();
    let res = cfg.lattice_resolution.max(1);
    if lattice_count(cells, res).is_some_and(|n| n <= cfg.lattice_limit) {
        out.extend(lattice_points(cells, res));
    }
    for i in 0..cfg.samples {
        out.push(uniform_simplex(
            &mut task_rng(cfg.seed, &[1, i as u64]),
            cells,
        ));
    }
    out
}

fn build(problem: &MacProblem, candidates: Vec<Vec<f64>>, label: BoundLabel) -> MacRegion {
    let points: Vec<MacPoint> = candidates
        .into_par_iter()
        .map(|joint| MacPoint {
            terms: problem.terms(&joint),
            joint,
        })
        .collect();
    let corners: Vec<RatePoint> = points.iter().flat_map(|p| p.terms.corners()).collect();
    let (t1_size, t2_size) = problem.sizes();
    MacRegion {
        region: RateRegion::from_points(&corners),
        points,
        label,
        t1_size,
        t2_size,
    }
}

/// Union of pentagons over product laws `p(t1) p(t2)`: Dirichlet draws,
/// a coarse lattice of product pmfs, and per-sender Blahut–Arimoto optima.
pub fn mac_inner_region(ch: &MacStateChannel, cfg: &MacConfig) -> Result<MacRegion> {
    let problem = MacProblem::new(ch, cfg.strategy_cap)?;
    let candidates = product_candidates(&problem, cfg);
    Ok(build(
        &problem,
        candidates,
        BoundLabel::AchievableLowerBound,
    ))
}

/// Union of pentagons over joint laws `p(t1, t2)`. Every inner candidate is
/// included, so the result contains [`mac_inner_region`] for the same config.
/// The union is sampled, hence approximates the outer bound from below.
pub fn mac_outer_region(ch: &MacStateChannel, cfg: &MacConfig) -> Result<MacRegion> {
    let problem = MacProblem::new(ch, cfg.strategy_cap)?;
    let mut candidates = product_candidates(&problem, cfg);
    candidates.extend(joint_candidates(&problem, cfg));
    Ok(build(&problem, candidates, BoundLabel::SampledOuterBound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::Pmf;

    pub(crate) fn adder() -> MacStateChannel {
        let mut k = Vec::new();
        for x1 in 0..2 {
            for x2 in 0..2 {
                let mut row = vec![0.0; 3];
                row[x1 + x2] = 1.0;
                k.extend(row);
            }
        }
        MacStateChannel::new(2, 2, 1, 3, k, Pmf::uniform(1)).unwrap()
    }

    fn quick() -> MacConfig {
        MacConfig {
            samples: 200,
            seed: 5,
            ..MacConfig::default()
        }
    }

    #[test]
    fn adder_sum_rate() {
        let r = mac_inner_region(&adder(), &quick()).unwrap();
        assert!((r.region.max_sum_rate() - 1.5).abs() < 1e-3);
        assert!((r.region.r1_max() - 1.0).abs() < 1e-9);
        let t = MacProblem::new(&adder(), DEFAULT_STRATEGY_CAP)
            .unwrap()
            .terms(&[0.25; 4]);
        assert!((t.sum - 1.5).abs() < 1e-12 && (t.i1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn state_cancelling_xor() {
        let mut k = Vec::new();
        for x1 in 0..2 {
            for x2 in 0..2 {
                for s in 0..2 {
                    let y = x1 ^ x2 ^ s;
                    k.extend(if y == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
                }
            }
        }
        let ch = MacStateChannel::new(2, 2, 2, 2, k, Pmf::uniform(2)).unwrap();
        let r = mac_inner_region(&ch, &quick()).unwrap();
        assert!((r.region.max_sum_rate() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn trivial_second_sender_gives_segment() {
        let bsc = [0.9, 0.1, 0.1, 0.9];
        let ch = MacStateChannel::new(2, 1, 1, 2, bsc.to_vec(), Pmf::uniform(1)).unwrap();
        for r in [
            mac_inner_region(&ch, &quick()).unwrap(),
            mac_outer_region(&ch, &quick()).unwrap(),
        ] {
            assert!((r.region.r1_max() - 0.531004).abs() < 1e-6);
            assert!(r.region.r2_max().abs() < 1e-12);
        }
    }

    #[test]
    fn outer_contains_inner() {
        let inner = mac_inner_region(&adder(), &quick()).unwrap();
        let outer = mac_outer_region(&adder(), &quick()).unwrap();
        assert!(outer.region.contains_region(&inner.region, 1e-9));
        assert_eq!(outer.label, BoundLabel::SampledOuterBound);
    }

    #[test]
    fn correlated_inputs_enlarge_adder_outer_region() {
        // p(0,0) = p(1,1) = 1/3 makes H(Y) = log2 3 while H(X1|X2) = h(1/3)
        let problem = MacProblem::new(&adder(), DEFAULT_STRATEGY_CAP).unwrap();
        let t = problem.terms(&[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]);
        let h = crate::probcore::binary_entropy(1.0 / 3.0);
        assert!((t.i1 - h).abs() < 1e-12 && (t.sum - 3f64.log2()).abs() < 1e-12);
        let corner = t.corners()[0];
        let inner = mac_inner_region(&adder(), &quick()).unwrap();
        assert!(inner.region.depth(corner) < -0.05);
        let mut cfg = quick();
        cfg.samples = 2000;
        let outer = mac_outer_region(&adder(), &cfg).unwrap();
        assert!(
            outer.region.depth(corner) > -2e-2,
            "{}",
            outer.region.depth(corner)
        );
    }
}
