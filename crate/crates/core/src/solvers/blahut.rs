use crate::channels::enumerate_strategies;
use crate::channels::{induced_strategy_channel, Dmc, StateChannel, StrategyMap};

use super::{BoundLabel, Result, SolveReport, SolveStatus};

/// `D(W_x || q)` in bits for every input row.
fn divergences(kernel: &Dmc, q: &[f64], out: &mut [f64]) {
    for (x, d) in out.iter_mut().enumerate() {
        *d = kernel
            .row(x)
            .iter()
            .zip(q)
            .filter(|(&w, _)| w > 0.0)
            .map(|(&w, &qy)| w * (w / qy).log2())
            .sum();
    }
}

/// Blahut–Arimoto capacity of an ordinary channel.
///
/// Each iteration brackets the capacity between `I(p; W)` and
/// `max_x D(W_x || pW)`; iteration stops once the bracket is narrower than
/// `tol`. The returned value is the lower end, achieved by the returned pmf.
pub fn blahut_arimoto(kernel: &Dmc, tol: f64, max_iter: usize) -> SolveReport {
    let n = kernel.inputs();
    let mut p = vec![1.0 / n as f64; n];
    let mut d = vec![0.0; n];
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;
    let mut iterations = 0;
    let mut status = SolveStatus::IterationLimit;

    while iterations < max_iter.max(1) {
        iterations += 1;
        let q = kernel.output_distribution(&p);
        divergences(kernel, &q, &mut d);
        lower = p
            .iter()
            .zip(&d)
            .map(|(pi, di)| pi * di)
            .sum::<f64>()
            .max(0.0);
        upper = d
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            .max(lower);
        if upper - lower <= tol {
            status = SolveStatus::Converged;
            break;
        }
        let dmax = upper;
        for (pi, &di) in p.iter_mut().zip(&d) {
            *pi *= (di - dmax).exp2();
        }
        let z: f64 = p.iter().sum();
        for pi in &mut p {
            // keep every input in play so all output masses stay positive
            *pi = (*pi / z).max(1e-300);
        }
        let z: f64 = p.iter().sum();
        for pi in &mut p {
            *pi /= z;
        }
    }

    SolveReport {
        value: lower,
        upper_bound: Some(upper),
        argmax: vec![p],
        iterations,
        restarts: 0,
        oracle_gap: None,
        status,
        label: BoundLabel::Exact,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleUserReport {
    pub report: SolveReport,
    /// Strategy alphabet; `report.argmax[0][k]` is the mass on `strategies[k]`.
    pub strategies: Vec<StrategyMap>,
}

/// Capacity with causal state at the encoder: Blahut–Arimoto on the
/// strategy channel.
pub fn single_user_capacity(
    ch: &StateChannel,
    tol: f64,
    max_iter: usize,
    cap: usize,
) -> Result<SingleUserReport> {
    let strategies = enumerate_strategies(ch.x_size(), ch.s_size(), cap)?;
    let kernel = induced_strategy_channel(ch, cap)?;
    Ok(SingleUserReport {
        report: blahut_arimoto(&kernel, tol, max_iter),
        strategies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::binary_entropy;

    #[test]
    fn noiseless_and_useless() {
        for n in [2usize, 3, 5] {
            let mut rows = vec![0.0; n * n];
            for i in 0..n {
                rows[i * n + i] = 1.0;
            }
            let r = blahut_arimoto(&Dmc::new(n, n, rows).unwrap(), 1e-9, 10_000);
            assert!((r.value - (n as f64).log2()).abs() < 1e-9);
            assert_eq!(r.status, SolveStatus::Converged);
        }
        let same = Dmc::new(3, 2, vec![0.3, 0.7, 0.3, 0.7, 0.3, 0.7]).unwrap();
        let r = blahut_arimoto(&same, 1e-9, 10_000);
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn bsc_closed_form() {
        let bsc = Dmc::new(2, 2, vec![0.9, 0.1, 0.1, 0.9]).unwrap();
        let r = blahut_arimoto(&bsc, 1e-10, 10_000);
        assert!((r.value - (1.0 - binary_entropy(0.1))).abs() < 1e-9);
        assert!((r.value - 0.531004).abs() < 1e-6);
    }

    #[test]
    fn bracket_is_ordered() {
        let k = Dmc::new(3, 3, vec![0.6, 0.3, 0.1, 0.1, 0.8, 0.1, 0.25, 0.25, 0.5]).unwrap();
        let r = blahut_arimoto(&k, 1e-8, 100_000);
        let upper = r.upper_bound.unwrap();
        assert!(r.value <= upper && upper - r.value <= 1e-8);
    }

    #[test]
    fn iteration_limit_reports_lower_bound() {
        let k = Dmc::new(3, 3, vec![0.6, 0.3, 0.1, 0.1, 0.8, 0.1, 0.25, 0.25, 0.5]).unwrap();
        let r = blahut_arimoto(&k, 1e-15, 2);
        assert_eq!(r.status, SolveStatus::IterationLimit);
        let full = blahut_arimoto(&k, 1e-10, 100_000);
        assert!(r.value <= full.value + 1e-12);
    }
}
