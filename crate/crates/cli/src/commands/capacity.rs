use std::time::Instant;

use statecap::channels::{induced_strategy_channel, DEFAULT_STRATEGY_CAP};
use statecap::solvers::{
    grid_oracle_maximize, relay_capacity, relay_terms, single_user_capacity, OracleResult,
    RelayConfig, SolveReport, SolveStatus, DEFAULT_ORACLE_BUDGET,
};

use super::{emit_csv, resolve_seed, strategies, strategy_label, Argv};
use crate::args::CapacityArgs;
use crate::channel_file::{Channel, Model};
use crate::error::{exit, Result};
use crate::manifest::RunManifest;

/// Lattice denominators of the `--oracle` check.
pub const SINGLE_ORACLE_RESOLUTION: usize = 64;
pub const RELAY_ORACLE_RESOLUTION: usize = 32;

const MAX_ITER: usize = 100_000;

pub const HEADER: [&str; 13] = [
    "model",
    "value_bits",
    "upper_bits",
    "label",
    "status",
    "iterations",
    "restarts",
    "destination_bits",
    "relay_bits",
    "binding",
    "oracle_bits",
    "oracle_resolution",
    "oracle_points",
];

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::IterationLimit => "iteration limit",
        SolveStatus::RestartLimit => "best of restarts",
        SolveStatus::BoundOnly => "bound only",
    }
}

fn oracle_line(o: &OracleResult, value: f64, resolution: usize) -> String {
    format!(
        "oracle: {:.6} at resolution {resolution} ({} points), solver - oracle = {:.3e}",
        o.value,
        o.evaluations,
        value - o.value
    )
}

pub fn capacity(args: &CapacityArgs) -> Result<i32> {
    let start = Instant::now();
    let (file, channel) = super::load(&args.channel)?;
    super::require(file.model, &[Model::Single, Model::Relay], "capacity")?;

    let mut argv = Argv::new("capacity", &args.channel);
    let mut config = Vec::new();
    let mut seed = None;
    let mut row = vec![String::new(); HEADER.len()];
    row[0] = file.model.to_string();
    let report: SolveReport;

    match &channel {
        Channel::Single(ch) => {
            let tol = args.tol.unwrap_or(1e-9);
            argv.opt("tol", tol);
            config.push(("tol".to_string(), tol.to_string()));
            let r = single_user_capacity(ch, tol, MAX_ITER, DEFAULT_STRATEGY_CAP)?;
            let mut rep = r.report.clone();
            println!("model: single");
            println!("C = {:.6} ({})", rep.value, rep.label.as_str());
            if let Some(u) = rep.upper_bound {
                println!("bracket: [{:.9}, {:.9}] bits", rep.value, u);
            }
            println!(
                "status: {}, {} iterations",
                status_name(rep.status),
                rep.iterations
            );
            println!("argmax p(t), t = (t(s=0),...):");
            for (t, &p) in r.strategies.iter().zip(&rep.argmax[0]) {
                if p > 1e-9 {
                    println!("  {} {p:.6}", strategy_label(t));
                }
            }
            if args.oracle {
                let v = induced_strategy_channel(ch, DEFAULT_STRATEGY_CAP)?;
                let o = grid_oracle_maximize(
                    |p| v.mutual_information(&p[0]),
                    &[v.inputs()],
                    SINGLE_ORACLE_RESOLUTION,
                    DEFAULT_ORACLE_BUDGET,
                )?;
                println!("{}", oracle_line(&o, rep.value, SINGLE_ORACLE_RESOLUTION));
                rep.oracle_gap = Some(rep.value - o.value);
                row[10] = o.value.to_string();
                row[11] = SINGLE_ORACLE_RESOLUTION.to_string();
                row[12] = o.evaluations.to_string();
            }
            report = rep;
        }
        Channel::Relay(ch) => {
            let s = resolve_seed(args.seed);
            seed = Some(s);
            let tol = args.tol.unwrap_or(1e-12);
            argv.opt("tol", tol)
                .opt("restarts", args.restarts)
                .opt("seed", s);
            config.push(("tol".to_string(), tol.to_string()));
            config.push(("restarts".to_string(), args.restarts.to_string()));
            let cfg = RelayConfig {
                restarts: args.restarts,
                seed: s,
                tol,
                ..RelayConfig::default()
            };
            let r = relay_capacity(ch, &cfg)?;
            let mut rep = r.report.clone();
            println!("model: relay");
            println!("C \u{2265} {:.6} ({})", rep.value, rep.label.as_str());
            println!("I(T,T1;Y) = {:.6}", r.terms.destination);
            println!("I(T;Y1|T1,S) = {:.6}", r.terms.relay);
            println!("binding: {}", r.binding.as_str());
            println!(
                "status: {}, {} restarts",
                status_name(rep.status),
                rep.restarts
            );
            let ts = strategies(ch.x_size(), ch.s_size())?;
            let t1s = strategies(ch.x1_size(), ch.s_size())?;
            println!("argmax q(t, t1):");
            for (i, &p) in rep.argmax[0].iter().enumerate() {
                if p > 1e-9 {
                    let (t, t1) = (i / r.t1_size, i % r.t1_size);
                    println!(
                        "  t={} t1={} {p:.6}",
                        strategy_label(&ts[t]),
                        strategy_label(&t1s[t1])
                    );
                }
            }
            row[7] = r.terms.destination.to_string();
            row[8] = r.terms.relay.to_string();
            row[9] = r.binding.as_str().to_string();
            if args.oracle {
                let dims = [r.t_size * r.t1_size];
                let o = grid_oracle_maximize(
                    |q| relay_terms(ch, &q[0], DEFAULT_STRATEGY_CAP).map_or(0.0, |t| t.min()),
                    &dims,
                    RELAY_ORACLE_RESOLUTION,
                    DEFAULT_ORACLE_BUDGET,
                )?;
                println!("{}", oracle_line(&o, rep.value, RELAY_ORACLE_RESOLUTION));
                rep.oracle_gap = Some(rep.value - o.value);
                row[10] = o.value.to_string();
                row[11] = RELAY_ORACLE_RESOLUTION.to_string();
                row[12] = o.evaluations.to_string();
            }
            report = rep;
        }
        _ => unreachable!("model checked above"),
    }
    argv.flag("oracle", args.oracle).out(args.out.as_deref());
    config.push(("oracle".to_string(), args.oracle.to_string()));

    if args.out.is_some() {
        row[1] = report.value.to_string();
        row[2] = report
            .upper_bound
            .map(|u| u.to_string())
            .unwrap_or_default();
        row[3] = report.label.as_str().to_string();
        row[4] = status_name(report.status).to_string();
        row[5] = report.iterations.to_string();
        row[6] = report.restarts.to_string();
        let manifest = RunManifest {
            command: argv.into_vec(),
            schema: "capacity/1",
            seed,
            config,
            elapsed: start.elapsed(),
        };
        emit_csv(args.out.as_deref(), &manifest, &HEADER, &[row])?;
    }
    Ok(exit::OK)
}
