use std::time::Instant;

use statecap::channels::DEFAULT_STRATEGY_CAP;
use statecap::codingsim::{
    simulate_bc, simulate_mac, simulate_relay, simulate_single_user, Decoder, SimConfig, SimReport,
};
use statecap::probcore::{Axis, JointPmf, Pmf};
use statecap::solvers::{
    bc_region, mac_inner_region, relay_capacity, single_user_capacity, BcConfig, MacConfig,
    MacTerms, RatePoint, RelayConfig,
};

use super::{emit_csv, resolve_seed, Argv};
use crate::args::{DecoderKind, SimulateArgs};
use crate::channel_file::{Channel, Model};
use crate::error::{exit, CliError, Result};
use crate::manifest::RunManifest;

pub const HEADER: [&str; 22] = [
    "law",
    "scheme",
    "decoder",
    "epsilon",
    "blocklength",
    "blocks",
    "trials",
    "seed",
    "r1_bits",
    "r2_bits",
    "r0_bits",
    "errors",
    "error_rate",
    "wilson_lower",
    "wilson_upper",
    "half_width",
    "rx1_error_rate",
    "rx2_error_rate",
    "message_error_rate",
    "events",
    "message_counts",
    "effective_rates",
];

const BA_TOL: f64 = 1e-9;
/// Law masses below this are set to zero before simulating.
pub const LAW_FLOOR: f64 = 1e-9;
const BA_MAX_ITER: usize = 100_000;

/// Target rates of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Target {
    r1: f64,
    r2: Option<f64>,
    r0: Option<f64>,
}

/// Input law chosen for one target, ready to hand to a simulator.
enum Law {
    Single(Pmf),
    Relay(JointPmf),
    Bc { p_u2: Vec<f64>, cond: Vec<Vec<f64>> },
    Mac(Pmf, Pmf),
}

/// Label, rates, `p(u2)` and `p(t|u2)` of a broadcast law.
type BcCandidate = (String, RatePoint, Vec<f64>, Vec<Vec<f64>>);

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn targets(model: Model, args: &SimulateArgs) -> Result<Vec<Target>> {
    match model {
        Model::Single | Model::Relay => {
            if !args.rate1.is_empty() || !args.rate2.is_empty() {
                return Err(usage(format!(
                    "{model} channels take --rate, not --rate1/--rate2"
                )));
            }
            if args.rate.is_empty() {
                return Err(usage(format!("{model} channels need --rate")));
            }
            let r0 = match (model, args.rate0.len()) {
                (Model::Single, 0) => vec![None; args.rate.len()],
                (Model::Single, _) => return Err(usage("--rate0 only applies to relay channels")),
                (_, 0) => vec![Some(0.0); args.rate.len()],
                (_, 1) => vec![Some(args.rate0[0]); args.rate.len()],
                (_, k) if k == args.rate.len() => args.rate0.iter().copied().map(Some).collect(),
                (_, k) => {
                    return Err(usage(format!(
                        "--rate0 has {k} values; give one or one per --rate ({})",
                        args.rate.len()
                    )))
                }
            };
            Ok(args
                .rate
                .iter()
                .zip(r0)
                .map(|(&r1, r0)| Target { r1, r2: None, r0 })
                .collect())
        }
        Model::Bc | Model::Mac => {
            if !args.rate.is_empty() || !args.rate0.is_empty() {
                return Err(usage(format!("{model} channels take --rate1 and --rate2")));
            }
            let (a, b) = (&args.rate1, &args.rate2);
            if a.is_empty() || b.is_empty() {
                return Err(usage(format!(
                    "{model} channels need both --rate1 and --rate2"
                )));
            }
            let len = a.len().max(b.len());
            if (a.len() != len && a.len() != 1) || (b.len() != len && b.len() != 1) {
                return Err(usage(format!(
                    "--rate1 has {} values and --rate2 has {}; lengths must match or be 1",
                    a.len(),
                    b.len()
                )));
            }
            let pick = |v: &[f64], i: usize| if v.len() == 1 { v[0] } else { v[i] };
            Ok((0..len)
                .map(|i| Target {
                    r1: pick(a, i),
                    r2: Some(pick(b, i)),
                    r0: None,
                })
                .collect())
        }
    }
}

fn slack(terms: &MacTerms, p: RatePoint) -> f64 {
    (terms.i1 - p.r1)
        .min(terms.i2 - p.r2)
        .min(terms.sum - p.sum())
}

/// Zeros masses below [`LAW_FLOOR`] and renormalizes. Solver optima leave
/// traces of mass on unused letters, and a strongly typical sequence must
/// visit every cell of positive mass.
fn prune(p: &[f64]) -> Vec<f64> {
    let kept: Vec<f64> = p
        .iter()
        .map(|&v| if v < LAW_FLOOR { 0.0 } else { v })
        .collect();
    let sum: f64 = kept.iter().sum();
    kept.iter().map(|v| v / sum).collect()
}

/// Joint `p(t1, t2)` with `t1` outer, split into its marginals.
fn marginals(joint: &[f64], n1: usize, n2: usize) -> Result<(Pmf, Pmf)> {
    let p1: Vec<f64> = (0..n1)
        .map(|a| joint[a * n2..(a + 1) * n2].iter().sum())
        .collect();
    let p2: Vec<f64> = (0..n2)
        .map(|b| (0..n1).map(|a| joint[a * n2 + b]).sum())
        .collect();
    let p1 = Pmf::new(prune(&p1)).map_err(statecap::channels::ChannelError::from)?;
    let p2 = Pmf::new(prune(&p2)).map_err(statecap::channels::ChannelError::from)?;
    Ok((p1, p2))
}

/// Picks one input law per target; `config` receives the solver settings.
fn choose_laws(
    channel: &Channel,
    targets: &[Target],
    args: &SimulateArgs,
    seed: u64,
    argv: &mut Argv,
    config: &mut Vec<(String, String)>,
) -> Result<Vec<(String, Law)>> {
    match channel {
        Channel::Single(ch) => {
            let r = single_user_capacity(ch, BA_TOL, BA_MAX_ITER, DEFAULT_STRATEGY_CAP)?;
            let p = Pmf::new(prune(&r.report.argmax[0]))
                .map_err(statecap::channels::ChannelError::from)?;
            Ok(targets
                .iter()
                .map(|_| ("argmax".to_string(), Law::Single(p.clone())))
                .collect())
        }
        Channel::Relay(ch) => {
            argv.opt("restarts", args.restarts);
            config.push(("restarts".to_string(), args.restarts.to_string()));
            let cfg = RelayConfig {
                restarts: args.restarts,
                seed,
                ..RelayConfig::default()
            };
            let r = relay_capacity(ch, &cfg)?;
            let q = JointPmf::new(
                vec![Axis::new("t", r.t_size), Axis::new("t1", r.t1_size)],
                prune(&r.report.argmax[0]),
            )
            .map_err(statecap::channels::ChannelError::from)?;
            Ok(targets
                .iter()
                .map(|_| ("argmax".to_string(), Law::Relay(q.clone())))
                .collect())
        }
        Channel::Bc(ch) => {
            argv.opt("restarts", args.restarts)
                .opt("lambda-points", args.lambda_points);
            config.push(("restarts".to_string(), args.restarts.to_string()));
            config.push(("lambda_points".to_string(), args.lambda_points.to_string()));
            let cfg = BcConfig {
                lambda_points: args.lambda_points,
                restarts: args.restarts,
                seed,
                ..BcConfig::default()
            };
            let r = bc_region(ch, &cfg)?;
            let nt = r.strong.strategies.len();
            let mut candidates: Vec<BcCandidate> = r
                .points
                .iter()
                .map(|p| {
                    (
                        format!("lambda={}", p.lambda),
                        p.rate,
                        p.p_u2.clone(),
                        p.p_t_given_u2.clone(),
                    )
                })
                .collect();
            candidates.push((
                "strong-corner".to_string(),
                RatePoint::new(r.strong.report.value, 0.0),
                vec![1.0],
                vec![r.strong.report.argmax[0].clone()],
            ));
            let identity = (0..nt)
                .map(|u| (0..nt).map(|t| if t == u { 1.0 } else { 0.0 }).collect())
                .collect();
            candidates.push((
                "weak-corner".to_string(),
                RatePoint::new(0.0, r.weak.report.value),
                r.weak.report.argmax[0].clone(),
                identity,
            ));
            Ok(targets
                .iter()
                .map(|t| {
                    let goal = RatePoint::new(t.r1, t.r2.unwrap_or(0.0));
                    let score = |p: &RatePoint| (p.r1 - goal.r1).min(p.r2 - goal.r2);
                    let best = candidates
                        .iter()
                        .max_by(|a, b| score(&a.1).total_cmp(&score(&b.1)))
                        .expect("corners are always present");
                    let law = Law::Bc {
                        p_u2: prune(&best.2),
                        cond: best.3.iter().map(|row| prune(row)).collect(),
                    };
                    (best.0.clone(), law)
                })
                .collect())
        }
        Channel::Mac(ch) => {
            argv.opt("samples", args.samples);
            config.push(("samples".to_string(), args.samples.to_string()));
            let cfg = MacConfig {
                samples: args.samples,
                seed,
                ..MacConfig::default()
            };
            let r = mac_inner_region(ch, &cfg)?;
            targets
                .iter()
                .map(|t| {
                    let goal = RatePoint::new(t.r1, t.r2.unwrap_or(0.0));
                    let (i, best) = r
                        .points
                        .iter()
                        .enumerate()
                        .max_by(|a, b| slack(&a.1.terms, goal).total_cmp(&slack(&b.1.terms, goal)))
                        .expect("inner region has candidates");
                    let (p1, p2) = marginals(&best.joint, r.t1_size, r.t2_size)?;
                    Ok((format!("sample={i}"), Law::Mac(p1, p2)))
                })
                .collect()
        }
    }
}

fn pairs<T: ToString>(items: &[(&'static str, T)]) -> String {
    let v: Vec<String> = items
        .iter()
        .map(|(k, x)| format!("{k}={}", x.to_string()))
        .collect();
    v.join(";")
}

fn breakdown(report: &SimReport, name: &str) -> String {
    report
        .breakdown
        .iter()
        .find(|(k, _)| *k == name)
        .map(|(_, e)| e.rate.to_string())
        .unwrap_or_default()
}

fn record(
    law: &str,
    model: Model,
    target: Target,
    report: &SimReport,
    args: &SimulateArgs,
) -> Vec<String> {
    let cfg = &report.config;
    let o = &report.overall;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        law.to_string(),
        model.to_string(),
        args.decoder.as_str().to_string(),
        match args.decoder {
            DecoderKind::Ml => String::new(),
            DecoderKind::Typicality => args.epsilon.to_string(),
        },
        cfg.blocklength.to_string(),
        if model == Model::Relay {
            cfg.blocks.to_string()
        } else {
            String::new()
        },
        cfg.trials.to_string(),
        cfg.seed.to_string(),
        target.r1.to_string(),
        opt(target.r2),
        opt(target.r0),
        o.errors.to_string(),
        o.rate.to_string(),
        o.lower.to_string(),
        o.upper.to_string(),
        o.half_width().to_string(),
        breakdown(report, "rx1"),
        breakdown(report, "rx2"),
        breakdown(report, "messages"),
        pairs(&report.events),
        pairs(&report.message_counts),
        pairs(&report.effective_rates),
    ]
}

pub fn simulate(args: &SimulateArgs) -> Result<i32> {
    let start = Instant::now();
    let (file, channel) = super::load(&args.channel)?;
    let targets = targets(file.model, args)?;
    if args.blocklength.contains(&0) {
        return Err(usage("--blocklength values must be positive"));
    }
    let seed = resolve_seed(args.seed);

    let mut argv = Argv::new("simulate", &args.channel);
    match file.model {
        Model::Single | Model::Relay => {
            argv.list("rate", &args.rate);
            if file.model == Model::Relay {
                let r0: Vec<f64> = targets.iter().map(|t| t.r0.unwrap_or(0.0)).collect();
                argv.list("rate0", &r0);
            }
        }
        Model::Bc | Model::Mac => {
            argv.list("rate1", &args.rate1).list("rate2", &args.rate2);
        }
    }
    argv.list("blocklength", &args.blocklength)
        .opt("trials", args.trials)
        .opt("seed", seed)
        .opt("decoder", args.decoder.as_str());
    let mut config = vec![
        ("trials".to_string(), args.trials.to_string()),
        ("decoder".to_string(), args.decoder.as_str().to_string()),
        ("law_floor".to_string(), LAW_FLOOR.to_string()),
    ];
    if args.decoder == DecoderKind::Typicality {
        argv.opt("epsilon", args.epsilon);
        config.push(("epsilon".to_string(), args.epsilon.to_string()));
    }
    if file.model == Model::Relay {
        argv.opt("blocks", args.blocks);
        config.push(("blocks".to_string(), args.blocks.to_string()));
    }

    let laws = choose_laws(&channel, &targets, args, seed, &mut argv, &mut config)?;
    argv.out(args.out.as_deref());

    let decoder = match args.decoder {
        DecoderKind::Ml => Decoder::MaximumLikelihood,
        DecoderKind::Typicality => Decoder::Typicality {
            epsilon: args.epsilon,
        },
    };
    let mut rows = Vec::new();
    for (target, (label, law)) in targets.iter().zip(&laws) {
        for &n in &args.blocklength {
            let mut cfg = SimConfig::new(n, args.trials, seed);
            cfg.rate = target.r1;
            cfg.rate2 = target.r2.unwrap_or(0.0);
            cfg.bin_rate = target.r0.unwrap_or(0.0);
            cfg.blocks = args.blocks;
            cfg.decoder = decoder;
            let report = match (&channel, law) {
                (Channel::Single(ch), Law::Single(p)) => simulate_single_user(ch, p, &cfg)?,
                (Channel::Relay(ch), Law::Relay(q)) => simulate_relay(ch, q, &cfg)?,
                (Channel::Bc(ch), Law::Bc { p_u2, cond }) => simulate_bc(ch, p_u2, cond, &cfg)?,
                (Channel::Mac(ch), Law::Mac(p1, p2)) => simulate_mac(ch, p1, p2, &cfg)?,
                _ => unreachable!("law matches channel"),
            };
            rows.push(record(label, file.model, *target, &report, args));
        }
    }

    let manifest = RunManifest {
        command: argv.into_vec(),
        schema: "simulate/1",
        seed: Some(seed),
        config,
        elapsed: start.elapsed(),
    };
    emit_csv(args.out.as_deref(), &manifest, &HEADER, &rows)?;
    Ok(exit::OK)
}
