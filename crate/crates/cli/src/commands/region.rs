use std::time::Instant;

use statecap::solvers::{
    bc_region, mac_inner_region, mac_outer_region, BcConfig, MacConfig, MacRegion, RatePoint,
};

use super::{emit_csv, resolve_seed, Argv};
use crate::args::RegionArgs;
use crate::channel_file::{Channel, Model};
use crate::error::{exit, Result};
use crate::manifest::RunManifest;

pub const HEADER: [&str; 4] = ["hull", "r1_bits", "r2_bits", "provenance"];

fn row(hull: &str, v: RatePoint, provenance: String) -> Vec<String> {
    vec![
        hull.to_string(),
        v.r1.to_string(),
        v.r2.to_string(),
        provenance,
    ]
}

fn mac_rows(hull: &str, region: &MacRegion) -> Vec<Vec<String>> {
    region
        .region
        .vertices()
        .iter()
        .map(|&v| {
            let source = region
                .points
                .iter()
                .position(|p| p.terms.corners().contains(&v));
            let provenance = source.map_or_else(|| "axis".to_string(), |i| format!("sample={i}"));
            row(hull, v, provenance)
        })
        .collect()
}

pub fn region(args: &RegionArgs) -> Result<i32> {
    let start = Instant::now();
    let (file, channel) = super::load(&args.channel)?;
    super::require(file.model, &[Model::Bc, Model::Mac], "region")?;
    let seed = resolve_seed(args.seed);

    let mut argv = Argv::new("region", &args.channel);
    let mut config = Vec::new();
    let rows = match &channel {
        Channel::Bc(ch) => {
            let cfg = BcConfig {
                lambda_points: args.lambda_points,
                restarts: args.restarts,
                seed,
                tol: args.tol,
                ..BcConfig::default()
            };
            argv.opt("lambda-points", cfg.lambda_points)
                .opt("restarts", cfg.restarts)
                .opt("tol", cfg.tol);
            config.extend([
                ("lambda_points".to_string(), cfg.lambda_points.to_string()),
                ("restarts".to_string(), cfg.restarts.to_string()),
                ("tol".to_string(), cfg.tol.to_string()),
            ]);
            let r = bc_region(ch, &cfg)?;
            config.push(("cloud_size".to_string(), r.cloud_size.to_string()));
            let strong = RatePoint::new(r.strong.report.value, 0.0);
            let weak = RatePoint::new(0.0, r.weak.report.value);
            r.region
                .vertices()
                .iter()
                .map(|&v| {
                    let provenance = if let Some(p) = r.points.iter().find(|p| p.rate == v) {
                        format!("lambda={}", p.lambda)
                    } else if v == strong {
                        "strong-corner".to_string()
                    } else if v == weak {
                        "weak-corner".to_string()
                    } else {
                        "axis".to_string()
                    };
                    row("bc", v, provenance)
                })
                .collect::<Vec<_>>()
        }
        Channel::Mac(ch) => {
            let cfg = MacConfig {
                samples: args.samples,
                seed,
                ..MacConfig::default()
            };
            argv.opt("samples", cfg.samples);
            config.push(("samples".to_string(), cfg.samples.to_string()));
            let inner = mac_inner_region(ch, &cfg)?;
            let outer = mac_outer_region(ch, &cfg)?;
            let mut rows = mac_rows("inner", &inner);
            rows.extend(mac_rows("outer", &outer));
            rows
        }
        _ => unreachable!("model checked above"),
    };
    argv.opt("seed", seed).out(args.out.as_deref());

    let manifest = RunManifest {
        command: argv.into_vec(),
        schema: "region/1",
        seed: Some(seed),
        config,
        elapsed: start.elapsed(),
    };
    emit_csv(args.out.as_deref(), &manifest, &HEADER, &rows)?;
    Ok(exit::OK)
}
