//! Executes a validated configuration. Pure: nothing is written here.

use convex_core::covering::{covering_profile, CoverOptions};
use convex_core::inequalities::{evaluate, position_for, sweep, SweepOptions};
use convex_core::models::ball;
use convex_core::positions::{centre, isotropic_position, regularize, santalo_position, EllipsoidChooser, RegularizeOptions};
use convex_core::subspace::{random_subspace, vrad_scan};
use convex_core::volume::exact_volume;
use convex_core::{BodyHandle, PositionCase};

use crate::bundle::{BodyRecord, PositionRecord, ProfileRecord, Records, ReportBundle, ScanRecord};
use crate::config::{Command, ExperimentConfig, PositionMode};
use crate::error::{CliError, CliResult};

struct Ctx {
    records: Records,
    errors: Vec<String>,
    skipped: Vec<String>,
}

fn load_bodies(config: &ExperimentConfig) -> CliResult<Vec<(String, BodyHandle)>> {
    let tol = config.tolerances.unwrap_or_default();
    config
        .bodies
        .iter()
        .enumerate()
        .map(|(i, src)| {
            let body = src.load().map_err(|e| match e {
                CliError::Geometry(g) => CliError::invalid(format!("bodies[{i}]"), g.to_string()),
                other => other,
            })?;
            Ok((src.id(), tol.apply(body)))
        })
        .collect()
}

/// Runs the configured pipeline and gathers its records.
pub fn run(config: &ExperimentConfig) -> CliResult<ReportBundle> {
    config.validate()?;
    if config.command == Command::Report {
        let path = config.bundle.as_ref().expect("validated");
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return ReportBundle::from_json(&text);
    }
    let bodies = load_bodies(config)?;
    let mut ctx = Ctx { records: Records::default(), errors: Vec::new(), skipped: Vec::new() };
    match config.command {
        Command::Gen => gen(&bodies, &mut ctx),
        Command::Position => position(config, &bodies, &mut ctx),
        Command::Scan => scan(config, &bodies, &mut ctx),
        Command::Cover => cover(config, &bodies, &mut ctx)?,
        Command::Check => check(config, &bodies, &mut ctx)?,
        Command::Report => unreachable!(),
    }
    Ok(ReportBundle::new(config, ctx.records, ctx.errors, ctx.skipped))
}

fn gen(bodies: &[(String, BodyHandle)], ctx: &mut Ctx) {
    for (id, k) in bodies {
        let volume = exact_volume(k).ok().map(|v| v.value);
        ctx.records.bodies.push(BodyRecord { id: id.clone(), body: k.to_file(), volume, method: "exact".into() });
    }
}

fn position(config: &ExperimentConfig, bodies: &[(String, BodyHandle)], ctx: &mut Ctx) {
    let mode = config.position.unwrap_or_default();
    let cover = CoverOptions { samples: config.samples, seed: config.seed.unwrap_or(0) };
    for (id, k) in bodies {
        let outcome = (|| -> convex_core::Result<PositionRecord> {
            let (body, report, profile) = match mode {
                PositionMode::Santalo => {
                    let (b, r) = santalo_position(k)?;
                    (b, r, None)
                }
                PositionMode::Barycentre => {
                    let (b, r) = centre(k)?;
                    (b, r, None)
                }
                PositionMode::Isotropic => {
                    let (b, r) = isotropic_position(k)?;
                    (b, r, None)
                }
                PositionMode::Regularize | PositionMode::RegularizeCentred => {
                    let case = if mode == PositionMode::Regularize { PositionCase::Santalo } else { PositionCase::Barycentre };
                    let (pos, r) = match case {
                        PositionCase::Santalo => santalo_position(k)?,
                        PositionCase::Barycentre => centre(k)?,
                    };
                    let opts = RegularizeOptions { case, chooser: EllipsoidChooser::Isotropy, tgrid: config.tgrid.clone(), cover };
                    let (b, p) = regularize(&pos, &opts)?;
                    (b, r, Some(p))
                }
            };
            let method = if profile.is_some() { "sampled" } else { "exact" };
            Ok(PositionRecord {
                body_id: id.clone(),
                mode,
                report,
                profile,
                body: body.to_file(),
                method: method.into(),
                seed: config.seed,
            })
        })();
        match outcome {
            Ok(r) => ctx.records.positions.push(r),
            Err(e) => ctx.errors.push(format!("{id}: {e}")),
        }
    }
}

fn scan(config: &ExperimentConfig, bodies: &[(String, BodyHandle)], ctx: &mut Ctx) {
    let l = config.l.expect("validated");
    for (i, (id, k)) in bodies.iter().enumerate() {
        match vrad_scan(k, l, config.subspaces, mix(config.seed.unwrap_or(0), i as u64, 0)) {
            Ok(report) => ctx.records.scans.push(ScanRecord { body_id: id.clone(), report }),
            Err(e) => ctx.errors.push(format!("{id}: {e}")),
        }
    }
}

fn cover(config: &ExperimentConfig, bodies: &[(String, BodyHandle)], ctx: &mut Ctx) -> CliResult<()> {
    let against = match &config.against {
        Some(src) => Some((src.id(), src.load()?)),
        None => None,
    };
    for (i, (id, k)) in bodies.iter().enumerate() {
        let (lid, l) = match &against {
            Some((lid, l)) => (lid.clone(), l.clone()),
            None => (format!("ball-n{}", k.dim()), ball(k.dim())),
        };
        let seed = mix(config.seed.unwrap_or(0), i as u64, 0);
        match covering_profile(k, &l, &config.tgrid, CoverOptions { samples: config.samples, seed }) {
            Ok(mut profile) => {
                profile.k_id = id.clone();
                profile.l_id = lid.clone();
                ctx.records.profiles.push(ProfileRecord { body_id: id.clone(), against_id: lid, samples: config.samples, seed, profile });
            }
            Err(e) => ctx.errors.push(format!("{id} vs {lid}: {e}")),
        }
    }
    Ok(())
}

/// Decorrelated child seed.
fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    x ^= x >> 31;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^ (x >> 29)
}

fn check(config: &ExperimentConfig, bodies: &[(String, BodyHandle)], ctx: &mut Ctx) -> CliResult<()> {
    let kinds = config.inequality_kinds()?;
    let seed = config.seed.unwrap_or(0);
    for (bi, (id, k)) in bodies.iter().enumerate() {
        let n = k.dim();
        for (ki, &kind) in kinds.iter().enumerate() {
            let positioned = match position_for(kind, k) {
                Ok(p) => p,
                Err(e) => {
                    ctx.errors.push(format!("{id}/{}: {e}", kind.name()));
                    continue;
                }
            };
            if !kind.uses_subspace() {
                match evaluate(kind, &positioned, id, None, mix(seed, bi as u64, ki as u64)) {
                    Ok(recs) => ctx.records.inequalities.extend(recs),
                    Err(e) => ctx.errors.push(format!("{id}/{}: {e}", kind.name())),
                }
                continue;
            }
            let l = config.l.unwrap_or(n.div_ceil(2));
            if !kind.admits(n, l) {
                ctx.skipped.push(format!("{id}/{}: l = {l} not admissible in dimension {n}", kind.name()));
                continue;
            }
            for s in 0..config.subspaces {
                let sub_seed = mix(seed, bi as u64, ((ki as u64) << 32) | s as u64);
                let outcome = random_subspace(n, l, sub_seed).and_then(|f| evaluate(kind, &positioned, id, Some((&f, s as u64)), sub_seed));
                match outcome {
                    Ok(recs) => ctx.records.inequalities.extend(recs),
                    Err(e) => ctx.errors.push(format!("{id}/{}/F{s}: {e}", kind.name())),
                }
            }
        }
    }
    if let Some(sw) = &config.sweep {
        let ls: Vec<usize> = if sw.ls.is_empty() { (1..=sw.ns.iter().copied().max().unwrap_or(1)).collect() } else { sw.ls.clone() };
        for &kind in &kinds {
            let table = sweep(sw.family, kind, &sw.ns, &ls, SweepOptions { samples: config.subspaces, seed, vertex_factor: 2 });
            for row in &table.rows {
                ctx.errors.extend(row.errors.iter().map(|e| format!("sweep/{}: {e}", kind.name())));
            }
            ctx.records.sweeps.push(table);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BodySource;
    use convex_core::models::ModelFamily;
    use convex_core::ModelSpec;

    fn simplex(n: usize) -> BodySource {
        BodySource::Model(ModelSpec::new(ModelFamily::RegularSimplex, n))
    }

    #[test]
    fn gen_then_check_rogers_shephard() {
        let mut c = ExperimentConfig::new(Command::Gen);
        c.bodies.push(simplex(4));
        let b = run(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        std::fs::write(&path, BodyHandle::from_file(&b.records.bodies[0].body).unwrap().to_json()).unwrap();
        let mut c = ExperimentConfig::new(Command::Check);
        c.bodies.push(BodySource::File { file: path });
        c.inequality = Some("rogers_shephard".into());
        c.seed = Some(1);
        let b = run(&c).unwrap();
        let r = &b.records.inequalities[0];
        assert!((r.ratio - 1.0).abs() < 1e-9);
        assert_eq!(b.exit_code(), 0);
    }

    #[test]
    fn cover_ball_by_ball_is_trivial() {
        let mut c = ExperimentConfig::new(Command::Cover);
        c.bodies.push(BodySource::Model(ModelSpec::new(ModelFamily::Ball, 3)));
        c.tgrid = vec![1.0, 2.0, 4.0];
        c.seed = Some(0);
        let b = run(&c).unwrap();
        assert!(b.records.profiles[0].profile.rows.iter().all(|r| r.upper == 1.0));
    }

    #[test]
    fn inadmissible_dimensions_are_skipped() {
        let mut c = ExperimentConfig::new(Command::Check);
        c.bodies.push(BodySource::Model(ModelSpec::new(ModelFamily::Cube, 2)));
        c.inequality = Some("fradelizi".into());
        c.l = Some(5);
        c.seed = Some(0);
        let b = run(&c).unwrap();
        assert_eq!(b.summary.skipped.len(), 1);
        assert_eq!(b.exit_code(), 0);
    }
}
