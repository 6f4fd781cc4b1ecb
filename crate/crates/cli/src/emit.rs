//! Flat CSV views of a bundle and the on-disk layout of a run.

use std::path::{Path, PathBuf};

use convex_core::{BodyHandle, CoveringBound, InequalityRecord};
use serde::Serialize;

use crate::bundle::ReportBundle;
use crate::error::{CliError, CliResult};

pub const VIEWS: [&str; 6] = ["regularity", "sweep", "scan", "inequalities", "positions", "bodies"];

/// 12 significant digits, fixed exponent form so output is byte-stable.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn opt_int<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Serde name of a unit enum variant.
fn tag<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(v) => v.to_string(),
        Err(_) => String::new(),
    }
}

fn method_of(b: &CoveringBound) -> String {
    tag(&b.upper_method)
}

fn cover_row(source: &str, body: &str, against: &str, quantity: &str, b: &CoveringBound, seed: Option<u64>) -> Vec<String> {
    vec![
        source.into(),
        body.into(),
        against.into(),
        quantity.into(),
        num(b.t),
        num(b.lower),
        num(b.upper),
        num(b.upper.ln()),
        num(b.stderr),
        method_of(b),
        opt_int(seed),
    ]
}

fn inequality_row(r: &InequalityRecord) -> Vec<String> {
    vec![
        r.inequality.clone(),
        r.body_id.clone(),
        r.n.to_string(),
        opt_int(r.l),
        opt_int(r.subspace_id),
        opt(r.lambda),
        num(r.lhs),
        num(r.rhs),
        num(r.ratio),
        tag(&r.relation),
        opt_int(r.pass),
        opt(r.implied_constant),
        r.position.map(|p| tag(&p)).unwrap_or_default(),
        r.method.clone(),
        opt_int(r.seed),
    ]
}

const INEQUALITY_HEADER: [&str; 15] = [
    "inequality",
    "body_id",
    "n",
    "l",
    "subspace_id",
    "lambda",
    "lhs",
    "rhs",
    "ratio",
    "relation",
    "pass",
    "implied_constant",
    "position",
    "method",
    "seed",
];

fn rows_for(bundle: &ReportBundle, view: &str) -> CliResult<(Vec<&'static str>, Vec<Vec<String>>)> {
    let rec = &bundle.records;
    let mut out = Vec::new();
    let header: Vec<&'static str> = match view {
        "regularity" => {
            for p in &rec.profiles {
                for b in &p.profile.rows {
                    out.push(cover_row("cover", &p.body_id, &p.against_id, "N(K,tL)", b, Some(p.seed)));
                }
            }
            for p in &rec.positions {
                let Some(prof) = &p.profile else { continue };
                for row in &prof.rows {
                    for (q, b) in [
                        ("N(K,tB)", &row.body_by_ball),
                        ("N(K°,tB)", &row.polar_by_ball),
                        ("N(B,tK)", &row.ball_by_body),
                        ("N(B,tK°)", &row.ball_by_polar),
                    ] {
                        out.push(cover_row(&tag(&p.mode), &p.body_id, "ball", q, b, p.seed));
                    }
                }
            }
            vec!["source", "body_id", "against", "quantity", "t", "lower", "upper", "log_upper", "stderr", "method", "seed"]
        }
        "sweep" => {
            for s in &rec.sweeps {
                for r in &s.rows {
                    let w = r.worst.as_ref();
                    out.push(vec![
                        r.inequality.clone(),
                        tag(&s.family),
                        r.n.to_string(),
                        opt_int(r.l),
                        r.evaluated.to_string(),
                        r.failures.to_string(),
                        r.errors.len().to_string(),
                        opt(w.map(|w| w.ratio)),
                        opt(w.and_then(|w| w.implied_constant)),
                        w.map(|w| w.body_id.clone()).unwrap_or_default(),
                        w.map(|w| w.method.clone()).unwrap_or_default(),
                        s.seed.to_string(),
                    ]);
                }
            }
            vec!["inequality", "family", "n", "l", "evaluated", "failures", "errors", "worst_ratio", "worst_implied_constant", "worst_body", "method", "seed"]
        }
        "scan" => {
            for s in &rec.scans {
                for r in &s.report.rows {
                    out.push(vec![
                        s.body_id.clone(),
                        s.report.l.to_string(),
                        r.subspace_id.to_string(),
                        opt(r.projection_vrad),
                        opt(r.section_vrad),
                        r.error.clone().unwrap_or_default(),
                        "sampled".into(),
                        s.report.seed.to_string(),
                    ]);
                }
                for (label, v, w) in [("max", s.report.v_max, s.report.w_max), ("min", s.report.v_min, s.report.w_min)] {
                    let fin = |x: f64| if x.is_finite() { num(x) } else { String::new() };
                    out.push(vec![
                        s.body_id.clone(),
                        s.report.l.to_string(),
                        format!("summary-{label}"),
                        fin(v),
                        fin(w),
                        String::new(),
                        "sampled".into(),
                        s.report.seed.to_string(),
                    ]);
                }
            }
            vec!["body_id", "l", "subspace_id", "projection_vrad", "section_vrad", "error", "method", "seed"]
        }
        "inequalities" => {
            out.extend(rec.inequalities.iter().map(inequality_row));
            INEQUALITY_HEADER.to_vec()
        }
        "positions" => {
            for p in &rec.positions {
                let prof = p.profile.as_ref();
                out.push(vec![
                    p.body_id.clone(),
                    tag(&p.mode),
                    tag(&p.report.tag),
                    num(p.report.residual),
                    opt(p.report.anisotropy),
                    opt(p.report.l_estimate),
                    p.report.iterations.to_string(),
                    opt(prof.and_then(|q| q.beta)),
                    opt(prof.and_then(|q| q.d)),
                    prof.map(|q| q.regular.to_string()).unwrap_or_default(),
                    p.method.clone(),
                    opt_int(p.seed),
                ]);
            }
            vec!["body_id", "mode", "tag", "residual", "anisotropy", "l_estimate", "iterations", "beta", "d", "regular", "method", "seed"]
        }
        "bodies" => {
            for b in &rec.bodies {
                out.push(vec![b.id.clone(), b.body.kind.clone(), b.body.n.to_string(), opt(b.volume), b.method.clone()]);
            }
            vec!["id", "kind", "n", "volume", "method"]
        }
        other => return Err(CliError::UnknownView(other.into())),
    };
    Ok((header, out))
}

/// CSV text for one view; errors if the view is unknown or empty.
pub fn emit_plot_data(bundle: &ReportBundle, view: &str) -> CliResult<String> {
    let (header, rows) = rows_for(bundle, view)?;
    if rows.is_empty() {
        return Err(CliError::EmptyView(view.into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(Path::new("<csv>"), e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Views requested by the config, or every non-empty one.
pub fn selected_views(bundle: &ReportBundle) -> CliResult<Vec<String>> {
    if !bundle.config.views.is_empty() {
        for v in &bundle.config.views {
            if !VIEWS.contains(&v.as_str()) {
                return Err(CliError::UnknownView(v.clone()));
            }
        }
        return Ok(bundle.config.views.clone());
    }
    let mut out = Vec::new();
    for v in VIEWS {
        if !rows_for(bundle, v)?.1.is_empty() {
            out.push(v.to_string());
        }
    }
    Ok(out)
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> CliResult<()> {
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes `bundle.json`, one CSV per view and the generated or positioned bodies.
pub fn write_outputs(bundle: &ReportBundle, dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    write(dir.join("bundle.json"), &bundle.to_json(), &mut written)?;
    let views = selected_views(bundle)?;
    for v in VIEWS.iter().filter(|v| !views.iter().any(|w| w == *v)) {
        // Stale views from an earlier run in the same directory.
        let stale = dir.join(format!("{v}.csv"));
        if stale.exists() {
            std::fs::remove_file(&stale).map_err(|e| CliError::io(&stale, e))?;
        }
    }
    for v in views {
        write(dir.join(format!("{v}.csv")), &emit_plot_data(bundle, &v)?, &mut written)?;
    }
    let bodies: Vec<(String, &convex_core::BodyFile)> = bundle
        .records
        .bodies
        .iter()
        .map(|b| (b.id.clone(), &b.body))
        .chain(bundle.records.positions.iter().map(|p| (format!("{}-{}", p.body_id, tag(&p.mode)), &p.body)))
        .collect();
    if !bodies.is_empty() {
        let bdir = dir.join("bodies");
        std::fs::create_dir_all(&bdir).map_err(|e| CliError::io(&bdir, e))?;
        for (id, file) in bodies {
            let text = BodyHandle::from_file(file)?.to_json();
            write(bdir.join(format!("{id}.json")), &text, &mut written)?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_twelve_digits() {
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(-0.125), "-1.25000000000e-1");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(opt(None), "");
    }
}
