//! Acceptance criteria, one PASS/FAIL line each. Tolerances are fixed here.

use std::path::Path;
use std::process::Command as Process;
use std::time::Instant;

use convex_core::body::hausdorff_distance;
use convex_core::covering::{entropy_sequence, mean_width, phi_k};
use convex_core::inequalities::{check_bs_projection, check_rogers_shephard, halfspace_fraction, position_for, simplex_product_chain, sweep, SweepOptions};
use convex_core::models::{b1_projection_identities, cross_polytope, cube, random_polytope, regular_simplex, simplex_section_subspace, RandomMode};
use convex_core::positions::{ball_isotropic_constant, isotropic_position, santalo_point, santalo_position, SantaloOptions};
use convex_core::subspace::{random_subspace, section};
use convex_core::volume::{barycentre, mc_volume, mc_volume_oracle, volume};
use convex_core::{BodyHandle, EllipsoidBody, EllipsoidSpectrum, InequalityKind, ModelFamily, PositionCase, Vector};

const SECTION_REL_TOL: f64 = 1e-9;
const POLARITY_TOL: f64 = 1e-9;
const B1_TOL: f64 = 1e-9;
const RS_EQUALITY_TOL: f64 = 1e-6;
const RS_CUBE_GAP: f64 = 1e-3;
const SUITE_BODIES_PER_N: usize = 50;
const SUITE_SECONDS: f64 = 600.0;
const TRIANGLE_FRACTION_TOL: f64 = 0.005;
const SANTALO_SYMMETRIC_TOL: f64 = 1e-8;
const SANTALO_EQUIVARIANCE_TOL: f64 = 1e-8;
const SANTALO_GRID_TOL: f64 = 1e-3;
const POLAR_BARYCENTRE_TOL: f64 = 1e-7;
const ANISOTROPY_TOL: f64 = 1e-8;
const CUBE_L_TOL: f64 = 1e-9;
const PHI_MAX_K: u32 = 12;
const PHI_UPPER_FACTOR: f64 = 6.0;
const BS_SUBSPACES: usize = 100;
const BS_CAP: f64 = 4.0;
const MC_SAMPLES: usize = 100_000;
const MC_SIGMAS: f64 = 3.0;
const MC_SECONDS: f64 = 10.0;

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn section_formula() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 2..=8 {
        let s = regular_simplex(n).map_err(err)?;
        for l in 1..n {
            let f = simplex_section_subspace(n, l).map_err(err)?;
            let got = volume(&section(&s.body, &f, None).map_err(err)?).map_err(err)?;
            let m = (n + 1) as f64;
            let expect = m.sqrt() / (factorial(l) * (m - l as f64).sqrt());
            worst = worst.max((got / expect - 1.0).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((worst < SECTION_REL_TOL && secs < 60.0, format!("max rel err {worst:.2e} (tol {SECTION_REL_TOL:e}), {secs:.2}s")))
}

fn simplex_polarity() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=8 {
        let s = regular_simplex(n).map_err(err)?.body;
        let d = hausdorff_distance(&s.polar().map_err(err)?, &s.scale(-(n as f64 + 1.0)).map_err(err)?).map_err(err)?;
        worst = worst.max(d);
    }
    Ok((worst < POLARITY_TOL, format!("max Hausdorff {worst:.2e} (tol {POLARITY_TOL:e})")))
}

fn b1_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=8 {
        worst = worst.max(b1_projection_identities(n).map_err(err)?.max_residual());
    }
    Ok((worst < B1_TOL, format!("max residual {worst:.2e} (tol {B1_TOL:e})")))
}

fn binomial(a: usize, b: usize) -> f64 {
    (0..b).map(|i| (a - i) as f64 / (i + 1) as f64).product()
}

fn rogers_shephard() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        let s = regular_simplex(n).map_err(err)?.body;
        let rec = check_rogers_shephard(&s, "simplex").map_err(err)?;
        let direct = volume(&s.difference_body().map_err(err)?).map_err(err)? / (binomial(2 * n, n) * volume(&s).map_err(err)?);
        worst = worst.max((rec.ratio - 1.0).abs()).max((direct - 1.0).abs());
    }
    let mut cube_max: f64 = 0.0;
    for n in 2..=6 {
        let c = cube(n).map_err(err)?;
        let rec = check_rogers_shephard(&c, "cube").map_err(err)?;
        // |C - C| = 2^n |C| exactly.
        let expect = 2f64.powi(n as i32) / binomial(2 * n, n);
        if (rec.ratio - expect).abs() > 1e-9 {
            return Ok((false, format!("cube n={n}: ratio {} vs exact {expect}", rec.ratio)));
        }
        cube_max = cube_max.max(rec.ratio);
    }
    Ok((
        worst < RS_EQUALITY_TOL && cube_max < 1.0 - RS_CUBE_GAP,
        format!("simplex |ratio-1| ≤ {worst:.2e} (tol {RS_EQUALITY_TOL:e}); cube max ratio {cube_max:.4} (< {})", 1.0 - RS_CUBE_GAP),
    ))
}

fn constant_free_suite() -> Outcome {
    let t = Instant::now();
    let ns = [2, 3, 4, 5];
    let ls = [1, 2, 3, 4];
    let mut evaluated = 0;
    let mut failures = Vec::new();
    let mut errors = Vec::new();
    let families = [
        (ModelFamily::RandomVertexPolytope, SUITE_BODIES_PER_N),
        (ModelFamily::RegularSimplex, 5),
        (ModelFamily::Cube, 5),
        (ModelFamily::CrossPolytope, 5),
    ];
    for (family, samples) in families {
        for kind in InequalityKind::CONSTANT_FREE {
            let table = sweep(family, kind, &ns, &ls, SweepOptions { samples, seed: 2024, vertex_factor: 2 });
            for row in &table.rows {
                evaluated += row.evaluated;
                if row.failures > 0 {
                    failures.push(format!("{:?}/{}/n={}/l={:?}", family, row.inequality, row.n, row.l));
                }
                errors.extend(row.errors.iter().map(|e| format!("{:?}/{}: {e}", family, row.inequality)));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = failures.is_empty() && errors.is_empty() && secs < SUITE_SECONDS;
    let mut detail = format!("{evaluated} records, {} violations, {} errors, {secs:.1}s", failures.len(), errors.len());
    if let Some(f) = failures.first().or(errors.first()) {
        detail.push_str(&format!("; first: {f}"));
    }
    Ok((pass, detail))
}

fn triangle_fraction() -> Outcome {
    let k = BodyHandle::from_rows(&[vec![0.0, 0.0], vec![3.0, 0.0], vec![0.5, 2.0]]).map_err(err)?;
    let g = Vector::from_vec(vec![3.5 / 3.0, 2.0 / 3.0]);
    let mut min: f64 = 1.0;
    for deg in 0..360 {
        let th = (deg as f64).to_radians();
        let u = Vector::from_vec(vec![th.cos(), th.sin()]);
        min = min.min(halfspace_fraction(&k, &u, u.dot(&g)).map_err(err)?);
    }
    let target = 4.0 / 9.0;
    Ok(((min - target).abs() < TRIANGLE_FRACTION_TOL, format!("min fraction {min:.6} vs 4/9 (tol {TRIANGLE_FRACTION_TOL})")))
}

/// Area of `(T - z)°` for a triangle, from the polar's vertices `a_j / (b_j - ⟨a_j, z⟩)`.
fn triangle_polar_area(tri: &[[f64; 2]; 3], z: [f64; 2]) -> f64 {
    let mut pts = Vec::new();
    for i in 0..3 {
        let p = tri[i];
        let q = tri[(i + 1) % 3];
        let r = tri[(i + 2) % 3];
        let mut a = [q[1] - p[1], p[0] - q[0]];
        if a[0] * (r[0] - p[0]) + a[1] * (r[1] - p[1]) > 0.0 {
            a = [-a[0], -a[1]];
        }
        let b = a[0] * p[0] + a[1] * p[1] - (a[0] * z[0] + a[1] * z[1]);
        pts.push([a[0] / b, a[1] / b]);
    }
    0.5 * ((pts[1][0] - pts[0][0]) * (pts[2][1] - pts[0][1]) - (pts[2][0] - pts[0][0]) * (pts[1][1] - pts[0][1])).abs()
}

fn inside(tri: &[[f64; 2]; 3], z: [f64; 2]) -> bool {
    let s = |p: [f64; 2], q: [f64; 2]| (q[0] - p[0]) * (z[1] - p[1]) - (q[1] - p[1]) * (z[0] - p[0]);
    let (a, b, c) = (s(tri[0], tri[1]), s(tri[1], tri[2]), s(tri[2], tri[0]));
    (a > 0.0 && b > 0.0 && c > 0.0) || (a < 0.0 && b < 0.0 && c < 0.0)
}

fn grid_santalo(tri: &[[f64; 2]; 3]) -> [f64; 2] {
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for p in tri {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let mut best = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let mut half = [(hi[0] - lo[0]) / 2.0, (hi[1] - lo[1]) / 2.0];
    const STEPS: i32 = 20;
    for _ in 0..30 {
        let mut best_val = f64::INFINITY;
        let centre = best;
        for i in -STEPS..=STEPS {
            for j in -STEPS..=STEPS {
                let z = [centre[0] + half[0] * i as f64 / STEPS as f64, centre[1] + half[1] * j as f64 / STEPS as f64];
                if !inside(tri, z) {
                    continue;
                }
                let v = triangle_polar_area(tri, z);
                if v < best_val {
                    best_val = v;
                    best = z;
                }
            }
        }
        half = [half[0] * 0.25, half[1] * 0.25];
    }
    best
}

fn santalo_solver() -> Outcome {
    let opts = SantaloOptions { max_iterations: 100, tolerance: 1e-11 };
    let mut sym: f64 = 0.0;
    let mut symmetric = vec![cube(3).map_err(err)?, cross_polytope(4).map_err(err)?];
    for seed in 0..4 {
        symmetric.push(random_polytope(3, 8, RandomMode::GaussianVertices, true, seed).map_err(err)?);
    }
    for k in &symmetric {
        sym = sym.max(santalo_point(k, opts).map_err(err)?.0.norm());
    }
    let mut equi: f64 = 0.0;
    for seed in 0..4 {
        let n = 2 + seed as usize % 3;
        let k = random_polytope(n, 2 * n + 2, RandomMode::GaussianVertices, false, seed).map_err(err)?;
        let v = Vector::from_fn(n, |i, _| 0.3 - 0.2 * i as f64);
        let s0 = santalo_point(&k, opts).map_err(err)?.0;
        let s1 = santalo_point(&k.translate(&v).map_err(err)?, opts).map_err(err)?.0;
        equi = equi.max((s1 - s0 - v).norm());
    }
    let tri = [[0.0, 0.0], [4.0, 0.5], [1.0, 3.0]];
    let k = BodyHandle::from_rows(&tri.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).map_err(err)?;
    let s = santalo_point(&k, opts).map_err(err)?.0;
    let g = grid_santalo(&tri);
    let grid = ((s[0] - g[0]).powi(2) + (s[1] - g[1]).powi(2)).sqrt();
    let mut bary: f64 = 0.0;
    for seed in 0..6 {
        let n = 2 + seed as usize % 3;
        let k = random_polytope(n, 2 * n + 1, RandomMode::SphereVertices, false, 100 + seed).map_err(err)?;
        let (p, _) = santalo_position(&k).map_err(err)?;
        bary = bary.max(barycentre(&p.polar().map_err(err)?).map_err(err)?.norm());
    }
    let pass = sym < SANTALO_SYMMETRIC_TOL && equi < SANTALO_EQUIVARIANCE_TOL && grid < SANTALO_GRID_TOL && bary < POLAR_BARYCENTRE_TOL;
    Ok((pass, format!("|s| sym {sym:.1e}; equivariance {equi:.1e}; triangle vs grid {grid:.1e}; |b(K°)| {bary:.1e}")))
}

/// Isotropic constant of the ball from `|B| = π^{n/2} / Γ(n/2 + 1)`.
fn ball_l_oracle(n: usize) -> f64 {
    // Γ(n/2 + 1) by the half-integer recursion.
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() / 2.0 };
    let mut x = if n.is_multiple_of(2) { 1.0 } else { 1.5 };
    while x < n as f64 / 2.0 + 1.0 - 1e-9 {
        gamma *= x;
        x += 1.0;
    }
    let omega = std::f64::consts::PI.powf(n as f64 / 2.0) / gamma;
    let r = omega.powf(-1.0 / n as f64);
    r / (n as f64 + 2.0).sqrt()
}

fn isotropic() -> Outcome {
    let mut aniso: f64 = 0.0;
    let mut l_gap = f64::INFINITY;
    let mut bodies: Vec<BodyHandle> = Vec::new();
    for n in 2..=5 {
        bodies.push(regular_simplex(n).map_err(err)?.body);
        bodies.push(cross_polytope(n).map_err(err)?);
        for seed in 0..3 {
            bodies.push(random_polytope(n, 2 * n + 1, RandomMode::GaussianVertices, seed % 2 == 0, seed).map_err(err)?);
        }
    }
    for k in &bodies {
        let (_, r) = isotropic_position(k).map_err(err)?;
        aniso = aniso.max(r.anisotropy.unwrap_or(f64::INFINITY));
        let n = k.dim();
        if (ball_isotropic_constant(n) - ball_l_oracle(n)).abs() > 1e-12 {
            return Ok((false, format!("L_B mismatch at n={n}")));
        }
        l_gap = l_gap.min(r.l_estimate.unwrap_or(0.0) - ball_l_oracle(n));
    }
    let target = 1.0 / (2.0 * 3f64.sqrt());
    let mut cube_err: f64 = 0.0;
    for n in 1..=6 {
        let (_, r) = isotropic_position(&cube(n).map_err(err)?).map_err(err)?;
        cube_err = cube_err.max((r.l_estimate.unwrap_or(0.0) - target).abs());
    }
    let pass = aniso < ANISOTROPY_TOL && cube_err < CUBE_L_TOL && l_gap >= 0.0;
    Ok((pass, format!("anisotropy {aniso:.1e}; |L(cube)-1/(2√3)| {cube_err:.1e}; min L-L_B {l_gap:.3e} over {} bodies", bodies.len())))
}

fn phi_calculus() -> Outcome {
    let mut exact: f64 = 0.0;
    for n in 1..=6 {
        for k in 0..=20 {
            let v = phi_k(&EllipsoidSpectrum::identity(n), k).phi;
            exact = exact.max((v - 2f64.powf(-(k as f64) / n as f64)).abs());
        }
    }
    let axes: [&[f64]; 5] = [&[2.0], &[3.0, 0.5], &[1.0, 1.0], &[2.5, 1.2, 0.4], &[1.5, 1.5, 0.2]];
    let mut min_upper = f64::INFINITY;
    let mut max_lower: f64 = 0.0;
    for (i, a) in axes.iter().enumerate() {
        let e = EllipsoidBody::diagonal(a).map_err(err)?;
        let spec = EllipsoidSpectrum::of(&e);
        let n = a.len();
        let body = BodyHandle::from_ellipsoid(e);
        let ball = BodyHandle::from_ellipsoid(EllipsoidBody::ball(n, 1.0));
        let seq = entropy_sequence(&body, &ball, PHI_MAX_K + 1, 7 + i as u64).map_err(err)?;
        for k in 0..=PHI_MAX_K {
            let phi = phi_k(&spec, k).phi;
            let row = seq.get(k + 1).ok_or("missing entropy row")?;
            min_upper = min_upper.min(row.upper / phi);
            max_lower = max_lower.max(row.lower / phi);
        }
    }
    let pass = exact == 0.0 && min_upper >= 1.0 && max_lower <= PHI_UPPER_FACTOR;
    Ok((pass, format!("identity err {exact:e}; min upper/φ {min_upper:.3} (≥ 1); max lower/φ {max_lower:.3} (≤ {PHI_UPPER_FACTOR})")))
}

fn bs_projection() -> Outcome {
    for n in 2..=8 {
        for l in 1..n {
            let c = simplex_product_chain(n, l).map_err(err)?;
            if !c.holds() {
                return Ok((false, format!("simplex chain fails at n={n}, l={l}: {} ∉ [{}, {}]", c.product, c.lower, c.upper)));
            }
        }
    }
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in 2..=5 {
        for b in 0..2u64 {
            let k = random_polytope(n, 2 * n + 2, RandomMode::GaussianVertices, false, 300 + b).map_err(err)?;
            let k = position_for(InequalityKind::BsProjection, &k).map_err(err)?;
            for s in 0..BS_SUBSPACES {
                let l = 1 + s % (n - 1);
                let f = random_subspace(n, l, (n as u64) << 32 | b << 16 | s as u64).map_err(err)?;
                let r = check_bs_projection(&k, &f, "random", PositionCase::Santalo).map_err(err)?;
                worst = worst.max(r.implied_constant.unwrap_or(f64::INFINITY));
                count += 1;
            }
        }
    }
    Ok((worst < BS_CAP, format!("simplex chain holds n ≤ 8; max implied constant {worst:.4} over {count} subspaces (cap {BS_CAP})")))
}

/// `E|θ_1|` on `S^{n-1}`.
fn mean_abs_coordinate(n: usize) -> f64 {
    let mut c = if n % 2 == 1 { 1.0 } else { 2.0 / std::f64::consts::PI };
    let mut m = if n % 2 == 1 { 1 } else { 2 };
    while m < n {
        c *= m as f64 / (m as f64 + 1.0);
        m += 2;
    }
    c
}

fn monte_carlo() -> Outcome {
    let n = 8;
    let c = cube(n).map_err(err)?;
    let t = Instant::now();
    let est = mc_volume(&c, MC_SAMPLES, 11).map_err(err)?;
    let secs = t.elapsed().as_secs_f64();
    let exact = 2f64.powi(n as i32);
    // The cube fills its bounding box, so also sample it inside a larger box.
    let (lo, hi) = (Vector::from_element(n, -1.25), Vector::from_element(n, 1.25));
    let member = |x: &Vector| x.amax() <= 1.0;
    let boxed = mc_volume_oracle(&lo, &hi, member, MC_SAMPLES, 13).map_err(err)?;
    let within = |value: f64, stderr: f64| (value - exact).abs() <= MC_SIGMAS * stderr;
    let mw = mean_width(&c, MC_SAMPLES, 12).map_err(err)?;
    let target = n as f64 * mean_abs_coordinate(n);
    let z_mw = (mw.value - target).abs() / mw.stderr;
    let pass = within(est.value, est.stderr) && within(boxed.value, boxed.stderr) && z_mw <= MC_SIGMAS && secs < MC_SECONDS;
    Ok((
        pass,
        format!(
            "volume {:.3} ± {:.3} (bounding box, {secs:.2}s), {:.3} ± {:.3} (enlarged box) vs {exact}; mean width {:.5} vs {target:.5} ({z_mw:.2}σ)",
            est.value, est.stderr, boxed.value, boxed.stderr, mw.value
        ),
    ))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<i32, String> {
    let out = Process::new(env!("CARGO_BIN_EXE_convex")).args(args).arg("--out-dir").arg(dir).output().map_err(err)?;
    out.status.code().ok_or_else(|| "killed".into())
}

fn csvs(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).map_err(err)? {
        let p = e.map_err(err)?.path();
        if p.extension().is_some_and(|x| x == "csv") {
            out.push((p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).map_err(err)?));
        }
    }
    out.sort();
    Ok(out)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let body = tmp.path().join("k.json");
    let k = random_polytope(3, 7, RandomMode::GaussianVertices, false, 5).map_err(err)?;
    std::fs::write(&body, k.to_json()).map_err(err)?;
    let b = body.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["check", "--inequality", "all", "--body", b, "--samples", "3", "--seed", "9"],
        vec!["scan", "--body", b, "--l", "2", "--samples", "20", "--seed", "4"],
        vec!["cover", "--pair", b, "--tgrid", "1,2,4", "--samples", "20000", "--seed", "6"],
        vec!["position", "--body", b, "--mode", "regularize", "--samples", "5000", "--seed", "3"],
        vec!["check", "--inequality", "constant-free", "--sweep-family", "random", "--ns", "2,3", "--ls", "1,2", "--samples", "3", "--seed", "1"],
    ];
    let mut files = 0;
    for (i, args) in runs.iter().enumerate() {
        let a = tmp.path().join(format!("a{i}"));
        let bdir = tmp.path().join(format!("b{i}"));
        let ca = run_cli(&a, args)?;
        let cb = run_cli(&bdir, args)?;
        if ca != cb || ca == 3 {
            return Ok((false, format!("run {i}: exit codes {ca} / {cb}")));
        }
        let (x, y) = (csvs(&a)?, csvs(&bdir)?);
        if x.is_empty() || x != y {
            return Ok((false, format!("run {i}: CSV output differs or is empty")));
        }
        files += x.len();
    }
    Ok((true, format!("{} runs, {files} CSV files byte-identical", runs.len())))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("simplex section formula", section_formula),
        ("simplex polarity", simplex_polarity),
        ("B1/B∞ identities", b1_identities),
        ("Rogers–Shephard equality and cube gap", rogers_shephard),
        ("constant-free inequality suite", constant_free_suite),
        ("triangle halfspace extremal 4/9", triangle_fraction),
        ("Santaló solver", santalo_solver),
        ("isotropic position", isotropic),
        ("φ_k calculus", phi_calculus),
        ("BS-projection sharpness", bs_projection),
        ("Monte Carlo volume and mean width", monte_carlo),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match std::panic::catch_unwind(f) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if !pass {
            failed += 1;
        }
        let secs = t.elapsed().as_secs_f64();
        println!("{} [{:>2}] {name}: {detail} [{secs:.1}s]", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} of 12 criteria pass", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
