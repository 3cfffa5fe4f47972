//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report prints in order. Criteria 5
//! and 8 are reported but do not fail the run; see the README.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use pairform::bounds::{nonpath_lower_bound, phase_estimate, phase_radius, CertificateRule, NonPathCertificate};
use pairform::closure::{max_f, validate_graph};
use pairform::matcore::{act_pair, c, max_norm, real_mat, sample_group, sample_group_with, GroupElement, Mat2, MatrixPair, C64};
use pairform::pairnf::{classify_pair, representative, samples::all_samples, table_dim, FAMILY_TABLE};
use pairform::tangent::orbit_dimension;
use pairform::witness::{perturb_experiment, verify_witness, witness_catalog, DEFAULT_SWEEP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    n: u8,
    pass: bool,
    detail: String,
    required: bool,
}

fn report(n: u8, required: bool, pass: bool, detail: String) -> Outcome {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {n}: {detail}");
    Outcome { n, pass, detail, required }
}

fn dimension_table() -> Outcome {
    let t = Instant::now();
    let samples = all_samples();
    let mut draws: BTreeMap<String, usize> = BTreeMap::new();
    let mut mismatches = 0;
    for cls in &samples {
        *draws.entry(cls.family_id()).or_default() += 1;
        let want = table_dim(cls.a_family.name(), cls.b_form.name());
        let got = orbit_dimension(&representative(cls), 1e-9).ok();
        if want.is_none() || got != want {
            mismatches += 1;
        }
    }
    let thin = samples
        .iter()
        .filter(|c| !c.params().is_empty() && draws[&c.family_id()] < 5)
        .count();
    let secs = t.elapsed().as_secs_f64();
    let pass = draws.len() == FAMILY_TABLE.len() && mismatches == 0 && thin == 0 && secs < 5.0;
    report(1, true, pass, format!("{} families, {} draws, {mismatches} mismatches, {thin} under-sampled, {secs:.2}s", draws.len(), samples.len()))
}

fn round_trip() -> Outcome {
    let t = Instant::now();
    let (mut failures, mut worst_res, mut trials) = (0, 0.0f64, 0);
    let mut seen = BTreeMap::new();
    for cls in all_samples() {
        // one class per family keeps the count at 100 per family
        if seen.insert(cls.family_id(), ()).is_some() {
            continue;
        }
        let rep = representative(&cls);
        for k in 0..100u64 {
            trials += 1;
            let g = sample_group(10_000 + k, 1.0).unwrap();
            match classify_pair(&act_pair(&g, &rep), 1e-9) {
                Ok(r) if r.cls.approx_eq(&cls, 1e-6) && r.residual <= 1e-8 => worst_res = worst_res.max(r.residual),
                _ => failures += 1,
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = failures == 0 && seen.len() == FAMILY_TABLE.len() && secs < 60.0;
    report(2, true, pass, format!("{trials} trials over {} families, {failures} failures, worst residual {worst_res:.1e}, {secs:.2}s", seen.len()))
}

fn validator() -> Outcome {
    let rep = validate_graph();
    let pass = rep.violations.is_empty();
    report(3, true, pass, format!("{} edges x {} samples, {} violations", rep.edges, rep.samples, rep.violations.len()))
}

/// Brute force over `n` points of the constraint arc times `n` values of
/// `beta`. The arc `R^2 + 2RT cos + T^2 = 1` is walked by eccentric anomaly in
/// the rotated frame `u = (R + T)/sqrt2`, `v = (T - R)/sqrt2`, with nodes
/// clustered at the ends where `sqrt(RT)` is steep.
fn grid_oracle(a: f64, b: f64, d: C64, theta: f64, n: usize) -> f64 {
    let ct = theta.cos();
    let (ku, kv) = ((1.0 + ct).sqrt(), (1.0 - ct).sqrt());
    let lim = (kv / ku).atan();
    let mut best = 0.0f64;
    for i in 0..n {
        let q = 0.5 * (1.0 - (PI * i as f64 / (n - 1) as f64).cos());
        let phi = lim * (2.0 * q - 1.0);
        let (u, v) = (phi.cos() / ku, phi.sin() / kv);
        let r = ((u - v) / 2f64.sqrt()).max(0.0);
        let t = ((u + v) / 2f64.sqrt()).max(0.0);
        for j in 0..n {
            let e = C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
            best = best.max((e * (a * r) + 2.0 * b * (r * t).sqrt() + d * t / e).norm());
        }
    }
    best
}

fn max_f_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut anchor_err = 0.0f64;
    for _ in 0..50 {
        // the single-term anchors are |d| and |a| only while cos(theta) >= 0;
        // past pi/2 the arc reaches 1/sin(theta)
        let th = rng.random_range(0.0..PI * 0.9);
        let reach = if th <= PI / 2.0 { 1.0 } else { 1.0 / th.sin() };
        let d = C64::from_polar(rng.random_range(0.1..2.0), rng.random_range(0.0..2.0 * PI));
        anchor_err = anchor_err.max((max_f(0.0, 0.0, d, th, 1e-10) - d.norm() * reach).abs());
        let a = rng.random_range(0.1..2.0);
        anchor_err = anchor_err.max((max_f(a, 0.0, c(0.0, 0.0), th, 1e-10) - a * reach).abs());
        let dd = rng.random_range(0.1..2.0);
        let aa = rng.random_range(0.0..=dd);
        anchor_err = anchor_err.max((max_f(aa, 0.0, c(dd, 0.0), 0.0, 1e-10) - dd).abs());
    }
    let (mut grid_err, mut below) = (0.0f64, 0);
    for _ in 0..100 {
        let a = rng.random_range(0.0..1.0);
        let b = rng.random_range(0.0..1.0);
        let d = C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(0.0..2.0 * PI));
        let th = rng.random_range(0.0..PI * 0.9);
        let (m, g) = (max_f(a, b, d, th, 1e-10), grid_oracle(a, b, d, th, 400));
        grid_err = grid_err.max((m - g).abs());
        // every grid point is feasible, so the grid can never beat the maximum
        if m < g - 1e-12 {
            below += 1;
        }
    }
    let pass = anchor_err <= 1e-6 && grid_err <= 1e-4 && below == 0;
    report(4, true, pass, format!("anchor error {anchor_err:.1e}, grid disagreement {grid_err:.1e} on 100 inputs, {below} below the grid"))
}

fn witnesses() -> Outcome {
    let cat = witness_catalog();
    let mut failing = Vec::new();
    let mut worst = 0.0f64;
    for w in &cat {
        match verify_witness(w, &DEFAULT_SWEEP, 1e-6) {
            Ok(r) => {
                worst = worst.max(r.final_residual);
                if !(r.passed && r.monotone && r.final_residual <= 1e-6) {
                    failing.push(w.id);
                }
            }
            Err(_) => failing.push(w.id),
        }
    }
    let pass = cat.len() >= 18 && failing.is_empty();
    report(5, false, pass, format!("{} entries, {} above 1e-6 at s = 1e-4 (worst {worst:.1e})", cat.len(), failing.len()))
}

/// Smallest `max(e / bound_E, f / bound_F)` found by random search plus a
/// local descent over the group; a value below 1 falsifies the certificate.
fn closest_approach(src: &MatrixPair, dst: &MatrixPair, cert: &NonPathCertificate, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let score = |g: &GroupElement| {
        let y = act_pair(g, dst);
        let e = max_norm(&(y.a - src.a)) / cert.bound_e.unwrap_or(f64::INFINITY);
        let f = max_norm(&(y.b.matrix() - src.b.matrix())) / cert.bound_f.unwrap_or(f64::INFINITY);
        e.max(f)
    };
    let mut best_g = GroupElement::identity();
    let mut best = score(&best_g);
    for k in 0..n / 2 {
        let spread = [0.3, 1.0, 3.0][k % 3];
        let g = sample_group_with(&mut rng, spread).unwrap();
        let s = score(&g);
        if s < best {
            best = s;
            best_g = g;
        }
    }
    let mut step = 0.3;
    for _ in 0..n / 2 {
        let mut dp = Mat2::zeros();
        for k in 0..4 {
            dp[(k / 2, k % 2)] = c(rng.random_range(-step..step), rng.random_range(-step..step));
        }
        let cc = best_g.c() * C64::from_polar(1.0, rng.random_range(-step..step));
        let Ok(g) = GroupElement::normalized(cc, best_g.p() + dp) else { continue };
        let s = score(&g);
        if s < best {
            best = s;
            best_g = g;
        } else {
            step = (step * 0.999).max(1e-4);
        }
    }
    best
}

fn random_pair(rng: &mut ChaCha8Rng) -> MatrixPair {
    let mut z = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    MatrixPair::from_mats(Mat2::new(z(), z(), z(), z()), Mat2::new(z(), z(), z(), z()))
}

fn certificates() -> Outcome {
    let t = Instant::now();
    let mut cases = vec![(
        MatrixPair::from_mats(Mat2::zeros(), Mat2::identity()),
        MatrixPair::from_mats(Mat2::zeros(), real_mat(1.0, 0.0, 0.0, 0.0)),
    )];
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    while cases.len() < 21 {
        let (s, d) = (random_pair(&mut rng), random_pair(&mut rng));
        if matches!(nonpath_lower_bound(&s, &d), Some(NonPathCertificate { rule: CertificateRule::DetRatioRule, .. })) {
            cases.push((s, d));
        }
    }
    let mut falsified = 0;
    let mut closest = f64::INFINITY;
    for (k, (s, d)) in cases.iter().enumerate() {
        let cert = nonpath_lower_bound(s, d).expect("certificate");
        let r = closest_approach(s, d, &cert, 100_000, 700 + k as u64);
        closest = closest.min(r);
        if r < 1.0 {
            falsified += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = falsified == 0 && secs < 120.0;
    report(6, true, pass, format!("{} cases, {falsified} falsified, closest approach {closest:.3} of bound, {secs:.2}s", cases.len()))
}

fn phase() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let (mut trials, mut violations, mut seed) = (0, 0, 0u64);
    while trials < 10_000 {
        seed += 1;
        let g = sample_group(50_000 + seed, 1.0).unwrap();
        let mut z = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let src = Mat2::new(z(), z(), z(), z());
        let rad = phase_radius(&src);
        let mut e = Mat2::new(z(), z(), z(), z());
        e *= c(rad * rng.random_range(0.0..1.0) / max_norm(&e), 0.0);
        // dst is chosen so that c P* dst P = src + E
        let pinv = g.p().try_inverse().unwrap();
        let dst = pinv.adjoint() * (src + e) * pinv * g.c().conj();
        let Ok(est) = phase_estimate(&src, &dst, max_norm(&e)) else { continue };
        trials += 1;
        let half = C64::from_polar(1.0, est.delta / 2.0);
        let gerr = (g.c() - half).norm().min((g.c() + half).norm());
        let ratio = (src.determinant().norm() / dst.determinant().norm()).sqrt();
        let rerr = (g.p().determinant().norm() - ratio).abs();
        if gerr > est.g_bound * (1.0 + 1e-9) + 1e-12 || rerr > est.r_bound * (1.0 + 1e-9) + 1e-12 {
            violations += 1;
        }
    }
    report(7, true, violations == 0, format!("{trials} trials, {violations} violations"))
}

fn perturbation() -> Outcome {
    let t = Instant::now();
    let mut seen = BTreeMap::new();
    let (mut total, mut viol, mut unknown, mut clean) = (0usize, 0usize, 0usize, Vec::new());
    for cls in all_samples() {
        if seen.insert(cls.family_id(), ()).is_some() {
            continue;
        }
        let mut ok = true;
        for (k, eps) in [1e-3, 1e-5].into_iter().enumerate() {
            let r = perturb_experiment(&cls, eps, 1000, 90 + k as u64);
            total += r.samples;
            viol += r.violations.len();
            unknown += r.unknown_edges;
            ok &= r.violations.is_empty();
        }
        if ok {
            clean.push(cls.family_id());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = viol == 0 && unknown * 20 <= total;
    report(
        8,
        false,
        pass,
        format!("{total} samples, {viol} violations, {unknown} unknown edges, clean sources: [{}], {secs:.2}s", clean.join(", ")),
    )
}

fn main() -> ExitCode {
    // respect libtest-style filtering so `cargo test <name>` skips this target
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let outcomes = [dimension_table(), round_trip(), validator(), max_f_checks(), witnesses(), certificates(), phase(), perturbation()];
    let broken: Vec<&Outcome> = outcomes.iter().filter(|o| o.required && !o.pass).collect();
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} criteria pass", outcomes.len());
    if broken.is_empty() {
        ExitCode::SUCCESS
    } else {
        for o in broken {
            eprintln!("required criterion {} failed: {}", o.n, o.detail);
        }
        ExitCode::FAILURE
    }
}
