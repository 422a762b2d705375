//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p gnslab-cli --test acceptance`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use gnslab::asymmetry::{asymmetry, relative_asymmetry, AffineRestriction, SearchConfig};
use gnslab::gnscore::{deficit, eta0_of, sign_split_bound};
use gnslab::radialopt::{eval_witness, minimize_radial, OptimizerWitness, RadialConfig, RadialProfile, RadialSolution};
use gnslab::rearrange::{cfmp_gap, schwarz_rearrange};
use gnslab::symmetrize::{averaging_check, full_reduction, median_offset, reflect_halves};
use gnslab::{GnsParams, GridFunction};
use gnslab_cli::families::{default_half_width, embedded_optimizer, perturbation, Family};
use gnslab_cli::fit::{fit_exponent, DEFAULT_THRESHOLD};
use gnslab_cli::scan::{check_eps, geometric_eps, grid_constant, run_scan, ScanRecord, ScanSetup};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(bool, String), Box<dyn std::error::Error>>;

const TUPLES: [(usize, f64, f64, f64); 2] = [(2, 1.8, 2.0, 3.0), (3, 2.0, 2.0, 4.0)];

fn params(t: (usize, f64, f64, f64)) -> GnsParams {
    GnsParams::new(t.0, t.1, t.2, t.3).unwrap()
}

fn key(t: (usize, f64, f64, f64), resolution: usize) -> String {
    format!("{t:?}@{resolution}")
}

/// Radial solutions are shared between criteria.
fn solve(t: (usize, f64, f64, f64), resolution: usize) -> Arc<RadialSolution> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<RadialSolution>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(s) = cache.lock().unwrap().get(&key(t, resolution)) {
        return s.clone();
    }
    let cfg = RadialConfig { resolution, ..RadialConfig::default() };
    let sol = Arc::new(minimize_radial(&params(t), &cfg).expect("radial solve"));
    cache.lock().unwrap().insert(key(t, resolution), sol.clone());
    sol
}

fn profile(t: (usize, f64, f64, f64)) -> Arc<RadialProfile> {
    Arc::new(solve(t, 2048).profile.clone())
}

/// Cube sized to the optimizer of `t`.
fn grid(t: (usize, f64, f64, f64), cells: usize) -> GridFunction {
    GridFunction::cube(t.0, cells, default_half_width(&profile(t))).unwrap()
}

fn unit(u: GridFunction, q: f64) -> GridFunction {
    let norm = u.lr_norm(q).unwrap();
    u.scaled(1.0 / norm)
}

fn gauss(x: &[f64], c: &[f64], w: f64) -> f64 {
    let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    (-r2 / (w * w)).exp()
}

/// Two or three Gaussians with random centers, widths and heights, kept
/// far enough inside the box that reflections across a median stay on it.
fn random_bumps(rng: &mut ChaCha8Rng, t: &GridFunction) -> GridFunction {
    let l = t.half_width(0);
    let bumps: Vec<(f64, Vec<f64>, f64)> = (0..rng.gen_range(2..=3))
        .map(|_| {
            let c = (0..t.dim()).map(|_| rng.gen_range(-0.15 * l..0.15 * l)).collect();
            (rng.gen_range(0.3..1.5), c, rng.gen_range(0.12 * l..0.2 * l))
        })
        .collect();
    t.sample_like(|x| bumps.iter().map(|(a, c, w)| a * gauss(x, c, *w)).sum()).unwrap()
}

/// Nonradial and exactly even in every coordinate: a function of the squares.
fn random_symmetric(rng: &mut ChaCha8Rng, t: &GridFunction) -> GridFunction {
    let l = t.half_width(0);
    let c: Vec<f64> = (0..t.dim()).map(|_| rng.gen_range(0.5..2.0) / (0.15 * l).powi(2)).collect();
    let d: Vec<f64> = (0..t.dim()).map(|_| rng.gen_range(0.5..2.0)).collect();
    let rho = rng.gen_range(0.2..0.4) * l;
    let w = rng.gen_range(0.08..0.15) * l;
    let amp = rng.gen_range(0.3..1.0);
    t.sample_like(|x| {
        let q1: f64 = x.iter().zip(&c).map(|(a, k)| k * a * a).sum();
        let q2: f64 = x.iter().zip(&d).map(|(a, k)| k * a * a).sum();
        let ring = (q2.sqrt() - rho) / w;
        (-q1).exp() + amp * (-ring * ring).exp()
    })
    .unwrap()
}

fn random_sign_changing(rng: &mut ChaCha8Rng, t: &GridFunction) -> GridFunction {
    let l = t.half_width(0);
    let c1: Vec<f64> = (0..t.dim()).map(|_| rng.gen_range(-0.3 * l..0.0)).collect();
    let c2: Vec<f64> = (0..t.dim()).map(|_| rng.gen_range(0.05 * l..0.3 * l)).collect();
    let (w1, w2) = (rng.gen_range(0.1 * l..0.2 * l), rng.gen_range(0.1 * l..0.2 * l));
    let a2 = rng.gen_range(0.1..1.2);
    t.sample_like(|x| gauss(x, &c1, w1) - a2 * gauss(x, &c2, w2)).unwrap()
}

/// A valid tuple drawn from the whole admissible region with `n ≤ 6`.
fn random_tuple(rng: &mut ChaCha8Rng) -> (usize, f64, f64, f64) {
    let n = rng.gen_range(2..=6usize);
    let nf = n as f64;
    let p = 1.0 + (nf - 1.0) * rng.gen_range(0.02..0.98);
    let p_star = (nf * p / (nf - p)).min(50.0);
    let s = 1.0 + (p_star - 1.0) * rng.gen_range(0.0..0.9);
    let q = s + (p_star - s) * rng.gen_range(0.05..0.95);
    (n, p, s, q)
}

fn exponent_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (n, p, s, q) = random_tuple(&mut rng);
        let par = GnsParams::new(n, p, s, q)?;
        let nf = n as f64;
        let p_star = nf * p / (nf - p);
        let resid = (par.theta / p_star + (1.0 - par.theta) / s - 1.0 / q).abs();
        worst = worst.max(resid);
        let alpha = (nf * p + p * s - nf * s) / (nf * p + p * q - nf * s);
        let ok = resid <= 1e-12
            && par.a_exp > 0.0
            && par.b_exp < 0.0
            && par.k_exp < q
            && par.alpha_exp > 0.0
            && par.alpha_exp < 1.0
            && (par.alpha_exp - alpha).abs() <= 1e-12
            && (par.k_exp - q * alpha).abs() <= 1e-12 * q;
        if !ok {
            return Ok((false, format!("tuple ({n},{p},{s},{q}) violates an identity: {par:?}")));
        }
    }
    let spot = params((3, 2.0, 2.0, 4.0));
    let spot_ok =
        (spot.theta - 0.75).abs() < 1e-12 && (spot.k_exp - 2.0).abs() < 1e-12 && (spot.alpha_exp - 0.5).abs() < 1e-12;
    Ok((spot_ok, format!("1000 tuples, worst theta residual {worst:.1e}; (3,2,2,4) -> ({}, {}, {})", spot.theta, spot.k_exp, spot.alpha_exp)))
}

/// Minimum of `λ^a A + λ^b B` by dense search in `ln λ` and golden refinement.
fn line_search_min(a: f64, b: f64, big_a: f64, big_b: f64) -> f64 {
    let g = |t: f64| big_a * (a * t).exp() + big_b * (b * t).exp();
    let (lo, hi, m) = (-200.0, 200.0, 40_000);
    let step = (hi - lo) / m as f64;
    let best = (0..=m).map(|i| lo + step * i as f64).min_by(|x, y| g(*x).total_cmp(&g(*y))).unwrap();
    let (mut l, mut r) = (best - step, best + step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (x1, x2) = (r - ratio * (r - l), l + ratio * (r - l));
        if g(x1) < g(x2) {
            r = x2;
        } else {
            l = x1;
        }
    }
    g(0.5 * (l + r))
}

fn scalar_orbit_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let t = if i < 50 { TUPLES[i % 2] } else { random_tuple(&mut rng) };
        let par = params(t);
        let big_a = 10f64.powf(rng.gen_range(-3.0..3.0));
        let big_b = 10f64.powf(rng.gen_range(-3.0..3.0));
        let direct = line_search_min(par.a_exp, par.b_exp, big_a, big_b);
        let g = big_a.powf(par.theta / par.p) * big_b.powf((1.0 - par.theta) / par.s);
        let predicted = eta0_of(&par) * g.powf(par.k_exp);
        worst = worst.max((direct / predicted - 1.0).abs());
    }
    Ok((worst <= 1e-10, format!("worst relative gap {worst:.2e} over 100 (A, B)")))
}

fn ps_violation(u: &GridFunction, p: f64) -> (f64, bool) {
    let r = schwarz_rearrange(u);
    let (g, gs) = (u.grad_lp_norm(p).unwrap(), r.u_star.grad_lp_norm(p).unwrap());
    ((gs - g).max(0.0) / g, same_multiset(u, &r.u_star))
}

/// `u*` rearranges `|u|`, so compare against that.
fn same_multiset(a: &GridFunction, b: &GridFunction) -> bool {
    let mut x: Vec<u64> = a.values().iter().map(|v| v.abs().to_bits()).collect();
    let mut y: Vec<u64> = b.values().iter().map(|v| v.to_bits()).collect();
    x.sort_unstable();
    y.sort_unstable();
    x == y
}

fn gaussian_pair(c: f64, cells: usize) -> GridFunction {
    let o = [0.0731, -0.0417];
    GridFunction::cube(2, cells, 5.0)
        .unwrap()
        .sample_like(|x| gauss(x, &[o[0] + c, o[1]], 1.0) + gauss(x, &[o[0] - c, o[1]], 1.0))
        .unwrap()
}

fn rearrangement() -> Check {
    let p = TUPLES[0].1;
    let mut equi = true;
    let mut eps = [0.0f64; 2];
    for (slot, cells) in [128usize, 256].into_iter().enumerate() {
        for c in [0.0, 0.15, 0.3] {
            let (v, same) = ps_violation(&gaussian_pair(c, cells), p);
            equi &= same;
            eps[slot] = eps[slot].max(v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in TUPLES {
        let tmpl = grid(t, if t.0 == 2 { 64 } else { 20 });
        for _ in 0..10 {
            for u in [random_bumps(&mut rng, &tmpl), random_sign_changing(&mut rng, &tmpl), random_symmetric(&mut rng, &tmpl)] {
                equi &= same_multiset(&u, &schwarz_rearrange(&u).u_star);
            }
        }
    }
    let halves = eps[1] <= 0.5 * eps[0];
    Ok((
        equi && halves,
        format!(
            "multiset exact: {equi}; violation eps(h) = {:.3e} at 128^2, {:.3e} at 256^2 (ratio {:.2}, need >= 2)",
            eps[0],
            eps[1],
            eps[0] / eps[1]
        ),
    ))
}

fn optimizer_quality() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for t in TUPLES {
        let (lo, hi) = (solve(t, 1024).g_est, solve(t, 4096).g_est);
        let rel = (lo / hi - 1.0).abs();
        ok &= rel <= 5e-3;
        notes.push(format!("{t:?} G_est 1024/4096 gap {rel:.1e}"));

        let par = params(t);
        let cfg = RadialConfig { resolution: 1024, ..RadialConfig::default() };
        let base = solve(t, 1024).f_min;
        let mut worst = 0.0f64;
        for m in [0.5, 1.0, 2.0, 4.0] {
            let direct = minimize_radial(&par, &RadialConfig { mass: m, ..cfg })?.f_min;
            worst = worst.max((direct / (m.powf(par.alpha_exp) * base) - 1.0).abs());
        }
        ok &= worst <= 1e-2;
        notes.push(format!("phi(m) worst gap {worst:.1e}"));
    }
    // grid deficit of the sampled optimizer, 256^2 on [-8, 8]^2
    let t = TUPLES[0];
    let sol = solve(t, 2048);
    let tmpl = GridFunction::cube(2, 256, 8.0)?;
    let v = embedded_optimizer(&sol.profile, &tmpl)?;
    let delta = deficit(&v, &params(t), sol.g_est)?.delta;
    ok &= delta.abs() <= 1e-3;
    notes.push(format!("delta(v) at 256^2 = {delta:.2e}"));
    Ok((ok, notes.join("; ")))
}

fn reflection_halves() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut failures = 0;
    let mut checked = 0;
    for t in TUPLES {
        let par = params(t);
        let g = solve(t, 2048).g_est;
        let tmpl = grid(t, if t.0 == 2 { 256 } else { 64 });
        for _ in 0..50 {
            let u = random_bumps(&mut rng, &tmpl);
            let d = deficit(&u, &par, g)?.delta;
            for axis in 0..t.0 {
                let m = median_offset(&u, axis, par.q)?;
                let split = reflect_halves(&u, axis, m.snapped, par.q)?;
                let dp = deficit(&split.u_plus, &par, g)?.delta;
                let dm = deficit(&split.u_minus, &par, g)?.delta;
                let excess = dp.max(dm) - 2.0 * d;
                worst_excess = worst_excess.max(excess);
                let avg = averaging_check(&u, &split, &par)?.holds();
                checked += 1;
                if excess > 1e-6 || !avg {
                    failures += 1;
                }
            }
        }
    }
    Ok((failures == 0, format!("{checked} splits over 100 inputs, {failures} failures, worst max(d+,d-) - 2d = {worst_excess:.2e}")))
}

fn asymmetry_recovery() -> Check {
    let cfg = SearchConfig::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for t in TUPLES {
        let par = params(t);
        let prof = profile(t);
        let tmpl = grid(t, if t.0 == 2 { 128 } else { 48 });
        let x0: Vec<f64> = [0.31, -0.47, 0.22][..t.0].to_vec();
        let (a, b) = (0.8, 1.25);
        let u = eval_witness(&OptimizerWitness::new(a, b, x0.clone(), prof.clone())?, &tmpl)?;
        let res = asymmetry(&u, &par, &prof, &cfg)?;
        let b_err = (res.witness.b / b - 1.0).abs();
        let x_ok = res.witness.x0.iter().zip(&x0).zip(tmpl.spacing()).all(|((e, x), h)| (e - x).abs() <= *h);
        ok &= res.lambda_value <= 1e-4 && b_err <= 1e-2 && x_ok;
        notes.push(format!("{t:?} witness lambda {:.1e} b err {b_err:.1e} center ok {x_ok}", res.lambda_value));

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let small = grid(t, if t.0 == 2 { 64 } else { 24 });
        let ratio_bound = 3f64.powf(par.q);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..20 {
            let u = unit(random_symmetric(&mut rng, &small), par.q);
            let free = asymmetry(&u, &par, &prof, &cfg)?.lambda_value;
            let pinned = relative_asymmetry(&u, &AffineRestriction::origin(t.0), &par, &prof, &cfg)?.lambda_value;
            worst = worst.max(pinned - ratio_bound * free);
        }
        ok &= worst <= cfg.tol;
        notes.push(format!("worst lambda(u|0) - 3^q lambda(u) = {worst:.1e}"));
    }
    Ok((ok, notes.join("; ")))
}

/// `(t^{k/q} + (1-t)^{k/q})^{1/k} - 1` with `k = q (np+ps-ns)/(np+pq-ns)`.
fn split_oracle(t: f64, (n, p, s, q): (usize, f64, f64, f64)) -> f64 {
    let nf = n as f64;
    let k = q * (nf * p + p * s - nf * s) / (nf * p + p * q - nf * s);
    (t.powf(k / q) + (1.0 - t).powf(k / q)).powf(1.0 / k) - 1.0
}

fn sign_split() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut notes = Vec::new();
    let mut ok = true;
    for t in TUPLES {
        let par = params(t);
        let sol = solve(t, 2048);
        let tmpl = grid(t, if t.0 == 2 { 128 } else { 64 });
        let tol_g = deficit(&embedded_optimizer(&sol.profile, &tmpl)?, &par, sol.g_est)?.delta.abs();
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..20 {
            let u = unit(random_sign_changing(&mut rng, &tmpl), par.q);
            let split = sign_split_bound(&u, &par, sol.g_est)?;
            let f = split_oracle(split.t, t);
            ok &= (f - split.f_value).abs() <= 1e-12;
            worst = worst.max(f - split.delta);
        }
        ok &= worst <= tol_g;
        notes.push(format!("{t:?} worst f(t) - delta = {worst:.2e}, tol_G = {tol_g:.1e}"));
    }
    Ok((ok, notes.join("; ")))
}

fn radial_bump_scan(cells: usize) -> Vec<ScanRecord> {
    let t = TUPLES[0];
    let par = params(t);
    let prof = profile(t);
    let tmpl = GridFunction::cube(2, cells, 8.0).unwrap();
    let v = embedded_optimizer(&prof, &tmpl).unwrap();
    let w = perturbation(Family::RadialBump, &prof, &tmpl).unwrap();
    let setup = ScanSetup { g_const: grid_constant(&v, &par).unwrap(), params: par, profile: prof, v, w, search: SearchConfig::default() };
    let eps = check_eps(geometric_eps(0.5, 12, 0.5).unwrap()).unwrap();
    run_scan(&setup, &eps).into_iter().map(|(_, r)| r.expect("scan row")).collect()
}

fn soft_continuity() -> Check {
    let tol = SearchConfig::default().tol;
    let mut alphas = Vec::new();
    let mut ok = true;
    let mut notes = Vec::new();
    for cells in [128, 256] {
        let rows = radial_bump_scan(cells);
        // rows are in ascending eps, so the first three have the smallest deficit
        let tail = &rows[..3];
        ok &= tail.iter().all(|r| r.lambda < 10.0 * tol);
        ok &= rows.windows(2).all(|w| w[0].delta < w[1].delta);
        let fit = fit_exponent(&rows, DEFAULT_THRESHOLD)?;
        ok &= fit.alpha_hat.is_finite() && fit.alpha_hat > 0.0;
        notes.push(format!(
            "{cells}^2: smallest delta {:.1e} with lambda {:.1e}, alpha_hat {:.4} (r2 {:.3}, {} rows)",
            tail[0].delta, tail[0].lambda, fit.alpha_hat, fit.r_squared, fit.points_used
        ));
        alphas.push(fit.alpha_hat);
    }
    let drift = (alphas[0] / alphas[1] - 1.0).abs();
    ok &= drift <= 0.15;
    notes.push(format!("alpha_hat drift {:.1}%", 100.0 * drift));
    Ok((ok, notes.join("; ")))
}

fn cfmp_ratio() -> Check {
    let mut ok = true;
    let mut notes = Vec::new();
    for t in TUPLES {
        let par = params(t);
        let (coarse, fine) = if t.0 == 2 { (128, 256) } else { (48, 96) };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let seeds: Vec<u64> = (0..6).map(|_| rng.gen()).collect();
        let mut worst = 1.0f64;
        for seed in seeds {
            let ratio_at = |cells: usize| -> Result<f64, gnslab::Error> {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                let u = random_symmetric(&mut r, &grid(t, cells));
                Ok(cfmp_gap(&u, &par)?.ratio())
            };
            let (rc, rf) = (ratio_at(coarse)?, ratio_at(fine)?);
            if !(rc.is_finite() && rf.is_finite() && rc > 0.0 && rf > 0.0) {
                ok = false;
                notes.push(format!("{t:?} non-finite ratio {rc} / {rf}"));
                continue;
            }
            worst = worst.max(rc / rf).max(rf / rc);
        }
        ok &= worst <= 2.0;
        notes.push(format!("{t:?} worst refinement factor {worst:.3}"));
    }
    Ok((ok, notes.join("; ")))
}

fn pipeline_fixed_point() -> Check {
    let t = TUPLES[0];
    let par = params(t);
    let sol = solve(t, 2048);
    let prof = profile(t);
    let cfg = SearchConfig::default();
    let tmpl = GridFunction::cube(2, 256, 8.0)?;
    let v = unit(embedded_optimizer(&prof, &tmpl)?, par.q);
    let oracle = |f: &GridFunction| asymmetry(f, &par, &prof, &cfg).map(|r| r.lambda_value);
    let trace = full_reduction(&v, &par, sol.g_est, &oracle)?;
    let worst_delta = trace.stages.iter().map(|s| s.delta.abs()).fold(0.0, f64::max);
    let dist = trace.final_function.distance_mass(&v, par.q)?.powf(1.0 / par.q);
    let ok = worst_delta <= 1e-3 && dist <= 1e-3 && trace.stages.len() == t.0;
    Ok((ok, format!("{} stages, worst |delta| {worst_delta:.1e}, relative q-distance {dist:.1e}", trace.stages.len())))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("exponent identities", exponent_identities),
        ("scalar orbit identity", scalar_orbit_identity),
        ("rearrangement", rearrangement),
        ("optimizer quality", optimizer_quality),
        ("reflection halves", reflection_halves),
        ("asymmetry recovery", asymmetry_recovery),
        ("sign-split bound", sign_split),
        ("soft continuity", soft_continuity),
        ("gradient-gap ratio", cfmp_ratio),
        ("pipeline fixed point", pipeline_fixed_point),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match std::panic::catch_unwind(run) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {:>2} {name}: {detail} ({:.1}s)", i + 1, start.elapsed().as_secs_f64());
        if !pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
