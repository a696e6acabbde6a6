//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p nonlocal-pq --test acceptance`. The process exits
//! nonzero when a criterion fails that is not listed in `UNATTAINABLE`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use nonlocal_pq::degiorgi::{dg_membership_on, fast_convergence, generate_samples, MembershipReport, SampleSpec};
use nonlocal_pq::domain::{build_grid, GridDomain, GridFunction, GridSpec};
use nonlocal_pq::energy::{tail_fprime, Energy};
use nonlocal_pq::growth::lemmas::{run_lemma_suite, standard_grid};
use nonlocal_pq::growth::GrowthFunction;
use nonlocal_pq::kernel::KernelCoefficient;
use nonlocal_pq::regularity::{estimate_alpha, verify_holder_bound, verify_local_bound};
use nonlocal_pq::solve::{minimize, residual_norm, SolveOptions, StructureFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that cannot be met as stated, with the reason printed next to
/// their FAIL line.
const UNATTAINABLE: &[(usize, &str)] = &[(
    8,
    "with C_fit = (lhs - tail)/sup the tail term alone exceeds lhs for s <= 0.8, so C_fit is 0 there \
     and positive only near s = 0.9; its spread across the sweep is unbounded",
)];

struct Outcome {
    passed: bool,
    detail: String,
}

fn ok(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct Minimizer {
    label: String,
    gf: GrowthFunction,
    s: f64,
    u: GridFunction,
    tol: f64,
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi == lo {
        1.0
    } else if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `Ω = (0, 1)` with exterior data 0 on the left and 1 on the right.
fn unit_interval(h: f64) -> Arc<GridDomain> {
    let spec = GridSpec { dim: 1, h, omega_radius: 0.5, r_infinity: 2.0, omega_center: Some(vec![0.5]) };
    Arc::new(spec.build().unwrap())
}

fn step_data(dom: &Arc<GridDomain>, mid: f64, left: f64, right: f64) -> GridFunction {
    let c = dom.center()[0];
    let rho = dom.omega_radius();
    GridFunction::from_fn(dom.clone(), |x| {
        if x[0] >= c + rho - 1e-12 {
            right
        } else if x[0] <= c - rho + 1e-12 {
            left
        } else {
            mid
        }
    })
    .unwrap()
}

fn solve(gf: &GrowthFunction, u0: &GridFunction, s: f64, tol: f64) -> GridFunction {
    let opts = SolveOptions { tol, ..SolveOptions::default() };
    minimize(gf, &KernelCoefficient::One, u0, s, opts).expect("solver converges").0
}

fn pair_weight(dom: &GridDomain, s: f64, i: usize, j: usize) -> (f64, f64) {
    let r = (dom.coord(i)[0] - dom.coord(j)[0]).abs();
    let h = dom.h();
    ((1.0 - s) * h * h / r, r.powf(s))
}

/// Stationarity of the quadratic energy as a dense linear system.
fn dense_quadratic_oracle(u0: &GridFunction, s: f64) -> Vec<f64> {
    let dom = u0.domain();
    let inner = dom.interior();
    let n = inner.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (ai, &i) in inner.iter().enumerate() {
        for j in 0..dom.len() {
            if j == i {
                continue;
            }
            let (w, rs) = pair_weight(dom, s, i, j);
            let c = 4.0 * w / (rs * rs);
            a[(ai, ai)] += c;
            match inner.iter().position(|&k| k == j) {
                Some(aj) => a[(ai, aj)] -= c,
                None => b[ai] += c * u0.value(j),
            }
        }
    }
    a.lu().solve(&b).expect("nonsingular").iter().copied().collect()
}

/// Gauss–Seidel sweeps in which every interior value is set to the root of
/// its own partial derivative, found by bisection.
fn coordinate_descent_oracle(gf: &GrowthFunction, u0: &GridFunction, s: f64) -> Vec<f64> {
    let dom = u0.domain();
    let mut u = u0.values().to_vec();
    let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let partial = |u: &[f64], i: usize, t: f64| -> f64 {
        let mut acc = 0.0;
        for j in 0..dom.len() {
            if j != i {
                let (w, rs) = pair_weight(dom, s, i, j);
                let d = t - u[j];
                acc += 2.0 * w * d.signum() * gf.fprime(d.abs() / rs) / rs;
            }
        }
        acc
    };
    for _ in 0..100_000 {
        let mut change: f64 = 0.0;
        for &i in dom.interior() {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                if partial(&u, i, m) > 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            let t = 0.5 * (a + b);
            change = change.max((t - u[i]).abs());
            u[i] = t;
        }
        if change < 1e-14 {
            break;
        }
    }
    dom.interior().iter().map(|&i| u[i]).collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let families = [
        ("Power(2)", GrowthFunction::power(2.0).unwrap()),
        ("Power(3)", GrowthFunction::power(3.0).unwrap()),
        ("Sum(2,3)/2", GrowthFunction::sum(2.0, 3.0).unwrap()),
        ("PowerLog(2)/log2", GrowthFunction::power_log(2.0).unwrap()),
    ];
    let grid = standard_grid();
    let mut failed = Vec::new();
    let mut total = 0;
    for (name, gf) in &families {
        let rep = run_lemma_suite(gf, &grid).unwrap();
        total += rep.checks.len();
        failed.extend(rep.failures().map(|c| format!("{name}:{}", c.name)));
    }
    ok(failed.is_empty(), format!("{total} checks over 4 families, failures {failed:?}"))
}

fn criterion_2() -> Outcome {
    let gf = GrowthFunction::power(2.0).unwrap();
    let big_r = 1.0;
    let mut parts = Vec::new();
    let mut passed = true;
    for (mult, limit) in [(64.0, 0.02), (512.0, 0.005)] {
        let dom = Arc::new(build_grid(1, big_r / 1024.0, big_r, mult * big_r).unwrap());
        let u = GridFunction::from_fn(dom.clone(), |x| if x[0].abs() >= big_r - 1e-12 { 1.0 } else { 0.0 }).unwrap();
        let tail = tail_fprime(&gf, &u, [0.0, 0.0], big_r, 0.5).unwrap();
        let err = (tail.value - 1.0).abs();
        passed &= err <= limit && tail.upper_bound >= 1.0;
        parts.push(format!("R_inf={mult}R tail={:.6} rel.err={err:.2e} (limit {limit})", tail.value));
    }
    ok(passed, parts.join(", "))
}

fn criterion_3() -> Outcome {
    let dom = {
        let spec = GridSpec { dim: 1, h: 1.0 / 9.0, omega_radius: 0.5, r_infinity: 2.0, omega_center: Some(vec![0.5]) };
        Arc::new(spec.build().unwrap())
    };
    assert_eq!(dom.interior().len(), 8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for gf in [GrowthFunction::power(2.0).unwrap(), GrowthFunction::sum(2.0, 3.0).unwrap()] {
        let energy = Energy::new(&gf, &KernelCoefficient::One, &dom, 0.5).unwrap();
        for _ in 0..20 {
            let vals: Vec<f64> = (0..dom.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = GridFunction::new(dom.clone(), vals).unwrap();
            let g = energy.gradient(&u);
            let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, &i) in dom.interior().iter().enumerate() {
                let step = 1e-6;
                let mut up = u.clone();
                up.values_mut()[i] += step;
                let mut dn = u.clone();
                dn.values_mut()[i] -= step;
                let fd = (energy.value(&up) - energy.value(&dn)) / (2.0 * step);
                worst = worst.max((fd - g[a]).abs() / scale);
            }
        }
    }
    ok(worst <= 1e-5, format!("worst relative deviation {worst:.2e} over 40 points (limit 1e-5)"))
}

fn criterion_4(mins: &mut Vec<Minimizer>) -> Outcome {
    let p2 = GrowthFunction::power(2.0).unwrap();
    let sum = GrowthFunction::sum(2.0, 3.0).unwrap();
    let s = 0.5;
    let tol = 1e-10;
    let mut parts = Vec::new();
    let mut passed = true;
    for h in [0.2, 1.0 / 17.0] {
        let dom = unit_interval(h);
        let u0 = step_data(&dom, 0.5, 0.0, 1.0);
        let n = dom.interior().len();

        let u = solve(&p2, &u0, s, tol);
        let err = sup_diff(&u.interior_values(), &dense_quadratic_oracle(&u0, s));
        passed &= err <= 1e-8;
        parts.push(format!("Power(2) n={n}: {err:.1e}"));
        mins.push(Minimizer { label: format!("Power(2) n={n}"), gf: p2.clone(), s, u, tol });

        let u = solve(&sum, &u0, s, tol);
        let err = sup_diff(&u.interior_values(), &coordinate_descent_oracle(&sum, &u0, s));
        passed &= err <= 1e-6;
        parts.push(format!("Sum(2,3)/2 n={n}: {err:.1e}"));
        mins.push(Minimizer { label: format!("Sum(2,3)/2 n={n}"), gf: sum.clone(), s, u, tol });
    }
    ok(passed, format!("sup-norm deviation {} (limits 1e-8 / 1e-6)", parts.join(", ")))
}

fn criterion_5(mins: &[Minimizer]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut passed = true;
    for m in mins {
        let hs = StructureFunction::euler_lagrange(&m.gf, &KernelCoefficient::One);
        let r = residual_norm(&hs, &m.u, m.s).unwrap();
        passed &= r <= 10.0 * m.tol;
        worst = worst.max(r / m.tol);
    }
    ok(passed, format!("{} minimizers, worst residual/tol = {worst:.3} (limit 10)", mins.len()))
}

fn criterion_6(mins: &mut Vec<Minimizer>) -> Outcome {
    let p2 = GrowthFunction::power(2.0).unwrap();
    let sum = GrowthFunction::sum(2.0, 3.0).unwrap();
    let tol = 1e-8;
    let mut parts = Vec::new();
    let mut passed = true;
    for (name, gf, s) in [("Power(2)", &p2, 0.5), ("Sum(2,3)/2", &sum, 0.5), ("Power(2)", &p2, 0.3)] {
        let solve_at = |h: f64| {
            let dom = Arc::new(build_grid(1, h, 1.0, 4.0).unwrap());
            solve(gf, &step_data(&dom, 0.5, 0.0, 1.0), s, tol)
        };
        let coarse = solve_at(1.0 / 32.0);
        let fine = solve_at(1.0 / 64.0);
        let samples = generate_samples(&coarse, &SampleSpec::new(50, 6)).unwrap();
        let a: MembershipReport = dg_membership_on(gf, &coarse, s, &samples).unwrap();
        let b = dg_membership_on(gf, &fine, s, &samples).unwrap();
        let ratio = spread(&[a.c_empirical, b.c_empirical]);
        passed &= a.c_empirical.is_finite() && b.c_empirical.is_finite() && ratio <= 2.0;
        parts.push(format!("{name} s={s}: c={:.4}->{:.4}", a.c_empirical, b.c_empirical));
        for (h, u) in [(32, coarse), (64, fine)] {
            mins.push(Minimizer { label: format!("{name} s={s} h=1/{h}"), gf: gf.clone(), s, u, tol });
        }
    }
    ok(passed, format!("{} (finite, refinement ratio <= 2)", parts.join(", ")))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut below, mut diverged, mut violations) = (0, 0, 0);
    for n in 0..100 {
        let c = rng.gen_range(0.5..4.0);
        let b = rng.gen_range(1.1..8.0);
        let beta = rng.gen_range(0.2..2.0);
        let threshold = f64::powf(c, -1.0 / beta) * f64::powf(b, -1.0 / (beta * beta));
        let y0 = if n % 4 == 3 { threshold * rng.gen_range(2.0..10.0) } else { threshold * rng.gen_range(0.0..1.0) };
        let fc = fast_convergence(y0, c, b, beta, 40).unwrap();
        if fc.below_threshold {
            below += 1;
            // independent recomputation of the bound
            let mut y = y0;
            for j in 0..40 {
                if y > y0 * b.powf(-(j as f64) / beta) * (1.0 + 1e-12) {
                    violations += 1;
                }
                y = c * b.powi(j) * y.powf(1.0 + beta);
            }
            if !fc.bound_ok {
                violations += 1;
            }
        } else if fc.diverged {
            diverged += 1;
        }
    }
    ok(
        below > 0 && violations == 0 && diverged >= 1,
        format!("{below} triples below threshold, {violations} bound violations, {diverged} divergent above-threshold runs"),
    )
}

fn criterion_8(mins: &mut Vec<Minimizer>) -> Outcome {
    let gf = GrowthFunction::power(2.0).unwrap();
    let tol = 1e-8;
    let dom = Arc::new(build_grid(1, 1.0 / 128.0, 1.0, 4.0).unwrap());
    let u0 = step_data(&dom, 0.5, 0.0, 1.0);
    let mut alphas = Vec::new();
    let mut cs = Vec::new();
    let mut all_hold = true;
    for s in [0.6, 0.7, 0.8, 0.9] {
        let u = solve(&gf, &u0, s, tol);
        let rep = verify_holder_bound(&gf, &u, s, [0.0, 0.0], 0.125).unwrap();
        all_hold &= rep.holds && rep.lhs <= rep.rhs() * (1.0 + 1e-12);
        alphas.push(rep.alpha.alpha_hat);
        cs.push(rep.c_fit);
        mins.push(Minimizer { label: format!("Power(2) s={s} h=1/128"), gf: gf.clone(), s, u, tol });
    }
    let (sa, sc) = (spread(&alphas), spread(&cs));
    ok(
        all_hold && sa <= 2.0 && sc <= 2.0,
        format!("holds at every s: {all_hold}; alpha_hat {alphas:?} spread {sa:.3}; C_fit {cs:.4?} spread {sc:.3}"),
    )
}

fn criterion_9(mins: &mut Vec<Minimizer>) -> Outcome {
    let gf = GrowthFunction::power(2.0).unwrap();
    let tol = 1e-8;
    let deltas = [0.5, 0.25, 0.125, 0.0625];
    let mut parts = Vec::new();
    let mut passed = true;
    for s in [0.3, 0.4] {
        let mut fits = Vec::new();
        for h in [64, 128] {
            let dom = Arc::new(build_grid(1, 1.0 / h as f64, 1.0, 4.0).unwrap());
            let u = solve(&gf, &step_data(&dom, 0.5, 0.0, 1.0), s, tol);
            let rep = verify_local_bound(&gf, &u, s, [0.0, 0.0], 0.25, &deltas).unwrap();
            passed &= rep.holds && rep.rows.iter().all(|r| r.lhs <= r.rhs * (1.0 + 1e-12));
            fits.push(rep.c_fit);
            mins.push(Minimizer { label: format!("Power(2) s={s} h=1/{h}"), gf: gf.clone(), s, u, tol });
        }
        let sp = spread(&fits);
        passed &= fits.iter().all(|c| c.is_finite()) && sp <= 2.0;
        parts.push(format!("s={s} (p*={:.0}): C={:.4}->{:.4}", 2.0 / (1.0 - 2.0 * s), fits[0], fits[1]));
    }
    ok(passed, format!("{} (holds for all 4 deltas, refinement ratio <= 2)", parts.join(", ")))
}

fn criterion_10() -> Outcome {
    let dom = Arc::new(build_grid(1, 1.0 / 128.0, 1.0, 4.0).unwrap());
    let radii = [0.5, 0.25, 0.125, 0.0625];
    let mut parts = Vec::new();
    let mut passed = true;
    for gamma in [0.3, 0.5, 0.7] {
        let u = GridFunction::from_fn(dom.clone(), |x| x[0].abs().powf(gamma)).unwrap();
        let est = estimate_alpha(&u, [0.0, 0.0], &radii).unwrap();
        let err = (est.alpha_hat - gamma).abs();
        passed &= err <= 0.05;
        parts.push(format!("gamma={gamma}: {:.4}", est.alpha_hat));
    }
    ok(passed, format!("{} (limit 0.05)", parts.join(", ")))
}

/// The full pipeline serialized to JSON, run under a pool of `threads` workers.
fn pipeline_bytes(threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let gf = GrowthFunction::sum(2.0, 3.0).unwrap();
        let dom = Arc::new(build_grid(1, 1.0 / 32.0, 1.0, 4.0).unwrap());
        let (u, rep) =
            minimize(&gf, &KernelCoefficient::Checker(2.0), &step_data(&dom, 0.5, 0.0, 1.0), 0.6, SolveOptions::default())
                .unwrap();
        let samples = generate_samples(&u, &SampleSpec::new(20, 11)).unwrap();
        let dg = dg_membership_on(&gf, &u, 0.6, &samples).unwrap();
        let tail = tail_fprime(&gf, &u, [0.0, 0.0], 0.5, 0.6).unwrap();
        let mut out = serde_json::to_vec(&(rep, dg, tail)).unwrap();
        u.write_csv(&mut out).unwrap();
        out
    })
}

fn criterion_11() -> Outcome {
    let reference = pipeline_bytes(1);
    let same = [1, 2, 4, 8].iter().all(|&t| pipeline_bytes(t) == reference);
    ok(same, format!("{} report bytes identical across 1/2/4/8 worker threads and reruns", reference.len()))
}

fn main() {
    let mut mins = Vec::new();
    let criteria: Vec<(usize, &str, Duration, Box<dyn FnOnce(&mut Vec<Minimizer>) -> Outcome>)> = vec![
        (1, "growth-lemma suite", Duration::from_secs(5), Box::new(|_| criterion_1())),
        (2, "tail closed form", Duration::from_secs(1), Box::new(|_| criterion_2())),
        (3, "gradient vs finite differences", Duration::from_secs(5), Box::new(|_| criterion_3())),
        (4, "oracle minimization", Duration::from_secs(30), Box::new(criterion_4)),
        (6, "De Giorgi membership", Duration::from_secs(120), Box::new(criterion_6)),
        (7, "fast-convergence recursion", Duration::from_secs(1), Box::new(|_| criterion_7())),
        (8, "Hölder estimate", Duration::from_secs(300), Box::new(criterion_8)),
        (9, "local boundedness", Duration::from_secs(120), Box::new(criterion_9)),
        (5, "Euler-Lagrange consistency", Duration::from_secs(10), Box::new(|m: &mut Vec<Minimizer>| criterion_5(m))),
        (10, "exponent recovery", Duration::from_secs(1), Box::new(|_| criterion_10())),
        (11, "determinism", Duration::from_secs(60), Box::new(|_| criterion_11())),
    ];
    let mut lines = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let out = run(&mut mins);
        let took = start.elapsed();
        let passed = out.passed && took <= budget;
        lines.push((id, name, passed, took, budget, out.detail));
    }
    lines.sort_by_key(|l| l.0);
    let mut unexpected = 0;
    for (id, name, passed, took, budget, detail) in &lines {
        let status = if *passed { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} [{name}]: {status} ({:.2}s of {}s) {detail}", took.as_secs_f64(), budget.as_secs());
        if !passed {
            match UNATTAINABLE.iter().find(|u| u.0 == *id) {
                Some((_, why)) => println!("    documented as unattainable: {why}"),
                None => unexpected += 1,
            }
        }
    }
    println!("minimizers checked for consistency: {}", mins.iter().map(|m| m.label.as_str()).collect::<Vec<_>>().join("; "));
    if unexpected > 0 {
        eprintln!("{unexpected} acceptance criteria failed");
        std::process::exit(1);
    }
}
