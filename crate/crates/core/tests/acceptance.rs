//! Acceptance criteria, one line per criterion.
//!
//! Runs with a plain `main` so the PASS/FAIL lines are always printed; the
//! process exits nonzero if any criterion fails.

use std::time::Instant;

use prony_core::kernel::PolynomialBasis;
use prony_core::{
    build_hankel, build_toeplitz, build_toeplitz_with, build_vandermonde, condition_bound,
    decompose, empirical_condition, eval_poly, kernel_basis, kernel_energy, match_models, presets,
    prony_reconstruct, random_separated_model, recommended_order, sample_moments, separation,
    signal_basis, torus_distance, triangular_weights, BasisRole, CoeffLaw, Complex64,
    DecomposeOptions, Error, Execution, ExponentialSum, ParameterPoint, ReconstructOptions,
    RootMethod, Warning,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ex52() -> ExponentialSum {
    presets::example_2d()
}

fn criterion_1() -> Outcome {
    let t = build_toeplitz(&sample_moments(&ex52(), 2));
    let tp = [[2.0, 0.0, 2.0], [0.0, 2.0, 0.0], [2.0, 0.0, 2.0]];
    let tpp = [[0.0, 2.0, 0.0], [2.0, 0.0, 2.0], [0.0, 2.0, 0.0]];
    // block layout [[T', T'', T'], [T'', T', T''], [T', T'', T']]
    let blocks = [[&tp, &tpp, &tp], [&tpp, &tp, &tpp], [&tp, &tpp, &tp]];
    check(t.size() == 9, || format!("size {}", t.size()))?;
    for i in 0..9 {
        for j in 0..9 {
            let want = c(blocks[i / 3][j / 3][i % 3][j % 3]);
            let got = t.entry(i, j);
            check(got == want, || {
                format!("entry ({i},{j}) = {got}, expected {want}")
            })?;
        }
    }
    Ok("9x9 block matrix matches exactly".into())
}

/// Box coefficient vector of a polynomial given as `(coeff, [e1, e2])` terms.
fn poly2(terms: &[(f64, [usize; 2])]) -> Vec<Complex64> {
    let mut v = vec![c(0.0); 9];
    for &(a, [e1, e2]) in terms {
        v[e1 + 3 * e2] += c(a);
    }
    v
}

fn criterion_2() -> Outcome {
    let model = ex52();
    let grid = sample_moments(&model, 2);
    let t = build_toeplitz(&grid);
    let dec = decompose(&t, &DecomposeOptions::default()).map_err(|e| e.to_string())?;
    check(dec.rank() == 2, || format!("rank {}", dec.rank()))?;
    let k = kernel_basis(&dec).map_err(|e| e.to_string())?;
    check(k.len() == 7, || format!("kernel dimension {}", k.len()))?;
    let expected = [
        poly2(&[(-1.0, [0, 0]), (1.0, [2, 0])]),
        poly2(&[(-1.0, [1, 0]), (1.0, [0, 1])]),
        poly2(&[(-1.0, [0, 0]), (1.0, [1, 1])]),
        poly2(&[(-1.0, [1, 0]), (1.0, [2, 1])]),
        poly2(&[(-1.0, [0, 0]), (1.0, [0, 2])]),
        poly2(&[(-1.0, [1, 0]), (1.0, [1, 2])]),
        poly2(&[(-1.0, [0, 0]), (1.0, [2, 2])]),
    ];
    let worst = expected
        .iter()
        .map(|p| k.projection_residual(p))
        .fold(0.0, f64::max);
    check(worst < 1e-10, || format!("projection residual {worst:e}"))?;

    let r = prony_reconstruct(&grid, &ReconstructOptions::default()).map_err(|e| e.to_string())?;
    let rep = match_models(&model, &r.model, 1e-8).map_err(|e| e.to_string())?;
    check(rep.is_match(), || format!("match report {rep:?}"))?;
    let coeff_err = rep
        .pairs
        .iter()
        .map(|p| p.coeff_abs_error)
        .fold(0.0, f64::max);
    check(coeff_err < 1e-8, || {
        format!("coefficient error {coeff_err:e}")
    })?;
    Ok(format!(
        "rank 2, kernel 7, max projection residual {worst:.1e}, parameter error {:.1e}, coefficient error {coeff_err:.1e}",
        rep.max_param_error
    ))
}

fn criterion_3() -> Outcome {
    let model = presets::example_1d();
    let grid = sample_moments(&model, presets::EXAMPLE_1D_ORDER);
    let start = Instant::now();
    let fast =
        prony_reconstruct(&grid, &ReconstructOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    check(fast.method == RootMethod::Companion, || {
        format!("method {:?}", fast.method)
    })?;
    check(elapsed < 1.0, || format!("runtime {elapsed:.3} s"))?;
    let rep = match_models(&model, &fast.model, 1e-9).map_err(|e| e.to_string())?;
    check(
        rep.unmatched_truth.is_empty() && rep.unmatched_estimate.is_empty(),
        || format!("parameters: {rep:?}"),
    )?;
    let coeff = rep
        .pairs
        .iter()
        .map(|p| p.coeff_abs_error)
        .fold(0.0, f64::max);
    check(coeff < 1e-8, || format!("coefficient error {coeff:e}"))?;

    let slow = prony_reconstruct(
        &grid,
        &ReconstructOptions {
            root_method: RootMethod::GridNewton,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let paths = match_models(&fast.model, &slow.model, 1e-10).map_err(|e| e.to_string())?;
    check(
        paths.unmatched_truth.is_empty() && paths.max_param_error < 1e-10,
        || format!("companion vs grid+Newton: {paths:?}"),
    )?;
    Ok(format!(
        "parameter error {:.1e}, coefficient error {coeff:.1e}, {elapsed:.3} s, path disagreement {:.1e}",
        rep.max_param_error, paths.max_param_error
    ))
}

struct Instance {
    model: ExponentialSum,
    order: usize,
}

/// `count` instances: dimension `d`, `M = 1 + (i mod max_m)`, separation
/// target `q`, order from the target.
fn suite(d: usize, q: f64, max_m: usize, count: usize, seed0: u64, law: CoeffLaw) -> Vec<Instance> {
    (0..count)
        .map(|i| {
            let m = 1 + i % max_m;
            let model = random_separated_model(d, m, q, law, seed0 + i as u64).expect("generation");
            Instance {
                model,
                order: recommended_order(m, q, d),
            }
        })
        .collect()
}

fn roundtrip_suite() -> Vec<Instance> {
    let mut all = suite(1, 0.15, 4, 25, 1000, CoeffLaw::Default);
    all.extend(suite(2, 0.3, 4, 25, 2000, CoeffLaw::Default));
    all.extend(suite(3, 0.45, 3, 5, 3000, CoeffLaw::Default));
    all
}

fn criterion_4(instances: &[Instance]) -> Outcome {
    let (mut pe, mut ce, mut re) = (0.0f64, 0.0f64, 0.0f64);
    for (i, inst) in instances.iter().enumerate() {
        let grid = sample_moments(&inst.model, inst.order);
        let r = prony_reconstruct(&grid, &ReconstructOptions::default()).map_err(|e| {
            format!(
                "instance {i} (d={}, M={}): {e}",
                inst.model.dim(),
                inst.model.len()
            )
        })?;
        let rep = match_models(&inst.model, &r.model, 1e-6).map_err(|e| e.to_string())?;
        check(
            rep.unmatched_truth.is_empty() && rep.unmatched_estimate.is_empty(),
            || format!("instance {i}: {rep:?}"),
        )?;
        pe = pe.max(rep.max_param_error);
        ce = ce.max(rep.max_coeff_rel_error);
        let resynth = sample_moments(&r.model, inst.order);
        let diff: f64 = resynth
            .values()
            .iter()
            .zip(grid.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        re = re.max(diff / grid.norm());
    }
    check(pe < 1e-6, || format!("max parameter error {pe:e}"))?;
    check(ce < 1e-6, || {
        format!("max relative coefficient error {ce:e}")
    })?;
    check(re < 1e-8, || format!("max re-synthesis residual {re:e}"))?;
    Ok(format!(
        "{} instances, parameter error {pe:.1e}, coefficient error {ce:.1e}, moment residual {re:.1e}",
        instances.len()
    ))
}

fn criterion_5(instances: &[Instance]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut parseval, mut lo, mut hi, mut peak) =
        (0.0f64, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for inst in instances {
        let d = inst.model.dim();
        let t = build_toeplitz(&sample_moments(&inst.model, inst.order));
        let dec = decompose(&t, &DecomposeOptions::default()).map_err(|e| e.to_string())?;
        drop(t);
        let n_size = dec.size() as f64;
        let pts: Vec<Vec<f64>> = (0..1000)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect();
        for e in dec.total_energy(&pts, Execution::default()) {
            parseval = parseval.max((e - n_size).abs() / n_size);
        }
        let s = signal_basis(&dec);
        for p in &pts {
            let v = prony_core::certificate(&s, p);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        for tj in inst.model.torus_params().unwrap() {
            peak = peak.min(prony_core::certificate(&s, &tj));
        }
    }
    check(parseval < 1e-8, || {
        format!("Parseval defect {parseval:e}·N")
    })?;
    check(lo >= -1e-10 && hi <= 1.0 + 1e-10, || {
        format!("certificate range [{lo}, {hi}]")
    })?;
    check(peak >= 1.0 - 1e-10, || {
        format!("certificate at a parameter {peak}")
    })?;
    Ok(format!(
        "Parseval defect {parseval:.1e}·N, range [{lo:.3e}, {hi:.12}], min at parameters 1 - {:.1e}",
        1.0 - peak
    ))
}

/// 5×5 lattice with spacing 0.2 and small jitter: `M = 25` exceeds the
/// order `⌈4/q⌉`.
fn jittered_lattice(seed: u64) -> ExponentialSum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            params.push(vec![
                0.05 + 0.2 * i as f64 + rng.random_range(-0.003..0.003),
                0.07 + 0.2 * j as f64 + rng.random_range(-0.003..0.003),
            ]);
        }
    }
    let coeffs: Vec<Complex64> = (0..25).map(|_| c(rng.random_range(0.5..1.5))).collect();
    ExponentialSum::from_torus(2, &coeffs, &params).unwrap()
}

fn criterion_6(instances: &[Instance]) -> Outcome {
    let mut cases: Vec<(ExponentialSum, usize)> = instances
        .iter()
        .filter(|i| i.model.len() >= 2)
        .map(|i| (i.model.clone(), i.order))
        .collect();
    for seed in 0..3 {
        let m = jittered_lattice(600 + seed);
        let q = separation(&m.torus_params().unwrap()).unwrap();
        let n = (4.0 / q).ceil() as usize;
        cases.push((m, n));
    }
    let mut below_m = 0;
    let mut skipped = 0;
    let mut checked = 0;
    let mut worst_ratio = 0.0f64;
    for (model, n) in &cases {
        let d = model.dim();
        let params = model.torus_params().unwrap();
        let q = separation(&params).unwrap();
        if (*n as f64) < 2.0 * d as f64 / q {
            continue;
        }
        let grid = sample_moments(model, *n);
        let r = match prony_reconstruct(&grid, &ReconstructOptions::default()) {
            Ok(r) => r,
            // below M the criterion only covers instances whose minima stay isolated
            Err(Error::TooFewRoots { .. }) if *n < model.len() => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(format!("d={d}, M={}, n={n}: {e}", model.len())),
        };
        let radius = 2.0 * d as f64 / *n as f64;
        for root in &r.roots {
            let dist = params
                .iter()
                .map(|p| torus_distance(p, &root.t))
                .fold(f64::INFINITY, f64::min);
            worst_ratio = worst_ratio.max(dist / radius);
            check(dist < radius, || {
                format!("root {:?} at distance {dist} > 2d/n = {radius}", root.t)
            })?;
        }
        checked += 1;
        if *n < model.len() {
            below_m += 1;
        }
    }
    check(below_m > 0, || "no instance with n < M was verified".into())?;
    Ok(format!(
        "{checked} instances ({below_m} with n < M, {skipped} skipped), zero violations, worst distance {worst_ratio:.1e}·2d/n"
    ))
}

fn criterion_7() -> Outcome {
    let b = condition_bound(1, 30, 0.19831, 1.0, 1.0).map_err(|e| e.to_string())?;
    check((b - 1.2548).abs() < 1e-3, || format!("bound {b}"))?;
    // M from 2 to 4
    let mut instances: Vec<Instance> = suite(1, 0.15, 4, 12, 7000, CoeffLaw::Positive);
    instances.extend(suite(2, 0.3, 4, 8, 7100, CoeffLaw::Positive));
    instances.retain(|i| i.model.len() >= 2);
    let mut rows = 0;
    let mut worst_slack = f64::INFINITY;
    for (i, inst) in instances.iter().enumerate() {
        let model = &inst.model;
        let m = model.len();
        let d = model.dim();
        let q = separation(&model.torus_params().unwrap()).unwrap();
        let f: Vec<f64> = model.coefficients().iter().map(|c| c.re).collect();
        let fmax = f.iter().copied().fold(f64::MIN, f64::max);
        let fmin = f.iter().copied().fold(f64::MAX, f64::min);
        let ratio = fmax / fmin;
        let n = inst.order;
        let grid = sample_moments(model, 4 * n);
        let cond_at = |order: usize| -> Result<f64, String> {
            let t = build_toeplitz_with(&grid, order, Execution::default())
                .map_err(|e| e.to_string())?;
            empirical_condition(&t, &triangular_weights(d, order), m).map_err(|e| e.to_string())
        };
        let (c1, c2, c4) = (cond_at(n)?, cond_at(2 * n)?, cond_at(4 * n)?);
        let bound = condition_bound(d, n, q, fmax, fmin).map_err(|e| e.to_string())?;
        let ctx = || {
            format!("instance {i} (d={d}, M={m}, n={n}, q={q:.4}): cond {c1}, {c2}, {c4}; bound {bound}; ratio {ratio}")
        };
        check(c1 <= bound, || format!("bound violated: {}", ctx()))?;
        check(c2 <= c1 + 1e-6, || format!("not monotone: {}", ctx()))?;
        let (e1, e2, e4) = ((c1 - ratio).abs(), (c2 - ratio).abs(), (c4 - ratio).abs());
        check(e2 < e1 && e4 < e2, || {
            format!("gap to ratio not shrinking: {}", ctx())
        })?;
        worst_slack = worst_slack.min(bound - c1);
        rows += 1;
    }
    Ok(format!(
        "bound(1, 30, 0.19831) = {b:.6}; {rows} instances satisfy cond ≤ bound (min slack {worst_slack:.2e}), monotone in n, 2n, 4n"
    ))
}

fn criterion_8() -> Outcome {
    let model = ex52();
    let h = build_hankel(&model, 2).map_err(|e| e.to_string())?;
    let dec = decompose(&h, &DecomposeOptions::default()).map_err(|e| e.to_string())?;
    check(dec.rank() == 2, || format!("rank {}", dec.rank()))?;
    let k = kernel_basis(&dec).map_err(|e| e.to_string())?;
    let params: Vec<ParameterPoint> = model.terms().iter().map(|t| t.param.clone()).collect();
    let a = build_vandermonde(&params, h.index_set());
    let vals = &a * k.vectors();
    let mut worst = 0.0f64;
    for j in 0..vals.ncols() {
        for i in 0..vals.nrows() {
            worst = worst.max(vals[(i, j)].norm());
        }
    }
    check(worst < 1e-10, || format!("kernel value {worst:e}"))?;
    Ok(format!(
        "rank 2, {} kernel vectors, max |p(z_j)| = {worst:.1e}",
        k.len()
    ))
}

fn criterion_9() -> Outcome {
    let model = presets::collinear_2d();
    let grid = sample_moments(&model, presets::COLLINEAR_2D_ORDER);
    match prony_reconstruct(&grid, &ReconstructOptions::default()) {
        Err(Error::TooFewRoots { found, expected }) => {
            Ok(format!("TooFewRoots ({found} of {expected})"))
        }
        Err(e) => Err(format!("unexpected error {e}")),
        Ok(r) => {
            let flagged = r
                .warnings
                .iter()
                .find(|w| matches!(w, Warning::SpuriousRoots { .. }));
            match flagged {
                Some(w) => Ok(format!("flagged: {w}")),
                None => Err(format!("3 roots returned without warning: {:?}", r.roots)),
            }
        }
    }
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / scale
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let h = 1e-6;
    let mut worst_poly = 0.0f64;
    for probe in 0..200 {
        let d = 1 + probe % 3;
        let n: usize = 1 + probe % 4;
        let len = (n + 1).pow(d as u32);
        let coeffs: Vec<Complex64> = (0..len)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let t: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let v = eval_poly(&coeffs, d, &t);
        let analytic: Vec<f64> = v.gradient.iter().flat_map(|g| [g.re, g.im]).collect();
        let mut fd = Vec::new();
        for a in 0..d {
            let mut tp = t.clone();
            let mut tm = t.clone();
            tp[a] += h;
            tm[a] -= h;
            let g =
                (eval_poly(&coeffs, d, &tp).value - eval_poly(&coeffs, d, &tm).value) / (2.0 * h);
            fd.extend([g.re, g.im]);
        }
        worst_poly = worst_poly.max(rel_err(&analytic, &fd));
    }
    let mut worst_energy = 0.0f64;
    let bases: Vec<PolynomialBasis> = (0..4)
        .map(|i| {
            let d = 1 + i % 2;
            let model =
                random_separated_model(d, 2 + i % 2, 0.2, CoeffLaw::Default, 900 + i as u64)
                    .unwrap();
            let t = build_toeplitz(&sample_moments(&model, 3));
            kernel_basis(&decompose(&t, &DecomposeOptions::default()).unwrap()).unwrap()
        })
        .collect();
    for probe in 0..200 {
        let basis = &bases[probe % bases.len()];
        assert_eq!(basis.role(), BasisRole::Kernel);
        let d = basis.dim();
        let t: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let e = kernel_energy(basis, &t);
        let fd: Vec<f64> = (0..d)
            .map(|a| {
                let mut tp = t.clone();
                let mut tm = t.clone();
                tp[a] += h;
                tm[a] -= h;
                (kernel_energy(basis, &tp).value - kernel_energy(basis, &tm).value) / (2.0 * h)
            })
            .collect();
        worst_energy = worst_energy.max(rel_err(&e.gradient, &fd));
    }
    check(worst_poly < 1e-6, || {
        format!("polynomial gradient error {worst_poly:e}")
    })?;
    check(worst_energy < 1e-6, || {
        format!("energy gradient error {worst_energy:e}")
    })?;
    Ok(format!(
        "200 + 200 probes, max relative error {worst_poly:.1e} (polynomial), {worst_energy:.1e} (energy)"
    ))
}

fn main() {
    let start = Instant::now();
    let instances = roundtrip_suite();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("1 golden Toeplitz matrix", Box::new(criterion_1)),
        ("2 two-point kernel and extraction", Box::new(criterion_2)),
        ("3 three-atom univariate instance", Box::new(criterion_3)),
        ("4 round-trip suite", Box::new(|| criterion_4(&instances))),
        (
            "5 dual certificate suite",
            Box::new(|| criterion_5(&instances)),
        ),
        ("6 localization suite", Box::new(|| criterion_6(&instances))),
        ("7 conditioning", Box::new(criterion_7)),
        ("8 Hankel variant", Box::new(criterion_8)),
        ("9 collinear negative control", Box::new(criterion_9)),
        ("10 gradient checks", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let t0 = Instant::now();
        let outcome = f();
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({detail}) [{secs:.2} s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({detail}) [{secs:.2} s]");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
