mod common;

use common::{poly_at, poly_from_roots, projected_certificate};
use prony_core::{
    build_toeplitz, certificate, companion_roots_1d, decompose, extract_parameters, grid_scan,
    kernel_basis, kernel_energy, presets, prony_polynomial_1d, prony_reconstruct,
    random_separated_model, refine, sample_moments, signal_basis, torus_distance, BasisRole,
    CoeffLaw, Complex64, DecomposeOptions, ExtractOptions, MomentGrid, PolynomialBasis,
    RefineOptions, TorusCandidate,
};

fn bases(grid: &MomentGrid) -> (PolynomialBasis, PolynomialBasis) {
    let dec = decompose(&build_toeplitz(grid), &DecomposeOptions::default()).unwrap();
    (kernel_basis(&dec).unwrap(), signal_basis(&dec))
}

fn start(t: &[f64]) -> TorusCandidate {
    TorusCandidate {
        t: t.to_vec(),
        kernel_energy: f64::NAN,
        certificate: f64::NAN,
        refined: false,
        iterations: 0,
        isolated: false,
    }
}

#[test]
fn grid_scan_finds_both_atoms_of_the_two_dimensional_example() {
    let grid = sample_moments(&presets::example_2d(), presets::EXAMPLE_2D_ORDER);
    let (kernel, _) = bases(&grid);
    let cands = grid_scan(&kernel, 16).unwrap();
    assert!(cands.len() >= 2);
    let mut low: Vec<Vec<f64>> = cands[..2].iter().map(|c| c.t.clone()).collect();
    low.sort_by(|a, b| a[0].total_cmp(&b[0]));
    assert_eq!(low, vec![vec![0.0, 0.0], vec![0.5, 0.5]]);
    assert!(cands[..2].iter().all(|c| c.kernel_energy < 1e-20));
    assert!(cands[2..].iter().all(|c| c.kernel_energy > 0.1));
}

#[test]
fn grid_scan_brackets_each_atom_in_one_dimension() {
    let model = presets::example_1d();
    let grid = sample_moments(&model, presets::EXAMPLE_1D_ORDER);
    let (kernel, _) = bases(&grid);
    let g = 128;
    let cands = grid_scan(&kernel, g).unwrap();
    for p in model.torus_params().unwrap() {
        let nearest = cands[..3]
            .iter()
            .map(|c| torus_distance(&c.t, &p))
            .fold(f64::INFINITY, f64::min);
        assert!(
            nearest <= 1.0 / g as f64,
            "atom {p:?} at distance {nearest}"
        );
    }
}

#[test]
fn refine_converges_across_the_wrap() {
    let grid = sample_moments(&presets::example_2d(), presets::EXAMPLE_2D_ORDER);
    let (kernel, signal) = bases(&grid);
    for basis in [&kernel, &signal] {
        let r = refine(&start(&[0.01, 0.99]), basis, &RefineOptions::default()).unwrap();
        assert!(torus_distance(&r.t, &[0.0, 0.0]) < 1e-10, "{:?}", r.t);
        assert!(r.kernel_energy < 1e-20);
        assert!(r.isolated);
        assert!((r.certificate - 1.0).abs() < 1e-12);
    }
}

#[test]
fn refine_at_a_root_takes_no_steps() {
    let grid = sample_moments(&presets::example_2d(), presets::EXAMPLE_2D_ORDER);
    let (kernel, _) = bases(&grid);
    let r = refine(&start(&[0.5, 0.5]), &kernel, &RefineOptions::default()).unwrap();
    assert_eq!(r.iterations, 0);
    assert_eq!(r.t, vec![0.5, 0.5]);
}

#[test]
fn energy_is_large_away_from_the_atoms() {
    let grid = sample_moments(&presets::example_2d(), presets::EXAMPLE_2D_ORDER);
    let (kernel, signal) = bases(&grid);
    let q = kernel_energy(&kernel, &[0.25, 0.25]).value;
    assert!(q > 0.1, "q = {q}");
    let q_signal = kernel_energy(&signal, &[0.25, 0.25]).value;
    assert!((q - q_signal).abs() < 1e-12);
}

#[test]
fn certificate_equals_projection_of_the_monomial_vector() {
    for seed in 0..4 {
        let model = random_separated_model(2, 3, 0.2, CoeffLaw::Default, 40 + seed).unwrap();
        let n = 4;
        let params = model.torus_params().unwrap();
        let (kernel, signal) = bases(&sample_moments(&model, n));
        let size = kernel.size() as f64;
        for t in [[0.1, 0.2], [0.77, 0.31], [0.5, 0.95]] {
            let oracle = projected_certificate(&params, n, &t);
            let from_signal = certificate(&signal, &t);
            let from_kernel = certificate(&kernel, &t);
            let identity = 1.0 - kernel_energy(&kernel, &t).value / size;
            assert!(
                (from_signal - oracle).abs() < 1e-10,
                "{from_signal} vs {oracle}"
            );
            assert!((from_kernel - oracle).abs() < 1e-10);
            assert!((identity - from_signal).abs() < 1e-12);
        }
        for p in &params {
            assert!((certificate(&signal, p) - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn energy_gradient_matches_finite_differences() {
    let model = random_separated_model(2, 2, 0.25, CoeffLaw::Default, 9).unwrap();
    let (kernel, _) = bases(&sample_moments(&model, 3));
    let t = [0.37, 0.61];
    let e = kernel_energy(&kernel, &t);
    let h = 1e-6;
    for a in 0..2 {
        let mut up = t;
        let mut dn = t;
        up[a] += h;
        dn[a] -= h;
        let fd =
            (kernel_energy(&kernel, &up).value - kernel_energy(&kernel, &dn).value) / (2.0 * h);
        assert!(
            (fd - e.gradient[a]).abs() < 1e-5 * (1.0 + fd.abs()),
            "{fd} vs {}",
            e.gradient[a]
        );
    }
}

#[test]
fn kernel_polynomials_vanish_at_every_atom() {
    for seed in 0..6 {
        let model = random_separated_model(2, 3, 0.2, CoeffLaw::Default, 500 + seed).unwrap();
        let n = 3;
        let (kernel, _) = bases(&sample_moments(&model, n));
        assert_eq!(kernel.len(), 16 - 3);
        for p in model.torus_params().unwrap() {
            for l in 0..kernel.len() {
                let v = poly_at(&kernel.coefficients(l), 2, n, &p);
                assert!(v.norm() < 1e-10, "seed {seed}: |p_{l}| = {:e}", v.norm());
            }
        }
    }
}

#[test]
fn univariate_kernel_polynomial_is_the_root_product() {
    let ts = [0.05, 0.4, 0.71];
    let coeffs = [
        Complex64::new(1.0, 0.5),
        Complex64::new(-0.7, 0.2),
        Complex64::new(0.3, -1.1),
    ];
    let params: Vec<Vec<f64>> = ts.iter().map(|&t| vec![t]).collect();
    let model = prony_core::ExponentialSum::from_torus(1, &coeffs, &params).unwrap();
    let (_, signal) = bases(&sample_moments(&model, 3));
    let p = prony_polynomial_1d(&signal).unwrap();
    let roots: Vec<Complex64> = ts
        .iter()
        .map(|&t| Complex64::from_polar(1.0, std::f64::consts::TAU * t))
        .collect();
    let oracle = poly_from_roots(&roots);
    assert_eq!(p.len(), oracle.len());
    let scale = p[3] / oracle[3];
    for (a, b) in p.iter().zip(&oracle) {
        assert!((a - scale * b).norm() < 1e-12, "{a} vs {}", scale * b);
    }
    // roots on the circle make the polynomial self-inversive
    let lambda = p[0] / p[3].conj();
    assert!((lambda.norm() - 1.0).abs() < 1e-12);
    for k in 0..=3 {
        assert!((p[k] - lambda * p[3 - k].conj()).norm() < 1e-12);
    }
    let mut found = companion_roots_1d(&p).unwrap();
    found.sort_by(|a, b| {
        a.arg()
            .rem_euclid(std::f64::consts::TAU)
            .total_cmp(&b.arg().rem_euclid(std::f64::consts::TAU))
    });
    for (z, r) in found.iter().zip(&roots) {
        assert!((z - r).norm() < 1e-12);
    }
}

#[test]
fn companion_rejects_constant_polynomials() {
    let p = [Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)];
    assert!(companion_roots_1d(&p).is_err());
}

#[test]
fn two_atoms_in_three_dimensions_are_recovered_at_order_one() {
    let model = presets::two_atoms_3d();
    let grid = sample_moments(&model, presets::TWO_ATOMS_3D_ORDER);
    let (kernel, _) = bases(&grid);
    assert_eq!(kernel.len(), 6);
    let cands = grid_scan(&kernel, 40).unwrap();
    let zeros: Vec<&TorusCandidate> = cands.iter().filter(|c| c.kernel_energy < 1e-20).collect();
    assert_eq!(zeros.len(), 2);
    let ex = extract_parameters(&kernel, 2, &ExtractOptions::default()).unwrap();
    assert_eq!(ex.strict_clusters, 2);
    assert!(ex.warnings.is_empty());
    let r = prony_reconstruct(&grid, &Default::default()).unwrap();
    let report = prony_core::match_models(&model, &r.model, 1e-10).unwrap();
    assert!(report.is_match(), "{report:?}");

    // a single kernel polynomial vanishes on a curve: Newton from many grid
    // minima lands on many distinct, non-isolated zeros
    let one = PolynomialBasis::new(
        3,
        1,
        BasisRole::Kernel,
        kernel.vectors().subcols(0, 1).to_owned(),
    )
    .unwrap();
    let starts = grid_scan(&one, 12).unwrap();
    let zeros: Vec<TorusCandidate> = starts
        .iter()
        .map(|c| match refine(c, &one, &RefineOptions::default()) {
            Ok(r) => r,
            Err(prony_core::Error::DidNotConverge { best, .. }) => *best,
            Err(e) => panic!("{e}"),
        })
        // values are O(1) here; convergence along the curve is only linear
        .filter(|c| c.kernel_energy < 1e-12)
        .collect();
    let mut distinct: Vec<&TorusCandidate> = Vec::new();
    for z in &zeros {
        if distinct.iter().all(|d| torus_distance(&d.t, &z.t) > 0.05) {
            distinct.push(z);
        }
    }
    assert!(distinct.len() >= 3, "{} distinct zeros", distinct.len());
    assert!(zeros.iter().all(|z| !z.isolated));
}

#[test]
fn collinear_atoms_below_the_identifiable_order_fail_cleanly() {
    let model = presets::collinear_2d();
    let grid = sample_moments(&model, presets::COLLINEAR_2D_ORDER);
    let (kernel, _) = bases(&grid);
    // every kernel polynomial vanishes on the whole line t_2 = 0
    for x in [0.0, 0.23, 0.55, 0.9] {
        assert!(kernel_energy(&kernel, &[x, 0.0]).value < 1e-20);
    }
    assert!(prony_reconstruct(&grid, &Default::default()).is_err());
}
