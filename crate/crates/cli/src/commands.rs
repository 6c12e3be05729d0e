use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use prony_core::presets;
use prony_core::{
    build_toeplitz_with, condition_bound, decompose, empirical_condition_with, energy_grid,
    match_models, prony_reconstruct, random_separated_model, recommended_order, sample_moments,
    separation, signal_basis, triangular_weights, DecomposeOptions, Execution, ExponentialSum,
    MomentGrid, MomentMatrix, ReconstructOptions, ReconstructionResult, SpectralDecomposition,
    SvdStrategy, Warning,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{
    AnalyzeArgs, CertifyArgs, GenerateArgs, Preset, ReconstructArgs, SpectralArgs, VerifyArgs,
};

/// Error with the process exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Outcome = Result<(), Failure>;

/// I/O, parse or option error.
fn config(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

/// The library could not complete the requested computation.
fn failed(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(config)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(config)
}

fn json_string<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(config)?;
    s.push('\n');
    Ok(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    fs::write(path, json_string(value)?)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(config)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(config)
}

fn check_range(name: &str, value: f64, lo: f64, hi: f64) -> Result<(), Failure> {
    if value > lo && value <= hi {
        Ok(())
    } else {
        Err(config(anyhow!(
            "--{name} must lie in ({lo}, {hi}], got {value}"
        )))
    }
}

fn report_warnings(warnings: &[Warning]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

pub fn generate(a: &GenerateArgs) -> Outcome {
    let (model, order) = match a.preset {
        Some(Preset::Example2d) => (presets::example_2d(), presets::EXAMPLE_2D_ORDER),
        Some(Preset::Example1d) => (presets::example_1d(), presets::EXAMPLE_1D_ORDER),
        Some(Preset::TwoAtoms3d) => (presets::two_atoms_3d(), presets::TWO_ATOMS_3D_ORDER),
        Some(Preset::Collinear2d) => (presets::collinear_2d(), presets::COLLINEAR_2D_ORDER),
        None => {
            check_range("separation", a.separation, 0.0, 0.5)?;
            let (d, m) = (a.dim as usize, a.terms as usize);
            let model =
                random_separated_model(d, m, a.separation, a.law.into(), a.seed).map_err(failed)?;
            let order = a
                .order
                .unwrap_or_else(|| recommended_order(m, a.separation, d));
            (model, order)
        }
    };
    let order = if a.preset.is_some() {
        a.order.unwrap_or(order)
    } else {
        order
    };
    let grid = sample_moments(&model, order);
    write_json(&a.model, &model)?;
    write_json(&a.moments, &grid)?;
    eprintln!(
        "wrote {} terms in dimension {} and {} moments of order {order}",
        model.len(),
        model.dim(),
        grid.len()
    );
    Ok(())
}

fn decompose_options(
    s: &SpectralArgs,
    dim: usize,
    order: usize,
    exec: Execution,
) -> Result<DecomposeOptions, Failure> {
    check_range("tol", s.tol, 0.0, 1.0)?;
    Ok(DecomposeOptions {
        rel_tol: s.tol,
        rank_override: s.rank.map(|r| r as usize),
        strategy: SvdStrategy::Auto,
        weights: s.weights.then(|| triangular_weights(dim, order)),
        exec,
    })
}

fn load_spectrum(
    s: &SpectralArgs,
    exec: Execution,
) -> Result<(MomentGrid, MomentMatrix, SpectralDecomposition), Failure> {
    let grid: MomentGrid = read_json(&s.input)?;
    let t = build_toeplitz_with(&grid, grid.order(), exec).map_err(failed)?;
    let opts = decompose_options(s, grid.dim(), grid.order(), exec)?;
    let dec = decompose(&t, &opts).map_err(failed)?;
    Ok((grid, t, dec))
}

pub fn reconstruct(a: &ReconstructArgs, exec: Execution) -> Outcome {
    let s = &a.spectral;
    check_range("tol", s.tol, 0.0, 1.0)?;
    if let Some(r) = a.dedup {
        check_range("dedup", r, 0.0, 0.5)?;
    }
    let grid: MomentGrid = read_json(&s.input)?;
    let opts = ReconstructOptions {
        rel_tol: s.tol,
        rank_override: s.rank.map(|r| r as usize),
        grid_per_dim: a.grid.map(|g| g as usize),
        dedup_radius: a.dedup,
        weights: s.weights,
        root_method: a.method.into(),
        exec,
        ..ReconstructOptions::default()
    };
    let result = prony_reconstruct(&grid, &opts).map_err(failed)?;
    report_warnings(&result.warnings);
    write_json(&a.out, &result)?;
    eprintln!(
        "rank {}, {} terms, moment residual {:.3e}",
        result.rank,
        result.model.len(),
        result.residual
    );
    Ok(())
}

pub fn certify(a: &CertifyArgs, exec: Execution) -> Outcome {
    let (grid, _, dec) = load_spectrum(&a.spectral, exec)?;
    report_warnings(dec.warnings());
    let d = grid.dim();
    let g = a.grid as usize;
    let points = g
        .checked_pow(d as u32)
        .filter(|&p| p <= 1 << 26)
        .ok_or_else(|| config(anyhow!("grid of {g}^{d} points is too large")))?;
    let basis = signal_basis(&dec);
    let q = energy_grid(&basis, g, exec).map_err(failed)?;
    debug_assert_eq!(q.len(), points);
    let size = basis.size() as f64;

    let mut out: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut emit = || -> io::Result<()> {
        let header: Vec<String> = (1..=d).map(|i| format!("t_{i}")).collect();
        writeln!(out, "{},certificate,kernel_energy", header.join(","))?;
        for (pos, &e) in q.iter().enumerate() {
            let mut rest = pos;
            for _ in 0..d {
                write!(out, "{},", (rest % g) as f64 / g as f64)?;
                rest /= g;
            }
            writeln!(out, "{},{}", 1.0 - e / size, e)?;
        }
        out.flush()
    };
    emit().context("writing certificate grid").map_err(config)
}

#[derive(Serialize)]
struct Analysis {
    dim: usize,
    order: usize,
    size: usize,
    rank: usize,
    threshold: f64,
    singular_values: Vec<f64>,
    complete_spectrum: bool,
    spectral_gap: Option<f64>,
    /// `σ_1 / σ_r` of `T`.
    condition: Option<f64>,
    /// `σ_1 / σ_r` of `W T W` with triangular weights.
    weighted_condition: Option<f64>,
    separation: Option<f64>,
    condition_bound: Option<f64>,
    notes: Vec<String>,
    warnings: Vec<Warning>,
}

pub fn analyze(a: &AnalyzeArgs, exec: Execution) -> Outcome {
    let (grid, t, dec) = load_spectrum(&a.spectral, exec)?;
    let (d, n, size) = (grid.dim(), grid.order(), t.size());
    let mut notes = Vec::new();
    let rank = dec.rank();
    let mut condition_with = |w: Vec<f64>, label: &str| -> Option<f64> {
        if rank == 0 {
            return None;
        }
        match empirical_condition_with(&t, &w, rank, SvdStrategy::Auto, exec) {
            Ok(c) => Some(c),
            Err(e) => {
                notes.push(format!("{label}: {e}"));
                None
            }
        }
    };
    let condition = condition_with(vec![1.0; size], "condition");
    let weighted_condition = condition_with(triangular_weights(d, n), "weighted condition");

    let mut sep = None;
    let mut bound = None;
    if let Some(path) = &a.model {
        let model: ExponentialSum = read_json(path)?;
        match model.torus_params() {
            Some(params) if params.len() >= 2 => {
                let q = separation(&params).map_err(failed)?;
                sep = Some(q);
                let coeffs = model.coefficients();
                if coeffs.iter().all(|c| c.im == 0.0 && c.re > 0.0) {
                    let fmax = coeffs.iter().map(|c| c.re).fold(f64::MIN, f64::max);
                    let fmin = coeffs.iter().map(|c| c.re).fold(f64::MAX, f64::min);
                    match condition_bound(d, n, q, fmax, fmin) {
                        Ok(b) if b.is_finite() => bound = Some(b),
                        Ok(_) => notes.push(format!(
                            "condition bound needs a larger order than {n} for separation {q}"
                        )),
                        Err(e) => notes.push(format!("condition bound: {e}")),
                    }
                } else {
                    notes.push("condition bound applies to positive real coefficients only".into());
                }
            }
            Some(_) => notes.push("separation needs at least two terms".into()),
            None => notes.push("model has parameters off the torus".into()),
        }
    }

    if let Some(path) = &a.dump_matrix {
        let mut w = create(path)?;
        t.write_csv(&mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(config)?;
    }

    let gap = dec.spectral_gap();
    let report = Analysis {
        dim: d,
        order: n,
        size,
        rank,
        threshold: dec.threshold(),
        singular_values: dec.singular_values().to_vec(),
        complete_spectrum: dec.is_complete(),
        spectral_gap: gap.is_finite().then_some(gap),
        condition,
        weighted_condition,
        separation: sep,
        condition_bound: bound,
        notes,
        warnings: dec.warnings().to_vec(),
    };
    let text = json_string(&report)?;
    match &a.out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(config),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn verify(a: &VerifyArgs) -> Outcome {
    check_range("tol", a.tol, 0.0, 1.0)?;
    let truth: ExponentialSum = read_json(&a.truth)?;
    let value: serde_json::Value = read_json(&a.estimate)?;
    let estimate = if value.get("model").is_some() {
        serde_json::from_value::<ReconstructionResult>(value)
            .map(|r| r.model)
            .with_context(|| format!("parsing {}", a.estimate.display()))
            .map_err(config)?
    } else {
        serde_json::from_value::<ExponentialSum>(value)
            .with_context(|| format!("parsing {}", a.estimate.display()))
            .map_err(config)?
    };
    let report = match_models(&truth, &estimate, a.tol).map_err(config)?;
    print!("{}", json_string(&report)?);
    if report.is_match() {
        eprintln!(
            "match: {} terms, parameter error {:.3e}, coefficient error {:.3e}",
            report.pairs.len(),
            report.max_param_error,
            report.max_coeff_rel_error
        );
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            error: anyhow!(
                "mismatch: {} matched, {} rejected, {} true and {} estimated terms unmatched",
                report.pairs.len(),
                report.rejected.len(),
                report.unmatched_truth.len(),
                report.unmatched_estimate.len()
            ),
        })
    }
}
