//! JSON layouts for models and moment grids.
//!
//! Complex numbers are always objects `{"re": x, "im": y}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{ExponentialSum, MomentGrid, ParameterPoint, Term};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub(crate) struct ComplexJson {
    re: f64,
    im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(c: Complex64) -> Self {
        ComplexJson { re: c.re, im: c.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(c: ComplexJson) -> Self {
        Complex64::new(c.re, c.im)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum ParamJson {
    Torus { t: Vec<f64> },
    Complex { z: Vec<ComplexJson> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct TermJson {
    coeff: ComplexJson,
    #[serde(flatten)]
    param: ParamJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct ModelFile {
    d: usize,
    terms: Vec<TermJson>,
}

impl From<ExponentialSum> for ModelFile {
    fn from(m: ExponentialSum) -> Self {
        let terms = m
            .terms()
            .iter()
            .map(|t| TermJson {
                coeff: t.coeff.into(),
                param: match &t.param {
                    ParameterPoint::Torus(t) => ParamJson::Torus { t: t.clone() },
                    ParameterPoint::Complex(z) => ParamJson::Complex {
                        z: z.iter().map(|&c| c.into()).collect(),
                    },
                },
            })
            .collect();
        ModelFile { d: m.dim(), terms }
    }
}

impl TryFrom<ModelFile> for ExponentialSum {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self, Error> {
        if f.terms.is_empty() {
            return Ok(ExponentialSum::zero(f.d));
        }
        let terms = f
            .terms
            .into_iter()
            .map(|t| Term {
                coeff: t.coeff.into(),
                param: match t.param {
                    ParamJson::Torus { t } => ParameterPoint::Torus(t),
                    ParamJson::Complex { z } => {
                        ParameterPoint::Complex(z.into_iter().map(Into::into).collect())
                    }
                },
            })
            .collect();
        ExponentialSum::new(f.d, terms)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct GridEntry {
    k: Vec<i64>,
    re: f64,
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct GridFile {
    d: usize,
    n: usize,
    entries: Vec<GridEntry>,
}

impl From<MomentGrid> for GridFile {
    fn from(g: MomentGrid) -> Self {
        let entries = g
            .iter()
            .map(|(k, v)| GridEntry {
                k,
                re: v.re,
                im: v.im,
            })
            .collect();
        GridFile {
            d: g.dim(),
            n: g.order(),
            entries,
        }
    }
}

impl TryFrom<GridFile> for MomentGrid {
    type Error = Error;

    fn try_from(f: GridFile) -> Result<Self, Error> {
        MomentGrid::from_entries(
            f.d,
            f.n,
            f.entries
                .into_iter()
                .map(|e| (e.k, Complex64::new(e.re, e.im))),
        )
    }
}
