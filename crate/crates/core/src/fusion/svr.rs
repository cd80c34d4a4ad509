//! nu-SVR training and prediction on min-max normalised features.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::solver::solve_nu_svr;
use super::{FeatureVector, Schema};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SvrKernel {
    Rbf,
    Linear,
}

impl SvrKernel {
    #[inline]
    fn eval(self, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
        match self {
            SvrKernel::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            SvrKernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        }
    }
}

impl fmt::Display for SvrKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SvrKernel::Rbf => "rbf",
            SvrKernel::Linear => "linear",
        })
    }
}

impl FromStr for SvrKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rbf" => Ok(SvrKernel::Rbf),
            "linear" => Ok(SvrKernel::Linear),
            other => Err(Error::Config(format!(
                "unknown kernel '{other}' (rbf, linear)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvrHyper {
    pub kernel: SvrKernel,
    /// `None` means `1 / num_features`.
    pub gamma: Option<f64>,
    pub c: f64,
    pub nu: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrHyper {
    fn default() -> Self {
        Self {
            kernel: SvrKernel::Rbf,
            gamma: None,
            c: 4.0,
            nu: 0.9,
            tol: 1e-6,
            max_iter: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvrModel {
    pub kernel: SvrKernel,
    pub gamma: f64,
    pub c: f64,
    pub nu: f64,
    pub schema: Schema,
    /// Training `(min, max)` per feature.
    pub feature_ranges: Vec<(f64, f64)>,
    /// Normalised support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub score_range: (f64, f64),
}

impl SvrModel {
    pub fn normalize(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(&self.feature_ranges)
            .map(|(v, (lo, hi))| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    }

    /// Kernel expansion plus bias on normalised input, before clipping.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, a)| a * self.kernel.eval(self.gamma, sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("invalid model: {m}")));
        let n = self.schema.len();
        if self.feature_ranges.len() != n {
            return bad(format!(
                "{} ranges for {n} features",
                self.feature_ranges.len()
            ));
        }
        if let Some((i, _)) = self
            .feature_ranges
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| !(lo < hi))
        {
            return bad(format!("degenerate range for '{}'", self.schema.names()[i]));
        }
        if self.dual_coefs.len() != self.support_vectors.len() {
            return bad("coefficient and support vector counts differ".into());
        }
        if self.support_vectors.iter().any(|sv| sv.len() != n) {
            return bad("support vector length differs from schema".into());
        }
        if self.dual_coefs.iter().any(|a| a.abs() > self.c) {
            return bad("dual coefficient outside [-C, C]".into());
        }
        if !(self.score_range.0 <= self.score_range.1) {
            return bad("empty score range".into());
        }
        Ok(())
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Trains a nu-SVR on `data`.
///
/// Rows are put in a canonical order first, so the model does not depend
/// on the order rows were supplied in.
pub fn svr_train(data: &Dataset, hyper: &SvrHyper) -> Result<SvrModel> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "training needs at least 2 rows, got {}",
            data.len()
        )));
    }
    let nf = data.schema.len();
    if nf == 0 {
        return Err(Error::InvalidArgument(
            "training needs at least one feature".into(),
        ));
    }
    if !(hyper.c > 0.0) || !(hyper.nu > 0.0 && hyper.nu <= 1.0) || !(hyper.tol > 0.0) {
        return Err(Error::Config(format!(
            "invalid SVR hyperparameters {hyper:?}"
        )));
    }
    let mut rows: Vec<(&[f64], f64)> = data
        .rows
        .iter()
        .map(|r| (r.features.as_slice(), r.mos))
        .collect();
    if rows
        .iter()
        .any(|(f, y)| f.len() != nf || !y.is_finite() || f.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::InvalidArgument(
            "non-finite or ragged training rows".into(),
        ));
    }
    rows.sort_by(|a, b| lexicographic(a.0, b.0).then(a.1.total_cmp(&b.1)));

    let ranges: Vec<(f64, f64)> = (0..nf)
        .map(|k| {
            let (lo, hi) = rows
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (f, _)| {
                    (lo.min(f[k]), hi.max(f[k]))
                });
            if lo < hi {
                Ok((lo, hi))
            } else {
                Err(Error::DegenerateFeature(data.schema[k].clone()))
            }
        })
        .collect::<Result<_>>()?;
    let x: Vec<Vec<f64>> = rows
        .iter()
        .map(|(f, _)| {
            f.iter()
                .zip(&ranges)
                .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
                .collect()
        })
        .collect();
    let t: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let gamma = hyper.gamma.unwrap_or(1.0 / nf as f64);
    let l = x.len();
    let mut kernel = vec![0.0; l * l];
    for i in 0..l {
        for j in i..l {
            let v = hyper.kernel.eval(gamma, &x[i], &x[j]);
            kernel[i * l + j] = v;
            kernel[j * l + i] = v;
        }
    }
    let sol = solve_nu_svr(&kernel, &t, hyper.c, hyper.nu, hyper.tol, hyper.max_iter)?;
    log::debug!("nu-SVR converged in {} iterations", sol.iterations);

    let (support_vectors, dual_coefs) = x
        .into_iter()
        .zip(sol.coef)
        .filter(|(_, a)| *a != 0.0)
        .unzip();
    let score_range = t
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
            (lo.min(y), hi.max(y))
        });
    Ok(SvrModel {
        kernel: hyper.kernel,
        gamma,
        c: hyper.c,
        nu: hyper.nu,
        schema: Schema::from_names(data.schema.clone()),
        feature_ranges: ranges,
        support_vectors,
        dual_coefs,
        bias: -sol.rho,
        score_range,
    })
}

/// Prediction on raw (unnormalised) feature values in schema order.
pub fn svr_predict_values(model: &SvrModel, values: &[f64]) -> Result<f64> {
    if values.len() != model.schema.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for a {}-feature model",
            values.len(),
            model.schema.len()
        )));
    }
    let y = model.decision(&model.normalize(values));
    Ok(y.clamp(model.score_range.0, model.score_range.1))
}

pub fn svr_predict(model: &SvrModel, features: &FeatureVector) -> Result<f64> {
    if features.schema != model.schema {
        return Err(Error::SchemaMismatch {
            expected: model.schema.to_string(),
            actual: features.schema.to_string(),
        });
    }
    svr_predict_values(model, &features.values)
}
