//! Feature vectors, per-frame extraction and SVR fusion.

mod model_io;
mod solver;
mod svr;

use std::fmt;

use sha2::{Digest, Sha256};

pub use model_io::{load_model, parse_model, save_model, MODEL_FORMAT_VERSION};
pub use svr::{svr_predict, svr_predict_values, svr_train, SvrHyper, SvrKernel, SvrModel};

use crate::error::{Error, Result};
use crate::features::{compute_features, FeatureKind, FeatureParams};
use crate::plane::Plane;
use crate::scalar::Real;
use crate::transform::UnifiedTransform;

/// Ordered feature names.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Schema {
    names: Vec<String>,
}

pub const DEFAULT_SCHEMA: [&str; 5] = ["wd_essim", "vif_scale1", "vif_scale2", "dlm", "motion"];

impl Schema {
    /// `[wd_essim, vif_scale1, vif_scale2, dlm, motion]`
    pub fn funque_default() -> Self {
        Self::from_names(DEFAULT_SCHEMA.iter().map(|s| s.to_string()).collect())
    }

    /// Any column names; nothing is checked against the feature registry.
    pub fn from_names(names: Vec<String>) -> Self {
        Self { names }
    }

    /// Parses a comma-separated list of registered feature names.
    pub fn parse(list: &str) -> Result<Self> {
        let kinds = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse::<FeatureKind>)
            .collect::<Result<Vec<_>>>()?;
        if kinds.is_empty() {
            return Err(Error::InvalidArgument("empty feature schema".into()));
        }
        Ok(Self::from_names(
            kinds.iter().map(FeatureKind::name).collect(),
        ))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn kinds(&self) -> Result<Vec<FeatureKind>> {
        self.names.iter().map(|n| n.parse()).collect()
    }

    /// Hex SHA-256 of the newline-joined names.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.names.join("\n").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names.join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub schema: Schema,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(schema: Schema, values: Vec<f64>) -> Result<Self> {
        if schema.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {}-feature schema",
                values.len(),
                schema.len()
            )));
        }
        Ok(Self { schema, values })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.schema
            .names()
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

/// Transforms both frames once, evaluates every schema feature and returns
/// the reference approximation band for the next frame's Motion.
pub fn extract_frame_features<T: Real>(
    transform: &UnifiedTransform,
    reference: &Plane<T>,
    distorted: &Plane<T>,
    prev_ref_approx: Option<&Plane<T>>,
    schema: &Schema,
    params: &FeatureParams,
) -> Result<(FeatureVector, Plane<T>)> {
    reference.check_same_dims(distorted)?;
    let kinds = schema.kinds()?;
    let pyr_ref = transform.apply(reference)?;
    let pyr_dis = transform.apply(distorted)?;
    let values = compute_features(
        &kinds,
        &pyr_ref,
        &pyr_dis,
        prev_ref_approx,
        transform.deferred_weights(),
        params,
    )?;
    Ok((
        FeatureVector::new(schema.clone(), values)?,
        pyr_ref.approx().clone(),
    ))
}

/// Column means of equally long rows.
pub fn aggregate_rows(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = rows
        .first()
        .ok_or_else(|| Error::InvalidArgument("no frames to aggregate".into()))?;
    let mut sum = vec![0.0; first.len()];
    for r in rows {
        if r.len() != sum.len() {
            return Err(Error::DimensionMismatch("ragged feature rows".into()));
        }
        for (s, v) in sum.iter_mut().zip(r) {
            *s += v;
        }
    }
    let n = rows.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// Per-feature mean over frames.
pub fn aggregate_video_features(per_frame: &[FeatureVector]) -> Result<FeatureVector> {
    let first = per_frame
        .first()
        .ok_or_else(|| Error::InvalidArgument("no frames to aggregate".into()))?;
    if let Some(bad) = per_frame.iter().find(|f| f.schema != first.schema) {
        return Err(Error::SchemaMismatch {
            expected: first.schema.to_string(),
            actual: bad.schema.to_string(),
        });
    }
    let rows: Vec<Vec<f64>> = per_frame.iter().map(|f| f.values.clone()).collect();
    FeatureVector::new(first.schema.clone(), aggregate_rows(&rows)?)
}
