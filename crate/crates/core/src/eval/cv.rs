use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::correlation::{fisher_average, srocc};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fusion::{svr_predict_values, svr_train, SvrHyper};

/// Keeps per-split correlations away from the infinite Fisher z at `|r| = 1`.
const R_LIMIT: f64 = 1.0 - 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CvOptions {
    pub n_splits: usize,
    pub train_fraction: f64,
    /// Split by content id rather than by row.
    pub grouped: bool,
    pub seed: u64,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            n_splits: 5000,
            train_fraction: 0.8,
            grouped: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    /// Fisher average of the per-split test SROCCs.
    pub mean_srocc: f64,
    pub per_split: Vec<f64>,
}

/// Training and test row indices of split `index`.
///
/// Each split draws from its own ChaCha stream of `seed`, so any subset of
/// splits can be reproduced independently and in any order.
pub fn split_indices(
    data: &Dataset,
    opts: &CvOptions,
    index: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let groups: Vec<String> = if opts.grouped {
        data.contents()
    } else {
        data.rows.iter().map(|r| r.video_id.clone()).collect()
    };
    if groups.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "{} {} cannot be split into train and test sets",
            groups.len(),
            if opts.grouped {
                "content group(s)"
            } else {
                "row(s)"
            }
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(&mut rng);
    let n_train =
        ((opts.train_fraction * groups.len() as f64).round() as usize).clamp(1, groups.len() - 1);
    let mut is_train = vec![false; groups.len()];
    for &g in &order[..n_train] {
        is_train[g] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, r) in data.rows.iter().enumerate() {
        let g = if opts.grouped {
            groups.binary_search(&r.content_id).expect("content listed")
        } else {
            i
        };
        if is_train[g] {
            train.push(i);
        } else {
            test.push(i);
        }
    }
    Ok((train, test))
}

fn subset(data: &Dataset, idx: &[usize]) -> Dataset {
    Dataset {
        name: data.name.clone(),
        schema: data.schema.clone(),
        rows: idx.iter().map(|&i| data.rows[i].clone()).collect(),
    }
}

fn one_split(data: &Dataset, opts: &CvOptions, hyper: &SvrHyper, index: usize) -> Result<f64> {
    let (train, test) = split_indices(data, opts, index)?;
    let model = svr_train(&subset(data, &train), hyper)?;
    let pred = test
        .iter()
        .map(|&i| svr_predict_values(&model, &data.rows[i].features))
        .collect::<Result<Vec<_>>>()?;
    let mos: Vec<f64> = test.iter().map(|&i| data.rows[i].mos).collect();
    match srocc(&pred, &mos) {
        Ok(r) => Ok(r.clamp(-R_LIMIT, R_LIMIT)),
        Err(Error::UndefinedCorrelation(why)) => {
            log::debug!("split {index}: correlation undefined ({why}); counted as 0");
            Ok(0.0)
        }
        Err(e) => Err(e),
    }
}

/// Repeated random train/test splitting; returns the Fisher-averaged test
/// SROCC. Splits run in parallel; results are identical to a serial run.
pub fn cross_validate(data: &Dataset, opts: &CvOptions, hyper: &SvrHyper) -> Result<CvResult> {
    if opts.n_splits == 0 {
        return Err(Error::InvalidArgument("n_splits must be positive".into()));
    }
    if !(opts.train_fraction > 0.0 && opts.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {} outside (0, 1)",
            opts.train_fraction
        )));
    }
    split_indices(data, opts, 0)?;
    let per_split = (0..opts.n_splits)
        .into_par_iter()
        .map(|i| one_split(data, opts, hyper, i))
        .collect::<Result<Vec<f64>>>()?;
    Ok(CvResult {
        mean_srocc: fisher_average(&per_split)?,
        per_split,
    })
}
