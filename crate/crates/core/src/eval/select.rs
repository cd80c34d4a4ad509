use std::cmp::Ordering;

use super::cv::{cross_validate, CvOptions};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fusion::SvrHyper;

/// A selectable unit: one or more feature columns that enter together.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub name: String,
    pub columns: Vec<String>,
}

impl Candidate {
    pub fn single(name: &str) -> Self {
        Self {
            name: name.into(),
            columns: vec![name.into()],
        }
    }

    pub fn group(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Category {
    pub name: String,
    pub candidates: Vec<Candidate>,
}

/// Categories from which at most one candidate each is picked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionSpace {
    pub categories: Vec<Category>,
}

impl SelectionSpace {
    /// DLM | SSIM variants | VIF variants | Motion.
    pub fn funque_default() -> Self {
        let cat = |name: &str, c: Vec<Candidate>| Category {
            name: name.into(),
            candidates: c,
        };
        Self {
            categories: vec![
                cat("dlm", vec![Candidate::single("dlm")]),
                cat(
                    "ssim",
                    vec![Candidate::single("wd_ssim"), Candidate::single("wd_essim")],
                ),
                cat(
                    "vif",
                    vec![
                        Candidate::single("vif_scalar"),
                        Candidate::single("vif_vector"),
                        Candidate::single("vif_edge"),
                        Candidate::single("vif_approx"),
                        Candidate::single("vif_scale1"),
                        Candidate::group("vif_scales_1_2", &["vif_scale1", "vif_scale2"]),
                    ],
                ),
                cat("motion", vec![Candidate::single("motion")]),
            ],
        }
    }

    /// Every feature column any candidate uses, sorted.
    pub fn columns(&self) -> Vec<String> {
        let mut c: Vec<String> = self
            .categories
            .iter()
            .flat_map(|cat| {
                cat.candidates
                    .iter()
                    .flat_map(|c| c.columns.iter().cloned())
            })
            .collect();
        c.sort();
        c.dedup();
        c
    }

    /// `prod(n_c + 1) - 1`
    pub fn num_subsets(&self) -> usize {
        self.categories
            .iter()
            .map(|c| c.candidates.len() + 1)
            .product::<usize>()
            - 1
    }

    /// Every non-empty choice of at most one candidate per category.
    pub fn subsets(&self) -> Vec<Vec<&Candidate>> {
        let radix: Vec<usize> = self
            .categories
            .iter()
            .map(|c| c.candidates.len() + 1)
            .collect();
        let mut out = Vec::with_capacity(self.num_subsets());
        let mut digits = vec![0usize; radix.len()];
        loop {
            // advance the mixed-radix counter; 0 means "skip category"
            let mut k = 0;
            while k < digits.len() {
                digits[k] += 1;
                if digits[k] < radix[k] {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
            if k == digits.len() {
                break;
            }
            out.push(
                digits
                    .iter()
                    .zip(&self.categories)
                    .filter(|(d, _)| **d > 0)
                    .map(|(d, c)| &c.candidates[d - 1])
                    .collect(),
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsetScore {
    /// Candidate names, sorted.
    pub candidates: Vec<String>,
    /// Feature columns, sorted.
    pub columns: Vec<String>,
    pub score: f64,
}

fn rank(a: &SubsetScore, b: &SubsetScore) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.columns.len().cmp(&b.columns.len()))
        .then_with(|| a.columns.cmp(&b.columns))
        .then_with(|| a.candidates.cmp(&b.candidates))
}

/// Cross-validates every subset of `space` and returns all of them ranked
/// best first. Ties go to fewer features, then to the lexicographically
/// smaller column list.
pub fn exhaustive_select(
    space: &SelectionSpace,
    data: &Dataset,
    opts: &CvOptions,
    hyper: &SvrHyper,
) -> Result<Vec<SubsetScore>> {
    if space.categories.iter().all(|c| c.candidates.is_empty()) {
        return Err(Error::InvalidArgument("empty selection space".into()));
    }
    let mut ranked = space
        .subsets()
        .into_iter()
        .map(|subset| {
            let mut columns: Vec<String> = subset
                .iter()
                .flat_map(|c| c.columns.iter().cloned())
                .collect();
            columns.sort();
            columns.dedup();
            let mut candidates: Vec<String> = subset.iter().map(|c| c.name.clone()).collect();
            candidates.sort();
            let score = cross_validate(&data.select(&columns)?, opts, hyper)?.mean_srocc;
            log::debug!("{} -> {score}", candidates.join("+"));
            Ok(SubsetScore {
                candidates,
                columns,
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(rank);
    Ok(ranked)
}
