//! Atom quality features computed from a pair of wavelet pyramids.

mod dlm;
mod stats;
mod table;
mod vif;

use std::fmt;
use std::str::FromStr;

pub use dlm::{
    dlm_contrast_masking, dlm_decouple, dlm_score, masking_threshold, DlmIntermediate, DlmParams,
    MaskingKernel,
};
pub use stats::{
    cov_pool, ssim_map, wd_essim, wd_local_stats, wd_ssim, CovPooled, LocalStats, SsimConsts,
};
pub use table::{read_features_csv, write_features_csv, FeatureTable, FEATURES_CSV_VERSION};
pub use vif::{
    approx_band, vif_channel, vif_feature, vif_sums, vif_vector_channel, VifParams, VifVariant,
};

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::scalar::Real;
use crate::transform::{SubbandWeights, WaveletPyramid};

/// Highest approximation level a `vif_scaleK` feature may name.
pub const MAX_VIF_SCALE: usize = 6;

/// One atom feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    WdSsim,
    WdEssim,
    Dlm,
    Vif(VifVariant),
    Motion,
}

impl FeatureKind {
    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Every recognised feature name.
    pub fn all() -> Vec<FeatureKind> {
        let mut out = vec![
            FeatureKind::WdSsim,
            FeatureKind::WdEssim,
            FeatureKind::Dlm,
            FeatureKind::Vif(VifVariant::Scalar),
            FeatureKind::Vif(VifVariant::Vector),
            FeatureKind::Vif(VifVariant::Edge),
            FeatureKind::Vif(VifVariant::Approx),
        ];
        out.extend((1..=MAX_VIF_SCALE).map(|k| FeatureKind::Vif(VifVariant::Scale(k))));
        out.push(FeatureKind::Motion);
        out
    }

    pub fn valid_names() -> String {
        Self::all()
            .iter()
            .map(|k| k.name())
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Value on an undistorted, static input.
    pub fn identity_value(&self) -> f64 {
        match self {
            FeatureKind::WdEssim | FeatureKind::Motion => 0.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::WdSsim => f.write_str("wd_ssim"),
            FeatureKind::WdEssim => f.write_str("wd_essim"),
            FeatureKind::Dlm => f.write_str("dlm"),
            FeatureKind::Vif(v) => write!(f, "vif_{v}"),
            FeatureKind::Motion => f.write_str("motion"),
        }
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().to_ascii_lowercase();
        Self::all()
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::UnknownFeature {
                name: s.to_string(),
                valid: Self::valid_names(),
            })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FeatureParams {
    pub ssim: SsimConsts,
    pub dlm: DlmParams,
    pub vif: VifParams,
}

/// Mean absolute difference between successive reference approximation
/// bands.
pub fn motion_feature<T: Real>(approx_prev: &Plane<T>, approx_cur: &Plane<T>) -> Result<f64> {
    let diff = approx_cur.zip_map(approx_prev, |a, b| (a.as_f64() - b.as_f64()).abs())?;
    Ok(diff.mean())
}

/// Evaluates `kinds` on one frame pair. `prev_ref_approx` is the previous
/// reference frame's `A_L` (`None` on the first frame, where Motion is 0).
pub fn compute_features<T: Real>(
    kinds: &[FeatureKind],
    pyr_ref: &WaveletPyramid<T>,
    pyr_dis: &WaveletPyramid<T>,
    prev_ref_approx: Option<&Plane<T>>,
    deferred_weights: Option<&SubbandWeights>,
    params: &FeatureParams,
) -> Result<Vec<f64>> {
    let mut stats = None;
    let mut local_stats = || -> Result<LocalStats<T>> {
        if stats.is_none() {
            stats = Some(
                wd_local_stats(pyr_ref, pyr_dis, pyr_ref.levels()).map_err(|e| {
                    Error::BandUnavailable(format!("SSIM features need a Haar transform ({e})"))
                })?,
            );
        }
        Ok(stats.clone().expect("just filled"))
    };
    kinds
        .iter()
        .map(|k| match k {
            FeatureKind::WdSsim => Ok(wd_ssim(&local_stats()?, params.ssim)),
            FeatureKind::WdEssim => Ok(wd_essim(&local_stats()?, params.ssim).value),
            FeatureKind::Dlm => dlm_score(pyr_ref, pyr_dis, deferred_weights, &params.dlm),
            FeatureKind::Vif(v) => vif_feature(pyr_ref, pyr_dis, *v, &params.vif),
            FeatureKind::Motion => match prev_ref_approx {
                Some(prev) => motion_feature(prev, pyr_ref.approx()),
                None => Ok(0.0),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{wavelet_pyramid, Wavelet};

    #[test]
    fn names_round_trip() {
        for k in FeatureKind::all() {
            assert_eq!(k.name().parse::<FeatureKind>().unwrap(), k);
        }
        assert_eq!(
            "vif_scale2".parse::<FeatureKind>().unwrap(),
            FeatureKind::Vif(VifVariant::Scale(2))
        );
        let err = "vif_scale9".parse::<FeatureKind>().unwrap_err();
        assert!(err.to_string().contains("wd_essim"));
    }

    #[test]
    fn motion_cases() {
        let a = Plane::from_fn(5, 4, |r, c| (r * 5 + c) as f64);
        assert_eq!(motion_feature(&a, &a).unwrap(), 0.0);
        assert_eq!(motion_feature(&a, &a.map(|v| v + 3.0)).unwrap(), 3.0);
        assert!(motion_feature(&a, &Plane::new(4, 4)).is_err());
        let b = Plane::from_fn(5, 4, |r, c| ((r * 7 + c * 3) % 11) as f64);
        let want = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
            / 20.0;
        assert!((motion_feature(&a, &b).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn ssim_features_need_haar() {
        let p = Plane::from_fn(32, 32, |r, c| ((r * 31 + c * 17) % 255) as f64);
        let d = wavelet_pyramid(&p, Wavelet::Db2, 1).unwrap();
        let kinds = [FeatureKind::WdSsim];
        assert!(compute_features(&kinds, &d, &d, None, None, &FeatureParams::default()).is_err());
        let kinds = [FeatureKind::Dlm, FeatureKind::Motion];
        assert_eq!(
            compute_features(
                &kinds,
                &d,
                &d,
                Some(d.approx()),
                None,
                &FeatureParams::default()
            )
            .unwrap(),
            vec![1.0, 0.0]
        );
    }
}
