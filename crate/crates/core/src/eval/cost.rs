//! Analytic operations-per-pixel model.
//!
//! One multiply-accumulate, add, compare or table lookup counts as one
//! operation. Costs are per pixel of the input frame and include both the
//! reference and the distorted input. A `win`x`win` windowed moment costs
//! two operations per sample per integral table, four lookups per box sum
//! and a constant amount of arithmetic per window, independent of `win`.

use std::fmt;

use crate::error::{Error, Result};
use crate::features::{FeatureKind, VifVariant};
use crate::fusion::Schema;
use crate::transform::{CsfMode, TransformConfig, Wavelet, CSF_TAPS};

const SAST_PER_PIXEL: f64 = 1.0;
/// Four passes of nominal 1024-point FFTs plus the gain multiply.
const FREQ_CSF_PER_PIXEL: f64 = 4.0 * 2.5 * 10.0 + 1.0;
/// Five integral tables, five box sums, moments and the two log terms.
const VIF_PER_SAMPLE: f64 = 10.0 + 20.0 + 15.0 + 8.0;
/// 3x3 moments, covariance update, quadratic form and nine log pairs.
const VIF_VECTOR_PER_COEFF: f64 = 45.0 + 45.0 + 90.0 + 54.0;
const SSIM_PER_COEFF: f64 = 3.0;
const SSIM_PER_BLOCK: f64 = 12.0;
const ESSIM_POOL_PER_BLOCK: f64 = 3.0;
const DLM_PER_COEFF: f64 = 16.0;
const DLM_PER_SITE: f64 = 11.0;
const MOTION_PER_SAMPLE: f64 = 3.0;

/// Operation counts by pipeline stage.
#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    pub name: String,
    pub items: Vec<(String, f64)>,
}

impl CostReport {
    pub fn total(&self) -> f64 {
        self.items.iter().map(|(_, v)| v).sum()
    }

    fn add(&mut self, stage: impl Into<String>, ops: f64) {
        if ops != 0.0 {
            self.items.push((stage.into(), ops));
        }
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.name)?;
        for (stage, ops) in &self.items {
            writeln!(f, "  {stage:<28} {ops:>10.3}")?;
        }
        write!(f, "  {:<28} {:>10.3}", "total", self.total())
    }
}

fn area(k: usize) -> f64 {
    0.25f64.powi(k as i32)
}

/// Cost of one separable analysis level `k` (1-based) for one input.
fn wavelet_level(w: Wavelet, k: usize) -> f64 {
    2.0 * w.taps() as f64 * area(k - 1)
}

fn detail_coeffs(levels: usize) -> f64 {
    (1..=levels).map(|k| 3.0 * area(k)).sum()
}

/// Operations per input pixel of the FUNQUE pipeline `cfg` with `schema`.
pub fn ops_per_pixel(cfg: &TransformConfig, schema: &Schema) -> Result<CostReport> {
    cfg.validate()?;
    let kinds = schema.kinds()?;
    let mut r = CostReport {
        name: "FUNQUE".into(),
        items: Vec::new(),
    };
    if kinds.is_empty() {
        return Ok(r);
    }
    let levels = cfg.levels;
    let a = if cfg.sast {
        r.add("sast", 2.0 * SAST_PER_PIXEL);
        0.25
    } else {
        1.0
    };
    match cfg.csf {
        CsfMode::SpatialFilter => r.add("csf spatial filter", a * 2.0 * 2.0 * CSF_TAPS as f64),
        CsfMode::FrequencyFilter => r.add("csf frequency filter", a * 2.0 * FREQ_CSF_PER_PIXEL),
        CsfMode::LiSw | CsfMode::WatsonSw if cfg.csf_shared => {
            r.add("csf subband weighting", a * 2.0 * detail_coeffs(levels))
        }
        _ => {}
    }
    let wavelet: f64 = (1..=levels).map(|k| wavelet_level(cfg.wavelet, k)).sum();
    r.add(
        format!("{} wavelet x{levels}", cfg.wavelet),
        a * 2.0 * wavelet,
    );

    let coeffs = detail_coeffs(levels);
    let blocks = area(levels);
    for kind in kinds {
        let ops = match kind {
            FeatureKind::WdSsim => SSIM_PER_COEFF * coeffs + SSIM_PER_BLOCK * blocks,
            FeatureKind::WdEssim => {
                SSIM_PER_COEFF * coeffs + (SSIM_PER_BLOCK + ESSIM_POOL_PER_BLOCK) * blocks
            }
            FeatureKind::Dlm => {
                let deferred = if cfg.csf.sw_scheme().is_some() && !cfg.csf_shared {
                    3.0 * coeffs
                } else {
                    0.0
                };
                DLM_PER_COEFF * coeffs + DLM_PER_SITE * coeffs / 3.0 + deferred
            }
            FeatureKind::Vif(VifVariant::Scalar) => VIF_PER_SAMPLE * coeffs,
            FeatureKind::Vif(VifVariant::Edge) => VIF_PER_SAMPLE * coeffs * 2.0 / 3.0,
            FeatureKind::Vif(VifVariant::Vector) => VIF_VECTOR_PER_COEFF * coeffs,
            FeatureKind::Vif(VifVariant::Approx) => VIF_PER_SAMPLE * blocks,
            FeatureKind::Vif(VifVariant::Scale(k)) => {
                let extra: f64 = (levels + 1..=k)
                    .map(|j| 2.0 * wavelet_level(cfg.wavelet, j))
                    .sum();
                VIF_PER_SAMPLE * area(k) + extra
            }
            FeatureKind::Motion => MOTION_PER_SAMPLE * blocks,
        };
        r.add(kind.name(), a * ops);
    }
    Ok(r)
}

/// Gaussian taps of the VMAF-style spatial VIF at scales 0-3.
pub const VMAF_VIF_TAPS: [usize; 4] = [17, 9, 5, 3];
const VMAF_VIF_PER_PIXEL: f64 = 15.0;
const VMAF_ADM_LEVELS: usize = 4;
const VMAF_MOTION_TAPS: usize = 5;

/// Registered cost of the VMAF-equivalent reference: four-scale spatial
/// VIF with Gaussian windows, four-level db2 DLM with Watson weights
/// applied after decoupling, and blurred-frame motion, all at full
/// resolution.
pub fn vmaf_reference_cost() -> CostReport {
    let mut r = CostReport {
        name: "VMAF-equivalent reference".into(),
        items: Vec::new(),
    };
    let mut vif = 0.0;
    for (s, &n) in VMAF_VIF_TAPS.iter().enumerate() {
        if s > 0 {
            // both inputs low-passed at the previous resolution, then decimated
            vif += 2.0 * 2.0 * n as f64 * area(s - 1);
        }
        vif += (5.0 * 2.0 * n as f64 + VMAF_VIF_PER_PIXEL) * area(s);
    }
    r.add("vif 4-scale spatial", vif);
    let wavelet: f64 = (1..=VMAF_ADM_LEVELS)
        .map(|k| wavelet_level(Wavelet::Db2, k))
        .sum();
    r.add("db2 wavelet x4", 2.0 * wavelet);
    let coeffs = detail_coeffs(VMAF_ADM_LEVELS);
    r.add(
        "dlm",
        DLM_PER_COEFF * coeffs + DLM_PER_SITE * coeffs / 3.0 + 3.0 * coeffs,
    );
    r.add("motion", 2.0 * VMAF_MOTION_TAPS as f64 + MOTION_PER_SAMPLE);
    r
}

/// `vmaf_reference_cost / ops_per_pixel(cfg, schema)`
pub fn expected_speedup(cfg: &TransformConfig, schema: &Schema) -> Result<f64> {
    let ours = ops_per_pixel(cfg, schema)?.total();
    if ours == 0.0 {
        return Err(Error::InvalidArgument("pipeline has zero cost".into()));
    }
    Ok(vmaf_reference_cost().total() / ours)
}
