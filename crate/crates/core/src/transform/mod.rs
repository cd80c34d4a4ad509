//! The unified transform shared by every atom feature: optional 2x
//! rescale, contrast sensitivity weighting and a wavelet pyramid.

mod csf;
mod sast;
mod wavelet;
mod weighting;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

pub use csf::{
    apply_frequency_csf, apply_spatial_csf, build_spatial_csf_kernel, csf_value, CsfKernel,
    CSF_GRID, CSF_TAPS,
};
pub(crate) use csf::{convolve_cols, convolve_rows};
pub use sast::sast_rescale;
pub use wavelet::{
    analyze_level, haar_synthesis, reconstruct, wavelet_pyramid, SubbandSet, Wavelet,
    WaveletPyramid, MAX_LEVELS,
};
pub use weighting::{subband_weighting, SubbandWeights, SwScheme, WATSON_CDF97_ASSET};

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::scalar::Real;

/// How the contrast sensitivity function enters the transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CsfMode {
    /// No CSF at all.
    None,
    SpatialFilter,
    FrequencyFilter,
    LiSw,
    WatsonSw,
}

impl CsfMode {
    pub fn sw_scheme(self) -> Option<SwScheme> {
        match self {
            CsfMode::LiSw => Some(SwScheme::Li),
            CsfMode::WatsonSw => Some(SwScheme::Watson),
            _ => None,
        }
    }

    /// Filters applied before the wavelet decomposition.
    pub fn is_prefilter(self) -> bool {
        matches!(self, CsfMode::SpatialFilter | CsfMode::FrequencyFilter)
    }
}

impl FromStr for CsfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(CsfMode::None),
            "spatial_filter" | "spatial" => Ok(CsfMode::SpatialFilter),
            "frequency_filter" | "frequency" => Ok(CsfMode::FrequencyFilter),
            "li_sw" | "li" => Ok(CsfMode::LiSw),
            "watson_sw" | "watson" => Ok(CsfMode::WatsonSw),
            other => Err(Error::Config(format!(
                "unknown csf '{other}' (none, spatial_filter, frequency_filter, li_sw, watson_sw)"
            ))),
        }
    }
}

impl fmt::Display for CsfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CsfMode::None => "none",
            CsfMode::SpatialFilter => "spatial_filter",
            CsfMode::FrequencyFilter => "frequency_filter",
            CsfMode::LiSw => "li_sw",
            CsfMode::WatsonSw => "watson_sw",
        })
    }
}

pub const DEFAULT_PPD: f64 = 32.0;

/// One point in the transform design space.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformConfig {
    pub wavelet: Wavelet,
    pub levels: usize,
    pub csf: CsfMode,
    pub csf_shared: bool,
    pub sast: bool,
    pub pixels_per_degree: f64,
}

impl Default for TransformConfig {
    /// Haar, one level, spatial CSF, SAST on.
    fn default() -> Self {
        Self {
            wavelet: Wavelet::Haar,
            levels: 1,
            csf: CsfMode::SpatialFilter,
            csf_shared: true,
            sast: true,
            pixels_per_degree: DEFAULT_PPD,
        }
    }
}

impl TransformConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_LEVELS).contains(&self.levels) {
            return Err(Error::Config(format!(
                "levels must be in 1..={MAX_LEVELS}, got {}",
                self.levels
            )));
        }
        if self.csf.is_prefilter() && !self.csf_shared {
            return Err(Error::Config(format!(
                "{} is applied before the wavelet transform and must be shared",
                self.csf
            )));
        }
        if !(self.pixels_per_degree > 0.0) || !self.pixels_per_degree.is_finite() {
            return Err(Error::Config(format!(
                "ppd must be positive, got {}",
                self.pixels_per_degree
            )));
        }
        Ok(())
    }

    /// `key = value` text form.
    pub fn to_kv_string(&self) -> String {
        format!(
            "wavelet = {}\nlevels = {}\ncsf = {}\ncsf_shared = {}\nsast = {}\nppd = {}\n",
            self.wavelet, self.levels, self.csf, self.csf_shared, self.sast, self.pixels_per_degree
        )
    }

    /// Parses the `key = value` form. Missing keys keep their defaults;
    /// `#` starts a comment.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Parse { line: n + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, got '{raw}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let parse_bool = |v: &str| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(bad(format!("bad boolean '{v}' for {key}"))),
            };
            match key {
                "wavelet" => cfg.wavelet = value.parse()?,
                "levels" => {
                    cfg.levels = value
                        .parse()
                        .map_err(|_| bad(format!("bad level count '{value}'")))?
                }
                "csf" => cfg.csf = value.parse()?,
                "csf_shared" => cfg.csf_shared = parse_bool(value)?,
                "sast" => cfg.sast = parse_bool(value)?,
                "ppd" | "pixels_per_degree" => {
                    cfg.pixels_per_degree = value
                        .parse()
                        .map_err(|_| bad(format!("bad ppd '{value}'")))?
                }
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Subband weights this configuration needs, if any.
    pub fn subband_weights(&self) -> Option<SubbandWeights> {
        self.csf
            .sw_scheme()
            .map(|s| SubbandWeights::for_scheme(s, self.pixels_per_degree, self.levels))
    }
}

/// Applies SAST, then a pre-wavelet CSF, then the wavelet pyramid, then
/// subband weighting when it is shared.
///
/// With an unshared SW scheme the returned pyramid is unweighted; the
/// weights are left for the DLM feature to apply.
pub fn unified_transform<T: Real>(
    plane: &Plane<T>,
    cfg: &TransformConfig,
    kernel: Option<&CsfKernel>,
) -> Result<WaveletPyramid<T>> {
    cfg.validate()?;
    if kernel.is_some() != (cfg.csf == CsfMode::SpatialFilter) {
        return Err(Error::Config(
            "a CSF kernel must be supplied exactly when csf = spatial_filter".into(),
        ));
    }
    run(plane, cfg, kernel, cfg.subband_weights().as_ref())
}

fn run<T: Real>(
    plane: &Plane<T>,
    cfg: &TransformConfig,
    kernel: Option<&CsfKernel>,
    weights: Option<&SubbandWeights>,
) -> Result<WaveletPyramid<T>> {
    let rescaled;
    let mut current = plane;
    if cfg.sast {
        rescaled = sast_rescale(plane);
        current = &rescaled;
    }
    let filtered = match cfg.csf {
        CsfMode::SpatialFilter => Some(apply_spatial_csf(
            current,
            kernel.ok_or_else(|| Error::Config("spatial CSF requires a kernel".into()))?,
        )?),
        CsfMode::FrequencyFilter => Some(apply_frequency_csf(current, cfg.pixels_per_degree)?),
        _ => None,
    };
    let pyr = wavelet_pyramid(
        filtered.as_ref().unwrap_or(current),
        cfg.wavelet,
        cfg.levels,
    )?;
    match weights {
        Some(w) if cfg.csf_shared => subband_weighting(&pyr, w),
        _ => Ok(pyr),
    }
}

/// A configured transform with its kernel and weight table built once.
///
/// Counts invocations so callers can check that each frame is transformed
/// once per input.
#[derive(Debug)]
pub struct UnifiedTransform {
    config: TransformConfig,
    kernel: Option<CsfKernel>,
    weights: Option<SubbandWeights>,
    invocations: AtomicUsize,
}

impl UnifiedTransform {
    pub fn new(config: TransformConfig) -> Result<Self> {
        let weights = config.subband_weights();
        Self::with_weights(config, weights)
    }

    /// Uses a caller-provided weight table (e.g. a custom Watson asset)
    /// for SW schemes.
    pub fn with_weights(config: TransformConfig, weights: Option<SubbandWeights>) -> Result<Self> {
        config.validate()?;
        let kernel = match config.csf {
            CsfMode::SpatialFilter => Some(build_spatial_csf_kernel(config.pixels_per_degree)?),
            _ => None,
        };
        let weights = match config.csf.sw_scheme() {
            Some(_) => {
                let w = weights
                    .ok_or_else(|| Error::Config("SW scheme needs a weight table".into()))?;
                w.covers(config.levels)?;
                Some(w)
            }
            None => None,
        };
        Ok(Self {
            config,
            kernel,
            weights,
            invocations: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &TransformConfig {
        &self.config
    }

    pub fn kernel(&self) -> Option<&CsfKernel> {
        self.kernel.as_ref()
    }

    /// Weights the DLM feature must apply itself (SW scheme, not shared).
    pub fn deferred_weights(&self) -> Option<&SubbandWeights> {
        match self.config.csf_shared {
            false => self.weights.as_ref(),
            true => None,
        }
    }

    pub fn apply<T: Real>(&self, plane: &Plane<T>) -> Result<WaveletPyramid<T>> {
        self.invocations.fetch_add(1, Ordering::Relaxed);
        run(
            plane,
            &self.config,
            self.kernel.as_ref(),
            self.weights.as_ref(),
        )
    }

    pub fn invocations(&self) -> usize {
        self.invocations.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_configs() -> Vec<TransformConfig> {
        let mut out = Vec::new();
        for wavelet in [Wavelet::Haar, Wavelet::Db2] {
            for levels in 1..=4 {
                for csf in [
                    CsfMode::None,
                    CsfMode::SpatialFilter,
                    CsfMode::FrequencyFilter,
                    CsfMode::LiSw,
                    CsfMode::WatsonSw,
                ] {
                    for csf_shared in [true, false] {
                        if csf.is_prefilter() && !csf_shared {
                            continue;
                        }
                        for sast in [true, false] {
                            out.push(TransformConfig {
                                wavelet,
                                levels,
                                csf,
                                csf_shared,
                                sast,
                                pixels_per_degree: DEFAULT_PPD,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn default_config_quarter_dims() {
        let t = UnifiedTransform::new(TransformConfig::default()).unwrap();
        let pyr = t.apply(&Plane::<f64>::new(96, 64)).unwrap();
        assert_eq!(pyr.level(1).dims(), (24, 16));
        assert_eq!(pyr.approx().dims(), (24, 16));
        assert_eq!(t.invocations(), 1);
    }

    #[test]
    fn constant_input_has_zero_detail_everywhere() {
        let p = Plane::filled(80, 72, 117.0f64);
        for cfg in all_configs() {
            let t = UnifiedTransform::new(cfg.clone()).unwrap();
            let pyr = t.apply(&p).unwrap();
            for set in pyr.details() {
                for b in set.bands() {
                    assert!(
                        b.as_slice().iter().all(|v| v.abs() < 1e-9),
                        "{}",
                        cfg.to_kv_string()
                    );
                }
            }
        }
    }

    #[test]
    fn deterministic_on_copies() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Plane::from_fn(64, 48, |_, _| rng.random_range(0.0..255.0f64));
        let q = p.clone();
        for cfg in all_configs() {
            let t = UnifiedTransform::new(cfg).unwrap();
            assert_eq!(t.apply(&p).unwrap(), t.apply(&q).unwrap());
        }
    }

    #[test]
    fn kernel_presence_is_checked() {
        let p = Plane::<f64>::new(64, 64);
        let cfg = TransformConfig::default();
        assert!(unified_transform(&p, &cfg, None).is_err());
        let k = build_spatial_csf_kernel(32.0).unwrap();
        assert!(unified_transform(&p, &cfg, Some(&k)).is_ok());
        let li = TransformConfig {
            csf: CsfMode::LiSw,
            ..cfg
        };
        assert!(unified_transform(&p, &li, Some(&k)).is_err());
        assert!(unified_transform(&p, &li, None).is_ok());
    }

    #[test]
    fn unshared_sw_leaves_pyramid_unweighted() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = Plane::from_fn(64, 64, |_, _| rng.random_range(0.0..255.0f64));
        let cfg = TransformConfig {
            csf: CsfMode::LiSw,
            csf_shared: false,
            sast: false,
            levels: 2,
            ..TransformConfig::default()
        };
        let t = UnifiedTransform::new(cfg.clone()).unwrap();
        let plain = wavelet_pyramid(&p, Wavelet::Haar, 2).unwrap();
        assert_eq!(t.apply(&p).unwrap(), plain);
        assert_eq!(t.deferred_weights(), Some(&SubbandWeights::li(32.0, 2)));
        let shared = UnifiedTransform::new(TransformConfig {
            csf_shared: true,
            ..cfg
        })
        .unwrap();
        assert!(shared.deferred_weights().is_none());
        assert_eq!(
            shared.apply(&p).unwrap(),
            subband_weighting(&plain, &SubbandWeights::li(32.0, 2)).unwrap()
        );
    }

    #[test]
    fn config_validation_and_text_round_trip() {
        let bad = TransformConfig {
            csf: CsfMode::SpatialFilter,
            csf_shared: false,
            ..TransformConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(TransformConfig {
            levels: 5,
            ..TransformConfig::default()
        }
        .validate()
        .is_err());
        for cfg in all_configs() {
            assert_eq!(
                TransformConfig::from_kv_str(&cfg.to_kv_string()).unwrap(),
                cfg
            );
        }
        let parsed = TransformConfig::from_kv_str("# tweak\nlevels = 3\ncsf = li_sw\n").unwrap();
        assert_eq!(parsed.levels, 3);
        assert_eq!(parsed.csf, CsfMode::LiSw);
        assert!(TransformConfig::from_kv_str("colour = yes").is_err());
    }
}
