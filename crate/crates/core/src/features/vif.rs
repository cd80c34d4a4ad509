//! Visual information fidelity on wavelet bands.

use std::fmt;

use nalgebra::{SMatrix, SVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::integral::windowed_moments;
use crate::plane::Plane;
use crate::scalar::Real;
use crate::transform::{analyze_level, WaveletPyramid};

const EPS: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VifParams {
    pub sigma_n_sq: f64,
    pub window: usize,
    pub stride: usize,
}

impl Default for VifParams {
    fn default() -> Self {
        Self {
            sigma_n_sq: 2.0,
            window: 9,
            stride: 1,
        }
    }
}

impl VifParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_n_sq > 0.0) || self.window == 0 || self.stride == 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid VIF parameters {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VifVariant {
    /// Scalar GSM over every detail band.
    Scalar,
    /// Vector GSM over 3x3 coefficient neighborhoods of every detail band.
    Vector,
    /// Scalar GSM over the H and V bands.
    Edge,
    /// Scalar GSM over the residual approximation band.
    Approx,
    /// Scalar GSM over the level-`k` approximation band.
    Scale(usize),
}

impl fmt::Display for VifVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VifVariant::Scalar => f.write_str("scalar"),
            VifVariant::Vector => f.write_str("vector"),
            VifVariant::Edge => f.write_str("edge"),
            VifVariant::Approx => f.write_str("approx"),
            VifVariant::Scale(k) => write!(f, "scale{k}"),
        }
    }
}

/// Information sums `(num, den)` of one band pair.
///
/// Windows whose reference variance is below `1e-10` are skipped, so a
/// flat reference yields `(0, 0)`.
pub fn vif_channel<T: Real>(bx: &Plane<T>, by: &Plane<T>, p: &VifParams) -> Result<(f64, f64)> {
    p.validate()?;
    bx.check_same_dims(by)?;
    let m = windowed_moments(bx, by, p.window, p.stride)?;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..m.var_x.len() {
        let vx = m.var_x.as_slice()[i];
        if vx < EPS {
            continue;
        }
        let vy = m.var_y.as_slice()[i];
        let cxy = m.cov_xy.as_slice()[i];
        let g = cxy / (vx + EPS);
        let sv = (vy - g * cxy).max(0.0);
        num += (1.0 + g * g * vx / (sv + p.sigma_n_sq)).log2();
        den += (1.0 + vx / p.sigma_n_sq).log2();
    }
    Ok((num, den))
}

type Mat9 = SMatrix<f64, 9, 9>;
type Vec9 = SVector<f64, 9>;

fn neighborhood<T: Real>(b: &Plane<T>, r: usize, c: usize) -> Vec9 {
    Vec9::from_fn(|k, _| b[(r + k / 3, c + k % 3)].as_f64())
}

/// Vector-GSM sums for one band pair.
///
/// The 9x9 covariance of reference neighborhoods is estimated over the
/// band and eigendecomposed once; each neighborhood then contributes one
/// log term per eigenvalue, with the multiplier `s^2 = x' C^-1 x / 9` and
/// the channel gain and noise from 3x3 windowed moments.
pub fn vif_vector_channel<T: Real>(
    bx: &Plane<T>,
    by: &Plane<T>,
    p: &VifParams,
) -> Result<(f64, f64)> {
    p.validate()?;
    bx.check_same_dims(by)?;
    let (w, h) = bx.dims();
    if w < 3 || h < 3 {
        return Err(Error::InvalidArgument(format!(
            "{w}x{h} band is smaller than a 3x3 neighborhood"
        )));
    }
    let (nw, nh) = (w - 2, h - 2);
    let count = (nw * nh) as f64;
    let mut mean = Vec9::zeros();
    for r in 0..nh {
        for c in 0..nw {
            mean += neighborhood(bx, r, c);
        }
    }
    mean /= count;
    let mut cov = Mat9::zeros();
    for r in 0..nh {
        for c in 0..nw {
            let d = neighborhood(bx, r, c) - mean;
            cov += d * d.transpose();
        }
    }
    cov /= count;
    let eig = SymmetricEigen::new(cov);
    let lambda = eig.eigenvalues.map(|l| l.max(EPS));
    let inv = &eig.eigenvectors
        * Mat9::from_diagonal(&lambda.map(|l| 1.0 / l))
        * eig.eigenvectors.transpose();

    let m = windowed_moments(bx, by, 3, 1)?;
    let (mut num, mut den) = (0.0, 0.0);
    for r in 0..nh {
        for c in 0..nw {
            let vx = m.var_x[(r, c)];
            if vx < EPS {
                continue;
            }
            let cxy = m.cov_xy[(r, c)];
            let g = cxy / (vx + EPS);
            let sv = (m.var_y[(r, c)] - g * cxy).max(0.0);
            let x = neighborhood(bx, r, c) - mean;
            let s2 = (x.transpose() * inv * x)[(0, 0)] / 9.0;
            for &l in lambda.iter() {
                num += (1.0 + g * g * s2 * l / (sv + p.sigma_n_sq)).log2();
                den += (1.0 + s2 * l / p.sigma_n_sq).log2();
            }
        }
    }
    Ok((num, den))
}

fn ratio((num, den): (f64, f64)) -> f64 {
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

fn accumulate<'a, T: Real + 'a>(
    pairs: impl IntoIterator<Item = (&'a Plane<T>, &'a Plane<T>)>,
    channel: impl Fn(&Plane<T>, &Plane<T>) -> Result<(f64, f64)>,
) -> Result<(f64, f64)> {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in pairs {
        let (n, d) = channel(x, y)?;
        num += n;
        den += d;
    }
    Ok((num, den))
}

/// Level-`k` approximation band, decomposing `A_L` further when `k > L`.
pub fn approx_band<T: Real>(pyr: &WaveletPyramid<T>, k: usize) -> Result<Plane<T>> {
    if k == 0 {
        return Err(Error::BandUnavailable(
            "approximation levels start at 1".into(),
        ));
    }
    if k <= pyr.levels() {
        return Ok(pyr.approx_at(k).clone());
    }
    let mut a = pyr.approx().clone();
    for level in pyr.levels()..k {
        if a.width() < 2 || a.height() < 2 {
            return Err(Error::BandUnavailable(format!(
                "level {} approximation of a {:?} input",
                level + 1,
                pyr.input_dims()
            )));
        }
        a = analyze_level(&a, pyr.wavelet()).0;
    }
    Ok(a)
}

/// Sums `(num, den)` for `variant`; the feature is their ratio.
pub fn vif_sums<T: Real>(
    pyr_ref: &WaveletPyramid<T>,
    pyr_dis: &WaveletPyramid<T>,
    variant: VifVariant,
    p: &VifParams,
) -> Result<(f64, f64)> {
    if pyr_ref.levels() != pyr_dis.levels() || pyr_ref.input_dims() != pyr_dis.input_dims() {
        return Err(Error::DimensionMismatch(
            "VIF pyramids differ in geometry".into(),
        ));
    }
    let scalar = |x: &Plane<T>, y: &Plane<T>| vif_channel(x, y, p);
    let details = pyr_ref.details().iter().zip(pyr_dis.details());
    match variant {
        VifVariant::Scalar => accumulate(
            details.flat_map(|(r, d)| r.bands().into_iter().zip(d.bands())),
            scalar,
        ),
        VifVariant::Edge => accumulate(
            details.flat_map(|(r, d)| [(&r.h, &d.h), (&r.v, &d.v)]),
            scalar,
        ),
        VifVariant::Vector => accumulate(
            details.flat_map(|(r, d)| r.bands().into_iter().zip(d.bands())),
            |x, y| vif_vector_channel(x, y, p),
        ),
        VifVariant::Approx => vif_channel(pyr_ref.approx(), pyr_dis.approx(), p),
        VifVariant::Scale(k) => {
            let (x, y) = (approx_band(pyr_ref, k)?, approx_band(pyr_dis, k)?);
            vif_channel(&x, &y, p)
        }
    }
}

/// VIF ratio `num / den`, or 1 when the reference carries no information.
pub fn vif_feature<T: Real>(
    pyr_ref: &WaveletPyramid<T>,
    pyr_dis: &WaveletPyramid<T>,
    variant: VifVariant,
    p: &VifParams,
) -> Result<f64> {
    vif_sums(pyr_ref, pyr_dis, variant, p).map(ratio)
}
