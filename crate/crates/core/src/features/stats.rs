//! Local statistics read directly off Haar coefficients, and the SSIM
//! family computed from them.
//!
//! Because the Haar basis is orthonormal, the `L`-level approximation
//! coefficient of a `2^L`x`2^L` block is `2^L` times the block mean, and
//! the detail coefficients covering the block carry exactly its variance
//! (and, for a pair, its covariance):
//!
//! ```text
//! mu(i,j)    = 2^-L  A_L(i,j)
//! var(i,j)   = 2^-2L sum_k sum_{(m,n) in P_k(i,j)} sum_{C in H,V,D} C_k(m,n)^2
//! cov(i,j)   = 2^-2L sum_k sum_{(m,n) in P_k(i,j)} sum_{C in H,V,D} Cx_k(m,n) Cy_k(m,n)
//! ```
//!
//! where `P_k(i,j)` is the `2^(L-k)`x`2^(L-k)` set of level-`k` positions
//! inside block `(i,j)`.

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::scalar::Real;
use crate::transform::{Wavelet, WaveletPyramid};

/// Block statistics over disjoint `2^L`x`2^L` blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalStats<T> {
    pub mu_x: Plane<T>,
    pub mu_y: Plane<T>,
    pub var_x: Plane<T>,
    pub var_y: Plane<T>,
    pub cov_xy: Plane<T>,
}

impl<T: Real> LocalStats<T> {
    pub fn dims(&self) -> (usize, usize) {
        self.mu_x.dims()
    }
}

/// SSIM stabilizing constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimConsts {
    pub c1: f64,
    pub c2: f64,
}

impl Default for SsimConsts {
    /// `(0.01 * 255)^2` and `(0.03 * 255)^2`.
    fn default() -> Self {
        Self {
            c1: (0.01f64 * 255.0).powi(2),
            c2: (0.03f64 * 255.0).powi(2),
        }
    }
}

pub fn wd_local_stats<T: Real>(
    pyr_x: &WaveletPyramid<T>,
    pyr_y: &WaveletPyramid<T>,
    levels: usize,
) -> Result<LocalStats<T>> {
    if pyr_x.wavelet() != Wavelet::Haar || pyr_y.wavelet() != Wavelet::Haar {
        return Err(Error::InvalidArgument(
            "wavelet-domain statistics require a Haar pyramid".into(),
        ));
    }
    if levels == 0 || levels > pyr_x.levels() || levels > pyr_y.levels() {
        return Err(Error::InvalidArgument(format!(
            "requested {levels} levels from pyramids with {} and {}",
            pyr_x.levels(),
            pyr_y.levels()
        )));
    }
    if pyr_x.input_dims() != pyr_y.input_dims() {
        return Err(Error::DimensionMismatch(format!(
            "pyramids over {:?} and {:?}",
            pyr_x.input_dims(),
            pyr_y.input_dims()
        )));
    }

    let ax = pyr_x.approx_at(levels);
    let ay = pyr_y.approx_at(levels);
    let (w, h) = ax.dims();
    let mean_scale = T::lit(0.5f64.powi(levels as i32));
    let mut var_x = Plane::<T>::new(w, h);
    let mut var_y = Plane::<T>::new(w, h);
    let mut cov_xy = Plane::<T>::new(w, h);

    for k in 1..=levels {
        let span = 1usize << (levels - k);
        let (sx, sy) = (pyr_x.level(k), pyr_y.level(k));
        let (bw, bh) = sx.dims();
        for (cx, cy) in sx.bands().into_iter().zip(sy.bands()) {
            for m in 0..bh {
                let i = m / span;
                if i >= h {
                    break;
                }
                let (rx, ry) = (cx.row(m), cy.row(m));
                for n in 0..bw {
                    let j = n / span;
                    if j >= w {
                        break;
                    }
                    let (a, b) = (rx[n], ry[n]);
                    var_x[(i, j)] += a * a;
                    var_y[(i, j)] += b * b;
                    cov_xy[(i, j)] += a * b;
                }
            }
        }
    }
    let second_scale = mean_scale * mean_scale;
    Ok(LocalStats {
        mu_x: ax.scale(mean_scale),
        mu_y: ay.scale(mean_scale),
        var_x: var_x.scale(second_scale),
        var_y: var_y.scale(second_scale),
        cov_xy: cov_xy.scale(second_scale),
    })
}

/// Per-block SSIM map.
pub fn ssim_map<T: Real>(stats: &LocalStats<T>, c: SsimConsts) -> Plane<f64> {
    let (c1, c2) = (c.c1, c.c2);
    let n = stats.mu_x.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mx = stats.mu_x.as_slice()[i].as_f64();
        let my = stats.mu_y.as_slice()[i].as_f64();
        let vx = stats.var_x.as_slice()[i].as_f64();
        let vy = stats.var_y.as_slice()[i].as_f64();
        let cxy = stats.cov_xy.as_slice()[i].as_f64();
        out.push(
            ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)),
        );
    }
    let (w, h) = stats.dims();
    Plane::from_vec(w, h, out).expect("map has stats dimensions")
}

/// Mean-pooled wavelet-domain SSIM.
pub fn wd_ssim<T: Real>(stats: &LocalStats<T>, c: SsimConsts) -> f64 {
    ssim_map(stats, c).mean()
}

/// Coefficient-of-variation pooling result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovPooled {
    pub value: f64,
    /// The map mean was zero; `value` is 0 by convention.
    pub zero_mean: bool,
}

/// `std / mean` of a quality map (population standard deviation).
pub fn cov_pool(values: &[f64]) -> CovPooled {
    if values.is_empty() {
        return CovPooled {
            value: 0.0,
            zero_mean: true,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        log::warn!("coefficient-of-variation pooling over a zero-mean map");
        return CovPooled {
            value: 0.0,
            zero_mean: true,
        };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    CovPooled {
        value: var.sqrt() / mean,
        zero_mean: false,
    }
}

/// Wavelet-domain ESSIM: CoV pooling of the SSIM map. Higher means more
/// spatially uneven quality.
pub fn wd_essim<T: Real>(stats: &LocalStats<T>, c: SsimConsts) -> CovPooled {
    cov_pool(ssim_map(stats, c).as_slice())
}
