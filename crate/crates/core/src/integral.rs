//! Summed-area tables and windowed moments.
//!
//! An integral image over an `H`x`W` source has `(H+1)x(W+1)` entries where
//! entry `(i, j)` holds the sum of the source over rows `< i` and columns
//! `< j`. The first row and column are zero. Any rectangular sum then costs
//! four lookups. Tables always accumulate in `f64`.

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<f64>,
}

impl IntegralImage {
    fn from_samples(width: usize, height: usize, sample: impl Fn(usize) -> f64) -> Self {
        let stride = width + 1;
        let mut table = vec![0.0; stride * (height + 1)];
        for r in 0..height {
            let mut run = 0.0;
            for c in 0..width {
                run += sample(r * width + c);
                table[(r + 1) * stride + c + 1] = table[r * stride + c + 1] + run;
            }
        }
        Self {
            width,
            height,
            table,
        }
    }

    /// Source dimensions `(width, height)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Table entry `(i, j)` with `i <= height`, `j <= width`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.table[i * (self.width + 1) + j]
    }

    /// Sum over the `h`x`w` window whose top-left source sample is
    /// `(top, left)`.
    pub fn box_sum(&self, top: usize, left: usize, h: usize, w: usize) -> Result<f64> {
        if top + h > self.height || left + w > self.width {
            return Err(Error::InvalidArgument(format!(
                "window {h}x{w} at ({top}, {left}) exceeds {}x{} source",
                self.height, self.width
            )));
        }
        Ok(self.box_sum_unchecked(top, left, h, w))
    }

    #[inline]
    pub(crate) fn box_sum_unchecked(&self, top: usize, left: usize, h: usize, w: usize) -> f64 {
        let s = self.width + 1;
        let t = &self.table;
        t[(top + h) * s + left + w] - t[top * s + left + w] - t[(top + h) * s + left]
            + t[top * s + left]
    }
}

pub fn build_integral<T: Real>(plane: &Plane<T>) -> IntegralImage {
    let d = plane.as_slice();
    IntegralImage::from_samples(plane.width(), plane.height(), |i| d[i].as_f64())
}

pub fn build_integral_squared<T: Real>(plane: &Plane<T>) -> IntegralImage {
    let d = plane.as_slice();
    IntegralImage::from_samples(plane.width(), plane.height(), |i| {
        let v = d[i].as_f64();
        v * v
    })
}

/// Integral image of the element-wise product `x * y`.
pub fn build_integral_product<T: Real>(x: &Plane<T>, y: &Plane<T>) -> Result<IntegralImage> {
    x.check_same_dims(y)?;
    let (a, b) = (x.as_slice(), y.as_slice());
    Ok(IntegralImage::from_samples(x.width(), x.height(), |i| {
        a[i].as_f64() * b[i].as_f64()
    }))
}

/// Per-window first and second moments of a signal pair.
///
/// Map entry `(r, c)` describes the window with top-left sample
/// `(r * stride, c * stride)`.
#[derive(Clone, Debug)]
pub struct MomentMaps {
    pub mu_x: Plane<f64>,
    pub mu_y: Plane<f64>,
    pub var_x: Plane<f64>,
    pub var_y: Plane<f64>,
    pub cov_xy: Plane<f64>,
    pub window: usize,
    pub stride: usize,
}

/// Computes local means, variances and covariance over every
/// `win`x`win` window placed at multiples of `stride`, using integral
/// images instead of convolution.
///
/// Inputs are centered on their global means before the tables are built,
/// which keeps the `E[x^2] - E[x]^2` cancellation small. Variances are
/// floored at zero and the covariance is clamped to the Cauchy-Schwarz
/// bound.
pub fn windowed_moments<T: Real>(
    x: &Plane<T>,
    y: &Plane<T>,
    win: usize,
    stride: usize,
) -> Result<MomentMaps> {
    x.check_same_dims(y)?;
    let (w, h) = x.dims();
    if win == 0 || stride == 0 {
        return Err(Error::InvalidArgument(
            "window and stride must be positive".into(),
        ));
    }
    if win > w || win > h {
        return Err(Error::InvalidArgument(format!(
            "window {win} larger than {w}x{h} input"
        )));
    }
    let (mx, my) = (x.mean(), y.mean());
    let xc = x.map(|v| v.as_f64() - mx);
    let yc = y.map(|v| v.as_f64() - my);
    let ix = build_integral(&xc);
    let iy = build_integral(&yc);
    let ixx = build_integral_squared(&xc);
    let iyy = build_integral_squared(&yc);
    let ixy = build_integral_product(&xc, &yc)?;

    let out_w = (w - win) / stride + 1;
    let out_h = (h - win) / stride + 1;
    let n = (win * win) as f64;
    let mut maps = MomentMaps {
        mu_x: Plane::new(out_w, out_h),
        mu_y: Plane::new(out_w, out_h),
        var_x: Plane::new(out_w, out_h),
        var_y: Plane::new(out_w, out_h),
        cov_xy: Plane::new(out_w, out_h),
        window: win,
        stride,
    };
    for r in 0..out_h {
        for c in 0..out_w {
            let (t, l) = (r * stride, c * stride);
            let ex = ix.box_sum_unchecked(t, l, win, win) / n;
            let ey = iy.box_sum_unchecked(t, l, win, win) / n;
            let vx = (ixx.box_sum_unchecked(t, l, win, win) / n - ex * ex).max(0.0);
            let vy = (iyy.box_sum_unchecked(t, l, win, win) / n - ey * ey).max(0.0);
            let bound = (vx * vy).sqrt();
            let cxy = (ixy.box_sum_unchecked(t, l, win, win) / n - ex * ey).clamp(-bound, bound);
            maps.mu_x[(r, c)] = ex + mx;
            maps.mu_y[(r, c)] = ey + my;
            maps.var_x[(r, c)] = vx;
            maps.var_y[(r, c)] = vy;
            maps.cov_xy[(r, c)] = cxy;
        }
    }
    Ok(maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_plane(w: usize, h: usize, seed: u64) -> Plane<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Plane::from_fn(w, h, |_, _| rng.random_range(0.0..255.0))
    }

    fn naive_sum(p: &Plane<f64>, t: usize, l: usize, h: usize, w: usize) -> f64 {
        let mut s = 0.0;
        for r in t..t + h {
            for c in l..l + w {
                s += p[(r, c)];
            }
        }
        s
    }

    #[test]
    fn single_sample_table() {
        let ii = build_integral(&Plane::from_vec(1, 1, vec![3.5f64]).unwrap());
        assert_eq!(ii.table, vec![0.0, 0.0, 0.0, 3.5]);
        assert_eq!(ii.box_sum(0, 0, 1, 1).unwrap(), 3.5);
    }

    #[test]
    fn ones_full_extent() {
        let ii = build_integral(&Plane::filled(3, 3, 1.0f64));
        assert_eq!(ii.box_sum(0, 0, 3, 3).unwrap(), 9.0);
        assert!(ii.box_sum(1, 1, 3, 1).is_err());
    }

    #[test]
    fn zero_plane_any_window() {
        let ii = build_integral(&Plane::<f64>::new(10, 7));
        assert_eq!(ii.box_sum(2, 3, 4, 5).unwrap(), 0.0);
    }

    #[test]
    fn unit_window_returns_sample() {
        let p = random_plane(9, 5, 3);
        let ii = build_integral(&p);
        for r in 0..5 {
            for c in 0..9 {
                assert!((ii.box_sum(r, c, 1, 1).unwrap() - p[(r, c)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn all_3x3_boxes_match_naive_on_integers() {
        // integer-valued samples: every partial sum is exact in f64
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = Plane::from_fn(16, 16, |_, _| rng.random_range(0..256) as f64);
        let ii = build_integral(&p);
        for t in 0..14 {
            for l in 0..14 {
                assert_eq!(ii.box_sum(t, l, 3, 3).unwrap(), naive_sum(&p, t, l, 3, 3));
            }
        }
    }

    #[test]
    fn strided_9x9_sums() {
        let p = random_plane(64, 64, 5);
        let ii = build_integral(&p);
        for t in (0..=55).step_by(4) {
            for l in (0..=55).step_by(4) {
                let want = naive_sum(&p, t, l, 9, 9);
                assert!((ii.box_sum(t, l, 9, 9).unwrap() - want).abs() <= 1e-9 * want.abs());
            }
        }
    }

    #[test]
    fn product_dimension_mismatch() {
        assert!(build_integral_product(&Plane::<f64>::new(3, 3), &Plane::new(3, 4)).is_err());
        assert!(windowed_moments(&Plane::<f64>::new(3, 3), &Plane::new(4, 3), 2, 1).is_err());
    }

    #[test]
    fn self_pair_moments_coincide() {
        let p = random_plane(20, 20, 9);
        let m = windowed_moments(&p, &p, 5, 2).unwrap();
        assert_eq!(m.var_x, m.var_y);
        assert_eq!(m.cov_xy, m.var_x);
    }

    #[test]
    fn constant_windows() {
        let p = Plane::filled(12, 12, 42.0f64);
        let m = windowed_moments(&p, &p, 4, 1).unwrap();
        assert!(m.var_x.as_slice().iter().all(|&v| v == 0.0));
        assert!(m.mu_x.as_slice().iter().all(|&v| (v - 42.0).abs() < 1e-12));
    }

    #[test]
    fn moments_match_naive() {
        let x = random_plane(30, 24, 1);
        let y = random_plane(30, 24, 2);
        let m = windowed_moments(&x, &y, 9, 1).unwrap();
        assert_eq!(m.var_x.dims(), (22, 16));
        for r in 0..16 {
            for c in 0..22 {
                let n = 81.0;
                let mx = naive_sum(&x, r, c, 9, 9) / n;
                let my = naive_sum(&y, r, c, 9, 9) / n;
                let (mut vx, mut cxy) = (0.0, 0.0);
                for i in r..r + 9 {
                    for j in c..c + 9 {
                        vx += (x[(i, j)] - mx).powi(2);
                        cxy += (x[(i, j)] - mx) * (y[(i, j)] - my);
                    }
                }
                vx /= n;
                cxy /= n;
                assert!((m.mu_x[(r, c)] - mx).abs() <= 1e-9 * mx.abs());
                assert!((m.var_x[(r, c)] - vx).abs() <= 1e-6 * vx.abs());
                assert!(
                    (m.cov_xy[(r, c)] - cxy).abs()
                        <= 1e-6 * (m.var_x[(r, c)] * m.var_y[(r, c)]).sqrt()
                );
            }
        }
    }

    proptest! {
        #[test]
        fn box_sum_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let x = random_plane(12, 10, seed);
            let y = random_plane(12, 10, seed + 7777);
            let z = x.zip_map(&y, |p, q| a * p + b * q).unwrap();
            let (ix, iy, iz) = (build_integral(&x), build_integral(&y), build_integral(&z));
            let lhs = iz.box_sum(2, 3, 5, 6).unwrap();
            let rhs = a * ix.box_sum(2, 3, 5, 6).unwrap() + b * iy.box_sum(2, 3, 5, 6).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn moment_bounds(seed in 0u64..1000, win in 1usize..6, stride in 1usize..4) {
            let x = random_plane(11, 9, seed);
            let y = random_plane(11, 9, seed ^ 0xABCD).map(|v| 0.5 * v + 3.0);
            let m = windowed_moments(&x, &y, win, stride).unwrap();
            for i in 0..m.var_x.len() {
                let (vx, vy, c) = (m.var_x.as_slice()[i], m.var_y.as_slice()[i], m.cov_xy.as_slice()[i]);
                prop_assert!(vx >= 0.0 && vy >= 0.0);
                prop_assert!(c.abs() <= (vx * vy).sqrt() + 1e-9);
            }
        }
    }
}
