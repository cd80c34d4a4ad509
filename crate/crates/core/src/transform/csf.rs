//! Contrast sensitivity function and the two pre-wavelet ways of applying
//! it: a separable 21-tap spatial filter and an exact frequency-domain
//! multiplication.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::plane::{reflect, Plane};
use crate::scalar::Real;

/// Number of taps in the spatial CSF kernel.
pub const CSF_TAPS: usize = 21;
const HALF: usize = CSF_TAPS / 2;

/// Size of the dense frequency grid the spatial kernel is derived from.
pub const CSF_GRID: usize = 1024;

/// Contrast sensitivity at `f` cycles/degree: `(0.31 + 0.69 f) e^(-0.29 f)`.
pub fn csf_value(f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "spatial frequency must be non-negative, got {f}"
        )));
    }
    Ok(csf(f))
}

#[inline]
pub(crate) fn csf(f: f64) -> f64 {
    (0.31 + 0.69 * f) * (-0.29 * f).exp()
}

/// Symmetric 21-tap spatial CSF filter.
#[derive(Clone, Debug, PartialEq)]
pub struct CsfKernel {
    taps: [f64; CSF_TAPS],
}

impl CsfKernel {
    pub fn taps(&self) -> &[f64; CSF_TAPS] {
        &self.taps
    }

    pub fn dc_gain(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// 1-D frequency response at `u` cycles/pixel.
    pub fn response(&self, u: f64) -> f64 {
        self.taps
            .iter()
            .enumerate()
            .map(|(i, &t)| t * (std::f64::consts::TAU * u * (i as f64 - HALF as f64)).cos())
            .sum()
    }
}

/// Derives the spatial CSF kernel for a display with `ppd` pixels per
/// degree.
///
/// The CSF is sampled at `|u| * ppd` on a uniform grid of [`CSF_GRID`]
/// digital frequencies spanning `[-0.5, 0.5)` cycles/pixel, inverse
/// transformed, centered and truncated to 21 taps. Truncation leaves the
/// DC gain well above `CSF(0)` (the CSF has a kink at the origin), so a
/// uniform offset is then removed from every tap to pin the DC gain to
/// exactly `CSF(0) = 0.31`. A uniform offset is the smallest L2 change to
/// the taps that satisfies that constraint.
pub fn build_spatial_csf_kernel(ppd: f64) -> Result<CsfKernel> {
    if !(ppd > 0.0) || !ppd.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "pixels per degree must be positive, got {ppd}"
        )));
    }
    let n = CSF_GRID as f64;
    let response: Vec<(f64, f64)> = (0..CSF_GRID)
        .map(|k| {
            let u = (k as f64 - n / 2.0) / n;
            (u, csf(u.abs() * ppd))
        })
        .collect();

    let mut taps = [0.0; CSF_TAPS];
    for (i, tap) in taps.iter_mut().enumerate() {
        let m = i as f64 - HALF as f64;
        // the sampled response is real and even, so the inverse DFT is a
        // cosine sum
        *tap = response
            .iter()
            .map(|&(u, h)| h * (std::f64::consts::TAU * u * m).cos())
            .sum::<f64>()
            / n;
    }
    for i in 0..HALF {
        let avg = 0.5 * (taps[i] + taps[CSF_TAPS - 1 - i]);
        taps[i] = avg;
        taps[CSF_TAPS - 1 - i] = avg;
    }
    let excess = (taps.iter().sum::<f64>() - csf(0.0)) / CSF_TAPS as f64;
    for t in &mut taps {
        *t -= excess;
    }
    Ok(CsfKernel { taps })
}

/// Separable convolution with the spatial CSF kernel, rows then columns,
/// with mirror extension at the borders.
pub fn apply_spatial_csf<T: Real>(plane: &Plane<T>, kernel: &CsfKernel) -> Result<Plane<T>> {
    let (w, h) = plane.dims();
    if w < CSF_TAPS || h < CSF_TAPS {
        return Err(Error::InvalidArgument(format!(
            "plane {w}x{h} is smaller than the {CSF_TAPS}-tap CSF kernel"
        )));
    }
    let taps: Vec<T> = kernel.taps.iter().map(|&t| T::lit(t)).collect();
    let rows = convolve_rows(plane, &taps);
    Ok(convolve_cols(&rows, &taps))
}

pub(crate) fn convolve_rows<T: Real>(plane: &Plane<T>, taps: &[T]) -> Plane<T> {
    let (w, h) = plane.dims();
    let half = (taps.len() / 2) as isize;
    let mut out = Plane::new(w, h);
    let mut ext = vec![T::zero(); w + 2 * half as usize];
    for r in 0..h {
        let row = plane.row(r);
        for (i, e) in ext.iter_mut().enumerate() {
            *e = row[reflect(i as isize - half, w)];
        }
        for (c, o) in out.row_mut(r).iter_mut().enumerate() {
            let mut acc = T::zero();
            for (k, &t) in taps.iter().enumerate() {
                acc += t * ext[c + k];
            }
            *o = acc;
        }
    }
    out
}

pub(crate) fn convolve_cols<T: Real>(plane: &Plane<T>, taps: &[T]) -> Plane<T> {
    let (w, h) = plane.dims();
    let half = (taps.len() / 2) as isize;
    let mut out = Plane::new(w, h);
    for r in 0..h {
        for (k, &t) in taps.iter().enumerate() {
            let src = plane.row(reflect(r as isize + k as isize - half, h));
            for (o, &s) in out.row_mut(r).iter_mut().zip(src) {
                *o += t * s;
            }
        }
    }
    out
}

/// Digital frequency, in cycles/pixel, of DFT bin `k` out of `n`.
#[inline]
fn bin_frequency(k: usize, n: usize) -> f64 {
    let k = if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    };
    k / n as f64
}

/// Multiplies the plane's 2-D spectrum by `CSF(|u_h| ppd) * CSF(|u_v| ppd)`.
pub fn apply_frequency_csf<T: Real>(plane: &Plane<T>, ppd: f64) -> Result<Plane<T>> {
    Ok(frequency_csf_with_residue(plane, ppd)?.0)
}

/// Frequency-domain CSF; also returns the discarded imaginary energy
/// relative to the output energy.
pub(crate) fn frequency_csf_with_residue<T: Real>(
    plane: &Plane<T>,
    ppd: f64,
) -> Result<(Plane<T>, f64)> {
    if !(ppd > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pixels per degree must be positive, got {ppd}"
        )));
    }
    let (w, h) = plane.dims();
    if w == 0 || h == 0 {
        return Err(Error::InvalidArgument("empty plane".into()));
    }
    let mut planner = FftPlanner::<f64>::new();
    let (fw, fh) = (planner.plan_fft_forward(w), planner.plan_fft_forward(h));
    let (iw, ih) = (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h));

    let mut buf: Vec<Complex<f64>> = plane
        .as_slice()
        .iter()
        .map(|v| Complex::new(v.as_f64(), 0.0))
        .collect();
    fw.process(&mut buf);
    let mut cols = transpose(&buf, w, h);
    fh.process(&mut cols);

    let gain_h: Vec<f64> = (0..w)
        .map(|k| csf(bin_frequency(k, w).abs() * ppd))
        .collect();
    let gain_v: Vec<f64> = (0..h)
        .map(|k| csf(bin_frequency(k, h).abs() * ppd))
        .collect();
    // `cols` is laid out as w rows of length h
    for (c, col) in cols.chunks_exact_mut(h).enumerate() {
        for (r, z) in col.iter_mut().enumerate() {
            *z *= gain_h[c] * gain_v[r];
        }
    }

    ih.process(&mut cols);
    let mut buf = transpose(&cols, h, w);
    iw.process(&mut buf);

    let scale = 1.0 / (w * h) as f64;
    let (mut re2, mut im2) = (0.0, 0.0);
    let samples: Vec<T> = buf
        .iter()
        .map(|z| {
            re2 += z.re * z.re;
            im2 += z.im * z.im;
            T::lit(z.re * scale)
        })
        .collect();
    let residue = if re2 > 0.0 {
        (im2 / re2).sqrt()
    } else {
        im2.sqrt() * scale
    };
    debug_assert!(residue < 1e-9, "imaginary residue {residue}");
    Ok((Plane::from_vec(w, h, samples)?, residue))
}

fn transpose(src: &[Complex<f64>], w: usize, h: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::new(0.0, 0.0); w * h];
    for r in 0..h {
        for c in 0..w {
            out[c * h + r] = src[r * w + c];
        }
    }
    out
}
