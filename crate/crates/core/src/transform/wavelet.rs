//! Orthonormal 2-D wavelet analysis (Haar and Daubechies-2).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::scalar::Real;

pub const MAX_LEVELS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Wavelet {
    Haar,
    Db2,
}

impl Wavelet {
    /// Analysis filter length.
    pub fn taps(self) -> usize {
        match self {
            Wavelet::Haar => 2,
            Wavelet::Db2 => 4,
        }
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(Wavelet::Haar),
            "db2" => Ok(Wavelet::Db2),
            other => Err(Error::Config(format!(
                "unknown wavelet '{other}' (haar, db2)"
            ))),
        }
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wavelet::Haar => "haar",
            Wavelet::Db2 => "db2",
        })
    }
}

/// Detail subbands of one decomposition level.
///
/// `h` is lowpass along rows and highpass along columns (horizontal
/// edges), `v` the converse, `d` highpass in both directions.
#[derive(Clone, Debug, PartialEq)]
pub struct SubbandSet<T> {
    pub h: Plane<T>,
    pub v: Plane<T>,
    pub d: Plane<T>,
}

impl<T: Real> SubbandSet<T> {
    pub fn dims(&self) -> (usize, usize) {
        self.h.dims()
    }

    pub fn bands(&self) -> [&Plane<T>; 3] {
        [&self.h, &self.v, &self.d]
    }

    pub fn map_bands(&self, mut f: impl FnMut(usize, &Plane<T>) -> Plane<T>) -> SubbandSet<T> {
        SubbandSet {
            h: f(0, &self.h),
            v: f(1, &self.v),
            d: f(2, &self.d),
        }
    }

    pub fn energy(&self) -> f64 {
        self.h.energy() + self.v.energy() + self.d.energy()
    }
}

/// Multi-level decomposition: detail subbands for levels `1..=L` and the
/// approximation band at every level (the last one is `A_L`).
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletPyramid<T> {
    wavelet: Wavelet,
    input_dims: (usize, usize),
    details: Vec<SubbandSet<T>>,
    approximations: Vec<Plane<T>>,
}

impl<T: Real> WaveletPyramid<T> {
    pub(crate) fn from_parts(
        wavelet: Wavelet,
        input_dims: (usize, usize),
        details: Vec<SubbandSet<T>>,
        approximations: Vec<Plane<T>>,
    ) -> Self {
        debug_assert_eq!(details.len(), approximations.len());
        Self {
            wavelet,
            input_dims,
            details,
            approximations,
        }
    }

    pub fn wavelet(&self) -> Wavelet {
        self.wavelet
    }

    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Dimensions of the plane that was decomposed.
    pub fn input_dims(&self) -> (usize, usize) {
        self.input_dims
    }

    /// Detail subbands at `level` (1-based).
    pub fn level(&self, level: usize) -> &SubbandSet<T> {
        &self.details[level - 1]
    }

    pub fn details(&self) -> &[SubbandSet<T>] {
        &self.details
    }

    /// Residual approximation band `A_L`.
    pub fn approx(&self) -> &Plane<T> {
        self.approximations
            .last()
            .expect("pyramid has at least one level")
    }

    /// Approximation band at `level` (1-based).
    pub fn approx_at(&self, level: usize) -> &Plane<T> {
        &self.approximations[level - 1]
    }

    pub fn approximations(&self) -> &[Plane<T>] {
        &self.approximations
    }

    /// Multiplies each detail subband by `weight(level, band)`; the
    /// approximation bands are left untouched.
    pub fn scale_details(&self, weight: impl Fn(usize, usize) -> T) -> WaveletPyramid<T> {
        let details = self
            .details
            .iter()
            .enumerate()
            .map(|(k, set)| set.map_bands(|b, p| p.scale(weight(k + 1, b))))
            .collect();
        WaveletPyramid {
            wavelet: self.wavelet,
            input_dims: self.input_dims,
            details,
            approximations: self.approximations.clone(),
        }
    }

    /// Energy of `A_L` plus every detail subband.
    pub fn energy(&self) -> f64 {
        self.approx().energy() + self.details.iter().map(SubbandSet::energy).sum::<f64>()
    }
}

/// One analysis step. Odd dimensions are padded by edge replication, so
/// the outputs are `ceil(w/2)` x `ceil(h/2)`.
pub fn analyze_level<T: Real>(plane: &Plane<T>, wavelet: Wavelet) -> (Plane<T>, SubbandSet<T>) {
    let (w, h) = plane.dims();
    let padded = plane.pad_replicate(w + w % 2, h + h % 2);
    match wavelet {
        Wavelet::Haar => haar_level(&padded),
        Wavelet::Db2 => db2_level(&padded),
    }
}

fn haar_level<T: Real>(p: &Plane<T>) -> (Plane<T>, SubbandSet<T>) {
    let (ow, oh) = (p.width() / 2, p.height() / 2);
    let half = T::lit(0.5);
    let mut a = Plane::new(ow, oh);
    let mut hb = Plane::new(ow, oh);
    let mut vb = Plane::new(ow, oh);
    let mut db = Plane::new(ow, oh);
    for r in 0..oh {
        let top = p.row(2 * r);
        let bot = p.row(2 * r + 1);
        for c in 0..ow {
            let (tl, tr) = (top[2 * c], top[2 * c + 1]);
            let (bl, br) = (bot[2 * c], bot[2 * c + 1]);
            a[(r, c)] = (tl + tr + bl + br) * half;
            hb[(r, c)] = (tl + tr - bl - br) * half;
            vb[(r, c)] = (tl - tr + bl - br) * half;
            db[(r, c)] = (tl - tr - bl + br) * half;
        }
    }
    (
        a,
        SubbandSet {
            h: hb,
            v: vb,
            d: db,
        },
    )
}

fn db2_filters() -> ([f64; 4], [f64; 4]) {
    let s3 = 3f64.sqrt();
    let norm = 4.0 * 2f64.sqrt();
    let lo = [
        (1.0 + s3) / norm,
        (3.0 + s3) / norm,
        (3.0 - s3) / norm,
        (1.0 - s3) / norm,
    ];
    let hi = [lo[3], -lo[2], lo[1], -lo[0]];
    (lo, hi)
}

/// Half-sample symmetric extension: `x[-1] = x[0]`, `x[n] = x[n-1]`.
#[inline]
fn sym(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

/// Filters and decimates a 1-D signal of even length `n` into `n/2` low
/// and `n/2` high coefficients.
fn db2_1d<T: Real>(x: &[T], lo: &[T; 4], hi: &[T; 4], out_lo: &mut [T], out_hi: &mut [T]) {
    let n = x.len();
    for i in 0..n / 2 {
        let (mut a, mut d) = (T::zero(), T::zero());
        for k in 0..4 {
            let s = x[sym(2 * i as isize + k as isize - 1, n)];
            a += lo[k] * s;
            d += hi[k] * s;
        }
        out_lo[i] = a;
        out_hi[i] = d;
    }
}

fn db2_level<T: Real>(p: &Plane<T>) -> (Plane<T>, SubbandSet<T>) {
    let (lo64, hi64) = db2_filters();
    let lo = lo64.map(T::lit);
    let hi = hi64.map(T::lit);
    let (w, h) = p.dims();
    let (ow, oh) = (w / 2, h / 2);

    // rows: horizontal lowpass / highpass
    let mut row_lo = Plane::new(ow, h);
    let mut row_hi = Plane::new(ow, h);
    for r in 0..h {
        let (mut l, mut hh) = (vec![T::zero(); ow], vec![T::zero(); ow]);
        db2_1d(p.row(r), &lo, &hi, &mut l, &mut hh);
        row_lo.row_mut(r).copy_from_slice(&l);
        row_hi.row_mut(r).copy_from_slice(&hh);
    }

    let columns = |src: &Plane<T>| -> (Plane<T>, Plane<T>) {
        let mut out_lo = Plane::new(ow, oh);
        let mut out_hi = Plane::new(ow, oh);
        let mut col = vec![T::zero(); h];
        let (mut l, mut hh) = (vec![T::zero(); oh], vec![T::zero(); oh]);
        for c in 0..ow {
            for (r, v) in col.iter_mut().enumerate() {
                *v = src[(r, c)];
            }
            db2_1d(&col, &lo, &hi, &mut l, &mut hh);
            for r in 0..oh {
                out_lo[(r, c)] = l[r];
                out_hi[(r, c)] = hh[r];
            }
        }
        (out_lo, out_hi)
    };
    let (a, hb) = columns(&row_lo);
    let (vb, db) = columns(&row_hi);
    (
        a,
        SubbandSet {
            h: hb,
            v: vb,
            d: db,
        },
    )
}

/// `levels`-level decomposition, each level recursing on the previous
/// approximation band.
pub fn wavelet_pyramid<T: Real>(
    plane: &Plane<T>,
    wavelet: Wavelet,
    levels: usize,
) -> Result<WaveletPyramid<T>> {
    if !(1..=MAX_LEVELS).contains(&levels) {
        return Err(Error::Config(format!(
            "wavelet levels must be in 1..={MAX_LEVELS}, got {levels}"
        )));
    }
    let (w, h) = plane.dims();
    if w < 1 << levels || h < 1 << levels {
        return Err(Error::InvalidArgument(format!(
            "{w}x{h} plane is too small for {levels} wavelet levels"
        )));
    }
    let mut details = Vec::with_capacity(levels);
    let mut approximations = Vec::with_capacity(levels);
    let mut current = plane.clone();
    for _ in 0..levels {
        let (a, set) = analyze_level(&current, wavelet);
        details.push(set);
        approximations.push(a.clone());
        current = a;
    }
    Ok(WaveletPyramid::from_parts(
        wavelet,
        (w, h),
        details,
        approximations,
    ))
}

/// Inverse of one Haar step (the transpose of the analysis matrix).
pub fn haar_synthesis<T: Real>(approx: &Plane<T>, bands: &SubbandSet<T>) -> Result<Plane<T>> {
    approx.check_same_dims(&bands.h)?;
    approx.check_same_dims(&bands.v)?;
    approx.check_same_dims(&bands.d)?;
    let (w, h) = approx.dims();
    let half = T::lit(0.5);
    let mut out = Plane::new(2 * w, 2 * h);
    for r in 0..h {
        for c in 0..w {
            let (a, hh, v, d) = (
                approx[(r, c)],
                bands.h[(r, c)],
                bands.v[(r, c)],
                bands.d[(r, c)],
            );
            out[(2 * r, 2 * c)] = (a + hh + v + d) * half;
            out[(2 * r, 2 * c + 1)] = (a + hh - v - d) * half;
            out[(2 * r + 1, 2 * c)] = (a - hh + v - d) * half;
            out[(2 * r + 1, 2 * c + 1)] = (a - hh - v + d) * half;
        }
    }
    Ok(out)
}

/// Reconstructs the input of a Haar pyramid, cropping any replication
/// padding.
pub fn reconstruct<T: Real>(pyr: &WaveletPyramid<T>) -> Result<Plane<T>> {
    if pyr.wavelet() != Wavelet::Haar {
        return Err(Error::InvalidArgument(
            "synthesis is only provided for Haar".into(),
        ));
    }
    let mut dims = vec![pyr.input_dims()];
    for k in 1..pyr.levels() {
        dims.push(pyr.approx_at(k).dims());
    }
    let mut current = pyr.approx().clone();
    for k in (1..=pyr.levels()).rev() {
        let full = haar_synthesis(&current, pyr.level(k))?;
        let (w, h) = dims[k - 1];
        current = full.crop(0, 0, w, h);
    }
    Ok(current)
}
