//! Detail loss metric.
//!
//! The distorted pyramid is split into a restored part `R` (the reference
//! scaled by a per-coefficient gain in `[0, 1]`) and an additive part
//! `A = dis - R`. The additive part then masks the restored part, and the
//! score is the pooled masked restoration over the pooled reference.

use crate::error::{Error, Result};
use crate::integral::build_integral;
use crate::plane::Plane;
use crate::scalar::Real;
use crate::transform::{SubbandSet, SubbandWeights, WaveletPyramid};

/// `cos(1 deg)^2`
const COS_1DEG_SQ: f64 = 0.999_695_413_509_547_9;

/// Masking kernel `alpha * ones(3x3) + beta * delta`, divided by `divisor`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskingKernel {
    pub alpha: f64,
    pub beta: f64,
    pub divisor: f64,
}

impl Default for MaskingKernel {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            divisor: 30.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DlmParams {
    pub kernel: MaskingKernel,
    /// Fraction of each side dropped before pooling.
    pub border: f64,
    pub minkowski: f64,
}

impl Default for DlmParams {
    fn default() -> Self {
        Self {
            kernel: MaskingKernel::default(),
            border: 0.1,
            minkowski: 3.0,
        }
    }
}

/// Decoupled (and optionally masked) detail subbands, one set per level.
#[derive(Clone, Debug, PartialEq)]
pub struct DlmIntermediate<T> {
    pub restored: Vec<SubbandSet<T>>,
    pub additive: Vec<SubbandSet<T>>,
    /// `max(|R| - threshold, 0)`; empty until masking has run.
    pub masked_restored: Vec<SubbandSet<T>>,
}

fn check_geometry<T: Real>(a: &WaveletPyramid<T>, b: &WaveletPyramid<T>) -> Result<()> {
    if a.levels() != b.levels() || a.input_dims() != b.input_dims() || a.wavelet() != b.wavelet() {
        return Err(Error::DimensionMismatch(format!(
            "pyramids differ: {} level {} over {:?} vs {} level {} over {:?}",
            a.levels(),
            a.wavelet(),
            a.input_dims(),
            b.levels(),
            b.wavelet(),
            b.input_dims()
        )));
    }
    Ok(())
}

fn decouple_level<T: Real>(r: &SubbandSet<T>, d: &SubbandSet<T>) -> (SubbandSet<T>, SubbandSet<T>) {
    let (w, h) = r.dims();
    let zero = T::zero();
    let mut rest = [Plane::new(w, h), Plane::new(w, h), Plane::new(w, h)];
    let mut add = [Plane::new(w, h), Plane::new(w, h), Plane::new(w, h)];
    let refs = r.bands();
    let dis = d.bands();
    let cos_sq = T::lit(COS_1DEG_SQ);
    for i in 0..w * h {
        let (oh, ov) = (refs[0].as_slice()[i], refs[1].as_slice()[i]);
        let (th, tv) = (dis[0].as_slice()[i], dis[1].as_slice()[i]);
        let o_mag = oh * oh + ov * ov;
        let t_mag = th * th + tv * tv;
        let dot = oh * th + ov * tv;
        let aligned =
            o_mag > zero && t_mag > zero && dot >= zero && dot * dot >= cos_sq * o_mag * t_mag;
        for b in 0..3 {
            let (o, t) = (refs[b].as_slice()[i], dis[b].as_slice()[i]);
            let restored = if aligned {
                t
            } else if o == zero {
                zero
            } else {
                let k = (t / o).max(zero).min(T::one());
                k * o
            };
            rest[b].as_mut_slice()[i] = restored;
            add[b].as_mut_slice()[i] = t - restored;
        }
    }
    let [rh, rv, rd] = rest;
    let [ah, av, ad] = add;
    (
        SubbandSet {
            h: rh,
            v: rv,
            d: rd,
        },
        SubbandSet {
            h: ah,
            v: av,
            d: ad,
        },
    )
}

/// Splits every detail coefficient of `dis` into restored and additive
/// parts.
///
/// Gain `k = clamp(dis / ref, 0, 1)` (0 where `ref = 0`) gives `R = k * ref`.
/// Where the `(H, V)` vectors of both inputs are nonzero and within 1 degree
/// of each other, all three bands take `R = dis`.
pub fn dlm_decouple<T: Real>(
    pyr_ref: &WaveletPyramid<T>,
    pyr_dis: &WaveletPyramid<T>,
) -> Result<DlmIntermediate<T>> {
    check_geometry(pyr_ref, pyr_dis)?;
    let (restored, additive) = pyr_ref
        .details()
        .iter()
        .zip(pyr_dis.details())
        .map(|(r, d)| decouple_level(r, d))
        .unzip();
    Ok(DlmIntermediate {
        restored,
        additive,
        masked_restored: Vec::new(),
    })
}

/// `(alpha * box3x3(a) + beta * a) / divisor` with mirrored borders, via an
/// integral image of the 1-pixel padded input.
pub fn masking_threshold<T: Real>(a: &Plane<T>, k: MaskingKernel) -> Plane<f64> {
    let (w, h) = a.dims();
    let padded = Plane::from_fn(w + 2, h + 2, |r, c| {
        a.get_reflect(r as isize - 1, c as isize - 1).as_f64()
    });
    let table = build_integral(&padded);
    Plane::from_fn(w, h, |r, c| {
        (k.alpha * table.box_sum_unchecked(r, c, 3, 3) + k.beta * a[(r, c)].as_f64()) / k.divisor
    })
}

/// Masks the restored bands by the summed magnitude of the additive bands.
pub fn dlm_contrast_masking<T: Real>(
    inter: &DlmIntermediate<T>,
    k: MaskingKernel,
) -> DlmIntermediate<T> {
    let masked_restored = inter
        .restored
        .iter()
        .zip(&inter.additive)
        .map(|(r, a)| {
            let (w, h) = a.dims();
            let mut total = Plane::<T>::new(w, h);
            for band in a.bands() {
                for (t, v) in total.as_mut_slice().iter_mut().zip(band.as_slice()) {
                    *t += v.abs();
                }
            }
            let thr = masking_threshold(&total, k);
            r.map_bands(|_, band| {
                Plane::from_fn(w, h, |i, j| {
                    (band[(i, j)].abs() - T::lit(thr[(i, j)])).max(T::zero())
                })
            })
        })
        .collect();
    DlmIntermediate {
        restored: inter.restored.clone(),
        additive: inter.additive.clone(),
        masked_restored,
    }
}

/// Minkowski sum `sum |v|^p` over the centrally cropped region.
fn cropped_power_sum<T: Real>(band: &Plane<T>, border: f64, p: f64) -> f64 {
    let (w, h) = band.dims();
    let crop = |n: usize| {
        let c = (n as f64 * border).floor() as usize;
        if 2 * c >= n {
            0
        } else {
            c
        }
    };
    let (cw, ch) = (crop(w), crop(h));
    let mut s = 0.0;
    for r in ch..h - ch {
        for v in &band.row(r)[cw..w - cw] {
            s += v.as_f64().abs().powf(p);
        }
    }
    s
}

fn weight_sets<T: Real>(sets: &[SubbandSet<T>], w: &SubbandWeights) -> Result<Vec<SubbandSet<T>>> {
    sets.iter()
        .enumerate()
        .map(|(k, s)| {
            let ws = [
                w.weight(k + 1, 0)?,
                w.weight(k + 1, 1)?,
                w.weight(k + 1, 2)?,
            ];
            Ok(s.map_bands(|b, p| p.scale(T::lit(ws[b]))))
        })
        .collect()
}

/// Detail loss score in `[0, 1]`.
///
/// `weights` are the deferred subband weights of an unshared SW scheme;
/// they are applied to `R`, `A` and the reference after decoupling.
pub fn dlm_score<T: Real>(
    pyr_ref: &WaveletPyramid<T>,
    pyr_dis: &WaveletPyramid<T>,
    weights: Option<&SubbandWeights>,
    params: &DlmParams,
) -> Result<f64> {
    let mut inter = dlm_decouple(pyr_ref, pyr_dis)?;
    let mut ref_details = pyr_ref.details().to_vec();
    if let Some(w) = weights {
        inter.restored = weight_sets(&inter.restored, w)?;
        inter.additive = weight_sets(&inter.additive, w)?;
        ref_details = weight_sets(&ref_details, w)?;
    }
    let masked = dlm_contrast_masking(&inter, params.kernel);
    let p = params.minkowski;
    let (mut num, mut den) = (0.0, 0.0);
    for (m, r) in masked.masked_restored.iter().zip(&ref_details) {
        for (mb, rb) in m.bands().into_iter().zip(r.bands()) {
            num += cropped_power_sum(mb, params.border, p).powf(1.0 / p);
            den += cropped_power_sum(rb, params.border, p).powf(1.0 / p);
        }
    }
    if den == 0.0 {
        return Err(Error::DegenerateReference(
            "reference has no detail energy in the pooled region".into(),
        ));
    }
    Ok((num / den).clamp(0.0, 1.0))
}
