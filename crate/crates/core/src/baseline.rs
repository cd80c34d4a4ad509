//! Full-resolution reference pipeline used as the speed baseline: four-scale
//! spatial VIF with Gaussian windows, four-level db2 DLM with Watson
//! weights applied after decoupling, and motion on blurred frames.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::VMAF_VIF_TAPS;
use crate::features::{dlm_score, motion_feature, DlmParams};
use crate::plane::Plane;
use crate::scalar::Real;
use crate::transform::{convolve_cols, convolve_rows, wavelet_pyramid, SubbandWeights, Wavelet};

const SIGMA_NSQ: f64 = 2.0;
const EPS: f64 = 1e-10;
const DLM_LEVELS: usize = 4;
const MOTION_TAPS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineFrame {
    pub vif: [f64; 4],
    pub dlm: f64,
    pub motion: f64,
}

/// Normalized Gaussian with `n` taps and `sigma = n / 5`.
pub fn gaussian_taps(n: usize) -> Vec<f64> {
    let sigma = n as f64 / 5.0;
    let half = (n / 2) as f64;
    let g: Vec<f64> = (0..n)
        .map(|i| (-(i as f64 - half).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

fn blur<T: Real>(p: &Plane<T>, taps: &[T]) -> Plane<T> {
    convolve_cols(&convolve_rows(p, taps), taps)
}

fn decimate<T: Real>(p: &Plane<T>) -> Plane<T> {
    let (w, h) = p.dims();
    Plane::from_fn(w.div_ceil(2), h.div_ceil(2), |r, c| p[(2 * r, 2 * c)])
}

/// `(num, den)` of one spatial VIF scale with Gaussian-weighted moments.
fn vif_scale<T: Real>(x: &Plane<T>, y: &Plane<T>, taps: &[T]) -> Result<(f64, f64)> {
    let mu_x = blur(x, taps);
    let mu_y = blur(y, taps);
    let xx = blur(&x.zip_map(x, |a, b| a * b)?, taps);
    let yy = blur(&y.zip_map(y, |a, b| a * b)?, taps);
    let xy = blur(&x.zip_map(y, |a, b| a * b)?, taps);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..x.len() {
        let (mx, my) = (mu_x.as_slice()[i].as_f64(), mu_y.as_slice()[i].as_f64());
        let mut sxx = (xx.as_slice()[i].as_f64() - mx * mx).max(0.0);
        let syy = (yy.as_slice()[i].as_f64() - my * my).max(0.0);
        let sxy = xy.as_slice()[i].as_f64() - mx * my;
        let mut g = sxy / (sxx + EPS);
        let mut sv = syy - g * sxy;
        if sxx < EPS {
            g = 0.0;
            sv = syy;
            sxx = 0.0;
        }
        if syy < EPS {
            g = 0.0;
            sv = 0.0;
        }
        if g < 0.0 {
            sv = syy;
            g = 0.0;
        }
        let sv = sv.max(EPS);
        num += (1.0 + g * g * sxx / (sv + SIGMA_NSQ)).log2();
        den += (1.0 + sxx / SIGMA_NSQ).log2();
    }
    Ok((num, den))
}

/// Per-scale VIF ratios; a scale with zero denominator scores 1.
pub fn spatial_vif<T: Real>(reference: &Plane<T>, distorted: &Plane<T>) -> Result<[f64; 4]> {
    reference.check_same_dims(distorted)?;
    let mut x = reference.clone();
    let mut y = distorted.clone();
    let mut out = [1.0; 4];
    for (s, &n) in VMAF_VIF_TAPS.iter().enumerate() {
        let taps: Vec<T> = gaussian_taps(n).into_iter().map(T::lit).collect();
        if s > 0 {
            x = decimate(&blur(&x, &taps));
            y = decimate(&blur(&y, &taps));
        }
        let (num, den) = vif_scale(&x, &y, &taps)?;
        if den > 0.0 {
            out[s] = num / den;
        }
    }
    Ok(out)
}

/// Scores one frame pair. Returns the blurred reference for the next
/// frame's motion.
pub fn baseline_frame<T: Real>(
    reference: &Plane<T>,
    distorted: &Plane<T>,
    prev_blurred: Option<&Plane<T>>,
) -> Result<(BaselineFrame, Plane<T>)> {
    let vif = spatial_vif(reference, distorted)?;
    let pr = wavelet_pyramid(reference, Wavelet::Db2, DLM_LEVELS)?;
    let pd = wavelet_pyramid(distorted, Wavelet::Db2, DLM_LEVELS)?;
    let dlm = dlm_score(
        &pr,
        &pd,
        Some(&SubbandWeights::watson()),
        &DlmParams::default(),
    )?;
    let taps: Vec<T> = gaussian_taps(MOTION_TAPS).into_iter().map(T::lit).collect();
    let blurred = blur(reference, &taps);
    let motion = match prev_blurred {
        Some(p) => motion_feature(p, &blurred)?,
        None => 0.0,
    };
    Ok((BaselineFrame { vif, dlm, motion }, blurred))
}

/// Scores a clip, frames in parallel on `threads` workers (0 = all cores).
pub fn baseline_video<T: Real>(
    reference: &[Plane<T>],
    distorted: &[Plane<T>],
    threads: usize,
) -> Result<Vec<BaselineFrame>> {
    if reference.len() != distorted.len() {
        return Err(Error::VideoMismatch(format!(
            "{} reference frames vs {} distorted frames",
            reference.len(),
            distorted.len()
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let scored: Vec<(BaselineFrame, Plane<T>)> = pool.install(|| {
        reference
            .par_iter()
            .zip(distorted)
            .map(|(r, d)| baseline_frame(r, d, None))
            .collect::<Result<_>>()
    })?;
    let mut out = Vec::with_capacity(scored.len());
    for i in 0..scored.len() {
        let mut f = scored[i].0.clone();
        if i > 0 {
            f.motion = motion_feature(&scored[i - 1].1, &scored[i].1)?;
        }
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured(seed: u64) -> Plane<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Plane::from_fn(128, 96, |r, c| {
            128.0
                + 40.0 * ((r as f64) / 4.0).sin() * ((c as f64) / 6.0).cos()
                + rng.random_range(-20.0..20.0)
        })
    }

    #[test]
    fn taps_are_normalized_and_symmetric() {
        for n in [3, 5, 9, 17] {
            let g = gaussian_taps(n);
            assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            for i in 0..n {
                assert_eq!(g[i], g[n - 1 - i]);
            }
        }
    }

    #[test]
    fn identity_pair() {
        let p = textured(1);
        let (f, b) = baseline_frame(&p, &p, None).unwrap();
        for v in f.vif {
            assert!((v - 1.0).abs() < 1e-9, "{v}");
        }
        assert!((f.dlm - 1.0).abs() < 1e-9);
        assert_eq!(f.motion, 0.0);
        let (again, _) = baseline_frame(&p, &p, Some(&b)).unwrap();
        assert_eq!(again.motion, 0.0);
    }

    #[test]
    fn noise_lowers_scores() {
        let p = textured(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = Plane::from_fn(p.width(), p.height(), |r, c| {
            p[(r, c)] + rng.random_range(-30.0..30.0)
        });
        let (f, _) = baseline_frame(&p, &q, None).unwrap();
        assert!(f.vif.iter().all(|&v| v < 0.9), "{:?}", f.vif);
        assert!(f.dlm < 1.0);
    }

    #[test]
    fn video_motion_matches_sequential() {
        let frames: Vec<Plane<f64>> = (0..3).map(textured).collect();
        let v = baseline_video(&frames, &frames, 2).unwrap();
        let (_, b0) = baseline_frame(&frames[0], &frames[0], None).unwrap();
        let (f1, _) = baseline_frame(&frames[1], &frames[1], Some(&b0)).unwrap();
        assert_eq!(v[0].motion, 0.0);
        assert_eq!(v[1], f1);
        assert!(v[2].motion > 0.0);
    }
}
