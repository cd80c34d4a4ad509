//! Video-level feature extraction and scoring.
//!
//! Frames are processed in chunks. Within a chunk every reference frame is
//! transformed first, so each frame's Motion partner (the previous
//! reference approximation band) is known before the distorted transforms
//! and feature evaluations fan out. The result does not depend on the
//! thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{compute_features, FeatureParams};
use crate::fusion::{aggregate_video_features, svr_predict, FeatureVector, Schema, SvrModel};
use crate::plane::Plane;
use crate::scalar::Real;
use crate::transform::{UnifiedTransform, WaveletPyramid};
use crate::video_io::FrameSource;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    /// Frames held in memory at once; 0 means twice the thread count.
    pub chunk_frames: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            threads: 0,
            chunk_frames: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoFeatures {
    pub per_frame: Vec<FeatureVector>,
    /// Per-feature mean over frames.
    pub pooled: FeatureVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoScores {
    pub per_frame: Vec<f64>,
    /// Prediction at the pooled feature vector.
    pub pooled: f64,
}

/// Checks that two sources can be scored against each other.
pub fn check_pair(reference: &FrameSource, distorted: &FrameSource) -> Result<()> {
    if reference.spec() != distorted.spec() {
        return Err(Error::VideoMismatch(format!(
            "spec {:?} vs {:?}",
            reference.spec(),
            distorted.spec()
        )));
    }
    if reference.frame_count() != distorted.frame_count() {
        return Err(Error::VideoMismatch(format!(
            "{} reference frames vs {} distorted frames",
            reference.frame_count(),
            distorted.frame_count()
        )));
    }
    if reference.frame_count() == 0 {
        return Err(Error::InvalidArgument("videos have no frames".into()));
    }
    Ok(())
}

/// Per-frame and pooled features of a reference/distorted file pair.
pub fn extract_video_features<T: Real>(
    transform: &UnifiedTransform,
    reference: &mut FrameSource,
    distorted: &mut FrameSource,
    schema: &Schema,
    params: &FeatureParams,
    opts: &PipelineOptions,
) -> Result<VideoFeatures> {
    check_pair(reference, distorted)?;
    let n = reference.frame_count();
    run::<T>(
        transform,
        n,
        |i| Ok((reference.read_luma(i)?, distorted.read_luma(i)?)),
        schema,
        params,
        opts,
    )
}

/// As [`extract_video_features`] over in-memory frames.
pub fn extract_plane_features<T: Real>(
    transform: &UnifiedTransform,
    reference: &[Plane<T>],
    distorted: &[Plane<T>],
    schema: &Schema,
    params: &FeatureParams,
    opts: &PipelineOptions,
) -> Result<VideoFeatures> {
    if reference.len() != distorted.len() {
        return Err(Error::VideoMismatch(format!(
            "{} reference frames vs {} distorted frames",
            reference.len(),
            distorted.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::InvalidArgument("videos have no frames".into()));
    }
    run(
        transform,
        reference.len(),
        |i| Ok((reference[i].clone(), distorted[i].clone())),
        schema,
        params,
        opts,
    )
}

fn run<T: Real>(
    transform: &UnifiedTransform,
    n: usize,
    mut read: impl FnMut(usize) -> Result<(Plane<T>, Plane<T>)>,
    schema: &Schema,
    params: &FeatureParams,
    opts: &PipelineOptions,
) -> Result<VideoFeatures> {
    let kinds = schema.kinds()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let chunk = match opts.chunk_frames {
        0 => 2 * pool.current_num_threads(),
        c => c,
    };
    let mut prev: Option<Plane<T>> = None;
    let mut per_frame = Vec::with_capacity(n);
    for start in (0..n).step_by(chunk) {
        let frames = (start..(start + chunk).min(n))
            .map(&mut read)
            .collect::<Result<Vec<_>>>()?;
        for (r, d) in &frames {
            r.check_same_dims(d)?;
        }
        let pyr_ref: Vec<WaveletPyramid<T>> = pool.install(|| {
            frames
                .par_iter()
                .map(|(r, _)| transform.apply(r))
                .collect::<Result<_>>()
        })?;
        let partners: Vec<Option<&Plane<T>>> = (0..frames.len())
            .map(|i| match i {
                0 => prev.as_ref(),
                _ => Some(pyr_ref[i - 1].approx()),
            })
            .collect();
        let rows: Vec<Vec<f64>> = pool.install(|| {
            frames
                .par_iter()
                .zip(&pyr_ref)
                .zip(&partners)
                .map(|(((_, dis), pr), partner)| {
                    let pd = transform.apply(dis)?;
                    compute_features(
                        &kinds,
                        pr,
                        &pd,
                        *partner,
                        transform.deferred_weights(),
                        params,
                    )
                })
                .collect::<Result<_>>()
        })?;
        drop(partners);
        prev = pyr_ref.last().map(|p| p.approx().clone());
        for r in rows {
            per_frame.push(FeatureVector::new(schema.clone(), r)?);
        }
        log::debug!("frames {start}..{} done", start + frames.len());
    }
    let pooled = aggregate_video_features(&per_frame)?;
    Ok(VideoFeatures { per_frame, pooled })
}

/// Model predictions for every frame and for the pooled features.
pub fn score_video(model: &SvrModel, features: &VideoFeatures) -> Result<VideoScores> {
    Ok(VideoScores {
        per_frame: features
            .per_frame
            .iter()
            .map(|f| svr_predict(model, f))
            .collect::<Result<_>>()?,
        pooled: svr_predict(model, &features.pooled)?,
    })
}
