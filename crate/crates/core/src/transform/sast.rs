use crate::plane::Plane;
use crate::scalar::Real;

/// Fixed 2x downscale by averaging disjoint 2x2 blocks.
///
/// Odd dimensions are first padded by replicating the last row/column, so
/// the output is `ceil(w/2)` x `ceil(h/2)`.
pub fn sast_rescale<T: Real>(plane: &Plane<T>) -> Plane<T> {
    let (w, h) = plane.dims();
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    let padded = plane.pad_replicate(2 * ow, 2 * oh);
    let quarter = T::lit(0.25);
    Plane::from_fn(ow, oh, |r, c| {
        let (r2, c2) = (2 * r, 2 * c);
        (padded[(r2, c2)] + padded[(r2, c2 + 1)] + padded[(r2 + 1, c2)] + padded[(r2 + 1, c2 + 1)])
            * quarter
    })
}
