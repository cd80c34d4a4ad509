//! Sequential minimal optimisation for the nu-SVR dual.
//!
//! The dual is posed over `2l` variables `[alpha; alpha*]` with labels
//! `+1` / `-1`:
//!
//! ```text
//! min 1/2 a' Q a + p' a
//! s.t. y' a = 0,  e' a = C nu l,  0 <= a_i <= C
//! Q_ij = y_i y_j K(i mod l, j mod l),  p = [-t; t]
//! ```
//!
//! Working pairs are picked with second-order information among variables
//! of the same label, which keeps both equality constraints satisfied.
//! No shrinking is done.

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

pub(crate) struct NuSolution {
    /// `alpha - alpha*`, one per training row.
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

/// Solves the nu-SVR dual for a precomputed `l`x`l` kernel matrix
/// (row-major) and targets `t`.
pub(crate) fn solve_nu_svr(
    kernel: &[f64],
    t: &[f64],
    c: f64,
    nu: f64,
    tol: f64,
    max_iter: usize,
) -> Result<NuSolution> {
    let l = t.len();
    debug_assert_eq!(kernel.len(), l * l);
    let n = 2 * l;
    let y: Vec<f64> = (0..n).map(|i| if i < l { 1.0 } else { -1.0 }).collect();
    let k = |i: usize, j: usize| kernel[(i % l) * l + j % l];
    let q = |i: usize, j: usize| y[i] * y[j] * k(i, j);
    let qd: Vec<f64> = (0..n).map(|i| k(i, i)).collect();

    let mut alpha = vec![0.0; n];
    let mut sum = c * nu * l as f64 / 2.0;
    for i in 0..l {
        let a = sum.min(c);
        alpha[i] = a;
        alpha[i + l] = a;
        sum -= a;
    }
    let mut grad: Vec<f64> = (0..n)
        .map(|i| if i < l { -t[i] } else { t[i - l] })
        .collect();
    for i in 0..n {
        if alpha[i] != 0.0 {
            for (j, g) in grad.iter_mut().enumerate() {
                *g += alpha[i] * q(i, j);
            }
        }
    }

    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let mut iterations = 0;
    loop {
        // working set
        let (mut gmaxp, mut gmaxp2, mut ip) = (f64::NEG_INFINITY, f64::NEG_INFINITY, None);
        let (mut gmaxn, mut gmaxn2, mut in_) = (f64::NEG_INFINITY, f64::NEG_INFINITY, None);
        for tt in 0..n {
            if y[tt] > 0.0 {
                if !upper(alpha[tt]) && -grad[tt] >= gmaxp {
                    gmaxp = -grad[tt];
                    ip = Some(tt);
                }
            } else if !lower(alpha[tt]) && grad[tt] >= gmaxn {
                gmaxn = grad[tt];
                in_ = Some(tt);
            }
        }
        let mut jmin = None;
        let mut obj_min = f64::INFINITY;
        for j in 0..n {
            let (anchor, gdiff) = if y[j] > 0.0 {
                if lower(alpha[j]) {
                    continue;
                }
                gmaxp2 = gmaxp2.max(grad[j]);
                (ip, gmaxp + grad[j])
            } else {
                if upper(alpha[j]) {
                    continue;
                }
                gmaxn2 = gmaxn2.max(-grad[j]);
                (in_, gmaxn - grad[j])
            };
            if let Some(a) = anchor {
                if gdiff > 0.0 {
                    let quad = qd[a] + qd[j] - 2.0 * q(a, j);
                    let obj = -(gdiff * gdiff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= obj_min {
                        jmin = Some(j);
                        obj_min = obj;
                    }
                }
            }
        }
        let Some(j) = jmin.filter(|_| (gmaxp + gmaxp2).max(gmaxn + gmaxn2) >= tol) else {
            break;
        };
        let i = if y[j] > 0.0 { ip } else { in_ }.expect("anchor exists when a partner was found");

        if iterations >= max_iter {
            return Err(Error::NonConvergence(max_iter));
        }
        iterations += 1;

        // pair update; y_i == y_j
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (qd[i] + qd[j] - 2.0 * q(i, j)).max(0.0);
        let quad = if quad > 0.0 { quad } else { TAU };
        let delta = (grad[i] - grad[j]) / quad;
        let total = alpha[i] + alpha[j];
        alpha[i] -= delta;
        alpha[j] += delta;
        if total > c {
            if alpha[i] > c {
                alpha[i] = c;
                alpha[j] = total - c;
            }
        } else if alpha[j] < 0.0 {
            alpha[j] = 0.0;
            alpha[i] = total;
        }
        if total > c {
            if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = total - c;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = total;
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (m, g) in grad.iter_mut().enumerate() {
            *g += q(i, m) * di + q(j, m) * dj;
        }
    }

    // offset from the free variables of each label
    let mut side = [(0usize, 0.0f64, f64::INFINITY, f64::NEG_INFINITY); 2];
    for m in 0..n {
        let s = &mut side[usize::from(y[m] < 0.0)];
        if upper(alpha[m]) {
            s.3 = s.3.max(grad[m]);
        } else if lower(alpha[m]) {
            s.2 = s.2.min(grad[m]);
        } else {
            s.0 += 1;
            s.1 += grad[m];
        }
    }
    let r = side.map(|(nf, sf, ub, lb)| {
        if nf > 0 {
            sf / nf as f64
        } else {
            (ub + lb) / 2.0
        }
    });
    let rho = (r[0] - r[1]) / 2.0;
    let coef = (0..l).map(|m| alpha[m] - alpha[m + l]).collect();
    Ok(NuSolution {
        coef,
        rho,
        iterations,
    })
}
