use crate::error::{Error, Result};

/// 1-based ranks; tied values share the average of their ranks.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && v[idx[j]] == v[idx[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} values",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank-order correlation.
pub fn srocc(pred: &[f64], mos: &[f64]) -> Result<f64> {
    if pred.len() != mos.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} scores",
            pred.len(),
            mos.len()
        )));
    }
    if pred.len() < 3 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 3 pairs, got {}",
            pred.len()
        )));
    }
    pearson(&average_ranks(pred), &average_ranks(mos))
}

/// `tanh(mean(atanh r))`.
pub fn fisher_average(correlations: &[f64]) -> Result<f64> {
    if correlations.is_empty() {
        return Err(Error::InvalidArgument("no correlations to average".into()));
    }
    if let Some(r) = correlations.iter().find(|r| !(r.abs() < 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "correlation {r} has an infinite Fisher z"
        )));
    }
    let z = correlations.iter().map(|r| r.atanh()).sum::<f64>() / correlations.len() as f64;
    Ok(z.tanh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_cases() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(srocc(&x, &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap(), 0.8);
        assert_eq!(srocc(&x, &[10.0, 20.0, 30.0, 40.0, 50.0]).unwrap(), 1.0);
        assert_eq!(srocc(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!(matches!(
            srocc(&x, &[1.0; 5]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(srocc(&x[..2], &x[..2]).is_err());
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn fisher_cases() {
        assert!((fisher_average(&[0.7; 4]).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(fisher_average(&[0.5, -0.5]).unwrap(), 0.0);
        let want = ((0.8f64.atanh() + 0.9f64.atanh()) / 2.0).tanh();
        assert!((fisher_average(&[0.8, 0.9]).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.857921).abs() < 1e-6);
        assert!(fisher_average(&[1.0, 0.2]).is_err());
        assert!(fisher_average(&[]).is_err());
    }

    proptest! {
        #[test]
        fn invariant_to_increasing_maps(v in prop::collection::vec(-5.0f64..5.0, 5..30), seed in 0u64..100) {
            let mos: Vec<f64> = (0..v.len()).map(|i| ((i as u64 * 7919 + seed) % 101) as f64).collect();
            if let Ok(base) = srocc(&v, &mos) {
                for f in [|x: f64| x.exp(), |x: f64| 3.0 * x - 2.0, |x: f64| x * x * x] {
                    let t: Vec<f64> = v.iter().map(|&x| f(x)).collect();
                    prop_assert_eq!(srocc(&t, &mos).unwrap(), base);
                }
            }
        }

        #[test]
        fn fisher_fixed_point(r in -0.999f64..0.999, n in 1usize..20) {
            prop_assert!((fisher_average(&vec![r; n]).unwrap() - r).abs() < 1e-12);
        }
    }
}
