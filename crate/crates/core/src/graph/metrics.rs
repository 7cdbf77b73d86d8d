use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;

use super::{Correspondence, Labeling};
use crate::error::{GwError, Result};

/// `|S_gt ∩ S_pred| / |S_gt| × 100`.
pub fn alignment_accuracy(pred: &Correspondence, gt: &Correspondence) -> Result<f64> {
    if gt.is_empty() {
        return Err(GwError::Parameter("ground-truth correspondence is empty".into()));
    }
    let hits = gt.pairs().filter(|&(s, t)| pred.target_of(s) == Some(t)).count();
    Ok(100.0 * hits as f64 / gt.len() as f64)
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut fwd = BTreeMap::new();
    let mut back = BTreeMap::new();
    a.iter().zip(b).all(|(&x, &y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * libm::log(p)
        })
        .sum()
}

fn ln_factorial(k: usize) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

/// Expected mutual information of two random labelings with the given
/// cluster sizes under the hypergeometric model.
fn expected_mutual_information(a: &[usize], b: &[usize], n: usize) -> f64 {
    let nf = n as f64;
    let mut emi = 0.0;
    for &ai in a {
        for &bj in b {
            let lo = (ai + bj).saturating_sub(n).max(1);
            let hi = ai.min(bj);
            // log of the hypergeometric normalizer shared by every n_ij
            let base =
                ln_factorial(ai) + ln_factorial(bj) + ln_factorial(n - ai) + ln_factorial(n - bj) - ln_factorial(n);
            for nij in lo..=hi {
                let term1 = nij as f64 / nf * libm::log(nf * nij as f64 / (ai as f64 * bj as f64));
                let log_p = base
                    - ln_factorial(nij)
                    - ln_factorial(ai - nij)
                    - ln_factorial(bj - nij)
                    - ln_factorial(n + nij - ai - bj);
                emi += term1 * libm::exp(log_p);
            }
        }
    }
    emi
}

/// Adjusted mutual information with arithmetic-mean normalization:
/// `(MI − E[MI]) / (½(H(a) + H(b)) − E[MI])`.
///
/// Identical partitions score 1. Any other labeling pair whose denominator
/// vanishes scores 0.
pub fn ami_score(a: &Labeling, b: &Labeling) -> Result<f64> {
    if a.len() != b.len() {
        return Err(GwError::Parameter(format!("labelings have lengths {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(GwError::Parameter("labelings are empty".into()));
    }
    let (la, lb) = (a.as_slice(), b.as_slice());
    if same_partition(la, lb) {
        return Ok(1.0);
    }
    let n = la.len();
    let nf = n as f64;
    let (ka, kb) = (a.cluster_count(), b.cluster_count());
    let mut table = vec![0usize; ka * kb];
    let mut size_a = vec![0usize; ka];
    let mut size_b = vec![0usize; kb];
    for (&x, &y) in la.iter().zip(lb) {
        table[x * kb + y] += 1;
        size_a[x] += 1;
        size_b[y] += 1;
    }
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let c = table[x * kb + y];
            if c > 0 {
                let c = c as f64;
                mi += c / nf * libm::log(nf * c / (size_a[x] as f64 * size_b[y] as f64));
            }
        }
    }
    let emi = expected_mutual_information(&size_a, &size_b, n);
    let denom = 0.5 * (entropy(&size_a, nf) + entropy(&size_b, nf)) - emi;
    if denom.abs() < 1e-15 {
        return Ok(0.0);
    }
    Ok((mi - emi) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(v: &[usize]) -> Labeling {
        Labeling::compact(v)
    }

    #[test]
    fn accuracy_examples() {
        let gt = Correspondence::from_pairs([(0, 0), (1, 1), (2, 2), (3, 3)]).unwrap();
        assert_eq!(alignment_accuracy(&gt, &gt).unwrap(), 100.0);
        let off = Correspondence::from_pairs([(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(alignment_accuracy(&off, &gt).unwrap(), 0.0);
        let three = Correspondence::from_pairs([(0, 0), (1, 1), (2, 2), (3, 0)]).unwrap();
        assert_eq!(alignment_accuracy(&three, &gt).unwrap(), 75.0);
        assert!(alignment_accuracy(&gt, &Correspondence::default()).is_err());
    }

    #[test]
    fn ami_degenerate_and_identity_cases() {
        let a = lab(&[0, 0, 1, 1, 2]);
        assert_eq!(ami_score(&a, &a).unwrap(), 1.0);
        assert_eq!(ami_score(&a, &lab(&[2, 2, 0, 0, 1])).unwrap(), 1.0);
        assert_eq!(ami_score(&lab(&[0, 0, 0, 0]), &lab(&[0, 1, 0, 1])).unwrap(), 0.0);
        assert_eq!(ami_score(&lab(&[0, 0, 0]), &lab(&[1, 1, 1])).unwrap(), 1.0);
        assert!(ami_score(&lab(&[0, 1]), &lab(&[0])).is_err());
    }

    // Reference values from scikit-learn's adjusted_mutual_info_score
    // (arithmetic normalization).
    #[test]
    fn ami_matches_reference_values() {
        let cases: [(&[usize], &[usize], f64); 3] = [
            (&[0, 0, 1, 1, 2, 2], &[0, 0, 1, 2, 2, 2], 0.5023607027202738),
            (&[0, 1, 0, 1, 0, 1, 2, 2], &[1, 1, 0, 0, 2, 2, 2, 0], -0.42118593138269605),
            (&[0, 0, 0, 1, 1, 1, 2, 2, 2, 2], &[0, 0, 1, 1, 1, 2, 2, 2, 0, 0], 0.17152423540072848),
        ];
        for (a, b, want) in cases {
            let got = ami_score(&lab(a), &lab(b)).unwrap();
            assert!((got - want).abs() < 1e-10, "{a:?} {b:?}: {got} vs {want}");
            assert!((ami_score(&lab(b), &lab(a)).unwrap() - want).abs() < 1e-10);
        }
    }
}
