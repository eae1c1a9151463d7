//! Cohen's kappa for two raters.

use std::collections::BTreeMap;

use super::AnalyticsError;

/// Kappa from a square confusion matrix, `m[i][j]` = items rater A put in
/// class `i` and rater B in class `j`.
///
/// Evaluated on integer counts as `(n·agree − Σ rᵢcᵢ) / (n² − Σ rᵢcᵢ)` so
/// that rational results come out exact.
pub fn kappa_from_confusion(m: &[Vec<u64>]) -> Result<f64, AnalyticsError> {
    let k = m.len();
    if let Some(row) = m.iter().find(|r| r.len() != k) {
        return Err(AnalyticsError::LengthMismatch {
            left: k,
            right: row.len(),
        });
    }
    let n: u128 = m.iter().flatten().map(|&c| c as u128).sum();
    if n < 2 {
        return Err(AnalyticsError::TooFewObservations {
            needed: 2,
            got: n as usize,
        });
    }
    let agree: u128 = (0..k).map(|i| m[i][i] as u128).sum();
    let chance: u128 = (0..k)
        .map(|i| {
            let row: u128 = m[i].iter().map(|&c| c as u128).sum();
            let col: u128 = m.iter().map(|r| r[i] as u128).sum();
            row * col
        })
        .sum();
    let denom = n * n - chance;
    if denom == 0 {
        return Err(AnalyticsError::KappaUndefined);
    }
    let num = (n * agree) as i128 - chance as i128;
    Ok(num as f64 / denom as f64)
}

/// Kappa over paired label vectors; the class set is the union of both.
pub fn cohen_kappa<T: Ord + Clone>(a: &[T], b: &[T]) -> Result<f64, AnalyticsError> {
    if a.len() != b.len() {
        return Err(AnalyticsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut index: BTreeMap<T, usize> = BTreeMap::new();
    for x in a.iter().chain(b) {
        let next = index.len();
        index.entry(x.clone()).or_insert(next);
    }
    let k = index.len();
    let mut m = vec![vec![0u64; k]; k];
    for (x, y) in a.iter().zip(b) {
        m[index[x]][index[y]] += 1;
    }
    kappa_from_confusion(&m)
}

/// Kappa after collapsing both vectors to "in class / not in class".
pub fn binary_kappa<T, F: Fn(&T) -> bool>(a: &[T], b: &[T], in_class: F) -> Result<f64, AnalyticsError> {
    let a: Vec<bool> = a.iter().map(&in_class).collect();
    let b: Vec<bool> = b.iter().map(&in_class).collect();
    cohen_kappa(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_two_by_two() {
        assert_eq!(kappa_from_confusion(&[vec![20, 5], vec![10, 15]]).unwrap(), 0.4);
    }

    #[test]
    fn same_matrix_through_vectors() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y, n) in [(1, 1, 20), (1, 0, 5), (0, 1, 10), (0, 0, 15)] {
            a.extend(std::iter::repeat_n(x, n));
            b.extend(std::iter::repeat_n(y, n));
        }
        assert_eq!(cohen_kappa(&a, &b).unwrap(), 0.4);
    }

    #[test]
    fn identical_non_constant() {
        let v = ["x", "y", "z", "x"];
        assert_eq!(cohen_kappa(&v, &v).unwrap(), 1.0);
    }

    #[test]
    fn constant_equal_raters_undefined() {
        assert!(matches!(
            cohen_kappa(&["x"; 4], &["x"; 4]),
            Err(AnalyticsError::KappaUndefined)
        ));
        assert!(cohen_kappa(&["x"], &["x"]).is_err());
    }

    #[test]
    fn binary_collapse() {
        let a = ["d1", "d2", "impl", "impl"];
        let b = ["d2", "d1", "impl", "d1"];
        let k = binary_kappa(&a, &b, |s| s.starts_with('d')).unwrap();
        assert_eq!(k, 0.5);
    }

    proptest! {
        #[test]
        fn kappa_bounded(pairs in proptest::collection::vec((0u8..4, 0u8..4), 2..80)) {
            let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            if let Ok(k) = cohen_kappa(&a, &b) {
                prop_assert!((-1.0..=1.0).contains(&k), "{}", k);
            }
        }
    }
}
