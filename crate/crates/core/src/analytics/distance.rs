//! Edit-distance similarity between help requests.

use crate::model::HelpRequest;

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

fn levenshtein_chars<'a>(mut a: &'a [char], mut b: &'a [char]) -> usize {
    // A shared prefix or suffix never changes the distance.
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    a = &a[prefix..];
    b = &b[prefix..];
    let suffix = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    a = &a[..a.len() - suffix];
    b = &b[..b.len() - suffix];

    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = diag + usize::from(ca != cb);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

/// Levenshtein distance divided by the longer length, in `[0, 1]`.
/// Two empty strings are at distance 0.
pub fn normalized_field_distance(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein_chars(&a, &b) as f64 / longest as f64
}

/// Sum of normalized distances over code, error and issue, in `[0, 3]`.
/// The language field does not participate.
pub fn query_similarity(x: &HelpRequest, y: &HelpRequest) -> f64 {
    normalized_field_distance(&x.code, &y.code)
        + normalized_field_distance(&x.error, &y.error)
        + normalized_field_distance(&x.issue, &y.issue)
}
