use std::collections::BTreeSet;

use crate::text::normalize;

fn relative(i: usize, len: usize) -> f64 {
    (i as f64 + 0.5) / len as f64
}

fn project(i: usize, from: usize, to: usize) -> usize {
    ((relative(i, from) * to as f64 - 0.5).round().max(0.0) as usize).min(to - 1)
}

/// Fallback word alignment used when no aligner output is supplied.
///
/// Target tokens with an identical (normalized) source token are linked to
/// the occurrence closest in relative position. Remaining target tokens are
/// linked only where the forward and backward position projections agree.
/// Links are sorted and unique.
pub fn heuristic_alignment(source: &[&str], target: &[&str]) -> Vec<(usize, usize)> {
    let (m, n) = (source.len(), target.len());
    if m == 0 || n == 0 {
        return Vec::new();
    }
    let src_norm: Vec<String> = source.iter().map(|t| normalize(t)).collect();
    let mut links = BTreeSet::new();
    let mut linked_target = vec![false; n];

    for (j, tok) in target.iter().enumerate() {
        let t = normalize(tok);
        if t.is_empty() {
            continue;
        }
        let best = src_norm
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == t)
            .map(|(i, _)| i)
            .min_by(|&a, &b| {
                let da = (relative(a, m) - relative(j, n)).abs();
                let db = (relative(b, m) - relative(j, n)).abs();
                da.total_cmp(&db)
            });
        if let Some(i) = best {
            links.insert((i, j));
            linked_target[j] = true;
        }
    }

    for j in (0..n).filter(|&j| !linked_target[j]) {
        let i = project(j, n, m);
        if project(i, m, n) == j {
            links.insert((i, j));
        }
    }
    links.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_tokens_link_nearest() {
        let links = heuristic_alignment(&["Lakota", "a", "b", "Lakota"], &["x", "y", "z", "Lakota"]);
        assert!(links.contains(&(3, 3)));
        assert!(!links.contains(&(0, 3)));
    }

    #[test]
    fn diagonal_for_equal_lengths() {
        let links = heuristic_alignment(&["a", "b", "c"], &["x", "y", "z"]);
        assert_eq!(links, vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn links_stay_in_bounds() {
        for m in 1..7 {
            for n in 1..7 {
                let s: Vec<&str> = (0..m).map(|_| "s").collect();
                let t: Vec<&str> = (0..n).map(|_| "t").collect();
                for (i, j) in heuristic_alignment(&s, &t) {
                    assert!(i < m && j < n);
                }
            }
        }
        assert!(heuristic_alignment(&[], &["x"]).is_empty());
    }
}
