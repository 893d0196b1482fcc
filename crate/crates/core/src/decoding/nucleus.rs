use rand::Rng;

use crate::error::{Error, Result};

/// Keeps the smallest set of most probable items whose mass reaches `p`
/// and renormalizes it. Items are ranked by descending probability with
/// ties kept in input order; the kept items are returned in input order.
/// With `p >= 1` the distribution is returned unchanged.
pub fn nucleus_truncate<T: Clone>(distribution: &[(T, f64)], p: f64) -> Result<Vec<(T, f64)>> {
    if distribution.is_empty() {
        return Err(Error::InvalidArgument("empty distribution".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("nucleus p = {p} outside (0, 1]")));
    }
    if let Some((_, q)) = distribution.iter().find(|(_, q)| !(q.is_finite() && *q >= 0.0)) {
        return Err(Error::InvalidArgument(format!("invalid probability {q}")));
    }
    let total: f64 = distribution.iter().map(|(_, q)| q).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    if p >= 1.0 {
        return Ok(distribution.to_vec());
    }

    let mut order: Vec<usize> = (0..distribution.len()).collect();
    order.sort_by(|&a, &b| distribution[b].1.total_cmp(&distribution[a].1));

    let mut keep = vec![false; distribution.len()];
    let mut mass = 0.0;
    for &i in &order {
        keep[i] = true;
        mass += distribution[i].1;
        if mass >= p {
            break;
        }
    }

    Ok(distribution
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|((item, q), _)| (item.clone(), q / mass))
        .collect())
}

/// Draws an index proportionally to `weights`.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn keeps_smallest_prefix_reaching_p() {
        let d = [("a", 0.5), ("b", 0.3), ("c", 0.15), ("d", 0.05)];
        let t = nucleus_truncate(&d, 0.9).unwrap();
        let items: Vec<_> = t.iter().map(|(i, _)| *i).collect();
        assert_eq!(items, ["a", "b", "c"]);
        for ((_, got), want) in t.iter().zip([0.5 / 0.95, 0.3 / 0.95, 0.15 / 0.95]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn p_one_is_identity() {
        let d = [("a", 0.25), ("b", 0.0), ("c", 0.75)];
        assert_eq!(nucleus_truncate(&d, 1.0).unwrap(), d.to_vec());
    }

    #[test]
    fn never_empty() {
        assert_eq!(nucleus_truncate(&[("x", 1.0)], 0.1).unwrap(), vec![("x", 1.0)]);
    }

    #[test]
    fn ties_keep_input_order() {
        let d = [("a", 0.25), ("b", 0.25), ("c", 0.25), ("d", 0.25)];
        let t = nucleus_truncate(&d, 0.5).unwrap();
        assert_eq!(t, vec![("a", 0.5), ("b", 0.5)]);
    }

    #[test]
    fn rejects_invalid_distributions() {
        assert!(nucleus_truncate(&[("a", 0.5)], 0.9).is_err());
        assert!(nucleus_truncate(&[("a", 1.5), ("b", -0.5)], 0.9).is_err());
        assert!(nucleus_truncate::<&str>(&[], 0.9).is_err());
        assert!(nucleus_truncate(&[("a", 1.0)], 0.0).is_err());
    }

    #[test]
    fn sampling_respects_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            assert_ne!(sample_index(&[0.5, 0.0, 0.5], &mut rng), 1);
        }
    }

    proptest! {
        #[test]
        fn truncation_is_a_renormalized_subset(
            weights in prop::collection::vec(0.0f64..1.0, 1..12),
            p in 0.01f64..1.0,
        ) {
            let total: f64 = weights.iter().sum();
            prop_assume!(total > 1e-6);
            let d: Vec<(usize, f64)> = weights.iter().map(|w| w / total).enumerate().collect();
            let d_sum: f64 = d.iter().map(|x| x.1).sum();
            prop_assume!((d_sum - 1.0).abs() <= 1e-9);
            let t = nucleus_truncate(&d, p).unwrap();
            prop_assert!(!t.is_empty());
            let s: f64 = t.iter().map(|x| x.1).sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            // every dropped item is no more probable than every kept item
            let kept_min = t.iter().map(|(i, _)| d[*i].1).fold(f64::INFINITY, f64::min);
            for (i, q) in &d {
                if !t.iter().any(|(k, _)| k == i) {
                    prop_assert!(*q <= kept_min);
                }
            }
        }
    }
}
