//! Small numeric helpers shared across modules.

/// Pairwise (cascade) summation in index order. Deterministic for a fixed
/// input order regardless of how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// ‖a − b‖₂ / ‖b‖₂ over paired samples.
///
/// # Panics
/// Panics if the slices differ in length or the reference is identically
/// zero.
pub fn rel_l2(predicted: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(predicted.len(), reference.len(), "length mismatch");
    let diff_sq: Vec<f64> = predicted
        .iter()
        .zip(reference)
        .map(|(p, r)| (p - r) * (p - r))
        .collect();
    let ref_sq: Vec<f64> = reference.iter().map(|r| r * r).collect();
    let denom = pairwise_sum(&ref_sq).sqrt();
    assert!(denom > 0.0, "relative L2 error against a zero reference");
    pairwise_sum(&diff_sq).sqrt() / denom
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_inputs() {
        let xs = [0.1, 0.2, 0.3, 0.4, 0.5];
        assert!((pairwise_sum(&xs) - 1.5).abs() < 1e-15);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[7.0]), 7.0);
    }

    #[test]
    fn rel_l2_of_identical_vectors_is_zero() {
        let a = [1.0, -2.0, 3.0];
        assert_eq!(rel_l2(&a, &a), 0.0);
    }

    #[test]
    fn rel_l2_scale() {
        // predicted = 1.1 × reference → error 0.1.
        let r = [1.0, 2.0, -1.0];
        let p: Vec<f64> = r.iter().map(|x| 1.1 * x).collect();
        assert!((rel_l2(&p, &r) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn linspace_endpoints_are_exact() {
        let xs = linspace(0.0, 1.0, 11);
        assert_eq!(xs[0], 0.0);
        assert_eq!(xs[10], 1.0);
        assert_eq!(xs.len(), 11);
        assert!((xs[5] - 0.5).abs() < 1e-15);
    }
}
