//! Published threshold values used as a regression reference.

/// `(m, n, λ(m, n))` rounded to four decimals, ordered by `m + n`.
pub const REFERENCE_TABLE: [(u32, u32, f64); 21] = [
    (2, 2, 1.8041),
    (3, 2, 2.9183),
    (2, 3, 1.6735),
    (2, 4, 1.5823),
    (3, 3, 2.8372),
    (4, 2, 3.9553),
    (2, 5, 1.5145),
    (3, 4, 2.7669),
    (4, 3, 3.9023),
    (5, 2, 4.9718),
    (2, 6, 1.4459),
    (3, 5, 2.7070),
    (4, 4, 3.8506),
    (5, 3, 4.9348),
    (6, 2, 5.9806),
    (2, 7, 1.4165),
    (3, 6, 2.6551),
    (4, 5, 3.8028),
    (5, 4, 4.8958),
    (6, 3, 5.9533),
    (7, 2, 6.9859),
];

/// Reference value for `(m, n)`, if tabulated.
pub fn reference_lambda(m: u32, n: u32) -> Option<f64> {
    REFERENCE_TABLE
        .iter()
        .find(|&&(a, b, _)| a == m && b == n)
        .map(|&(_, _, v)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_are_unique_and_admissible() {
        for (i, &(m, n, v)) in REFERENCE_TABLE.iter().enumerate() {
            assert!(m >= 2 && n >= 2 && m + n <= 9);
            assert!(v > (m as f64) - 1.0 && v < m as f64);
            assert!(REFERENCE_TABLE[..i]
                .iter()
                .all(|&(a, b, _)| (a, b) != (m, n)));
        }
        assert_eq!(reference_lambda(4, 4), Some(3.8506));
        assert_eq!(reference_lambda(8, 2), None);
    }
}
