//! Halton low-discrepancy sequences, used for deterministic sample grids.

/// `index`-th element (1-based) of the van der Corput sequence in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// First `n` points of the 2-D Halton sequence (bases 2 and 3), scaled to
/// `(0, hi)^2`; indices start at 1 so the origin is never produced.
pub fn halton2d(n: usize, hi: f64) -> Vec<(f64, f64)> {
    (1..=n as u64)
        .map(|i| (hi * halton(i, 2), hi * halton(i, 3)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base2_prefix() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
        assert_eq!(halton(4, 2), 0.125);
    }

    #[test]
    fn points_stay_inside_open_box() {
        for (x, y) in halton2d(200, 3.0) {
            assert!(x > 0.0 && x < 3.0);
            assert!(y > 0.0 && y < 3.0);
        }
    }
}
