//! Small shared numerics: symmetric eigen helpers, low-discrepancy sampling.

use nalgebra::{DMatrix, DVector};

/// Eigenvalues of the leading 2×2 block, closed form.
fn eig2(m: &DMatrix<f64>) -> (f64, f64) {
    let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean - radius, mean + radius)
}

/// Spectral norm of a symmetric matrix (largest |eigenvalue|).
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        1 => m[(0, 0)].abs(),
        2 => {
            let (lo, hi) = eig2(m);
            lo.abs().max(hi.abs())
        }
        _ => {
            let eig = m.clone().symmetric_eigen();
            eig.eigenvalues.iter().fold(0.0, |acc, &l| acc.max(l.abs()))
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_min_eig(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => eig2(m).0,
        _ => {
            let eig = m.clone().symmetric_eigen();
            eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
        }
    }
}

/// (Γ + Γᵀ)/2.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

const HALTON_PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(base: usize, mut index: usize) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

/// The i-th Halton point in the unit cube [0,1)^dim (1-based index so the
/// first point is not the origin). Prefix property: the first n points of a
/// longer sequence are the same n points, so sample maxima are monotone in
/// the sample count.
pub fn halton_point(dim: usize, index: usize) -> Vec<f64> {
    assert!(dim <= HALTON_PRIMES.len(), "halton dimension too large");
    (0..dim)
        .map(|d| radical_inverse(HALTON_PRIMES[d], index + 1))
        .collect()
}

/// Scale a unit-cube point into the box given by per-axis [lo, hi] bounds.
pub fn scale_to_box(unit: &[f64], bounds: &[[f64; 2]]) -> DVector<f64> {
    DVector::from_iterator(
        bounds.len(),
        unit.iter()
            .zip(bounds)
            .map(|(u, b)| b[0] + u * (b[1] - b[0])),
    )
}

/// All 2^dim corners of a box, plus its midpoint. Used to seed sup-norm
/// sampling so boundary maxima of even functions are hit exactly.
pub fn box_corners_and_center(bounds: &[[f64; 2]]) -> Vec<DVector<f64>> {
    let dim = bounds.len();
    let mut pts = Vec::with_capacity((1 << dim) + 1);
    for mask in 0..(1usize << dim) {
        pts.push(DVector::from_iterator(
            dim,
            bounds
                .iter()
                .enumerate()
                .map(|(d, b)| if mask >> d & 1 == 1 { b[1] } else { b[0] }),
        ));
    }
    pts.push(DVector::from_iterator(
        dim,
        bounds.iter().map(|b| 0.5 * (b[0] + b[1])),
    ));
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0, 2.0]));
        assert_relative_eq!(sym_spectral_norm(&m), 3.0, epsilon = 1e-12);
        assert_relative_eq!(sym_min_eig(&m), -3.0, epsilon = 1e-12);
    }

    #[test]
    fn halton_prefix_property() {
        let a: Vec<_> = (0..8).map(|i| halton_point(2, i)).collect();
        let b: Vec<_> = (0..16).map(|i| halton_point(2, i)).collect();
        assert_eq!(a, b[..8].to_vec());
    }

    #[test]
    fn corners_of_square() {
        let pts = box_corners_and_center(&[[-1.0, 1.0], [0.0, 2.0]]);
        assert_eq!(pts.len(), 5);
        assert!(pts.iter().any(|p| p[0] == -1.0 && p[1] == 0.0));
        assert!(pts.iter().any(|p| p[0] == 1.0 && p[1] == 2.0));
        assert_eq!(pts[4], DVector::from_vec(vec![0.0, 1.0]));
    }
}
