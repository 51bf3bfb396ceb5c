//! Characteristic-polynomial coefficients by the Faddeev–LeVerrier recursion.

use nalgebra::DMatrix;

/// Coefficients `c[0..=n]` of `det(λI − A) = Σ_k c[k] λ^k`, with `c[n] = 1`.
pub fn characteristic_coefficients(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert!(a.is_square(), "characteristic polynomial of a non-square matrix");
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let id = DMatrix::<f64>::identity(n, n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + &id * c[n + 1 - k];
        c[n - k] = -(a * &m).trace() / k as f64;
    }
    c
}

/// Sums of principal minors `e[m]` (all `m × m` principal minors of `A`),
/// so that `det(I + αA) = Σ_m e[m] α^m`.
pub fn principal_minor_sums(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let c = characteristic_coefficients(a);
    (0..=n)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * c[n - m]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        // λ² − 5λ − 2
        assert_eq!(characteristic_coefficients(&a), vec![-2.0, -5.0, 1.0]);
        assert_eq!(principal_minor_sums(&a), vec![1.0, 5.0, -2.0]);
    }

    #[test]
    fn matches_determinant_at_sample_points() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                3.0, -1.0, 0.0, -2.0, //
                -0.5, 1.5, -1.0, 0.0, //
                0.0, -2.0, 4.0, -2.0, //
                -1.0, 0.0, -0.25, 1.25,
            ],
        );
        let e = principal_minor_sums(&a);
        for alpha in [0.1, 0.7, 2.0, 5.0] {
            let direct = (DMatrix::identity(4, 4) + &a * alpha).determinant();
            let poly: f64 = e.iter().enumerate().map(|(m, c)| c * alpha.powi(m as i32)).sum();
            assert!((direct - poly).abs() <= 1e-12 * direct.abs().max(1.0), "{direct} vs {poly}");
        }
    }
}
