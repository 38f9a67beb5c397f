//! Dense helpers shared by the chain and analysis modules.

use nalgebra::DMatrix;

/// Max-row-sum (induced infinity) norm.
pub fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max-column-sum (induced 1) norm.
pub fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring a truncated Taylor series.
///
/// The input is scaled by `2^-s` until its 1-norm is at most 1/2; the series
/// is then cut where the tail bound `2 (1/2)^(m+1) / (m+1)!` drops below 1e-13.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm of a non-square matrix");
    let n = a.nrows();
    let norm = one_norm(a);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = a / 2f64.powi(squarings as i32);

    let mut order = 1usize;
    let mut tail = 0.25_f64; // tail bound at m = 1
    while tail >= 1e-13 {
        order += 1;
        tail *= 0.5 / (order as f64 + 1.0);
    }

    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=order {
        term = &term * &scaled / k as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_zero_is_identity() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(expm(&z), DMatrix::identity(3, 3));
    }

    #[test]
    fn scalar_exponentials() {
        for x in [-3.0, -0.1, 0.0, 0.7, 5.0] {
            let e = expm(&DMatrix::from_element(1, 1, x))[(0, 0)];
            assert!((e - f64::exp(x)).abs() <= 1e-12 * f64::exp(x).max(1.0), "{x}");
        }
    }

    #[test]
    fn rotation_generator() {
        // exp([[0, -t], [t, 0]]) = [[cos t, -sin t], [sin t, cos t]].
        let t = 2.3;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a);
        let want = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        assert!((e - want).amax() < 1e-12);
    }

    #[test]
    fn norms() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 0.25]);
        assert_eq!(inf_norm(&a), 3.0);
        assert_eq!(one_norm(&a), 2.25);
    }
}
