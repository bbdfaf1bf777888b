//! Banded solvers for three-point stencils.

/// Solves a tridiagonal system with sub-diagonal `a` (a[0] unused), diagonal `b`
/// and super-diagonal `c` (c[n-1] unused). Returns `None` on a zero pivot.
pub(crate) fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut denom = b[0];
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    cp[0] = if n > 1 { c[0] / denom } else { 0.0 };
    dp[0] = d[0] / denom;
    for i in 1..n {
        denom = b[i] - a[i] * cp[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        cp[i] = if i + 1 < n { c[i] / denom } else { 0.0 };
        dp[i] = (d[i] - a[i] * dp[i - 1]) / denom;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Some(x)
}

/// Cyclic tridiagonal system: a[0] couples row 0 to x[n-1], c[n-1] couples row n-1 to x[0].
pub(crate) fn solve_cyclic(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let alpha = c[n - 1];
    let beta = a[0];
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(a, &bb, c, d)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(a, &bb, c, &u)?;
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    if !fact.is_finite() {
        return None;
    }
    Some(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
}

/// r = A x − d for the (optionally cyclic) three-point operator.
pub(crate) fn tridiagonal_residual(a: &[f64], b: &[f64], c: &[f64], x: &[f64], d: &[f64], cyclic: bool) -> Vec<f64> {
    let n = b.len();
    (0..n)
        .map(|i| {
            let mut s = b[i] * x[i] - d[i];
            if i > 0 {
                s += a[i] * x[i - 1];
            } else if cyclic {
                s += a[0] * x[n - 1];
            }
            if i + 1 < n {
                s += c[i] * x[i + 1];
            } else if cyclic {
                s += c[n - 1] * x[0];
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_known_solution() {
        let a = [0.0, -1.0, -1.0, -1.0];
        let b = [2.0; 4];
        let c = [-1.0, -1.0, -1.0, 0.0];
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let d: Vec<f64> = tridiagonal_residual(&a, &b, &c, &x_true, &[0.0; 4], false);
        let x = solve_tridiagonal(&a, &b, &c, &d).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn cyclic_matches_known_solution() {
        let n = 7;
        let a = vec![-1.0; n];
        let b = vec![2.5; n];
        let c = vec![-1.2; n];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let d = tridiagonal_residual(&a, &b, &c, &x_true, &vec![0.0; n], true);
        let x = solve_cyclic(&a, &b, &c, &d).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-13);
        }
    }
}
