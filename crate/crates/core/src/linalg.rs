//! Dense solves for the handful of tiny systems the estimators need.

use crate::error::{Error, Result};

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if !(a[piv][col].abs() > 1e-13 * scale) {
            return Err(Error::Singular(format!("pivot {} vanishes in column {col}", a[piv][col])));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Ok(x)
}

/// Weighted least squares through the normal equations `(XᵀWX) β = XᵀW y`.
pub fn lstsq_weighted(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let p = rows.first().map_or(0, |r| r.len());
    if rows.len() < p || p == 0 {
        return Err(Error::Singular(format!("{} observations for {p} unknowns", rows.len())));
    }
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for ((r, &yi), &wi) in rows.iter().zip(y).zip(w) {
        for i in 0..p {
            xty[i] += wi * r[i] * yi;
            for j in 0..p {
                xtx[i][j] += wi * r[i] * r[j];
            }
        }
    }
    solve(xtx, xty)
}

pub fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    lstsq_weighted(rows, y, &vec![1.0; y.len()])
}

/// Straight line `y = intercept + slope x`, solved in centred form so badly
/// scaled abscissae (currents in amperes) stay well conditioned.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 || y.len() != x.len() {
        return Err(Error::Singular(format!("{} points for a line", x.len())));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) || sxx <= 1e-24 * x.iter().map(|v| v * v).sum::<f64>() {
        return Err(Error::Singular("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_system() {
        let x = solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn singular_is_reported() {
        assert!(solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_err());
        assert!(fit_line(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn exact_line() {
        let (a, b) = fit_line(&[1.0, 2.0], &[2.0, 4.0]).unwrap();
        assert!(a.abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }
}
