//! Levinson–Durbin recursion for the Toeplitz normal equations.

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// AR predictor `A(z) = 1 + Σ a_k z^-k` with its reflection coefficients and
/// the prediction-error power after each order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArModel {
    /// `a[0] = 1`, then `a_1..a_M`.
    pub a: Vec<f64>,
    /// `R_1..R_M`.
    pub reflection: Vec<f64>,
    /// `ε_0..ε_M`, with `ε_0 = r(0)`.
    pub errors: Vec<f64>,
}

impl ArModel {
    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    pub fn error(&self) -> f64 {
        *self.errors.last().expect("at least ε_0")
    }
}

pub fn levinson_durbin(acf: &[f64], order: usize) -> Result<ArModel> {
    if acf.is_empty() || !(acf[0] > 0.0) {
        return domain("acf[0] must be positive");
    }
    if order >= acf.len() {
        return domain(format!("order {order} needs at least {} acf values", order + 1));
    }
    let mut a = vec![1.0];
    let mut reflection = Vec::with_capacity(order);
    let mut errors = vec![acf[0]];
    let mut eps = acf[0];
    for n in 0..order {
        let beta: f64 = (0..=n).map(|k| a[k] * acf[n + 1 - k]).sum();
        let r = -beta / eps;
        if !(r.abs() < 1.0) {
            return Err(Error::NonStationary { stage: n + 1, reflection: r.abs() });
        }
        let mut next = a.clone();
        next.push(0.0);
        for k in 1..=n + 1 {
            next[k] += r * a.get(n + 1 - k).copied().unwrap_or(0.0);
        }
        a = next;
        eps *= 1.0 - r * r;
        reflection.push(r);
        errors.push(eps);
    }
    Ok(ArModel { a, reflection, errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order() {
        let m = levinson_durbin(&[1.0, 0.5], 1).unwrap();
        assert!((m.a[1] + 0.5).abs() < 1e-15);
        assert!((m.reflection[0] + 0.5).abs() < 1e-15);
        assert!((m.error() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn white_sequence() {
        let m = levinson_durbin(&[1.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(m.a, vec![1.0, 0.0, 0.0]);
        assert_eq!(m.error(), 1.0);
    }

    #[test]
    fn non_stationary() {
        assert!(matches!(
            levinson_durbin(&[1.0, 1.0], 1),
            Err(Error::NonStationary { stage: 1, .. })
        ));
        assert!(levinson_durbin(&[0.0, 1.0], 1).is_err());
        assert!(levinson_durbin(&[1.0, 0.5], 2).is_err());
    }

    #[test]
    fn ar1_sequence_is_recovered() {
        let acf: Vec<f64> = (0..6).map(|k| 0.7f64.powi(k)).collect();
        let m = levinson_durbin(&acf, 4).unwrap();
        assert!((m.a[1] + 0.7).abs() < 1e-12);
        assert!(m.a[2..].iter().all(|v| v.abs() < 1e-12));
        assert!((m.error() - (1.0 - 0.49)).abs() < 1e-12);
    }
}
