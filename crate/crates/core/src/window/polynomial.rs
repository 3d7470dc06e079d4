use serde::{Deserialize, Serialize};

/// Dense polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

/// `j! / (j - n)!`, zero when `n > j`.
pub(crate) fn falling(j: usize, n: usize) -> f64 {
    if n > j {
        return 0.0;
    }
    ((j - n + 1)..=j).map(|i| i as f64).product()
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// `n`-th derivative at `t` (Horner on the differentiated coefficients).
    pub fn derivative_at(&self, n: usize, t: f64) -> f64 {
        let mut acc = 0.0;
        for j in (n..self.coeffs.len()).rev() {
            acc = acc * t + self.coeffs[j] * falling(j, n);
        }
        acc
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivative_at(0, t)
    }

    /// `[p(t), p'(t), p''(t)]`.
    pub fn eval2(&self, t: f64) -> [f64; 3] {
        [
            self.derivative_at(0, t),
            self.derivative_at(1, t),
            self.derivative_at(2, t),
        ]
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| c * j as f64)
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_coefficient_differentiation() {
        let p = Polynomial::new(vec![1.0, -2.0, 0.5, 3.0, -1.0]);
        let dp = p.derivative();
        let ddp = dp.derivative();
        for &t in &[-1.3, 0.0, 0.4, 2.0] {
            let [v, d, dd] = p.eval2(t);
            assert!((d - dp.eval(t)).abs() < 1e-12);
            assert!((dd - ddp.eval(t)).abs() < 1e-12);
            let direct: f64 = p.coeffs.iter().enumerate().map(|(j, c)| c * t.powi(j as i32)).sum();
            assert!((v - direct).abs() < 1e-12);
        }
        assert_eq!(p.derivative_at(5, 0.7), 0.0);
        assert_eq!(p.derivative_at(4, 0.7), -24.0);
    }
}
