use serde::{Deserialize, Serialize};

use super::NnError;

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(n: usize, learning_rate: f64) -> Self {
        Self {
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> Result<(), NnError> {
        if grad.len() != theta.len() || theta.len() != self.m.len() {
            return Err(NnError::Config(format!(
                "adam length mismatch: theta {}, grad {}, state {}",
                theta.len(),
                grad.len(),
                self.m.len()
            )));
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(NnError::NonFiniteGradient { index: i });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..theta.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            theta[i] -= self.learning_rate * mh / (vh.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_theta() {
        let mut s = AdamState::new(3, 0.1);
        let mut th = vec![1.0, -2.0, 0.5];
        s.step(&mut th, &[0.0; 3]).unwrap();
        assert_eq!(th, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut s = AdamState::new(1, 0.1);
        let mut th = vec![0.0];
        s.step(&mut th, &[1.0]).unwrap();
        // mhat = 1, vhat = 1 -> step = 0.1 / (1 + 1e-8)
        assert!((th[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn decoupled_coordinates() {
        let mut s = AdamState::new(2, 0.01);
        let mut th = vec![0.0, 0.0];
        s.step(&mut th, &[5.0, 0.0]).unwrap();
        assert!(th[0] < 0.0);
        assert_eq!(th[1], 0.0);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut s = AdamState::new(1, 1e-2);
        let mut th = vec![1.0];
        for _ in 0..2000 {
            let g = [2.0 * th[0]];
            s.step(&mut th, &g).unwrap();
        }
        assert!(th[0].abs() < 1e-3, "theta = {}", th[0]);
    }

    #[test]
    fn nan_gradient_rejected() {
        let mut s = AdamState::new(2, 0.1);
        let mut th = vec![0.0, 0.0];
        assert_eq!(
            s.step(&mut th, &[0.0, f64::NAN]),
            Err(NnError::NonFiniteGradient { index: 1 })
        );
    }
}
