use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Activation, Mlp, MlpArch, NnError};

/// Weight initialization. Biases always start at zero.
///
/// Draws come from ChaCha8 seeded with `seed_from_u64(seed)`, consumed layer
/// by layer in row-major weight order, so `(scheme, seed, widths)` fixes the
/// parameters bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum InitScheme {
    /// Uniform on `[-l, l]`, `l = sqrt(6 / (fan_in + fan_out))`.
    #[default]
    Glorot,
    /// Glorot draws multiplied by `scale`.
    GlorotScaled { scale: f64 },
    /// Zero-mean Gaussian with standard deviation `sigma`.
    Normal { sigma: f64 },
}

/// Default multiplier for [`InitScheme::GlorotScaled`].
pub const DEFAULT_GLOROT_SCALE: f64 = 0.5;

impl InitScheme {
    fn validate(&self) -> Result<(), NnError> {
        match *self {
            InitScheme::Glorot => Ok(()),
            InitScheme::GlorotScaled { scale } if !(scale.is_finite() && scale >= 0.0) => Err(
                NnError::Config(format!("glorot scale must be finite and non-negative, got {scale}")),
            ),
            InitScheme::Normal { sigma } if !(sigma.is_finite() && sigma >= 0.0) => Err(
                NnError::Config(format!("normal sigma must be finite and non-negative, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }

    /// Fill `params` (laid out as in [`MlpArch`]) from `rng`.
    pub fn fill(&self, arch: &MlpArch, rng: &mut ChaCha8Rng, params: &mut [f64]) -> Result<(), NnError> {
        self.validate()?;
        assert_eq!(params.len(), arch.n_params());
        let mut off = 0;
        for w in arch.widths.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let n_w = n_in * n_out;
            let weights = &mut params[off..off + n_w];
            match *self {
                InitScheme::Glorot | InitScheme::GlorotScaled { .. } => {
                    let scale = match *self {
                        InitScheme::GlorotScaled { scale } => scale,
                        _ => 1.0,
                    };
                    let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                    for v in weights.iter_mut() {
                        *v = scale * rng.gen_range(-limit..=limit);
                    }
                }
                InitScheme::Normal { sigma } => {
                    if sigma == 0.0 {
                        weights.iter_mut().for_each(|v| *v = 0.0);
                    } else {
                        let dist = Normal::new(0.0, sigma)
                            .map_err(|e| NnError::Config(e.to_string()))?;
                        for v in weights.iter_mut() {
                            *v = dist.sample(rng);
                        }
                    }
                }
            }
            params[off + n_w..off + n_w + n_out]
                .iter_mut()
                .for_each(|b| *b = 0.0);
            off += n_w + n_out;
        }
        Ok(())
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn init_mlp(
    widths: Vec<usize>,
    activation: Activation,
    scheme: InitScheme,
    seed: u64,
) -> Result<Mlp, NnError> {
    let arch = MlpArch::new(widths, activation)?;
    let mut params = vec![0.0; arch.n_params()];
    scheme.fill(&arch, &mut rng_from_seed(seed), &mut params)?;
    Ok(Mlp {
        arch,
        init: scheme,
        seed,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_gives_zero_weights() {
        let m = init_mlp(vec![1, 12, 12, 1], Activation::Tanh, InitScheme::Normal { sigma: 0.0 }, 5)
            .unwrap();
        assert!(m.params.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn glorot_is_deterministic_in_seed() {
        let a = init_mlp(vec![1, 12, 12, 1], Activation::Tanh, InitScheme::Glorot, 42).unwrap();
        let b = init_mlp(vec![1, 12, 12, 1], Activation::Tanh, InitScheme::Glorot, 42).unwrap();
        let c = init_mlp(vec![1, 12, 12, 1], Activation::Tanh, InitScheme::Glorot, 43).unwrap();
        assert_eq!(a.params, b.params);
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn glorot_respects_limit_and_zero_biases() {
        let m = init_mlp(vec![3, 7, 1], Activation::Tanh, InitScheme::Glorot, 1).unwrap();
        let l0 = (6.0f64 / 10.0).sqrt();
        assert!(m.params[..21].iter().all(|w| w.abs() <= l0));
        assert!(m.params[21..28].iter().all(|&b| b == 0.0));
        let s = init_mlp(
            vec![3, 7, 1],
            Activation::Tanh,
            InitScheme::GlorotScaled { scale: 0.5 },
            1,
        )
        .unwrap();
        for (a, b) in m.params.iter().zip(&s.params) {
            assert_eq!(a * 0.5, *b);
        }
    }

    #[test]
    fn normal_sample_std() {
        let m = init_mlp(vec![100, 100, 1], Activation::Tanh, InitScheme::Normal { sigma: 0.1 }, 9)
            .unwrap();
        let w = &m.params[..10_000];
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64;
        assert!((var.sqrt() - 0.1).abs() < 0.005, "std {}", var.sqrt());
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(init_mlp(vec![1, 2, 1], Activation::Tanh, InitScheme::Normal { sigma: -1.0 }, 0).is_err());
        assert!(init_mlp(
            vec![1, 2, 1],
            Activation::Tanh,
            InitScheme::GlorotScaled { scale: f64::NAN },
            0
        )
        .is_err());
    }
}
