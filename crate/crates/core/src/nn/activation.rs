use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::autodiff::Jet2;

/// Hidden-layer nonlinearity. The output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Activation {
    #[default]
    Tanh,
    Sigmoid,
    /// `x * sigmoid(beta * x)`
    Swish { beta: f64 },
    /// `x * sigmoid(x)`
    Silu,
}

fn sigmoid_derivs(x: f64) -> [f64; 4] {
    let s = crate::autodiff::Scalar::sigmoid(x);
    let s1 = s * (1.0 - s);
    let s2 = s1 * (1.0 - 2.0 * s);
    let s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
    [s, s1, s2, s3]
}

fn swish_derivs(x: f64, beta: f64) -> [f64; 4] {
    let [s, s1, s2, s3] = sigmoid_derivs(beta * x);
    [
        x * s,
        s + beta * x * s1,
        2.0 * beta * s1 + beta * beta * x * s2,
        3.0 * beta * beta * s2 + beta * beta * beta * x * s3,
    ]
}

impl Activation {
    /// `[f, f', f'', f''']` at `x`.
    #[inline]
    pub fn derivs(self, x: f64) -> [f64; 4] {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                let d1 = 1.0 - t * t;
                let d2 = -2.0 * t * d1;
                let d3 = -2.0 * d1 * d1 + 4.0 * t * t * d1;
                [t, d1, d2, d3]
            }
            Activation::Sigmoid => sigmoid_derivs(x),
            Activation::Swish { beta } => swish_derivs(x, beta),
            Activation::Silu => swish_derivs(x, 1.0),
        }
    }

    pub fn apply_jet(self, x: Jet2<f64>) -> Jet2<f64> {
        let [f0, f1, f2, _] = self.derivs(x.v);
        x.chain(f0, f1, f2)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Tanh => f.write_str("tanh"),
            Activation::Sigmoid => f.write_str("sigmoid"),
            Activation::Swish { beta } if *beta == 1.0 => f.write_str("swish"),
            Activation::Swish { beta } => write!(f, "swish:{beta}"),
            Activation::Silu => f.write_str("silu"),
        }
    }
}

impl FromStr for Activation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "silu" => Ok(Activation::Silu),
            "swish" => Ok(Activation::Swish { beta: 1.0 }),
            other => {
                if let Some(b) = other.strip_prefix("swish:") {
                    let beta: f64 = b
                        .parse()
                        .map_err(|_| format!("bad swish beta '{b}'"))?;
                    Ok(Activation::Swish { beta })
                } else {
                    Err(format!(
                        "unknown activation '{s}' (expected tanh, sigmoid, swish, swish:<beta>, silu)"
                    ))
                }
            }
        }
    }
}

impl Serialize for Activation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Activation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_fd(act: Activation) {
        let h = 1e-4;
        for &x in &[-1.7, -0.2, 0.0, 0.45, 2.3] {
            let d = act.derivs(x);
            let p = act.derivs(x + h);
            let m = act.derivs(x - h);
            for k in 0..3 {
                let fd = (p[k] - m[k]) / (2.0 * h);
                assert!((fd - d[k + 1]).abs() < 1e-6, "{act} order {} at {x}", k + 1);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        check_fd(Activation::Tanh);
        check_fd(Activation::Sigmoid);
        check_fd(Activation::Silu);
        check_fd(Activation::Swish { beta: 1.7 });
    }

    #[test]
    fn parse_and_display() {
        for s in ["tanh", "sigmoid", "silu", "swish", "swish:2"] {
            let a: Activation = s.parse().unwrap();
            assert_eq!(a.to_string().parse::<Activation>().unwrap(), a);
        }
        assert!("relu".parse::<Activation>().is_err());
    }
}
