use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::ansatz::{Ansatz, AnsatzKind, Evaluator, NetSlot, ScalarSlot};
use crate::nn::InitScheme;

pub const CHECKPOINT_FORMAT: &str = "ifpinn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained parameters with enough metadata to rebuild and check the model.
///
/// JSON fields: `format`, `version`, `config_hash`, `seed`, `init`,
/// `ansatz`, `nets` (name, widths, activation, offset), `scalars`, `theta`
/// (flat parameter vector) and `buffer_dofs` (solved buffer coefficients per
/// subdomain, empty for non-buffer ansatzes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub init: InitScheme,
    pub ansatz: AnsatzKind,
    pub nets: Vec<NetSlot>,
    pub scalars: Vec<ScalarSlot>,
    pub theta: Vec<f64>,
    pub buffer_dofs: Vec<Vec<f64>>,
}

impl Checkpoint {
    pub fn new(
        ansatz: &Ansatz,
        theta: &[f64],
        seed: u64,
        init: InitScheme,
        config_hash: impl Into<String>,
    ) -> Result<Self, TrainError> {
        let dofs = Evaluator::new(ansatz, theta)?.buffer_dofs().to_vec();
        Ok(Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config_hash: config_hash.into(),
            seed,
            init,
            ansatz: ansatz.kind(),
            nets: ansatz.layout().nets.clone(),
            scalars: ansatz.layout().scalars.clone(),
            theta: theta.to_vec(),
            buffer_dofs: dofs,
        })
    }

    /// Checks that this checkpoint was written for `ansatz`.
    pub fn check(&self, ansatz: &Ansatz) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Checkpoint(m));
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return bad(format!(
                "unsupported format {} v{} (expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION})",
                self.format, self.version
            ));
        }
        if self.ansatz != ansatz.kind() {
            return bad(format!("written for a {} ansatz, not {}", self.ansatz, ansatz.kind()));
        }
        let l = ansatz.layout();
        if self.nets != l.nets || self.scalars != l.scalars || self.theta.len() != l.len() {
            return bad("parameter layout differs from the configured ansatz".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        serde_json::from_str(text).map_err(|e| TrainError::Checkpoint(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::AnsatzConfig;
    use crate::problems::{problem1, ProblemSpec};

    #[test]
    fn round_trip_and_layout_check() {
        let spec = ProblemSpec::OneD(problem1());
        let a = AnsatzConfig::new(AnsatzKind::Buffer).with_hidden(&[3]).build(&spec).unwrap();
        let theta = a.layout().init(InitScheme::Glorot, 9).unwrap();
        let c = Checkpoint::new(&a, &theta, 9, InitScheme::Glorot, "abc").unwrap();
        assert_eq!(c.buffer_dofs.len(), 2);
        let back = Checkpoint::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        back.check(&a).unwrap();
        let w = AnsatzConfig::new(AnsatzKind::Window).with_hidden(&[3]).build(&spec).unwrap();
        assert!(back.check(&w).is_err());
        let b = AnsatzConfig::new(AnsatzKind::Buffer).with_hidden(&[4]).build(&spec).unwrap();
        assert!(back.check(&b).is_err());
    }
}
