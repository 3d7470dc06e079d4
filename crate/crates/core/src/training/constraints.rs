use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::ansatz::{Ansatz, Dir, Evaluator};
use crate::problems::{BcKind, ProblemSpec};
use crate::window::Side;

/// Residual of one condition along one boundary piece or interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEntry {
    /// `dirichlet`, `neumann`, `interface_value` or `interface_flux`.
    pub condition: String,
    /// Edge name, `left`/`right` end, `interface` or `x=<pos>`.
    pub location: String,
    pub samples: usize,
    pub max: f64,
    pub mean: f64,
    /// `(t, residual)` with `t` the fractional position along the piece.
    pub profile: Vec<[f64; 2]>,
}

impl ConstraintEntry {
    fn new(condition: &str, location: String, profile: Vec<[f64; 2]>) -> Self {
        let n = profile.len();
        let max = profile.iter().map(|p| p[1].abs()).fold(0.0, f64::max);
        let mean = profile.iter().map(|p| p[1].abs()).sum::<f64>() / n.max(1) as f64;
        Self {
            condition: condition.into(),
            location,
            samples: n,
            max,
            mean,
            profile,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// Residuals along densely sampled boundary pieces and interfaces.
    pub dense: Vec<ConstraintEntry>,
    /// Relative residuals of the 2D buffer rows at its own sample points
    /// (empty for other ansatzes).
    pub at_samples: Vec<ConstraintEntry>,
}

impl ConstraintReport {
    /// Largest dense residual of `condition`, if it was checked.
    pub fn max_of(&self, condition: &str) -> Option<f64> {
        self.dense
            .iter()
            .filter(|e| e.condition == condition)
            .map(|e| e.max)
            .reduce(f64::max)
    }

    pub fn max_at_samples(&self) -> Option<f64> {
        self.at_samples.iter().map(|e| e.max).reduce(f64::max)
    }
}

fn centred(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (i as f64 + 0.5) / n as f64)
}

/// Boundary and interface residuals of the trained model, with `dense`
/// samples per 2D boundary edge and along the interface.
pub fn constraint_report(ansatz: &Ansatz, theta: &[f64], dense: usize) -> Result<ConstraintReport, TrainError> {
    let mut e = Evaluator::new(ansatz, theta)?;
    let mut out = Vec::new();
    match ansatz.problem() {
        ProblemSpec::OneD(p) => {
            for (name, x, c) in [("left", p.lo, p.left), ("right", p.hi, p.right)] {
                let j = e.eval(&[x], &[Dir::axis(0)], None)?[0];
                let (cond, r) = match c.kind {
                    BcKind::Dirichlet => ("dirichlet", j.v - c.value),
                    BcKind::Neumann => ("neumann", j.d1 - c.value),
                };
                out.push(ConstraintEntry::new(cond, name.into(), vec![[0.0, r]]));
            }
            for (i, &x) in p.interfaces.iter().enumerate() {
                let lo = e.eval(&[x], &[Dir::axis(0)], Some(Side::Below))?[0];
                let hi = e.eval(&[x], &[Dir::axis(0)], Some(Side::Above))?[0];
                let jump = p.jumps[i];
                let loc = format!("x={x}");
                out.push(ConstraintEntry::new(
                    "interface_value",
                    loc.clone(),
                    vec![[0.0, hi.v - lo.v - jump.value]],
                ));
                let flux = p.kappa[i + 1] * hi.d1 - p.kappa[i] * lo.d1 - jump.flux;
                out.push(ConstraintEntry::new("interface_flux", loc, vec![[0.0, flux]]));
            }
        }
        ProblemSpec::TwoD(p) => {
            for edge in p.boundary_edges() {
                let d = [Dir::line(edge.outward_normal)];
                let mut prof = Vec::with_capacity(dense);
                for t in centred(dense) {
                    let q = edge.segment.at(t);
                    let j = e.eval(&q, &d, None)?[0];
                    let r = match edge.kind {
                        BcKind::Dirichlet => j.v - edge.value,
                        BcKind::Neumann => j.d1 - edge.value,
                    };
                    prof.push([t, r]);
                }
                let cond = match edge.kind {
                    BcKind::Dirichlet => "dirichlet",
                    BcKind::Neumann => "neumann",
                };
                out.push(ConstraintEntry::new(cond, edge.name.clone(), prof));
            }
            let seg = p.interface();
            let d = [Dir::line(p.interface_normal())];
            let (mut pv, mut pf) = (Vec::with_capacity(dense), Vec::with_capacity(dense));
            for t in centred(dense) {
                let q = seg.at(t);
                let lo = e.eval(&q, &d, Some(Side::Below))?[0];
                let hi = e.eval(&q, &d, Some(Side::Above))?[0];
                pv.push([t, hi.v - lo.v]);
                pf.push([t, p.kappa[1] * hi.d1 - p.kappa[0] * lo.d1]);
            }
            out.push(ConstraintEntry::new("interface_value", "interface".into(), pv));
            out.push(ConstraintEntry::new("interface_flux", "interface".into(), pf));
        }
    }
    let mut at_samples = Vec::new();
    if let Ansatz::Buffer2D(b) = ansatz {
        let rows = b.sample_residuals(&mut e)?;
        for cond in ["dirichlet", "neumann", "interface_value", "interface_flux"] {
            for sub in 0..2 {
                let prof: Vec<[f64; 2]> = rows
                    .iter()
                    .filter(|r| r.condition == cond && r.subdomain == sub)
                    .enumerate()
                    .map(|(i, r)| [i as f64, r.relative()])
                    .collect();
                if !prof.is_empty() {
                    at_samples.push(ConstraintEntry::new(cond, format!("subdomain_{sub}"), prof));
                }
            }
        }
    }
    Ok(ConstraintReport { dense: out, at_samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{AnsatzConfig, AnsatzKind};
    use crate::nn::InitScheme;
    use crate::problems::{problem1, problem4};

    #[test]
    fn window_1d_constraints_are_exact() {
        let spec = ProblemSpec::OneD(problem1());
        let a = AnsatzConfig::new(AnsatzKind::Window).build(&spec).unwrap();
        let theta = a.layout().init(InitScheme::Glorot, 3).unwrap();
        let r = constraint_report(&a, &theta, 50).unwrap();
        assert!(r.max_of("interface_value").unwrap() <= 1e-12);
        assert!(r.max_of("interface_flux").unwrap() <= 1e-11);
        assert!(r.max_of("dirichlet").unwrap() <= 1e-13);
        assert!(r.at_samples.is_empty());
    }

    #[test]
    fn buffer_2d_holds_at_samples_only() {
        let spec = ProblemSpec::TwoD(problem4());
        let a = AnsatzConfig::new(AnsatzKind::Buffer).with_hidden(&[8]).build(&spec).unwrap();
        let theta = a.layout().init(InitScheme::Glorot, 5).unwrap();
        let r = constraint_report(&a, &theta, 64).unwrap();
        assert!(r.max_at_samples().unwrap() <= 1e-9);
        assert!(r.max_of("interface_value").unwrap() > 0.0);
        assert_eq!(r.dense.len(), 8);
    }
}
