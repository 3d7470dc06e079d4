use ifpinn::ansatz::{AnsatzConfig, AnsatzKind};
use ifpinn::nn::InitScheme;
use ifpinn::problems::{problem1, problem3, problem4, ProblemSpec};
use ifpinn::training::{CollocationSet, LossTerms, Objective, PhysicsForm, SoftWeights};

const KINDS: [AnsatzKind; 4] = [
    AnsatzKind::Window,
    AnsatzKind::Buffer,
    AnsatzKind::SoftPhi,
    AnsatzKind::SoftMultinet,
];

/// Largest per-entry mismatch between the tape gradient and central
/// differences, relative to the entry (floored at 1% of the largest entry).
fn worst_mismatch(obj: &Objective, theta: &[f64]) -> f64 {
    let (_, _, g) = obj.value_and_gradient(theta).unwrap();
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let h = 1e-5 * theta[i].abs().max(1.0);
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[i] += h;
        tm[i] -= h;
        let fd = (obj.value(&tp).unwrap().0 - obj.value(&tm).unwrap().0) / (2.0 * h);
        let rel = (g[i] - fd).abs() / fd.abs().max(g[i].abs()).max(1e-2 * gmax);
        worst = worst.max(rel);
    }
    worst
}

fn check(spec: &ProblemSpec, set: &CollocationSet, hidden: &[usize]) {
    for kind in KINDS {
        let a = AnsatzConfig::new(kind).with_hidden(hidden).build(spec).unwrap();
        let terms = LossTerms::resolve(&a, &SoftWeights::default(), PhysicsForm::Cartesian).unwrap();
        let obj = Objective::new(&a, set, terms).unwrap();
        let mut theta = a.layout().init(InitScheme::Glorot, 3).unwrap();
        for (i, s) in a.layout().scalars.iter().enumerate() {
            theta[s.offset] = 0.3 - 0.2 * i as f64;
        }
        let worst = worst_mismatch(&obj, &theta);
        assert!(worst <= 1e-5, "{kind:?}: relative mismatch {worst}");
    }
}

#[test]
fn line_problem_gradients_match_central_differences() {
    // 1 -> 3 -> 1 networks: ten parameters each
    for p in [problem1(), problem3()] {
        let set = CollocationSet::one_d(&p, 12).unwrap();
        check(&ProblemSpec::OneD(p), &set, &[3]);
    }
}

#[test]
fn rectangle_problem_gradients_match_central_differences() {
    let p = problem4();
    let set = CollocationSet::two_d(&p, [6, 4], 3, 4).unwrap();
    check(&ProblemSpec::TwoD(p), &set, &[2]);
}
