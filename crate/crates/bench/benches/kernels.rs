use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ifpinn::ansatz::{AnsatzConfig, AnsatzKind, Dir, Evaluator};
use ifpinn::autodiff::{grad_params, Scalar};
use ifpinn::nn::InitScheme;
use ifpinn::problems::{problem1, problem4, reference_p4, ProblemSpec, ReferenceOptions};
use ifpinn::training::{CollocationSet, LossTerms, Objective, PhysicsForm, SoftWeights};
use ifpinn::window::{make_window, WindowKind};

fn windows(c: &mut Criterion) {
    let mut g = c.benchmark_group("make_window");
    for k in 1..=3 {
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| make_window(WindowKind::Dirichlet, black_box(k)).unwrap())
        });
    }
}

fn tape(c: &mut Criterion) {
    let theta: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
    c.bench_function("tape_gradient_64", |b| {
        b.iter(|| {
            grad_params(black_box(&theta), |_, v| {
                let mut acc = v[0].lift(0.0);
                for w in v.windows(2) {
                    acc = acc + (w[0] * w[1]).tanh();
                }
                Ok(acc)
            })
            .unwrap()
        })
    });
}

fn line_evaluation(c: &mut Criterion) {
    let spec = ProblemSpec::OneD(problem1());
    let mut g = c.benchmark_group("evaluate_40_points");
    for kind in [AnsatzKind::Window, AnsatzKind::Buffer] {
        let a = AnsatzConfig::new(kind).with_hidden(&[12, 12]).build(&spec).unwrap();
        let theta = a.layout().init(InitScheme::Glorot, 0).unwrap();
        let xs: Vec<f64> = (1..=40).map(|i| i as f64 / 41.0).collect();
        g.bench_function(kind.to_string(), |b| {
            b.iter(|| {
                let mut e = Evaluator::new(&a, &theta).unwrap();
                for &x in &xs {
                    black_box(e.eval(&[x], &[Dir::axis(0)], None).unwrap());
                }
            })
        });
    }
}

fn loss_gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("loss_gradient");
    g.sample_size(10);
    let p1 = problem1();
    let set1 = CollocationSet::one_d(&p1, 40).unwrap();
    let p4 = problem4();
    let set4 = CollocationSet::two_d(&p4, [40, 20], 20, 40).unwrap();
    let cases = [
        ("p1", ProblemSpec::OneD(p1), &set1, vec![12, 12]),
        ("p4", ProblemSpec::TwoD(p4), &set4, vec![25, 25, 25]),
    ];
    for (name, spec, set, hidden) in &cases {
        for kind in [AnsatzKind::Window, AnsatzKind::Buffer] {
            let a = AnsatzConfig::new(kind).with_hidden(hidden).build(spec).unwrap();
            let terms = LossTerms::resolve(&a, &SoftWeights::default(), PhysicsForm::Cartesian).unwrap();
            let obj = Objective::new(&a, set, terms).unwrap();
            let theta = a.layout().init(InitScheme::Glorot, 0).unwrap();
            g.bench_function(format!("{name}_{kind}"), |b| b.iter(|| obj.value_and_gradient(black_box(&theta)).unwrap()));
        }
    }
}

fn reference(c: &mut Criterion) {
    let p = problem4();
    let mut g = c.benchmark_group("reference_solve");
    g.sample_size(10);
    for n in [64, 128] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| reference_p4(&p, &ReferenceOptions::grid(n, n / 2)).unwrap())
        });
    }
}

criterion_group!(benches, windows, tape, line_evaluation, loss_gradient, reference);
criterion_main!(benches);
