use ifpinn::autodiff::{grad_params, jet2_eval, Jet2, Scalar};
use ifpinn::nn::{init_mlp, mlp_forward, Activation, InitScheme};
use ifpinn::window::Window;
use proptest::prelude::*;

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, a)| i as f64 * a).collect()
}

/// Rounding budget of `n` ulps relative to the sum of absolute terms.
fn ulps(c: &[f64], x: f64, n: f64) -> f64 {
    let scale: f64 = c.iter().enumerate().map(|(i, a)| (a * x.powi(i as i32)).abs()).sum();
    n * f64::EPSILON * scale.max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn polynomial_jets_match_symbolic(
        c in prop::collection::vec(-3.0f64..3.0, 1..=6),
        x0 in -2.0f64..2.0,
    ) {
        let j = jet2_eval(|x| {
            Ok(c.iter().rev().fold(Jet2::constant(0.0), |acc, &a| acc * x[0] + Jet2::constant(a)))
        }, &[x0], 0).unwrap();
        let d1 = derivative(&c);
        let d2 = derivative(&d1);
        prop_assert!((j.v - horner(&c, x0)).abs() <= ulps(&c, x0, 8.0));
        prop_assert!((j.d1 - horner(&d1, x0)).abs() <= ulps(&d1, x0, 8.0));
        prop_assert!((j.d2 - horner(&d2, x0)).abs() <= ulps(&d2, x0, 8.0));
    }

    #[test]
    fn window_times_network_obeys_product_rule(seed in any::<u64>(), x in 0.01f64..0.49) {
        let net = init_mlp(vec![1, 5, 5, 1], Activation::Tanh, InitScheme::Glorot, seed).unwrap();
        let w = Window::interior(1, 0.25, 0.25).unwrap();
        let xj = Jet2::variable(x);
        let wj = w.eval(xj).unwrap();
        let nj = mlp_forward(&net, &[xj]).unwrap();
        let prod = wj * nj;
        let expanded = wj.d2 * nj.v + 2.0 * wj.d1 * nj.d1 + wj.v * nj.d2;
        let scale = (wj.d2 * nj.v).abs() + (2.0 * wj.d1 * nj.d1).abs() + (wj.v * nj.d2).abs();
        prop_assert!((prod.d2 - expanded).abs() <= 8.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE));
    }
}

#[test]
fn network_curvature_matches_finite_differences() {
    let h = 1e-4;
    for seed in 0..50 {
        let net = init_mlp(vec![2, 8, 8, 1], Activation::Tanh, InitScheme::Glorot, seed).unwrap();
        let p = [0.3 + 0.01 * seed as f64, -0.2];
        for axis in 0..2 {
            let at = |t: f64| {
                let mut q = p;
                q[axis] += t;
                net.arch.value(&net.params, &q).unwrap()
            };
            let fd = (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h);
            let coords: Vec<Jet2<f64>> = (0..2)
                .map(|i| if i == axis { Jet2::variable(p[i]) } else { Jet2::constant(p[i]) })
                .collect();
            let j = mlp_forward(&net, &coords).unwrap();
            let tol = 1e-4 * fd.abs().max(1e-2);
            assert!((j.d2 - fd).abs() <= tol, "seed {seed} axis {axis}: {} vs {fd}", j.d2);
        }
    }
}

/// A loss mixing products, quotients and transcendental functions of the
/// parameters and of a jet built from them.
fn composed<S: Scalar>(v: &[S]) -> S {
    let zero = v[0].lift(0.0);
    let j = Jet2::new(v[0], v[1], v[2]);
    let k = (j * Jet2::new(v[3], zero, zero)).tanh() + j.exp() * Jet2::new(v[4], zero, zero);
    let r = k.d2 * k.d2 + k.d1 * v[0] + k.v.sigmoid();
    r * r + (v[1] * v[2]).erf() / (v[3] * v[3] + 1.0)
}

#[test]
fn tape_gradients_match_finite_differences() {
    use rand::{Rng, SeedableRng};
    for seed in 0..100u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (val, g) = grad_params(&theta, |_, v| Ok(composed(v))).unwrap();
        assert!((val - composed(&theta)).abs() <= 1e-12 * val.abs().max(1.0));
        let h = 1e-6;
        for i in 0..5 {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += h;
            tm[i] -= h;
            let fd = (composed(&tp) - composed(&tm)) / (2.0 * h);
            let rel = (g[i] - fd).abs() / fd.abs().max(g[i].abs()).max(1e-3);
            assert!(rel < 1e-6, "seed {seed} entry {i}: {} vs {fd}", g[i]);
        }
    }
}

#[test]
fn untouched_parameter_gets_exact_zero() {
    let (_, g) = grad_params(&[2.0, 5.0], |_, v| Ok(v[0] * v[0])).unwrap();
    assert_eq!(g, vec![4.0, 0.0]);
}
