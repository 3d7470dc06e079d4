use ifpinn::geometry::gauss_legendre_nodes;
use ifpinn::problems::{
    analytic_p1, analytic_p2, oracle_1d, problem1, problem2, problem3, problem4, relative_l2, uniform_source_solution,
    ProblemId, Source, P2_DEFAULT_KAPPA,
};
use rand::{Rng, SeedableRng};

fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        1.0
    } else {
        p1
    }
}

/// All roots of P_n on [-1, 1] by sign-change scanning and bisection.
fn legendre_roots(n: usize) -> Vec<f64> {
    let m = 20_000;
    let mut roots = Vec::new();
    for i in 0..m {
        let (mut a, mut b) = (-1.0 + 2.0 * i as f64 / m as f64, -1.0 + 2.0 * (i + 1) as f64 / m as f64);
        let (fa, fb) = (legendre(n, a), legendre(n, b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if legendre(n, a) * legendre(n, c) <= 0.0 {
                b = c;
            } else {
                a = c;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    roots
}

#[test]
fn gauss_legendre_nodes_match_bisection() {
    let two = gauss_legendre_nodes(2).unwrap();
    let r = 1.0 / 3f64.sqrt();
    assert!((two[0] + r).abs() <= 1e-15 && (two[1] - r).abs() <= 1e-15);
    assert_eq!(gauss_legendre_nodes(1).unwrap(), vec![0.0]);
    for n in 3..=10 {
        let nodes = gauss_legendre_nodes(n).unwrap();
        let roots = legendre_roots(n);
        assert_eq!(roots.len(), n, "n={n}");
        for (a, b) in nodes.iter().zip(&roots) {
            assert!((a - b).abs() <= 1e-13, "n={n}: {a} vs {b}");
        }
        for i in 0..n {
            assert!((nodes[i] + nodes[n - 1 - i]).abs() <= 1e-15);
        }
    }
    assert!(gauss_legendre_nodes(0).is_err());
}

#[test]
fn single_interface_value_at_interface() {
    // left: -5x^2 + A x, right: -x^2/2 + B x + 1/2 - B, B = A/10, 0.55 A = 1.625
    let s = analytic_p1(0.1, 1.0, 0.5).unwrap();
    assert!((s.eval(0.5).v - 5.0 / 22.0).abs() <= 1e-15);
    let a = 1.625 / 0.55;
    for x in [0.1, 0.3, 0.45] {
        assert!((s.eval(x).v - (-5.0 * x * x + a * x)).abs() <= 1e-14);
    }
    for x in [0.6, 0.9] {
        let b = a / 10.0;
        assert!((s.eval(x).v - (-0.5 * x * x + b * x + 0.5 - b)).abs() <= 1e-14);
    }
}

#[test]
fn three_interface_closed_form_matches_direct_solve() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let k: [f64; 4] = std::array::from_fn(|_| 10f64.powf(rng.gen_range(-1.0..1.0)));
        let closed = analytic_p2(k);
        let direct = uniform_source_solution(&problem2(k)).unwrap();
        for (a, b) in closed.pieces.iter().zip(&direct.pieces) {
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() <= 1e-12 * a[i].abs().max(1.0), "{k:?}: {a:?} vs {b:?}");
            }
        }
    }
}

#[test]
fn oracles_satisfy_their_problems() {
    for (id, p) in [
        (ProblemId::P1, problem1()),
        (ProblemId::P2, problem2(P2_DEFAULT_KAPPA)),
        (ProblemId::P3, problem3()),
    ] {
        let c = oracle_1d(id, &p).unwrap().check(&p);
        assert!(c.pde <= 1e-8, "{id}: {c:?}");
        assert!(c.boundary <= 1e-12, "{id}: {c:?}");
        assert!(c.value_jump <= 1e-12 && c.flux_jump <= 1e-12, "{id}: {c:?}");
    }
}

/// Conservative three-point scheme on a fine grid with a node at the interface.
fn fine_difference_p3(n: usize) -> Vec<(f64, f64)> {
    let p = problem3();
    let h = 1.0 / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let kappa = |x: f64| if x < 0.5 { 0.1 } else { 1.0 };
    let f = |x: f64| {
        if x < 0.5 {
            p.source.eval(&[x], 0)
        } else if x > 0.5 {
            p.source.eval(&[x], 1)
        } else {
            0.5 * (p.source.eval(&[x], 0) + p.source.eval(&[x], 1))
        }
    };
    // unknowns u_0..u_{n-1}; u_n = 0
    let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let kr = kappa(xs[i] + 0.5 * h);
        if i == 0 {
            // half cell with zero flux on the left
            di[0] = kr / h;
            up[0] = -kr / h;
            rhs[0] = 0.5 * h * f(0.0);
        } else {
            let kl = kappa(xs[i] - 0.5 * h);
            lo[i] = -kl / h;
            di[i] = (kl + kr) / h;
            up[i] = -kr / h;
            rhs[i] = h * f(xs[i]);
        }
    }
    for i in 1..n {
        let m = lo[i] / di[i - 1];
        di[i] -= m * up[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    let mut u = vec![0.0; n + 1];
    u[n - 1] = rhs[n - 1] / di[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = (rhs[i] - up[i] * u[i + 1]) / di[i];
    }
    xs.into_iter().zip(u).collect()
}

#[test]
fn gaussian_source_oracle_matches_fine_differences() {
    let o = oracle_1d(ProblemId::P3, &problem3()).unwrap();
    let fd = fine_difference_p3(20_000);
    let scale = fd.iter().map(|(_, u)| u.abs()).fold(0.0, f64::max);
    for (x, u) in fd.iter().step_by(500) {
        assert!((o.value(*x) - u).abs() <= 1e-6 * scale, "x {x}: {} vs {u}", o.value(*x));
    }
}

#[test]
fn gaussian_sources_peak_at_their_centers() {
    let p = problem4();
    let Source::GaussianSum { amplitudes, centers, radii } = &p.source else {
        panic!("expected a Gaussian sum");
    };
    assert_eq!(amplitudes, &vec![10.0, 20.0, 15.0]);
    for (i, c) in centers.iter().enumerate() {
        let others: f64 = (0..3)
            .filter(|&j| j != i)
            .map(|j| {
                let d2 = (c[0] - centers[j][0]).powi(2) + (c[1] - centers[j][1]).powi(2);
                amplitudes[j] * (-d2 / (radii[j] * radii[j])).exp()
            })
            .sum();
        let v = p.source.eval(c, p.subdomain(*c));
        assert!((v - amplitudes[i] - others).abs() <= 1e-12);
        assert!((v - amplitudes[i]).abs() <= 0.5, "{v}");
    }
}

#[test]
fn relative_error_examples() {
    assert_eq!(relative_l2(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert!((relative_l2(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 1.0).abs() <= 1e-15);
    assert!((relative_l2(&[3.0, 4.0 + 0.5], &[3.0, 4.0]).unwrap() - 0.1).abs() <= 1e-15);
    assert!(relative_l2(&[1.0], &[0.0]).is_err());
    assert!(relative_l2(&[1.0], &[1.0, 2.0]).is_err());
}
