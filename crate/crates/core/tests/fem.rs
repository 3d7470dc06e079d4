use ifpinn::problems::{problem4, reference_p4, solve_reference, test_points, MeshLayout, ReferenceOptions};

fn l2_diff(a: &ifpinn::problems::MeshField, b: &ifpinn::problems::MeshField, pts: &[[f64; 2]]) -> f64 {
    let s: f64 = pts.iter().map(|p| (a.interpolate(*p) - b.interpolate(*p)).powi(2)).sum();
    (s / pts.len() as f64).sqrt()
}

#[test]
fn fitted_mesh_converges_at_second_order() {
    let p = problem4();
    let pts: Vec<[f64; 2]> = test_points(&ifpinn::problems::ProblemSpec::TwoD(p.clone()))
        .into_iter()
        .map(|v| [v[0], v[1]])
        .collect();
    let fields: Vec<_> = [64, 128, 256, 512]
        .iter()
        .map(|&n| {
            let mut o = ReferenceOptions::grid(n, n / 2);
            o.tolerance = 1e-12;
            reference_p4(&p, &o).unwrap()
        })
        .collect();
    let d: Vec<f64> = fields.windows(2).map(|w| l2_diff(&w[0], &w[1], &pts)).collect();
    for w in d.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..=5.0).contains(&ratio), "successive differences {d:?}, ratio {ratio}");
    }
}

/// Five-point scheme with lumped weights on the same node set, solved by SOR.
/// Neumann nodes on the subdomain-0 boundary keep half weights along the edge.
fn five_point_sor(nx: usize, ny: usize, f: &dyn Fn([f64; 2]) -> f64, neumann: &dyn Fn([f64; 2]) -> bool) -> Vec<f64> {
    let (w, h) = (2.0, 1.0);
    let hx = w / nx as f64;
    assert!((hx - h / ny as f64).abs() < 1e-15);
    let node = |i: usize, j: usize| [w * i as f64 / nx as f64, h * j as f64 / ny as f64];
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let on_edge = |i: usize, j: usize| i == 0 || j == 0 || i == nx || j == ny;
    let free: Vec<bool> = (0..=ny)
        .flat_map(|j| (0..=nx).map(move |i| (i, j)))
        .map(|(i, j)| !on_edge(i, j) || neumann(node(i, j)))
        .collect();
    let along = |a: (usize, usize), b: (usize, usize)| {
        (a.0 == 0 && b.0 == 0) || (a.0 == nx && b.0 == nx) || (a.1 == 0 && b.1 == 0) || (a.1 == ny && b.1 == ny)
    };
    let area = |i: usize, j: usize| {
        let (ei, ej) = (i == 0 || i == nx, j == 0 || j == ny);
        match (ei, ej) {
            (false, false) => hx * hx,
            (true, true) => {
                // the cell diagonal runs from lower left to upper right
                if (i == 0) == (j == 0) {
                    hx * hx / 3.0
                } else {
                    hx * hx / 6.0
                }
            }
            _ => hx * hx / 2.0,
        }
    };
    let mut u = vec![0.0; (nx + 1) * (ny + 1)];
    let omega = 1.9;
    for _ in 0..50_000 {
        let mut change: f64 = 0.0;
        for j in 0..=ny {
            for i in 0..=nx {
                if !free[idx(i, j)] {
                    continue;
                }
                let mut diag = 0.0;
                let mut acc = area(i, j) * f(node(i, j));
                let nbrs = [
                    (i.wrapping_sub(1), j),
                    (i + 1, j),
                    (i, j.wrapping_sub(1)),
                    (i, j + 1),
                ];
                for (a, b) in nbrs {
                    if a > nx || b > ny {
                        continue;
                    }
                    let wgt = if along((i, j), (a, b)) { 0.5 } else { 1.0 };
                    diag += wgt;
                    acc += wgt * u[idx(a, b)];
                }
                let new = acc / diag;
                let k = idx(i, j);
                let step = omega * (new - u[k]);
                u[k] += step;
                change = change.max(step.abs());
            }
        }
        if change < 1e-14 {
            break;
        }
    }
    u
}

#[test]
fn single_material_matches_five_point_scheme() {
    let mut p = problem4();
    p.kappa = [1.0, 1.0];
    let src = p.source.clone();
    let f = move |x: [f64; 2]| src.eval(&x, 0);
    let opts = ReferenceOptions {
        layout: MeshLayout::Uniform,
        tolerance: 1e-14,
        ..ReferenceOptions::grid(64, 32)
    };
    let mesh = solve_reference(&p, &opts, &f).unwrap();
    let pb = p.clone();
    let fd = five_point_sor(64, 32, &f, &move |x| pb.subdomain(x) == 0);
    let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(scale > 0.1);
    let mut worst: f64 = 0.0;
    for j in 0..=32 {
        for i in 0..=64 {
            worst = worst.max((mesh.at(i, j) - fd[j * 65 + i]).abs());
        }
    }
    assert!(worst <= 1e-6 * scale, "max difference {worst} (scale {scale})");
}
