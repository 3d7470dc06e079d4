//! Reference solution for the 2D problem.
//!
//! Linear triangles on a structured `(nx + 1) x (ny + 1)` node layout. In the
//! interface-fitted layout every node row is split at the interface: the
//! first `nx / 2` cells fill the part left of the line and the rest fill the
//! right part, so no triangle is cut by the diffusivity jump and the scheme
//! keeps second-order accuracy. The uniform layout places nodes on a regular
//! grid; with right triangles and a lumped load it reduces to the classic
//! 5-point vertex-centred stencil.
//!
//! Neumann boundaries are natural, Dirichlet nodes are eliminated, and the
//! SPD system is solved with Jacobi-preconditioned conjugate gradients.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{BcKind, Problem2D, ProblemError};
use crate::geometry::Point;

/// Nodal field on a uniform `(nx + 1) x (ny + 1)` grid, row-major in `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub nx: usize,
    pub ny: usize,
    pub bounds: [f64; 4],
    pub values: Vec<f64>,
}

const GRID_MAGIC: &[u8; 8] = b"IFGRID01";

impl GridField {
    pub fn new(nx: usize, ny: usize, bounds: [f64; 4]) -> Self {
        Self {
            nx,
            ny,
            bounds,
            values: vec![0.0; (nx + 1) * (ny + 1)],
        }
    }

    pub fn hx(&self) -> f64 {
        (self.bounds[1] - self.bounds[0]) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.bounds[3] - self.bounds[2]) / self.ny as f64
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        [
            self.bounds[0] + i as f64 * self.hx(),
            self.bounds[2] + j as f64 * self.hy(),
        ]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * (self.nx + 1) + i]
    }

    /// Bilinear interpolation; points outside the box are clamped onto it.
    pub fn interpolate(&self, p: Point) -> f64 {
        let fx = ((p[0] - self.bounds[0]) / self.hx()).clamp(0.0, self.nx as f64);
        let fy = ((p[1] - self.bounds[2]) / self.hy()).clamp(0.0, self.ny as f64);
        let i = (fx.floor() as usize).min(self.nx - 1);
        let j = (fy.floor() as usize).min(self.ny - 1);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        (1.0 - tx) * (1.0 - ty) * self.at(i, j)
            + tx * (1.0 - ty) * self.at(i + 1, j)
            + (1.0 - tx) * ty * self.at(i, j + 1)
            + tx * ty * self.at(i + 1, j + 1)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,u")?;
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                let p = self.node(i, j);
                writeln!(w, "{},{},{}", p[0], p[1], self.at(i, j))?;
            }
        }
        Ok(())
    }

    /// Binary layout: 8-byte magic `IFGRID01`, `nx` and `ny` as little-endian
    /// `u64`, the bounds `[x0, x1, y0, y1]` and then all node values as
    /// little-endian `f64` in row-major order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(GRID_MAGIC)?;
        w.write_all(&(self.nx as u64).to_le_bytes())?;
        w.write_all(&(self.ny as u64).to_le_bytes())?;
        for b in self.bounds {
            w.write_all(&b.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, ProblemError> {
        let io = |e: std::io::Error| ProblemError::Io(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != GRID_MAGIC {
            return Err(ProblemError::Io("not a grid file".into()));
        }
        let mut b8 = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64, ProblemError> {
            r.read_exact(&mut b8).map_err(io)?;
            Ok(u64::from_le_bytes(b8))
        };
        let nx = next_u64(&mut r)? as usize;
        let ny = next_u64(&mut r)? as usize;
        let mut bounds = [0.0; 4];
        for b in bounds.iter_mut() {
            *b = f64::from_bits(next_u64(&mut r)?);
        }
        let n = (nx + 1) * (ny + 1);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(f64::from_bits(next_u64(&mut r)?));
        }
        Ok(Self { nx, ny, bounds, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshLayout {
    /// Node rows split at the interface; requires an even `nx`.
    InterfaceFitted,
    /// Regular grid; triangles may straddle the interface.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptions {
    pub nx: usize,
    pub ny: usize,
    pub layout: MeshLayout,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            nx: 256,
            ny: 128,
            layout: MeshLayout::InterfaceFitted,
            tolerance: 1e-10,
            max_iterations: 100_000,
        }
    }
}

impl ReferenceOptions {
    pub fn grid(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            ..Self::default()
        }
    }
}

/// Nodal solution on the structured triangle mesh, interpolated linearly
/// inside each triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshField {
    pub nx: usize,
    pub ny: usize,
    pub layout: MeshLayout,
    pub width: f64,
    pub height: f64,
    pub x_bottom: f64,
    pub x_top: f64,
    pub values: Vec<f64>,
}

impl MeshField {
    fn empty(problem: &Problem2D, nx: usize, ny: usize, layout: MeshLayout) -> Self {
        Self {
            nx,
            ny,
            layout,
            width: problem.width,
            height: problem.height,
            x_bottom: problem.x_bottom,
            x_top: problem.x_top,
            values: vec![0.0; (nx + 1) * (ny + 1)],
        }
    }

    fn split_col(&self) -> usize {
        self.nx / 2
    }

    fn x_split(&self, y: f64) -> f64 {
        self.x_bottom + (self.x_top - self.x_bottom) * (y / self.height)
    }

    fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        let y = self.height * j as f64 / self.ny as f64;
        let x = match self.layout {
            MeshLayout::Uniform => self.width * i as f64 / self.nx as f64,
            MeshLayout::InterfaceFitted => {
                let (l, nl) = (self.x_split(y), self.split_col());
                if i <= nl {
                    l * i as f64 / nl as f64
                } else {
                    l + (self.width - l) * (i - nl) as f64 / (self.nx - nl) as f64
                }
            }
        };
        [x, y]
    }

    /// Whether node `(i, j)` belongs to subdomain 0 (interface nodes do not).
    fn node_in_left(&self, i: usize, j: usize, problem: &Problem2D) -> bool {
        match self.layout {
            MeshLayout::InterfaceFitted => i < self.split_col(),
            MeshLayout::Uniform => problem.subdomain(self.node(i, j)) == 0,
        }
    }

    /// Cell `(i, j)` containing `p` (clamped onto the domain).
    fn cell(&self, p: Point) -> (usize, usize) {
        let fy = (p[1] / self.height * self.ny as f64).clamp(0.0, self.ny as f64);
        let j = (fy.floor() as usize).min(self.ny - 1);
        let i = match self.layout {
            MeshLayout::Uniform => {
                let fx = (p[0] / self.width * self.nx as f64).clamp(0.0, self.nx as f64);
                (fx.floor() as usize).min(self.nx - 1)
            }
            MeshLayout::InterfaceFitted => {
                let (l, nl) = (self.x_split(p[1].clamp(0.0, self.height)), self.split_col());
                if p[0] < l {
                    let xi = (p[0] / l * nl as f64).max(0.0);
                    (xi.floor() as usize).min(nl - 1)
                } else {
                    let xi = (p[0] - l) / (self.width - l) * (self.nx - nl) as f64;
                    nl + (xi.floor().max(0.0) as usize).min(self.nx - nl - 1)
                }
            }
        };
        (i, j)
    }

    /// The two triangles of a cell as node index triples.
    fn triangles(&self, i: usize, j: usize) -> [[(usize, usize); 3]; 2] {
        let (a, b, c, d) = ((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1));
        [[a, b, c], [a, c, d]]
    }

    pub fn interpolate(&self, p: Point) -> f64 {
        let (i, j) = self.cell(p);
        let tris = self.triangles(i, j);
        let mut best = (f64::NEG_INFINITY, 0.0);
        for tri in tris {
            let v: Vec<Point> = tri.iter().map(|&(a, b)| self.node(a, b)).collect();
            let w = barycentric(&v, p);
            let min = w[0].min(w[1]).min(w[2]);
            let val = (0..3).map(|k| w[k] * self.at(tri[k].0, tri[k].1)).sum();
            if min >= -1e-12 {
                return val;
            }
            if min > best.0 {
                best = (min, val);
            }
        }
        best.1
    }

    /// Resample onto a uniform grid for export.
    pub fn to_grid(&self, nx: usize, ny: usize) -> GridField {
        let mut g = GridField::new(nx, ny, [0.0, self.width, 0.0, self.height]);
        for j in 0..=ny {
            for i in 0..=nx {
                let p = g.node(i, j);
                g.values[j * (nx + 1) + i] = self.interpolate(p);
            }
        }
        g
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,u")?;
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                let p = self.node(i, j);
                writeln!(w, "{},{},{}", p[0], p[1], self.at(i, j))?;
            }
        }
        Ok(())
    }
}

fn barycentric(v: &[Point], p: Point) -> [f64; 3] {
    let det = (v[1][1] - v[2][1]) * (v[0][0] - v[2][0]) + (v[2][0] - v[1][0]) * (v[0][1] - v[2][1]);
    let l0 = ((v[1][1] - v[2][1]) * (p[0] - v[2][0]) + (v[2][0] - v[1][0]) * (p[1] - v[2][1])) / det;
    let l1 = ((v[2][1] - v[0][1]) * (p[0] - v[2][0]) + (v[0][0] - v[2][0]) * (p[1] - v[2][1])) / det;
    [l0, l1, 1.0 - l0 - l1]
}

/// Sparse SPD system over the free nodes.
struct System {
    /// grid index -> unknown index
    unknown: Vec<Option<usize>>,
    diag: Vec<f64>,
    off: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

impl System {
    fn add(&mut self, u: usize, v: usize, a: f64) {
        if u == v {
            self.diag[u] += a;
            return;
        }
        match self.off[u].iter_mut().find(|e| e.0 == v) {
            Some(e) => e.1 += a,
            None => self.off[u].push((v, a)),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (u, yu) in y.iter_mut().enumerate() {
            let mut acc = self.diag[u] * x[u];
            for &(v, a) in &self.off[u] {
                acc += a * x[v];
            }
            *yu = acc;
        }
    }
}

fn assemble(problem: &Problem2D, mesh: &MeshField, source: &dyn Fn(Point) -> f64) -> System {
    let (nx, ny) = (mesh.nx, mesh.ny);
    let on_boundary = |i: usize, j: usize| i == 0 || j == 0 || i == nx || j == ny;
    let mut unknown = vec![None; (nx + 1) * (ny + 1)];
    let mut count = 0;
    for j in 0..=ny {
        for i in 0..=nx {
            let sub = if mesh.node_in_left(i, j, problem) { 0 } else { 1 };
            let dirichlet = on_boundary(i, j) && problem.boundary_kinds[sub] == BcKind::Dirichlet;
            if !dirichlet {
                unknown[mesh.index(i, j)] = Some(count);
                count += 1;
            }
        }
    }
    let mut sys = System {
        unknown,
        diag: vec![0.0; count],
        off: vec![Vec::with_capacity(7); count],
        rhs: vec![0.0; count],
    };
    let mut lumped = vec![0.0; (nx + 1) * (ny + 1)];
    for j in 0..ny {
        for i in 0..nx {
            for tri in mesh.triangles(i, j) {
                let v: Vec<Point> = tri.iter().map(|&(a, b)| mesh.node(a, b)).collect();
                let g: Vec<usize> = tri.iter().map(|&(a, b)| mesh.index(a, b)).collect();
                let centroid = [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0];
                let kappa = problem.kappa_at(centroid);
                let b = [v[1][1] - v[2][1], v[2][1] - v[0][1], v[0][1] - v[1][1]];
                let c = [v[2][0] - v[1][0], v[0][0] - v[2][0], v[1][0] - v[0][0]];
                let area = 0.5 * (b[0] * c[1] - b[1] * c[0]).abs();
                for a in 0..3 {
                    lumped[g[a]] += area / 3.0;
                    let Some(ua) = sys.unknown[g[a]] else { continue };
                    for bb in 0..3 {
                        // eliminated Dirichlet neighbours carry zero data
                        let Some(ub) = sys.unknown[g[bb]] else { continue };
                        let k = kappa * (b[a] * b[bb] + c[a] * c[bb]) / (4.0 * area);
                        sys.add(ua, ub, k);
                    }
                }
            }
        }
    }
    for j in 0..=ny {
        for i in 0..=nx {
            if let Some(u) = sys.unknown[mesh.index(i, j)] {
                sys.rhs[u] = source(mesh.node(i, j)) * lumped[mesh.index(i, j)];
            }
        }
    }
    sys
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pcg(sys: &System, tol: f64, max_iter: usize) -> Result<Vec<f64>, ProblemError> {
    let n = sys.rhs.len();
    let mut x = vec![0.0; n];
    let bnorm = dot(&sys.rhs, &sys.rhs).sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = sys.rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&sys.diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    for it in 0..max_iter {
        sys.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rel = dot(&r, &r).sqrt() / bnorm;
        if it % 100 == 0 {
            history.push(rel);
        }
        if rel <= tol {
            return Ok(x);
        }
        if !rel.is_finite() {
            break;
        }
        for k in 0..n {
            z[k] = r[k] / sys.diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let residual = dot(&r, &r).sqrt() / bnorm;
    Err(ProblemError::NotConverged {
        iterations: max_iter,
        residual,
        history,
    })
}

/// Solve `-div(k grad u) = source` on the problem geometry.
pub fn solve_reference(
    problem: &Problem2D,
    opts: &ReferenceOptions,
    source: &dyn Fn(Point) -> f64,
) -> Result<MeshField, ProblemError> {
    problem.validate()?;
    if opts.nx < 2 || opts.ny < 1 {
        return Err(ProblemError::Invalid("mesh needs at least 2x1 cells".into()));
    }
    if opts.layout == MeshLayout::InterfaceFitted && !opts.nx.is_multiple_of(2) {
        return Err(ProblemError::Invalid(format!(
            "interface-fitted mesh needs an even nx, got {}",
            opts.nx
        )));
    }
    let mut field = MeshField::empty(problem, opts.nx, opts.ny, opts.layout);
    let sys = assemble(problem, &field, source);
    let sol = pcg(&sys, opts.tolerance, opts.max_iterations)?;
    for (g, u) in sys.unknown.iter().enumerate() {
        if let Some(u) = u {
            field.values[g] = sol[*u];
        }
    }
    Ok(field)
}

/// Reference field for the 2D problem at resolution `nx x ny` (at least 64 x 32).
pub fn reference_p4(problem: &Problem2D, opts: &ReferenceOptions) -> Result<MeshField, ProblemError> {
    if opts.nx < 64 || opts.ny < 32 {
        return Err(ProblemError::Invalid(format!(
            "reference grid must be at least 64x32, got {}x{}",
            opts.nx, opts.ny
        )));
    }
    let src = problem.source.clone();
    let pb = problem.clone();
    solve_reference(problem, opts, &move |p| src.eval(&p, pb.subdomain(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{problem4, Source};

    #[test]
    fn zero_source_gives_zero_field() {
        let mut p = problem4();
        p.source = Source::Constant { value: 0.0 };
        let f = reference_p4(&p, &ReferenceOptions::grid(64, 32)).unwrap();
        assert!(f.values.iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn small_grid_rejected() {
        assert!(reference_p4(&problem4(), &ReferenceOptions::grid(32, 16)).is_err());
    }

    #[test]
    fn bilinear_reproduces_bilinear_data() {
        let mut g = GridField::new(4, 2, [0.0, 2.0, 0.0, 1.0]);
        for j in 0..=2 {
            for i in 0..=4 {
                let p = g.node(i, j);
                g.values[j * 5 + i] = 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
            }
        }
        let p = [1.37, 0.61];
        let e = 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
        assert!((g.interpolate(p) - e).abs() < 1e-14);
    }

    #[test]
    fn binary_round_trip() {
        let mut g = GridField::new(3, 2, [0.0, 2.0, 0.0, 1.0]);
        g.values.iter_mut().enumerate().for_each(|(i, v)| *v = i as f64 * 0.1);
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(GridField::read_binary(&buf[..]).unwrap(), g);
    }
}
