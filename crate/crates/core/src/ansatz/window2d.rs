use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{jet_sum, AnsatzError, Backend, Dir, NetSlot, ParamLayout};
use crate::autodiff::Jet2;
use crate::geometry::{Point, Segment};
use crate::nn::{Activation, JetInput, MlpArch};
use crate::problems::{BcKind, Problem2D};
use crate::window::{Side, Window};

type J = Jet2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window2DMode {
    /// Interface conditions built in; outer boundary left to penalty losses.
    #[default]
    InterfaceOnlyHard,
    /// Boundary, interface and corner windows; every condition built in.
    FullHard,
}

/// Map from a subdomain of the split rectangle onto the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceMap {
    Identity,
    /// `xi1 = x / l(y)`, `l(y) = x_bottom + (x_top - x_bottom) y / height`.
    Left { x_bottom: f64, x_top: f64, height: f64 },
    /// `xi1 = (x - width) / l(y) + 1`, `l(y) = (width - x_bottom) + (x_bottom - x_top) y / height`.
    Right {
        width: f64,
        x_bottom: f64,
        x_top: f64,
        height: f64,
    },
}

impl ReferenceMap {
    pub fn for_subdomain(p: &Problem2D, sub: usize) -> Self {
        if sub == 0 {
            ReferenceMap::Left {
                x_bottom: p.x_bottom,
                x_top: p.x_top,
                height: p.height,
            }
        } else {
            ReferenceMap::Right {
                width: p.width,
                x_bottom: p.x_bottom,
                x_top: p.x_top,
                height: p.height,
            }
        }
    }

    pub fn map_jets(&self, x: J, y: J) -> [J; 2] {
        match *self {
            ReferenceMap::Identity => [x, y],
            ReferenceMap::Left {
                x_bottom,
                x_top,
                height,
            } => {
                let l = y * ((x_top - x_bottom) / height) + x_bottom;
                [x / l, y / height]
            }
            ReferenceMap::Right {
                width,
                x_bottom,
                x_top,
                height,
            } => {
                let l = y * ((x_bottom - x_top) / height) + (width - x_bottom);
                [(x - width) / l + 1.0, y / height]
            }
        }
    }

    pub fn map_point(&self, p: Point) -> Point {
        let [a, b] = self.map_jets(J::constant(p[0]), J::constant(p[1]));
        [a.v, b.v]
    }
}

/// A boundary edge (by name) or the interface.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum EdgeRef {
    Interface,
    Boundary(String),
}

impl From<String> for EdgeRef {
    fn from(s: String) -> Self {
        if s == "interface" {
            EdgeRef::Interface
        } else {
            EdgeRef::Boundary(s)
        }
    }
}

impl From<EdgeRef> for String {
    fn from(e: EdgeRef) -> Self {
        e.to_string()
    }
}

impl std::fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeRef::Interface => f.write_str("interface"),
            EdgeRef::Boundary(s) => f.write_str(s),
        }
    }
}

/// Outer-product window along an edge: normal window times an interior
/// window in the tangential direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeWindow {
    pub edge: EdgeRef,
    pub center: Point,
    pub normal_size: f64,
    pub tangential_size: f64,
}

/// Polar window at a junction of edges and/or the interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerWindow {
    pub center: Point,
    pub radius: f64,
}

/// Window placement for [`Window2DMode::FullHard`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullHardLayout {
    /// Interior window center in reference coordinates.
    pub interior_center: [f64; 2],
    /// Interior window half-widths in reference coordinates.
    pub interior_half_width: [f64; 2],
    /// Order of every interior-type window (interior, tangential, radial).
    pub interior_order: usize,
    /// `(k_d, k_n)` of the edge and interface windows.
    pub edge_orders: [usize; 2],
    /// `(k_d, k_n)` of the corner windows in the angle.
    pub corner_orders: [usize; 2],
    pub edges: Vec<EdgeWindow>,
    pub corners: Vec<CornerWindow>,
}

impl FullHardLayout {
    /// Layout for the `[0,2] x [0,1]` rectangle split from `(0.8, 0)` to
    /// `(1.2, 1)`.
    pub fn problem4_default() -> Self {
        let l = 29f64.sqrt() / 5.0;
        let edge = |name: &str, c: Point, n: f64, t: f64| EdgeWindow {
            edge: EdgeRef::from(name.to_string()),
            center: c,
            normal_size: n,
            tangential_size: t,
        };
        let corner = |c: Point, r: f64| CornerWindow { center: c, radius: r };
        Self {
            interior_center: [0.5, 0.5],
            interior_half_width: [0.5, 0.5],
            interior_order: 1,
            edge_orders: [3, 3],
            corner_orders: [3, 3],
            edges: vec![
                edge("left", [0.0, 0.5], 0.5, 0.5),
                edge("bottom_left", [0.4, 0.0], 0.5, 0.4),
                edge("top_left", [0.54, 1.0], 0.3, 0.54),
                edge("right", [2.0, 0.5], 0.5, 0.5),
                edge("bottom_right", [1.46, 0.0], 0.3, 0.54),
                edge("top_right", [1.6, 1.0], 0.5, 0.4),
                edge("interface", [1.0, 0.5], 0.25 * l, 0.4 * l),
            ],
            corners: vec![
                corner([0.0, 0.0], 0.4),
                corner([0.0, 1.0], 0.5),
                corner([2.0, 0.0], 0.5),
                corner([2.0, 1.0], 0.4),
                corner([0.8, 0.0], 0.4),
                corner([1.2, 1.0], 0.4),
            ],
        }
    }

    pub fn validate(&self) -> Result<(), AnsatzError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !self.interior_half_width.iter().all(|&h| positive(h)) {
            return Err(AnsatzError::Config("interior half-widths must be positive".into()));
        }
        let orders = [self.interior_order]
            .into_iter()
            .chain(self.edge_orders)
            .chain(self.corner_orders);
        if orders.into_iter().any(|k| k == 0) {
            return Err(AnsatzError::Config("window orders must be at least 1".into()));
        }
        for e in &self.edges {
            if !(positive(e.normal_size) && positive(e.tangential_size)) {
                return Err(AnsatzError::Config(format!("edge window `{}` needs positive sizes", e.edge)));
            }
        }
        for c in &self.corners {
            if !positive(c.radius) {
                return Err(AnsatzError::Config(format!(
                    "corner window at ({}, {}) needs a positive radius",
                    c.center[0], c.center[1]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig2D {
    #[serde(default)]
    pub mode: Window2DMode,
    /// Interior window order (interface-only mode).
    #[serde(default = "one")]
    pub interior_order: usize,
    /// `(k_d, k_n)` of the interface windows (interface-only mode).
    #[serde(default = "ones")]
    pub interface_orders: [usize; 2],
    /// Normal half-width of the interface windows and of the interior
    /// windows, which are centred this far from the interface
    /// (interface-only mode).
    #[serde(default = "default_interface_size")]
    pub interface_normal_size: f64,
    /// Full-hard layout; the built-in default when absent.
    #[serde(default)]
    pub layout: Option<FullHardLayout>,
}

fn one() -> usize {
    1
}
fn ones() -> [usize; 2] {
    [1, 1]
}
fn default_interface_size() -> f64 {
    1.2
}

impl Default for WindowConfig2D {
    fn default() -> Self {
        Self {
            mode: Window2DMode::InterfaceOnlyHard,
            interior_order: 1,
            interface_orders: [1, 1],
            interface_normal_size: default_interface_size(),
            layout: None,
        }
    }
}

impl WindowConfig2D {
    pub fn full_hard() -> Self {
        Self {
            mode: Window2DMode::FullHard,
            layout: Some(FullHardLayout::problem4_default()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AnsatzError> {
        if self.interior_order == 0 || self.interface_orders.contains(&0) {
            return Err(AnsatzError::Config("window orders must be at least 1".into()));
        }
        if !(self.interface_normal_size > 0.0 && self.interface_normal_size.is_finite()) {
            return Err(AnsatzError::Config("interface window size must be positive".into()));
        }
        if let Some(l) = &self.layout {
            l.validate()?;
        }
        Ok(())
    }
}

/// One-sided window value: the limit from the window centre's side of `x`;
/// at the centre itself, the side the Neumann normal points away from.
fn win(w: &Window, x: J) -> J {
    let c = w.spec.center;
    let side = if x.v < c {
        Side::Above
    } else if x.v > c || w.spec.normal_sign > 0.0 {
        Side::Below
    } else {
        Side::Above
    };
    w.eval_from(x, side)
}

fn close(a: Point, b: Point) -> bool {
    (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-9
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CurveKind {
    Dirichlet(f64),
    /// Prescribed outward normal derivative.
    Neumann(f64),
    Interface,
}

#[derive(Debug, Clone)]
struct Curve {
    edge: EdgeRef,
    segment: Segment,
    kind: CurveKind,
    /// Owning subdomain; `None` for the interface.
    sub: Option<usize>,
    /// Outward normal, or the normal out of subdomain 0 on the interface.
    normal: Point,
    value_net: Option<NetSlot>,
    flux_net: Option<NetSlot>,
}

impl Curve {
    /// Position along the segment scaled to `[0, 1]` (of the projection).
    fn param(&self, x: J, y: J) -> J {
        let Segment { a, b } = self.segment;
        let d = [b[0] - a[0], b[1] - a[1]];
        let l2 = d[0] * d[0] + d[1] * d[1];
        ((x - a[0]) * d[0] + (y - a[1]) * d[1]) * (1.0 / l2)
    }
}

#[derive(Debug, Clone)]
struct EdgeTerm {
    curve: usize,
    center: Point,
    normal: Point,
    tangent: Point,
    wd: Window,
    /// Neumann windows used on the `nu < 0` and the `nu > 0` side.
    wn: [Window; 2],
    tangential: Option<Window>,
}

#[derive(Debug, Clone)]
struct Ray {
    curve: usize,
    angle: f64,
    wd: Window,
    wn: Window,
    /// Curve parameter at the apex and its rate along the ray.
    s0: f64,
    ds_dr: f64,
}

/// The part of a corner window inside one subdomain: a wedge bounded by two
/// rays (edges or the interface) leaving the apex.
#[derive(Debug, Clone)]
pub struct CornerWedge {
    center: Point,
    radius: f64,
    subdomain: usize,
    lo: f64,
    width: f64,
    radial: Window,
    rays: [Ray; 2],
}

impl CornerWedge {
    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn subdomain(&self) -> usize {
        self.subdomain
    }

    /// Angles of the bounding rays, lower first.
    pub fn ray_angles(&self) -> [f64; 2] {
        [self.rays[0].angle, self.rays[1].angle]
    }

    pub fn angle_width(&self) -> f64 {
        self.width
    }

    /// `[W_d, W_n]` of ray `ray` (0 = lower angle) in polar coordinates about
    /// the apex; `dW_n/dalpha = 1` on the ray.
    pub fn polar_weights(&self, ray: usize, r: J, alpha: J) -> [J; 2] {
        let ray = &self.rays[ray];
        let wr = win(&self.radial, r);
        [win(&ray.wd, alpha) * wr, win(&ray.wn, alpha) * wr]
    }

    fn polar(&self, x: J, y: J) -> Result<(J, J), AnsatzError> {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        let r2 = dx * dx + dy * dy;
        let mid = self.lo + 0.5 * self.width;
        if r2.v == 0.0 {
            if [dx.d1, dx.d2, dy.d1, dy.d2].iter().any(|&d| d != 0.0) {
                return Err(AnsatzError::CornerApex {
                    point: self.center.to_vec(),
                });
            }
            return Ok((J::constant(0.0), J::constant(mid)));
        }
        let mut a = J::atan2(dy, dx);
        while a.v - mid > PI {
            a.v -= 2.0 * PI;
        }
        while a.v - mid < -PI {
            a.v += 2.0 * PI;
        }
        a.v = a.v.clamp(self.lo, self.lo + self.width);
        Ok((r2.sqrt(), a))
    }
}

#[derive(Debug, Clone)]
enum InteriorWindow {
    /// Window in the signed distance to the interface.
    Distance(Window),
    /// Product window in reference coordinates.
    Reference { map: ReferenceMap, windows: [Window; 2] },
}

#[derive(Debug, Clone)]
struct InteriorTerm {
    net: NetSlot,
    window: InteriorWindow,
}

/// Windowing ansatz on the split rectangle.
///
/// In interface-only mode each subdomain has one network under a window in
/// the signed interface distance, and the interface carries a value and a
/// flux network of the arclength coordinate under Dirichlet/Neumann windows
/// in the distance. Full-hard mode maps each subdomain onto the unit square,
/// adds an edge window with one tangential network per boundary edge (the
/// free part of the condition), and polar corner windows at every junction.
#[derive(Debug, Clone)]
pub struct Window2D {
    problem: Problem2D,
    config: WindowConfig2D,
    layout: ParamLayout,
    interior: Vec<InteriorTerm>,
    curves: Vec<Curve>,
    edges: Vec<EdgeTerm>,
    wedges: Vec<CornerWedge>,
}

impl Window2D {
    pub fn new(
        problem: &Problem2D,
        config: &WindowConfig2D,
        hidden: &[usize],
        tangential_hidden: &[usize],
        activation: Activation,
    ) -> Result<Self, AnsatzError> {
        problem.validate().map_err(|e| AnsatzError::Config(e.to_string()))?;
        config.validate()?;
        let full = config.mode == Window2DMode::FullHard;
        let widths = |input: usize, h: &[usize]| -> Vec<usize> { [input].into_iter().chain(h.iter().copied()).chain([1]).collect() };
        let mut layout = ParamLayout::new();
        let interior_nets: Vec<NetSlot> = (0..2)
            .map(|s| Ok(layout.add_net(format!("interior_{s}"), MlpArch::new(widths(2, hidden), activation)?)))
            .collect::<Result<_, AnsatzError>>()?;
        let tnet = |layout: &mut ParamLayout, name: String| -> Result<NetSlot, AnsatzError> {
            Ok(layout.add_net(name, MlpArch::new(widths(1, tangential_hidden), activation)?))
        };
        let itf = Curve {
            edge: EdgeRef::Interface,
            segment: problem.interface(),
            kind: CurveKind::Interface,
            sub: None,
            normal: problem.interface_normal(),
            value_net: Some(tnet(&mut layout, "interface_value".into())?),
            flux_net: Some(tnet(&mut layout, "interface_flux".into())?),
        };
        let mut curves = Vec::new();
        for e in problem.boundary_edges() {
            let (kind, value_net, flux_net) = match e.kind {
                BcKind::Dirichlet => (
                    CurveKind::Dirichlet(e.value),
                    None,
                    full.then(|| tnet(&mut layout, format!("edge_{}_flux", e.name))).transpose()?,
                ),
                BcKind::Neumann => (
                    CurveKind::Neumann(e.value),
                    full.then(|| tnet(&mut layout, format!("edge_{}_value", e.name))).transpose()?,
                    None,
                ),
            };
            curves.push(Curve {
                edge: EdgeRef::Boundary(e.name.clone()),
                segment: e.segment,
                kind,
                sub: Some(e.subdomain),
                normal: e.outward_normal,
                value_net,
                flux_net,
            });
        }
        curves.push(itf);
        let itf_index = curves.len() - 1;

        let mut interior = Vec::with_capacity(2);
        let mut edges = Vec::new();
        let mut wedges = Vec::new();
        match config.mode {
            Window2DMode::InterfaceOnlyHard => {
                let h = config.interface_normal_size;
                for (s, net) in interior_nets.into_iter().enumerate() {
                    let c = if s == 0 { -h } else { h };
                    interior.push(InteriorTerm {
                        net,
                        window: InteriorWindow::Distance(Window::interior(config.interior_order, c, h)?),
                    });
                }
                let seg = problem.interface();
                let [kd, kn] = config.interface_orders;
                edges.push(EdgeTerm {
                    curve: itf_index,
                    center: seg.at(0.5),
                    normal: problem.interface_normal(),
                    tangent: seg.tangent(),
                    wd: Window::dirichlet(kd, 0.0, h)?,
                    wn: [Window::neumann(kn, 0.0, h, 1.0)?, Window::neumann(kn, 0.0, h, -1.0)?],
                    tangential: None,
                });
            }
            Window2DMode::FullHard => {
                let lay = config.layout.clone().unwrap_or_else(FullHardLayout::problem4_default);
                let k = lay.interior_order;
                for (s, net) in interior_nets.into_iter().enumerate() {
                    let [c1, c2] = lay.interior_center;
                    let [h1, h2] = lay.interior_half_width;
                    interior.push(InteriorTerm {
                        net,
                        window: InteriorWindow::Reference {
                            map: ReferenceMap::for_subdomain(problem, s),
                            windows: [Window::interior(k, c1, h1)?, Window::interior(k, c2, h2)?],
                        },
                    });
                }
                let [kd, kn] = lay.edge_orders;
                for ew in &lay.edges {
                    let ci = curves
                        .iter()
                        .position(|c| c.edge == ew.edge)
                        .ok_or_else(|| AnsatzError::Config(format!("unknown edge `{}` in window layout", ew.edge)))?;
                    let c = &curves[ci];
                    let (hn, ht) = (ew.normal_size, ew.tangential_size);
                    edges.push(EdgeTerm {
                        curve: ci,
                        center: ew.center,
                        normal: c.normal,
                        tangent: c.segment.tangent(),
                        wd: Window::dirichlet(kd, 0.0, hn)?,
                        wn: [Window::neumann(kn, 0.0, hn, 1.0)?, Window::neumann(kn, 0.0, hn, -1.0)?],
                        tangential: Some(Window::interior(k, 0.0, ht)?),
                    });
                }
                wedges = build_wedges(problem, &curves, &lay)?;
            }
        }
        let out = Self {
            problem: problem.clone(),
            config: config.clone(),
            layout,
            interior,
            curves,
            edges,
            wedges,
        };
        if full {
            out.check_coverage()?;
        }
        Ok(out)
    }

    pub fn problem(&self) -> &Problem2D {
        &self.problem
    }

    pub fn config(&self) -> &WindowConfig2D {
        &self.config
    }

    pub fn mode(&self) -> Window2DMode {
        self.config.mode
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn wedges(&self) -> &[CornerWedge] {
        &self.wedges
    }

    /// Distinct corner apexes.
    pub fn corner_points(&self) -> Vec<Point> {
        let mut pts: Vec<Point> = Vec::new();
        for w in &self.wedges {
            if !pts.iter().any(|p| close(*p, w.center)) {
                pts.push(w.center);
            }
        }
        pts
    }

    /// Apex closest to `p`, if the ansatz has corner windows.
    pub fn nearest_corner(&self, p: Point) -> Option<Point> {
        self.corner_points().into_iter().min_by(|a, b| {
            let da = (a[0] - p[0]).hypot(a[1] - p[1]);
            let db = (b[0] - p[0]).hypot(b[1] - p[1]);
            da.total_cmp(&db)
        })
    }

    /// Sum of the weights carrying the condition of `curve` at a point on it.
    fn constraint_weight(&self, curve: usize, p: Point) -> f64 {
        let mut w = 0.0;
        for e in self.edges.iter().filter(|e| e.curve == curve) {
            let nu = (p[0] - e.center[0]) * e.normal[0] + (p[1] - e.center[1]) * e.normal[1];
            if nu.abs() >= e.wd.spec.half_width {
                continue;
            }
            w += match &e.tangential {
                Some(t) => {
                    let s = (p[0] - e.center[0]) * e.tangent[0] + (p[1] - e.center[1]) * e.tangent[1];
                    win(t, J::constant(s)).v
                }
                None => 1.0,
            };
        }
        for c in &self.wedges {
            if c.rays.iter().any(|r| r.curve == curve) {
                let r = (p[0] - c.center[0]).hypot(p[1] - c.center[1]);
                w += win(&c.radial, J::constant(r)).v;
            }
        }
        w
    }

    fn check_coverage(&self) -> Result<(), AnsatzError> {
        const SAMPLES: usize = 400;
        let mut gaps = Vec::new();
        for (ci, curve) in self.curves.iter().enumerate() {
            for end in [curve.segment.a, curve.segment.b] {
                let covered = self
                    .wedges
                    .iter()
                    .any(|w| close(w.center, end) && w.rays.iter().any(|r| r.curve == ci));
                if !covered {
                    gaps.push(format!("`{}` end ({}, {}) has no corner window", curve.edge, end[0], end[1]));
                }
            }
            let mut run: Option<(f64, f64)> = None;
            let mut flush = |run: &mut Option<(f64, f64)>| {
                if let Some((a, b)) = run.take() {
                    gaps.push(format!("`{}` between t = {a:.4} and t = {b:.4}", curve.edge));
                }
            };
            for i in 0..SAMPLES {
                let t = (i as f64 + 0.5) / SAMPLES as f64;
                if self.constraint_weight(ci, curve.segment.at(t)) > 0.0 {
                    flush(&mut run);
                } else {
                    run = Some(run.map_or((t, t), |(a, _)| (a, t)));
                }
            }
            flush(&mut run);
        }
        if gaps.is_empty() {
            Ok(())
        } else {
            Err(AnsatzError::Coverage(gaps.join("; ")))
        }
    }

    pub(super) fn eval<B: Backend>(
        &self,
        b: &mut B,
        point: &[f64],
        dirs: &[Dir],
        sub: usize,
    ) -> Result<Vec<Jet2<B::S>>, AnsatzError> {
        let xy: Vec<[J; 2]> = dirs.iter().map(|d| [d.coord(point, 0), d.coord(point, 1)]).collect();
        let mut acc: Vec<Vec<Jet2<B::S>>> = vec![Vec::new(); dirs.len()];

        let it = &self.interior[sub];
        let mut weights = Vec::with_capacity(xy.len());
        let mut inputs = Vec::with_capacity(xy.len());
        for &[x, y] in &xy {
            match &it.window {
                InteriorWindow::Distance(w) => {
                    let mut d = self.distance_jet(x, y);
                    d.v = if sub == 0 { d.v.min(0.0) } else { d.v.max(0.0) };
                    weights.push(win(w, d));
                    inputs.push(vec![x, y]);
                }
                InteriorWindow::Reference { map, windows } => {
                    let [s1, s2] = map.map_jets(x, y);
                    weights.push(win(&windows[0], s1) * win(&windows[1], s2));
                    inputs.push(vec![s1, s2]);
                }
            }
        }
        net_term(b, &it.net, &inputs, &weights, &mut acc)?;

        for e in &self.edges {
            self.edge_term(b, e, sub, &xy, &mut acc)?;
        }
        let p = [point[0], point[1]];
        for c in self.wedges.iter().filter(|c| c.subdomain == sub) {
            if (p[0] - c.center[0]).hypot(p[1] - c.center[1]) < c.radius {
                self.corner_term(b, c, sub, &xy, &mut acc)?;
            }
        }
        Ok(acc.into_iter().map(|t| jet_sum(b, t)).collect())
    }

    fn distance_jet(&self, x: J, y: J) -> J {
        let a = self.problem.interface().a;
        let n = self.problem.interface_normal();
        (x - a[0]) * n[0] + (y - a[1]) * n[1]
    }

    fn edge_term<B: Backend>(
        &self,
        b: &mut B,
        e: &EdgeTerm,
        sub: usize,
        xy: &[[J; 2]],
        acc: &mut [Vec<Jet2<B::S>>],
    ) -> Result<(), AnsatzError> {
        let curve = &self.curves[e.curve];
        if curve.sub.is_some_and(|s| s != sub) {
            return Ok(());
        }
        let side = usize::from(curve.sub.is_none() && sub == 1);
        let mut wd = Vec::with_capacity(xy.len());
        let mut wn = Vec::with_capacity(xy.len());
        let mut s_in = Vec::with_capacity(xy.len());
        for &[x, y] in xy {
            let mut nu = (x - e.center[0]) * e.normal[0] + (y - e.center[1]) * e.normal[1];
            // keep roundoff from flipping the point to the other side
            nu.v = if side == 1 { nu.v.max(0.0) } else { nu.v.min(0.0) };
            let t = match &e.tangential {
                Some(w) => win(w, (x - e.center[0]) * e.tangent[0] + (y - e.center[1]) * e.tangent[1]),
                None => J::constant(1.0),
            };
            wd.push(win(&e.wd, nu) * t);
            wn.push(win(&e.wn[side], nu) * t);
            s_in.push(vec![curve.param(x, y)]);
        }
        self.curve_terms(b, curve, sub, &s_in, &wd, &wn, acc)
    }

    fn corner_term<B: Backend>(
        &self,
        b: &mut B,
        c: &CornerWedge,
        sub: usize,
        xy: &[[J; 2]],
        acc: &mut [Vec<Jet2<B::S>>],
    ) -> Result<(), AnsatzError> {
        let polar = xy
            .iter()
            .map(|&[x, y]| c.polar(x, y))
            .collect::<Result<Vec<_>, _>>()?;
        for (k, ray) in c.rays.iter().enumerate() {
            let curve = &self.curves[ray.curve];
            let sign = ray.wn.spec.normal_sign;
            let mut wd = Vec::with_capacity(xy.len());
            let mut wn = Vec::with_capacity(xy.len());
            let mut s_in = Vec::with_capacity(xy.len());
            for &(r, a) in &polar {
                let [d, n] = c.polar_weights(k, r, a);
                wd.push(d);
                // outward slope g enters as sign * r * g
                wn.push(n * r * sign);
                s_in.push(vec![r * ray.ds_dr + ray.s0]);
            }
            if curve.kind == CurveKind::Interface {
                // the wedge's outward normal is -n_0 on the subdomain-1 side
                let sigma = if sub == 0 { 1.0 } else { -1.0 };
                for w in wn.iter_mut() {
                    *w = *w * sigma;
                }
            }
            self.curve_terms(b, curve, sub, &s_in, &wd, &wn, acc)?;
        }
        Ok(())
    }

    /// `g_d W_d + g_n W_n` for a curve whose free parts are tangential
    /// networks of `s_in`.
    #[allow(clippy::too_many_arguments)]
    fn curve_terms<B: Backend>(
        &self,
        b: &mut B,
        curve: &Curve,
        sub: usize,
        s_in: &[Vec<J>],
        wd: &[J],
        wn: &[J],
        acc: &mut [Vec<Jet2<B::S>>],
    ) -> Result<(), AnsatzError> {
        let missing = || AnsatzError::Config(format!("edge `{}` has no tangential network", curve.edge));
        match curve.kind {
            CurveKind::Dirichlet(v) => {
                data_term(b, v, wd, acc);
                net_term(b, curve.flux_net.as_ref().ok_or_else(missing)?, s_in, wn, acc)?;
            }
            CurveKind::Neumann(q) => {
                net_term(b, curve.value_net.as_ref().ok_or_else(missing)?, s_in, wd, acc)?;
                data_term(b, q, wn, acc);
            }
            CurveKind::Interface => {
                let inv = 1.0 / self.problem.kappa[sub];
                let wn: Vec<J> = wn.iter().map(|w| *w * inv).collect();
                net_term(b, curve.value_net.as_ref().ok_or_else(missing)?, s_in, wd, acc)?;
                net_term(b, curve.flux_net.as_ref().ok_or_else(missing)?, s_in, &wn, acc)?;
            }
        }
        Ok(())
    }
}

fn net_term<B: Backend>(
    b: &mut B,
    net: &NetSlot,
    inputs: &[Vec<J>],
    weights: &[J],
    acc: &mut [Vec<Jet2<B::S>>],
) -> Result<(), AnsatzError> {
    if weights.iter().all(|w| w.is_zero()) {
        return Ok(());
    }
    let nn = b.net(net, &JetInput::from_dirs(inputs))?;
    for ((a, n), w) in acc.iter_mut().zip(nn).zip(weights) {
        a.push(n.scale(*w));
    }
    Ok(())
}

fn data_term<B: Backend>(b: &mut B, value: f64, weights: &[J], acc: &mut [Vec<Jet2<B::S>>]) {
    if value == 0.0 {
        return;
    }
    for (a, w) in acc.iter_mut().zip(weights) {
        let z = b.zero_jet();
        a.push(z.add_const(*w * value));
    }
}

fn build_wedges(problem: &Problem2D, curves: &[Curve], lay: &FullHardLayout) -> Result<Vec<CornerWedge>, AnsatzError> {
    let [kd, kn] = lay.corner_orders;
    let mut wedges = Vec::new();
    for cw in &lay.corners {
        // (angle, curve, s0, ds_dr)
        let mut rays: Vec<(f64, usize, f64, f64)> = Vec::new();
        for (ci, c) in curves.iter().enumerate() {
            let l = c.segment.length();
            let t = c.segment.tangent();
            if close(c.segment.a, cw.center) {
                rays.push((t[1].atan2(t[0]), ci, 0.0, 1.0 / l));
            } else if close(c.segment.b, cw.center) {
                rays.push(((-t[1]).atan2(-t[0]), ci, 1.0, -1.0 / l));
            }
        }
        if rays.len() < 2 {
            return Err(AnsatzError::Config(format!(
                "corner window at ({}, {}) is not a junction of edges",
                cw.center[0], cw.center[1]
            )));
        }
        rays.sort_by(|a, b| a.0.total_cmp(&b.0));
        let m = rays.len();
        for i in 0..m {
            let lo = rays[i];
            let mut hi = rays[(i + 1) % m];
            if i + 1 == m {
                hi.0 += 2.0 * PI;
            }
            let width = hi.0 - lo.0;
            if width <= 0.0 {
                continue;
            }
            let mid = lo.0 + 0.5 * width;
            let eps = 1e-3 * cw.radius;
            let probe = [cw.center[0] + eps * mid.cos(), cw.center[1] + eps * mid.sin()];
            if !problem.contains(probe) {
                continue;
            }
            let ray = |r: (f64, usize, f64, f64), sign: f64| -> Result<Ray, AnsatzError> {
                Ok(Ray {
                    curve: r.1,
                    angle: r.0,
                    wd: Window::dirichlet(kd, r.0, width)?,
                    wn: Window::neumann(kn, r.0, width, sign)?,
                    s0: r.2,
                    ds_dr: r.3,
                })
            };
            wedges.push(CornerWedge {
                center: cw.center,
                radius: cw.radius,
                subdomain: problem.subdomain(probe),
                lo: lo.0,
                width,
                radial: Window::interior(lay.interior_order, 0.0, cw.radius)?,
                rays: [ray(lo, -1.0)?, ray(hi, 1.0)?],
            });
        }
    }
    Ok(wedges)
}
