use serde::{Deserialize, Serialize};

use super::init::InitScheme;
use super::{Activation, NnError};
use crate::autodiff::Jet2;

/// Layer widths and activation of a fully connected network.
///
/// Parameters live in a flat slice, layer by layer: the weight matrix
/// (row-major, `widths[l+1] x widths[l]`) followed by the bias vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpArch {
    pub widths: Vec<usize>,
    pub activation: Activation,
}

/// Network inputs carried as jets along one or more directions.
///
/// All directions share the value `v`; `d1[a * dim + i]` is the first
/// derivative of input `i` along direction `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetInput {
    pub dim: usize,
    pub ndirs: usize,
    pub v: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl JetInput {
    /// `dirs[a][i]` is the jet of input `i` along direction `a`.
    pub fn from_dirs(dirs: &[Vec<Jet2<f64>>]) -> Self {
        let ndirs = dirs.len();
        let dim = dirs.first().map_or(0, |d| d.len());
        let v = dirs.first().map_or_else(Vec::new, |d| d.iter().map(|j| j.v).collect());
        let mut d1 = Vec::with_capacity(ndirs * dim);
        let mut d2 = Vec::with_capacity(ndirs * dim);
        for d in dirs {
            debug_assert_eq!(d.len(), dim);
            d1.extend(d.iter().map(|j| j.d1));
            d2.extend(d.iter().map(|j| j.d2));
        }
        Self {
            dim,
            ndirs,
            v,
            d1,
            d2,
        }
    }

    /// Value-only input with a single zero direction.
    pub fn point(x: &[f64]) -> Self {
        Self {
            dim: x.len(),
            ndirs: 1,
            v: x.to_vec(),
            d1: vec![0.0; x.len()],
            d2: vec![0.0; x.len()],
        }
    }

    /// Input `x` with unit-axis directions (one per listed axis).
    pub fn axes(x: &[f64], axes: &[usize]) -> Self {
        let dim = x.len();
        let mut d1 = vec![0.0; axes.len() * dim];
        for (a, &ax) in axes.iter().enumerate() {
            d1[a * dim + ax] = 1.0;
        }
        Self {
            dim,
            ndirs: axes.len(),
            v: x.to_vec(),
            d1,
            d2: vec![0.0; axes.len() * dim],
        }
    }
}

/// Scalar network output with one `(d1, d2)` pair per input direction.
#[derive(Debug, Clone, PartialEq)]
pub struct NetJet {
    pub v: f64,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl NetJet {
    pub fn jet(&self, dir: usize) -> Jet2<f64> {
        Jet2::new(self.v, self.d1[dir], self.d2[dir])
    }
}

#[derive(Debug, Clone)]
struct LayerTrace {
    hv: Vec<f64>,
    hd: Vec<f64>,
    hs: Vec<f64>,
    /// Activation derivatives `[f', f'', f''']` at the pre-activation value
    /// (empty for the linear output layer).
    act: Vec<[f64; 3]>,
    zd: Vec<f64>,
    zs: Vec<f64>,
}

/// Intermediate values of a jet forward pass, needed by [`MlpArch::backward`].
#[derive(Debug, Clone)]
pub struct JetTrace {
    ndirs: usize,
    layers: Vec<LayerTrace>,
}

impl MlpArch {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self, NnError> {
        if widths.len() < 2 {
            return Err(NnError::Config(format!(
                "network needs at least input and output widths, got {widths:?}"
            )));
        }
        if widths.contains(&0) {
            return Err(NnError::Config(format!("zero layer width in {widths:?}")));
        }
        if *widths.last().unwrap() != 1 {
            return Err(NnError::Config(format!(
                "output width must be 1 (scalar field), got {widths:?}"
            )));
        }
        Ok(Self { widths, activation })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// Offsets of `(weights, biases)` for layer `l`.
    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for w in self.widths.windows(2).take(l) {
            off += w[1] * w[0] + w[1];
        }
        let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
        (off, off + n_out * n_in)
    }

    fn check(&self, params: &[f64], dim: usize) -> Result<(), NnError> {
        if dim != self.input_dim() {
            return Err(NnError::Config(format!(
                "input dimension {dim} does not match network input width {}",
                self.input_dim()
            )));
        }
        if params.len() != self.n_params() {
            return Err(NnError::Config(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        Ok(())
    }

    /// Plain value evaluation.
    pub fn value(&self, params: &[f64], x: &[f64]) -> Result<f64, NnError> {
        self.check(params, x.len())?;
        let mut h = x.to_vec();
        let last = self.n_layers() - 1;
        for l in 0..self.n_layers() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (wo, bo) = self.layer_offsets(l);
            let w = &params[wo..wo + n_in * n_out];
            let b = &params[bo..bo + n_out];
            let mut z: Vec<f64> = (0..n_out)
                .map(|o| b[o] + dot(&w[o * n_in..(o + 1) * n_in], &h))
                .collect();
            if l != last {
                for zi in z.iter_mut() {
                    *zi = self.activation.derivs(*zi)[0];
                }
            }
            h = z;
        }
        Ok(h[0])
    }

    /// Forward pass propagating value and per-direction first/second derivatives.
    pub fn forward_jets(&self, params: &[f64], input: &JetInput) -> Result<(NetJet, JetTrace), NnError> {
        self.check(params, input.dim)?;
        let nd = input.ndirs;
        let mut hv = input.v.clone();
        let mut hd = input.d1.clone();
        let mut hs = input.d2.clone();
        let last = self.n_layers() - 1;
        let mut layers = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (wo, bo) = self.layer_offsets(l);
            let w = &params[wo..wo + n_in * n_out];
            let b = &params[bo..bo + n_out];
            let mut zv = vec![0.0; n_out];
            let mut zd = vec![0.0; nd * n_out];
            let mut zs = vec![0.0; nd * n_out];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                zv[o] = b[o] + dot(row, &hv);
                for a in 0..nd {
                    zd[a * n_out + o] = dot(row, &hd[a * n_in..(a + 1) * n_in]);
                    zs[a * n_out + o] = dot(row, &hs[a * n_in..(a + 1) * n_in]);
                }
            }
            let mut act = Vec::new();
            let (nv, nd_, ns) = if l != last {
                act.reserve(n_out);
                let mut ov = vec![0.0; n_out];
                let mut od = vec![0.0; nd * n_out];
                let mut os = vec![0.0; nd * n_out];
                for o in 0..n_out {
                    let [f0, f1, f2, f3] = self.activation.derivs(zv[o]);
                    ov[o] = f0;
                    for a in 0..nd {
                        let k = a * n_out + o;
                        od[k] = f1 * zd[k];
                        os[k] = f2 * zd[k] * zd[k] + f1 * zs[k];
                    }
                    act.push([f1, f2, f3]);
                }
                (ov, od, os)
            } else {
                (zv, zd.clone(), zs.clone())
            };
            layers.push(LayerTrace {
                hv: std::mem::replace(&mut hv, nv),
                hd: std::mem::replace(&mut hd, nd_),
                hs: std::mem::replace(&mut hs, ns),
                act,
                zd,
                zs,
            });
        }
        let out = NetJet {
            v: hv[0],
            d1: hd,
            d2: hs,
        };
        Ok((out, JetTrace { ndirs: nd, layers }))
    }

    /// Accumulate `d loss / d params` into `grad` given the adjoints of the
    /// output value and of each direction's `(d1, d2)`.
    pub fn backward(
        &self,
        params: &[f64],
        trace: &JetTrace,
        adj_v: f64,
        adj_d1: &[f64],
        adj_d2: &[f64],
        grad: &mut [f64],
    ) {
        let nd = trace.ndirs;
        debug_assert_eq!(adj_d1.len(), nd);
        debug_assert_eq!(grad.len(), self.n_params());
        // adjoints of the current layer's pre-activation (output layer: linear)
        let mut gv = vec![adj_v];
        let mut gd = adj_d1.to_vec();
        let mut gs = adj_d2.to_vec();
        for l in (0..self.n_layers()).rev() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (wo, bo) = self.layer_offsets(l);
            let tr = &trace.layers[l];
            {
                let gw = &mut grad[wo..wo + n_in * n_out];
                for o in 0..n_out {
                    let row = &mut gw[o * n_in..(o + 1) * n_in];
                    axpy(gv[o], &tr.hv, row);
                    for a in 0..nd {
                        let k = a * n_out + o;
                        axpy(gd[k], &tr.hd[a * n_in..(a + 1) * n_in], row);
                        axpy(gs[k], &tr.hs[a * n_in..(a + 1) * n_in], row);
                    }
                }
            }
            for o in 0..n_out {
                grad[bo + o] += gv[o];
            }
            if l == 0 {
                break;
            }
            // adjoints of this layer's input = previous layer's activation output
            let w = &params[wo..wo + n_in * n_out];
            let mut hv = vec![0.0; n_in];
            let mut hd = vec![0.0; nd * n_in];
            let mut hs = vec![0.0; nd * n_in];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                axpy(gv[o], row, &mut hv);
                for a in 0..nd {
                    let k = a * n_out + o;
                    axpy(gd[k], row, &mut hd[a * n_in..(a + 1) * n_in]);
                    axpy(gs[k], row, &mut hs[a * n_in..(a + 1) * n_in]);
                }
            }
            // through the activation of layer l-1
            let prev = &trace.layers[l - 1];
            let mut nv = vec![0.0; n_in];
            let mut ndv = vec![0.0; nd * n_in];
            let mut nsv = vec![0.0; nd * n_in];
            for i in 0..n_in {
                let [f1, f2, f3] = prev.act[i];
                let mut acc = hv[i] * f1;
                for a in 0..nd {
                    let k = a * n_in + i;
                    let zd = prev.zd[k];
                    let zs = prev.zs[k];
                    acc += hd[k] * f2 * zd + hs[k] * (f3 * zd * zd + f2 * zs);
                    ndv[k] = hd[k] * f1 + hs[k] * 2.0 * f2 * zd;
                    nsv[k] = hs[k] * f1;
                }
                nv[i] = acc;
            }
            gv = nv;
            gd = ndv;
            gs = nsv;
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    if alpha == 0.0 {
        return;
    }
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// A network together with its own parameters and initialization metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub arch: MlpArch,
    pub init: InitScheme,
    pub seed: u64,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn n_params(&self) -> usize {
        self.arch.n_params()
    }
}

/// Scalar output of `net` with its derivatives along the direction carried
/// by the input jets.
pub fn mlp_forward(net: &Mlp, x: &[Jet2<f64>]) -> Result<Jet2<f64>, NnError> {
    let input = JetInput::from_dirs(&[x.to_vec()]);
    let (out, _) = net.arch.forward_jets(&net.params, &input)?;
    Ok(out.jet(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_mlp, InitScheme};

    fn arch(w: &[usize]) -> MlpArch {
        MlpArch::new(w.to_vec(), Activation::Tanh).unwrap()
    }

    #[test]
    fn zero_network_is_zero() {
        let a = arch(&[1, 4, 1]);
        let p = vec![0.0; a.n_params()];
        let (o, _) = a
            .forward_jets(&p, &JetInput::from_dirs(&[vec![Jet2::variable(0.3)]]))
            .unwrap();
        assert_eq!((o.v, o.d1[0], o.d2[0]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn identity_single_layer() {
        let net = Mlp {
            arch: arch(&[1, 1]),
            init: InitScheme::Glorot,
            seed: 0,
            params: vec![1.0, 0.0],
        };
        let j = mlp_forward(&net, &[Jet2::variable(0.4)]).unwrap();
        assert_eq!((j.v, j.d1, j.d2), (0.4, 1.0, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let net = init_mlp(vec![2, 3, 1], Activation::Tanh, InitScheme::Glorot, 1).unwrap();
        assert!(matches!(
            mlp_forward(&net, &[Jet2::variable(0.0)]),
            Err(NnError::Config(_))
        ));
    }

    #[test]
    fn seeded_tanh_net_matches_finite_difference() {
        let net = init_mlp(vec![1, 4, 1], Activation::Tanh, InitScheme::Glorot, 7).unwrap();
        let x0 = 0.37;
        let h = 1e-5;
        let f = |x: f64| net.arch.value(&net.params, &[x]).unwrap();
        let fd1 = (f(x0 + h) - f(x0 - h)) / (2.0 * h);
        let j = mlp_forward(&net, &[Jet2::variable(x0)]).unwrap();
        assert!((j.v - f(x0)).abs() < 1e-15);
        assert!((j.d1 - fd1).abs() <= 1e-6 * fd1.abs().max(1e-3));
        let h2 = 1e-4;
        let fd2 = (f(x0 + h2) - 2.0 * f(x0) + f(x0 - h2)) / (h2 * h2);
        assert!((j.d2 - fd2).abs() <= 1e-4 * fd2.abs().max(1e-2));
    }

    #[test]
    fn backward_matches_finite_difference_of_jet_functional() {
        // L = 0.3 v + 1.1 d1_x - 0.7 d2_x + 0.5 d2_y on a 2-input net
        let net = init_mlp(
            vec![2, 5, 4, 1],
            Activation::Silu,
            InitScheme::Normal { sigma: 0.8 },
            3,
        )
        .unwrap();
        let input = JetInput::axes(&[0.2, -0.6], &[0, 1]);
        let lossf = |p: &[f64]| {
            let (o, _) = net.arch.forward_jets(p, &input).unwrap();
            0.3 * o.v + 1.1 * o.d1[0] - 0.7 * o.d2[0] + 0.5 * o.d2[1]
        };
        let (_, tr) = net.arch.forward_jets(&net.params, &input).unwrap();
        let mut g = vec![0.0; net.n_params()];
        net.arch
            .backward(&net.params, &tr, 0.3, &[1.1, 0.0], &[-0.7, 0.5], &mut g);
        let h = 1e-6;
        for i in 0..g.len() {
            let mut p = net.params.clone();
            p[i] += h;
            let lp = lossf(&p);
            p[i] -= 2.0 * h;
            let lm = lossf(&p);
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * fd.abs().max(1.0), "param {i}: {fd} vs {}", g[i]);
        }
    }
}
