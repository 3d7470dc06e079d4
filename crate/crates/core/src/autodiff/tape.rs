use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::{sigmoid_f64, Scalar, FRAC_2_SQRT_PI};
use super::AdError;

#[derive(Clone, Copy, Debug)]
struct Node {
    value: f64,
    edge_start: u32,
    edge_len: u32,
}

#[derive(Default)]
struct TapeInner {
    nodes: Vec<Node>,
    /// `(parent, local partial)` pairs; a node's edges are contiguous.
    edges: Vec<(u32, f64)>,
    /// parameter slot -> node id
    inputs: Vec<(usize, u32)>,
}

/// Reverse-mode scalar tape.
///
/// Nodes are appended in evaluation order, so every node's parents have
/// smaller indices and a single backward pass over the node list visits each
/// node exactly once.
#[derive(Default)]
pub struct Tape {
    inner: RefCell<TapeInner>,
}

/// A scalar recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: u32,
    value: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var(#{} = {})", self.index, self.value)
    }
}

/// Adjoint of every node after a backward sweep.
pub struct Adjoints(Vec<f64>);

impl Adjoints {
    pub fn of(&self, v: Var<'_>) -> f64 {
        self.0[v.index as usize]
    }

    pub fn of_index(&self, index: u32) -> f64 {
        self.0[index as usize]
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize) -> Self {
        let inner = TapeInner {
            nodes: Vec::with_capacity(nodes),
            edges: Vec::with_capacity(2 * nodes),
            inputs: Vec::new(),
        };
        Self {
            inner: RefCell::new(inner),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: f64, edges: &[(u32, f64)]) -> Var<'_> {
        let mut inner = self.inner.borrow_mut();
        let edge_start = inner.edges.len() as u32;
        inner.edges.extend_from_slice(edges);
        let index = inner.nodes.len() as u32;
        inner.nodes.push(Node {
            value,
            edge_start,
            edge_len: edges.len() as u32,
        });
        Var {
            tape: self,
            index,
            value,
        }
    }

    /// An unregistered leaf (constant or externally differentiated quantity).
    pub fn leaf(&self, value: f64) -> Var<'_> {
        self.push(value, &[])
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        self.push(value, &[])
    }

    /// A leaf bound to parameter slot `slot`.
    pub fn input(&self, slot: usize, value: f64) -> Var<'_> {
        let v = self.push(value, &[]);
        self.inner.borrow_mut().inputs.push((slot, v.index));
        v
    }

    /// `constant + sum(coeff * var)` as a single node.
    pub fn linear_combination<'t>(&'t self, constant: f64, terms: &[(f64, Var<'t>)]) -> Var<'t> {
        let value = terms
            .iter()
            .fold(constant, |acc, (c, v)| acc + c * v.value);
        let edges: Vec<(u32, f64)> = terms.iter().map(|(c, v)| (v.index, *c)).collect();
        self.push(value, &edges)
    }

    /// Sum of variables as a single node.
    pub fn sum<'t>(&'t self, terms: &[Var<'t>]) -> Var<'t> {
        let value = terms.iter().map(|v| v.value).sum();
        let edges: Vec<(u32, f64)> = terms.iter().map(|v| (v.index, 1.0)).collect();
        self.push(value, &edges)
    }

    /// First node whose forward value is NaN, if any.
    pub fn first_nan(&self) -> Option<usize> {
        self.inner
            .borrow()
            .nodes
            .iter()
            .position(|n| n.value.is_nan())
    }

    /// Reverse sweep seeded with `d root / d root = 1`.
    pub fn backward(&self, root: Var<'_>) -> Result<Adjoints, AdError> {
        if let Some(node) = self.first_nan() {
            return Err(AdError::NaN { node });
        }
        let inner = self.inner.borrow();
        let n = root.index as usize + 1;
        let mut adj = vec![0.0; inner.nodes.len()];
        adj[root.index as usize] = 1.0;
        for i in (0..n).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = inner.nodes[i];
            let start = node.edge_start as usize;
            for &(p, partial) in &inner.edges[start..start + node.edge_len as usize] {
                adj[p as usize] += a * partial;
            }
        }
        Ok(Adjoints(adj))
    }

    /// Gradient with respect to registered parameter slots `0..n_slots`.
    pub fn gradient(&self, root: Var<'_>, n_slots: usize) -> Result<Vec<f64>, AdError> {
        Ok(self.gradient_with_adjoints(root, n_slots)?.0)
    }

    /// [`Self::gradient`] together with the adjoints of every node.
    pub fn gradient_with_adjoints(&self, root: Var<'_>, n_slots: usize) -> Result<(Vec<f64>, Adjoints), AdError> {
        let adj = self.backward(root)?;
        let inner = self.inner.borrow();
        let mut grad = vec![0.0; n_slots];
        for &(slot, node) in &inner.inputs {
            if slot >= n_slots {
                return Err(AdError::UnknownSlot { slot, n_slots });
            }
            grad[slot] += adj.0[node as usize];
        }
        drop(inner);
        Ok((grad, adj))
    }
}

/// Evaluate a scalar program on a fresh tape and return `(loss, d loss / d theta)`.
///
/// Every entry of `theta` is registered as an input slot; entries the program
/// never touches get an exactly-zero gradient.
pub fn grad_params<F>(theta: &[f64], build: F) -> Result<(f64, Vec<f64>), AdError>
where
    F: for<'t> FnOnce(&'t Tape, &[Var<'t>]) -> Result<Var<'t>, AdError>,
{
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = theta
        .iter()
        .enumerate()
        .map(|(i, &t)| tape.input(i, t))
        .collect();
    let root = build(&tape, &vars)?;
    let grad = tape.gradient(root, theta.len())?;
    Ok((root.value, grad))
}

impl<'t> Var<'t> {
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    fn unary(self, value: f64, partial: f64) -> Self {
        self.tape.push(value, &[(self.index, partial)])
    }

    fn binary(self, other: Self, value: f64, pa: f64, pb: f64) -> Self {
        debug_assert!(std::ptr::eq(self.tape, other.tape), "vars from different tapes");
        self.tape
            .push(value, &[(self.index, pa), (other.index, pb)])
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        self.binary(rhs, q, 1.0 / rhs.value, -q / rhs.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.value, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        self.unary(self.value + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self.unary(self.value - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.unary(self.value * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self.unary(self.value / rhs, 1.0 / rhs)
    }
}

impl<'t> Mul<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        rhs * self
    }
}

impl<'t> Add<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        rhs + self
    }
}

impl<'t> Sub<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        rhs.unary(self - rhs.value, -1.0)
    }
}

impl<'t> Scalar for Var<'t> {
    fn value(&self) -> f64 {
        self.value
    }

    fn lift(&self, c: f64) -> Self {
        self.tape.constant(c)
    }

    fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.unary(t, 1.0 - t * t)
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        self.unary(e, e)
    }

    fn erf(self) -> Self {
        let x = self.value;
        self.unary(libm::erf(x), FRAC_2_SQRT_PI * (-x * x).exp())
    }

    fn sigmoid(self) -> Self {
        let s = sigmoid_f64(self.value);
        self.unary(s, s * (1.0 - s))
    }

    fn powi(self, n: i32) -> Self {
        let x = self.value;
        let d = if n == 0 { 0.0 } else { n as f64 * x.powi(n - 1) };
        self.unary(x.powi(n), d)
    }

    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.unary(s, 0.5 / s)
    }

    fn abs(self) -> Self {
        let x = self.value;
        let d = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.unary(x.abs(), d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient() {
        let (loss, g) = grad_params(&[3.0], |_, th| Ok(th[0] * th[0])).unwrap();
        assert_eq!(loss, 9.0);
        assert_eq!(g, vec![6.0]);
    }

    #[test]
    fn unused_slot_has_zero_gradient() {
        let (_, g) = grad_params(&[1.5, -2.0], |_, th| Ok(th[0].tanh() * 2.0)).unwrap();
        assert_eq!(g[1], 0.0);
        assert!((g[0] - 2.0 * (1.0 - 1.5f64.tanh().powi(2))).abs() < 1e-15);
    }

    #[test]
    fn nan_is_reported_with_first_node() {
        let err = grad_params(&[-1.0], |_, th| Ok(th[0].sqrt() * 2.0)).unwrap_err();
        assert_eq!(err, AdError::NaN { node: 1 });
    }

    #[test]
    fn linear_combination_partials() {
        let tape = Tape::new();
        let a = tape.input(0, 2.0);
        let b = tape.input(1, 5.0);
        let c = tape.linear_combination(1.0, &[(3.0, a), (-0.5, b)]);
        let root = c * c;
        let g = tape.gradient(root, 2).unwrap();
        let cv = 1.0 + 6.0 - 2.5;
        assert_eq!(root.value(), cv * cv);
        assert_eq!(g, vec![2.0 * cv * 3.0, 2.0 * cv * -0.5]);
    }

    #[test]
    fn shared_subexpression_accumulates() {
        let (_, g) = grad_params(&[0.7], |_, th| {
            let e = th[0].exp();
            Ok(e * e + e)
        })
        .unwrap();
        let e = 0.7f64.exp();
        assert!((g[0] - (2.0 * e * e + e)).abs() < 1e-14);
    }
}
