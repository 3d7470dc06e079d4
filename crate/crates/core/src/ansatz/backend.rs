use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use super::AnsatzError;
use crate::autodiff::{Jet2, Scalar, Tape, Var};
use crate::nn::{rng_from_seed, InitScheme, JetInput, JetTrace, MlpArch};

/// A network occupying `theta[offset .. offset + arch.n_params()]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSlot {
    pub name: String,
    pub arch: MlpArch,
    pub offset: usize,
}

impl NetSlot {
    pub fn len(&self) -> usize {
        self.arch.n_params()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn params<'a>(&self, theta: &'a [f64]) -> &'a [f64] {
        &theta[self.offset..self.offset + self.len()]
    }
}

/// A single trainable number at `theta[offset]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSlot {
    pub name: String,
    pub offset: usize,
}

/// Where every trainable of an ansatz lives in the flat parameter vector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub nets: Vec<NetSlot>,
    pub scalars: Vec<ScalarSlot>,
    len: usize,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_net(&mut self, name: impl Into<String>, arch: MlpArch) -> NetSlot {
        let slot = NetSlot {
            name: name.into(),
            offset: self.len,
            arch,
        };
        self.len += slot.len();
        self.nets.push(slot.clone());
        slot
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> ScalarSlot {
        let slot = ScalarSlot {
            name: name.into(),
            offset: self.len,
        };
        self.len += 1;
        self.scalars.push(slot.clone());
        slot
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Networks drawn in order from one ChaCha8 stream seeded with `seed`;
    /// scalar trainables start at zero.
    pub fn init(&self, scheme: InitScheme, seed: u64) -> Result<Vec<f64>, AnsatzError> {
        let mut theta = vec![0.0; self.len];
        let mut rng = rng_from_seed(seed);
        for net in &self.nets {
            let range = net.offset..net.offset + net.len();
            scheme.fill(&net.arch, &mut rng, &mut theta[range])?;
        }
        Ok(theta)
    }
}

/// Bitwise fingerprint of a parameter vector, used to detect buffer
/// coefficients solved for a different `theta`.
pub fn fingerprint(theta: &[f64]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    h.write_usize(theta.len());
    for t in theta {
        h.write_u64(t.to_bits());
    }
    h.finish()
}

/// Arithmetic context an ansatz is evaluated in.
///
/// [`F64Backend`] evaluates plainly; [`TapeBackend`] records everything
/// downstream of the network outputs on a tape and back-propagates through
/// the networks by hand.
pub trait Backend {
    type S: Scalar;

    fn theta(&self) -> &[f64];
    fn fingerprint(&self) -> u64;
    fn scalar(&mut self, slot: &ScalarSlot) -> Self::S;
    fn constant(&mut self, c: f64) -> Self::S;
    /// `c0 + sum(coeff * s)`.
    fn lincomb(&mut self, c0: f64, terms: &[(f64, Self::S)]) -> Self::S;
    /// Network output jets, one per input direction.
    fn net(&mut self, slot: &NetSlot, input: &JetInput) -> Result<Vec<Jet2<Self::S>>, AnsatzError>;

    fn zero_jet(&mut self) -> Jet2<Self::S> {
        let z = self.constant(0.0);
        Jet2::new(z, z, z)
    }
}

pub struct F64Backend<'a> {
    theta: &'a [f64],
    fingerprint: u64,
}

impl<'a> F64Backend<'a> {
    pub fn new(theta: &'a [f64]) -> Self {
        Self {
            theta,
            fingerprint: fingerprint(theta),
        }
    }
}

impl Backend for F64Backend<'_> {
    type S = f64;

    fn theta(&self) -> &[f64] {
        self.theta
    }

    fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn scalar(&mut self, slot: &ScalarSlot) -> f64 {
        self.theta[slot.offset]
    }

    fn constant(&mut self, c: f64) -> f64 {
        c
    }

    fn lincomb(&mut self, c0: f64, terms: &[(f64, f64)]) -> f64 {
        terms.iter().fold(c0, |acc, (c, s)| acc + c * s)
    }

    fn net(&mut self, slot: &NetSlot, input: &JetInput) -> Result<Vec<Jet2<f64>>, AnsatzError> {
        let (out, _) = slot.arch.forward_jets(slot.params(self.theta), input)?;
        Ok((0..input.ndirs).map(|a| out.jet(a)).collect())
    }
}

struct NetRecord {
    slot: usize,
    trace: JetTrace,
    v: u32,
    d1: Vec<u32>,
    d2: Vec<u32>,
}

/// Records the ansatz on a [`Tape`]; network outputs enter as tape leaves
/// and their adjoints are pushed through [`MlpArch::backward`].
pub struct TapeBackend<'t> {
    tape: &'t Tape,
    theta: &'t [f64],
    fingerprint: u64,
    slots: Vec<NetSlot>,
    records: Vec<NetRecord>,
    scalars: Vec<Option<Var<'t>>>,
}

impl<'t> TapeBackend<'t> {
    pub fn new(tape: &'t Tape, theta: &'t [f64]) -> Self {
        Self {
            tape,
            theta,
            fingerprint: fingerprint(theta),
            slots: Vec::new(),
            records: Vec::new(),
            scalars: vec![None; theta.len()],
        }
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    /// `d root / d theta`.
    pub fn gradient(&self, root: Var<'t>) -> Result<Vec<f64>, AnsatzError> {
        let (mut grad, adj) = self.tape.gradient_with_adjoints(root, self.theta.len())?;
        for rec in &self.records {
            let slot = &self.slots[rec.slot];
            let av = adj.of_index(rec.v);
            let ad1: Vec<f64> = rec.d1.iter().map(|&i| adj.of_index(i)).collect();
            let ad2: Vec<f64> = rec.d2.iter().map(|&i| adj.of_index(i)).collect();
            if av == 0.0 && ad1.iter().chain(&ad2).all(|a| *a == 0.0) {
                continue;
            }
            let range = slot.offset..slot.offset + slot.len();
            slot.arch
                .backward(slot.params(self.theta), &rec.trace, av, &ad1, &ad2, &mut grad[range]);
        }
        Ok(grad)
    }
}

impl<'t> Backend for TapeBackend<'t> {
    type S = Var<'t>;

    fn theta(&self) -> &[f64] {
        self.theta
    }

    fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn scalar(&mut self, slot: &ScalarSlot) -> Var<'t> {
        let tape = self.tape;
        let value = self.theta[slot.offset];
        *self.scalars[slot.offset].get_or_insert_with(|| tape.input(slot.offset, value))
    }

    fn constant(&mut self, c: f64) -> Var<'t> {
        self.tape.constant(c)
    }

    fn lincomb(&mut self, c0: f64, terms: &[(f64, Var<'t>)]) -> Var<'t> {
        self.tape.linear_combination(c0, terms)
    }

    fn net(&mut self, slot: &NetSlot, input: &JetInput) -> Result<Vec<Jet2<Var<'t>>>, AnsatzError> {
        let (out, trace) = slot.arch.forward_jets(slot.params(self.theta), input)?;
        let idx = match self.slots.iter().position(|s| s.offset == slot.offset) {
            Some(i) => i,
            None => {
                self.slots.push(slot.clone());
                self.slots.len() - 1
            }
        };
        let v = self.tape.leaf(out.v);
        let mut jets = Vec::with_capacity(input.ndirs);
        let mut d1 = Vec::with_capacity(input.ndirs);
        let mut d2 = Vec::with_capacity(input.ndirs);
        for a in 0..input.ndirs {
            let j1 = self.tape.leaf(out.d1[a]);
            let j2 = self.tape.leaf(out.d2[a]);
            d1.push(j1.index());
            d2.push(j2.index());
            jets.push(Jet2::new(v, j1, j2));
        }
        self.records.push(NetRecord {
            slot: idx,
            trace,
            v: v.index(),
            d1,
            d2,
        });
        Ok(jets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    #[test]
    fn layout_offsets_are_contiguous() {
        let mut l = ParamLayout::new();
        let a = l.add_net("a", MlpArch::new(vec![1, 3, 1], Activation::Tanh).unwrap());
        let s = l.add_scalar("s");
        let b = l.add_net("b", MlpArch::new(vec![2, 2, 1], Activation::Tanh).unwrap());
        assert_eq!((a.offset, s.offset, b.offset, l.len()), (0, 10, 11, 20));
        let t1 = l.init(InitScheme::Glorot, 7).unwrap();
        let t2 = l.init(InitScheme::Glorot, 7).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(t1[10], 0.0);
    }

    #[test]
    fn tape_backend_matches_f64_and_finite_differences() {
        let mut l = ParamLayout::new();
        let net = l.add_net("n", MlpArch::new(vec![1, 4, 1], Activation::Tanh).unwrap());
        let s = l.add_scalar("s");
        let mut theta = l.init(InitScheme::Glorot, 3).unwrap();
        theta[s.offset] = 0.7;
        // loss = (s * u'' + u' * u)^2 at x = 0.3
        let loss_f64 = |th: &[f64]| {
            let mut b = F64Backend::new(th);
            let u = b.net(&net, &JetInput::axes(&[0.3], &[0])).unwrap()[0];
            let sv = b.scalar(&s);
            (sv * u.d2 + u.d1 * u.v).powi(2)
        };
        let tape = Tape::new();
        let mut b = TapeBackend::new(&tape, &theta);
        let u = b.net(&net, &JetInput::axes(&[0.3], &[0])).unwrap()[0];
        let sv = b.scalar(&s);
        let root = (sv * u.d2 + u.d1 * u.v).square();
        assert!((root.value() - loss_f64(&theta)).abs() < 1e-15);
        let g = b.gradient(root).unwrap();
        for i in 0..theta.len() {
            let h = 1e-6;
            let mut tp = theta.clone();
            tp[i] += h;
            let mut tm = theta.clone();
            tm[i] -= h;
            let fd = (loss_f64(&tp) - loss_f64(&tm)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-7 * (1.0 + fd.abs()), "{i}: {fd} vs {}", g[i]);
        }
    }
}
