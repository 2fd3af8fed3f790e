//! Reverse-mode differentiation over vector-valued nodes.
//!
//! Every node holds a `Vec<f64>`. Complex vectors are stored interleaved
//! (`re0, im0, re1, im1, ...`) and only interact with real nodes through the
//! dedicated complex ops, so gradients are taken with respect to real and
//! imaginary parts. The DFT nodes are unitary and their adjoint is the
//! opposite transform.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectrum::UnitaryDft;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// The four parameter tensors of one two-layer MLP on the tape.
#[derive(Debug, Clone, Copy)]
pub struct MlpVars {
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
    pub d_in: usize,
    pub hidden: usize,
    pub d_out: usize,
}

#[derive(Debug)]
struct MlpNode {
    vars: MlpVars,
    inputs: Vec<Var>,
    n: usize,
    /// Hidden activations, `hidden x n` row-major.
    act: Vec<f64>,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, Var),
    Affine(Var, f64),
    Exp(Var),
    Ln(Var),
    Mean(Var),
    SumSq(Var),
    Broadcast(Var),
    Clamp(Var, f64, f64),
    CAbs(Var),
    CMulReal(Var, Var),
    CScale(Var, Var),
    Dft(Var),
    Idft(Var),
    Mlp(Box<MlpNode>),
    Column(Var, usize, usize),
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
    requires_grad: bool,
}

/// Recorded computation graph.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints of a scalar loss for every node that depends on a parameter.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient with respect to `v`; `None` if `v` does not influence the loss
    /// or does not depend on any parameter.
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }
}

fn complex_of(v: &[f64]) -> Vec<Complex64> {
    v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

fn interleave(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    /// First entry of a node, for scalars.
    pub fn scalar_value(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    pub fn complex_value(&self, v: Var) -> Vec<Complex64> {
        complex_of(self.value(v))
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Non-trainable leaf.
    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.constant(vec![value])
    }

    pub fn complex_constant(&mut self, value: &[Complex64]) -> Var {
        self.constant(interleave(value))
    }

    pub fn complex_param(&mut self, value: &[Complex64]) -> Var {
        self.param(interleave(value))
    }

    fn same_len(&self, a: Var, b: Var) {
        assert_eq!(self.value(a).len(), self.value(b).len(), "tape operands differ in length");
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        self.same_len(a, b);
        let v = self.value(a).iter().zip(self.value(b)).map(|(&x, &y)| f(x, y)).collect();
        let rg = self.rg(a) || self.rg(b);
        self.push(v, op, rg)
    }

    fn map(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let v = self.value(a).iter().map(|&x| f(x)).collect();
        let rg = self.rg(a);
        self.push(v, op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Div(a, b), |x, y| x / y)
    }

    /// `a * s` with `s` a scalar node.
    pub fn scale(&mut self, a: Var, s: Var) -> Var {
        let k = self.scalar_value(s);
        let v = self.value(a).iter().map(|x| x * k).collect();
        let rg = self.rg(a) || self.rg(s);
        self.push(v, Op::Scale(a, s), rg)
    }

    /// `k * a + c` with constants `k`, `c`.
    pub fn affine(&mut self, a: Var, k: f64, c: f64) -> Var {
        self.map(a, Op::Affine(a, k), |x| k * x + c)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.map(a, Op::Exp(a), f64::exp)
    }

    pub fn ln(&mut self, a: Var) -> Var {
        self.map(a, Op::Ln(a), f64::ln)
    }

    pub fn recip(&mut self, a: Var) -> Var {
        let one = self.constant(vec![1.0; self.value(a).len()]);
        self.div(one, a)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let rg = self.rg(a);
        self.push(vec![m], Op::Mean(a), rg)
    }

    /// Sum of squares of all entries (for complex nodes, the squared norm).
    pub fn sum_sq(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().map(|x| x * x).sum();
        let rg = self.rg(a);
        self.push(vec![s], Op::SumSq(a), rg)
    }

    /// Repeats a scalar node `n` times.
    pub fn broadcast(&mut self, s: Var, n: usize) -> Var {
        let v = vec![self.scalar_value(s); n];
        let rg = self.rg(s);
        self.push(v, Op::Broadcast(s), rg)
    }

    /// Elementwise clamp; the gradient is zero where the clamp is active.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.map(a, Op::Clamp(a, lo, hi), |x| x.clamp(lo, hi))
    }

    /// Number of entries of `a` outside `[lo, hi]`.
    pub fn count_outside(&self, a: Var, lo: f64, hi: f64) -> usize {
        self.value(a).iter().filter(|x| !(lo..=hi).contains(*x)).count()
    }

    /// Magnitudes of a complex node.
    pub fn cabs(&mut self, z: Var) -> Var {
        let v = self.value(z).chunks_exact(2).map(|c| c[0].hypot(c[1])).collect();
        let rg = self.rg(z);
        self.push(v, Op::CAbs(z), rg)
    }

    /// Complex vector times real vector.
    pub fn cmul_real(&mut self, z: Var, a: Var) -> Var {
        assert_eq!(self.value(z).len(), 2 * self.value(a).len(), "cmul_real length mismatch");
        let v = self.value(z).chunks_exact(2).zip(self.value(a)).flat_map(|(c, &k)| [c[0] * k, c[1] * k]).collect();
        let rg = self.rg(z) || self.rg(a);
        self.push(v, Op::CMulReal(z, a), rg)
    }

    /// Complex vector times real scalar node.
    pub fn cscale(&mut self, z: Var, s: Var) -> Var {
        let k = self.scalar_value(s);
        let v = self.value(z).iter().map(|x| x * k).collect();
        let rg = self.rg(z) || self.rg(s);
        self.push(v, Op::CScale(z, s), rg)
    }

    fn transform(&self, z: Var, forward: bool) -> Result<Vec<f64>> {
        let mut c = complex_of(self.value(z));
        let dft = UnitaryDft::new(c.len())?;
        if forward {
            dft.forward_in_place(&mut c)?;
        } else {
            dft.inverse_in_place(&mut c)?;
        }
        Ok(interleave(&c))
    }

    /// Unitary DFT `V z`.
    pub fn dft(&mut self, z: Var) -> Result<Var> {
        let v = self.transform(z, true)?;
        let rg = self.rg(z);
        Ok(self.push(v, Op::Dft(z), rg))
    }

    /// Unitary inverse DFT `V^H z`.
    pub fn idft(&mut self, z: Var) -> Result<Var> {
        let v = self.transform(z, false)?;
        let rg = self.rg(z);
        Ok(self.push(v, Op::Idft(z), rg))
    }

    /// Registers MLP parameters as trainable leaves.
    pub fn mlp_params(&mut self, w: &super::MlpWeights) -> MlpVars {
        MlpVars {
            w1: self.param(w.w1.clone()),
            b1: self.param(w.b1.clone()),
            w2: self.param(w.w2.clone()),
            b2: self.param(w.b2.clone()),
            d_in: w.d_in,
            hidden: w.hidden,
            d_out: w.d_out,
        }
    }

    /// Applies an MLP row-wise to `n` samples whose features are given as
    /// `d_in` length-`n` nodes. Output is `n x d_out` row-major.
    pub fn mlp(&mut self, vars: MlpVars, inputs: &[Var]) -> Result<Var> {
        if inputs.len() != vars.d_in {
            return Err(Error::LengthMismatch { expected: vars.d_in, got: inputs.len() });
        }
        let n = inputs.first().map_or(0, |&v| self.value(v).len());
        if inputs.iter().any(|&v| self.value(v).len() != n) {
            return Err(Error::Tape("MLP feature columns differ in length".into()));
        }
        let (h, d_in, d_out) = (vars.hidden, vars.d_in, vars.d_out);
        let w1 = self.value(vars.w1);
        let b1 = self.value(vars.b1);
        let w2 = self.value(vars.w2);
        let b2 = self.value(vars.b2);
        let cols: Vec<&[f64]> = inputs.iter().map(|&v| self.value(v)).collect();
        let mut act = vec![0.0; h * n];
        let mut out_cols = vec![vec![0.0; n]; d_out];
        for (o, c) in out_cols.iter_mut().enumerate() {
            c.iter_mut().for_each(|v| *v = b2[o]);
        }
        for k in 0..h {
            let a = &mut act[k * n..(k + 1) * n];
            a.iter_mut().for_each(|v| *v = b1[k]);
            for (j, col) in cols.iter().enumerate() {
                let w = w1[k * d_in + j];
                a.iter_mut().zip(col.iter()).for_each(|(v, x)| *v += w * x);
            }
            a.iter_mut().for_each(|v| *v = sigmoid(*v));
            for (o, c) in out_cols.iter_mut().enumerate() {
                let w = w2[o * h + k];
                c.iter_mut().zip(a.iter()).for_each(|(v, x)| *v += w * x);
            }
        }
        let mut out = vec![0.0; n * d_out];
        for (o, c) in out_cols.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                out[i * d_out + o] = *v;
            }
        }
        let rg = [vars.w1, vars.b1, vars.w2, vars.b2].iter().chain(inputs).any(|&v| self.rg(v));
        let node = MlpNode { vars, inputs: inputs.to_vec(), n, act };
        Ok(self.push(out, Op::Mlp(Box::new(node)), rg))
    }

    /// Column `k` of an `n x ncols` row-major node.
    pub fn column(&mut self, a: Var, k: usize, ncols: usize) -> Var {
        let v = self.value(a).iter().skip(k).step_by(ncols).copied().collect();
        let rg = self.rg(a);
        self.push(v, Op::Column(a, k, ncols), rg)
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let node = self
            .nodes
            .get(loss.0)
            .ok_or_else(|| Error::Tape("loss is not recorded on this tape (run the forward pass first)".into()))?;
        if node.value.len() != 1 {
            return Err(Error::Tape(format!("loss must be scalar, has {} entries", node.value.len())));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                grads[idx] = Some(g);
                continue;
            }
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        for (node, g) in self.nodes.iter().zip(grads.iter_mut()) {
            if !node.requires_grad {
                *g = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, idx: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let val = |v: Var| self.nodes[v.0].value.as_slice();
        let wants = |v: Var| self.nodes[v.0].requires_grad;
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            if !wants(v) {
                return;
            }
            let len = self.nodes[v.0].value.len();
            let slot = grads[v.0].get_or_insert_with(|| vec![0.0; len]);
            f(slot);
        };
        match &self.nodes[idx].op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                acc(*a, &mut |s| s.iter_mut().zip(g).for_each(|(s, g)| *s += g));
                acc(*b, &mut |s| s.iter_mut().zip(g).for_each(|(s, g)| *s += g));
            }
            Op::Sub(a, b) => {
                acc(*a, &mut |s| s.iter_mut().zip(g).for_each(|(s, g)| *s += g));
                acc(*b, &mut |s| s.iter_mut().zip(g).for_each(|(s, g)| *s -= g));
            }
            Op::Mul(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                acc(*a, &mut |s| s.iter_mut().zip(g).zip(vb).for_each(|((s, g), y)| *s += g * y));
                acc(*b, &mut |s| s.iter_mut().zip(g).zip(va).for_each(|((s, g), x)| *s += g * x));
            }
            Op::Div(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                acc(*a, &mut |s| s.iter_mut().zip(g).zip(vb).for_each(|((s, g), y)| *s += g / y));
                acc(*b, &mut |s| {
                    for i in 0..s.len() {
                        s[i] -= g[i] * va[i] / (vb[i] * vb[i]);
                    }
                });
            }
            Op::Scale(a, k) => {
                let kv = val(*k)[0];
                let va = val(*a);
                acc(*a, &mut |s| s.iter_mut().zip(g).for_each(|(s, g)| *s += g * kv));
                acc(*k, &mut |s| s[0] += g.iter().zip(va).map(|(g, x)| g * x).sum::<f64>());
            }
            Op::Affine(a, k) => acc(*a, &mut |s| s.iter_mut().zip(g).for_each(|(s, g)| *s += k * g)),
            Op::Exp(a) => {
                let out = &self.nodes[idx].value;
                acc(*a, &mut |s| s.iter_mut().zip(g).zip(out).for_each(|((s, g), e)| *s += g * e));
            }
            Op::Ln(a) => {
                let va = val(*a);
                acc(*a, &mut |s| s.iter_mut().zip(g).zip(va).for_each(|((s, g), x)| *s += g / x));
            }
            Op::Mean(a) => {
                let n = val(*a).len() as f64;
                acc(*a, &mut |s| s.iter_mut().for_each(|s| *s += g[0] / n));
            }
            Op::SumSq(a) => {
                let va = val(*a);
                acc(*a, &mut |s| s.iter_mut().zip(va).for_each(|(s, x)| *s += 2.0 * g[0] * x));
            }
            Op::Broadcast(a) => acc(*a, &mut |s| s[0] += g.iter().sum::<f64>()),
            Op::Clamp(a, lo, hi) => {
                let va = val(*a);
                acc(*a, &mut |s| {
                    for i in 0..s.len() {
                        if va[i] > *lo && va[i] < *hi {
                            s[i] += g[i];
                        }
                    }
                });
            }
            Op::CAbs(z) => {
                let vz = val(*z);
                let out = &self.nodes[idx].value;
                acc(*z, &mut |s| {
                    for i in 0..out.len() {
                        if out[i] > 0.0 {
                            s[2 * i] += g[i] * vz[2 * i] / out[i];
                            s[2 * i + 1] += g[i] * vz[2 * i + 1] / out[i];
                        }
                    }
                });
            }
            Op::CMulReal(z, a) => {
                let (vz, va) = (val(*z), val(*a));
                acc(*z, &mut |s| {
                    for i in 0..va.len() {
                        s[2 * i] += g[2 * i] * va[i];
                        s[2 * i + 1] += g[2 * i + 1] * va[i];
                    }
                });
                acc(*a, &mut |s| {
                    for i in 0..s.len() {
                        s[i] += g[2 * i] * vz[2 * i] + g[2 * i + 1] * vz[2 * i + 1];
                    }
                });
            }
            Op::CScale(z, k) => {
                let kv = val(*k)[0];
                let vz = val(*z);
                acc(*z, &mut |s| s.iter_mut().zip(g).for_each(|(s, g)| *s += g * kv));
                acc(*k, &mut |s| s[0] += g.iter().zip(vz).map(|(g, x)| g * x).sum::<f64>());
            }
            Op::Dft(z) | Op::Idft(z) => {
                // Adjoint of a unitary transform is its inverse.
                let forward = matches!(self.nodes[idx].op, Op::Idft(_));
                let mut c = complex_of(g);
                let dft = UnitaryDft::new(c.len()).expect("length validated in forward pass");
                if forward {
                    dft.forward_in_place(&mut c).expect("length");
                } else {
                    dft.inverse_in_place(&mut c).expect("length");
                }
                let gi = interleave(&c);
                acc(*z, &mut |s| s.iter_mut().zip(&gi).for_each(|(s, g)| *s += g));
            }
            Op::Column(a, k, ncols) => {
                acc(*a, &mut |s| {
                    for (i, gi) in g.iter().enumerate() {
                        s[i * ncols + k] += gi;
                    }
                });
            }
            Op::Mlp(node) => self.mlp_backward(node, g, grads),
        }
    }

    fn mlp_backward(&self, node: &MlpNode, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let MlpNode { vars, inputs, n, act } = node;
        let (h, d_in, d_out, n) = (vars.hidden, vars.d_in, vars.d_out, *n);
        let w1 = self.value(vars.w1);
        let w2 = self.value(vars.w2);
        let cols: Vec<&[f64]> = inputs.iter().map(|&v| self.value(v)).collect();
        let want_inputs: Vec<bool> = inputs.iter().map(|&v| self.rg(v)).collect();
        let gcols: Vec<Vec<f64>> = (0..d_out).map(|o| (0..n).map(|i| g[i * d_out + o]).collect()).collect();

        let mut dw1 = vec![0.0; h * d_in];
        let mut db1 = vec![0.0; h];
        let mut dw2 = vec![0.0; d_out * h];
        let db2: Vec<f64> = gcols.iter().map(|c| c.iter().sum()).collect();
        let mut dfeat = vec![vec![0.0; n]; d_in];
        let mut dpre = vec![0.0; n];
        for k in 0..h {
            let a = &act[k * n..(k + 1) * n];
            dpre.iter_mut().for_each(|v| *v = 0.0);
            for (o, gc) in gcols.iter().enumerate() {
                dw2[o * h + k] = gc.iter().zip(a).map(|(x, y)| x * y).sum();
                let w = w2[o * h + k];
                dpre.iter_mut().zip(gc).for_each(|(d, x)| *d += w * x);
            }
            dpre.iter_mut().zip(a).for_each(|(d, s)| *d *= s * (1.0 - s));
            db1[k] = dpre.iter().sum();
            for j in 0..d_in {
                dw1[k * d_in + j] = dpre.iter().zip(cols[j]).map(|(x, y)| x * y).sum();
                if want_inputs[j] {
                    let w = w1[k * d_in + j];
                    dfeat[j].iter_mut().zip(&dpre).for_each(|(f, d)| *f += w * d);
                }
            }
        }
        let mut put = |v: Var, d: &[f64]| {
            if self.rg(v) {
                let slot = grads[v.0].get_or_insert_with(|| vec![0.0; d.len()]);
                slot.iter_mut().zip(d).for_each(|(s, x)| *s += x);
            }
        };
        put(vars.w1, &dw1);
        put(vars.b1, &db1);
        put(vars.w2, &dw2);
        put(vars.b2, &db2);
        for (j, &v) in inputs.iter().enumerate() {
            if want_inputs[j] {
                put(v, &dfeat[j]);
            }
        }
    }
}
