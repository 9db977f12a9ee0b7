//! Tape-based reverse-mode differentiation over dense tensors.
//!
//! A [`Tape`] records every operation applied to its [`Var`]s in execution
//! order, which is automatically a topological order. [`Tape::backward`]
//! walks the records in reverse and accumulates vector-Jacobian products,
//! summing contributions when a value feeds several consumers.
//!
//! Tapes are cheap and meant to be built fresh for each training step.
//!
//! ```
//! use ufo_core::autodiff::Tape;
//! use ufo_core::Tensor;
//!
//! let tape = Tape::new();
//! let x = tape.param(Tensor::vector(vec![1.0, 2.0]));
//! let loss = x.square().sum_all();
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(grads.wrt(x).data(), &[2.0, 4.0]);
//! ```

use crate::error::{Error, Result};
use crate::numerics::fft;
use crate::tensor::{gemm, Tensor};
use std::cell::RefCell;
use std::sync::Arc;

/// Binary elementwise operations. The right operand may also be
/// broadcast along leading axes (its shape a suffix of the left's), or the
/// other way round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryKind {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryKind {
    Neg,
    Sin,
    Cos,
    Exp,
    Tanh,
    Gelu,
    Square,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceKind {
    Sum,
    Mean,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Binary { kind: BinaryKind, lhs: usize, rhs: usize },
    Unary { kind: UnaryKind, input: usize },
    Scale { input: usize, factor: f64 },
    MatMul { lhs: usize, rhs: usize },
    Transpose { input: usize },
    Reduce { kind: ReduceKind, input: usize, axis: Option<usize> },
    Reshape { input: usize },
    Expand { input: usize, axis: usize, count: usize },
    SliceRows { input: usize, start: usize },
    ConcatRows { inputs: Vec<usize> },
    Dft { re: usize, im: usize, inverse: bool },
}

struct Node {
    value: Arc<Tensor>,
    op: Op,
    needs_grad: bool,
}

/// Records operations for one forward/backward pass.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.shape())
    }
}

/// Gradients of a scalar with respect to the trainable leaves of a tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient for `var`, or `None` if the loss does not depend on it.
    pub fn get(&self, var: Var<'_>) -> Option<&Tensor> {
        self.grads.get(var.id).and_then(Option::as_ref)
    }

    /// Gradient for `var`, zeros when the loss does not depend on it.
    pub fn wrt(&self, var: Var<'_>) -> Tensor {
        self.get(var)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(&self.shapes[var.id]))
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Tensor, op: Op, needs_grad: bool) -> Var<'_> {
        self.push_arc(Arc::new(value), op, needs_grad)
    }

    fn push_arc(&self, value: Arc<Tensor>, op: Op, needs_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op, needs_grad });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    /// Registers a trainable leaf.
    pub fn param(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// Registers a leaf that never receives a gradient.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, false)
    }

    /// Like [`Tape::constant`] without copying shared data.
    pub fn constant_shared(&self, value: Arc<Tensor>) -> Var<'_> {
        self.push_arc(value, Op::Leaf, false)
    }

    fn value(&self, id: usize) -> Arc<Tensor> {
        self.nodes.borrow()[id].value.clone()
    }

    fn needs_grad(&self, id: usize) -> bool {
        self.nodes.borrow()[id].needs_grad
    }

    /// Stacks tensors with equal trailing shapes along the leading axis.
    pub fn concat_rows<'t>(&'t self, parts: &[Var<'t>]) -> Result<Var<'t>> {
        let values: Vec<Arc<Tensor>> = parts.iter().map(|v| v.value()).collect();
        let refs: Vec<&Tensor> = values.iter().map(|v| v.as_ref()).collect();
        let out = Tensor::concat_rows(&refs)?;
        let needs = parts.iter().any(|v| self.needs_grad(v.id));
        Ok(self.push(
            out,
            Op::ConcatRows {
                inputs: parts.iter().map(|v| v.id).collect(),
            },
            needs,
        ))
    }

    /// Unnormalized DFT along the leading axis of a complex array given as
    /// separate real and imaginary parts. Returns `(re, im)` of the spectrum.
    ///
    /// The backward rule is the adjoint transform (conjugate direction).
    pub fn dft_rows<'t>(&'t self, re: Var<'t>, im: Var<'t>, inverse: bool) -> Result<(Var<'t>, Var<'t>)> {
        let (vr, vi) = (re.value(), im.value());
        if vr.shape() != vi.shape() || vr.ndim() == 0 {
            return Err(Error::dim(
                "dft_rows",
                format!("re {:?} vs im {:?}", vr.shape(), vi.shape()),
            ));
        }
        let (rows, cols) = (vr.rows(), vr.row_len());
        let mut out = Vec::with_capacity(2 * rows * cols);
        let mut br = vr.data().to_vec();
        let mut bi = vi.data().to_vec();
        fft::fft_columns(&mut br, &mut bi, rows, cols, inverse)?;
        out.extend_from_slice(&br);
        out.extend_from_slice(&bi);
        let mut shape = vec![2];
        shape.extend_from_slice(vr.shape());
        let needs = self.needs_grad(re.id) || self.needs_grad(im.id);
        let both = self.push(
            Tensor::from_parts(shape, out),
            Op::Dft {
                re: re.id,
                im: im.id,
                inverse,
            },
            needs,
        );
        let tail = vr.shape().to_vec();
        let out_re = both.slice_rows(0, 1)?.reshape(&tail)?;
        let out_im = both.slice_rows(1, 2)?.reshape(&tail)?;
        Ok((out_re, out_im))
    }

    /// Computes gradients of the scalar `loss` with respect to every trainable leaf.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let shapes: Vec<Vec<usize>> = nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        if nodes[loss.id].value.numel() != 1 {
            return Err(Error::contract(
                "backward",
                format!("loss must be a scalar, got shape {:?}", shapes[loss.id]),
            ));
        }
        if nodes[loss.id].needs_grad {
            grads[loss.id] = Some(vec![1.0]);
        }
        for id in (0..=loss.id).rev() {
            let node = &nodes[id];
            if !node.needs_grad {
                continue;
            }
            let g = match &node.op {
                Op::Leaf => continue,
                _ => match grads[id].take() {
                    Some(g) => g,
                    None => continue,
                },
            };
            backprop(&nodes, id, g, &mut grads);
        }
        let grads = grads
            .into_iter()
            .zip(nodes.iter())
            .zip(shapes.iter())
            .map(|((g, n), s)| match (g, &n.op) {
                (Some(g), Op::Leaf) => Some(Tensor::from_parts(s.clone(), g)),
                _ => None,
            })
            .collect();
        Ok(Gradients { grads, shapes })
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], nodes: &[Node], id: usize, contrib: Vec<f64>) {
    if !nodes[id].needs_grad {
        return;
    }
    match &mut grads[id] {
        Some(g) => g.iter_mut().zip(&contrib).for_each(|(a, b)| *a += b),
        slot @ None => *slot = Some(contrib),
    }
}

/// Sums a full-size gradient down to a leading-axis-broadcast operand of length `small`.
fn reduce_broadcast(g: &[f64], small: usize) -> Vec<f64> {
    if g.len() == small {
        return g.to_vec();
    }
    let mut out = vec![0.0; small];
    for chunk in g.chunks_exact(small) {
        out.iter_mut().zip(chunk).for_each(|(o, v)| *o += v);
    }
    out
}

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

// 1 − 2/(e^{2u} + 1); a single exp is noticeably cheaper than libm tanh
fn fast_tanh(u: f64) -> f64 {
    1.0 - 2.0 / ((2.0 * u).exp() + 1.0)
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + fast_tanh(SQRT_2_OVER_PI * (x + 0.044715 * x * x * x)))
}

fn gelu_grad(x: f64) -> f64 {
    const C: f64 = SQRT_2_OVER_PI;
    let t = fast_tanh(C * (x + 0.044715 * x * x * x));
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * C * (1.0 + 3.0 * 0.044715 * x * x)
}

/// Gradient of `f(x, y)`-weighted `g` for an operand of length `len` whose
/// partner is `other`; one of the two spans all of `g`, the other is
/// broadcast along leading axes.
fn broadcast_grad(g: &[f64], other: &[f64], len: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let n = g.len();
    if n == 0 {
        return vec![0.0; len];
    }
    if len == n {
        let mut out = Vec::with_capacity(n);
        for gc in g.chunks_exact(other.len()) {
            out.extend(gc.iter().zip(other).map(|(g, o)| f(*g, *o)));
        }
        out
    } else {
        let mut out = vec![0.0; len];
        for (gc, oc) in g.chunks_exact(len).zip(other.chunks_exact(len)) {
            for ((d, g), o) in out.iter_mut().zip(gc).zip(oc) {
                *d += f(*g, *o);
            }
        }
        out
    }
}

fn backprop(nodes: &[Node], id: usize, mut g: Vec<f64>, grads: &mut [Option<Vec<f64>>]) {
    let out = &nodes[id].value;
    match &nodes[id].op {
        Op::Leaf => {}
        Op::Binary { kind, lhs, rhs } => {
            let (a, b) = (&nodes[*lhs].value, &nodes[*rhs].value);
            let (ad, bd) = (a.data(), b.data());
            let (la, lb) = (ad.len(), bd.len());
            let need_a = nodes[*lhs].needs_grad;
            let need_b = nodes[*rhs].needs_grad;
            let (ga, gb) = match kind {
                BinaryKind::Add | BinaryKind::Sub => {
                    let mut gb = need_b.then(|| reduce_broadcast(&g, lb));
                    if *kind == BinaryKind::Sub {
                        if let Some(gb) = gb.as_mut() {
                            gb.iter_mut().for_each(|v| *v = -*v);
                        }
                    }
                    let ga = need_a.then(|| if la == g.len() { std::mem::take(&mut g) } else { reduce_broadcast(&g, la) });
                    (ga, gb)
                }
                BinaryKind::Mul => (
                    need_a.then(|| broadcast_grad(&g, bd, la, |g, y| g * y)),
                    need_b.then(|| broadcast_grad(&g, ad, lb, |g, x| g * x)),
                ),
                BinaryKind::Div => (
                    need_a.then(|| broadcast_grad(&g, bd, la, |g, y| g / y)),
                    need_b.then(|| {
                        let w: Vec<f64> = g.iter().zip(out.data()).map(|(g, o)| -g * o).collect();
                        if lb == w.len() {
                            w.iter().zip(bd).map(|(w, y)| w / y).collect()
                        } else {
                            let mut gb = vec![0.0; lb];
                            for wc in w.chunks_exact(lb) {
                                for ((d, w), y) in gb.iter_mut().zip(wc).zip(bd) {
                                    *d += w / y;
                                }
                            }
                            gb
                        }
                    }),
                ),
            };
            if let Some(ga) = ga {
                accumulate(grads, nodes, *lhs, ga);
            }
            if let Some(gb) = gb {
                accumulate(grads, nodes, *rhs, gb);
            }
        }
        Op::Unary { kind, input } => {
            let x = nodes[*input].value.data();
            let y = out.data();
            match kind {
                UnaryKind::Neg => g.iter_mut().for_each(|g| *g = -*g),
                UnaryKind::Sin => g.iter_mut().zip(x).for_each(|(g, x)| *g *= x.cos()),
                UnaryKind::Cos => g.iter_mut().zip(x).for_each(|(g, x)| *g *= -x.sin()),
                UnaryKind::Exp => g.iter_mut().zip(y).for_each(|(g, y)| *g *= y),
                UnaryKind::Tanh => g.iter_mut().zip(y).for_each(|(g, y)| *g *= 1.0 - y * y),
                UnaryKind::Gelu => g.iter_mut().zip(x).for_each(|(g, x)| *g *= gelu_grad(*x)),
                UnaryKind::Square => g.iter_mut().zip(x).for_each(|(g, x)| *g *= 2.0 * x),
            }
            accumulate(grads, nodes, *input, g);
        }
        Op::Scale { input, factor } => {
            g.iter_mut().for_each(|v| *v *= factor);
            accumulate(grads, nodes, *input, g);
        }
        Op::MatMul { lhs, rhs } => {
            let (a, b) = (&nodes[*lhs].value, &nodes[*rhs].value);
            let (m, k) = (a.shape()[0], a.shape()[1]);
            let n = b.shape()[1];
            if nodes[*lhs].needs_grad {
                let mut ga = vec![0.0; m * k];
                gemm(m, n, k, &g, false, b.data(), true, &mut ga, 0.0);
                accumulate(grads, nodes, *lhs, ga);
            }
            if nodes[*rhs].needs_grad {
                let mut gb = vec![0.0; k * n];
                gemm(k, m, n, a.data(), true, &g, false, &mut gb, 0.0);
                accumulate(grads, nodes, *rhs, gb);
            }
        }
        Op::Transpose { input } => {
            let s = out.shape();
            let (m, n) = (s[0], s[1]);
            let mut gi = vec![0.0; m * n];
            for i in 0..m {
                for j in 0..n {
                    gi[j * m + i] = g[i * n + j];
                }
            }
            accumulate(grads, nodes, *input, gi);
        }
        Op::Reduce { kind, input, axis } => {
            let s = nodes[*input].value.shape();
            let numel: usize = s.iter().product();
            let gi = match axis {
                None => {
                    let v = match kind {
                        ReduceKind::Sum => g[0],
                        ReduceKind::Mean => g[0] / numel as f64,
                    };
                    vec![v; numel]
                }
                Some(ax) => {
                    let outer: usize = s[..*ax].iter().product();
                    let len = s[*ax];
                    let inner: usize = s[*ax + 1..].iter().product();
                    let scale = match kind {
                        ReduceKind::Sum => 1.0,
                        ReduceKind::Mean => 1.0 / len as f64,
                    };
                    let mut gi = vec![0.0; numel];
                    for o in 0..outer {
                        for l in 0..len {
                            let dst = &mut gi[(o * len + l) * inner..(o * len + l + 1) * inner];
                            let src = &g[o * inner..(o + 1) * inner];
                            dst.iter_mut().zip(src).for_each(|(d, s)| *d = s * scale);
                        }
                    }
                    gi
                }
            };
            accumulate(grads, nodes, *input, gi);
        }
        Op::Reshape { input } => accumulate(grads, nodes, *input, g),
        Op::Expand { input, axis, count } => {
            let s = nodes[*input].value.shape();
            let outer: usize = s[..*axis].iter().product();
            let inner: usize = s[*axis..].iter().product();
            let mut gi = vec![0.0; outer * inner];
            for o in 0..outer {
                let dst = &mut gi[o * inner..(o + 1) * inner];
                for c in 0..*count {
                    let src = &g[(o * count + c) * inner..(o * count + c + 1) * inner];
                    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
                }
            }
            accumulate(grads, nodes, *input, gi);
        }
        Op::SliceRows { input, start } => {
            let src = &nodes[*input].value;
            let w = src.row_len();
            let mut gi = vec![0.0; src.numel()];
            gi[start * w..start * w + g.len()].copy_from_slice(&g);
            accumulate(grads, nodes, *input, gi);
        }
        Op::ConcatRows { inputs } => {
            let mut offset = 0;
            for &i in inputs {
                let len = nodes[i].value.numel();
                accumulate(grads, nodes, i, g[offset..offset + len].to_vec());
                offset += len;
            }
        }
        Op::Dft { re, im, inverse } => {
            let half = g.len() / 2;
            let s = nodes[*re].value.shape();
            let (rows, cols) = (s[0], half / s[0]);
            let mut gr = g[..half].to_vec();
            let mut gi = g[half..].to_vec();
            // adjoint of exp(∓2πi kn/N) is the opposite direction, unnormalized
            fft::fft_columns(&mut gr, &mut gi, rows, cols, !*inverse)
                .expect("plan for an already transformed length");
            accumulate(grads, nodes, *re, gr);
            accumulate(grads, nodes, *im, gi);
        }
    }
}

fn broadcast_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    if a == b {
        return Ok(a.to_vec());
    }
    if a.len() > b.len() && a.ends_with(b) {
        return Ok(a.to_vec());
    }
    if b.len() > a.len() && b.ends_with(a) {
        return Ok(b.to_vec());
    }
    // a scalar broadcasts against anything
    if a.is_empty() {
        return Ok(b.to_vec());
    }
    if b.is_empty() {
        return Ok(a.to_vec());
    }
    Err(Error::dim(
        op,
        format!("shapes {a:?} and {b:?} are not equal or leading-axis broadcastable"),
    ))
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Arc<Tensor> {
        self.tape.value(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    /// Whether a gradient flows into this value.
    pub fn requires_grad(&self) -> bool {
        self.tape.needs_grad(self.id)
    }

    fn same_tape(&self, other: &Var<'t>, op: &'static str) -> Result<()> {
        if std::ptr::eq(self.tape, other.tape) {
            Ok(())
        } else {
            Err(Error::contract(op, "operands live on different tapes"))
        }
    }

    /// Elementwise binary operation with leading-axis broadcasting.
    pub fn binary(self, kind: BinaryKind, other: Var<'t>) -> Result<Var<'t>> {
        let op = match kind {
            BinaryKind::Add => "add",
            BinaryKind::Sub => "sub",
            BinaryKind::Mul => "mul",
            BinaryKind::Div => "div",
        };
        self.same_tape(&other, op)?;
        let (a, b) = (self.value(), other.value());
        let shape = broadcast_shape(op, a.shape(), b.shape())?;
        let (ad, bd) = (a.data(), b.data());
        let (la, lb) = (ad.len(), bd.len());
        let n: usize = shape.iter().product();
        let f: fn(f64, f64) -> f64 = match kind {
            BinaryKind::Add => |x, y| x + y,
            BinaryKind::Sub => |x, y| x - y,
            BinaryKind::Mul => |x, y| x * y,
            BinaryKind::Div => |x, y| x / y,
        };
        let mut data: Vec<f64> = Vec::with_capacity(n);
        if n > 0 {
            if la == n {
                for ca in ad.chunks_exact(lb) {
                    data.extend(ca.iter().zip(bd).map(|(x, y)| f(*x, *y)));
                }
            } else {
                for cb in bd.chunks_exact(la) {
                    data.extend(ad.iter().zip(cb).map(|(x, y)| f(*x, *y)));
                }
            }
        }
        let needs = self.requires_grad() || other.requires_grad();
        Ok(self.tape.push(
            Tensor::from_parts(shape, data),
            Op::Binary {
                kind,
                lhs: self.id,
                rhs: other.id,
            },
            needs,
        ))
    }

    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(BinaryKind::Add, other)
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(BinaryKind::Sub, other)
    }

    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(BinaryKind::Mul, other)
    }

    /// Division follows IEEE semantics; use [`Tensor::ensure_finite`] to catch x/0.
    pub fn div(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(BinaryKind::Div, other)
    }

    /// Elementwise unary operation.
    pub fn unary(self, kind: UnaryKind) -> Var<'t> {
        let x = self.value();
        let f: fn(f64) -> f64 = match kind {
            UnaryKind::Neg => |v| -v,
            UnaryKind::Sin => f64::sin,
            UnaryKind::Cos => f64::cos,
            UnaryKind::Exp => f64::exp,
            UnaryKind::Tanh => f64::tanh,
            UnaryKind::Gelu => gelu,
            UnaryKind::Square => |v| v * v,
        };
        self.tape.push(
            x.map(f),
            Op::Unary {
                kind,
                input: self.id,
            },
            self.requires_grad(),
        )
    }

    pub fn neg(self) -> Var<'t> {
        self.unary(UnaryKind::Neg)
    }

    pub fn sin(self) -> Var<'t> {
        self.unary(UnaryKind::Sin)
    }

    pub fn cos(self) -> Var<'t> {
        self.unary(UnaryKind::Cos)
    }

    pub fn exp(self) -> Var<'t> {
        self.unary(UnaryKind::Exp)
    }

    pub fn tanh(self) -> Var<'t> {
        self.unary(UnaryKind::Tanh)
    }

    /// GELU, tanh approximation.
    pub fn gelu(self) -> Var<'t> {
        self.unary(UnaryKind::Gelu)
    }

    pub fn square(self) -> Var<'t> {
        self.unary(UnaryKind::Square)
    }

    /// Multiplies by a constant.
    pub fn scale(self, factor: f64) -> Var<'t> {
        let x = self.value();
        self.tape.push(
            x.map(|v| v * factor),
            Op::Scale {
                input: self.id,
                factor,
            },
            self.requires_grad(),
        )
    }

    /// Matrix product of two 2-D values.
    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(&other, "matmul")?;
        let (a, b) = (self.value(), other.value());
        let (m, k) = a.as_matrix("matmul")?;
        let (k2, n) = b.as_matrix("matmul")?;
        if k != k2 {
            return Err(Error::dim(
                "matmul",
                format!("inner dimensions differ: {:?} · {:?}", a.shape(), b.shape()),
            ));
        }
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, a.data(), false, b.data(), false, &mut out, 0.0);
        let needs = self.requires_grad() || other.requires_grad();
        Ok(self.tape.push(
            Tensor::from_parts(vec![m, n], out),
            Op::MatMul {
                lhs: self.id,
                rhs: other.id,
            },
            needs,
        ))
    }

    pub fn transpose(self) -> Result<Var<'t>> {
        let t = self.value().transpose()?;
        Ok(self.tape.push(t, Op::Transpose { input: self.id }, self.requires_grad()))
    }

    /// Sums or averages along `axis`, or over everything when `axis` is `None`.
    pub fn reduce(self, kind: ReduceKind, axis: Option<usize>) -> Result<Var<'t>> {
        let x = self.value();
        let s = x.shape();
        let (shape, data) = match axis {
            None => {
                let total: f64 = x.data().iter().sum();
                let v = match kind {
                    ReduceKind::Sum => total,
                    ReduceKind::Mean => total / x.numel() as f64,
                };
                (Vec::new(), vec![v])
            }
            Some(ax) => {
                if ax >= s.len() {
                    return Err(Error::dim(
                        "reduce",
                        format!("axis {ax} out of range for shape {s:?}"),
                    ));
                }
                let outer: usize = s[..ax].iter().product();
                let len = s[ax];
                let inner: usize = s[ax + 1..].iter().product();
                let mut out = vec![0.0; outer * inner];
                for o in 0..outer {
                    let dst = &mut out[o * inner..(o + 1) * inner];
                    for l in 0..len {
                        let src = &x.data()[(o * len + l) * inner..(o * len + l + 1) * inner];
                        dst.iter_mut().zip(src).for_each(|(d, v)| *d += v);
                    }
                }
                if kind == ReduceKind::Mean {
                    let inv = 1.0 / len as f64;
                    out.iter_mut().for_each(|v| *v *= inv);
                }
                let mut shape = s.to_vec();
                shape.remove(ax);
                (shape, out)
            }
        };
        Ok(self.tape.push(
            Tensor::from_parts(shape, data),
            Op::Reduce {
                kind,
                input: self.id,
                axis,
            },
            self.requires_grad(),
        ))
    }

    pub fn sum(self, axis: usize) -> Result<Var<'t>> {
        self.reduce(ReduceKind::Sum, Some(axis))
    }

    pub fn mean(self, axis: usize) -> Result<Var<'t>> {
        self.reduce(ReduceKind::Mean, Some(axis))
    }

    pub fn sum_all(self) -> Var<'t> {
        self.reduce(ReduceKind::Sum, None).expect("full reduction has no axis to check")
    }

    pub fn mean_all(self) -> Var<'t> {
        self.reduce(ReduceKind::Mean, None).expect("full reduction has no axis to check")
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Var<'t>> {
        let x = (*self.value()).clone().reshape(shape.to_vec())?;
        Ok(self.tape.push(x, Op::Reshape { input: self.id }, self.requires_grad()))
    }

    /// Inserts a new axis at `axis` and repeats the value `count` times along it.
    pub fn expand(self, axis: usize, count: usize) -> Result<Var<'t>> {
        let x = self.value();
        let s = x.shape();
        if axis > s.len() || count == 0 {
            return Err(Error::dim(
                "expand",
                format!("cannot insert axis {axis} x{count} into {s:?}"),
            ));
        }
        let outer: usize = s[..axis].iter().product();
        let inner: usize = s[axis..].iter().product();
        let mut data = Vec::with_capacity(outer * count * inner);
        for o in 0..outer {
            let src = &x.data()[o * inner..(o + 1) * inner];
            for _ in 0..count {
                data.extend_from_slice(src);
            }
        }
        let mut shape = s.to_vec();
        shape.insert(axis, count);
        Ok(self.tape.push(
            Tensor::from_parts(shape, data),
            Op::Expand {
                input: self.id,
                axis,
                count,
            },
            self.requires_grad(),
        ))
    }

    /// Rows `start..end` along the leading axis.
    pub fn slice_rows(self, start: usize, end: usize) -> Result<Var<'t>> {
        let x = self.value();
        if x.ndim() == 0 || start >= end || end > x.rows() {
            return Err(Error::dim(
                "slice_rows",
                format!("rows {start}..{end} out of range for {:?}", x.shape()),
            ));
        }
        let w = x.row_len();
        let mut shape = x.shape().to_vec();
        shape[0] = end - start;
        let data = x.data()[start * w..end * w].to_vec();
        Ok(self.tape.push(
            Tensor::from_parts(shape, data),
            Op::SliceRows {
                input: self.id,
                start,
            },
            self.requires_grad(),
        ))
    }
}
