//! A minimal reverse-mode tape over `f64` vectors.
//!
//! Every node holds a vector value. Parameters are never copied into the
//! tape: ops that read a parameter tensor keep its index and write their
//! gradient straight into a [`ParamStore`]-shaped buffer on the backward pass.

use super::params::ParamStore;

pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Row { param: usize, row: usize },
    Linear { w: usize, b: Option<usize>, x: NodeId },
    Concat(Vec<NodeId>),
    Slice { x: NodeId, start: usize },
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    /// Elementwise product with a constant (dropout masks).
    MaskMul { x: NodeId, mask: Vec<f64> },
    Softmax(NodeId),
    LogSoftmax(NodeId),
    WeightedSum { weights: NodeId, items: Vec<NodeId> },
    Pick { x: NodeId, index: usize },
    Sum(Vec<NodeId>),
}

pub struct Graph<'p> {
    params: &'p ParamStore,
    values: Vec<Vec<f64>>,
    ops: Vec<Op>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Graph {
            params,
            values: Vec::new(),
            ops: Vec::new(),
        }
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> NodeId {
        self.values.push(value);
        self.ops.push(op);
        self.values.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.values[id]
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.values[id].len(), 1);
        self.values[id][0]
    }

    pub fn leaf(&mut self, value: Vec<f64>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.leaf(vec![0.0; len])
    }

    /// One row of a parameter matrix (embedding lookup).
    pub fn row(&mut self, p: usize, row: usize) -> NodeId {
        let v = self.params.get(p).row(row).to_vec();
        self.push(v, Op::Row { param: p, row })
    }

    /// `W x (+ b)` with `W` stored row-major as `out x in`.
    pub fn linear(&mut self, w: usize, b: Option<usize>, x: NodeId) -> NodeId {
        let wt = self.params.get(w);
        let xv = &self.values[x];
        assert_eq!(wt.cols, xv.len(), "linear {}: input width", wt.name);
        let mut out: Vec<f64> = match b {
            Some(b) => self.params.get(b).data.clone(),
            None => vec![0.0; wt.rows],
        };
        for (o, row) in out.iter_mut().zip(wt.data.chunks_exact(wt.cols)) {
            *o += dot(row, xv);
        }
        self.push(out, Op::Linear { w, b, x })
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let mut v = Vec::with_capacity(parts.iter().map(|&p| self.values[p].len()).sum());
        for &p in parts {
            v.extend_from_slice(&self.values[p]);
        }
        self.push(v, Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        let v = self.values[x][start..start + len].to_vec();
        self.push(v, Op::Slice { x, start })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = zip_map(&self.values[a], &self.values[b], |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = zip_map(&self.values[a], &self.values[b], |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v = self.values[x].iter().map(|&z| sigmoid(z)).collect();
        self.push(v, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = self.values[x].iter().map(|z| z.tanh()).collect();
        self.push(v, Op::Tanh(x))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = self.values[x].iter().map(|&z| z.max(0.0)).collect();
        self.push(v, Op::Relu(x))
    }

    pub fn mask_mul(&mut self, x: NodeId, mask: Vec<f64>) -> NodeId {
        let v = zip_map(&self.values[x], &mask, |a, m| a * m);
        self.push(v, Op::MaskMul { x, mask })
    }

    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let v = softmax(&self.values[x]);
        self.push(v, Op::Softmax(x))
    }

    pub fn log_softmax(&mut self, x: NodeId) -> NodeId {
        let v = log_softmax(&self.values[x]);
        self.push(v, Op::LogSoftmax(x))
    }

    /// `sum_i weights[i] * items[i]`.
    pub fn weighted_sum(&mut self, weights: NodeId, items: &[NodeId]) -> NodeId {
        let w = &self.values[weights];
        assert_eq!(w.len(), items.len());
        let dim = self.values[items[0]].len();
        let mut out = vec![0.0; dim];
        for (&wi, &item) in w.iter().zip(items) {
            for (o, v) in out.iter_mut().zip(&self.values[item]) {
                *o += wi * v;
            }
        }
        self.push(
            out,
            Op::WeightedSum {
                weights,
                items: items.to_vec(),
            },
        )
    }

    pub fn pick(&mut self, x: NodeId, index: usize) -> NodeId {
        let v = vec![self.values[x][index]];
        self.push(v, Op::Pick { x, index })
    }

    /// Sum of scalar nodes.
    pub fn sum(&mut self, xs: &[NodeId]) -> NodeId {
        let v = vec![xs.iter().map(|&x| self.values[x][0]).sum()];
        self.push(v, Op::Sum(xs.to_vec()))
    }

    /// Back-propagates from scalar node `out`, seeding its gradient with
    /// `seed`, and accumulates parameter gradients into `grads`.
    pub fn backward(&self, out: NodeId, seed: f64, grads: &mut ParamStore) {
        self.backward_with_leaves(out, seed, grads, &[]);
    }

    /// Like [`Graph::backward`], also returning the gradient reaching each
    /// node in `leaves` (zeros when none does).
    pub fn backward_with_leaves(
        &self,
        out: NodeId,
        seed: f64,
        grads: &mut ParamStore,
        leaves: &[NodeId],
    ) -> Vec<Vec<f64>> {
        let mut leaf_grads: Vec<Vec<f64>> =
            leaves.iter().map(|&l| vec![0.0; self.values[l].len()]).collect();
        let mut g: Vec<Option<Vec<f64>>> = vec![None; out + 1];
        g[out] = Some(vec![seed; self.values[out].len()]);
        for id in (0..=out).rev() {
            let Some(gy) = g[id].take() else { continue };
            if let Some(pos) = leaves.iter().position(|&l| l == id) {
                leaf_grads[pos] = gy.clone();
            }
            match &self.ops[id] {
                Op::Leaf => {}
                Op::Row { param, row } => add_into(grads.get_mut(*param).row_mut(*row), &gy),
                Op::Linear { w, b, x } => {
                    let wt = self.params.get(*w);
                    let xv = &self.values[*x];
                    {
                        let gw = &mut grads.get_mut(*w).data;
                        for (row, &gi) in gw.chunks_exact_mut(wt.cols).zip(&gy) {
                            if gi != 0.0 {
                                for (r, xj) in row.iter_mut().zip(xv) {
                                    *r += gi * xj;
                                }
                            }
                        }
                    }
                    if let Some(b) = b {
                        add_into(&mut grads.get_mut(*b).data, &gy);
                    }
                    let gx = grad_slot(&mut g, *x, wt.cols);
                    for (row, &gi) in wt.data.chunks_exact(wt.cols).zip(&gy) {
                        if gi != 0.0 {
                            for (gxj, wj) in gx.iter_mut().zip(row) {
                                *gxj += gi * wj;
                            }
                        }
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.values[p].len();
                        add_into(grad_slot(&mut g, p, n), &gy[off..off + n]);
                        off += n;
                    }
                }
                Op::Slice { x, start } => {
                    let n = self.values[*x].len();
                    let gx = grad_slot(&mut g, *x, n);
                    add_into(&mut gx[*start..*start + gy.len()], &gy);
                }
                Op::Add(a, b) => {
                    add_into(grad_slot(&mut g, *a, gy.len()), &gy);
                    add_into(grad_slot(&mut g, *b, gy.len()), &gy);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.values[*a], &self.values[*b]);
                    let ga: Vec<f64> = zip_map(&gy, bv, |x, y| x * y);
                    let gb: Vec<f64> = zip_map(&gy, av, |x, y| x * y);
                    add_into(grad_slot(&mut g, *a, gy.len()), &ga);
                    add_into(grad_slot(&mut g, *b, gy.len()), &gb);
                }
                Op::Sigmoid(x) => {
                    let y = &self.values[id];
                    let gx = grad_slot(&mut g, *x, gy.len());
                    for ((gxi, gi), yi) in gx.iter_mut().zip(&gy).zip(y) {
                        *gxi += gi * yi * (1.0 - yi);
                    }
                }
                Op::Tanh(x) => {
                    let y = &self.values[id];
                    let gx = grad_slot(&mut g, *x, gy.len());
                    for ((gxi, gi), yi) in gx.iter_mut().zip(&gy).zip(y) {
                        *gxi += gi * (1.0 - yi * yi);
                    }
                }
                Op::Relu(x) => {
                    let xv = &self.values[*x];
                    let gx = grad_slot(&mut g, *x, gy.len());
                    for ((gxi, gi), xi) in gx.iter_mut().zip(&gy).zip(xv) {
                        if *xi > 0.0 {
                            *gxi += gi;
                        }
                    }
                }
                Op::MaskMul { x, mask } => {
                    let d = zip_map(&gy, mask, |a, m| a * m);
                    add_into(grad_slot(&mut g, *x, gy.len()), &d);
                }
                Op::Softmax(x) => {
                    let y = &self.values[id];
                    let inner = dot(&gy, y);
                    let gx = grad_slot(&mut g, *x, gy.len());
                    for ((gxi, gi), yi) in gx.iter_mut().zip(&gy).zip(y) {
                        *gxi += yi * (gi - inner);
                    }
                }
                Op::LogSoftmax(x) => {
                    let y = &self.values[id];
                    let total: f64 = gy.iter().sum();
                    let gx = grad_slot(&mut g, *x, gy.len());
                    for ((gxi, gi), yi) in gx.iter_mut().zip(&gy).zip(y) {
                        *gxi += gi - yi.exp() * total;
                    }
                }
                Op::WeightedSum { weights, items } => {
                    let w = &self.values[*weights];
                    let gw: Vec<f64> = items.iter().map(|&it| dot(&gy, &self.values[it])).collect();
                    add_into(grad_slot(&mut g, *weights, w.len()), &gw);
                    for (&wi, &it) in w.iter().zip(items) {
                        let gi = grad_slot(&mut g, it, gy.len());
                        for (a, b) in gi.iter_mut().zip(&gy) {
                            *a += wi * b;
                        }
                    }
                }
                Op::Pick { x, index } => {
                    let n = self.values[*x].len();
                    grad_slot(&mut g, *x, n)[*index] += gy[0];
                }
                Op::Sum(xs) => {
                    for &x in xs {
                        grad_slot(&mut g, x, 1)[0] += gy[0];
                    }
                }
            }
        }
        leaf_grads
    }
}

fn grad_slot(g: &mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &mut Vec<f64> {
    g[id].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "elementwise op on mismatched lengths");
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn log_softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    x.iter().map(|v| v - lse).collect()
}

pub fn logsumexp(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
