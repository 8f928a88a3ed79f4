//! Reverse-mode automatic differentiation over dual-number vectors.
//!
//! A `Graph` is a fixed computation recorded once per problem and re-evaluated
//! at many time points. Every node carries `(value, d/dt)` pairs, so a single
//! forward sweep yields states and their exact time derivatives; the backward
//! sweep propagates adjoints for both components, which makes gradients of
//! losses that consume the time derivative (the mixed d/dweight of dy/dt term)
//! come out of the same mechanism.
//!
//! Losses are squared norms of the output node, accumulated over evaluation
//! points by the caller.

use alloc::vec;
use alloc::vec::Vec;

use crate::dual::Dual;
use crate::math;
use crate::nn::{Activation, NetSpec};

pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Node {
    /// Scalar t with unit tangent.
    Time,
    /// Scalar t - t0 with unit tangent.
    TimeShifted { t0: f64 },
    /// Trainable leaf: a slice of the flat parameter vector, zero tangent.
    Params { offset: usize, len: usize },
    /// Fixed values (targets, anchors); settable between evaluations.
    Consts { values: Vec<f64> },
    /// W [x; 1] with W taken from the flat parameter vector, row-major,
    /// bias column last.
    Affine {
        weights: usize,
        input: NodeId,
        rows: usize,
        cols: usize,
    },
    Activation {
        kind: Activation,
        input: NodeId,
    },
    Exp {
        input: NodeId,
    },
    Sub {
        a: NodeId,
        b: NodeId,
    },
    MulElem {
        a: NodeId,
        b: NodeId,
    },
    Concat {
        a: NodeId,
        b: NodeId,
    },
    Slice {
        input: NodeId,
        start: usize,
        len: usize,
    },
    /// Radius-one hypersphere projection: p-1 angles to p simplex coordinates.
    Hypersphere {
        angles: NodeId,
    },
    /// x_hat tanh(kappa (t-t0)) + x0 (1 - tanh(kappa (t-t0))).
    DirichletBc {
        xhat: NodeId,
        kappa: NodeId,
        x0: Vec<f64>,
        t0: f64,
    },
    /// Extracts the tangent components as values (tangent of output is zero).
    TangentOf {
        input: NodeId,
    },
    /// Power-law products: out[j] = prod_i x[i]^orders[j][i].
    PowerLaw {
        input: NodeId,
        factors: Vec<Vec<(usize, u32)>>,
    },
    /// Constant-matrix product (the stoichiometry matrix).
    MatMulConst {
        input: NodeId,
        matrix: Vec<f64>,
        rows: usize,
        cols: usize,
    },
}

pub struct Graph {
    nodes: Vec<Node>,
    widths: Vec<usize>,
    output: NodeId,
    n_params: usize,
}

/// Per-graph evaluation buffers, reusable across points and iterations.
pub struct Workspace {
    vals: Vec<Vec<Dual>>,
    adj: Vec<Vec<Dual>>,
    scratch: Vec<Vec<Dual>>,
    t: f64,
}

pub struct GraphBuilder {
    nodes: Vec<Node>,
    widths: Vec<usize>,
}

impl Default for GraphBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl GraphBuilder {
    pub fn new() -> GraphBuilder {
        GraphBuilder {
            nodes: Vec::new(),
            widths: Vec::new(),
        }
    }

    fn push(&mut self, node: Node, width: usize) -> NodeId {
        self.nodes.push(node);
        self.widths.push(width);
        self.nodes.len() - 1
    }

    pub fn width(&self, id: NodeId) -> usize {
        self.widths[id]
    }

    pub fn time(&mut self) -> NodeId {
        self.push(Node::Time, 1)
    }

    pub fn time_shifted(&mut self, t0: f64) -> NodeId {
        self.push(Node::TimeShifted { t0 }, 1)
    }

    pub fn params(&mut self, offset: usize, len: usize) -> NodeId {
        self.push(Node::Params { offset, len }, len)
    }

    pub fn consts(&mut self, values: Vec<f64>) -> NodeId {
        let w = values.len();
        self.push(Node::Consts { values }, w)
    }

    pub fn affine(&mut self, weights: usize, input: NodeId, rows: usize) -> NodeId {
        let cols = self.widths[input];
        self.push(
            Node::Affine {
                weights,
                input,
                rows,
                cols,
            },
            rows,
        )
    }

    pub fn activation(&mut self, kind: Activation, input: NodeId) -> NodeId {
        match kind {
            Activation::Linear => input,
            _ => self.push(
                Node::Activation { kind, input },
                self.widths[input],
            ),
        }
    }

    pub fn exp(&mut self, input: NodeId) -> NodeId {
        self.push(Node::Exp { input }, self.widths[input])
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.widths[a], self.widths[b]);
        self.push(Node::Sub { a, b }, self.widths[a])
    }

    pub fn mul_elem(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.widths[a], self.widths[b]);
        self.push(Node::MulElem { a, b }, self.widths[a])
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let w = self.widths[a] + self.widths[b];
        self.push(Node::Concat { a, b }, w)
    }

    pub fn slice(&mut self, input: NodeId, start: usize, len: usize) -> NodeId {
        assert!(start + len <= self.widths[input]);
        self.push(Node::Slice { input, start, len }, len)
    }

    pub fn hypersphere(&mut self, angles: NodeId) -> NodeId {
        let w = self.widths[angles] + 1;
        self.push(Node::Hypersphere { angles }, w)
    }

    pub fn dirichlet_bc(&mut self, xhat: NodeId, kappa: NodeId, x0: Vec<f64>, t0: f64) -> NodeId {
        assert_eq!(self.widths[kappa], 1);
        assert_eq!(self.widths[xhat], x0.len());
        let w = x0.len();
        self.push(
            Node::DirichletBc {
                xhat,
                kappa,
                x0,
                t0,
            },
            w,
        )
    }

    pub fn tangent_of(&mut self, input: NodeId) -> NodeId {
        self.push(Node::TangentOf { input }, self.widths[input])
    }

    pub fn power_law(&mut self, input: NodeId, factors: Vec<Vec<(usize, u32)>>) -> NodeId {
        let w = factors.len();
        self.push(Node::PowerLaw { input, factors }, w)
    }

    pub fn matmul_const(&mut self, input: NodeId, matrix: Vec<f64>, rows: usize) -> NodeId {
        let cols = self.widths[input];
        assert_eq!(matrix.len(), rows * cols);
        self.push(
            Node::MatMulConst {
                input,
                matrix,
                rows,
                cols,
            },
            rows,
        )
    }

    /// Stack a feed-forward net reading from `input`; returns the output node.
    /// `weights` is the flat-parameter offset of the net's weight block.
    pub fn ffnn(&mut self, spec: &NetSpec, weights: usize, input: NodeId) -> NodeId {
        assert_eq!(self.widths[input], spec.widths[0]);
        let mut cur = input;
        let mut offset = weights;
        for (layer, (rows, cols)) in spec.layer_dims().enumerate() {
            cur = self.affine(offset, cur, rows);
            cur = self.activation(spec.activations[layer], cur);
            offset += rows * (cols + 1);
        }
        cur
    }

    pub fn finish(self, output: NodeId, n_params: usize) -> Graph {
        Graph {
            nodes: self.nodes,
            widths: self.widths,
            output,
            n_params,
        }
    }
}

impl Graph {
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn output(&self) -> NodeId {
        self.output
    }

    pub fn workspace(&self) -> Workspace {
        let vals = self.widths.iter().map(|&w| vec![Dual::ZERO; w]).collect();
        let adj: Vec<Vec<Dual>> = self.widths.iter().map(|&w| vec![Dual::ZERO; w]).collect();
        let scratch = self
            .nodes
            .iter()
            .map(|n| match n {
                Node::Hypersphere { angles: _ } => Vec::new(), // sized lazily
                Node::DirichletBc { .. } => vec![Dual::ZERO; 2],
                _ => Vec::new(),
            })
            .collect();
        Workspace {
            vals,
            adj,
            scratch,
            t: 0.0,
        }
    }

    /// Replace the values of a `Consts` node (observation targets).
    pub fn set_consts(&mut self, id: NodeId, values: &[f64]) {
        match &mut self.nodes[id] {
            Node::Consts { values: v } => {
                assert_eq!(v.len(), values.len());
                v.copy_from_slice(values);
            }
            _ => panic!("set_consts on a non-Consts node"),
        }
    }

    /// Forward sweep at time `t`; leaves all node values in the workspace.
    pub fn forward(&self, t: f64, params: &[f64], ws: &mut Workspace) {
        debug_assert_eq!(params.len(), self.n_params);
        ws.t = t;
        for (id, node) in self.nodes.iter().enumerate() {
            // values of earlier nodes are read through a raw split to keep
            // the borrow checker out of the hot loop
            let (head, tail) = ws.vals.split_at_mut(id);
            let out = &mut tail[0];
            match node {
                Node::Time => out[0] = Dual::time(t),
                Node::TimeShifted { t0 } => out[0] = Dual::time(t - t0),
                Node::Params { offset, len } => {
                    for i in 0..*len {
                        out[i] = Dual::constant(params[offset + i]);
                    }
                }
                Node::Consts { values } => {
                    for (o, &v) in out.iter_mut().zip(values) {
                        *o = Dual::constant(v);
                    }
                }
                Node::Affine {
                    weights,
                    input,
                    rows,
                    cols,
                } => {
                    let x = &head[*input];
                    for r in 0..*rows {
                        let base = weights + r * (cols + 1);
                        let mut acc = Dual::constant(params[base + cols]);
                        for (c, xc) in x.iter().enumerate() {
                            acc = acc + *xc * params[base + c];
                        }
                        out[r] = acc;
                    }
                }
                Node::Activation { kind, input } => {
                    for (o, &x) in out.iter_mut().zip(&head[*input]) {
                        *o = kind.apply(x);
                    }
                }
                Node::Exp { input } => {
                    for (o, &x) in out.iter_mut().zip(&head[*input]) {
                        *o = x.exp();
                    }
                }
                Node::Sub { a, b } => {
                    for ((o, &x), &y) in out.iter_mut().zip(&head[*a]).zip(&head[*b]) {
                        *o = x - y;
                    }
                }
                Node::MulElem { a, b } => {
                    for ((o, &x), &y) in out.iter_mut().zip(&head[*a]).zip(&head[*b]) {
                        *o = x * y;
                    }
                }
                Node::Concat { a, b } => {
                    let (xa, xb) = (&head[*a], &head[*b]);
                    out[..xa.len()].copy_from_slice(xa);
                    out[xa.len()..].copy_from_slice(xb);
                }
                Node::Slice { input, start, len } => {
                    out.copy_from_slice(&head[*input][*start..start + len]);
                }
                Node::Hypersphere { angles } => {
                    let a = &head[*angles];
                    let q = a.len();
                    let scr = &mut ws.scratch[id];
                    scr.resize(2 * q + 1, Dual::ZERO);
                    // scr[0..q] = sin^2(angles); scr[q..=2q] = prefix products
                    for j in 0..q {
                        scr[j] = a[j].sin_sq();
                    }
                    scr[q] = Dual::constant(1.0);
                    for j in 0..q {
                        scr[q + 1 + j] = scr[q + j] * scr[j];
                    }
                    for i in 0..q {
                        out[i] = scr[q + i] - scr[q + i + 1];
                    }
                    out[q] = scr[2 * q];
                }
                Node::DirichletBc {
                    xhat,
                    kappa,
                    x0,
                    t0,
                } => {
                    let k = head[*kappa][0];
                    let dt = t - t0;
                    let z = Dual {
                        v: k.v * dt,
                        d: k.d * dt + k.v,
                    };
                    let phi = z.tanh();
                    let scr = &mut ws.scratch[id];
                    scr[0] = z;
                    scr[1] = phi;
                    for ((o, &xh), &x0i) in out.iter_mut().zip(&head[*xhat]).zip(x0) {
                        let u = Dual {
                            v: xh.v - x0i,
                            d: xh.d,
                        };
                        let p = u * phi;
                        *o = Dual {
                            v: x0i + p.v,
                            d: p.d,
                        };
                    }
                }
                Node::TangentOf { input } => {
                    for (o, &x) in out.iter_mut().zip(&head[*input]) {
                        *o = Dual::constant(x.d);
                    }
                }
                Node::PowerLaw { input, factors } => {
                    let x = &head[*input];
                    for (o, col) in out.iter_mut().zip(factors) {
                        let mut acc = Dual::constant(1.0);
                        for &(i, p) in col {
                            acc = acc * x[i].powi(p);
                        }
                        *o = acc;
                    }
                }
                Node::MatMulConst {
                    input,
                    matrix,
                    rows,
                    cols,
                } => {
                    let x = &head[*input];
                    for r in 0..*rows {
                        let mut v = 0.0;
                        let mut d = 0.0;
                        let row = &matrix[r * cols..(r + 1) * cols];
                        for (c, xc) in x.iter().enumerate() {
                            v += row[c] * xc.v;
                            d += row[c] * xc.d;
                        }
                        out[r] = Dual { v, d };
                    }
                }
            }
        }
    }

    /// Output values after `forward`.
    pub fn output_values<'a>(&self, ws: &'a Workspace) -> &'a [Dual] {
        &ws.vals[self.output]
    }

    /// Squared norm of the output's value components.
    pub fn output_sq_norm(&self, ws: &Workspace) -> f64 {
        ws.vals[self.output].iter().map(|d| d.v * d.v).sum()
    }

    /// Backward sweep for the loss contribution `weight * |output|^2`,
    /// accumulating into `grad`. Requires a preceding `forward` on `ws`.
    /// Returns the unweighted squared norm.
    pub fn backward_sq_norm(&self, params: &[f64], ws: &mut Workspace, grad: &mut [f64], weight: f64) -> f64 {
        debug_assert_eq!(grad.len(), self.n_params);
        for a in ws.adj.iter_mut() {
            for d in a.iter_mut() {
                *d = Dual::ZERO;
            }
        }
        let mut sq = 0.0;
        for i in 0..self.widths[self.output] {
            let v = ws.vals[self.output][i].v;
            sq += v * v;
            ws.adj[self.output][i].v = 2.0 * weight * v;
        }
        self.backward(params, ws, grad);
        sq
    }

    /// Generic backward sweep from pre-seeded output adjoints.
    fn backward(&self, params: &[f64], ws: &mut Workspace, grad: &mut [f64]) {
        for id in (0..self.nodes.len()).rev() {
            let (vals_head, vals_tail) = ws.vals.split_at(id);
            let own_vals = &vals_tail[0];
            let (adj_head, adj_tail) = ws.adj.split_at_mut(id);
            let own_adj = &adj_tail[0];
            match &self.nodes[id] {
                Node::Time | Node::TimeShifted { .. } | Node::Consts { .. } => {}
                Node::Params { offset, len } => {
                    for i in 0..*len {
                        grad[offset + i] += own_adj[i].v;
                    }
                }
                Node::Affine {
                    weights,
                    input,
                    rows,
                    cols,
                } => {
                    let x = &vals_head[*input];
                    let xa = &mut adj_head[*input];
                    for r in 0..*rows {
                        let o = own_adj[r];
                        let base = weights + r * (cols + 1);
                        grad[base + cols] += o.v;
                        for c in 0..*cols {
                            let w = params[base + c];
                            grad[base + c] += o.v * x[c].v + o.d * x[c].d;
                            xa[c].v += o.v * w;
                            xa[c].d += o.d * w;
                        }
                    }
                }
                Node::Activation { kind, input } => {
                    let x = &vals_head[*input];
                    let xa = &mut adj_head[*input];
                    match kind {
                        Activation::Tanh => {
                            for i in 0..x.len() {
                                let o = own_adj[i];
                                let y = own_vals[i].v; // tanh(x)
                                let g = 1.0 - y * y;
                                let gp = -2.0 * y * g;
                                xa[i].v += o.v * g + o.d * gp * x[i].d;
                                xa[i].d += o.d * g;
                            }
                        }
                        Activation::Swish => {
                            for i in 0..x.len() {
                                let o = own_adj[i];
                                let xv = x[i].v;
                                let s = math::sigmoid(xv);
                                let f1 = s + xv * s * (1.0 - s);
                                let f2 = s * (1.0 - s) * (2.0 + xv * (1.0 - 2.0 * s));
                                xa[i].v += o.v * f1 + o.d * f2 * x[i].d;
                                xa[i].d += o.d * f1;
                            }
                        }
                        Activation::Linear => unreachable!("linear is a no-op node"),
                    }
                }
                Node::Exp { input } => {
                    let x = &vals_head[*input];
                    let xa = &mut adj_head[*input];
                    for i in 0..x.len() {
                        let o = own_adj[i];
                        let y = own_vals[i].v; // e^x
                        xa[i].v += o.v * y + o.d * y * x[i].d;
                        xa[i].d += o.d * y;
                    }
                }
                Node::Sub { a, b } => {
                    if a == b {
                        continue;
                    }
                    for i in 0..own_adj.len() {
                        let o = own_adj[i];
                        adj_head[*a][i].v += o.v;
                        adj_head[*a][i].d += o.d;
                        adj_head[*b][i].v -= o.v;
                        adj_head[*b][i].d -= o.d;
                    }
                }
                Node::MulElem { a, b } => {
                    for i in 0..own_adj.len() {
                        let o = own_adj[i];
                        let (av, ad) = (vals_head[*a][i].v, vals_head[*a][i].d);
                        let (bv, bd) = (vals_head[*b][i].v, vals_head[*b][i].d);
                        adj_head[*a][i].v += o.v * bv + o.d * bd;
                        adj_head[*a][i].d += o.d * bv;
                        adj_head[*b][i].v += o.v * av + o.d * ad;
                        adj_head[*b][i].d += o.d * av;
                    }
                }
                Node::Concat { a, b } => {
                    let wa = vals_head[*a].len();
                    for i in 0..wa {
                        let o = own_adj[i];
                        adj_head[*a][i].v += o.v;
                        adj_head[*a][i].d += o.d;
                    }
                    for i in 0..vals_head[*b].len() {
                        let o = own_adj[wa + i];
                        adj_head[*b][i].v += o.v;
                        adj_head[*b][i].d += o.d;
                    }
                }
                Node::Slice { input, start, .. } => {
                    for i in 0..own_adj.len() {
                        let o = own_adj[i];
                        adj_head[*input][start + i].v += o.v;
                        adj_head[*input][start + i].d += o.d;
                    }
                }
                Node::Hypersphere { angles } => {
                    let a = &vals_head[*angles];
                    let aa = &mut adj_head[*angles];
                    let q = a.len();
                    let scr = &ws.scratch[id];
                    let s = &scr[0..q];
                    let prefix = &scr[q..2 * q + 1];
                    // out[i] = P[i] - P[i+1] (i < q), out[q] = P[q]
                    let mut pbar = vec![Dual::ZERO; q + 1];
                    for i in 0..q {
                        let o = own_adj[i];
                        pbar[i].v += o.v;
                        pbar[i].d += o.d;
                        pbar[i + 1].v -= o.v;
                        pbar[i + 1].d -= o.d;
                    }
                    pbar[q].v += own_adj[q].v;
                    pbar[q].d += own_adj[q].d;
                    // P[j+1] = P[j] * s[j], walked backwards
                    for j in (0..q).rev() {
                        let o = pbar[j + 1];
                        let (pv, pd) = (prefix[j].v, prefix[j].d);
                        let (sv, sd) = (s[j].v, s[j].d);
                        pbar[j].v += o.v * sv + o.d * sd;
                        pbar[j].d += o.d * sv;
                        // s[j] = sin^2(a[j]): ds/da = sin(2a), and the
                        // tangent s.d = sin(2a) a.d adds a 2cos(2a) a.d path
                        let sbar_v = o.v * pv + o.d * pd;
                        let sbar_d = o.d * pv;
                        let two_a = 2.0 * a[j].v;
                        let sin2a = math::sin(two_a);
                        let cos2a = math::cos(two_a);
                        aa[j].v += sbar_v * sin2a + sbar_d * 2.0 * cos2a * a[j].d;
                        aa[j].d += sbar_d * sin2a;
                    }
                }
                Node::DirichletBc {
                    xhat,
                    kappa,
                    x0,
                    t0,
                } => {
                    let scr = &ws.scratch[id];
                    let (z, phi) = (scr[0], scr[1]);
                    let xh = &vals_head[*xhat];
                    let mut phibar = Dual::ZERO;
                    {
                        let xa = &mut adj_head[*xhat];
                        for i in 0..xh.len() {
                            let o = own_adj[i];
                            let u = Dual {
                                v: xh[i].v - x0[i],
                                d: xh[i].d,
                            };
                            xa[i].v += o.v * phi.v + o.d * phi.d;
                            xa[i].d += o.d * phi.v;
                            phibar.v += o.v * u.v + o.d * u.d;
                            phibar.d += o.d * u.v;
                        }
                    }
                    // phi = tanh(z)
                    let g = 1.0 - phi.v * phi.v;
                    let gp = -2.0 * phi.v * g;
                    let zbar = Dual {
                        v: phibar.v * g + phibar.d * gp * z.d,
                        d: phibar.d * g,
                    };
                    // z = kappa * (t - t0), with d(t - t0)/dt = 1
                    let dt = ws.t - t0;
                    let ka = &mut adj_head[*kappa][0];
                    ka.v += zbar.v * dt + zbar.d;
                    ka.d += zbar.d * dt;
                }
                Node::TangentOf { input } => {
                    let xa = &mut adj_head[*input];
                    for i in 0..own_adj.len() {
                        xa[i].d += own_adj[i].v;
                    }
                }
                Node::PowerLaw { input, factors } => {
                    let x = &vals_head[*input];
                    let xa = &mut adj_head[*input];
                    let mut chain: [Dual; 5] = [Dual::ZERO; 5];
                    let mut terms: [Dual; 4] = [Dual::ZERO; 4];
                    for (j, col) in factors.iter().enumerate() {
                        debug_assert!(col.len() <= 4);
                        // rebuild the prefix chain of term products
                        chain[0] = Dual::constant(1.0);
                        for (k, &(i, p)) in col.iter().enumerate() {
                            terms[k] = x[i].powi(p);
                            chain[k + 1] = chain[k] * terms[k];
                        }
                        // reverse through acc_{k+1} = acc_k * term_k
                        let mut abar = own_adj[j];
                        for (k, &(i, p)) in col.iter().enumerate().rev() {
                            let acc = chain[k];
                            let term = terms[k];
                            let tbar = Dual {
                                v: abar.v * acc.v + abar.d * acc.d,
                                d: abar.d * acc.v,
                            };
                            let next_abar = Dual {
                                v: abar.v * term.v + abar.d * term.d,
                                d: abar.d * term.v,
                            };
                            abar = next_abar;
                            // term = x^p
                            match p {
                                1 => {
                                    xa[i].v += tbar.v;
                                    xa[i].d += tbar.d;
                                }
                                2 => {
                                    let (xv, xd) = (x[i].v, x[i].d);
                                    xa[i].v += 2.0 * (tbar.v * xv + tbar.d * xd);
                                    xa[i].d += 2.0 * tbar.d * xv;
                                }
                                _ => {
                                    let pf = p as f64;
                                    let xv = x[i].v;
                                    let xp1 = math::powi(xv, p as i32 - 1);
                                    let xp2 = math::powi(xv, p as i32 - 2);
                                    let (_, xd) = (x[i].v, x[i].d);
                                    xa[i].v += tbar.v * pf * xp1
                                        + tbar.d * pf * (pf - 1.0) * xp2 * xd;
                                    xa[i].d += tbar.d * pf * xp1;
                                }
                            }
                        }
                    }
                }
                Node::MatMulConst {
                    input,
                    matrix,
                    rows,
                    cols,
                } => {
                    let xa = &mut adj_head[*input];
                    for r in 0..*rows {
                        let o = own_adj[r];
                        let row = &matrix[r * cols..(r + 1) * cols];
                        for c in 0..*cols {
                            xa[c].v += row[c] * o.v;
                            xa[c].d += row[c] * o.d;
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Central finite-difference gradient of the graph's sq-norm loss.
    fn fd_grad(graph: &Graph, t: f64, params: &[f64], idx: usize, h: f64) -> f64 {
        let mut ws = graph.workspace();
        let mut p = params.to_vec();
        p[idx] += h;
        graph.forward(t, &p, &mut ws);
        let hi = graph.output_sq_norm(&ws);
        p[idx] -= 2.0 * h;
        graph.forward(t, &p, &mut ws);
        let lo = graph.output_sq_norm(&ws);
        (hi - lo) / (2.0 * h)
    }

    fn check_grad(graph: &Graph, t: f64, params: &[f64], tol: f64) {
        let mut ws = graph.workspace();
        graph.forward(t, params, &mut ws);
        let mut grad = vec![0.0; params.len()];
        graph.backward_sq_norm(params, &mut ws, &mut grad, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50.min(params.len()) {
            let i = rng.random_range(0..params.len());
            let fd = fd_grad(graph, t, params, i, 1e-5);
            let denom = grad[i].abs().max(fd.abs()).max(1e-6);
            assert!(
                (grad[i] - fd).abs() / denom < tol,
                "param {i}: ad {} vs fd {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn ffnn_graph_matches_direct_evaluation() {
        let spec = NetSpec::standard([5, 5, 5], 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = crate::nn::WeightTensor::glorot(spec.clone(), &mut rng);
        let mut b = GraphBuilder::new();
        let t = b.time();
        let y = b.ffnn(&spec, 0, t);
        let g = b.finish(y, w.flat.len());
        let mut ws = g.workspace();
        g.forward(0.7, &w.flat, &mut ws);
        let direct = crate::nn::forward_dual(&spec, &w.flat, crate::dual::Dual::time(0.7));
        for (a, b) in g.output_values(&ws).iter().zip(&direct) {
            assert!((a.v - b.v).abs() < 1e-15);
            assert!((a.d - b.d).abs() < 1e-15);
        }
    }

    #[test]
    fn weight_gradient_matches_finite_differences() {
        let spec = NetSpec::standard([5, 5, 5], 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = crate::nn::WeightTensor::glorot(spec.clone(), &mut rng);
        let mut b = GraphBuilder::new();
        let t = b.time();
        let y = b.ffnn(&spec, 0, t);
        let g = b.finish(y, w.flat.len());
        check_grad(&g, 0.35, &w.flat, 1e-5);
    }

    #[test]
    fn mixed_derivative_path_matches_finite_differences() {
        // loss includes the time derivative: output = d/dt of the net
        let spec = NetSpec::standard([5, 5, 5], 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = crate::nn::WeightTensor::glorot(spec.clone(), &mut rng);
        let mut b = GraphBuilder::new();
        let t = b.time();
        let y = b.ffnn(&spec, 0, t);
        let dy = b.tangent_of(y);
        let g = b.finish(dy, w.flat.len());
        check_grad(&g, 0.35, &w.flat, 1e-5);
    }

    #[test]
    fn operator_stack_gradient() {
        // hypersphere + BC operator + exp-kappa + power law + stoichiometry,
        // everything the training losses are made of
        let gas = NetSpec::standard([4, 4, 4], 2);
        let cov = NetSpec::standard([4, 4, 4], 3);
        let kap = NetSpec::shallow(3, 1);
        let n_params = gas.n_weights() + cov.n_weights() + kap.n_weights() + 2;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut params = Vec::new();
        for spec in [&gas, &cov, &kap] {
            params.extend(crate::nn::WeightTensor::glorot(spec.clone(), &mut rng).flat);
        }
        params.push(0.3); // ln k
        params.push(-0.2);

        let mut b = GraphBuilder::new();
        let t = b.time();
        let ts = b.time_shifted(0.0);
        let g_out = b.ffnn(&gas, 0, t);
        let c_out = b.ffnn(&cov, gas.n_weights(), t);
        let angles = b.slice(c_out, 0, 2);
        let simplex = b.hypersphere(angles);
        let k_out = b.ffnn(&kap, gas.n_weights() + cov.n_weights(), ts);
        let kappa = b.exp(k_out);
        let xhat = b.concat(g_out, simplex);
        let x = b.dirichlet_bc(xhat, kappa, vec![0.6, 0.4, 0.0, 0.0, 1.0], 0.0);
        let lnk = b.params(n_params - 2, 2);
        let k = b.exp(lnk);
        let pl = b.power_law(x, vec![vec![(0, 1), (4, 1)], vec![(3, 2)]]);
        let r = b.mul_elem(k, pl);
        let m = vec![-1.0, 0.5, 2.0, -1.0, 0.0, 1.0, -1.0, 1.0, 0.7, 0.0];
        let dcdt = b.matmul_const(r, m, 5);
        let xdot = b.tangent_of(x);
        let eps = b.sub(xdot, dcdt);
        let g = b.finish(eps, n_params);
        check_grad(&g, 0.4, &params, 2e-5);
    }

    #[test]
    fn gradient_is_linear_in_the_loss() {
        let spec = NetSpec::standard([4, 4, 4], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = crate::nn::WeightTensor::glorot(spec.clone(), &mut rng);
        let mut b = GraphBuilder::new();
        let t = b.time();
        let y = b.ffnn(&spec, 0, t);
        let g = b.finish(y, w.flat.len());
        let mut ws = g.workspace();

        let (a_w, b_w) = (0.7, -1.3);
        let mut grad_a = vec![0.0; w.flat.len()];
        let mut grad_b = vec![0.0; w.flat.len()];
        let mut grad_ab = vec![0.0; w.flat.len()];
        g.forward(0.2, &w.flat, &mut ws);
        g.backward_sq_norm(&w.flat, &mut ws, &mut grad_a, a_w);
        g.forward(0.9, &w.flat, &mut ws);
        g.backward_sq_norm(&w.flat, &mut ws, &mut grad_b, b_w);
        g.forward(0.2, &w.flat, &mut ws);
        g.backward_sq_norm(&w.flat, &mut ws, &mut grad_ab, a_w);
        g.forward(0.9, &w.flat, &mut ws);
        g.backward_sq_norm(&w.flat, &mut ws, &mut grad_ab, b_w);
        for i in 0..grad_a.len() {
            assert!((grad_a[i] + grad_b[i] - grad_ab[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_at_origin() {
        // loss = |y(t)|^2 with a linear net at zero weights: gradient of the
        // bias entries is 2 * bias, everything else 0
        let spec = NetSpec::new(
            vec![1, 2],
            vec![Activation::Linear],
        );
        let params = vec![0.0, 0.5, 0.0, -0.25]; // [w0, b0, w1, b1]
        let mut b = GraphBuilder::new();
        let t = b.time();
        let y = b.ffnn(&spec, 0, t);
        let g = b.finish(y, 4);
        let mut ws = g.workspace();
        g.forward(0.0, &params, &mut ws);
        let mut grad = vec![0.0; 4];
        g.backward_sq_norm(&params, &mut ws, &mut grad, 1.0);
        assert_eq!(grad[1], 2.0 * 0.5);
        assert_eq!(grad[3], 2.0 * -0.25);
        assert_eq!(grad[0], 0.0); // t = 0 kills the weight path
        assert_eq!(grad[2], 0.0);
    }
}
