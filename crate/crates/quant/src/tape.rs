// SPDX-License-Identifier: Apache-2.0

//! Minimal reverse-mode automatic differentiation over 2-D arrays.
//!
//! Every op records its inputs and whatever it needs for the backward pass.
//! Matrix products take their effective (possibly perturbed or quantized)
//! operands from the caller, so the backward pass is a straight-through
//! estimate around whatever happened in the forward pass.

use ndarray::{concatenate, s, Array2, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    /// Position of this node in the vector returned by [`Tape::backward`].
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op {
    Leaf,
    MatMul {
        a: Var,
        b: Var,
        a_eff: Array2<f64>,
        b_eff: Array2<f64>,
    },
    Add(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    Gelu(Var),
    LayerNorm {
        a: Var,
        xhat: Array2<f64>,
        inv_std: Vec<f64>,
    },
    SoftmaxRows(Var),
    Transpose(Var),
    SliceCols {
        a: Var,
        start: usize,
    },
    ConcatCols(Vec<Var>),
    MeanRows(Var),
    CrossEntropy {
        a: Var,
        label: usize,
    },
}

struct Node {
    value: Array2<f64>,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

const GELU_C: f64 = 0.797_884_560_802_865_4;
const LN_EPS: f64 = 1e-5;

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// Product `a·b` whose forward value is `value`, computed by the caller
    /// from the effective operands `a_eff`, `b_eff`.
    pub fn matmul_with(
        &mut self,
        a: Var,
        b: Var,
        a_eff: Array2<f64>,
        b_eff: Array2<f64>,
        value: Array2<f64>,
    ) -> Var {
        self.push(value, Op::MatMul { a, b, a_eff, b_eff })
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (ae, be) = (self.value(a).clone(), self.value(b).clone());
        let y = ae.dot(&be);
        self.matmul_with(a, b, ae, be, y)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let y = self.value(a) + self.value(b);
        self.push(y, Op::Add(a, b))
    }

    /// Adds a 1×n row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let y = self.value(a) + self.value(row);
        self.push(y, Op::AddRow(a, row))
    }

    /// Multiplies every row of `a` elementwise by a 1×n row.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        let y = self.value(a) * self.value(row);
        self.push(y, Op::MulRow(a, row))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let y = self.value(a) * k;
        self.push(y, Op::Scale(a, k))
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let y = self.value(a).mapv(gelu);
        self.push(y, Op::Gelu(a))
    }

    /// Per-row normalization to zero mean and unit variance.
    pub fn layer_norm(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let n = x.ncols() as f64;
        let mut xhat = x.clone();
        let mut inv_std = Vec::with_capacity(x.nrows());
        for mut row in xhat.rows_mut() {
            let mean = row.sum() / n;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let is = 1.0 / (var + LN_EPS).sqrt();
            row.mapv_inplace(|v| (v - mean) * is);
            inv_std.push(is);
        }
        self.push(xhat.clone(), Op::LayerNorm { a, xhat, inv_std })
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let mut y = self.value(a).clone();
        for mut row in y.rows_mut() {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - m).exp());
            let s = row.sum();
            row.mapv_inplace(|v| v / s);
        }
        self.push(y, Op::SoftmaxRows(a))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let y = self.value(a).t().to_owned();
        self.push(y, Op::Transpose(a))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let y = self.value(a).slice(s![.., start..end]).to_owned();
        self.push(y, Op::SliceCols { a, start })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let y = concatenate(Axis(1), &views).expect("equal row counts");
        self.push(y, Op::ConcatCols(parts.to_vec()))
    }

    /// Mean over rows, giving a 1×n row.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let y = x
            .mean_axis(Axis(0))
            .expect("non-empty")
            .insert_axis(Axis(0));
        self.push(y, Op::MeanRows(a))
    }

    /// Softmax cross-entropy of a 1×k logit row against `label`.
    pub fn cross_entropy(&mut self, a: Var, label: usize) -> Var {
        let z = self.value(a).row(0);
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let y = Array2::from_elem((1, 1), lse - z[label]);
        self.push(y, Op::CrossEntropy { a, label })
    }

    /// Gradients of the scalar `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Vec<Option<Array2<f64>>> {
        let mut g: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        g[loss.0] = Some(Array2::ones(self.nodes[loss.0].value.raw_dim()));
        fn acc(g: &mut [Option<Array2<f64>>], v: Var, d: Array2<f64>) {
            match &mut g[v.0] {
                Some(x) => *x += &d,
                slot => *slot = Some(d),
            }
        }
        for i in (0..=loss.0).rev() {
            let Some(dy) = g[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    g[i] = Some(dy);
                    continue;
                }
                Op::MatMul { a, b, a_eff, b_eff } => {
                    acc(&mut g, *a, dy.dot(&b_eff.t()));
                    acc(&mut g, *b, a_eff.t().dot(&dy));
                }
                Op::Add(a, b) => {
                    acc(&mut g, *a, dy.clone());
                    acc(&mut g, *b, dy);
                }
                Op::AddRow(a, row) => {
                    acc(&mut g, *row, dy.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(&mut g, *a, dy);
                }
                Op::MulRow(a, row) => {
                    let r = self.value(*row);
                    let x = self.value(*a);
                    acc(
                        &mut g,
                        *row,
                        (&dy * x).sum_axis(Axis(0)).insert_axis(Axis(0)),
                    );
                    acc(&mut g, *a, &dy * r);
                }
                Op::Scale(a, k) => acc(&mut g, *a, dy * *k),
                Op::Gelu(a) => {
                    let d = &dy * &self.value(*a).mapv(gelu_grad);
                    acc(&mut g, *a, d);
                }
                Op::LayerNorm { a, xhat, inv_std } => {
                    let n = xhat.ncols() as f64;
                    let mut dx = Array2::zeros(xhat.raw_dim());
                    for (r, is) in inv_std.iter().enumerate() {
                        let dyr = dy.row(r);
                        let xr = xhat.row(r);
                        let mean_dy = dyr.sum() / n;
                        let mean_dyx = dyr.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>() / n;
                        for c in 0..xhat.ncols() {
                            dx[[r, c]] = is * (dyr[c] - mean_dy - xr[c] * mean_dyx);
                        }
                    }
                    acc(&mut g, *a, dx);
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut dx = Array2::zeros(y.raw_dim());
                    for r in 0..y.nrows() {
                        let dot: f64 = dy.row(r).iter().zip(y.row(r)).map(|(a, b)| a * b).sum();
                        for c in 0..y.ncols() {
                            dx[[r, c]] = y[[r, c]] * (dy[[r, c]] - dot);
                        }
                    }
                    acc(&mut g, *a, dx);
                }
                Op::Transpose(a) => acc(&mut g, *a, dy.t().to_owned()),
                Op::SliceCols { a, start } => {
                    let mut d = Array2::zeros(self.value(*a).raw_dim());
                    d.slice_mut(s![.., *start..*start + dy.ncols()]).assign(&dy);
                    acc(&mut g, *a, d);
                }
                Op::ConcatCols(parts) => {
                    let mut c0 = 0;
                    for p in parts {
                        let w = self.value(*p).ncols();
                        acc(&mut g, *p, dy.slice(s![.., c0..c0 + w]).to_owned());
                        c0 += w;
                    }
                }
                Op::MeanRows(a) => {
                    let x = self.value(*a);
                    let d =
                        Array2::from_shape_fn(x.raw_dim(), |(_, c)| dy[[0, c]] / x.nrows() as f64);
                    acc(&mut g, *a, d);
                }
                Op::CrossEntropy { a, label } => {
                    let z = self.value(*a).row(0);
                    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
                    let s: f64 = e.iter().sum();
                    let d = Array2::from_shape_fn((1, z.len()), |(_, c)| {
                        dy[[0, 0]] * (e[c] / s - if c == *label { 1.0 } else { 0.0 })
                    });
                    acc(&mut g, *a, d);
                }
            }
        }
        g
    }
}
