use std::sync::Arc;

use super::kernels::{
    matmul_acc, matmul_at_acc, matmul_bt_acc, shifted_softplus_with_slope, sigmoid,
};
use super::{Real, Tensor};
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBias(Var, Var),
    Scale(Var, T),
    Concat(Vec<Var>, usize),
    GatherRows(Var, Arc<[usize]>),
    SegmentSum(Var, Arc<[usize]>),
    SegmentSoftmax(Var, Arc<[usize]>, usize),
    LeakyRelu(Var, T),
    /// Keeps the sigmoid of the input, which is the derivative.
    ShiftedSoftplus(Var, Vec<T>),
    Sigmoid(Var),
    Sum(Var),
    Mean(Var),
    HeadDot(Var, Var),
    HeadScale(Var, Var),
    Reshape(Var),
    Attend(Var, Var, EdgeIndex),
    EdgeFilter(Var, Var, EdgeIndex),
}

/// Source, target and per-edge row ids of a fused message-passing op.
#[derive(Debug, Clone)]
struct EdgeIndex {
    src: Arc<[usize]>,
    dst: Arc<[usize]>,
    row: Arc<[usize]>,
}

#[derive(Debug, Clone)]
struct Node<T> {
    shape: Vec<usize>,
    value: Vec<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Records operations in execution order so gradients can be replayed backwards.
///
/// Leaf gradients persist across calls to [`Tape::backward`] and accumulate
/// until [`Tape::zero_grads`].
#[derive(Debug, Clone, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    leaf_grads: Vec<Option<Vec<T>>>,
}

fn rows_cols(shape: &[usize]) -> (usize, usize) {
    match shape.len() {
        0 => (1, 1),
        _ => (shape[0], shape[1..].iter().product()),
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            leaf_grads: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a tensor as a leaf. Its `requires_grad` flag decides whether a
    /// gradient is collected for it.
    pub fn leaf(&mut self, t: &Tensor<T>) -> Var {
        self.push_leaf(t.shape().to_vec(), t.data().to_vec(), t.requires_grad)
    }

    /// Records a tensor as a leaf that never collects a gradient.
    pub fn frozen(&mut self, t: &Tensor<T>) -> Var {
        self.push_leaf(t.shape().to_vec(), t.data().to_vec(), false)
    }

    pub fn constant(&mut self, shape: Vec<usize>, data: Vec<T>) -> Result<Var> {
        let t = Tensor::new(shape, data)?;
        let (shape, data) = (t.shape().to_vec(), t.into_data());
        Ok(self.push_leaf(shape, data, false))
    }

    fn push_leaf(&mut self, shape: Vec<usize>, value: Vec<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            shape,
            value,
            op: Op::Leaf,
            needs_grad,
        });
        self.leaf_grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn push(
        &mut self,
        name: &'static str,
        shape: Vec<usize>,
        value: Vec<T>,
        op: Op<T>,
        inputs: &[Var],
    ) -> Result<Var> {
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: name });
        }
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node {
            shape,
            value,
            op,
            needs_grad,
        });
        self.leaf_grads.push(None);
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn tensor(&self, v: Var) -> Tensor<T> {
        let n = &self.nodes[v.0];
        Tensor::new(n.shape.clone(), n.value.clone()).expect("node shape is consistent")
    }

    /// Accumulated gradient of a leaf, if any backward pass reached it.
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.leaf_grads[v.0].as_deref()
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.leaf_grads {
            *g = None;
        }
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::shape(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    fn zip(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        op: Op<T>,
        f: impl Fn(T, T) -> T,
    ) -> Result<Var> {
        self.same_shape(name, a, b)?;
        let value = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = self.shape(a).to_vec();
        self.push(name, shape, value, op, &[a, b])
    }

    fn map(&mut self, name: &'static str, a: Var, op: Op<T>, f: impl Fn(T) -> T) -> Result<Var> {
        let value = self.value(a).iter().map(|&x| f(x)).collect();
        let shape = self.shape(a).to_vec();
        self.push(name, shape, value, op, &[a])
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::shape("matmul", format!("{sa:?} x {sb:?}")));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![T::zero(); m * n];
        matmul_acc(self.value(a), self.value(b), m, k, n, &mut out);
        self.push("matmul", vec![m, n], out, Op::MatMul(a, b), &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    /// Adds a length-`C` bias to every row of an `R x C` matrix.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (_, c) = rows_cols(self.shape(a));
        if self.shape(a).len() != 2 || self.nodes[bias.0].value.len() != c {
            return Err(Error::shape(
                "add_bias",
                format!("{:?} + {:?}", self.shape(a), self.shape(bias)),
            ));
        }
        let b = self.value(bias);
        let value = self
            .value(a)
            .chunks(c.max(1))
            .flat_map(|row| row.iter().zip(b).map(|(&x, &y)| x + y))
            .collect();
        let shape = self.shape(a).to_vec();
        self.push("add_bias", shape, value, Op::AddBias(a, bias), &[a, bias])
    }

    pub fn scale(&mut self, a: Var, s: T) -> Result<Var> {
        self.map("scale", a, Op::Scale(a, s), |x| x * s)
    }

    /// Concatenates 2-D tensors along rows (`axis = 0`) or columns (`axis = 1`).
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        if parts.is_empty() || axis > 1 {
            return Err(Error::shape(
                "concat",
                format!("{} parts, axis {axis}", parts.len()),
            ));
        }
        let shapes: Vec<&[usize]> = parts.iter().map(|&p| self.shape(p)).collect();
        if shapes.iter().any(|s| s.len() != 2) {
            return Err(Error::shape(
                "concat",
                format!("expected matrices, got {shapes:?}"),
            ));
        }
        let keep = 1 - axis;
        if shapes.iter().any(|s| s[keep] != shapes[0][keep]) {
            return Err(Error::shape(
                "concat",
                format!("{shapes:?} along axis {axis}"),
            ));
        }
        let total: usize = shapes.iter().map(|s| s[axis]).sum();
        let value = if axis == 0 {
            parts
                .iter()
                .flat_map(|&p| self.value(p).iter().copied())
                .collect()
        } else {
            let rows = shapes[0][0];
            let mut out = Vec::with_capacity(rows * total);
            for r in 0..rows {
                for &p in parts {
                    let c = self.shape(p)[1];
                    out.extend_from_slice(&self.value(p)[r * c..(r + 1) * c]);
                }
            }
            out
        };
        let shape = if axis == 0 {
            vec![total, shapes[0][1]]
        } else {
            vec![shapes[0][0], total]
        };
        self.push(
            "concat",
            shape,
            value,
            Op::Concat(parts.to_vec(), axis),
            parts,
        )
    }

    /// Row `e` of the output is row `idx[e]` of `a`.
    pub fn gather_rows(&mut self, a: Var, idx: Arc<[usize]>) -> Result<Var> {
        let shape = self.shape(a);
        if shape.is_empty() {
            return Err(Error::shape("gather_rows", "scalar input".to_string()));
        }
        let (n, c) = rows_cols(shape);
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange {
                op: "gather_rows",
                index: bad,
                bound: n,
            });
        }
        let src = self.value(a);
        let mut value = Vec::with_capacity(idx.len() * c);
        for &i in idx.iter() {
            value.extend_from_slice(&src[i * c..(i + 1) * c]);
        }
        let mut out_shape = shape.to_vec();
        out_shape[0] = idx.len();
        self.push(
            "gather_rows",
            out_shape,
            value,
            Op::GatherRows(a, idx),
            &[a],
        )
    }

    /// Sums rows of `a` into `n` buckets; empty buckets stay zero.
    pub fn segment_sum(&mut self, a: Var, seg: Arc<[usize]>, n: usize) -> Result<Var> {
        let shape = self.shape(a);
        let (e, c) = rows_cols(shape);
        check_segments("segment_sum", shape, e, &seg, n)?;
        let src = self.value(a);
        let mut value = vec![T::zero(); n * c];
        for (r, &s) in seg.iter().enumerate() {
            for (o, &v) in value[s * c..(s + 1) * c]
                .iter_mut()
                .zip(&src[r * c..(r + 1) * c])
            {
                *o += v;
            }
        }
        let mut out_shape = shape.to_vec();
        out_shape[0] = n;
        self.push(
            "segment_sum",
            out_shape,
            value,
            Op::SegmentSum(a, seg),
            &[a],
        )
    }

    /// Softmax over the rows sharing a segment id, independently per column.
    pub fn segment_softmax(&mut self, a: Var, seg: Arc<[usize]>, n: usize) -> Result<Var> {
        let shape = self.shape(a);
        let (e, c) = rows_cols(shape);
        check_segments("segment_softmax", shape, e, &seg, n)?;
        let src = self.value(a);
        let mut max = vec![T::neg_infinity(); n * c];
        for (r, &s) in seg.iter().enumerate() {
            for k in 0..c {
                let m = &mut max[s * c + k];
                *m = m.max(src[r * c + k]);
            }
        }
        let mut value = vec![T::zero(); e * c];
        let mut denom = vec![T::zero(); n * c];
        for (r, &s) in seg.iter().enumerate() {
            for k in 0..c {
                let ex = (src[r * c + k] - max[s * c + k]).exp();
                value[r * c + k] = ex;
                denom[s * c + k] += ex;
            }
        }
        for (r, &s) in seg.iter().enumerate() {
            for k in 0..c {
                value[r * c + k] = value[r * c + k] / denom[s * c + k];
            }
        }
        let shape = shape.to_vec();
        self.push(
            "segment_softmax",
            shape,
            value,
            Op::SegmentSoftmax(a, seg, n),
            &[a],
        )
    }

    pub fn leaky_relu(&mut self, a: Var, slope: T) -> Result<Var> {
        self.map("leaky_relu", a, Op::LeakyRelu(a, slope), |x| {
            if x > T::zero() {
                x
            } else {
                x * slope
            }
        })
    }

    /// `ln(0.5 e^x + 0.5)`
    pub fn shifted_softplus(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let mut value = Vec::with_capacity(x.len());
        let mut slope = Vec::with_capacity(x.len());
        for &v in x {
            let (y, s) = shifted_softplus_with_slope(v);
            value.push(y);
            slope.push(s);
        }
        let shape = self.shape(a).to_vec();
        self.push(
            "shifted_softplus",
            shape,
            value,
            Op::ShiftedSoftplus(a, slope),
            &[a],
        )
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.map("sigmoid", a, Op::Sigmoid(a), sigmoid)
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let mut acc = T::zero();
        for &v in self.value(a) {
            acc += v;
        }
        self.push("sum", Vec::new(), vec![acc], Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).len();
        if n == 0 {
            return Err(Error::shape("mean", "empty tensor".to_string()));
        }
        let mut acc = T::zero();
        for &v in self.value(a) {
            acc += v;
        }
        let value = acc / T::from_usize(n).expect("length fits");
        self.push("mean", Vec::new(), vec![value], Op::Mean(a), &[a])
    }

    /// Per-head dot product: `a` is `N x (H*dh)`, `w` is `H x dh`, result `N x H`.
    pub fn head_dot(&mut self, a: Var, w: Var) -> Result<Var> {
        let (sa, sw) = (self.shape(a), self.shape(w));
        if sa.len() != 2 || sw.len() != 2 || sa[1] != sw[0] * sw[1] {
            return Err(Error::shape("head_dot", format!("{sa:?} . {sw:?}")));
        }
        let (n, h, dh) = (sa[0], sw[0], sw[1]);
        let (av, wv) = (self.value(a), self.value(w));
        let mut value = vec![T::zero(); n * h];
        for r in 0..n {
            for k in 0..h {
                let mut acc = T::zero();
                for j in 0..dh {
                    acc += av[r * h * dh + k * dh + j] * wv[k * dh + j];
                }
                value[r * h + k] = acc;
            }
        }
        self.push("head_dot", vec![n, h], value, Op::HeadDot(a, w), &[a, w])
    }

    /// Scales each head block of `a` (`E x (H*dh)`) by the matching column of `w` (`E x H`).
    pub fn head_scale(&mut self, a: Var, w: Var) -> Result<Var> {
        let (sa, sw) = (self.shape(a), self.shape(w));
        if sa.len() != 2 || sw.len() != 2 || sa[0] != sw[0] || sw[1] == 0 || sa[1] % sw[1] != 0 {
            return Err(Error::shape("head_scale", format!("{sa:?} * {sw:?}")));
        }
        let (e, d, h) = (sa[0], sa[1], sw[1]);
        let dh = d / h;
        let (av, wv) = (self.value(a), self.value(w));
        let mut value = Vec::with_capacity(e * d);
        for r in 0..e {
            for j in 0..d {
                value.push(av[r * d + j] * wv[r * h + j / dh]);
            }
        }
        let shape = sa.to_vec();
        self.push("head_scale", shape, value, Op::HeadScale(a, w), &[a, w])
    }

    /// Attention-weighted aggregation of `z` (`N x (H*dh)`) along edges.
    ///
    /// Head block `h` of output row `dst[e]` receives `alpha[e, h]` times the
    /// same block of `z[src[e]]`. Equivalent to `segment_sum(head_scale(
    /// gather_rows(z, src), alpha), dst, n)` without the edge-sized temporaries.
    pub fn attend(
        &mut self,
        z: Var,
        alpha: Var,
        src: Arc<[usize]>,
        dst: Arc<[usize]>,
        n: usize,
    ) -> Result<Var> {
        let (sz, sa) = (self.shape(z), self.shape(alpha));
        if sz.len() != 2 || sa.len() != 2 || sa[1] == 0 || sz[1] % sa[1] != 0 {
            return Err(Error::shape("attend", format!("{sz:?} by {sa:?}")));
        }
        let (rows, d, h) = (sz[0], sz[1], sa[1]);
        let e = sa[0];
        check_segments("attend", sa, e, &src, rows)?;
        check_segments("attend", sa, e, &dst, n)?;
        let dh = d / h;
        let (zv, av) = (self.value(z), self.value(alpha));
        let mut value = vec![T::zero(); n * d];
        for k in 0..e {
            let (zr, out) = (src[k] * d, dst[k] * d);
            for hh in 0..h {
                let w = av[k * h + hh];
                let b = hh * dh;
                for (o, &x) in value[out + b..out + b + dh]
                    .iter_mut()
                    .zip(&zv[zr + b..zr + b + dh])
                {
                    *o += w * x;
                }
            }
        }
        let idx = EdgeIndex {
            src,
            dst,
            row: Arc::from([]),
        };
        self.push(
            "attend",
            vec![n, d],
            value,
            Op::Attend(z, alpha, idx),
            &[z, alpha],
        )
    }

    /// Continuous-filter aggregation: output row `dst[e]` receives
    /// `m[src[e]] * filter[row[e]]` elementwise.
    pub fn edge_filter(
        &mut self,
        m: Var,
        filter: Var,
        src: Arc<[usize]>,
        dst: Arc<[usize]>,
        row: Arc<[usize]>,
        n: usize,
    ) -> Result<Var> {
        let (sm, sf) = (self.shape(m), self.shape(filter));
        if sm.len() != 2 || sf.len() != 2 || sm[1] != sf[1] {
            return Err(Error::shape("edge_filter", format!("{sm:?} by {sf:?}")));
        }
        let (rows, d, frows) = (sm[0], sm[1], sf[0]);
        let e = src.len();
        let edge_shape = [e, d];
        check_segments("edge_filter", &edge_shape, e, &src, rows)?;
        check_segments("edge_filter", &edge_shape, e, &dst, n)?;
        check_segments("edge_filter", &edge_shape, e, &row, frows)?;
        let (mv, fv) = (self.value(m), self.value(filter));
        let mut value = vec![T::zero(); n * d];
        for k in 0..e {
            let (ms, fs, out) = (src[k] * d, row[k] * d, dst[k] * d);
            for ((o, &x), &f) in value[out..out + d]
                .iter_mut()
                .zip(&mv[ms..ms + d])
                .zip(&fv[fs..fs + d])
            {
                *o += x * f;
            }
        }
        let idx = EdgeIndex { src, dst, row };
        self.push(
            "edge_filter",
            vec![n, d],
            value,
            Op::EdgeFilter(m, filter, idx),
            &[m, filter],
        )
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let numel: usize = shape.iter().product();
        if numel != self.value(a).len() {
            return Err(Error::shape(
                "reshape",
                format!("{:?} -> {shape:?}", self.shape(a)),
            ));
        }
        let value = self.value(a).to_vec();
        self.push("reshape", shape, value, Op::Reshape(a), &[a])
    }

    /// Reverse pass from a scalar; gradients accumulate into every trainable leaf.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let node = &self.nodes[loss.0];
        if node.value.len() != 1 || node.shape.iter().any(|&d| d != 1) {
            return Err(Error::NotScalar(node.shape.clone()));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            if let Op::Leaf = node.op {
                match &mut self.leaf_grads[i] {
                    Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, &b)| *a += b),
                    slot @ None => *slot = Some(g),
                }
                continue;
            }
            self.backward_node(i, &g, &mut grads);
        }
        Ok(())
    }

    fn backward_node(&self, i: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let node = &self.nodes[i];
        let nodes = &self.nodes;
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [T])| {
            if !nodes[v.0].needs_grad {
                return;
            }
            let buf = grads[v.0].get_or_insert_with(|| vec![T::zero(); nodes[v.0].value.len()]);
            f(buf);
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = (nodes[a.0].shape[0], nodes[a.0].shape[1]);
                let n = nodes[b.0].shape[1];
                let bv = &nodes[b.0].value;
                let av = &nodes[a.0].value;
                acc(*a, &mut |ga| matmul_bt_acc(g, bv, m, n, k, ga));
                acc(*b, &mut |gb| matmul_at_acc(av, g, m, k, n, gb));
            }
            Op::Add(a, b) => {
                acc(*a, &mut |ga| add_into(ga, g));
                acc(*b, &mut |gb| add_into(gb, g));
            }
            Op::Sub(a, b) => {
                acc(*a, &mut |ga| add_into(ga, g));
                acc(*b, &mut |gb| {
                    gb.iter_mut().zip(g).for_each(|(o, &x)| *o -= x)
                });
            }
            Op::Mul(a, b) => {
                let (av, bv) = (&nodes[a.0].value, &nodes[b.0].value);
                acc(*a, &mut |ga| {
                    for ((o, &x), &y) in ga.iter_mut().zip(g).zip(bv) {
                        *o += x * y;
                    }
                });
                acc(*b, &mut |gb| {
                    for ((o, &x), &y) in gb.iter_mut().zip(g).zip(av) {
                        *o += x * y;
                    }
                });
            }
            Op::AddBias(a, b) => {
                acc(*a, &mut |ga| add_into(ga, g));
                let c = nodes[b.0].value.len().max(1);
                acc(*b, &mut |gb| {
                    for row in g.chunks(c) {
                        add_into(gb, row);
                    }
                });
            }
            Op::Scale(a, s) => acc(*a, &mut |ga| {
                ga.iter_mut().zip(g).for_each(|(o, &x)| *o += x * *s)
            }),
            Op::Concat(parts, axis) => {
                if *axis == 0 {
                    let mut off = 0;
                    for p in parts {
                        let len = nodes[p.0].value.len();
                        acc(*p, &mut |gp| add_into(gp, &g[off..off + len]));
                        off += len;
                    }
                } else {
                    let total = node.shape[1];
                    let rows = node.shape[0];
                    let mut off = 0;
                    for p in parts {
                        let c = nodes[p.0].shape[1];
                        acc(*p, &mut |gp| {
                            for r in 0..rows {
                                add_into(
                                    &mut gp[r * c..(r + 1) * c],
                                    &g[r * total + off..r * total + off + c],
                                );
                            }
                        });
                        off += c;
                    }
                }
            }
            Op::GatherRows(a, idx) => {
                let (_, c) = rows_cols(&nodes[a.0].shape);
                acc(*a, &mut |ga| {
                    for (r, &s) in idx.iter().enumerate() {
                        add_into(&mut ga[s * c..(s + 1) * c], &g[r * c..(r + 1) * c]);
                    }
                });
            }
            Op::SegmentSum(a, seg) => {
                let (_, c) = rows_cols(&nodes[a.0].shape);
                acc(*a, &mut |ga| {
                    for (r, &s) in seg.iter().enumerate() {
                        add_into(&mut ga[r * c..(r + 1) * c], &g[s * c..(s + 1) * c]);
                    }
                });
            }
            Op::SegmentSoftmax(a, seg, n) => {
                let (_, c) = rows_cols(&node.shape);
                let y = &node.value;
                let mut dot = vec![T::zero(); n * c];
                for (r, &s) in seg.iter().enumerate() {
                    for k in 0..c {
                        dot[s * c + k] += g[r * c + k] * y[r * c + k];
                    }
                }
                acc(*a, &mut |ga| {
                    for (r, &s) in seg.iter().enumerate() {
                        for k in 0..c {
                            let j = r * c + k;
                            ga[j] += y[j] * (g[j] - dot[s * c + k]);
                        }
                    }
                });
            }
            Op::LeakyRelu(a, slope) => {
                let x = &nodes[a.0].value;
                acc(*a, &mut |ga| {
                    for ((o, &gv), &xv) in ga.iter_mut().zip(g).zip(x) {
                        *o += if xv > T::zero() { gv } else { gv * *slope };
                    }
                });
            }
            Op::ShiftedSoftplus(a, slope) => {
                acc(*a, &mut |ga| {
                    for ((o, &gv), &s) in ga.iter_mut().zip(g).zip(slope) {
                        *o += gv * s;
                    }
                });
            }
            Op::Sigmoid(a) => {
                let y = &node.value;
                acc(*a, &mut |ga| {
                    for ((o, &gv), &yv) in ga.iter_mut().zip(g).zip(y) {
                        *o += gv * yv * (T::one() - yv);
                    }
                });
            }
            Op::Sum(a) => acc(*a, &mut |ga| ga.iter_mut().for_each(|o| *o += g[0])),
            Op::Mean(a) => {
                let n = T::from_usize(nodes[a.0].value.len()).expect("length fits");
                acc(*a, &mut |ga| ga.iter_mut().for_each(|o| *o += g[0] / n));
            }
            Op::HeadDot(a, w) => {
                let (n, h, dh) = (
                    nodes[a.0].shape[0],
                    nodes[w.0].shape[0],
                    nodes[w.0].shape[1],
                );
                let (av, wv) = (&nodes[a.0].value, &nodes[w.0].value);
                acc(*a, &mut |ga| {
                    for r in 0..n {
                        for k in 0..h {
                            let gv = g[r * h + k];
                            for j in 0..dh {
                                ga[r * h * dh + k * dh + j] += gv * wv[k * dh + j];
                            }
                        }
                    }
                });
                acc(*w, &mut |gw| {
                    for r in 0..n {
                        for k in 0..h {
                            let gv = g[r * h + k];
                            for j in 0..dh {
                                gw[k * dh + j] += gv * av[r * h * dh + k * dh + j];
                            }
                        }
                    }
                });
            }
            Op::Attend(z, alpha, idx) => {
                let d = nodes[z.0].shape[1];
                let h = nodes[alpha.0].shape[1];
                let dh = d / h;
                let (zv, av) = (&nodes[z.0].value, &nodes[alpha.0].value);
                acc(*z, &mut |gz| {
                    for (k, (&s, &t)) in idx.src.iter().zip(idx.dst.iter()).enumerate() {
                        for hh in 0..h {
                            let w = av[k * h + hh];
                            let (a, b) = (s * d + hh * dh, t * d + hh * dh);
                            for (o, &x) in gz[a..a + dh].iter_mut().zip(&g[b..b + dh]) {
                                *o += w * x;
                            }
                        }
                    }
                });
                acc(*alpha, &mut |ga| {
                    for (k, (&s, &t)) in idx.src.iter().zip(idx.dst.iter()).enumerate() {
                        for hh in 0..h {
                            let (a, b) = (s * d + hh * dh, t * d + hh * dh);
                            let mut dot = T::zero();
                            for (&x, &y) in zv[a..a + dh].iter().zip(&g[b..b + dh]) {
                                dot += x * y;
                            }
                            ga[k * h + hh] += dot;
                        }
                    }
                });
            }
            Op::EdgeFilter(m, f, idx) => {
                let d = nodes[m.0].shape[1];
                let (mv, fv) = (&nodes[m.0].value, &nodes[f.0].value);
                let edges = || {
                    idx.src
                        .iter()
                        .zip(idx.dst.iter())
                        .zip(idx.row.iter())
                        .map(move |((&s, &t), &r)| (s * d, t * d, r * d))
                };
                acc(*m, &mut |gm| {
                    for (s, t, r) in edges() {
                        for ((o, &x), &y) in
                            gm[s..s + d].iter_mut().zip(&g[t..t + d]).zip(&fv[r..r + d])
                        {
                            *o += x * y;
                        }
                    }
                });
                acc(*f, &mut |gf| {
                    for (s, t, r) in edges() {
                        for ((o, &x), &y) in
                            gf[r..r + d].iter_mut().zip(&g[t..t + d]).zip(&mv[s..s + d])
                        {
                            *o += x * y;
                        }
                    }
                });
            }
            Op::HeadScale(a, w) => {
                let (e, d) = (nodes[a.0].shape[0], nodes[a.0].shape[1]);
                let h = nodes[w.0].shape[1];
                let dh = d / h;
                let (av, wv) = (&nodes[a.0].value, &nodes[w.0].value);
                acc(*a, &mut |ga| {
                    for r in 0..e {
                        for j in 0..d {
                            ga[r * d + j] += g[r * d + j] * wv[r * h + j / dh];
                        }
                    }
                });
                acc(*w, &mut |gw| {
                    for r in 0..e {
                        for j in 0..d {
                            gw[r * h + j / dh] += g[r * d + j] * av[r * d + j];
                        }
                    }
                });
            }
            Op::Reshape(a) => acc(*a, &mut |ga| add_into(ga, g)),
        }
    }
}

fn add_into<T: Real>(dst: &mut [T], src: &[T]) {
    for (o, &v) in dst.iter_mut().zip(src) {
        *o += v;
    }
}

fn check_segments(
    op: &'static str,
    shape: &[usize],
    rows: usize,
    seg: &[usize],
    n: usize,
) -> Result<()> {
    if shape.is_empty() || seg.len() != rows {
        return Err(Error::shape(
            op,
            format!("{} ids for shape {shape:?}", seg.len()),
        ));
    }
    if let Some(&bad) = seg.iter().find(|&&s| s >= n) {
        return Err(Error::IndexOutOfRange {
            op,
            index: bad,
            bound: n,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(t: &mut Tape<f64>, shape: Vec<usize>, data: Vec<f64>) -> Var {
        t.leaf(&Tensor::new(shape, data).unwrap().with_grad())
    }

    #[test]
    fn matmul_identity() {
        let mut t = Tape::<f64>::new();
        let i = t.constant(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let a = t
            .constant(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
            .unwrap();
        let y = t.matmul(i, a).unwrap();
        assert_eq!(t.value(y), t.value(a));
        assert!(t.matmul(a, i).is_err());
    }

    #[test]
    fn elementwise_analytic_values() {
        let mut t = Tape::<f64>::new();
        let x = t.constant(vec![2], vec![-2.0, 0.0]).unwrap();
        let l = t.leaky_relu(x, 0.2).unwrap();
        assert!((t.value(l)[0] + 0.4).abs() < 1e-15);
        let s = t.shifted_softplus(x).unwrap();
        assert_eq!(t.value(s)[1], 0.0);
    }

    #[test]
    fn segment_ops_small_cases() {
        let mut t = Tape::<f64>::new();
        let v = t.constant(vec![3, 1], vec![1.0, 2.0, 3.0]).unwrap();
        let s = t.segment_sum(v, Arc::from(vec![0, 0, 1]), 3).unwrap();
        assert_eq!(t.value(s), &[3.0, 3.0, 0.0]);
        let sc = t.constant(vec![3, 1], vec![0.7, 0.7, 5.0]).unwrap();
        let sm = t.segment_softmax(sc, Arc::from(vec![1, 1, 0]), 2).unwrap();
        assert_eq!(t.value(sm), &[0.5, 0.5, 1.0]);
        assert!(matches!(
            t.segment_sum(v, Arc::from(vec![0, 0, 4]), 3),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn backward_simple_cases() {
        let mut t = Tape::<f64>::new();
        let x = leaf(&mut t, vec![3], vec![0.5, -1.0, 2.0]);
        let s = t.sum(x).unwrap();
        t.backward(s).unwrap();
        assert_eq!(t.grad(x).unwrap(), &[1.0, 1.0, 1.0]);

        let mut t = Tape::<f64>::new();
        let x = leaf(&mut t, vec![2], vec![1.0, 2.0]);
        let sq = t.mul(x, x).unwrap();
        let s = t.sum(sq).unwrap();
        t.backward(s).unwrap();
        assert_eq!(t.grad(x).unwrap(), &[2.0, 4.0]);
        t.backward(s).unwrap();
        assert_eq!(t.grad(x).unwrap(), &[4.0, 8.0]);
        t.zero_grads();
        assert!(t.grad(x).is_none());
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut t = Tape::<f64>::new();
        let x = leaf(&mut t, vec![2], vec![1.0, 2.0]);
        assert!(matches!(t.backward(x), Err(Error::NotScalar(_))));
    }

    #[test]
    fn non_finite_is_an_error() {
        let mut t = Tape::<f64>::new();
        let x = t.constant(vec![1], vec![f64::MAX]).unwrap();
        assert!(matches!(t.scale(x, 10.0), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut t = Tape::<f64>::new();
        let c = t.constant(vec![2], vec![1.0, 2.0]).unwrap();
        let x = leaf(&mut t, vec![2], vec![3.0, 4.0]);
        let p = t.mul(c, x).unwrap();
        let s = t.sum(p).unwrap();
        t.backward(s).unwrap();
        assert!(t.grad(c).is_none());
        assert_eq!(t.grad(x).unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn concat_columns_layout() {
        let mut t = Tape::<f64>::new();
        let a = t.constant(vec![2, 1], vec![1.0, 2.0]).unwrap();
        let b = t.constant(vec![2, 2], vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = t.concat(&[a, b], 1).unwrap();
        assert_eq!(t.shape(c), &[2, 3]);
        assert_eq!(t.value(c), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let r = t.concat(&[a, a], 0).unwrap();
        assert_eq!(t.shape(r), &[4, 1]);
    }

    fn fused_pair(fused: bool) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut t = Tape::<f64>::new();
        let z = Tensor::new(
            vec![3, 4],
            (0..12).map(|i| (i as f64 * 0.37).sin()).collect(),
        )
        .unwrap()
        .with_grad();
        let w = Tensor::new(
            vec![5, 2],
            (0..10).map(|i| (i as f64 * 0.71).cos()).collect(),
        )
        .unwrap()
        .with_grad();
        let src: Arc<[usize]> = vec![0, 1, 2, 2, 1].into();
        let dst: Arc<[usize]> = vec![1, 1, 0, 3, 3].into();
        let (zv, wv) = (t.leaf(&z), t.leaf(&w));
        let out = if fused {
            t.attend(zv, wv, src, dst, 4).unwrap()
        } else {
            let g = t.gather_rows(zv, src).unwrap();
            let m = t.head_scale(g, wv).unwrap();
            t.segment_sum(m, dst, 4).unwrap()
        };
        let sq = t.mul(out, out).unwrap();
        let l = t.sum(sq).unwrap();
        t.backward(l).unwrap();
        (
            t.value(out).to_vec(),
            t.grad(zv).unwrap().to_vec(),
            t.grad(wv).unwrap().to_vec(),
        )
    }

    #[test]
    fn attend_matches_unfused_ops() {
        let (a, b) = (fused_pair(true), fused_pair(false));
        for (x, y) in [(&a.0, &b.0), (&a.1, &b.1), (&a.2, &b.2)] {
            assert_eq!(x.len(), y.len());
            assert!(x.iter().zip(y).all(|(p, q)| (p - q).abs() < 1e-12));
        }
    }

    #[test]
    fn edge_filter_matches_unfused_ops() {
        let run = |fused: bool| {
            let mut t = Tape::<f64>::new();
            let m = Tensor::new(vec![3, 2], vec![1.0, -2.0, 0.5, 3.0, -1.0, 2.0])
                .unwrap()
                .with_grad();
            let f = Tensor::new(vec![2, 2], vec![0.3, 0.7, -1.1, 0.2])
                .unwrap()
                .with_grad();
            let src: Arc<[usize]> = vec![0, 1, 1, 2].into();
            let dst: Arc<[usize]> = vec![1, 0, 2, 1].into();
            let row: Arc<[usize]> = vec![0, 0, 1, 1].into();
            let (mv, fv) = (t.leaf(&m), t.leaf(&f));
            let out = if fused {
                t.edge_filter(mv, fv, src, dst, row, 3).unwrap()
            } else {
                let ms = t.gather_rows(mv, src).unwrap();
                let fs = t.gather_rows(fv, row).unwrap();
                let p = t.mul(ms, fs).unwrap();
                t.segment_sum(p, dst, 3).unwrap()
            };
            let sq = t.mul(out, out).unwrap();
            let l = t.sum(sq).unwrap();
            t.backward(l).unwrap();
            let mut all = t.value(out).to_vec();
            all.extend_from_slice(t.grad(mv).unwrap());
            all.extend_from_slice(t.grad(fv).unwrap());
            all
        };
        let (a, b) = (run(true), run(false));
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn edge_filter_rejects_bad_row() {
        let mut t = Tape::<f64>::new();
        let m = t.constant(vec![2, 1], vec![1.0, 2.0]).unwrap();
        let f = t.constant(vec![1, 1], vec![1.0]).unwrap();
        let r = t.edge_filter(m, f, vec![0].into(), vec![1].into(), vec![1].into(), 2);
        assert!(matches!(r, Err(Error::IndexOutOfRange { .. })));
    }
}
