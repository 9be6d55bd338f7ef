//! Reverse-mode automatic differentiation over a tape of matrix ops.

use super::tensor::{matmul_acc, matmul_nt_acc, matmul_tn_acc, sigmoid, softmax, Tensor};
use super::{NnError, ParamSet};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    /// `[n×k] + [1×k]` broadcast over rows.
    AddRow(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Lookup(Var, Vec<usize>),
    SelectRows(Var, Vec<usize>),
    StackRows(Vec<Var>),
    /// `mask[i] * new + (1 - mask[i]) * old` per row.
    Blend(Var, Var, Vec<f64>),
    SegmentMax(Var, Vec<usize>),
    SegmentMean(Var, Vec<Vec<usize>>),
    SoftmaxXent(Var, Vec<usize>, Tensor),
    SumAll(Var),
    Gru(Box<GruCache>),
}

#[derive(Clone, Debug)]
struct GruCache {
    x: Var,
    h: Var,
    wx: Var,
    uzr: Var,
    uh: Var,
    b: Var,
    mask: Option<Vec<f64>>,
    z: Tensor,
    r: Tensor,
    hc: Tensor,
    rh: Tensor,
}

/// The four tensors of one GRU layer, as graph nodes.
#[derive(Clone, Copy, Debug)]
pub struct GruVars {
    /// Input weights `[d × 3k]`: update, reset, candidate blocks.
    pub wx: Var,
    /// Recurrent weights of the two gates `[k × 2k]`.
    pub uzr: Var,
    /// Recurrent weights of the candidate `[k × k]`.
    pub uh: Var,
    /// Biases `[1 × 3k]`.
    pub b: Var,
}

struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    param_nodes: Vec<Option<Var>>,
}

/// Gradients of a backward pass, indexed like the [`ParamSet`].
#[derive(Clone, Debug)]
pub struct Gradients {
    pub grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn zeros_like(params: &ParamSet) -> Self {
        Gradients {
            grads: vec![None; params.len()],
        }
    }

    pub fn accumulate(&mut self, other: Gradients) {
        for (a, b) in self.grads.iter_mut().zip(other.grads) {
            match (a.as_mut(), b) {
                (Some(x), Some(y)) => x.add_assign(&y),
                (None, Some(y)) => *a = Some(y),
                _ => {}
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for g in self.grads.iter_mut().flatten() {
            g.data.iter_mut().for_each(|x| *x *= c);
        }
    }

    pub fn norm(&self) -> f64 {
        self.grads.iter().flatten().map(Tensor::norm_sq).sum::<f64>().sqrt()
    }
}

fn shape_err(what: &str, a: (usize, usize), b: (usize, usize)) -> NnError {
    NnError::ShapeMismatch(format!("{what}: {a:?} vs {b:?}"))
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// A constant: no gradient flows into it.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input)
    }

    /// Copy of `v`'s value as a constant, cutting gradient flow.
    pub fn detach(&mut self, v: Var) -> Var {
        let t = self.value(v).clone();
        self.input(t)
    }

    /// Node for parameter `idx`; one node per parameter per graph.
    pub fn param(&mut self, params: &ParamSet, idx: usize) -> Var {
        if self.param_nodes.len() < params.len() {
            self.param_nodes.resize(params.len(), None);
        }
        if let Some(v) = self.param_nodes[idx] {
            return v;
        }
        let v = self.push(params.tensors[idx].clone(), Op::Param(idx));
        self.param_nodes[idx] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols != y.rows {
            return Err(shape_err("matmul", x.shape(), y.shape()));
        }
        let out = x.matmul(y);
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    fn same_shape(&self, what: &str, a: Var, b: Var) -> Result<(), NnError> {
        let (x, y) = (self.value(a).shape(), self.value(b).shape());
        if x != y {
            return Err(shape_err(what, x, y));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        self.same_shape("add", a, b)?;
        let out = self.value(a).zip(self.value(b), |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        self.same_shape("sub", a, b)?;
        let out = self.value(a).zip(self.value(b), |x, y| x - y);
        Ok(self.push(out, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        self.same_shape("mul", a, b)?;
        let out = self.value(a).zip(self.value(b), |x, y| x * y);
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, NnError> {
        let (x, r) = (self.value(a), self.value(row));
        if r.rows != 1 || r.cols != x.cols {
            return Err(shape_err("add_row", x.shape(), r.shape()));
        }
        let mut out = x.clone();
        for i in 0..out.rows {
            for (o, b) in out.row_mut(i).iter_mut().zip(&r.data) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddRow(a, row)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|x| x * c);
        self.push(out, Op::Scale(a, c))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    /// Rows `ids` of an embedding table.
    pub fn lookup(&mut self, table: Var, ids: &[usize]) -> Result<Var, NnError> {
        let t = self.value(table);
        let mut out = Tensor::zeros(ids.len(), t.cols);
        for (i, &id) in ids.iter().enumerate() {
            if id >= t.rows {
                return Err(NnError::ShapeMismatch(format!("lookup row {id} of {}", t.rows)));
            }
            out.row_mut(i).copy_from_slice(t.row(id));
        }
        Ok(self.push(out, Op::Lookup(table, ids.to_vec())))
    }

    pub fn select_rows(&mut self, a: Var, rows: &[usize]) -> Result<Var, NnError> {
        let t = self.value(a);
        let mut out = Tensor::zeros(rows.len(), t.cols);
        for (i, &r) in rows.iter().enumerate() {
            if r >= t.rows {
                return Err(NnError::ShapeMismatch(format!("row {r} of {}", t.rows)));
            }
            out.row_mut(i).copy_from_slice(t.row(r));
        }
        Ok(self.push(out, Op::SelectRows(a, rows.to_vec())))
    }

    pub fn stack_rows(&mut self, parts: &[Var]) -> Result<Var, NnError> {
        let cols = self.value(parts[0]).cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            if t.cols != cols {
                return Err(shape_err("stack_rows", (rows, cols), t.shape()));
            }
            data.extend_from_slice(&t.data);
            rows += t.rows;
        }
        Ok(self.push(Tensor::from_vec(rows, cols, data), Op::StackRows(parts.to_vec())))
    }

    pub fn blend(&mut self, new: Var, old: Var, mask: &[f64]) -> Result<Var, NnError> {
        self.same_shape("blend", new, old)?;
        let (n, o) = (self.value(new), self.value(old));
        if mask.len() != n.rows {
            return Err(shape_err("blend mask", n.shape(), (mask.len(), 1)));
        }
        let mut out = o.clone();
        for (i, &m) in mask.iter().enumerate() {
            for (x, &y) in out.row_mut(i).iter_mut().zip(n.row(i)) {
                *x = m * y + (1.0 - m) * *x;
            }
        }
        Ok(self.push(out, Op::Blend(new, old, mask.to_vec())))
    }

    /// Element-wise max over each segment's rows; ties go to the row listed
    /// first. Output has one row per segment.
    pub fn segment_max(&mut self, a: Var, segments: &[Vec<usize>]) -> Result<Var, NnError> {
        let t = self.value(a);
        let mut out = Tensor::zeros(segments.len(), t.cols);
        let mut arg = Vec::with_capacity(segments.len() * t.cols);
        for (s, rows) in segments.iter().enumerate() {
            if rows.is_empty() {
                return Err(NnError::AllMasked);
            }
            for j in 0..t.cols {
                let mut best = rows[0];
                for &r in &rows[1..] {
                    if t.get(r, j) > t.get(best, j) {
                        best = r;
                    }
                }
                out.data[s * t.cols + j] = t.get(best, j);
                arg.push(best);
            }
        }
        Ok(self.push(out, Op::SegmentMax(a, arg)))
    }

    pub fn segment_mean(&mut self, a: Var, segments: &[Vec<usize>]) -> Result<Var, NnError> {
        let t = self.value(a);
        let mut out = Tensor::zeros(segments.len(), t.cols);
        for (s, rows) in segments.iter().enumerate() {
            if rows.is_empty() {
                return Err(NnError::AllMasked);
            }
            // Summing each column in sorted order makes the mean exactly
            // independent of row order.
            let mut col = Vec::with_capacity(rows.len());
            for j in 0..t.cols {
                col.clear();
                col.extend(rows.iter().map(|&r| t.get(r, j)));
                col.sort_by(f64::total_cmp);
                out.data[s * t.cols + j] = col.iter().sum::<f64>() / rows.len() as f64;
            }
        }
        Ok(self.push(out, Op::SegmentMean(a, segments.to_vec())))
    }

    /// Max over the rows whose mask is set.
    pub fn max_pool(&mut self, a: Var, mask: &[bool]) -> Result<Var, NnError> {
        let rows: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        self.segment_max(a, &[rows])
    }

    pub fn avg_pool(&mut self, a: Var, mask: &[bool]) -> Result<Var, NnError> {
        let rows: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        self.segment_mean(a, &[rows])
    }

    /// Mean cross-entropy of row-wise softmax against `labels`; also returns
    /// the probabilities.
    pub fn softmax_xent(&mut self, logits: Var, labels: &[usize]) -> Result<(Var, Tensor), NnError> {
        let t = self.value(logits);
        if labels.len() != t.rows {
            return Err(shape_err("labels", t.shape(), (labels.len(), 1)));
        }
        let mut probs = Tensor::zeros(t.rows, t.cols);
        let mut loss = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            if y >= t.cols {
                return Err(NnError::LabelOutOfRange { label: y, classes: t.cols });
            }
            let row = t.row(i);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            loss += lse - row[y];
            probs.row_mut(i).copy_from_slice(&softmax(row));
        }
        loss /= labels.len() as f64;
        let v = self.push(Tensor::filled(1, 1, loss), Op::SoftmaxXent(logits, labels.to_vec(), probs.clone()));
        Ok((v, probs))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        self.push(Tensor::filled(1, 1, s), Op::SumAll(a))
    }

    /// One GRU step on a batch of rows. Rows whose mask is 0 keep `h`.
    pub fn gru(&mut self, x: Var, h: Var, p: GruVars, mask: Option<&[f64]>) -> Result<Var, NnError> {
        let (xv, hv) = (self.value(x), self.value(h));
        let (wx, uzr, uh, b) = (self.value(p.wx), self.value(p.uzr), self.value(p.uh), self.value(p.b));
        let k = hv.cols;
        let n = hv.rows;
        if xv.rows != n
            || wx.rows != xv.cols
            || wx.cols != 3 * k
            || uzr.shape() != (k, 2 * k)
            || uh.shape() != (k, k)
            || b.shape() != (1, 3 * k)
        {
            return Err(NnError::ShapeMismatch(format!(
                "gru: x {:?}, h {:?}, wx {:?}, uzr {:?}, uh {:?}, b {:?}",
                xv.shape(),
                hv.shape(),
                wx.shape(),
                uzr.shape(),
                uh.shape(),
                b.shape()
            )));
        }
        if let Some(m) = mask {
            if m.len() != n {
                return Err(shape_err("gru mask", hv.shape(), (m.len(), 1)));
            }
        }
        let mut gx = Tensor::zeros(n, 3 * k);
        for i in 0..n {
            gx.row_mut(i).copy_from_slice(&b.data);
        }
        matmul_acc(xv, wx, &mut gx);
        let mut gh = Tensor::zeros(n, 2 * k);
        matmul_acc(hv, uzr, &mut gh);
        let mut z = Tensor::zeros(n, k);
        let mut r = Tensor::zeros(n, k);
        let mut rh = Tensor::zeros(n, k);
        for i in 0..n {
            for j in 0..k {
                let zi = sigmoid(gx.data[i * 3 * k + j] + gh.data[i * 2 * k + j]);
                let ri = sigmoid(gx.data[i * 3 * k + k + j] + gh.data[i * 2 * k + k + j]);
                z.data[i * k + j] = zi;
                r.data[i * k + j] = ri;
                rh.data[i * k + j] = ri * hv.data[i * k + j];
            }
        }
        let mut a = Tensor::zeros(n, k);
        for i in 0..n {
            a.row_mut(i).copy_from_slice(&gx.data[i * 3 * k + 2 * k..(i + 1) * 3 * k]);
        }
        matmul_acc(&rh, uh, &mut a);
        let hc = a.map(f64::tanh);
        let mut out = hv.clone();
        for i in 0..n {
            let m = mask.map_or(1.0, |m| m[i]);
            if m == 0.0 {
                continue;
            }
            for j in 0..k {
                let idx = i * k + j;
                let new = hv.data[idx] + z.data[idx] * (hc.data[idx] - hv.data[idx]);
                out.data[idx] = m * new + (1.0 - m) * hv.data[idx];
            }
        }
        let cache = GruCache {
            x,
            h,
            wx: p.wx,
            uzr: p.uzr,
            uh: p.uh,
            b: p.b,
            mask: mask.map(<[f64]>::to_vec),
            z,
            r,
            hc,
            rh,
        };
        Ok(self.push(out, Op::Gru(Box::new(cache))))
    }

    /// Back-propagate from the scalar `loss`.
    pub fn backward(&self, loss: Var, params: &ParamSet) -> Gradients {
        assert_eq!(self.value(loss).shape(), (1, 1), "loss must be a scalar");
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::filled(1, 1, 1.0));
        let mut out = Gradients::zeros_like(params);

        fn acc(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
            match &mut grads[v.0] {
                Some(x) => x.add_assign(&g),
                slot => *slot = Some(g),
            }
        }
        fn acc_with(grads: &mut [Option<Tensor>], v: Var, shape: (usize, usize), f: impl FnOnce(&mut Tensor)) {
            let slot = grads[v.0].get_or_insert_with(|| Tensor::zeros(shape.0, shape.1));
            f(slot);
        }

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param(p) => {
                    match &mut out.grads[*p] {
                        Some(x) => x.add_assign(&g),
                        slot => *slot = Some(g),
                    }
                    continue;
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    acc_with(&mut grads, *a, av.shape(), |t| matmul_nt_acc(&g, bv, t));
                    acc_with(&mut grads, *b, bv.shape(), |t| matmul_tn_acc(av, &g, t));
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *b, g.map(|x| -x));
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let ga = g.zip(self.value(*b), |x, y| x * y);
                    let gb = g.zip(self.value(*a), |x, y| x * y);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::AddRow(a, row) => {
                    let mut gr = Tensor::zeros(1, g.cols);
                    for i in 0..g.rows {
                        for (o, x) in gr.data.iter_mut().zip(g.row(i)) {
                            *o += x;
                        }
                    }
                    acc(&mut grads, *row, gr);
                    acc(&mut grads, *a, g);
                }
                Op::Scale(a, c) => acc(&mut grads, *a, g.map(|x| x * c)),
                Op::Sigmoid(a) => {
                    let ga = g.zip(&node.value, |x, y| x * y * (1.0 - y));
                    acc(&mut grads, *a, ga);
                }
                Op::Tanh(a) => {
                    let ga = g.zip(&node.value, |x, y| x * (1.0 - y * y));
                    acc(&mut grads, *a, ga);
                }
                Op::Lookup(table, ids) => {
                    let shape = self.value(*table).shape();
                    acc_with(&mut grads, *table, shape, |t| {
                        for (i, &id) in ids.iter().enumerate() {
                            for (o, x) in t.row_mut(id).iter_mut().zip(g.row(i)) {
                                *o += x;
                            }
                        }
                    });
                }
                Op::SelectRows(a, rows) => {
                    let shape = self.value(*a).shape();
                    acc_with(&mut grads, *a, shape, |t| {
                        for (i, &r) in rows.iter().enumerate() {
                            for (o, x) in t.row_mut(r).iter_mut().zip(g.row(i)) {
                                *o += x;
                            }
                        }
                    });
                }
                Op::StackRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let (r, c) = self.value(p).shape();
                        let part = Tensor::from_vec(r, c, g.data[offset * c..(offset + r) * c].to_vec());
                        offset += r;
                        acc(&mut grads, p, part);
                    }
                }
                Op::Blend(new, old, mask) => {
                    let mut gn = g.clone();
                    let mut go = g;
                    for (i, &m) in mask.iter().enumerate() {
                        gn.row_mut(i).iter_mut().for_each(|x| *x *= m);
                        go.row_mut(i).iter_mut().for_each(|x| *x *= 1.0 - m);
                    }
                    acc(&mut grads, *new, gn);
                    acc(&mut grads, *old, go);
                }
                Op::SegmentMax(a, arg) => {
                    let shape = self.value(*a).shape();
                    let cols = shape.1;
                    acc_with(&mut grads, *a, shape, |t| {
                        for (k, &r) in arg.iter().enumerate() {
                            t.data[r * cols + k % cols] += g.data[k];
                        }
                    });
                }
                Op::SegmentMean(a, segments) => {
                    let shape = self.value(*a).shape();
                    acc_with(&mut grads, *a, shape, |t| {
                        for (s, rows) in segments.iter().enumerate() {
                            let w = 1.0 / rows.len() as f64;
                            for &r in rows {
                                for (o, x) in t.row_mut(r).iter_mut().zip(g.row(s)) {
                                    *o += w * x;
                                }
                            }
                        }
                    });
                }
                Op::SoftmaxXent(logits, labels, probs) => {
                    let scale = g.data[0] / labels.len() as f64;
                    let mut gl = probs.clone();
                    for (i, &y) in labels.iter().enumerate() {
                        gl.data[i * gl.cols + y] -= 1.0;
                    }
                    gl.data.iter_mut().for_each(|x| *x *= scale);
                    acc(&mut grads, *logits, gl);
                }
                Op::SumAll(a) => {
                    let (r, c) = self.value(*a).shape();
                    acc(&mut grads, *a, Tensor::filled(r, c, g.data[0]));
                }
                Op::Gru(c) => self.gru_backward(c, &g, &mut grads),
            }
        }
        out
    }

    fn gru_backward(&self, c: &GruCache, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let hv = self.value(c.h);
        let (n, k) = hv.shape();
        let mut dgx = Tensor::zeros(n, 3 * k);
        let mut dgh = Tensor::zeros(n, 2 * k);
        let mut da = Tensor::zeros(n, k);
        let mut dh = Tensor::zeros(n, k);
        for i in 0..n {
            let m = c.mask.as_ref().map_or(1.0, |m| m[i]);
            for j in 0..k {
                let idx = i * k + j;
                let gi = g.data[idx];
                let (z, hc, h) = (c.z.data[idx], c.hc.data[idx], hv.data[idx]);
                dh.data[idx] = gi * (1.0 - m) + m * gi * (1.0 - z);
                let gm = gi * m;
                let dz = gm * (hc - h) * z * (1.0 - z);
                let d_a = gm * z * (1.0 - hc * hc);
                da.data[idx] = d_a;
                dgx.data[i * 3 * k + j] = dz;
                dgx.data[i * 3 * k + 2 * k + j] = d_a;
                dgh.data[i * 2 * k + j] = dz;
            }
        }
        // Through the candidate's recurrent product r ⊙ h.
        let mut drh = Tensor::zeros(n, k);
        matmul_nt_acc(&da, self.value(c.uh), &mut drh);
        for i in 0..n {
            for j in 0..k {
                let idx = i * k + j;
                let r = c.r.data[idx];
                let dr = drh.data[idx] * hv.data[idx] * r * (1.0 - r);
                dh.data[idx] += drh.data[idx] * r;
                dgx.data[i * 3 * k + k + j] = dr;
                dgh.data[i * 2 * k + k + j] = dr;
            }
        }
        let uh_shape = self.value(c.uh).shape();
        acc_tn(grads, c.uh, uh_shape, &c.rh, &da);
        matmul_nt_acc(&dgh, self.value(c.uzr), &mut dh);
        let uzr_shape = self.value(c.uzr).shape();
        acc_tn(grads, c.uzr, uzr_shape, hv, &dgh);
        let xv = self.value(c.x);
        let wx_shape = self.value(c.wx).shape();
        acc_tn(grads, c.wx, wx_shape, xv, &dgx);
        let mut db = Tensor::zeros(1, 3 * k);
        for i in 0..n {
            for (o, x) in db.data.iter_mut().zip(dgx.row(i)) {
                *o += x;
            }
        }
        add_grad(grads, c.b, db);
        let mut dx = Tensor::zeros(xv.rows, xv.cols);
        matmul_nt_acc(&dgx, self.value(c.wx), &mut dx);
        add_grad(grads, c.x, dx);
        add_grad(grads, c.h, dh);
    }
}

fn add_grad(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(x) => x.add_assign(&g),
        slot => *slot = Some(g),
    }
}

/// `grad(v) += aᵀ · b`.
fn acc_tn(grads: &mut [Option<Tensor>], v: Var, shape: (usize, usize), a: &Tensor, b: &Tensor) {
    let slot = grads[v.0].get_or_insert_with(|| Tensor::zeros(shape.0, shape.1));
    matmul_tn_acc(a, b, slot);
}
