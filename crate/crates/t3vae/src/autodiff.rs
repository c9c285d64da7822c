//! Minimal reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records a computation as a flat list of nodes; every op
//! allocates its result (and a same-shaped gradient buffer) on the tape and
//! returns a [`Var`] handle. [`Tape::backward`] runs the reverse sweep from a
//! scalar output, after which leaf gradients can be read back. Shapes are
//! validated with assertions: mismatches are programming errors, not inputs.

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Mat {
        assert_eq!(data.len(), rows * cols, "data length does not match {rows}x{cols}");
        Mat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Mat {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn scalar(v: f64) -> Mat {
        Mat { rows: 1, cols: 1, data: vec![v] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// C = A·B with the k-loop hoisted so the inner loop is contiguous.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul inner dims {} vs {}", self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// A·Bᵀ
    fn matmul_nt(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols, "matmul_nt inner dims {} vs {}", self.cols, other.cols);
        let mut out = Mat::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] =
                    a_row.iter().zip(other.row(j)).map(|(&x, &y)| x * y).sum();
            }
        }
        out
    }

    /// Aᵀ·B
    fn matmul_tn(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows, "matmul_tn inner dims {} vs {}", self.rows, other.rows);
        let mut out = Mat::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a_row = self.row(r);
            let b_row = other.row(r);
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[k * other.cols..(k + 1) * other.cols];
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += a * bv;
                }
            }
        }
        out
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// A (r×k) · B (k×c)
    MatMul(Var, Var),
    /// M (r×c) + broadcast row b (1×c)
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddConst(Var),
    LeakyRelu(Var),
    Exp(Var),
    Square(Var),
    /// r×c → r×1, sum across each row
    RowSums(Var),
    /// r×c → 1×1, mean over all entries
    MeanAll(Var),
    /// horizontal concatenation
    Concat(Var, Var),
    /// columns [start, end)
    SliceCols(Var, usize),
}

struct Node {
    op: Op,
    value: Mat,
    grad: Mat,
}

/// Records a computation for one reverse-mode sweep.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

pub const LEAKY_SLOPE: f64 = 0.01;

impl Tape {
    pub fn new() -> Tape {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, op: Op, value: Mat) -> Var {
        let grad = Mat::zeros(value.rows, value.cols);
        self.nodes.push(Node { op, value, grad });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Mat) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> &Mat {
        &self.nodes[v.0].grad
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let m = &self.nodes[v.0].value;
        (m.rows, m.cols)
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        let m = self.value(v);
        assert_eq!((m.rows, m.cols), (1, 1), "node is {}x{}, not scalar", m.rows, m.cols);
        m.data[0]
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).matmul(self.value(b));
        self.push(Op::MatMul(a, b), value)
    }

    pub fn add_row(&mut self, m: Var, b: Var) -> Var {
        let (rows, cols) = self.shape(m);
        assert_eq!(self.shape(b), (1, cols), "bias must be a 1x{cols} row");
        let bias = self.value(b).data.clone();
        let mut value = self.value(m).clone();
        for i in 0..rows {
            for (v, &bv) in value.data[i * cols..(i + 1) * cols].iter_mut().zip(&bias) {
                *v += bv;
            }
        }
        self.push(Op::AddRow(m, b), value)
    }

    fn zip_op(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "elementwise op on mismatched shapes");
        let value = Mat {
            rows: self.value(a).rows,
            cols: self.value(a).cols,
            data: self
                .value(a)
                .data
                .iter()
                .zip(&self.value(b).data)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        };
        self.push(op, value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip_op(a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip_op(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip_op(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    fn map_op(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let value = Mat {
            rows: self.value(a).rows,
            cols: self.value(a).cols,
            data: self.value(a).data.iter().map(|&x| f(x)).collect(),
        };
        self.push(op, value)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.map_op(a, Op::Scale(a, c), |x| c * x)
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        self.map_op(a, Op::AddConst(a), |x| x + c)
    }

    pub fn leaky_relu(&mut self, a: Var) -> Var {
        self.map_op(a, Op::LeakyRelu(a), |x| if x > 0.0 { x } else { LEAKY_SLOPE * x })
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.map_op(a, Op::Exp(a), f64::exp)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.map_op(a, Op::Square(a), |x| x * x)
    }

    pub fn row_sums(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let value = Mat::from_fn(src.rows, 1, |i, _| src.row(i).iter().sum());
        self.push(Op::RowSums(a), value)
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let mean = src.data.iter().sum::<f64>() / src.data.len() as f64;
        self.push(Op::MeanAll(a), Mat::scalar(mean))
    }

    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        assert_eq!(ra, rb, "concat row counts {ra} vs {rb}");
        let left = self.value(a);
        let right = self.value(b);
        let mut value = Mat::zeros(ra, ca + cb);
        for i in 0..ra {
            value.data[i * (ca + cb)..i * (ca + cb) + ca].copy_from_slice(left.row(i));
            value.data[i * (ca + cb) + ca..(i + 1) * (ca + cb)].copy_from_slice(right.row(i));
        }
        self.push(Op::Concat(a, b), value)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let (rows, cols) = self.shape(a);
        assert!(start < end && end <= cols, "slice [{start}, {end}) out of {cols} columns");
        let src = self.value(a);
        let value = Mat::from_fn(rows, end - start, |i, j| src.get(i, start + j));
        self.push(Op::SliceCols(a, start), value)
    }

    /// Reverse sweep seeding d(out)/d(out) = 1; `out` must be scalar.
    pub fn backward(&mut self, out: Var) {
        {
            let node = &mut self.nodes[out.0];
            assert_eq!(
                (node.value.rows, node.value.cols),
                (1, 1),
                "backward starts from a scalar node"
            );
            node.grad.data[0] = 1.0;
        }
        for i in (0..=out.0).rev() {
            let (left, right) = self.nodes.split_at_mut(i);
            let node = &right[0];
            let g = &node.grad;
            match node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let da = g.matmul_nt(&left[b.0].value);
                    for (d, &v) in left[a.0].grad.data.iter_mut().zip(&da.data) {
                        *d += v;
                    }
                    let db = left[a.0].value.matmul_tn(g);
                    for (d, &v) in left[b.0].grad.data.iter_mut().zip(&db.data) {
                        *d += v;
                    }
                }
                Op::AddRow(m, b) => {
                    for (d, &gv) in left[m.0].grad.data.iter_mut().zip(&g.data) {
                        *d += gv;
                    }
                    let cols = g.cols;
                    for r in 0..g.rows {
                        for (d, &gv) in
                            left[b.0].grad.data.iter_mut().zip(&g.data[r * cols..(r + 1) * cols])
                        {
                            *d += gv;
                        }
                    }
                }
                Op::Add(a, b) => {
                    for (d, &gv) in left[a.0].grad.data.iter_mut().zip(&g.data) {
                        *d += gv;
                    }
                    for (d, &gv) in left[b.0].grad.data.iter_mut().zip(&g.data) {
                        *d += gv;
                    }
                }
                Op::Sub(a, b) => {
                    for (d, &gv) in left[a.0].grad.data.iter_mut().zip(&g.data) {
                        *d += gv;
                    }
                    for (d, &gv) in left[b.0].grad.data.iter_mut().zip(&g.data) {
                        *d -= gv;
                    }
                }
                Op::Mul(a, b) => {
                    if a.0 == b.0 {
                        // x⊙x: both factor grads collapse onto one operand
                        let vals: Vec<f64> = left[a.0].value.data.clone();
                        for ((d, &gv), &x) in
                            left[a.0].grad.data.iter_mut().zip(&g.data).zip(&vals)
                        {
                            *d += 2.0 * gv * x;
                        }
                    } else {
                        let (first, second) = if a.0 < b.0 {
                            let (l, r) = left.split_at_mut(b.0);
                            (&mut l[a.0], &mut r[0])
                        } else {
                            let (l, r) = left.split_at_mut(a.0);
                            (&mut r[0], &mut l[b.0])
                        };
                        for ((d, &gv), &y) in
                            first.grad.data.iter_mut().zip(&g.data).zip(&second.value.data)
                        {
                            *d += gv * y;
                        }
                        for ((d, &gv), &x) in
                            second.grad.data.iter_mut().zip(&g.data).zip(&first.value.data)
                        {
                            *d += gv * x;
                        }
                    }
                }
                Op::Scale(a, c) => {
                    for (d, &gv) in left[a.0].grad.data.iter_mut().zip(&g.data) {
                        *d += c * gv;
                    }
                }
                Op::AddConst(a) => {
                    for (d, &gv) in left[a.0].grad.data.iter_mut().zip(&g.data) {
                        *d += gv;
                    }
                }
                Op::LeakyRelu(a) => {
                    let src = &left[a.0];
                    let slopes: Vec<f64> = src
                        .value
                        .data
                        .iter()
                        .map(|&x| if x > 0.0 { 1.0 } else { LEAKY_SLOPE })
                        .collect();
                    for ((d, &gv), s) in left[a.0].grad.data.iter_mut().zip(&g.data).zip(slopes) {
                        *d += s * gv;
                    }
                }
                Op::Exp(a) => {
                    let vals = node.value.data.clone();
                    for ((d, &gv), &ex) in left[a.0].grad.data.iter_mut().zip(&g.data).zip(&vals) {
                        *d += ex * gv;
                    }
                }
                Op::Square(a) => {
                    let vals: Vec<f64> = left[a.0].value.data.clone();
                    for ((d, &gv), &x) in left[a.0].grad.data.iter_mut().zip(&g.data).zip(&vals) {
                        *d += 2.0 * x * gv;
                    }
                }
                Op::RowSums(a) => {
                    let cols = left[a.0].value.cols;
                    for r in 0..g.rows {
                        let gv = g.data[r];
                        for d in &mut left[a.0].grad.data[r * cols..(r + 1) * cols] {
                            *d += gv;
                        }
                    }
                }
                Op::MeanAll(a) => {
                    let n = left[a.0].value.data.len() as f64;
                    let gv = g.data[0] / n;
                    for d in &mut left[a.0].grad.data {
                        *d += gv;
                    }
                }
                Op::Concat(a, b) => {
                    let ca = left[a.0].value.cols;
                    let cb = left[b.0].value.cols;
                    for r in 0..g.rows {
                        let g_row = g.row(r);
                        for (d, &gv) in left[a.0].grad.data[r * ca..(r + 1) * ca]
                            .iter_mut()
                            .zip(&g_row[..ca])
                        {
                            *d += gv;
                        }
                        for (d, &gv) in left[b.0].grad.data[r * cb..(r + 1) * cb]
                            .iter_mut()
                            .zip(&g_row[ca..])
                        {
                            *d += gv;
                        }
                    }
                }
                Op::SliceCols(a, start) => {
                    let cols = left[a.0].value.cols;
                    for r in 0..g.rows {
                        for (j, &gv) in g.row(r).iter().enumerate() {
                            left[a.0].grad.data[r * cols + start + j] += gv;
                        }
                    }
                }
            }
        }
    }
}

/// Central-difference gradient check of `build`, which maps leaf values to a
/// scalar loss through a fresh tape. Returns the worst relative error over
/// all leaf entries.
#[cfg(test)]
pub(crate) fn grad_check(leaves: &[Mat], build: impl Fn(&mut Tape, &[Var]) -> Var) -> f64 {
    let run = |values: &[Mat]| -> (f64, Vec<Mat>) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|m| tape.leaf(m.clone())).collect();
        let out = build(&mut tape, &vars);
        tape.backward(out);
        let grads = vars.iter().map(|&v| tape.grad(v).clone()).collect();
        (tape.scalar_value(out), grads)
    };
    let (_, grads) = run(leaves);
    let mut worst: f64 = 0.0;
    for (li, leaf) in leaves.iter().enumerate() {
        for idx in 0..leaf.data().len() {
            let x = leaf.data()[idx];
            let h = 1e-5 * x.abs().max(1.0);
            let mut plus = leaves.to_vec();
            plus[li].data_mut()[idx] = x + h;
            let mut minus = leaves.to_vec();
            minus[li].data_mut()[idx] = x - h;
            let fd = (run(&plus).0 - run(&minus).0) / (2.0 * h);
            let an = grads[li].data()[idx];
            let denom = an.abs().max(fd.abs()).max(1e-6);
            worst = worst.max((fd - an).abs() / denom);
        }
    }
    worst
}
