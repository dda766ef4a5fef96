//! Tape-based reverse-mode differentiation over [`Matrix`] values.
//!
//! Every operation appends a node holding its forward value and the
//! handles of its inputs. Node indices increase monotonically, so walking
//! the tape backwards visits nodes in reverse topological order.

use std::sync::Arc;

use super::{Matrix, NnError, Neighborhood, ParamId, ParamStore, Scalar};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op<T> {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Hadamard(Var, Var),
    AddRow(Var, Var),
    ScaleRows(Var, Var),
    Affine(Var, T),
    Relu(Var),
    Tanh(Var),
    SoftmaxRows(Var),
    Log(Var),
    SumRows(Var),
    MeanRows(Var),
    SumAll(Var),
    NeighborMean(Var, Arc<Neighborhood>),
    GatherRows(Var, Vec<usize>),
    Cosine(Var, Var),
}

#[derive(Debug, Clone)]
struct Node<T> {
    value: Matrix<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Recording of a forward computation.
#[derive(Debug, Clone, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients produced by [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    grads: Vec<Option<Matrix<T>>>,
    params: Vec<(Var, ParamId)>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of the loss with respect to `var`, if it was reached.
    pub fn get(&self, var: Var) -> Option<&Matrix<T>> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    /// Adds every parameter gradient into the matching [`ParamStore`] slot.
    pub fn accumulate(&self, store: &mut ParamStore<T>) -> Result<(), NnError> {
        for &(var, id) in &self.params {
            if let Some(g) = self.get(var) {
                store.get_mut(id).grad.add_assign(g)?;
            }
        }
        Ok(())
    }
}

fn check<T: Scalar>(m: Matrix<T>, op: &'static str) -> Result<Matrix<T>, NnError> {
    if m.is_finite() {
        Ok(m)
    } else {
        Err(NnError::NonFinite { op })
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Matrix<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Records a constant input that does not receive gradients.
    pub fn constant(&mut self, value: Matrix<T>) -> Result<Var, NnError> {
        let value = check(value, "constant")?;
        Ok(self.push(value, Op::Input, false))
    }

    /// Records an input leaf whose gradient is tracked.
    pub fn input(&mut self, value: Matrix<T>) -> Result<Var, NnError> {
        let value = check(value, "input")?;
        Ok(self.push(value, Op::Input, true))
    }

    /// Records a parameter leaf; its gradient is routed back to the store
    /// by [`Gradients::accumulate`].
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Result<Var, NnError> {
        let value = check(store.value(id).clone(), "param")?;
        Ok(self.push(value, Op::Param(id), true))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let v = check(self.value(a).matmul(self.value(b))?, "matmul")?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(v, Op::MatMul(a, b), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let v = check(self.value(a).add(self.value(b))?, "add")?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(v, Op::Add(a, b), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let v = check(self.value(a).sub(self.value(b))?, "sub")?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(v, Op::Sub(a, b), ng))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let v = check(self.value(a).hadamard(self.value(b))?, "hadamard")?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(v, Op::Hadamard(a, b), ng))
    }

    /// Adds a 1×c row to every row of an n×c matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, NnError> {
        let (av, rv) = (self.value(a), self.value(row));
        if rv.rows() != 1 || rv.cols() != av.cols() {
            return Err(NnError::ShapeMismatch {
                op: "add_row",
                left: av.shape(),
                right: rv.shape(),
            });
        }
        let mut out = av.clone();
        for i in 0..out.rows() {
            for (o, &b) in out.row_mut(i).iter_mut().zip(rv.as_slice()) {
                *o = *o + b;
            }
        }
        let out = check(out, "add_row")?;
        let ng = self.ng(a) || self.ng(row);
        Ok(self.push(out, Op::AddRow(a, row), ng))
    }

    /// Multiplies row `i` of an n×c matrix by entry `i` of an n×1 column.
    pub fn scale_rows(&mut self, a: Var, col: Var) -> Result<Var, NnError> {
        let (av, cv) = (self.value(a), self.value(col));
        if cv.cols() != 1 || cv.rows() != av.rows() {
            return Err(NnError::ShapeMismatch {
                op: "scale_rows",
                left: av.shape(),
                right: cv.shape(),
            });
        }
        let mut out = av.clone();
        for i in 0..out.rows() {
            let s = cv.as_slice()[i];
            for o in out.row_mut(i) {
                *o = *o * s;
            }
        }
        let out = check(out, "scale_rows")?;
        let ng = self.ng(a) || self.ng(col);
        Ok(self.push(out, Op::ScaleRows(a, col), ng))
    }

    /// Elementwise `a * scale + shift`.
    pub fn affine(&mut self, a: Var, scale: T, shift: T) -> Result<Var, NnError> {
        let v = check(self.value(a).map(|x| x * scale + shift), "affine")?;
        let ng = self.ng(a);
        Ok(self.push(v, Op::Affine(a, scale), ng))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, NnError> {
        let v = self.value(a).map(|x| if x > T::zero() { x } else { T::zero() });
        let ng = self.ng(a);
        Ok(self.push(v, Op::Relu(a), ng))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, NnError> {
        let v = self.value(a).map(T::tanh);
        let ng = self.ng(a);
        Ok(self.push(v, Op::Tanh(a), ng))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var, NnError> {
        let v = check(self.value(a).softmax_rows(), "softmax_rows")?;
        let ng = self.ng(a);
        Ok(self.push(v, Op::SoftmaxRows(a), ng))
    }

    /// Natural logarithm; non-positive entries yield [`NnError::NonFinite`].
    pub fn log(&mut self, a: Var) -> Result<Var, NnError> {
        let v = check(self.value(a).map(T::ln), "log")?;
        let ng = self.ng(a);
        Ok(self.push(v, Op::Log(a), ng))
    }

    pub fn sum_rows(&mut self, a: Var) -> Result<Var, NnError> {
        let v = check(self.value(a).sum_rows(), "sum_rows")?;
        let ng = self.ng(a);
        Ok(self.push(v, Op::SumRows(a), ng))
    }

    pub fn mean_rows(&mut self, a: Var) -> Result<Var, NnError> {
        let v = check(self.value(a).mean_rows(), "mean_rows")?;
        let ng = self.ng(a);
        Ok(self.push(v, Op::MeanRows(a), ng))
    }

    /// Sum of all entries as a 1×1 matrix.
    pub fn sum_all(&mut self, a: Var) -> Result<Var, NnError> {
        let s = self.value(a).sum();
        let v = check(Matrix::filled(1, 1, s), "sum_all")?;
        let ng = self.ng(a);
        Ok(self.push(v, Op::SumAll(a), ng))
    }

    /// Row `v` of the output is the mean of the rows of `a` indexed by the
    /// neighbours of `v`; nodes without neighbours get a zero row.
    pub fn neighbor_mean(&mut self, a: Var, nbrs: Arc<Neighborhood>) -> Result<Var, NnError> {
        let av = self.value(a);
        if nbrs.num_nodes() != av.rows() {
            return Err(NnError::ShapeMismatch {
                op: "neighbor_mean",
                left: av.shape(),
                right: (nbrs.num_nodes(), 1),
            });
        }
        let mut out = Matrix::zeros(av.rows(), av.cols());
        for v in 0..av.rows() {
            let ns = nbrs.of(v);
            if ns.is_empty() {
                continue;
            }
            let inv = T::one() / T::from_usize(ns.len()).unwrap();
            let row = out.row_mut(v);
            for &u in ns {
                for (o, &x) in row.iter_mut().zip(av.row(u)) {
                    *o = *o + x;
                }
            }
            for o in row {
                *o = *o * inv;
            }
        }
        let out = check(out, "neighbor_mean")?;
        let ng = self.ng(a);
        Ok(self.push(out, Op::NeighborMean(a, nbrs), ng))
    }

    pub fn gather_rows(&mut self, a: Var, rows: &[usize]) -> Result<Var, NnError> {
        let av = self.value(a);
        if let Some(&bad) = rows.iter().find(|&&r| r >= av.rows()) {
            return Err(NnError::IndexOutOfRange {
                index: bad,
                len: av.rows(),
            });
        }
        if rows.is_empty() {
            return Err(NnError::EmptyShape {
                rows: 0,
                cols: av.cols(),
            });
        }
        let v = av.select_rows(rows);
        let ng = self.ng(a);
        Ok(self.push(v, Op::GatherRows(a, rows.to_vec()), ng))
    }

    /// Cosine similarity of two equally shaped matrices viewed as flat
    /// vectors, clamped to `[-1, 1]`.
    pub fn cosine(&mut self, u: Var, v: Var) -> Result<Var, NnError> {
        let (uv, vv) = (self.value(u), self.value(v));
        let c = super::cosine(uv.as_slice(), vv.as_slice()).map_err(|e| match e {
            NnError::ShapeMismatch { .. } => NnError::ShapeMismatch {
                op: "cosine",
                left: uv.shape(),
                right: vv.shape(),
            },
            other => other,
        })?;
        let ng = self.ng(u) || self.ng(v);
        Ok(self.push(Matrix::filled(1, 1, c), Op::Cosine(u, v), ng))
    }

    /// Reverse pass from a 1×1 `loss` node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>, NnError> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(NnError::NotScalar { shape: lv.shape() });
        }
        if !lv.is_finite() {
            return Err(NnError::NonFinite { op: "backward" });
        }
        let mut grads: Vec<Option<Matrix<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Matrix::ones(1, 1));
        let mut params = Vec::new();

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if let Op::Param(id) = node.op {
                params.push((Var(i), id));
            }
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            if !g.is_finite() {
                return Err(NnError::NonFinite { op: "backward" });
            }
            self.propagate(i, &g, &mut grads)?;
            grads[i] = Some(g);
        }
        Ok(Gradients { grads, params })
    }

    fn accum(&self, grads: &mut [Option<Matrix<T>>], v: Var, g: Matrix<T>) -> Result<(), NnError> {
        if !self.ng(v) {
            return Ok(());
        }
        match &mut grads[v.0] {
            Some(acc) => acc.add_assign(&g),
            slot @ None => {
                *slot = Some(g);
                Ok(())
            }
        }
    }

    fn propagate(&self, i: usize, g: &Matrix<T>, grads: &mut [Option<Matrix<T>>]) -> Result<(), NnError> {
        let out = &self.nodes[i].value;
        match &self.nodes[i].op {
            Op::Input | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                if self.ng(*a) {
                    let ga = g.matmul(&self.value(*b).transpose())?;
                    self.accum(grads, *a, ga)?;
                }
                if self.ng(*b) {
                    let gb = self.value(*a).transpose().matmul(g)?;
                    self.accum(grads, *b, gb)?;
                }
            }
            Op::Add(a, b) => {
                self.accum(grads, *a, g.clone())?;
                self.accum(grads, *b, g.clone())?;
            }
            Op::Sub(a, b) => {
                self.accum(grads, *a, g.clone())?;
                self.accum(grads, *b, g.scale(-T::one()))?;
            }
            Op::Hadamard(a, b) => {
                let ga = g.hadamard(self.value(*b))?;
                let gb = g.hadamard(self.value(*a))?;
                self.accum(grads, *a, ga)?;
                self.accum(grads, *b, gb)?;
            }
            Op::AddRow(a, row) => {
                self.accum(grads, *a, g.clone())?;
                self.accum(grads, *row, g.sum_rows())?;
            }
            Op::ScaleRows(a, col) => {
                let (av, cv) = (self.value(*a), self.value(*col));
                let mut ga = g.clone();
                let mut gc = Matrix::zeros(cv.rows(), 1);
                for r in 0..ga.rows() {
                    let s = cv.as_slice()[r];
                    let mut acc = T::zero();
                    for (gx, &x) in ga.row_mut(r).iter_mut().zip(av.row(r)) {
                        acc = acc + *gx * x;
                        *gx = *gx * s;
                    }
                    gc[(r, 0)] = acc;
                }
                self.accum(grads, *a, ga)?;
                self.accum(grads, *col, gc)?;
            }
            Op::Affine(a, scale) => {
                self.accum(grads, *a, g.scale(*scale))?;
            }
            Op::Relu(a) => {
                let ga = g.zip_map(self.value(*a), "relu", |gv, x| {
                    if x > T::zero() {
                        gv
                    } else {
                        T::zero()
                    }
                })?;
                self.accum(grads, *a, ga)?;
            }
            Op::Tanh(a) => {
                let ga = g.zip_map(out, "tanh", |gv, y| gv * (T::one() - y * y))?;
                self.accum(grads, *a, ga)?;
            }
            Op::SoftmaxRows(a) => {
                let mut ga = g.clone();
                for r in 0..ga.rows() {
                    let y = out.row(r);
                    let dot: T = ga.row(r).iter().zip(y).map(|(&gv, &yv)| gv * yv).sum();
                    for (gv, &yv) in ga.row_mut(r).iter_mut().zip(y) {
                        *gv = yv * (*gv - dot);
                    }
                }
                self.accum(grads, *a, ga)?;
            }
            Op::Log(a) => {
                let ga = g.zip_map(self.value(*a), "log", |gv, x| gv / x)?;
                self.accum(grads, *a, ga)?;
            }
            Op::SumRows(a) | Op::MeanRows(a) => {
                let av = self.value(*a);
                let scale = match self.nodes[i].op {
                    Op::MeanRows(_) => T::one() / T::from_usize(av.rows()).unwrap(),
                    _ => T::one(),
                };
                let mut ga = Matrix::zeros(av.rows(), av.cols());
                for r in 0..av.rows() {
                    for (o, &gv) in ga.row_mut(r).iter_mut().zip(g.as_slice()) {
                        *o = gv * scale;
                    }
                }
                self.accum(grads, *a, ga)?;
            }
            Op::SumAll(a) => {
                let (r, c) = self.value(*a).shape();
                self.accum(grads, *a, Matrix::filled(r, c, g.as_slice()[0]))?;
            }
            Op::NeighborMean(a, nbrs) => {
                let av = self.value(*a);
                let mut ga = Matrix::zeros(av.rows(), av.cols());
                for v in 0..av.rows() {
                    let ns = nbrs.of(v);
                    if ns.is_empty() {
                        continue;
                    }
                    let inv = T::one() / T::from_usize(ns.len()).unwrap();
                    for &u in ns {
                        for (o, &gv) in ga.row_mut(u).iter_mut().zip(g.row(v)) {
                            *o = *o + gv * inv;
                        }
                    }
                }
                self.accum(grads, *a, ga)?;
            }
            Op::GatherRows(a, rows) => {
                let av = self.value(*a);
                let mut ga = Matrix::zeros(av.rows(), av.cols());
                for (k, &r) in rows.iter().enumerate() {
                    for (o, &gv) in ga.row_mut(r).iter_mut().zip(g.row(k)) {
                        *o = *o + gv;
                    }
                }
                self.accum(grads, *a, ga)?;
            }
            Op::Cosine(u, v) => {
                let (uv, vv) = (self.value(*u), self.value(*v));
                let dot: T = uv.as_slice().iter().zip(vv.as_slice()).map(|(&a, &b)| a * b).sum();
                let nu = uv.as_slice().iter().map(|&a| a * a).sum::<T>().sqrt();
                let nv = vv.as_slice().iter().map(|&a| a * a).sum::<T>().sqrt();
                let c = dot / (nu * nv);
                let gs = g.as_slice()[0];
                let gu = Matrix::new(
                    uv.rows(),
                    uv.cols(),
                    uv.as_slice()
                        .iter()
                        .zip(vv.as_slice())
                        .map(|(&a, &b)| gs * (b / (nu * nv) - c * a / (nu * nu)))
                        .collect(),
                )?;
                let gv = Matrix::new(
                    vv.rows(),
                    vv.cols(),
                    vv.as_slice()
                        .iter()
                        .zip(uv.as_slice())
                        .map(|(&b, &a)| gs * (a / (nu * nv) - c * b / (nv * nv)))
                        .collect(),
                )?;
                self.accum(grads, *u, gu)?;
                self.accum(grads, *v, gv)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{central_differences, relative_error};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize, lo: f64, hi: f64) -> Matrix<f64> {
        Matrix::new(r, c, (0..r * c).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
    }

    type Build = dyn Fn(&mut Tape<f64>, &[Var]) -> Result<Var, NnError>;

    /// Compares analytic parameter gradients of `sum(op(inputs) ⊙ R)` with
    /// central differences.
    fn grad_check(inputs: Vec<Matrix<f64>>, build: &Build) {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut store = ParamStore::new();
        let ids: Vec<_> = inputs
            .into_iter()
            .enumerate()
            .map(|(i, m)| store.add(format!("p{i}"), m))
            .collect();
        let probe = {
            let mut t = Tape::new();
            let vars: Vec<_> = ids.iter().map(|&id| t.param(&store, id).unwrap()).collect();
            let out = build(&mut t, &vars).unwrap();
            t.value(out).clone()
        };
        let weights = random(&mut rng, probe.rows(), probe.cols(), -1.0, 1.0);
        let loss = |s: &ParamStore<f64>, t: &mut Tape<f64>| -> Result<Var, NnError> {
            let vars: Vec<_> = ids.iter().map(|&id| t.param(s, id)).collect::<Result<_, _>>()?;
            let out = build(t, &vars)?;
            let w = t.constant(weights.clone())?;
            let prod = t.hadamard(out, w)?;
            t.sum_all(prod)
        };
        let mut tape = Tape::new();
        let l = loss(&store, &mut tape).unwrap();
        tape.backward(l).unwrap().accumulate(&mut store).unwrap();
        let analytic: Vec<_> = store.iter().map(|p| p.grad.clone()).collect();
        let numeric = central_differences(&mut store, 1e-6, |s| {
            let mut t = Tape::new();
            let l = loss(s, &mut t)?;
            Ok::<f64, NnError>(t.value(l).as_slice()[0])
        })
        .unwrap();
        for (a, n) in analytic.iter().zip(&numeric) {
            for (&x, &y) in a.as_slice().iter().zip(n.as_slice()) {
                assert!(relative_error(x, y, 1e-6) < 1e-5, "analytic {x} vs numeric {y}");
            }
        }
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn loss_sum_gives_all_ones_gradient() {
        let mut store = ParamStore::new();
        let id = store.add("w", Matrix::from_rows(&[[1.0, -2.0], [3.0, 4.0]]).unwrap());
        let mut t = Tape::new();
        let w = t.param(&store, id).unwrap();
        let l = t.sum_all(w).unwrap();
        t.backward(l).unwrap().accumulate(&mut store).unwrap();
        assert_eq!(store.get(id).grad, Matrix::ones(2, 2));
    }

    #[test]
    fn half_squared_norm_gradient_is_weight() {
        let mut store = ParamStore::new();
        let w0 = Matrix::from_rows(&[[0.5, -1.5, 2.0]]).unwrap();
        let id = store.add("w", w0.clone());
        let mut t = Tape::new();
        let w = t.param(&store, id).unwrap();
        let sq = t.hadamard(w, w).unwrap();
        let s = t.sum_all(sq).unwrap();
        let l = t.affine(s, 0.5, 0.0).unwrap();
        t.backward(l).unwrap().accumulate(&mut store).unwrap();
        assert_eq!(store.get(id).grad, w0);
    }

    #[test]
    fn grad_matmul_add_sub_hadamard() {
        let mut r = rng();
        let (a, b) = (random(&mut r, 3, 4, -1.0, 1.0), random(&mut r, 4, 2, -1.0, 1.0));
        grad_check(vec![a, b], &|t, v| t.matmul(v[0], v[1]));
        let (a, b) = (random(&mut r, 2, 3, -1.0, 1.0), random(&mut r, 2, 3, -1.0, 1.0));
        grad_check(vec![a.clone(), b.clone()], &|t, v| t.add(v[0], v[1]));
        grad_check(vec![a.clone(), b.clone()], &|t, v| t.sub(v[0], v[1]));
        grad_check(vec![a, b], &|t, v| t.hadamard(v[0], v[1]));
    }

    #[test]
    fn grad_broadcasts() {
        let mut r = rng();
        let (a, row, col) = (
            random(&mut r, 4, 3, -1.0, 1.0),
            random(&mut r, 1, 3, -1.0, 1.0),
            random(&mut r, 4, 1, -1.0, 1.0),
        );
        grad_check(vec![a.clone(), row], &|t, v| t.add_row(v[0], v[1]));
        grad_check(vec![a, col], &|t, v| t.scale_rows(v[0], v[1]));
    }

    #[test]
    fn grad_elementwise() {
        let mut r = rng();
        let a = random(&mut r, 3, 3, -2.0, 2.0);
        grad_check(vec![a.clone()], &|t, v| t.affine(v[0], -1.5, 0.25));
        grad_check(vec![a.clone()], &|t, v| t.tanh(v[0]));
        grad_check(vec![a.clone()], &|t, v| t.relu(v[0]));
        grad_check(vec![a], &|t, v| t.softmax_rows(v[0]));
        let pos = random(&mut r, 2, 3, 0.5, 3.0);
        grad_check(vec![pos], &|t, v| t.log(v[0]));
    }

    #[test]
    fn grad_reductions_and_sparse() {
        let mut r = rng();
        let a = random(&mut r, 5, 3, -1.0, 1.0);
        grad_check(vec![a.clone()], &|t, v| t.sum_rows(v[0]));
        grad_check(vec![a.clone()], &|t, v| t.mean_rows(v[0]));
        grad_check(vec![a.clone()], &|t, v| t.gather_rows(v[0], &[4, 1, 1]));
        let nb = Arc::new(Neighborhood::from_edges(5, &[(0, 1), (1, 2), (3, 1), (4, 4)], false).unwrap());
        grad_check(vec![a], &move |t, v| t.neighbor_mean(v[0], nb.clone()));
    }

    #[test]
    fn grad_cosine() {
        let mut r = rng();
        let (u, w) = (random(&mut r, 1, 5, -1.0, 1.0), random(&mut r, 1, 5, -1.0, 1.0));
        grad_check(vec![u, w], &|t, v| t.cosine(v[0], v[1]));
    }

    #[test]
    fn log_of_zero_is_non_finite() {
        let mut t = Tape::<f64>::new();
        let z = t.constant(Matrix::zeros(1, 2)).unwrap();
        assert_eq!(t.log(z), Err(NnError::NonFinite { op: "log" }));
    }

    #[test]
    fn backward_requires_scalar() {
        let mut t = Tape::<f64>::new();
        let z = t.input(Matrix::zeros(1, 2)).unwrap();
        assert!(matches!(t.backward(z), Err(NnError::NotScalar { .. })));
    }

    proptest::proptest! {
        #[test]
        fn softmax_rows_are_distributions(vals in proptest::collection::vec(-15.0f64..15.0, 12)) {
            let m = Matrix::new(3, 4, vals).unwrap();
            let mut t = Tape::new();
            let x = t.constant(m).unwrap();
            let s = t.softmax_rows(x).unwrap();
            let out = t.value(s);
            for i in 0..3 {
                let total: f64 = out.row(i).iter().sum();
                proptest::prop_assert!((total - 1.0).abs() <= 1e-12);
                for &p in out.row(i) {
                    proptest::prop_assert!(p > 0.0 && p < 1.0);
                }
            }
        }
    }
}
