use super::{Matrix, ParamStore, Scalar};

/// Updates parameter values from their accumulated gradients.
pub trait Optimizer<T: Scalar> {
    fn step(&mut self, store: &mut ParamStore<T>);
}

/// Plain gradient descent: `w -= lr * g`.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    pub lr: T,
}

impl<T: Scalar> Optimizer<T> for Sgd<T> {
    fn step(&mut self, store: &mut ParamStore<T>) {
        sgd_step(store, self.lr);
    }
}

pub fn sgd_step<T: Scalar>(store: &mut ParamStore<T>, lr: T) {
    for p in store.iter_mut() {
        let g = p.grad.clone();
        for (w, &gv) in p.value.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *w = *w - lr * gv;
        }
    }
}

/// Adaptive moment estimation with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    t: i32,
    m: Vec<Matrix<T>>,
    v: Vec<Matrix<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: T, beta1: T, beta2: T, eps: T) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// `lr` with (β₁, β₂, ε) = (0.9, 0.999, 1e-8).
    pub fn with_lr(lr: T) -> Self {
        Self::new(lr, T::lit(0.9), T::lit(0.999), T::lit(1e-8))
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }
}

impl<T: Scalar> Optimizer<T> for Adam<T> {
    fn step(&mut self, store: &mut ParamStore<T>) {
        if self.m.len() != store.len() {
            self.m = store.iter().map(|p| Matrix::zeros(p.value.rows(), p.value.cols())).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let one = T::one();
        let bc1 = one - self.beta1.powi(self.t);
        let bc2 = one - self.beta2.powi(self.t);
        for ((p, m), v) in store.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let w = p.value.as_mut_slice();
            let g = p.grad.as_slice();
            for k in 0..w.len() {
                let mk = self.beta1 * m.as_slice()[k] + (one - self.beta1) * g[k];
                let vk = self.beta2 * v.as_slice()[k] + (one - self.beta2) * g[k] * g[k];
                m.as_mut_slice()[k] = mk;
                v.as_mut_slice()[k] = vk;
                let m_hat = mk / bc1;
                let v_hat = vk / bc2;
                w[k] = w[k] - self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// One Adam update using explicit moment state.
pub fn adam_step<T: Scalar>(store: &mut ParamStore<T>, state: &mut Adam<T>) {
    state.step(store);
}
