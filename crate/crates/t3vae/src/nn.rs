//! Fully connected networks on the autodiff tape, the Adam optimizer, and
//! the Gaussian / Student-t reparametrization tricks.
//!
//! A [`Mlp`] owns its parameters as plain matrices. Each training step binds
//! them onto a fresh [`Tape`] ([`Mlp::bind`]), builds the loss, runs the
//! backward sweep, and applies the resulting leaf gradients with
//! [`AdamState::step`].

use crate::autodiff::{Mat, Tape, Var};
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    LeakyRelu,
}

/// One dense layer: weights are (in × out), bias a (1 × out) row, so batches
/// of row vectors map as x·W + b.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Mat,
    pub b: Mat,
}

/// Multi-layer perceptron; the activation sits between layers, the final
/// layer is affine.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub activation: Activation,
}

/// The same network bound onto a tape as gradient leaves.
pub struct TapedMlp {
    vars: Vec<(Var, Var)>,
    activation: Activation,
    in_dim: usize,
}

impl Mlp {
    /// He-normal initialization: W_ij ~ N(0, 2/fan_in), biases zero.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Result<Mlp> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let sd = (2.0 / fan_in as f64).sqrt();
            let w = Mat::from_fn(fan_in, fan_out, |_, _| {
                sd * rng.sample::<f64, _>(StandardNormal)
            });
            layers.push(Linear { w, b: Mat::zeros(1, fan_out) });
        }
        Ok(Mlp { layers, activation: Activation::LeakyRelu })
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].w.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").w.cols()
    }

    /// Register every parameter as a tape leaf; gradients are read back from
    /// the same leaves after the backward sweep.
    pub fn bind(&self, tape: &mut Tape) -> TapedMlp {
        let vars = self
            .layers
            .iter()
            .map(|l| (tape.leaf(l.w.clone()), tape.leaf(l.b.clone())))
            .collect();
        TapedMlp { vars, activation: self.activation, in_dim: self.in_dim() }
    }

    /// Forward pass outside any tape (no gradients); used at generation and
    /// evaluation time.
    pub fn forward(&self, x: &Mat) -> Result<Mat> {
        if x.cols() != self.in_dim() {
            return Err(Error::Contract(format!(
                "input has {} features, network expects {}",
                x.cols(),
                self.in_dim()
            )));
        }
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = h.matmul(&layer.w);
            for i in 0..z.rows() {
                let bias = layer.b.row(0);
                let row_start = i * z.cols();
                for (j, &bv) in bias.iter().enumerate() {
                    z.data_mut()[row_start + j] += bv;
                }
            }
            if k < last {
                match self.activation {
                    Activation::LeakyRelu => {
                        for v in z.data_mut() {
                            if *v < 0.0 {
                                *v *= crate::autodiff::LEAKY_SLOPE;
                            }
                        }
                    }
                }
            }
            h = z;
        }
        Ok(h)
    }

    /// Flat view of all parameters, layer by layer (W then b).
    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.w.data(), l.b.data()]).collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.w.data_mut(), l.b.data_mut()])
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.data().len() + l.b.data().len()).sum()
    }
}

impl TapedMlp {
    /// Assemble a taped network from existing leaf pairs (W, b) per layer,
    /// for callers that put the parameters on the tape themselves.
    pub fn from_vars(vars: Vec<(Var, Var)>, in_dim: usize) -> TapedMlp {
        TapedMlp { vars, activation: Activation::LeakyRelu, in_dim }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let (_, cols) = tape.shape(x);
        if cols != self.in_dim {
            return Err(Error::Contract(format!(
                "input has {cols} features, network expects {}",
                self.in_dim
            )));
        }
        let mut h = x;
        let last = self.vars.len() - 1;
        for (k, &(w, b)) in self.vars.iter().enumerate() {
            let z = tape.matmul(h, w);
            let z = tape.add_row(z, b);
            h = if k < last {
                match self.activation {
                    Activation::LeakyRelu => tape.leaky_relu(z),
                }
            } else {
                z
            };
        }
        Ok(h)
    }

    /// Leaf gradients in the same order as [`Mlp::param_slices`].
    pub fn grad_slices<'t>(&self, tape: &'t Tape) -> Vec<&'t [f64]> {
        self.vars
            .iter()
            .flat_map(|&(w, b)| [tape.grad(w).data(), tape.grad(b).data()])
            .collect()
    }
}

/// Adam with weight decay folded into the gradient (g += λ·θ);
/// betas (0.9, 0.999), eps 1e−8.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub step_count: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(lr: f64, weight_decay: f64, param_sizes: &[usize]) -> AdamState {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step_count: 0,
            m: param_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: param_sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub fn for_mlps(lr: f64, weight_decay: f64, nets: &[&Mlp]) -> AdamState {
        let sizes: Vec<usize> = nets
            .iter()
            .flat_map(|n| n.param_slices().into_iter().map(<[f64]>::len))
            .collect();
        AdamState::new(lr, weight_decay, &sizes)
    }

    /// One update over all parameter tensors; `params` and `grads` must line
    /// up with the sizes given at construction.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Contract(format!(
                "optimizer holds {} tensors, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((theta, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            if theta.len() != m.len() || grad.len() != m.len() {
                return Err(Error::Contract(format!(
                    "tensor size {} does not match optimizer slot {}",
                    theta.len(),
                    m.len()
                )));
            }
            for k in 0..theta.len() {
                let g = grad[k] + self.weight_decay * theta[k];
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g;
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g * g;
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                theta[k] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }

    /// Moment buffers in slot order (first moments, then second moments),
    /// for checkpointing.
    pub fn moments(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        (&self.m, &self.v)
    }

    pub fn restore_moments(&mut self, m: Vec<Vec<f64>>, v: Vec<Vec<f64>>, step: u64) -> Result<()> {
        if m.len() != self.m.len()
            || v.len() != self.v.len()
            || m.iter().zip(&self.m).any(|(a, b)| a.len() != b.len())
            || v.iter().zip(&self.v).any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::Contract("optimizer state shapes do not match".into()));
        }
        self.m = m;
        self.v = v;
        self.step_count = step;
        Ok(())
    }
}

/// Noise factor F for the t reparametrization: row i is √(ν/δᵢ)·εᵢ with
/// εᵢ ~ N(0, I) and δᵢ ~ χ²(ν+n) shared across the row. δ is sampled outside
/// the tape (stop-gradient). ν = ∞ degenerates to plain Gaussian noise.
pub fn t_noise(rows: usize, cols: usize, nu: f64, n: usize, rng: &mut impl Rng) -> Mat {
    let mut out = Mat::zeros(rows, cols);
    if nu.is_infinite() {
        for v in out.data_mut() {
            *v = rng.sample(StandardNormal);
        }
        return out;
    }
    let chi2 = ChiSquared::<f64>::new(nu + n as f64).expect("positive df");
    for i in 0..rows {
        let s = (nu / chi2.sample(rng)).sqrt();
        for j in 0..cols {
            let eps: f64 = rng.sample(StandardNormal);
            out.set(i, j, s * eps);
        }
    }
    out
}

/// z = μ + F ⊙ exp(log σ) for a precomputed noise factor F; gradients flow
/// to μ and log σ only.
pub fn reparam_with_noise(tape: &mut Tape, mu: Var, log_sigma: Var, noise: Mat) -> Var {
    assert_eq!(
        tape.shape(mu),
        (noise.rows(), noise.cols()),
        "noise shape does not match mu"
    );
    let f = tape.leaf(noise);
    let sigma = tape.exp(log_sigma);
    let scaled = tape.mul(f, sigma);
    tape.add(mu, scaled)
}

/// t reparametrization: z = μ_φ + √(ν/δ)·σ_φ ⊙ ε with ε ~ N(0, I_m) and
/// δ ~ χ²(ν+n) treated as non-differentiable noise.
pub fn reparam_t(
    tape: &mut Tape,
    mu: Var,
    log_sigma: Var,
    nu: f64,
    n: usize,
    rng: &mut impl Rng,
) -> Var {
    let (rows, cols) = tape.shape(mu);
    let noise = t_noise(rows, cols, nu, n, rng);
    reparam_with_noise(tape, mu, log_sigma, noise)
}

/// Gaussian reparametrization: z = μ + σ ⊙ ε.
pub fn reparam_gauss(tape: &mut Tape, mu: Var, log_sigma: Var, rng: &mut impl Rng) -> Var {
    let (rows, cols) = tape.shape(mu);
    let noise = t_noise(rows, cols, f64::INFINITY, 0, rng);
    reparam_with_noise(tape, mu, log_sigma, noise)
}
