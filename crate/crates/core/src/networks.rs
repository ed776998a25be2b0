//! Small fully-connected networks with exact reverse-mode gradients, Adam,
//! and the exploration-noise process. Everything is `f64` and hand-rolled;
//! the networks are tiny (two hidden layers of 64) so determinism and
//! gradient-check headroom matter more than raw speed.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::math::{axpy, dot, dot4, Vec2};
use crate::{Error, Result};

/// Per-layer nonlinearity. ReLU uses subgradient 0 at exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative in terms of the pre-activation `z` and the stored
    /// activation output `y`.
    #[inline]
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// One dense layer; weights are row-major by output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

/// Affine part of one layer over a row-major batch, blocked four samples at
/// a time so each weight row is loaded once per block.
fn layer_affine(layer: &Layer, x: &[f64], n: usize, pre: &mut [f64]) {
    let ind = layer.in_dim;
    let out = layer.out_dim;
    let mut i = 0;
    while i + 4 <= n {
        let x0 = &x[i * ind..(i + 1) * ind];
        let x1 = &x[(i + 1) * ind..(i + 2) * ind];
        let x2 = &x[(i + 2) * ind..(i + 3) * ind];
        let x3 = &x[(i + 3) * ind..(i + 4) * ind];
        for j in 0..out {
            let row = &layer.weights[j * ind..(j + 1) * ind];
            let d = dot4(row, x0, x1, x2, x3);
            let b = layer.biases[j];
            pre[i * out + j] = d[0] + b;
            pre[(i + 1) * out + j] = d[1] + b;
            pre[(i + 2) * out + j] = d[2] + b;
            pre[(i + 3) * out + j] = d[3] + b;
        }
        i += 4;
    }
    while i < n {
        let xi = &x[i * ind..(i + 1) * ind];
        for j in 0..out {
            let row = &layer.weights[j * ind..(j + 1) * ind];
            pre[i * out + j] = dot(row, xi) + layer.biases[j];
        }
        i += 1;
    }
}

/// Kaiming-uniform weight draw: `U(-sqrt(6/fan_in), sqrt(6/fan_in))`.
/// Used for every layer regardless of activation; biases start at zero.
pub fn kaiming_uniform(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    assert!(in_dim > 0, "fan_in must be positive");
    let bound = (6.0 / in_dim as f64).sqrt();
    (0..in_dim * out_dim)
        .map(|_| rng.random_range(-bound..=bound))
        .collect()
}

/// Multilayer perceptron. The final activation output is multiplied by
/// `output_scale` (1.0 for critics; the action bound for actors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub output_scale: f64,
}

impl Mlp {
    /// Builds a network with Kaiming-uniform weights and zero biases.
    /// `dims` has one more entry than `activations`.
    pub fn new(
        dims: &[usize],
        activations: &[Activation],
        output_scale: f64,
        rng: &mut impl Rng,
    ) -> Self {
        assert_eq!(dims.len(), activations.len() + 1, "layer count mismatch");
        let layers = dims
            .windows(2)
            .zip(activations.iter())
            .map(|(pair, act)| Layer {
                in_dim: pair[0],
                out_dim: pair[1],
                weights: kaiming_uniform(pair[0], pair[1], rng),
                biases: vec![0.0; pair[1]],
                activation: *act,
            })
            .collect();
        Self {
            layers,
            output_scale,
        }
    }

    /// All-zero parameters; useful as a degenerate baseline.
    pub fn zeroed(dims: &[usize], activations: &[Activation], output_scale: f64) -> Self {
        assert_eq!(dims.len(), activations.len() + 1, "layer count mismatch");
        let layers = dims
            .windows(2)
            .zip(activations.iter())
            .map(|(pair, act)| Layer {
                in_dim: pair[0],
                out_dim: pair[1],
                weights: vec![0.0; pair[0] * pair[1]],
                biases: vec![0.0; pair[1]],
                activation: *act,
            })
            .collect();
        Self {
            layers,
            output_scale,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(other.layers.iter())
                .all(|(a, b)| {
                    a.in_dim == b.in_dim && a.out_dim == b.out_dim && a.activation == b.activation
                })
    }

    /// Single-sample forward pass. Panics on input-length mismatch; see
    /// [`Mlp::try_forward`] for the checked variant.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.in_dim(), "input length mismatch");
        let mut cur = input.to_vec();
        for layer in &self.layers {
            let mut next = vec![0.0; layer.out_dim];
            for (j, out) in next.iter_mut().enumerate() {
                let row = &layer.weights[j * layer.in_dim..(j + 1) * layer.in_dim];
                *out = layer.activation.apply(dot(row, &cur) + layer.biases[j]);
            }
            cur = next;
        }
        for v in cur.iter_mut() {
            *v *= self.output_scale;
        }
        cur
    }

    pub fn try_forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim(),
                got: input.len(),
            });
        }
        Ok(self.forward(input))
    }

    /// Batched forward pass recording pre- and post-activations for a later
    /// backward pass. `inputs` is row-major `n x in_dim`.
    pub fn forward_batch(&self, inputs: &[f64], cache: &mut BatchCache) -> Result<()> {
        let in_dim = self.in_dim();
        if in_dim == 0 || inputs.len() % in_dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: in_dim,
                got: inputs.len(),
            });
        }
        let n = inputs.len() / in_dim;
        cache.prepare(self, n);
        cache.input.clear();
        cache.input.extend_from_slice(inputs);

        for (l, layer) in self.layers.iter().enumerate() {
            let (x, pre_buf, post_buf) = cache.layer_io(l);
            layer_affine(layer, x, n, pre_buf);
            for (pre, post) in pre_buf.iter().zip(post_buf.iter_mut()) {
                *post = layer.activation.apply(*pre);
            }
        }

        cache.output.clear();
        if let Some(last) = cache.post.last() {
            cache
                .output
                .extend(last.iter().map(|v| v * self.output_scale));
        }
        Ok(())
    }

    /// Batched forward pass without caching, for target networks.
    pub fn forward_batch_into(
        &self,
        inputs: &[f64],
        out: &mut Vec<f64>,
        scratch: &mut ForwardScratch,
    ) -> Result<()> {
        let in_dim = self.in_dim();
        if in_dim == 0 || inputs.len() % in_dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: in_dim,
                got: inputs.len(),
            });
        }
        let n = inputs.len() / in_dim;
        let mut src = 0usize;
        for (l, layer) in self.layers.iter().enumerate() {
            let [a, b] = &mut scratch.bufs;
            let (x, dst, dst_index): (&[f64], &mut Vec<f64>, usize) = if l == 0 {
                (inputs, a, 0)
            } else if src == 0 {
                (a, b, 1)
            } else {
                (b, a, 0)
            };
            if dst.len() != n * layer.out_dim {
                dst.clear();
                dst.resize(n * layer.out_dim, 0.0);
            }
            layer_affine(layer, x, n, dst);
            for v in dst.iter_mut() {
                *v = layer.activation.apply(*v);
            }
            src = dst_index;
        }
        out.clear();
        out.extend(
            scratch.bufs[src]
                .iter()
                .map(|v| v * self.output_scale),
        );
        Ok(())
    }

    /// Exact reverse-mode gradients for the batch recorded in `cache`.
    ///
    /// `upstream` is `dL/d(output)` for the scaled output, row-major
    /// `n x out_dim`. Parameter gradients are written (not accumulated) into
    /// `grads` when given; when `dinput` is given it receives
    /// `dL/d(input)`. Passing `grads: None` skips the parameter work, which
    /// is all the actor update needs from the critic.
    pub fn backward_batch(
        &self,
        cache: &BatchCache,
        upstream: &[f64],
        mut grads: Option<&mut Gradients>,
        mut dinput: Option<&mut Vec<f64>>,
    ) -> Result<()> {
        let n = cache.n;
        if cache.layer_dims != layer_dims(self) {
            return Err(Error::ArchitectureMismatch(
                "forward cache does not match this network".into(),
            ));
        }
        if upstream.len() != n * self.out_dim() {
            return Err(Error::DimensionMismatch {
                expected: n * self.out_dim(),
                got: upstream.len(),
            });
        }
        if let Some(g) = grads.as_deref_mut() {
            g.prepare(self);
        }

        // delta at the last layer: dL/d(post) * act'(pre), with the output
        // scale folded in
        let mut delta: Vec<f64> = Vec::with_capacity(upstream.len());
        {
            let last = self.layers.len() - 1;
            let layer = &self.layers[last];
            let pre = &cache.pre[last];
            let post = &cache.post[last];
            delta.extend(upstream.iter().zip(pre.iter().zip(post.iter())).map(
                |(u, (z, y))| u * self.output_scale * layer.activation.derivative(*z, *y),
            ));
        }

        let mut delta_prev: Vec<f64> = Vec::new();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let x = if l == 0 {
                &cache.input[..]
            } else {
                &cache.post[l - 1][..]
            };
            if let Some(g) = grads.as_deref_mut() {
                let dw = &mut g.dw[l];
                let db = &mut g.db[l];
                for i in 0..n {
                    let drow = &delta[i * layer.out_dim..(i + 1) * layer.out_dim];
                    let xi = &x[i * layer.in_dim..(i + 1) * layer.in_dim];
                    for (j, dj) in drow.iter().enumerate() {
                        if *dj != 0.0 {
                            axpy(
                                &mut dw[j * layer.in_dim..(j + 1) * layer.in_dim],
                                *dj,
                                xi,
                            );
                        }
                        db[j] += dj;
                    }
                }
            }

            let want_dinput = l > 0 || dinput.is_some();
            if want_dinput {
                delta_prev.clear();
                delta_prev.resize(n * layer.in_dim, 0.0);
                for i in 0..n {
                    let drow = &delta[i * layer.out_dim..(i + 1) * layer.out_dim];
                    let target = &mut delta_prev[i * layer.in_dim..(i + 1) * layer.in_dim];
                    for (j, dj) in drow.iter().enumerate() {
                        if *dj != 0.0 {
                            axpy(
                                target,
                                *dj,
                                &layer.weights[j * layer.in_dim..(j + 1) * layer.in_dim],
                            );
                        }
                    }
                }
                if l > 0 {
                    // fold in the previous layer's activation derivative
                    let prev = &self.layers[l - 1];
                    let pre = &cache.pre[l - 1];
                    let post = &cache.post[l - 1];
                    for ((d, z), y) in delta_prev.iter_mut().zip(pre.iter()).zip(post.iter()) {
                        *d *= prev.activation.derivative(*z, *y);
                    }
                    std::mem::swap(&mut delta, &mut delta_prev);
                } else if let Some(di) = dinput.as_deref_mut() {
                    di.clear();
                    di.extend_from_slice(&delta_prev);
                }
            }
        }
        Ok(())
    }
}

fn layer_dims(mlp: &Mlp) -> Vec<(usize, usize)> {
    mlp.layers.iter().map(|l| (l.in_dim, l.out_dim)).collect()
}

/// Ping-pong activation buffers for cache-free forward passes.
#[derive(Debug, Clone, Default)]
pub struct ForwardScratch {
    bufs: [Vec<f64>; 2],
}

/// Reusable forward-pass storage for one network shape.
#[derive(Debug, Clone, Default)]
pub struct BatchCache {
    n: usize,
    layer_dims: Vec<(usize, usize)>,
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl BatchCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, mlp: &Mlp, n: usize) {
        let dims = layer_dims(mlp);
        if self.n == n && self.layer_dims == dims {
            // buffers already have the right shape and every element is
            // overwritten by the forward pass
            return;
        }
        self.n = n;
        self.layer_dims = dims;
        self.pre.resize(mlp.layers.len(), Vec::new());
        self.post.resize(mlp.layers.len(), Vec::new());
        for (buf, layer) in self.pre.iter_mut().zip(mlp.layers.iter()) {
            buf.clear();
            buf.resize(n * layer.out_dim, 0.0);
        }
        for (buf, layer) in self.post.iter_mut().zip(mlp.layers.iter()) {
            buf.clear();
            buf.resize(n * layer.out_dim, 0.0);
        }
    }

    /// Split borrows: the input to layer `l` (raw inputs or the previous
    /// layer's post-activations), plus this layer's pre and post buffers.
    fn layer_io(&mut self, l: usize) -> (&[f64], &mut [f64], &mut [f64]) {
        let (before, rest) = self.post.split_at_mut(l);
        let x: &[f64] = if l == 0 { &self.input } else { &before[l - 1] };
        (x, &mut self.pre[l], &mut rest[0])
    }

    pub fn batch_len(&self) -> usize {
        self.n
    }

    /// Scaled network outputs for the cached batch, row-major.
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

/// Parameter gradients mirroring an [`Mlp`]'s layer shapes.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    pub dw: Vec<Vec<f64>>,
    pub db: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, mlp: &Mlp) {
        self.dw.resize(mlp.layers.len(), Vec::new());
        self.db.resize(mlp.layers.len(), Vec::new());
        for (buf, layer) in self.dw.iter_mut().zip(mlp.layers.iter()) {
            buf.clear();
            buf.resize(layer.in_dim * layer.out_dim, 0.0);
        }
        for (buf, layer) in self.db.iter_mut().zip(mlp.layers.iter()) {
            buf.clear();
            buf.resize(layer.out_dim, 0.0);
        }
    }
}

/// Adam optimizer state: first/second moment accumulators matching the
/// network's parameter shapes plus the bias-correction step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(mlp: &Mlp, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m_w: mlp.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            v_w: mlp.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            m_b: mlp.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
            v_b: mlp.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }
}

#[inline]
fn adam_update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr_t: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    for (((p, g), mi), vi) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *mi = beta1 * *mi + (1.0 - beta1) * g;
        *vi = beta2 * *vi + (1.0 - beta2) * g * g;
        *p -= lr_t * *mi / (vi.sqrt() + eps);
    }
}

/// One Adam step with bias correction folded into the step size.
pub fn adam_step(mlp: &mut Mlp, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if grads.dw.len() != mlp.layers.len()
        || mlp
            .layers
            .iter()
            .zip(grads.dw.iter().zip(grads.db.iter()))
            .any(|(l, (dw, db))| dw.len() != l.weights.len() || db.len() != l.biases.len())
    {
        return Err(Error::ArchitectureMismatch(
            "gradient shapes do not match network".into(),
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - state.beta1.powi(t);
    let bias2 = 1.0 - state.beta2.powi(t);
    let lr_t = state.lr * bias2.sqrt() / bias1;
    for (l, layer) in mlp.layers.iter_mut().enumerate() {
        adam_update_slice(
            &mut layer.weights,
            &grads.dw[l],
            &mut state.m_w[l],
            &mut state.v_w[l],
            lr_t,
            state.beta1,
            state.beta2,
            state.eps,
        );
        adam_update_slice(
            &mut layer.biases,
            &grads.db[l],
            &mut state.m_b[l],
            &mut state.v_b[l],
            lr_t,
            state.beta1,
            state.beta2,
            state.eps,
        );
    }
    Ok(())
}

/// Polyak soft update: `target <- (1 - tau) * target + tau * online`.
/// `tau = 1` copies the online network; `tau = 0` leaves the target alone.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<()> {
    if !target.same_architecture(online) {
        return Err(Error::ArchitectureMismatch(
            "soft update requires identical layer shapes".into(),
        ));
    }
    for (tl, ol) in target.layers.iter_mut().zip(online.layers.iter()) {
        for (t, o) in tl.weights.iter_mut().zip(ol.weights.iter()) {
            *t = (1.0 - tau) * *t + tau * o;
        }
        for (t, o) in tl.biases.iter_mut().zip(ol.biases.iter()) {
            *t = (1.0 - tau) * *t + tau * o;
        }
    }
    Ok(())
}

/// Ornstein-Uhlenbeck exploration noise with zero mean:
/// `eps <- eps + theta * (0 - eps) * dt + sigma * sqrt(dt) * z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuNoise {
    pub sigma: f64,
    pub theta: f64,
    pub dt: f64,
    state: Vec2,
}

impl OuNoise {
    pub fn new(sigma: f64, theta: f64, dt: f64) -> Self {
        Self {
            sigma,
            theta,
            dt,
            state: [0.0; 2],
        }
    }

    pub fn reset(&mut self) {
        self.state = [0.0; 2];
    }

    pub fn state(&self) -> Vec2 {
        self.state
    }

    pub fn sample(&mut self, rng: &mut impl Rng) -> Vec2 {
        let scale = self.sigma * self.dt.sqrt();
        for eps in self.state.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *eps += self.theta * (0.0 - *eps) * self.dt + scale * z;
        }
        self.state
    }
}
