//! Heterogeneous multi-head graph attention in a Siamese pair.
//!
//! One attention head per subgraph kind. Head `k` attends from the centre
//! class over the members of subgraph `k`:
//!
//! ```text
//! z_i = W h_i,  z_j = W h_j
//! e_j = LeakyReLU(a[..F'] . z_i + a[F'..] . z_j)
//! alpha = softmax(e)
//! out_k = sigma(sum_j alpha_j z_j)          (zero vector if subgraph k is empty)
//! ```
//!
//! The five head outputs are concatenated behind the centre embedding and
//! projected by a linear dense layer. Two encodings are compared by cosine.
//! All gradients are derived by hand for exactly this architecture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhood::{NeighborhoodGraph, SubgraphKind};
use crate::ontology::EntityId;
use crate::scalar::{axpy, dot, norm, Scalar};

/// Number of attention heads, one per subgraph kind.
pub const NUM_HEADS: usize = 5;

const COSINE_EPS: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch(data.len(), rows * cols));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `self^T y`
    pub fn matvec_t(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (r, &yr) in y.iter().enumerate() {
            axpy(&mut out, yr, self.row(r));
        }
        out
    }

    /// `self += u v^T`
    pub fn add_outer(&mut self, u: &[T], v: &[T]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        let cols = self.cols;
        for (r, &ur) in u.iter().enumerate() {
            if ur != T::zero() {
                axpy(&mut self.data[r * cols..(r + 1) * cols], ur, v);
            }
        }
    }
}

/// Nonlinearity applied to each aggregated head output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Elu,
    Identity,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Elu => {
                if x > T::zero() {
                    x
                } else {
                    x.exp() - T::one()
                }
            }
            Activation::Identity => x,
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative at pre-activation `x` with output `y = apply(x)`.
    fn derivative<T: Scalar>(self, x: T, y: T) -> T {
        match self {
            Activation::Elu => {
                if x > T::zero() {
                    T::one()
                } else {
                    y + T::one()
                }
            }
            Activation::Identity => T::one(),
            Activation::Sigmoid => y * (T::one() - y),
            Activation::Tanh => T::one() - y * y,
        }
    }
}

fn leaky_relu<T: Scalar>(x: T, slope: T) -> T {
    if x > T::zero() {
        x
    } else {
        slope * x
    }
}

/// Softmax with the maximum subtracted before exponentiation.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits
        .iter()
        .copied()
        .fold(T::neg_infinity(), |m, x| if x > m { x } else { m });
    let exps: Vec<T> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionHead<T> {
    /// Shared linear transform, `F' x F`.
    pub w: Matrix<T>,
    /// Attention vector of length `2F'`: centre half then neighbour half.
    pub a: Vec<T>,
    pub leaky_slope: T,
}

struct HeadTrace<T> {
    z_centre: Vec<T>,
    z_neighbors: Vec<Vec<T>>,
    scores: Vec<T>,
    alpha: Vec<T>,
    pre_activation: Vec<T>,
    output: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient<T> {
    pub w: Matrix<T>,
    pub a: Vec<T>,
}

impl<T: Scalar> AttentionHead<T> {
    pub fn new(w: Matrix<T>, a: Vec<T>, leaky_slope: T) -> Result<Self> {
        if a.len() != 2 * w.rows() {
            return Err(Error::LengthMismatch(a.len(), 2 * w.rows()));
        }
        Ok(AttentionHead { w, a, leaky_slope })
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    fn check_inputs(&self, centre: &[T], neighbors: &[Vec<T>]) -> Result<()> {
        let f = self.input_dim();
        if centre.len() != f {
            return Err(Error::LengthMismatch(centre.len(), f));
        }
        if let Some(n) = neighbors.iter().find(|n| n.len() != f) {
            return Err(Error::LengthMismatch(n.len(), f));
        }
        Ok(())
    }

    fn trace(&self, centre: &[T], neighbors: &[Vec<T>], activation: Activation) -> HeadTrace<T> {
        let fp = self.output_dim();
        let z_centre = self.w.matvec(centre);
        let z_neighbors: Vec<Vec<T>> = neighbors.iter().map(|h| self.w.matvec(h)).collect();
        let centre_term = dot(&self.a[..fp], &z_centre);
        let scores: Vec<T> = z_neighbors
            .iter()
            .map(|z| centre_term + dot(&self.a[fp..], z))
            .collect();
        let logits: Vec<T> = scores
            .iter()
            .map(|&s| leaky_relu(s, self.leaky_slope))
            .collect();
        let alpha = softmax(&logits);
        let mut pre_activation = vec![T::zero(); fp];
        for (z, &al) in z_neighbors.iter().zip(&alpha) {
            axpy(&mut pre_activation, al, z);
        }
        let output = pre_activation
            .iter()
            .map(|&x| activation.apply(x))
            .collect();
        HeadTrace {
            z_centre,
            z_neighbors,
            scores,
            alpha,
            pre_activation,
            output,
        }
    }

    /// Softmax-normalised attention of the centre over each neighbour.
    pub fn attention_coefficients(&self, centre: &[T], neighbors: &[Vec<T>]) -> Result<Vec<T>> {
        if neighbors.is_empty() {
            return Err(Error::EmptyNeighbors);
        }
        self.check_inputs(centre, neighbors)?;
        Ok(self.trace(centre, neighbors, Activation::Identity).alpha)
    }

    /// `sigma(sum_j alpha_j W h_j)`; the zero vector when there are no neighbours.
    pub fn output(
        &self,
        centre: &[T],
        neighbors: &[Vec<T>],
        activation: Activation,
    ) -> Result<Vec<T>> {
        self.check_inputs(centre, neighbors)?;
        if neighbors.is_empty() {
            return Ok(vec![T::zero(); self.output_dim()]);
        }
        Ok(self.trace(centre, neighbors, activation).output)
    }

    fn backward(
        &self,
        trace: &HeadTrace<T>,
        centre: &[T],
        neighbors: &[Vec<T>],
        grad_output: &[T],
        activation: Activation,
        grad: &mut HeadGradient<T>,
    ) {
        let fp = self.output_dim();
        let grad_pre: Vec<T> = grad_output
            .iter()
            .zip(trace.pre_activation.iter().zip(&trace.output))
            .map(|(&g, (&x, &y))| g * activation.derivative(x, y))
            .collect();

        // through alpha-weighted sum
        let grad_alpha: Vec<T> = trace
            .z_neighbors
            .iter()
            .map(|z| dot(&grad_pre, z))
            .collect();
        let weighted: T = trace
            .alpha
            .iter()
            .zip(&grad_alpha)
            .map(|(&a, &g)| a * g)
            .sum();

        let mut grad_z_centre = vec![T::zero(); fp];
        for j in 0..neighbors.len() {
            let alpha = trace.alpha[j];
            // softmax then LeakyReLU
            let mut grad_score = alpha * (grad_alpha[j] - weighted);
            if trace.scores[j] <= T::zero() {
                grad_score = grad_score * self.leaky_slope;
            }
            let z_j = &trace.z_neighbors[j];
            axpy(&mut grad.a[..fp], grad_score, &trace.z_centre);
            axpy(&mut grad.a[fp..], grad_score, z_j);
            axpy(&mut grad_z_centre, grad_score, &self.a[..fp]);

            let mut grad_z_j: Vec<T> = grad_pre.iter().map(|&g| g * alpha).collect();
            axpy(&mut grad_z_j, grad_score, &self.a[fp..]);
            grad.w.add_outer(&grad_z_j, &neighbors[j]);
        }
        grad.w.add_outer(&grad_z_centre, centre);
    }
}

/// Centre feature vector plus the neighbour feature vectors of each subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFeatures<T> {
    pub centre: Vec<T>,
    pub neighbors: [Vec<Vec<T>>; NUM_HEADS],
}

impl<T: Scalar> GraphFeatures<T> {
    pub fn isolated(centre: Vec<T>) -> Self {
        GraphFeatures {
            centre,
            neighbors: Default::default(),
        }
    }

    /// Looks up a feature vector for every subgraph member.
    pub fn gather<F>(graph: &NeighborhoodGraph, centre: Vec<T>, mut lookup: F) -> Result<Self>
    where
        F: FnMut(&EntityId) -> Result<Vec<T>>,
    {
        let mut neighbors: [Vec<Vec<T>>; NUM_HEADS] = Default::default();
        for kind in SubgraphKind::ALL {
            neighbors[kind.index()] = graph
                .members(kind)
                .iter()
                .map(&mut lookup)
                .collect::<Result<_>>()?;
        }
        Ok(GraphFeatures { centre, neighbors })
    }

    /// Number of feature vectors including the centre.
    pub fn node_count(&self) -> usize {
        1 + self.neighbors.iter().map(Vec::len).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatLayer<T> {
    pub heads: Vec<AttentionHead<T>>,
    pub activation: Activation,
}

impl<T: Scalar> GatLayer<T> {
    pub fn new(heads: Vec<AttentionHead<T>>, activation: Activation) -> Result<Self> {
        if heads.len() != NUM_HEADS {
            return Err(Error::Config(format!(
                "graph attention layer needs {NUM_HEADS} heads, got {}",
                heads.len()
            )));
        }
        let (f, fp) = (heads[0].input_dim(), heads[0].output_dim());
        if heads
            .iter()
            .any(|h| h.input_dim() != f || h.output_dim() != fp)
        {
            return Err(Error::Config(
                "attention heads disagree on dimensions".into(),
            ));
        }
        Ok(GatLayer { heads, activation })
    }

    pub fn output_dim(&self) -> usize {
        NUM_HEADS * self.heads[0].output_dim()
    }

    /// Concatenated head outputs in [`SubgraphKind::ALL`] order.
    pub fn forward(&self, features: &GraphFeatures<T>) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.output_dim());
        for (head, neighbors) in self.heads.iter().zip(&features.neighbors) {
            out.extend(head.output(&features.centre, neighbors, self.activation)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub w: Matrix<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let mut y = self.w.matvec(x);
        axpy(&mut y, T::one(), &self.b);
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Input feature dimension `F`.
    pub input_dim: usize,
    /// Per-head output dimension `F'`.
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub leaky_slope: f64,
    pub activation: Activation,
}

impl ModelConfig {
    pub fn new(input_dim: usize) -> Self {
        ModelConfig {
            input_dim,
            hidden_dim: 64,
            output_dim: 256,
            leaky_slope: 0.2,
            activation: Activation::Elu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::Config("leaky_slope must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn dense_input_dim(&self) -> usize {
        self.input_dim + NUM_HEADS * self.hidden_dim
    }
}

/// Dense input, encoding and per-head traces of one forward pass.
type EncodeTrace<T> = (Vec<T>, Vec<T>, Vec<Option<HeadTrace<T>>>);

/// Weight-shared twin encoder. Both sides of a pair run through the same
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SiameseModel<T> {
    pub config: ModelConfig,
    pub gat: GatLayer<T>,
    pub dense: DenseLayer<T>,
}

/// Gradient of every trainable parameter, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub heads: Vec<HeadGradient<T>>,
    pub dense_w: Matrix<T>,
    pub dense_b: Vec<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros(config: &ModelConfig) -> Self {
        Gradients {
            heads: (0..NUM_HEADS)
                .map(|_| HeadGradient {
                    w: Matrix::zeros(config.hidden_dim, config.input_dim),
                    a: vec![T::zero(); 2 * config.hidden_dim],
                })
                .collect(),
            dense_w: Matrix::zeros(config.output_dim, config.dense_input_dim()),
            dense_b: vec![T::zero(); config.output_dim],
        }
    }

    /// Blocks in the same order as [`SiameseModel::blocks`].
    pub fn blocks(&self) -> Vec<(String, &[T])> {
        let mut out = Vec::new();
        for (k, h) in self.heads.iter().enumerate() {
            out.push((format!("head{k}.W"), h.w.as_slice()));
            out.push((format!("head{k}.a"), h.a.as_slice()));
        }
        out.push(("dense.W".into(), self.dense_w.as_slice()));
        out.push(("dense.b".into(), self.dense_b.as_slice()));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for h in self.heads.iter_mut() {
            out.push(h.w.as_mut_slice());
            out.push(h.a.as_mut_slice());
        }
        out.push(self.dense_w.as_mut_slice());
        out.push(self.dense_b.as_mut_slice());
        out
    }

    /// `self += scale * other`
    pub fn accumulate(&mut self, scale: T, other: &Gradients<T>) {
        let theirs: Vec<&[T]> = other.blocks().into_iter().map(|(_, b)| b).collect();
        for (mine, theirs) in self.blocks_mut().into_iter().zip(theirs) {
            axpy(mine, scale, theirs);
        }
    }
}

impl<T: Scalar> SiameseModel<T> {
    /// Glorot-uniform weights from a seeded ChaCha8 stream, zero dense bias.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |limit: f64| T::of(rng.gen_range(-limit..limit));
        let (f, fp, d) = (config.input_dim, config.hidden_dim, config.output_dim);
        let w_limit = (6.0 / (f + fp) as f64).sqrt();
        let a_limit = (6.0 / (2 * fp + 1) as f64).sqrt();
        let mut heads = Vec::with_capacity(NUM_HEADS);
        for _ in 0..NUM_HEADS {
            let w = Matrix::from_fn(fp, f, |_, _| uniform(w_limit));
            let a = (0..2 * fp).map(|_| uniform(a_limit)).collect();
            heads.push(AttentionHead::new(w, a, T::of(config.leaky_slope))?);
        }
        let dense_in = config.dense_input_dim();
        let dense_limit = (6.0 / (dense_in + d) as f64).sqrt();
        let dense = DenseLayer {
            w: Matrix::from_fn(d, dense_in, |_, _| uniform(dense_limit)),
            b: vec![T::zero(); d],
        };
        Ok(SiameseModel {
            config,
            gat: GatLayer::new(heads, config.activation)?,
            dense,
        })
    }

    /// Assembles a model from explicit parameters, checking every shape.
    pub fn from_parts(config: ModelConfig, gat: GatLayer<T>, dense: DenseLayer<T>) -> Result<Self> {
        config.validate()?;
        for h in &gat.heads {
            if h.input_dim() != config.input_dim || h.output_dim() != config.hidden_dim {
                return Err(Error::Config(
                    "attention head shape disagrees with config".into(),
                ));
            }
        }
        if dense.w.rows() != config.output_dim
            || dense.w.cols() != config.dense_input_dim()
            || dense.b.len() != config.output_dim
        {
            return Err(Error::Config(
                "dense layer shape disagrees with config".into(),
            ));
        }
        Ok(SiameseModel { config, gat, dense })
    }

    pub fn blocks(&self) -> Vec<(String, &[T])> {
        let mut out = Vec::new();
        for (k, h) in self.gat.heads.iter().enumerate() {
            out.push((format!("head{k}.W"), h.w.as_slice()));
            out.push((format!("head{k}.a"), h.a.as_slice()));
        }
        out.push(("dense.W".into(), self.dense.w.as_slice()));
        out.push(("dense.b".into(), self.dense.b.as_slice()));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for h in self.gat.heads.iter_mut() {
            out.push(h.w.as_mut_slice());
            out.push(h.a.as_mut_slice());
        }
        out.push(self.dense.w.as_mut_slice());
        out.push(self.dense.b.as_mut_slice());
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    /// `sum ||theta||^2` over every parameter.
    pub fn squared_norm(&self) -> T {
        self.blocks()
            .iter()
            .map(|(_, b)| dot(b, b))
            .fold(T::zero(), |a, x| a + x)
    }

    fn check_features(&self, features: &GraphFeatures<T>) -> Result<()> {
        if features.centre.len() != self.config.input_dim {
            return Err(Error::LengthMismatch(
                features.centre.len(),
                self.config.input_dim,
            ));
        }
        Ok(())
    }

    /// `W_out [centre || gat(features)] + b`, no output nonlinearity.
    pub fn encode(&self, features: &GraphFeatures<T>) -> Result<Vec<T>> {
        self.check_features(features)?;
        let mut x = features.centre.clone();
        x.extend(self.gat.forward(features)?);
        Ok(self.dense.forward(&x))
    }

    fn encode_traced(&self, features: &GraphFeatures<T>) -> Result<EncodeTrace<T>> {
        self.check_features(features)?;
        let mut x = features.centre.clone();
        let mut traces = Vec::with_capacity(NUM_HEADS);
        for (head, neighbors) in self.gat.heads.iter().zip(&features.neighbors) {
            head.check_inputs(&features.centre, neighbors)?;
            if neighbors.is_empty() {
                x.extend(std::iter::repeat_n(T::zero(), head.output_dim()));
                traces.push(None);
            } else {
                let t = head.trace(&features.centre, neighbors, self.gat.activation);
                x.extend_from_slice(&t.output);
                traces.push(Some(t));
            }
        }
        let y = self.dense.forward(&x);
        Ok((x, y, traces))
    }

    fn encode_backward(
        &self,
        features: &GraphFeatures<T>,
        x: &[T],
        traces: &[Option<HeadTrace<T>>],
        grad_y: &[T],
        grad: &mut Gradients<T>,
    ) {
        grad.dense_w.add_outer(grad_y, x);
        axpy(&mut grad.dense_b, T::one(), grad_y);
        let grad_x = self.dense.w.matvec_t(grad_y);
        let fp = self.config.hidden_dim;
        let offset = self.config.input_dim;
        for (k, trace) in traces.iter().enumerate() {
            if let Some(trace) = trace {
                let g = &grad_x[offset + k * fp..offset + (k + 1) * fp];
                self.gat.heads[k].backward(
                    trace,
                    &features.centre,
                    &features.neighbors[k],
                    g,
                    self.gat.activation,
                    &mut grad.heads[k],
                );
            }
        }
    }

    /// `(cos(enc(left), enc(right)) - label)^2 + weight_decay * ||theta||^2`
    pub fn loss(
        &self,
        left: &GraphFeatures<T>,
        right: &GraphFeatures<T>,
        label: T,
        weight_decay: T,
    ) -> Result<T> {
        let u = self.encode(left)?;
        let v = self.encode(right)?;
        let diff = raw_cosine(&u, &v) - label;
        Ok(diff * diff + weight_decay * self.squared_norm())
    }

    /// Loss and its exact gradient w.r.t. every parameter, summed over both
    /// weight-shared branches.
    pub fn loss_and_gradients(
        &self,
        left: &GraphFeatures<T>,
        right: &GraphFeatures<T>,
        label: T,
        weight_decay: T,
    ) -> Result<(T, Gradients<T>)> {
        let (xu, u, tu) = self.encode_traced(left)?;
        let (xv, v, tv) = self.encode_traced(right)?;
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("encoding".into()));
        }
        let (c, grad_u, grad_v) = cosine_with_gradients(&u, &v);
        let diff = c - label;
        let loss = diff * diff + weight_decay * self.squared_norm();
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        let grad_c = T::of(2.0) * diff;
        let scale = |g: Vec<T>| g.into_iter().map(|x| x * grad_c).collect::<Vec<T>>();
        let (grad_u, grad_v) = (scale(grad_u), scale(grad_v));

        let mut grad = Gradients::zeros(&self.config);
        self.encode_backward(left, &xu, &tu, &grad_u, &mut grad);
        self.encode_backward(right, &xv, &tv, &grad_v, &mut grad);

        let decay = T::of(2.0) * weight_decay;
        let params: Vec<&[T]> = self.blocks().into_iter().map(|(_, b)| b).collect();
        for (g, p) in grad.blocks_mut().into_iter().zip(params) {
            axpy(g, decay, p);
        }
        if let Some((name, _)) = grad
            .blocks()
            .into_iter()
            .find(|(_, b)| b.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::NonFinite(name));
        }
        Ok((loss, grad))
    }

    /// `theta -= learning_rate * grad`
    pub fn apply_gradients(&mut self, learning_rate: T, grad: &Gradients<T>) {
        let gs: Vec<&[T]> = grad.blocks().into_iter().map(|(_, b)| b).collect();
        for (p, g) in self.blocks_mut().into_iter().zip(gs) {
            axpy(p, -learning_rate, g);
        }
    }
}

/// `u.v / (|u| |v|)`, or 0 when either norm is below `1e-12`.
pub fn cosine_similarity<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    Ok(raw_cosine(u, v).max(-T::one()).min(T::one()))
}

fn raw_cosine<T: Scalar>(u: &[T], v: &[T]) -> T {
    let (nu, nv) = (norm(u), norm(v));
    let eps = T::of(COSINE_EPS);
    if nu < eps || nv < eps {
        return T::zero();
    }
    dot(u, v) / (nu * nv)
}

fn cosine_with_gradients<T: Scalar>(u: &[T], v: &[T]) -> (T, Vec<T>, Vec<T>) {
    let (nu, nv) = (norm(u), norm(v));
    let eps = T::of(COSINE_EPS);
    if nu < eps || nv < eps {
        return (
            T::zero(),
            vec![T::zero(); u.len()],
            vec![T::zero(); v.len()],
        );
    }
    let c = dot(u, v) / (nu * nv);
    let inv = T::one() / (nu * nv);
    let grad_u = u
        .iter()
        .zip(v)
        .map(|(&ui, &vi)| vi * inv - c * ui / (nu * nu))
        .collect();
    let grad_v = u
        .iter()
        .zip(v)
        .map(|(&ui, &vi)| ui * inv - c * vi / (nv * nv))
        .collect();
    (c, grad_u, grad_v)
}
