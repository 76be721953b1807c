//! Analytic gradients against central finite differences of the forward loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gat::{Activation, GraphFeatures, ModelConfig, SiameseModel, NUM_HEADS};

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

/// Sizes of the random toy problems.
#[derive(Debug, Clone, Copy)]
pub struct ToySizes {
    /// Maximum nodes per graph, centre included.
    pub max_nodes: usize,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
}

impl Default for ToySizes {
    fn default() -> Self {
        ToySizes {
            max_nodes: 8,
            input_dim: 16,
            hidden_dim: 8,
            output_dim: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockReport {
    pub name: String,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub seed: u64,
    pub blocks: Vec<BlockReport>,
}

impl CheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_relative_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_relative_error() < tolerance
    }
}

/// A random graph with `2..=max_nodes` nodes, neighbours spread over the
/// subgraphs so that some heads stay empty.
pub fn random_features(
    rng: &mut impl Rng,
    input_dim: usize,
    max_nodes: usize,
) -> GraphFeatures<f64> {
    let vector = |rng: &mut dyn rand::RngCore| -> Vec<f64> {
        (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    };
    let mut features = GraphFeatures::isolated(vector(rng));
    let neighbors = rng.gen_range(1..max_nodes.max(2));
    for _ in 0..neighbors {
        let k = rng.gen_range(0..NUM_HEADS);
        let v = vector(rng);
        features.neighbors[k].push(v);
    }
    features
}

/// Model, left graph, right graph and label.
pub type ToyProblem = (
    SiameseModel<f64>,
    GraphFeatures<f64>,
    GraphFeatures<f64>,
    f64,
);

pub fn random_problem(seed: u64, sizes: ToySizes) -> Result<ToyProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let activation = match rng.gen_range(0..3) {
        0 => Activation::Elu,
        1 => Activation::Tanh,
        _ => Activation::Sigmoid,
    };
    let config = ModelConfig {
        input_dim: sizes.input_dim,
        hidden_dim: sizes.hidden_dim,
        output_dim: sizes.output_dim,
        leaky_slope: 0.2,
        activation,
    };
    let model = SiameseModel::init(config, rng.gen())?;
    let left = random_features(&mut rng, sizes.input_dim, sizes.max_nodes);
    let right = random_features(&mut rng, sizes.input_dim, sizes.max_nodes);
    let label = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
    Ok((model, left, right, label))
}

/// Per-block error `|g_analytic - g_numeric|_2 / max(|g_analytic|_2, |g_numeric|_2)`,
/// taken as 0 when both norms vanish.
pub fn check_gradients(
    model: &SiameseModel<f64>,
    left: &GraphFeatures<f64>,
    right: &GraphFeatures<f64>,
    label: f64,
    weight_decay: f64,
    epsilon: f64,
    corrupt: bool,
) -> Result<Vec<BlockReport>> {
    let (_, mut analytic) = model.loss_and_gradients(left, right, label, weight_decay)?;
    if corrupt {
        // negative control: flip one entry of the analytic gradient
        if let Some(block) = analytic.blocks_mut().into_iter().last() {
            block[0] = -block[0] + 1.0;
        }
    }
    let names: Vec<String> = model.blocks().into_iter().map(|(n, _)| n).collect();
    let mut probe = model.clone();
    let mut reports = Vec::with_capacity(names.len());
    for (b, name) in names.into_iter().enumerate() {
        let len = probe.blocks()[b].1.len();
        let mut numeric = vec![0.0; len];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let original = probe.blocks()[b].1[i];
            probe.blocks_mut()[b][i] = original + epsilon;
            let plus = probe.loss(left, right, label, weight_decay)?;
            probe.blocks_mut()[b][i] = original - epsilon;
            let minus = probe.loss(left, right, label, weight_decay)?;
            probe.blocks_mut()[b][i] = original;
            *slot = (plus - minus) / (2.0 * epsilon);
        }
        let analytic_block = analytic.blocks()[b].1;
        let diff = numeric
            .iter()
            .zip(analytic_block)
            .map(|(n, a)| (n - a) * (n - a))
            .sum::<f64>()
            .sqrt();
        let scale = l2(&numeric).max(l2(analytic_block));
        let rel = if scale == 0.0 { 0.0 } else { diff / scale };
        reports.push(BlockReport {
            name,
            max_relative_error: rel,
        });
    }
    Ok(reports)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One random toy problem per seed, checked at `epsilon`.
pub fn run_seed(seed: u64, sizes: ToySizes, epsilon: f64, corrupt: bool) -> Result<CheckReport> {
    let (model, left, right, label) = random_problem(seed, sizes)?;
    let blocks = check_gradients(&model, &left, &right, label, 1e-3, epsilon, corrupt)?;
    Ok(CheckReport { seed, blocks })
}
