//! Directed graph convolutional actor and critic with hand-written
//! backpropagation.
//!
//! Each layer sums three branches and rectifies:
//!
//! ```text
//! H' = relu(A_out H W_out + A_in H W_in + H W_self + 1 b^T)
//! ```
//!
//! where `A_out` (`A_in`) is the row-normalized indicator matrix of
//! out-neighbours (in-neighbours) over both edge classes. Rows for nodes
//! without such neighbours stay zero. The actor maps every node embedding to
//! a logit and takes a softmax over the valid actions only; the critic
//! mean-pools its embeddings into a scalar value.

use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pattern_graph::PatternGraph;
use crate::rl_env::MaskPolicy;
use crate::zero_forcing::ColorState;

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("policy mask is empty")]
    EmptyMask,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureOptions {
    /// Append normalized in-degree and out-degree channels.
    pub degree_channels: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            degree_channels: true,
        }
    }
}

impl FeatureOptions {
    pub fn width(&self) -> usize {
        if self.degree_channels {
            4
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub features: FeatureOptions,
    /// Action mask the policy was trained under.
    pub mask: MaskPolicy,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            hidden: vec![32, 32],
            features: FeatureOptions::default(),
            mask: MaskPolicy::default(),
        }
    }
}

impl Architecture {
    pub fn embedding_width(&self) -> usize {
        self.hidden.last().copied().unwrap_or_else(|| self.features.width())
    }
}

/// Node feature matrix: one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatures(pub Array2<f64>);

/// Row `i` is `(1, 0)` for a white node and `(0, 1)` for a black one,
/// optionally followed by in- and out-degree each divided by
/// `max(1, largest such degree)`.
pub fn features_from_state(
    g: &PatternGraph,
    colors: &ColorState,
    opts: FeatureOptions,
) -> NodeFeatures {
    let n = g.node_count();
    let mut u = Array2::zeros((n, opts.width()));
    for v in 0..n {
        if colors.is_black(v) {
            u[[v, 1]] = 1.0;
        } else {
            u[[v, 0]] = 1.0;
        }
    }
    if opts.degree_channels {
        let deg = g.degrees();
        let max_in = deg.iter().map(|d| d.in_degree).max().unwrap_or(0).max(1) as f64;
        let max_out = deg.iter().map(|d| d.out_degree).max().unwrap_or(0).max(1) as f64;
        for (v, d) in deg.iter().enumerate() {
            u[[v, 2]] = d.in_degree as f64 / max_in;
            u[[v, 3]] = d.out_degree as f64 / max_out;
        }
    }
    NodeFeatures(u)
}

/// Row-normalized propagation matrices of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOperator {
    a_out: Array2<f64>,
    a_in: Array2<f64>,
    a_out_t: Array2<f64>,
    a_in_t: Array2<f64>,
}

impl GraphOperator {
    pub fn new(g: &PatternGraph) -> Self {
        let n = g.node_count();
        let mut a_out = Array2::zeros((n, n));
        let mut a_in = Array2::zeros((n, n));
        for v in 0..n {
            let outs = g.out_neighbors(v);
            for &(w, _) in outs {
                a_out[[v, w]] = 1.0 / outs.len() as f64;
            }
            let ins = g.in_neighbors(v);
            for &(w, _) in ins {
                a_in[[v, w]] = 1.0 / ins.len() as f64;
            }
        }
        GraphOperator {
            a_out_t: a_out.t().to_owned(),
            a_in_t: a_in.t().to_owned(),
            a_out,
            a_in,
        }
    }

    pub fn node_count(&self) -> usize {
        self.a_out.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub w_in: Array2<f64>,
    pub w_out: Array2<f64>,
    pub w_self: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerParams {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        LayerParams {
            w_in: Array2::zeros((fan_in, fan_out)),
            w_out: Array2::zeros((fan_in, fan_out)),
            w_self: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(fan_in, fan_out);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for w in [&mut p.w_in, &mut p.w_out, &mut p.w_self] {
            w.mapv_inplace(|_| rng.random_range(-limit..=limit));
        }
        p
    }

    pub fn fan_in(&self) -> usize {
        self.w_self.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.w_self.ncols()
    }
}

#[derive(Debug)]
struct LayerCache {
    input: Array2<f64>,
    agg_out: Array2<f64>,
    agg_in: Array2<f64>,
    pre: Array2<f64>,
}

fn layer_forward(
    h: &Array2<f64>,
    op: &GraphOperator,
    p: &LayerParams,
) -> Result<(Array2<f64>, LayerCache), GnnError> {
    if h.ncols() != p.fan_in() || h.nrows() != op.node_count() {
        return Err(GnnError::Shape(format!(
            "input {}x{} against {} nodes and fan-in {}",
            h.nrows(),
            h.ncols(),
            op.node_count(),
            p.fan_in()
        )));
    }
    let agg_out = op.a_out.dot(h);
    let agg_in = op.a_in.dot(h);
    let pre = agg_out.dot(&p.w_out) + agg_in.dot(&p.w_in) + h.dot(&p.w_self) + &p.bias;
    let out = pre.mapv(|x| x.max(0.0));
    Ok((
        out,
        LayerCache {
            input: h.clone(),
            agg_out,
            agg_in,
            pre,
        },
    ))
}

/// One propagation layer.
pub fn forward_layer(
    h: &Array2<f64>,
    op: &GraphOperator,
    p: &LayerParams,
) -> Result<Array2<f64>, GnnError> {
    layer_forward(h, op, p).map(|(out, _)| out)
}

/// A layer stack followed by a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<LayerParams>,
    pub head_w: Array1<f64>,
    pub head_b: Array1<f64>,
}

impl Network {
    pub fn init(arch: &Architecture, rng: &mut ChaCha8Rng) -> Self {
        let mut layers = Vec::with_capacity(arch.hidden.len());
        let mut width = arch.features.width();
        for &h in &arch.hidden {
            layers.push(LayerParams::glorot(width, h, rng));
            width = h;
        }
        let limit = (6.0 / (width + 1) as f64).sqrt();
        let head_w = Array1::from_shape_fn(width, |_| rng.random_range(-limit..=limit));
        Network {
            layers,
            head_w,
            head_b: Array1::zeros(1),
        }
    }

    pub fn zeros(arch: &Architecture) -> Self {
        let mut layers = Vec::new();
        let mut width = arch.features.width();
        for &h in &arch.hidden {
            layers.push(LayerParams::zeros(width, h));
            width = h;
        }
        Network {
            layers,
            head_w: Array1::zeros(width),
            head_b: Array1::zeros(1),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.scale(0.0);
        z
    }

    /// Named parameter tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (l, p) in self.layers.iter().enumerate() {
            for (name, w) in [("w_in", &p.w_in), ("w_out", &p.w_out), ("w_self", &p.w_self)] {
                out.push((
                    format!("layer{l}.{name}"),
                    w.shape().to_vec(),
                    w.as_slice().expect("standard layout"),
                ));
            }
            out.push((
                format!("layer{l}.bias"),
                p.bias.shape().to_vec(),
                p.bias.as_slice().expect("standard layout"),
            ));
        }
        out.push(("head.w".into(), self.head_w.shape().to_vec(), self.head_w.as_slice().unwrap()));
        out.push(("head.b".into(), vec![1], self.head_b.as_slice().unwrap()));
        out
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for p in &mut self.layers {
            out.push(p.w_in.as_slice_mut().expect("standard layout"));
            out.push(p.w_out.as_slice_mut().expect("standard layout"));
            out.push(p.w_self.as_slice_mut().expect("standard layout"));
            out.push(p.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.head_w.as_slice_mut().unwrap());
        out.push(self.head_b.as_slice_mut().unwrap());
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.2.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().into_iter().flat_map(|t| t.2.to_vec()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut offset = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
    }

    pub fn scale(&mut self, k: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|x| *x *= k);
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Network) {
        let src = other.to_flat();
        let mut offset = 0;
        for s in self.slices_mut() {
            for x in s.iter_mut() {
                *x += alpha * src[offset];
                offset += 1;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.to_flat().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|x| x.is_finite())
    }

    fn trunk(
        &self,
        op: &GraphOperator,
        u: &NodeFeatures,
    ) -> Result<(Array2<f64>, Vec<LayerCache>), GnnError> {
        let mut h = u.0.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for p in &self.layers {
            let (next, cache) = layer_forward(&h, op, p)?;
            caches.push(cache);
            h = next;
        }
        if h.ncols() != self.head_w.len() {
            return Err(GnnError::Shape(format!(
                "embedding width {} against head width {}",
                h.ncols(),
                self.head_w.len()
            )));
        }
        Ok((h, caches))
    }

    /// Final-layer node embeddings.
    pub fn embeddings(&self, op: &GraphOperator, u: &NodeFeatures) -> Result<Array2<f64>, GnnError> {
        self.trunk(op, u).map(|(z, _)| z)
    }

    /// Accumulates the trunk gradient for upstream `d_z` into `grad`.
    fn backprop(&self, op: &GraphOperator, caches: &[LayerCache], mut d_h: Array2<f64>, grad: &mut Network) {
        for (l, (p, c)) in self.layers.iter().zip(caches).enumerate().rev() {
            let mut d_pre = d_h;
            d_pre.zip_mut_with(&c.pre, |d, &x| {
                if x <= 0.0 {
                    *d = 0.0;
                }
            });
            let g = &mut grad.layers[l];
            g.w_out += &c.agg_out.t().dot(&d_pre);
            g.w_in += &c.agg_in.t().dot(&d_pre);
            g.w_self += &c.input.t().dot(&d_pre);
            g.bias += &d_pre.sum_axis(Axis(0));
            if l == 0 {
                break;
            }
            d_h = op.a_out_t.dot(&d_pre.dot(&p.w_out.t()))
                + op.a_in_t.dot(&d_pre.dot(&p.w_in.t()))
                + d_pre.dot(&p.w_self.t());
        }
    }
}

/// Actor (policy) and critic (value) networks. The two share nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub actor: Network,
    pub critic: Network,
}

impl ModelParams {
    /// Glorot-uniform weights and zero biases.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = Network::init(&arch, &mut rng);
        let critic = Network::init(&arch, &mut rng);
        ModelParams { arch, actor, critic }
    }

    pub fn zeros(arch: Architecture) -> Self {
        ModelParams {
            actor: Network::zeros(&arch),
            critic: Network::zeros(&arch),
            arch,
        }
    }

    pub fn features(&self, g: &PatternGraph, colors: &ColorState) -> NodeFeatures {
        features_from_state(g, colors, self.arch.features)
    }

    pub fn save(&self, path: &Path) -> Result<(), GnnError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GnnError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String, GnnError> {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            architecture: self.arch.clone(),
            actor: TensorSet::from_network(&self.actor),
            critic: TensorSet::from_network(&self.critic),
        };
        Ok(serde_json::to_string_pretty(&ck)?)
    }

    pub fn from_json(text: &str) -> Result<Self, GnnError> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(GnnError::Checkpoint(format!("unknown format {:?}", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(GnnError::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        Ok(ModelParams {
            actor: ck.actor.into_network(&ck.architecture, "actor")?,
            critic: ck.critic.into_network(&ck.architecture, "critic")?,
            arch: ck.architecture,
        })
    }
}

const CHECKPOINT_FORMAT: &str = "zforce-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    architecture: Architecture,
    actor: TensorSet,
    critic: TensorSet,
}

#[derive(Debug, Serialize, Deserialize)]
struct Tensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorSet {
    tensors: Vec<Tensor>,
}

impl TensorSet {
    fn from_network(net: &Network) -> Self {
        TensorSet {
            tensors: net
                .tensors()
                .into_iter()
                .map(|(name, shape, data)| Tensor {
                    name,
                    shape,
                    data: data.to_vec(),
                })
                .collect(),
        }
    }

    fn into_network(self, arch: &Architecture, which: &str) -> Result<Network, GnnError> {
        let mut net = Network::zeros(arch);
        let expected = net.tensors();
        if expected.len() != self.tensors.len() {
            return Err(GnnError::Checkpoint(format!(
                "{which}: expected {} tensors, found {}",
                expected.len(),
                self.tensors.len()
            )));
        }
        let mut flat = Vec::with_capacity(net.param_count());
        for ((name, shape, _), t) in expected.iter().zip(&self.tensors) {
            if *name != t.name || *shape != t.shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(GnnError::Checkpoint(format!(
                    "{which}: tensor {} {:?} does not match {} {:?}",
                    t.name, t.shape, name, shape
                )));
            }
            flat.extend_from_slice(&t.data);
        }
        if !flat.iter().all(|x| x.is_finite()) {
            return Err(GnnError::Checkpoint(format!("{which}: non-finite parameter")));
        }
        net.set_flat(&flat);
        Ok(net)
    }
}

fn logits(z: &Array2<f64>, net: &Network) -> Array1<f64> {
    z.dot(&net.head_w) + net.head_b[0]
}

/// Softmax over the nodes in `mask`; every other node gets probability 0.
pub fn masked_softmax(logits: &[f64], mask: &[usize]) -> Result<Vec<f64>, GnnError> {
    if mask.is_empty() {
        return Err(GnnError::EmptyMask);
    }
    let max = mask.iter().map(|&v| logits[v]).fold(f64::NEG_INFINITY, f64::max);
    let mut probs = vec![0.0; logits.len()];
    let mut total = 0.0;
    for &v in mask {
        let e = (logits[v] - max).exp();
        probs[v] = e;
        total += e;
    }
    for &v in mask {
        probs[v] /= total;
    }
    Ok(probs)
}

/// Action distribution over nodes.
pub fn actor_forward(
    op: &GraphOperator,
    u: &NodeFeatures,
    actor: &Network,
    mask: &[usize],
) -> Result<Vec<f64>, GnnError> {
    if mask.is_empty() {
        return Err(GnnError::EmptyMask);
    }
    let z = actor.embeddings(op, u)?;
    masked_softmax(logits(&z, actor).as_slice().unwrap(), mask)
}

/// Logits before masking, mainly for diagnostics.
pub fn actor_logits(op: &GraphOperator, u: &NodeFeatures, actor: &Network) -> Result<Vec<f64>, GnnError> {
    let z = actor.embeddings(op, u)?;
    Ok(logits(&z, actor).to_vec())
}

/// State value from mean-pooled embeddings.
pub fn critic_forward(op: &GraphOperator, u: &NodeFeatures, critic: &Network) -> Result<f64, GnnError> {
    let z = critic.embeddings(op, u)?;
    Ok(pool_value(&z, critic))
}

fn pool_value(z: &Array2<f64>, critic: &Network) -> f64 {
    let n = z.nrows();
    if n == 0 {
        return critic.head_b[0];
    }
    let pooled = z.sum_axis(Axis(0)) / n as f64;
    pooled.dot(&critic.head_w) + critic.head_b[0]
}

/// `seed * ∇ log π(action)` with respect to every actor parameter, plus the
/// log-probability itself. Masked-out nodes contribute nothing.
pub fn actor_log_prob_grad(
    op: &GraphOperator,
    u: &NodeFeatures,
    actor: &Network,
    mask: &[usize],
    action: usize,
    seed: f64,
) -> Result<(f64, Network), GnnError> {
    if !mask.contains(&action) {
        return Err(GnnError::Shape(format!("action {action} is not in the mask")));
    }
    let (z, caches) = actor.trunk(op, u)?;
    let lg = logits(&z, actor);
    let probs = masked_softmax(lg.as_slice().unwrap(), mask)?;
    let log_p = probs[action].ln();

    // d log p_a / d logit_j = [j == a] - p_j on the mask, 0 elsewhere.
    let mut d_logits = Array1::<f64>::zeros(z.nrows());
    for &j in mask {
        d_logits[j] = -probs[j] * seed;
    }
    d_logits[action] += seed;

    let mut grad = actor.zeros_like();
    grad.head_w = z.t().dot(&d_logits);
    grad.head_b[0] = d_logits.sum();
    let d_z = outer(&d_logits, &actor.head_w);
    actor.backprop(op, &caches, d_z, &mut grad);
    Ok((log_p, grad))
}

/// `seed * ∇ V` with respect to every critic parameter, plus `V`.
pub fn critic_value_grad(
    op: &GraphOperator,
    u: &NodeFeatures,
    critic: &Network,
    seed: f64,
) -> Result<(f64, Network), GnnError> {
    let (z, caches) = critic.trunk(op, u)?;
    let value = pool_value(&z, critic);
    let mut grad = critic.zeros_like();
    let n = z.nrows();
    grad.head_b[0] = seed;
    if n > 0 {
        grad.head_w = z.sum_axis(Axis(0)) * (seed / n as f64);
        let row = &critic.head_w * (seed / n as f64);
        let d_z = Array2::from_shape_fn((n, row.len()), |(_, k)| row[k]);
        critic.backprop(op, &caches, d_z, &mut grad);
    }
    Ok((value, grad))
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}
