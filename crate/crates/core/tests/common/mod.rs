#![allow(dead_code)]

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zforce::gnn::{actor_forward, actor_logits, critic_forward, Architecture, FeatureOptions, GraphOperator, ModelParams, Network, NodeFeatures};
use zforce::pattern_graph::{EdgeClass, EdgeClassPolicy, InputSet, PatternGraph};
use zforce::rl_env::MaskPolicy;
use zforce::zero_forcing::ColorState;

pub const FD_STEP: f64 = 1e-4;

/// `|a - f| / max(|a|, |f|)`, zero when both vanish.
pub fn relative_error(a: &[f64], f: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(f).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nf = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nf);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Central differences of `f` over the flat parameters of `net`.
pub fn central_difference(net: &Network, f: impl Fn(&Network) -> f64) -> Vec<f64> {
    let base = net.to_flat();
    let mut probe = net.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut x = base.clone();
        x[i] = base[i] + FD_STEP;
        probe.set_flat(&x);
        let up = f(&probe);
        x[i] = base[i] - FD_STEP;
        probe.set_flat(&x);
        let down = f(&probe);
        out.push((up - down) / (2.0 * FD_STEP));
    }
    out
}

pub struct GradCase {
    pub graph: PatternGraph,
    pub op: GraphOperator,
    pub u: NodeFeatures,
    pub params: ModelParams,
    pub mask: Vec<usize>,
    pub action: usize,
}

/// A small random model with every parameter (biases included) drawn
/// uniformly from [-1, 1], on a random graph, coloring and mask. Draws are
/// rejected unless the critic trunk has an active output unit and the actor
/// logits differ across the mask; otherwise the target function is locally
/// constant and its gradient identically zero.
pub fn random_grad_case(seed: u64) -> GradCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(c) = draw_case(&mut rng) {
            return c;
        }
    }
}

fn draw_case(rng: &mut ChaCha8Rng) -> Option<GradCase> {
    let n = rng.random_range(3..=7);
    let policy = EdgeClassPolicy { arbitrary_fraction: 0.3 };
    let graph = PatternGraph::generate_er(n, 0.35, rng.random(), policy).unwrap();
    let hidden = match rng.random_range(0..3) {
        0 => vec![],
        1 => vec![rng.random_range(2..=6)],
        _ => vec![rng.random_range(2..=5), rng.random_range(2..=5)],
    };
    let arch = Architecture {
        hidden,
        features: FeatureOptions { degree_channels: rng.random_bool(0.7) },
        mask: MaskPolicy::ChosenOnly,
    };
    let colors = ColorState::from_bools((0..n).map(|_| rng.random_bool(0.4)).collect());
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    let mut mask = nodes[..rng.random_range(2..=n)].to_vec();
    mask.sort_unstable();
    let action = *mask.choose(rng).unwrap();
    let op = GraphOperator::new(&graph);
    let mut params = ModelParams::zeros(arch);
    let u = params.features(&graph, &colors);
    for _ in 0..20 {
        for net in [&mut params.actor, &mut params.critic] {
            let flat: Vec<f64> = (0..net.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
            net.set_flat(&flat);
        }
        let critic_live = params.critic.embeddings(&op, &u).unwrap().iter().any(|&x| x > 0.0);
        let logits = actor_logits(&op, &u, &params.actor).unwrap();
        let spread = mask.iter().any(|&v| (logits[v] - logits[mask[0]]).abs() > 1e-3);
        if critic_live && spread {
            return Some(GradCase {
                graph,
                op,
                u,
                params,
                mask,
                action,
            });
        }
    }
    None
}

pub fn log_prob(c: &GradCase, actor: &Network) -> f64 {
    actor_forward(&c.op, &c.u, actor, &c.mask).unwrap()[c.action].ln()
}

pub fn value(c: &GradCase, critic: &Network) -> f64 {
    critic_forward(&c.op, &c.u, critic).unwrap()
}

/// Closure under the color change rule, applying one randomly chosen
/// applicable force at a time.
pub fn random_order_closure(g: &PatternGraph, inputs: &InputSet, rng: &mut impl Rng) -> ColorState {
    let n = g.node_count();
    let mut black: Vec<bool> = (0..n).map(|v| inputs.contains(v)).collect();
    loop {
        let mut forces = Vec::new();
        for v in 0..n {
            let white: Vec<_> = g.out_neighbors(v).iter().filter(|(w, _)| !black[*w]).collect();
            if let [(w, EdgeClass::Solid)] = white.as_slice() {
                forces.push(*w);
            }
        }
        match forces.choose(rng) {
            Some(&w) => black[w] = true,
            None => return ColorState::from_bools(black),
        }
    }
}
