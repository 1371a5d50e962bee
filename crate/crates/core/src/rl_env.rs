//! Coloring episodes as a Markov decision process.
//!
//! The state is the set of nodes black in both closures, an action adds one
//! input node, and the reward is `100` once both closures cover the graph,
//! `-1` otherwise.

use thiserror::Error;

use crate::pattern_graph::{InputSet, PatternGraph};
use crate::zero_forcing::{ColorState, ZfsChecker};

pub const SUCCESS_REWARD: f64 = 100.0;
pub const STEP_REWARD: f64 = -1.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("action {action} is not valid in this state")]
    InvalidAction { action: usize },
}

/// Which nodes are removed from the action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskPolicy {
    /// Only nodes already chosen.
    #[default]
    ChosenOnly,
    /// Chosen nodes and nodes already black in the state.
    ChosenAndDerived,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvState {
    pub colors: ColorState,
    pub chosen: InputSet,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: EnvState,
    pub reward: f64,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: EnvState,
    pub action: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<Transition>,
    pub final_state: EnvState,
    /// Whether the episode ended on the success reward.
    pub solved: bool,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|t| t.reward).collect()
    }

    /// Line records `step,action,reward,colors` with a header; `colors` is
    /// the state after the action.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,action,reward,colors\n");
        for (k, t) in self.steps.iter().enumerate() {
            let after = self
                .steps
                .get(k + 1)
                .map_or(&self.final_state, |next| &next.state);
            out.push_str(&format!(
                "{},{},{},{}\n",
                k,
                t.action,
                t.reward,
                after.colors.bitstring()
            ));
        }
        out
    }
}

/// Environment over one fixed graph.
#[derive(Debug, Clone)]
pub struct ColoringEnv<'g> {
    checker: ZfsChecker<'g>,
    mask: MaskPolicy,
}

impl<'g> ColoringEnv<'g> {
    pub fn new(graph: &'g PatternGraph, mask: MaskPolicy) -> Self {
        ColoringEnv {
            checker: ZfsChecker::new(graph),
            mask,
        }
    }

    pub fn graph(&self) -> &'g PatternGraph {
        self.checker.graph()
    }

    pub fn node_count(&self) -> usize {
        self.checker.graph().node_count()
    }

    pub fn mask_policy(&self) -> MaskPolicy {
        self.mask
    }

    pub fn reset(&self) -> EnvState {
        let chosen = InputSet::empty();
        EnvState {
            colors: self.checker.intersection_state(&chosen),
            chosen,
            step: 0,
        }
    }

    pub fn valid_actions(&self, s: &EnvState) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&v| !s.chosen.contains(v))
            .filter(|&v| self.mask == MaskPolicy::ChosenOnly || !s.colors.is_black(v))
            .collect()
    }

    pub fn is_valid(&self, s: &EnvState, a: usize) -> bool {
        a < self.node_count()
            && !s.chosen.contains(a)
            && (self.mask == MaskPolicy::ChosenOnly || !s.colors.is_black(a))
    }

    pub fn step(&self, s: &EnvState, a: usize) -> Result<StepOutcome, EnvError> {
        if !self.is_valid(s, a) {
            return Err(EnvError::InvalidAction { action: a });
        }
        let mut chosen = s.chosen.clone();
        chosen.insert(a);
        let closures = self.checker.closures(&chosen);
        let solved = closures.is_zfs();
        let next = EnvState {
            colors: closures.intersection(),
            step: chosen.len(),
            chosen,
        };
        let capped = next.chosen.len() == self.node_count();
        Ok(StepOutcome {
            reward: if solved { SUCCESS_REWARD } else { STEP_REWARD },
            terminal: solved || capped,
            next,
        })
    }

    /// Runs one episode choosing actions with `policy`.
    pub fn rollout(
        &self,
        mut policy: impl FnMut(&EnvState, &[usize]) -> usize,
    ) -> Result<EpisodeTrace, EnvError> {
        let mut state = self.reset();
        let mut steps = Vec::new();
        if self.node_count() == 0 {
            return Ok(EpisodeTrace {
                steps,
                final_state: state,
                solved: true,
            });
        }
        loop {
            let actions = self.valid_actions(&state);
            let a = policy(&state, &actions);
            let out = self.step(&state, a)?;
            steps.push(Transition {
                state,
                action: a,
                reward: out.reward,
            });
            state = out.next;
            if out.terminal {
                return Ok(EpisodeTrace {
                    solved: out.reward == SUCCESS_REWARD,
                    steps,
                    final_state: state,
                });
            }
        }
    }
}

/// Discounted suffix sums `R_k = r_k + γ r_{k+1} + γ² r_{k+2} + ...`.
pub fn episode_return(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (k, &r) in rewards.iter().enumerate().rev() {
        acc = r + gamma * acc;
        out[k] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_graph::EdgeClassPolicy;
    use crate::solvers::validate;
    use crate::zero_forcing::is_zfs;
    use rand::seq::IndexedRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path() -> PatternGraph {
        PatternGraph::from_edge_list("n 3\n0 1 *\n1 2 *\n").unwrap()
    }

    #[test]
    fn reset_states() {
        let iso = PatternGraph::empty(3);
        let env = ColoringEnv::new(&iso, MaskPolicy::ChosenOnly);
        let s = env.reset();
        assert_eq!(s.colors.bitstring(), "000");
        assert_eq!(s.step, 0);
        assert!(s.chosen.is_empty());

        // v1, v2 close in both graphs without any input.
        let p = path();
        let env = ColoringEnv::new(&p, MaskPolicy::ChosenOnly);
        assert_eq!(env.reset().colors.bitstring(), "011");
    }

    #[test]
    fn action_masks() {
        let g = PatternGraph::empty(5);
        let env = ColoringEnv::new(&g, MaskPolicy::ChosenOnly);
        let s = env.reset();
        assert_eq!(env.valid_actions(&s), vec![0, 1, 2, 3, 4]);
        let s = env.step(&s, 1).unwrap().next;
        assert_eq!(env.valid_actions(&s), vec![0, 2, 3, 4]);
        assert_eq!(env.step(&s, 1), Err(EnvError::InvalidAction { action: 1 }));
        assert!(env.step(&s, 9).is_err());

        let p = path();
        let env = ColoringEnv::new(&p, MaskPolicy::ChosenAndDerived);
        let s = env.reset();
        assert_eq!(env.valid_actions(&s), vec![0]);
        assert!(env.step(&s, 2).is_err());
    }

    #[test]
    fn step_outcomes() {
        let p = path();
        let env = ColoringEnv::new(&p, MaskPolicy::ChosenOnly);
        let out = env.step(&env.reset(), 0).unwrap();
        assert!(out.terminal);
        assert_eq!(out.reward, SUCCESS_REWARD);

        let iso = PatternGraph::empty(3);
        let env = ColoringEnv::new(&iso, MaskPolicy::ChosenOnly);
        let out = env.step(&env.reset(), 0).unwrap();
        assert!(!out.terminal);
        assert_eq!(out.reward, STEP_REWARD);
        assert_eq!(out.next.colors.bitstring(), "100");

        let trace = env.rollout(|_, acts| acts[0]).unwrap();
        assert_eq!(trace.len(), 3);
        assert_eq!(trace.rewards(), vec![-1.0, -1.0, 100.0]);
        assert!(trace.solved);
        assert_eq!(
            trace.to_csv(),
            "step,action,reward,colors\n0,0,-1,100\n1,1,-1,110\n2,2,100,111\n"
        );
    }

    #[test]
    fn returns() {
        assert_eq!(episode_return(&[-1.0, -1.0, 100.0], 1.0), vec![98.0, 99.0, 100.0]);
        assert_eq!(episode_return(&[100.0], 0.5), vec![100.0]);
        let r = episode_return(&[-1.0, 100.0], 0.9);
        assert!((r[0] - 89.0).abs() < 1e-12 && r[1] == 100.0);
        assert!(episode_return(&[], 0.9).is_empty());
    }

    #[test]
    fn random_rollouts_keep_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for seed in 0..40 {
            let g = PatternGraph::generate_er(12, 0.15, seed, EdgeClassPolicy { arbitrary_fraction: 0.2 }).unwrap();
            for mask in [MaskPolicy::ChosenOnly, MaskPolicy::ChosenAndDerived] {
                let env = ColoringEnv::new(&g, mask);
                let trace = env.rollout(|_, acts| *acts.choose(&mut rng).unwrap()).unwrap();
                assert!(trace.len() <= g.node_count());
                let mut prev: Option<&EnvState> = None;
                for (k, t) in trace.steps.iter().enumerate() {
                    assert_eq!(t.state.step, k);
                    assert_eq!(t.state.chosen.len(), k);
                    if let Some(p) = prev {
                        assert!(p.colors.is_subset_of(&t.state.colors));
                    }
                    if k + 1 < trace.len() {
                        assert_eq!(t.reward, STEP_REWARD);
                    }
                    prev = Some(&t.state);
                }
                if trace.solved {
                    assert!(is_zfs(&g, &trace.final_state.chosen));
                    assert!(validate(&g, &trace.final_state.chosen).valid);
                    assert!(trace.final_state.colors.all_black());
                }
                if mask == MaskPolicy::ChosenOnly {
                    assert!(trace.solved);
                }
            }
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let g = PatternGraph::generate_er(10, 0.2, 4, EdgeClassPolicy::default()).unwrap();
        let env = ColoringEnv::new(&g, MaskPolicy::ChosenOnly);
        let order = [7, 3, 9, 1, 0, 2, 4, 5, 6, 8];
        let run = || {
            let mut it = order.iter();
            env.rollout(|_, acts| *it.by_ref().find(|a| acts.contains(a)).unwrap()).unwrap()
        };
        assert_eq!(run(), run());
    }
}
