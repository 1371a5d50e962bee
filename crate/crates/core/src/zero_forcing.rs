//! Color change rule, derived sets and the zero forcing set test.
//!
//! A node with exactly one white out-neighbour, reached along a solid edge,
//! forces that neighbour black. The forcing node's own color does not
//! matter in the default rule, so closures can grow from an empty input set
//! (a white sink with a solid self-loop forces itself).

use std::fmt;

use crate::pattern_graph::{EdgeClass, InputSet, PatternGraph};

/// Black/white coloring of the nodes. `true` is black.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColorState(Vec<bool>);

impl ColorState {
    pub fn all_white(n: usize) -> Self {
        ColorState(vec![false; n])
    }

    pub fn from_inputs(n: usize, inputs: &InputSet) -> Self {
        let mut c = Self::all_white(n);
        for &v in inputs.nodes() {
            c.0[v] = true;
        }
        c
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        ColorState(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_black(&self, v: usize) -> bool {
        self.0[v]
    }

    pub fn set_black(&mut self, v: usize) {
        self.0[v] = true;
    }

    pub fn black_count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn all_black(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    pub fn black_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.0[v]).collect()
    }

    pub fn white_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| !self.0[v]).collect()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Pointwise AND of two colorings of the same graph.
    pub fn intersect(&self, other: &ColorState) -> ColorState {
        assert_eq!(self.len(), other.len());
        ColorState(self.0.iter().zip(&other.0).map(|(a, b)| *a && *b).collect())
    }

    /// Whether every black node of `self` is black in `other`.
    pub fn is_subset_of(&self, other: &ColorState) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| !*a || *b)
    }

    /// `"0110"`-style string, node 0 first.
    pub fn bitstring(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for ColorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bitstring())
    }
}

/// `forcer -> forced`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ForceEvent {
    pub forcer: usize,
    pub forced: usize,
}

/// Which nodes may apply the color change rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForcingRule {
    /// Any node, whatever its color.
    #[default]
    AnyForcer,
    /// Only black nodes, as in classical zero forcing. Not used by the solvers.
    BlackForcer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedSetResult {
    pub final_colors: ColorState,
    pub chronology: Vec<ForceEvent>,
}

impl DerivedSetResult {
    pub fn is_complete(&self) -> bool {
        self.final_colors.all_black()
    }
}

/// The node that `v` would force under `colors`, if any.
fn forced_by(g: &PatternGraph, colors: &ColorState, v: usize, rule: ForcingRule) -> Option<usize> {
    if rule == ForcingRule::BlackForcer && !colors.is_black(v) {
        return None;
    }
    let mut target = None;
    for &(w, class) in g.out_neighbors(v) {
        if colors.is_black(w) {
            continue;
        }
        if target.is_some() {
            return None;
        }
        target = Some((w, class));
    }
    match target {
        Some((w, EdgeClass::Solid)) => Some(w),
        _ => None,
    }
}

/// Every force the rule allows against `colors`, in ascending forcer order.
pub fn applicable_forces_with(
    g: &PatternGraph,
    colors: &ColorState,
    rule: ForcingRule,
) -> Vec<ForceEvent> {
    assert_eq!(colors.len(), g.node_count(), "coloring length mismatch");
    (0..g.node_count())
        .filter_map(|v| forced_by(g, colors, v, rule).map(|w| ForceEvent { forcer: v, forced: w }))
        .collect()
}

pub fn applicable_forces(g: &PatternGraph, colors: &ColorState) -> Vec<ForceEvent> {
    applicable_forces_with(g, colors, ForcingRule::AnyForcer)
}

/// Closure of the rule starting from an arbitrary coloring. Each sweep
/// visits forcers in ascending id order and applies forces immediately.
pub fn closure_from_with(
    g: &PatternGraph,
    mut colors: ColorState,
    rule: ForcingRule,
) -> DerivedSetResult {
    assert_eq!(colors.len(), g.node_count(), "coloring length mismatch");
    let mut chronology = Vec::new();
    loop {
        let mut changed = false;
        for v in 0..g.node_count() {
            if let Some(w) = forced_by(g, &colors, v, rule) {
                colors.set_black(w);
                chronology.push(ForceEvent { forcer: v, forced: w });
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    DerivedSetResult {
        final_colors: colors,
        chronology,
    }
}

pub fn derived_set_with(g: &PatternGraph, inputs: &InputSet, rule: ForcingRule) -> DerivedSetResult {
    closure_from_with(g, ColorState::from_inputs(g.node_count(), inputs), rule)
}

/// `dset(G, inputs)` with its forcing chronology.
pub fn derived_set(g: &PatternGraph, inputs: &InputSet) -> DerivedSetResult {
    derived_set_with(g, inputs, ForcingRule::AnyForcer)
}

/// Both closures needed by the zero forcing test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualClosure {
    pub original: DerivedSetResult,
    pub modified: DerivedSetResult,
}

impl DualClosure {
    pub fn is_zfs(&self) -> bool {
        self.original.is_complete() && self.modified.is_complete()
    }

    pub fn intersection(&self) -> ColorState {
        self.original.final_colors.intersect(&self.modified.final_colors)
    }
}

/// A graph paired with its modified graph, for repeated closure queries.
#[derive(Debug, Clone)]
pub struct ZfsChecker<'g> {
    graph: &'g PatternGraph,
    modified: PatternGraph,
}

impl<'g> ZfsChecker<'g> {
    pub fn new(graph: &'g PatternGraph) -> Self {
        ZfsChecker {
            graph,
            modified: graph.to_modified(),
        }
    }

    pub fn graph(&self) -> &'g PatternGraph {
        self.graph
    }

    pub fn modified(&self) -> &PatternGraph {
        &self.modified
    }

    pub fn closures(&self, inputs: &InputSet) -> DualClosure {
        DualClosure {
            original: derived_set(self.graph, inputs),
            modified: derived_set(&self.modified, inputs),
        }
    }

    pub fn is_zfs(&self, inputs: &InputSet) -> bool {
        // The cheaper early exit: skip G* when G already fails.
        derived_set(self.graph, inputs).is_complete()
            && derived_set(&self.modified, inputs).is_complete()
    }

    pub fn intersection_state(&self, inputs: &InputSet) -> ColorState {
        self.closures(inputs).intersection()
    }
}

/// Whether `inputs` colors every node black in both `G` and `G*`.
pub fn is_zfs(g: &PatternGraph, inputs: &InputSet) -> bool {
    ZfsChecker::new(g).is_zfs(inputs)
}

/// Nodes black in both `dset(G, inputs)` and `dset(G*, inputs)`.
pub fn intersection_state(g: &PatternGraph, inputs: &InputSet) -> ColorState {
    ZfsChecker::new(g).intersection_state(inputs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LowerBound {
    /// Nodes with in-degree zero in `G`.
    pub zero_in_degree: usize,
    /// `max(1, zero_in_degree)` for a non-empty graph, else 0.
    pub floor: usize,
}

pub fn zfs_lower_bound(g: &PatternGraph) -> LowerBound {
    let zero_in_degree = (0..g.node_count())
        .filter(|&v| g.in_neighbors(v).is_empty())
        .count();
    let floor = if g.node_count() == 0 {
        0
    } else {
        zero_in_degree.max(1)
    };
    LowerBound {
        zero_in_degree,
        floor,
    }
}

/// Nodes that belong to every zero forcing set: nothing can force them in
/// `G` because they have no incoming solid edge (self-loops included).
pub fn mandatory_inputs(g: &PatternGraph) -> Vec<usize> {
    (0..g.node_count())
        .filter(|&v| g.in_neighbors(v).iter().all(|&(_, c)| c != EdgeClass::Solid))
        .collect()
}

/// Replays `chronology` from `inputs`, checking that each event was a legal
/// force at its turn. Returns the resulting coloring, or the index of the
/// first illegal event.
pub fn replay_chronology(
    g: &PatternGraph,
    inputs: &InputSet,
    chronology: &[ForceEvent],
) -> Result<ColorState, usize> {
    let mut colors = ColorState::from_inputs(g.node_count(), inputs);
    for (k, ev) in chronology.iter().enumerate() {
        if forced_by(g, &colors, ev.forcer, ForcingRule::AnyForcer) != Some(ev.forced) {
            return Err(k);
        }
        colors.set_black(ev.forced);
    }
    Ok(colors)
}

/// CSV `step,forcer,forced` with a header row.
pub fn chronology_csv(chronology: &[ForceEvent]) -> String {
    let mut out = String::from("step,forcer,forced\n");
    for (k, ev) in chronology.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", k, ev.forcer, ev.forced));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_graph::{EdgeClassPolicy, PatternEntry};
    use proptest::prelude::*;
    use rand::seq::IndexedRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g(text: &str) -> PatternGraph {
        PatternGraph::from_edge_list(text).unwrap()
    }

    fn set(v: &[usize]) -> InputSet {
        InputSet::new(v.to_vec()).unwrap()
    }

    fn path() -> PatternGraph {
        g("n 3\n0 1 *\n1 2 *\n")
    }

    fn star(leaves: usize) -> PatternGraph {
        let edges = (1..=leaves).map(|l| (0, l, EdgeClass::Solid));
        PatternGraph::from_edges(leaves + 1, edges).unwrap()
    }

    #[test]
    fn path_forces_from_white_nodes() {
        let ev = applicable_forces(&path(), &ColorState::all_white(3));
        assert_eq!(
            ev,
            vec![
                ForceEvent { forcer: 0, forced: 1 },
                ForceEvent { forcer: 1, forced: 2 }
            ]
        );
    }

    #[test]
    fn dashed_edges_never_force() {
        let d = g("n 2\n0 1 ?\n");
        assert!(applicable_forces(&d, &ColorState::all_white(2)).is_empty());
        let r = derived_set(&d, &set(&[0]));
        assert_eq!(r.final_colors.black_nodes(), vec![0]);
    }

    #[test]
    fn two_white_neighbours_block() {
        let s = star(2);
        let ev = applicable_forces(&s, &ColorState::all_white(3));
        assert!(ev.iter().all(|e| e.forcer != 0));
    }

    #[test]
    fn path_chronology() {
        let r = derived_set(&path(), &set(&[0]));
        assert!(r.is_complete());
        assert_eq!(
            r.chronology,
            vec![
                ForceEvent { forcer: 0, forced: 1 },
                ForceEvent { forcer: 1, forced: 2 }
            ]
        );
        assert_eq!(
            chronology_csv(&r.chronology),
            "step,forcer,forced\n0,0,1\n1,1,2\n"
        );
    }

    #[test]
    fn empty_graph_empty_inputs() {
        let e = PatternGraph::empty(3);
        assert_eq!(derived_set(&e, &InputSet::empty()).final_colors.black_count(), 0);
    }

    #[test]
    fn zfs_examples() {
        assert!(is_zfs(&path(), &set(&[0])));
        let iso = PatternGraph::empty(3);
        assert!(!is_zfs(&iso, &InputSet::empty()));
        // G* of isolated nodes self-forces everything.
        assert!(derived_set(&iso.to_modified(), &InputSet::empty()).is_complete());
        assert!(is_zfs(&star(3), &set(&[0, 1, 2])));
        assert!(!is_zfs(&star(3), &set(&[0, 1])));
    }

    #[test]
    fn intersection_examples() {
        assert!(intersection_state(&path(), &set(&[0])).all_black());
        assert_eq!(
            intersection_state(&PatternGraph::empty(3), &InputSet::empty()).black_count(),
            0
        );
        assert_eq!(
            intersection_state(&PatternGraph::empty(2), &set(&[0])).bitstring(),
            "10"
        );
        // From nothing: G forces v1, v2; G* self-forces the sink then backs up
        // the chain. The intersection is {v1, v2}.
        assert_eq!(intersection_state(&path(), &InputSet::empty()).bitstring(), "011");
    }

    #[test]
    fn lower_bounds() {
        assert_eq!(zfs_lower_bound(&path()).floor, 1);
        assert_eq!(zfs_lower_bound(&path()).zero_in_degree, 1);
        let cycle = g("n 3\n0 1 *\n1 2 *\n2 0 *\n");
        assert_eq!(zfs_lower_bound(&cycle), LowerBound { zero_in_degree: 0, floor: 1 });
        assert_eq!(zfs_lower_bound(&star(3)).zero_in_degree, 1);
        assert_eq!(mandatory_inputs(&g("n 3\n0 1 ?\n1 2 *\n")), vec![0, 1]);
    }

    #[test]
    fn strict_rule_needs_black_forcer() {
        let p = path();
        let any = derived_set_with(&p, &InputSet::empty(), ForcingRule::AnyForcer);
        let strict = derived_set_with(&p, &InputSet::empty(), ForcingRule::BlackForcer);
        assert_eq!(any.final_colors.black_count(), 2);
        assert_eq!(strict.final_colors.black_count(), 0);
        let strict = derived_set_with(&p, &set(&[0]), ForcingRule::BlackForcer);
        assert!(strict.is_complete());
    }

    #[test]
    fn replay_rejects_bogus_event() {
        let bogus = [ForceEvent { forcer: 1, forced: 0 }];
        assert_eq!(replay_chronology(&path(), &set(&[0]), &bogus), Err(0));
    }

    fn random_graph(rng: &mut ChaCha8Rng, max_n: usize) -> PatternGraph {
        let n = rng.random_range(1..=max_n);
        let p = rng.random_range(0.02..0.3);
        let frac = if rng.random_bool(0.5) { 0.0 } else { 0.3 };
        let base = PatternGraph::generate_er(
            n,
            p,
            rng.random(),
            EdgeClassPolicy {
                arbitrary_fraction: frac,
            },
        )
        .unwrap();
        // Sprinkle diagonal entries so self-loops are exercised too.
        let mut m = base.to_pattern_matrix();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = *[PatternEntry::Zero, PatternEntry::Nonzero, PatternEntry::Arbitrary]
                .choose(rng)
                .unwrap();
        }
        PatternGraph::from_pattern_matrix(&m).unwrap()
    }

    fn random_inputs(rng: &mut ChaCha8Rng, n: usize) -> InputSet {
        InputSet::new((0..n).filter(|_| rng.random_bool(0.2)).collect()).unwrap()
    }

    /// Applies one uniformly chosen legal force at a time.
    fn randomized_closure(g: &PatternGraph, inputs: &InputSet, rng: &mut ChaCha8Rng) -> ColorState {
        let mut colors = ColorState::from_inputs(g.node_count(), inputs);
        loop {
            let ev = applicable_forces(g, &colors);
            match ev.choose(rng) {
                Some(e) => colors.set_black(e.forced),
                None => return colors,
            }
        }
    }

    #[test]
    fn chronology_replays_and_is_maximal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let g = random_graph(&mut rng, 20);
            let s = random_inputs(&mut rng, g.node_count());
            let r = derived_set(&g, &s);
            let replayed = replay_chronology(&g, &s, &r.chronology).unwrap();
            assert_eq!(replayed, r.final_colors);
            assert!(applicable_forces(&g, &r.final_colors).is_empty());
            assert!(ColorState::from_inputs(g.node_count(), &s).is_subset_of(&r.final_colors));
        }
    }

    #[test]
    fn order_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let g = random_graph(&mut rng, 30);
            let s = random_inputs(&mut rng, g.node_count());
            let want = derived_set(&g, &s).final_colors;
            assert_eq!(randomized_closure(&g, &s, &mut rng), want);
        }
    }

    #[test]
    fn zero_in_degree_necessity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let g = random_graph(&mut rng, 12);
            let s = random_inputs(&mut rng, g.node_count());
            let orphan_missing = (0..g.node_count())
                .any(|v| g.in_neighbors(v).is_empty() && !s.contains(v));
            if orphan_missing {
                assert!(!is_zfs(&g, &s));
            }
        }
    }

    proptest! {
        #[test]
        fn monotone_in_inputs(seed in any::<u64>(), extra in 0usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(&mut rng, 25);
            let s = random_inputs(&mut rng, g.node_count());
            let mut bigger = s.clone();
            bigger.insert(extra % g.node_count());
            let small = derived_set(&g, &s).final_colors;
            let big = derived_set(&g, &bigger).final_colors;
            prop_assert!(small.is_subset_of(&big));
        }

        #[test]
        fn closure_is_idempotent(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(&mut rng, 25);
            let s = random_inputs(&mut rng, g.node_count());
            let once = derived_set(&g, &s).final_colors;
            let again = derived_set(&g, &InputSet::new(once.black_nodes()).unwrap()).final_colors;
            prop_assert_eq!(once.black_count(), again.black_count());
        }
    }
}
