//! Non-learning solvers: the degree-based greedy heuristic and an exact
//! enumeration oracle for the minimum zero forcing set size.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::pattern_graph::{InputSet, PatternGraph};
use crate::zero_forcing::{mandatory_inputs, zfs_lower_bound, ZfsChecker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Greedy,
    Exact,
    Rl,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Exact => "exact",
            Method::Rl => "rl",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Method::Greedy),
            "exact" => Ok(Method::Exact),
            "rl" => Ok(Method::Rl),
            other => Err(format!("unknown method {other:?} (expected greedy, exact or rl)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub inputs: InputSet,
    pub size: usize,
    pub eta: f64,
    pub method: Method,
    pub elapsed: Duration,
}

impl SolveResult {
    pub(crate) fn new(g: &PatternGraph, inputs: InputSet, method: Method, elapsed: Duration) -> Self {
        let size = inputs.len();
        let n = g.node_count();
        SolveResult {
            inputs,
            size,
            eta: if n == 0 { 0.0 } else { size as f64 / n as f64 },
            method,
            elapsed,
        }
    }

    pub const CSV_HEADER: &'static str = "graph_id,method,n,z,eta,elapsed_ms,inputs";

    /// `graph_id,method,n,z,eta,elapsed_ms,inputs`. With `timing` off the
    /// elapsed column is written as 0 so reruns are byte-identical.
    pub fn csv_row(&self, graph_id: &str, n: usize, timing: bool) -> String {
        let ms = if timing { self.elapsed.as_millis() } else { 0 };
        format!(
            "{},{},{},{},{:.6},{},{}",
            graph_id,
            self.method,
            n,
            self.size,
            self.eta,
            ms,
            self.inputs.joined()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Nodes,
    Time,
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Budget::Nodes => "node",
            Budget::Time => "time",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("{which} budget exceeded: {detail}")]
    BudgetExceeded { which: Budget, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactBudget {
    pub max_nodes: usize,
    pub time: Duration,
}

impl Default for ExactBudget {
    fn default() -> Self {
        ExactBudget {
            max_nodes: 15,
            time: Duration::from_secs(60),
        }
    }
}

/// Degree-based greedy: all zero in-degree nodes first, then repeatedly the
/// white node of smallest in-degree (ties: larger out-degree, then lower id)
/// until both closures are complete.
pub fn greedy_degree(g: &PatternGraph) -> SolveResult {
    let start = Instant::now();
    let checker = ZfsChecker::new(g);
    let degrees = g.degrees();
    let mut inputs = InputSet::empty();
    for (v, d) in degrees.iter().enumerate() {
        if d.in_degree == 0 {
            inputs.insert(v);
        }
    }
    loop {
        let state = checker.intersection_state(&inputs);
        let next = state
            .white_nodes()
            .into_iter()
            .filter(|&v| !inputs.contains(v))
            .min_by_key(|&v| (degrees[v].in_degree, std::cmp::Reverse(degrees[v].out_degree), v));
        match next {
            Some(v) => {
                inputs.insert(v);
            }
            None => break,
        }
    }
    SolveResult::new(g, inputs, Method::Greedy, start.elapsed())
}

/// Smallest zero forcing set by enumeration in increasing cardinality.
/// Nodes without an incoming solid edge are fixed members; the first valid
/// set found at the smallest size is the lexicographically smallest one
/// among sets of that size.
pub fn exact_minimum(g: &PatternGraph, budget: ExactBudget) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let n = g.node_count();
    if n > budget.max_nodes {
        return Err(SolveError::BudgetExceeded {
            which: Budget::Nodes,
            detail: format!("{n} nodes > limit {}", budget.max_nodes),
        });
    }
    let checker = ZfsChecker::new(g);
    let fixed = mandatory_inputs(g);
    let free: Vec<usize> = (0..n).filter(|v| !fixed.contains(v)).collect();
    let floor = zfs_lower_bound(g).floor.max(fixed.len());

    let mut checked: u64 = 0;
    for size in floor..=n {
        let extra = size - fixed.len();
        let mut combo: Vec<usize> = (0..extra).collect();
        loop {
            checked += 1;
            if checked.is_multiple_of(256) && start.elapsed() > budget.time {
                return Err(SolveError::BudgetExceeded {
                    which: Budget::Time,
                    detail: format!("{:?} elapsed at cardinality {size}", budget.time),
                });
            }
            let mut nodes = fixed.clone();
            nodes.extend(combo.iter().map(|&k| free[k]));
            nodes.sort_unstable();
            let candidate = InputSet::new(nodes).expect("distinct by construction");
            if checker.is_zfs(&candidate) {
                return Ok(SolveResult::new(g, candidate, Method::Exact, start.elapsed()));
            }
            if !next_combination(&mut combo, free.len()) {
                break;
            }
        }
    }
    unreachable!("the full node set is always a zero forcing set")
}

/// Advances `combo` (strictly increasing indices into `0..m`) to the next
/// combination in lexicographic order.
fn next_combination(combo: &mut [usize], m: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < m - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub valid: bool,
    pub original_complete: bool,
    pub modified_complete: bool,
    /// White nodes left by the closure in `G`.
    pub uncolored_original: Vec<usize>,
    /// White nodes left by the closure in `G*`.
    pub uncolored_modified: Vec<usize>,
}

pub fn validate(g: &PatternGraph, inputs: &InputSet) -> ValidationReport {
    let closures = ZfsChecker::new(g).closures(inputs);
    let uncolored_original = closures.original.final_colors.white_nodes();
    let uncolored_modified = closures.modified.final_colors.white_nodes();
    ValidationReport {
        valid: uncolored_original.is_empty() && uncolored_modified.is_empty(),
        original_complete: uncolored_original.is_empty(),
        modified_complete: uncolored_modified.is_empty(),
        uncolored_original,
        uncolored_modified,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_graph::{EdgeClass, EdgeClassPolicy};
    use crate::zero_forcing::is_zfs;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path() -> PatternGraph {
        PatternGraph::from_edge_list("n 3\n0 1 *\n1 2 *\n").unwrap()
    }

    fn star(leaves: usize) -> PatternGraph {
        PatternGraph::from_edges(leaves + 1, (1..=leaves).map(|l| (0, l, EdgeClass::Solid))).unwrap()
    }

    #[test]
    fn greedy_examples() {
        let r = greedy_degree(&path());
        assert_eq!(r.inputs.nodes(), &[0]);
        let r = greedy_degree(&star(3));
        assert_eq!(r.inputs.nodes(), &[0, 1, 2]);
        let r = greedy_degree(&PatternGraph::empty(5));
        assert_eq!(r.size, 5);
        assert!((r.eta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_examples() {
        assert_eq!(exact_minimum(&path(), ExactBudget::default()).unwrap().size, 1);
        for leaves in 2..=6 {
            let r = exact_minimum(&star(leaves), ExactBudget::default()).unwrap();
            assert_eq!(r.size, leaves);
            assert!((r.eta - leaves as f64 / (leaves + 1) as f64).abs() < 1e-12);
        }
        assert_eq!(
            exact_minimum(&PatternGraph::empty(4), ExactBudget::default()).unwrap().size,
            4
        );
    }

    #[test]
    fn exact_budget_errors() {
        let big = PatternGraph::empty(20);
        let err = exact_minimum(&big, ExactBudget::default()).unwrap_err();
        assert!(matches!(err, SolveError::BudgetExceeded { which: Budget::Nodes, .. }));
        let g = PatternGraph::generate_er(15, 0.5, 1, EdgeClassPolicy::default()).unwrap();
        let err = exact_minimum(
            &g,
            ExactBudget {
                max_nodes: 15,
                time: Duration::ZERO,
            },
        )
        .unwrap_err();
        assert!(matches!(err, SolveError::BudgetExceeded { which: Budget::Time, .. }));
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all.len(), 6);
        assert_eq!(all.last().unwrap(), &vec![2, 3]);
        let mut empty: Vec<usize> = vec![];
        assert!(!next_combination(&mut empty, 3));
    }

    #[test]
    fn validation_reports() {
        let ok = validate(&path(), &InputSet::new(vec![0]).unwrap());
        assert!(ok.valid);
        let bad = validate(&path(), &InputSet::new(vec![2]).unwrap());
        assert!(!bad.valid);
        assert_eq!(bad.uncolored_original, vec![0]);
        assert!(bad.uncolored_modified.is_empty());
        let iso = validate(&PatternGraph::empty(3), &InputSet::empty());
        assert_eq!(iso.uncolored_original, vec![0, 1, 2]);
    }

    #[test]
    fn csv_row_format() {
        let r = SolveResult::new(&path(), InputSet::new(vec![0]).unwrap(), Method::Greedy, Duration::from_millis(7));
        assert_eq!(r.csv_row("p", 3, true), "p,greedy,3,1,0.333333,7,0");
        assert_eq!(r.csv_row("p", 3, false), "p,greedy,3,1,0.333333,0,0");
    }

    fn random_small(rng: &mut ChaCha8Rng) -> PatternGraph {
        let n = rng.random_range(1..=8);
        let p = rng.random_range(0.05..0.5);
        PatternGraph::generate_er(n, p, rng.random(), EdgeClassPolicy { arbitrary_fraction: 0.25 }).unwrap()
    }

    #[test]
    fn oracle_bounds_greedy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..60 {
            let g = random_small(&mut rng);
            let e = exact_minimum(&g, ExactBudget::default()).unwrap();
            let h = greedy_degree(&g);
            assert!(validate(&g, &e.inputs).valid && validate(&g, &h.inputs).valid);
            assert!(e.size <= h.size && h.size <= g.node_count());
        }
    }

    #[test]
    fn exact_size_is_label_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let g = random_small(&mut rng);
            let mut perm: Vec<usize> = (0..g.node_count()).collect();
            perm.shuffle(&mut rng);
            let a = exact_minimum(&g, ExactBudget::default()).unwrap();
            let b = exact_minimum(&g.permuted(&perm), ExactBudget::default()).unwrap();
            assert_eq!(a.size, b.size);
            let mapped = InputSet::new(a.inputs.nodes().iter().map(|&v| perm[v]).collect()).unwrap();
            assert!(is_zfs(&g.permuted(&perm), &mapped));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn dashed_edges_never_lower_z(seed in any::<u64>(), src in 0usize..8, dst in 0usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_small(&mut rng);
            let n = g.node_count();
            let (src, dst) = (src % n, dst % n);
            prop_assume!(g.entry(dst, src) == crate::pattern_graph::PatternEntry::Zero);
            let with = PatternGraph::from_edges(n, g.edges().chain([(src, dst, EdgeClass::Dashed)])).unwrap();
            let z0 = exact_minimum(&g, ExactBudget::default()).unwrap().size;
            let z1 = exact_minimum(&with, ExactBudget::default()).unwrap().size;
            prop_assert!(z1 >= z0);
        }
    }
}
