//! Pattern matrices over `{0, *, ?}` and their directed graphs.
//!
//! An entry `A[i][j]` that is nonzero or arbitrary corresponds to the edge
//! `j -> i`: node `j` influences node `i`. Nonzero entries give solid edges
//! (`E_*`), arbitrary entries give dashed edges (`E_?`). Diagonal entries are
//! self-loops.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("pattern matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("edge probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("arbitrary-edge fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("node id {id} out of range for {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },
    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: usize, dst: usize },
    #[error("input set lists node {0} more than once")]
    DuplicateInput(usize),
}

/// One symbol of a pattern matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PatternEntry {
    /// Fixed zero (`0`).
    #[default]
    Zero,
    /// Any nonzero value (`*`).
    Nonzero,
    /// Any value, zero included (`?`).
    Arbitrary,
}

impl PatternEntry {
    pub fn token(self) -> char {
        match self {
            PatternEntry::Zero => '0',
            PatternEntry::Nonzero => '*',
            PatternEntry::Arbitrary => '?',
        }
    }

    pub fn from_token(tok: &str) -> Option<Self> {
        match tok {
            "0" => Some(PatternEntry::Zero),
            "*" => Some(PatternEntry::Nonzero),
            "?" => Some(PatternEntry::Arbitrary),
            _ => None,
        }
    }

    pub fn edge_class(self) -> Option<EdgeClass> {
        match self {
            PatternEntry::Zero => None,
            PatternEntry::Nonzero => Some(EdgeClass::Solid),
            PatternEntry::Arbitrary => Some(EdgeClass::Dashed),
        }
    }
}

/// Edge class: solid edges come from `*` entries, dashed edges from `?`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    Solid,
    Dashed,
}

impl EdgeClass {
    pub fn entry(self) -> PatternEntry {
        match self {
            EdgeClass::Solid => PatternEntry::Nonzero,
            EdgeClass::Dashed => PatternEntry::Arbitrary,
        }
    }
}

/// Directed graph of a square pattern matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternGraph {
    n: usize,
    entries: Vec<PatternEntry>,
    out_adj: Vec<Vec<(usize, EdgeClass)>>,
    in_adj: Vec<Vec<(usize, EdgeClass)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeDegree {
    pub in_degree: usize,
    pub out_degree: usize,
}

impl NodeDegree {
    pub fn degree(&self) -> usize {
        self.in_degree + self.out_degree
    }
}

impl PatternGraph {
    /// Builds a graph from a row-major `n x n` pattern matrix.
    pub fn from_pattern_matrix(rows: &[Vec<PatternEntry>]) -> Result<Self, GraphError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(GraphError::NotSquare {
                    row: i,
                    len: row.len(),
                    expected: n,
                });
            }
            entries.extend_from_slice(row);
        }
        Ok(Self::from_flat(n, entries))
    }

    fn from_flat(n: usize, entries: Vec<PatternEntry>) -> Self {
        debug_assert_eq!(entries.len(), n * n);
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        // Entry (i, j) is the edge j -> i; scanning sources in order keeps
        // both adjacency lists sorted by neighbour id.
        for src in 0..n {
            for dst in 0..n {
                if let Some(class) = entries[dst * n + src].edge_class() {
                    out_adj[src].push((dst, class));
                }
            }
        }
        for dst in 0..n {
            for src in 0..n {
                if let Some(class) = entries[dst * n + src].edge_class() {
                    in_adj[dst].push((src, class));
                }
            }
        }
        PatternGraph {
            n,
            entries,
            out_adj,
            in_adj,
        }
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Self::from_flat(n, vec![PatternEntry::Zero; n * n])
    }

    /// Builds a graph from `(src, dst, class)` triples with all other entries zero.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, EdgeClass)>,
    ) -> Result<Self, GraphError> {
        let mut entries = vec![PatternEntry::Zero; n * n];
        for (src, dst, class) in edges {
            for id in [src, dst] {
                if id >= n {
                    return Err(GraphError::NodeOutOfRange { id, n });
                }
            }
            let slot = &mut entries[dst * n + src];
            if *slot != PatternEntry::Zero {
                return Err(GraphError::DuplicateEdge { src, dst });
            }
            *slot = class.entry();
        }
        Ok(Self::from_flat(n, entries))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Pattern entry `A[row][col]`, i.e. the edge `col -> row`.
    pub fn entry(&self, row: usize, col: usize) -> PatternEntry {
        self.entries[row * self.n + col]
    }

    pub fn to_pattern_matrix(&self) -> Vec<Vec<PatternEntry>> {
        self.entries.chunks(self.n.max(1)).take(self.n).map(<[_]>::to_vec).collect()
    }

    pub fn out_neighbors(&self, v: usize) -> &[(usize, EdgeClass)] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[(usize, EdgeClass)] {
        &self.in_adj[v]
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    /// All edges as `(src, dst, class)` in source-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgeClass)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(src, outs)| outs.iter().map(move |&(dst, c)| (src, dst, c)))
    }

    /// The modified graph `G*`: a zero diagonal becomes a solid self-loop,
    /// a nonzero or arbitrary diagonal becomes a dashed self-loop.
    pub fn to_modified(&self) -> PatternGraph {
        let mut entries = self.entries.clone();
        for i in 0..self.n {
            let d = &mut entries[i * self.n + i];
            *d = match *d {
                PatternEntry::Zero => PatternEntry::Nonzero,
                PatternEntry::Nonzero | PatternEntry::Arbitrary => PatternEntry::Arbitrary,
            };
        }
        Self::from_flat(self.n, entries)
    }

    /// Per-node degrees over both edge classes. A self-loop adds one to
    /// the in-degree and one to the out-degree.
    pub fn degrees(&self) -> Vec<NodeDegree> {
        (0..self.n)
            .map(|v| NodeDegree {
                in_degree: self.in_adj[v].len(),
                out_degree: self.out_adj[v].len(),
            })
            .collect()
    }

    /// Tests whether `inputs` is a valid input set for this graph.
    pub fn check_inputs(&self, inputs: &InputSet) -> Result<(), GraphError> {
        if let Some(&id) = inputs.nodes().iter().find(|&&v| v >= self.n) {
            return Err(GraphError::NodeOutOfRange { id, n: self.n });
        }
        Ok(())
    }

    /// Relabels nodes: node `v` of `self` becomes node `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> PatternGraph {
        assert_eq!(perm.len(), self.n, "permutation length mismatch");
        let n = self.n;
        let mut entries = vec![PatternEntry::Zero; n * n];
        for row in 0..n {
            for col in 0..n {
                entries[perm[row] * n + perm[col]] = self.entries[row * n + col];
            }
        }
        Self::from_flat(n, entries)
    }

    /// Random directed Erdos-Renyi graph: every ordered pair `(i, j)`,
    /// `i != j`, receives an edge independently with probability `p`.
    /// The diagonal is all zero.
    pub fn generate_er(
        n: usize,
        p: f64,
        seed: u64,
        policy: EdgeClassPolicy,
    ) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::InvalidProbability(p));
        }
        if !(0.0..=1.0).contains(&policy.arbitrary_fraction) {
            return Err(GraphError::InvalidFraction(policy.arbitrary_fraction));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = vec![PatternEntry::Zero; n * n];
        for src in 0..n {
            for dst in 0..n {
                if src == dst {
                    continue;
                }
                if rng.random::<f64>() < p {
                    let dashed = policy.arbitrary_fraction > 0.0
                        && rng.random::<f64>() < policy.arbitrary_fraction;
                    entries[dst * n + src] = if dashed {
                        PatternEntry::Arbitrary
                    } else {
                        PatternEntry::Nonzero
                    };
                }
            }
        }
        Ok(Self::from_flat(n, entries))
    }

    /// Pattern of an influence network `x' = W^T x`: an influence edge
    /// `i -> j` gives `A[j][i] = *`, and every diagonal entry is `?`
    /// because `W_ii` mixes the self term with the incoming weights.
    pub fn social_influence_pattern(
        n: usize,
        edges: &[(usize, usize)],
    ) -> Result<Self, GraphError> {
        let mut entries = vec![PatternEntry::Zero; n * n];
        for &(src, dst) in edges {
            for id in [src, dst] {
                if id >= n {
                    return Err(GraphError::NodeOutOfRange { id, n });
                }
            }
            if src != dst {
                entries[dst * n + src] = PatternEntry::Nonzero;
            }
        }
        for i in 0..n {
            entries[i * n + i] = PatternEntry::Arbitrary;
        }
        Ok(Self::from_flat(n, entries))
    }

    /// Parses the line-oriented edge-list format:
    ///
    /// ```text
    /// # comment
    /// n 3
    /// 0 1 *
    /// 1 2 ?
    /// diag 2 *
    /// ```
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| GraphError::Parse { line: line_no, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let parse_id = |tok: &str| -> Result<usize, GraphError> {
                tok.parse::<usize>()
                    .map_err(|_| parse_err(format!("invalid node id {tok:?}")))
            };
            let parse_class = |tok: &str| -> Result<EdgeClass, GraphError> {
                match tok {
                    "*" => Ok(EdgeClass::Solid),
                    "?" => Ok(EdgeClass::Dashed),
                    _ => Err(parse_err(format!(
                        "invalid edge class {tok:?}, expected '*' or '?'"
                    ))),
                }
            };
            match toks.as_slice() {
                ["n", count] => {
                    if n.is_some() {
                        return Err(parse_err("repeated header line".into()));
                    }
                    n = Some(
                        count
                            .parse()
                            .map_err(|_| parse_err(format!("invalid node count {count:?}")))?,
                    );
                }
                _ if n.is_none() => {
                    return Err(parse_err("expected header `n <count>` first".into()))
                }
                ["diag", node, class] => {
                    let v = parse_id(node)?;
                    edges.push((line_no, v, v, parse_class(class)?));
                }
                [src, dst, class] => {
                    edges.push((line_no, parse_id(src)?, parse_id(dst)?, parse_class(class)?))
                }
                _ => return Err(parse_err(format!("unrecognised line {line:?}"))),
            }
        }
        let n = n.ok_or(GraphError::Parse {
            line: text.lines().count().max(1),
            msg: "missing header `n <count>`".into(),
        })?;
        let mut entries = vec![PatternEntry::Zero; n * n];
        for (line, src, dst, class) in edges {
            for id in [src, dst] {
                if id >= n {
                    return Err(GraphError::Parse {
                        line,
                        msg: GraphError::NodeOutOfRange { id, n }.to_string(),
                    });
                }
            }
            let slot = &mut entries[dst * n + src];
            if *slot != PatternEntry::Zero {
                return Err(GraphError::Parse {
                    line,
                    msg: GraphError::DuplicateEdge { src, dst }.to_string(),
                });
            }
            *slot = class.entry();
        }
        Ok(Self::from_flat(n, entries))
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for (src, dst, class) in self.edges() {
            let tok = class.entry().token();
            if src == dst {
                out.push_str(&format!("diag {src} {tok}\n"));
            } else {
                out.push_str(&format!("{src} {dst} {tok}\n"));
            }
        }
        out
    }

    /// Parses a CSV pattern matrix of `0`, `*`, `?` tokens.
    pub fn from_pattern_csv(text: &str) -> Result<Self, GraphError> {
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|tok| {
                    PatternEntry::from_token(tok.trim()).ok_or_else(|| GraphError::Parse {
                        line: idx + 1,
                        msg: format!("invalid pattern token {:?}", tok.trim()),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::from_pattern_matrix(&rows)
    }

    pub fn to_pattern_csv(&self) -> String {
        let mut out = String::new();
        for row in 0..self.n {
            let line: Vec<String> = (0..self.n)
                .map(|col| self.entry(row, col).token().to_string())
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// How ER generation assigns edge classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeClassPolicy {
    /// Probability that a present edge is dashed (`?`) rather than solid.
    pub arbitrary_fraction: f64,
}

impl Default for EdgeClassPolicy {
    fn default() -> Self {
        EdgeClassPolicy {
            arbitrary_fraction: 0.0,
        }
    }
}

/// Maps arbitrary node labels onto dense 0-based ids in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelMap {
    pub fn id_of(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Remaps labelled directed pairs to dense ids.
    pub fn remap<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> (Vec<(usize, usize)>, LabelMap) {
        let mut map = LabelMap::default();
        let edges = pairs
            .into_iter()
            .map(|(a, b)| (map.id_of(a), map.id_of(b)))
            .collect();
        (edges, map)
    }
}

/// Ordered set of input (driver) nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct InputSet(Vec<usize>);

impl InputSet {
    /// Keeps the given order; rejects repeated nodes.
    pub fn new(nodes: Vec<usize>) -> Result<Self, GraphError> {
        let mut seen = std::collections::HashSet::with_capacity(nodes.len());
        for &v in &nodes {
            if !seen.insert(v) {
                return Err(GraphError::DuplicateInput(v));
            }
        }
        Ok(InputSet(nodes))
    }

    pub fn empty() -> Self {
        InputSet(Vec::new())
    }

    pub fn all(n: usize) -> Self {
        InputSet((0..n).collect())
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }

    /// Appends `v` if absent; returns whether it was added.
    pub fn insert(&mut self, v: usize) -> bool {
        if self.contains(v) {
            false
        } else {
            self.0.push(v);
            true
        }
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.0.clone();
        v.sort_unstable();
        v
    }

    /// Parses `"0,3,5"` or `"0;3;5"`; an empty string is the empty set.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(InputSet::empty());
        }
        let nodes = text
            .split([',', ';'])
            .map(|t| {
                t.trim().parse::<usize>().map_err(|_| GraphError::Parse {
                    line: 1,
                    msg: format!("invalid node id {:?} in input set", t.trim()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        InputSet::new(nodes)
    }

    /// Semicolon-joined ids in stored order.
    pub fn joined(&self) -> String {
        self.0
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl fmt::Display for InputSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}
