//! Undirected weighted graphs, the edge-list format, and the synthetic
//! perturbations used to build matching benchmarks.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded with
//! `seed_from_u64`, so noise and permutations are reproducible across
//! platforms. Noise edges are drawn with `rand::seq::index::sample` over the
//! non-edges listed in row-major `(i < j)` order; permutations use a
//! Fisher-Yates shuffle on a separate ChaCha stream.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Stream used for permutation draws, so a permutation and a noise draw
/// sharing one seed stay independent.
const PERMUTATION_STREAM: u64 = 1;

/// An undirected graph without self-loops, stored as a dense symmetric
/// weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    weights: Array2<f64>,
    labels: Vec<String>,
    index: HashMap<String, usize>,
    dummy: Vec<bool>,
}

impl Graph {
    /// Builds a graph from a weight matrix, labelling nodes `"0"..="n-1"`.
    pub fn from_weights(weights: Array2<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: weights.ncols(),
            });
        }
        for i in 0..n {
            if weights[[i, i]] != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "self-loop weight {} on node {i}",
                    weights[[i, i]]
                )));
            }
            for j in 0..n {
                let w = weights[[i, j]];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "weight {w} on ({i}, {j}) is not a finite non-negative number"
                    )));
                }
                if w != weights[[j, i]] {
                    return Err(Error::InvalidParameter(format!(
                        "weights are not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        Ok(Self::assemble(weights, labels, vec![false; n]))
    }

    /// Builds a graph on `n` nodes from `(u, v, w)` triples.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut weights = Array2::zeros((n, n));
        for &(u, v, w) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::IndexOutOfRange { index: x, len: n });
                }
            }
            weights[[u, v]] = w;
            weights[[v, u]] = w;
        }
        Self::from_weights(weights)
    }

    /// Unit-weight graph from an edge list.
    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let triples: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_edges(n, &triples)
    }

    /// Replaces the node labels. Labels must be unique.
    pub fn with_labels(self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: labels.len(),
            });
        }
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::InvalidParameter("node labels are not unique".into()));
        }
        Ok(Self::assemble(self.weights, labels, self.dummy))
    }

    fn assemble(weights: Array2<f64>, labels: Vec<String>, dummy: Vec<bool>) -> Self {
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Self {
            weights,
            labels,
            index,
            dummy,
        }
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[[i, j]]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Whether node `i` was added by [`pad_with_dummies`].
    pub fn is_dummy(&self, i: usize) -> bool {
        self.dummy[i]
    }

    pub fn dummy_count(&self) -> usize {
        self.dummy.iter().filter(|&&d| d).count()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Edges as `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[[i, j]];
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Open neighbourhood of `i` in increasing index order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .row(i)
            .into_iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(j, _)| j)
    }

    /// True when every weight is 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0 || w == 1.0)
    }

    pub(crate) fn check_binary(&self) -> Result<()> {
        for ((i, j), &w) in self.weights.indexed_iter() {
            if w != 0.0 && w != 1.0 {
                return Err(Error::NonBinary { i, j, weight: w });
            }
        }
        Ok(())
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n(),
            });
        }
        Ok(())
    }

    /// Writes the graph in edge-list format. Unit weights are written as
    /// `u v`, other weights as `u v w`; isolated nodes follow as bare labels.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j, w) in self.edges() {
            if w == 1.0 {
                let _ = writeln!(out, "{} {}", self.labels[i], self.labels[j]);
            } else {
                let _ = writeln!(out, "{} {} {}", self.labels[i], self.labels[j], w);
            }
        }
        for i in 0..self.n() {
            if self.neighbors(i).next().is_none() {
                let _ = writeln!(out, "{}", self.labels[i]);
            }
        }
        out
    }
}

/// A bijection on `0..n`. Source node `i` corresponds to target node `map[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n {
                return Err(Error::InvalidPermutation(format!(
                    "image {m} out of range for length {n}"
                )));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidPermutation(format!("image {m} repeated")));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Uniformly random permutation, deterministic in `seed`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(PERMUTATION_STREAM);
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(&mut rng);
        Self(map)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &m) in self.0.iter().enumerate() {
            inv[m] = i;
        }
        Self(inv)
    }

    /// Hard matching matrix with `T[i][map[i]] = 1`.
    pub fn to_matrix(&self) -> Array2<f64> {
        let n = self.0.len();
        let mut t = Array2::zeros((n, n));
        for (i, &m) in self.0.iter().enumerate() {
            t[[i, m]] = 1.0;
        }
        t
    }
}

/// Edge-noise parameters: add `round(q * |E|)` random edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub q: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(q: f64, seed: u64) -> Result<Self> {
        if !q.is_finite() || q < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise fraction q = {q} must be finite and >= 0"
            )));
        }
        Ok(Self { q, seed })
    }

    /// Number of edges to add to a graph with `edges` edges. Ties round to even.
    pub fn added_edges(&self, edges: usize) -> usize {
        (self.q * edges as f64).round_ties_even() as usize
    }
}

/// Parses an edge list: one `u v` or `u v w` per line, `#` starts a comment
/// line, blank lines are skipped. A line holding a single label declares an
/// isolated node. Labels get dense indices in order of first appearance.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges: HashMap<(usize, usize), f64> = HashMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let mut intern = |label: &str| -> usize {
            *index.entry(label.to_string()).or_insert_with(|| {
                labels.push(label.to_string());
                labels.len() - 1
            })
        };
        let (u, v, w) = match tokens.as_slice() {
            [u] => {
                intern(u);
                continue;
            }
            [u, v] => (*u, *v, 1.0),
            [u, v, w] => {
                let w: f64 = w
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("weight `{w}` is not a number")))?;
                if !w.is_finite() || w <= 0.0 {
                    return Err(Error::parse(
                        line_no,
                        format!("weight {w} must be finite and positive"),
                    ));
                }
                (*u, *v, w)
            }
            _ => {
                return Err(Error::parse(
                    line_no,
                    format!(
                        "expected `u`, `u v` or `u v w`, found {} tokens",
                        tokens.len()
                    ),
                ))
            }
        };
        if u == v {
            return Err(Error::SelfLoop {
                line: line_no,
                node: u.to_string(),
            });
        }
        let (a, b) = (intern(u), intern(v));
        let key = (a.min(b), a.max(b));
        match edges.get(&key) {
            Some(&existing) if existing != w => {
                return Err(Error::ConflictingWeight {
                    line: line_no,
                    u: u.to_string(),
                    v: v.to_string(),
                    existing,
                    weight: w,
                })
            }
            _ => {
                edges.insert(key, w);
            }
        }
    }

    let n = labels.len();
    let mut weights = Array2::zeros((n, n));
    for (&(a, b), &w) in &edges {
        weights[[a, b]] = w;
        weights[[b, a]] = w;
    }
    Ok(Graph::assemble(weights, labels, vec![false; n]))
}

/// Weighted degrees `d_i = sum_j W_ij`.
pub fn degrees(g: &Graph) -> Array1<f64> {
    g.weights.sum_axis(ndarray::Axis(1))
}

/// Combinatorial Laplacian `D - W`.
pub fn laplacian(g: &Graph) -> Array2<f64> {
    let mut l = g.weights.mapv(|w| 0.0 - w);
    for (i, d) in degrees(g).into_iter().enumerate() {
        l[[i, i]] = d;
    }
    l
}

/// Nodes within `k` unweighted hops of `i`, including `i`.
pub fn k_hop_nodes(g: &Graph, i: usize, k: usize) -> Result<BTreeSet<usize>> {
    g.check_index(i)?;
    let mut dist = vec![usize::MAX; g.n()];
    let mut queue = VecDeque::from([i]);
    dist[i] = 0;
    while let Some(u) = queue.pop_front() {
        if dist[u] == k {
            continue;
        }
        for v in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    Ok((0..g.n()).filter(|&v| dist[v] <= k).collect())
}

/// Appends isolated dummy nodes until the graph has `target_n` nodes.
pub fn pad_with_dummies(g: &Graph, target_n: usize) -> Result<Graph> {
    let n = g.n();
    if target_n < n {
        return Err(Error::InvalidParameter(format!(
            "cannot pad a {n}-node graph down to {target_n} nodes"
        )));
    }
    let mut weights = Array2::zeros((target_n, target_n));
    weights.slice_mut(ndarray::s![..n, ..n]).assign(&g.weights);
    let mut labels = g.labels.clone();
    let mut dummy = g.dummy.clone();
    let mut next = 0usize;
    while labels.len() < target_n {
        let label = format!("__dummy_{next}");
        next += 1;
        if g.index.contains_key(&label) {
            continue;
        }
        labels.push(label);
        dummy.push(true);
    }
    Ok(Graph::assemble(weights, labels, dummy))
}

/// Relabels node `i` as `p(i)`: `W'[p(i)][p(j)] = W[i][j]`. The result is
/// labelled by its new dense indices; the returned permutation is the
/// ground truth (source `i` corresponds to target `p(i)`).
pub fn permute(g: &Graph, p: &Permutation) -> Result<(Graph, Permutation)> {
    let n = g.n();
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.len(),
        });
    }
    let mut weights = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            weights[[p.apply(i), p.apply(j)]] = g.weights[[i, j]];
        }
    }
    let mut dummy = vec![false; n];
    for i in 0..n {
        dummy[p.apply(i)] = g.dummy[i];
    }
    let labels = (0..n).map(|i| i.to_string()).collect();
    Ok((Graph::assemble(weights, labels, dummy), p.clone()))
}

/// Adds exactly `round(q * |E|)` unit-weight edges, drawn uniformly without
/// replacement from the non-edges between non-dummy nodes.
pub fn inject_noise(g: &Graph, spec: &NoiseSpec) -> Result<Graph> {
    let spec = NoiseSpec::new(spec.q, spec.seed)?;
    let requested = spec.added_edges(g.edge_count());
    if requested == 0 {
        return Ok(g.clone());
    }
    let n = g.n();
    let mut candidates = Vec::new();
    for i in 0..n {
        if g.dummy[i] {
            continue;
        }
        for j in (i + 1)..n {
            if !g.dummy[j] && g.weights[[i, j]] == 0.0 {
                candidates.push((i, j));
            }
        }
    }
    if requested > candidates.len() {
        return Err(Error::InsufficientNonEdges {
            requested,
            available: candidates.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = g.clone();
    for idx in rand::seq::index::sample(&mut rng, candidates.len(), requested) {
        let (i, j) = candidates[idx];
        out.weights[[i, j]] = 1.0;
        out.weights[[j, i]] = 1.0;
    }
    Ok(out)
}

/// Erdős–Rényi `G(n, p)` graph with unit weights, deterministic in `seed`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                weights[[i, j]] = 1.0;
                weights[[j, i]] = 1.0;
            }
        }
    }
    Graph::from_weights(weights)
}
