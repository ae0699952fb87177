//! Feature-cross instances built from graphs, on which maximizing AUC or mutual information
//! over `k` columns is as hard as finding a densest `k`-vertex subgraph.
//!
//! Every vertex becomes a ternary column over `{0, 1, #}`. A row is drawn by picking an
//! edge `(u, v)` uniformly, giving `x_u` and `x_v` independent fair bits, setting every
//! other column to `#`, and labelling the row `x_u XOR x_v`. A set of columns `S` then
//! predicts the label exactly on the edges it induces (a fraction `φ` of the mass) and not
//! at all elsewhere. `I(S; C) = φ` bits.
//!
//! The pairwise AUC is not `(1 + φ) / 2`: a positive and a negative that both fall outside
//! the induced edges tie, which happens with probability `(1 − φ)²`, so
//! `2·auc* − 1 = 1 − (1 − φ)² = φ(2 − φ)`. This is still strictly increasing in `φ` and
//! within a factor 2 of it, so maximizing AUC remains as hard as densest subgraph.

use std::collections::BTreeSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::joint_eval::{JointColumn, JointTable};
use crate::mass::Mass;

/// Vocabulary index of the placeholder value.
pub const HASH: u32 = 2;

/// Vocabulary of every column of a hard instance.
pub fn ternary_vocabulary() -> Vec<String> {
    vec!["0".into(), "1".into(), "#".into()]
}

/// Simple undirected graph with edges stored as sorted `(u, v)`, `u < v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validates the endpoints and removes duplicate edges. Self-loops are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at vertex {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!("edge ({u}, {v}) outside 0..{n}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Graph {
            n,
            edges: set.into_iter().collect(),
        })
    }

    /// Parses `u v` lines; blank lines and lines starting with `#` are skipped. The vertex
    /// count is one more than the largest endpoint.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i as u64 + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(format!("expected `u v`, got {line:?}")));
            }
            let u: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad vertex {:?}", fields[0])))?;
            let v: usize = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad vertex {:?}", fields[1])))?;
            edges.push((u, v));
        }
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Graph::new(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|(u, v)| format!("{u} {v}\n")).collect()
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::new(n, edges).expect("valid by construction")
    }

    pub fn path(n: usize) -> Self {
        Graph::new(n, (1..n).map(|v| (v - 1, v))).expect("valid by construction")
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::path(n);
        if n > 2 {
            g = Graph::new(n, g.edges.into_iter().chain([(0, n - 1)])).expect("valid by construction");
        }
        g
    }

    pub fn star(n: usize) -> Self {
        Graph::new(n, (1..n).map(|v| (0, v))).expect("valid by construction")
    }

    /// Erdős–Rényi `G(n, p)`, deterministic under `seed`.
    pub fn gnp(n: usize, p: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p.clamp(0.0, 1.0)) {
                    edges.push((u, v));
                }
            }
        }
        Graph::new(n, edges).expect("valid by construction")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Number of edges with both endpoints in `set`.
    pub fn induced_edges(&self, set: &[usize]) -> usize {
        let s: BTreeSet<usize> = set.iter().copied().collect();
        self.edges
            .iter()
            .filter(|(u, v)| s.contains(u) && s.contains(v))
            .count()
    }
}

/// The exact joint law built from a graph.
#[derive(Clone, Debug)]
pub struct HardInstance<M: Mass> {
    pub joint: JointTable<M>,
    pub graph: Graph,
}

fn check_edges(g: &Graph) -> Result<()> {
    if g.edges.is_empty() {
        return Err(Error::Empty("the graph has no edges".into()));
    }
    Ok(())
}

/// Builds the exact distribution: four rows of mass `1 / (4|E|)` per edge.
pub fn build_hard_instance<M: Mass>(g: &Graph) -> Result<HardInstance<M>> {
    check_edges(g)?;
    let columns = (0..g.n)
        .map(|v| JointColumn::new(format!("x{v}"), ternary_vocabulary()))
        .collect();
    let w = M::from_ratio(1, 4 * g.edges.len() as u64);
    let mut rows = Vec::with_capacity(4 * g.edges.len());
    for &(u, v) in &g.edges {
        for (bu, bv) in [(0u32, 0u32), (0, 1), (1, 0), (1, 1)] {
            let mut values = vec![HASH; g.n];
            values[u] = bu;
            values[v] = bv;
            rows.push((values, (bu ^ bv) as u8, w.clone()));
        }
    }
    Ok(HardInstance {
        joint: JointTable::new(columns, rows)?,
        graph: g.clone(),
    })
}

/// One sampled row: a vocabulary index per vertex and the label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HardRow {
    pub values: Vec<u32>,
    pub label: u8,
}

/// Draws `m_rows` i.i.d. rows from the instance distribution.
pub fn sample_hard_dataset(g: &Graph, m_rows: usize, seed: u64) -> Result<Vec<HardRow>> {
    check_edges(g)?;
    if m_rows == 0 {
        return Err(Error::InvalidArgument("row count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m_rows)
        .map(|_| {
            let (u, v) = g.edges[rng.gen_range(0..g.edges.len())];
            let (bu, bv): (bool, bool) = (rng.gen(), rng.gen());
            let mut values = vec![HASH; g.n];
            values[u] = bu as u32;
            values[v] = bv as u32;
            HardRow {
                values,
                label: (bu ^ bv) as u8,
            }
        })
        .collect())
}

/// Writes sampled rows as CSV with columns `x0, …, x{n-1}, label`.
pub fn write_hard_csv<W: Write>(out: W, n: usize, rows: &[HardRow]) -> Result<()> {
    let vocab = ternary_vocabulary();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..n).map(|v| format!("x{v}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<&str> = row.values.iter().map(|&v| vocab[v as usize].as_str()).collect();
        let label = row.label.to_string();
        rec.push(&label);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reduction identities for one vertex set.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionRecord<M> {
    /// Induced edges over total edges.
    pub phi: M,
    /// `2·auc*(S) − 1` on the joint law.
    pub normalized_auc: M,
    /// `φ(2 − φ)`, the normalized AUC predicted by pairwise counting.
    pub predicted_normalized_auc: M,
    pub mi_bits: f64,
    pub mi_exact: Option<M>,
    /// `2·auc*(S) − 1 = φ`. Holds only for `φ ∈ {0, 1}`.
    pub auc_equals_phi: bool,
    /// `2·auc*(S) − 1 = φ(2 − φ)`.
    pub auc_matches_prediction: bool,
    /// `I(S; C) = φ`.
    pub mi_equals_phi: bool,
}

impl<M> ReductionRecord<M> {
    /// The identities that hold on every instance.
    pub fn consistent(&self) -> bool {
        self.auc_matches_prediction && self.mi_equals_phi
    }
}

/// Evaluates `φ`, the joint normalized AUC and the mutual information of `set`. Comparisons
/// are exact in exact mode and within `1e-9` in float mode.
pub fn verify_reduction<M: Mass>(instance: &HardInstance<M>, set: &[usize]) -> Result<ReductionRecord<M>> {
    let g = &instance.graph;
    if let Some(&v) = set.iter().find(|&&v| v >= g.n) {
        return Err(Error::UnknownColumn(v.to_string()));
    }
    let mut set = set.to_vec();
    set.sort_unstable();
    set.dedup();
    let phi = M::from_ratio(g.induced_edges(&set) as u64, g.edges.len() as u64);
    let auc = instance.joint.auc_star_joint(&set)?;
    let normalized_auc = auc.clone() + &auc - M::one();
    let predicted = phi.clone() * (M::one() + M::one() - &phi);
    let mi = instance.joint.mutual_information(&set)?;
    let mi_equals_phi = match &mi.exact {
        Some(e) => e.approx_eq(&phi, 1e-9),
        None => !M::is_exact() && (mi.bits - phi.to_f64()).abs() <= 1e-9,
    };
    Ok(ReductionRecord {
        auc_equals_phi: normalized_auc.approx_eq(&phi, 1e-9),
        auc_matches_prediction: normalized_auc.approx_eq(&predicted, 1e-9),
        mi_equals_phi,
        phi,
        normalized_auc,
        predicted_normalized_auc: predicted,
        mi_bits: mi.bits,
        mi_exact: mi.exact,
    })
}

/// Whether the columns of some edge are dependent given the label, i.e. the instance
/// breaks the naive-Bayes assumption. Returns the first such edge.
pub fn naive_bayes_violation<M: Mass>(instance: &HardInstance<M>) -> Result<Option<(usize, usize)>> {
    for &(u, v) in &instance.graph.edges {
        if !instance.joint.conditionally_independent(u, v)? {
            return Ok(Some((u, v)));
        }
    }
    Ok(None)
}
