//! Iterated same-region pairing within one block.
//!
//! Each round groups the live nodes by the region of their current value,
//! pairs nodes inside every group and replaces each pair `(u, v)` with the
//! difference `u - v`. Because same-region vectors are at most 60 degrees
//! apart, `||u - v|| <= max(||u||, ||v||)`, so no node ever outgrows the
//! block's term bound. Rounds continue until at most one node per region
//! remains. The nodes form a forest whose roots are the residuals; pushing
//! `+1` down from every root, and negating on each right edge, yields signs
//! whose signed sum of the block terms equals the sum of the residuals.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{difference_shrinks, RegionMap, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "+" => Ok(Sign::Plus),
            "-1" | "-" => Ok(Sign::Minus),
            other => Err(Error::domain(format!("not a sign: {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairingPolicy {
    /// Pair consecutive nodes of a region by ascending first term index.
    #[default]
    Ordered,
    /// Shuffle each region with the seeded generator before pairing.
    Random,
}

impl FromStr for PairingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ordered" => Ok(PairingPolicy::Ordered),
            "random" => Ok(PairingPolicy::Random),
            other => Err(Error::Config(format!(
                "unknown pairing policy {other:?} (expected ordered|random)"
            ))),
        }
    }
}

impl fmt::Display for PairingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairingPolicy::Ordered => "ordered",
            PairingPolicy::Random => "random",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// 0-based position of the term within its block.
    Leaf(usize),
    Diff { left: usize, right: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionNode {
    pub kind: NodeKind,
    pub value: Vector,
    /// Smallest term position among the leaves below this node.
    pub min_leaf: usize,
    /// Round that created the node; 0 for leaves.
    pub round: usize,
}

/// Node ids alive after one pairing round (the set `C_{m,i}`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionLayer {
    pub round: usize,
    pub node_ids: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockReduction {
    pub block_level: i64,
    /// Node arena. Ids `0..term_count` are the leaves, in term order.
    pub nodes: Vec<ReductionNode>,
    pub layers: Vec<ReductionLayer>,
    pub residual_ids: Vec<usize>,
    /// Nodes with an exactly zero value, set aside before region lookup.
    pub zero_pool: Vec<usize>,
    pub residual_sum: Vector,
}

impl BlockReduction {
    pub fn term_count(&self) -> usize {
        self.nodes
            .iter()
            .take_while(|n| matches!(n.kind, NodeKind::Leaf(_)))
            .count()
    }

    pub fn rounds(&self) -> usize {
        self.layers.len()
    }

    /// One line per difference node:
    /// `round=<i> id=<n> left=<id> right=<id> value=<x> <y>`.
    pub fn trace_lines(&self) -> String {
        let mut out = String::new();
        for (id, node) in self.nodes.iter().enumerate() {
            if let NodeKind::Diff { left, right } = node.kind {
                writeln!(
                    out,
                    "round={} id={id} left={left} right={right} value={}",
                    node.round, node.value
                )
                .expect("writing to a String");
            }
        }
        out
    }
}

/// Pairs the live nodes `alive` region by region.
///
/// Returns `(u, v)` pairs, with `u` the node holding the smaller first term
/// index, and the at most one leftover per region. Nodes must be nonzero.
pub fn pair_layer(
    nodes: &[ReductionNode],
    alive: &[usize],
    regions: &dyn RegionMap,
    policy: PairingPolicy,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<(usize, usize)>, Vec<usize>)> {
    let count = regions.region_count();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); count];
    for &id in alive {
        let r = regions.region_of(&nodes[id].value)?;
        if r >= count {
            return Err(Error::Internal(format!(
                "region map returned {r} with only {count} regions"
            )));
        }
        groups[r].push(id);
    }
    let mut pairs = Vec::new();
    let mut leftovers = Vec::new();
    for mut group in groups {
        match policy {
            PairingPolicy::Ordered => group.sort_by_key(|&id| nodes[id].min_leaf),
            PairingPolicy::Random => group.shuffle(rng),
        }
        let mut chunks = group.chunks_exact(2);
        for pair in &mut chunks {
            let (a, b) = (pair[0], pair[1]);
            if nodes[a].min_leaf <= nodes[b].min_leaf {
                pairs.push((a, b));
            } else {
                pairs.push((b, a));
            }
        }
        leftovers.extend_from_slice(chunks.remainder());
    }
    Ok((pairs, leftovers))
}

/// Reduces one block to at most `regions.region_count()` residual nodes.
pub fn reduce_block(
    block_level: i64,
    terms: &[Vector],
    regions: &dyn RegionMap,
    policy: PairingPolicy,
    seed: u64,
) -> Result<BlockReduction> {
    let dim = regions.dim();
    if let Some(t) = terms.iter().find(|t| t.dim() != dim) {
        return Err(Error::domain(format!(
            "term of dim {} in a dim-{dim} reduction",
            t.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<ReductionNode> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| ReductionNode {
            kind: NodeKind::Leaf(i),
            value: t.clone(),
            min_leaf: i,
            round: 0,
        })
        .collect();
    let (mut zero_pool, mut alive): (Vec<usize>, Vec<usize>) =
        (0..nodes.len()).partition(|&i| nodes[i].value.is_zero());

    let limit = regions.region_count();
    let mut layers = Vec::new();
    while alive.len() > limit {
        let round = layers.len() + 1;
        let (pairs, leftovers) = pair_layer(&nodes, &alive, regions, policy, &mut rng)?;
        if pairs.is_empty() {
            return Err(Error::Internal(format!(
                "round {round}: {} nodes in {limit} regions produced no pair",
                alive.len()
            )));
        }
        let mut next = leftovers;
        for (u, v) in pairs {
            let (uv, vv) = (&nodes[u].value, &nodes[v].value);
            if !difference_shrinks(uv, vv) {
                return Err(Error::Internal(format!(
                    "round {round}: ||u - v|| exceeds max(||u||, ||v||) for u = {uv}, v = {vv}"
                )));
            }
            let value = uv.sub(vv);
            let id = nodes.len();
            let zero = value.is_zero();
            nodes.push(ReductionNode {
                kind: NodeKind::Diff { left: u, right: v },
                value,
                min_leaf: nodes[u].min_leaf.min(nodes[v].min_leaf),
                round,
            });
            if zero {
                zero_pool.push(id);
            } else {
                next.push(id);
            }
        }
        next.sort_by_key(|&id| nodes[id].min_leaf);
        alive = next;
        layers.push(ReductionLayer {
            round,
            node_ids: alive.clone(),
        });
    }

    let mut residual_sum = Vector::zeros(dim);
    for &id in &alive {
        residual_sum.add_scaled(1.0, &nodes[id].value);
    }
    Ok(BlockReduction {
        block_level,
        nodes,
        layers,
        residual_ids: alive,
        zero_pool,
        residual_sum,
    })
}

/// Signs for the block terms, in term order, whose signed sum equals the
/// residual sum.
pub fn recover_signs(reduction: &BlockReduction) -> Result<Vec<Sign>> {
    let nodes = &reduction.nodes;
    let mut node_sign: Vec<Option<Sign>> = vec![None; nodes.len()];
    let mut stack: Vec<(usize, Sign)> = reduction
        .residual_ids
        .iter()
        .chain(&reduction.zero_pool)
        .map(|&id| (id, Sign::Plus))
        .collect();
    while let Some((id, sign)) = stack.pop() {
        let node = nodes
            .get(id)
            .ok_or_else(|| Error::Internal(format!("dangling node id {id}")))?;
        if node_sign[id].replace(sign).is_some() {
            return Err(Error::Internal(format!("node {id} reached twice")));
        }
        if let NodeKind::Diff { left, right } = node.kind {
            stack.push((left, sign));
            stack.push((right, sign.flip()));
        }
    }
    if let Some(orphan) = node_sign.iter().position(Option::is_none) {
        return Err(Error::Internal(format!(
            "node {orphan} is not reachable from any residual"
        )));
    }
    let mut signs = vec![Sign::Plus; reduction.term_count()];
    for (node, sign) in nodes.iter().zip(node_sign) {
        if let NodeKind::Leaf(i) = node.kind {
            signs[i] = sign.expect("checked above");
        }
    }
    Ok(signs)
}

/// `Σ signs[i] · terms[i]` in `R^dim`.
pub fn replay_signs(dim: usize, terms: &[Vector], signs: &[Sign]) -> Result<Vector> {
    if terms.len() != signs.len() {
        return Err(Error::domain(format!(
            "{} terms but {} signs",
            terms.len(),
            signs.len()
        )));
    }
    let mut sum = Vector::zeros(dim);
    for (t, s) in terms.iter().zip(signs) {
        if t.dim() != dim {
            return Err(Error::domain(format!("term of dim {} in R^{dim}", t.dim())));
        }
        sum.add_scaled(s.as_f64(), t);
    }
    Ok(sum)
}

/// Whether a replayed sum agrees with a residual sum to `1e-9` relative to
/// `scale`, the larger of the residual norm and the largest term norm.
pub fn replay_matches(replayed: &Vector, residual_sum: &Vector, max_term_norm: f64) -> bool {
    let scale = residual_sum.norm().max(max_term_norm);
    replayed.distance(residual_sum) <= 1e-9 * scale
}
