//! Sequence to sign assignment: block plan, per-block reductions, and the
//! per-block bound ledger that certifies the construction.

use rayon::prelude::*;

use crate::blocking::{compute_thresholds, level_threshold, partition_blocks, Block, BlockPlan};
use crate::error::{Error, Result};
use crate::geometry::{ConeCover, RegionMap, SectorPartition2D, Vector};
use crate::reduction::{
    recover_signs, reduce_block, replay_matches, replay_signs, BlockReduction, PairingPolicy,
    Sign,
};

pub const DEFAULT_MAX_K: usize = 64;

/// One sign per term; the first sign is always `+1`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SignAssignment(Vec<Sign>);

impl SignAssignment {
    pub fn new(signs: Vec<Sign>) -> Result<Self> {
        if signs.first() == Some(&Sign::Minus) {
            return Err(Error::domain("the leading sign of an assignment must be +1"));
        }
        Ok(SignAssignment(signs))
    }

    pub fn signs(&self) -> &[Sign] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Sign> {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct AssignConfig {
    pub policy: PairingPolicy,
    pub seed: u64,
    pub max_k: usize,
    /// Verified cone cover for inputs outside the plane. `None` selects the
    /// six-sector partition and requires planar input.
    pub cover: Option<ConeCover>,
}

impl Default for AssignConfig {
    fn default() -> Self {
        AssignConfig::new(PairingPolicy::default(), 0)
    }
}

impl AssignConfig {
    pub fn new(policy: PairingPolicy, seed: u64) -> Self {
        AssignConfig {
            policy,
            seed,
            max_k: DEFAULT_MAX_K,
            cover: None,
        }
    }

    pub fn with_cover(mut self, cover: ConeCover) -> Self {
        self.cover = Some(cover);
        self
    }

    pub fn with_max_k(mut self, max_k: usize) -> Self {
        self.max_k = max_k;
        self
    }

    fn regions(&self) -> &dyn RegionMap {
        match &self.cover {
            Some(cover) => cover,
            None => &SectorPartition2D,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSummary {
    pub level: i64,
    /// First term, 0-based.
    pub start: usize,
    pub count: usize,
    pub rounds: usize,
    /// Signed sum of the block's terms under the final assignment.
    pub residual: Vector,
    pub residual_norm: f64,
    /// `K/(m+1)^2` with `K` the region count; `None` for the prefix.
    pub bound: Option<f64>,
    pub bound_satisfied: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentReport {
    /// Regions in the partition: 6 in the plane, the cover size otherwise.
    pub region_count: usize,
    pub plan: BlockPlan,
    pub prefix: BlockSummary,
    /// Levels `0, 1, ...` in order.
    pub blocks: Vec<BlockSummary>,
    /// `Σ K/(m+1)^2` over the levels present.
    pub tail_bound: f64,
}

/// `true` iff every level-`m` block's residual is strictly inside its bound.
pub fn certify(report: &AssignmentReport) -> bool {
    report.blocks.iter().all(|b| match b.bound {
        Some(bound) => b.bound_satisfied && b.residual_norm < bound,
        None => false,
    })
}

/// Everything the engine computed, including the reduction forests.
#[derive(Clone, Debug)]
pub struct AssignmentRun {
    pub assignment: SignAssignment,
    pub report: AssignmentReport,
    /// Prefix first, then levels in order.
    pub reductions: Vec<BlockReduction>,
}

pub fn assign_signs(seq: &[Vector], config: &AssignConfig) -> Result<(SignAssignment, AssignmentReport)> {
    let run = run_assignment(seq, config)?;
    Ok((run.assignment, run.report))
}

fn block_seed(seed: u64, level: i64) -> u64 {
    // splitmix64 finalizer over the level-tagged seed
    let mut z = seed ^ ((level + 1) as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn validate(seq: &[Vector], config: &AssignConfig) -> Result<usize> {
    let first = seq
        .first()
        .ok_or_else(|| Error::domain("cannot assign signs to an empty sequence"))?;
    let dim = first.dim();
    if let Some((i, v)) = seq.iter().enumerate().find(|(_, v)| v.dim() != dim) {
        return Err(Error::domain(format!(
            "term {} has dim {}, term 1 has dim {dim}",
            i + 1,
            v.dim()
        )));
    }
    match &config.cover {
        None if dim != 2 => Err(Error::Config(format!(
            "dim {dim} input needs a verified cone cover"
        ))),
        Some(cover) if cover.verified_radius().is_none() => Err(Error::Config(
            "cone cover has no verified radius; run verify_cover first".into(),
        )),
        Some(cover) if cover.dim() != dim => Err(Error::Config(format!(
            "cover is for dim {}, input has dim {dim}",
            cover.dim()
        ))),
        _ => Ok(dim),
    }
}

fn reduce_and_sign(
    seq: &[Vector],
    block: &Block,
    config: &AssignConfig,
    dim: usize,
) -> Result<(BlockReduction, Vec<Sign>)> {
    let terms = &seq[block.range.clone()];
    let reduction = reduce_block(
        block.level,
        terms,
        config.regions(),
        config.policy,
        block_seed(config.seed, block.level),
    )?;
    let signs = recover_signs(&reduction)?;
    let replayed = replay_signs(dim, terms, &signs)?;
    let max_norm = terms.iter().map(Vector::norm).fold(0.0, f64::max);
    if !replay_matches(&replayed, &reduction.residual_sum, max_norm) {
        return Err(Error::Internal(format!(
            "level {}: replayed sum {replayed} differs from residual sum {}",
            block.level, reduction.residual_sum
        )));
    }
    Ok((reduction, signs))
}

/// Runs the full construction and keeps every intermediate.
pub fn run_assignment(seq: &[Vector], config: &AssignConfig) -> Result<AssignmentRun> {
    let dim = validate(seq, config)?;
    let norms: Vec<f64> = seq.iter().map(Vector::norm).collect();
    let thresholds = compute_thresholds(&norms, config.max_k)?;
    let plan = partition_blocks(seq.len(), &thresholds)?;

    let results: Vec<(BlockReduction, Vec<Sign>)> = plan
        .blocks
        .par_iter()
        .map(|block| reduce_and_sign(seq, block, config, dim))
        .collect::<Result<_>>()?;

    let mut signs = Vec::with_capacity(seq.len());
    for (_, block_signs) in &results {
        signs.extend_from_slice(block_signs);
    }
    // Fix the leading sign by negating the whole block holding term 1;
    // that negates the block's residual and leaves its norm unchanged.
    let mut flipped_level = None;
    if signs[0] == Sign::Minus {
        let block = plan.block_of(0).expect("term 1 lies in some block");
        for s in &mut signs[block.range.clone()] {
            *s = s.flip();
        }
        flipped_level = Some(block.level);
    }

    let region_count = config.regions().region_count();
    let summaries: Vec<BlockSummary> = plan
        .blocks
        .iter()
        .zip(&results)
        .map(|(block, (reduction, _))| {
            let mut residual = reduction.residual_sum.clone();
            if flipped_level == Some(block.level) {
                residual = Vector::zeros(dim).sub(&residual);
            }
            let residual_norm = residual.norm();
            let bound = block.term_bound().map(|t| region_count as f64 * t);
            BlockSummary {
                level: block.level,
                start: block.range.start,
                count: block.len(),
                rounds: reduction.rounds(),
                residual,
                residual_norm,
                bound,
                bound_satisfied: bound.is_none_or(|b| residual_norm < b),
            }
        })
        .collect();
    let mut summaries = summaries.into_iter();
    let prefix = summaries.next().expect("plan always has a prefix block");
    let blocks: Vec<BlockSummary> = summaries.collect();
    let tail_bound = blocks.iter().filter_map(|b| b.bound).sum();

    Ok(AssignmentRun {
        assignment: SignAssignment::new(signs)?,
        report: AssignmentReport {
            region_count,
            plan,
            prefix,
            blocks,
            tail_bound,
        },
        reductions: results.into_iter().map(|(r, _)| r).collect(),
    })
}

/// Bound constant `K/(m+1)^2` for level `m`.
pub fn block_bound(region_count: usize, level: usize) -> f64 {
    region_count as f64 * level_threshold(level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_cone_cover, verify_cover};
    use crate::reduction::replay_signs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn spiral(len: usize) -> Vec<Vector> {
        (1..=len)
            .map(|i| {
                let t = i as f64;
                Vector::xy(t.cos() / t, t.sin() / t)
            })
            .collect()
    }

    fn random_decaying(rng: &mut ChaCha8Rng, len: usize) -> Vec<Vector> {
        (1..=len)
            .map(|i| {
                let a: f64 = rng.random_range(0.0..2.0 * PI);
                let r: f64 = rng.random_range(0.0..1.0) / (i as f64).sqrt();
                Vector::xy(r * a.cos(), r * a.sin())
            })
            .collect()
    }

    #[test]
    fn single_term() {
        let (a, report) = assign_signs(&[Vector::xy(1.0, 0.0)], &AssignConfig::default()).unwrap();
        assert_eq!(a.signs(), &[Sign::Plus]);
        assert!(report.blocks.is_empty());
        assert!(certify(&report));
    }

    #[test]
    fn identical_tail_cancels() {
        let mut seq = vec![Vector::xy(1.0, 0.0)];
        seq.extend(std::iter::repeat_n(Vector::xy(0.1, 0.0), 8));
        let (a, report) = assign_signs(&seq, &AssignConfig::new(PairingPolicy::Ordered, 0)).unwrap();
        assert_eq!(a.signs()[0], Sign::Plus);
        assert_eq!(report.prefix.count, 1);
        for b in &report.blocks {
            assert_eq!(b.residual_norm, 0.0, "level {}", b.level);
        }
        let minus = a.signs().iter().filter(|s| **s == Sign::Minus).count();
        assert_eq!(minus, 4);
        assert!(certify(&report));
    }

    #[test]
    fn spiral_certifies_and_replays() {
        let seq = spiral(100_000);
        for policy in [PairingPolicy::Ordered, PairingPolicy::Random] {
            let (a, report) = assign_signs(&seq, &AssignConfig::new(policy, 3)).unwrap();
            assert!(certify(&report));
            assert_eq!(a.len(), seq.len());
            assert_eq!(a.signs()[0], Sign::Plus);
            for b in &report.blocks {
                let range = b.start..b.start + b.count;
                let replayed = replay_signs(2, &seq[range.clone()], &a.signs()[range]).unwrap();
                assert!(replayed.distance(&b.residual) <= 1e-9 * b.bound.unwrap());
                assert!(b.residual_norm < 6.0 / ((b.level + 1) as f64).powi(2));
            }
        }
    }

    #[test]
    fn leading_sign_is_plus_without_prefix() {
        // every term already below 1, so the prefix is empty
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..20 {
            let seq: Vec<_> = random_decaying(&mut rng, 50).into_iter().map(|v| {
                let c = v.components();
                Vector::xy(c[0] * 0.9, c[1] * 0.9)
            }).collect();
            let (a, report) = assign_signs(&seq, &AssignConfig::new(PairingPolicy::Random, seed)).unwrap();
            assert_eq!(report.prefix.count, 0);
            assert_eq!(a.signs()[0], Sign::Plus);
            assert!(certify(&report));
        }
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(matches!(assign_signs(&[], &AssignConfig::default()), Err(Error::Domain(_))));
        let v3 = vec![Vector::new(vec![1.0, 0.0, 0.0]).unwrap()];
        assert!(matches!(assign_signs(&v3, &AssignConfig::default()), Err(Error::Config(_))));
        let unverified = build_cone_cover(3, PI / 6.0, 2_000, 0).unwrap();
        let config = AssignConfig::default().with_cover(unverified);
        assert!(matches!(assign_signs(&v3, &config), Err(Error::Config(_))));
        let mixed = vec![Vector::xy(1.0, 0.0), Vector::new(vec![1.0, 0.0, 0.0]).unwrap()];
        assert!(assign_signs(&mixed, &AssignConfig::default()).is_err());
    }

    #[test]
    fn certify_rejects_oversized_residual() {
        let (_, mut report) = assign_signs(&spiral(200), &AssignConfig::default()).unwrap();
        assert!(certify(&report));
        let b = &mut report.blocks[2];
        b.residual_norm = 7.0 / 9.0;
        assert!(!certify(&report));
    }

    #[test]
    fn three_dim_run_uses_cover_size() {
        let mut cover = build_cone_cover(3, PI / 6.0, 20_000, 11).unwrap();
        verify_cover(&mut cover, 50_000, 12);
        let k = cover.len();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq: Vec<_> = (1..=5_000)
            .map(|i| {
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let v = Vector::new(v).unwrap();
                let s = 1.0 / (i as f64).sqrt() / v.norm();
                Vector::new(v.components().iter().map(|c| c * s).collect()).unwrap()
            })
            .collect();
        let (_, report) = assign_signs(&seq, &AssignConfig::default().with_cover(cover)).unwrap();
        assert_eq!(report.region_count, k);
        assert!(certify(&report));
        for b in &report.blocks {
            assert_eq!(b.bound, Some(block_bound(k, b.level as usize)));
        }
    }

    #[test]
    fn idempotent_on_reassignment() {
        let seq = spiral(3_000);
        let config = AssignConfig::new(PairingPolicy::Random, 21);
        let (a, _) = assign_signs(&seq, &config).unwrap();
        let (b, _) = assign_signs(&seq, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn policies_certify_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for seed in 0..100 {
            let seq = random_decaying(&mut rng, 400);
            for policy in [PairingPolicy::Ordered, PairingPolicy::Random] {
                let (_, report) = assign_signs(&seq, &AssignConfig::new(policy, seed)).unwrap();
                assert!(certify(&report), "seed {seed} {policy}");
            }
        }
    }
}
