//! Convergence diagnostics, a brute-force sign oracle, a greedy baseline
//! and the perfect-divergence witness.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::assignment::SignAssignment;
use crate::blocking::BlockPlan;
use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::reduction::Sign;

/// Relative slack when comparing computed norms against an exact floor.
pub const NORM_FLOOR_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_ORACLE_CAP: usize = 24;

/// Signed prefix sums `S_i = Σ_{j<=i} s_j a_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSumTrace {
    pub sums: Vec<Vector>,
    pub norms: Vec<f64>,
}

impl PartialSumTrace {
    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    /// `S_i`, with `S_0 = 0` for `count == 0`; `count` is a number of terms.
    pub fn after(&self, count: usize, dim: usize) -> Vector {
        match count {
            0 => Vector::zeros(dim),
            n => self.sums[n - 1].clone(),
        }
    }

    /// Smallest distance between consecutive prefix sums, counting the
    /// step from the origin to `S_1`.
    pub fn min_step(&self) -> f64 {
        let mut prev: Option<&Vector> = None;
        let mut min = f64::INFINITY;
        for (s, n) in self.sums.iter().zip(&self.norms) {
            let step = match prev {
                None => *n,
                Some(p) => s.distance(p),
            };
            min = min.min(step);
            prev = Some(s);
        }
        min
    }
}

pub fn partial_sums(seq: &[Vector], signs: &[Sign]) -> Result<PartialSumTrace> {
    if seq.len() != signs.len() {
        return Err(Error::domain(format!(
            "{} terms but {} signs",
            seq.len(),
            signs.len()
        )));
    }
    let Some(first) = seq.first() else {
        return Ok(PartialSumTrace {
            sums: vec![],
            norms: vec![],
        });
    };
    let dim = first.dim();
    let mut running = Vector::zeros(dim);
    let mut sums = Vec::with_capacity(seq.len());
    let mut norms = Vec::with_capacity(seq.len());
    for (i, (a, s)) in seq.iter().zip(signs).enumerate() {
        if a.dim() != dim {
            return Err(Error::domain(format!("term {} has dim {}", i + 1, a.dim())));
        }
        running.add_scaled(s.as_f64(), a);
        norms.push(running.norm());
        sums.push(running.clone());
    }
    Ok(PartialSumTrace { sums, norms })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    One,
    Two,
    Max,
}

impl NormKind {
    pub fn eval(self, v: &Vector) -> f64 {
        match self {
            NormKind::One => v.norm_one(),
            NormKind::Two => v.norm(),
            NormKind::Max => v.norm_max(),
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(NormKind::One),
            "two" | "2" => Ok(NormKind::Two),
            "max" | "inf" => Ok(NormKind::Max),
            other => Err(Error::domain(format!(
                "unknown norm {other:?} (expected one|two|max)"
            ))),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::One => "one",
            NormKind::Two => "two",
            NormKind::Max => "max",
        })
    }
}

pub fn alt_norm_trace(trace: &PartialSumTrace, norm: NormKind) -> Vec<f64> {
    trace.sums.iter().map(|s| norm.eval(s)).collect()
}

/// `Σ_{m>=level} 1/(m+1)^2`, via the Basel sum.
pub fn level_tail_sum(level: usize) -> f64 {
    let head: f64 = (1..=level).map(|j| 1.0 / (j as f64 * j as f64)).sum();
    PI * PI / 6.0 - head
}

#[derive(Clone, Debug, PartialEq)]
pub struct CauchyRow {
    pub level: usize,
    /// Largest distance between block-boundary sums from the start of
    /// level `level` onward.
    pub actual: f64,
    /// `K · Σ_{m>=level} 1/(m+1)^2`.
    pub predicted: f64,
}

impl CauchyRow {
    pub fn ok(&self) -> bool {
        self.actual <= self.predicted
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub region_count: usize,
    /// `boundary_sums[0]` closes the prefix block; `boundary_sums[m+1]`
    /// closes level `m`.
    pub boundary_sums: Vec<Vector>,
    /// One row per level present, starting at level 0.
    pub cauchy: Vec<CauchyRow>,
    /// Largest distance from a block's opening sum to any sum inside it,
    /// per level. Reported only; nothing bounds it.
    pub intra_block_max_deviation: Vec<f64>,
    pub final_two_norm: f64,
    pub final_one_norm: f64,
    pub final_max_norm: f64,
}

impl ConvergenceReport {
    pub fn all_cauchy_ok(&self) -> bool {
        self.cauchy.iter().all(CauchyRow::ok)
    }
}

/// Builds the convergence report for `signs` applied to `seq`, whose
/// blocks are described by `plan`. `region_count` is the bound constant
/// `K` (6 in the plane).
pub fn convergence_report(
    seq: &[Vector],
    signs: &[Sign],
    plan: &BlockPlan,
    region_count: usize,
) -> Result<ConvergenceReport> {
    if plan.thresholds.sequence_length() != seq.len() {
        return Err(Error::domain("block plan does not match the sequence"));
    }
    let dim = seq.first().map_or(2, Vector::dim);
    let trace = partial_sums(seq, signs)?;

    let boundary_sums: Vec<Vector> = plan
        .blocks
        .iter()
        .map(|b| trace.after(b.range.end, dim))
        .collect();

    let intra_block_max_deviation = plan
        .leveled()
        .iter()
        .zip(&boundary_sums)
        .map(|(b, open)| {
            b.range
                .clone()
                .map(|i| trace.sums[i].distance(open))
                .fold(0.0, f64::max)
        })
        .collect();

    let k = region_count as f64;
    let cauchy = (0..plan.leveled().len())
        .map(|level| CauchyRow {
            level,
            actual: max_pairwise_distance(&boundary_sums[level..]),
            predicted: k * level_tail_sum(level),
        })
        .collect();

    let last = trace.after(seq.len(), dim);
    Ok(ConvergenceReport {
        region_count,
        boundary_sums,
        cauchy,
        intra_block_max_deviation,
        final_two_norm: last.norm(),
        final_one_norm: last.norm_one(),
        final_max_norm: last.norm_max(),
    })
}

fn max_pairwise_distance(points: &[Vector]) -> f64 {
    let mut best = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max(p.distance(q));
        }
    }
    best
}

/// `(actual, predicted)` Cauchy modulus from level `level` onward.
pub fn cauchy_check(report: &ConvergenceReport, level: usize) -> Result<(f64, f64)> {
    report
        .cauchy
        .get(level)
        .map(|row| (row.actual, row.predicted))
        .ok_or_else(|| {
            Error::domain(format!(
                "level {level} requested but only {} levels are present",
                report.cauchy.len()
            ))
        })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub min_residual_norm: f64,
    pub argmin_signs: Vec<Sign>,
    pub enumerated_count: u64,
}

const ORACLE_CHUNK_BITS: u32 = 12;

/// Exhaustive minimum of `||Σ s_i a_i||` over all signs with `s_1 = +1`.
///
/// Bit `j` of a pattern negates term `j + 1`. Ties resolve to the lowest
/// pattern, whatever the thread count.
pub fn oracle_min_residual(terms: &[Vector], cap: usize) -> Result<OracleResult> {
    let n = terms.len();
    if n == 0 {
        return Err(Error::domain("oracle needs at least one term"));
    }
    if n > cap {
        return Err(Error::OracleCap { n, cap });
    }
    if n > 63 {
        return Err(Error::domain("oracle pattern space exceeds 2^63"));
    }
    let dim = terms[0].dim();
    if terms.iter().any(|t| t.dim() != dim) {
        return Err(Error::domain("oracle terms must share one dimension"));
    }
    let coords: Vec<&[f64]> = terms.iter().map(Vector::components).collect();
    let total: u64 = 1 << (n - 1);
    let chunk = 1u64 << ORACLE_CHUNK_BITS;
    let chunks = total.div_ceil(chunk);

    let (best_sq, best_pattern) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![0.0; dim];
            let mut best = (f64::INFINITY, u64::MAX);
            for pattern in c * chunk..((c + 1) * chunk).min(total) {
                sum.copy_from_slice(coords[0]);
                for (j, t) in coords[1..].iter().enumerate() {
                    let s = if pattern >> j & 1 == 1 { -1.0 } else { 1.0 };
                    for (acc, x) in sum.iter_mut().zip(t.iter()) {
                        *acc += s * x;
                    }
                }
                let sq: f64 = sum.iter().map(|x| x * x).sum();
                if sq < best.0 {
                    best = (sq, pattern);
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Less => a,
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Equal => if a.1 <= b.1 { a } else { b },
            },
        );

    let argmin_signs = std::iter::once(Sign::Plus)
        .chain((0..n - 1).map(|j| {
            if best_pattern >> j & 1 == 1 {
                Sign::Minus
            } else {
                Sign::Plus
            }
        }))
        .collect();
    Ok(OracleResult {
        min_residual_norm: best_sq.sqrt(),
        argmin_signs,
        enumerated_count: total,
    })
}

/// Chooses each sign to minimise the running sum's norm, `+1` on ties.
pub fn greedy_baseline(seq: &[Vector]) -> Result<SignAssignment> {
    let first = seq
        .first()
        .ok_or_else(|| Error::domain("greedy baseline needs a nonempty sequence"))?;
    let mut running = first.clone();
    let mut signs = vec![Sign::Plus];
    for a in &seq[1..] {
        let mut plus = running.clone();
        plus.add_scaled(1.0, a);
        let mut minus = running.clone();
        minus.add_scaled(-1.0, a);
        if minus.norm() < plus.norm() {
            signs.push(Sign::Minus);
            running = minus;
        } else {
            signs.push(Sign::Plus);
            running = plus;
        }
    }
    SignAssignment::new(signs)
}

/// Whether every term has norm at least `c`. When it does, every signed
/// series of `seq` moves at least `c` per step and none converges.
pub fn divergence_witness_check(seq: &[Vector], c: f64) -> Result<bool> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::domain(format!("witness floor {c} must be positive")));
    }
    let floor = c * (1.0 - NORM_FLOOR_TOLERANCE);
    Ok(seq.iter().all(|a| a.norm() >= floor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{run_assignment, AssignConfig};
    use crate::blocking::{compute_thresholds, partition_blocks};
    use crate::reduction::{reduce_block, PairingPolicy};
    use crate::geometry::SectorPartition2D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use Sign::{Minus as M, Plus as P};

    fn e1() -> Vector {
        Vector::xy(1.0, 0.0)
    }

    fn spiral(len: usize) -> Vec<Vector> {
        (1..=len)
            .map(|i| {
                let t = i as f64;
                Vector::xy(t.cos() / t, t.sin() / t)
            })
            .collect()
    }

    #[test]
    fn partial_sum_examples() {
        let t = partial_sums(&[e1(), e1()], &[P, M]).unwrap();
        assert_eq!(t.sums, vec![e1(), Vector::xy(0.0, 0.0)]);
        let t = partial_sums(&[e1()], &[P]).unwrap();
        assert_eq!(t.sums, vec![e1()]);
        assert!(partial_sums(&[e1()], &[]).is_err());
    }

    #[test]
    fn alt_norm_examples() {
        let t = partial_sums(&[e1(), e1()], &[P, M]).unwrap();
        assert_eq!(alt_norm_trace(&t, NormKind::Max), vec![1.0, 0.0]);
        let t = partial_sums(&[Vector::xy(3.0, 4.0)], &[P]).unwrap();
        assert_eq!(alt_norm_trace(&t, NormKind::One), vec![7.0]);
        assert_eq!(alt_norm_trace(&t, NormKind::Two), vec![5.0]);
        assert!("euclid".parse::<NormKind>().is_err());
    }

    #[test]
    fn basel_tail() {
        // 6 (π²/6 - 1)
        assert!((6.0 * level_tail_sum(1) - 3.869_604_401_089_358).abs() < 1e-12);
        let brute: f64 = (10..2_000_000).map(|m| 1.0 / ((m + 1) as f64).powi(2)).sum();
        assert!((level_tail_sum(10) - brute).abs() < 1e-6);
        for m in 1..60 {
            assert!(6.0 * level_tail_sum(m) <= 6.0 / m as f64);
        }
    }

    #[test]
    fn spiral_cauchy_within_prediction() {
        let seq = spiral(200_000);
        let run = run_assignment(&seq, &AssignConfig::default()).unwrap();
        let report = convergence_report(
            &seq,
            run.assignment.signs(),
            &run.report.plan,
            run.report.region_count,
        )
        .unwrap();
        assert!(report.all_cauchy_ok());
        let (actual, predicted) = cauchy_check(&report, 10).unwrap();
        assert!(actual <= 6.0 / 10.0 && actual <= predicted);
        assert!(cauchy_check(&report, 1_000).is_err());
        // one block: step across level m is exactly that block's residual
        for (m, b) in run.report.blocks.iter().enumerate() {
            let step = report.boundary_sums[m + 1].distance(&report.boundary_sums[m]);
            assert!((step - b.residual_norm).abs() <= 1e-9);
        }
        // one-norm distances against euclidean, constant √2 in the plane
        for w in report.boundary_sums.windows(2) {
            let d = w[1].sub(&w[0]);
            assert!(d.norm_one() <= 2f64.sqrt() * d.norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn oracle_examples() {
        let r = oracle_min_residual(&[e1(), e1()], DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(r.min_residual_norm, 0.0);
        assert_eq!(r.argmin_signs, vec![P, M]);
        assert_eq!(r.enumerated_count, 2);

        let terms = [Vector::xy(3.0, 0.0), e1(), e1(), e1()];
        let r = oracle_min_residual(&terms, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(r.min_residual_norm, 0.0);
        assert_eq!(r.argmin_signs, vec![P, M, M, M]);
        assert_eq!(r.enumerated_count, 8);
    }

    #[test]
    fn oracle_refuses_above_cap() {
        let terms = vec![e1(); 30];
        assert!(matches!(
            oracle_min_residual(&terms, DEFAULT_ORACLE_CAP),
            Err(Error::OracleCap { n: 30, cap: 24 })
        ));
        assert!(oracle_min_residual(&[], 24).is_err());
    }

    #[test]
    fn oracle_tie_breaks_low() {
        // (1,0),(1,0),(1,0): patterns 01, 10 both give norm 1; 00 gives 3, 11 gives 1
        let r = oracle_min_residual(&[e1(), e1(), e1()], 24).unwrap();
        assert_eq!(r.argmin_signs, vec![P, M, P]);
    }

    #[test]
    fn oracle_matches_naive_and_dominates_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let terms: Vec<_> = (0..12)
            .map(|_| {
                let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let r: f64 = rng.random_range(0.0..1.0);
                Vector::xy(r * a.cos(), r * a.sin())
            })
            .collect();
        let r = oracle_min_residual(&terms, 24).unwrap();
        // independent scan with first sign free: symmetric, same minimum
        let mut naive = f64::INFINITY;
        for p in 0u32..(1 << 12) {
            let mut s = Vector::zeros(2);
            for (j, t) in terms.iter().enumerate() {
                s.add_scaled(if p >> j & 1 == 1 { -1.0 } else { 1.0 }, t);
            }
            naive = naive.min(s.norm());
        }
        assert!((r.min_residual_norm - naive).abs() < 1e-12);
        let red = reduce_block(0, &terms, &SectorPartition2D, PairingPolicy::Ordered, 0).unwrap();
        assert!(r.min_residual_norm <= red.residual_sum.norm() + 1e-12);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_baseline(&[e1(), e1()]).unwrap().signs(), &[P, M]);
        let g = greedy_baseline(&[e1(), Vector::xy(0.0, 1.0)]).unwrap();
        assert_eq!(g.signs(), &[P, P]);
        let seq = vec![e1(); 9];
        let g = greedy_baseline(&seq).unwrap();
        assert_eq!(g.signs(), &[P, M, P, M, P, M, P, M, P]);
        let t = partial_sums(&seq, g.signs()).unwrap();
        assert!(t.norms.iter().all(|&n| n <= 1.0));
        assert!(greedy_baseline(&[]).is_err());
    }

    #[test]
    fn witness_examples() {
        assert!(divergence_witness_check(&vec![e1(); 10], 1.0).unwrap());
        let rot: Vec<_> = (1..=1000).map(|i| Vector::xy((i as f64).cos(), (i as f64).sin())).collect();
        assert!(divergence_witness_check(&rot, 1.0).unwrap());
        assert!(!divergence_witness_check(&spiral(101), 0.01).unwrap());
        assert!(divergence_witness_check(&spiral(100), 0.01).unwrap());
        assert!(divergence_witness_check(&rot, 0.0).is_err());
    }

    #[test]
    fn intra_block_deviation_is_reported() {
        let seq = spiral(1_000);
        let t = compute_thresholds(&seq.iter().map(Vector::norm).collect::<Vec<_>>(), 64).unwrap();
        let plan = partition_blocks(seq.len(), &t).unwrap();
        let signs = vec![P; seq.len()];
        let report = convergence_report(&seq, &signs, &plan, 6).unwrap();
        assert_eq!(report.intra_block_max_deviation.len(), plan.leveled().len());
        assert!(report.intra_block_max_deviation.iter().all(|d| d.is_finite()));
    }
}
