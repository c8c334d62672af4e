//! Threshold indices and the block decomposition of a finite sequence.
//!
//! `N_k` is the smallest count such that every term after it has norm
//! below `1/(k+1)^2`. Level-`m` blocks hold the terms in `(N_m, N_{m+1}]`,
//! and a prefix block holds `[1, N_0]`.

use std::ops::Range;

use crate::error::{Error, Result};

/// Norm bound shared by every term of a level-`k` block.
pub fn level_threshold(k: usize) -> f64 {
    let d = (k + 1) as f64;
    1.0 / (d * d)
}

/// `thresholds[k]` is `N_k`, a count of leading terms. Levels beyond the
/// stored ones share the last value, which then equals the sequence length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockThresholds {
    thresholds: Vec<usize>,
    sequence_length: usize,
}

impl BlockThresholds {
    pub fn as_slice(&self) -> &[usize] {
        &self.thresholds
    }

    pub fn sequence_length(&self) -> usize {
        self.sequence_length
    }

    /// `N_k` for any `k`, including levels past the early stop.
    pub fn get(&self, k: usize) -> usize {
        self.thresholds
            .get(k)
            .copied()
            .unwrap_or(self.sequence_length)
    }

    /// Whether the computation stopped because every term was absorbed.
    pub fn exhausted(&self) -> bool {
        self.thresholds.last() == Some(&self.sequence_length)
    }
}

pub fn compute_thresholds(norms: &[f64], max_k: usize) -> Result<BlockThresholds> {
    if let Some((i, bad)) = norms
        .iter()
        .enumerate()
        .find(|(_, n)| !(**n >= 0.0) || !n.is_finite())
    {
        return Err(Error::domain(format!(
            "norm at index {} is {bad}; norms must be finite and non-negative",
            i + 1
        )));
    }
    let len = norms.len();
    // N_k <= N_{k+1}, so walk levels from the top down and never rescan a
    // suffix: anything past N_{k+1} is already below the tighter bound.
    let mut all = vec![0usize; max_k + 1];
    let mut upper = len;
    for k in (0..=max_k).rev() {
        let bound = level_threshold(k);
        while upper > 0 && norms[upper - 1] < bound {
            upper -= 1;
        }
        all[k] = upper;
    }
    if let Some(stop) = all.iter().position(|&n| n == len) {
        all.truncate(stop + 1);
    }
    Ok(BlockThresholds {
        thresholds: all,
        sequence_length: len,
    })
}

/// Level of the prefix block, which carries no norm bound.
pub const PREFIX_LEVEL: i64 = -1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    /// [`PREFIX_LEVEL`] or `m >= 0`.
    pub level: i64,
    /// 0-based, half-open range into the input sequence.
    pub range: Range<usize>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    pub fn is_prefix(&self) -> bool {
        self.level == PREFIX_LEVEL
    }

    /// `1/(m+1)^2` for level `m`; `None` for the prefix.
    pub fn term_bound(&self) -> Option<f64> {
        (self.level >= 0).then(|| level_threshold(self.level as usize))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPlan {
    pub thresholds: BlockThresholds,
    pub blocks: Vec<Block>,
}

impl BlockPlan {
    pub fn prefix(&self) -> &Block {
        &self.blocks[0]
    }

    /// Blocks of level `m >= 0`, in order.
    pub fn leveled(&self) -> &[Block] {
        &self.blocks[1..]
    }

    /// Block level of every term, in sequence order.
    pub fn term_levels(&self) -> Vec<i64> {
        let mut levels = Vec::with_capacity(self.thresholds.sequence_length);
        for b in &self.blocks {
            levels.extend(std::iter::repeat_n(b.level, b.len()));
        }
        levels
    }

    /// Block containing the 0-based term index.
    pub fn block_of(&self, index: usize) -> Option<&Block> {
        self.blocks.iter().find(|b| b.range.contains(&index))
    }
}

/// Splits `0..sequence_length` into the prefix block and the level blocks.
///
/// Empty middle blocks are kept so that level `m` always sits at
/// `leveled()[m]`. The block after the last threshold is only emitted when
/// it is nonempty or the thresholds stopped at `max_k` rather than by
/// absorbing the whole input.
pub fn partition_blocks(sequence_length: usize, thresholds: &BlockThresholds) -> Result<BlockPlan> {
    if thresholds.sequence_length != sequence_length {
        return Err(Error::domain(format!(
            "thresholds were computed for {} terms, sequence has {sequence_length}",
            thresholds.sequence_length
        )));
    }
    let n = &thresholds.thresholds;
    let mut blocks = vec![Block {
        level: PREFIX_LEVEL,
        range: 0..n[0],
    }];
    for m in 0..n.len() - 1 {
        blocks.push(Block {
            level: m as i64,
            range: n[m]..n[m + 1],
        });
    }
    let last = *n.last().expect("at least N_0 is always computed");
    if last < sequence_length {
        blocks.push(Block {
            level: (n.len() - 1) as i64,
            range: last..sequence_length,
        });
    }
    Ok(BlockPlan {
        thresholds: thresholds.clone(),
        blocks,
    })
}
