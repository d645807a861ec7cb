use std::time::{Duration, Instant};

use bitvec::prelude::*;
use rayon::prelude::*;

use super::{PairCompatibility, SampledTrack, SeparationParams};
use crate::trajgen::CandidateSet;
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug)]
pub struct MatrixOptions {
    /// Largest number of pair checks `build_matrix` accepts to run.
    pub max_checks: u128,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        Self { max_checks: 2_000_000_000 }
    }
}

/// Full pairwise compatibility relation, one bit block per aircraft pair.
#[derive(Clone, Debug)]
pub struct CompatibilityMatrix {
    sizes: Vec<usize>,
    /// Row-major `t_i x t_j` bits for each `i < j`, pairs in lexicographic order.
    blocks: Vec<BitVec>,
    pub checks: u128,
    pub elapsed: Duration,
}

impl CompatibilityMatrix {
    fn block_index(&self, i: usize, j: usize) -> usize {
        // Pairs (0,1), (0,2), ..., (1,2), ...
        let n = self.sizes.len();
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    pub fn n_aircraft(&self) -> usize {
        self.sizes.len()
    }

    pub fn get(&self, i: usize, ti: usize, j: usize, tj: usize) -> bool {
        let (i, ti, j, tj) = if i < j { (i, ti, j, tj) } else { (j, tj, i, ti) };
        self.blocks[self.block_index(i, j)][ti * self.sizes[j] + tj]
    }

    /// Incompatible `(ti, tj)` pairs for aircraft `i < j`, lexicographic.
    pub fn forbidden_pairs(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let block = &self.blocks[self.block_index(i, j)];
        let tj = self.sizes[j];
        block.iter_zeros().map(|k| (k / tj, k % tj)).collect()
    }
}

impl PairCompatibility for CompatibilityMatrix {
    fn is_compatible(&self, i: usize, ti: usize, j: usize, tj: usize) -> Result<bool> {
        if i == j {
            return Err(Error::Contract(format!("pair check within aircraft {i}")));
        }
        Ok(self.get(i, ti, j, tj))
    }
}

/// Checks every trajectory pair of every aircraft pair. The check count is
/// `sum_{i<j} t_i t_j`; above `options.max_checks` this refuses with a
/// resource error so callers can fall back to lazy checking.
pub fn build_matrix<S: Scalar>(candidates: &CandidateSet<S>, params: &SeparationParams<S>, options: MatrixOptions) -> Result<CompatibilityMatrix> {
    let projected = candidates.full_pair_count();
    if projected > options.max_checks {
        return Err(Error::Resource(format!("{projected} pair checks exceed the budget of {}", options.max_checks)));
    }
    let started = Instant::now();
    let sizes = candidates.domain_sizes();
    let n = sizes.len();
    let tracks: Vec<Vec<SampledTrack<S>>> = candidates
        .lists
        .iter()
        .map(|l| l.par_iter().map(|t| SampledTrack::new(t, params.sample_step)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let threshold = params.threshold();
    let mut blocks = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let rows: Vec<Vec<bool>> = (0..sizes[i])
                .into_par_iter()
                .map(|ti| {
                    let a = &tracks[i][ti];
                    tracks[j].iter().map(|b| a.compatible_with(b, threshold)).collect::<Result<Vec<bool>>>()
                })
                .collect::<Result<_>>()?;
            let mut block = BitVec::with_capacity(sizes[i] * sizes[j]);
            for row in rows {
                block.extend(row);
            }
            blocks.push(block);
            log::debug!("compatibility block ({i}, {j}) done after {:?}", started.elapsed());
        }
    }
    Ok(CompatibilityMatrix { sizes, blocks, checks: projected, elapsed: started.elapsed() })
}
