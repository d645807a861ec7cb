//! Candidate trajectory generation: the manoeuvre catalog, order-sequence
//! enumeration over the time segments, kinematic realization, legality
//! filtering and fuel costing.

mod candidates;
mod catalog;
mod generate;

pub use candidates::{build_candidate_set, build_candidate_set_with, CandidateSet, GenerationStats};
pub use catalog::{build_catalog, granularity_step, ManoeuvreCatalog};
pub use generate::{generate, trajectory_cost, GenerationOptions, GenerationOutput, Generator};

use serde::{Deserialize, Serialize};

/// Discretisation of the resolution problem: `segments` equal time
/// segments, at most `max_manoeuvres` manoeuvre orders per trajectory, and
/// the catalog granularity (1 to 4).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretisationParams {
    pub segments: usize,
    pub max_manoeuvres: usize,
    pub granularity: u8,
}

impl DiscretisationParams {
    pub fn new(segments: usize, max_manoeuvres: usize, granularity: u8) -> Self {
        Self { segments, max_manoeuvres, granularity }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.segments < 1 {
            return Err("segments must be >= 1".into());
        }
        if self.max_manoeuvres > self.segments {
            return Err("max_manoeuvres must be <= segments".into());
        }
        if !(1..=4).contains(&self.granularity) {
            return Err("granularity must be in 1..=4".into());
        }
        Ok(())
    }
}

impl std::fmt::Display for DiscretisationParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "p={} m={} g={}", self.segments, self.max_manoeuvres, self.granularity)
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// `C(p, m) * n^m`: segment-subset choice times one of `n` orders per
/// chosen segment, `n` counting `DoNothing`. Saturates at `u128::MAX`.
pub fn count_bound(p: usize, m: usize, n: usize) -> u128 {
    let mut pow: u128 = 1;
    for _ in 0..m {
        pow = pow.saturating_mul(n as u128);
    }
    binomial(p as u128, m as u128).saturating_mul(pow)
}

/// Exact number of order sequences the generator enumerates for `p`
/// segments, at most `m` manoeuvres and `catalog_len` manoeuvre orders.
///
/// A sequence places manoeuvres on distinct segment starts before the
/// closing straight-to-end; straight-to-end may follow any later segment
/// start once a manoeuvre has been issued, and otherwise only the first.
pub fn enumeration_size(p: usize, m: usize, catalog_len: usize) -> u128 {
    leaf_table(p, m, catalog_len)[0][0]
}

/// `table[k][u]`: sequences completing from segment `k` with `u`
/// manoeuvres already issued.
pub(crate) fn leaf_table(p: usize, m: usize, catalog_len: usize) -> Vec<Vec<u128>> {
    let mut table = vec![vec![0u128; m + 2]; p + 1];
    for k in (0..p).rev() {
        for u in 0..=m {
            let mut leaves: u128 = if k == 0 || u >= 1 { 1 } else { 0 };
            if k + 1 < p {
                leaves = leaves.saturating_add(table[k + 1][u]);
                if u < m {
                    leaves = leaves.saturating_add((catalog_len as u128).saturating_mul(table[k + 1][u + 1]));
                }
            }
            table[k][u] = leaves;
        }
    }
    table
}
