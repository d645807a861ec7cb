use rayon::prelude::*;

use super::{GenerationOptions, Generator};
use crate::model::{ConflictInstance, Trajectory};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenerationStats {
    pub enumerated: u128,
    pub legal: usize,
}

/// Per-aircraft trajectory domains, each sorted by ascending cost.
#[derive(Clone, Debug)]
pub struct CandidateSet<S> {
    pub aircraft_ids: Vec<u32>,
    pub lists: Vec<Vec<Trajectory<S>>>,
    pub stats: Vec<GenerationStats>,
}

impl<S: Scalar> CandidateSet<S> {
    /// Builds a set from explicit lists, sorting each one.
    pub fn from_lists(aircraft_ids: Vec<u32>, mut lists: Vec<Vec<Trajectory<S>>>) -> Self {
        for l in &mut lists {
            sort_by_cost(l);
        }
        let stats = lists.iter().map(|l| GenerationStats { enumerated: l.len() as u128, legal: l.len() }).collect();
        Self { aircraft_ids, lists, stats }
    }

    pub fn n_aircraft(&self) -> usize {
        self.lists.len()
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.lists.iter().map(Vec::len).collect()
    }

    pub fn cost(&self, aircraft: usize, index: usize) -> S {
        self.lists[aircraft][index].cost
    }

    pub fn trajectory(&self, aircraft: usize, index: usize) -> &Trajectory<S> {
        &self.lists[aircraft][index]
    }

    pub fn mean_domain_size(&self) -> f64 {
        if self.lists.is_empty() {
            return 0.0;
        }
        self.lists.iter().map(Vec::len).sum::<usize>() as f64 / self.lists.len() as f64
    }

    /// Sum of all `t_i * t_j` over aircraft pairs.
    pub fn full_pair_count(&self) -> u128 {
        let sizes = self.domain_sizes();
        let mut total = 0u128;
        for i in 0..sizes.len() {
            for j in i + 1..sizes.len() {
                total += sizes[i] as u128 * sizes[j] as u128;
            }
        }
        total
    }

    /// Product of domain sizes, saturating.
    pub fn product_size(&self) -> u128 {
        self.lists.iter().fold(1u128, |acc, l| acc.saturating_mul(l.len() as u128))
    }

    pub fn is_sorted(&self) -> bool {
        self.lists.iter().all(|l| l.windows(2).all(|w| w[0].cost <= w[1].cost))
    }

    /// Sum of selected costs in aircraft order.
    pub fn selection_cost(&self, selection: &[usize]) -> S {
        selection.iter().enumerate().fold(S::zero(), |acc, (i, &v)| acc + self.cost(i, v))
    }
}

/// Ascending cost, ties broken by the order sequence.
pub(crate) fn sort_by_cost<S: Scalar>(list: &mut [Trajectory<S>]) {
    list.sort_by(|a, b| a.cost.partial_cmp(&b.cost).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.orders.cmp(&b.orders)));
}

pub fn build_candidate_set<S: Scalar>(inst: &ConflictInstance<S>) -> Result<CandidateSet<S>> {
    build_candidate_set_with(inst, GenerationOptions::default())
}

/// Generates every aircraft's domain (in parallel) and sorts it. Fails with
/// [`Error::Unsolvable`] naming the first aircraft left without any legal
/// trajectory.
pub fn build_candidate_set_with<S: Scalar>(inst: &ConflictInstance<S>, options: GenerationOptions) -> Result<CandidateSet<S>> {
    crate::model::validate_instance(inst).map_err(|v| Error::InvalidInstance(v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")))?;
    let gen = Generator::for_instance(inst, options)?;
    let outputs: Vec<_> = inst.aircraft.par_iter().map(|ac| gen.generate(ac)).collect::<Result<_>>()?;

    let mut set = CandidateSet { aircraft_ids: Vec::new(), lists: Vec::new(), stats: Vec::new() };
    for (ac, mut out) in inst.aircraft.iter().zip(outputs) {
        if out.trajectories.is_empty() {
            return Err(Error::Unsolvable { aircraft: ac.id });
        }
        sort_by_cost(&mut out.trajectories);
        set.aircraft_ids.push(ac.id);
        set.stats.push(GenerationStats { enumerated: out.enumerated, legal: out.trajectories.len() });
        set.lists.push(out.trajectories);
    }
    Ok(set)
}
