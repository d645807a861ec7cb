use super::{mean_legal_count, ScenarioSpec};
use crate::model::ManoeuvreOrder;
use crate::trajgen::{build_catalog, enumeration_size, DiscretisationParams, GenerationOptions, Generator, ManoeuvreCatalog};
use crate::{ConflictInstance, Result, Scalar};

/// The nine (p, m, g) settings of the 3-aircraft Roundabout table, with the
/// published mean legal trajectory counts.
pub const REFERENCE_SETTINGS: [(usize, usize, u8, f64); 9] = [
    (4, 2, 2, 785.47),
    (5, 2, 2, 1761.61),
    (4, 3, 2, 2836.8),
    (6, 2, 2, 3478.37),
    (7, 2, 2, 5930.66),
    (8, 2, 2, 9409.97),
    (6, 2, 3, 13989.03),
    (4, 3, 3, 20982.39),
    (7, 2, 3, 24225.66),
];

pub fn reference_params() -> Vec<DiscretisationParams> {
    REFERENCE_SETTINGS.iter().map(|&(p, m, g, _)| DiscretisationParams::new(p, m, g)).collect()
}

/// Six segments, up to three orders, turns of 20 and 40 degrees either way.
pub fn six_segment_turn_generator<S: Scalar>(inst: &ConflictInstance<S>) -> Result<Generator<S>> {
    let turns = [-40, -20, 20, 40].map(|delta| ManoeuvreOrder::Turn { delta }).to_vec();
    Generator::new(
        ManoeuvreCatalog::from_orders(turns)?,
        DiscretisationParams::new(6, 3, 1),
        inst.resolution_period_s,
        inst.tolerances,
        inst.forbidden_zones.clone(),
        GenerationOptions::default(),
    )
}

/// Radius of the many-aircraft Roundabout. At the default 50 NM twenty
/// aircraft are packed too tightly for greedy to finish at fine settings.
pub const LARGE_ROUNDABOUT_RADIUS_NM: f64 = 70.0;

/// Roundabout with `n_aircraft` on a [`LARGE_ROUNDABOUT_RADIUS_NM`] circle.
pub fn large_roundabout(n_aircraft: usize, seed: u64) -> ScenarioSpec {
    ScenarioSpec { radius_nm: LARGE_ROUNDABOUT_RADIUS_NM, ..ScenarioSpec::roundabout(n_aircraft, seed) }
}

/// Mean legal trajectories per aircraft targeted by the aircraft sweep.
pub const SWEEP_TARGET: f64 = 850.0;

/// Settings with p <= 8, m <= 3, g <= 3 whose enumeration is within
/// `8 * target` sequences, the search space for [`closest_setting`].
pub fn sweep_candidates(target: f64) -> Result<Vec<DiscretisationParams>> {
    let options = GenerationOptions::default();
    let mut out = Vec::new();
    for g in 1..=3u8 {
        for p in 2..=8 {
            for m in 1..=3.min(p) {
                let catalog = build_catalog(g, p <= options.turn_and_speed_max_segments)?;
                if (enumeration_size(p, m, catalog.len()) as f64) <= 8.0 * target {
                    out.push(DiscretisationParams::new(p, m, g));
                }
            }
        }
    }
    Ok(out)
}

/// The setting among `settings` whose mean legal count on `runs` instances
/// of `spec` is closest to `target`, with that mean.
pub fn closest_setting(spec: &ScenarioSpec, target: f64, settings: &[DiscretisationParams], runs: usize) -> Result<(DiscretisationParams, f64)> {
    let mut best: Option<(DiscretisationParams, f64)> = None;
    for &s in settings {
        let mean = mean_legal_count(spec, s, runs, &GenerationOptions::default())?;
        if best.is_none_or(|(_, b)| (mean - target).abs() < (b - target).abs()) {
            best = Some((s, mean));
        }
    }
    best.ok_or_else(|| crate::Error::Parameter("no settings given".into()))
}
