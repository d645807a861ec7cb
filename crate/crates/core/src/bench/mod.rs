//! Scenario generation, campaigns and anytime refinement.

mod anytime;
mod campaign;
mod presets;
mod scenario;

pub use anytime::{
    iterate_anytime, iterate_anytime_with, parse_schedule, setting_bound, AnytimeOptions, AnytimeResult, Incumbent, IterationLog, DEFAULT_SCHEDULE,
};
pub use campaign::{
    mean_legal_count, run_campaign, run_campaign_with, run_seed, write_csv, Aggregate, CampaignOptions, CampaignReport, Method, Outcome, RunRecord,
    CSV_HEADER,
};
pub use presets::{
    closest_setting, large_roundabout, reference_params, six_segment_turn_generator, sweep_candidates, LARGE_ROUNDABOUT_RADIUS_NM,
    REFERENCE_SETTINGS, SWEEP_TARGET,
};
pub use scenario::{make_crossing, make_roundabout, make_scenario, ScenarioKind, ScenarioSpec};
