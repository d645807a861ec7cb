use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{AircraftSpec, AircraftState, ConflictInstance, FuelCategory, PerformanceEnvelope};
use crate::trajgen::DiscretisationParams;
use crate::{bearing, Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Roundabout,
    Crossing,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Roundabout => "roundabout",
            Self::Crossing => "crossing",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "roundabout" => Ok(Self::Roundabout),
            "crossing" => Ok(Self::Crossing),
            other => Err(Error::Parameter(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Synthetic benchmark geometry plus the performance profile given to
/// every aircraft.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_aircraft: usize,
    /// Roundabout circle radius; for crossings, the lead aircraft's
    /// distance to the crossing point.
    pub radius_nm: f64,
    pub angle_deg: f64,
    pub spacing_nm: f64,
    pub base_speed_kt: f64,
    pub position_noise_nm: f64,
    /// Relative speed jitter (0.05 is ±5%).
    pub speed_noise: f64,
    pub v_min_ratio: f64,
    pub v_max_ratio: f64,
    pub a_max_kt_per_s: f64,
    pub max_turn_deg: f64,
    /// Period over slowest direct flight time.
    pub period_slack: f64,
    pub seed: u64,
    pub discretisation: DiscretisationParams,
}

impl ScenarioSpec {
    pub fn roundabout(n_aircraft: usize, seed: u64) -> Self {
        Self {
            kind: ScenarioKind::Roundabout,
            n_aircraft,
            radius_nm: 50.0,
            angle_deg: 90.0,
            spacing_nm: 8.0,
            base_speed_kt: 450.0,
            position_noise_nm: 1.0,
            speed_noise: 0.05,
            v_min_ratio: 0.5,
            v_max_ratio: 1.4,
            a_max_kt_per_s: 5.0,
            max_turn_deg: 90.0,
            period_slack: 1.2,
            seed,
            discretisation: DiscretisationParams::new(4, 2, 2),
        }
    }

    pub fn crossing(n_aircraft: usize, seed: u64) -> Self {
        Self { kind: ScenarioKind::Crossing, radius_nm: 40.0, ..Self::roundabout(n_aircraft, seed) }
    }

    pub fn of_kind(kind: ScenarioKind, n_aircraft: usize, seed: u64) -> Self {
        match kind {
            ScenarioKind::Roundabout => Self::roundabout(n_aircraft, seed),
            ScenarioKind::Crossing => Self::crossing(n_aircraft, seed),
        }
    }

    pub fn with_params(mut self, discretisation: DiscretisationParams) -> Self {
        self.discretisation = discretisation;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn without_noise(mut self) -> Self {
        self.position_noise_nm = 0.0;
        self.speed_noise = 0.0;
        self
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.to_string()));
        if self.n_aircraft < 2 {
            return bad("a scenario needs at least 2 aircraft");
        }
        if !(self.radius_nm > 0.0) || !(self.spacing_nm > 0.0) {
            return bad("radius and spacing must be > 0");
        }
        if self.kind == ScenarioKind::Crossing && !(self.angle_deg > 0.0 && self.angle_deg < 180.0) {
            return bad("crossing angle must lie in (0, 180)");
        }
        if !(self.base_speed_kt > 0.0) || !(self.speed_noise >= 0.0 && self.speed_noise < 1.0) || !(self.position_noise_nm >= 0.0) {
            return bad("invalid speed or noise settings");
        }
        if !(self.v_min_ratio > 0.0 && self.v_min_ratio < 1.0 && self.v_max_ratio > 1.0) {
            return bad("speed envelope ratios must bracket 1");
        }
        if !(self.a_max_kt_per_s > 0.0) || !(self.max_turn_deg > 0.0) || !(self.period_slack >= 1.0) {
            return bad("invalid acceleration, turn limit or period slack");
        }
        self.discretisation.check().map_err(Error::Parameter)
    }
}

struct Placement {
    start: (f64, f64),
    end: (f64, f64),
}

fn roundabout_placements(spec: &ScenarioSpec) -> Vec<Placement> {
    let n = spec.n_aircraft as f64;
    (0..spec.n_aircraft)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n;
            let (s, c) = theta.sin_cos();
            let r = spec.radius_nm;
            Placement { start: (r * s, r * c), end: (-r * s, -r * c) }
        })
        .collect()
}

/// Airway A runs west to east through the origin; airway B is A rotated
/// clockwise by the crossing angle. Aircraft alternate between the two and
/// all fly the same distance, so in-trail offsets stay constant.
fn crossing_placements(spec: &ScenarioSpec) -> Vec<Placement> {
    let heading_b = 90.0 + spec.angle_deg;
    let per_airway = spec.n_aircraft.div_ceil(2);
    let length = 2.0 * (spec.radius_nm + (per_airway - 1) as f64 * spec.spacing_nm);
    (0..spec.n_aircraft)
        .map(|k| {
            let heading: f64 = if k % 2 == 0 { 90.0 } else { heading_b };
            let d = spec.radius_nm + (k / 2) as f64 * spec.spacing_nm;
            let (s, c) = heading.to_radians().sin_cos();
            Placement { start: (-d * s, -d * c), end: ((length - d) * s, (length - d) * c) }
        })
        .collect()
}

fn build<S: Scalar>(spec: &ScenarioSpec, placements: Vec<Placement>) -> Result<ConflictInstance<S>> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut jitter = |amp: f64| if amp > 0.0 { rng.gen_range(-amp..=amp) } else { 0.0 };
    let mut drafts = Vec::with_capacity(placements.len());
    for p in placements {
        let start = (p.start.0 + jitter(spec.position_noise_nm), p.start.1 + jitter(spec.position_noise_nm));
        let end = (p.end.0 + jitter(spec.position_noise_nm), p.end.1 + jitter(spec.position_noise_nm));
        let speed = spec.base_speed_kt * (1.0 + jitter(spec.speed_noise));
        drafts.push((start, end, speed));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let slowest = drafts.iter().map(|&(s, e, v)| ((e.0 - s.0).hypot(e.1 - s.1)) / v * 3600.0).fold(0.0f64, f64::max);
    let aircraft = drafts
        .into_iter()
        .enumerate()
        .map(|(k, (start, end, speed))| {
            let heading: f64 = bearing((start.0, start.1), (end.0, end.1));
            let category = FuelCategory::ALL[rng.gen_range(0..FuelCategory::ALL.len())];
            let state = |(x, y): (f64, f64)| AircraftState { x: S::lit(x), y: S::lit(y), heading: S::lit(heading), speed: S::lit(speed) };
            AircraftSpec {
                id: k as u32 + 1,
                initial: state(start),
                final_state: state(end),
                perf: PerformanceEnvelope {
                    v_min: S::lit(spec.v_min_ratio * speed),
                    v_max: S::lit(spec.v_max_ratio * speed),
                    a_max: S::lit(spec.a_max_kt_per_s),
                    max_heading_change_per_order: S::lit(spec.max_turn_deg),
                    fuel_category: category,
                    nominal_speed: S::lit(speed),
                    nominal_burn: S::lit(category.default_burn()),
                },
            }
        })
        .collect();
    let period = spec.period_slack * slowest;
    Ok(ConflictInstance::new(S::lit(period), spec.discretisation, aircraft))
}

/// Aircraft evenly spread on a circle, each flying through the centre to
/// the antipode. Deterministic in the seed.
pub fn make_roundabout<S: Scalar>(spec: &ScenarioSpec) -> Result<ConflictInstance<S>> {
    if spec.kind != ScenarioKind::Roundabout {
        return Err(Error::Parameter("not a roundabout spec".into()));
    }
    build(spec, roundabout_placements(spec))
}

/// Two in-trail flows on airways crossing at the origin, `ceil(n/2)` on the
/// first and `floor(n/2)` on the second, every final point past the
/// crossing.
pub fn make_crossing<S: Scalar>(spec: &ScenarioSpec) -> Result<ConflictInstance<S>> {
    if spec.kind != ScenarioKind::Crossing {
        return Err(Error::Parameter("not a crossing spec".into()));
    }
    build(spec, crossing_placements(spec))
}

pub fn make_scenario<S: Scalar>(spec: &ScenarioSpec) -> Result<ConflictInstance<S>> {
    match spec.kind {
        ScenarioKind::Roundabout => make_roundabout(spec),
        ScenarioKind::Crossing => make_crossing(spec),
    }
}
