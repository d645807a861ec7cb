use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AircraftSpec, AircraftState, ConvexPolygon};
use crate::separation::SeparationParams;
use crate::trajgen::DiscretisationParams;
use crate::{Result, Scalar};

/// Arrival tolerances used by the legality filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances<S> {
    pub position_nm: S,
    pub time_s: S,
}

impl<S: Scalar> Default for Tolerances<S> {
    fn default() -> Self {
        Self { position_nm: S::lit(0.1), time_s: S::one() }
    }
}

fn default_sample_step<S: Scalar>() -> S {
    S::lit(5.0)
}

/// A conflict to resolve: aircraft, shared resolution period, separation
/// and discretisation parameters.
///
/// Serialized as the JSON instance file. Tolerances, sampling step and
/// forbidden zones are not part of the file and take their defaults when
/// loading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "S: Scalar")]
pub struct ConflictInstance<S> {
    pub resolution_period_s: S,
    pub separation_nm: S,
    pub safety_margin_nm: S,
    pub discretisation: DiscretisationParams,
    pub aircraft: Vec<AircraftSpec<S>>,
    #[serde(skip)]
    pub tolerances: Tolerances<S>,
    #[serde(skip, default = "default_sample_step")]
    pub sample_step_s: S,
    #[serde(skip)]
    pub forbidden_zones: Vec<ConvexPolygon<S>>,
}

impl<S: Scalar> ConflictInstance<S> {
    pub fn new(resolution_period_s: S, discretisation: DiscretisationParams, aircraft: Vec<AircraftSpec<S>>) -> Self {
        Self {
            resolution_period_s,
            separation_nm: S::lit(5.0),
            safety_margin_nm: S::lit(0.5),
            discretisation,
            aircraft,
            tolerances: Tolerances::default(),
            sample_step_s: default_sample_step(),
            forbidden_zones: Vec::new(),
        }
    }

    pub fn separation_params(&self) -> SeparationParams<S> {
        SeparationParams { min_horizontal: self.separation_nm, safety_margin: self.safety_margin_nm, sample_step: self.sample_step_s }
    }

    pub fn with_discretisation(&self, discretisation: DiscretisationParams) -> Self {
        Self { discretisation, ..self.clone() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// One failed check found by [`validate_instance`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub aircraft: Option<u32>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.aircraft {
            Some(id) => write!(f, "aircraft {id}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn check(&mut self, ok: bool, aircraft: Option<u32>, field: &str, message: &str) {
        if !ok {
            self.out.push(Violation { aircraft, field: field.to_string(), message: message.to_string() });
        }
    }

    fn state<S: Scalar>(&mut self, id: u32, name: &str, s: &AircraftState<S>) {
        let finite = s.x.is_finite() && s.y.is_finite() && s.heading.is_finite() && s.speed.is_finite();
        self.check(finite, Some(id), name, "non-finite value");
        self.check(s.speed > S::zero(), Some(id), &format!("{name}.speed"), "must be > 0");
        self.check(s.heading >= S::zero() && s.heading < S::lit(360.0), Some(id), &format!("{name}.heading"), "must lie in [0, 360)");
    }
}

/// Checks every structural invariant of an instance. Violations are data:
/// an empty list means the instance is well formed.
pub fn validate_instance<S: Scalar>(inst: &ConflictInstance<S>) -> std::result::Result<(), Vec<Violation>> {
    let mut c = Checker { out: Vec::new() };
    let pos = |v: S| v.is_finite() && v > S::zero();

    c.check(pos(inst.resolution_period_s), None, "resolution_period_s", "must be > 0");
    c.check(pos(inst.separation_nm), None, "separation_nm", "must be > 0");
    c.check(pos(inst.safety_margin_nm), None, "safety_margin_nm", "must be > 0");
    c.check(pos(inst.sample_step_s), None, "sample_step_s", "must be > 0");
    c.check(pos(inst.tolerances.position_nm), None, "tolerances.position_nm", "must be > 0");
    c.check(pos(inst.tolerances.time_s), None, "tolerances.time_s", "must be > 0");
    if let Err(msg) = inst.discretisation.check() {
        c.check(false, None, "discretisation", &msg);
    }
    c.check(!inst.aircraft.is_empty(), None, "aircraft", "at least one aircraft required");

    let mut seen = HashSet::new();
    for ac in &inst.aircraft {
        let id = Some(ac.id);
        c.check(seen.insert(ac.id), id, "id", "duplicate id");
        c.state(ac.id, "initial", &ac.initial);
        c.state(ac.id, "final", &ac.final_state);
        c.check(ac.initial.position() != ac.final_state.position(), id, "final", "final position equals initial position");
        let p = &ac.perf;
        c.check(pos(p.v_min), id, "perf.v_min", "must be > 0");
        c.check(p.v_min < p.v_max, id, "perf.v_max", "v_min must be < v_max");
        c.check(pos(p.a_max), id, "perf.a_max", "must be > 0");
        c.check(pos(p.max_heading_change_per_order), id, "perf.max_heading_change_per_order", "must be > 0");
        c.check(p.nominal_speed >= p.v_min && p.nominal_speed <= p.v_max, id, "perf.nominal_speed", "must lie in [v_min, v_max]");
        c.check(p.nominal_burn.is_finite() && p.nominal_burn >= S::zero(), id, "perf.nominal_burn", "must be >= 0");
    }

    if c.out.is_empty() {
        Ok(())
    } else {
        Err(c.out)
    }
}
