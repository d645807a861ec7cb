//! Domain types and kinematic primitives shared by the rest of the crate.
//!
//! Units throughout: positions in NM, speeds in knots, time in seconds,
//! angles in degrees (0 = north, 90 = east), fuel in kg.

mod instance;
mod trajectory;
mod zone;

pub use instance::{validate_instance, ConflictInstance, Tolerances, Violation};
pub use trajectory::{position_at, Trajectory, TrajectoryCursor, TrajectorySegment};
pub use zone::ConvexPolygon;

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Position, heading and speed of an aircraft.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AircraftState<S> {
    pub x: S,
    pub y: S,
    pub heading: S,
    pub speed: S,
}

impl<S: Scalar> AircraftState<S> {
    pub fn position(&self) -> (S, S) {
        (self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FuelCategory {
    Light,
    Medium,
    Heavy,
}

impl FuelCategory {
    pub const ALL: [FuelCategory; 3] = [FuelCategory::Light, FuelCategory::Medium, FuelCategory::Heavy];

    /// Fuel flow at nominal speed, kg/s.
    pub fn default_burn(self) -> f64 {
        match self {
            FuelCategory::Light => 0.02,
            FuelCategory::Medium => 0.05,
            FuelCategory::Heavy => 0.09,
        }
    }
}

/// Speed limits, acceleration bound, turn bound and fuel model parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerformanceEnvelope<S> {
    pub v_min: S,
    pub v_max: S,
    /// Magnitude bound for both acceleration and deceleration, kt/s.
    pub a_max: S,
    pub max_heading_change_per_order: S,
    pub fuel_category: FuelCategory,
    pub nominal_speed: S,
    /// Fuel flow at `nominal_speed`, kg/s.
    pub nominal_burn: S,
}

impl<S: Scalar> PerformanceEnvelope<S> {
    pub fn speed_in_range(&self, v: S) -> bool {
        v >= self.v_min && v <= self.v_max
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AircraftSpec<S> {
    pub id: u32,
    pub initial: AircraftState<S>,
    #[serde(rename = "final")]
    pub final_state: AircraftState<S>,
    pub perf: PerformanceEnvelope<S>,
}

/// An order issued at the start of a time segment.
///
/// Turn and speed offsets are whole degrees and whole percents of the
/// current speed. The derived ordering (tag first, then magnitude) is the
/// tie-break used when sorting candidate trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ManoeuvreOrder {
    Turn { delta: i32 },
    Speed { delta_pct: i32 },
    TurnAndSpeed { delta: i32, delta_pct: i32 },
    DoNothing,
    StraightToEnd,
}

impl ManoeuvreOrder {
    /// Turn, Speed and TurnAndSpeed are manoeuvre orders; the other two are not.
    pub fn is_manoeuvre(&self) -> bool {
        matches!(self, ManoeuvreOrder::Turn { .. } | ManoeuvreOrder::Speed { .. } | ManoeuvreOrder::TurnAndSpeed { .. })
    }

    pub fn turn(&self) -> i32 {
        match *self {
            ManoeuvreOrder::Turn { delta } | ManoeuvreOrder::TurnAndSpeed { delta, .. } => delta,
            _ => 0,
        }
    }

    pub fn speed_pct(&self) -> i32 {
        match *self {
            ManoeuvreOrder::Speed { delta_pct } | ManoeuvreOrder::TurnAndSpeed { delta_pct, .. } => delta_pct,
            _ => 0,
        }
    }

    /// Structural validity: non-zero turn and speed offsets, speed offset
    /// above -100%.
    pub fn is_well_formed(&self) -> bool {
        match *self {
            ManoeuvreOrder::Turn { delta } => delta != 0,
            ManoeuvreOrder::Speed { delta_pct } => delta_pct != 0 && delta_pct > -100,
            ManoeuvreOrder::TurnAndSpeed { delta, delta_pct } => delta != 0 && delta_pct != 0 && delta_pct > -100,
            ManoeuvreOrder::DoNothing | ManoeuvreOrder::StraightToEnd => true,
        }
    }
}
