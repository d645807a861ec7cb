use serde::{Deserialize, Serialize};

use super::ManoeuvreOrder;
use crate::scalar::{heading_vector, knots_to_nm_per_s};
use crate::{Error, Result, Scalar};

/// Straight flight at constant heading, with an optional constant
/// acceleration phase from `v_start` to `v_end` followed by a hold at
/// `v_end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySegment<S> {
    pub t_start: S,
    pub duration: S,
    pub start: (S, S),
    pub heading: S,
    pub v_start: S,
    pub v_end: S,
    pub accel_duration: S,
}

impl<S: Scalar> TrajectorySegment<S> {
    /// Acceleration in kt/s over the ramp, zero when there is none.
    pub fn acceleration(&self) -> S {
        if self.accel_duration > S::zero() {
            (self.v_end - self.v_start) / self.accel_duration
        } else {
            S::zero()
        }
    }

    pub fn t_end(&self) -> S {
        self.t_start + self.duration
    }

    /// Along-track distance (NM) flown `dt` seconds after the segment start.
    pub fn distance_at(&self, dt: S) -> S {
        let half = S::lit(0.5);
        let ta = self.accel_duration;
        let a = self.acceleration();
        let kts = if dt <= ta { self.v_start * dt + half * a * dt * dt } else { self.v_start * ta + half * a * ta * ta + self.v_end * (dt - ta) };
        knots_to_nm_per_s(kts)
    }

    pub fn speed_at(&self, dt: S) -> S {
        if dt < self.accel_duration {
            self.v_start + self.acceleration() * dt
        } else {
            self.v_end
        }
    }

    pub fn length(&self) -> S {
        self.distance_at(self.duration)
    }

    pub fn position_at_local(&self, dt: S) -> (S, S) {
        let d = self.distance_at(dt);
        let (ex, ny) = heading_vector(self.heading);
        (self.start.0 + d * ex, self.start.1 + d * ny)
    }

    pub fn end(&self) -> (S, S) {
        self.position_at_local(self.duration)
    }
}

/// A realized order sequence: the orders actually issued (manoeuvres and
/// the closing straight-to-end, `DoNothing` segments are implicit), the
/// time-contiguous kinematic segments and the fuel cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<S> {
    pub orders: Vec<(usize, ManoeuvreOrder)>,
    pub segments: Vec<TrajectorySegment<S>>,
    pub cost: S,
    arrival: S,
}

impl<S: Scalar> Trajectory<S> {
    /// `arrival` is the nominal arrival time (the resolution period); the
    /// last segment may end an ulp away from it.
    pub fn new(orders: Vec<(usize, ManoeuvreOrder)>, segments: Vec<TrajectorySegment<S>>, cost: S, arrival: S) -> Self {
        Self { orders, segments, cost, arrival }
    }

    /// Single straight segment, mostly useful for tests and fixtures.
    pub fn straight(start: (S, S), heading: S, speed: S, duration: S) -> Self {
        let seg = TrajectorySegment { t_start: S::zero(), duration, start, heading, v_start: speed, v_end: speed, accel_duration: S::zero() };
        Self::new(vec![(0, ManoeuvreOrder::StraightToEnd)], vec![seg], S::zero(), duration)
    }

    pub fn arrival_time(&self) -> S {
        self.arrival
    }

    pub fn start_position(&self) -> (S, S) {
        self.segments.first().map(|s| s.start).unwrap_or((S::zero(), S::zero()))
    }

    pub fn end_position(&self) -> (S, S) {
        self.segments.last().map(|s| s.end()).unwrap_or((S::zero(), S::zero()))
    }

    pub fn path_length(&self) -> S {
        self.segments.iter().map(|s| s.length()).sum()
    }

    /// Number of manoeuvre orders in the sequence.
    pub fn manoeuvre_count(&self) -> usize {
        self.orders.iter().filter(|(_, o)| o.is_manoeuvre()).count()
    }

    /// Segment boundaries plus the end point.
    pub fn polyline(&self) -> Vec<(S, S)> {
        let mut pts: Vec<(S, S)> = self.segments.iter().map(|s| s.start).collect();
        pts.push(self.end_position());
        pts
    }

    pub fn position_at(&self, t: S) -> Result<(S, S)> {
        position_at(self, t)
    }

    pub fn speed_at(&self, t: S) -> Result<S> {
        self.check_time(t)?;
        let seg = &self.segments[self.segment_index(t)];
        Ok(seg.speed_at((t - seg.t_start).max(S::zero())))
    }

    pub fn cursor(&self) -> TrajectoryCursor<'_, S> {
        TrajectoryCursor { traj: self, index: 0 }
    }

    fn check_time(&self, t: S) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Domain("trajectory has no segments".into()));
        }
        if !(t >= S::zero() && t <= self.arrival) {
            return Err(Error::Domain(format!("time {t} outside [0, {}]", self.arrival)));
        }
        Ok(())
    }

    fn segment_index(&self, t: S) -> usize {
        // First segment whose end lies beyond t; the last one absorbs rounding.
        let idx = self.segments.partition_point(|s| s.t_end() <= t);
        idx.min(self.segments.len() - 1)
    }
}

/// Exact position under the piecewise constant-speed / constant-acceleration
/// model.
pub fn position_at<S: Scalar>(traj: &Trajectory<S>, t: S) -> Result<(S, S)> {
    traj.check_time(t)?;
    let seg = &traj.segments[traj.segment_index(t)];
    Ok(seg.position_at_local((t - seg.t_start).max(S::zero())))
}

/// Forward-only position evaluator for monotonically increasing times.
/// Callers guarantee `0 <= t <= arrival`.
pub struct TrajectoryCursor<'a, S> {
    traj: &'a Trajectory<S>,
    index: usize,
}

impl<S: Scalar> TrajectoryCursor<'_, S> {
    #[inline]
    pub fn position(&mut self, t: S) -> (S, S) {
        let segs = &self.traj.segments;
        while self.index + 1 < segs.len() && segs[self.index].t_end() <= t {
            self.index += 1;
        }
        let seg = &segs[self.index];
        seg.position_at_local((t - seg.t_start).max(S::zero()))
    }
}
