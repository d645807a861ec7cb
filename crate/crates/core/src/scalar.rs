//! Scalar abstraction for the kinematic and cost arithmetic.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type used for positions, speeds, times and fuel costs.
///
/// Implemented for `f32` and `f64`. Trajectory costs are snapped to a
/// dyadic grid of [`Scalar::cost_quantum`] so that sums of costs are exact
/// whatever the accumulation order.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Sum + Send + Sync + Serialize + DeserializeOwned + 'static
{
    /// Grid step costs are rounded to. A power of two small enough that
    /// every realistic sum of costs is still exactly representable.
    fn cost_quantum() -> Self;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn cost_quantum() -> Self {
        // 2^-24 kg: sums stay exact up to 2^28 kg.
        1.0 / 16_777_216.0
    }
}

impl Scalar for f32 {
    #[inline]
    fn cost_quantum() -> Self {
        // 2^-12 kg: sums stay exact up to 2^11 kg.
        1.0 / 4096.0
    }
}

/// Rounds a cost onto the [`Scalar::cost_quantum`] grid.
#[inline]
pub fn quantize_cost<S: Scalar>(cost: S) -> S {
    let q = S::cost_quantum();
    (cost / q).round() * q
}

/// Knots to nautical miles per second.
#[inline]
pub fn knots_to_nm_per_s<S: Scalar>(kt: S) -> S {
    kt / S::lit(3600.0)
}

/// Normalizes an angle in degrees to `[0, 360)`.
#[inline]
pub fn normalize_heading<S: Scalar>(deg: S) -> S {
    let full = S::lit(360.0);
    let r = deg % full;
    let r = if r < S::zero() { r + full } else { r };
    if r >= full {
        S::zero()
    } else {
        r
    }
}

/// Signed smallest difference `to - from` in degrees, in `(-180, 180]`.
#[inline]
pub fn heading_difference<S: Scalar>(from: S, to: S) -> S {
    let d = normalize_heading(to - from);
    if d > S::lit(180.0) {
        d - S::lit(360.0)
    } else {
        d
    }
}

/// Unit direction `(east, north)` of a heading (0 = north, 90 = east).
#[inline]
pub fn heading_vector<S: Scalar>(heading_deg: S) -> (S, S) {
    let r = heading_deg.to_radians();
    (r.sin(), r.cos())
}

/// Heading in degrees from `from` towards `to`.
#[inline]
pub fn bearing<S: Scalar>(from: (S, S), to: (S, S)) -> S {
    let dx = to.0 - from.0;
    let dy = to.1 - from.1;
    normalize_heading(dx.atan2(dy).to_degrees())
}
