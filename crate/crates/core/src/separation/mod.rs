//! Pairwise trajectory compatibility: time-synchronized minimum distance,
//! a memoizing checker for lazy use, and the full compatibility matrix.

mod cache;
mod matrix;

pub use cache::{check_pair_cached, CompatibilityCache, LazyChecker};
pub use matrix::{build_matrix, CompatibilityMatrix, MatrixOptions};

use crate::model::Trajectory;
use crate::{Error, Result, Scalar};

/// Anything answering "are trajectory `ti` of aircraft `i` and trajectory
/// `tj` of aircraft `j` compatible".
pub trait PairCompatibility {
    fn is_compatible(&self, i: usize, ti: usize, j: usize, tj: usize) -> Result<bool>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparationParams<S> {
    pub min_horizontal: S,
    pub safety_margin: S,
    /// Distance sampling period, seconds.
    pub sample_step: S,
}

impl<S: Scalar> Default for SeparationParams<S> {
    fn default() -> Self {
        Self { min_horizontal: S::lit(5.0), safety_margin: S::lit(0.5), sample_step: S::lit(5.0) }
    }
}

impl<S: Scalar> SeparationParams<S> {
    /// Required distance: separation minimum plus safety margin.
    pub fn threshold(&self) -> S {
        self.min_horizontal + self.safety_margin
    }
}

fn common_period<S: Scalar>(a: &Trajectory<S>, b: &Trajectory<S>) -> Result<S> {
    let (ta, tb) = (a.arrival_time(), b.arrival_time());
    if (ta - tb).abs() > S::lit(1e-9) * ta.abs().max(tb.abs()) {
        return Err(Error::Domain(format!("trajectories span different periods ({ta} s vs {tb} s)")));
    }
    if a.segments.is_empty() || b.segments.is_empty() {
        return Err(Error::Domain("trajectory has no segments".into()));
    }
    Ok(ta)
}

/// Visits squared distances at `0, step, 2 step, ...` and at the period end,
/// stopping early when `visit` returns false.
fn scan_squared<S: Scalar>(a: &Trajectory<S>, b: &Trajectory<S>, step: S, mut visit: impl FnMut(S) -> bool) -> Result<()> {
    let period = common_period(a, b)?;
    if !(step > S::zero()) {
        return Err(Error::Parameter("sample step must be > 0".into()));
    }
    let (mut ca, mut cb) = (a.cursor(), b.cursor());
    let mut k = 0usize;
    loop {
        let t = S::from_usize(k).expect("sample index") * step;
        let t = if t >= period { period } else { t };
        let pa = ca.position(t);
        let pb = cb.position(t);
        let (dx, dy) = (pa.0 - pb.0, pa.1 - pb.1);
        if !visit(dx * dx + dy * dy) || t >= period {
            return Ok(());
        }
        k += 1;
    }
}

const CHUNK: usize = 16;
const GROUP: usize = 4;

/// Positions of one trajectory at every sampling instant (`k * step`,
/// then the period end), stored column-wise, with a bounding box per run
/// of `CHUNK` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledTrack<S> {
    period: S,
    step: S,
    xs: Vec<S>,
    ys: Vec<S>,
    /// `[x_min, x_max, y_min, y_max]` per chunk.
    boxes: Vec<[S; 4]>,
    /// Union of every `GROUP` consecutive chunk boxes.
    groups: Vec<[S; 4]>,
}

/// Squared gap between two boxes. Rounding is monotone, so this never
/// exceeds the computed squared distance of any two points inside them.
#[inline]
fn box_gap2<S: Scalar>(a: &[S; 4], b: &[S; 4]) -> S {
    let gap = |u: S, v: S| {
        let m = if u > v { u } else { v };
        if m > S::zero() {
            m
        } else {
            S::zero()
        }
    };
    let dx = gap(b[0] - a[1], a[0] - b[1]);
    let dy = gap(b[2] - a[3], a[2] - b[3]);
    dx * dx + dy * dy
}

/// Smallest squared distance between two equally long runs of positions.
#[inline]
fn chunk_min2<S: Scalar>(ax: &[S], ay: &[S], bx: &[S], by: &[S]) -> S {
    let n = ax.len();
    let (ay, bx, by) = (&ay[..n], &bx[..n], &by[..n]);
    let mut low = S::infinity();
    for k in 0..n {
        let dx = ax[k] - bx[k];
        let dy = ay[k] - by[k];
        let d = dx * dx + dy * dy;
        if d < low {
            low = d;
        }
    }
    low
}

impl<S: Scalar> SampledTrack<S> {
    pub fn new(traj: &Trajectory<S>, step: S) -> Result<Self> {
        if !(step > S::zero()) {
            return Err(Error::Parameter("sample step must be > 0".into()));
        }
        if traj.segments.is_empty() {
            return Err(Error::Domain("trajectory has no segments".into()));
        }
        let period = traj.arrival_time();
        let mut cursor = traj.cursor();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        let mut k = 0usize;
        loop {
            let t = S::from_usize(k).expect("sample index") * step;
            let t = if t >= period { period } else { t };
            let (x, y) = cursor.position(t);
            xs.push(x);
            ys.push(y);
            if t >= period {
                break;
            }
            k += 1;
        }
        let boxes: Vec<[S; 4]> = xs
            .chunks(CHUNK)
            .zip(ys.chunks(CHUNK))
            .map(|(cx, cy)| {
                let lo_hi = |c: &[S]| c.iter().fold((S::infinity(), S::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                let (x0, x1) = lo_hi(cx);
                let (y0, y1) = lo_hi(cy);
                [x0, x1, y0, y1]
            })
            .collect();
        let groups = boxes
            .chunks(GROUP)
            .map(|g: &[[S; 4]]| g.iter().skip(1).fold(g[0], |u, b| [u[0].min(b[0]), u[1].max(b[1]), u[2].min(b[2]), u[3].max(b[3])]))
            .collect();
        Ok(Self { period, step, xs, ys, boxes, groups })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn step(&self) -> S {
        self.step
    }

    fn check_pair(&self, other: &Self) -> Result<()> {
        let (ta, tb) = (self.period, other.period);
        if (ta - tb).abs() > S::lit(1e-9) * ta.abs().max(tb.abs()) || self.step != other.step || self.len() != other.len() {
            return Err(Error::Domain(format!("tracks sample different periods ({ta} s vs {tb} s)")));
        }
        Ok(())
    }

    /// Same answer as [`compatible`] on the underlying trajectories.
    pub fn compatible_with(&self, other: &Self, threshold: S) -> Result<bool> {
        self.check_pair(other)?;
        let thr2 = threshold * threshold;
        let n = self.len();
        // Conflicts cluster mid-period, so groups are visited from the middle out.
        let ng = self.groups.len();
        let mid = ng / 2;
        for j in 0..ng {
            let g = if j % 2 == 0 { mid + j / 2 } else { mid - 1 - j / 2 };
            if box_gap2(&self.groups[g], &other.groups[g]) >= thr2 {
                continue;
            }
            let last = ((g + 1) * GROUP).min(self.boxes.len());
            for c in g * GROUP..last {
                if box_gap2(&self.boxes[c], &other.boxes[c]) >= thr2 {
                    continue;
                }
                let (start, end) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
                let low = chunk_min2(&self.xs[start..end], &self.ys[start..end], &other.xs[start..end], &other.ys[start..end]);
                if low < thr2 && low.sqrt() < threshold {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn min_distance_to(&self, other: &Self) -> Result<S> {
        self.check_pair(other)?;
        let mut best = S::infinity();
        for k in 0..self.len() {
            let dx = self.xs[k] - other.xs[k];
            let dy = self.ys[k] - other.ys[k];
            best = best.min(dx * dx + dy * dy);
        }
        Ok(best.sqrt())
    }
}

/// Minimum sampled distance (NM) between two time-synchronized trajectories.
pub fn min_distance<S: Scalar>(a: &Trajectory<S>, b: &Trajectory<S>, params: &SeparationParams<S>) -> Result<S> {
    let mut best = S::infinity();
    scan_squared(a, b, params.sample_step, |d2| {
        if d2 < best {
            best = d2;
        }
        true
    })?;
    Ok(best.sqrt())
}

/// Whether the sampled distance never drops below the separation minimum
/// plus margin (the boundary value itself is compatible).
pub fn compatible<S: Scalar>(a: &Trajectory<S>, b: &Trajectory<S>, params: &SeparationParams<S>) -> Result<bool> {
    let thr = params.threshold();
    let thr2 = thr * thr;
    let mut ok = true;
    scan_squared(a, b, params.sample_step, |d2| {
        // Compare distances, not squares, so the boundary is exact.
        if d2 < thr2 && d2.sqrt() < thr {
            ok = false;
        }
        ok
    })?;
    Ok(ok)
}
