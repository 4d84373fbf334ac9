//! Joint-space reference trajectories.
//!
//! A [`Schedule`] is a contiguous list of segments, each either a quintic
//! polynomial between two boundary states or a circle traced by the first two
//! joints. Segment evaluation is analytic in position, velocity and
//! acceleration.

use alloc::vec;
use alloc::vec::Vec;
use libm::{cos, sin};

use crate::armsim::Kinematics;
use crate::error::{check_dim, Error, Result};

/// Per-joint quintic `p(s) = Σ a_k s^k`, `s ∈ [0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuinticSegment {
    pub duration: f64,
    /// One row of six coefficients `a_0 … a_5` per joint.
    pub coeffs: Vec<[f64; 6]>,
}

impl QuinticSegment {
    /// Rest-to-rest quintic from `p0` to `p1` in time `duration`.
    pub fn fit(p0: &[f64], p1: &[f64], duration: f64) -> Result<Self> {
        let zeros = vec![0.0; p0.len()];
        let start = Kinematics {
            q: p0.to_vec(),
            v: zeros.clone(),
            a: zeros.clone(),
        };
        let end = Kinematics {
            q: p1.to_vec(),
            v: zeros.clone(),
            a: zeros,
        };
        Self::hermite(&start, &end, duration)
    }

    /// Quintic matching position, velocity and acceleration at both ends.
    pub fn hermite(start: &Kinematics, end: &Kinematics, duration: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::invalid("segment duration must be positive"));
        }
        let n = start.dof();
        check_dim("segment end", n, end.dof())?;
        for k in [start, end] {
            check_dim("segment velocity", n, k.v.len())?;
            check_dim("segment acceleration", n, k.a.len())?;
        }
        let t = duration;
        let (t2, t3, t4, t5) = (t * t, t * t * t, t * t * t * t, t * t * t * t * t);
        let coeffs = (0..n)
            .map(|i| {
                let (p0, v0, a0) = (start.q[i], start.v[i], start.a[i]);
                let (p1, v1, a1) = (end.q[i], end.v[i], end.a[i]);
                let dp = p1 - p0;
                let a3 = (20.0 * dp - (8.0 * v1 + 12.0 * v0) * t - (3.0 * a0 - a1) * t2) / (2.0 * t3);
                let a4 = (-30.0 * dp + (14.0 * v1 + 16.0 * v0) * t + (3.0 * a0 - 2.0 * a1) * t2) / (2.0 * t4);
                let a5 = (12.0 * dp - 6.0 * (v1 + v0) * t - (a0 - a1) * t2) / (2.0 * t5);
                [p0, v0, a0 / 2.0, a3, a4, a5]
            })
            .collect();
        Ok(QuinticSegment { duration, coeffs })
    }

    pub fn dof(&self) -> usize {
        self.coeffs.len()
    }

    /// State at local time `s` (not range-checked).
    pub fn eval(&self, s: f64) -> Kinematics {
        let mut out = Kinematics::zeros(self.dof());
        for (i, a) in self.coeffs.iter().enumerate() {
            out.q[i] = a[0] + s * (a[1] + s * (a[2] + s * (a[3] + s * (a[4] + s * a[5]))));
            out.v[i] = a[1] + s * (2.0 * a[2] + s * (3.0 * a[3] + s * (4.0 * a[4] + s * 5.0 * a[5])));
            out.a[i] = 2.0 * a[2] + s * (6.0 * a[3] + s * (12.0 * a[4] + s * 20.0 * a[5]));
        }
        out
    }
}

/// `q_d(s) = c + r (cos(ωs + φ), sin(ωs + φ))` on joints 0 and 1; any further
/// joints stay at their centre value.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleSegment {
    pub center: Vec<f64>,
    pub radius: f64,
    pub rate: f64,
    pub phase: f64,
    pub duration: f64,
}

impl CircleSegment {
    pub fn new(center: Vec<f64>, radius: f64, rate: f64, phase: f64, duration: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::invalid("circle needs at least two joints"));
        }
        if !(radius > 0.0) || rate == 0.0 || !rate.is_finite() {
            return Err(Error::invalid("circle needs a positive radius and non-zero rate"));
        }
        if !(duration > 0.0) {
            return Err(Error::invalid("segment duration must be positive"));
        }
        Ok(CircleSegment {
            center,
            radius,
            rate,
            phase,
            duration,
        })
    }

    pub fn eval(&self, s: f64) -> Kinematics {
        let mut out = Kinematics::zeros(self.center.len());
        out.q.copy_from_slice(&self.center);
        let th = self.rate * s + self.phase;
        let (c, sn) = (cos(th), sin(th));
        let (r, w) = (self.radius, self.rate);
        out.q[0] += r * c;
        out.q[1] += r * sn;
        out.v[0] = -r * w * sn;
        out.v[1] = r * w * c;
        out.a[0] = -r * w * w * c;
        out.a[1] = -r * w * w * sn;
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Quintic(QuinticSegment),
    Circle(CircleSegment),
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match self {
            Segment::Quintic(s) => s.duration,
            Segment::Circle(s) => s.duration,
        }
    }

    pub fn dof(&self) -> usize {
        match self {
            Segment::Quintic(s) => s.dof(),
            Segment::Circle(s) => s.center.len(),
        }
    }

    pub fn eval(&self, s: f64) -> Kinematics {
        match self {
            Segment::Quintic(q) => q.eval(s),
            Segment::Circle(c) => c.eval(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    segments: Vec<Segment>,
    starts: Vec<f64>,
    total: f64,
}

impl Schedule {
    /// Lays segments end to end starting at `t = 0`.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::invalid("schedule has no segments"))?;
        let n = first.dof();
        let mut starts = Vec::with_capacity(segments.len());
        let mut t = 0.0;
        for s in &segments {
            check_dim("segment joints", n, s.dof())?;
            starts.push(t);
            t += s.duration();
        }
        Ok(Schedule {
            segments,
            starts,
            total: t,
        })
    }

    pub fn duration(&self) -> f64 {
        self.total
    }

    pub fn dof(&self) -> usize {
        self.segments[0].dof()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Absolute start time of each segment.
    pub fn segment_starts(&self) -> &[f64] {
        &self.starts
    }

    /// Reference at absolute time `t ∈ [0, duration]`.
    pub fn eval(&self, t: f64) -> Result<Kinematics> {
        if !(t >= 0.0) || t > self.total {
            return Err(Error::invalid(alloc::format!(
                "time {t} outside schedule [0, {}]",
                self.total
            )));
        }
        // last segment whose start is <= t
        let idx = self.starts.partition_point(|&s| s <= t).saturating_sub(1);
        let local = (t - self.starts[idx]).min(self.segments[idx].duration());
        Ok(self.segments[idx].eval(local))
    }
}

/// Rest-to-rest quintic; see [`QuinticSegment::fit`].
pub fn quintic_fit(p0: &[f64], p1: &[f64], duration: f64) -> Result<QuinticSegment> {
    QuinticSegment::fit(p0, p1, duration)
}

/// Parameters of the two-task benchmark reference.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTaskSpec {
    /// Task-1 waypoints, visited cyclically starting from the first.
    pub waypoints: Vec<Vec<f64>>,
    /// Time per waypoint-to-waypoint move (s).
    pub segment_duration: f64,
    /// Time at which task 1 ends and the bridge begins (s).
    pub switch_time: f64,
    /// Duration of the bridge into the circle (s).
    pub bridge_duration: f64,
    pub circle_center: Vec<f64>,
    pub circle_radius: f64,
    /// Circle angular rate (rad/s).
    pub circle_rate: f64,
    /// End of the whole schedule (s).
    pub total_duration: f64,
}

impl Default for TwoTaskSpec {
    fn default() -> Self {
        TwoTaskSpec {
            waypoints: vec![
                vec![-0.6, 0.9],
                vec![0.7, -0.5],
                vec![0.2, 1.1],
                vec![-0.4, -0.6],
                vec![0.9, 0.6],
                vec![-0.9, 0.2],
                vec![0.3, -1.0],
                vec![-0.2, 0.4],
            ],
            segment_duration: 1.0,
            switch_time: 40.0,
            bridge_duration: 1.0,
            circle_center: vec![0.1, 0.3],
            circle_radius: 0.5,
            circle_rate: core::f64::consts::PI / 2.0,
            total_duration: 60.0,
        }
    }
}

impl TwoTaskSpec {
    /// Scales waypoint and circle excursions about the origin by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        let mut s = self.clone();
        for w in &mut s.waypoints {
            w.iter_mut().for_each(|x| *x *= scale);
        }
        s.circle_center.iter_mut().for_each(|x| *x *= scale);
        s.circle_radius *= scale;
        s
    }

    /// Task 1 cycles the waypoints with rest-to-rest quintics until
    /// `switch_time`; a quintic bridge then carries position, velocity and
    /// acceleration into the circle, which runs until `total_duration`.
    pub fn build(&self) -> Result<Schedule> {
        let k = self.waypoints.len();
        if k < 2 {
            return Err(Error::invalid("need at least two waypoints"));
        }
        if !(self.segment_duration > 0.0) {
            return Err(Error::invalid("segment duration must be positive"));
        }
        let moves = self.switch_time / self.segment_duration;
        let n_moves = libm::round(moves);
        if n_moves < 1.0 || (moves - n_moves).abs() > 1e-9 {
            return Err(Error::invalid(
                "switch time must be a positive multiple of the segment duration",
            ));
        }
        let circle_duration = self.total_duration - self.switch_time - self.bridge_duration;
        if !(circle_duration > 0.0) || !(self.bridge_duration > 0.0) {
            return Err(Error::invalid(
                "bridge and circle must both have positive duration",
            ));
        }
        let mut segments = Vec::new();
        for m in 0..n_moves as usize {
            let a = &self.waypoints[m % k];
            let b = &self.waypoints[(m + 1) % k];
            segments.push(Segment::Quintic(QuinticSegment::fit(
                a,
                b,
                self.segment_duration,
            )?));
        }
        let last = &self.waypoints[n_moves as usize % k];
        let circle = CircleSegment::new(
            self.circle_center.clone(),
            self.circle_radius,
            self.circle_rate,
            0.0,
            circle_duration,
        )?;
        let zeros = vec![0.0; last.len()];
        let start = Kinematics {
            q: last.clone(),
            v: zeros.clone(),
            a: zeros,
        };
        let bridge = QuinticSegment::hermite(&start, &circle.eval(0.0), self.bridge_duration)?;
        segments.push(Segment::Quintic(bridge));
        segments.push(Segment::Circle(circle));
        Schedule::new(segments)
    }
}

/// The default 60 s two-task reference with excursions multiplied by `scale`.
pub fn default_two_task_schedule(scale: f64) -> Result<Schedule> {
    if !(scale > 0.0) {
        return Err(Error::invalid("scale must be positive"));
    }
    TwoTaskSpec::default().scaled(scale).build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_quintic_has_textbook_coefficients() {
        // 10 t^3 - 15 t^4 + 6 t^5
        let s = QuinticSegment::fit(&[0.0], &[1.0], 1.0).unwrap();
        let expected = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];
        for (a, b) in s.coeffs[0].iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn quintic_boundary_conditions_and_midpoint() {
        let s = QuinticSegment::fit(&[0.3, -1.0], &[-0.2, 0.5], 2.5).unwrap();
        let a = s.eval(0.0);
        let b = s.eval(2.5);
        let mid = s.eval(1.25);
        for i in 0..2 {
            assert!((a.q[i] - [0.3, -1.0][i]).abs() < 1e-12);
            assert!((b.q[i] - [-0.2, 0.5][i]).abs() < 1e-12);
            for v in [a.v[i], b.v[i], a.a[i], b.a[i]] {
                assert!(v.abs() < 1e-12);
            }
        }
        assert!((mid.q[0] - 0.05).abs() < 1e-12);
        assert!((mid.q[1] + 0.25).abs() < 1e-12);
        assert!(QuinticSegment::fit(&[0.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn hermite_matches_both_ends() {
        let start = Kinematics {
            q: vec![0.1],
            v: vec![0.5],
            a: vec![-1.0],
        };
        let end = Kinematics {
            q: vec![-0.4],
            v: vec![1.2],
            a: vec![2.0],
        };
        let s = QuinticSegment::hermite(&start, &end, 0.8).unwrap();
        let (a, b) = (s.eval(0.0), s.eval(0.8));
        assert!((a.q[0] - 0.1).abs() < 1e-12 && (a.v[0] - 0.5).abs() < 1e-12);
        assert!((a.a[0] + 1.0).abs() < 1e-12);
        assert!((b.q[0] + 0.4).abs() < 1e-12 && (b.v[0] - 1.2).abs() < 1e-12);
        assert!((b.a[0] - 2.0).abs() < 1e-11);
    }

    #[test]
    fn circle_acceleration_magnitude() {
        let c = CircleSegment::new(vec![0.1, 0.2], 0.4, 1.7, 0.3, 10.0).unwrap();
        for k in 0..50 {
            let s = c.eval(k as f64 * 0.2);
            let mag = libm::sqrt(s.a[0] * s.a[0] + s.a[1] * s.a[1]);
            assert!((mag - 0.4 * 1.7 * 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_derivatives_match_central_differences() {
        let sched = default_two_task_schedule(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = 1e-5;
        for _ in 0..100 {
            let t = rng.random_range(h..sched.duration() - h);
            let (lo, mid, hi) = (
                sched.eval(t - h).unwrap(),
                sched.eval(t).unwrap(),
                sched.eval(t + h).unwrap(),
            );
            // skip stencils straddling a seam, where q̈ may jump
            if sched.segment_starts().iter().any(|&s| (s - t).abs() < 2.0 * h) {
                continue;
            }
            for i in 0..2 {
                let v_fd = (hi.q[i] - lo.q[i]) / (2.0 * h);
                let a_fd = (hi.v[i] - lo.v[i]) / (2.0 * h);
                assert!((v_fd - mid.v[i]).abs() < 1e-6, "v at {t}");
                assert!((a_fd - mid.a[i]).abs() < 1e-6, "a at {t}");
            }
        }
    }

    #[test]
    fn default_schedule_layout_and_continuity() {
        let sched = default_two_task_schedule(1.0).unwrap();
        assert!((sched.duration() - 60.0).abs() < 1e-12);
        let starts = sched.segment_starts();
        let bridge_start = starts[starts.len() - 2];
        assert!((bridge_start - 40.0).abs() < 1e-9);
        let spec = TwoTaskSpec::default();
        let start = sched.eval(0.0).unwrap();
        assert_eq!(start.q, spec.waypoints[0]);
        assert_eq!(start.v, vec![0.0, 0.0]);
        for (i, &s) in starts.iter().enumerate().skip(1) {
            let before = sched.segments()[i - 1].eval(sched.segments()[i - 1].duration());
            let after = sched.eval(s).unwrap();
            for j in 0..2 {
                assert!((before.q[j] - after.q[j]).abs() < 1e-10, "q seam {i}");
                assert!((before.v[j] - after.v[j]).abs() < 1e-10, "v seam {i}");
            }
        }
        assert!(sched.eval(60.0).is_ok());
        assert!(sched.eval(60.1).is_err());
        assert!(sched.eval(-0.1).is_err());
    }

    #[test]
    fn schedule_is_bounded() {
        let sched = default_two_task_schedule(1.0).unwrap();
        let mut t = 0.0;
        while t <= 60.0 {
            let k = sched.eval(t).unwrap();
            for x in k.q.iter().chain(&k.v).chain(&k.a) {
                assert!(x.abs() < 20.0);
            }
            t += 0.01;
        }
    }

    #[test]
    fn scale_shrinks_excursions() {
        let a = default_two_task_schedule(1.0).unwrap().eval(13.7).unwrap();
        let b = default_two_task_schedule(0.5).unwrap().eval(13.7).unwrap();
        assert!((b.q[0] - 0.5 * a.q[0]).abs() < 1e-12);
        assert!(default_two_task_schedule(0.0).is_err());
    }
}
