//! Curvature-to-radius schedule.
//!
//! Low-curvature regions get a dilated radius (`s_max`), which ramps down to
//! the nominal radius between the 10th and 40th curvature percentiles, stays
//! nominal up to the 60th, and tapers towards `s_min` by the 90th.

use crate::curvature::Percentiles;
use crate::error::{Error, Result};

pub const DEFAULT_R0: f64 = 0.018;
pub const DEFAULT_S_MAX: f64 = 1.35;
pub const DEFAULT_S_MIN: f64 = 2.0 / 3.0;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 1.5;

/// Schedule constants independent of the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub r0: f64,
    pub s_max: f64,
    pub s_min: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            r0: DEFAULT_R0,
            s_max: DEFAULT_S_MAX,
            s_min: DEFAULT_S_MIN,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
        }
    }
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r0 > 0.0
            && self.alpha > 0.0
            && self.beta > 0.0
            && self.s_min > 0.0
            && self.s_min < 1.0
            && self.s_max > 1.0
            && [self.r0, self.s_max, self.s_min, self.alpha, self.beta]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "schedule requires r0, alpha, beta > 0 and 0 < s_min < 1 < s_max: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSchedule {
    pub breakpoints: Percentiles,
    pub params: ScheduleParams,
}

impl RadiusSchedule {
    pub fn new(breakpoints: Percentiles, params: ScheduleParams) -> Result<Self> {
        params.validate()?;
        let b = breakpoints;
        if !(b.p10 <= b.p40 && b.p40 <= b.p60 && b.p60 <= b.p90) {
            return Err(Error::InvalidConfig(format!(
                "curvature breakpoints must be non-decreasing: {b:?}"
            )));
        }
        Ok(Self { breakpoints, params })
    }

    pub fn scale_factor(&self, sigma: f64) -> f64 {
        let b = &self.breakpoints;
        let p = &self.params;
        if sigma <= b.p10 {
            p.s_max
        } else if sigma < b.p40 {
            let g1 = ramp(sigma, b.p10, b.p40).powf(p.alpha);
            (1.0 - g1) * p.s_max + g1
        } else if sigma < b.p60 {
            1.0
        } else if sigma < b.p90 {
            let g2 = ramp(sigma, b.p60, b.p90).powf(p.beta);
            1.0 - (1.0 - p.s_min) * g2
        } else {
            p.s_min
        }
    }

    pub fn radius(&self, sigma: f64) -> f64 {
        self.params.r0 * self.scale_factor(sigma)
    }
}

/// `(x − lo) / (hi − lo)`, with a collapsed interval acting as a step at `hi`.
fn ramp(x: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    if span <= 0.0 {
        if x >= hi {
            1.0
        } else {
            0.0
        }
    } else {
        ((x - lo) / span).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sched(p10: f64, p40: f64, p60: f64, p90: f64) -> RadiusSchedule {
        RadiusSchedule::new(Percentiles { p10, p40, p60, p90 }, ScheduleParams::default()).unwrap()
    }

    #[test]
    fn phase_values() {
        let s = sched(0.01, 0.02, 0.03, 0.05);
        assert_eq!(s.scale_factor(0.0), 1.35);
        assert_eq!(s.scale_factor(0.01), 1.35);
        assert_eq!(s.scale_factor(0.02), 1.0);
        assert_eq!(s.scale_factor(0.029), 1.0);
        assert_eq!(s.scale_factor(0.05), 2.0 / 3.0);
        assert_eq!(s.scale_factor(0.3), 2.0 / 3.0);

        // quarter of the way up the first ramp: g1 = 0.25^0.5 = 0.5
        let s1 = sched(0.0, 0.4, 0.5, 0.9);
        assert!((s1.scale_factor(0.1) - 1.175).abs() < 1e-12);
        // halfway up the taper: g2 = 0.5^1.5
        let g2 = 0.5f64.powf(1.5);
        assert!((s1.scale_factor(0.7) - (1.0 - g2 / 3.0)).abs() < 1e-12);
        assert!((s1.scale_factor(0.7) - 0.88215).abs() < 1e-5);
    }

    #[test]
    fn radius_values() {
        let s = sched(0.01, 0.02, 0.03, 0.05);
        assert!((s.radius(0.0) - 0.0243).abs() < 1e-15);
        assert!((s.radius(0.2) - 0.012).abs() < 1e-15);
        assert_eq!(s.radius(0.025), 0.018);
    }

    #[test]
    fn degenerate_breakpoints_step() {
        let flat = sched(0.0, 0.0, 0.0, 0.0);
        assert_eq!(flat.scale_factor(0.0), 1.35);
        assert_eq!(flat.scale_factor(1e-9), 2.0 / 3.0);
        let s = sched(0.01, 0.01, 0.02, 0.02);
        assert_eq!(s.scale_factor(0.01), 1.35);
        assert_eq!(s.scale_factor(0.015), 1.0);
        assert_eq!(s.scale_factor(0.02), 2.0 / 3.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = Percentiles { p10: 0.2, p40: 0.1, p60: 0.3, p90: 0.3 };
        assert!(RadiusSchedule::new(p, ScheduleParams::default()).is_err());
        let bad = ScheduleParams { s_min: 1.2, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn continuous_monotone_bounded(
            p10 in 0.0f64..0.05,
            gaps in proptest::array::uniform3(1e-3f64..0.09),
            a in 0.0f64..0.34, c in 0.0f64..0.34,
        ) {
            let b = [p10, p10 + gaps[0], p10 + gaps[0] + gaps[1], p10 + gaps[0] + gaps[1] + gaps[2]];
            let s = sched(b[0], b[1], b[2], b[3]);
            let eps = 1e-9;
            let jump = |bp: f64| (s.scale_factor(bp - eps) - s.scale_factor(bp + eps)).abs();
            // square-root onset at p10: Hölder bound (s_max - 1) (2 eps / span)^alpha
            prop_assert!(jump(b[0]) <= 0.35 * (2.0 * eps / gaps[0]).sqrt() + 1e-15);
            for &bp in &b[1..] {
                prop_assert!(jump(bp) < 1e-6);
            }
            let (lo, hi) = if a <= c { (a, c) } else { (c, a) };
            prop_assert!(s.scale_factor(lo) >= s.scale_factor(hi));
            prop_assert!((2.0 / 3.0..=1.35).contains(&s.scale_factor(a)));
        }
    }
}
