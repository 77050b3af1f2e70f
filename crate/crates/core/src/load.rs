//! Piecewise-linear annual load duration curve.

use serde::Serialize;

use crate::error::{GepError, Result};

/// Linear piece of the duration function over the load band `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    /// Hours with demand above `lo`.
    pub d_lo: f64,
    /// Hours with demand above `hi` (limit from the left).
    pub d_hi: f64,
}

impl Segment {
    pub fn slope(&self) -> f64 {
        (self.d_hi - self.d_lo) / (self.hi - self.lo)
    }

    pub fn duration_at(&self, load: f64) -> f64 {
        self.d_lo + self.slope() * (load - self.lo)
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(self.lo), b.min(self.hi));
        if b <= a {
            return 0.0;
        }
        0.5 * (b - a) * (self.duration_at(a) + self.duration_at(b))
    }
}

/// Annual load duration curve: demand falls linearly from `peak` at zero
/// duration to `base` at `hours`, optionally through one interior breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadDurationCurve {
    peak: f64,
    base: f64,
    hours: f64,
    /// `(duration fraction of hours, load fraction of peak)`.
    breakpoint: Option<(f64, f64)>,
    #[serde(skip)]
    segments: Vec<Segment>,
}

impl LoadDurationCurve {
    pub fn new(peak: f64, base_ratio: f64, hours: f64, breakpoint: Option<(f64, f64)>) -> Result<Self> {
        if !(peak.is_finite() && peak > 0.0) {
            return Err(GepError::invariant(
                "ldc.peak",
                format!("peak must be positive, got {peak}"),
            ));
        }
        if !(base_ratio > 0.0 && base_ratio <= 1.0) {
            return Err(GepError::invariant(
                "horizon.base_load_ratio",
                format!("base ratio must lie in (0, 1], got {base_ratio}"),
            ));
        }
        if !(hours.is_finite() && hours > 0.0) {
            return Err(GepError::invariant("horizon.hours_per_year", "hours must be positive"));
        }
        let base = base_ratio * peak;
        if let Some((dur, load)) = breakpoint {
            if !(dur > 0.0 && dur < 1.0 && load > base_ratio && load < 1.0) {
                return Err(GepError::invariant(
                    "horizon.ldc_breakpoint",
                    format!("breakpoint ({dur}, {load}) must lie strictly inside (0, 1) x ({base_ratio}, 1)"),
                ));
            }
        }
        let mut ldc = LoadDurationCurve {
            peak,
            base,
            hours,
            breakpoint,
            segments: Vec::new(),
        };
        ldc.segments = ldc.build_segments();
        Ok(ldc)
    }

    fn build_segments(&self) -> Vec<Segment> {
        let mut knots = vec![(0.0, self.hours), (self.base, self.hours)];
        if let Some((dur, load)) = self.breakpoint {
            knots.push((load * self.peak, dur * self.hours));
        }
        knots.push((self.peak, 0.0));
        if self.base == self.peak {
            // Flat curve: full duration right up to the peak.
            knots.last_mut().unwrap().1 = self.hours;
        }
        knots
            .windows(2)
            .filter(|w| w[1].0 > w[0].0)
            .map(|w| Segment {
                lo: w[0].0,
                hi: w[1].0,
                d_lo: w[0].1,
                d_hi: w[1].1,
            })
            .collect()
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn hours(&self) -> f64 {
        self.hours
    }

    pub fn breakpoint(&self) -> Option<(f64, f64)> {
        self.breakpoint
    }

    /// Linear pieces covering `[0, peak]`; above the peak the duration is zero.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Hours per year during which demand exceeds `load`.
    pub fn duration_at(&self, load: f64) -> f64 {
        if load >= self.peak {
            return 0.0;
        }
        if load < self.base {
            return self.hours;
        }
        self.segments
            .iter()
            .find(|s| load >= s.lo && load < s.hi)
            .map(|s| s.duration_at(load))
            .unwrap_or(0.0)
    }

    /// Energy (MWh per year) in the load band `[l1, l2]`, i.e. the area under
    /// the duration curve between those two load levels.
    pub fn energy_between(&self, l1: f64, l2: f64) -> f64 {
        let (lo, hi) = (l1.max(0.0), l2.min(self.peak));
        if hi <= lo {
            return 0.0;
        }
        self.segments.iter().map(|s| s.integral(lo, hi)).sum()
    }

    /// Total annual energy.
    pub fn total_energy(&self) -> f64 {
        self.energy_between(0.0, self.peak)
    }
}
