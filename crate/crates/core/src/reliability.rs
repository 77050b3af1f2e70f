//! Capacity outage probability tables and the LOLP / EENS indices.
//!
//! Tables are stored by available capacity on an integer grid of
//! `capacity_rounding` MW, sorted ascending. Entries whose probability falls
//! below `prune_threshold` after a convolution are dropped and their mass is
//! accumulated in [`OutageTable::pruned_mass`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{GepError, Result};
use crate::load::LoadDurationCurve;
use crate::wind::{FarmOutputModel, OutputLevels};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TablePolicy {
    /// Capacity grid in MW.
    pub capacity_rounding: f64,
    /// Entries with smaller probability are discarded after each convolution.
    pub prune_threshold: f64,
}

impl Default for TablePolicy {
    fn default() -> Self {
        TablePolicy {
            capacity_rounding: 1.0,
            prune_threshold: 1e-10,
        }
    }
}

impl TablePolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_rounding.is_finite() && self.capacity_rounding > 0.0) {
            return Err(GepError::invariant(
                "reliability.capacity_rounding_mw",
                "capacity rounding must be positive",
            ));
        }
        if !(self.prune_threshold >= 0.0 && self.prune_threshold < 1.0) {
            return Err(GepError::invariant(
                "reliability.prune_threshold",
                "prune threshold must lie in [0, 1)",
            ));
        }
        Ok(())
    }

    /// An exact policy: no pruning and a fine grid.
    pub fn exact(capacity_rounding: f64) -> Self {
        TablePolicy {
            capacity_rounding,
            prune_threshold: 0.0,
        }
    }

    fn grid(&self, mw: f64) -> i64 {
        (mw / self.capacity_rounding).round() as i64
    }
}

/// Distribution of available generating capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageTable {
    grid: Vec<i64>,
    prob: Vec<f64>,
    total_capacity: f64,
    policy: TablePolicy,
    pruned_mass: f64,
    convolutions: usize,
}

impl OutageTable {
    /// The identity of convolution: 0 MW available with probability one.
    pub fn empty(policy: TablePolicy) -> Self {
        OutageTable {
            grid: vec![0],
            prob: vec![1.0],
            total_capacity: 0.0,
            policy,
            pruned_mass: 0.0,
            convolutions: 0,
        }
    }

    pub fn policy(&self) -> TablePolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Installed nameplate capacity of everything convolved so far (MW).
    pub fn total_capacity(&self) -> f64 {
        self.total_capacity
    }

    /// Probability discarded by pruning so far.
    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    pub fn convolutions(&self) -> usize {
        self.convolutions
    }

    /// `(available MW, probability)` pairs in ascending capacity order.
    pub fn entries(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let step = self.policy.capacity_rounding;
        self.grid
            .iter()
            .zip(&self.prob)
            .map(move |(&g, &p)| (g as f64 * step, p))
    }

    pub fn probability_sum(&self) -> f64 {
        self.prob.iter().sum()
    }

    pub fn expected_available(&self) -> f64 {
        self.entries().map(|(c, p)| c * p).sum()
    }

    /// Adds a two-state unit of `capacity` MW that is out with probability `for_rate`.
    pub fn convolve_two_state(&self, capacity: f64, for_rate: f64) -> OutageTable {
        let mut t = self.clone();
        t.add_two_state(capacity, for_rate);
        t
    }

    /// In-place form of [`OutageTable::convolve_two_state`].
    pub fn add_two_state(&mut self, capacity: f64, for_rate: f64) {
        debug_assert!(capacity > 0.0 && (0.0..1.0).contains(&for_rate));
        let shift = self.policy.grid(capacity);
        self.total_capacity += capacity;
        self.convolutions += 1;
        if for_rate == 0.0 || shift == 0 {
            for g in &mut self.grid {
                *g += shift;
            }
            return;
        }
        let up = 1.0 - for_rate;
        let n = self.grid.len();
        let mut grid = Vec::with_capacity(2 * n);
        let mut prob = Vec::with_capacity(2 * n);
        let (mut i, mut j) = (0, 0);
        // Merge the "unit out" copy (unshifted) with the "unit in" copy (shifted).
        while i < n || j < n {
            let gi = if i < n { self.grid[i] } else { i64::MAX };
            let gj = if j < n { self.grid[j] + shift } else { i64::MAX };
            let (g, p) = if gi < gj {
                i += 1;
                (gi, self.prob[i - 1] * for_rate)
            } else if gj < gi {
                j += 1;
                (gj, self.prob[j - 1] * up)
            } else {
                i += 1;
                j += 1;
                (gi, self.prob[i - 1] * for_rate + self.prob[j - 1] * up)
            };
            grid.push(g);
            prob.push(p);
        }
        self.grid = grid;
        self.prob = prob;
        self.prune();
    }

    /// Adds a multi-state unit given as discrete output levels.
    pub fn convolve_levels(&self, levels: &OutputLevels) -> OutageTable {
        let other: Vec<(i64, f64)> = levels.iter().map(|(p, q)| (self.policy.grid(p), q)).collect();
        let mut t = self.cross(&other);
        t.total_capacity += levels.max_power();
        t.convolutions += 1;
        t
    }

    /// Adds a wind farm with its full multi-state model.
    pub fn convolve_multi_state(&self, farm: &FarmOutputModel) -> OutageTable {
        self.convolve_levels(farm.levels())
    }

    /// Convolution of two independent tables (same policy assumed).
    pub fn convolve_table(&self, other: &OutageTable) -> OutageTable {
        let pairs: Vec<(i64, f64)> = other.entries().map(|(c, p)| (self.policy.grid(c), p)).collect();
        let mut t = self.cross(&pairs);
        t.total_capacity += other.total_capacity;
        t.convolutions += other.convolutions;
        t.pruned_mass += other.pruned_mass;
        t
    }

    fn cross(&self, other: &[(i64, f64)]) -> OutageTable {
        let mut pairs: Vec<(i64, f64)> = Vec::with_capacity(self.grid.len() * other.len());
        for (&g, &p) in self.grid.iter().zip(&self.prob) {
            for &(h, q) in other {
                pairs.push((g + h, p * q));
            }
        }
        pairs.sort_by_key(|&(g, _)| g);
        let mut grid: Vec<i64> = Vec::with_capacity(pairs.len());
        let mut prob: Vec<f64> = Vec::with_capacity(pairs.len());
        for (g, p) in pairs {
            if grid.last() == Some(&g) {
                *prob.last_mut().unwrap() += p;
            } else {
                grid.push(g);
                prob.push(p);
            }
        }
        let mut t = OutageTable {
            grid,
            prob,
            total_capacity: self.total_capacity,
            policy: self.policy,
            pruned_mass: self.pruned_mass,
            convolutions: self.convolutions,
        };
        t.prune();
        t
    }

    fn prune(&mut self) {
        let eps = self.policy.prune_threshold;
        if eps <= 0.0 || self.prob.iter().all(|&p| p >= eps) {
            return;
        }
        let mut dropped = 0.0;
        let mut k = 0;
        for idx in 0..self.grid.len() {
            let p = self.prob[idx];
            if p < eps {
                dropped += p;
            } else {
                self.grid[k] = self.grid[idx];
                self.prob[k] = p;
                k += 1;
            }
        }
        self.grid.truncate(k);
        self.prob.truncate(k);
        self.pruned_mass += dropped;
    }

    /// Loss-of-load probability: expected fraction of the year in which the
    /// load exceeds the available capacity.
    pub fn lolp(&self, ldc: &LoadDurationCurve) -> f64 {
        let lost_hours: f64 = self.entries().map(|(c, p)| p * ldc.duration_at(c)).sum();
        lost_hours / ldc.hours()
    }

    /// Expected energy not supplied (MWh per year): for each state, the area
    /// of the load duration curve above its available capacity.
    pub fn eens(&self, ldc: &LoadDurationCurve) -> f64 {
        self.entries().map(|(c, p)| p * ldc.energy_between(c, ldc.peak())).sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["available_mw", "probability"])?;
        for (c, p) in self.entries() {
            wtr.write_record([c.to_string(), p.to_string()])?;
        }
        wtr.flush().map_err(|e| GepError::io("<csv>", e))?;
        Ok(())
    }
}

/// LOLP and EENS of one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adequacy {
    pub lolp: f64,
    pub eens: f64,
}

/// Prefix moments of a table, used to evaluate the indices of `base ⊗ other`
/// without materializing the product table.
pub struct MomentTable {
    capacity: Vec<f64>,
    m0: Vec<f64>,
    m1: Vec<f64>,
    m2: Vec<f64>,
}

impl MomentTable {
    pub fn new(table: &OutageTable) -> Self {
        let n = table.len();
        let mut capacity = Vec::with_capacity(n);
        let (mut m0, mut m1, mut m2) = (vec![0.0], vec![0.0], vec![0.0]);
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (c, p) in table.entries() {
            capacity.push(c);
            s0 += p;
            s1 += p * c;
            s2 += p * c * c;
            m0.push(s0);
            m1.push(s1);
            m2.push(s2);
        }
        MomentTable { capacity, m0, m1, m2 }
    }

    fn range(&self, lo: f64, hi: f64) -> (usize, usize) {
        (
            self.capacity.partition_point(|&c| c < lo),
            self.capacity.partition_point(|&c| c < hi),
        )
    }

    /// Indices of the convolution of this table with `shifts`, a list of
    /// independent `(added MW, probability)` states.
    pub fn adequacy_with(&self, shifts: impl Iterator<Item = (f64, f64)>, ldc: &LoadDurationCurve) -> Adequacy {
        let segments = ldc.segments();
        // Energy above each segment's upper end.
        let mut above = vec![0.0; segments.len()];
        for s in (0..segments.len().saturating_sub(1)).rev() {
            let next = &segments[s + 1];
            above[s] = above[s + 1] + 0.5 * (next.hi - next.lo) * (next.d_lo + next.d_hi);
        }
        let (mut hours, mut energy) = (0.0, 0.0);
        for (y, q) in shifts {
            if q == 0.0 {
                continue;
            }
            for (seg, &e_above) in segments.iter().zip(&above) {
                let (i0, i1) = self.range(seg.lo - y, seg.hi - y);
                if i0 == i1 {
                    continue;
                }
                let p0 = self.m0[i1] - self.m0[i0];
                let p1 = self.m1[i1] - self.m1[i0];
                let p2 = self.m2[i1] - self.m2[i0];
                let m = seg.slope();
                let c = y - seg.lo;
                // duration(a + y) = d_lo + m * (a + c)
                hours += q * ((seg.d_lo + m * c) * p0 + m * p1);
                // energy above (a + y) = e_above + d_lo * (w - z) + m/2 * (w^2 - z^2), z = a + c
                let w = seg.hi - seg.lo;
                let z1 = p1 + c * p0;
                let z2 = p2 + 2.0 * c * p1 + c * c * p0;
                energy += q * ((e_above + seg.d_lo * w + 0.5 * m * w * w) * p0 - seg.d_lo * z1 - 0.5 * m * z2);
            }
        }
        Adequacy {
            lolp: hours / ldc.hours(),
            eens: energy,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exact() -> OutageTable {
        OutageTable::empty(TablePolicy::exact(1.0))
    }

    #[test]
    fn empty_is_identity() {
        let t = exact();
        assert_eq!(t.entries().collect::<Vec<_>>(), vec![(0.0, 1.0)]);
        assert_eq!(t.total_capacity(), 0.0);
        let u = t.convolve_two_state(100.0, 0.1);
        assert_eq!(u.entries().collect::<Vec<_>>(), vec![(0.0, 0.1), (100.0, 0.9)]);
    }

    #[test]
    fn two_units_of_200() {
        let t = exact().convolve_two_state(200.0, 0.1).convolve_two_state(200.0, 0.1);
        let e: Vec<_> = t.entries().collect();
        assert_eq!(e.len(), 3);
        assert_abs_diff_eq!(e[0].1, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(e[1].1, 0.18, epsilon = 1e-15);
        assert_abs_diff_eq!(e[2].1, 0.81, epsilon = 1e-15);
        assert_eq!((e[0].0, e[1].0, e[2].0), (0.0, 200.0, 400.0));
    }

    #[test]
    fn perfect_unit_shifts() {
        let t = exact().convolve_two_state(100.0, 0.1).convolve_two_state(50.0, 0.0);
        let e: Vec<_> = t.entries().collect();
        assert_eq!(e, vec![(50.0, 0.1), (150.0, 0.9)]);
    }

    #[test]
    fn single_unit_flat_load() {
        let ldc = LoadDurationCurve::new(50.0, 1.0, 8760.0, None).unwrap();
        let t = exact().convolve_two_state(100.0, 0.1);
        assert_abs_diff_eq!(t.lolp(&ldc), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(t.eens(&ldc), 43_800.0, epsilon = 1e-8);
    }

    #[test]
    fn pruning_is_tracked() {
        let mut t = OutageTable::empty(TablePolicy {
            capacity_rounding: 1.0,
            prune_threshold: 0.05,
        });
        t.add_two_state(100.0, 0.1);
        t.add_two_state(100.0, 0.1);
        // 0.01 at 0 MW is pruned.
        assert_eq!(t.len(), 2);
        assert_abs_diff_eq!(t.pruned_mass(), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(t.probability_sum() + t.pruned_mass(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn moments_match_direct_sum() {
        let ldc = LoadDurationCurve::new(300.0, 0.5, 8760.0, Some((0.3, 0.8))).unwrap();
        let base = exact().convolve_two_state(200.0, 0.1).convolve_two_state(120.0, 0.05);
        let wind = OutputLevels::new(vec![(0.0, 0.4), (30.0, 0.35), (60.0, 0.25)]).unwrap();
        let direct = base.convolve_levels(&wind);
        let fast = MomentTable::new(&base).adequacy_with(wind.iter(), &ldc);
        assert_abs_diff_eq!(fast.lolp, direct.lolp(&ldc), epsilon = 1e-12);
        assert_abs_diff_eq!(fast.eens, direct.eens(&ldc), epsilon = 1e-6);
    }

    #[test]
    fn csv_export_header() {
        let mut buf = Vec::new();
        exact().convolve_two_state(100.0, 0.1).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("available_mw,probability\n0,0.1\n100,0.9"));
    }
}
