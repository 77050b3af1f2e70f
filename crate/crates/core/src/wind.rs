//! Wind turbine and wind farm output models.
//!
//! A turbine is reduced to a handful of discrete output levels estimated from a
//! wind-speed record. A farm of `N` identical turbines is then built by
//! combining the binomial availability of its turbines with the turbine's
//! level model (every available turbine sees the same wind) and clustering the
//! resulting `(N + 1) * K` states back onto `K` representative powers.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GepError, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Quadratic power curve between cut-in and rated speed, flat at rated power
/// until cut-out.
///
/// The quadratic `a + b*v + c*v^2` gives output as a fraction of rated power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub cut_in: f64,
    pub rated_speed: f64,
    pub cut_out: f64,
    pub rated_power: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PowerCurve {
    /// Fits the quadratic from three conditions: zero output at cut-in, rated
    /// output at rated speed, and the cubic law `((v_cin + v_r) / (2 v_r))^3`
    /// at the midpoint speed.
    pub fn fit(cut_in: f64, rated_speed: f64, cut_out: f64, rated_power: f64) -> Result<Self> {
        if !(cut_in.is_finite() && rated_speed.is_finite() && cut_out.is_finite()) {
            return Err(GepError::Degenerate("wind speeds must be finite".into()));
        }
        if cut_in == rated_speed {
            return Err(GepError::Degenerate(format!(
                "cut-in speed equals rated speed ({cut_in} m/s)"
            )));
        }
        if !(0.0 <= cut_in && cut_in < rated_speed && rated_speed < cut_out) {
            return Err(GepError::invariant(
                "power_curve",
                format!("need 0 <= v_cin < v_r < v_co, got {cut_in}, {rated_speed}, {cut_out}"),
            ));
        }
        if !(rated_power > 0.0) {
            return Err(GepError::invariant(
                "power_curve.rated_power_mw",
                "rated power must be positive",
            ));
        }
        let mid = 0.5 * (cut_in + rated_speed);
        let mid_fraction = (mid / rated_speed).powi(3);
        let rows = [
            [1.0, cut_in, cut_in * cut_in],
            [1.0, rated_speed, rated_speed * rated_speed],
            [1.0, mid, mid * mid],
        ];
        let [a, b, c] = solve3(rows, [0.0, 1.0, mid_fraction])?;
        Ok(PowerCurve {
            cut_in,
            rated_speed,
            cut_out,
            rated_power,
            a,
            b,
            c,
        })
    }

    /// Output in MW at wind speed `v` (m/s). Negative speeds are treated as calm.
    pub fn power_at(&self, v: f64) -> f64 {
        if v < self.cut_in || v >= self.cut_out {
            0.0
        } else if v < self.rated_speed {
            self.rated_power * (self.a + self.b * v + self.c * v * v)
        } else {
            self.rated_power
        }
    }
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-300 {
            return Err(GepError::Degenerate("singular power-curve system".into()));
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / m[row][row];
    }
    Ok(x)
}

/// Ordered wind-speed samples in m/s.
#[derive(Debug, Clone, PartialEq)]
pub struct WindSeries {
    samples: Vec<f64>,
    sample_interval_hours: f64,
}

impl WindSeries {
    pub fn new(samples: Vec<f64>, sample_interval_hours: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(GepError::Degenerate("wind series is empty".into()));
        }
        if let Some((i, v)) = samples.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(GepError::invariant(
                format!("wind_series[{i}]"),
                format!("wind speed must be finite and non-negative, got {v}"),
            ));
        }
        if !(sample_interval_hours > 0.0) {
            return Err(GepError::invariant(
                "wind_series.sample_interval",
                "sample interval must be positive",
            ));
        }
        Ok(WindSeries {
            samples,
            sample_interval_hours,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_interval_hours(&self) -> f64 {
        self.sample_interval_hours
    }

    /// Reads a CSV with a header row and columns `timestamp,wind_speed_ms`.
    /// Timestamps are not interpreted; row order defines the series.
    pub fn read_csv<R: Read>(reader: R, sample_interval_hours: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = headers
            .iter()
            .position(|h| h == "wind_speed_ms")
            .ok_or_else(|| GepError::schema("wind_series", "missing `wind_speed_ms` column"))?;
        let mut samples = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let raw = record.get(col).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                GepError::schema(
                    format!("wind_series[{line}].wind_speed_ms"),
                    format!("not a number: {raw:?}"),
                )
            })?;
            samples.push(v);
        }
        WindSeries::new(samples, sample_interval_hours)
    }

    pub fn from_csv_path(path: impl AsRef<Path>, sample_interval_hours: f64) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| GepError::io(path.as_ref(), e))?;
        Self::read_csv(file, sample_interval_hours)
    }
}

/// Discrete output distribution: strictly increasing powers with probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputLevels {
    power: Vec<f64>,
    probability: Vec<f64>,
}

impl OutputLevels {
    /// Strict constructor: probabilities must sum to one within 1e-9.
    pub fn new(levels: Vec<(f64, f64)>) -> Result<Self> {
        Self::with_tolerance(levels, SUM_TOLERANCE)
    }

    /// Builds levels from a published table whose probabilities were rounded.
    ///
    /// If the sum misses one by at most `tolerance`, the residual is booked on
    /// the zero-power level, which leaves the expected output unchanged.
    pub fn with_tolerance(levels: Vec<(f64, f64)>, tolerance: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(GepError::invariant("levels", "at least one level is required"));
        }
        let (power, mut probability): (Vec<f64>, Vec<f64>) = levels.into_iter().unzip();
        for (i, (&p, &q)) in power.iter().zip(&probability).enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(GepError::invariant(
                    format!("levels[{i}].power_mw"),
                    format!("power must be finite and non-negative, got {p}"),
                ));
            }
            if !(q.is_finite() && q >= 0.0) {
                return Err(GepError::invariant(
                    format!("levels[{i}].probability"),
                    format!("probability must be non-negative, got {q}"),
                ));
            }
        }
        if let Some(i) = power.windows(2).position(|w| w[1] <= w[0]) {
            return Err(GepError::invariant(
                format!("levels[{}].power_mw", i + 1),
                "powers must be strictly increasing",
            ));
        }
        let sum: f64 = probability.iter().sum();
        let residual = 1.0 - sum;
        if residual.abs() > tolerance {
            return Err(GepError::invariant(
                "levels",
                format!("probabilities sum to {sum}, expected 1"),
            ));
        }
        if residual.abs() > SUM_TOLERANCE {
            if power[0] != 0.0 || probability[0] + residual < 0.0 {
                return Err(GepError::invariant(
                    "levels",
                    format!("probabilities sum to {sum} and there is no zero level to absorb it"),
                ));
            }
            probability[0] += residual;
        }
        Ok(OutputLevels { power, probability })
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn powers(&self) -> &[f64] {
        &self.power
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probability
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.power.iter().copied().zip(self.probability.iter().copied())
    }

    pub fn max_power(&self) -> f64 {
        *self.power.last().unwrap()
    }

    pub fn expected(&self) -> f64 {
        self.iter().map(|(p, q)| p * q).sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["power_mw", "probability"])?;
        for (p, q) in self.iter() {
            wtr.write_record([p.to_string(), q.to_string()])?;
        }
        wtr.flush().map_err(|e| GepError::io("<csv>", e))?;
        Ok(())
    }

    /// Parses `power_mw,probability` rows. Rounded tables are accepted within
    /// `tolerance` (see [`OutputLevels::with_tolerance`]).
    pub fn read_csv<R: Read>(reader: R, tolerance: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| GepError::schema("levels", format!("missing `{name}` column")))
        };
        let (pc, qc) = (find("power_mw")?, find("probability")?);
        let mut levels = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |c: usize, name: &str| -> Result<f64> {
                let raw = record.get(c).unwrap_or("");
                raw.parse()
                    .map_err(|_| GepError::schema(format!("levels[{line}].{name}"), format!("not a number: {raw:?}")))
            };
            levels.push((parse(pc, "power_mw")?, parse(qc, "probability")?));
        }
        Self::with_tolerance(levels, tolerance)
    }
}

/// K-level output model of a single turbine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineOutputModel {
    levels: OutputLevels,
}

impl TurbineOutputModel {
    /// First level must be 0 MW; the last is taken as rated power.
    pub fn new(levels: OutputLevels) -> Result<Self> {
        if levels.powers()[0] != 0.0 {
            return Err(GepError::invariant(
                "turbine_levels[0].power_mw",
                "the lowest turbine level must be 0 MW",
            ));
        }
        if levels.len() < 2 {
            return Err(GepError::invariant(
                "turbine_levels",
                "a turbine model needs at least two levels",
            ));
        }
        Ok(TurbineOutputModel { levels })
    }

    /// Estimates level probabilities from a wind record.
    ///
    /// Representatives are `0, p_r/(K-1), ..., p_r`; each sample's output is
    /// assigned to the nearest representative, ties going up.
    pub fn from_series(curve: &PowerCurve, series: &WindSeries, level_count: usize) -> Result<Self> {
        if level_count < 2 {
            return Err(GepError::invariant("level_count", "need at least two levels"));
        }
        let step = curve.rated_power / (level_count - 1) as f64;
        let mut counts = vec![0usize; level_count];
        for &v in series.samples() {
            let p = curve.power_at(v);
            let k = ((p / step + 0.5 + 1e-9).floor() as usize).min(level_count - 1);
            counts[k] += 1;
        }
        let total = series.samples().len() as f64;
        let levels = counts
            .iter()
            .enumerate()
            .map(|(k, &n)| (k as f64 * step, n as f64 / total))
            .collect();
        Self::new(OutputLevels::new(levels)?)
    }

    pub fn levels(&self) -> &OutputLevels {
        &self.levels
    }

    pub fn rated_power(&self) -> f64 {
        self.levels.max_power()
    }
}

/// Clustered output model of a farm of identical turbines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmOutputModel {
    levels: OutputLevels,
    turbine_count: u32,
    for_rate: f64,
}

impl FarmOutputModel {
    /// Wraps an already clustered (e.g. tabulated) farm model.
    pub fn from_levels(levels: OutputLevels, turbine_count: u32, for_rate: f64) -> Result<Self> {
        check_for_rate(for_rate)?;
        if turbine_count == 0 {
            return Err(GepError::invariant(
                "turbine_count",
                "a farm needs at least one turbine",
            ));
        }
        Ok(FarmOutputModel {
            levels,
            turbine_count,
            for_rate,
        })
    }

    /// Combines `turbine_count` turbines with independent forced outages.
    ///
    /// All available turbines share one wind level, so the state with `i`
    /// turbines up at level `j` has capacity `i * p_j` and probability
    /// `P_i * q_j`. States are clustered onto `N * p_j` with class edges at
    /// the midpoints between neighbouring representatives.
    pub fn aggregate(turbine: &TurbineOutputModel, turbine_count: u32, for_rate: f64) -> Result<Self> {
        check_for_rate(for_rate)?;
        if turbine_count == 0 {
            return Err(GepError::invariant(
                "turbine_count",
                "a farm needs at least one turbine",
            ));
        }
        let n = turbine_count as f64;
        let reps: Vec<f64> = turbine.levels().powers().iter().map(|p| p * n).collect();
        let edges: Vec<f64> = reps.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let eps = 1e-9 * reps.last().copied().unwrap_or(1.0).max(1.0);
        let mut class_prob = vec![0.0; reps.len()];
        for (i, p_avail) in availability_distribution(turbine_count, for_rate)?
            .into_iter()
            .enumerate()
        {
            for (p_level, q_level) in turbine.levels().iter() {
                let cap = i as f64 * p_level;
                let class = edges.partition_point(|&e| e <= cap + eps);
                class_prob[class] += p_avail * q_level;
            }
        }
        let levels = OutputLevels::new(reps.into_iter().zip(class_prob).collect())?;
        Ok(FarmOutputModel {
            levels,
            turbine_count,
            for_rate,
        })
    }

    pub fn levels(&self) -> &OutputLevels {
        &self.levels
    }

    pub fn turbine_count(&self) -> u32 {
        self.turbine_count
    }

    pub fn for_rate(&self) -> f64 {
        self.for_rate
    }

    pub fn nameplate(&self) -> f64 {
        self.levels.max_power()
    }

    /// Expected farm output in MW.
    pub fn expected_output(&self) -> f64 {
        self.levels.expected()
    }
}

fn check_for_rate(for_rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&for_rate) {
        return Err(GepError::invariant(
            "for_rate",
            format!("forced outage rate must lie in [0, 1), got {for_rate}"),
        ));
    }
    Ok(())
}

/// Binomial probabilities that exactly `i` of `n` turbines are available,
/// for `i = 0..=n`. Terms are accumulated in log space so large `n` does not
/// overflow the binomial coefficient.
pub fn availability_distribution(n: u32, for_rate: f64) -> Result<Vec<f64>> {
    check_for_rate(for_rate)?;
    if for_rate == 0.0 {
        let mut out = vec![0.0; n as usize + 1];
        out[n as usize] = 1.0;
        return Ok(out);
    }
    let (ln_up, ln_down) = ((1.0 - for_rate).ln(), for_rate.ln());
    let mut ln_binom = 0.0;
    let mut out = Vec::with_capacity(n as usize + 1);
    for i in 0..=n {
        if i > 0 {
            ln_binom += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        out.push((ln_binom + i as f64 * ln_up + (n - i) as f64 * ln_down).exp());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn weak_turbine() -> TurbineOutputModel {
        let lv = vec![
            (0.0, 0.475),
            (0.4, 0.3036),
            (0.8, 0.0854),
            (1.2, 0.0623),
            (1.6, 0.0098),
            (2.0, 0.0639),
        ];
        TurbineOutputModel::new(OutputLevels::new(lv).unwrap()).unwrap()
    }

    #[test]
    fn curve_hits_imposed_points() {
        let c = PowerCurve::fit(4.0, 15.0, 25.0, 2.0).unwrap();
        assert_abs_diff_eq!(c.power_at(4.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.power_at(15.0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.power_at(9.5), 2.0 * (9.5f64 / 15.0).powi(3), epsilon = 1e-12);
        assert_eq!(c.power_at(3.0), 0.0);
        assert_eq!(c.power_at(25.0), 0.0);
        assert_eq!(c.power_at(20.0), 2.0);
    }

    #[test]
    fn curve_rejects_bad_speeds() {
        assert!(matches!(
            PowerCurve::fit(10.0, 10.0, 25.0, 2.0),
            Err(GepError::Degenerate(_))
        ));
        assert!(PowerCurve::fit(12.0, 10.0, 25.0, 2.0).is_err());
        assert!(PowerCurve::fit(4.0, 15.0, 14.0, 2.0).is_err());
        assert!(PowerCurve::fit(4.0, 15.0, 25.0, 0.0).is_err());
    }

    #[test]
    fn turbine_levels_equally_spaced() {
        let c = PowerCurve::fit(4.0, 15.0, 25.0, 2.0).unwrap();
        let s = WindSeries::new(vec![0.0; 10], 1.0).unwrap();
        let m = TurbineOutputModel::from_series(&c, &s, 6).unwrap();
        for (got, want) in m.levels().powers().iter().zip([0.0, 0.4, 0.8, 1.2, 1.6, 2.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_eq!(m.levels().probabilities()[0], 1.0);
    }

    #[test]
    fn empty_series_is_rejected() {
        assert!(matches!(WindSeries::new(vec![], 1.0), Err(GepError::Degenerate(_))));
        assert!(WindSeries::new(vec![-1.0], 1.0).is_err());
    }

    #[test]
    fn availability_single_unit() {
        let p = availability_distribution(1, 0.1).unwrap();
        assert_abs_diff_eq!(p[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn availability_top_term() {
        let p = availability_distribution(30, 0.1).unwrap();
        assert_abs_diff_eq!(p[30], 0.9f64.powi(30), epsilon = 1e-14);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn availability_perfect_units() {
        assert_eq!(availability_distribution(3, 0.0).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
        assert!(availability_distribution(3, 1.0).is_err());
    }

    #[test]
    fn farm_of_one_turbine() {
        let t = weak_turbine();
        let f = FarmOutputModel::aggregate(&t, 1, 0.1).unwrap();
        let tq = t.levels().probabilities();
        let fq = f.levels().probabilities();
        assert_abs_diff_eq!(fq[0], tq[0] * 0.9 + 0.1, epsilon = 1e-15);
        for j in 1..tq.len() {
            assert_abs_diff_eq!(fq[j], tq[j] * 0.9, epsilon = 1e-15);
        }
    }

    #[test]
    fn lossless_farm_scales_turbine() {
        let t = weak_turbine();
        let f = FarmOutputModel::aggregate(&t, 30, 0.0).unwrap();
        for ((fp, fq), (tp, tq)) in f.levels().iter().zip(t.levels().iter()) {
            assert_abs_diff_eq!(fp, 30.0 * tp, epsilon = 1e-12);
            assert_abs_diff_eq!(fq, tq, epsilon = 1e-15);
        }
    }

    #[test]
    fn rounded_table_absorbs_residual_at_zero() {
        let lv = vec![(0.0, 0.2942), (12.0, 0.174601), (60.0, 0.5306)];
        let strict = OutputLevels::new(lv.clone());
        assert!(strict.is_err());
        let lenient = OutputLevels::with_tolerance(lv, 1e-3).unwrap();
        assert_abs_diff_eq!(lenient.probabilities().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lenient.expected(), 12.0 * 0.174601 + 60.0 * 0.5306, epsilon = 1e-12);
    }

    #[test]
    fn levels_must_increase() {
        assert!(OutputLevels::new(vec![(0.0, 0.5), (0.0, 0.5)]).is_err());
        assert!(OutputLevels::new(vec![(0.0, 0.5), (1.0, -0.5), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn levels_csv_roundtrip() {
        let t = weak_turbine();
        let mut buf = Vec::new();
        t.levels().write_csv(&mut buf).unwrap();
        let back = OutputLevels::read_csv(buf.as_slice(), 1e-9).unwrap();
        assert_eq!(&back, t.levels());
    }

    #[test]
    fn series_csv_uses_named_column() {
        let text = "timestamp,wind_speed_ms\n2020-01-01T00,3.5\n2020-01-01T01,12\n";
        let s = WindSeries::read_csv(text.as_bytes(), 1.0).unwrap();
        assert_eq!(s.samples(), &[3.5, 12.0]);
        let bad = "timestamp,speed\nx,1\n";
        assert!(WindSeries::read_csv(bad.as_bytes(), 1.0).is_err());
    }
}
