//! Frequency sweeps and their tabular output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const CSV_HEADER: &str = "omega,v_x,v_p,fidelity";

/// Significant digits of every float written to CSV.
pub const CSV_DIGITS: usize = 12;

/// Evenly spaced dimensionless frequencies `start, start + step, ..., <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl FrequencyGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) {
            return Err(invalid("omega range", start, "bounds must be finite"));
        }
        if start > end {
            return Err(invalid("omega start", start, "must not exceed the end of the range"));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid("omega step", step, "must be positive"));
        }
        Ok(FrequencyGrid { start, end, step })
    }

    pub fn single(omega: f64) -> Self {
        FrequencyGrid {
            start: omega,
            end: omega,
            step: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        // tolerate round-off so that `end` is included when it lies on the grid
        ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        // integer counter, no accumulated drift
        (0..self.len())
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub omega: f64,
    pub v_x: f64,
    pub v_p: f64,
    pub fidelity: f64,
}

/// Rows in ascending frequency.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    pub fn new(mut rows: Vec<SpectrumRow>) -> Self {
        rows.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        SpectrumTable { rows }
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                format_sig(r.omega, CSV_DIGITS),
                format_sig(r.v_x, CSV_DIGITS),
                format_sig(r.v_p, CSV_DIGITS),
                format_sig(r.fidelity, CSV_DIGITS),
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Full width `2 * omega_max` where `omega_max` is the largest tabulated frequency
    /// with fidelity at or above `threshold`, refined by linear interpolation towards the
    /// next row. Zero if no row reaches the threshold.
    pub fn bandwidth(&self, threshold: f64) -> f64 {
        let Some(k) = self.rows.iter().rposition(|r| r.fidelity >= threshold) else {
            return 0.0;
        };
        let lo = &self.rows[k];
        let Some(hi) = self.rows.get(k + 1) else {
            return 2.0 * lo.omega;
        };
        let t = (lo.fidelity - threshold) / (lo.fidelity - hi.fidelity);
        2.0 * (lo.omega + t * (hi.omega - lo.omega))
    }
}

/// Formats `x` with `sig` significant digits, switching to exponent notation for very
/// small or large magnitudes (the `%g` convention, trailing zeros removed).
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= sig as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(0.453267247065228, 12), "0.453267247065");
        assert_eq!(format_sig(0.5, 12), "0.5");
        assert_eq!(format_sig(2.0, 12), "2");
        assert_eq!(format_sig(-1234.5678, 12), "-1234.5678");
        assert_eq!(format_sig(1.0e-9, 12), "1e-9");
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(123456789012345.0, 12), "1.23456789012e14");
        assert_eq!(format_sig(0.0, 12), "0");
        assert_eq!(format_sig(9.9999999999999e-1, 12), "1");
    }

    #[test]
    fn grid_includes_end() {
        let g = FrequencyGrid::new(0.0, 1.0, 0.1).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 11);
        assert!((pts[10] - 1.0).abs() < 1e-12);
        assert_eq!(FrequencyGrid::single(0.3).points(), vec![0.3]);
        assert!(FrequencyGrid::new(1.0, 0.0, 0.1).is_err());
        assert!(FrequencyGrid::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn table_bandwidth_interpolates() {
        let rows = (0..5)
            .map(|i| SpectrumRow {
                omega: i as f64,
                v_x: 0.0,
                v_p: 0.0,
                fidelity: 1.0 - 0.1 * i as f64,
            })
            .collect();
        let t = SpectrumTable::new(rows);
        assert!((t.bandwidth(0.75) - 5.0).abs() < 1e-12);
        assert_eq!(t.bandwidth(1.5), 0.0);
        assert_eq!(t.bandwidth(0.1), 8.0);
    }

    #[test]
    fn csv_layout() {
        let t = SpectrumTable::new(vec![SpectrumRow {
            omega: 0.0,
            v_x: 2.0,
            v_p: 2.0,
            fidelity: 0.5,
        }]);
        assert_eq!(t.to_csv_string(), "omega,v_x,v_p,fidelity\n0,2,2,0.5\n");
        let back: SpectrumTable = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
