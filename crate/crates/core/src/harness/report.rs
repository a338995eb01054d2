//! Pass/fail reporting for the verification suites.

use std::fmt;

/// One named check with its measured value and threshold.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// When true the check wants `value <= threshold`, otherwise `>=`.
    pub upper_bound: bool,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn upper(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            upper_bound: true,
            pass: value.is_finite() && value <= threshold,
            detail: String::new(),
        }
    }

    pub fn lower(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            upper_bound: false,
            pass: value.is_finite() && value >= threshold,
            detail: String::new(),
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: if pass { 1.0 } else { 0.0 },
            threshold: 1.0,
            upper_bound: false,
            pass,
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = if self.upper_bound { "<=" } else { ">=" };
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{status}] {name}: {value:.6e} {rel} {thr:.6e}",
            name = self.name,
            value = self.value,
            thr = self.threshold,
        )?;
        if !self.detail.is_empty() {
            write!(f, "  ({})", self.detail)?;
        }
        Ok(())
    }
}

/// A suite report: ordered checks plus free-form table rows for the CSVs.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
    /// `(csv file stem, header, rows)` artifacts to write alongside.
    pub tables: Vec<(String, String, Vec<String>)>,
}

impl Report {
    pub fn new(suite: impl Into<String>) -> Self {
        Self {
            suite: suite.into(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(
        &mut self,
        stem: impl Into<String>,
        header: impl Into<String>,
        rows: Vec<String>,
    ) {
        self.tables.push((stem.into(), header.into(), rows));
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}: {}", self.suite, if self.all_pass() { "PASS" } else { "FAIL" })?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        Ok(())
    }
}

/// z-statistic of a sample mean against zero.
pub fn z_score(mean: f64, se: f64) -> f64 {
    if se == 0.0 {
        if mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        mean / se
    }
}

/// Ordinary least-squares slope of `y` on `x` with the standard error of
/// the slope estimate.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|u| (u - mx) * (u - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let dof = (x.len().max(3) - 2) as f64;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(u, v)| {
            let fit = my + slope * (u - mx);
            (v - fit) * (v - fit)
        })
        .sum();
    let se = (sse / dof / sxx).sqrt();
    (slope, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_render_and_judge() {
        let c = Check::upper("residual", 1e-8, 1e-6);
        assert!(c.pass);
        let c2 = Check::lower("slope", 0.9, 1.0);
        assert!(!c2.pass);
        let c3 = Check::upper("nan is never a pass", f64::NAN, 1.0);
        assert!(!c3.pass);
        let mut r = Report::new("demo");
        r.push(c);
        r.push(c2);
        assert!(!r.all_pass());
        let text = format!("{r}");
        assert!(text.contains("FAIL"));
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|u| 2.0 * u + 1.0).collect();
        let (slope, se) = ols_slope(&x, &y);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(se < 1e-12);
    }
}
