use serde::{Deserialize, Serialize};

/// A measured quantity compared against a reference at a stated tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// `|measured - reference| <= tolerance`.
    pub fn close(name: impl Into<String>, measured: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            reference,
            tolerance,
            passed: (measured - reference).abs() <= tolerance,
        }
    }

    /// `measured <= reference + tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            reference,
            tolerance,
            passed: measured <= reference + tolerance,
        }
    }

    /// `measured >= reference - tolerance`.
    pub fn at_least(
        name: impl Into<String>,
        measured: f64,
        reference: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            measured,
            reference,
            tolerance,
            passed: measured >= reference - tolerance,
        }
    }

    /// Pass iff `lo <= measured <= hi`; recorded as reference = midpoint, tolerance = half-width.
    pub fn within(name: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            reference: 0.5 * (lo + hi),
            tolerance: 0.5 * (hi - lo),
            passed: (lo..=hi).contains(&measured),
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            measured: f64::from(u8::from(ok)),
            reference: 1.0,
            tolerance: 0.0,
            passed: ok,
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
