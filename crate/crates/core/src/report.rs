use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The inequalities this crate can evaluate, named as on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InequalityKind {
    Weak17,
    Strong23,
    Ardehali29,
    Ch30,
    Fc31,
    Chsh,
    Rt32,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 7] = [
        InequalityKind::Weak17,
        InequalityKind::Strong23,
        InequalityKind::Ardehali29,
        InequalityKind::Ch30,
        InequalityKind::Fc31,
        InequalityKind::Chsh,
        InequalityKind::Rt32,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityKind::Weak17 => "weak17",
            InequalityKind::Strong23 => "strong23",
            InequalityKind::Ardehali29 => "ardehali29",
            InequalityKind::Ch30 => "ch30",
            InequalityKind::Fc31 => "fc31",
            InequalityKind::Chsh => "chsh",
            InequalityKind::Rt32 => "rt32",
        }
    }

    pub fn bound(self) -> f64 {
        match self {
            InequalityKind::Weak17
            | InequalityKind::Strong23
            | InequalityKind::Ardehali29
            | InequalityKind::Rt32 => -1.0,
            InequalityKind::Ch30 => 0.0,
            InequalityKind::Fc31 => 0.25,
            InequalityKind::Chsh => 2.0,
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            InequalityKind::Ch30 | InequalityKind::Fc31 | InequalityKind::Chsh => Direction::AtMost,
            _ => Direction::AtLeast,
        }
    }

    /// Number of distinct detection-probability settings an experiment has
    /// to measure, where that count is established.
    pub fn settings_required(self) -> Option<u32> {
        match self {
            InequalityKind::Ardehali29 | InequalityKind::Rt32 => Some(2),
            InequalityKind::Fc31 => Some(3),
            InequalityKind::Ch30 => Some(5),
            _ => None,
        }
    }
}

impl std::str::FromStr for InequalityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        InequalityKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Unsupported(format!("unknown inequality `{s}`")))
    }
}

impl std::fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which side of the bound local theories are confined to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `lhs ≥ bound`
    AtLeast,
    /// `lhs ≤ bound`
    AtMost,
}

/// How far past the bound a value must lie before it counts as a violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub sigmas: f64,
    pub absolute: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            sigmas: 3.0,
            absolute: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality: InequalityKind,
    pub lhs: f64,
    pub bound: f64,
    pub direction: Direction,
    pub violated: bool,
    /// `lhs / bound`; absent when the bound is zero (CH).
    pub violation_factor: Option<f64>,
    pub stderr: f64,
    pub n_samples: u64,
}

impl InequalityReport {
    pub fn new(
        inequality: InequalityKind,
        lhs: f64,
        stderr: f64,
        n_samples: u64,
        tol: Tolerance,
    ) -> Self {
        let bound = inequality.bound();
        let direction = inequality.direction();
        let margin = tol.sigmas * stderr + tol.absolute;
        let violated = match direction {
            Direction::AtLeast => lhs < bound - margin,
            Direction::AtMost => lhs > bound + margin,
        };
        let violation_factor = (bound != 0.0).then(|| lhs / bound);
        Self {
            inequality,
            lhs,
            bound,
            direction,
            violated,
            violation_factor,
            stderr,
            n_samples,
        }
    }

    pub fn analytic(inequality: InequalityKind, lhs: f64) -> Self {
        Self::new(inequality, lhs, 0.0, 0, Tolerance::default())
    }
}

fn factors(new: &InequalityReport, old: &InequalityReport) -> Result<(f64, f64)> {
    for r in [new, old] {
        if !r.violated {
            return Err(Error::UndefinedComparison(format!(
                "{} is not violated (lhs = {})",
                r.inequality, r.lhs
            )));
        }
    }
    match (new.violation_factor, old.violation_factor) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::UndefinedComparison(
            "violation factor undefined for a zero bound".into(),
        )),
    }
}

/// Percent by which `new`'s violation factor exceeds `old`'s.
pub fn violation_improvement(new: &InequalityReport, old: &InequalityReport) -> Result<f64> {
    let (a, b) = factors(new, old)?;
    Ok(improvement_from_factors(a, b))
}

/// Percent by which `new`'s excess over its bound exceeds `old`'s, both
/// measured in units of the bound.
pub fn excess_improvement(new: &InequalityReport, old: &InequalityReport) -> Result<f64> {
    let (a, b) = factors(new, old)?;
    excess_from_factors(a, b)
}

pub fn improvement_from_factors(new: f64, old: f64) -> f64 {
    (new / old - 1.0) * 100.0
}

pub fn excess_from_factors(new: f64, old: f64) -> Result<f64> {
    if old <= 1.0 {
        return Err(Error::UndefinedComparison(format!(
            "reference factor {old} has no excess over its bound"
        )));
    }
    Ok(((new - 1.0) / (old - 1.0) - 1.0) * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn ge(lhs: f64) -> InequalityReport {
        InequalityReport::analytic(InequalityKind::Ardehali29, lhs)
    }

    #[test]
    fn improvement_examples() {
        let r15 = ge(-1.5);
        let r_sqrt2 = ge(-SQRT_2);
        let pct = violation_improvement(&r15, &r_sqrt2).unwrap();
        assert!((pct - (1.5 / SQRT_2 - 1.0) * 100.0).abs() < 1e-12);
        assert!((pct - 6.066017177982119).abs() < 1e-9);
        assert_eq!(violation_improvement(&r_sqrt2, &r_sqrt2).unwrap(), 0.0);
        let r_one = InequalityReport {
            violation_factor: Some(1.0),
            ..ge(-1.5)
        };
        assert!((violation_improvement(&r15, &r_one).unwrap() - 50.0).abs() < 1e-12);
        let ex = excess_improvement(&r15, &r_sqrt2).unwrap();
        assert!((ex - 20.710678118654724).abs() < 1e-9);
    }

    #[test]
    fn improvement_needs_violations() {
        let ok = ge(-0.5);
        assert!(matches!(
            violation_improvement(&ge(-1.5), &ok),
            Err(Error::UndefinedComparison(_))
        ));
    }

    #[test]
    fn violation_respects_direction_and_tolerance() {
        assert!(ge(-1.5).violated);
        assert!(!ge(-1.0 - 1e-15).violated);
        let fc = InequalityReport::analytic(InequalityKind::Fc31, 0.3);
        assert!(fc.violated);
        assert!((fc.violation_factor.unwrap() - 1.2).abs() < 1e-12);
        let noisy = InequalityReport::new(
            InequalityKind::Strong23,
            -1.02,
            0.01,
            1000,
            Tolerance::default(),
        );
        assert!(!noisy.violated);
        let ch = InequalityReport::analytic(InequalityKind::Ch30, 0.2);
        assert!(ch.violated);
        assert_eq!(ch.violation_factor, None);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in InequalityKind::ALL {
            assert_eq!(k.name().parse::<InequalityKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        assert!("bogus".parse::<InequalityKind>().is_err());
    }
}
