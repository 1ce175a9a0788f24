//! Side-by-side evaluation of every inequality on one source, with the
//! violation of each measured against CHSH.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inequality::{evaluate, ProbabilitySource, Settings};
use crate::report::{
    excess_from_factors, improvement_from_factors, Direction, InequalityKind, InequalityReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub inequality: InequalityKind,
    pub lhs: f64,
    pub bound: f64,
    pub direction: Direction,
    pub violated: bool,
    pub violation_factor: Option<f64>,
    pub stderr: f64,
    /// Distinct detection-probability settings to measure, where known.
    pub settings_required: Option<u32>,
    /// Percent by which the violation factor exceeds CHSH's.
    pub factor_ratio: Option<f64>,
    /// Percent by which the excess over the bound exceeds CHSH's.
    pub excess_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reference: InequalityKind,
    pub reference_factor: Option<f64>,
    pub rows: Vec<ComparisonRow>,
}

fn violated_factor(r: &InequalityReport) -> Option<f64> {
    r.violation_factor.filter(|_| r.violated)
}

/// Evaluates all of [`InequalityKind::ALL`] on `src`. Ratios are left empty
/// when either side is not violated or has no factor (zero bound).
pub fn compare(src: &ProbabilitySource, settings: &Settings) -> Result<Comparison> {
    let reports = InequalityKind::ALL
        .iter()
        .map(|&k| evaluate(k, src, settings))
        .collect::<Result<Vec<_>>>()?;
    let reference = InequalityKind::Chsh;
    let reference_factor = reports
        .iter()
        .find(|r| r.inequality == reference)
        .and_then(violated_factor);
    let rows = reports
        .into_iter()
        .map(|r| {
            let own = violated_factor(&r);
            let (factor_ratio, excess_ratio) = match (own, reference_factor) {
                (Some(a), Some(b)) => (
                    Some(improvement_from_factors(a, b)),
                    excess_from_factors(a, b).ok(),
                ),
                _ => (None, None),
            };
            ComparisonRow {
                inequality: r.inequality,
                lhs: r.lhs,
                bound: r.bound,
                direction: r.direction,
                violated: r.violated,
                violation_factor: r.violation_factor,
                stderr: r.stderr,
                settings_required: r.inequality.settings_required(),
                factor_ratio,
                excess_ratio,
            }
        })
        .collect();
    Ok(Comparison {
        reference,
        reference_factor,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhv::{build_model, Method};
    use crate::quantum::{ApparatusParams, QuantumModel};

    fn row(c: &Comparison, k: InequalityKind) -> &ComparisonRow {
        c.rows.iter().find(|r| r.inequality == k).unwrap()
    }

    #[test]
    fn quantum_against_chsh() {
        let src =
            ProbabilitySource::Quantum(QuantumModel::new(ApparatusParams::default()).unwrap());
        let c = compare(&src, &Settings::default()).unwrap();
        assert_eq!(c.rows.len(), 7);
        assert!((c.reference_factor.unwrap() - std::f64::consts::SQRT_2).abs() < 1e-12);
        let r29 = row(&c, InequalityKind::Ardehali29);
        assert_eq!(r29.settings_required, Some(2));
        assert!((r29.factor_ratio.unwrap() - 6.066017177982119).abs() < 1e-9);
        assert!((r29.excess_ratio.unwrap() - 20.710678118654724).abs() < 1e-9);
        assert_eq!(row(&c, InequalityKind::Fc31).settings_required, Some(3));
        assert_eq!(row(&c, InequalityKind::Ch30).settings_required, Some(5));
        assert_eq!(row(&c, InequalityKind::Ch30).factor_ratio, None);
        // Weak form is not violated by the quantum prediction.
        assert!(!row(&c, InequalityKind::Weak17).violated);
        assert_eq!(row(&c, InequalityKind::Weak17).factor_ratio, None);
        assert!(row(&c, InequalityKind::Chsh).factor_ratio.unwrap().abs() < 1e-12);
    }

    #[test]
    fn local_model_has_no_ratios() {
        let m = build_model("sign", &Default::default()).unwrap();
        let src = ProbabilitySource::lhv(m, Method::quadrature()).unwrap();
        let c = compare(&src, &Settings::default()).unwrap();
        assert!(c
            .rows
            .iter()
            .all(|r| !r.violated && r.factor_ratio.is_none()));
        assert_eq!(c.reference_factor, None);
    }
}
