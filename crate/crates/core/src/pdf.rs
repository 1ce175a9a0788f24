use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Joint and single detection probabilities for one orientation pair, per
/// emitted pair (not conditioned on detection).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomePdf {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
    pub s1_plus: f64,
    pub s1_minus: f64,
    pub s2_plus: f64,
    pub s2_minus: f64,
}

/// Selects one entry of an [`OutcomePdf`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
    FirstPlus,
    FirstMinus,
    SecondPlus,
    SecondMinus,
}

impl Outcome {
    pub const JOINT: [Outcome; 4] = [
        Outcome::PlusPlus,
        Outcome::PlusMinus,
        Outcome::MinusPlus,
        Outcome::MinusMinus,
    ];

    pub const ALL: [Outcome; 8] = [
        Outcome::PlusPlus,
        Outcome::PlusMinus,
        Outcome::MinusPlus,
        Outcome::MinusMinus,
        Outcome::FirstPlus,
        Outcome::FirstMinus,
        Outcome::SecondPlus,
        Outcome::SecondMinus,
    ];

    /// Product of the two detectors' channel probabilities that realizes this
    /// outcome, given each detector's `(p_plus, p_minus)`.
    pub fn from_responses(self, first: (f64, f64), second: (f64, f64)) -> f64 {
        match self {
            Outcome::PlusPlus => first.0 * second.0,
            Outcome::PlusMinus => first.0 * second.1,
            Outcome::MinusPlus => first.1 * second.0,
            Outcome::MinusMinus => first.1 * second.1,
            Outcome::FirstPlus => first.0,
            Outcome::FirstMinus => first.1,
            Outcome::SecondPlus => second.0,
            Outcome::SecondMinus => second.1,
        }
    }
}

impl OutcomePdf {
    pub fn joint(pp: f64, pm: f64, mp: f64, mm: f64) -> Self {
        Self {
            pp,
            pm,
            mp,
            mm,
            s1_plus: pp + pm,
            s1_minus: mp + mm,
            s2_plus: pp + mp,
            s2_minus: pm + mm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pp", self.pp),
            ("pm", self.pm),
            ("mp", self.mp),
            ("mm", self.mm),
            ("s1_plus", self.s1_plus),
            ("s1_minus", self.s1_minus),
            ("s2_plus", self.s2_plus),
            ("s2_minus", self.s2_minus),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid("pdf", format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.joint_total() > 1.0 + 1e-12 {
            return Err(invalid(
                "pdf",
                format!("joint probabilities sum to {} > 1", self.joint_total()),
            ));
        }
        Ok(())
    }

    pub fn get(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::PlusPlus => self.pp,
            Outcome::PlusMinus => self.pm,
            Outcome::MinusPlus => self.mp,
            Outcome::MinusMinus => self.mm,
            Outcome::FirstPlus => self.s1_plus,
            Outcome::FirstMinus => self.s1_minus,
            Outcome::SecondPlus => self.s2_plus,
            Outcome::SecondMinus => self.s2_minus,
        }
    }

    pub fn joint_total(&self) -> f64 {
        self.pp + self.pm + self.mp + self.mm
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            pp: self.pp * k,
            pm: self.pm * k,
            mp: self.mp * k,
            mm: self.mm * k,
            s1_plus: self.s1_plus * k,
            s1_minus: self.s1_minus * k,
            s2_plus: self.s2_plus * k,
            s2_minus: self.s2_minus * k,
        }
    }

    pub fn max_joint_deviation(&self, other: &OutcomePdf) -> f64 {
        Outcome::JOINT
            .iter()
            .map(|&o| (self.get(o) - other.get(o)).abs())
            .fold(0.0, f64::max)
    }
}

/// `p++ − p+− − p−+ + p−−`.
pub fn correlation_e(pdf: &OutcomePdf) -> f64 {
    pdf.pp - pdf.pm - pdf.mp + pdf.mm
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn correlation_extremes() {
        assert_eq!(correlation_e(&OutcomePdf::joint(0.5, 0.0, 0.0, 0.5)), 1.0);
        assert_eq!(correlation_e(&OutcomePdf::joint(0.0, 0.5, 0.5, 0.0)), -1.0);
    }

    #[test]
    fn validate_rejects_bad_tables() {
        assert!(OutcomePdf::joint(0.6, 0.6, 0.0, 0.0).validate().is_err());
        assert!(OutcomePdf::joint(-0.1, 0.0, 0.0, 0.0).validate().is_err());
        assert!(OutcomePdf::joint(0.25, 0.25, 0.25, 0.25).validate().is_ok());
    }

    proptest! {
        #[test]
        fn correlation_bounded_and_linear(
            w in proptest::array::uniform4(0.0..1.0f64),
            v in proptest::array::uniform4(0.0..1.0f64),
            k in 0.0..1.0f64,
        ) {
            let sw: f64 = w.iter().sum::<f64>().max(1.0);
            let sv: f64 = v.iter().sum::<f64>().max(1.0);
            let p = OutcomePdf::joint(w[0] / sw, w[1] / sw, w[2] / sw, w[3] / sw);
            let q = OutcomePdf::joint(v[0] / sv, v[1] / sv, v[2] / sv, v[3] / sv);
            prop_assert!(correlation_e(&p).abs() <= p.joint_total() + 1e-15);
            prop_assert!(p.joint_total() <= 1.0 + 1e-12);
            let mix = OutcomePdf::joint(
                k * p.pp + (1.0 - k) * q.pp,
                k * p.pm + (1.0 - k) * q.pm,
                k * p.mp + (1.0 - k) * q.mp,
                k * p.mm + (1.0 - k) * q.mm,
            );
            let lin = k * correlation_e(&p) + (1.0 - k) * correlation_e(&q);
            prop_assert!((correlation_e(&mix) - lin).abs() < 1e-12);
        }
    }
}
