//! Linear combinations of detection probabilities.
//!
//! Every inequality is expressed as one or more linear forms over entries of
//! the outcome distributions at specific orientation pairs. Sources evaluate
//! forms either exactly or per hidden-variable sample, which is what lets
//! Monte Carlo sources report standard errors for ratio inequalities.

use crate::angle::AngleDeg;
use crate::pdf::{Outcome, OutcomePdf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    /// Orientation of the first polarizer.
    pub first: AngleDeg,
    /// Orientation of the second polarizer.
    pub second: AngleDeg,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearForm {
    terms: Vec<Term>,
}

impl LinearForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn add(mut self, coef: f64, first: AngleDeg, second: AngleDeg, outcome: Outcome) -> Self {
        self.terms.push(Term {
            coef,
            first,
            second,
            outcome,
        });
        self
    }

    /// `coef · (p++ − p+− − p−+ + p−−)` at `(first, second)`.
    pub fn correlation(self, coef: f64, first: AngleDeg, second: AngleDeg) -> Self {
        self.add(coef, first, second, Outcome::PlusPlus)
            .add(-coef, first, second, Outcome::PlusMinus)
            .add(-coef, first, second, Outcome::MinusPlus)
            .add(coef, first, second, Outcome::MinusMinus)
    }

    /// `coef · (p++ + p+− + p−+ + p−−)` at `(first, second)`.
    pub fn coincidences(mut self, coef: f64, first: AngleDeg, second: AngleDeg) -> Self {
        for o in Outcome::JOINT {
            self = self.add(coef, first, second, o);
        }
        self
    }

    /// Distinct orientation pairs in first-appearance order.
    pub fn pairs(&self) -> Vec<(AngleDeg, AngleDeg)> {
        let mut out: Vec<(AngleDeg, AngleDeg)> = Vec::new();
        for t in &self.terms {
            if !out.iter().any(|&(f, s)| f == t.first && s == t.second) {
                out.push((t.first, t.second));
            }
        }
        out
    }

    pub fn orientations(&self) -> Vec<AngleDeg> {
        let mut out: Vec<AngleDeg> = Vec::new();
        for t in &self.terms {
            for o in [t.first, t.second] {
                if !out.contains(&o) {
                    out.push(o);
                }
            }
        }
        out
    }

    /// Evaluates the form given the per-detector responses `(p+, p−)`.
    pub fn eval_responses(
        &self,
        mut first: impl FnMut(AngleDeg) -> (f64, f64),
        mut second: impl FnMut(AngleDeg) -> (f64, f64),
    ) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * t.outcome.from_responses(first(t.first), second(t.second)))
            .sum()
    }

    /// Evaluates the form from exact outcome distributions.
    pub fn eval_pdfs<E>(
        &self,
        mut pdf: impl FnMut(AngleDeg, AngleDeg) -> Result<OutcomePdf, E>,
    ) -> Result<f64, E> {
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.coef * pdf(t.first, t.second)?.get(t.outcome);
        }
        Ok(acc)
    }
}

/// Collects the distinct orientation pairs of several forms.
pub fn pairs_of(forms: &[LinearForm]) -> Vec<(AngleDeg, AngleDeg)> {
    let mut out: Vec<(AngleDeg, AngleDeg)> = Vec::new();
    for f in forms {
        for p in f.pairs() {
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}
