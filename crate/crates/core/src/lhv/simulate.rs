//! Finite-N coincidence counting.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HiddenVariableModel;
use crate::angle::AngleDeg;
use crate::error::{invalid, Result};
use crate::pdf::{Outcome, OutcomePdf};
use crate::stats::chunk_rng;

const EMISSION_CHUNK: u64 = 1 << 16;

/// Detector state index: `+`, `−`, no count.
const PLUS: usize = 0;
const MINUS: usize = 1;
const SILENT: usize = 2;

/// Counts for one orientation pair over `n_emitted` emissions.
///
/// Stored as the full 3×3 table of (first detector, second detector) states
/// so every joint and single count, and their multinomial covariances, can
/// be derived.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTally {
    pub first: AngleDeg,
    pub second: AngleDeg,
    pub n_emitted: u64,
    cells: [[u64; 3]; 3],
}

/// Flat, serializable form of a [`CountTally`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TallyRecord {
    pub first_deg: f64,
    pub second_deg: f64,
    pub n_emitted: u64,
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
    pub n1_plus: u64,
    pub n1_minus: u64,
    pub n2_plus: u64,
    pub n2_minus: u64,
}

impl CountTally {
    fn empty(first: AngleDeg, second: AngleDeg) -> Self {
        Self {
            first,
            second,
            n_emitted: 0,
            cells: [[0; 3]; 3],
        }
    }

    pub fn cell(&self, first_state: usize, second_state: usize) -> u64 {
        self.cells[first_state][second_state]
    }

    pub fn count(&self, outcome: Outcome) -> u64 {
        let c = &self.cells;
        match outcome {
            Outcome::PlusPlus => c[PLUS][PLUS],
            Outcome::PlusMinus => c[PLUS][MINUS],
            Outcome::MinusPlus => c[MINUS][PLUS],
            Outcome::MinusMinus => c[MINUS][MINUS],
            Outcome::FirstPlus => c[PLUS].iter().sum(),
            Outcome::FirstMinus => c[MINUS].iter().sum(),
            Outcome::SecondPlus => c.iter().map(|row| row[PLUS]).sum(),
            Outcome::SecondMinus => c.iter().map(|row| row[MINUS]).sum(),
        }
    }

    /// Whether the 3×3 cell `(i, j)` contributes to `outcome`.
    pub fn cell_in(outcome: Outcome, i: usize, j: usize) -> bool {
        match outcome {
            Outcome::PlusPlus => i == PLUS && j == PLUS,
            Outcome::PlusMinus => i == PLUS && j == MINUS,
            Outcome::MinusPlus => i == MINUS && j == PLUS,
            Outcome::MinusMinus => i == MINUS && j == MINUS,
            Outcome::FirstPlus => i == PLUS,
            Outcome::FirstMinus => i == MINUS,
            Outcome::SecondPlus => j == PLUS,
            Outcome::SecondMinus => j == MINUS,
        }
    }

    /// Relative frequencies `count / N`.
    pub fn frequencies(&self) -> OutcomePdf {
        let n = self.n_emitted.max(1) as f64;
        let f = |o| self.count(o) as f64 / n;
        OutcomePdf {
            pp: f(Outcome::PlusPlus),
            pm: f(Outcome::PlusMinus),
            mp: f(Outcome::MinusPlus),
            mm: f(Outcome::MinusMinus),
            s1_plus: f(Outcome::FirstPlus),
            s1_minus: f(Outcome::FirstMinus),
            s2_plus: f(Outcome::SecondPlus),
            s2_minus: f(Outcome::SecondMinus),
        }
    }

    pub fn to_record(&self) -> TallyRecord {
        TallyRecord {
            first_deg: self.first.value(),
            second_deg: self.second.value(),
            n_emitted: self.n_emitted,
            n_pp: self.count(Outcome::PlusPlus),
            n_pm: self.count(Outcome::PlusMinus),
            n_mp: self.count(Outcome::MinusPlus),
            n_mm: self.count(Outcome::MinusMinus),
            n1_plus: self.count(Outcome::FirstPlus),
            n1_minus: self.count(Outcome::FirstMinus),
            n2_plus: self.count(Outcome::SecondPlus),
            n2_minus: self.count(Outcome::SecondMinus),
        }
    }

    pub fn from_record(r: &TallyRecord) -> Result<Self> {
        let sub = |a: u64, b: u64, what: &str| {
            a.checked_sub(b)
                .ok_or_else(|| invalid("tally", format!("inconsistent counts ({what})")))
        };
        let p0 = sub(r.n1_plus, r.n_pp + r.n_pm, "n1_plus")?;
        let m0 = sub(r.n1_minus, r.n_mp + r.n_mm, "n1_minus")?;
        let zp = sub(r.n2_plus, r.n_pp + r.n_mp, "n2_plus")?;
        let zm = sub(r.n2_minus, r.n_pm + r.n_mm, "n2_minus")?;
        let seen = r.n_pp + r.n_pm + r.n_mp + r.n_mm + p0 + m0 + zp + zm;
        let zz = sub(r.n_emitted, seen, "n_emitted")?;
        Ok(Self {
            first: AngleDeg::new(r.first_deg)?,
            second: AngleDeg::new(r.second_deg)?,
            n_emitted: r.n_emitted,
            cells: [[r.n_pp, r.n_pm, p0], [r.n_mp, r.n_mm, m0], [zp, zm, zz]],
        })
    }

    /// Same counts attributed to another orientation pair.
    pub fn relabeled(&self, first: AngleDeg, second: AngleDeg) -> Self {
        Self {
            first,
            second,
            ..self.clone()
        }
    }

    /// Adds another run's counts to this one.
    pub fn absorb(&mut self, other: &CountTally) {
        self.n_emitted += other.n_emitted;
        for i in 0..3 {
            for j in 0..3 {
                self.cells[i][j] += other.cells[i][j];
            }
        }
    }
}

fn draw(rng: &mut impl Rng, plus: f64, minus: f64) -> usize {
    let u: f64 = rng.random();
    if u < plus {
        PLUS
    } else if u < plus + minus {
        MINUS
    } else {
        SILENT
    }
}

/// Simulates `n_emissions` emissions at each orientation pair. For every
/// emission a fresh `λ` is drawn and each detector independently fires `+`,
/// `−` or nothing according to its own response.
///
/// Pair `p`, chunk `c` draws from RNG stream `(p << 32) | c` of `seed`;
/// tallies are integer sums, so results are bit-identical for any number of
/// worker threads.
pub fn simulate_counts<M: HiddenVariableModel + ?Sized>(
    model: &M,
    pairs: &[(AngleDeg, AngleDeg)],
    n_emissions: u64,
    seed: u64,
) -> Result<Vec<CountTally>> {
    if n_emissions == 0 {
        return Err(invalid("n_emissions", "must be ≥ 1"));
    }
    let n_chunks = n_emissions.div_ceil(EMISSION_CHUNK);
    pairs
        .iter()
        .enumerate()
        .map(|(p, &(a, b))| {
            let parts: Vec<Result<CountTally>> = (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = chunk_rng(seed, ((p as u64) << 32) | c);
                    let count = EMISSION_CHUNK.min(n_emissions - c * EMISSION_CHUNK);
                    let mut t = CountTally::empty(a, b);
                    t.n_emitted = count;
                    for _ in 0..count {
                        let lambda = model.sample_lambda(&mut rng);
                        let r1 = model.response1(a, &lambda);
                        let r2 = model.response2(b, &lambda);
                        for r in [r1, r2] {
                            if r.total() > 1.0 + 1e-12 {
                                return Err(invalid(
                                    "response",
                                    format!(
                                        "p+ + p− = {} > 1 cannot be sampled (λ = {lambda:?})",
                                        r.total()
                                    ),
                                ));
                            }
                        }
                        let i = draw(&mut rng, r1.plus, r1.minus);
                        let j = draw(&mut rng, r2.plus, r2.minus);
                        t.cells[i][j] += 1;
                    }
                    Ok(t)
                })
                .collect();
            let mut total = CountTally::empty(a, b);
            for part in parts {
                total.absorb(&part?);
            }
            Ok(total)
        })
        .collect()
}
