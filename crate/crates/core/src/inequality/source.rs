//! Providers of detection probabilities: closed-form quantum predictions,
//! hidden-variable ensembles, literal tables and simulated counts.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::{fold_angle_diff, AngleDeg};
use crate::error::{invalid, Error, Result};
use crate::form::{pairs_of, LinearForm};
use crate::lhv::{CountTally, FormEstimate, LhvEnsemble, Method, PdfEstimate};
use crate::pdf::{Outcome, OutcomePdf};
use crate::quantum::QuantumModel;
use crate::stats::chunk_rng;

const KEY_TOL: f64 = 1e-9;
/// Agreement required of exact sources when checking symmetries.
pub const ANALYTIC_TOL: f64 = 1e-9;
/// Standard errors allowed for sampled sources when checking symmetries.
pub const SAMPLED_SIGMAS: f64 = 4.0;

/// One row of a literal probability table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// Folded orientation difference in degrees.
    pub diff_deg: f64,
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
    #[serde(default)]
    pub s1_plus: Option<f64>,
    #[serde(default)]
    pub s1_minus: Option<f64>,
    #[serde(default)]
    pub s2_plus: Option<f64>,
    #[serde(default)]
    pub s2_minus: Option<f64>,
}

/// Outcome distributions keyed by folded orientation difference.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfTable {
    entries: Vec<(f64, OutcomePdf)>,
    has_singles: bool,
}

impl PdfTable {
    pub fn new(rows: &[TableRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("table", "no rows"));
        }
        let singles = |r: &TableRow| {
            [r.s1_plus, r.s1_minus, r.s2_plus, r.s2_minus]
                .iter()
                .filter(|v| v.is_some())
                .count()
        };
        let has_singles = singles(&rows[0]) == 4;
        let expected = if has_singles { 4 } else { 0 };
        if rows.iter().any(|r| singles(r) != expected) {
            return Err(invalid(
                "table",
                "single-detector columns must be all present or all absent",
            ));
        }
        let mut entries: Vec<(f64, OutcomePdf)> = Vec::with_capacity(rows.len());
        for r in rows {
            if !(r.diff_deg.is_finite() && (0.0..=180.0).contains(&r.diff_deg)) {
                return Err(invalid(
                    "diff_deg",
                    format!("{} not in [0, 180]", r.diff_deg),
                ));
            }
            if entries
                .iter()
                .any(|(k, _)| (k - r.diff_deg).abs() < KEY_TOL)
            {
                return Err(invalid(
                    "diff_deg",
                    format!("duplicate entry {}", r.diff_deg),
                ));
            }
            let mut pdf = OutcomePdf::joint(r.pp, r.pm, r.mp, r.mm);
            if has_singles {
                pdf.s1_plus = r.s1_plus.unwrap_or_default();
                pdf.s1_minus = r.s1_minus.unwrap_or_default();
                pdf.s2_plus = r.s2_plus.unwrap_or_default();
                pdf.s2_minus = r.s2_minus.unwrap_or_default();
            }
            pdf.validate()?;
            entries.push((r.diff_deg, pdf));
        }
        Ok(Self {
            entries,
            has_singles,
        })
    }

    /// Table with single-detector probabilities taken from each entry.
    pub fn from_pdfs(entries: &[(f64, OutcomePdf)]) -> Result<Self> {
        let rows: Vec<TableRow> = entries
            .iter()
            .map(|&(d, p)| TableRow {
                diff_deg: d,
                pp: p.pp,
                pm: p.pm,
                mp: p.mp,
                mm: p.mm,
                s1_plus: Some(p.s1_plus),
                s1_minus: Some(p.s1_minus),
                s2_plus: Some(p.s2_plus),
                s2_minus: Some(p.s2_minus),
            })
            .collect();
        Self::new(&rows)
    }

    pub fn has_singles(&self) -> bool {
        self.has_singles
    }

    /// Entry for a folded difference `d`; falls back to `180 − d`, which
    /// describes the same pair of axes.
    pub fn lookup(&self, d: f64) -> Result<OutcomePdf> {
        let find = |key: f64| {
            self.entries
                .iter()
                .find(|(k, _)| (k - key).abs() < KEY_TOL)
                .map(|&(_, p)| p)
        };
        find(d)
            .or_else(|| find(180.0 - d))
            .ok_or(Error::MissingTableEntry(d))
    }

    pub fn pdf(&self, a: AngleDeg, b: AngleDeg) -> Result<OutcomePdf> {
        self.lookup(fold_angle_diff(a, b))
    }
}

#[derive(Debug, Clone)]
pub enum ProbabilitySource {
    Quantum(QuantumModel),
    Lhv {
        model: Arc<dyn LhvEnsemble>,
        method: Method,
    },
    Table(PdfTable),
    Tallies(Vec<CountTally>),
    /// Every probability of `inner` multiplied by `factor`.
    Scaled {
        inner: Box<ProbabilitySource>,
        factor: f64,
    },
}

impl ProbabilitySource {
    pub fn lhv(model: Arc<dyn LhvEnsemble>, method: Method) -> Result<Self> {
        method.validate()?;
        Ok(ProbabilitySource::Lhv { model, method })
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(invalid(
                "factor",
                format!("{factor} must be finite and > 0"),
            ));
        }
        Ok(ProbabilitySource::Scaled {
            inner: Box::new(self),
            factor,
        })
    }

    /// Whether values carry no sampling error.
    pub fn is_analytic(&self) -> bool {
        match self {
            ProbabilitySource::Quantum(_) | ProbabilitySource::Table(_) => true,
            ProbabilitySource::Lhv { method, .. } => method.is_analytic(),
            ProbabilitySource::Tallies(_) => false,
            ProbabilitySource::Scaled { inner, .. } => inner.is_analytic(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ProbabilitySource::Quantum(_) => "quantum".into(),
            ProbabilitySource::Lhv { model, method } => match method {
                Method::Quadrature { .. } => format!("lhv:{} (quadrature)", model.name()),
                Method::MonteCarlo { .. } => format!("lhv:{} (monte carlo)", model.name()),
            },
            ProbabilitySource::Table(_) => "table".into(),
            ProbabilitySource::Tallies(_) => "counts".into(),
            ProbabilitySource::Scaled { inner, factor } => {
                format!("{} ×{factor}", inner.describe())
            }
        }
    }

    pub fn pdf(&self, a: AngleDeg, b: AngleDeg) -> Result<PdfEstimate> {
        match self {
            ProbabilitySource::Quantum(q) => Ok(PdfEstimate::exact(q.joint_pdf(a, b))),
            ProbabilitySource::Lhv { model, method } => model.pdf(a, b, *method),
            ProbabilitySource::Table(t) => Ok(PdfEstimate::exact(t.pdf(a, b)?)),
            ProbabilitySource::Tallies(tallies) => {
                let t = pooled_pair(tallies, a, b)?;
                let f = t.frequencies();
                let n = t.n_emitted as f64;
                let se = |p: f64| (p * (1.0 - p) / n).max(0.0).sqrt();
                Ok(PdfEstimate {
                    pdf: f,
                    stderr: OutcomePdf {
                        pp: se(f.pp),
                        pm: se(f.pm),
                        mp: se(f.mp),
                        mm: se(f.mm),
                        s1_plus: se(f.s1_plus),
                        s1_minus: se(f.s1_minus),
                        s2_plus: se(f.s2_plus),
                        s2_minus: se(f.s2_minus),
                    },
                    n_samples: t.n_emitted,
                })
            }
            ProbabilitySource::Scaled { inner, factor } => {
                let e = inner.pdf(a, b)?;
                Ok(PdfEstimate {
                    pdf: e.pdf.scaled(*factor),
                    stderr: e.stderr.scaled(*factor),
                    n_samples: e.n_samples,
                })
            }
        }
    }

    /// Values of linear forms with the covariance of their estimates.
    pub fn estimate(&self, forms: &[LinearForm]) -> Result<FormEstimate> {
        match self {
            ProbabilitySource::Quantum(q) => {
                let values = forms
                    .iter()
                    .map(|f| f.eval_pdfs(|a, b| Ok::<_, Error>(q.joint_pdf(a, b))))
                    .collect::<Result<_>>()?;
                Ok(FormEstimate::exact(values))
            }
            ProbabilitySource::Lhv { model, method } => model.forms(forms, *method),
            ProbabilitySource::Table(t) => {
                let needs_singles = forms
                    .iter()
                    .flat_map(|f| f.terms())
                    .any(|t| !Outcome::JOINT.contains(&t.outcome));
                if needs_singles && !t.has_singles() {
                    return Err(Error::Unsupported(
                        "table has no single-detector probabilities".into(),
                    ));
                }
                let values = forms
                    .iter()
                    .map(|f| f.eval_pdfs(|a, b| t.pdf(a, b)))
                    .collect::<Result<_>>()?;
                Ok(FormEstimate::exact(values))
            }
            ProbabilitySource::Tallies(tallies) => tally_estimate(tallies, forms),
            ProbabilitySource::Scaled { inner, factor } => {
                let mut e = inner.estimate(forms)?;
                e.values.iter_mut().for_each(|v| *v *= factor);
                e.cov.iter_mut().for_each(|v| *v *= factor * factor);
                Ok(e)
            }
        }
    }

    /// Bound on the discretization error of each form, from comparing the
    /// quadrature against one with half as many nodes. Zero for sources
    /// without quadrature.
    pub fn quadrature_slack(&self, forms: &[LinearForm]) -> Result<Vec<f64>> {
        match self {
            ProbabilitySource::Lhv {
                model,
                method: Method::Quadrature { n_nodes },
            } => {
                let coarse = if n_nodes / 2 >= Method::MIN_NODES {
                    n_nodes / 2
                } else {
                    n_nodes * 2
                };
                let fine = model.forms(forms, Method::Quadrature { n_nodes: *n_nodes })?;
                let other = model.forms(forms, Method::Quadrature { n_nodes: coarse })?;
                Ok(fine
                    .values
                    .iter()
                    .zip(&other.values)
                    .map(|(a, b)| (a - b).abs())
                    .collect())
            }
            ProbabilitySource::Scaled { inner, factor } => Ok(inner
                .quadrature_slack(forms)?
                .into_iter()
                .map(|s| s * factor)
                .collect()),
            _ => Ok(vec![0.0; forms.len()]),
        }
    }

    /// For count data, pools all tallies with the same folded difference `d`
    /// under the pair `(0°, d)`. Other sources are returned unchanged.
    ///
    /// Only meaningful for rotation-invariant sources.
    pub fn by_difference(&self) -> Self {
        match self {
            ProbabilitySource::Tallies(tallies) => {
                let mut pooled: Vec<CountTally> = Vec::new();
                for t in tallies {
                    let d = AngleDeg::deg(fold_angle_diff(t.first, t.second));
                    let t = t.relabeled(AngleDeg::ZERO, d);
                    match pooled.iter_mut().find(|p| p.second == d) {
                        Some(p) => p.absorb(&t),
                        None => pooled.push(t),
                    }
                }
                ProbabilitySource::Tallies(pooled)
            }
            ProbabilitySource::Scaled { inner, factor } => ProbabilitySource::Scaled {
                inner: Box::new(inner.by_difference()),
                factor: *factor,
            },
            other => other.clone(),
        }
    }

    /// Largest difference a check may tolerate between two estimated
    /// quantities, given the gradient picking out their difference.
    pub(crate) fn difference_tolerance(
        &self,
        est: &FormEstimate,
        gradient: &[f64],
        slack: f64,
    ) -> f64 {
        if self.is_analytic() {
            ANALYTIC_TOL + SAMPLED_SIGMAS * slack
        } else {
            SAMPLED_SIGMAS * est.stderr_of(gradient) + 1e-12
        }
    }
}

fn pooled_pair(tallies: &[CountTally], a: AngleDeg, b: AngleDeg) -> Result<CountTally> {
    let mut hits = tallies.iter().filter(|t| t.first == a && t.second == b);
    let mut pooled = hits.next().cloned().ok_or(Error::MissingCounts {
        first: a.value(),
        second: b.value(),
    })?;
    for t in hits {
        pooled.absorb(t);
    }
    if pooled.n_emitted == 0 {
        return Err(Error::DegenerateSource(format!(
            "no emissions at ({a}, {b})"
        )));
    }
    Ok(pooled)
}

/// Multinomial estimate: each pair's 3×3 cell frequencies are independent
/// of every other pair's.
fn tally_estimate(tallies: &[CountTally], forms: &[LinearForm]) -> Result<FormEstimate> {
    let d = forms.len();
    let mut values = vec![0.0; d];
    let mut cov = vec![0.0; d * d];
    let mut n_min = u64::MAX;
    for (a, b) in pairs_of(forms) {
        let t = pooled_pair(tallies, a, b)?;
        let mut w = vec![[[0.0; 3]; 3]; d];
        for (k, form) in forms.iter().enumerate() {
            for term in form
                .terms()
                .iter()
                .filter(|t| t.first == a && t.second == b)
            {
                for (i, row) in w[k].iter_mut().enumerate() {
                    for (j, cell) in row.iter_mut().enumerate() {
                        if CountTally::cell_in(term.outcome, i, j) {
                            *cell += term.coef;
                        }
                    }
                }
            }
        }
        let n = t.n_emitted as f64;
        n_min = n_min.min(t.n_emitted);
        let p = |i: usize, j: usize| t.cell(i, j) as f64 / n;
        let mean: Vec<f64> = w
            .iter()
            .map(|wk| (0..9).map(|c| wk[c / 3][c % 3] * p(c / 3, c % 3)).sum())
            .collect();
        for k in 0..d {
            values[k] += mean[k];
            for l in 0..d {
                let second: f64 = (0..9)
                    .map(|c| w[k][c / 3][c % 3] * w[l][c / 3][c % 3] * p(c / 3, c % 3))
                    .sum();
                cov[k * d + l] += (second - mean[k] * mean[l]) / n;
            }
        }
    }
    Ok(FormEstimate {
        values,
        cov,
        n_samples: if n_min == u64::MAX { 0 } else { n_min },
    })
}

/// How far `p±±(a, b)` strays from `p±±` at the same folded difference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryCheckReport {
    pub max_deviation: f64,
    /// Deviation and allowance at the entry closest to (or furthest past)
    /// its allowance.
    pub worst_deviation: f64,
    pub worst_tolerance: f64,
    pub n_pairs: usize,
    pub passed: bool,
}

fn joint_forms(a: AngleDeg, b: AngleDeg) -> Vec<LinearForm> {
    Outcome::JOINT
        .iter()
        .map(|&o| LinearForm::new().add(1.0, a, b, o))
        .collect()
}

struct Worst {
    max_deviation: f64,
    ratio: f64,
    deviation: f64,
    tolerance: f64,
    compared: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            max_deviation: 0.0,
            ratio: -1.0,
            deviation: 0.0,
            tolerance: ANALYTIC_TOL,
            compared: 0,
        }
    }

    fn compare(
        &mut self,
        src: &ProbabilitySource,
        p: (AngleDeg, AngleDeg),
        q: (AngleDeg, AngleDeg),
    ) -> Result<()> {
        let mut forms = joint_forms(p.0, p.1);
        forms.extend(joint_forms(q.0, q.1));
        let est = src.estimate(&forms)?;
        let slack = src.quadrature_slack(&forms)?;
        for k in 0..4 {
            let dev = (est.values[k] - est.values[k + 4]).abs();
            let mut grad = vec![0.0; 8];
            grad[k] = 1.0;
            grad[k + 4] = -1.0;
            let tol = src.difference_tolerance(&est, &grad, slack[k] + slack[k + 4]);
            self.max_deviation = self.max_deviation.max(dev);
            let ratio = dev / tol;
            if ratio > self.ratio {
                self.ratio = ratio;
                self.deviation = dev;
                self.tolerance = tol;
            }
        }
        self.compared += 1;
        Ok(())
    }

    fn report(self) -> SymmetryCheckReport {
        SymmetryCheckReport {
            max_deviation: self.max_deviation,
            worst_deviation: self.deviation,
            worst_tolerance: self.tolerance,
            n_pairs: self.compared,
            passed: self.ratio <= 1.0,
        }
    }
}

/// Compares the outcome distribution at `n_pairs` random orientation pairs
/// with the one at `(0°, d)` for the same folded difference `d`. Count data
/// are compared within groups of recorded pairs sharing a folded difference.
pub fn check_symmetry(
    src: &ProbabilitySource,
    n_pairs: usize,
    seed: u64,
) -> Result<SymmetryCheckReport> {
    let mut worst = Worst::new();
    match src {
        ProbabilitySource::Table(_) => {}
        ProbabilitySource::Tallies(tallies) => {
            let mut groups: Vec<(f64, Vec<(AngleDeg, AngleDeg)>)> = Vec::new();
            for t in tallies {
                let d = fold_angle_diff(t.first, t.second);
                let pair = (t.first, t.second);
                match groups.iter_mut().find(|(k, _)| (k - d).abs() < KEY_TOL) {
                    Some((_, members)) if !members.contains(&pair) => members.push(pair),
                    Some(_) => {}
                    None => groups.push((d, vec![pair])),
                }
            }
            for (_, members) in &groups {
                for &other in &members[1..] {
                    worst.compare(src, members[0], other)?;
                }
            }
        }
        _ => {
            if n_pairs == 0 {
                return Err(invalid("n_pairs", "must be ≥ 1"));
            }
            let mut rng = chunk_rng(seed, 0);
            for _ in 0..n_pairs {
                let a = AngleDeg::deg(rng.random_range(0.0..360.0));
                let b = AngleDeg::deg(rng.random_range(0.0..360.0));
                let d = AngleDeg::deg(fold_angle_diff(a, b));
                worst.compare(src, (a, b), (AngleDeg::ZERO, d))?;
            }
        }
    }
    Ok(worst.report())
}

/// Whether each detector's count rate with the other polarizer removed is
/// the same at every listed orientation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovalCheck {
    pub max_spread: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Rate of the first detector at `o` with the second polarizer removed, read
/// off the pair `(o, o)` as `p++ + p+−`; likewise for the second detector.
pub(crate) fn removal_forms(orientations: &[AngleDeg]) -> Vec<LinearForm> {
    let first = orientations.iter().map(|&o| {
        LinearForm::new()
            .add(1.0, o, o, Outcome::PlusPlus)
            .add(1.0, o, o, Outcome::PlusMinus)
    });
    let second = orientations.iter().map(|&o| {
        LinearForm::new()
            .add(1.0, o, o, Outcome::PlusPlus)
            .add(1.0, o, o, Outcome::MinusPlus)
    });
    first.chain(second).collect()
}

pub fn check_removal_invariance(
    src: &ProbabilitySource,
    orientations: &[AngleDeg],
) -> Result<RemovalCheck> {
    if orientations.len() < 2 {
        return Err(invalid("orientations", "need at least two"));
    }
    let forms = removal_forms(orientations);
    let est = src.estimate(&forms)?;
    let slack = src.quadrature_slack(&forms)?;
    let n = orientations.len();
    let mut out = RemovalCheck {
        max_spread: 0.0,
        tolerance: ANALYTIC_TOL,
        passed: true,
    };
    let mut worst = 0.0;
    for group in [0, n] {
        for i in group..group + n {
            for j in i + 1..group + n {
                let dev = (est.values[i] - est.values[j]).abs();
                let mut grad = vec![0.0; forms.len()];
                grad[i] = 1.0;
                grad[j] = -1.0;
                let tol = src.difference_tolerance(&est, &grad, slack[i] + slack[j]);
                out.max_spread = out.max_spread.max(dev);
                if dev / tol > worst {
                    worst = dev / tol;
                    out.tolerance = tol;
                }
            }
        }
    }
    out.passed = worst <= 1.0;
    Ok(out)
}
