//! Derivative-free search for the orientations that maximize a violation.
//!
//! The first orientation is fixed at 0°; every source handled here depends on
//! orientations only modulo 180°, so the free angles range over `[0, 180)`.
//! A coarse grid is followed by rounds of local refinement, each halving the
//! step and scanning ±2 steps around the incumbent in every coordinate.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::{AngleConfig, AngleDeg};
use crate::error::{invalid, Error, Result};
use crate::inequality::{combine, forms_for, ChshAngles, ProbabilitySource, Settings};
use crate::pdf::OutcomePdf;
use crate::report::{InequalityKind, InequalityReport};

/// Points a single level may contain.
const MAX_POINTS: usize = 20_000_000;
/// Objective differences below this are ties.
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Free `b, a′, b′, r`.
    #[serde(rename = "strong_23")]
    Strong23,
    /// The strong form restricted to `a′ = b′ = r`; free `b, a′`.
    #[serde(rename = "simplified_29")]
    Simplified29,
    /// Free `b, a2, b2`; maximizes `S`.
    Chsh,
    /// As `Simplified29`, read as phase differences.
    #[serde(rename = "rt_32")]
    Rt32,
}

impl Objective {
    pub fn kind(self) -> InequalityKind {
        match self {
            Objective::Strong23 => InequalityKind::Strong23,
            Objective::Simplified29 => InequalityKind::Ardehali29,
            Objective::Chsh => InequalityKind::Chsh,
            Objective::Rt32 => InequalityKind::Rt32,
        }
    }

    fn dims(self) -> usize {
        match self {
            Objective::Strong23 => 4,
            Objective::Chsh => 3,
            Objective::Simplified29 | Objective::Rt32 => 2,
        }
    }

    /// Inequality whose forms are evaluated at each point.
    fn form_kind(self) -> InequalityKind {
        match self {
            Objective::Chsh => InequalityKind::Chsh,
            _ => InequalityKind::Strong23,
        }
    }

    fn settings(self, p: &[f64]) -> Settings {
        let d = AngleDeg::deg;
        let mut s = Settings::default();
        match self {
            Objective::Strong23 => {
                s.config = AngleConfig {
                    a: AngleDeg::ZERO,
                    b: d(p[0]),
                    a_prime: d(p[1]),
                    b_prime: d(p[2]),
                    r: d(p[3]),
                }
            }
            Objective::Simplified29 | Objective::Rt32 => {
                s.config = AngleConfig {
                    a: AngleDeg::ZERO,
                    b: d(p[0]),
                    a_prime: d(p[1]),
                    b_prime: d(p[1]),
                    r: d(p[1]),
                }
            }
            Objective::Chsh => {
                s.chsh = ChshAngles {
                    a: AngleDeg::ZERO,
                    b: d(p[0]),
                    a2: d(p[1]),
                    b2: d(p[2]),
                }
            }
        }
        s
    }

    /// Value to minimize.
    fn cost(self, lhs: f64) -> f64 {
        match self {
            Objective::Chsh => -lhs,
            _ => lhs,
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strong23" | "strong_23" => Ok(Objective::Strong23),
            "ardehali29" | "simplified_29" => Ok(Objective::Simplified29),
            "chsh" => Ok(Objective::Chsh),
            "rt32" | "rt_32" => Ok(Objective::Rt32),
            other => Err(Error::Unsupported(format!("unknown objective `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchSpec {
    /// Coarse grid spacing in degrees; must divide 180.
    pub grid_step: f64,
    pub refine_iterations: u32,
    pub objective: Objective,
    pub source: ProbabilitySource,
}

/// The incumbent after one level of the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub level: u32,
    pub step: f64,
    pub evaluated: usize,
    pub params: Vec<f64>,
    pub lhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FoundConfig {
    Strong(AngleConfig),
    Chsh(ChshAngles),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub objective: Objective,
    /// Free angles in degrees, each in `[0, 180)`.
    pub params: Vec<f64>,
    pub config: FoundConfig,
    pub report: InequalityReport,
    pub trace: Vec<TraceRow>,
}

fn canonical(x: f64) -> f64 {
    let v = x.rem_euclid(180.0);
    if v >= 180.0 {
        0.0
    } else {
        v
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

struct Evaluator<'a> {
    objective: Objective,
    source: &'a ProbabilitySource,
}

impl Evaluator<'_> {
    /// Exact distributions at every ordered pair of `angles`.
    fn pdf_table(&self, angles: &[f64]) -> Result<HashMap<(u64, u64), OutcomePdf>> {
        let pairs: Vec<(f64, f64)> = angles
            .iter()
            .flat_map(|&x| angles.iter().map(move |&y| (x, y)))
            .collect();
        pairs
            .par_iter()
            .map(|&(x, y)| {
                let pdf = self.source.pdf(AngleDeg::deg(x), AngleDeg::deg(y))?.pdf;
                Ok(((x.to_bits(), y.to_bits()), pdf))
            })
            .collect()
    }

    fn lhs(&self, params: &[f64], table: &HashMap<(u64, u64), OutcomePdf>) -> Result<f64> {
        let forms = forms_for(self.objective.form_kind(), &self.objective.settings(params))?;
        let values = forms
            .iter()
            .map(|f| {
                f.eval_pdfs(|a, b| {
                    table
                        .get(&(a.value().to_bits(), b.value().to_bits()))
                        .copied()
                        .ok_or_else(|| invalid("angle", format!("no cached pair ({a}, {b})")))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(combine(self.objective.form_kind(), &values)?.0)
    }

    /// Best of `points` by cost, ties to the lexicographically smallest.
    fn scan(&self, points: Vec<Vec<f64>>) -> Result<(Vec<f64>, f64, usize)> {
        let mut angles: Vec<f64> = vec![0.0];
        for p in &points {
            for &x in p {
                if !angles.contains(&x) {
                    angles.push(x);
                }
            }
        }
        let table = self.pdf_table(&angles)?;
        let values = points
            .par_iter()
            .map(|p| self.lhs(p, &table))
            .collect::<Result<Vec<f64>>>()?;
        let n = points.len();
        let mut best: Option<(Vec<f64>, f64)> = None;
        for (p, v) in points.into_iter().zip(values) {
            let c = self.objective.cost(v);
            let better = match &best {
                None => true,
                Some((bp, bv)) => {
                    let bc = self.objective.cost(*bv);
                    c < bc - TIE || (c <= bc + TIE && lex_less(&p, bp))
                }
            };
            if better {
                best = Some((p, v));
            }
        }
        let (p, v) = best.ok_or_else(|| invalid("grid", "no points"))?;
        Ok((p, v, n))
    }
}

/// All points of `values^dims`, in lexicographic order.
fn product(values: &[f64], dims: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..dims {
        out = out
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn optimize(spec: &SearchSpec) -> Result<SearchResult> {
    let step = spec.grid_step;
    if !(step.is_finite() && step > 0.0 && step <= 180.0) {
        return Err(invalid("grid_step", format!("{step} must be in (0, 180]")));
    }
    let per_axis = 180.0 / step;
    if (per_axis - per_axis.round()).abs() > 1e-9 {
        return Err(invalid("grid_step", format!("{step} does not divide 180")));
    }
    if !spec.source.is_analytic() {
        return Err(Error::Unsupported(format!(
            "optimizing over the sampled source `{}`",
            spec.source.describe()
        )));
    }
    let obj = spec.objective;
    let dims = obj.dims();
    let per_axis = per_axis.round() as usize;
    if per_axis
        .checked_pow(dims as u32)
        .is_none_or(|n| n > MAX_POINTS)
    {
        return Err(invalid(
            "grid_step",
            format!("{step}° gives more than {MAX_POINTS} points"),
        ));
    }
    let eval = Evaluator {
        objective: obj,
        source: &spec.source,
    };

    let coarse: Vec<f64> = (0..per_axis).map(|i| i as f64 * step).collect();
    let (mut best, mut best_lhs, n) = eval.scan(product(&coarse, dims))?;
    let mut trace = vec![TraceRow {
        level: 0,
        step,
        evaluated: n,
        params: best.clone(),
        lhs: best_lhs,
    }];

    let mut h = step;
    for level in 1..=spec.refine_iterations {
        h /= 2.0;
        let offsets: Vec<f64> = (-2..=2).map(|k| k as f64 * h).collect();
        let points: Vec<Vec<f64>> = product(&offsets, dims)
            .into_iter()
            .map(|o| best.iter().zip(&o).map(|(x, d)| canonical(x + d)).collect())
            .collect();
        let (p, v, n) = eval.scan(points)?;
        // The incumbent is among the points (zero offset), so this never
        // gets worse.
        best = p;
        best_lhs = v;
        trace.push(TraceRow {
            level,
            step: h,
            evaluated: n,
            params: best.clone(),
            lhs: best_lhs,
        });
    }

    let settings = obj.settings(&best);
    let config = match obj {
        Objective::Chsh => FoundConfig::Chsh(settings.chsh),
        _ => FoundConfig::Strong(settings.config),
    };
    Ok(SearchResult {
        objective: obj,
        params: best,
        config,
        report: InequalityReport::analytic(obj.kind(), best_lhs),
        trace,
    })
}
