//! Local hidden-variable models.
//!
//! A model supplies a distribution over hidden states `λ` and, for each
//! detector separately, the probabilities of a `+` or `−` count given `λ` and
//! that detector's own polarizer orientation. The second detector's response
//! never sees the first polarizer's setting, so every model written against
//! [`HiddenVariableModel`] is local.

mod checks;
mod models;
mod simulate;

use std::fmt::Debug;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::AngleDeg;
use crate::error::{invalid, Error, Result};
use crate::form::LinearForm;
use crate::pdf::{Outcome, OutcomePdf};
use crate::stats::{chunk_rng, Moments};

pub use checks::{
    check_pointwise_inequality, check_supplementary, pointwise_lhs, Channel, PointwiseCheck,
    SupplementaryCheck, SupplementaryViolation,
};
pub use models::{
    build_model, ChannelShape, FourierModel, MalusModel, NoDetectionModel, SignModel,
};
pub use simulate::{simulate_counts, CountTally, TallyRecord};

/// Count probabilities `(p+, p−)` of one detector for one `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub plus: f64,
    pub minus: f64,
}

impl Response {
    pub fn new(plus: f64, minus: f64) -> Result<Self> {
        for (name, v) in [("p_plus", plus), ("p_minus", minus)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("{v} outside [0, 1]")));
            }
        }
        Ok(Self { plus, minus })
    }

    pub const NONE: Response = Response {
        plus: 0.0,
        minus: 0.0,
    };

    pub fn total(&self) -> f64 {
        self.plus + self.minus
    }

    pub fn pair(&self) -> (f64, f64) {
        (self.plus, self.minus)
    }
}

/// Support of a one-dimensional hidden-variable parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineDensity {
    pub lo: f64,
    pub hi: f64,
}

pub trait HiddenVariableModel: Send + Sync + Debug {
    type Lambda: Clone + Debug + Send + Sync;

    fn name(&self) -> &str;

    fn sample_lambda(&self, rng: &mut dyn RngCore) -> Self::Lambda;

    fn response1(&self, orientation: AngleDeg, lambda: &Self::Lambda) -> Response;

    fn response2(&self, orientation: AngleDeg, lambda: &Self::Lambda) -> Response;

    /// `Some` when `λ` can be parameterized by a single real coordinate, which
    /// enables quadrature.
    fn line_density(&self) -> Option<LineDensity> {
        None
    }

    /// Unnormalized density of the line coordinate.
    fn density_weight(&self, _t: f64) -> f64 {
        1.0
    }

    fn lambda_at(&self, _t: f64) -> Option<Self::Lambda> {
        None
    }

    /// Line coordinates where either detector's response at `orientation`
    /// jumps. Quadrature never straddles these.
    fn breakpoints(&self, _orientation: AngleDeg) -> Vec<f64> {
        Vec::new()
    }
}

/// How ensemble integrals over `λ` are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Quadrature { n_nodes: usize },
    MonteCarlo { n_samples: u64, seed: u64 },
}

impl Method {
    pub const DEFAULT_NODES: usize = 4096;
    pub const MIN_NODES: usize = 64;

    pub fn quadrature() -> Self {
        Method::Quadrature {
            n_nodes: Self::DEFAULT_NODES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Method::Quadrature { n_nodes } if n_nodes < Self::MIN_NODES => Err(invalid(
                "n_nodes",
                format!("{n_nodes} < {}", Self::MIN_NODES),
            )),
            Method::MonteCarlo { n_samples: 0, .. } => Err(invalid("n_samples", "must be ≥ 1")),
            _ => Ok(()),
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, Method::Quadrature { .. })
    }
}

/// Ensemble outcome distribution with per-entry standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdfEstimate {
    pub pdf: OutcomePdf,
    /// Zero for quadrature.
    pub stderr: OutcomePdf,
    pub n_samples: u64,
}

impl PdfEstimate {
    pub fn exact(pdf: OutcomePdf) -> Self {
        Self {
            pdf,
            stderr: OutcomePdf::default(),
            n_samples: 0,
        }
    }
}

/// Means of several per-`λ` quantities with the covariance of those means.
#[derive(Debug, Clone, PartialEq)]
pub struct FormEstimate {
    pub values: Vec<f64>,
    /// Row-major covariance of the estimates; all zero for exact sources.
    pub cov: Vec<f64>,
    pub n_samples: u64,
}

impl FormEstimate {
    pub fn exact(values: Vec<f64>) -> Self {
        let d = values.len();
        Self {
            values,
            cov: vec![0.0; d * d],
            n_samples: 0,
        }
    }

    /// Delta-method standard error of a function with the given gradient.
    pub fn stderr_of(&self, gradient: &[f64]) -> f64 {
        let d = self.values.len();
        let mut var = 0.0;
        for i in 0..d {
            for j in 0..d {
                var += gradient[i] * self.cov[i * d + j] * gradient[j];
            }
        }
        var.max(0.0).sqrt()
    }

    pub fn stderr(&self, i: usize) -> f64 {
        let d = self.values.len();
        self.cov[i * d + i].max(0.0).sqrt()
    }
}

const QUAD_CHUNK: usize = 1024;
const MC_CHUNK: u64 = 8192;

/// Composite midpoint nodes and normalized weights on the model's line
/// density, split at the response discontinuities of `orientations`.
pub fn quadrature_nodes<M: HiddenVariableModel + ?Sized>(
    model: &M,
    orientations: &[AngleDeg],
    n_nodes: usize,
) -> Result<Vec<(M::Lambda, f64)>> {
    Method::Quadrature { n_nodes }.validate()?;
    let LineDensity { lo, hi } = model.line_density().ok_or_else(|| {
        Error::Unsupported(format!(
            "quadrature on sampling-only model `{}`",
            model.name()
        ))
    })?;
    let len = hi - lo;
    let mut cuts = vec![lo, hi];
    for &o in orientations {
        cuts.extend(
            model
                .breakpoints(o)
                .into_iter()
                .filter(|&t| t > lo && t < hi),
        );
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-12 * len.max(1.0));

    let mut nodes = Vec::with_capacity(n_nodes + cuts.len());
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((n_nodes as f64) * (b - a) / len).round().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for i in 0..n {
            let t = a + (i as f64 + 0.5) * h;
            let lambda = model.lambda_at(t).ok_or_else(|| {
                Error::Unsupported(format!(
                    "model `{}` has no line parameterization",
                    model.name()
                ))
            })?;
            nodes.push((lambda, h * model.density_weight(t)));
        }
    }
    let total: f64 = nodes.iter().map(|(_, w)| w).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(invalid("density", "weights integrate to zero"));
    }
    for (_, w) in &mut nodes {
        *w /= total;
    }
    Ok(nodes)
}

/// Weighted sums of `f(λ)` over quadrature nodes. Deterministic in the
/// number of worker threads.
pub fn quadrature_integrate<M, F>(
    model: &M,
    orientations: &[AngleDeg],
    n_nodes: usize,
    dim: usize,
    f: F,
) -> Result<Vec<f64>>
where
    M: HiddenVariableModel + ?Sized,
    F: Fn(&M::Lambda, &mut [f64]) + Sync,
{
    let nodes = quadrature_nodes(model, orientations, n_nodes)?;
    let partials: Vec<Vec<f64>> = nodes
        .par_chunks(QUAD_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; dim];
            let mut buf = vec![0.0; dim];
            for (lambda, w) in chunk {
                f(lambda, &mut buf);
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a += w * b;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; dim];
    for p in partials {
        for (a, b) in total.iter_mut().zip(p) {
            *a += b;
        }
    }
    Ok(total)
}

/// Sample moments of `f(λ)` over `n` draws. Chunk `c` uses RNG stream `c` of
/// `seed`, so results are independent of the worker count.
pub fn monte_carlo_moments<M, F>(model: &M, n: u64, seed: u64, dim: usize, f: F) -> Result<Moments>
where
    M: HiddenVariableModel + ?Sized,
    F: Fn(&M::Lambda, &mut [f64]) + Sync,
{
    if n == 0 {
        return Err(invalid("n_samples", "must be ≥ 1"));
    }
    let n_chunks = n.div_ceil(MC_CHUNK);
    let partials: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let count = MC_CHUNK.min(n - c * MC_CHUNK);
            let mut m = Moments::new(dim);
            let mut buf = vec![0.0; dim];
            for _ in 0..count {
                let lambda = model.sample_lambda(&mut rng);
                f(&lambda, &mut buf);
                m.push(&buf);
            }
            m
        })
        .collect();
    let mut total = Moments::new(dim);
    for p in &partials {
        total.merge(p);
    }
    Ok(total)
}

/// Ensemble outcome distribution at `(a, b)`.
pub fn ensemble_pdf<M: HiddenVariableModel + ?Sized>(
    model: &M,
    a: AngleDeg,
    b: AngleDeg,
    method: Method,
) -> Result<PdfEstimate> {
    method.validate()?;
    let eval = |lambda: &M::Lambda, out: &mut [f64]| {
        let r1 = model.response1(a, lambda).pair();
        let r2 = model.response2(b, lambda).pair();
        for (slot, o) in out.iter_mut().zip(Outcome::ALL) {
            *slot = o.from_responses(r1, r2);
        }
    };
    let from_vec = |v: &[f64]| OutcomePdf {
        pp: v[0],
        pm: v[1],
        mp: v[2],
        mm: v[3],
        s1_plus: v[4],
        s1_minus: v[5],
        s2_plus: v[6],
        s2_minus: v[7],
    };
    match method {
        Method::Quadrature { n_nodes } => {
            let v = quadrature_integrate(model, &[a, b], n_nodes, 8, eval)?;
            Ok(PdfEstimate::exact(from_vec(&v)))
        }
        Method::MonteCarlo { n_samples, seed } => {
            let m = monte_carlo_moments(model, n_samples, seed, 8, eval)?;
            let se: Vec<f64> = (0..8)
                .map(|i| (m.sample_cov(i, i) / m.n as f64).max(0.0).sqrt())
                .collect();
            Ok(PdfEstimate {
                pdf: from_vec(&m.mean),
                stderr: from_vec(&se),
                n_samples: m.n,
            })
        }
    }
}

/// Ensemble means of linear forms, with covariances for Monte Carlo.
pub fn ensemble_forms<M: HiddenVariableModel + ?Sized>(
    model: &M,
    forms: &[LinearForm],
    method: Method,
) -> Result<FormEstimate> {
    method.validate()?;
    let dim = forms.len();
    // Each orientation's response is computed once per λ, however many
    // terms refer to it.
    let mut firsts: Vec<AngleDeg> = Vec::new();
    let mut seconds: Vec<AngleDeg> = Vec::new();
    let slot = |list: &mut Vec<AngleDeg>, o: AngleDeg| match list.iter().position(|&x| x == o) {
        Some(i) => i,
        None => {
            list.push(o);
            list.len() - 1
        }
    };
    let compiled: Vec<Vec<(f64, usize, usize, Outcome)>> = forms
        .iter()
        .map(|f| {
            f.terms()
                .iter()
                .map(|t| {
                    (
                        t.coef,
                        slot(&mut firsts, t.first),
                        slot(&mut seconds, t.second),
                        t.outcome,
                    )
                })
                .collect()
        })
        .collect();
    let eval = |lambda: &M::Lambda, out: &mut [f64]| {
        let r1: Vec<(f64, f64)> = firsts
            .iter()
            .map(|&o| model.response1(o, lambda).pair())
            .collect();
        let r2: Vec<(f64, f64)> = seconds
            .iter()
            .map(|&o| model.response2(o, lambda).pair())
            .collect();
        for (value, terms) in out.iter_mut().zip(&compiled) {
            *value = terms
                .iter()
                .map(|&(c, i, j, o)| c * o.from_responses(r1[i], r2[j]))
                .sum();
        }
    };
    match method {
        Method::Quadrature { n_nodes } => {
            let mut orientations = firsts.clone();
            orientations.extend(seconds.iter().filter(|o| !firsts.contains(o)));
            let v = quadrature_integrate(model, &orientations, n_nodes, dim, eval)?;
            Ok(FormEstimate::exact(v))
        }
        Method::MonteCarlo { n_samples, seed } => {
            let m = monte_carlo_moments(model, n_samples, seed, dim, eval)?;
            Ok(FormEstimate {
                cov: m.cov_of_mean(),
                values: m.mean,
                n_samples: m.n,
            })
        }
    }
}

/// Object-safe view of a model used by probability sources, where the
/// hidden-variable type is erased.
pub trait LhvEnsemble: Send + Sync + Debug {
    fn name(&self) -> &str;
    fn pdf(&self, a: AngleDeg, b: AngleDeg, method: Method) -> Result<PdfEstimate>;
    fn forms(&self, forms: &[LinearForm], method: Method) -> Result<FormEstimate>;
    fn simulate(
        &self,
        pairs: &[(AngleDeg, AngleDeg)],
        n_emissions: u64,
        seed: u64,
    ) -> Result<Vec<CountTally>>;
}

impl<M: HiddenVariableModel> LhvEnsemble for M {
    fn name(&self) -> &str {
        HiddenVariableModel::name(self)
    }

    fn pdf(&self, a: AngleDeg, b: AngleDeg, method: Method) -> Result<PdfEstimate> {
        ensemble_pdf(self, a, b, method)
    }

    fn forms(&self, forms: &[LinearForm], method: Method) -> Result<FormEstimate> {
        ensemble_forms(self, forms, method)
    }

    fn simulate(
        &self,
        pairs: &[(AngleDeg, AngleDeg)],
        n_emissions: u64,
        seed: u64,
    ) -> Result<Vec<CountTally>> {
        simulate_counts(self, pairs, n_emissions, seed)
    }
}
