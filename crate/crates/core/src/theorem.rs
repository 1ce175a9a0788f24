//! Numeric verification of the nonnegativity of the bilinear form `Z`
//! over the box `0 ≤ x ≤ U`, `0 ≤ y ≤ V`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stats::chunk_rng;

const TOL: f64 = 1e-12;

/// A point of the box. `x = (x1+, x1−, x2+, x2−)`, `y = (y1+, y1−, y2+, y2−)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxPoint {
    x: [f64; 4],
    y: [f64; 4],
    u: f64,
    v: f64,
}

impl BoxPoint {
    pub fn new(x: [f64; 4], y: [f64; 4], u: f64, v: f64) -> Result<Self> {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(invalid("U", format!("must be finite and ≥ 0, got {u}")));
        }
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid("V", format!("must be finite and ≥ 0, got {v}")));
        }
        if x.iter().any(|&t| !(0.0..=u).contains(&t)) {
            return Err(invalid(
                "x",
                format!("components must lie in [0, {u}], got {x:?}"),
            ));
        }
        if y.iter().any(|&t| !(0.0..=v).contains(&t)) {
            return Err(invalid(
                "y",
                format!("components must lie in [0, {v}], got {y:?}"),
            ));
        }
        Ok(Self { x, y, u, v })
    }

    /// Vertex number `index` of the box: bit `i` selects the upper end of the
    /// `i`-th variable in the order `x1+, x1−, x2+, x2−, y1+, y1−, y2+, y2−`.
    pub fn vertex(index: u8, u: f64, v: f64) -> Result<Self> {
        let bit = |i: u8| index >> i & 1 == 1;
        let x = std::array::from_fn(|i| if bit(i as u8) { u } else { 0.0 });
        let y = std::array::from_fn(|i| if bit(i as u8 + 4) { v } else { 0.0 });
        Self::new(x, y, u, v)
    }

    pub fn x(&self) -> [f64; 4] {
        self.x
    }

    pub fn y(&self) -> [f64; 4] {
        self.y
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    fn vars(&self) -> [f64; 8] {
        let [a, b, c, d] = self.x;
        let [e, f, g, h] = self.y;
        [a, b, c, d, e, f, g, h]
    }

    fn with_vars(&self, w: [f64; 8]) -> Self {
        Self {
            x: [w[0], w[1], w[2], w[3]],
            y: [w[4], w[5], w[6], w[7]],
            ..*self
        }
    }
}

fn z_signed(p: &BoxPoint, uv_sign: f64) -> f64 {
    let [x1p, x1m, x2p, x2m] = p.x;
    let [y1p, y1m, y2p, y2m] = p.y;
    let (u, v) = (p.u, p.v);
    x1p * y1p + x1m * y1m - x1p * y1m - x1m * y1p + y2p * x1p + y2m * x1m - y2p * x1m - y2m * x1p
        + y1p * x2p
        + y1m * x2m
        - y1p * x2m
        - y1m * x2p
        - 2.0 * x2p * y2p
        - 2.0 * x2m * y2m
        + v * x2p
        + v * x2m
        + u * y2p
        + u * y2m
        + uv_sign * u * v
}

/// The nineteen-term form, term by term.
pub fn z_value(p: &BoxPoint) -> f64 {
    z_signed(p, 1.0)
}

/// The same form grouped by `x2+`, `x2−` and `x1+ − x1−`.
pub fn z_grouped(p: &BoxPoint) -> f64 {
    let [x1p, x1m, x2p, x2m] = p.x;
    let [y1p, y1m, y2p, y2m] = p.y;
    let (u, v) = (p.u, p.v);
    let a = y1p - y1m;
    x2p * (-2.0 * y2p + a + v)
        + x2m * (-2.0 * y2m - a + v)
        + (x1p - x1m) * (a + y2p - y2m)
        + u * y2p
        + u * y2m
        + u * v
}

/// Sign pattern of the three `x`-coefficients, numbered 1..=8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaseId(u8);

impl CaseId {
    pub fn index(self) -> u8 {
        self.0
    }
}

/// Classifies `y` by the signs of `s1 = −2y2+ + A + V`, `s2 = −2y2− − A + V`,
/// `s3 = A + y2+ − y2−` (zero counts as nonnegative) and returns the minimum
/// of `Z` over the `x`-box in closed form.
pub fn case_lower_bound(y1p: f64, y1m: f64, y2p: f64, y2m: f64, u: f64, v: f64) -> (CaseId, f64) {
    let a = y1p - y1m;
    let s1 = -2.0 * y2p + a + v >= 0.0;
    let s2 = -2.0 * y2m - a + v >= 0.0;
    let s3 = a + y2p - y2m >= 0.0;
    match (s1, s2, s3) {
        (true, true, true) => (CaseId(1), u * (-a + 2.0 * y2m + v)),
        (false, true, true) => (CaseId(2), 2.0 * u * (v + y2m - y2p)),
        (true, false, true) => (CaseId(3), 2.0 * u * (v - a)),
        (true, true, false) => (CaseId(4), u * (a + 2.0 * y2p + v)),
        (false, false, true) => (CaseId(5), u * (-2.0 * y2p - a + 3.0 * v)),
        (false, true, false) => (CaseId(6), 2.0 * u * (a + v)),
        (true, false, false) => (CaseId(7), 2.0 * u * (y2p - y2m + v)),
        (false, false, false) => (CaseId(8), u * (-2.0 * y2m + a + 3.0 * v)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremSpec {
    /// Values taken by both `U` and `V`; every ordered pair is checked.
    pub grid: Vec<f64>,
    /// Random interior points per `(U, V)`.
    pub n_random: usize,
    /// Random `y`-tuples per `(U, V)` for the case formulas.
    pub n_case_samples: usize,
    pub seed: u64,
    /// Flip the sign of the `UV` term. Used to check that failures are caught.
    #[serde(default)]
    pub mutate_uv_sign: bool,
}

impl Default for TheoremSpec {
    fn default() -> Self {
        Self {
            grid: vec![0.0, 0.5, 1.0, 2.0],
            n_random: 100_000,
            n_case_samples: 10_000,
            seed: 0,
            mutate_uv_sign: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Vertex,
    Random,
    Identity,
    Linearity,
    CaseBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub stage: Stage,
    pub point: BoxPoint,
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub passed: bool,
    pub grid_points: usize,
    pub vertices_checked: u64,
    pub random_checked: u64,
    pub case_samples_checked: u64,
    /// Extremes below are absent when no point of that kind was checked.
    pub min_vertex_z: Option<f64>,
    pub min_random_z: Option<f64>,
    pub max_identity_error: f64,
    pub max_linearity_error: f64,
    pub min_case_bound: Option<f64>,
    /// Largest `case bound − vertex minimum`; ≤ 0 up to rounding.
    pub max_case_excess: Option<f64>,
    pub case_hits: [u64; 8],
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone)]
struct GridResult {
    vertices: u64,
    random: u64,
    cases: u64,
    min_vertex: f64,
    min_random: f64,
    identity: f64,
    linearity: f64,
    min_case: f64,
    case_excess: f64,
    hits: [u64; 8],
    counterexample: Option<Counterexample>,
}

impl GridResult {
    fn fail(&mut self, stage: Stage, point: BoxPoint, value: f64, detail: impl Into<String>) {
        let better = match &self.counterexample {
            None => true,
            Some(c) => stage < c.stage,
        };
        if better {
            self.counterexample = Some(Counterexample {
                stage,
                point,
                value,
                detail: detail.into(),
            });
        }
    }
}

fn check_grid_point(spec: &TheoremSpec, u: f64, v: f64, stream: u64) -> Result<GridResult> {
    let sign = if spec.mutate_uv_sign { -1.0 } else { 1.0 };
    let z = |p: &BoxPoint| z_signed(p, sign);
    let mut out = GridResult {
        vertices: 0,
        random: 0,
        cases: 0,
        min_vertex: f64::INFINITY,
        min_random: f64::INFINITY,
        identity: 0.0,
        linearity: 0.0,
        min_case: f64::INFINITY,
        case_excess: f64::NEG_INFINITY,
        hits: [0; 8],
        counterexample: None,
    };

    for idx in 0..=255u8 {
        let p = BoxPoint::vertex(idx, u, v)?;
        let val = z(&p);
        out.vertices += 1;
        out.min_vertex = out.min_vertex.min(val);
        if val < -TOL && out.counterexample.is_none() {
            out.fail(Stage::Vertex, p, val, format!("vertex {idx}: Z < 0"));
        }
    }

    let mut rng = chunk_rng(spec.seed, stream);
    let mut draw = |hi: f64| {
        if hi > 0.0 {
            rng.random_range(0.0..=hi)
        } else {
            0.0
        }
    };
    for _ in 0..spec.n_random {
        let p = BoxPoint::new(
            std::array::from_fn(|_| draw(u)),
            std::array::from_fn(|_| draw(v)),
            u,
            v,
        )?;
        let val = z(&p);
        out.random += 1;
        out.min_random = out.min_random.min(val);
        if val < -TOL {
            out.fail(Stage::Random, p, val, "interior point: Z < 0");
        }
        let err = (z_grouped(&p) - val).abs();
        out.identity = out.identity.max(err);
        if err > TOL {
            out.fail(Stage::Identity, p, err, "grouped form differs");
        }
        // Affine in each variable: Z at the midpoint of two values of one
        // coordinate equals the mean of Z at those values.
        let base = p.vars();
        for i in 0..8 {
            let hi = if i < 4 { u } else { v };
            let (s, t) = (draw(hi), draw(hi));
            let at = |w: f64| {
                let mut vars = base;
                vars[i] = w;
                z(&p.with_vars(vars))
            };
            let err = (at(0.5 * (s + t)) - 0.5 * (at(s) + at(t))).abs();
            out.linearity = out.linearity.max(err);
            if err > TOL {
                out.fail(
                    Stage::Linearity,
                    p,
                    err,
                    format!("not affine in variable {i}"),
                );
            }
        }
    }

    for _ in 0..spec.n_case_samples {
        let y: [f64; 4] = std::array::from_fn(|_| draw(v));
        let (case, bound) = case_lower_bound(y[0], y[1], y[2], y[3], u, v);
        let mut vmin = f64::INFINITY;
        let mut argmin = BoxPoint::new([0.0; 4], y, u, v)?;
        for idx in 0..16u8 {
            let x = std::array::from_fn(|i| if idx >> i & 1 == 1 { u } else { 0.0 });
            let p = BoxPoint::new(x, y, u, v)?;
            let val = z(&p);
            if val < vmin {
                vmin = val;
                argmin = p;
            }
        }
        out.cases += 1;
        out.hits[case.index() as usize - 1] += 1;
        out.min_case = out.min_case.min(bound);
        out.case_excess = out.case_excess.max(bound - vmin);
        if bound > vmin + TOL {
            out.fail(
                Stage::CaseBound,
                argmin,
                bound,
                format!(
                    "case {} bound exceeds the vertex minimum {vmin}",
                    case.index()
                ),
            );
        } else if bound < -TOL {
            out.fail(
                Stage::CaseBound,
                argmin,
                bound,
                format!("case {} bound is negative", case.index()),
            );
        }
    }
    Ok(out)
}

/// Runs every check on every `(U, V)` in `grid × grid`. The first
/// counterexample in grid order (then stage order) is reported.
pub fn verify_theorem(spec: &TheoremSpec) -> Result<TheoremReport> {
    if spec.grid.is_empty() {
        return Err(invalid("grid", "must be non-empty"));
    }
    if let Some(&bad) = spec.grid.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(invalid(
            "grid",
            format!("values must be finite and ≥ 0, got {bad}"),
        ));
    }
    let points: Vec<(f64, f64)> = spec
        .grid
        .iter()
        .flat_map(|&u| spec.grid.iter().map(move |&v| (u, v)))
        .collect();
    let results = points
        .par_iter()
        .enumerate()
        .map(|(i, &(u, v))| check_grid_point(spec, u, v, i as u64))
        .collect::<Result<Vec<_>>>()?;

    let mut report = TheoremReport {
        passed: true,
        grid_points: points.len(),
        vertices_checked: 0,
        random_checked: 0,
        case_samples_checked: 0,
        min_vertex_z: None,
        min_random_z: None,
        max_identity_error: 0.0,
        max_linearity_error: 0.0,
        min_case_bound: None,
        max_case_excess: None,
        case_hits: [0; 8],
        counterexample: None,
    };
    let lower = |acc: Option<f64>, x: f64| match acc {
        _ if !x.is_finite() => acc,
        Some(a) => Some(a.min(x)),
        None => Some(x),
    };
    let upper = |acc: Option<f64>, x: f64| lower(acc.map(|a| -a), -x).map(|a| -a);
    for r in results {
        report.vertices_checked += r.vertices;
        report.random_checked += r.random;
        report.case_samples_checked += r.cases;
        report.min_vertex_z = lower(report.min_vertex_z, r.min_vertex);
        report.min_random_z = lower(report.min_random_z, r.min_random);
        report.max_identity_error = report.max_identity_error.max(r.identity);
        report.max_linearity_error = report.max_linearity_error.max(r.linearity);
        report.min_case_bound = lower(report.min_case_bound, r.min_case);
        report.max_case_excess = upper(report.max_case_excess, r.case_excess);
        for (h, n) in report.case_hits.iter_mut().zip(r.hits) {
            *h += n;
        }
        if report.counterexample.is_none() && r.counterexample.is_some() {
            report.counterexample = r.counterexample;
        }
    }
    report.passed = report.counterexample.is_none();
    Ok(report)
}
