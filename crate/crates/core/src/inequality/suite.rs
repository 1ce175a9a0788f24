//! The inequalities as linear forms, and their evaluation against a source.

use serde::{Deserialize, Serialize};

use super::source::{check_removal_invariance, check_symmetry, removal_forms, ProbabilitySource};
use crate::angle::{AngleConfig, AngleDeg};
use crate::error::{invalid, Error, Result};
use crate::form::{pairs_of, LinearForm};
use crate::pdf::Outcome;
use crate::report::{InequalityKind, InequalityReport, Tolerance};

fn deg(x: f64) -> AngleDeg {
    AngleDeg::deg(x)
}

/// Orientations at which the removed-polarizer rates must agree before the
/// Freedman–Clauser form is evaluated.
pub const FC_CHECK_ANGLES: [f64; 6] = [0.0, 22.5, 45.0, 67.5, 90.0, 135.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub a: AngleDeg,
    pub b: AngleDeg,
    pub a2: AngleDeg,
    pub b2: AngleDeg,
}

impl Default for ChshAngles {
    fn default() -> Self {
        Self {
            a: deg(0.0),
            b: deg(22.5),
            a2: deg(45.0),
            b2: deg(67.5),
        }
    }
}

/// Everything besides the source that an evaluation may need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Orientations for `weak17` and `strong23`.
    pub config: AngleConfig,
    /// Spacing `φ` for `ch30`, in degrees.
    pub ch_phi: f64,
    pub chsh: ChshAngles,
    pub tolerance: Tolerance,
    /// Random pairs drawn when checking rotational symmetry.
    pub symmetry_pairs: usize,
    pub symmetry_seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            config: AngleConfig::triangle_120(),
            ch_phi: 22.5,
            chsh: ChshAngles::default(),
            tolerance: Tolerance::default(),
            symmetry_pairs: 32,
            symmetry_seed: 0,
        }
    }
}

/// Numerator terms shared by the weak and strong forms.
fn correlation_block(c: &AngleConfig) -> LinearForm {
    LinearForm::new()
        .correlation(1.0, c.a, c.b)
        .correlation(1.0, c.a, c.b_prime)
        .correlation(1.0, c.a_prime, c.b)
        .add(-2.0, c.a_prime, c.b_prime, Outcome::PlusPlus)
        .add(-2.0, c.a_prime, c.b_prime, Outcome::MinusMinus)
}

/// Single form, bounded below by −1, using absolute probabilities.
pub fn weak_17_form(c: &AngleConfig) -> LinearForm {
    let (a2, b2) = (c.a_prime, c.b_prime);
    correlation_block(c)
        .add(1.0, a2, b2, Outcome::FirstPlus)
        .add(1.0, a2, b2, Outcome::FirstMinus)
        .add(1.0, a2, b2, Outcome::SecondPlus)
        .add(1.0, a2, b2, Outcome::SecondMinus)
}

/// `[numerator, normalization]`; only coincidences enter.
pub fn strong_23_forms(c: &AngleConfig) -> [LinearForm; 2] {
    let num = correlation_block(c)
        .coincidences(1.0, c.a_prime, c.r)
        .coincidences(1.0, c.r, c.b_prime);
    [num, LinearForm::new().coincidences(1.0, c.r, c.r)]
}

/// The strong form for a rotation-invariant source with `a′ = b′ = r`,
/// `|a − b| = |b − a′| = |b′ − a| = 120°`:
/// `[3E(120°) + 2p+−(0°) + 2p−+(0°)] / K(0°)`.
pub fn simplified_29_forms() -> [LinearForm; 2] {
    let (z, t) = (deg(0.0), deg(120.0));
    let num = LinearForm::new()
        .correlation(3.0, z, t)
        .add(2.0, z, z, Outcome::PlusMinus)
        .add(2.0, z, z, Outcome::MinusPlus);
    [num, LinearForm::new().coincidences(1.0, z, z)]
}

/// `[3p(φ) − p(3φ) − p(2φ, ∞) − p(∞, φ), p(∞, ∞)]` with one-channel rates
/// read from the `+` channels and removed polarizers from summed channels.
pub fn ch_30_forms(phi: f64) -> Result<[LinearForm; 2]> {
    if !phi.is_finite() {
        return Err(invalid("phi", "must be finite"));
    }
    let (z, p1, p2, p3) = (deg(0.0), deg(phi), deg(2.0 * phi), deg(3.0 * phi));
    let num = LinearForm::new()
        .add(3.0, z, p1, Outcome::PlusPlus)
        .add(-1.0, z, p3, Outcome::PlusPlus)
        .add(-1.0, p2, p2, Outcome::PlusPlus)
        .add(-1.0, p2, p2, Outcome::PlusMinus)
        .add(-1.0, p1, p1, Outcome::PlusPlus)
        .add(-1.0, p1, p1, Outcome::MinusPlus);
    Ok([num, LinearForm::new().coincidences(1.0, z, z)])
}

/// `[p(22.5°) − p(67.5°), p(∞, ∞)]`.
pub fn fc_31_forms() -> [LinearForm; 2] {
    let z = deg(0.0);
    let num = LinearForm::new()
        .add(1.0, z, deg(22.5), Outcome::PlusPlus)
        .add(-1.0, z, deg(67.5), Outcome::PlusPlus);
    [num, LinearForm::new().coincidences(1.0, z, z)]
}

const CHSH_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

/// Correlation and coincidence sum at `(a,b)`, `(a,b2)`, `(a2,b)`, `(a2,b2)`.
pub fn chsh_forms(x: &ChshAngles) -> Vec<LinearForm> {
    [(x.a, x.b), (x.a, x.b2), (x.a2, x.b), (x.a2, x.b2)]
        .iter()
        .flat_map(|&(p, q)| {
            [
                LinearForm::new().correlation(1.0, p, q),
                LinearForm::new().coincidences(1.0, p, q),
            ]
        })
        .collect()
}

/// The forms whose values determine `kind`'s left side.
pub fn forms_for(kind: InequalityKind, settings: &Settings) -> Result<Vec<LinearForm>> {
    Ok(match kind {
        InequalityKind::Weak17 => vec![weak_17_form(&settings.config)],
        InequalityKind::Strong23 => strong_23_forms(&settings.config).to_vec(),
        InequalityKind::Ardehali29 | InequalityKind::Rt32 => simplified_29_forms().to_vec(),
        InequalityKind::Ch30 => ch_30_forms(settings.ch_phi)?.to_vec(),
        InequalityKind::Fc31 => fc_31_forms().to_vec(),
        InequalityKind::Chsh => chsh_forms(&settings.chsh),
    })
}

/// Orientation pairs a measurement must cover to evaluate `kind`, including
/// those of its auxiliary checks.
pub fn required_pairs(
    kind: InequalityKind,
    settings: &Settings,
) -> Result<Vec<(AngleDeg, AngleDeg)>> {
    let mut forms = forms_for(kind, settings)?;
    if kind == InequalityKind::Fc31 {
        forms.extend(removal_forms(&FC_CHECK_ANGLES.map(deg)));
    }
    Ok(pairs_of(&forms))
}

/// Left side and its gradient with respect to the form values.
pub fn combine(kind: InequalityKind, values: &[f64]) -> Result<(f64, Vec<f64>)> {
    let degenerate = |what: String| Error::DegenerateSource(format!("{kind}: {what}"));
    match kind {
        InequalityKind::Weak17 => Ok((values[0], vec![1.0])),
        InequalityKind::Chsh => {
            let mut raw = 0.0;
            for i in 0..4 {
                let k = values[2 * i + 1];
                if k.is_nan() || k <= 0.0 {
                    return Err(degenerate(format!("no coincidences at setting {}", i + 1)));
                }
                raw += CHSH_SIGNS[i] * values[2 * i] / k;
            }
            let s = raw.signum();
            let mut grad = vec![0.0; 8];
            for i in 0..4 {
                let (e, k) = (values[2 * i], values[2 * i + 1]);
                grad[2 * i] = s * CHSH_SIGNS[i] / k;
                grad[2 * i + 1] = -s * CHSH_SIGNS[i] * e / (k * k);
            }
            Ok((raw.abs(), grad))
        }
        _ => {
            let (n, d) = (values[0], values[1]);
            if d.is_nan() || d <= 0.0 {
                return Err(degenerate(format!("normalization {d} is not positive")));
            }
            Ok((n / d, vec![1.0 / d, -n / (d * d)]))
        }
    }
}

fn evaluate_forms(
    kind: InequalityKind,
    src: &ProbabilitySource,
    forms: &[LinearForm],
    tol: Tolerance,
) -> Result<InequalityReport> {
    let est = src.estimate(forms)?;
    let (lhs, grad) = combine(kind, &est.values)?;
    let stderr = if src.is_analytic() {
        0.0
    } else {
        est.stderr_of(&grad)
    };
    Ok(InequalityReport::new(kind, lhs, stderr, est.n_samples, tol))
}

pub fn eval_weak_17(
    src: &ProbabilitySource,
    config: &AngleConfig,
    tol: Tolerance,
) -> Result<InequalityReport> {
    evaluate_forms(InequalityKind::Weak17, src, &[weak_17_form(config)], tol)
}

pub fn eval_strong_23(
    src: &ProbabilitySource,
    config: &AngleConfig,
    tol: Tolerance,
) -> Result<InequalityReport> {
    evaluate_forms(InequalityKind::Strong23, src, &strong_23_forms(config), tol)
}

fn eval_symmetric(
    kind: InequalityKind,
    src: &ProbabilitySource,
    n_pairs: usize,
    seed: u64,
    tol: Tolerance,
) -> Result<InequalityReport> {
    let sym = check_symmetry(src, n_pairs, seed)?;
    if !sym.passed {
        return Err(Error::SymmetryViolated {
            deviation: sym.worst_deviation,
            tolerance: sym.worst_tolerance,
        });
    }
    evaluate_forms(kind, &src.by_difference(), &simplified_29_forms(), tol)
}

/// Refuses sources that fail [`check_symmetry`].
pub fn eval_simplified_29(
    src: &ProbabilitySource,
    n_pairs: usize,
    seed: u64,
    tol: Tolerance,
) -> Result<InequalityReport> {
    eval_symmetric(InequalityKind::Ardehali29, src, n_pairs, seed, tol)
}

/// Same arithmetic as [`eval_simplified_29`], with orientations read as
/// interferometer phase differences.
pub fn eval_rt_32(
    src: &ProbabilitySource,
    n_pairs: usize,
    seed: u64,
    tol: Tolerance,
) -> Result<InequalityReport> {
    eval_symmetric(InequalityKind::Rt32, src, n_pairs, seed, tol)
}

pub fn eval_ch_30(src: &ProbabilitySource, phi: f64, tol: Tolerance) -> Result<InequalityReport> {
    evaluate_forms(InequalityKind::Ch30, src, &ch_30_forms(phi)?, tol)
}

/// Requires the removed-polarizer rates to be the same at every angle in
/// [`FC_CHECK_ANGLES`].
pub fn eval_fc_31(src: &ProbabilitySource, tol: Tolerance) -> Result<InequalityReport> {
    let check = check_removal_invariance(src, &FC_CHECK_ANGLES.map(deg))?;
    if !check.passed {
        return Err(Error::AssumptionFailed(format!(
            "removed-polarizer rate varies with orientation by {:.3e} (allowed {:.3e})",
            check.max_spread, check.tolerance
        )));
    }
    evaluate_forms(InequalityKind::Fc31, src, &fc_31_forms(), tol)
}

pub fn eval_chsh(
    src: &ProbabilitySource,
    angles: &ChshAngles,
    tol: Tolerance,
) -> Result<InequalityReport> {
    evaluate_forms(InequalityKind::Chsh, src, &chsh_forms(angles), tol)
}

pub fn evaluate(
    kind: InequalityKind,
    src: &ProbabilitySource,
    s: &Settings,
) -> Result<InequalityReport> {
    let tol = s.tolerance;
    match kind {
        InequalityKind::Weak17 => eval_weak_17(src, &s.config, tol),
        InequalityKind::Strong23 => eval_strong_23(src, &s.config, tol),
        InequalityKind::Ardehali29 => {
            eval_simplified_29(src, s.symmetry_pairs, s.symmetry_seed, tol)
        }
        InequalityKind::Rt32 => eval_rt_32(src, s.symmetry_pairs, s.symmetry_seed, tol),
        InequalityKind::Ch30 => eval_ch_30(src, s.ch_phi, tol),
        InequalityKind::Fc31 => eval_fc_31(src, tol),
        InequalityKind::Chsh => eval_chsh(src, &s.chsh, tol),
    }
}
