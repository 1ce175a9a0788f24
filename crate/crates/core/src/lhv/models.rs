//! Reference local models. None of these come from experiment; they are
//! fixtures with known ensemble statistics.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HiddenVariableModel, LhvEnsemble, LineDensity, Response};
use crate::angle::AngleDeg;
use crate::error::{invalid, Error, Result};

/// `λ` is a polarization axis in degrees, uniform on `[0, 180)`.
fn uniform_axis(rng: &mut dyn RngCore) -> f64 {
    rng.random_range(0.0..180.0)
}

const AXIS: LineDensity = LineDensity { lo: 0.0, hi: 180.0 };

fn axis_cos2(orientation: AngleDeg, lambda: f64) -> f64 {
    (2.0 * (orientation.value() - lambda).to_radians()).cos()
}

/// Deterministic outcomes: `+` iff `cos 2(o − λ) ≥ 0`. Its correlation is
/// the triangular function that saturates the local bounds.
#[derive(Debug, Clone, Copy, Default)]
pub struct SignModel;

impl SignModel {
    fn respond(orientation: AngleDeg, lambda: f64) -> Response {
        if axis_cos2(orientation, lambda) >= 0.0 {
            Response {
                plus: 1.0,
                minus: 0.0,
            }
        } else {
            Response {
                plus: 0.0,
                minus: 1.0,
            }
        }
    }
}

impl HiddenVariableModel for SignModel {
    type Lambda = f64;

    fn name(&self) -> &str {
        "sign"
    }

    fn sample_lambda(&self, rng: &mut dyn RngCore) -> f64 {
        uniform_axis(rng)
    }

    fn response1(&self, orientation: AngleDeg, lambda: &f64) -> Response {
        Self::respond(orientation, *lambda)
    }

    fn response2(&self, orientation: AngleDeg, lambda: &f64) -> Response {
        Self::respond(orientation, *lambda)
    }

    fn line_density(&self) -> Option<LineDensity> {
        Some(AXIS)
    }

    fn lambda_at(&self, t: f64) -> Option<f64> {
        Some(t)
    }

    fn breakpoints(&self, orientation: AngleDeg) -> Vec<f64> {
        let o = orientation.value();
        vec![(o + 45.0).rem_euclid(180.0), (o + 135.0).rem_euclid(180.0)]
    }
}

/// Each detector follows Malus' law about the hidden axis:
/// `(cos²(o − λ), sin²(o − λ))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MalusModel;

impl MalusModel {
    fn respond(orientation: AngleDeg, lambda: f64) -> Response {
        let c = (orientation.value() - lambda).to_radians().cos();
        let plus = c * c;
        Response {
            plus,
            minus: 1.0 - plus,
        }
    }
}

impl HiddenVariableModel for MalusModel {
    type Lambda = f64;

    fn name(&self) -> &str {
        "malus"
    }

    fn sample_lambda(&self, rng: &mut dyn RngCore) -> f64 {
        uniform_axis(rng)
    }

    fn response1(&self, orientation: AngleDeg, lambda: &f64) -> Response {
        Self::respond(orientation, *lambda)
    }

    fn response2(&self, orientation: AngleDeg, lambda: &f64) -> Response {
        Self::respond(orientation, *lambda)
    }

    fn line_density(&self) -> Option<LineDensity> {
        Some(AXIS)
    }

    fn lambda_at(&self, t: f64) -> Option<f64> {
        Some(t)
    }
}

/// Detectors never fire.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDetectionModel;

impl HiddenVariableModel for NoDetectionModel {
    type Lambda = f64;

    fn name(&self) -> &str {
        "none"
    }

    fn sample_lambda(&self, rng: &mut dyn RngCore) -> f64 {
        uniform_axis(rng)
    }

    fn response1(&self, _: AngleDeg, _: &f64) -> Response {
        Response::NONE
    }

    fn response2(&self, _: AngleDeg, _: &f64) -> Response {
        Response::NONE
    }

    fn line_density(&self) -> Option<LineDensity> {
        Some(AXIS)
    }

    fn lambda_at(&self, t: f64) -> Option<f64> {
        Some(t)
    }
}

/// Response of one detector in a [`FourierModel`], as a function of
/// `u = o − λ`.
///
/// With `σ(u), ρ(u) ∈ [0, 1]` smooth, the channels are
/// `p+ = F(1 − ρ(1 − σ))` and `p− = F(1 − ρσ)`. Each channel is at most `F`
/// while the total `F(2 − ρ)` is at least `F`, so no orientation ever
/// enhances a channel beyond the total at any other orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelShape {
    /// Peak single-channel probability `F`, in `(0, 1]`.
    pub efficiency: f64,
    /// Cosine coefficients of `S`, with `σ = (1 + tanh S) / 2` the `+` share.
    pub split: Vec<f64>,
    /// Constant term then cosine coefficients of `R`. `ρ` runs from
    /// `max(0, 2 − 1/F)` (both channels busy) to 1 (exclusive channels) as
    /// `tanh R` runs from −1 to 1, keeping the total at most 1.
    pub exclusivity: Vec<f64>,
}

fn cosine_series(coefs: &[f64], x: f64) -> f64 {
    coefs
        .iter()
        .enumerate()
        .map(|(k, c)| c * ((k + 1) as f64 * x).cos())
        .sum()
}

fn squash(x: f64) -> f64 {
    0.5 * (1.0 + x.tanh())
}

impl ChannelShape {
    fn random(rng: &mut ChaCha8Rng, harmonics: usize) -> Self {
        let mut exclusivity = vec![rng.random_range(-1.0..3.0)];
        exclusivity.extend((1..=harmonics).map(|k| rng.random_range(-1.0..1.0) / k as f64));
        Self {
            efficiency: rng.random_range(0.3..=1.0),
            split: (1..=harmonics)
                .map(|k| rng.random_range(-3.0..3.0) / k as f64)
                .collect(),
            exclusivity,
        }
    }

    pub fn respond(&self, u_deg: f64) -> Response {
        let x = 2.0 * u_deg.to_radians();
        let f = self.efficiency;
        let sigma = squash(cosine_series(&self.split, x));
        let rho_min = (2.0 - 1.0 / f).max(0.0);
        let (r0, rest) = self.exclusivity.split_first().unwrap_or((&0.0, &[]));
        let rho = rho_min + (1.0 - rho_min) * squash(r0 + cosine_series(rest, x));
        Response {
            plus: f * (1.0 - rho * (1.0 - sigma)),
            minus: f * (1.0 - rho * sigma),
        }
    }
}

/// Random analytic local model: rotation invariant (responses depend on
/// `o − λ` only, `λ` uniform) and even in `o − λ`, so its statistics depend
/// only on the folded angle difference.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierModel {
    pub first: ChannelShape,
    pub second: ChannelShape,
    name: String,
}

impl FourierModel {
    pub fn new(first: ChannelShape, second: ChannelShape) -> Self {
        Self {
            first,
            second,
            name: "fourier".into(),
        }
    }

    pub fn generate(seed: u64, harmonics: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = ChannelShape::random(&mut rng, harmonics);
        let second = ChannelShape::random(&mut rng, harmonics);
        Self {
            first,
            second,
            name: format!("fourier:{seed}"),
        }
    }
}

impl HiddenVariableModel for FourierModel {
    type Lambda = f64;

    fn name(&self) -> &str {
        &self.name
    }

    fn sample_lambda(&self, rng: &mut dyn RngCore) -> f64 {
        uniform_axis(rng)
    }

    fn response1(&self, orientation: AngleDeg, lambda: &f64) -> Response {
        self.first.respond(orientation.value() - lambda)
    }

    fn response2(&self, orientation: AngleDeg, lambda: &f64) -> Response {
        self.second.respond(orientation.value() - lambda)
    }

    fn line_density(&self) -> Option<LineDensity> {
        Some(AXIS)
    }

    fn lambda_at(&self, t: f64) -> Option<f64> {
        Some(t)
    }
}

fn param<T: std::str::FromStr>(
    params: &BTreeMap<String, String>,
    key: &'static str,
    default: T,
) -> Result<T> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| invalid(key, format!("cannot parse `{v}`"))),
    }
}

/// Looks up a built-in model by name: `sign`, `malus`, `none`, or `fourier`
/// (parameters `seed`, `harmonics`).
pub fn build_model(name: &str, params: &BTreeMap<String, String>) -> Result<Arc<dyn LhvEnsemble>> {
    let known: &[&str] = match name {
        "fourier" => &["seed", "harmonics"],
        _ => &[],
    };
    if let Some(k) = params.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::Unsupported(format!(
            "model `{name}` has no parameter `{k}`"
        )));
    }
    Ok(match name {
        "sign" => Arc::new(SignModel),
        "malus" => Arc::new(MalusModel),
        "none" | "no_detection" => Arc::new(NoDetectionModel),
        "fourier" => {
            let harmonics: usize = param(params, "harmonics", 3)?;
            if harmonics == 0 || harmonics > 64 {
                return Err(invalid("harmonics", format!("{harmonics} not in 1..=64")));
            }
            Arc::new(FourierModel::generate(param(params, "seed", 0)?, harmonics))
        }
        other => return Err(Error::Unsupported(format!("unknown model `{other}`"))),
    })
}
