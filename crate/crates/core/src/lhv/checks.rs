use serde::Serialize;

use super::{HiddenVariableModel, Response};
use crate::angle::{AngleConfig, AngleDeg};
use crate::error::{invalid, Result};

const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Plus,
    Minus,
}

/// A `λ` at which one channel's count probability exceeds the total count
/// probability of the same detector at the reference orientation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupplementaryViolation {
    pub lambda_index: usize,
    pub lambda: String,
    /// 1 or 2.
    pub detector: u8,
    pub orientation: AngleDeg,
    pub channel: Channel,
    pub probability: f64,
    pub reference_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupplementaryCheck {
    pub holds: bool,
    pub counterexample: Option<SupplementaryViolation>,
}

/// Checks, for every supplied `λ`, orientation `o` and detector, that
/// `p±(o|λ) ≤ p+(r|λ) + p−(r|λ)`.
pub fn check_supplementary<M: HiddenVariableModel + ?Sized>(
    model: &M,
    orientations: &[AngleDeg],
    r: AngleDeg,
    lambdas: &[M::Lambda],
) -> Result<SupplementaryCheck> {
    if orientations.is_empty() || lambdas.is_empty() {
        return Err(invalid(
            "inputs",
            "orientations and lambdas must be non-empty",
        ));
    }
    type Respond<M> = fn(&M, AngleDeg, &<M as HiddenVariableModel>::Lambda) -> Response;
    let detectors: [(u8, Respond<M>); 2] = [(1, M::response1), (2, M::response2)];
    for (idx, lambda) in lambdas.iter().enumerate() {
        for &(detector, respond) in &detectors {
            let reference = respond(model, r, lambda).total();
            for &o in orientations {
                let resp = respond(model, o, lambda);
                for (channel, p) in [(Channel::Plus, resp.plus), (Channel::Minus, resp.minus)] {
                    if p > reference + SLACK {
                        return Ok(SupplementaryCheck {
                            holds: false,
                            counterexample: Some(SupplementaryViolation {
                                lambda_index: idx,
                                lambda: format!("{lambda:?}"),
                                detector,
                                orientation: o,
                                channel,
                                probability: p,
                                reference_total: reference,
                            }),
                        });
                    }
                }
            }
        }
    }
    Ok(SupplementaryCheck {
        holds: true,
        counterexample: None,
    })
}

/// Left side of the per-`λ` inequality (bounded below by −1), with detector
/// 1 at `a`, `a′` and detector 2 at `b`, `b′`.
pub fn pointwise_lhs(a: Response, a_prime: Response, b: Response, b_prime: Response) -> f64 {
    let (ap, am) = a.pair();
    let (a2p, a2m) = a_prime.pair();
    let (bp, bm) = b.pair();
    let (b2p, b2m) = b_prime.pair();
    ap * bp + am * bm - ap * bm - am * bp + b2p * ap + b2m * am - b2p * am - b2m * ap
        + bp * a2p
        + bm * a2m
        - bp * a2m
        - bm * a2p
        - 2.0 * a2p * b2p
        - 2.0 * a2m * b2m
        + a2p
        + a2m
        + b2p
        + b2m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseCheck {
    pub holds: bool,
    pub min_lhs: f64,
    pub argmin: usize,
}

pub fn check_pointwise_inequality<M: HiddenVariableModel + ?Sized>(
    model: &M,
    config: &AngleConfig,
    lambdas: &[M::Lambda],
) -> Result<PointwiseCheck> {
    if lambdas.is_empty() {
        return Err(invalid("lambdas", "must be non-empty"));
    }
    let mut min_lhs = f64::INFINITY;
    let mut argmin = 0;
    for (i, l) in lambdas.iter().enumerate() {
        let v = pointwise_lhs(
            model.response1(config.a, l),
            model.response1(config.a_prime, l),
            model.response2(config.b, l),
            model.response2(config.b_prime, l),
        );
        if v < min_lhs {
            min_lhs = v;
            argmin = i;
        }
    }
    Ok(PointwiseCheck {
        holds: min_lhs >= -1.0 - SLACK,
        min_lhs,
        argmin,
    })
}
