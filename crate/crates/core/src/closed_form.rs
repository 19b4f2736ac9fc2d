//! Analytic sign rules and identifiability conditions for the catalog
//! structures.
//!
//! All functions take Σ in the catalog node order (see [`crate::catalog`])
//! and work on correlations, so they are invariant to rescaling variables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::CatalogId;
use crate::feasibility::PointwiseStatus;
use crate::model::{CovarianceMatrix, DEFAULT_ZERO_TOL};

/// Absolute slack at every threshold comparison.
pub const COND_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error("entry {0} is numerically zero, so the formula's denominator or sign is undefined")]
    ZeroDenominatorEntry(String),
    #[error("{graph} expects a {expected}x{expected} covariance, got {got}x{got}")]
    DimensionMismatch {
        graph: CatalogId,
        expected: usize,
        got: usize,
    },
    #[error("{0} has no observed-only closed form")]
    NeedsHidden(CatalogId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignVerdict {
    Plus,
    Minus,
    /// The branch quantity sits on its threshold; no valid model exists there.
    Boundary,
}

impl SignVerdict {
    fn of(v: f64) -> Self {
        if v > 0.0 {
            SignVerdict::Plus
        } else {
            SignVerdict::Minus
        }
    }

    fn flipped(self) -> Self {
        match self {
            SignVerdict::Plus => SignVerdict::Minus,
            SignVerdict::Minus => SignVerdict::Plus,
            SignVerdict::Boundary => SignVerdict::Boundary,
        }
    }

    /// Whether the pointwise LP verdict says the same thing. `None` when
    /// this verdict is `Boundary`.
    pub fn agrees_with(self, status: PointwiseStatus) -> Option<bool> {
        match self {
            SignVerdict::Plus => Some(status == PointwiseStatus::IdentifiablePlus),
            SignVerdict::Minus => Some(status == PointwiseStatus::IdentifiableMinus),
            SignVerdict::Boundary => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionVerdict {
    Identifiable,
    NonIdentifiable,
    Boundary,
}

impl ConditionVerdict {
    pub fn agrees_with(self, status: PointwiseStatus) -> Option<bool> {
        match self {
            ConditionVerdict::Identifiable => Some(status.is_identifiable()),
            ConditionVerdict::NonIdentifiable => Some(!status.is_identifiable()),
            ConditionVerdict::Boundary => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub graph: CatalogId,
    pub values: BTreeMap<String, f64>,
    pub verdict: ConditionVerdict,
}

fn expect_dim(sigma: &CovarianceMatrix, graph: CatalogId, expected: usize) -> Result<(), ClosedFormError> {
    if sigma.dim() != expected {
        return Err(ClosedFormError::DimensionMismatch {
            graph,
            expected,
            got: sigma.dim(),
        });
    }
    Ok(())
}

/// `σ_ij`, refusing entries that are zero relative to `√(σ_ii σ_jj)`.
fn nonzero(sigma: &CovarianceMatrix, i: usize, j: usize, name: &str) -> Result<f64, ClosedFormError> {
    let v = sigma.get(i, j);
    if v.abs() <= DEFAULT_ZERO_TOL * (sigma.get(i, i) * sigma.get(j, j)).sqrt() {
        return Err(ClosedFormError::ZeroDenominatorEntry(name.to_string()));
    }
    Ok(v)
}

/// Nodes `[H, Y]`: `sign(α) = sign(σ_hy)`.
pub fn sign_cause_effect(sigma: &CovarianceMatrix) -> Result<SignVerdict, ClosedFormError> {
    expect_dim(sigma, CatalogId::CauseEffect, 2)?;
    Ok(SignVerdict::of(nonzero(sigma, 0, 1, "sigma_hy")?))
}

/// Nodes `[H, X, Y]`: `sign(α) = sign(σ_hy) / sign(σ_hx)`.
pub fn sign_chain(sigma: &CovarianceMatrix) -> Result<SignVerdict, ClosedFormError> {
    expect_dim(sigma, CatalogId::Chain, 3)?;
    let hx = nonzero(sigma, 0, 1, "sigma_hx")?;
    let hy = nonzero(sigma, 0, 2, "sigma_hy")?;
    Ok(SignVerdict::of(hx.signum() * hy.signum()))
}

/// Nodes `[Z, H, X, Y]`: `sign(α) = sign(σ_zy) / sign(σ_zx)`. Uses observed
/// entries only, so it stays valid when `H` is latent.
pub fn sign_iv(sigma: &CovarianceMatrix) -> Result<SignVerdict, ClosedFormError> {
    expect_dim(sigma, CatalogId::Iv, 4)?;
    let zx = nonzero(sigma, 0, 2, "sigma_zx")?;
    let zy = nonzero(sigma, 0, 3, "sigma_zy")?;
    Ok(SignVerdict::of(zx.signum() * zy.signum()))
}

/// Nodes `[Z, H, X, Y]`: with `r = ρ_zy ρ_xy / ρ_zx`, the sign is
/// `sign(σ_zy / σ_zx)` below 1 and its negation above 1.
pub fn sign_cycle_iv(sigma: &CovarianceMatrix) -> Result<SignVerdict, ClosedFormError> {
    Ok(cycle_iv_branch(sigma)?.1)
}

fn cycle_iv_branch(sigma: &CovarianceMatrix) -> Result<(f64, SignVerdict), ClosedFormError> {
    expect_dim(sigma, CatalogId::CycleWithIv, 4)?;
    nonzero(sigma, 0, 2, "sigma_zx")?;
    nonzero(sigma, 0, 3, "sigma_zy")?;
    nonzero(sigma, 2, 3, "sigma_xy")?;
    let r = sigma.correlation(0, 3) * sigma.correlation(2, 3) / sigma.correlation(0, 2);
    let base = SignVerdict::of(sigma.get(0, 3).signum() * sigma.get(0, 2).signum());
    let verdict = if r < 1.0 - COND_TOL {
        base
    } else if r > 1.0 + COND_TOL {
        base.flipped()
    } else {
        SignVerdict::Boundary
    };
    Ok((r, verdict))
}

/// Nodes `[H, X, Y]`, target `X → Y`.
///
/// With `p = ρ_hx²/(1−ρ_hx²)`, `q = ρ_hy²/(1−ρ_hy²)` and
/// `u = 2ρ_hxρ_hy/(ρ_xy − ρ_hxρ_hy)`, the zero-at-target solution exists iff
/// `(u − q)/p > 1`. `printed_ratio` is the alternative closed form
/// `(p + q)/u`, for which the same set reads `0 < ratio < 1`.
pub fn confounding_conditions(sigma: &CovarianceMatrix) -> Result<ConditionReport, ClosedFormError> {
    expect_dim(sigma, CatalogId::Confounding, 3)?;
    nonzero(sigma, 0, 1, "sigma_hx")?;
    nonzero(sigma, 0, 2, "sigma_hy")?;
    nonzero(sigma, 1, 2, "sigma_xy")?;
    let (hx, hy, xy) = (
        sigma.correlation(0, 1),
        sigma.correlation(0, 2),
        sigma.correlation(1, 2),
    );
    let k = hx * hy;
    if (xy - k).abs() <= COND_TOL {
        return Err(ClosedFormError::ZeroDenominatorEntry("rho_xy - rho_hx*rho_hy".into()));
    }
    let p = hx * hx / (1.0 - hx * hx);
    let q = hy * hy / (1.0 - hy * hy);
    let u = 2.0 * k / (xy - k);
    let quotient = (u - q) / p;
    let printed_ratio = (p + q) / u;
    let c2_holds = k.signum() == xy.signum();

    let verdict = if !c2_holds || quotient < 1.0 - COND_TOL {
        ConditionVerdict::Identifiable
    } else if quotient > 1.0 + COND_TOL {
        ConditionVerdict::NonIdentifiable
    } else {
        ConditionVerdict::Boundary
    };
    let values = BTreeMap::from([
        ("rho_hx".to_string(), hx),
        ("rho_hy".to_string(), hy),
        ("rho_xy".to_string(), xy),
        ("quotient".to_string(), quotient),
        ("printed_ratio".to_string(), printed_ratio),
        ("c2_holds".to_string(), f64::from(u8::from(c2_holds))),
    ]);
    Ok(ConditionReport {
        graph: CatalogId::Confounding,
        values,
        verdict,
    })
}

/// Nodes `[H, X, Y]` with cycle `H → X → Y → H`, target `X → Y`.
///
/// In terms of `r1 = ρ(H,X)`, `r2 = ρ(X,Y)`, `r3 = ρ(H,Y)`:
/// `a = r3²/(1−r3²)·(r1 − r2 r3)`, `b = r1 r2/(r3 − r2 r1)·(r1 − r2/r3)`,
/// `c = r2/r3 + r3 r2`, `d = r1 r2/r3`. The sign is identifiable iff one of
/// `(d>0, a<0, b<0)`, `(d>0, a>0, b>0)` holds with `(c − a)/b ≤ 1`, or one of
/// `(d<0, a<0, b>0)`, `(d<0, a>0, b<0)` holds with `(c − a)/b ≥ 1`.
pub fn cycle3_conditions(sigma: &CovarianceMatrix) -> Result<ConditionReport, ClosedFormError> {
    expect_dim(sigma, CatalogId::ThreeCycle, 3)?;
    nonzero(sigma, 0, 1, "sigma_hx")?;
    nonzero(sigma, 1, 2, "sigma_xy")?;
    nonzero(sigma, 0, 2, "sigma_hy")?;
    let (r1, r2, r3) = (
        sigma.correlation(0, 1),
        sigma.correlation(1, 2),
        sigma.correlation(0, 2),
    );
    let gap = r3 - r2 * r1;
    if gap.abs() <= COND_TOL {
        return Err(ClosedFormError::ZeroDenominatorEntry("rho_hy - rho_hx*rho_xy".into()));
    }
    let a = r3 * r3 / (1.0 - r3 * r3) * (r1 - r2 * r3);
    let b = r1 * r2 / gap * (r1 - r2 / r3);
    let c = r2 / r3 + r3 * r2;
    let d = r1 * r2 / r3;
    if b.abs() <= COND_TOL {
        return Err(ClosedFormError::ZeroDenominatorEntry("b".into()));
    }
    let quotient = (c - a) / b;

    // Which side of 1 the quotient must fall on, if the signs match a case.
    let wanted_below = match (d > 0.0, a > 0.0, b > 0.0) {
        (true, false, false) | (true, true, true) => Some(true),
        (false, false, true) | (false, true, false) => Some(false),
        _ => None,
    };
    let verdict = match wanted_below {
        None => ConditionVerdict::NonIdentifiable,
        Some(_) if (quotient - 1.0).abs() <= COND_TOL => ConditionVerdict::Boundary,
        Some(below) if (quotient < 1.0) == below => ConditionVerdict::Identifiable,
        Some(_) => ConditionVerdict::NonIdentifiable,
    };
    let values = BTreeMap::from([
        ("rho_hx".to_string(), r1),
        ("rho_xy".to_string(), r2),
        ("rho_hy".to_string(), r3),
        ("a".to_string(), a),
        ("b".to_string(), b),
        ("c".to_string(), c),
        ("d".to_string(), d),
        ("quotient".to_string(), quotient),
    ]);
    Ok(ConditionReport {
        graph: CatalogId::ThreeCycle,
        values,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LatentVerdict {
    Identifiable,
    NonIdentifiable,
    Unsupported,
}

/// Identifiability of the target sign when `H` is unobserved.
pub fn latent_verdict(id: CatalogId) -> LatentVerdict {
    match id {
        CatalogId::CauseEffect | CatalogId::Confounding => LatentVerdict::NonIdentifiable,
        CatalogId::Iv | CatalogId::CycleWithIv => LatentVerdict::Identifiable,
        CatalogId::Chain | CatalogId::ThreeCycle => LatentVerdict::Unsupported,
    }
}

/// Closed-form cross-check for a catalog structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClosedFormCheck {
    Sign {
        graph: CatalogId,
        sign: SignVerdict,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        branch_ratio: Option<f64>,
    },
    Conditions(ConditionReport),
}

impl ClosedFormCheck {
    pub fn agrees_with(&self, status: PointwiseStatus) -> Option<bool> {
        match self {
            ClosedFormCheck::Sign { sign, .. } => sign.agrees_with(status),
            ClosedFormCheck::Conditions(r) => r.verdict.agrees_with(status),
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(
            self,
            ClosedFormCheck::Sign {
                sign: SignVerdict::Boundary,
                ..
            } | ClosedFormCheck::Conditions(ConditionReport {
                verdict: ConditionVerdict::Boundary,
                ..
            })
        )
    }
}

pub fn closed_form_check(id: CatalogId, sigma: &CovarianceMatrix) -> Result<ClosedFormCheck, ClosedFormError> {
    let sign = |sign| ClosedFormCheck::Sign {
        graph: id,
        sign,
        branch_ratio: None,
    };
    Ok(match id {
        CatalogId::CauseEffect => sign(sign_cause_effect(sigma)?),
        CatalogId::Chain => sign(sign_chain(sigma)?),
        CatalogId::Iv => sign(sign_iv(sigma)?),
        CatalogId::CycleWithIv => {
            let (r, s) = cycle_iv_branch(sigma)?;
            ClosedFormCheck::Sign {
                graph: id,
                sign: s,
                branch_ratio: Some(r),
            }
        }
        CatalogId::Confounding => ClosedFormCheck::Conditions(confounding_conditions(sigma)?),
        CatalogId::ThreeCycle => ClosedFormCheck::Conditions(cycle3_conditions(sigma)?),
    })
}

/// Closed-form check for the IV structures when `H` is unobserved, from the
/// covariance of `[Z, X, Y]` alone. The formulas never read `H`, so it is
/// padded in as an uncorrelated unit-variance node.
pub fn observed_iv_check(id: CatalogId, zxy: &CovarianceMatrix) -> Result<ClosedFormCheck, ClosedFormError> {
    if !matches!(id, CatalogId::Iv | CatalogId::CycleWithIv) {
        return Err(ClosedFormError::NeedsHidden(id));
    }
    if zxy.dim() != 3 {
        return Err(ClosedFormError::DimensionMismatch {
            graph: id,
            expected: 3,
            got: zxy.dim(),
        });
    }
    let full = [Some(0), None, Some(1), Some(2)];
    let rows: Vec<Vec<f64>> = full
        .iter()
        .map(|&i| {
            full.iter()
                .map(|&j| match (i, j) {
                    (Some(i), Some(j)) => zxy.get(i, j),
                    (None, None) => 1.0,
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    let sigma = CovarianceMatrix::from_rows(&rows).expect("block-diagonal padding keeps Σ positive definite");
    closed_form_check(id, &sigma)
}
