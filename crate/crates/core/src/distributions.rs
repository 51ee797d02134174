//! Closed-form marginal laws of LASSO estimates.
//!
//! For an orthogonal model each `x̂_k` is a soft-thresholded Gaussian: an atom
//! at zero plus two Gaussian branches shifted by `∓τ`. The same split form,
//! with location `w_kᵀx` and variance `σ² w_kk`, approximates the law of
//! `ẑ_k = (W x̂)_k` for the components carrying large coefficients.
//!
//! The transformed density is normalised by `√(2πσ²w_kk)` and its exponent is
//! divided by `2σ²w_kk`, matching the Gaussian slice `exp(−u²σ²w_kk/2)`.
//! Dividing by `2σ²` alone would only be consistent when `w_kk = 1`.

use serde::{Deserialize, Serialize};

use crate::normal::{self, std_cdf};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    /// `x̂_k` under `W = I`.
    OrthogonalComponent,
    /// `ẑ_k = (W x̂)_k` for a general Gram matrix.
    TransformedComponent,
    /// The `τ = 0` (least-squares) estimate: a plain Gaussian.
    MlComponent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalLaw {
    pub kind: LawKind,
    /// `x_k`, or `w_kᵀx` for transformed components.
    pub location: f64,
    /// `σ²`, or `σ² w_kk` for transformed components.
    pub scale2: f64,
    pub tau: f64,
}

impl MarginalLaw {
    pub fn orthogonal(x_k: f64, sigma: f64, tau: f64) -> Result<Self> {
        Self::checked(LawKind::OrthogonalComponent, x_k, sigma * sigma, tau)
    }

    pub fn transformed(wk_dot_x: f64, sigma: f64, w_kk: f64, tau: f64) -> Result<Self> {
        if w_kk.is_nan() || w_kk <= 0.0 {
            return Err(Error::InvalidLaw(format!("w_kk must be positive, got {w_kk}")));
        }
        Self::checked(LawKind::TransformedComponent, wk_dot_x, sigma * sigma * w_kk, tau)
    }

    pub fn ml(location: f64, scale2: f64) -> Result<Self> {
        Self::checked(LawKind::MlComponent, location, scale2, 0.0)
    }

    fn checked(kind: LawKind, location: f64, scale2: f64, tau: f64) -> Result<Self> {
        if !(scale2 > 0.0 && scale2.is_finite()) {
            return Err(Error::InvalidLaw(format!("variance must be positive and finite, got {scale2}")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidLaw(format!("tau must be finite and >= 0, got {tau}")));
        }
        if !location.is_finite() {
            return Err(Error::InvalidLaw(format!("location must be finite, got {location}")));
        }
        Ok(Self { kind, location, scale2, tau })
    }

    /// Validates a law read from an external source.
    pub fn validate(&self) -> Result<()> {
        Self::checked(self.kind, self.location, self.scale2, self.tau).map(|_| ())
    }

    fn sd(&self) -> f64 {
        self.scale2.sqrt()
    }

    /// Density at `v ≠ 0`, dispatching on the kind.
    pub fn pdf(&self, v: f64) -> Result<f64> {
        match self.kind {
            LawKind::OrthogonalComponent => pdf_orthogonal(v, self),
            LawKind::TransformedComponent => pdf_transformed(v, self),
            LawKind::MlComponent => pdf_ml(v, self),
        }
    }

    fn split_pdf(&self, v: f64) -> Result<f64> {
        if v == 0.0 {
            return Err(Error::InvalidParameter(
                "the density is not defined at 0; use point_mass_zero for the atom".into(),
            ));
        }
        let shift = if v > 0.0 { self.tau } else { -self.tau };
        Ok(normal::pdf(v + shift, self.location, self.scale2))
    }

    /// Probability missing from the split density, carried by the atom at 0.
    pub fn point_mass_zero(&self) -> f64 {
        match self.kind {
            LawKind::MlComponent => 0.0,
            _ => {
                let sd = self.sd();
                let upper = std_cdf((self.tau - self.location) / sd);
                let lower = std_cdf((-self.tau - self.location) / sd);
                (upper - lower).max(0.0)
            }
        }
    }

    /// Right-continuous CDF including the atom at 0.
    pub fn cdf(&self, v: f64) -> f64 {
        let sd = self.sd();
        match self.kind {
            LawKind::MlComponent => std_cdf((v - self.location) / sd),
            _ => {
                if v < 0.0 {
                    std_cdf((v - self.location - self.tau) / sd)
                } else {
                    std_cdf((v - self.location + self.tau) / sd)
                }
            }
        }
    }

    /// CDF of the law conditioned on `v ≠ 0`.
    pub fn conditional_cdf(&self, v: f64) -> f64 {
        let atom = self.point_mass_zero();
        let jump = if v >= 0.0 { atom } else { 0.0 };
        ((self.cdf(v) - jump) / (1.0 - atom)).clamp(0.0, 1.0)
    }

    /// Density conditioned on `v ≠ 0`.
    pub fn conditional_pdf(&self, v: f64) -> Result<f64> {
        Ok(self.pdf(v)? / (1.0 - self.point_mass_zero()))
    }
}

/// Soft-thresholded Gaussian density of an orthogonal-model component.
pub fn pdf_orthogonal(v: f64, law: &MarginalLaw) -> Result<f64> {
    expect_kind(law, LawKind::OrthogonalComponent)?;
    law.split_pdf(v)
}

/// Approximate density of `ẑ_k` with variance `σ² w_kk` in both the
/// normaliser and the exponent.
pub fn pdf_transformed(v: f64, law: &MarginalLaw) -> Result<f64> {
    expect_kind(law, LawKind::TransformedComponent)?;
    law.split_pdf(v)
}

pub fn pdf_ml(v: f64, law: &MarginalLaw) -> Result<f64> {
    expect_kind(law, LawKind::MlComponent)?;
    Ok(normal::pdf(v, law.location, law.scale2))
}

/// `Φ((τ − x_k)/σ) − Φ((−τ − x_k)/σ)`.
pub fn point_mass_zero(law: &MarginalLaw) -> Result<f64> {
    expect_kind(law, LawKind::OrthogonalComponent)?;
    Ok(law.point_mass_zero())
}

pub fn cdf_orthogonal(v: f64, law: &MarginalLaw) -> Result<f64> {
    expect_kind(law, LawKind::OrthogonalComponent)?;
    Ok(law.cdf(v))
}

fn expect_kind(law: &MarginalLaw, kind: LawKind) -> Result<()> {
    if law.kind != kind {
        return Err(Error::InvalidLaw(format!("expected a {kind:?} law, got {:?}", law.kind)));
    }
    Ok(())
}
