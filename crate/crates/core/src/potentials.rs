//! Polynomial potentials and their Gaussian-averaged local quadratic models.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::packets::GeneralizedGaussian;

/// One of the supported one-dimensional potentials, each with its particle mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    Free {
        m: f64,
    },
    /// `m ω² x² / 2`
    Harmonic {
        m: f64,
        omega: f64,
    },
    /// `λ x⁴`
    Quartic {
        m: f64,
        lambda: f64,
    },
    /// `λ (x² − f²)²`
    DoubleWell {
        m: f64,
        lambda: f64,
        f: f64,
    },
}

impl PotentialSpec {
    pub fn free(m: f64) -> Result<Self> {
        Self::Free { m }.validated()
    }

    pub fn harmonic(m: f64, omega: f64) -> Result<Self> {
        Self::Harmonic { m, omega }.validated()
    }

    pub fn quartic(m: f64, lambda: f64) -> Result<Self> {
        Self::Quartic { m, lambda }.validated()
    }

    pub fn double_well(m: f64, lambda: f64, f: f64) -> Result<Self> {
        Self::DoubleWell { m, lambda, f }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("m", self.mass())?;
        match *self {
            Self::Free { .. } => Ok(()),
            Self::Harmonic { omega, .. } => positive("omega", omega),
            Self::Quartic { lambda, .. } => positive("lambda", lambda),
            Self::DoubleWell { lambda, f, .. } => {
                positive("lambda", lambda)?;
                positive("f", f)
            }
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            Self::Free { m } | Self::Harmonic { m, .. } | Self::Quartic { m, .. } | Self::DoubleWell { m, .. } => m,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Free { .. } => "free",
            Self::Harmonic { .. } => "harmonic",
            Self::Quartic { .. } => "quartic",
            Self::DoubleWell { .. } => "double_well",
        }
    }

    /// Power-series coefficients `c_k` of `V(x) = Σ c_k x^k`, k = 0..=4.
    pub fn coefficients(&self) -> [f64; 5] {
        match *self {
            Self::Free { .. } => [0.0; 5],
            Self::Harmonic { m, omega } => [0.0, 0.0, 0.5 * m * omega * omega, 0.0, 0.0],
            Self::Quartic { lambda, .. } => [0.0, 0.0, 0.0, 0.0, lambda],
            Self::DoubleWell { lambda, f, .. } => {
                let f2 = f * f;
                [lambda * f2 * f2, 0.0, -2.0 * lambda * f2, 0.0, lambda]
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            // Factored form keeps the minima at exactly zero.
            Self::DoubleWell { lambda, f, .. } => {
                let s = x * x - f * f;
                lambda * s * s
            }
            _ => horner(&self.coefficients(), x),
        }
    }

    /// First or second derivative.
    pub fn derivative(&self, x: f64, order: u8) -> Result<f64> {
        let mut c = self.coefficients();
        match order {
            1 => {}
            2 => c = differentiate(&c),
            _ => return Err(Error::Argument(format!("derivative order must be 1 or 2, got {order}"))),
        }
        Ok(horner(&differentiate(&c), x))
    }

    /// `(⟨V⟩, ⟨V'⟩, ⟨V''⟩)` over `|φ(y)|² ∝ exp(−γ_r y²)` evaluated at `x = center + y`,
    /// i.e. against a real Gaussian of variance `1 / (2γ_r)`.
    pub fn gaussian_averages(&self, center: f64, width_re: f64) -> (f64, f64, f64) {
        let var = 0.5 / width_re;
        let c0 = self.coefficients();
        let c1 = differentiate(&c0);
        let c2 = differentiate(&c1);
        (
            gaussian_average(&c0, center, var),
            gaussian_average(&c1, center, var),
            gaussian_average(&c2, center, var),
        )
    }
}

fn horner(c: &[f64; 5], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

fn differentiate(c: &[f64; 5]) -> [f64; 5] {
    let mut d = [0.0; 5];
    for k in 1..5 {
        d[k - 1] = k as f64 * c[k];
    }
    d
}

/// `E[p(center + y)]` for `y ~ N(0, var)`. Uses the Taylor expansion about `center`:
/// only even orders survive, with `E[y²] = var` and `E[y⁴] = 3 var²`.
fn gaussian_average(c: &[f64; 5], center: f64, var: f64) -> f64 {
    let d1 = differentiate(c);
    let d2 = differentiate(&d1);
    let d3 = differentiate(&d2);
    let d4 = differentiate(&d3);
    horner(c, center) + 0.5 * var * horner(&d2, center) + (3.0 / 24.0) * var * var * horner(&d4, center)
}

/// Local quadratic model `p²/2m + V_n − F_n (x − x_n) + ½ m ω_n² ((x − x_n)² − σ²)` fitted
/// to a packet at `(x_n, p_n)`.
///
/// `V_n`, `F_n` and `m ω_n²` are averages of `V`, `−V'` and `V''` over the real-width
/// Gaussian of variance `σ² = 1/(2 Re γ)`. The `−σ²` offset in the quadratic term makes the
/// model's own average equal `V_n`, so the model is exact for harmonic potentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveQuadraticParams {
    pub x_n: f64,
    pub p_n: f64,
    pub v_n: f64,
    pub f_n: f64,
    /// `m ω_n²`; negative where the averaged potential is locally concave.
    pub curvature: f64,
    pub m: f64,
    /// σ² of the averaging Gaussian.
    pub variance: f64,
}

impl EffectiveQuadraticParams {
    /// ω_n, real for convex and purely imaginary for concave local fits.
    pub fn omega(&self) -> Complex64 {
        Complex64::new(self.curvature / self.m, 0.0).sqrt()
    }

    /// ω_n², always real.
    pub fn omega_sq(&self) -> f64 {
        self.curvature / self.m
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.x_n,
            self.p_n,
            self.v_n,
            self.f_n,
            self.curvature,
            self.m,
            self.variance,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("non-finite effective parameters {self:?}")));
        }
        if self.m <= 0.0 {
            return Err(Error::Argument(format!("mass must be positive, got {}", self.m)));
        }
        if self.variance < 0.0 {
            return Err(Error::Argument(format!("negative variance {}", self.variance)));
        }
        Ok(())
    }

    /// Constant term of the model once the `−σ²` offset is folded in.
    pub fn offset_energy(&self) -> f64 {
        self.v_n - 0.5 * self.curvature * self.variance
    }
}

/// Fit the local quadratic model of `pot` around packet `g`.
///
/// The averages use `Re γ` only, so every returned coefficient is real even for complex γ.
/// For `λx⁴` this gives `V_n = λx_n⁴ + 3λx_n²/γ + 3λ/(4γ²)`, `F_n = −4λx_n³ − 6λx_n/γ`,
/// `m ω_n² = 12λx_n² + 6λ/γ` with `γ = Re γ`. Note the middle term of `V_n` is
/// quadratic in `x_n`, not quartic: it comes from `6 x_n² ⟨y²⟩` in `⟨(x_n + y)⁴⟩`.
pub fn effective_quadratic(pot: &PotentialSpec, g: &GeneralizedGaussian) -> Result<EffectiveQuadraticParams> {
    pot.validate()?;
    g.validate()?;
    let width_re = g.width.re;
    let (v, dv, d2v) = pot.gaussian_averages(g.center, width_re);
    Ok(EffectiveQuadraticParams {
        x_n: g.center,
        p_n: g.momentum,
        v_n: v,
        f_n: -dv,
        curvature: d2v,
        m: pot.mass(),
        variance: 0.5 / width_re,
    })
}
