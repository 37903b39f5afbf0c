//! Generalized Gaussian packets and closed-form integrals over pairs of them.
//!
//! A packet is
//!
//! ```text
//! ψ(x) = exp(L) · exp(i p̃ (x − x̃)) · exp(−γ (x − x̃)² / 2),   Re γ > 0
//! ```
//!
//! with a complex log-prefactor `L`. All pair integrals reduce to a single complex
//! Gaussian `∫ exp(−A x²/2 + B x + C) x^k dx`; see `docs/derivations.md`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Highest polynomial power supported by [`moment`].
pub const MAX_MOMENT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedGaussian {
    /// Packet center x̃.
    pub center: f64,
    /// Mean momentum p̃.
    pub momentum: f64,
    /// Complex width γ.
    pub width: Complex64,
    /// log C. The real part carries the normalization, the imaginary part the global phase.
    pub log_prefactor: Complex64,
}

impl GeneralizedGaussian {
    /// Normalized packet with zero global phase.
    pub fn new(center: f64, momentum: f64, width: Complex64) -> Result<Self> {
        let g = Self {
            center,
            momentum,
            width,
            log_prefactor: Complex64::new(0.0, 0.0),
        };
        g.validate()?;
        Ok(g.normalize())
    }

    /// Normalized real-width packet, `(γ/π)^{1/4} e^{−γ(x−x̃)²/2}` when `momentum == 0`.
    pub fn real(center: f64, momentum: f64, width: f64) -> Result<Self> {
        Self::new(center, momentum, Complex64::new(width, 0.0))
    }

    pub fn with_log_prefactor(mut self, log_prefactor: Complex64) -> Self {
        self.log_prefactor = log_prefactor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center.is_finite()
            && self.momentum.is_finite()
            && self.width.re.is_finite()
            && self.width.im.is_finite()
            && self.log_prefactor.re.is_finite()
            && self.log_prefactor.im.is_finite())
        {
            return Err(Error::Domain(format!("non-finite packet field in {self:?}")));
        }
        if self.width.re <= 0.0 {
            return Err(Error::Domain(format!(
                "packet width must have positive real part, got {}",
                self.width
            )));
        }
        Ok(())
    }

    /// Re log C of the unit-norm packet with this width: `¼ ln(Re γ / π)`.
    pub fn normalized_log_amplitude(&self) -> f64 {
        0.25 * (self.width.re / PI).ln()
    }

    /// Same packet rescaled to unit norm; the global phase is kept.
    pub fn normalize(&self) -> Self {
        let mut g = *self;
        g.log_prefactor.re = self.normalized_log_amplitude();
        g
    }

    /// ⟨ψ|ψ⟩ in closed form: `e^{2 Re L} √(π / Re γ)`.
    pub fn norm_sq(&self) -> f64 {
        (2.0 * self.log_prefactor.re).exp() * (PI / self.width.re).sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() < 1e-10
    }

    /// Wavefunction value without argument checks.
    #[inline]
    pub fn amplitude(&self, x: f64) -> Complex64 {
        let d = x - self.center;
        (self.log_prefactor + I * (self.momentum * d) - self.width * (0.5 * d * d)).exp()
    }

    pub fn evaluate(&self, x: f64) -> Result<Complex64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("cannot evaluate packet at x = {x}")));
        }
        self.validate()?;
        Ok(self.amplitude(x))
    }

    /// Translate by `dx`: ψ(x) → ψ(x − dx).
    pub fn shift(&self, dx: f64) -> Self {
        Self {
            center: self.center + dx,
            ..*self
        }
    }

    /// Add `dp` to the mean momentum. Relative to multiplying by `e^{i dp x}` this
    /// differs only by the constant phase `e^{i dp x̃}`.
    pub fn boost(&self, dp: f64) -> Self {
        Self {
            momentum: self.momentum + dp,
            ..*self
        }
    }

    /// Mirror image ψ(−x).
    pub fn reflect(&self) -> Self {
        Self {
            center: -self.center,
            momentum: -self.momentum,
            ..*self
        }
    }
}

/// The complex Gaussian `exp(−A x²/2 + B x + C)` that results from `conj(a(x)) · b(x)`.
#[derive(Debug, Clone, Copy)]
struct PairGaussian {
    a: Complex64,
    mean: Complex64,
    /// log of `∫ exp(−A x²/2 + B x + C) dx`.
    log_integral: Complex64,
}

impl PairGaussian {
    fn new(bra: &GeneralizedGaussian, ket: &GeneralizedGaussian) -> Result<Self> {
        let ga = bra.width.conj();
        let gb = ket.width;
        let a = ga + gb;
        if a.re <= 0.0 {
            return Err(Error::Domain(format!("width sum {a} has non-positive real part")));
        }
        let b = ga * bra.center + gb * ket.center + I * (ket.momentum - bra.momentum);
        let c = -0.5 * ga * bra.center * bra.center - 0.5 * gb * ket.center * ket.center
            + I * (bra.momentum * bra.center - ket.momentum * ket.center)
            + bra.log_prefactor.conj()
            + ket.log_prefactor;
        // ∫ exp(−A x²/2 + B x) dx = √(2π/A) exp(B²/2A); principal root since Re A > 0.
        let log_integral = c + b * b / (2.0 * a) + 0.5 * (2.0 * PI / a).ln();
        Ok(Self {
            a,
            mean: b / a,
            log_integral,
        })
    }

    /// ⟨bra| x^k |ket⟩ for k = 0..=MAX_MOMENT.
    fn moments(&self) -> [Complex64; MAX_MOMENT + 1] {
        // Normalized moments of a complex Gaussian with mean B/A and variance 1/A:
        // m_k = μ m_{k−1} + (k−1)/A m_{k−2}.
        let var = self.a.inv();
        let base = self.log_integral.exp();
        let mut m = [Complex64::new(0.0, 0.0); MAX_MOMENT + 1];
        m[0] = Complex64::new(1.0, 0.0);
        m[1] = self.mean;
        for k in 2..=MAX_MOMENT {
            m[k] = self.mean * m[k - 1] + var * (k as f64 - 1.0) * m[k - 2];
        }
        m.map(|mk| mk * base)
    }
}

/// All moments ⟨a| x^k |b⟩, k = 0..=4, in one pass.
pub fn moments(a: &GeneralizedGaussian, b: &GeneralizedGaussian) -> Result<[Complex64; MAX_MOMENT + 1]> {
    Ok(PairGaussian::new(a, b)?.moments())
}

/// ⟨a|b⟩ = ∫ a*(x) b(x) dx.
pub fn overlap(a: &GeneralizedGaussian, b: &GeneralizedGaussian) -> Result<Complex64> {
    Ok(PairGaussian::new(a, b)?.log_integral.exp())
}

/// ⟨a| x^k |b⟩ for `k <= 4`.
pub fn moment(a: &GeneralizedGaussian, b: &GeneralizedGaussian, k: usize) -> Result<Complex64> {
    if k > MAX_MOMENT {
        return Err(Error::Argument(format!("moment order {k} outside 0..={MAX_MOMENT}")));
    }
    Ok(moments(a, b)?[k])
}

/// ⟨a| p²/2m |b⟩.
///
/// Uses `b'' = ((i p̃ − γ(x − x̃))² − γ) b`, so the element is a combination of the
/// zeroth to second moments.
pub fn kinetic_element(a: &GeneralizedGaussian, b: &GeneralizedGaussian, m: f64) -> Result<Complex64> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Argument(format!("mass must be positive, got {m}")));
    }
    let mom = moments(a, b)?;
    kinetic_from_moments(b, &mom, m)
}

pub(crate) fn kinetic_from_moments(
    ket: &GeneralizedGaussian,
    mom: &[Complex64; MAX_MOMENT + 1],
    m: f64,
) -> Result<Complex64> {
    let g = ket.width;
    // b'/b = u − γ x with u = i p̃ + γ x̃
    let u = I * ket.momentum + g * ket.center;
    let second = (u * u - g) * mom[0] - 2.0 * u * g * mom[1] + g * g * mom[2];
    Ok(-second / (2.0 * m))
}
