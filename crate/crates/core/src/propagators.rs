//! Exact time evolution of generalized Gaussians under quadratic Hamiltonians.
//!
//! Every Hamiltonian handled here has the form
//!
//! ```text
//! H = p²/2m + V₀ − F (x − x₀) + ½ k (x − x₀)²
//! ```
//!
//! with real `k` of either sign. Its classical flow is linear, so a Gaussian stays a
//! Gaussian: the center and momentum follow the classical trajectory, the width follows
//! the Möbius map `γ' = (γD − iC) / (A + iγB)` of the flow matrix `[[A, B], [C, D]]`,
//! and the log-prefactor picks up `−½ log(A + iγB)` plus `i` times the classical action.
//! Derivation in `docs/derivations.md`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::packets::GeneralizedGaussian;
use crate::potentials::EffectiveQuadraticParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `p²/2m + offset − force·(x − origin) + ½ curvature·(x − origin)²`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticHamiltonian {
    pub mass: f64,
    pub origin: f64,
    pub offset: f64,
    pub force: f64,
    pub curvature: f64,
}

impl QuadraticHamiltonian {
    pub fn free(mass: f64) -> Result<Self> {
        Self {
            mass,
            origin: 0.0,
            offset: 0.0,
            force: 0.0,
            curvature: 0.0,
        }
        .validated()
    }

    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Argument(format!("omega must be positive, got {omega}")));
        }
        Self {
            mass,
            origin: 0.0,
            offset: 0.0,
            force: 0.0,
            curvature: mass * omega * omega,
        }
        .validated()
    }

    /// The local quadratic model described by `params`.
    pub fn effective(params: &EffectiveQuadraticParams) -> Result<Self> {
        params.validate()?;
        Self {
            mass: params.m,
            origin: params.x_n,
            offset: params.offset_energy(),
            force: params.f_n,
            curvature: params.curvature,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Argument(format!("mass must be positive, got {}", self.mass)));
        }
        if ![self.origin, self.offset, self.force, self.curvature]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::Argument(format!("non-finite Hamiltonian {self:?}")));
        }
        Ok(self)
    }

    /// Classical energy of the phase-space point `(x, p)`.
    pub fn energy(&self, x: f64, p: f64) -> f64 {
        let y = x - self.origin;
        p * p / (2.0 * self.mass) + self.offset - self.force * y + 0.5 * self.curvature * y * y
    }

    /// Classical phase-space point after time `t`, and the action `∫ (p ẋ − H) dt` along it.
    pub fn classical_flow(&self, x: f64, p: f64, t: f64) -> (f64, f64, f64) {
        let fl = FlowFunctions::new(self.curvature / self.mass, t);
        let m = self.mass;
        let (k, f) = (self.curvature, self.force);
        let y0 = x - self.origin;
        let y = fl.c * y0 + fl.s * p / m + fl.cm * f / m;
        let pt = -k * fl.s * y0 + fl.c * p + f * fl.s;
        // 2L = d(py)/dt + F y − 2V₀ for this Hamiltonian.
        let y_integral = y0 * fl.s + p / m * fl.cm + f / m * fl.cm3;
        let action = 0.5 * (pt * y - p * y0) + 0.5 * f * y_integral - self.offset * t;
        (self.origin + y, pt, action)
    }

    /// Exact `e^{−iHt}` applied to a packet.
    pub fn evolve(&self, g: &GeneralizedGaussian, t: f64) -> Result<GeneralizedGaussian> {
        g.validate()?;
        if !t.is_finite() {
            return Err(Error::Argument(format!("non-finite time {t}")));
        }
        let w = self.curvature / self.mass;
        let fl = FlowFunctions::new(w, t);
        let (a, b) = (fl.c, fl.s / self.mass);
        let (c, d) = (-self.curvature * fl.s, fl.c);

        let denom = a + I * g.width * b;
        let width = (g.width * d - I * c) / denom;
        let (center, momentum, action) = self.classical_flow(g.center, g.momentum, t);
        let log_prefactor = g.log_prefactor - 0.5 * unwrapped_log(denom, w, t) + I * action;

        let out = GeneralizedGaussian {
            center,
            momentum,
            width,
            log_prefactor,
        };
        out.validate()?;
        Ok(out)
    }
}

/// `log z` on the branch that is continuous in `t` along the curve `z(t) = A + iγB`.
///
/// For real frequency the curve winds once per half period and passes through `±1` at
/// `ωt = nπ`, so its argument stays within π of `ωt`. Otherwise `Im z` has the sign of `t`
/// and the principal branch is already continuous.
fn unwrapped_log(z: Complex64, w: f64, t: f64) -> Complex64 {
    let mut l = z.ln();
    if w > 0.0 {
        let reference = w.sqrt() * t;
        let turns = ((reference - l.im) / std::f64::consts::TAU).round();
        l.im += turns * std::f64::consts::TAU;
    }
    l
}

/// The entire functions of `w = k/m` that build the flow of a (possibly inverted or
/// flat) oscillator over time `t`:
/// `c = cos √w t`, `s = sin(√w t)/√w`, `cm = (1 − c)/w`, `cm3 = (t − s)/w`.
#[derive(Debug, Clone, Copy)]
struct FlowFunctions {
    c: f64,
    s: f64,
    cm: f64,
    cm3: f64,
}

impl FlowFunctions {
    fn new(w: f64, t: f64) -> Self {
        let z = w * t * t;
        if z.abs() <= 1.0 {
            // Power series in −z; 20 terms are far past double precision for |z| ≤ 1.
            let mut sums = [0.0f64; 4];
            for (offset, sum) in sums.iter_mut().enumerate() {
                let mut term = 1.0 / factorial(offset);
                let mut n = 0usize;
                while n < 20 {
                    *sum += term;
                    let j = 2 * n + offset;
                    term *= -z / ((j + 1) as f64 * (j + 2) as f64);
                    n += 1;
                }
            }
            Self {
                c: sums[0],
                s: t * sums[1],
                cm: t * t * sums[2],
                cm3: t * t * t * sums[3],
            }
        } else if w > 0.0 {
            let om = w.sqrt();
            let (sn, cs) = (om * t).sin_cos();
            let s = sn / om;
            Self {
                c: cs,
                s,
                cm: (1.0 - cs) / w,
                cm3: (t - s) / w,
            }
        } else {
            let kappa = (-w).sqrt();
            let c = (kappa * t).cosh();
            let s = (kappa * t).sinh() / kappa;
            Self {
                c,
                s,
                cm: (1.0 - c) / w,
                cm3: (t - s) / w,
            }
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Free particle: `γ(t) = γ / (1 + iγt/m)`, center moves with velocity `p̃/m`.
pub fn free_evolve(g: &GeneralizedGaussian, m: f64, t: f64) -> Result<GeneralizedGaussian> {
    QuadraticHamiltonian::free(m)?.evolve(g, t)
}

/// Harmonic oscillator `p²/2m + mω²x²/2`. A packet with `γ = mω` only acquires `e^{−iωt/2}`
/// (plus the classical action when displaced).
pub fn harmonic_evolve(g: &GeneralizedGaussian, m: f64, omega: f64, t: f64) -> Result<GeneralizedGaussian> {
    QuadraticHamiltonian::harmonic(m, omega)?.evolve(g, t)
}

/// One step of the local quadratic model: evolve `g` for `dt` under the Hamiltonian
/// described by `params`. With `renormalize` the real part of the log-prefactor is reset to
/// the unit-norm value afterwards.
///
/// Imaginary `ω_n` (negative curvature) is handled by the hyperbolic continuation of the
/// flow; `ω_n → 0` by the series form.
pub fn driven_harmonic_step(
    g: &GeneralizedGaussian,
    params: &EffectiveQuadraticParams,
    dt: f64,
    renormalize: bool,
) -> Result<GeneralizedGaussian> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Argument(format!("step dt must be positive, got {dt}")));
    }
    let out = QuadraticHamiltonian::effective(params)?.evolve(g, dt)?;
    Ok(if renormalize { out.normalize() } else { out })
}

/// Point on a classical trajectory. `action_phase` is `p(t)·x(t)`, the exponent of the
/// phase that moves to the front when the packet's plane-wave factor is referenced to its
/// own center; `action` is `∫ (p ẋ − H) dt` from 0 to `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPoint {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub action_phase: f64,
    pub action: f64,
}

/// Classical motion in `mω²x²/2` (free motion when `omega == 0`).
pub fn coherent_trajectory(x0: f64, p0: f64, m: f64, omega: f64, t: f64) -> Result<ClassicalPoint> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::Argument(format!("omega must be non-negative, got {omega}")));
    }
    let h = if omega == 0.0 {
        QuadraticHamiltonian::free(m)?
    } else {
        QuadraticHamiltonian::harmonic(m, omega)?
    };
    let (x, p, action) = h.classical_flow(x0, p0, t);
    Ok(ClassicalPoint {
        t,
        x,
        p,
        action_phase: p * x,
        action,
    })
}
