//! Brute-force reference solver on a uniform periodic grid.
//!
//! Real- and imaginary-time propagation use second-order (Strang) split-step with the
//! kinetic factor applied in momentum space. Eigenpairs come from dense diagonalization
//! of the same discretized Hamiltonian (spectral kinetic term), so Rayleigh quotients of
//! propagated states and the reported spectrum refer to one operator.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::packets::GeneralizedGaussian;
use crate::potentials::PotentialSpec;

/// Packets must be smaller than this at both grid edges.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;
/// Largest grid accepted by [`lowest_eigenpairs`].
pub const MAX_DENSE_POINTS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub dt: f64,
}

impl Default for GridSpec {
    /// `[−12, 12)` with 1024 points and `dt = 1e−3`.
    fn default() -> Self {
        Self {
            x_min: -12.0,
            x_max: 12.0,
            n_points: 1024,
            dt: 1e-3,
        }
    }
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize, dt: f64) -> Result<Self> {
        let s = Self {
            x_min,
            x_max,
            n_points,
            dt,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_max > self.x_min) {
            return Err(Error::Argument(format!(
                "grid bounds must satisfy x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.n_points < 16 {
            return Err(Error::Argument(format!(
                "grid needs at least 16 points, got {}",
                self.n_points
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Argument(format!("grid dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as isize;
        let dk = 2.0 * PI / (self.x_max - self.x_min);
        (0..n)
            .map(|q| if q < n / 2 { q as f64 * dk } else { (q - n) as f64 * dk })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub spec: GridSpec,
    pub amplitudes: Vec<Complex64>,
}

impl GridState {
    pub fn new(spec: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        spec.validate()?;
        if amplitudes.len() != spec.n_points {
            return Err(Error::Argument(format!(
                "expected {} amplitudes, got {}",
                spec.n_points,
                amplitudes.len()
            )));
        }
        Ok(Self { spec, amplitudes })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        spec.validate()?;
        let amplitudes = (0..spec.n_points).map(|j| f(spec.x(j))).collect();
        Ok(Self { spec, amplitudes })
    }

    /// Sample a packet and renormalize on the grid. Fails if the normalized packet is not
    /// negligible at the grid edges.
    pub fn from_packet(g: &GeneralizedGaussian, spec: GridSpec) -> Result<Self> {
        let mut s = Self::sample_packet(g, spec)?;
        s.normalize();
        Ok(s)
    }

    /// Sample a packet as is, keeping its own prefactor. Same edge check as
    /// [`GridState::from_packet`].
    pub fn sample_packet(g: &GeneralizedGaussian, spec: GridSpec) -> Result<Self> {
        g.validate()?;
        spec.validate()?;
        let unit = g.normalize();
        let edge = unit.amplitude(spec.x_min).norm().max(unit.amplitude(spec.x_max).norm());
        if edge >= BOUNDARY_TOLERANCE {
            return Err(Error::DomainTooSmall(format!(
                "packet at x = {} has amplitude {edge:e} at the edge of [{}, {}]",
                g.center, spec.x_min, spec.x_max
            )));
        }
        Self::from_fn(spec, |x| g.amplitude(x))
    }

    pub fn norm(&self) -> f64 {
        (self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spec.dx()).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.scale(1.0 / n);
        }
    }

    fn scale(&mut self, factor: f64) {
        for z in &mut self.amplitudes {
            *z *= factor;
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Argument(format!(
                "grid mismatch: {:?} vs {:?}",
                self.spec, other.spec
            )));
        }
        Ok(())
    }

    /// `Σ conj(a_j) b_j Δx`
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        let s: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.spec.dx())
    }

    pub fn l2_error(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let s: f64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.spec.dx()).sqrt())
    }

    pub fn expectation_x(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (j, z) in self.amplitudes.iter().enumerate() {
            let p = z.norm_sqr();
            num += self.spec.x(j) * p;
            den += p;
        }
        num / den
    }

    /// Probability mass on grid points satisfying `pred`, relative to the total.
    pub fn probability_where(&self, pred: impl Fn(f64) -> bool) -> f64 {
        let (mut inside, mut total) = (0.0, 0.0);
        for (j, z) in self.amplitudes.iter().enumerate() {
            let p = z.norm_sqr();
            total += p;
            if pred(self.spec.x(j)) {
                inside += p;
            }
        }
        inside / total
    }

    /// `H ψ` with the spectral kinetic term.
    pub fn apply_hamiltonian(&self, pot: &PotentialSpec) -> Result<Self> {
        pot.validate()?;
        let mut fft = SpectralOps::new(&self.spec);
        let m = pot.mass();
        let kinetic: Vec<Complex64> = fft.k.iter().map(|k| Complex64::new(k * k / (2.0 * m), 0.0)).collect();
        let mut t_psi = self.amplitudes.clone();
        fft.apply_in_momentum_space(&mut t_psi, &kinetic);
        let amplitudes = t_psi
            .iter()
            .zip(&self.amplitudes)
            .enumerate()
            .map(|(j, (t, z))| t + z * pot.value(self.spec.x(j)))
            .collect();
        Ok(Self {
            spec: self.spec,
            amplitudes,
        })
    }

    /// Rayleigh quotient `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn energy(&self, pot: &PotentialSpec) -> Result<f64> {
        let h = self.apply_hamiltonian(pot)?;
        Ok(self.inner(&h)?.re / self.inner(self)?.re)
    }
}

struct SpectralOps {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl SpectralOps {
    fn new(spec: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(spec.n_points);
        let inverse = planner.plan_fft_inverse(spec.n_points);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            k: spec.wavenumbers(),
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// ψ ← F⁻¹ diag(factor) F ψ with the normalized inverse transform.
    fn apply_in_momentum_space(&mut self, psi: &mut [Complex64], factor: &[Complex64]) {
        let n = psi.len() as f64;
        self.forward.process_with_scratch(psi, &mut self.scratch);
        for (z, f) in psi.iter_mut().zip(factor) {
            *z *= f / n;
        }
        self.inverse.process_with_scratch(psi, &mut self.scratch);
    }
}

/// Strang-split propagation with `n` equal substeps; `half_v`, `full_v` multiply in
/// position space and `kin` in momentum space.
fn split_step(
    psi: &mut [Complex64],
    ops: &mut SpectralOps,
    half_v: &[Complex64],
    full_v: &[Complex64],
    kin: &[Complex64],
    n: usize,
    mut after_step: impl FnMut(&mut [Complex64]) -> Result<()>,
) -> Result<()> {
    for (z, v) in psi.iter_mut().zip(half_v) {
        *z *= v;
    }
    for step in 0..n {
        ops.apply_in_momentum_space(psi, kin);
        let v = if step + 1 == n { half_v } else { full_v };
        for (z, f) in psi.iter_mut().zip(v) {
            *z *= f;
        }
        after_step(psi)?;
    }
    Ok(())
}

fn substeps(total: f64, dt: f64) -> usize {
    ((total / dt) - 1e-9).ceil().max(1.0) as usize
}

/// `e^{−iHt}ψ` by split-step. Fails with [`Error::StepSize`] if the norm drifts by more
/// than 1e−6.
pub fn evolve_real_time(s: &GridState, pot: &PotentialSpec, t_total: f64) -> Result<GridState> {
    pot.validate()?;
    if !(t_total >= 0.0 && t_total.is_finite()) {
        return Err(Error::Argument(format!("t_total must be non-negative, got {t_total}")));
    }
    let mut out = s.clone();
    if t_total == 0.0 {
        return Ok(out);
    }
    let n = substeps(t_total, s.spec.dt);
    let h = t_total / n as f64;
    let m = pot.mass();
    let xs = s.spec.points();
    let phase = |a: f64| Complex64::from_polar(1.0, a);
    let half_v: Vec<_> = xs.iter().map(|&x| phase(-pot.value(x) * h / 2.0)).collect();
    let full_v: Vec<_> = xs.iter().map(|&x| phase(-pot.value(x) * h)).collect();
    let mut ops = SpectralOps::new(&s.spec);
    let kin: Vec<_> = ops.k.iter().map(|k| phase(-k * k * h / (2.0 * m))).collect();

    let norm0 = s.norm();
    split_step(&mut out.amplitudes, &mut ops, &half_v, &full_v, &kin, n, |_| Ok(()))?;
    let drift = (out.norm() - norm0).abs() / norm0.max(f64::MIN_POSITIVE);
    if drift > 1e-6 || !drift.is_finite() {
        return Err(Error::StepSize(format!("norm drift {drift:e} after {n} steps of {h}")));
    }
    Ok(out)
}

/// `e^{−τH}ψ` by split-step in imaginary time. With `renormalize` the result has unit norm;
/// otherwise it keeps its true (decayed) norm.
pub fn evolve_imag_time(s: &GridState, pot: &PotentialSpec, tau: f64, renormalize: bool) -> Result<GridState> {
    pot.validate()?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Argument(format!("tau must be non-negative, got {tau}")));
    }
    let mut out = s.clone();
    if tau == 0.0 {
        if renormalize {
            out.normalize();
        }
        return Ok(out);
    }
    let n = substeps(tau, s.spec.dt);
    let h = tau / n as f64;
    let m = pot.mass();
    let xs = s.spec.points();
    let decay = |a: f64| Complex64::new((-a).exp(), 0.0);
    let half_v: Vec<_> = xs.iter().map(|&x| decay(pot.value(x) * h / 2.0)).collect();
    let full_v: Vec<_> = xs.iter().map(|&x| decay(pot.value(x) * h)).collect();
    let mut ops = SpectralOps::new(&s.spec);
    let kin: Vec<_> = ops.k.iter().map(|k| decay(k * k * h / (2.0 * m))).collect();

    // Rescale every step and carry the log of the discarded norm.
    let dx = s.spec.dx();
    let mut log_norm = 0.0f64;
    split_step(&mut out.amplitudes, &mut ops, &half_v, &full_v, &kin, n, |psi| {
        let nrm = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt();
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(Error::DecayUnderflow(nrm));
        }
        for z in psi.iter_mut() {
            *z /= nrm;
        }
        log_norm += nrm.ln();
        Ok(())
    })?;
    if !renormalize {
        if log_norm < (1e-300f64).ln() {
            return Err(Error::DecayUnderflow(log_norm.exp()));
        }
        out.scale(log_norm.exp());
    }
    Ok(out)
}

/// The `k` lowest eigenpairs of the discretized Hamiltonian, eigenvectors normalized on
/// the grid with the first dominant component made positive.
pub fn lowest_eigenpairs(pot: &PotentialSpec, spec: &GridSpec, k: usize) -> Result<Vec<(f64, GridState)>> {
    pot.validate()?;
    spec.validate()?;
    let n = spec.n_points;
    if k == 0 || k > n / 8 {
        return Err(Error::Argument(format!(
            "requested {k} eigenpairs; need 1 ≤ k ≤ {}",
            n / 8
        )));
    }
    if n > MAX_DENSE_POINTS {
        return Err(Error::Argument(format!(
            "dense diagonalization limited to {MAX_DENSE_POINTS} points, got {n}"
        )));
    }
    let h = dense_hamiltonian(pot, spec);
    let (values, vectors) = symmetric_eigen(h);
    let dx = spec.dx();
    Ok((0..k)
        .map(|col| {
            let v = vectors.column(col);
            let peak = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let lead = v.iter().find(|x| x.abs() > 0.5 * peak).copied().unwrap_or(1.0);
            let sign = lead.signum() / dx.sqrt();
            let amplitudes = v.iter().map(|&x| Complex64::new(x * sign, 0.0)).collect();
            (
                values[col],
                GridState {
                    spec: *spec,
                    amplitudes,
                },
            )
        })
        .collect())
}

/// Real symmetric matrix of `p²/2m + V` on the grid. The spectral kinetic operator is
/// circulant with first row `(1/N) Σ_q k_q²/2m cos(k_q d Δx)`.
pub fn dense_hamiltonian(pot: &PotentialSpec, spec: &GridSpec) -> DMatrix<f64> {
    let n = spec.n_points;
    let m = pot.mass();
    let k = spec.wavenumbers();
    let dx = spec.dx();
    let row: Vec<f64> = (0..n)
        .map(|d| {
            k.iter()
                .map(|&kq| kq * kq / (2.0 * m) * (kq * d as f64 * dx).cos())
                .sum::<f64>()
                / n as f64
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let d = (i + n - j) % n;
        let diag = if i == j { pot.value(spec.x(i)) } else { 0.0 };
        row[d] + diag
    })
}
