//! Double-well tunneling: self-consistent stationary Gaussians, the Euclidean bounce
//! between them, instanton-augmented bases and the imaginary-time smoothed Hamiltonian.

use num_complex::Complex64;

use crate::brigade::{significant_subspace_of, EffectiveHamiltonian, HERMITICITY_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, hermitize, max_abs, CMatrix, CVector};
use crate::oracle::{evolve_imag_time, GridSpec, GridState};
use crate::packets::GeneralizedGaussian;
use crate::potentials::PotentialSpec;

const MAX_FIXED_POINT_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WellSide {
    Left,
    Right,
}

/// A Gaussian that the local quadratic model leaves at rest: zero averaged force and
/// width equal to `m ω_eff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryWell {
    pub center: f64,
    pub width: f64,
    pub side: WellSide,
}

impl StationaryWell {
    pub fn packet(&self) -> GeneralizedGaussian {
        GeneralizedGaussian {
            center: self.center,
            momentum: 0.0,
            width: Complex64::new(self.width, 0.0),
            log_prefactor: Complex64::new(0.0, 0.0),
        }
        .normalize()
    }

    /// `⟨V'(x + center)⟩` over the packet density.
    pub fn force_residual(&self, pot: &PotentialSpec) -> f64 {
        pot.gaussian_averages(self.center, self.width).1
    }

    /// `γ − √(m ⟨V''⟩)`.
    pub fn width_residual(&self, pot: &PotentialSpec) -> f64 {
        let (_, _, curv) = pot.gaussian_averages(self.center, self.width);
        self.width - (pot.mass() * curv).sqrt()
    }
}

fn double_well_params(pot: &PotentialSpec) -> Result<(f64, f64, f64)> {
    pot.validate()?;
    match *pot {
        PotentialSpec::DoubleWell { m, lambda, f } => Ok((m, lambda, f)),
        _ => Err(Error::Argument(format!(
            "expected a double-well potential, got {}",
            pot.kind()
        ))),
    }
}

/// Mirror pair of stationary Gaussians, left first.
///
/// Zero averaged force puts the center at `x̃² = f² − 3/(2γ)`; substituting into
/// `γ² = m ⟨V''⟩` leaves `γ = √(mλ(8f² − 12/γ))`, solved by damped fixed-point iteration
/// from the harmonic-well width and polished with Newton on `γ³ − 8mλf²γ + 12mλ = 0`.
pub fn find_stationary_gaussians(pot: &PotentialSpec) -> Result<(StationaryWell, StationaryWell)> {
    let (m, lambda, f) = double_well_params(pot)?;
    let a = 8.0 * m * lambda * f * f;
    let b = 12.0 * m * lambda;
    let update = |g: f64| -> Result<f64> {
        let rhs = a - b / g;
        if !(rhs > 0.0) {
            return Err(Error::NoStationarySolution(format!(
                "averaged curvature vanishes at γ = {g}; wells too shallow"
            )));
        }
        Ok(rhs.sqrt())
    };

    let mut gamma = a.sqrt();
    let damping = 0.5;
    let mut converged = false;
    for _ in 0..MAX_FIXED_POINT_ITERATIONS {
        let next = (1.0 - damping) * gamma + damping * update(gamma)?;
        let step = (next - gamma).abs();
        gamma = next;
        if step <= 1e-14 * gamma {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoStationarySolution(format!(
            "fixed-point iteration did not converge in {MAX_FIXED_POINT_ITERATIONS} iterations"
        )));
    }
    for _ in 0..3 {
        let poly = gamma * gamma * gamma - a * gamma + b;
        let slope = 3.0 * gamma * gamma - a;
        if slope.abs() > 0.0 {
            gamma -= poly / slope;
        }
    }
    let c2 = f * f - 1.5 / gamma;
    if !(c2 > 0.0) || !gamma.is_finite() {
        return Err(Error::NoStationarySolution(format!(
            "x̃² = f² − 3/(2γ) = {c2} is not positive"
        )));
    }
    let c = c2.sqrt();
    let right = StationaryWell {
        center: c,
        width: gamma,
        side: WellSide::Right,
    };
    let left = StationaryWell {
        center: -c,
        width: gamma,
        side: WellSide::Left,
    };
    Ok((left, right))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantonSample {
    pub tau: f64,
    pub x: f64,
    /// `m dx/dτ`
    pub p: f64,
}

/// Euclidean bounce `m d²x/dτ² = V'(x) = 4λx(x² − f²)` from rest at `−c` to rest at `+c`.
///
/// `τ(x)` comes from energy conservation, `dτ = dx / √((2/m)(V(x) − V(c)))`, integrated
/// after the substitution `x = −c + u²` which removes the turning-point singularity. The
/// second half follows from `x(τ_total − τ) = −x(τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstantonPath {
    pub samples: Vec<InstantonSample>,
    /// Turning-point offset `c` (so the path runs from `−c` to `+c`).
    pub c_min: f64,
    /// Distance from each turning point to the first/last sample.
    pub endpoint_offset: f64,
    /// Bounce duration from `−c` to `+c`.
    pub tau_total: f64,
    m: f64,
    lambda: f64,
    f: f64,
    quad: GaussLegendre,
}

impl InstantonPath {
    /// Conserved `½ m (dx/dτ)² − V(x)`, equal to `−V(c)`.
    pub fn euclidean_energy(&self) -> f64 {
        let s = self.c_min * self.c_min - self.f * self.f;
        -self.lambda * s * s
    }

    pub fn potential(&self, x: f64) -> f64 {
        let s = x * x - self.f * self.f;
        self.lambda * s * s
    }

    /// `(2/m)(V(−c + s) − V(c))` written so that it stays accurate for small `s`.
    fn kinetic_sq(&self, s: f64) -> f64 {
        let c = self.c_min;
        let f2 = self.f * self.f;
        // (x² − c²)(x² + c² − 2f²) with x = −c + s.
        let a = s * (s - 2.0 * c);
        let b = (s - c) * (s - c) + c * c - 2.0 * f2;
        2.0 * self.lambda * a * b / self.m
    }

    /// `dτ/du` along `x = −c + u²`, regular at `u = 0`.
    fn dtau_du(&self, u: f64) -> f64 {
        let c = self.c_min;
        let f2 = self.f * self.f;
        let s = u * u;
        let q = (2.0 * c - s) * (2.0 * f2 - c * c - (s - c) * (s - c));
        2.0 / (2.0 * self.lambda * q / self.m).sqrt()
    }

    /// `τ` at `x = −c + u²`, for `0 ≤ u ≤ √c` (left half of the path).
    fn tau_of_u(&self, u: f64) -> f64 {
        self.quad.integrate(|v| self.dtau_du(v), 0.0, u, 8)
    }

    /// Bounce time at which the path passes `x` (`|x| < c`).
    pub fn tau_at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.tau_of_u((x + self.c_min).max(0.0).sqrt())
        } else {
            self.tau_total - self.tau_at(-x)
        }
    }

    /// Position at Euclidean time `τ`, extended past the turning points by reflection
    /// (`x(−τ) = x(τ)`).
    pub fn position_at(&self, tau: f64) -> f64 {
        let period = 2.0 * self.tau_total;
        let mut t = tau.rem_euclid(period);
        if t > self.tau_total {
            t = period - t;
        }
        let half = 0.5 * self.tau_total;
        if t <= half {
            -self.c_min + self.u_at(t).powi(2)
        } else {
            self.c_min - self.u_at(self.tau_total - t).powi(2)
        }
    }

    /// Invert `τ(u)` on the left half by safeguarded Newton.
    fn u_at(&self, tau: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.c_min.sqrt());
        let mut u = hi * (tau / (0.5 * self.tau_total)).clamp(0.0, 1.0);
        for _ in 0..100 {
            let r = self.tau_of_u(u) - tau;
            if r > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let mut next = u - r / self.dtau_du(u);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() <= 1e-16 * hi.max(1.0) {
                return next;
            }
            u = next;
        }
        u
    }

    /// Fourth-order finite-difference residual of `m x'' − 4λx(x² − f²)` at each sample.
    pub fn ode_residuals(&self, h: f64) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| {
                let x = |k: f64| self.position_at(s.tau + k * h);
                let second = (-x(-2.0) + 16.0 * x(-1.0) - 30.0 * x(0.0) + 16.0 * x(1.0) - x(2.0)) / (12.0 * h * h);
                self.m * second - 4.0 * self.lambda * s.x * (s.x * s.x - self.f * self.f)
            })
            .collect()
    }

    /// `½ m ẋ² − V(x) − E` at each sample, with `ẋ` from fourth-order finite differences
    /// of [`InstantonPath::position_at`].
    pub fn energy_residuals(&self, h: f64) -> Vec<f64> {
        let e = self.euclidean_energy();
        self.samples
            .iter()
            .map(|s| {
                let x = |k: f64| self.position_at(s.tau + k * h);
                let v = (x(-2.0) - 8.0 * x(-1.0) + 8.0 * x(1.0) - x(2.0)) / (12.0 * h);
                0.5 * self.m * v * v - self.potential(s.x) - e
            })
            .collect()
    }
}

/// Sample the bounce starting at `well.center` at `n_samples` points uniform in `x`.
pub fn instanton_trajectory(pot: &PotentialSpec, well: &StationaryWell, n_samples: usize) -> Result<InstantonPath> {
    instanton_from(pot, well.center.abs(), n_samples)
}

/// Bounce between turning points `∓c_min`.
///
/// The first and last samples sit `δ` inside the turning points, with `δ` chosen so that
/// `V(−c + δ) − V(c) = 1e−8 · (V(0) − V(c))`.
pub fn instanton_from(pot: &PotentialSpec, c_min: f64, n_samples: usize) -> Result<InstantonPath> {
    let (m, lambda, f) = double_well_params(pot)?;
    if n_samples < 3 {
        return Err(Error::Argument(format!("need at least 3 samples, got {n_samples}")));
    }
    if !(c_min > 0.0 && c_min < f) {
        return Err(Error::NoInstanton(format!(
            "turning point c = {c_min} must satisfy 0 < c < f = {f}; no barrier in between"
        )));
    }
    let mut path = InstantonPath {
        samples: Vec::new(),
        c_min,
        endpoint_offset: 0.0,
        tau_total: 0.0,
        m,
        lambda,
        f,
        quad: GaussLegendre::new(24),
    };
    let barrier = pot.value(0.0) - pot.value(c_min);
    if !(barrier > 0.0) {
        return Err(Error::NoInstanton(format!("barrier height {barrier} is not positive")));
    }
    // Bisection on s for (2/m)(V(−c+s) − V(c)) = 1e−8 · (2/m)·barrier; monotone on (0, c].
    let target = 1e-8 * 2.0 * barrier / m;
    let (mut lo, mut hi) = (0.0, c_min);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if path.kinetic_sq(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = 0.5 * (lo + hi);
    path.endpoint_offset = delta;
    path.tau_total = 2.0 * path.tau_of_u(c_min.sqrt());

    let start = -c_min + delta;
    let span = 2.0 * (c_min - delta);
    path.samples = (0..n_samples)
        .map(|k| {
            let x = start + span * k as f64 / (n_samples - 1) as f64;
            let x = if k == n_samples - 1 { c_min - delta } else { x };
            let s = x + c_min;
            let ksq = if x <= 0.0 {
                path.kinetic_sq(s)
            } else {
                path.kinetic_sq(c_min - x)
            };
            InstantonSample {
                tau: path.tau_at(x),
                x,
                p: m * ksq.max(0.0).sqrt(),
            }
        })
        .collect();
    for s in &path.samples {
        if !(s.tau.is_finite() && s.p.is_finite()) {
            return Err(Error::NoInstanton(format!("non-finite sample {s:?}")));
        }
    }
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentumMode {
    /// Each packet carries `p = m dx/dτ` of its sample.
    WithMomentum,
    /// All packets at rest.
    Frozen,
}

/// One normalized packet of width `gamma` per path sample.
pub fn instanton_basis(path: &InstantonPath, gamma: f64, mode: MomentumMode) -> Result<Vec<GeneralizedGaussian>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Argument(format!("gamma must be positive, got {gamma}")));
    }
    path.samples
        .iter()
        .map(|s| {
            let p = match mode {
                MomentumMode::WithMomentum => s.p,
                MomentumMode::Frozen => 0.0,
            };
            GeneralizedGaussian::real(s.x, p, gamma)
        })
        .collect()
}

/// `{left well, path packets, right well}` with all packets of the wells' width.
pub fn augmented_basis(
    wells: &(StationaryWell, StationaryWell),
    path: &InstantonPath,
    mode: MomentumMode,
) -> Result<Vec<GeneralizedGaussian>> {
    let mut out = vec![wells.0.packet()];
    out.extend(instanton_basis(path, wells.0.width, mode)?);
    out.push(wells.1.packet());
    Ok(out)
}

/// `S(t)^{−1/2} H̃(t) S(t)^{−1/2}` with `S_lm = ⟨ψ_l|e^{−tH}|ψ_m⟩` and
/// `H̃_lm = ⟨ψ_l|e^{−tH/2} H e^{−tH/2}|ψ_m⟩`, both computed on the grid. The inverse square
/// root is taken on the eigendirections of `S(t)` above `eps` relative to the largest.
pub fn smoothed_hamiltonian(
    packets: &[GeneralizedGaussian],
    pot: &PotentialSpec,
    t: f64,
    spec: &GridSpec,
    eps: f64,
) -> Result<EffectiveHamiltonian> {
    if packets.is_empty() {
        return Err(Error::Argument("empty packet list".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Argument(format!("t must be non-negative, got {t}")));
    }
    let smeared = packets
        .iter()
        .map(|g| {
            let s = GridState::sample_packet(g, *spec)?;
            evolve_imag_time(&s, pot, 0.5 * t, false)
        })
        .collect::<Result<Vec<_>>>()?;
    let applied = smeared
        .iter()
        .map(|s| s.apply_hamiltonian(pot))
        .collect::<Result<Vec<_>>>()?;
    let n = packets.len();
    let mut overlap = CMatrix::zeros(n, n);
    let mut ham = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            overlap[(i, j)] = smeared[i].inner(&smeared[j])?;
            ham[(i, j)] = smeared[i].inner(&applied[j])?;
        }
    }
    let defect = (hermiticity_defect(&overlap) / max_abs(&overlap))
        .max(hermiticity_defect(&ham) / max_abs(&ham).max(f64::MIN_POSITIVE));
    if defect > HERMITICITY_TOLERANCE {
        return Err(Error::NonHermitian(defect));
    }
    let transform = significant_subspace_of(&hermitize(&overlap), eps)?;
    EffectiveHamiltonian::new(&hermitize(&ham), transform)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelingSummary {
    pub ground_energy: f64,
    /// `E₁ − E₀`
    pub delta_e: f64,
    /// `π / Δε`, the two-level time for full transfer from one well to the other.
    pub transfer_time: f64,
    /// `1 / transfer_time`
    pub rate: f64,
    /// Probability on the `right` labels at `transfer_time`, starting from the uniform
    /// superposition of the `left` labels.
    pub transfer_probability: f64,
}

/// Splitting of the two lowest levels and the derived transfer time. `left` and `right`
/// index the symmetrically orthogonalized packet labels of `h`.
pub fn splitting_and_transfer(h: &EffectiveHamiltonian, left: &[usize], right: &[usize]) -> Result<TunnelingSummary> {
    if h.retained_modes() < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 retained modes, got {}",
            h.retained_modes()
        )));
    }
    let n = h.transform.dimension();
    if left.is_empty() || right.is_empty() {
        return Err(Error::Argument("left and right label sets must be non-empty".into()));
    }
    if let Some(&bad) = left.iter().chain(right).find(|&&k| k >= n) {
        return Err(Error::Argument(format!("label {bad} out of range for {n} packets")));
    }
    if left.iter().any(|k| right.contains(k)) {
        return Err(Error::Argument("left and right label sets overlap".into()));
    }
    let delta_e = h.energies[1] - h.energies[0];
    if !(delta_e > 0.0) {
        return Err(Error::Argument(format!("degenerate lowest pair, splitting {delta_e}")));
    }
    let transfer_time = std::f64::consts::PI / delta_e;

    let u = &h.transform.eigenvectors;
    let mut start = CVector::zeros(n);
    for &k in left {
        start[k] = Complex64::new(1.0, 0.0);
    }
    let mut modes = u.adjoint() * start;
    let norm = modes.norm();
    if norm == 0.0 {
        return Err(Error::Argument(
            "left labels have no weight in the retained modes".into(),
        ));
    }
    modes.unscale_mut(norm);
    let evolved = u * h.evolve_modes(&modes, transfer_time)?;
    let transfer_probability = right.iter().map(|&k| evolved[k].norm_sqr()).sum();

    Ok(TunnelingSummary {
        ground_energy: h.energies[0],
        delta_e,
        transfer_time,
        rate: 1.0 / transfer_time,
        transfer_probability,
    })
}

/// Gauss–Legendre rule on `[−1, 1]`, nodes by Newton iteration on `P_n`.
#[derive(Debug, Clone, PartialEq)]
struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            total += self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h;
        }
        total
    }
}
