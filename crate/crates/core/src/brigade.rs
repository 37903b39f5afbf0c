//! Bucket-brigade propagation.
//!
//! A packet is stepped through a sequence of local quadratic models, each fitted to the
//! packet it acts on. The visited packets span a small subspace; the exact Hamiltonian is
//! projected onto it (closed-form Gaussian matrix elements), the numerically dependent
//! directions of the overlap matrix are discarded, and the remaining Hermitian matrix is
//! exponentiated.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermiticity_defect, hermitize, max_abs, CMatrix, CVector};
use crate::packets::{kinetic_from_moments, moments, GeneralizedGaussian};
use crate::potentials::{effective_quadratic, PotentialSpec};
use crate::propagators::driven_harmonic_step;

/// Relative Hermiticity defect tolerated in assembled matrices before symmetrization.
pub const HERMITICITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrigadeConfig {
    /// Step length δt.
    pub dt: f64,
    pub n_steps: usize,
    /// Relative Gram-eigenvalue cutoff.
    pub significance_eps: f64,
    pub renormalize_each_step: bool,
}

impl Default for BrigadeConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            n_steps: 40,
            significance_eps: 1e-8,
            renormalize_each_step: false,
        }
    }
}

impl BrigadeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Argument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::Argument("n_steps must be at least 1".into()));
        }
        if !(self.significance_eps > 0.0 && self.significance_eps < 1.0) {
            return Err(Error::Argument(format!(
                "significance_eps must lie in (0, 1), got {}",
                self.significance_eps
            )));
        }
        Ok(())
    }
}

/// `[g0, g1, …, g_n]` with `g_{k+1}` the local-quadratic step of `g_k`.
pub fn generate_trajectory_basis(
    g0: &GeneralizedGaussian,
    pot: &PotentialSpec,
    cfg: &BrigadeConfig,
) -> Result<Vec<GeneralizedGaussian>> {
    cfg.validate()?;
    pot.validate()?;
    g0.validate()?;
    let mut out = Vec::with_capacity(cfg.n_steps + 1);
    out.push(*g0);
    let mut g = *g0;
    for step in 1..=cfg.n_steps {
        let failure = |e: Error| Error::NumericalFailure {
            step,
            reason: e.to_string(),
        };
        let params = effective_quadratic(pot, &g).map_err(failure)?;
        g = driven_harmonic_step(&g, &params, cfg.dt, cfg.renormalize_each_step).map_err(failure)?;
        out.push(g);
    }
    Ok(out)
}

/// Every `every`-th packet, always keeping the last one.
pub fn thin(packets: &[GeneralizedGaussian], every: usize) -> Vec<GeneralizedGaussian> {
    let every = every.max(1);
    let mut out: Vec<_> = packets.iter().step_by(every).copied().collect();
    if !packets.is_empty() && !(packets.len() - 1).is_multiple_of(every) {
        if let Some(last) = packets.last() {
            out.push(*last);
        }
    }
    out
}

/// Packets with their overlap matrix `N_nm = ⟨n|m⟩` and Hamiltonian `H_nm = ⟨n|H|m⟩`.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub packets: Vec<GeneralizedGaussian>,
    pub gram: CMatrix,
    pub hamiltonian: CMatrix,
    /// Largest Hermiticity defect seen before symmetrization (relative to the matrix scale).
    pub hermiticity_defect: f64,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    /// `⟨n|ψ⟩` for every basis packet.
    pub fn overlaps_with(&self, psi: &GeneralizedGaussian) -> Result<CVector> {
        let values = self
            .packets
            .iter()
            .map(|g| crate::packets::overlap(g, psi))
            .collect::<Result<Vec<_>>>()?;
        Ok(CVector::from_vec(values))
    }
}

/// Closed-form `N` and `H` over `packets`, symmetrized after checking Hermiticity.
pub fn assemble_matrices(packets: &[GeneralizedGaussian], pot: &PotentialSpec) -> Result<BasisSet> {
    if packets.is_empty() {
        return Err(Error::Argument("cannot assemble matrices over an empty basis".into()));
    }
    pot.validate()?;
    let n = packets.len();
    let coeffs = pot.coefficients();
    let m = pot.mass();
    let mut gram = CMatrix::zeros(n, n);
    let mut ham = CMatrix::zeros(n, n);
    for (i, a) in packets.iter().enumerate() {
        a.validate()?;
        for (j, b) in packets.iter().enumerate() {
            let mom = moments(a, b)?;
            let kin = kinetic_from_moments(b, &mom, m)?;
            let pot_elem: Complex64 = coeffs.iter().zip(&mom).map(|(c, mk)| mk * *c).sum();
            gram[(i, j)] = mom[0];
            ham[(i, j)] = kin + pot_elem;
        }
    }
    let defect =
        (hermiticity_defect(&gram) / max_abs(&gram).max(1.0)).max(hermiticity_defect(&ham) / max_abs(&ham).max(1.0));
    if defect > HERMITICITY_TOLERANCE {
        return Err(Error::NonHermitian(defect));
    }
    Ok(BasisSet {
        packets: packets.to_vec(),
        gram: hermitize(&gram),
        hamiltonian: hermitize(&ham),
        hermiticity_defect: defect,
    })
}

/// Retained eigendirections of an overlap matrix, `N ≈ U_r Λ_r U_r†`.
#[derive(Debug, Clone)]
pub struct SubspaceTransform {
    gram: CMatrix,
    /// `U_r`, one column per retained mode.
    pub eigenvectors: CMatrix,
    pub eigenvalues: Vec<f64>,
    pub discarded_eigenvalues: Vec<f64>,
}

impl SubspaceTransform {
    pub fn retained_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dimension(&self) -> usize {
        self.gram.nrows()
    }

    /// `W = U_r Λ_r^{−1/2}`: packet coefficients of the orthonormal modes, `W† N W = 1`.
    pub fn whitening(&self) -> CMatrix {
        let mut w = self.eigenvectors.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            w.column_mut(k).scale_mut(1.0 / lam.sqrt());
        }
        w
    }

    /// Symmetric (Löwdin) inverse square root on the retained space, `U_r Λ_r^{−1/2} U_r†`.
    pub fn lowdin(&self) -> CMatrix {
        self.whitening() * self.eigenvectors.adjoint()
    }

    /// Mode coefficients of `Σ_n c_n |n⟩`: `W† N c`.
    pub fn modes_from_packet_coeffs(&self, coeffs: &CVector) -> Result<CVector> {
        self.check_len(coeffs.len())?;
        Ok(self.whitening().adjoint() * (&self.gram * coeffs))
    }

    /// Least-squares mode coefficients of a state known through `⟨n|ψ⟩`: `W† s`.
    pub fn modes_from_overlaps(&self, overlaps: &CVector) -> Result<CVector> {
        self.check_len(overlaps.len())?;
        Ok(self.whitening().adjoint() * overlaps)
    }

    pub fn packet_coeffs_from_modes(&self, modes: &CVector) -> Result<CVector> {
        if modes.len() != self.retained_modes() {
            return Err(Error::Argument(format!(
                "expected {} mode coefficients, got {}",
                self.retained_modes(),
                modes.len()
            )));
        }
        Ok(self.whitening() * modes)
    }

    /// Largest entry of `W† N W − 1`.
    pub fn orthonormality_defect(&self) -> f64 {
        let w = self.whitening();
        let id = CMatrix::identity(self.retained_modes(), self.retained_modes());
        max_abs(&(w.adjoint() * &self.gram * w - id))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dimension() {
            return Err(Error::Argument(format!(
                "expected {} packet coefficients, got {len}",
                self.dimension()
            )));
        }
        Ok(())
    }
}

/// Keep Gram eigenvalues above `eps × (largest eigenvalue)`.
pub fn significant_subspace(basis: &BasisSet, eps: f64) -> Result<SubspaceTransform> {
    significant_subspace_of(&basis.gram, eps)
}

pub fn significant_subspace_of(gram: &CMatrix, eps: f64) -> Result<SubspaceTransform> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Argument(format!("eps must lie in (0, 1), got {eps}")));
    }
    if gram.nrows() == 0 || gram.nrows() != gram.ncols() {
        return Err(Error::Argument(format!(
            "overlap matrix must be square and non-empty, got {}×{}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    let (values, vectors) = hermitian_eigen(gram);
    let largest = values.last().copied().unwrap_or(0.0);
    if !(largest > 0.0) {
        return Err(Error::DegenerateBasis(format!(
            "overlap matrix has no positive eigenvalue (largest {largest:e})"
        )));
    }
    let cutoff = eps * largest;
    // Descending order keeps the dominant modes first.
    let keep: Vec<usize> = (0..values.len()).rev().filter(|&k| values[k] > cutoff).collect();
    if keep.is_empty() {
        return Err(Error::DegenerateBasis("every mode fell below the cutoff".into()));
    }
    let mut u = CMatrix::zeros(gram.nrows(), keep.len());
    for (col, &k) in keep.iter().enumerate() {
        u.set_column(col, &vectors.column(k));
    }
    Ok(SubspaceTransform {
        gram: gram.clone(),
        eigenvectors: u,
        eigenvalues: keep.iter().map(|&k| values[k]).collect(),
        discarded_eigenvalues: (0..values.len())
            .filter(|&k| values[k] <= cutoff)
            .map(|k| values[k])
            .collect(),
    })
}

/// Hamiltonian restricted to the orthonormal modes of a [`SubspaceTransform`], with its
/// spectral decomposition.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub transform: SubspaceTransform,
    /// `h = W† H W`, Hermitian.
    pub modes: CMatrix,
    pub energies: Vec<f64>,
    /// Eigenvectors of `h`, columns in ascending energy.
    pub eigenvectors: CMatrix,
}

impl EffectiveHamiltonian {
    /// Project a packet-basis Hamiltonian onto the retained modes.
    pub fn new(hamiltonian: &CMatrix, transform: SubspaceTransform) -> Result<Self> {
        if hamiltonian.nrows() != transform.dimension() || !hamiltonian.is_square() {
            return Err(Error::Argument(format!(
                "Hamiltonian is {}×{}, basis has {} packets",
                hamiltonian.nrows(),
                hamiltonian.ncols(),
                transform.dimension()
            )));
        }
        // Checked before projecting: near-singular retained directions amplify rounding in
        // `W† H W` by up to 1/λ_min, so its own asymmetry says nothing about the input.
        let defect = hermiticity_defect(hamiltonian) / max_abs(hamiltonian).max(1.0);
        if defect > HERMITICITY_TOLERANCE {
            return Err(Error::NonHermitian(defect));
        }
        let w = transform.whitening();
        let modes = hermitize(&(w.adjoint() * hamiltonian * &w));
        let (energies, eigenvectors) = hermitian_eigen(&modes);
        Ok(Self {
            transform,
            modes,
            energies,
            eigenvectors,
        })
    }

    /// A Hamiltonian already expressed in an orthonormal basis; every direction is kept.
    pub fn from_orthonormal(h: &CMatrix) -> Result<Self> {
        let n = h.nrows();
        let transform = significant_subspace_of(&CMatrix::identity(n, n), 0.5)?;
        Self::new(h, transform)
    }

    pub fn retained_modes(&self) -> usize {
        self.energies.len()
    }

    /// `U_r h U_r†`: the Hamiltonian in the symmetrically orthogonalized packet basis.
    pub fn lowdin_matrix(&self) -> CMatrix {
        let u = &self.transform.eigenvectors;
        u * &self.modes * u.adjoint()
    }

    /// Eigenvectors expressed over the symmetrically orthogonalized packet labels.
    pub fn lowdin_eigenvectors(&self) -> CMatrix {
        &self.transform.eigenvectors * &self.eigenvectors
    }

    /// `e^{−iht} a`
    pub fn evolve_modes(&self, modes: &CVector, t: f64) -> Result<CVector> {
        if modes.len() != self.retained_modes() {
            return Err(Error::Argument(format!(
                "expected {} mode coefficients, got {}",
                self.retained_modes(),
                modes.len()
            )));
        }
        let mut spectral = self.eigenvectors.adjoint() * modes;
        for (z, &e) in spectral.iter_mut().zip(&self.energies) {
            *z *= Complex64::from_polar(1.0, -e * t);
        }
        Ok(&self.eigenvectors * spectral)
    }

    /// `a† h a`
    pub fn expectation(&self, modes: &CVector) -> f64 {
        (modes.adjoint() * &self.modes * modes)[(0, 0)].re
    }
}

/// `W e^{−iht} W† N c`: evolve packet coefficients `init` for time `t` in the retained
/// subspace.
pub fn project_and_exponentiate(
    basis: &BasisSet,
    transform: &SubspaceTransform,
    init: &CVector,
    t: f64,
) -> Result<CVector> {
    if init.len() != basis.len() || transform.dimension() != basis.len() {
        return Err(Error::Argument(format!(
            "basis has {} packets, transform {} and initial vector {}",
            basis.len(),
            transform.dimension(),
            init.len()
        )));
    }
    if !t.is_finite() {
        return Err(Error::Argument(format!("non-finite time {t}")));
    }
    let h = EffectiveHamiltonian::new(&basis.hamiltonian, transform.clone())?;
    let a = transform.modes_from_packet_coeffs(init)?;
    transform.packet_coeffs_from_modes(&h.evolve_modes(&a, t)?)
}

/// `Σ_n c_n ψ_n(x)` at each of `xs`.
pub fn reconstruct(packets: &[GeneralizedGaussian], coeffs: &CVector, xs: &[f64]) -> Result<Vec<Complex64>> {
    if packets.len() != coeffs.len() {
        return Err(Error::Argument(format!(
            "{} packets but {} coefficients",
            packets.len(),
            coeffs.len()
        )));
    }
    Ok(xs
        .iter()
        .map(|&x| packets.iter().zip(coeffs.iter()).map(|(g, c)| c * g.amplitude(x)).sum())
        .collect())
}

/// Everything needed to propagate states inside the span of a fixed packet set.
#[derive(Debug, Clone)]
pub struct BrigadePropagator {
    pub basis: BasisSet,
    pub hamiltonian: EffectiveHamiltonian,
}

impl BrigadePropagator {
    pub fn new(packets: &[GeneralizedGaussian], pot: &PotentialSpec, eps: f64) -> Result<Self> {
        let basis = assemble_matrices(packets, pot)?;
        let transform = significant_subspace(&basis, eps)?;
        let hamiltonian = EffectiveHamiltonian::new(&basis.hamiltonian, transform)?;
        Ok(Self { basis, hamiltonian })
    }

    /// Trajectory basis of `g0` followed by projection.
    pub fn from_trajectory(g0: &GeneralizedGaussian, pot: &PotentialSpec, cfg: &BrigadeConfig) -> Result<Self> {
        let packets = generate_trajectory_basis(g0, pot, cfg)?;
        Self::new(&packets, pot, cfg.significance_eps)
    }

    pub fn transform(&self) -> &SubspaceTransform {
        &self.hamiltonian.transform
    }

    /// Mode coefficients of an arbitrary packet via its overlaps with the basis.
    pub fn modes_of(&self, psi: &GeneralizedGaussian) -> Result<CVector> {
        self.transform().modes_from_overlaps(&self.basis.overlaps_with(psi)?)
    }

    /// Packet coefficients of the state that starts as `modes` and evolves for `t`.
    pub fn coefficients_at(&self, modes: &CVector, t: f64) -> Result<CVector> {
        self.transform()
            .packet_coeffs_from_modes(&self.hamiltonian.evolve_modes(modes, t)?)
    }

    pub fn sample(&self, coeffs: &CVector, xs: &[f64]) -> Result<Vec<Complex64>> {
        reconstruct(&self.basis.packets, coeffs, xs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn config_validation() {
        assert!(BrigadeConfig::default().validate().is_ok());
        for bad in [
            BrigadeConfig {
                dt: 0.0,
                ..Default::default()
            },
            BrigadeConfig {
                n_steps: 0,
                ..Default::default()
            },
            BrigadeConfig {
                significance_eps: 1.0,
                ..Default::default()
            },
            BrigadeConfig {
                significance_eps: 0.0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn eigenpacket_energy() {
        let (m, omega) = (1.0, 2.0);
        let pot = PotentialSpec::harmonic(m, omega).unwrap();
        let g = GeneralizedGaussian::real(0.0, 0.0, m * omega).unwrap();
        let b = assemble_matrices(&[g], &pot).unwrap();
        assert!((b.hamiltonian[(0, 0)] - omega / 2.0).norm() < 1e-14);
        let tr = significant_subspace(&b, 1e-8).unwrap();
        let init = CVector::from_vec(vec![c(1.0, 0.0)]);
        for &t in &[0.0, 0.7, 3.1] {
            let out = project_and_exponentiate(&b, &tr, &init, t).unwrap();
            assert!((out[0] - Complex64::from_polar(1.0, -omega * t / 2.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn duplicate_packets_have_rank_one() {
        let pot = PotentialSpec::free(1.0).unwrap();
        let g = GeneralizedGaussian::new(0.3, 0.1, c(1.0, 0.5)).unwrap();
        let b = assemble_matrices(&[g, g], &pot).unwrap();
        for z in b.gram.iter() {
            assert!((z - 1.0).norm() < 1e-14);
        }
        assert_eq!(significant_subspace(&b, 1e-8).unwrap().retained_modes(), 1);
    }

    #[test]
    fn separated_packets_are_orthonormal() {
        let pot = PotentialSpec::free(1.0).unwrap();
        let packets: Vec<_> = (0..4)
            .map(|k| GeneralizedGaussian::real(20.0 * k as f64, 0.0, 1.0).unwrap())
            .collect();
        let b = assemble_matrices(&packets, &pot).unwrap();
        let tr = significant_subspace(&b, 1e-8).unwrap();
        assert_eq!(tr.retained_modes(), 4);
        assert!(tr.orthonormality_defect() < 1e-12);
        let w = tr.whitening();
        for i in 0..4 {
            let row_max = (0..4).map(|j| w[(i, j)].norm()).fold(0.0, f64::max);
            assert!((row_max - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let pot = PotentialSpec::free(1.0).unwrap();
        assert!(assemble_matrices(&[], &pot).is_err());
        let g = GeneralizedGaussian::real(0.0, 0.0, 1.0).unwrap();
        let b = assemble_matrices(&[g], &pot).unwrap();
        let tr = significant_subspace(&b, 1e-8).unwrap();
        let wrong = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(project_and_exponentiate(&b, &tr, &wrong, 1.0).is_err());
        assert!(reconstruct(&[g], &wrong, &[0.0]).is_err());
        assert!(significant_subspace(&b, 0.0).is_err());
    }

    #[test]
    fn reconstruct_basics() {
        let a = GeneralizedGaussian::new(-1.0, 0.3, c(1.0, 0.2)).unwrap();
        let b = GeneralizedGaussian::new(0.5, 0.0, c(2.0, 0.0)).unwrap();
        let xs = [-1.0, 0.0, 0.7];
        let unit = reconstruct(&[a, b], &CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]), &xs).unwrap();
        for (v, &x) in unit.iter().zip(&xs) {
            assert_eq!(*v, b.amplitude(x));
        }
        let zero = reconstruct(&[a, b], &CVector::zeros(2), &xs).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));

        let right = GeneralizedGaussian::real(1.2, 0.0, 1.5).unwrap();
        let left = right.reflect();
        let coeffs = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let xs: Vec<f64> = (0..21).map(|k| -3.0 + 0.3 * k as f64).collect();
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let f = reconstruct(&[left, right], &coeffs, &xs).unwrap();
        let g = reconstruct(&[left, right], &coeffs, &neg).unwrap();
        for (u, v) in f.iter().zip(&g) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn thinning_keeps_endpoints() {
        let g = GeneralizedGaussian::real(0.0, 0.0, 1.0).unwrap();
        let packets: Vec<_> = (0..10).map(|k| g.shift(k as f64)).collect();
        let t = thin(&packets, 4);
        let centers: Vec<f64> = t.iter().map(|p| p.center).collect();
        assert_eq!(centers, vec![0.0, 4.0, 8.0, 9.0]);
        assert_eq!(thin(&packets, 1).len(), 10);
        assert!(thin(&[], 3).is_empty());
    }

    #[test]
    fn free_trajectory_centers() {
        let pot = PotentialSpec::free(2.0).unwrap();
        let g0 = GeneralizedGaussian::real(0.5, 1.0, 1.0).unwrap();
        let cfg = BrigadeConfig {
            dt: 0.1,
            n_steps: 10,
            ..Default::default()
        };
        let path = generate_trajectory_basis(&g0, &pot, &cfg).unwrap();
        assert_eq!(path.len(), 11);
        for (k, g) in path.iter().enumerate() {
            assert!((g.center - (0.5 + 0.5 * 0.1 * k as f64)).abs() < 1e-13);
            assert!(g.width.re > 0.0);
        }
    }

    #[test]
    fn harmonic_eigenpacket_trajectory_only_rotates_phase() {
        let (m, omega) = (1.0, 1.3);
        let pot = PotentialSpec::harmonic(m, omega).unwrap();
        let g0 = GeneralizedGaussian::real(0.0, 0.0, m * omega).unwrap();
        let cfg = BrigadeConfig {
            dt: 0.07,
            n_steps: 30,
            ..Default::default()
        };
        let path = generate_trajectory_basis(&g0, &pot, &cfg).unwrap();
        for (k, g) in path.iter().enumerate() {
            let expected = g0.log_prefactor - Complex64::new(0.0, omega * k as f64 * 0.07 / 2.0);
            assert!((g.width - g0.width).norm() < 1e-12);
            assert!(g.center.abs() < 1e-14);
            assert!((g.log_prefactor - expected).norm() < 1e-11, "step {k}");
        }
    }
}
