//! Closed-form packet algebra and quadratic propagation against independent references.

use num_complex::Complex64;
use proptest::prelude::*;

use wpb_core::linalg::{hermitian_eigen, hermitize, CMatrix};
use wpb_core::packets::{kinetic_element, moment, overlap, GeneralizedGaussian};
use wpb_core::potentials::{effective_quadratic, PotentialSpec};
use wpb_core::propagators::{free_evolve, harmonic_evolve};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn packet() -> impl Strategy<Value = GeneralizedGaussian> {
    (-3.0..3.0f64, -3.0..3.0f64, 0.2..5.0f64, -5.0..5.0f64)
        .prop_map(|(x, p, gr, gi)| GeneralizedGaussian::new(x, p, c(gr, gi)).unwrap())
}

fn real_packet() -> impl Strategy<Value = GeneralizedGaussian> {
    (-3.0..3.0f64, -3.0..3.0f64, 0.2..5.0f64).prop_map(|(x, p, g)| GeneralizedGaussian::real(x, p, g).unwrap())
}

/// Double-exponential quadrature of real and imaginary parts on panels, plus `∫|f|`.
/// The integrand is scaled to unit peak because the quadrature's tolerance is absolute.
fn integrate(f: impl Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let peak = (0..=2048)
        .map(|k| f(a + (b - a) * k as f64 / 2048.0).norm())
        .fold(f64::MIN_POSITIVE, f64::max);
    let g = |x: f64| f(x) / peak;
    let panels = 256;
    let h = (b - a) / panels as f64;
    let (mut value, mut magnitude) = (c(0.0, 0.0), 0.0);
    for k in 0..panels {
        let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        value += c(
            quadrature::integrate(|x| g(x).re, lo, hi, 1e-15).integral,
            quadrature::integrate(|x| g(x).im, lo, hi, 1e-15).integral,
        );
        magnitude += quadrature::integrate(|x| g(x).norm(), lo, hi, 1e-12).integral;
    }
    (value * peak, magnitude * peak)
}

/// Relative error with a `1e−4 ∫|f|` floor for integrals that cancel by oscillation.
fn rel_err(got: Complex64, (want, magnitude): (Complex64, f64)) -> f64 {
    (got - want).norm() / want.norm().max(1e-4 * magnitude)
}

fn window(a: &GeneralizedGaussian, b: &GeneralizedGaussian) -> (f64, f64) {
    let prec = a.width.re + b.width.re;
    let mid = (a.width.re * a.center + b.width.re * b.center) / prec;
    let half = 14.0 / prec.sqrt();
    (mid - half, mid + half)
}

fn field_distance(a: &GeneralizedGaussian, b: &GeneralizedGaussian) -> f64 {
    let phase = (a.log_prefactor.im - b.log_prefactor.im + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
        - std::f64::consts::PI;
    [
        (a.center - b.center).abs(),
        (a.momentum - b.momentum).abs(),
        (a.width - b.width).norm(),
        (a.log_prefactor.re - b.log_prefactor.re).abs(),
        phase.abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_integrals_match_quadrature(a in packet(), b in packet()) {
        let (lo, hi) = window(&a, &b);
        let ov = integrate(|x| a.amplitude(x).conj() * b.amplitude(x), lo, hi);
        prop_assert!(rel_err(overlap(&a, &b).unwrap(), ov) < 1e-9);
        for k in 1..=4 {
            let want = integrate(|x| a.amplitude(x).conj() * x.powi(k as i32) * b.amplitude(x), lo, hi);
            prop_assert!(rel_err(moment(&a, &b, k).unwrap(), want) < 1e-9, "moment {}", k);
        }
        let m = 1.7;
        let second = |x: f64| {
            let d = c(0.0, b.momentum) - b.width * (x - b.center);
            (d * d - b.width) * b.amplitude(x)
        };
        let want = integrate(|x| -a.amplitude(x).conj() * second(x) / (2.0 * m), lo, hi);
        prop_assert!(rel_err(kinetic_element(&a, &b, m).unwrap(), want) < 1e-9);
    }
}

proptest! {
    #[test]
    fn gram_matrix_is_positive_semidefinite(set in prop::collection::vec(packet(), 1..12)) {
        let n = set.len();
        let gram = CMatrix::from_fn(n, n, |i, j| overlap(&set[i], &set[j]).unwrap());
        let (evals, _) = hermitian_eigen(&hermitize(&gram));
        prop_assert!(evals.iter().all(|&e| e >= -1e-12), "{:?}", evals);
    }

    #[test]
    fn normalize_is_idempotent(g in packet(), scale in -3.0..3.0f64) {
        let g = g.with_log_prefactor(c(scale, 0.7));
        let once = g.normalize();
        prop_assert_eq!(once.normalize().log_prefactor.re, once.log_prefactor.re);
        prop_assert!((once.norm_sq() - 1.0).abs() < 1e-12);
        prop_assert_eq!(once.log_prefactor.im, 0.7);
    }

    #[test]
    fn shift_and_boost_commute_and_boost_keeps_modulus(g in packet(), dx in -2.0..2.0f64, dp in -2.0..2.0f64, x in -4.0..4.0f64) {
        let a = g.shift(dx).boost(dp).amplitude(x);
        let b = g.boost(dp).shift(dx).amplitude(x);
        prop_assert!((a.norm() - b.norm()).abs() <= 1e-12 * a.norm().max(1e-300));
        prop_assert!((g.boost(dp).amplitude(x).norm() - g.amplitude(x).norm()).abs() <= 1e-14);
    }

    #[test]
    fn evolution_preserves_norm_and_positive_width(
        g in packet(), m in 0.5..3.0f64, omega in 0.2..3.0f64, t in 0.0..10.0f64,
    ) {
        for h in [free_evolve(&g, m, t).unwrap(), harmonic_evolve(&g, m, omega, t).unwrap()] {
            prop_assert!((h.norm_sq() - 1.0).abs() < 1e-10);
            prop_assert!(h.width.re > 0.0);
        }
    }

    #[test]
    fn evolution_composes(g in packet(), m in 0.5..3.0f64, omega in 0.2..3.0f64, t1 in 0.0..4.0f64, t2 in 0.0..4.0f64) {
        let free2 = free_evolve(&free_evolve(&g, m, t1).unwrap(), m, t2).unwrap();
        prop_assert!(field_distance(&free2, &free_evolve(&g, m, t1 + t2).unwrap()) < 1e-10);
        let harm2 = harmonic_evolve(&harmonic_evolve(&g, m, omega, t1).unwrap(), m, omega, t2).unwrap();
        prop_assert!(field_distance(&harm2, &harmonic_evolve(&g, m, omega, t1 + t2).unwrap()) < 1e-10);
    }

    #[test]
    fn harmonic_ground_width_is_fixed(x in -3.0..3.0f64, p in -3.0..3.0f64, m in 0.5..3.0f64, omega in 0.2..3.0f64, t in 0.0..20.0f64) {
        let g = GeneralizedGaussian::new(x, p, c(m * omega, 0.0)).unwrap();
        let h = harmonic_evolve(&g, m, omega, t).unwrap();
        prop_assert!((h.width - g.width).norm() < 1e-12);
    }

    #[test]
    fn harmonic_width_is_periodic(g in packet(), m in 0.5..3.0f64, omega in 0.2..3.0f64) {
        let h = harmonic_evolve(&g, m, omega, 2.0 * std::f64::consts::PI / omega).unwrap();
        prop_assert!((h.width - g.width).norm() < 1e-10 * g.width.norm().max(1.0));
        prop_assert!((h.center - g.center).abs() < 1e-10 && (h.momentum - g.momentum).abs() < 1e-10);
    }

    #[test]
    fn harmonic_fit_is_exact(g in packet(), m in 0.5..3.0f64, omega in 0.2..3.0f64) {
        let pot = PotentialSpec::harmonic(m, omega).unwrap();
        let fit = effective_quadratic(&pot, &g).unwrap();
        prop_assert!((fit.omega_sq() - omega * omega).abs() < 1e-12 * omega * omega);
        prop_assert!((fit.f_n + m * omega * omega * g.center).abs() < 1e-12 * (1.0 + g.center.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn effective_quadratic_matches_quadrature(g in real_packet(), kind in 0usize..4, lambda in 0.1..2.0f64, f in 0.5..2.0f64) {
        let pot = match kind {
            0 => PotentialSpec::free(1.3),
            1 => PotentialSpec::harmonic(1.3, 0.8),
            2 => PotentialSpec::quartic(1.3, lambda),
            _ => PotentialSpec::double_well(1.3, lambda, f),
        }
        .unwrap();
        let fit = effective_quadratic(&pot, &g).unwrap();
        let density = |x: f64| g.amplitude(x).norm_sqr() / g.norm_sq();
        let (lo, hi) = window(&g, &g);
        let avg = |v: &dyn Fn(f64) -> f64| integrate(|x| c(v(x) * density(x), 0.0), lo, hi);
        let v = avg(&|x| pot.value(x));
        let d1 = avg(&|x| pot.derivative(x, 1).unwrap());
        let d2 = avg(&|x| pot.derivative(x, 2).unwrap());
        // Free potentials average to exactly zero, so allow an absolute 1e−14.
        let close = |got: f64, want: (Complex64, f64)| (got - want.0.re).abs() < 1e-14 || rel_err(c(got, 0.0), want) < 1e-9;
        prop_assert!(close(fit.v_n, v), "V {} vs {}", fit.v_n, v.0);
        prop_assert!(close(-fit.f_n, d1), "V' {} vs {}", -fit.f_n, d1.0);
        prop_assert!(close(fit.curvature, d2), "V'' {} vs {}", fit.curvature, d2.0);
    }

    #[test]
    fn effective_quadratic_ignores_imaginary_width(x in -3.0..3.0f64, gr in 0.2..5.0f64, gi in -5.0..5.0f64) {
        let pot = PotentialSpec::double_well(1.0, 1.0, 1.4).unwrap();
        let a = effective_quadratic(&pot, &GeneralizedGaussian::new(x, 0.3, c(gr, gi)).unwrap()).unwrap();
        let b = effective_quadratic(&pot, &GeneralizedGaussian::new(x, 0.3, c(gr, 0.0)).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}
