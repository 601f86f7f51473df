use proptest::prelude::*;
use rand::Rng;
use relaylink::mcsim::sample_rng;
use relaylink::quad::{integrate_half_line, QuadOptions};
use relaylink::specfun::{meijer_g, meijer_g_contour, MeijerGSpec};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `K_ν(x) = ∫_0^∞ e^{-x cosh t} cosh(νt) dt`.
fn bessel_k(nu: f64, x: f64) -> f64 {
    integrate_half_line(
        |t| Ok(0.5 * ((nu * t - x * t.cosh()).exp() + (-nu * t - x * t.cosh()).exp())),
        1.0,
        QuadOptions {
            rel_tol: 1e-13,
            abs_tol: 0.0,
            max_intervals: 4000,
        },
    )
    .unwrap()
    .value
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp()
}

#[test]
fn exponential_identity_random_arguments() {
    let spec = MeijerGSpec::new(1, 0, vec![], vec![0.0]).unwrap();
    let mut rng = sample_rng(1, 0);
    for _ in 0..100 {
        let z = log_uniform(&mut rng, 1e-3, 40.0);
        let g = meijer_g(&spec, z).unwrap();
        assert!(
            rel(g.value, (-z).exp()) < 1e-10,
            "z={z}: {} vs {}",
            g.value,
            (-z).exp()
        );
    }
}

#[test]
fn rational_identity_random_arguments() {
    let spec = MeijerGSpec::new(1, 1, vec![0.0], vec![0.0]).unwrap();
    let mut rng = sample_rng(2, 0);
    for _ in 0..100 {
        let z = log_uniform(&mut rng, 1e-3, 1e3);
        let g = meijer_g(&spec, z).unwrap();
        assert!(rel(g.value, 1.0 / (1.0 + z)) < 1e-10, "z={z}");
    }
}

#[test]
fn bessel_k_identity_random_arguments() {
    let mut rng = sample_rng(3, 0);
    for _ in 0..100 {
        let z = log_uniform(&mut rng, 1e-2, 25.0);
        let nu = 2.5 * rng.random::<f64>();
        let spec = MeijerGSpec::new(2, 0, vec![], vec![nu / 2.0, -nu / 2.0]).unwrap();
        let g = meijer_g(&spec, z).unwrap();
        let oracle = 2.0 * bessel_k(nu, 2.0 * z.sqrt());
        assert!(
            rel(g.value, oracle) < 1e-8,
            "z={z} nu={nu}: {} vs {oracle}",
            g.value
        );
    }
}

#[test]
fn bessel_k_integer_order_needs_no_special_case() {
    for nu in [0.0, 1.0, 2.0] {
        let spec = MeijerGSpec::new(2, 0, vec![], vec![nu / 2.0, -nu / 2.0]).unwrap();
        for z in [0.05, 0.7, 3.0] {
            let g = meijer_g(&spec, z).unwrap();
            let oracle = 2.0 * bessel_k(nu, 2.0 * z.sqrt());
            assert!(rel(g.value, oracle) < 1e-8, "z={z} nu={nu}");
        }
    }
}

#[test]
fn near_coincident_poles_agree_with_exact_coincidence() {
    let exact = MeijerGSpec::new(2, 0, vec![], vec![0.5, 0.5]).unwrap();
    let near = MeijerGSpec::new(2, 0, vec![], vec![0.5, 0.5 + 3e-7]).unwrap();
    for z in [0.1, 1.0, 4.0] {
        let a = meijer_g(&exact, z).unwrap();
        let b = meijer_g(&near, z).unwrap();
        let oracle = 2.0 * z.sqrt() * bessel_k(0.0, 2.0 * z.sqrt());
        assert!(rel(a.value, oracle) < 1e-8, "z={z}");
        assert!(rel(b.value, oracle) < 1e-6, "z={z}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cancelling_pairs_do_not_change_the_value(
        z in 0.05f64..6.0,
        c in 0.1f64..2.0,
        b0 in 0.05f64..1.5,
    ) {
        let base = MeijerGSpec::new(2, 0, vec![], vec![b0, b0 + 0.37]).unwrap();
        let padded = MeijerGSpec::new(3, 0, vec![c], vec![b0, b0 + 0.37, c]).unwrap();
        let v0 = meijer_g(&base, z).unwrap().value;
        let v1 = meijer_g(&padded, z).unwrap().value;
        prop_assert!(rel(v1, v0) < 1e-11, "{v1} vs {v0}");
    }

    #[test]
    fn series_and_contour_agree(
        z in 0.05f64..3.0,
        a in 1.05f64..1.95,
        b in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let spec = MeijerGSpec::new(3, 1, vec![a - 1.0], vec![b[0], b[1] + 0.13, b[2] + 0.29]).unwrap();
        let s = meijer_g(&spec, z).unwrap();
        let c = meijer_g_contour(&spec, z, None).unwrap();
        let tol = (3.0 * (s.rel_error + c.rel_error)).max(1e-9);
        prop_assert!(rel(s.value, c.value) < tol, "{} vs {} (tol {tol})", s.value, c.value);
    }

    #[test]
    fn argument_scaling_shifts_parameters(z in 0.05f64..5.0, b in 0.1f64..1.5) {
        // z^c G(z | b) = G(z | b + c)
        let c = 0.4;
        let g0 = MeijerGSpec::new(1, 0, vec![], vec![b]).unwrap();
        let g1 = MeijerGSpec::new(1, 0, vec![], vec![b + c]).unwrap();
        let lhs = z.powf(c) * meijer_g(&g0, z).unwrap().value;
        let rhs = meijer_g(&g1, z).unwrap().value;
        prop_assert!(rel(lhs, rhs) < 1e-12);
    }
}
