use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};
use trustdyn_core::analysis::{chi2_survival, f_survival, t_two_sided};
use trustdyn_core::special::{
    erf, ln_beta, ln_gamma, normal_cdf, reg_inc_beta, reg_inc_gamma_lower, reg_inc_gamma_upper,
};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn ln_gamma_matches_reference(x in 0.01f64..1e4) {
        let want = statrs::function::gamma::ln_gamma(x);
        prop_assert!(close(ln_gamma(x), want, 1e-12), "{} vs {}", ln_gamma(x), want);
    }

    #[test]
    fn ln_beta_matches_gamma_identity(a in 0.01f64..1e3, b in 0.01f64..1e3) {
        let want = statrs::function::gamma::ln_gamma(a) + statrs::function::gamma::ln_gamma(b)
            - statrs::function::gamma::ln_gamma(a + b);
        prop_assert!(close(ln_beta(a, b), want, 1e-10));
    }

    #[test]
    fn incomplete_beta_matches_reference(a in 0.05f64..200.0, b in 0.05f64..200.0, x in 0.0f64..=1.0) {
        let want = statrs::function::beta::beta_reg(a, b, x);
        prop_assert!((reg_inc_beta(a, b, x) - want).abs() <= 1e-10, "I_{}({}, {})", x, a, b);
    }

    #[test]
    fn incomplete_beta_reflection(a in 0.05f64..100.0, b in 0.05f64..100.0, x in 0.0f64..=1.0) {
        let s = reg_inc_beta(a, b, x) + reg_inc_beta(b, a, 1.0 - x);
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn incomplete_gamma_matches_reference(a in 0.05f64..200.0, x in 0.0f64..400.0) {
        let lower = statrs::function::gamma::gamma_lr(a, x);
        let upper = statrs::function::gamma::gamma_ur(a, x);
        prop_assert!((reg_inc_gamma_lower(a, x) - lower).abs() <= 1e-10);
        prop_assert!((reg_inc_gamma_upper(a, x) - upper).abs() <= 1e-10);
    }

    #[test]
    fn erf_and_normal_cdf_match_reference(z in -8.0f64..8.0) {
        prop_assert!((erf(z) - statrs::function::erf::erf(z)).abs() <= 1e-10);
        let n = Normal::new(0.0, 1.0).unwrap();
        prop_assert!((normal_cdf(z) - n.cdf(z)).abs() <= 1e-10);
    }

    #[test]
    fn distribution_tails_match_reference(x in 0.0f64..40.0, d1 in 1u32..30, d2 in 1u32..200) {
        let (d1, d2) = (d1 as f64, d2 as f64);
        let f = FisherSnedecor::new(d1, d2).unwrap();
        prop_assert!((f_survival(x, d1, d2) - f.sf(x)).abs() <= 1e-9);
        let c = ChiSquared::new(d1).unwrap();
        prop_assert!((chi2_survival(x, d1) - c.sf(x)).abs() <= 1e-9);
        let t = StudentsT::new(0.0, 1.0, d2).unwrap();
        prop_assert!((t_two_sided(x - 20.0, d2) - 2.0 * t.sf((x - 20.0).abs())).abs() <= 1e-9);
    }
}

#[test]
fn normal_quantile_anchors() {
    assert_eq!(normal_cdf(0.0), 0.5);
    assert!((normal_cdf(1.6449) - 0.95).abs() < 1e-5);
    assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
}

#[test]
fn series_and_fraction_agree_at_switch_point() {
    // The lower series and the upper continued fraction meet near x = a + 1.
    for a in [0.5, 2.0, 10.0, 75.0] {
        for dx in [-1e-9, 0.0, 1e-9] {
            let x = a + 1.0 + dx;
            assert!((reg_inc_gamma_lower(a, x) + reg_inc_gamma_upper(a, x) - 1.0).abs() < 1e-13);
        }
    }
}
