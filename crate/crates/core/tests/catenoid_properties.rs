use lingrowth::catenoid::{envelope_bound, neck_limit, profile_value, profile_value_substituted};
use lingrowth::{CatenoidSpec, Convention, Density, Height, Sign};
use proptest::prelude::*;

fn densities() -> Vec<Density> {
    vec![
        Density::area(),
        Density::mu(2.5).unwrap(),
        Density::mu(3.0).unwrap(),
        Density::mu(4.0).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn routes_agree(alpha in 0.2f64..3.0, ratio in 1.0005f64..8.0, n in 2u32..6, a in -2.0f64..2.0) {
        for d in densities() {
            let spec = CatenoidSpec::new(Sign::Plus, alpha, a, n, Convention::Section2).unwrap();
            let rho = spec.neck_radius() * ratio;
            let x = profile_value(&d, &spec, rho).unwrap().to_f64();
            let y = profile_value_substituted(&d, &spec, rho).unwrap().to_f64();
            prop_assert!((x - y).abs() <= 1e-8, "{}: {x} vs {y}", d.name());
        }
    }

    #[test]
    fn signs_mirror_about_the_offset(alpha in 0.2f64..3.0, ratio in 1.001f64..8.0, a in -2.0f64..2.0) {
        for d in densities() {
            let plus = CatenoidSpec::new(Sign::Plus, alpha, a, 2, Convention::Section2).unwrap();
            let minus = CatenoidSpec { sign: Sign::Minus, ..plus };
            let rho = alpha * ratio;
            let p = profile_value(&d, &plus, rho).unwrap().to_f64();
            let m = profile_value(&d, &minus, rho).unwrap().to_f64();
            // Exact up to the rounding of adding and removing the offset.
            prop_assert!(((p - a) + (m - a)).abs() <= 4.0 * f64::EPSILON * (a.abs() + p.abs()));
            let p0 = profile_value(&d, &CatenoidSpec { offset_a: 0.0, ..plus }, rho).unwrap().to_f64();
            let m0 = profile_value(&d, &CatenoidSpec { offset_a: 0.0, ..minus }, rho).unwrap().to_f64();
            prop_assert_eq!(p0, -m0);
        }
    }

    #[test]
    fn envelope_is_a_shifted_minus_catenoid(r in 0.05f64..0.9, t in 0.05f64..1.0, m_r in -1.0f64..1.0, n in 2u32..5) {
        let big_r = 1.0;
        let rho = r + t * (big_r - r);
        prop_assume!(rho > r * 1.0001);
        let d = Density::area();
        let alpha = r.powi(n as i32 - 1);
        let rise = profile_value(&d, &CatenoidSpec::new(Sign::Plus, alpha, 0.0, n, Convention::Section2).unwrap(), big_r)
            .unwrap()
            .to_f64();
        let minus = CatenoidSpec::new(Sign::Minus, alpha, m_r + rise, n, Convention::Section2).unwrap();
        let expected = profile_value(&d, &minus, rho).unwrap().to_f64();
        let got = envelope_bound(&d, r, rho, big_r, m_r, n).unwrap();
        // envelope_bound integrates from rho to R; the minus catenoid
        // descends from the neck, so the two differ by the neck rise.
        let rise_rho = profile_value(&d, &CatenoidSpec { sign: Sign::Plus, offset_a: 0.0, ..minus }, rho).unwrap().to_f64();
        prop_assert!((got - (m_r + rise - rise_rho)).abs() <= 1e-8);
        prop_assert!((got - expected).abs() <= 1e-8, "{got} vs {expected}");
    }
}

#[test]
fn neck_dichotomy() {
    for d in densities() {
        let spec = CatenoidSpec::new(Sign::Minus, 1.0, 0.3, 2, Convention::Section2).unwrap();
        assert_eq!(neck_limit(&d, &spec).unwrap(), Height::Finite(0.3));
        let gaps: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10]
            .iter()
            .map(|gap| (profile_value(&d, &spec, 1.0 + gap).unwrap().to_f64() - 0.3).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{}: {gaps:?}", d.name());
        assert!(gaps[4] < 1e-2, "{}: {gaps:?}", d.name());
    }
    for mu in [1.5, 2.0] {
        let d = Density::mu(mu).unwrap();
        let spec = CatenoidSpec::new(Sign::Minus, 0.25, 0.0, 2, Convention::Section3).unwrap();
        assert_eq!(neck_limit(&d, &spec).unwrap(), Height::Unbounded { positive: true });
        let values: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8]
            .iter()
            .map(|gap| profile_value(&d, &spec, 0.25 + gap).unwrap().to_f64())
            .collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]), "mu={mu}: {values:?}");
    }
}
