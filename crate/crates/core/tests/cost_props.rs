use proptest::prelude::*;
use raas_core::cost::{
    arrangement_cost, leaving_rate, passenger_split, payment_factor, payment_phase,
    willingness_to_wait,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn payment_phase_is_piecewise(ta in 0.0..20_000.0f64, td in 60.0..14_400.0f64,
                                  p_min in 0.0..0.9f64, gap in 0.01..1.0f64) {
        let p_max = p_min + gap;
        let y = payment_phase(ta, td, p_min, p_max).unwrap();
        let f = payment_factor(ta, td, p_min, p_max);
        if ta <= td / 2.0 {
            prop_assert_eq!(y, 1.0);
            prop_assert!((f - p_max).abs() <= 1e-12);
        } else if ta < td {
            prop_assert_eq!(y, 0.0);
            prop_assert!((f - p_min).abs() <= 1e-12);
        } else {
            prop_assert!((y + p_min / (p_max - p_min)).abs() <= 1e-12);
            prop_assert_eq!(f, 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn leaving_rate_stays_between_its_floors(a in 0.0..20_000.0f64, b in 0.0..20_000.0f64,
                                             alpha in 0.0..0.5f64, beta in 0.0..0.5f64) {
        let td = 7200.0;
        let (lo, hi) = (a.min(b), a.max(b));
        let l_lo = leaving_rate(lo, td, alpha, beta);
        let l_hi = leaving_rate(hi, td, alpha, beta);
        prop_assert!(l_lo <= l_hi);
        prop_assert!(l_lo >= alpha - 1e-12 && l_hi <= 1.0 - beta + 1e-12);
        let w = willingness_to_wait(lo, td, 0.2);
        prop_assert!((0.2 - 1e-12..=1.0).contains(&w));
    }

    #[test]
    fn split_conserves_passengers(v in 0.0..2000.0f64, l in 0.0..1.0f64, cap in 0u64..3000) {
        let s = passenger_split(v, l, cap);
        prop_assert_eq!(s.v, v.round() as u64);
        prop_assert_eq!(s.vl + s.vw + s.served, s.v);
        prop_assert!(s.served <= cap);
        prop_assert!(s.vw == 0 || s.served == cap);
    }

    #[test]
    fn faster_arrangement_costs_more(t in 1.0..1e5f64, ta in 0.0..7200.0f64, dt in 0.0..7200.0f64) {
        prop_assert!(arrangement_cost(t, 0.2, ta) >= arrangement_cost(t, 0.2, ta + dt));
    }
}

#[test]
fn degenerate_rates_are_an_error() {
    assert!(payment_phase(10.0, 100.0, 0.5, 0.5).is_err());
    assert_eq!(payment_factor(10.0, 100.0, 0.5, 0.5), 0.5);
    assert_eq!(payment_factor(100.0, 100.0, 0.5, 0.5), 0.0);
}
