use nneq::polar::{boxplus, construct_info_set, transform, PolarCode};
use proptest::prelude::*;

fn code() -> PolarCode {
    PolarCode::default_16_8()
}

fn llrs_for(codeword: &[u8], magnitude: f64) -> Vec<f64> {
    codeword
        .iter()
        .map(|&b| if b == 0 { magnitude } else { -magnitude })
        .collect()
}

proptest! {
    #[test]
    fn encoding_is_linear(a in prop::collection::vec(0u8..=1, 8), b in prop::collection::vec(0u8..=1, 8)) {
        let c = code();
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let ca = c.encode(&a).unwrap();
        let cb = c.encode(&b).unwrap();
        let expected: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
        prop_assert_eq!(c.encode(&sum).unwrap(), expected);
    }

    #[test]
    fn transform_is_an_involution(bits in prop::collection::vec(0u8..=1, 64)) {
        let mut x = bits.clone();
        transform(&mut x);
        transform(&mut x);
        prop_assert_eq!(x, bits);
    }

    #[test]
    fn sc_recovers_clean_codewords(msg in prop::collection::vec(0u8..=1, 8), mag in 0.5f64..30.0) {
        let c = code();
        let cw = c.encode(&msg).unwrap();
        prop_assert_eq!(c.sc_decode(&llrs_for(&cw, mag)).unwrap(), msg);
    }

    #[test]
    fn boxplus_is_symmetric_and_bounded(a in -40.0f64..40.0, b in -40.0f64..40.0) {
        let v = boxplus(a, b);
        prop_assert!((v - boxplus(b, a)).abs() < 1e-12);
        prop_assert!(v.abs() <= a.abs().min(b.abs()) + 1e-12);
        prop_assert!(v.signum() == (a * b).signum() || v == 0.0);
    }
}

#[test]
fn default_information_set() {
    assert_eq!(code().info_set(), &[7, 9, 10, 11, 12, 13, 14, 15]);
    assert_eq!(
        construct_info_set(16, 8, 0.5).unwrap(),
        vec![7, 9, 10, 11, 12, 13, 14, 15]
    );
}

#[test]
fn codebook_has_distinct_codewords() {
    let book = code().codebook();
    assert_eq!(book.len(), 256);
    let mut words: Vec<_> = book.iter().map(|(_, c)| c.clone()).collect();
    words.sort();
    words.dedup();
    assert_eq!(words.len(), 256);
    // Minimum distance of a linear code equals the lightest nonzero codeword.
    let dmin = book
        .iter()
        .filter(|(m, _)| m.contains(&1))
        .map(|(_, c)| c.iter().filter(|&&b| b == 1).count())
        .min()
        .unwrap();
    assert_eq!(dmin, 4);
}

#[test]
fn boxplus_matches_tanh_rule() {
    for (a, b) in [(1.0, 2.0), (-0.5, 3.0), (4.0, -4.0), (0.1, 0.2)] {
        let direct = 2.0 * ((a / 2.0f64).tanh() * (b / 2.0f64).tanh()).atanh();
        assert!((boxplus(a, b) - direct).abs() < 1e-12);
    }
}

#[test]
fn rejects_bad_parameters() {
    assert!(PolarCode::new(12, 6, 0.5).is_err());
    assert!(PolarCode::new(16, 0, 0.5).is_err());
    assert!(PolarCode::new(16, 8, 1.5).is_err());
    assert!(code().encode(&[0, 1]).is_err());
    assert!(code().sc_decode(&[0.0; 8]).is_err());
}
