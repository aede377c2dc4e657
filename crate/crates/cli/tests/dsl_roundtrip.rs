mod common;

use proptest::prelude::*;
use sodelie::liealg::{catalog, CATALOG_NAMES};
use sodelie::polyvf::Variables;
use sodelie_cli::dsl::{parse_field, parse_polynomial, print_field};

#[test]
fn catalog_fields_round_trip() {
    let vars = Variables::xv();
    for name in CATALOG_NAMES {
        for f in catalog(name).unwrap() {
            let printed = print_field(&f);
            let back = parse_field(&printed, &vars).unwrap();
            assert_eq!(back, f, "{name}: {printed}");
            assert_eq!(print_field(&back), printed);
        }
    }
}

#[test]
fn bracket_command_matches_the_library() {
    let r = common::sodelie(&["bracket", "-x*d/dv", "v*d/dx"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let vars = Variables::xv();
    let a = parse_field("-x*d/dv", &vars).unwrap();
    let b = parse_field("v*d/dx", &vars).unwrap();
    let want = sodelie::polyvf::bracket(&a, &b).unwrap();
    assert_eq!(parse_field(r.stdout.trim(), &vars).unwrap(), want);
}

#[test]
fn self_bracket_prints_zero() {
    let r = common::sodelie(&["bracket", "v*d/dx - (3*x*v + x^3)*d/dv", "v*d/dx - (3*x*v + x^3)*d/dv"]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "0\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fuzzed_fields_round_trip(src in common::field_src()) {
        let vars = Variables::xv();
        let f = parse_field(&src, &vars).map_err(|e| TestCaseError::fail(format!("{src}: {e}")))?;
        let printed = print_field(&f);
        let back = parse_field(&printed, &vars).map_err(|e| TestCaseError::fail(format!("{printed}: {e}")))?;
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(print_field(&back), printed);
    }

    #[test]
    fn fuzzed_polynomials_cancel_exactly(src in common::poly_src()) {
        let vars = Variables::xv();
        parse_polynomial(&src, &vars).map_err(|e| TestCaseError::fail(format!("{src}: {e}")))?;
        let difference = format!("({src}) - ({src})");
        prop_assert!(parse_polynomial(&difference, &vars).unwrap().is_zero());
    }
}
