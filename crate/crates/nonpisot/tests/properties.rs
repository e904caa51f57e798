//! Property tests for the exact arithmetic, the supertile decomposition,
//! and the config parser.

use nonpisot::algebra::{zl_mul, QLambda, ZLambda};
use nonpisot::config;
use nonpisot::inflation::{substitute_letters, supertile_decompose};
use proptest::prelude::*;

fn zl(a: i64, b: i64) -> ZLambda {
    ZLambda::new(a, b)
}

proptest! {
    #[test]
    fn ring_axioms(a in -1000i64..1000, b in -1000i64..1000,
                   c in -1000i64..1000, d in -1000i64..1000,
                   e in -1000i64..1000, f in -1000i64..1000) {
        let x = zl(a, b);
        let y = zl(c, d);
        let z = zl(e, f);
        prop_assert_eq!(zl_mul(&x, &y), zl_mul(&y, &x));
        prop_assert_eq!(zl_mul(&zl_mul(&x, &y), &z), zl_mul(&x, &zl_mul(&y, &z)));
        let sum = zl(c.checked_add(e).unwrap(), d.checked_add(f).unwrap());
        let lhs = zl_mul(&x, &sum);
        let l = zl_mul(&x, &y);
        let r = zl_mul(&x, &z);
        let rhs = ZLambda { a: &l.a + &r.a, b: &l.b + &r.b };
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn norm_is_multiplicative(a in -1000i64..1000, b in -1000i64..1000,
                              c in -1000i64..1000, d in -1000i64..1000) {
        let x = zl(a, b);
        let y = zl(c, d);
        let ln = x.norm();
        let rn = y.norm();
        prop_assert_eq!(zl_mul(&x, &y).norm(), &ln * &rn);
        // Conjugation is a ring homomorphism.
        prop_assert_eq!(zl_mul(&x, &y).conj(), zl_mul(&x.conj(), &y.conj()));
    }

    #[test]
    fn exact_sign_matches_float(a in -100_000i64..100_000, b in -100_000i64..100_000) {
        let x = zl(a, b);
        let f = x.to_f64();
        // The float is accurate to ~1e-10 at this magnitude; x = 0 only at (0,0).
        if f.abs() > 1e-6 {
            prop_assert_eq!(x.sign(), f.signum() as i32);
        } else {
            prop_assert_eq!(x.sign() == 0, a == 0 && b == 0);
        }
    }

    #[test]
    fn field_inverse(p in -500i64..500, q in -500i64..500) {
        prop_assume!(p != 0 || q != 0);
        let x = QLambda::from_integers(p, q);
        let inv = x.inv().unwrap();
        prop_assert_eq!(&x * &inv, QLambda::one());
    }

    #[test]
    fn decompose_round_trips_fixed_point_windows(start in 0usize..2000, len in 1usize..200) {
        let word = substitute_letters(&[0], 7);
        prop_assume!(start + len <= word.len());
        let window = &word[start..start + len];
        let dec = supertile_decompose(window).expect("windows of the fixed point are legal");
        // Rebuild: leading 1s, the substituted preimage, then the truncated
        // block prefix (0 followed by 1s).
        let mut rebuilt = vec![1u8; dec.leading];
        rebuilt.extend(substitute_letters(&dec.preimage(), 1));
        if dec.trailing > 0 {
            rebuilt.push(0);
            rebuilt.extend(vec![1u8; dec.trailing - 1]);
        }
        prop_assert_eq!(rebuilt.as_slice(), window);
    }

    #[test]
    fn config_round_trips(entries in proptest::collection::btree_map(
        "[a-z][a-z0-9_.-]{0,10}", "[ -<>-~]{0,12}", 0..8)) {
        let mut text = String::new();
        for (k, v) in &entries {
            text.push_str(&format!("{k} = {v}\n"));
        }
        let cfg = config::parse_str(&text).unwrap();
        for (k, v) in &entries {
            prop_assert_eq!(cfg.get(k), Some(v.trim()));
        }
    }
}
