use chirostab::angular::{clebsch_gordan, w3j, w6j, wigner3j, HalfInt};
use proptest::prelude::*;

fn triangle(a: i32, b: i32, c: i32) -> bool {
    c >= (a - b).abs() && c <= a + b
}

#[test]
fn three_j_orthogonality_exhaustive() {
    for j1 in 0i32..=5 {
        for j2 in 0..=5 {
            for j3 in (j1 - j2).abs()..=j1 + j2 {
                for m3 in -j3..=j3 {
                    for j3p in (j1 - j2).abs()..=j1 + j2 {
                        let mut s = 0.0;
                        for m1 in -j1..=j1 {
                            let m2 = -m1 - m3;
                            if m2.abs() > j2 {
                                continue;
                            }
                            s += w3j(j1, j2, j3, m1, m2, m3) * w3j(j1, j2, j3p, m1, m2, m3);
                        }
                        let want = if j3 == j3p { 1.0 } else { 0.0 };
                        assert!(((2 * j3 + 1) as f64 * s - want).abs() < 1e-13, "{j1} {j2} {j3} {j3p} {m3}");
                    }
                }
            }
        }
    }
}

#[test]
fn half_integer_orthogonality() {
    let h = |n: i32| HalfInt::from_twice(n);
    // j1 = 3/2, j2 = 1/2 couples to 1 and 2
    for j3 in [2, 4] {
        for m3 in (-j3..=j3).step_by(2) {
            let mut s = 0.0;
            for m1 in (-3..=3).step_by(2) {
                let m2: i32 = -m1 - m3;
                if m2.abs() > 1 {
                    continue;
                }
                s += wigner3j(h(3), h(1), h(j3), h(m1), h(m2), h(m3)).unwrap().powi(2);
            }
            assert!(((j3 + 1) as f64 * s - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn stable_at_j_sixty() {
    // 3j orthogonality and CG completeness at large j
    let (j1, j2) = (60, 60);
    for j3 in [0, 1, 59, 60, 61, 119, 120] {
        let mut s = 0.0;
        for m1 in -j1..=j1 {
            let v = w3j(j1, j2, j3, m1, -m1, 0);
            assert!(v.is_finite());
            s += v * v;
        }
        assert!(((2 * j3 + 1) as f64 * s - 1.0).abs() < 1e-10, "j3={j3}: {s}");
    }
    let mut c = 0.0;
    for j in 0..=120 {
        let v = clebsch_gordan(60, 3, 60, -3, j, 0);
        c += v * v;
    }
    assert!((c - 1.0).abs() < 1e-10);
    // Σ_x (2x+1)(2f+1){a b x; c d f}{a b x; c d g} = δ_fg
    let (a, b, cc, d) = (60i32, 59i32, 58i32, 60i32);
    for (f, g) in [(2, 2), (3, 3), (2, 4), (100, 100)] {
        let mut s = 0.0;
        for x in (a - b).abs().max((cc - d).abs())..=(a + b).min(cc + d) {
            let v1 = w6j(a, b, x, cc, d, f);
            let v2 = w6j(a, b, x, cc, d, g);
            assert!(v1.is_finite() && v2.is_finite());
            s += (2 * x + 1) as f64 * (2 * f + 1) as f64 * v1 * v2;
        }
        let want = if f == g { 1.0 } else { 0.0 };
        assert!((s - want).abs() < 1e-9, "{f} {g}: {s}");
    }
}

fn six(j: [i32; 6]) -> f64 {
    w6j(j[0], j[1], j[2], j[3], j[4], j[5])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]
    #[test]
    fn six_j_permutation_and_regge(j in prop::array::uniform6(0i32..=8)) {
        let [a, b, c, d, e, f] = j;
        let v = six(j);
        prop_assert!(v.is_finite());
        // column permutations
        for p in [[b, a, c, e, d, f], [a, c, b, d, f, e], [c, b, a, f, e, d], [b, c, a, e, f, d], [c, a, b, f, d, e]] {
            prop_assert!((six(p) - v).abs() < 1e-13);
        }
        // upper/lower exchange in two columns
        prop_assert!((six([d, e, c, a, b, f]) - v).abs() < 1e-13);
        prop_assert!((six([a, e, f, d, b, c]) - v).abs() < 1e-13);
        // Regge: {a b c; d e f} = {a t−b t−c; d t−e t−f}, t = (b+c+e+f)/2
        let s1 = b + c + e + f;
        if s1 % 2 == 0 {
            let t = s1 / 2;
            let r = [a, t - b, t - c, d, t - e, t - f];
            if r.iter().all(|&x| x >= 0) {
                let lhs = six(r);
                prop_assert!((lhs - v).abs() < 1e-13, "{:?} vs {:?}: {} {}", j, r, lhs, v);
            }
        }
        // zero outside the triangle rule
        if !(triangle(a, b, c) && triangle(a, e, f) && triangle(d, b, f) && triangle(d, e, c)) {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn three_j_column_symmetries(j1 in 0i32..=8, j2 in 0i32..=8, j3 in 0i32..=16, m1 in -8i32..=8, m2 in -8i32..=8) {
        let m3 = -m1 - m2;
        let v = w3j(j1, j2, j3, m1, m2, m3);
        let sg = if (j1 + j2 + j3) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((w3j(j2, j3, j1, m2, m3, m1) - v).abs() < 1e-14);
        prop_assert!((w3j(j2, j1, j3, m2, m1, m3) - sg * v).abs() < 1e-14);
        prop_assert!((w3j(j1, j2, j3, -m1, -m2, -m3) - sg * v).abs() < 1e-14);
    }
}
