//! Angular-momentum algebra: Wigner 3j and 6j symbols, Clebsch–Gordan
//! coefficients and spherical harmonics (Condon–Shortley phase).
//!
//! Symbols are evaluated from Racah sums with every term formed in log space,
//! so arguments up to several hundred do not overflow. When the alternating
//! sum cancels by more than three digits it is redone in exact integers.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Angular momentum quantum number stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt {
    pub twice: i32,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };

    pub const fn int(j: i32) -> Self {
        HalfInt { twice: 2 * j }
    }

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt { twice }
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// Integer value; panics on half-integers.
    pub fn as_int(self) -> i32 {
        assert!(self.is_integer(), "half-integer {} used as integer", self.value());
        self.twice / 2
    }
}

impl From<i32> for HalfInt {
    fn from(j: i32) -> Self {
        HalfInt::int(j)
    }
}

const TABLE_LEN: usize = 4096;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; TABLE_LEN];
        for n in 1..TABLE_LEN {
            t[n] = t[n - 1] + (n as f64).ln();
        }
        t
    })
}

/// ln(n!) for n ≥ 0.
pub fn ln_factorial(n: i64) -> f64 {
    debug_assert!(n >= 0);
    if (n as usize) < TABLE_LEN {
        ln_fact_table()[n as usize]
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

fn big_factorial(n: i32) -> BigInt {
    (2..=n.max(1)).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Σ_k (−1)^k num(k)! / Π den(k)! evaluated exactly, returned as ln|S| and sign.
/// Used when the floating-point alternating sum cancels badly.
fn exact_alternating_sum(ks: std::ops::RangeInclusive<i32>, num: impl Fn(i32) -> i32, den: impl Fn(i32) -> Vec<i32>) -> (f64, f64) {
    let slots = den(*ks.start()).len();
    let mut top = vec![0i32; slots];
    for k in ks.clone() {
        for (t, d) in top.iter_mut().zip(den(k)) {
            *t = (*t).max(d);
        }
    }
    let x: BigInt = top.iter().map(|&n| big_factorial(n)).product();
    let mut sum = BigInt::zero();
    for k in ks {
        let d: BigInt = den(k).into_iter().map(big_factorial).product();
        let term = big_factorial(num(k)) * (&x / d);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return (f64::NEG_INFINITY, 0.0);
    }
    let sign = if sum.is_negative() { -1.0 } else { 1.0 };
    let n = sum.abs();
    // n / x ≈ q · 2^{−shift}, keeping ~64 significant bits in q
    let shift = x.bits() as i64 - n.bits() as i64 + 64;
    let q = if shift >= 0 { (n << shift as u64) / &x } else { n / (&x << (-shift) as u64) };
    (q.to_f64().unwrap().ln() - shift as f64 * std::f64::consts::LN_2, sign)
}

/// Sum of alternating terms, falling back to exact arithmetic under heavy cancellation.
fn racah_sum(terms: &[f64], ln_pre: f64, exact: impl FnOnce() -> (f64, f64)) -> f64 {
    let s = pairwise_sum(terms);
    let mag: f64 = terms.iter().map(|t| t.abs()).sum();
    if mag <= 1e3 * s.abs() {
        return s;
    }
    let (ln_s, sign) = exact();
    sign * (ln_pre + ln_s).exp()
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

// Arguments below are twice the angular momenta.
fn triangle_ok(a: i32, b: i32, c: i32) -> bool {
    c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

fn ln_delta(a: i32, b: i32, c: i32) -> f64 {
    let f = |x: i32| ln_factorial((x / 2) as i64);
    f(a + b - c) + f(a - b + c) + f(-a + b + c) - f(a + b + c + 2)
}

fn parity_sign(twice_exponent: i32) -> f64 {
    // (-1)^(x) for x = twice_exponent / 2, an integer
    if (twice_exponent / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3).
pub fn wigner3j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> Result<f64> {
    if j1.twice < 0 || j2.twice < 0 || j3.twice < 0 {
        return Err(Error::Domain("negative angular momentum in 3j symbol".into()));
    }
    Ok(wigner3j_twice(j1.twice, j2.twice, j3.twice, m1.twice, m2.twice, m3.twice))
}

/// 3j symbol for integer arguments.
pub fn w3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    wigner3j_twice(2 * j1, 2 * j2, 2 * j3, 2 * m1, 2 * m2, 2 * m3)
}

/// 3j symbol with all arguments given as twice their values.
pub fn wigner3j_twice(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    if j1 < 0 || j2 < 0 || j3 < 0 {
        return 0.0;
    }
    if m1 + m2 + m3 != 0 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j3 + m3) % 2 != 0 {
        return 0.0;
    }
    if !triangle_ok(j1, j2, j3) {
        return 0.0;
    }
    let h = |x: i32| x / 2;
    let (a1, a2, a3) = (h(j1 + m1), h(j1 - m1), h(j2 + m2));
    let (a4, a5, a6) = (h(j2 - m2), h(j3 + m3), h(j3 - m3));
    let ln_pre = 0.5
        * (ln_delta(j1, j2, j3)
            + ln_factorial(a1 as i64)
            + ln_factorial(a2 as i64)
            + ln_factorial(a3 as i64)
            + ln_factorial(a4 as i64)
            + ln_factorial(a5 as i64)
            + ln_factorial(a6 as i64));
    let t1 = h(j3 - j2 + m1);
    let t2 = h(j3 - j1 - m2);
    let t3 = h(j1 + j2 - j3);
    let t4 = h(j1 - m1);
    let t5 = h(j2 + m2);
    let kmin = 0.max(-t1).max(-t2);
    let kmax = t3.min(t4).min(t5);
    if kmin > kmax {
        return 0.0;
    }
    let mut terms = Vec::with_capacity((kmax - kmin + 1) as usize);
    for k in kmin..=kmax {
        let ln_den = ln_factorial(k as i64)
            + ln_factorial((t1 + k) as i64)
            + ln_factorial((t2 + k) as i64)
            + ln_factorial((t3 - k) as i64)
            + ln_factorial((t4 - k) as i64)
            + ln_factorial((t5 - k) as i64);
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        terms.push(s * (ln_pre - ln_den).exp());
    }
    let exact = || exact_alternating_sum(kmin..=kmax, |_| 0, |k| vec![k, t1 + k, t2 + k, t3 - k, t4 - k, t5 - k]);
    parity_sign(j1 - j2 - m3) * racah_sum(&terms, ln_pre, exact)
}

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}.
pub fn wigner6j(j1: HalfInt, j2: HalfInt, j3: HalfInt, j4: HalfInt, j5: HalfInt, j6: HalfInt) -> f64 {
    wigner6j_twice(j1.twice, j2.twice, j3.twice, j4.twice, j5.twice, j6.twice)
}

/// 6j symbol for integer arguments.
pub fn w6j(j1: i32, j2: i32, j3: i32, j4: i32, j5: i32, j6: i32) -> f64 {
    wigner6j_twice(2 * j1, 2 * j2, 2 * j3, 2 * j4, 2 * j5, 2 * j6)
}

pub fn wigner6j_twice(j1: i32, j2: i32, j3: i32, j4: i32, j5: i32, j6: i32) -> f64 {
    if [j1, j2, j3, j4, j5, j6].iter().any(|&j| j < 0) {
        return 0.0;
    }
    if !(triangle_ok(j1, j2, j3) && triangle_ok(j1, j5, j6) && triangle_ok(j4, j2, j6) && triangle_ok(j4, j5, j3)) {
        return 0.0;
    }
    let h = |x: i32| x / 2;
    let ln_pre = 0.5 * (ln_delta(j1, j2, j3) + ln_delta(j1, j5, j6) + ln_delta(j4, j2, j6) + ln_delta(j4, j5, j3));
    let a = [h(j1 + j2 + j3), h(j1 + j5 + j6), h(j4 + j2 + j6), h(j4 + j5 + j3)];
    let b = [h(j1 + j2 + j4 + j5), h(j2 + j3 + j5 + j6), h(j3 + j1 + j6 + j4)];
    let tmin = *a.iter().max().unwrap();
    let tmax = *b.iter().min().unwrap();
    if tmin > tmax {
        return 0.0;
    }
    let mut terms = Vec::with_capacity((tmax - tmin + 1) as usize);
    for t in tmin..=tmax {
        let mut ln_den = 0.0;
        for &ai in &a {
            ln_den += ln_factorial((t - ai) as i64);
        }
        for &bi in &b {
            ln_den += ln_factorial((bi - t) as i64);
        }
        let s = if t % 2 == 0 { 1.0 } else { -1.0 };
        terms.push(s * (ln_pre + ln_factorial((t + 1) as i64) - ln_den).exp());
    }
    let exact = || {
        exact_alternating_sum(tmin..=tmax, |t| t + 1, |t| {
            let mut d: Vec<i32> = a.iter().map(|&ai| t - ai).collect();
            d.extend(b.iter().map(|&bi| bi - t));
            d
        })
    };
    racah_sum(&terms, ln_pre, exact)
}

/// Clebsch–Gordan coefficient ⟨j1 m1 j2 m2 | J M⟩ for integer arguments.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    let s = if (j1 - j2 + m).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    s * ((2 * j + 1) as f64).sqrt() * w3j(j1, j2, j, m1, m2, -m)
}

/// Orthonormal associated Legendre functions P̄_l^m(x) for fixed m ≥ 0 and
/// l = m..=lmax, including the Condon–Shortley phase and the factor
/// √((2l+1)/4π · (l−m)!/(l+m)!). Element i holds l = m + i.
pub fn normalized_legendre(lmax: i32, m: i32, x: f64) -> Vec<f64> {
    assert!(m >= 0 && m <= lmax);
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for k in 1..=m {
        let kf = k as f64;
        pmm *= -((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * s;
    }
    let mut out = Vec::with_capacity((lmax - m + 1) as usize);
    out.push(pmm);
    if lmax == m {
        return out;
    }
    let mf = m as f64;
    let pm1 = x * (2.0 * mf + 3.0).sqrt() * pmm;
    out.push(pm1);
    for l in (m + 2)..=lmax {
        let lf = l as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
        let n = out.len();
        let v = a * (x * out[n - 1] - b * out[n - 2]);
        out.push(v);
    }
    out
}

/// Spherical harmonic Y_l^m(θ, φ) with the Condon–Shortley phase.
pub fn spherical_harmonic(l: HalfInt, m: HalfInt, theta: f64, phi: f64) -> Complex64 {
    ylm(l.as_int(), m.as_int(), theta, phi)
}

/// Integer-argument spherical harmonic.
pub fn ylm(l: i32, m: i32, theta: f64, phi: f64) -> Complex64 {
    if m.abs() > l || l < 0 {
        return Complex64::new(0.0, 0.0);
    }
    let ma = m.abs();
    let p = normalized_legendre(l, ma, theta.cos());
    let val = p[(l - ma) as usize];
    let e = Complex64::from_polar(val, ma as f64 * phi);
    if m >= 0 {
        e
    } else {
        let s = if ma % 2 == 0 { 1.0 } else { -1.0 };
        s * e.conj()
    }
}

/// Racah-normalized harmonic C_l^m = √(4π/(2l+1)) Y_l^m, evaluated at a unit vector.
pub fn racah_c(l: i32, m: i32, n: [f64; 3]) -> Complex64 {
    let theta = n[2].clamp(-1.0, 1.0).acos();
    let phi = n[1].atan2(n[0]);
    ylm(l, m, theta, phi) * (4.0 * PI / (2 * l + 1) as f64).sqrt()
}
