//! High-energy approximations: power-law Born σ, the exponential-Born J
//! integral for η and its two-term asymptotic form, and the β parameter.
//!
//! With q = kβ the exponential-Born argument is
//! φ(J) = (5π/128) q⁵ Γ(J − ½)/Γ(J + 11/2) = (5π/128) q⁵ / P(J − ½),
//! P(x) = x(x+1)…(x+5), and
//! η = (4π/k²) ∫_{1/2}^∞ dJ (2J+1) sin² φ(J).

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::channels::{first_chiral_level, recoupling_factor, rotor_factor};
use crate::dispersion::PotentialSurface;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::rotor::RotorState;

/// Reference two-term constants.
pub const C1: f64 = 3.66;
pub const C2: f64 = 14.4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HighEnergyParams {
    /// bohr⁻¹
    pub k: f64,
    /// bohr
    pub beta: f64,
    /// m_e
    pub mu: f64,
    pub c6: f64,
}

impl HighEnergyParams {
    pub fn energy(&self) -> f64 {
        self.k * self.k / (2.0 * self.mu)
    }
}

fn ln_product(x: f64) -> f64 {
    (0..6).map(|n| (x + n as f64).ln()).sum()
}

fn log_slope(x: f64) -> f64 {
    // d ln P / d ln x
    (0..6).map(|n| x / (x + n as f64)).sum()
}

/// φ(J) for q = kβ; P is evaluated in logs so J up to 10⁶ and beyond is safe.
pub fn born_phase(j: f64, q: f64) -> f64 {
    born_phase_offset(j - 0.5, q)
}

/// φ as a function of x = J − ½, for use close to the pole at J = ½.
pub fn born_phase_offset(x: f64, q: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if q == 0.0 {
        return 0.0;
    }
    (born_ln_amplitude(q) - ln_product(x)).exp()
}

fn born_ln_amplitude(q: f64) -> f64 {
    (5.0 * PI / 128.0).ln() + 5.0 * q.ln()
}

/// x with ln P(x) = target.
fn invert_ln_product(target: f64) -> f64 {
    let mut t = if target > 10.0 {
        ((target / 6.0).exp() - 2.5).max(1.0).ln()
    } else {
        target - 120f64.ln()
    };
    for _ in 0..200 {
        let x = t.exp();
        let f = ln_product(x) - target;
        let step = f / log_slope(x);
        t -= step;
        if step.abs() < 1e-15 * t.abs().max(1.0) {
            break;
        }
    }
    t.exp()
}

/// F(q) = ∫_0^∞ dx (2x+2) sin²(A/P(x)), A = (5π/128)q⁵.
pub fn born_j_integral(q: f64) -> Result<f64> {
    if q < 0.0 || !q.is_finite() {
        return Err(Error::Domain(format!("kβ = {q} must be finite and nonnegative")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let ln_a = born_ln_amplitude(q);
    // x where the argument equals u
    let x_of_u = |u: f64| invert_ln_product(ln_a - u.ln());
    let x_pi = x_of_u(PI);
    // decaying region, x = x_π e^t
    let mut decay = 0.0;
    let (gx, gw) = gauss_legendre(16);
    let t_max = (1.0 / x_pi).ln().max(0.0) + 6.0;
    let panels = (4.0 * t_max).ceil() as usize;
    for p in 0..panels {
        let a = t_max * p as f64 / panels as f64;
        let b = t_max * (p + 1) as f64 / panels as f64;
        for (&xi, &wi) in gx.iter().zip(&gw) {
            let t = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            let x = x_pi * t.exp();
            let u = (ln_a - ln_product(x)).exp();
            decay += 0.5 * (b - a) * wi * (2.0 * x + 2.0) * x * u.sin().powi(2);
        }
    }
    // decay beyond t_max: sin² u ≈ u², u ∝ x⁻⁶ at most
    let x_end = x_pi * t_max.exp();
    let u_end = (ln_a - ln_product(x_end)).exp();
    let slope = log_slope(x_end);
    decay += (2.0 * x_end + 2.0) * x_end * u_end * u_end / (2.0 * slope - 2.0);
    // oscillatory region in u, one chunk per half period of sin²
    let chunks = 4096usize;
    let (ox, ow) = gauss_legendre(10);
    let g = |u: f64| {
        let x = x_of_u(u);
        (2.0 * x + 2.0) * x / (u * log_slope(x))
    };
    let mut osc = 0.0;
    for m in 1..=chunks {
        let a = m as f64 * PI;
        let b = a + PI;
        let mut s = 0.0;
        for (&xi, &wi) in ox.iter().zip(&ow) {
            let u = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            s += wi * g(u) * u.sin().powi(2);
        }
        osc += 0.5 * (b - a) * s;
    }
    // tail u > U: average ½ plus the leading boundary correction
    let u_big = (chunks + 1) as f64 * PI;
    let x_big = x_of_u(u_big);
    let h = 1e-4 * u_big;
    let gp = (g(u_big + h) - g(u_big - h)) / (2.0 * h);
    let tail = 0.5 * (x_big * x_big + 2.0 * x_big) + gp / 8.0;
    let total = decay + osc + tail;
    if !total.is_finite() {
        return Err(Error::Numerical(format!("exponential-Born quadrature failed at kβ = {q}")));
    }
    Ok(total)
}

/// The discrete sum Σ_{J≥0} (2J+1) sin² φ(J) that the integral replaces.
/// Γ(J − ½) is finite at J = 0, so this form obeys the sin²φ ≈ φ² limit.
pub fn born_j_sum(q: f64) -> f64 {
    let a = 5.0 * PI / 128.0 * q.powi(5);
    let mut s = 0.0;
    for j in 0..200000 {
        let x = j as f64 - 0.5;
        let p: f64 = (0..6).map(|n| x + n as f64).product();
        let term = (2 * j + 1) as f64 * (a / p).sin().powi(2);
        s += term;
        if j > 10 && (a / p).abs() < 1e-9 && term < 1e-17 * s {
            break;
        }
    }
    s
}

/// η from the exponential-Born J integral (bohr²).
pub fn eta_exponential_born(k: f64, beta: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::Domain("k must be positive".into()));
    }
    if beta < 0.0 {
        return Err(Error::Domain("β must be nonnegative".into()));
    }
    Ok(4.0 * PI / (k * k) * born_j_integral(k * beta)?)
}

/// Two-term form c₁β^{5/3}k^{−1/3} − c₂β^{5/6}k^{−7/6} with given constants.
pub fn eta_asymptotic_with(k: f64, beta: f64, c1: f64, c2: f64) -> Result<f64> {
    if !(k > 0.0) || beta < 0.0 {
        return Err(Error::Domain("k must be positive and β nonnegative".into()));
    }
    let v = c1 * beta.powf(5.0 / 3.0) * k.powf(-1.0 / 3.0) - c2 * beta.powf(5.0 / 6.0) * k.powf(-7.0 / 6.0);
    if v < 0.0 {
        return Err(Error::Domain(format!("two-term form is negative at kβ = {:.3}", k * beta)));
    }
    Ok(v)
}

/// Two-term form with the reference constants.
pub fn eta_asymptotic(k: f64, beta: f64) -> Result<f64> {
    eta_asymptotic_with(k, beta, C1, C2)
}

/// Leading-order term c₁β^{5/3}k^{−1/3}.
pub fn eta_leading(k: f64, beta: f64, c1: f64) -> f64 {
    c1 * beta.powf(5.0 / 3.0) * k.powf(-1.0 / 3.0)
}

#[derive(Clone, Debug)]
pub struct AsymptoticFit {
    pub c1: f64,
    pub c2: f64,
    /// Remaining fitted coefficients of z² and z³, z = q^{−5/6}.
    pub higher: [f64; 2],
    pub max_residual: f64,
}

/// Least-squares fit of 4πF(q)/q^{5/3} = c₁ − c₂z + a₂z² + a₃z³, z = q^{−5/6},
/// on log-spaced q in [q_lo, q_hi].
pub fn refit_asymptotic(q_lo: f64, q_hi: f64, n: usize) -> Result<AsymptoticFit> {
    if !(q_hi > q_lo) || q_lo <= 0.0 || n < 8 {
        return Err(Error::Domain("need 0 < q_lo < q_hi and at least 8 points".into()));
    }
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let q = q_lo * (q_hi / q_lo).powf(i as f64 / (n - 1) as f64);
        let y = 4.0 * PI * born_j_integral(q)? / q.powf(5.0 / 3.0);
        rows.push((q.powf(-5.0 / 6.0), y));
    }
    let a = nalgebra::DMatrix::from_fn(n, 4, |i, j| rows[i].0.powi(j as i32));
    let b = nalgebra::DVector::from_fn(n, |i, _| rows[i].1);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&b, 1e-14).map_err(|e| Error::Numerical(e.to_string()))?;
    let res = (&a * &c - &b).amax();
    Ok(AsymptoticFit { c1: c[0], c2: -c[1], higher: [c[2], c[3]], max_residual: res })
}

/// ∫_0^∞ w^{−p} sin² w dw for 1 < p < 3, by quadrature.
pub fn sin2_power_integral(p: f64) -> f64 {
    assert!(p > 1.0 && p < 3.0);
    // [0, δ] from the series of sin²w/w², [δ, π] by panels
    let d: f64 = 0.1;
    let series = [1.0, -1.0 / 3.0, 2.0 / 45.0, -1.0 / 315.0, 2.0 / 14175.0];
    let mut head: f64 = series
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let e = 3.0 - p + 2.0 * i as f64;
            c * d.powf(e) / e
        })
        .sum();
    let (gx, gw) = gauss_legendre(16);
    for m in 0..8 {
        let a = d * (PI / d).powf(m as f64 / 8.0);
        let b = d * (PI / d).powf((m + 1) as f64 / 8.0);
        for (&xi, &wi) in gx.iter().zip(&gw) {
            let v = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            head += 0.5 * (b - a) * wi * v.powf(-p) * v.sin().powi(2);
        }
    }
    let chunks = 20000usize;
    let (gx, gw) = gauss_legendre(8);
    let mut body = 0.0;
    for m in 1..chunks {
        let a = m as f64 * PI;
        for (&xi, &wi) in gx.iter().zip(&gw) {
            let v = a + 0.5 * PI * (1.0 + xi);
            body += 0.5 * PI * wi * v.powf(-p) * v.sin().powi(2);
        }
    }
    let u = chunks as f64 * PI;
    let tail = u.powf(1.0 - p) / (2.0 * (p - 1.0)) - p / 8.0 * u.powf(-p - 1.0);
    head + body + tail
}

/// p_n in σ = p_n (2μC_n²/E)^{1/(n−1)}, from the high-ℓ exponential-Born
/// integral with the straight-line phase δ(b) = μC_n c_n/(2k b^{n−1}),
/// c_n = √π Γ((n−1)/2)/Γ(n/2).
pub fn born_prefactor(n: i32) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("power n = {n} must be at least 3")));
    }
    let nf = n as f64;
    let cn = PI.sqrt() * gamma((nf - 1.0) / 2.0) / gamma(nf / 2.0);
    let p = (nf + 1.0) / (nf - 1.0);
    let i_n = sin2_power_integral(p);
    Ok(8.0 * PI * i_n / (nf - 1.0) * (cn / 4.0).powf(2.0 / (nf - 1.0)))
}

/// Total cross section (bohr²) of V = −C_n/r^n at energy `e` (Hartree) for
/// reduced mass `mu` (m_e).
pub fn born_sigma_power(n: i32, cn: f64, e: f64, mu: f64) -> Result<f64> {
    if cn < 0.0 || !(e > 0.0) || !(mu > 0.0) {
        return Err(Error::Domain("need C_n ≥ 0, E > 0, μ > 0".into()));
    }
    if cn == 0.0 {
        return Ok(0.0);
    }
    Ok(born_prefactor(n)? * (2.0 * mu * cn * cn / e).powf(1.0 / (n as f64 - 1.0)))
}

/// β from |⟨Ψ₀|ΔV|Ψ₁⟩| = β⁵/(2μr⁷), with the coupling summed in quadrature
/// over all final orbital channels of Ψ₁ (independent of J).
/// Returns β (bohr) and the coupled level Ψ₁.
pub fn beta_parameter<'a>(delta: &PotentialSurface, levels: &'a [RotorState], mu: f64) -> Result<(f64, Option<&'a RotorState>)> {
    let ground = levels
        .iter()
        .min_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap())
        .ok_or_else(|| Error::Domain("empty level list".into()))?;
    let Some(psi1) = first_chiral_level(levels, ground, delta) else {
        return Ok((0.0, None));
    };
    let terms: Vec<_> = delta.multipoles().into_iter().filter(|t| t.0 == 7).collect();
    // probe J large enough that every ℓ' is allowed
    let jt = 40;
    let mut sq = 0.0;
    for lp in (jt - psi1.j).max(0)..=(jt + psi1.j) {
        let mut z = num_complex::Complex64::new(0.0, 0.0);
        for &(_, lam, m, v) in &terms {
            let rf = rotor_factor(psi1, ground, lam, m);
            if rf != 0.0 {
                z += v * rf * recoupling_factor(jt, psi1.j, lp, ground.j, jt, lam);
            }
        }
        sq += z.norm_sqr();
    }
    let c = sq.sqrt();
    if c == 0.0 {
        return Ok((0.0, None));
    }
    Ok(((2.0 * mu * c).powf(0.2), Some(psi1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_sin2(p: f64) -> f64 {
        -(2f64.powf(p - 2.0)) * gamma(1.0 - p) * (PI * p / 2.0).sin()
    }

    #[test]
    fn sin2_integral_closed_form() {
        for &p in &[4.0 / 3.0, 7.0 / 6.0, 1.4, 2.0, 2.5] {
            let v = sin2_power_integral(p);
            let want = if p == 2.0 { PI / 2.0 } else { closed_form_sin2(p) };
            assert!((v / want - 1.0).abs() < 1e-9, "p={p}: {v} vs {want}");
        }
    }

    #[test]
    fn born_prefactor_six_matches_massey_mohr() {
        // σ = 8.083 (C6/v)^{2/5} in atomic units
        let p6 = born_prefactor(6).unwrap();
        let (mu, c6, e): (f64, f64, f64) = (7000.0, 11.7, 1e-4);
        let v = (2.0 * e / mu).sqrt();
        let mm = 8.083 * (c6 / v).powf(0.4);
        let s = born_sigma_power(6, c6, e, mu).unwrap();
        assert!((s / mm - 1.0).abs() < 2e-4, "{s} vs {mm}, p6 = {p6}");
    }

    #[test]
    fn born_scaling_and_zero() {
        for n in 3..9 {
            let a = born_sigma_power(n, 2.0, 1e-3, 100.0).unwrap();
            let b = born_sigma_power(n, 2.0, 4e-3, 100.0).unwrap();
            assert!((b / a - 4f64.powf(-1.0 / (n as f64 - 1.0))).abs() < 1e-12);
        }
        assert_eq!(born_sigma_power(6, 0.0, 1e-3, 10.0).unwrap(), 0.0);
        assert!(born_sigma_power(2, 1.0, 1e-3, 10.0).is_err());
    }

    #[test]
    fn argument_matches_gamma_ratio() {
        for &j in &[0.75, 1.5, 3.0, 12.5, 80.0] {
            let want = (5.0 * PI / 128.0) * 2f64.powi(5) * gamma(j - 0.5) / gamma(j + 5.5);
            let got = born_phase(j, 2.0);
            assert!((got / want - 1.0).abs() < 1e-12);
        }
        assert!(born_phase(1e6, 50.0).is_finite());
        assert!(born_phase(1e6, 50.0) > 0.0);
    }

    #[test]
    fn eta_small_and_zero_coupling() {
        assert_eq!(eta_exponential_born(1.0, 0.0).unwrap(), 0.0);
        // the Γ(J − ½) pole at the lower limit keeps sin² at its mean ½ over
        // a region of width ∝ q⁵, so F → πA/120 rather than the q¹⁰ law
        for &q in &[1e-3f64, 1e-2] {
            let a = 5.0 * PI / 128.0 * q.powi(5);
            let f = born_j_integral(q).unwrap();
            assert!((f / (PI * a / 120.0) - 1.0).abs() < 1e-3, "q={q}: {f}");
        }
        // the discrete J sum does follow sin²φ ≈ φ²: ∝ q¹⁰
        let s1 = born_j_sum(0.02);
        let s2 = born_j_sum(0.04);
        assert!(((s2 / s1).log2() - 10.0).abs() < 1e-6);
        // direct quadrature in ln(J − ½) of the small-q integrand
        let q = 0.05f64;
        let x0 = (-30f64).exp();
        let direct = crate::quadrature::integrate_panels(
            |t: f64| {
                let x = t.exp();
                (2.0 * x + 2.0) * born_phase_offset(x, q).sin().powi(2) * x
            },
            -30.0,
            8.0,
            40000,
            12,
        ) + 0.5 * (x0 * x0 + 2.0 * x0);
        let got = born_j_integral(q).unwrap();
        assert!((got / direct - 1.0).abs() < 1e-6, "{got} vs {direct}");
    }

    #[test]
    fn moderate_q_against_direct_quadrature() {
        // brute-force J quadrature with many panels
        let q = 3.0;
        // brute-force quadrature in ln x, x = J − ½, fine enough to resolve
        // every oscillation down to x = 10⁻³
        let f = |t: f64| {
            let x = t.exp();
            (2.0 * x + 2.0) * born_phase_offset(x, q).sin().powi(2) * x
        };
        let x: f64 = 1e-3;
        let mut direct = crate::quadrature::integrate_panels(f, x.ln(), 200f64.ln(), 40000, 10);
        // below x the argument exceeds 200 and sin² averages to ½
        let a = (5.0 * PI / 128.0) * q.powi(5) / 120.0;
        direct += 0.5 * (x * x + 2.0 * x);
        let got = born_j_integral(q).unwrap();
        assert!(a / x > 50.0);
        assert!((got / direct - 1.0).abs() < 1e-4, "{got} vs {direct}");
    }

    #[test]
    fn asymptotic_constants_from_analysis() {
        // leading behaviour of F: A^{1/3} I(4/3)/3 − A^{1/6} I(7/6)/2
        let a0 = 5.0 * PI / 128.0;
        let c1 = 4.0 * PI / 3.0 * a0.powf(1.0 / 3.0) * closed_form_sin2(4.0 / 3.0);
        let c2 = 2.0 * PI * a0.powf(1.0 / 6.0) * closed_form_sin2(7.0 / 6.0);
        let fit = refit_asymptotic(30.0, 3000.0, 24).unwrap();
        assert!((fit.c1 / c1 - 1.0).abs() < 1e-4, "c1 {} vs {c1}", fit.c1);
        assert!((fit.c2 / c2 - 1.0).abs() < 1e-2, "c2 {} vs {c2}", fit.c2);
        // the refitted two-term form tracks the integral at kβ = 50
        let (k, beta) = (5.0, 10.0);
        let exact = eta_exponential_born(k, beta).unwrap();
        let approx = eta_asymptotic_with(k, beta, fit.c1, fit.c2).unwrap();
        assert!((approx / exact - 1.0).abs() < 0.01, "{approx} vs {exact}");
    }

    #[test]
    fn asymptotic_scaling() {
        let a = eta_leading(1.0, 3.0, C1);
        assert!((eta_leading(8.0, 3.0, C1) / a - 0.5).abs() < 1e-12);
        assert!((eta_leading(1.0, 6.0, C1) / a - 2f64.powf(5.0 / 3.0)).abs() < 1e-12);
        assert!(eta_asymptotic(1.0, 0.5).is_err());
        assert!(eta_asymptotic(10.0, 10.0).unwrap() > 0.0);
    }
}
