//! Two-level configuration dynamics of the tunneling doublet.
//!
//! Convention: |ψ₀⟩, |ψ₁⟩ are σ_z eigenstates and |L⟩, |R⟩ = (|ψ₀⟩ ± |ψ₁⟩)/√2
//! are σ_x eigenstates, so x = ⟨σ_x⟩ = +1 is the pure |L⟩ configuration. With
//! ρ = (1 + x σ_x + y σ_y + z σ_z)/2 the master equation
//!
//!   ∂_t ρ = (1/2i)[ω_z σ_z + ω_x σ_x, ρ] + (γ/2)(σ_x ρ σ_x − ρ)
//!
//! becomes ṙ = M r with
//!
//!   M = [[0, −ω_z, 0], [ω_z, −γ, −ω_x], [0, ω_x, −γ]].

use nalgebra::{Complex, Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// 2π·176 Hz.
pub const D2S2_OMEGA_Z: f64 = 2.0 * std::f64::consts::PI * 176.0;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TwoLevelParams {
    /// Tunneling frequency (s⁻¹).
    pub omega_z: f64,
    /// Collisional shift (s⁻¹).
    pub omega_x: f64,
    /// Decoherence rate (s⁻¹).
    pub gamma: f64,
}

impl TwoLevelParams {
    pub fn new(omega_z: f64, omega_x: f64, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !omega_z.is_finite() || !omega_x.is_finite() || !gamma.is_finite() {
            return Err(Error::Domain(format!("invalid two-level parameters ω_z = {omega_z}, ω_x = {omega_x}, γ = {gamma}")));
        }
        Ok(TwoLevelParams { omega_z, omega_x, gamma })
    }
}

/// Bloch vector (⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConfigState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ConfigState {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let s = ConfigState { x, y, z };
        if !(s.norm() <= 1.0 + 1e-12) {
            return Err(Error::Domain(format!("Bloch vector ({x}, {y}, {z}) lies outside the unit ball")));
        }
        Ok(s)
    }

    pub fn left() -> Self {
        ConfigState { x: 1.0, y: 0.0, z: 0.0 }
    }

    pub fn right() -> Self {
        ConfigState { x: -1.0, y: 0.0, z: 0.0 }
    }

    /// |ψ_ξ⟩ = (|L⟩ + e^{iπξ}|R⟩)/√2 for ξ = 0, 1.
    pub fn psi(xi: u8) -> Self {
        ConfigState { x: 0.0, y: 0.0, z: if xi == 0 { 1.0 } else { -1.0 } }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Population of |L⟩.
    pub fn p_left(&self) -> f64 {
        0.5 * (1.0 + self.x)
    }

    fn vec(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

pub fn bloch_generator(p: &TwoLevelParams) -> Matrix3<f64> {
    Matrix3::new(0.0, -p.omega_z, 0.0, p.omega_z, -p.gamma, -p.omega_x, 0.0, p.omega_x, -p.gamma)
}

pub fn evolve_state(s0: &ConfigState, p: &TwoLevelParams, t: f64) -> ConfigState {
    let r = (bloch_generator(p) * t).exp() * s0.vec();
    ConfigState { x: r[0], y: r[1], z: r[2] }
}

/// Trajectory on `n + 1` equally spaced times in [0, t_end].
pub fn trajectory(s0: &ConfigState, p: &TwoLevelParams, t_end: f64, n: usize) -> Vec<(f64, ConfigState)> {
    let n = n.max(1);
    let dt = t_end / n as f64;
    let step = (bloch_generator(p) * dt).exp();
    let mut r = s0.vec();
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, *s0));
    for i in 1..=n {
        r = step * r;
        out.push((i as f64 * dt, ConfigState { x: r[0], y: r[1], z: r[2] }));
    }
    out
}

/// Null vector of a rank-2 complex 3×3 matrix: the largest cross product of two rows.
fn null_vector(a: &Matrix3<Complex64>) -> Vector3<Complex64> {
    let rows: Vec<Vector3<Complex64>> = (0..3).map(|i| a.row(i).transpose()).collect();
    let cross = |u: &Vector3<Complex64>, v: &Vector3<Complex64>| {
        Vector3::new(u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])
    };
    let mut best = Vector3::zeros();
    let mut best_n = -1.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(&rows[i], &rows[j]);
        let n = c.norm();
        if n > best_n {
            best = c;
            best_n = n;
        }
    }
    if best_n > 0.0 {
        best / Complex::new(best_n, 0.0)
    } else {
        // a ≡ 0 (degenerate): every vector is a null vector
        Vector3::new(Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0))
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecayRates {
    /// −Re λ of the mode with the largest x (configuration) weight.
    pub slow: f64,
    /// −Re λ of the other two modes.
    pub fast: [f64; 2],
    /// The three eigenvalues as (Re, Im), slow mode first.
    pub eigenvalues: Vec<(f64, f64)>,
    /// |x| weight of each normalized eigenvector, same order.
    pub x_weight: Vec<f64>,
}

pub fn decay_rates(p: &TwoLevelParams) -> DecayRates {
    let m = bloch_generator(p);
    let evs = m.complex_eigenvalues();
    let mc: Matrix3<Complex64> = m.map(|v| Complex::new(v, 0.0));
    let mut modes: Vec<(Complex64, f64)> = evs
        .iter()
        .map(|&l| {
            let v = null_vector(&(mc - Matrix3::from_diagonal_element(l)));
            (l, v[0].norm())
        })
        .collect();
    // slow mode: largest x weight, ties broken by smaller decay
    modes.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then((-a.0.re).partial_cmp(&(-b.0.re)).unwrap()));
    DecayRates {
        slow: -modes[0].0.re,
        fast: [-modes[1].0.re, -modes[2].0.re],
        eigenvalues: modes.iter().map(|m| (m.0.re, m.0.im)).collect(),
        x_weight: modes.iter().map(|m| m.1).collect(),
    }
}

/// Real unit eigenvector of the slow mode, sign chosen with x ≥ 0. For
/// γ ≫ ω_z, |ω_x| it approaches the configuration axis x with a tilt of
/// order ω_z/γ.
pub fn slow_mode_axis(p: &TwoLevelParams) -> Vector3<f64> {
    let r = decay_rates(p);
    let l = Complex::new(r.eigenvalues[0].0, r.eigenvalues[0].1);
    let mc: Matrix3<Complex64> = bloch_generator(p).map(|v| Complex::new(v, 0.0));
    let v = null_vector(&(mc - Matrix3::from_diagonal_element(l)));
    // fix the complex phase so the largest component is real
    let k = (0..3).max_by(|&a, &b| v[a].norm().partial_cmp(&v[b].norm()).unwrap()).unwrap();
    let ph = v[k].conj() / v[k].norm();
    let mut a = Vector3::new((v[0] * ph).re, (v[1] * ph).re, (v[2] * ph).re);
    a /= a.norm();
    if a[0] < 0.0 {
        -a
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type C2 = nalgebra::Matrix2<Complex64>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex::new(re, im)
    }

    fn pauli() -> [C2; 3] {
        [
            C2::new(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)),
            C2::new(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)),
            C2::new(c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)),
        ]
    }

    /// Right-hand side of the density-matrix equation, term by term.
    fn rho_dot(rho: &C2, p: &TwoLevelParams) -> C2 {
        let [sx, _, sz] = pauli();
        let h = sz * c(p.omega_z, 0.0) + sx * c(p.omega_x, 0.0);
        let comm = h * rho - rho * h;
        comm * c(0.0, -0.5) + (sx * rho * sx - rho) * c(p.gamma / 2.0, 0.0)
    }

    #[test]
    fn generator_matches_density_matrix_equation() {
        let p = TwoLevelParams::new(1.3, -0.4, 0.7).unwrap();
        let m = bloch_generator(&p);
        let s = pauli();
        for r in [[0.3, -0.2, 0.5], [1.0, 0.0, 0.0], [0.0, 0.6, -0.1]] {
            let rho = (C2::identity() + s[0] * c(r[0], 0.) + s[1] * c(r[1], 0.) + s[2] * c(r[2], 0.)) * c(0.5, 0.);
            let d = rho_dot(&rho, &p);
            let want = m * Vector3::new(r[0], r[1], r[2]);
            for i in 0..3 {
                let comp = (s[i] * d).trace().re;
                assert!((comp - want[i]).abs() < 1e-14, "component {i}");
            }
        }
        // |L⟩ is the +1 eigenvector of σ_x
        let l = nalgebra::Vector2::new(c(1.0, 0.0), c(1.0, 0.0)) / c(2f64.sqrt(), 0.0);
        let sxl = s[0] * l;
        assert!((sxl - l).norm() < 1e-15);
    }

    #[test]
    fn trivial_spectra() {
        let ev = |p: TwoLevelParams| {
            let mut v: Vec<(f64, f64)> = bloch_generator(&p).complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        let v = ev(TwoLevelParams::new(2.0, 0.0, 0.0).unwrap());
        let want = [(0.0, -2.0), (0.0, 0.0), (0.0, 2.0)];
        for (a, b) in v.iter().zip(want) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12, "{v:?}");
        }
        let v = ev(TwoLevelParams::new(0.0, 0.0, 3.0).unwrap());
        for (a, b) in v.iter().zip([(-3.0, 0.0), (-3.0, 0.0), (0.0, 0.0)]) {
            assert!((a.0 - b.0).abs() < 1e-12 && a.1.abs() < 1e-12);
        }
        let p = TwoLevelParams::new(1.0, 0.5, 0.25).unwrap();
        assert!((bloch_generator(&p).trace() + 0.5).abs() < 1e-15);
        assert!(TwoLevelParams::new(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn rabi_oscillation_without_decoherence() {
        let wz = 3.0;
        let p = TwoLevelParams::new(wz, 0.0, 0.0).unwrap();
        let period = 2.0 * std::f64::consts::PI / wz;
        let s0 = ConfigState::left();
        assert_eq!(evolve_state(&s0, &p, 0.0), s0);
        let half = evolve_state(&s0, &p, period / 2.0);
        assert!((half.x + 1.0).abs() < 1e-12);
        let full = evolve_state(&s0, &p, period);
        assert!((full.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zeno_suppressed_decay() {
        let wz = 1.0;
        let g = 100.0;
        let p = TwoLevelParams::new(wz, 0.0, g).unwrap();
        let exact = g / 2.0 - (g * g / 4.0 - wz * wz).sqrt();
        assert!((exact - 0.0100010).abs() < 1e-7);
        let r = decay_rates(&p);
        assert!((r.slow - exact).abs() < 1e-10 * exact.max(1.0), "{r:?}");
        assert!(r.fast.iter().all(|&f| f >= 0.99 * g));
        // x(t) follows the slow mode once the fast ones have died out
        let t1 = 5.0;
        let t2 = 50.0;
        let x1 = evolve_state(&ConfigState::left(), &p, t1).x;
        let x2 = evolve_state(&ConfigState::left(), &p, t2).x;
        let rate = (x1 / x2).ln() / (t2 - t1);
        assert!((rate - exact).abs() < 1e-9, "{rate} vs {exact}");
    }

    #[test]
    fn matrix_exponential_matches_eigen_decomposition() {
        let p = TwoLevelParams::new(1.7, 0.3, 0.9).unwrap();
        let m = bloch_generator(&p);
        let mc: Matrix3<Complex64> = m.map(|v| c(v, 0.0));
        let evs = m.complex_eigenvalues();
        let mut vecs = Matrix3::<Complex64>::zeros();
        for (k, &l) in evs.iter().enumerate() {
            let v = null_vector(&(mc - Matrix3::from_diagonal_element(l)));
            vecs.set_column(k, &v);
        }
        let inv = vecs.try_inverse().unwrap();
        let t = 1.3;
        let s0 = ConfigState::new(0.2, -0.5, 0.4).unwrap();
        let r0: Vector3<Complex64> = s0.vec().map(|v| c(v, 0.0));
        let d = Matrix3::from_diagonal(&evs.map(|l| (l * t).exp()));
        let r = vecs * d * inv * r0;
        let s = evolve_state(&s0, &p, t);
        for (a, b) in [s.x, s.y, s.z].iter().zip(r.iter()) {
            assert!((a - b.re).abs() < 1e-12 && b.im.abs() < 1e-12);
        }
    }

    #[test]
    fn zeno_crossover_on_gamma_grid() {
        let wz = 1.0;
        let gs: Vec<f64> = (0..100).map(|i| 0.1 * 1.1f64.powi(i)).collect();
        let slow: Vec<f64> = gs.iter().map(|&g| decay_rates(&TwoLevelParams::new(wz, 0.0, g).unwrap()).slow).collect();
        let imax = (0..slow.len()).max_by(|&a, &b| slow[a].partial_cmp(&slow[b]).unwrap()).unwrap();
        assert!((gs[imax] / 2.0 - 1.0).abs() < 0.1, "peak at γ = {}", gs[imax]);
        for i in imax + 1..slow.len() - 1 {
            assert!(slow[i + 1] < slow[i]);
        }
        let last = gs.len() - 1;
        assert!((slow[last] * gs[last] / (wz * wz) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn fast_rates_bound_and_zero_gamma() {
        for g in [2.5, 5.0, 40.0] {
            let r = decay_rates(&TwoLevelParams::new(1.0, 0.0, g).unwrap());
            // slow·fast = ω_z² with fast ≥ γ/2, hence fast = γ − slow ≥ γ − 2ω_z²/γ
            assert!(r.fast.iter().all(|&f| f >= g - 2.0 / g - 1e-12), "{g}: {r:?}");
        }
        let r = decay_rates(&TwoLevelParams::new(1.0, 0.2, 0.0).unwrap());
        assert!(r.slow.abs() < 1e-12 && r.fast.iter().all(|f| f.abs() < 1e-12));
    }

    #[test]
    fn slow_axis_tilt_vanishes_at_large_gamma() {
        let tilt = |g: f64| {
            let a = slow_mode_axis(&TwoLevelParams::new(1.0, 0.5, g).unwrap());
            (a[1] * a[1] + a[2] * a[2]).sqrt()
        };
        let (t1, t2) = (tilt(1e2), tilt(1e4));
        assert!(t1 > 0.0 && t2 < 1.1e-2 * t1, "{t1} {t2}");
        // y ≈ −λ x/ω_z with λ ≈ −ω_z²/γ
        let a = slow_mode_axis(&TwoLevelParams::new(1.0, 0.5, 1e3).unwrap());
        assert!((a[1] - 1e-3).abs() < 1e-5, "{a:?}");
        assert!(ConfigState::new(1.0, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn bloch_norm_never_increases(
            wz in 0.0f64..5.0, wx in -3.0f64..3.0, g in 0.0f64..10.0,
            th in 0.0f64..3.14, ph in 0.0f64..6.28, r in 0.0f64..1.0,
            t1 in 0.0f64..4.0, dt in 0.0f64..4.0,
        ) {
            let p = TwoLevelParams::new(wz, wx, g).unwrap();
            let s0 = ConfigState::new(r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()).unwrap();
            let a = evolve_state(&s0, &p, t1);
            let b = evolve_state(&s0, &p, t1 + dt);
            prop_assert!(a.norm() <= s0.norm() + 1e-12);
            prop_assert!(b.norm() <= a.norm() + 1e-12);
        }
    }
}
