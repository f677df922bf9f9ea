use chirostab::angular::ln_factorial;
use chirostab::channels::{build_channel_basis, coupling_matrix, first_chiral_level, potential_matrix, ChannelBasis, Truncation};
use chirostab::dispersion::PotentialSurface;
use chirostab::quadrature::gauss_legendre;
use chirostab::rotor::RotorState;
use chirostab::system::MolecularSystem;
use chirostab::units::kelvin_to_hartree;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Wigner small-d from the explicit factorial sum.
fn small_d(j: i32, mp: i32, m: i32, beta: f64) -> f64 {
    let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let pre = 0.5 * (ln_factorial((j + mp) as i64) + ln_factorial((j - mp) as i64) + ln_factorial((j + m) as i64) + ln_factorial((j - m) as i64));
    let mut sum = 0.0;
    for k in 0..=2 * j {
        let (a, b, cc, d) = (j + m - k, k, mp - m + k, j - mp - k);
        if a < 0 || cc < 0 || d < 0 {
            continue;
        }
        let den = ln_factorial(a as i64) + ln_factorial(b as i64) + ln_factorial(cc as i64) + ln_factorial(d as i64);
        let sg = if (mp - m + k) % 2 == 0 { 1.0 } else { -1.0 };
        sum += sg * (pre - den).exp() * c.powi(2 * j + m - mp - 2 * k) * s.powi(mp - m + 2 * k);
    }
    sum
}

fn ylm(l: i32, m: i32, theta: f64, phi: f64) -> Complex64 {
    // Y_lm = √((2l+1)/4π) D^{l*}_{m0}(φ, θ, 0)
    let d = small_d(l, m, 0, theta);
    Complex64::from_polar(((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * d, m as f64 * phi)
}

fn cg(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    chirostab::angular::clebsch_gordan(j1, m1, j2, m2, j, m)
}

/// R = R_z(α) R_y(β) R_z(γ) applied to v.
fn rotate(a: f64, b: f64, g: f64, v: [f64; 3]) -> [f64; 3] {
    let rz = |t: f64, v: [f64; 3]| [t.cos() * v[0] - t.sin() * v[1], t.sin() * v[0] + t.cos() * v[1], v[2]];
    let ry = |t: f64, v: [f64; 3]| [t.cos() * v[0] + t.sin() * v[2], v[1], -t.sin() * v[0] + t.cos() * v[2]];
    rz(a, ry(b, rz(g, v)))
}

/// Rotor wavefunction √((2j+1)/8π²) Σ_k c_k D^{j*}_{mk}(α, β, γ).
fn rotor_wf(st: &RotorState, m: i32, a: f64, b: f64, g: f64) -> Complex64 {
    let j = st.j;
    let norm = ((2 * j + 1) as f64 / (8.0 * PI * PI)).sqrt();
    let mut s = Complex64::new(0.0, 0.0);
    for k in -j..=j {
        let c = st.coeff(k);
        if c != 0.0 {
            s += c * Complex64::from_polar(small_d(j, m, k, b), m as f64 * a + k as f64 * g);
        }
    }
    s * norm
}

fn i_pow(l: i32) -> Complex64 {
    Complex64::new(0.0, 1.0).powi(l)
}

/// ⟨c'|V(r)|c⟩ by direct quadrature over Euler angles and r̂ at fixed M = 0.
fn quadrature_matrix(basis: &ChannelBasis, surface: &PotentialSurface, r: f64) -> Vec<Vec<Complex64>> {
    let n = basis.len();
    let jm = basis.rotors.iter().map(|s| s.j).max().unwrap();
    let lm = basis.channels.iter().map(|c| c.l).max().unwrap();
    // Gauss–Legendre in the polar angles themselves (weight sin included),
    // uniform in the azimuths
    let nt = 24;
    let nf = (2 * jm + 2 * lm + 6) as usize;
    let (x, w) = gauss_legendre(nt);
    let pol: Vec<(f64, f64)> = x.iter().zip(&w).map(|(&t, &wt)| (PI / 2.0 * (t + 1.0), PI / 2.0 * wt * (PI / 2.0 * (t + 1.0)).sin())).collect();
    let h = 2.0 * PI / nf as f64;
    let az: Vec<f64> = (0..nf).map(|i| i as f64 * h).collect();
    // rotor functions ψ_{rot, m}(α, β, γ) and harmonics Y_{l m}(θ, φ)
    let nr = basis.rotors.len();
    let mut psi = vec![vec![Vec::new(); (2 * jm + 1) as usize]; nr];
    for (ir, st) in basis.rotors.iter().enumerate() {
        for m in -st.j..=st.j {
            let mut v = Vec::with_capacity(nf * nt * nf);
            for &a in &az {
                for &(b, _) in &pol {
                    for &g in &az {
                        v.push(rotor_wf(st, m, a, b, g));
                    }
                }
            }
            psi[ir][(m + jm) as usize] = v;
        }
    }
    let mut ytab = vec![vec![Vec::new(); (2 * lm + 1) as usize]; (lm + 1) as usize];
    for l in 0..=lm {
        for ml in -l..=l {
            let mut v = Vec::with_capacity(nt * nf);
            for &(t, _) in &pol {
                for &p in &az {
                    v.push(ylm(l, ml, t, p));
                }
            }
            ytab[l as usize][(ml + lm) as usize] = v;
        }
    }
    let terms: Vec<Vec<(usize, usize, usize, usize, f64)>> = basis
        .channels
        .iter()
        .map(|c| {
            (-c.j..=c.j)
                .filter(|&mj| mj.abs() <= c.l)
                .map(|mj| (c.rotor, (mj + jm) as usize, c.l as usize, (-mj + lm) as usize, cg(c.j, mj, c.l, -mj, basis.j_total, 0)))
                .filter(|t| t.4 != 0.0)
                .collect()
        })
        .collect();
    let phases: Vec<Complex64> = basis.channels.iter().map(|c| i_pow(c.l)).collect();
    let mut m = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut phi = vec![Complex64::new(0.0, 0.0); n];
    for (ia, &a) in az.iter().enumerate() {
        for (ib, &(b, wbet)) in pol.iter().enumerate() {
            for (ig, &g) in az.iter().enumerate() {
                let ie = (ia * nt + ib) * nf + ig;
                for (it, &(th, wth)) in pol.iter().enumerate() {
                    for (ip, &ph) in az.iter().enumerate() {
                        let iy = it * nf + ip;
                        let rhat = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                        // body-frame direction R⁻¹ r̂
                        let nb = rotate(-g, -b, -a, rhat);
                        let v = surface.eval(r, nb).unwrap();
                        for (ic, tl) in terms.iter().enumerate() {
                            let mut s = Complex64::new(0.0, 0.0);
                            for &(rot, mi, l, mli, k) in tl {
                                s += k * psi[rot][mi][ie] * ytab[l][mli][iy];
                            }
                            phi[ic] = phases[ic] * s;
                        }
                        let wt = wbet * wth * h * h * h * v;
                        for p in 0..n {
                            let cp = phi[p].conj() * wt;
                            for q in 0..n {
                                m[p][q] += cp * phi[q];
                            }
                        }
                    }
                }
            }
        }
    }
    m
}

fn system() -> MolecularSystem {
    MolecularSystem::default_with_core(4.0).unwrap()
}

#[test]
fn coupling_matrix_matches_direct_quadrature() {
    let sys = system();
    let levels = sys.levels(3);
    let e = kelvin_to_hartree(25.0);
    let r = 6.0;
    for jt in [1, 2] {
        let basis = build_channel_basis(jt, levels[0].species, e, Truncation { e_closed_max: 0.0, j_max: 3 }, &levels, sys.mu).unwrap();
        let quad = quadrature_matrix(&basis, &sys.surface_l, r);
        let v6 = potential_matrix(&basis, &sys.surface_l, 6).unwrap() / r.powi(6);
        let v7 = potential_matrix(&basis, &sys.surface_l, 7).unwrap() / r.powi(7);
        let v = v6 + v7;
        let scale = v.amax();
        for p in 0..basis.len() {
            for q in 0..basis.len() {
                let z = quad[p][q];
                assert!((z.re - v[(p, q)]).abs() < 1e-8 * scale, "J={jt} ({p},{q}): {z} vs {}", v[(p, q)]);
                assert!(z.im.abs() < 1e-8 * scale);
            }
        }
    }
}

#[test]
fn first_parity_changing_coupling_is_j3() {
    let sys = system();
    let levels = sys.levels(8);
    let c = first_chiral_level(&levels, &levels[0], &sys.delta_surface()).unwrap();
    assert_eq!(c.j, 3);
    // nothing below j = 3 couples through the chiral term
    for lv in levels.iter().filter(|l| l.species == levels[0].species && l.j < 3 && l.j > 0) {
        let z = (0..=3).map(|mu| chirostab::channels::rotor_factor(lv, &levels[0], 3, mu).abs()).fold(0.0, f64::max);
        assert!(z < 1e-14, "{} {}", lv.j, lv.tau);
    }
}

#[test]
fn basis_holds_one_species_and_even_rank_part_conserves_orbital_parity() {
    let sys = system();
    let levels = sys.levels(6);
    let e = kelvin_to_hartree(30.0);
    let b = build_channel_basis(4, levels[0].species, e, Truncation { e_closed_max: e, j_max: 6 }, &levels, sys.mu).unwrap();
    assert!(b.rotors.iter().all(|r| r.species == levels[0].species));
    let lpar = |l: i32| if l % 2 == 0 { 1 } else { -1 };
    let parities: std::collections::BTreeSet<i32> = b.channels.iter().map(|c| lpar(c.l)).collect();
    assert_eq!(parities.len(), 2);
    // even ranks never mix (-1)^l; the rank-3 chiral term does
    let even = potential_matrix(&b, &sys.surface_l.with_chiral_scale(0.0), 6).unwrap();
    let chiral = potential_matrix(&b, &sys.delta_surface(), 7).unwrap();
    let mut mixed = 0.0f64;
    for (i, ci) in b.channels.iter().enumerate() {
        for (k, ck) in b.channels.iter().enumerate() {
            if lpar(ci.l) != lpar(ck.l) {
                assert!(even[(i, k)].abs() <= 1e-14 * even.amax());
                mixed = mixed.max(chiral[(i, k)].abs());
            } else {
                assert!(chiral[(i, k)].abs() <= 1e-14 * chiral.amax());
            }
        }
    }
    assert!(mixed > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn coupling_matrix_is_symmetric(jt in 0i32..12, e_k in 1.0f64..60.0, scale in -3.0f64..3.0) {
        let sys = system();
        let levels = sys.levels(6);
        let e = kelvin_to_hartree(e_k);
        let b = build_channel_basis(jt, levels[0].species, e, Truncation { e_closed_max: e, j_max: 5 }, &levels, sys.mu).unwrap();
        let w = coupling_matrix(&b, &sys.surface_l.with_chiral_scale(scale)).unwrap();
        let m = w.eval(5.0);
        prop_assert!((&m - m.transpose()).amax() <= 1e-14 * m.amax());
    }
}
