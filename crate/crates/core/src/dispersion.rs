//! Dispersion interaction between the molecule and a structureless gas atom.
//!
//! The molecule's dipole polarizability α(iω) and dipole–quadrupole
//! polarizability A_{i,jk}(iω) are sums of atomic increments scaled by Drude
//! factors. Imaginary-frequency quadrature against the gas polarizability gives
//!
//!   V(r, n) = −C6/r⁶ − n·Q·n/r⁶ + T_{ijk} n_i n_j n_k / r⁷,
//!
//! with n the body-frame unit vector from the molecular centre of mass to the
//! atom. T is odd under inversion of the molecule, so the two enantiomers see
//! T and −T.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::angular::racah_c;
use crate::datasets::{GasFile, IncrementFile, Lorentzian};
use crate::error::{Error, Result};
use crate::quadrature::{semi_infinite_rule, sphere_rule};
use crate::rotor::RotorSpec;

pub type Tensor3 = [[[f64; 3]; 3]; 3];

pub const ZERO3: Tensor3 = [[[0.0; 3]; 3]; 3];

/// Drude factor f_a(ω) = ω_a² / (ω_a² + ω²).
pub fn drude_factor(omega_a: f64, omega: f64) -> f64 {
    if omega.is_infinite() {
        return 0.0;
    }
    let a2 = omega_a * omega_a;
    a2 / (a2 + omega * omega)
}

/// One atom's static tensors about the molecular centre of mass.
#[derive(Clone, Debug)]
pub struct AtomSusceptibility {
    pub symbol: String,
    pub omega: f64,
    pub alpha0: Matrix3<f64>,
    pub a0: Tensor3,
}

#[derive(Clone, Debug)]
pub struct SusceptibilitySet {
    pub atoms: Vec<AtomSusceptibility>,
    pub gas: Vec<Lorentzian>,
}

impl SusceptibilitySet {
    pub fn alpha(&self, omega: f64) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for a in &self.atoms {
            m += a.alpha0 * drude_factor(a.omega, omega);
        }
        m
    }

    pub fn a_tensor(&self, omega: f64) -> Tensor3 {
        let mut t = ZERO3;
        for a in &self.atoms {
            let f = drude_factor(a.omega, omega);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        t[i][j][k] += f * a.a0[i][j][k];
                    }
                }
            }
        }
        t
    }

    pub fn alpha_gas(&self, omega: f64) -> f64 {
        gas_polarizability(&self.gas, omega)
    }
}

pub fn gas_polarizability(gas: &[Lorentzian], omega: f64) -> f64 {
    gas.iter().map(|l| l.strength / (l.frequency * l.frequency + omega * omega)).sum()
}

/// Molecular susceptibilities from the increment table, in the body frame.
pub fn molecule_tensors(table: &IncrementFile, spec: &RotorSpec, gas: &GasFile) -> Result<SusceptibilitySet> {
    let mut atoms = Vec::with_capacity(spec.atoms.len());
    for (ia, atom) in spec.atoms.iter().enumerate() {
        let inc = table
            .atoms
            .iter()
            .find(|x| x.symbol == atom.symbol)
            .ok_or_else(|| Error::Dataset(format!("no increment entry for atom {}", atom.symbol)))?;
        let mut alpha = Matrix3::identity() * inc.alpha_iso;
        let mut a_int = ZERO3;
        for b in &spec.bonds {
            let other = if b[0] == ia {
                b[1]
            } else if b[1] == ia {
                b[0]
            } else {
                continue;
            };
            let os = &spec.atoms[other].symbol;
            let bond = table
                .bonds
                .iter()
                .find(|x| (x.atoms[0] == atom.symbol && &x.atoms[1] == os) || (&x.atoms[0] == os && x.atoms[1] == atom.symbol));
            let Some(bond) = bond else { continue };
            let p = Vector3::from(spec.atoms[other].position) - Vector3::from(atom.position);
            let u = p / p.norm();
            alpha += bond.alpha_aniso * (u * u.transpose() - Matrix3::identity() / 3.0);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let d = if j == k { 1.0 / 3.0 } else { 0.0 };
                        a_int[i][j][k] += bond.a3 * u[i] * (u[j] * u[k] - d);
                    }
                }
            }
        }
        let d = atom.position;
        let mut a0 = a_int;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let mut s = 1.5 * (d[j] * alpha[(k, i)] + d[k] * alpha[(j, i)]);
                    if j == k {
                        for (l, dl) in d.iter().enumerate() {
                            s -= dl * alpha[(l, i)];
                        }
                    }
                    a0[i][j][k] += s;
                }
            }
        }
        atoms.push(AtomSusceptibility { symbol: atom.symbol.clone(), omega: inc.drude_frequency, alpha0: alpha, a0 });
    }
    Ok(SusceptibilitySet { atoms, gas: gas.lorentzians.clone() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Handedness {
    L,
    R,
}

impl Handedness {
    pub fn label(self) -> &'static str {
        match self {
            Handedness::L => "L",
            Handedness::R => "R",
        }
    }
}

/// Integrated dispersion coefficients before any symmetry projection.
#[derive(Clone, Debug)]
pub struct DispersionCoefficients {
    pub c6: f64,
    /// Traceless anisotropic r⁻⁶ tensor: V6 ⊃ −n·Q·n / r⁶.
    pub q: Matrix3<f64>,
    /// Symmetric traceless rank-3 r⁻⁷ tensor: V7 ⊃ T_{ijk} n_i n_j n_k / r⁷.
    pub t3: Tensor3,
    /// Rank-1 r⁻⁷ vector: V7 ⊃ d·n / r⁷.
    pub d7: [f64; 3],
    /// Relative change of C6 between n and 2n frequency nodes.
    pub quadrature_error: f64,
}

/// Handedness-resolved potential surface.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSurface {
    pub c6: f64,
    /// Traceless r⁻⁶ anisotropy (body frame).
    pub quad: [[f64; 3]; 3],
    /// r⁻⁷ coefficient tensor, symmetric and traceless.
    pub chiral: Tensor3,
    pub handedness: Handedness,
    /// Inner hard-wall radius (bohr).
    pub r_core: f64,
}

fn cp_integrals(s: &SusceptibilitySet, n: usize) -> (f64, Matrix3<f64>, Tensor3) {
    let (nodes, weights) = semi_infinite_rule(n, 0.4);
    let mut c6 = 0.0;
    let mut q = Matrix3::zeros();
    let mut g = ZERO3;
    for (&om, &w) in nodes.iter().zip(&weights) {
        let ag = s.alpha_gas(om);
        if ag == 0.0 {
            continue;
        }
        let al = s.alpha(om);
        let iso = al.trace() / 3.0;
        c6 += w * ag * iso;
        q += (w * ag) * (al - Matrix3::identity() * iso);
        let a = s.a_tensor(om);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    g[i][j][k] += w * ag * a[i][j][k];
                }
            }
        }
    }
    c6 *= 3.0 / PI;
    q *= 1.5 / PI;
    for row in g.iter_mut() {
        for col in row.iter_mut() {
            for x in col.iter_mut() {
                *x /= 2.0 * PI;
            }
        }
    }
    (c6, q, g)
}

/// Casimir–Polder quadrature of all coefficients.
pub fn dispersion_tensors(s: &SusceptibilitySet) -> Result<DispersionCoefficients> {
    let (c6, q, g) = cp_integrals(s, 96);
    let (c6b, _, _) = cp_integrals(s, 192);
    let err = if c6b == 0.0 { 0.0 } else { ((c6 - c6b) / c6b).abs() };
    if err > 1e-6 {
        return Err(Error::Numerical(format!("Casimir–Polder quadrature not converged, relative error {err:.2e}")));
    }
    // V7(n) = −(8 G_{abc} n_a n_b n_c + 4 G_{a,ac} n_c)
    let mut sym = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                sym[i][j][k] = (g[i][j][k] + g[i][k][j] + g[j][i][k] + g[j][k][i] + g[k][i][j] + g[k][j][i]) / 6.0;
            }
        }
    }
    let mut tr = [0.0; 3];
    for (c, t) in tr.iter_mut().enumerate() {
        for a in 0..3 {
            *t += sym[a][a][c];
        }
    }
    let mut t3 = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let dij = if i == j { 1.0 } else { 0.0 };
                let dik = if i == k { 1.0 } else { 0.0 };
                let djk = if j == k { 1.0 } else { 0.0 };
                let harmonic = sym[i][j][k] - (dij * tr[k] + dik * tr[j] + djk * tr[i]) / 5.0;
                t3[i][j][k] = -8.0 * harmonic;
            }
        }
    }
    let mut d7 = [0.0; 3];
    for c in 0..3 {
        let mut v = 0.0;
        for a in 0..3 {
            v += g[a][a][c];
        }
        d7[c] = -(8.0 * 3.0 / 5.0 * tr[c] + 4.0 * v);
    }
    Ok(DispersionCoefficients { c6, q, t3, d7, quadrature_error: err })
}

/// The pair of surfaces (L, R). The retained interaction is the part that is
/// invariant under the D2 rotations of the principal frame: the diagonal of Q
/// and the xyz component of T. The L surface uses the molecule as given.
pub fn dispersion_coefficients(s: &SusceptibilitySet, r_core: f64) -> Result<(PotentialSurface, PotentialSurface)> {
    let d = dispersion_tensors(s)?;
    Ok(surfaces_from(&d, r_core))
}

pub fn surfaces_from(d: &DispersionCoefficients, r_core: f64) -> (PotentialSurface, PotentialSurface) {
    let mut quad = [[0.0; 3]; 3];
    for (i, row) in quad.iter_mut().enumerate() {
        row[i] = d.q[(i, i)];
    }
    let mut t = ZERO3;
    let txyz = d.t3[0][1][2];
    for p in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        t[p[0]][p[1]][p[2]] = txyz;
    }
    let l = PotentialSurface { c6: d.c6, quad, chiral: t, handedness: Handedness::L, r_core };
    (l.clone(), l.parity_image())
}

fn cubic(t: &Tensor3, n: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                s += t[i][j][k] * n[i] * n[j] * n[k];
            }
        }
    }
    s
}

fn normalize(n: [f64; 3]) -> [f64; 3] {
    let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    [n[0] / r, n[1] / r, n[2] / r]
}

impl PotentialSurface {
    pub fn isotropic(c6: f64, r_core: f64) -> Self {
        PotentialSurface { c6, quad: [[0.0; 3]; 3], chiral: ZERO3, handedness: Handedness::L, r_core }
    }

    /// The other enantiomer: chiral tensor negated, label swapped.
    pub fn parity_image(&self) -> Self {
        let mut s = self.clone();
        for row in s.chiral.iter_mut() {
            for col in row.iter_mut() {
                for x in col.iter_mut() {
                    *x = -*x;
                }
            }
        }
        s.handedness = match self.handedness {
            Handedness::L => Handedness::R,
            Handedness::R => Handedness::L,
        };
        s
    }

    /// Same surface with the chiral term removed.
    pub fn achiral(&self) -> Self {
        let mut s = self.clone();
        s.chiral = ZERO3;
        s
    }

    /// Scale the chiral term.
    pub fn with_chiral_scale(&self, f: f64) -> Self {
        let mut s = self.clone();
        for row in s.chiral.iter_mut() {
            for col in row.iter_mut() {
                for x in col.iter_mut() {
                    *x *= f;
                }
            }
        }
        s
    }

    /// Angular factor of the r⁻⁶ term.
    pub fn g6(&self, n: [f64; 3]) -> f64 {
        let mut s = -self.c6;
        for i in 0..3 {
            for j in 0..3 {
                s -= n[i] * self.quad[i][j] * n[j];
            }
        }
        s
    }

    /// Angular factor of the r⁻⁷ term.
    pub fn g7(&self, n: [f64; 3]) -> f64 {
        cubic(&self.chiral, n)
    }

    /// V(r, n) in Hartree; n need not be normalized.
    pub fn eval(&self, r: f64, n: [f64; 3]) -> Result<f64> {
        if r <= self.r_core {
            return Err(Error::Domain(format!("r = {r} inside the hard core r_core = {}", self.r_core)));
        }
        let n = normalize(n);
        Ok(self.g6(n) / r.powi(6) + self.g7(n) / r.powi(7))
    }

    /// Expansion coefficients v_λμ with V = Σ_p r^{−p} Σ_λμ v^{(p)}_λμ C_λμ(n).
    /// Returns (p, λ, μ, v) for non-negligible terms, λ ≤ 4.
    pub fn multipoles(&self) -> Vec<(i32, i32, i32, Complex64)> {
        let rule = sphere_rule(8, 16);
        let mut out = Vec::new();
        for (p, f) in [(6, 0usize), (7, 1usize)] {
            let scale = match f {
                0 => self.c6.abs() + self.quad.iter().flatten().map(|x| x.abs()).sum::<f64>(),
                _ => self.chiral.iter().flatten().flatten().map(|x| x.abs()).sum::<f64>(),
            };
            if scale == 0.0 {
                continue;
            }
            for l in 0..=4 {
                for m in -l..=l {
                    let mut v = Complex64::new(0.0, 0.0);
                    for (n, w) in &rule {
                        let g = if f == 0 { self.g6(*n) } else { self.g7(*n) };
                        v += racah_c(l, m, *n).conj() * (g * w);
                    }
                    v *= (2 * l + 1) as f64 / (4.0 * PI);
                    if v.norm() > 1e-13 * scale {
                        out.push((p, l, m, v));
                    }
                }
            }
        }
        out
    }
}

/// Difference V_L − V_R at (r, n).
pub fn delta_v(l: &PotentialSurface, r: &PotentialSurface, dist: f64, n: [f64; 3]) -> Result<f64> {
    Ok(l.eval(dist, n)? - r.eval(dist, n)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drude() {
        assert_eq!(drude_factor(0.3, 0.0), 1.0);
        assert!((drude_factor(0.3, 0.3) - 0.5).abs() < 1e-15);
        assert_eq!(drude_factor(0.3, f64::INFINITY), 0.0);
        assert!(drude_factor(0.3, 1e8) < 1e-15);
    }

    #[test]
    fn london_formula() {
        let (a1, w1, a2, w2) = (5.0, 0.4, 1.4, 1.1);
        let s = SusceptibilitySet {
            atoms: vec![AtomSusceptibility { symbol: "X".into(), omega: w1, alpha0: Matrix3::identity() * a1, a0: ZERO3 }],
            // single Drude gas atom: α(0) ω² / (ω² + ω'²)
            gas: vec![Lorentzian { strength: a2 * w2 * w2, frequency: w2 }],
        };
        let d = dispersion_tensors(&s).unwrap();
        let exact = 1.5 * a1 * a2 * w1 * w2 / (w1 + w2);
        assert!(((d.c6 - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn no_gas_no_c6() {
        let s = SusceptibilitySet {
            atoms: vec![AtomSusceptibility { symbol: "X".into(), omega: 0.3, alpha0: Matrix3::identity(), a0: ZERO3 }],
            gas: vec![],
        };
        assert_eq!(dispersion_tensors(&s).unwrap().c6, 0.0);
    }

    #[test]
    fn homogeneity_and_core() {
        let mut s = PotentialSurface::isotropic(10.0, 4.0);
        s.chiral[0][1][2] = 1.0;
        let n = [0.3, 0.5, 0.8];
        let l = s.clone();
        let r = s.parity_image();
        let a = delta_v(&l, &r, 6.0, n).unwrap();
        let b = delta_v(&l, &r, 12.0, n).unwrap();
        assert!((a / 128.0 - b).abs() < 1e-15 * a.abs());
        assert!(s.eval(3.9, n).is_err());
    }
}
