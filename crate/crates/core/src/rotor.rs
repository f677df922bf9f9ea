//! Rigid asymmetric top: principal axes, rotational constants, Wang-blocked
//! eigenstates and thermal weights.
//!
//! Body frame (prolate representation): z = a, x = b, y = c, with the axis
//! triad right-handed so that pseudoscalar tensor components are well defined.
//! Rotor functions are ψ_{jkm}(ω) = √((2j+1)/8π²) D^{j*}_{mk}(ω); the eigenstates
//! are real combinations Σ_k c_k ψ_{jkm}.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};

use crate::datasets::MoleculeFile;
use crate::error::{Error, Result};
use crate::units::{angstrom_to_bohr, dalton_to_me, HARTREE_PER_KELVIN};

#[derive(Clone, Debug, PartialEq)]
pub struct BodyAtom {
    pub symbol: String,
    /// Mass in electron masses.
    pub mass: f64,
    /// Position in bohr, body frame, origin at the centre of mass.
    pub position: [f64; 3],
}

/// Principal moments (ascending, m_e·bohr²) with the matching rotational
/// constants; a vanishing moment leaves its constant undefined.
#[derive(Clone, Debug)]
pub struct Inertia {
    pub moments: [f64; 3],
    pub constants: [Option<f64>; 3],
    /// Columns are the principal axes (lab frame) for the a, b, c moments,
    /// with the c axis oriented so the triad (b, c, a) is right-handed.
    pub axes: Matrix3<f64>,
    pub center_of_mass: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct RotorSpec {
    pub name: String,
    /// Rotational constants (Hartree), A ≥ B ≥ C.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub atoms: Vec<BodyAtom>,
    pub bonds: Vec<[usize; 2]>,
    pub provenance: String,
}

/// Irreducible representation of D2 in the body frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum D2Species {
    A,
    Ba,
    Bb,
    Bc,
}

impl D2Species {
    pub fn from_characters(chi_a: i8, chi_c: i8) -> Self {
        match (chi_a, chi_c) {
            (1, 1) => D2Species::A,
            (1, -1) => D2Species::Ba,
            (-1, -1) => D2Species::Bb,
            _ => D2Species::Bc,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            D2Species::A => "A",
            D2Species::Ba => "Ba",
            D2Species::Bb => "Bb",
            D2Species::Bc => "Bc",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(D2Species::A),
            1 => Some(D2Species::Ba),
            2 => Some(D2Species::Bb),
            3 => Some(D2Species::Bc),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotorState {
    pub j: i32,
    /// Energy-ordered pseudo quantum number, −j..=j.
    pub tau: i32,
    /// Energy (Hartree), ground level at zero.
    pub energy: f64,
    /// Wang sign s of the eigenvector, c_{−k} = s·c_k.
    pub parity: i8,
    /// True when only even k contribute.
    pub k_even: bool,
    pub species: D2Species,
    /// Coefficients over k = −j..=j (index k + j).
    pub coeffs: Vec<f64>,
}

impl RotorState {
    pub fn coeff(&self, k: i32) -> f64 {
        if k.abs() > self.j {
            0.0
        } else {
            self.coeffs[(k + self.j) as usize]
        }
    }

    pub fn degeneracy(&self) -> f64 {
        (2 * self.j + 1) as f64
    }
}

/// Principal moments and axes of a set of point masses (bohr, m_e).
pub fn moments_of_inertia(masses: &[f64], positions: &[[f64; 3]]) -> Result<Inertia> {
    if masses.len() < 2 || masses.len() != positions.len() {
        return Err(Error::Domain("need at least two atoms with positions".into()));
    }
    if masses.iter().any(|&m| m <= 0.0 || !m.is_finite()) {
        return Err(Error::Domain("masses must be positive".into()));
    }
    let mt: f64 = masses.iter().sum();
    let mut com = [0.0; 3];
    for (m, p) in masses.iter().zip(positions) {
        for i in 0..3 {
            com[i] += m * p[i] / mt;
        }
    }
    let mut t = Matrix3::zeros();
    for (m, p) in masses.iter().zip(positions) {
        let r = Vector3::new(p[0] - com[0], p[1] - com[1], p[2] - com[2]);
        t += *m * (Matrix3::identity() * r.dot(&r) - r * r.transpose());
    }
    let eig = SymmetricEigen::new(t);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let moments = [eig.eigenvalues[idx[0]], eig.eigenvalues[idx[1]], eig.eigenvalues[idx[2]]];
    let scale = moments[2].abs().max(1e-300);
    let constants = moments.map(|i| if i > 1e-10 * scale { Some(0.5 / i) } else { None });
    let mut axes = Matrix3::zeros();
    for (col, &i) in idx.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        // deterministic sign: largest component positive
        let mut best = 0;
        for r in 1..3 {
            if v[r].abs() > v[best].abs() + 1e-12 {
                best = r;
            }
        }
        if v[best] < 0.0 {
            v = -v;
        }
        axes.set_column(col, &v);
    }
    // body x = b, y = c, z = a must be right-handed
    let bx = axes.column(1).into_owned();
    let cy = axes.column(2).into_owned();
    let az = axes.column(0).into_owned();
    if bx.cross(&cy).dot(&az) < 0.0 {
        axes.set_column(2, &(-cy));
    }
    Ok(Inertia { moments, constants, axes, center_of_mass: com })
}

impl RotorSpec {
    pub fn from_molecule(m: &MoleculeFile) -> Result<Self> {
        let masses: Vec<f64> = m.atoms.iter().map(|a| dalton_to_me(a.mass)).collect();
        let pos: Vec<[f64; 3]> = m.atoms.iter().map(|a| a.position.map(angstrom_to_bohr)).collect();
        let inertia = moments_of_inertia(&masses, &pos)?;
        let [a, b, c] = inertia.constants;
        let (a, b, c) = match (a, b, c) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(Error::Domain(format!(
                    "{}: degenerate (collinear) geometry, principal moments {:?}",
                    m.name, inertia.moments
                )))
            }
        };
        let ax = inertia.axes;
        let atoms = m
            .atoms
            .iter()
            .zip(&pos)
            .zip(&masses)
            .map(|((rec, p), &mass)| {
                let d = Vector3::new(
                    p[0] - inertia.center_of_mass[0],
                    p[1] - inertia.center_of_mass[1],
                    p[2] - inertia.center_of_mass[2],
                );
                // x = b, y = c, z = a
                let body = [d.dot(&ax.column(1)), d.dot(&ax.column(2)), d.dot(&ax.column(0))];
                BodyAtom { symbol: rec.symbol.clone(), mass, position: body }
            })
            .collect();
        Ok(RotorSpec {
            name: m.name.clone(),
            a,
            b,
            c,
            atoms,
            bonds: m.bonds.clone(),
            provenance: m.provenance.clone(),
        })
    }

    /// Spec with given constants and no geometry.
    pub fn from_constants(a: f64, b: f64, c: f64) -> Self {
        RotorSpec { name: "constants".into(), a, b, c, atoms: vec![], bonds: vec![], provenance: String::new() }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Ray asymmetry parameter κ = (2B − A − C)/(A − C).
    pub fn asymmetry(&self) -> f64 {
        (2.0 * self.b - self.a - self.c) / (self.a - self.c)
    }

    /// The same molecule with every body-frame position inverted.
    pub fn inverted(&self) -> Self {
        let mut s = self.clone();
        for a in &mut s.atoms {
            a.position = a.position.map(|x| -x);
        }
        s
    }

    /// Rigid-rotor Hamiltonian for one j over k = −j..=j.
    pub fn hamiltonian(&self, j: i32) -> DMatrix<f64> {
        let n = (2 * j + 1) as usize;
        let jj = (j * (j + 1)) as f64;
        let bc = 0.5 * (self.b + self.c);
        let d = 0.25 * (self.b - self.c);
        let mut h = DMatrix::zeros(n, n);
        for k in -j..=j {
            let i = (k + j) as usize;
            let kf = k as f64;
            h[(i, i)] = bc * (jj - kf * kf) + self.a * kf * kf;
            if k + 2 <= j {
                let v = d * ((jj - kf * (kf + 1.0)) * (jj - (kf + 1.0) * (kf + 2.0))).sqrt();
                h[(i + 2, i)] = v;
                h[(i, i + 2)] = v;
            }
        }
        h
    }
}

/// Energy levels for j = 0..=j_max, each j giving 2j+1 states ordered by
/// energy (ties broken by Wang block), diagonalized block by block in the
/// Wang basis. Energies are relative to the j = 0 level.
pub fn rotor_levels(spec: &RotorSpec, j_max: i32) -> Vec<RotorState> {
    let mut out = Vec::new();
    for j in 0..=j_max.max(0) {
        let h = spec.hamiltonian(j);
        let mut states: Vec<(f64, u8, RotorState)> = Vec::new();
        for (block, (k_even, sign)) in [(true, 1i8), (true, -1), (false, 1), (false, -1)].into_iter().enumerate() {
            // Wang basis vectors: (|K⟩ + s|−K⟩)/√2, K > 0; |0⟩ for s = +1.
            let mut basis: Vec<Vec<f64>> = Vec::new();
            for kk in 0..=j {
                if (kk % 2 == 0) != k_even {
                    continue;
                }
                let mut v = vec![0.0; (2 * j + 1) as usize];
                if kk == 0 {
                    if sign < 0 {
                        continue;
                    }
                    v[j as usize] = 1.0;
                } else {
                    let r = std::f64::consts::FRAC_1_SQRT_2;
                    v[(kk + j) as usize] = r;
                    v[(j - kk) as usize] = sign as f64 * r;
                }
                basis.push(v);
            }
            if basis.is_empty() {
                continue;
            }
            let nb = basis.len();
            let n = (2 * j + 1) as usize;
            let bm = DMatrix::from_fn(n, nb, |r, c| basis[c][r]);
            let hb = bm.transpose() * &h * &bm;
            let eig = SymmetricEigen::new(hb);
            for col in 0..nb {
                let v = &bm * eig.eigenvectors.column(col);
                let mut coeffs: Vec<f64> = v.iter().copied().collect();
                // deterministic overall sign: largest |c_k| with k ≥ 0 positive
                let mut best = j as usize;
                for (i, c) in coeffs.iter().enumerate().skip(j as usize) {
                    if c.abs() > coeffs[best].abs() + 1e-12 {
                        best = i;
                    }
                }
                if coeffs[best] < 0.0 {
                    coeffs.iter_mut().for_each(|c| *c = -*c);
                }
                let chi_a: i8 = if k_even { 1 } else { -1 };
                let kpar = if k_even { 0 } else { 1 };
                let chi_c: i8 = if (j + kpar) % 2 == 0 { sign } else { -sign };
                states.push((
                    eig.eigenvalues[col],
                    block as u8,
                    RotorState {
                        j,
                        tau: 0,
                        energy: eig.eigenvalues[col],
                        parity: sign,
                        k_even,
                        species: D2Species::from_characters(chi_a, chi_c),
                        coeffs,
                    },
                ));
            }
        }
        states.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
        for (i, (_, _, mut s)) in states.into_iter().enumerate() {
            s.tau = i as i32 - j;
            out.push(s);
        }
    }
    out
}

/// Thermal weights ∝ (2j+1) exp(−E/k_B T), normalized over `levels`.
pub fn boltzmann_weights(levels: &[RotorState], t_kelvin: f64) -> Result<Vec<f64>> {
    if levels.is_empty() {
        return Err(Error::Domain("empty level set".into()));
    }
    if t_kelvin < 0.0 || t_kelvin.is_nan() {
        return Err(Error::Domain("temperature must be nonnegative".into()));
    }
    let emin = levels.iter().map(|l| l.energy).fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = if t_kelvin == 0.0 {
        levels
            .iter()
            .map(|l| if (l.energy - emin).abs() <= 1e-14 * (1.0 + emin.abs()) { l.degeneracy() } else { 0.0 })
            .collect()
    } else {
        let kt = t_kelvin * HARTREE_PER_KELVIN;
        levels.iter().map(|l| l.degeneracy() * (-(l.energy - emin) / kt).exp()).collect()
    };
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / s).collect())
}
