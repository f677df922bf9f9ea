//! Structured-text datasets: molecule geometry, gas polarizability and atomic
//! increment tables. All three are TOML; lengths are in angstrom, masses in
//! dalton, frequencies and polarizabilities in atomic units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomRecord {
    pub symbol: String,
    /// Mass in dalton.
    pub mass: f64,
    /// Cartesian position in angstrom.
    pub position: [f64; 3],
}

/// Molecule file.
///
/// ```toml
/// name = "D2S2"
/// provenance = "..."
/// bonds = [[0, 1], [0, 2], [1, 3]]
/// [[atom]]
/// symbol = "S"
/// mass = 31.97207117
/// position = [-1.025, 0.0, 0.0]
/// ```
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MoleculeFile {
    pub name: String,
    #[serde(default)]
    pub provenance: String,
    #[serde(default)]
    pub bonds: Vec<[usize; 2]>,
    #[serde(rename = "atom")]
    pub atoms: Vec<AtomRecord>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Lorentzian {
    /// Oscillator strength f_s.
    pub strength: f64,
    /// Transition frequency ω_s (Hartree).
    pub frequency: f64,
}

/// Gas-atom file: α(iω) = Σ_s f_s / (ω_s² + ω²).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GasFile {
    pub name: String,
    #[serde(default)]
    pub provenance: String,
    /// Mass in dalton.
    pub mass: f64,
    #[serde(rename = "lorentzian")]
    pub lorentzians: Vec<Lorentzian>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomIncrement {
    pub symbol: String,
    /// Isotropic static polarizability (a.u.).
    pub alpha_iso: f64,
    /// Drude frequency ω_a (Hartree).
    pub drude_frequency: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BondIncrement {
    /// Symbols of the two bonded atoms (order irrelevant).
    pub atoms: [String; 2],
    /// Polarizability anisotropy Δα per bonded atom, added as Δα (u uᵀ − 1/3).
    #[serde(default)]
    pub alpha_aniso: f64,
    /// Dipole–quadrupole increment per bonded atom, added as
    /// a₃ u_i (u_j u_k − δ_jk/3), with u pointing from the atom along the bond.
    #[serde(default)]
    pub a3: f64,
}

/// Increment table file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IncrementFile {
    #[serde(default)]
    pub provenance: String,
    /// Normalization convention of A_{i,jk}; informational.
    #[serde(default)]
    pub convention: String,
    #[serde(rename = "atom")]
    pub atoms: Vec<AtomIncrement>,
    #[serde(default, rename = "bond")]
    pub bonds: Vec<BondIncrement>,
}

fn finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Dataset(format!("{what} is not finite")))
    }
}

pub fn parse_molecule(text: &str) -> Result<MoleculeFile> {
    let m: MoleculeFile = toml::from_str(text).map_err(|e| Error::Dataset(format!("molecule: {e}")))?;
    if m.atoms.is_empty() {
        return Err(Error::Dataset("molecule has no atoms".into()));
    }
    for a in &m.atoms {
        finite(a.mass, "atom mass")?;
        if a.mass <= 0.0 {
            return Err(Error::Dataset(format!("atom {} has nonpositive mass", a.symbol)));
        }
        for x in a.position {
            finite(x, "atom position")?;
        }
    }
    for b in &m.bonds {
        if b[0] >= m.atoms.len() || b[1] >= m.atoms.len() || b[0] == b[1] {
            return Err(Error::Dataset(format!("invalid bond {:?}", b)));
        }
    }
    Ok(m)
}

pub fn parse_gas(text: &str) -> Result<GasFile> {
    let g: GasFile = toml::from_str(text).map_err(|e| Error::Dataset(format!("gas: {e}")))?;
    finite(g.mass, "gas mass")?;
    if g.mass <= 0.0 {
        return Err(Error::Dataset("gas mass must be positive".into()));
    }
    for l in &g.lorentzians {
        finite(l.strength, "lorentzian strength")?;
        finite(l.frequency, "lorentzian frequency")?;
        if l.frequency <= 0.0 || l.strength < 0.0 {
            return Err(Error::Dataset("lorentzian needs frequency > 0 and strength >= 0".into()));
        }
    }
    Ok(g)
}

pub fn parse_increments(text: &str) -> Result<IncrementFile> {
    let t: IncrementFile = toml::from_str(text).map_err(|e| Error::Dataset(format!("increments: {e}")))?;
    for a in &t.atoms {
        finite(a.alpha_iso, "alpha_iso")?;
        finite(a.drude_frequency, "drude_frequency")?;
        if a.drude_frequency <= 0.0 {
            return Err(Error::Dataset(format!("Drude frequency for {} must be positive", a.symbol)));
        }
    }
    for b in &t.bonds {
        finite(b.alpha_aniso, "alpha_aniso")?;
        finite(b.a3, "a3")?;
    }
    Ok(t)
}

pub const DEFAULT_MOLECULE: &str = include_str!("../../../data/d2s2.toml");
pub const DEFAULT_GAS: &str = include_str!("../../../data/helium.toml");
pub const DEFAULT_INCREMENTS: &str = include_str!("../../../data/increments.toml");
