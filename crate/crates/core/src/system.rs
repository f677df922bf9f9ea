//! A molecule–gas pair assembled from the three dataset files.

use crate::datasets::{self, GasFile, IncrementFile, MoleculeFile};
use crate::dispersion::{dispersion_tensors, molecule_tensors, surfaces_from, DispersionCoefficients, PotentialSurface, ZERO3};
use crate::error::Result;
use crate::rotor::{rotor_levels, RotorSpec, RotorState};
use crate::units::dalton_to_me;

#[derive(Clone, Debug)]
pub struct MolecularSystem {
    pub molecule: MoleculeFile,
    pub gas: GasFile,
    pub increments: IncrementFile,
    pub spec: RotorSpec,
    pub coefficients: DispersionCoefficients,
    pub surface_l: PotentialSurface,
    pub surface_r: PotentialSurface,
    /// Reduced mass (m_e).
    pub mu: f64,
}

impl MolecularSystem {
    pub fn new(molecule: MoleculeFile, gas: GasFile, increments: IncrementFile, r_core: f64) -> Result<Self> {
        let spec = RotorSpec::from_molecule(&molecule)?;
        let sus = molecule_tensors(&increments, &spec, &gas)?;
        let coefficients = dispersion_tensors(&sus)?;
        let (surface_l, surface_r) = surfaces_from(&coefficients, r_core);
        let m_mol = spec.total_mass();
        let m_gas = dalton_to_me(gas.mass);
        let mu = m_mol * m_gas / (m_mol + m_gas);
        Ok(MolecularSystem { molecule, gas, increments, spec, coefficients, surface_l, surface_r, mu })
    }

    pub fn from_texts(molecule: &str, gas: &str, increments: &str, r_core: f64) -> Result<Self> {
        Self::new(
            datasets::parse_molecule(molecule)?,
            datasets::parse_gas(gas)?,
            datasets::parse_increments(increments)?,
            r_core,
        )
    }

    /// Shipped D2S2 + He datasets.
    pub fn default_with_core(r_core: f64) -> Result<Self> {
        Self::from_texts(datasets::DEFAULT_MOLECULE, datasets::DEFAULT_GAS, datasets::DEFAULT_INCREMENTS, r_core)
    }

    pub fn levels(&self, j_max: i32) -> Vec<RotorState> {
        rotor_levels(&self.spec, j_max)
    }

    /// ΔV = V_L − V_R as a surface (r⁻⁷ part only).
    pub fn delta_surface(&self) -> PotentialSurface {
        let mut d = self.surface_l.clone();
        d.c6 = 0.0;
        d.quad = [[0.0; 3]; 3];
        d.chiral = ZERO3;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    d.chiral[i][j][k] = self.surface_l.chiral[i][j][k] - self.surface_r.chiral[i][j][k];
                }
            }
        }
        d
    }

    /// Surfaces with the chiral term scaled by `f` (1 = dataset value).
    pub fn scaled_surfaces(&self, f: f64) -> (PotentialSurface, PotentialSurface) {
        (self.surface_l.with_chiral_scale(f), self.surface_r.with_chiral_scale(f))
    }

    pub fn provenance(&self) -> Vec<String> {
        vec![
            format!("molecule {}: {}", self.molecule.name, self.molecule.provenance),
            format!("gas {}: {}", self.gas.name, self.gas.provenance),
            format!("increments: {}", self.increments.provenance),
        ]
    }
}
