//! Per-energy coupled-channel runs: J loop with tail control, L and R
//! propagation on a shared basis, optional step-halving check, and
//! checkpointing of finished blocks.

use rayon::prelude::*;

use crate::channels::{build_channel_basis, coupling_matrix, first_chiral_level, Truncation};
use crate::dispersion::{Handedness, PotentialSurface};
use crate::error::{Error, Result};
use crate::observables::{epsilon_shift, eta_decoherence, sigma_total, EtaResult, PartialWaveSum, StateLabel};
use crate::propagator::{block_difference, solve_block, RadialGrid, SMatrixBlock};
use crate::rotor::RotorState;
use crate::system::MolecularSystem;
use crate::units::{hartree_to_kelvin, kelvin_to_hartree};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadialSettings {
    /// Matching radius (bohr); chosen from `match_tolerance` when absent.
    pub r_match: Option<f64>,
    /// Step at the inner wall (bohr).
    pub h0: f64,
    /// First sector end (bohr); later sectors double in length and step.
    pub r_double: f64,
    /// 2μ|V6(r_match)|/k² bound used to pick r_match.
    pub match_tolerance: f64,
    /// Lower bound on an automatic r_match (bohr).
    pub r_match_min: f64,
    /// Steps per local wavelength of the fastest open channel (caps the doubling).
    pub steps_per_wavelength: f64,
}

impl Default for RadialSettings {
    fn default() -> Self {
        RadialSettings { r_match: None, h0: 0.005, r_double: 6.0, match_tolerance: 1e-4, r_match_min: 40.0, steps_per_wavelength: 60.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationSettings {
    /// Multiplies the default closed-channel window.
    pub e_closed_scale: f64,
    /// Multiplies the default j_max (rounded up).
    pub j_max_scale: f64,
    /// Overrides the default policy entirely (Hartree, j).
    pub fixed: Option<Truncation>,
}

impl Default for TruncationSettings {
    fn default() -> Self {
        TruncationSettings { e_closed_scale: 1.0, j_max_scale: 1.0, fixed: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterSettings {
    pub radial: RadialSettings,
    pub truncation: TruncationSettings,
    /// Smallest J_max before the tail test applies.
    pub j_total_min: i32,
    /// Hard cap on J.
    pub j_total_max: i32,
    /// Relative tail tolerance for σ and η.
    pub tail_tolerance: f64,
    /// When false the J sum simply stops at j_total_max (fixed truncated systems).
    pub require_tail_convergence: bool,
    /// Re-solve sampled blocks with half the step and compare.
    pub check_halving: bool,
    pub halving_tolerance: f64,
    /// Unitarity and symmetry bound on every block.
    pub unitarity_tolerance: f64,
    /// Highest rotor j in the level table.
    pub level_j_max: i32,
}

impl Default for ScatterSettings {
    fn default() -> Self {
        ScatterSettings {
            radial: RadialSettings::default(),
            truncation: TruncationSettings::default(),
            j_total_min: 4,
            j_total_max: 400,
            tail_tolerance: 0.005,
            require_tail_convergence: true,
            check_halving: true,
            halving_tolerance: 1e-4,
            unitarity_tolerance: 1e-8,
            level_j_max: 14,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockKey {
    /// Collision energy (Hartree) as IEEE bits, so keys compare exactly.
    pub energy_bits: u64,
    pub j_total: i32,
}

/// Storage for finished (L, R) block pairs so interrupted sweeps can resume.
pub trait BlockStore: Sync {
    fn load(&self, key: &BlockKey) -> Option<(SMatrixBlock, SMatrixBlock)>;
    fn save(&self, key: &BlockKey, l: &SMatrixBlock, r: &SMatrixBlock) -> Result<()>;
}

/// Keeps nothing.
pub struct NoStore;

impl BlockStore for NoStore {
    fn load(&self, _key: &BlockKey) -> Option<(SMatrixBlock, SMatrixBlock)> {
        None
    }
    fn save(&self, _key: &BlockKey, _l: &SMatrixBlock, _r: &SMatrixBlock) -> Result<()> {
        Ok(())
    }
}

/// Everything computed at one collision energy.
#[derive(Clone, Debug)]
pub struct EnergyResult {
    /// Collision energy (Hartree) above the initial level.
    pub collision_energy: f64,
    pub initial: StateLabel,
    pub truncation: Truncation,
    pub r_match: f64,
    pub blocks_l: Vec<SMatrixBlock>,
    pub blocks_r: Vec<SMatrixBlock>,
    pub sigma_l: PartialWaveSum,
    pub sigma_r: PartialWaveSum,
    pub eta: EtaResult,
    pub epsilon: PartialWaveSum,
    pub max_unitarity_defect: f64,
    pub max_symmetry_defect: f64,
    /// Largest S change under step halving over the sampled J.
    pub halving_change: Option<f64>,
}

impl EnergyResult {
    pub fn collision_energy_k(&self) -> f64 {
        hartree_to_kelvin(self.collision_energy)
    }

    pub fn j_cut(&self) -> i32 {
        self.blocks_l.last().map(|b| b.j_total).unwrap_or(0)
    }
}

/// A prepared system: levels, surfaces, and the initial state.
pub struct Scatterer<'a> {
    pub system: &'a MolecularSystem,
    pub levels: Vec<RotorState>,
    pub surface_l: PotentialSurface,
    pub surface_r: PotentialSurface,
    pub initial: RotorState,
    pub settings: ScatterSettings,
}

impl<'a> Scatterer<'a> {
    /// `chiral_scale` multiplies the r⁻⁷ term (0 switches it off).
    pub fn new(system: &'a MolecularSystem, initial: StateLabel, chiral_scale: f64, settings: ScatterSettings) -> Result<Self> {
        let levels = system.levels(settings.level_j_max);
        let init = levels
            .iter()
            .find(|l| l.j == initial.0 && l.tau == initial.1)
            .cloned()
            .ok_or_else(|| Error::Config(format!("initial state ({}, {}) not in the level table", initial.0, initial.1)))?;
        let (surface_l, surface_r) = system.scaled_surfaces(chiral_scale);
        Ok(Scatterer { system, levels, surface_l, surface_r, initial: init, settings })
    }

    /// Truncation used at total energy `e_total`.
    pub fn truncation(&self, e_total: f64) -> Truncation {
        let t = &self.settings.truncation;
        if let Some(f) = t.fixed {
            return f;
        }
        let delta = self.system.delta_surface();
        let chiral = first_chiral_level(&self.levels, &self.initial, &delta);
        let base = Truncation::default_for(e_total, &self.levels, self.initial.species, chiral);
        Truncation {
            e_closed_max: base.e_closed_max * t.e_closed_scale,
            j_max: ((base.j_max as f64) * t.j_max_scale).ceil() as i32,
        }
    }

    pub fn r_match(&self, e_kin: f64) -> f64 {
        let rs = &self.settings.radial;
        if let Some(r) = rs.r_match {
            return r;
        }
        let k2 = 2.0 * self.system.mu * e_kin;
        let c6 = self.surface_l.c6.abs().max(1e-12);
        let r = (2.0 * self.system.mu * c6 / (rs.match_tolerance * k2)).powf(1.0 / 6.0);
        r.max(rs.r_match_min)
    }

    pub fn grid(&self, e_kin: f64) -> Result<RadialGrid> {
        let rs = &self.settings.radial;
        let k_max = (2.0 * self.system.mu * (self.initial.energy + e_kin)).sqrt();
        let h_max = 2.0 * std::f64::consts::PI / (k_max * rs.steps_per_wavelength);
        RadialGrid::doubling_capped(self.surface_l.r_core, self.r_match(e_kin), rs.h0, rs.r_double, h_max)
    }

    /// Solve the (L, R) pair for one J.
    pub fn solve_pair(&self, e_kin: f64, j_total: i32, trunc: Truncation, grid: &RadialGrid) -> Result<(SMatrixBlock, SMatrixBlock)> {
        let e_total = self.initial.energy + e_kin;
        let basis = build_channel_basis(j_total, self.initial.species, e_total, trunc, &self.levels, self.system.mu)?;
        let wl = coupling_matrix(&basis, &self.surface_l)?;
        let wr = coupling_matrix(&basis, &self.surface_r)?;
        let l = solve_block(&wl, &basis, grid, Handedness::L)?;
        let r = solve_block(&wr, &basis, grid, Handedness::R)?;
        Ok((l, r))
    }

    /// Full J loop at collision energy `e_kin_k` (kelvin).
    pub fn run_energy(&self, e_kin_k: f64, store: &dyn BlockStore) -> Result<EnergyResult> {
        let e_kin = kelvin_to_hartree(e_kin_k);
        if !(e_kin > 0.0) {
            return Err(Error::Config(format!("collision energy {e_kin_k} K must be positive")));
        }
        let e_total = self.initial.energy + e_kin;
        let trunc = self.truncation(e_total);
        let grid = self.grid(e_kin)?;
        let st = &self.settings;
        let label = (self.initial.j, self.initial.tau);
        let mu = self.system.mu;
        let batch = rayon::current_num_threads().max(1) as i32;
        let mut blocks_l: Vec<SMatrixBlock> = Vec::new();
        let mut blocks_r: Vec<SMatrixBlock> = Vec::new();
        let mut j_next = 0;
        let converged = loop {
            let js: Vec<i32> = (j_next..(j_next + batch).min(st.j_total_max + 1)).collect();
            if js.is_empty() {
                break false;
            }
            let solved: Vec<Result<(SMatrixBlock, SMatrixBlock)>> = js
                .par_iter()
                .map(|&jt| {
                    let key = BlockKey { energy_bits: e_kin.to_bits(), j_total: jt };
                    if let Some(p) = store.load(&key) {
                        return Ok(p);
                    }
                    let p = self.solve_pair(e_kin, jt, trunc, &grid)?;
                    store.save(&key, &p.0, &p.1)?;
                    Ok(p)
                })
                .collect();
            for s in solved {
                let (l, r) = s?;
                for b in [&l, &r] {
                    let u = b.unitarity_defect();
                    let y = b.symmetry_defect();
                    if u > st.unitarity_tolerance || y > st.unitarity_tolerance {
                        return Err(Error::Numerical(format!(
                            "S matrix at E = {e_kin_k} K, J = {}, {} fails unitarity/symmetry ({u:.2e}, {y:.2e})",
                            b.j_total,
                            b.handedness.label()
                        )));
                    }
                }
                blocks_l.push(l);
                blocks_r.push(r);
            }
            j_next += js.len() as i32;
            let jc = j_next - 1;
            if st.require_tail_convergence && jc >= st.j_total_min && self.tail_converged(&blocks_l, &blocks_r, label)? {
                break true;
            }
        };
        if !converged && st.require_tail_convergence {
            let s = sigma_total(&blocks_l, label, mu)?;
            return Err(Error::Convergence(format!(
                "J sum not converged at E = {e_kin_k} K by J = {} (σ tail estimate {:.2e})",
                st.j_total_max,
                s.tail_estimate()
            )));
        }
        let sigma_l = sigma_total(&blocks_l, label, mu)?;
        let sigma_r = sigma_total(&blocks_r, label, mu)?;
        let eta = eta_decoherence(&blocks_l, &blocks_r, label, mu)?;
        let epsilon = epsilon_shift(&blocks_l, &blocks_r, label, mu)?;
        let mut halving_change = None;
        if st.check_halving {
            let fine = grid.halved();
            let jc = blocks_l.len() - 1;
            let mut picks = vec![0, jc / 2, jc];
            picks.dedup();
            let checks: Vec<Result<f64>> = picks
                .par_iter()
                .map(|&i| {
                    let (l, r) = self.solve_pair(e_kin, blocks_l[i].j_total, trunc, &fine)?;
                    Ok(block_difference(&l, &blocks_l[i]).max(block_difference(&r, &blocks_r[i])))
                })
                .collect();
            let mut worst: f64 = 0.0;
            for c in checks {
                worst = worst.max(c?);
            }
            if worst > st.halving_tolerance {
                return Err(Error::Convergence(format!(
                    "step halving changes S by {worst:.2e} at E = {e_kin_k} K (tolerance {:.1e}); reduce h0",
                    st.halving_tolerance
                )));
            }
            halving_change = Some(worst);
        }
        let max_unitarity_defect = blocks_l.iter().chain(&blocks_r).map(|b| b.unitarity_defect()).fold(0.0, f64::max);
        let max_symmetry_defect = blocks_l.iter().chain(&blocks_r).map(|b| b.symmetry_defect()).fold(0.0, f64::max);
        Ok(EnergyResult {
            collision_energy: e_kin,
            initial: label,
            truncation: trunc,
            r_match: grid.r_match(),
            blocks_l,
            blocks_r,
            sigma_l,
            sigma_r,
            eta,
            epsilon,
            max_unitarity_defect,
            max_symmetry_defect,
            halving_change,
        })
    }

    fn tail_converged(&self, l: &[SMatrixBlock], r: &[SMatrixBlock], label: StateLabel) -> Result<bool> {
        let mu = self.system.mu;
        let tol = self.settings.tail_tolerance;
        let sums = [sigma_total(l, label, mu)?, sigma_total(r, label, mu)?, eta_decoherence(l, r, label, mu)?.total];
        Ok(sums.iter().all(|s| {
            let n = s.per_j.len();
            let tiny = s.total == 0.0
                || s.per_j[n.saturating_sub(3)..].iter().all(|(_, v)| v.abs() < 0.2 * tol * s.total.abs());
            tiny && s.tail_estimate() < tol
        }))
    }
}

/// Open channels of all species at total rotor+collision energy `e_total`
/// for a J at least as large as every open j (so each open level (j, τ)
/// contributes 2j+1 orbital values).
pub fn open_channel_count(levels: &[RotorState], e_total: f64) -> usize {
    levels.iter().filter(|l| l.energy <= e_total).map(|l| (2 * l.j + 1) as usize).sum()
}
