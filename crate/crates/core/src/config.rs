//! Run configuration (TOML). Lengths are in Å, energies in K, frequencies in
//! Hz (ω/2π), rates in s⁻¹ and pressures in mbar; everything is converted to
//! atomic units by [`RunConfig::scatter_settings`] and friends.
//!
//! ```toml
//! [datasets]              # optional; the shipped D2S2 + He files otherwise
//! molecule = "data/d2s2.toml"
//!
//! [system]
//! initial = [0, 0]        # (j, τ)
//! r_core_angstrom = 2.1167
//!
//! [energies]
//! values_k = [0.5, 1.0, 2.0]
//!
//! [thermal]
//! temperatures_k = [100, 300, 600]
//! ```

use std::path::{Path, PathBuf};

use crate::channels::Truncation;
use crate::error::{Error, Result};
use crate::master::TwoLevelParams;
use crate::scatter::{RadialSettings, ScatterSettings, TruncationSettings};
use crate::system::MolecularSystem;
use crate::units::{angstrom_to_bohr, kelvin_to_hartree};
use crate::{datasets, units};

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetPaths {
    pub molecule: Option<PathBuf>,
    pub gas: Option<PathBuf>,
    pub increments: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub initial: (i32, i32),
    pub r_core_angstrom: f64,
    /// Multiplies the chiral r⁻⁷ term; 0 makes V_L = V_R.
    pub chiral_scale: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig { initial: (0, 0), r_core_angstrom: 4.0 / units::BOHR_PER_ANGSTROM, chiral_scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyGrid {
    /// Explicit collision energies; overrides the range when non-empty.
    pub values_k: Vec<f64>,
    pub min_k: f64,
    pub max_k: f64,
    pub count: usize,
    pub log: bool,
}

impl Default for EnergyGrid {
    fn default() -> Self {
        EnergyGrid { values_k: Vec::new(), min_k: 0.5, max_k: 2.0, count: 4, log: false }
    }
}

impl EnergyGrid {
    pub fn energies(&self) -> Result<Vec<f64>> {
        let v = if !self.values_k.is_empty() {
            self.values_k.clone()
        } else {
            if self.count == 0 || !(self.min_k > 0.0) || !(self.max_k >= self.min_k) {
                return Err(Error::Config("energy range needs 0 < min_k ≤ max_k and count ≥ 1".into()));
            }
            if self.count == 1 {
                vec![self.min_k]
            } else {
                (0..self.count)
                    .map(|i| {
                        let t = i as f64 / (self.count - 1) as f64;
                        if self.log {
                            self.min_k * (self.max_k / self.min_k).powf(t)
                        } else {
                            self.min_k + (self.max_k - self.min_k) * t
                        }
                    })
                    .collect()
            }
        };
        if v.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::Config("collision energies must be positive and finite".into()));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("energy grid must be strictly increasing".into()));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadialConfig {
    pub r_match_angstrom: Option<f64>,
    pub h0_angstrom: f64,
    pub r_double_angstrom: f64,
    pub r_match_min_angstrom: f64,
    pub match_tolerance: f64,
    pub steps_per_wavelength: f64,
}

impl Default for RadialConfig {
    fn default() -> Self {
        let d = RadialSettings::default();
        let a = 1.0 / units::BOHR_PER_ANGSTROM;
        RadialConfig {
            r_match_angstrom: d.r_match.map(|r| r * a),
            h0_angstrom: d.h0 * a,
            r_double_angstrom: d.r_double * a,
            r_match_min_angstrom: d.r_match_min * a,
            match_tolerance: d.match_tolerance,
            steps_per_wavelength: d.steps_per_wavelength,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    pub e_closed_scale: f64,
    pub j_max_scale: f64,
    /// Fixed closed-channel window (K above the total energy); with `fixed_j_max`.
    pub fixed_e_closed_k: Option<f64>,
    pub fixed_j_max: Option<i32>,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig { e_closed_scale: 1.0, j_max_scale: 1.0, fixed_e_closed_k: None, fixed_j_max: None }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartialWaveConfig {
    pub j_total_min: i32,
    pub j_total_max: i32,
    pub tail_tolerance: f64,
    pub require_tail_convergence: bool,
    pub check_halving: bool,
    pub halving_tolerance: f64,
    pub unitarity_tolerance: f64,
    pub level_j_max: i32,
}

impl Default for PartialWaveConfig {
    fn default() -> Self {
        let d = ScatterSettings::default();
        PartialWaveConfig {
            j_total_min: d.j_total_min,
            j_total_max: d.j_total_max,
            tail_tolerance: d.tail_tolerance,
            require_tail_convergence: d.require_tail_convergence,
            check_halving: d.check_halving,
            halving_tolerance: d.halving_tolerance,
            unitarity_tolerance: d.unitarity_tolerance,
            level_j_max: d.level_j_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaModelKind {
    TwoTerm,
    Leading,
    Integral,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalConfig {
    pub temperatures_k: Vec<f64>,
    pub pressures_mbar: Vec<f64>,
    /// ω_z/2π.
    pub omega_z_hz: f64,
    /// γ at which the configuration counts as stabilized (s⁻¹); ω_z/2π when absent.
    pub threshold_rate_s: Option<f64>,
    pub eta_model: EtaModelKind,
    /// Overrides the β derived from the datasets (bohr).
    pub beta_bohr: Option<f64>,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        ThermalConfig {
            temperatures_k: vec![100.0, 150.0, 200.0, 300.0, 400.0, 500.0, 600.0],
            pressures_mbar: vec![1e-6, 1e-5, 1e-4],
            omega_z_hz: 176.0,
            threshold_rate_s: None,
            eta_model: EtaModelKind::Leading,
            beta_bohr: None,
        }
    }
}

impl ThermalConfig {
    pub fn threshold_rate(&self) -> f64 {
        self.threshold_rate_s.unwrap_or(self.omega_z_hz)
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MasterConfig {
    pub omega_z_hz: f64,
    pub omega_x_hz: f64,
    pub gamma_s: f64,
    /// "L", "R", "psi0", "psi1" or an explicit Bloch vector via `bloch`.
    pub initial: String,
    pub bloch: Option<[f64; 3]>,
    pub t_end_s: f64,
    pub steps: usize,
}

impl Default for MasterConfig {
    fn default() -> Self {
        MasterConfig {
            omega_z_hz: 176.0,
            omega_x_hz: 0.0,
            gamma_s: 100.0 * 2.0 * std::f64::consts::PI * 176.0,
            initial: "L".into(),
            bloch: None,
            t_end_s: 0.5,
            steps: 500,
        }
    }
}

impl MasterConfig {
    pub fn params(&self) -> Result<TwoLevelParams> {
        let tau = 2.0 * std::f64::consts::PI;
        TwoLevelParams::new(tau * self.omega_z_hz, tau * self.omega_x_hz, self.gamma_s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn initial_state(&self) -> Result<crate::master::ConfigState> {
        use crate::master::ConfigState;
        if let Some([x, y, z]) = self.bloch {
            return ConfigState::new(x, y, z).map_err(|e| Error::Config(e.to_string()));
        }
        match self.initial.as_str() {
            "L" => Ok(ConfigState::left()),
            "R" => Ok(ConfigState::right()),
            "psi0" => Ok(ConfigState::psi(0)),
            "psi1" => Ok(ConfigState::psi(1)),
            s => Err(Error::Config(format!("unknown initial configuration {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub threads: Option<usize>,
    pub dump_smatrix: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), threads: None, dump_smatrix: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub datasets: DatasetPaths,
    pub system: SystemConfig,
    pub energies: EnergyGrid,
    pub radial: RadialConfig,
    pub truncation: TruncationConfig,
    pub partial_waves: PartialWaveConfig,
    pub thermal: ThermalConfig,
    pub master: MasterConfig,
    pub output: OutputConfig,
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive (got {v})")))
    }
}

impl RunConfig {
    /// Parse and validate; relative dataset paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(b) = base {
            for p in [&mut c.datasets.molecule, &mut c.datasets.gas, &mut c.datasets.increments].into_iter().flatten() {
                if p.is_relative() {
                    *p = b.join(&*p);
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        self.energies.energies()?;
        positive(self.system.r_core_angstrom, "r_core_angstrom")?;
        if !self.system.chiral_scale.is_finite() {
            return Err(Error::Config("chiral_scale must be finite".into()));
        }
        let r = &self.radial;
        positive(r.h0_angstrom, "h0_angstrom")?;
        positive(r.r_double_angstrom, "r_double_angstrom")?;
        positive(r.r_match_min_angstrom, "r_match_min_angstrom")?;
        positive(r.match_tolerance, "match_tolerance")?;
        positive(r.steps_per_wavelength, "steps_per_wavelength")?;
        if let Some(m) = r.r_match_angstrom {
            positive(m, "r_match_angstrom")?;
            if m <= self.system.r_core_angstrom {
                return Err(Error::Config("r_match must exceed r_core".into()));
            }
        }
        let t = &self.truncation;
        positive(t.e_closed_scale, "e_closed_scale")?;
        positive(t.j_max_scale, "j_max_scale")?;
        if t.fixed_e_closed_k.is_some() != t.fixed_j_max.is_some() {
            return Err(Error::Config("fixed_e_closed_k and fixed_j_max go together".into()));
        }
        if let Some(e) = t.fixed_e_closed_k {
            if !(e >= 0.0) {
                return Err(Error::Config("fixed_e_closed_k must be ≥ 0".into()));
            }
        }
        if t.fixed_j_max.is_some_and(|j| j < 0) {
            return Err(Error::Config("fixed_j_max must be ≥ 0".into()));
        }
        let w = &self.partial_waves;
        if w.j_total_min < 0 || w.j_total_max < w.j_total_min || w.level_j_max < 0 {
            return Err(Error::Config("need 0 ≤ j_total_min ≤ j_total_max and level_j_max ≥ 0".into()));
        }
        positive(w.tail_tolerance, "tail_tolerance")?;
        positive(w.halving_tolerance, "halving_tolerance")?;
        positive(w.unitarity_tolerance, "unitarity_tolerance")?;
        let th = &self.thermal;
        for &t in &th.temperatures_k {
            positive(t, "temperature")?;
        }
        for &p in &th.pressures_mbar {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::Config(format!("pressure {p} must be ≥ 0")));
            }
        }
        if !(th.omega_z_hz >= 0.0) || !th.omega_z_hz.is_finite() || !(th.threshold_rate() >= 0.0) {
            return Err(Error::Config("omega_z_hz and threshold rate must be ≥ 0".into()));
        }
        if let Some(b) = th.beta_bohr {
            if !(b >= 0.0) {
                return Err(Error::Config("beta_bohr must be ≥ 0".into()));
            }
        }
        let m = &self.master;
        m.params()?;
        m.initial_state()?;
        if !(m.t_end_s >= 0.0) || m.steps == 0 {
            return Err(Error::Config("master needs t_end_s ≥ 0 and steps ≥ 1".into()));
        }
        if self.output.threads == Some(0) {
            return Err(Error::Config("threads must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Canonical re-serialization, the input to the config hash.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn scatter_settings(&self) -> ScatterSettings {
        let b = angstrom_to_bohr;
        let r = &self.radial;
        let t = &self.truncation;
        let w = &self.partial_waves;
        ScatterSettings {
            radial: RadialSettings {
                r_match: r.r_match_angstrom.map(b),
                h0: b(r.h0_angstrom),
                r_double: b(r.r_double_angstrom),
                match_tolerance: r.match_tolerance,
                r_match_min: b(r.r_match_min_angstrom),
                steps_per_wavelength: r.steps_per_wavelength,
            },
            truncation: TruncationSettings {
                e_closed_scale: t.e_closed_scale,
                j_max_scale: t.j_max_scale,
                fixed: match (t.fixed_e_closed_k, t.fixed_j_max) {
                    (Some(e), Some(j)) => Some(Truncation { e_closed_max: kelvin_to_hartree(e), j_max: j }),
                    _ => None,
                },
            },
            j_total_min: w.j_total_min,
            j_total_max: w.j_total_max,
            tail_tolerance: w.tail_tolerance,
            require_tail_convergence: w.require_tail_convergence,
            check_halving: w.check_halving,
            halving_tolerance: w.halving_tolerance,
            unitarity_tolerance: w.unitarity_tolerance,
            level_j_max: w.level_j_max,
        }
    }

    /// Dataset texts (file contents or the shipped defaults) with their origin.
    pub fn dataset_texts(&self) -> Result<[(String, String); 3]> {
        let load = |p: &Option<PathBuf>, default: &str, what: &str| -> Result<(String, String)> {
            match p {
                Some(path) => std::fs::read_to_string(path)
                    .map(|t| (t, path.display().to_string()))
                    .map_err(|e| Error::Config(format!("cannot read {what} dataset {}: {e}", path.display()))),
                None => Ok((default.to_string(), format!("built-in {what}"))),
            }
        };
        Ok([
            load(&self.datasets.molecule, datasets::DEFAULT_MOLECULE, "molecule")?,
            load(&self.datasets.gas, datasets::DEFAULT_GAS, "gas")?,
            load(&self.datasets.increments, datasets::DEFAULT_INCREMENTS, "increments")?,
        ])
    }

    pub fn system(&self) -> Result<MolecularSystem> {
        let [m, g, i] = self.dataset_texts()?;
        MolecularSystem::from_texts(&m.0, &g.0, &i.0, angstrom_to_bohr(self.system.r_core_angstrom))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default_and_round_trips() {
        let c = RunConfig::parse("", None).unwrap();
        assert_eq!(c, RunConfig::default());
        let again = RunConfig::parse(&c.canonical(), None).unwrap();
        assert_eq!(again, c);
        let s = c.scatter_settings();
        assert!((s.radial.h0 - RadialSettings::default().h0).abs() < 1e-15);
        assert!((angstrom_to_bohr(c.system.r_core_angstrom) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn energy_grids() {
        let g = EnergyGrid { values_k: vec![], min_k: 1.0, max_k: 100.0, count: 3, log: true };
        let e = g.energies().unwrap();
        assert!((e[1] - 10.0).abs() < 1e-12);
        let bad = EnergyGrid { values_k: vec![1.0, 1.0], ..EnergyGrid::default() };
        assert!(bad.energies().is_err());
    }

    #[test]
    fn rejects_invalid_configs() {
        for text in [
            "[energies]\nvalues_k = [2.0, 1.0]",
            "[system]\nr_core_angstrom = -1.0",
            "[radial]\nr_match_angstrom = 1.0",
            "[truncation]\nfixed_j_max = 3",
            "[master]\ninitial = \"X\"",
            "[master]\ngamma_s = -1.0",
            "[bogus]\nx = 1",
            "[output]\nthreads = 0",
            "[thermal]\ntemperatures_k = [0.0]",
        ] {
            assert!(matches!(RunConfig::parse(text, None), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn lengths_convert_from_angstrom_and_paths_resolve() {
        let c = RunConfig::parse("[radial]\nh0_angstrom = 0.5\n[datasets]\nmolecule = \"m.toml\"", Some(Path::new("/cfg"))).unwrap();
        assert!((c.scatter_settings().radial.h0 - 0.5 * units::BOHR_PER_ANGSTROM).abs() < 1e-12);
        assert_eq!(c.datasets.molecule.as_deref(), Some(Path::new("/cfg/m.toml")));
        assert!(matches!(c.system(), Err(Error::Config(_))));
    }
}
