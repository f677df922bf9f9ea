//! Cross sections from S-matrix blocks, thermal rates and the critical
//! pressure.
//!
//! With T = S − 1 in the rephased channel basis the partial-wave forms are
//!
//!   σ   = 2π/((2j₀+1)k₀²)    Σ_J (2J+1) Σ_ℓ₀ (1 − Re S_{α₀ℓ₀,α₀ℓ₀})
//!   η   = π/(2(2j₀+1)k₀²)    Σ_J (2J+1) Σ_{αℓℓ₀} |S^L − S^R|²
//!   ε   = π/((2j₀+1)k₀²)     Σ_J (2J+1) Σ_{αℓℓ₀} Im(T^L T^R*)
//!
//! which follow from the amplitude
//! f = (2π/ik₀) Σ ⟨jmℓm_ℓ|JM⟩⟨j₀m₀ℓ₀m_ℓ₀|JM⟩ Y*_{ℓ₀m_ℓ₀}(n₀) Y_{ℓm_ℓ}(n) T
//! with η = ∫dn dn₀ |f^L − f^R|²/8π and ε = ∫dn dn₀ Im(f^L f^R*)/4π, both
//! averaged over m₀ and summed over m.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::angular::{clebsch_gordan, ylm};
use crate::error::{Error, Result};
use crate::highenergy::{born_j_integral, eta_asymptotic_with, eta_leading, C1, C2};
use crate::propagator::SMatrixBlock;
use crate::quadrature::gauss_legendre_interval;
use crate::units::{dalton_to_me, number_density, AU_VELOCITY_M_S, BOHR_M, KB_SI};

/// A rotor state label (j, τ).
pub type StateLabel = (i32, i32);

/// A J sum with its per-J terms, in bohr².
#[derive(Clone, Debug, PartialEq)]
pub struct PartialWaveSum {
    pub total: f64,
    /// (J, contribution)
    pub per_j: Vec<(i32, f64)>,
}

impl PartialWaveSum {
    /// Estimated relative size of the J > J_max remainder, from the decay of
    /// the last terms (geometric extrapolation); 1 if the terms do not decay.
    pub fn tail_estimate(&self) -> f64 {
        let n = self.per_j.len();
        if self.total == 0.0 {
            return 0.0;
        }
        if n < 3 {
            return 1.0;
        }
        let a = self.per_j[n - 2].1.abs();
        let b = self.per_j[n - 1].1.abs();
        if b == 0.0 {
            return 0.0;
        }
        let ratio = b / a;
        if !(ratio < 1.0) {
            return 1.0;
        }
        b * ratio / (1.0 - ratio) / self.total.abs()
    }
}

fn initial_wavenumber(block: &SMatrixBlock, j0: i32, tau0: i32, mu: f64) -> Result<f64> {
    let c = block
        .channels
        .iter()
        .find(|c| c.j == j0 && c.tau == tau0)
        .ok_or_else(|| Error::Domain(format!("initial state ({j0}, {tau0}) is not open in block J = {}", block.j_total)))?;
    let e = block.energy - c.threshold;
    if e <= 0.0 {
        return Err(Error::Domain("initial channel is closed".into()));
    }
    Ok((2.0 * mu * e).sqrt())
}

fn check_blocks(blocks: &[SMatrixBlock]) -> Result<()> {
    if blocks.is_empty() {
        return Err(Error::Domain("no S-matrix blocks".into()));
    }
    let e = blocks[0].energy;
    let h = blocks[0].handedness;
    for b in blocks {
        if (b.energy - e).abs() > 1e-12 * e.abs() || b.handedness != h {
            return Err(Error::Domain("blocks mix energies or handedness".into()));
        }
    }
    Ok(())
}

fn check_pair(l: &[SMatrixBlock], r: &[SMatrixBlock]) -> Result<()> {
    check_blocks(l)?;
    check_blocks(r)?;
    if l.len() != r.len() {
        return Err(Error::Domain("L and R block lists differ in length".into()));
    }
    for (a, b) in l.iter().zip(r) {
        if a.j_total != b.j_total || a.species != b.species || a.channels != b.channels {
            return Err(Error::Domain(format!("L and R bases differ at J = {}", a.j_total)));
        }
    }
    Ok(())
}

fn initial_indices(b: &SMatrixBlock, j0: i32, tau0: i32) -> Vec<usize> {
    (0..b.n()).filter(|&i| b.channels[i].j == j0 && b.channels[i].tau == tau0).collect()
}

/// σ_tot for initial state α₀ = (j₀, τ₀) from blocks of one handedness.
pub fn sigma_total(blocks: &[SMatrixBlock], initial: StateLabel, mu: f64) -> Result<PartialWaveSum> {
    check_blocks(blocks)?;
    let (j0, tau0) = initial;
    let mut per_j = Vec::new();
    let mut total = 0.0;
    for b in blocks {
        let idx = initial_indices(b, j0, tau0);
        if idx.is_empty() {
            per_j.push((b.j_total, 0.0));
            continue;
        }
        let k0 = initial_wavenumber(b, j0, tau0, mu)?;
        let pref = 2.0 * PI / ((2 * j0 + 1) as f64 * k0 * k0);
        let s: f64 = idx.iter().map(|&i| 1.0 - b.s[(i, i)].re).sum();
        let v = pref * (2 * b.j_total + 1) as f64 * s;
        per_j.push((b.j_total, v));
        total += v;
    }
    Ok(PartialWaveSum { total, per_j })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaResult {
    pub total: PartialWaveSum,
    /// η_{αα₀} per final rotor state.
    pub per_channel: Vec<(StateLabel, f64)>,
}

/// Decoherence cross section η for α₀ from matching L and R blocks.
pub fn eta_decoherence(l: &[SMatrixBlock], r: &[SMatrixBlock], initial: StateLabel, mu: f64) -> Result<EtaResult> {
    check_pair(l, r)?;
    let (j0, tau0) = initial;
    let mut per_j = Vec::new();
    let mut per_channel: Vec<(StateLabel, f64)> = Vec::new();
    let mut total = 0.0;
    for (bl, br) in l.iter().zip(r) {
        let idx = initial_indices(bl, j0, tau0);
        if idx.is_empty() {
            per_j.push((bl.j_total, 0.0));
            continue;
        }
        let k0 = initial_wavenumber(bl, j0, tau0, mu)?;
        let pref = PI / (2.0 * (2 * j0 + 1) as f64 * k0 * k0) * (2 * bl.j_total + 1) as f64;
        let mut sj = 0.0;
        for f in 0..bl.n() {
            let mut s = 0.0;
            for &i in &idx {
                s += (bl.s[(f, i)] - br.s[(f, i)]).norm_sqr();
            }
            let v = pref * s;
            sj += v;
            let lab = (bl.channels[f].j, bl.channels[f].tau);
            match per_channel.iter_mut().find(|p| p.0 == lab) {
                Some(p) => p.1 += v,
                None => per_channel.push((lab, v)),
            }
        }
        per_j.push((bl.j_total, sj));
        total += sj;
    }
    per_channel.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(EtaResult { total: PartialWaveSum { total, per_j }, per_channel })
}

/// Coherent area ε for α₀ from matching L and R blocks.
pub fn epsilon_shift(l: &[SMatrixBlock], r: &[SMatrixBlock], initial: StateLabel, mu: f64) -> Result<PartialWaveSum> {
    check_pair(l, r)?;
    let (j0, tau0) = initial;
    let mut per_j = Vec::new();
    let mut total = 0.0;
    for (bl, br) in l.iter().zip(r) {
        let idx = initial_indices(bl, j0, tau0);
        if idx.is_empty() {
            per_j.push((bl.j_total, 0.0));
            continue;
        }
        let k0 = initial_wavenumber(bl, j0, tau0, mu)?;
        let pref = PI / ((2 * j0 + 1) as f64 * k0 * k0) * (2 * bl.j_total + 1) as f64;
        let mut s = 0.0;
        for f in 0..bl.n() {
            for &i in &idx {
                let d = if f == i { 1.0 } else { 0.0 };
                let tl = bl.s[(f, i)] - d;
                let tr = br.s[(f, i)] - d;
                s += (tl * tr.conj()).im;
            }
        }
        let v = pref * s;
        per_j.push((bl.j_total, v));
        total += v;
    }
    Ok(PartialWaveSum { total, per_j })
}

fn angles(n: [f64; 3]) -> (f64, f64) {
    let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    ((n[2] / r).clamp(-1.0, 1.0).acos(), n[1].atan2(n[0]))
}

/// Y_{lm}(n) for all l ≤ l_max, indexed l² + l + m.
pub fn ylm_table(l_max: i32, n: [f64; 3]) -> Vec<Complex64> {
    let (t, p) = angles(n);
    let mut v = Vec::with_capacity(((l_max + 1) * (l_max + 1)) as usize);
    for l in 0..=l_max {
        for m in -l..=l {
            v.push(ylm(l, m, t, p));
        }
    }
    v
}

fn lm_index(l: i32, m: i32) -> usize {
    (l * l + l + m) as usize
}

/// f_{(j,τ,m) ← (j₀,τ₀,m₀)}(n ← n₀) = Σ c · Y*_{ℓ₀m_ℓ₀}(n₀) Y_{ℓm_ℓ}(n), with
/// the Clebsch–Gordan and J sums folded into the coefficients.
#[derive(Clone, Debug)]
pub struct AmplitudeExpansion {
    pub l_max: i32,
    /// (index of (ℓ₀, m_ℓ₀), index of (ℓ, m_ℓ), coefficient).
    pub terms: Vec<(usize, usize, Complex64)>,
}

impl AmplitudeExpansion {
    pub fn new(blocks: &[SMatrixBlock], initial: (i32, i32, i32), fin: (i32, i32, i32), mu: f64) -> Result<Self> {
        check_blocks(blocks)?;
        let (j0, tau0, m0) = initial;
        let (j, tau, m) = fin;
        let mut acc: std::collections::BTreeMap<(usize, usize), Complex64> = Default::default();
        let mut k0 = None;
        let mut l_max = 0;
        for b in blocks {
            let idx0 = initial_indices(b, j0, tau0);
            if idx0.is_empty() {
                continue;
            }
            if k0.is_none() {
                k0 = Some(initial_wavenumber(b, j0, tau0, mu)?);
            }
            let jt = b.j_total;
            for fi in (0..b.n()).filter(|&x| b.channels[x].j == j && b.channels[x].tau == tau) {
                let l = b.channels[fi].l;
                for &ii in &idx0 {
                    let l0 = b.channels[ii].l;
                    let t = b.s[(fi, ii)] - if fi == ii { 1.0 } else { 0.0 };
                    if t == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for mm in -jt..=jt {
                        let ml = mm - m;
                        let ml0 = mm - m0;
                        if ml.abs() > l || ml0.abs() > l0 {
                            continue;
                        }
                        let cg = clebsch_gordan(j, m, l, ml, jt, mm) * clebsch_gordan(j0, m0, l0, ml0, jt, mm);
                        if cg == 0.0 {
                            continue;
                        }
                        l_max = l_max.max(l).max(l0);
                        *acc.entry((lm_index(l0, ml0), lm_index(l, ml))).or_default() += t * cg;
                    }
                }
            }
        }
        let k0 = k0.ok_or_else(|| Error::Domain("initial state absent from every block".into()))?;
        let pre = Complex64::new(0.0, -2.0 * PI / k0);
        Ok(AmplitudeExpansion { l_max, terms: acc.into_iter().map(|((a, b), c)| (a, b, c * pre)).collect() })
    }

    /// Evaluate from tables built by `ylm_table` with at least `l_max`.
    pub fn eval_tables(&self, y0: &[Complex64], y: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|&(a, b, c)| c * y0[a].conj() * y[b]).sum()
    }

    pub fn eval(&self, n0: [f64; 3], n: [f64; 3]) -> Complex64 {
        self.eval_tables(&ylm_table(self.l_max, n0), &ylm_table(self.l_max, n))
    }
}

/// Scattering amplitude f_{(j,τ,m) ← (j₀,τ₀,m₀)}(n ← n₀) from the blocks of
/// one handedness.
pub fn amplitude(
    blocks: &[SMatrixBlock],
    initial: (i32, i32, i32),
    fin: (i32, i32, i32),
    n0: [f64; 3],
    n: [f64; 3],
    mu: f64,
) -> Result<Complex64> {
    Ok(AmplitudeExpansion::new(blocks, initial, fin, mu)?.eval(n0, n))
}

/// η(v) and ε(v) for one initial state, with its thermal weight.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RateTable {
    pub initial: StateLabel,
    pub weight: f64,
    /// (v in m/s, η in bohr², ε in bohr²), v strictly increasing.
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RatePrediction {
    pub temperature_k: f64,
    pub n_gas_m3: f64,
    pub gamma_s: f64,
    pub omega_x_s: f64,
    pub omega_z_s: f64,
    /// Pressure (mbar) at which γ reaches the stabilization threshold.
    pub critical_pressure_mbar: f64,
}

/// Maxwell–Boltzmann speed density of the gas particle (s/m).
pub fn maxwell_speed_density(v: f64, t_kelvin: f64, mass_dalton: f64) -> f64 {
    let m = mass_dalton * 1.660_539_066_60e-27;
    let a = m / (2.0 * KB_SI * t_kelvin);
    4.0 * PI * (a / PI).powf(1.5) * v * v * (-a * v * v).exp()
}

/// Fraction of the Maxwell–Boltzmann weight in [v1, v2].
pub fn maxwell_coverage(v1: f64, v2: f64, t_kelvin: f64, mass_dalton: f64) -> f64 {
    let m = mass_dalton * 1.660_539_066_60e-27;
    let s = (m / (2.0 * KB_SI * t_kelvin)).sqrt();
    let cdf = |v: f64| {
        let x = s * v;
        statrs::function::erf::erf(x) - 2.0 / PI.sqrt() * x * (-x * x).exp()
    };
    cdf(v2) - cdf(v1)
}

fn loglog_interp(points: &[(f64, f64)], v: f64) -> f64 {
    let n = points.len();
    if n == 1 {
        return points[0].1;
    }
    let i = match points.iter().position(|p| p.0 >= v) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => n - 2,
    };
    let (x0, y0) = points[i];
    let (x1, y1) = points[i + 1];
    if y0 > 0.0 && y1 > 0.0 && x0 > 0.0 {
        let t = (v / x0).ln() / (x1 / x0).ln();
        (y0.ln() + t * (y1 / y0).ln()).exp()
    } else {
        y0 + (y1 - y0) * (v - x0) / (x1 - x0)
    }
}

/// ⟨v q(v)⟩ over the Maxwell–Boltzmann distribution restricted to the table
/// span; q is interpolated log-log where positive. Units: m/s · bohr².
fn thermal_moment(points: &[(f64, f64)], t_kelvin: f64, mass_dalton: f64) -> f64 {
    let v1 = points[0].0;
    let v2 = points[points.len() - 1].0;
    let panels = 64;
    let mut s = 0.0;
    for p in 0..panels {
        let a = v1 + (v2 - v1) * p as f64 / panels as f64;
        let b = v1 + (v2 - v1) * (p + 1) as f64 / panels as f64;
        let (x, w) = gauss_legendre_interval(12, a, b);
        for (&v, &wv) in x.iter().zip(&w) {
            s += wv * maxwell_speed_density(v, t_kelvin, mass_dalton) * v * loglog_interp(points, v);
        }
    }
    s
}

/// γ = n_gas Σ w(α₀) ⟨v η⟩ and ω_x = n_gas Σ w(α₀) ⟨v ε⟩ (s⁻¹).
pub fn thermal_average_rates(
    tables: &[RateTable],
    t_kelvin: f64,
    n_gas_m3: f64,
    gas_mass_dalton: f64,
    omega_z_s: f64,
    threshold_rate_s: f64,
) -> Result<RatePrediction> {
    if !(t_kelvin > 0.0) || n_gas_m3 < 0.0 {
        return Err(Error::Domain("need T > 0 and n_gas ≥ 0".into()));
    }
    let mut g = 0.0;
    let mut wx = 0.0;
    for t in tables {
        if t.points.is_empty() {
            return Err(Error::Domain(format!("empty velocity table for {:?}", t.initial)));
        }
        if t.points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Domain("velocity table must be strictly increasing".into()));
        }
        let v1 = t.points[0].0;
        let v2 = t.points[t.points.len() - 1].0;
        if t.points.len() > 1 {
            let cov = maxwell_coverage(v1, v2, t_kelvin, gas_mass_dalton);
            if cov < 0.99 {
                return Err(Error::Domain(format!(
                    "velocity table [{v1:.1}, {v2:.1}] m/s covers only {:.2}% of the thermal distribution",
                    100.0 * cov
                )));
            }
        }
        let (eta, eps): (Vec<(f64, f64)>, Vec<(f64, f64)>) = t.points.iter().map(|p| ((p.0, p.1), (p.0, p.2))).unzip();
        let (me, mx) = if t.points.len() == 1 {
            (v1 * t.points[0].1, v1 * t.points[0].2)
        } else {
            (thermal_moment(&eta, t_kelvin, gas_mass_dalton), thermal_moment(&eps, t_kelvin, gas_mass_dalton))
        };
        g += t.weight * me;
        wx += t.weight * mx;
    }
    let a2 = BOHR_M * BOHR_M;
    let gamma_s = n_gas_m3 * g * a2;
    let omega_x_s = n_gas_m3 * wx * a2;
    let per_n = g * a2;
    let p_c = if per_n > 0.0 { threshold_rate_s / per_n * KB_SI * t_kelvin / 100.0 } else { f64::INFINITY };
    Ok(RatePrediction { temperature_k: t_kelvin, n_gas_m3, gamma_s, omega_x_s, omega_z_s, critical_pressure_mbar: p_c })
}

/// High-energy η models used by the critical-pressure estimate.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum EtaModel {
    /// c₁β^{5/3}k^{−1/3} with the given c₁.
    Leading { beta: f64, c1: f64 },
    /// Two-term form, clamped at zero where it turns negative.
    TwoTerm { beta: f64, c1: f64, c2: f64 },
    /// Exponential-Born J integral.
    Integral { beta: f64 },
}

impl EtaModel {
    pub fn reference_two_term(beta: f64) -> Self {
        EtaModel::TwoTerm { beta, c1: C1, c2: C2 }
    }

    pub fn reference_leading(beta: f64) -> Self {
        EtaModel::Leading { beta, c1: C1 }
    }

    /// η (bohr²) at wavenumber k (bohr⁻¹).
    pub fn eta(&self, k: f64) -> Result<f64> {
        match *self {
            EtaModel::Leading { beta, c1 } => Ok(eta_leading(k, beta, c1)),
            EtaModel::TwoTerm { beta, c1, c2 } => Ok(eta_asymptotic_with(k, beta, c1, c2).unwrap_or(0.0)),
            EtaModel::Integral { beta } => Ok(4.0 * PI / (k * k) * born_j_integral(k * beta)?),
        }
    }
}

/// ⟨v η⟩ (m/s · bohr²) over the full Maxwell–Boltzmann distribution of the
/// gas speed, with k = μ v.
pub fn thermal_eta_moment(model: &EtaModel, t_kelvin: f64, mu: f64, gas_mass_dalton: f64) -> Result<f64> {
    let m = gas_mass_dalton * 1.660_539_066_60e-27;
    let vth = (2.0 * KB_SI * t_kelvin / m).sqrt();
    // x = v/v_th on [0, 8] carries all but 1e-26 of the weight
    let panels = 64;
    let mut s = 0.0;
    for p in 0..panels {
        let a = 8.0 * p as f64 / panels as f64;
        let b = 8.0 * (p + 1) as f64 / panels as f64;
        let (x, w) = gauss_legendre_interval(12, a, b);
        for (&xi, &wi) in x.iter().zip(&w) {
            let v = xi * vth;
            if v == 0.0 {
                continue;
            }
            let k = mu * v / AU_VELOCITY_M_S;
            s += wi * vth * maxwell_speed_density(v, t_kelvin, gas_mass_dalton) * v * model.eta(k)?;
        }
    }
    Ok(s)
}

/// Smallest pressure (mbar) with γ(p, T) ≥ `threshold_rate_s`, using the ideal
/// gas and a high-energy η model.
pub fn critical_pressure(t_kelvin: f64, threshold_rate_s: f64, model: &EtaModel, mu: f64, gas_mass_dalton: f64) -> Result<f64> {
    if !(t_kelvin > 0.0) || threshold_rate_s < 0.0 {
        return Err(Error::Domain("need T > 0 and a nonnegative threshold rate".into()));
    }
    if threshold_rate_s == 0.0 {
        return Ok(0.0);
    }
    let moment = thermal_eta_moment(model, t_kelvin, mu, gas_mass_dalton)? * BOHR_M * BOHR_M;
    if moment <= 0.0 {
        return Err(Error::Domain("η vanishes over the thermal distribution".into()));
    }
    // γ = n ⟨vη⟩, n = p/(k_B T)
    let n_needed = threshold_rate_s / moment;
    let p_pa = n_needed * KB_SI * t_kelvin;
    let p_mbar = p_pa / 100.0;
    debug_assert!((number_density(p_mbar, t_kelvin) - n_needed).abs() <= 1e-9 * n_needed);
    Ok(p_mbar)
}

/// Maxwell–Boltzmann moment ⟨v^s⟩ = (2/√π) Γ((s+3)/2) v_th^s, v_th = √(2k_BT/m),
/// in (m/s)^s.
pub fn maxwell_moment(s: f64, t_kelvin: f64, gas_mass_dalton: f64) -> f64 {
    let m = gas_mass_dalton * 1.660_539_066_60e-27;
    let vth = (2.0 * KB_SI * t_kelvin / m).sqrt();
    2.0 / PI.sqrt() * gamma((s + 3.0) / 2.0) * vth.powf(s)
}

/// Fitted exponent b of p_c ∝ T^b over log-spaced temperatures.
pub fn temperature_exponent(temps: &[f64], pressures: &[f64]) -> f64 {
    let n = temps.len() as f64;
    let xs: Vec<f64> = temps.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = pressures.iter().map(|p| p.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Reduced mass (m_e) of a molecule of total mass `m_mol` (m_e) with the gas.
pub fn reduced_mass(m_mol_me: f64, gas_mass_dalton: f64) -> f64 {
    let mg = dalton_to_me(gas_mass_dalton);
    m_mol_me * mg / (m_mol_me + mg)
}
