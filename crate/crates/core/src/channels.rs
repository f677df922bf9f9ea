//! Coupled-channel basis in the total-J representation and the radial
//! coupling matrix W(r).
//!
//! Channel functions are i^ℓ Σ ⟨j m ℓ m_ℓ|J M⟩ ψ_{jτm}(ω) Y_{ℓ m_ℓ}(r̂). The
//! i^ℓ phase makes W real symmetric for potentials whose even-rank part is
//! real and odd-rank part imaginary in the C_λμ expansion, which holds for
//! every D2-invariant surface. A block is labelled by J and the D2 species of
//! its rotor states; the D2-invariant interaction never couples species.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::angular::{w3j, w6j};
use crate::dispersion::PotentialSurface;
use crate::error::{Error, Result};
use crate::rotor::{D2Species, RotorState};

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    /// Index into the basis' rotor list.
    pub rotor: usize,
    pub j: i32,
    pub tau: i32,
    pub l: i32,
    /// Threshold energy (Hartree).
    pub threshold: f64,
}

impl Channel {
    pub fn open_at(&self, e_total: f64) -> bool {
        self.threshold <= e_total
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Truncation {
    /// Closed channels are kept up to threshold E_total + e_closed_max (Hartree).
    pub e_closed_max: f64,
    pub j_max: i32,
}

impl Truncation {
    /// Default policy. Closed channels reach 2E above the collision energy and
    /// at least past the first rotor level that the chiral term couples to the
    /// initial state; j_max exceeds the highest open or chirally coupled j by two.
    pub fn default_for(e_total: f64, levels: &[RotorState], species: D2Species, chiral_level: Option<&RotorState>) -> Self {
        let j_open = levels
            .iter()
            .filter(|l| l.species == species && l.energy <= e_total)
            .map(|l| l.j)
            .max()
            .unwrap_or(0);
        let (extra, j_ch) = match chiral_level {
            Some(c) => ((c.energy - e_total).max(0.0), c.j),
            None => (0.0, 0),
        };
        Truncation { e_closed_max: 2.0 * e_total + extra, j_max: j_open.max(j_ch) + 2 }
    }
}

#[derive(Clone, Debug)]
pub struct ChannelBasis {
    pub j_total: i32,
    pub species: D2Species,
    /// Total energy (Hartree) measured from the rotor ground level.
    pub energy: f64,
    /// Reduced mass (m_e).
    pub mu: f64,
    pub trunc: Truncation,
    pub rotors: Vec<RotorState>,
    pub channels: Vec<Channel>,
    pub n_open: usize,
}

impl ChannelBasis {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Index of channel (j, τ, ℓ), if present.
    pub fn find(&self, j: i32, tau: i32, l: i32) -> Option<usize> {
        self.channels.iter().position(|c| c.j == j && c.tau == tau && c.l == l)
    }
}

/// Channels of one (J, species) block at total energy `e_total`.
pub fn build_channel_basis(
    j_total: i32,
    species: D2Species,
    e_total: f64,
    trunc: Truncation,
    levels: &[RotorState],
    mu: f64,
) -> Result<ChannelBasis> {
    if e_total <= 0.0 {
        return Err(Error::Domain("collision energy must be positive".into()));
    }
    let mut rotors: Vec<RotorState> = levels
        .iter()
        .filter(|l| l.species == species && l.j <= trunc.j_max && l.energy <= e_total + trunc.e_closed_max)
        .cloned()
        .collect();
    rotors.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap().then(a.j.cmp(&b.j)).then(a.tau.cmp(&b.tau)));
    let mut channels = Vec::new();
    for (ir, r) in rotors.iter().enumerate() {
        for l in (j_total - r.j).abs()..=(j_total + r.j) {
            channels.push(Channel { rotor: ir, j: r.j, tau: r.tau, l, threshold: r.energy });
        }
    }
    channels.sort_by(|a, b| {
        let oa = a.open_at(e_total);
        let ob = b.open_at(e_total);
        ob.cmp(&oa)
            .then(a.threshold.partial_cmp(&b.threshold).unwrap())
            .then(a.j.cmp(&b.j))
            .then(a.tau.cmp(&b.tau))
            .then(a.l.cmp(&b.l))
    });
    let n_open = channels.iter().filter(|c| c.open_at(e_total)).count();
    if n_open == 0 {
        return Err(Error::Domain(format!("no open channels for J = {j_total}")));
    }
    Ok(ChannelBasis { j_total, species, energy: e_total, mu, trunc, rotors, channels, n_open })
}

/// dst += a·src (elementwise).
pub(crate) fn add_scaled(dst: &mut DMatrix<f64>, a: f64, src: &DMatrix<f64>) {
    for (d, s) in dst.as_mut_slice().iter_mut().zip(src.as_slice()) {
        *d += a * s;
    }
}

/// W(r) = Σ_p M_p r^{−p} + diag(2μ·threshold + ℓ(ℓ+1)/r²).
#[derive(Clone, Debug)]
pub struct CouplingMatrix {
    pub n: usize,
    /// 2μ E_total.
    pub k2: f64,
    pub thresholds: Vec<f64>,
    pub centrifugal: Vec<f64>,
    pub terms: Vec<(i32, DMatrix<f64>)>,
}

impl CouplingMatrix {
    /// W(r) as defined above (energy not subtracted).
    pub fn eval(&self, r: f64) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        self.eval_into(r, 0.0, &mut w);
        w
    }

    /// out = W(r) − shift·1.
    pub fn eval_into(&self, r: f64, shift: f64, out: &mut DMatrix<f64>) {
        out.fill(0.0);
        for (p, m) in &self.terms {
            let f = r.powi(-*p);
            add_scaled(out, f, m);
        }
        let r2 = 1.0 / (r * r);
        for i in 0..self.n {
            out[(i, i)] += self.thresholds[i] + self.centrifugal[i] * r2 - shift;
        }
    }

    /// Largest asymmetry |W − Wᵀ| among the stored terms.
    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (_, t) in &self.terms {
            m = m.max((t - t.transpose()).amax());
        }
        m
    }
}

/// Σ_{k,k'} c'_{k'} c_k (−1)^k (j' λ j; k' μ −k).
pub fn rotor_factor(bra: &RotorState, ket: &RotorState, lambda: i32, mu: i32) -> f64 {
    let mut s = 0.0;
    for k in -ket.j..=ket.j {
        let c = ket.coeff(k);
        if c == 0.0 {
            continue;
        }
        let kp = k - mu;
        if kp.abs() > bra.j {
            continue;
        }
        let cp = bra.coeff(kp);
        if cp == 0.0 {
            continue;
        }
        let sg = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        s += cp * c * sg * w3j(bra.j, lambda, ket.j, kp, mu, -k);
    }
    s
}

/// Orbital and recoupling factor
/// (−1)^{J+λ} √((2j+1)(2j'+1)(2ℓ+1)(2ℓ'+1)) (ℓ' λ ℓ; 0 0 0) {j' ℓ' J; ℓ j λ}.
pub fn recoupling_factor(j_total: i32, jp: i32, lp: i32, j: i32, l: i32, lambda: i32) -> f64 {
    let t = w3j(lp, lambda, l, 0, 0, 0);
    if t == 0.0 {
        return 0.0;
    }
    let six = w6j(jp, lp, j_total, l, j, lambda);
    if six == 0.0 {
        return 0.0;
    }
    let sg = if (j_total + lambda).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sg * (((2 * j + 1) * (2 * jp + 1) * (2 * l + 1) * (2 * lp + 1)) as f64).sqrt() * t * six
}

/// Complex channel matrix of one r-power of the potential, before rephasing:
/// ⟨c'|Σ_λμ v_λμ C_λμ|c⟩ (without 2μ).
fn raw_power_matrix(basis: &ChannelBasis, terms: &[(i32, i32, Complex64)]) -> DMatrix<Complex64> {
    let n = basis.len();
    let nr = basis.rotors.len();
    let mut rf: Vec<Vec<Vec<Complex64>>> = vec![vec![Vec::new(); nr]; nr];
    let lambdas: Vec<i32> = {
        let mut v: Vec<i32> = terms.iter().map(|t| t.0).collect();
        v.sort();
        v.dedup();
        v
    };
    for a in 0..nr {
        for b in 0..nr {
            rf[a][b] = lambdas
                .iter()
                .map(|&lam| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for &(l2, mu, v) in terms {
                        if l2 == lam {
                            s += v * rotor_factor(&basis.rotors[a], &basis.rotors[b], lam, mu);
                        }
                    }
                    s
                })
                .collect();
        }
    }
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (ip, cp) in basis.channels.iter().enumerate() {
        for (i, c) in basis.channels.iter().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for (il, &lam) in lambdas.iter().enumerate() {
                let r = rf[cp.rotor][c.rotor][il];
                if r == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let g = recoupling_factor(basis.j_total, cp.j, cp.l, c.j, c.l, lam);
                s += r * g;
            }
            m[(ip, i)] = s;
        }
    }
    m
}

fn i_power(n: i32) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Potential matrix of one r-power in the rephased (real) basis, without 2μ.
pub fn potential_matrix(basis: &ChannelBasis, surface: &PotentialSurface, power: i32) -> Result<DMatrix<f64>> {
    let terms: Vec<(i32, i32, Complex64)> = surface
        .multipoles()
        .into_iter()
        .filter(|t| t.0 == power)
        .map(|t| (t.1, t.2, t.3))
        .collect();
    let n = basis.len();
    if terms.is_empty() {
        return Ok(DMatrix::zeros(n, n));
    }
    let raw = raw_power_matrix(basis, &terms);
    let mut out = DMatrix::zeros(n, n);
    let scale = raw.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for ip in 0..n {
        for i in 0..n {
            let z = raw[(ip, i)] * i_power(basis.channels[i].l - basis.channels[ip].l);
            if z.im.abs() > 1e-9 * scale {
                return Err(Error::Numerical(format!(
                    "coupling element ({ip},{i}) is not real after rephasing: {z}; the surface is not D2 invariant"
                )));
            }
            out[(ip, i)] = z.re;
        }
    }
    Ok(out)
}

/// Coupling matrix of one basis block.
pub fn coupling_matrix(basis: &ChannelBasis, surface: &PotentialSurface) -> Result<CouplingMatrix> {
    if basis.is_empty() {
        return Err(Error::Domain("empty channel basis".into()));
    }
    let two_mu = 2.0 * basis.mu;
    let mut terms = Vec::new();
    for p in [6, 7] {
        let m = potential_matrix(basis, surface, p)?;
        if m.amax() > 0.0 {
            // enforce exact symmetry against rounding
            let ms = (&m + m.transpose()) * (0.5 * two_mu);
            terms.push((p, ms));
        }
    }
    Ok(CouplingMatrix {
        n: basis.len(),
        k2: two_mu * basis.energy,
        thresholds: basis.channels.iter().map(|c| two_mu * c.threshold).collect(),
        centrifugal: basis.channels.iter().map(|c| (c.l * (c.l + 1)) as f64).collect(),
        terms,
    })
}

/// Per-channel asymptotic wavenumber: +k for open channels, −κ for closed.
pub fn asymptotic_wavenumbers(basis: &ChannelBasis) -> Vec<f64> {
    basis
        .channels
        .iter()
        .map(|c| {
            let d = 2.0 * basis.mu * (basis.energy - c.threshold);
            if d >= 0.0 {
                d.sqrt()
            } else {
                -(-d).sqrt()
            }
        })
        .collect()
}

/// Lowest rotor level (same species as `initial`) reached from `initial` by
/// the r⁻⁷ term of `delta`, judged from the rotor factors.
pub fn first_chiral_level<'a>(levels: &'a [RotorState], initial: &RotorState, delta: &PotentialSurface) -> Option<&'a RotorState> {
    let terms: Vec<(i32, i32, Complex64)> =
        delta.multipoles().into_iter().filter(|t| t.0 == 7).map(|t| (t.1, t.2, t.3)).collect();
    let scale: f64 = terms.iter().map(|t| t.2.norm()).sum();
    if scale == 0.0 {
        return None;
    }
    let mut best: Option<&RotorState> = None;
    for lv in levels.iter().filter(|l| l.species == initial.species && l.energy > initial.energy) {
        let mut s = 0.0;
        for &(lam, mu, v) in &terms {
            s += (v * rotor_factor(lv, initial, lam, mu)).norm();
        }
        if s > 1e-10 * scale && best.is_none_or(|b| lv.energy < b.energy) {
            best = Some(lv);
        }
    }
    best
}
