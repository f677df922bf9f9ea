//! Johnson log-derivative propagation and asymptotic matching.
//!
//! Solves ψ'' = (W(r) − k²)ψ for the matrix log-derivative Y = ψ'ψ⁻¹ from a
//! hard wall at r_start to r_match, then matches to Riccati–Bessel functions
//! (open channels) and modified spherical Bessel functions (closed channels).

use nalgebra::{DMatrix, LU};
use num_complex::Complex64;

use crate::bessel::{modified_log_derivatives, riccati};
use crate::channels::{add_scaled, asymptotic_wavenumbers, ChannelBasis, CouplingMatrix};
use crate::dispersion::Handedness;
use crate::error::{Error, Result};
use crate::rotor::D2Species;

/// Piecewise-uniform radial grid; each sector has an even number of steps.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    pub r_start: f64,
    /// (sector end, number of steps); the last end is r_match.
    pub sectors: Vec<(f64, usize)>,
}

impl RadialGrid {
    pub fn uniform(r_start: f64, r_match: f64, h: f64) -> Result<Self> {
        Self::from_breakpoints(r_start, &[r_match], &[h])
    }

    /// Sectors ending at `ends` with target step `steps[i]` (rounded so each
    /// sector has an even step count).
    pub fn from_breakpoints(r_start: f64, ends: &[f64], steps: &[f64]) -> Result<Self> {
        if ends.is_empty() || ends.len() != steps.len() {
            return Err(Error::Config("radial grid needs one step per sector".into()));
        }
        let mut a = r_start;
        let mut sectors = Vec::new();
        for (&b, &h) in ends.iter().zip(steps) {
            if !(b > a) || !(h > 0.0) || !h.is_finite() {
                return Err(Error::Config(format!("invalid radial sector [{a}, {b}] with step {h}")));
            }
            let mut n = ((b - a) / h).ceil() as usize;
            n = n.max(2);
            if n % 2 == 1 {
                n += 1;
            }
            sectors.push((b, n));
            a = b;
        }
        Ok(RadialGrid { r_start, sectors })
    }

    /// Step h0 up to r_double, then the step doubles each time the sector
    /// length doubles, until r_match.
    pub fn doubling(r_start: f64, r_match: f64, h0: f64, r_double: f64) -> Result<Self> {
        Self::doubling_capped(r_start, r_match, h0, r_double, f64::INFINITY)
    }

    /// As `doubling`, but the step never exceeds `h_max`.
    pub fn doubling_capped(r_start: f64, r_match: f64, h0: f64, r_double: f64, h_max: f64) -> Result<Self> {
        if !(r_match > r_start) {
            return Err(Error::Config("r_match must exceed r_start".into()));
        }
        let mut ends = Vec::new();
        let mut steps = Vec::new();
        let mut b = r_double.max(r_start + h0 * 2.0);
        let mut h = h0;
        while b < r_match {
            ends.push(b);
            steps.push(h.min(h_max));
            b *= 2.0;
            h *= 2.0;
        }
        ends.push(r_match);
        steps.push(h.min(h_max));
        Self::from_breakpoints(r_start, &ends, &steps)
    }

    pub fn r_match(&self) -> f64 {
        self.sectors.last().map(|s| s.0).unwrap_or(self.r_start)
    }

    pub fn total_steps(&self) -> usize {
        self.sectors.iter().map(|s| s.1).sum()
    }

    /// Same sectors with twice the steps.
    pub fn halved(&self) -> Self {
        RadialGrid { r_start: self.r_start, sectors: self.sectors.iter().map(|&(b, n)| (b, 2 * n)).collect() }
    }
}

fn invert(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let lu = LU::new(m);
    let mut id = DMatrix::identity(n, n);
    if !lu.solve_mut(&mut id) {
        return Err(Error::Numerical("singular matrix in log-derivative step".into()));
    }
    Ok(id)
}

/// Anything that supplies W(r) − k² for the propagator.
pub trait RadialCoupling {
    fn dim(&self) -> usize;
    /// 2μE.
    fn k2(&self) -> f64;
    /// out = W(r) − shift·1.
    fn eval_into(&self, r: f64, shift: f64, out: &mut DMatrix<f64>);
}

impl RadialCoupling for CouplingMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn k2(&self) -> f64 {
        self.k2
    }
    fn eval_into(&self, r: f64, shift: f64, out: &mut DMatrix<f64>) {
        CouplingMatrix::eval_into(self, r, shift, out)
    }
}

/// Log-derivative matrix at the end of `grid`, starting from a hard wall.
pub fn propagate_logderiv<W: RadialCoupling + ?Sized>(w: &W, grid: &RadialGrid) -> Result<DMatrix<f64>> {
    let n = w.dim();
    let k2 = w.k2();
    let id = DMatrix::<f64>::identity(n, n);
    let mut y = DMatrix::<f64>::identity(n, n) * 1e30;
    let mut wr = DMatrix::<f64>::zeros(n, n);
    let mut a = grid.r_start;
    for &(b, steps) in &grid.sectors {
        let h = (b - a) / steps as f64;
        // endpoint values are taken just inside the sector so that
        // potentials with steps at sector boundaries are treated exactly
        w.eval_into(a.next_up(), k2, &mut wr);
        add_scaled(&mut y, h / 3.0, &wr);
        for s in 1..=steps {
            let r = if s == steps { b.next_down() } else { a + s as f64 * h };
            // free step: Y ← (1 + hY)⁻¹ Y
            let z = &id + &y * h;
            let lu = LU::new(z);
            if !lu.solve_mut(&mut y) {
                return Err(Error::Numerical(format!("singular step matrix at r = {r}")));
            }
            w.eval_into(r, k2, &mut wr);
            if s % 2 == 1 {
                let m = &id - &wr * (h * h / 6.0);
                let mut u = wr.clone();
                let lu = LU::new(m);
                if !lu.solve_mut(&mut u) {
                    return Err(Error::Numerical("singular reference matrix".into()));
                }
                add_scaled(&mut y, 4.0 * h / 3.0, &u);
            } else if s == steps {
                add_scaled(&mut y, h / 3.0, &wr);
            } else {
                add_scaled(&mut y, 2.0 * h / 3.0, &wr);
            }
        }
        // keep Y symmetric against rounding drift
        y = (&y + y.transpose()) * 0.5;
        a = b;
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite log-derivative".into()));
    }
    Ok(y)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChannelLabel {
    pub j: i32,
    pub tau: i32,
    pub l: i32,
    /// Threshold (Hartree).
    pub threshold: f64,
}

/// Open-channel S-matrix of one (E, J, species, handedness) block, in the
/// rephased channel basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SMatrixBlock {
    /// Total energy (Hartree).
    pub energy: f64,
    pub j_total: i32,
    pub species: D2Species,
    pub handedness: Handedness,
    pub channels: Vec<ChannelLabel>,
    pub s: DMatrix<Complex64>,
}

impl SMatrixBlock {
    pub fn n(&self) -> usize {
        self.channels.len()
    }

    pub fn find(&self, j: i32, tau: i32, l: i32) -> Option<usize> {
        self.channels.iter().position(|c| c.j == j && c.tau == tau && c.l == l)
    }

    /// ‖S†S − 1‖∞ (largest element).
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.n();
        let p = self.s.adjoint() * &self.s - DMatrix::<Complex64>::identity(n, n);
        p.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ‖S − Sᵀ‖∞.
    pub fn symmetry_defect(&self) -> f64 {
        let d = &self.s - self.s.transpose();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn cond1(m: &DMatrix<f64>, inv: &DMatrix<f64>) -> f64 {
    let n1 = |x: &DMatrix<f64>| (0..x.ncols()).map(|c| x.column(c).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    n1(m) * n1(inv)
}

/// Real symmetric K over open channels and the matching condition number.
pub fn extract_kmatrix(y: &DMatrix<f64>, basis: &ChannelBasis, r: f64) -> Result<(DMatrix<f64>, f64)> {
    let n = basis.len();
    let no = basis.n_open;
    if no == 0 {
        return Err(Error::Domain("no open channels".into()));
    }
    let ks = asymptotic_wavenumbers(basis);
    let mut jd = vec![0.0; n];
    let mut jp = vec![0.0; n];
    let mut nd = vec![0.0; n];
    let mut np = vec![0.0; n];
    for (i, c) in basis.channels.iter().enumerate() {
        let k = ks[i];
        if i < no {
            if k <= 0.0 {
                return Err(Error::Numerical("open channel at threshold; shift the energy".into()));
            }
            let (f, fp, g, gp) = riccati(c.l, k * r);
            let s = 1.0 / k.sqrt();
            jd[i] = f * s;
            jp[i] = fp * k * s;
            nd[i] = g * s;
            np[i] = gp * k * s;
        } else {
            let kap = -k;
            let (di, dk) = modified_log_derivatives(c.l, kap * r);
            jd[i] = 1.0;
            jp[i] = kap * di;
            nd[i] = 1.0;
            np[i] = kap * dk;
        }
    }
    // (Y N − N') K = −(Y J − J')
    let mut a = DMatrix::zeros(n, n);
    let mut rhs = DMatrix::zeros(n, no);
    for i in 0..n {
        for c in 0..n {
            a[(i, c)] = y[(i, c)] * nd[c];
        }
        a[(i, i)] -= np[i];
        for c in 0..no {
            rhs[(i, c)] = -y[(i, c)] * jd[c];
        }
        if i < no {
            rhs[(i, i)] += jp[i];
        }
    }
    let ainv = invert(a.clone()).map_err(|_| Error::Numerical("singular matching system".into()))?;
    let cond = cond1(&a, &ainv);
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::Numerical(format!("singular matching system, condition number {cond:.3e}")));
    }
    let kfull = ainv * rhs;
    let k = kfull.rows(0, no).into_owned();
    let ks = (&k + k.transpose()) * 0.5;
    Ok((ks, cond))
}

/// S = (1 + iK)(1 − iK)⁻¹.
pub fn s_from_k(k: &DMatrix<f64>) -> Result<DMatrix<Complex64>> {
    let n = k.nrows();
    let ik = k.map(|v| Complex64::new(0.0, v));
    let id = DMatrix::<Complex64>::identity(n, n);
    let num = &id + &ik;
    let den = &id - &ik;
    let lu = LU::new(den.transpose());
    // S = num · den⁻¹  ⇔  denᵀ Sᵀ = numᵀ
    let mut st = num.transpose();
    if !lu.solve_mut(&mut st) {
        return Err(Error::Numerical("1 − iK is singular".into()));
    }
    Ok(st.transpose())
}

pub fn extract_smatrix(y: &DMatrix<f64>, basis: &ChannelBasis, r_match: f64, handedness: Handedness) -> Result<SMatrixBlock> {
    let (k, _) = extract_kmatrix(y, basis, r_match)?;
    let s = s_from_k(&k)?;
    Ok(SMatrixBlock {
        energy: basis.energy,
        j_total: basis.j_total,
        species: basis.species,
        handedness,
        channels: basis.channels[..basis.n_open]
            .iter()
            .map(|c| ChannelLabel { j: c.j, tau: c.tau, l: c.l, threshold: c.threshold })
            .collect(),
        s,
    })
}

/// Propagate and match in one call.
pub fn solve_block<W: RadialCoupling + ?Sized>(w: &W, basis: &ChannelBasis, grid: &RadialGrid, handedness: Handedness) -> Result<SMatrixBlock> {
    let y = propagate_logderiv(w, grid)?;
    extract_smatrix(&y, basis, grid.r_match(), handedness)
}

/// Largest element change between two blocks with identical channels.
pub fn block_difference(a: &SMatrixBlock, b: &SMatrixBlock) -> f64 {
    if a.channels != b.channels {
        return f64::INFINITY;
    }
    (&a.s - &b.s).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
