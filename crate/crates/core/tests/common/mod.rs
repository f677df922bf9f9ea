#![allow(dead_code)]

use chirostab::channels::Truncation;
use chirostab::observables::{ylm_table, AmplitudeExpansion};
use chirostab::propagator::SMatrixBlock;
use chirostab::quadrature::sphere_rule;
use chirostab::scatter::{EnergyResult, NoStore, ScatterSettings, Scatterer};
use chirostab::system::MolecularSystem;
use chirostab::units::kelvin_to_hartree;

/// Direct double-sphere quadrature of the L/R amplitudes.
#[derive(Clone, Copy, Debug)]
pub struct AngularOracle {
    /// ∫dn dn₀ |f_L − f_R|² / 8π, m₀-averaged and summed over final states.
    pub eta: f64,
    /// ∫dn dn₀ Im(f_L f_R*) / 4π.
    pub eps: f64,
    /// ∫dn dn₀ |f_L|² / 4π (equals σ_tot through unitarity).
    pub sigma_l: f64,
    /// Integral of |Im(f_L f_R*)| / 4π, a scale for ε.
    pub eps_scale: f64,
}

fn open_levels(blocks: &[SMatrixBlock]) -> Vec<(i32, i32)> {
    let mut v: Vec<(i32, i32)> = blocks.iter().flat_map(|b| b.channels.iter().map(|c| (c.j, c.tau))).collect();
    v.sort();
    v.dedup();
    v
}

/// Exact for band limit `l_max` in either direction.
pub fn angular_oracle(l: &[SMatrixBlock], r: &[SMatrixBlock], initial: (i32, i32), mu: f64) -> AngularOracle {
    let l_max = l.iter().flat_map(|b| b.channels.iter().map(|c| c.l)).max().unwrap() as usize;
    let rule = sphere_rule(l_max + 2, 2 * l_max + 3);
    let (j0, tau0) = initial;
    let finals = open_levels(l);
    let tables: Vec<(Vec<_>, f64)> = rule.iter().map(|&(n, w)| (ylm_table(l_max as i32, n), w)).collect();
    let (mut eta, mut eps, mut sig, mut scale) = (0.0, 0.0, 0.0, 0.0);
    for m0 in -j0..=j0 {
        for &(j, tau) in &finals {
            for m in -j..=j {
                let al = AmplitudeExpansion::new(l, (j0, tau0, m0), (j, tau, m), mu).unwrap();
                let ar = AmplitudeExpansion::new(r, (j0, tau0, m0), (j, tau, m), mu).unwrap();
                for (y0, w0) in &tables {
                    for (y, w) in &tables {
                        let fl = al.eval_tables(y0, y);
                        let fr = ar.eval_tables(y0, y);
                        let ww = w0 * w;
                        eta += ww * (fl - fr).norm_sqr();
                        let c = (fl * fr.conj()).im;
                        eps += ww * c;
                        scale += ww * c.abs();
                        sig += ww * fl.norm_sqr();
                    }
                }
            }
        }
    }
    let g = (2 * j0 + 1) as f64;
    let pi = std::f64::consts::PI;
    AngularOracle { eta: eta / (8.0 * pi * g), eps: eps / (4.0 * pi * g), sigma_l: sig / (4.0 * pi * g), eps_scale: scale / (4.0 * pi * g) }
}

/// D2S2 + He with j ≤ `j_max`, J ≤ `j_total_max`, all levels below 40 K kept.
pub fn truncated_run(initial: (i32, i32), e_k: f64, j_max: i32, j_total_max: i32) -> (MolecularSystem, EnergyResult) {
    let sys = MolecularSystem::default_with_core(4.0).unwrap();
    let mut set = ScatterSettings::default();
    set.truncation.fixed = Some(Truncation { e_closed_max: kelvin_to_hartree(40.0), j_max });
    set.j_total_max = j_total_max;
    set.require_tail_convergence = false;
    let res = {
        let sc = Scatterer::new(&sys, initial, 1.0, set).unwrap();
        sc.run_energy(e_k, &NoStore).unwrap()
    };
    (sys, res)
}

pub fn rel(a: f64, b: f64) -> f64 {
    let d = a.abs().max(b.abs());
    if d == 0.0 {
        0.0
    } else {
        (a - b).abs() / d
    }
}
