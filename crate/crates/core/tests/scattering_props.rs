mod common;

use std::sync::OnceLock;

use chirostab::scatter::{EnergyResult, NoStore, ScatterSettings, Scatterer};
use chirostab::system::MolecularSystem;
use common::{rel, truncated_run};
use proptest::prelude::*;

fn system() -> &'static MolecularSystem {
    static SYS: OnceLock<MolecularSystem> = OnceLock::new();
    SYS.get_or_init(|| MolecularSystem::default_with_core(4.0).unwrap())
}

fn default_run(e_k: f64, set: ScatterSettings) -> EnergyResult {
    Scatterer::new(system(), (0, 0), 1.0, set).unwrap().run_energy(e_k, &NoStore).unwrap()
}

/// Ground state at 2 K with all defaults (halving check on, tolerance 1e-4).
fn ground_2k() -> &'static EnergyResult {
    static R: OnceLock<EnergyResult> = OnceLock::new();
    R.get_or_init(|| default_run(2.0, ScatterSettings::default()))
}

#[test]
fn halving_the_step_changes_s_below_1e_6() {
    let r = ground_2k();
    let h = r.halving_change.unwrap();
    assert!(h < 1e-6, "{h:.3e}");
}

#[test]
fn j_sum_tails_below_half_percent() {
    let r = ground_2k();
    assert!(r.sigma_l.tail_estimate() < 0.005);
    assert!(r.sigma_r.tail_estimate() < 0.005);
    assert!(r.eta.total.tail_estimate() < 0.005);
}

#[test]
fn handedness_symmetry_and_unitarity_on_default_run() {
    let r = ground_2k();
    assert!(rel(r.sigma_l.total, r.sigma_r.total) < 1e-6);
    assert!(r.max_unitarity_defect < 1e-8);
    assert!(r.max_symmetry_defect < 1e-8);
    assert!(r.eta.total.total <= 2.0 * (r.sigma_l.total + r.sigma_r.total));
    assert!(r.eta.total.total >= 0.0);
    let parts: f64 = r.eta.per_channel.iter().map(|p| p.1).sum();
    assert!(rel(parts, r.eta.total.total) < 1e-12);
}

#[test]
fn doubling_r_match_changes_sigma_below_tenth_percent() {
    let base = ground_2k();
    let mut set = ScatterSettings::default();
    set.radial.r_match = Some(2.0 * base.r_match);
    set.check_halving = false;
    let far = default_run(2.0, set);
    let d = rel(far.sigma_l.total, base.sigma_l.total);
    assert!(d < 1e-3, "{d:.3e}");
}

#[test]
fn eta_zero_with_only_elastic_channel_open() {
    // below the first j = 2 level only (0, 0) is open; S^L = S^R
    let mut set = ScatterSettings::default();
    set.check_halving = false;
    let r = default_run(1.0, set);
    assert!(r.blocks_l.iter().all(|b| b.n() == 1));
    assert_eq!(r.eta.total.total, 0.0);
}

#[test]
fn eta_grows_below_chiral_threshold() {
    let mut set = ScatterSettings::default();
    set.check_halving = false;
    let mut last = ground_2k().eta.total.total;
    assert!(last > 0.0);
    for e in [5.0, 10.0] {
        let r = default_run(e, set);
        let v = r.eta.total.total;
        assert!(v > last, "E = {e} K: {v} after {last}");
        last = v;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn eta_bounded_by_cross_sections(scale in 0.0f64..20.0, e_k in 0.2f64..1.0) {
        let sys = system();
        let mut set = ScatterSettings::default();
        set.truncation.fixed = Some(chirostab::channels::Truncation { e_closed_max: chirostab::units::kelvin_to_hartree(40.0), j_max: 3 });
        set.j_total_max = 2;
        set.require_tail_convergence = false;
        set.check_halving = false;
        let r = Scatterer::new(sys, (3, 0), scale, set).unwrap().run_energy(e_k, &NoStore).unwrap();
        prop_assert!(r.eta.total.total >= 0.0);
        prop_assert!(r.eta.total.total <= 2.0 * (r.sigma_l.total + r.sigma_r.total));
        prop_assert!(rel(r.sigma_l.total, r.sigma_r.total) < 1e-6);
    }
}

#[test]
fn chiral_scale_zero_gives_no_decoherence() {
    let (_, r) = truncated_run((3, 0), 0.5, 3, 1);
    assert!(r.eta.total.total > 0.0);
    let sys = system();
    let mut set = ScatterSettings::default();
    set.truncation.fixed = Some(r.truncation);
    set.j_total_max = 1;
    set.require_tail_convergence = false;
    set.check_halving = false;
    let z = Scatterer::new(sys, (3, 0), 0.0, set).unwrap().run_energy(0.5, &NoStore).unwrap();
    assert_eq!(z.eta.total.total, 0.0);
}
