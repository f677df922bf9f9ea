//! Physical constants and unit conversions. Everything inside the crate is in
//! Hartree atomic units; these helpers are used only at the I/O boundary.

/// Boltzmann constant in Hartree per kelvin.
pub const HARTREE_PER_KELVIN: f64 = 3.166_811_563_455_5e-6;
/// Bohr radius in metres.
pub const BOHR_M: f64 = 5.291_772_109_03e-11;
/// Bohr radii per angstrom.
pub const BOHR_PER_ANGSTROM: f64 = 1.0 / 0.529_177_210_903;
/// Electron masses per dalton.
pub const ME_PER_DALTON: f64 = 1822.888_486_209;
/// Atomic unit of time in seconds.
pub const AU_TIME_S: f64 = 2.418_884_326_585_7e-17;
/// Atomic unit of velocity in m/s.
pub const AU_VELOCITY_M_S: f64 = BOHR_M / AU_TIME_S;
/// Boltzmann constant, J/K.
pub const KB_SI: f64 = 1.380_649e-23;
/// Wavenumbers (cm^-1) per Hartree.
pub const CM1_PER_HARTREE: f64 = 219_474.631_363_2;
/// Pascal per millibar.
pub const PA_PER_MBAR: f64 = 100.0;

pub fn kelvin_to_hartree(t: f64) -> f64 {
    t * HARTREE_PER_KELVIN
}

pub fn hartree_to_kelvin(e: f64) -> f64 {
    e / HARTREE_PER_KELVIN
}

pub fn angstrom_to_bohr(x: f64) -> f64 {
    x * BOHR_PER_ANGSTROM
}

pub fn dalton_to_me(m: f64) -> f64 {
    m * ME_PER_DALTON
}

/// Ideal-gas number density in m^-3.
pub fn number_density(p_mbar: f64, t_kelvin: f64) -> f64 {
    p_mbar * PA_PER_MBAR / (KB_SI * t_kelvin)
}

/// Area in bohr^2 to m^2.
pub fn bohr2_to_m2(a: f64) -> f64 {
    a * BOHR_M * BOHR_M
}
