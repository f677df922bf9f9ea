//! Riccati–Bessel functions for asymptotic matching.
//!
//! F_ℓ(x) = x j_ℓ(x) ~ sin(x − ℓπ/2) and G_ℓ(x) = −x y_ℓ(x) ~ cos(x − ℓπ/2).
//! j_ℓ comes from a backward ratio recurrence plus the Wronskian with y_ℓ,
//! which is stable by upward recurrence. For closed channels only the
//! logarithmic derivatives of x i_ℓ(x) and x k_ℓ(x) are needed.

/// y_ℓ(x) and y_{ℓ+1}(x) by upward recurrence.
fn sph_y_pair(l: i32, x: f64) -> (f64, f64) {
    let mut y0 = -x.cos() / x;
    let mut y1 = -x.cos() / (x * x) - x.sin() / x;
    for n in 1..=l {
        let y2 = (2 * n + 1) as f64 / x * y1 - y0;
        y0 = y1;
        y1 = y2;
    }
    (y0, y1)
}

/// j_{ℓ+1}(x)/j_ℓ(x) by backward recurrence of ratios.
fn sph_j_ratio(l: i32, x: f64) -> f64 {
    let top = l + 40 + (1.5 * x) as i32;
    let mut rho = 0.0;
    for n in (l + 1..=top).rev() {
        // rho_{n-1} = j_n / j_{n-1} = 1 / ((2n+1)/x − j_{n+1}/j_n)
        rho = 1.0 / ((2 * n + 1) as f64 / x - rho);
    }
    rho
}

/// (F, F', G, G') with derivatives taken with respect to x.
pub fn riccati(l: i32, x: f64) -> (f64, f64, f64, f64) {
    assert!(x > 0.0 && l >= 0);
    let (y, y1) = sph_y_pair(l, x);
    let rho = sph_j_ratio(l, x);
    let j = 1.0 / (x * x * (rho * y - y1));
    let j1 = rho * j;
    let lf = (l + 1) as f64;
    let f = x * j;
    let fp = lf * j - x * j1;
    let g = -x * y;
    let gp = -(lf * y - x * y1);
    (f, fp, g, gp)
}

/// d/dx ln(x i_ℓ(x)) and d/dx ln(x k_ℓ(x)) for the modified spherical functions.
pub fn modified_log_derivatives(l: i32, x: f64) -> (f64, f64) {
    assert!(x > 0.0 && l >= 0);
    // i_{ℓ+1}/i_ℓ from i_{n−1} − i_{n+1} = (2n+1)/x · i_n
    let top = l + 40 + (1.5 * x) as i32;
    let mut rho = 0.0;
    for n in (l + 1..=top).rev() {
        rho = 1.0 / ((2 * n + 1) as f64 / x + rho);
    }
    let lf = l as f64;
    let di = 1.0 / x + rho + lf / x;
    // k_{ℓ+1}/k_ℓ by upward recurrence k_{n+1} = k_{n−1} + (2n+1)/x · k_n
    let mut q = 1.0 + 1.0 / x;
    for n in 1..=l {
        q = 1.0 / q + (2 * n + 1) as f64 / x;
    }
    let dk = 1.0 / x - q + lf / x;
    (di, dk)
}
