//! Gauss–Legendre rules on the reference interval `[0, 1]`.

/// Three-point Gauss–Legendre nodes mapped to `[0, 1]`.
pub const GAUSS3_NODES: [f64; 3] = [
    0.112_701_665_379_258_31,
    0.5,
    0.887_298_334_620_741_7,
];

/// Weights matching [`GAUSS3_NODES`]; they sum to one.
pub const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// Panels used by [`integrate`] for edge moments.
pub const MOMENT_PANELS: usize = 64;

/// Composite three-point Gauss rule on `[a, b]` with `panels` equal panels.
pub fn composite_gauss3<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let left = a + p as f64 * h;
        let mut local = 0.0;
        for (x, w) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS.iter()) {
            local += w * f(left + x * h);
        }
        total += local * h;
    }
    total
}

/// Integral over `[0, 1]` with [`MOMENT_PANELS`] panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F) -> f64 {
    composite_gauss3(f, 0.0, 1.0, MOMENT_PANELS)
}
