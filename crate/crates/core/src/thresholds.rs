use serde::{Deserialize, Serialize};

/// Every tolerance used by verdicts, in one place.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Closed-form identities (admissibility, the coupling condition).
    pub analytic: f64,
    /// Boundary-form domain check, scaled by `(1 + ‖C‖_F)²`.
    pub quadrature: f64,
    pub involution: f64,
    pub eigen_residual: f64,
    /// Successive commutator ratios must fall in
    /// `[lo, hi] × (n_{k+1}/n_k)^order`.
    pub order_window: (f64, f64),
    /// Commutator norms below `roundoff_floor · max(1, ‖A‖²)` count as zero.
    pub roundoff_floor: f64,
    /// Absolute floor for "clearly non-normal" commutator norms.
    pub separation_floor: f64,
    /// The negative control must exceed the base commutator by this factor...
    pub separation_ratio: f64,
    /// ...and be at least this large.
    pub negative_control_min: f64,
    pub negative_control_delta: f64,
    /// Number of test functions for the boundary-form domain check.
    pub domain_basis_size: usize,
    /// Eigen-residual bound for reported spectra.
    pub spectrum_residual: f64,
    /// Relative distance between a computed eigenvalue and its oracle root.
    pub spectrum_relative: f64,
    /// Sweep points this far from the analytic zero set are "far".
    pub sweep_far_distance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            analytic: 1e-12,
            quadrature: 1e-9,
            involution: 1e-10,
            eigen_residual: 1e-8,
            order_window: (0.75, 1.25),
            roundoff_floor: 1e-12,
            separation_floor: 1e-2,
            separation_ratio: 10.0,
            negative_control_min: 1e-3,
            negative_control_delta: 0.1,
            domain_basis_size: 8,
            spectrum_residual: 1e-6,
            spectrum_relative: 1e-3,
            sweep_far_distance: 0.1,
        }
    }
}

impl Thresholds {
    pub fn with_overrides(analytic: Option<f64>, quadrature: Option<f64>) -> Self {
        let mut t = Thresholds::default();
        if let Some(a) = analytic {
            t.analytic = a;
        }
        if let Some(q) = quadrature {
            t.quadrature = q;
        }
        t
    }
}
