pub mod poisson;
pub mod quadrature;

pub use poisson::{expected_shortage, poisson_loss_table, PoissonTerms, DEFAULT_TAIL_TOL};
pub use quadrature::{gauss_laguerre, gauss_legendre, Rule};

/// Accuracy knobs shared by the analytic evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericsConfig {
    /// Gauss–Legendre nodes per lead-time interval.
    pub legendre_order: usize,
    /// Starting Gauss–Laguerre order for the launch lead-time integral.
    pub laguerre_order: usize,
    /// Order doubling stops once two passes agree to this relative tolerance.
    pub rel_tol: f64,
    pub laguerre_max_order: usize,
    /// Omitted Poisson / marginal mass.
    pub tail_tol: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            legendre_order: 64,
            laguerre_order: 32,
            rel_tol: 1e-8,
            laguerre_max_order: 256,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

impl NumericsConfig {
    /// Double quadrature orders and tighten truncation to 1e-14.
    pub fn refined(&self) -> Self {
        NumericsConfig {
            legendre_order: self.legendre_order * 2,
            laguerre_order: self.laguerre_order * 2,
            laguerre_max_order: self.laguerre_max_order * 2,
            tail_tol: 1e-14,
            ..*self
        }
    }
}
