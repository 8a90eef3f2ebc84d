//! Two-state switching model, its Liouvillian, synthetic telegraph traces,
//! and the threshold/dwell-time pipeline recovering switching rates and the
//! asymptotic decay rate from measured traces.
//!
//! State 1 is the low-power metastable state, state 2 the high-power one.

mod generate;
mod pipeline;

pub use generate::{simulate_telegraph, TelegraphSpec, TelegraphTrace, TraceMeta};
pub use pipeline::{
    bin_dwells, classify_and_dwell, detect_bimodality, estimate_adr, fit_switching_time,
    homodyne_from_iq, select_channel, AdrEstimate, AdrOptions, AdrOutcome, BinScheme, Censoring,
    Channel, ChannelChoice, Dwell, DwellHistogram, DwellLists, FitMode, BIMODALITY_BINS,
};

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Switching rates between the two metastable states [1/s].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    /// Low -> high.
    pub gamma_12: f64,
    /// High -> low.
    pub gamma_21: f64,
}

impl RatePair {
    pub fn new(gamma_12: f64, gamma_21: f64) -> Result<Self> {
        let r = Self { gamma_12, gamma_21 };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.gamma_12) || !ok(self.gamma_21) {
            return Err(Error::InvalidArgument(format!(
                "rates must be finite and >= 0, got ({}, {})",
                self.gamma_12, self.gamma_21
            )));
        }
        if self.gamma_12 == 0.0 && self.gamma_21 == 0.0 {
            return Err(Error::InvalidArgument("both switching rates are zero".into()));
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.gamma_12 + self.gamma_21
    }

    /// Stationary occupation `(p1, p2)` of the rate equation.
    pub fn stationary(&self) -> (f64, f64) {
        let s = self.sum();
        (self.gamma_21 / s, self.gamma_12 / s)
    }
}

/// Liouvillian of the two-level switching model with `H = e_21 |2><2|` and
/// jump operators `sqrt(gamma_12) |2><1|`, `sqrt(gamma_21) |1><2|`.
///
/// Acts on `(rho_11, rho_22, rho_12, rho_21)`; the upper-left 2x2 block is
/// the classical rate matrix for `(p1, p2)`, the lower-right block evolves
/// the coherences.
pub fn rate_liouvillian(e_21: f64, rates: RatePair) -> Matrix4<C64> {
    let (g12, g21) = (rates.gamma_12, rates.gamma_21);
    let c = |x: f64| C64::new(x, 0.0);
    let z = C64::default();
    let half = -0.5 * (g12 + g21);
    Matrix4::new(
        c(-g12), c(g21), z, z,
        c(g12), c(-g21), z, z,
        z, z, C64::new(half, e_21), z,
        z, z, z, C64::new(half, -e_21),
    )
}

/// Closed-form spectrum `{0, -gamma_sum, -gamma_sum/2 + i e_21, -gamma_sum/2 - i e_21}`.
pub fn liouvillian_spectrum(e_21: f64, rates: RatePair) -> [C64; 4] {
    let s = rates.sum();
    [
        C64::default(),
        C64::from(-s),
        C64::new(-0.5 * s, e_21),
        C64::new(-0.5 * s, -e_21),
    ]
}

/// Asymptotic decay rate `gamma_12 + gamma_21` of the rate model.
///
/// The matching right eigenvector of the population block is `(1, -1)`;
/// the stationary one is `(gamma_21, gamma_12)`.
pub fn adr_from_rates(rates: RatePair) -> f64 {
    rates.sum()
}
