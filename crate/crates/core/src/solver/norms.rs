use serde::{Deserialize, Serialize};

use super::{apply_multiplier, Multiplier, SpaceTimeField};
use crate::error::{Error, Result};
use crate::symbols::BernsteinSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub p: f64,
    pub lp: f64,
    pub lp_phi: f64,
    /// `‖u‖_p + ‖φ(Δ)u‖_p`
    pub h_phi: f64,
    /// `‖φ(Δ)u‖_p / ‖f‖_p` when a source is supplied.
    pub ratio: Option<f64>,
}

/// Space-time `L_p` norms of `u` and `φ(Δ)u`.
pub fn phi_potential_norm(
    u: &SpaceTimeField,
    phi: &BernsteinSpec,
    p: f64,
    source: Option<&SpaceTimeField>,
) -> Result<NormReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("p = {p} must lie in (1, ∞)")));
    }
    let lp = u.lp_norm(p);
    let lp_phi = apply_multiplier(u, Multiplier::Phi(phi))?.lp_norm(p);
    let ratio = source.map(|f| {
        let nf = f.lp_norm(p);
        if nf == 0.0 {
            0.0
        } else {
            lp_phi / nf
        }
    });
    Ok(NormReport { p, lp, lp_phi, h_phi: lp + lp_phi, ratio })
}
