//! Exact propagation under a fixed-chi generator.
//!
//! The generator is constant over the measurement window, so the propagator
//! is a single dense 4x4 matrix exponential.

use crate::error::{CwlmError, Result};
use crate::generator::Liouvillian;
use crate::linalg::{c, dagger, expm, unitary_of, unvec_rho, vec_rho, Mat2};
use crate::model::{PostSelector, QubitState};

/// Outcome of [`evolve`].
#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub rho_final: QubitState,
    pub chi: f64,
    pub t_total: f64,
}

/// Propagate `rho0` for time `t` under L(chi).
pub fn evolve(l: &Liouvillian, chi: f64, rho0: &QubitState, t: f64) -> Result<PropagationResult> {
    if t < 0.0 {
        return Err(CwlmError::InvalidParameter("evolution time must be nonnegative".into()));
    }
    let prop = expm(&(l.at(chi) * c(t)))?;
    let rho = unvec_rho(&(prop * vec_rho(&rho0.rho)));
    let quasi = chi != 0.0 || rho0.quasi;
    Ok(PropagationResult {
        rho_final: if quasi { QubitState::quasi(rho) } else { QubitState { rho, quasi: false } },
        chi,
        t_total: t,
    })
}

/// Unique trace-1 Hermitian null state of l0.
///
/// Fails with [`CwlmError::DegenerateKernel`] when the zero eigenvalue of the
/// generator is not isolated (e.g. no dissipation at all).
pub fn stationary_state(l: &Liouvillian) -> Result<QubitState> {
    let svd = l.l0.svd(true, true);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let smallest = svd.singular_values[order[0]];
    let second = svd.singular_values[order[1]];
    let scale = l.l0.norm().max(1e-300);
    if second <= 1e-8 * scale {
        return Err(CwlmError::DegenerateKernel(second));
    }

    let v_t = svd.v_t.as_ref().expect("requested V^H");
    let null = v_t.row(order[0]).adjoint();
    let mut rho = unvec_rho(&null);
    rho = (rho + dagger(&rho)) * c(0.5);
    let tr = (rho[(0, 0)] + rho[(1, 1)]).re;
    if tr.abs() < 1e-12 {
        return Err(CwlmError::DegenerateKernel(smallest));
    }
    rho /= c(tr);

    let residual = (l.l0 * vec_rho(&rho)).norm();
    if residual > 1e-10 * scale.max(1.0) {
        return Err(CwlmError::DegenerateKernel(residual));
    }
    QubitState::physical(rho).or_else(|_| {
        // Numerical kernels can carry ~1e-13 negativity; clamp through the
        // quasi constructor but keep the physical flag.
        Ok(QubitState { rho, quasi: false })
    })
}

/// Conjugate a post-selector by exp(-i H t): the frame rotation quenching
/// trivial Rabi phases before the terminal projection.
pub fn rotate_post_selector(p: &PostSelector, h: &Mat2, t: f64) -> PostSelector {
    let u = unitary_of(h, t);
    PostSelector { op: u * p.op * dagger(&u) }
}
