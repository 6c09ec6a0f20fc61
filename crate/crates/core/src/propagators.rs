//! Interchangeable strategies for e^{−iHt}.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Eigensystem, C64};
use crate::registry::Registry;
use crate::spin_ops::{OperatorMatrix, StateVector};
use std::sync::Arc;

/// A Hamiltonian prepared for repeated propagation.
pub trait PreparedPropagator: Send + Sync {
    fn unitary(&self, t: f64) -> CMat;

    fn apply(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        StateVector::new(self.unitary(t) * state.amps(), state.basis())
    }
}

pub trait PropagatorStrategy: Send + Sync {
    fn prepare(&self, h: &OperatorMatrix) -> Result<Box<dyn PreparedPropagator>>;
}

/// Diagonalize once, then every time step costs two matrix-vector products.
pub struct Spectral;

struct SpectralPrepared(Eigensystem);

impl PreparedPropagator for SpectralPrepared {
    fn unitary(&self, t: f64) -> CMat {
        self.0.propagator(t)
    }

    fn apply(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        StateVector::new(self.0.apply(state.amps(), t), state.basis())
    }
}

impl PropagatorStrategy for Spectral {
    fn prepare(&self, h: &OperatorMatrix) -> Result<Box<dyn PreparedPropagator>> {
        h.ensure_hermitian()?;
        Ok(Box::new(SpectralPrepared(Eigensystem::new(h.data()))))
    }
}

/// Direct Padé exponential; suited to one-shot propagation.
pub struct Pade;

struct PadePrepared(CMat);

impl PreparedPropagator for PadePrepared {
    fn unitary(&self, t: f64) -> CMat {
        linalg::expm(&self.0.map(|z| z * C64::new(0.0, -t)))
    }
}

impl PropagatorStrategy for Pade {
    fn prepare(&self, h: &OperatorMatrix) -> Result<Box<dyn PreparedPropagator>> {
        h.ensure_hermitian()?;
        Ok(Box::new(PadePrepared(h.data().clone())))
    }
}

pub fn registry() -> Registry<dyn PropagatorStrategy> {
    let spectral: Arc<dyn PropagatorStrategy> = Arc::new(Spectral);
    let pade: Arc<dyn PropagatorStrategy> = Arc::new(Pade);
    Registry::new("propagator").with("eigen", spectral).with("pade", pade)
}

/// Check ‖U†U − 𝟙‖ against the propagator contract.
pub fn check_unitary(u: &CMat) -> Result<()> {
    let err = linalg::unitarity_error(u);
    if err > 1e-10 {
        return Err(Error::Contract(format!("propagator unitarity error {err:.3e}")));
    }
    Ok(())
}
