//! Field-side inputs to the response integrals: switching profiles and the
//! regulated vacuum two-point function of a massless scalar in 3+1
//! dimensions along an inertial worldline.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Time profile of the detector-field coupling.
pub trait Switching: Sync {
    fn eval(&self, tau: f64) -> f64;

    /// Characteristic duration; quadrature domains are sized in these units.
    fn time_scale(&self) -> f64;
}

/// `chi(tau) = exp(-tau^2 / sigma_t^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianSwitching {
    sigma_t: f64,
}

impl GaussianSwitching {
    pub fn new(sigma_t: f64) -> Result<Self> {
        if !(sigma_t > 0.0 && sigma_t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "switching time scale must be positive (got {sigma_t})"
            )));
        }
        Ok(GaussianSwitching { sigma_t })
    }

    pub fn sigma_t(&self) -> f64 {
        self.sigma_t
    }
}

impl Switching for GaussianSwitching {
    fn eval(&self, tau: f64) -> f64 {
        let x = tau / self.sigma_t;
        (-x * x).exp()
    }

    fn time_scale(&self) -> f64 {
        self.sigma_t
    }
}

/// Vacuum correlator `<O(x(tau1)) O(x(tau2))>` along the detector worldline.
pub trait TwoPointFunction: Sync {
    fn value(&self, tau1: f64, tau2: f64) -> Complex64;

    /// Same as [`TwoPointFunction::value`], with `separation = tau1 - tau2`
    /// supplied exactly by the caller. Stationary kernels should override
    /// this to avoid recomputing the difference of two nearby times.
    fn value_separated(&self, tau1: f64, tau2: f64, separation: f64) -> Complex64 {
        let _ = separation;
        self.value(tau1, tau2)
    }
}

/// A family of regulated kernels indexed by the regulator `epsilon`.
pub trait RegulatedField: Sync {
    type Kernel: TwoPointFunction;

    fn kernel(&self, epsilon: f64) -> Result<Self::Kernel>;
}

/// `W(tau1, tau2) = 1 / (4 pi^2 (eps + i (tau1 - tau2))^2)`.
///
/// The prefactor is `Gamma(d-1) / ((4 pi)^{d/2} Gamma(d/2))` at `d = 3`;
/// see [`momentum_space_prefactor`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WightmanKernel {
    epsilon: f64,
}

impl WightmanKernel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "regulator must be positive (got {epsilon})"
            )));
        }
        Ok(WightmanKernel { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Kernel as a function of `tau1 - tau2` alone.
    pub fn at_separation(&self, separation: f64) -> Complex64 {
        let z = Complex64::new(self.epsilon, separation);
        (z * z * (4.0 * PI * PI)).inv()
    }
}

impl TwoPointFunction for WightmanKernel {
    fn value(&self, tau1: f64, tau2: f64) -> Complex64 {
        self.at_separation(tau1 - tau2)
    }

    fn value_separated(&self, _tau1: f64, _tau2: f64, separation: f64) -> Complex64 {
        self.at_separation(separation)
    }
}

/// Massless scalar field in Minkowski vacuum, probed along `x(tau) = (tau, x0)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InertialMasslessScalar;

impl RegulatedField for InertialMasslessScalar {
    type Kernel = WightmanKernel;

    fn kernel(&self, epsilon: f64) -> Result<WightmanKernel> {
        WightmanKernel::new(epsilon)
    }
}

/// `Gamma(d-1) / ((4 pi)^{d/2} Gamma(d/2))`, the coefficient produced by the
/// angular and radial momentum integrals in `d` spatial dimensions.
pub fn momentum_space_prefactor(d: f64) -> f64 {
    use libm::tgamma as gamma;
    gamma(d - 1.0) / ((4.0 * PI).powf(d / 2.0) * gamma(d / 2.0))
}
