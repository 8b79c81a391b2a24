//! Three-level detector: free Hamiltonian, monopole moment, and the
//! post-interaction state family
//!
//! ```text
//!         [ p   0   beta* ]
//! rho  =  [ 0   q   0     ]
//!         [ beta 0  1-p-q ]
//! ```
//!
//! whose mana depends only on `q` and `beta`.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{CMatrix, DensityMatrix};

/// Amplitudes below this magnitude do not count towards [`parity_support`].
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn check_gaps(omega1: f64, omega2: f64) -> Result<()> {
    if !(omega1 > 0.0 && omega2 > 0.0) || !omega1.is_finite() || !omega2.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "energy gaps must be positive (got {omega1}, {omega2})"
        )));
    }
    Ok(())
}

/// `diag(0, omega1, omega1 + omega2)`.
pub fn free_hamiltonian(omega1: f64, omega2: f64) -> Result<CMatrix> {
    check_gaps(omega1, omega2)?;
    let mut h = CMatrix::zeros(3, 3);
    h[(1, 1)] = Complex64::new(omega1, 0.0);
    h[(2, 2)] = Complex64::new(omega1 + omega2, 0.0);
    Ok(h)
}

/// Interaction-picture monopole moment at proper time `tau`:
/// `(|1><0| e^{i omega1 tau} + |2><1| e^{i omega2 tau}) / sqrt(2) + h.c.`
pub fn monopole(tau: f64, omega1: f64, omega2: f64) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let up1 = Complex64::from_polar(s, omega1 * tau);
    let up2 = Complex64::from_polar(s, omega2 * tau);
    let mut mu = CMatrix::zeros(3, 3);
    mu[(1, 0)] = up1;
    mu[(0, 1)] = up1.conj();
    mu[(2, 1)] = up2;
    mu[(1, 2)] = up2.conj();
    mu
}

/// Levels reached by `mu(tau_1) ... mu(tau_m) |0>` above [`SUPPORT_THRESHOLD`].
///
/// The product is applied right to left, so `taus[m-1]` acts first. Odd
/// products only reach `|1>`; even products stay within `{|0>, |2>}`.
pub fn parity_support(taus: &[f64], omega1: f64, omega2: f64) -> BTreeSet<usize> {
    let mut state = nalgebra::DVector::<Complex64>::zeros(3);
    state[0] = Complex64::new(1.0, 0.0);
    for &tau in taus.iter().rev() {
        state = monopole(tau, omega1, omega2) * state;
    }
    (0..3)
        .filter(|&k| state[k].norm() > SUPPORT_THRESHOLD)
        .collect()
}

/// `(p, q, beta)` parametrization of the post-interaction detector state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorFamilyState {
    pub p: f64,
    pub q: f64,
    pub beta: Complex64,
}

impl DetectorFamilyState {
    pub fn new(p: f64, q: f64, beta: Complex64) -> Result<Self> {
        if !(p.is_finite() && q.is_finite() && beta.re.is_finite() && beta.im.is_finite()) {
            return Err(Error::InvalidFamily("non-finite component".into()));
        }
        if p < 0.0 || q < 0.0 || p + q > 1.0 + 1e-15 {
            return Err(Error::InvalidFamily(format!(
                "need p, q >= 0 and p + q <= 1 (got p = {p}, q = {q})"
            )));
        }
        Ok(DetectorFamilyState { p, q, beta })
    }

    /// Truncated perturbative state: `p = 1 - q`, empty second excited level.
    pub fn perturbative(q: f64, beta: Complex64) -> Result<Self> {
        Self::new(1.0 - q, q, beta)
    }

    pub fn matrix(&self) -> CMatrix {
        let zero = Complex64::new(0.0, 0.0);
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = Complex64::new(self.p, 0.0);
        m[(1, 1)] = Complex64::new(self.q, 0.0);
        m[(2, 2)] = Complex64::new(1.0 - self.p - self.q, 0.0);
        m[(2, 0)] = self.beta;
        m[(0, 2)] = self.beta.conj();
        debug_assert_eq!(m[(0, 1)], zero);
        m
    }

    /// Assembles the density matrix under the default positivity floor.
    pub fn assemble(&self) -> Result<DensityMatrix> {
        self.assemble_with_floor(DensityMatrix::DEFAULT_PSD_FLOOR)
    }

    /// Assembles with an explicit eigenvalue floor.
    ///
    /// The `{0, 2}` block has determinant `p (1 - p - q) - |beta|^2`, so a
    /// truncated state with `p = 1 - q` sits `~|beta|^2 / p` below zero.
    pub fn assemble_with_floor(&self, floor: f64) -> Result<DensityMatrix> {
        DensityMatrix::with_psd_floor(self.matrix(), floor)
    }

    /// Reads `(p, q, beta)` back from a state of the family shape.
    pub fn from_state(rho: &DensityMatrix) -> Result<Self> {
        let m = rho.matrix();
        if m.nrows() != 3 {
            return Err(Error::InvalidFamily(format!(
                "family states are 3x3, got dimension {}",
                m.nrows()
            )));
        }
        for (r, c) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            if m[(r, c)].norm() > crate::phase_space::ALGEBRA_TOL {
                return Err(Error::InvalidFamily(format!(
                    "entry ({r}, {c}) is {} but must vanish",
                    m[(r, c)]
                )));
            }
        }
        Self::new(m[(0, 0)].re, m[(1, 1)].re, m[(2, 0)])
    }

    pub fn mana(&self) -> f64 {
        family_mana(self.q, self.beta)
    }
}

/// Closed-form qutrit mana of the family state:
///
/// `ln{1 - q + (|q + 2 Re b| + |q - Re b - sqrt3 Im b| + |q - Re b + sqrt3 Im b|) / 3}`.
///
/// Independent of `p`. Evaluated with `ln_1p` to keep precision when the
/// argument is close to one.
pub fn family_mana(q: f64, beta: Complex64) -> f64 {
    let (re, im) = (beta.re, beta.im);
    let bracket = (q + 2.0 * re).abs()
        + (q - re - SQRT3 * im).abs()
        + (q - re + SQRT3 * im).abs();
    (bracket / 3.0 - q).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::mana;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hamiltonian_levels() {
        let h = free_hamiltonian(1.0, 2.0).unwrap();
        assert_eq!(h[(0, 0)].re, 0.0);
        assert_eq!(h[(1, 1)].re, 1.0);
        assert_eq!(h[(2, 2)].re, 3.0);
        let h = free_hamiltonian(0.7, 0.7).unwrap();
        assert_eq!(h[(2, 2)].re, 1.4);
        assert!(free_hamiltonian(0.0, 1.0).is_err());
        assert!(free_hamiltonian(1.0, -1.0).is_err());
    }

    #[test]
    fn monopole_entries() {
        let mu0 = monopole(0.0, 1.0, 2.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(mu0[(1, 0)], c(s, 0.0));
        assert_eq!(mu0[(2, 1)], c(s, 0.0));
        assert_eq!(mu0[(0, 2)], c(0.0, 0.0));

        let mu = monopole(0.37, 1.3, 0.4);
        assert!((mu[(1, 0)] - Complex64::from_polar(s, 1.3 * 0.37)).norm() < 1e-15);
        assert_eq!(mu, mu.adjoint());
    }

    #[test]
    fn parity_support_examples() {
        assert_eq!(parity_support(&[], 1.0, 1.0), BTreeSet::from([0]));
        assert_eq!(parity_support(&[0.3], 1.0, 1.0), BTreeSet::from([1]));
        let two = parity_support(&[0.3, -1.1], 1.0, 1.5);
        assert!(two.is_subset(&BTreeSet::from([0, 2])));
    }

    #[test]
    fn assemble_examples() {
        let ground = DetectorFamilyState::new(1.0, 0.0, c(0.0, 0.0)).unwrap().assemble().unwrap();
        assert_eq!(ground, DensityMatrix::basis(3, 0).unwrap());

        let third = 1.0 / 3.0;
        let mixed = DetectorFamilyState::new(third, third, c(0.0, 0.0)).unwrap().assemble().unwrap();
        let expected = DensityMatrix::maximally_mixed(3).unwrap();
        assert!((mixed.matrix() - expected.matrix()).iter().all(|z| z.norm() < 1e-15));

        // |beta|^2 just under the floor on the {0, 2} block
        let q = 0.1;
        let beta = c((0.5e-10f64 * (1.0 - q)).sqrt(), 0.0);
        assert!(DetectorFamilyState::perturbative(q, beta).unwrap().assemble().is_ok());
        let beta = c((4e-10f64).sqrt(), 0.0);
        assert!(matches!(
            DetectorFamilyState::perturbative(q, beta).unwrap().assemble(),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn rejects_out_of_simplex() {
        assert!(DetectorFamilyState::new(-0.1, 0.2, c(0.0, 0.0)).is_err());
        assert!(DetectorFamilyState::new(0.7, 0.4, c(0.0, 0.0)).is_err());
        assert!(DetectorFamilyState::new(f64::NAN, 0.4, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn extraction_round_trip() {
        let fam = DetectorFamilyState::new(0.5, 0.2, c(0.1, -0.2)).unwrap();
        let back = DetectorFamilyState::from_state(&fam.assemble().unwrap()).unwrap();
        assert_eq!(back, fam);
        assert!(DetectorFamilyState::from_state(&DensityMatrix::pure(&[
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0)
        ])
        .unwrap())
        .is_err());
    }

    #[test]
    fn family_mana_examples() {
        assert_eq!(family_mana(0.0, c(0.0, 0.0)), 0.0);
        assert_eq!(family_mana(0.01, c(-0.005, 0.0)), 0.0);
        // q and beta at omega * sigma = 1, lambda = 0.1
        let m = family_mana(8.309515957242518e-05, c(-1.2066544078756741e-04, 0.0));
        assert!((m - 1.0548491760557503e-04).abs() < 1e-15);
    }

    #[test]
    fn family_mana_matches_phase_space() {
        let fam = DetectorFamilyState::new(0.55, 0.3, c(0.1, 0.2)).unwrap();
        let rho = fam.assemble().unwrap();
        assert!((fam.mana() - mana(&rho).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn conjugate_beta_symmetry() {
        let (q, b) = (0.03, c(0.011, -0.04));
        assert_eq!(family_mana(q, b), family_mana(q, b.conj()));
    }
}
