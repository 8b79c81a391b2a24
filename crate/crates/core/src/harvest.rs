//! Second-order response of the detector and the mana it harvests.
//!
//! Two routes produce the excitation probability `q` and the coherence
//! `beta`:
//!
//! * **quadrature**: the regulated double integrals over proper time, one
//!   per regulator `eps`, extrapolated to `eps -> 0`;
//! * **closed**: the dimensionally regularized closed forms for Gaussian
//!   switching and equal gaps.
//!
//! Everything per `lambda^2` depends on the gap and switching time only
//! through `x = omega * sigma_t`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::detector::{family_mana, DetectorFamilyState};
use crate::error::{Error, Result};
use crate::field_kernel::{
    GaussianSwitching, InertialMasslessScalar, RegulatedField, Switching, TwoPointFunction,
};
use crate::phase_space::{DensityMatrix, PhaseSpace};
use crate::quadrature::{
    extrapolate_eps_with, integrate2d, EpsilonSchedule, Point, QuadratureSpec, Symmetry,
};

/// `lambda^2 F_q` above this is flagged as outside the perturbative regime.
pub const PERTURBATIVE_LIMIT: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closed,
    Quadrature,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarvestParams {
    pub lambda: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub sigma_t: f64,
    pub quadrature: QuadratureSpec,
    pub eps: EpsilonSchedule,
}

impl HarvestParams {
    /// Equal gaps `omega1 = omega2 = omega`.
    pub fn new(lambda: f64, omega: f64, sigma_t: f64) -> Result<Self> {
        Self::with_gaps(lambda, omega, omega, sigma_t)
    }

    pub fn with_gaps(lambda: f64, omega1: f64, omega2: f64, sigma_t: f64) -> Result<Self> {
        let p = HarvestParams {
            lambda,
            omega1,
            omega2,
            sigma_t,
            quadrature: QuadratureSpec::default(),
            eps: EpsilonSchedule::default(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit switching time and `omega = x`.
    pub fn from_omega_sigma(lambda: f64, x: f64) -> Result<Self> {
        Self::new(lambda, x, 1.0)
    }

    pub fn with_quadrature(mut self, spec: QuadratureSpec) -> Result<Self> {
        self.quadrature = spec;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps(mut self, eps: EpsilonSchedule) -> Self {
        self.eps = eps;
        self
    }

    /// Gaps may be zero here: the response integrals have a finite
    /// degenerate limit, which the sweep starts from.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coupling must be positive (got {})",
                self.lambda
            )));
        }
        for (name, gap) in [("omega1", self.omega1), ("omega2", self.omega2)] {
            if !(gap >= 0.0 && gap.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative (got {gap})"
                )));
            }
        }
        GaussianSwitching::new(self.sigma_t)?;
        self.quadrature.validate()
    }

    pub fn switching(&self) -> GaussianSwitching {
        GaussianSwitching::new(self.sigma_t).expect("validated")
    }

    pub fn equal_gaps(&self) -> bool {
        self.omega1 == self.omega2
    }

    /// `omega * sigma_t`, only defined for equal gaps.
    pub fn omega_sigma(&self) -> Result<f64> {
        if !self.equal_gaps() {
            return Err(Error::UnequalGaps {
                omega1: self.omega1,
                omega2: self.omega2,
            });
        }
        Ok(self.omega1 * self.sigma_t)
    }
}

/// `F_q = (1/8 pi) {exp(-x^2/2) - x sqrt(pi/2) erfc(x / sqrt 2)}`.
pub fn q_closed_per_lambda2(x: f64) -> f64 {
    ((-0.5 * x * x).exp() - x * (PI / 2.0).sqrt() * erfc(x / 2f64.sqrt())) / (8.0 * PI)
}

/// `F_beta = -(1/16 pi) exp(-x^2/2)`.
pub fn beta_closed_per_lambda2(x: f64) -> f64 {
    -(-0.5 * x * x).exp() / (16.0 * PI)
}

/// `M / lambda^2 = x erfc(x / sqrt 2) / (12 sqrt(2 pi))`.
pub fn mana_closed_per_lambda2(x: f64) -> f64 {
    x * erfc(x / 2f64.sqrt()) / (12.0 * (2.0 * PI).sqrt())
}

pub fn q_closed(p: &HarvestParams) -> f64 {
    p.lambda * p.lambda * q_closed_per_lambda2(p.omega1 * p.sigma_t)
}

pub fn beta_closed(p: &HarvestParams) -> Result<f64> {
    Ok(p.lambda * p.lambda * beta_closed_per_lambda2(p.omega_sigma()?))
}

pub fn mana_closed(p: &HarvestParams) -> Result<f64> {
    Ok(p.lambda * p.lambda * mana_closed_per_lambda2(p.omega_sigma()?))
}

/// One regulated integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSample {
    pub epsilon: f64,
    pub value: Complex64,
    pub quad_error: f64,
}

/// A real limit extrapolated from regulated samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limit {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// `F_q` per `lambda^2` from quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEstimate {
    pub limit: Limit,
    pub samples: Vec<EpsilonSample>,
}

/// `F_beta` per `lambda^2` from quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaQuadrature {
    /// `eps -> 0` limit of the real part; `None` for unequal gaps, where the
    /// samples are reported at fixed regulator only.
    pub re_limit: Option<Limit>,
    /// `eps * Im F_beta(eps)` per level. The imaginary part carries a
    /// `1/eps` contact term that is not part of `beta`.
    pub im_eps_plateau: Vec<f64>,
    pub samples: Vec<EpsilonSample>,
}

fn regulated_samples<F>(p: &HarvestParams, symmetry: Symmetry, integrand: F) -> Result<Vec<EpsilonSample>>
where
    F: Fn(f64, Point) -> Result<Complex64> + Sync,
{
    let domain = p.quadrature.domain(p.sigma_t);
    p.eps
        .values(p.sigma_t)
        .into_iter()
        .map(|epsilon| {
            // integrands are infallible once the kernel is built; probe once
            integrand(epsilon, Point { tau: 0.0, tau_prime: 0.0, separation: 0.0 })?;
            let rule = p.quadrature.rule(p.sigma_t, Some(epsilon), symmetry);
            let out = integrate2d(|pt| integrand(epsilon, pt).unwrap_or_default(), &domain, &rule)?;
            Ok(EpsilonSample {
                epsilon,
                value: out.value,
                quad_error: out.error,
            })
        })
        .collect()
}

fn limit_of(samples: &[EpsilonSample], part: impl Fn(Complex64) -> f64) -> Result<Limit> {
    let points: Vec<(f64, Complex64)> = samples
        .iter()
        .map(|s| (s.epsilon, Complex64::new(part(s.value), 0.0)))
        .collect();
    // Richardson weights for halving regulators sum to about 5 in magnitude
    let noise = 8.0 * samples.iter().map(|s| s.quad_error).fold(0.0, f64::max);
    let ex = extrapolate_eps_with(&points, 2, noise)?;
    Ok(Limit {
        value: ex.limit.re,
        error: ex.error,
        converged: ex.converged,
    })
}

/// `F_q` for an arbitrary switching and regulated field.
///
/// The integrand is `<1|mu(tau)|0> <0|mu(tau')|1> chi chi' W(tau', tau)`,
/// Hermitian in `(tau, tau')`, so only the lower triangle is evaluated and
/// the result is exactly real.
pub fn f_q_quadrature_with<S, F>(p: &HarvestParams, switching: &S, field: &F) -> Result<QuadratureEstimate>
where
    S: Switching,
    F: RegulatedField,
{
    p.validate()?;
    let omega1 = p.omega1;
    let kernels = KernelCache::new(field, &p.eps.values(p.sigma_t))?;
    let samples = regulated_samples(p, Symmetry::Hermitian, |eps, pt| {
        let w = kernels.get(eps)?;
        let chi = switching.eval(pt.tau) * switching.eval(pt.tau_prime);
        let phase = Complex64::from_polar(0.5 * chi, omega1 * pt.separation);
        Ok(phase * w.value_separated(pt.tau_prime, pt.tau, -pt.separation))
    })?;
    Ok(QuadratureEstimate {
        limit: limit_of(&samples, |z| z.re)?,
        samples,
    })
}

/// `F_q` for Gaussian switching and the inertial massless scalar.
pub fn f_q_quadrature(p: &HarvestParams) -> Result<QuadratureEstimate> {
    f_q_quadrature_with(p, &p.switching(), &InertialMasslessScalar)
}

/// `F_beta` for an arbitrary switching and regulated field.
///
/// Time ordering splits the square: for `tau > tau'` the integrand is
/// `-(1/4) chi chi' e^{i(omega2 tau + omega1 tau')} W(tau, tau')`, and the
/// mirror image for `tau' > tau`.
pub fn f_beta_quadrature_with<S, F>(p: &HarvestParams, switching: &S, field: &F) -> Result<BetaQuadrature>
where
    S: Switching,
    F: RegulatedField,
{
    p.validate()?;
    let (omega1, omega2) = (p.omega1, p.omega2);
    let kernels = KernelCache::new(field, &p.eps.values(p.sigma_t))?;
    let samples = regulated_samples(p, Symmetry::General, |eps, pt| {
        let w = kernels.get(eps)?;
        let chi = switching.eval(pt.tau) * switching.eval(pt.tau_prime);
        let (later, earlier, gap) = if pt.separation > 0.0 {
            (pt.tau, pt.tau_prime, pt.separation)
        } else {
            (pt.tau_prime, pt.tau, -pt.separation)
        };
        let phase = Complex64::from_polar(-0.25 * chi, omega2 * later + omega1 * earlier);
        Ok(phase * w.value_separated(later, earlier, gap))
    })?;
    let re_limit = if p.equal_gaps() {
        Some(limit_of(&samples, |z| z.re)?)
    } else {
        None
    };
    Ok(BetaQuadrature {
        re_limit,
        im_eps_plateau: samples.iter().map(|s| s.epsilon * s.value.im).collect(),
        samples,
    })
}

/// `F_beta` for Gaussian switching and the inertial massless scalar.
pub fn f_beta_quadrature(p: &HarvestParams) -> Result<BetaQuadrature> {
    f_beta_quadrature_with(p, &p.switching(), &InertialMasslessScalar)
}

struct KernelCache<K> {
    entries: Vec<(f64, K)>,
}

impl<K: TwoPointFunction> KernelCache<K> {
    fn new<F: RegulatedField<Kernel = K>>(field: &F, eps: &[f64]) -> Result<Self> {
        Ok(KernelCache {
            entries: eps
                .iter()
                .map(|&e| Ok((e, field.kernel(e)?)))
                .collect::<Result<_>>()?,
        })
    }

    fn get(&self, eps: f64) -> Result<&K> {
        self.entries
            .iter()
            .find(|(e, _)| *e == eps)
            .map(|(_, k)| k)
            .ok_or_else(|| Error::InvalidParameter(format!("no kernel for regulator {eps}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub q_error: f64,
    pub beta_error: f64,
    pub converged: bool,
    /// `eps * Im F_beta` at the smallest regulator (quadrature only).
    pub im_beta_eps_plateau: Option<f64>,
    pub q_samples: Vec<EpsilonSample>,
    pub beta_samples: Vec<EpsilonSample>,
    pub min_eigenvalue: f64,
    pub warnings: Vec<String>,
}

/// Output record of one run; serialized, never read back.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarvestResult {
    pub method: Method,
    pub lambda: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub sigma_t: f64,
    pub q: f64,
    pub beta: Complex64,
    pub rho: DensityMatrix,
    /// Mana of `rho` from its discrete Wigner function.
    pub mana_general: f64,
    /// Mana from the `(q, beta)` closed expression for the state family.
    pub mana_family: f64,
    /// Leading-order closed form in `lambda`.
    pub mana_closed: f64,
    pub diagnostics: Diagnostics,
}

impl HarvestResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric document serializes")
    }
}

/// Eigenvalue floor for the truncated state: its `{0, 2}` block sits about
/// `|beta|^2 / p` below zero, and `p >= 1/2` whenever the run is perturbative.
fn truncation_floor(beta: Complex64) -> f64 {
    DensityMatrix::DEFAULT_PSD_FLOOR - 2.0 * beta.norm_sqr()
}

/// Computes `q` and `beta` by `method`, assembles the detector state with
/// `p = 1 - q`, and evaluates its mana three ways.
pub fn run_pipeline(p: &HarvestParams, method: Method) -> Result<HarvestResult> {
    p.validate()?;
    let x = p.omega_sigma()?;
    let l2 = p.lambda * p.lambda;
    let mut warnings = Vec::new();

    let (q, beta, q_error, beta_error, converged, plateau, q_samples, beta_samples) = match method {
        Method::Closed => (
            q_closed(p),
            Complex64::new(beta_closed(p)?, 0.0),
            0.0,
            0.0,
            true,
            None,
            Vec::new(),
            Vec::new(),
        ),
        Method::Quadrature => {
            let fq = f_q_quadrature(p)?;
            let fb = f_beta_quadrature(p)?;
            let re = fb.re_limit.expect("equal gaps checked above");
            if !fq.limit.converged {
                warnings.push("F_q extrapolation did not converge".to_string());
            }
            if !re.converged {
                warnings.push("Re F_beta extrapolation did not converge".to_string());
            }
            if fq.limit.value < -fq.limit.error {
                warnings.push(format!(
                    "F_q = {:e} is negative beyond its error {:e}",
                    fq.limit.value, fq.limit.error
                ));
            }
            (
                l2 * fq.limit.value,
                Complex64::new(l2 * re.value, 0.0),
                l2 * fq.limit.error,
                l2 * re.error,
                fq.limit.converged && re.converged,
                fb.im_eps_plateau.last().copied(),
                fq.samples,
                fb.samples,
            )
        }
    };

    if q > PERTURBATIVE_LIMIT {
        warnings.push(format!(
            "lambda^2 F_q = {q:e} exceeds {PERTURBATIVE_LIMIT}; second order may be unreliable"
        ));
    }
    // quadrature noise can leave q a hair below zero at large gaps
    let family = DetectorFamilyState::perturbative(q.max(0.0), beta)?;
    let rho = family.assemble_with_floor(truncation_floor(beta))?;
    let min_eigenvalue = rho.min_eigenvalue();
    if min_eigenvalue < DensityMatrix::DEFAULT_PSD_FLOOR {
        warnings.push(format!(
            "truncated state has eigenvalue {min_eigenvalue:e} (order lambda^4)"
        ));
    }
    let mana_general = PhaseSpace::new(3)?.mana(&rho)?;
    Ok(HarvestResult {
        method,
        lambda: p.lambda,
        omega1: p.omega1,
        omega2: p.omega2,
        sigma_t: p.sigma_t,
        q: family.q,
        beta,
        rho,
        mana_general,
        mana_family: family_mana(family.q, beta),
        mana_closed: l2 * mana_closed_per_lambda2(x),
        diagnostics: Diagnostics {
            q_error,
            beta_error,
            converged,
            im_beta_eps_plateau: plateau,
            q_samples,
            beta_samples,
            min_eigenvalue,
            warnings,
        },
    })
}

/// Evenly spaced `omega * sigma_t` grid, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub x_min: f64,
    pub x_max: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn new(x_min: f64, x_max: f64, steps: usize) -> Result<Self> {
        if !(x_min >= 0.0 && x_max > x_min && x_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= min < max (got {x_min}, {x_max})"
            )));
        }
        if steps < 2 {
            return Err(Error::InvalidParameter("a sweep needs at least 2 points".into()));
        }
        Ok(SweepRange { x_min, x_max, steps })
    }

    pub fn grid(&self) -> Vec<f64> {
        let span = self.x_max - self.x_min;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.x_max
                } else {
                    self.x_min + span * i as f64 / last
                }
            })
            .collect()
    }
}

/// One line of the sweep table; every field is per `lambda^2` except the
/// plateau and error columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub omega_sigma: f64,
    pub q_per_lambda2: f64,
    pub re_beta_per_lambda2: f64,
    pub im_beta_eps_plateau: f64,
    pub mana_closed_per_lambda2: f64,
    pub mana_family_per_lambda2: f64,
    pub mana_general_per_lambda2: f64,
    pub quad_error_estimate: f64,
}

impl SweepRow {
    pub const HEADER: [&'static str; 8] = [
        "omega_sigma",
        "q_per_lambda2",
        "re_beta_per_lambda2",
        "im_beta_eps_plateau",
        "mana_closed_per_lambda2",
        "mana_family_per_lambda2",
        "mana_general_per_lambda2",
        "quad_error_estimate",
    ];

    pub fn from_result(r: &HarvestResult) -> Self {
        let l2 = r.lambda * r.lambda;
        SweepRow {
            omega_sigma: r.omega1 * r.sigma_t,
            q_per_lambda2: r.q / l2,
            re_beta_per_lambda2: r.beta.re / l2,
            im_beta_eps_plateau: r.diagnostics.im_beta_eps_plateau.unwrap_or(f64::NAN),
            mana_closed_per_lambda2: r.mana_closed / l2,
            mana_family_per_lambda2: r.mana_family / l2,
            mana_general_per_lambda2: r.mana_general / l2,
            quad_error_estimate: (r.diagnostics.q_error.max(r.diagnostics.beta_error)) / l2,
        }
    }

    fn fields(&self) -> [f64; 8] {
        [
            self.omega_sigma,
            self.q_per_lambda2,
            self.re_beta_per_lambda2,
            self.im_beta_eps_plateau,
            self.mana_closed_per_lambda2,
            self.mana_family_per_lambda2,
            self.mana_general_per_lambda2,
            self.quad_error_estimate,
        ]
    }
}

/// Runs the pipeline at each grid point, keeping `lambda`, `sigma_t` and the
/// numerical settings of `base` and setting both gaps to `x / sigma_t`.
pub fn sweep(range: &SweepRange, base: &HarvestParams, method: Method) -> Result<Vec<SweepRow>> {
    base.validate()?;
    range
        .grid()
        .into_par_iter()
        .map(|x| {
            let mut p = base.clone();
            p.omega1 = x / base.sigma_t;
            p.omega2 = p.omega1;
            let r = run_pipeline(&p, method)?;
            Ok(SweepRow {
                omega_sigma: x,
                ..SweepRow::from_result(&r)
            })
        })
        .collect()
}

/// 17 significant digits, '.' decimal point.
fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SweepRow::HEADER).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.fields().iter().map(|v| format_value(*v)))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Schema(format!("csv output failed: {other:?}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub x_star: f64,
    pub mana_star: f64,
    pub mana_star_per_lambda2: f64,
}

/// Upper end of the search bracket for `omega * sigma_t`.
const OPTIMIZE_BRACKET: (f64, f64) = (0.0, 5.0);

/// Gap-time product that maximizes the leading-order harvested mana.
pub fn optimize(lambda: f64) -> Result<Optimum> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "coupling must be positive (got {lambda})"
        )));
    }
    let (a, b) = OPTIMIZE_BRACKET;
    let x_star = golden_section_max(mana_closed_per_lambda2, a, b, 1e-10)?;
    let per = mana_closed_per_lambda2(x_star);
    Ok(Optimum {
        x_star,
        mana_star: lambda * lambda * per,
        mana_star_per_lambda2: per,
    })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (fa, fb) = (f(a), f(b));
    let (mut f1, mut f2) = (f(x1), f(x2));
    if !(f1.max(f2) > fa && f1.max(f2) > fb) {
        return Err(Error::Bracket(format!(
            "no interior maximum in [{a}, {b}]"
        )));
    }
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    Ok(0.5 * (a + b))
}
