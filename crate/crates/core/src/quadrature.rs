//! Deterministic double quadrature over a square, and extrapolation of
//! regulated integrals to zero regulator.
//!
//! The square is split along its diagonal `tau = tau'`. Each triangle is
//! parametrized by the separation `s = |tau - tau'|` and midpoint
//! `m = (tau + tau') / 2` (unit Jacobian). Panels in `s` are graded
//! dyadically from a caller-supplied diagonal scale, so kernels that peak
//! like `1 / (eps + i s)^2` are resolved at every regulator. Every panel uses
//! tensor Gauss-Legendre rules; the error estimate compares the full-order
//! rule against a half-order rule on the same panels.
//!
//! Panel sums may run on several threads but are always reduced in panel
//! order, so results are bit-identical regardless of scheduling.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// User-facing quadrature settings, in units of the switching time scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Half-width of the integration square, in units of `sigma_t`.
    pub truncation_radius: f64,
    /// Absolute tolerance on each regulated integral (per unit `lambda^2`).
    pub abs_tol: f64,
    /// Gauss-Legendre points per panel and axis.
    pub order: usize,
    /// Largest panel width, in units of `sigma_t`.
    pub panel_width: f64,
    /// Number of times panels may be halved before giving up.
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            truncation_radius: 6.0,
            abs_tol: 1e-10,
            order: 20,
            panel_width: 0.5,
            max_refinements: 3,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.truncation_radius >= 4.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation radius must be at least 4 sigma (got {})",
                self.truncation_radius
            )));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if self.order < 4 || !self.order.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "rule order must be even and >= 4 (got {})",
                self.order
            )));
        }
        if !(self.panel_width > 0.0) {
            return Err(Error::InvalidParameter("panel width must be positive".into()));
        }
        Ok(())
    }

    /// Panel rule for a square of half-width `truncation_radius * time_scale`.
    pub fn rule(&self, time_scale: f64, diagonal_scale: Option<f64>, symmetry: Symmetry) -> PanelRule {
        PanelRule {
            order: self.order,
            panel_width: self.panel_width * time_scale,
            diagonal_scale,
            abs_tol: self.abs_tol,
            max_refinements: self.max_refinements,
            symmetry,
        }
    }

    pub fn domain(&self, time_scale: f64) -> SquareDomain {
        let r = self.truncation_radius * time_scale;
        SquareDomain { lo: -r, hi: r }
    }
}

/// Regulator values `eps_k = factor_k * sigma_t`, strictly decreasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    factors: Vec<f64>,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self::dyadic(4, 10)
    }
}

impl EpsilonSchedule {
    pub fn new(factors: Vec<f64>) -> Result<Self> {
        if factors.len() < 3 {
            return Err(Error::InvalidParameter(
                "an epsilon schedule needs at least three levels".into(),
            ));
        }
        if factors.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
            return Err(Error::InvalidParameter("regulators must be positive".into()));
        }
        if factors.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter(
                "regulators must be strictly decreasing".into(),
            ));
        }
        Ok(EpsilonSchedule { factors })
    }

    /// `2^-k` for `k = k_min..=k_max`.
    pub fn dyadic(k_min: i32, k_max: i32) -> Self {
        EpsilonSchedule {
            factors: (k_min..=k_max).map(|k| 2f64.powi(-k)).collect(),
        }
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn values(&self, time_scale: f64) -> Vec<f64> {
        self.factors.iter().map(|f| f * time_scale).collect()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

/// An evaluation point; `separation = tau - tau_prime` is exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub tau: f64,
    pub tau_prime: f64,
    pub separation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    /// Integrate both triangles.
    General,
    /// `f(tau, tau') = conj(f(tau', tau))`: the result is `2 Re` of the
    /// lower triangle and exactly real.
    Hermitian,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SquareDomain {
    pub lo: f64,
    pub hi: f64,
}

/// Concrete panel layout for one call to [`integrate2d`].
#[derive(Clone, Debug, PartialEq)]
pub struct PanelRule {
    pub order: usize,
    pub panel_width: f64,
    /// Width of the kernel peak at `tau = tau'`. Separation panels start at a
    /// fraction of it and double until they reach `panel_width`.
    pub diagonal_scale: Option<f64>,
    pub abs_tol: f64,
    pub max_refinements: usize,
    pub symmetry: Symmetry,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
    pub refinements: usize,
}

/// Integrates `f` over `domain x domain` to the rule's absolute tolerance.
pub fn integrate2d<F>(f: F, domain: &SquareDomain, rule: &PanelRule) -> Result<Integral>
where
    F: Fn(Point) -> Complex64 + Sync,
{
    let length = domain.hi - domain.lo;
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "empty integration square [{}, {}]",
            domain.lo, domain.hi
        )));
    }
    if rule.order < 2 || !(rule.panel_width > 0.0) {
        return Err(Error::InvalidParameter("degenerate panel rule".into()));
    }
    let high = gauss_legendre(rule.order);
    let low = gauss_legendre((rule.order / 2).max(1));
    let mut best = None;
    for level in 0..=rule.max_refinements {
        let scale = 0.5f64.powi(level as i32);
        let width = rule.panel_width * scale;
        let breaks = separation_breaks(length, width, rule.diagonal_scale.map(|d| d * scale));
        let fine = triangle_sum(&f, domain, &breaks, width, &high, rule.symmetry);
        let coarse = triangle_sum(&f, domain, &breaks, width, &low, rule.symmetry);
        let rounding = 4.0 * f64::EPSILON * fine.magnitude;
        let error = (fine.value - coarse.value).norm().max(rounding);
        let result = Integral {
            value: fine.value,
            error,
            evaluations: fine.evaluations + coarse.evaluations,
            refinements: level,
        };
        if error <= rule.abs_tol {
            return Ok(result);
        }
        best = Some(result);
    }
    let best = best.expect("at least one level is evaluated");
    Err(Error::QuadratureTolerance {
        estimate: best.error,
        target: rule.abs_tol,
    })
}

/// The first separation panel is this many times narrower than the diagonal scale.
const DIAGONAL_SUBDIVISION: f64 = 8.0;

fn separation_breaks(length: f64, width: f64, diagonal: Option<f64>) -> Vec<f64> {
    let mut breaks = vec![0.0];
    if let Some(d) = diagonal.filter(|d| *d > 0.0) {
        // panels no wider than their distance from the diagonal
        let mut x = d / DIAGONAL_SUBDIVISION;
        while x < 2.0 * width && x < length {
            breaks.push(x);
            x *= 2.0;
        }
    }
    let start = *breaks.last().unwrap();
    let rest = length - start;
    let count = (rest / width).ceil().max(1.0) as usize;
    for i in 1..count {
        breaks.push(start + rest * i as f64 / count as f64);
    }
    breaks.push(length);
    breaks
}

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Default)]
struct Accumulator {
    sum: Complex64,
    carry: Complex64,
}

impl Accumulator {
    fn add(&mut self, x: Complex64) {
        self.sum.re = neumaier(self.sum.re, x.re, &mut self.carry.re);
        self.sum.im = neumaier(self.sum.im, x.im, &mut self.carry.im);
    }

    fn total(&self) -> Complex64 {
        self.sum + self.carry
    }
}

fn neumaier(sum: f64, x: f64, carry: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *carry += (sum - t) + x;
    } else {
        *carry += (x - t) + sum;
    }
    t
}

struct PanelSum {
    value: Complex64,
    magnitude: f64,
    evaluations: usize,
}

fn triangle_sum<F>(
    f: &F,
    domain: &SquareDomain,
    breaks: &[f64],
    width: f64,
    (nodes, weights): &(Vec<f64>, Vec<f64>),
    symmetry: Symmetry,
) -> PanelSum
where
    F: Fn(Point) -> Complex64 + Sync,
{
    let length = domain.hi - domain.lo;
    let center = 0.5 * (domain.lo + domain.hi);
    let panels: Vec<PanelSum> = breaks
        .par_windows(2)
        .map(|w| {
            let (s0, s1) = (w[0], w[1]);
            let (sh, sc) = (0.5 * (s1 - s0), 0.5 * (s1 + s0));
            let mut value = Accumulator::default();
            let mut magnitude = 0.0;
            let mut evaluations = 0;
            for (xs, ws) in nodes.iter().zip(weights) {
                let s = sc + sh * xs;
                let half_len = 0.5 * (length - s);
                let count = ((2.0 * half_len) / width).ceil().max(1.0) as usize;
                let panel = 2.0 * half_len / count as f64;
                let mh = 0.5 * panel;
                let mut inner = Accumulator::default();
                let mut inner_mag = 0.0;
                for j in 0..count {
                    let mc = center - half_len + panel * j as f64 + mh;
                    for (xm, wm) in nodes.iter().zip(weights) {
                        let m = mc + mh * xm;
                        let lower = f(Point {
                            tau: m + 0.5 * s,
                            tau_prime: m - 0.5 * s,
                            separation: s,
                        });
                        let contribution = match symmetry {
                            Symmetry::General => {
                                let upper = f(Point {
                                    tau: m - 0.5 * s,
                                    tau_prime: m + 0.5 * s,
                                    separation: -s,
                                });
                                evaluations += 2;
                                inner_mag += wm * mh * (lower.norm() + upper.norm());
                                lower + upper
                            }
                            Symmetry::Hermitian => {
                                evaluations += 1;
                                inner_mag += wm * mh * 2.0 * lower.re.abs();
                                Complex64::new(2.0 * lower.re, 0.0)
                            }
                        };
                        inner.add(contribution * (wm * mh));
                    }
                }
                value.add(inner.total() * (ws * sh));
                magnitude += inner_mag * ws * sh;
            }
            PanelSum {
                value: value.total(),
                magnitude,
                evaluations,
            }
        })
        .collect();
    let mut total = Accumulator::default();
    let mut magnitude = 0.0;
    let mut evaluations = 0;
    for p in panels {
        total.add(p.value);
        magnitude += p.magnitude;
        evaluations += p.evaluations;
    }
    PanelSum {
        value: total.total(),
        magnitude,
        evaluations,
    }
}

/// Result of extrapolating a regulated sequence to zero regulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: Complex64,
    pub error: f64,
    /// False when the differences between successive extrapolants grow.
    pub converged: bool,
    pub degree: usize,
    /// The `(eps, value)` samples the limit was built from.
    pub samples: Vec<(f64, Complex64)>,
}

/// Polynomial extrapolation in `eps` up to degree 2.
pub fn extrapolate_eps(samples: &[(f64, Complex64)]) -> Result<Extrapolation> {
    extrapolate_eps_with(samples, 2, 0.0)
}

/// Neville-Richardson extrapolation to `eps = 0`.
///
/// The limit is the degree-`degree` interpolant through the last
/// `degree + 1` samples. The error estimate is twice the change between the
/// last two such extrapolants (never below `noise_floor`). The sequence is
/// flagged as non-convergent when that change grows from one level to the
/// next by more than the noise floor.
pub fn extrapolate_eps_with(
    samples: &[(f64, Complex64)],
    degree: usize,
    noise_floor: f64,
) -> Result<Extrapolation> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "extrapolation needs at least 3 samples (got {n})"
        )));
    }
    if samples.iter().any(|(e, v)| !(*e > 0.0) || !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidParameter(
            "samples need positive regulators and finite values".into(),
        ));
    }
    if samples.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Err(Error::InvalidParameter(
            "regulators must be strictly decreasing".into(),
        ));
    }
    let degree = degree.min(n - 2);
    let eps: Vec<f64> = samples.iter().map(|s| s.0).collect();
    // table[i][j]: degree-j interpolant through samples i-j..=i, evaluated at 0
    let mut table: Vec<Vec<Complex64>> = samples.iter().map(|s| vec![s.1]).collect();
    for i in 0..n {
        for j in 1..=degree.min(i) {
            let far = eps[i - j];
            let near = eps[i];
            let value = (table[i][j - 1] * far - table[i - 1][j - 1] * near) / (far - near);
            table[i].push(value);
        }
    }
    let column: Vec<Complex64> = (degree..n).map(|i| table[i][degree]).collect();
    let diffs: Vec<f64> = column.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.1.norm()));
    let floor = noise_floor.max(1e3 * f64::EPSILON * scale);
    let last = *diffs.last().expect("n >= degree + 2");
    let converged = match diffs.len() {
        1 => true,
        len => !(last > diffs[len - 2] && last > floor),
    };
    Ok(Extrapolation {
        limit: *column.last().unwrap(),
        error: (2.0 * last).max(floor),
        converged,
        degree,
        samples: samples.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rule(order: usize, width: f64) -> PanelRule {
        PanelRule {
            order,
            panel_width: width,
            diagonal_scale: None,
            abs_tol: 1e-10,
            max_refinements: 2,
            symmetry: Symmetry::General,
        }
    }

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        for order in [1, 2, 5, 10, 20] {
            let (x, w) = gauss_legendre(order);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for p in 0..2 * order {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "order {order}, degree {p}");
            }
        }
    }

    #[test]
    fn unit_square() {
        let out = integrate2d(|_| Complex64::new(1.0, 0.0), &SquareDomain { lo: 0.0, hi: 1.0 }, &rule(8, 0.5))
            .unwrap();
        assert!((out.value.re - 1.0).abs() < 1e-14);
        assert_eq!(out.value.im, 0.0);
    }

    #[test]
    fn separable_gaussian() {
        let out = integrate2d(
            |p| Complex64::new((-p.tau * p.tau - p.tau_prime * p.tau_prime).exp(), 0.0),
            &SquareDomain { lo: -8.0, hi: 8.0 },
            &rule(20, 0.5),
        )
        .unwrap();
        assert!((out.value.re - PI).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_gaussian() {
        let axis = PI.sqrt() * (-0.25f64).exp();
        let out = integrate2d(
            |p| {
                Complex64::from_polar((-p.tau * p.tau - p.tau_prime * p.tau_prime).exp(), p.tau + p.tau_prime)
            },
            &SquareDomain { lo: -8.0, hi: 8.0 },
            &rule(20, 0.5),
        )
        .unwrap();
        assert!((out.value - Complex64::new(axis * axis, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn separation_is_exact() {
        let domain = SquareDomain { lo: -3.0, hi: 3.0 };
        let r = PanelRule {
            diagonal_scale: Some(1e-6),
            ..rule(4, 1.0)
        };
        integrate2d(
            |p| {
                assert!(p.separation != 0.0);
                assert!((p.tau - p.tau_prime - p.separation).abs() <= 1e-15 * 4.0);
                Complex64::new(0.0, 0.0)
            },
            &domain,
            &r,
        )
        .unwrap();
    }

    #[test]
    fn hermitian_mode_is_real() {
        let eps = 1e-3;
        let f = |p: Point| {
            let chi = (-p.tau * p.tau - p.tau_prime * p.tau_prime).exp();
            let k = Complex64::new(eps, -p.separation);
            Complex64::from_polar(chi, 0.7 * p.separation) / (k * k)
        };
        let r = PanelRule {
            diagonal_scale: Some(eps),
            symmetry: Symmetry::Hermitian,
            ..rule(20, 0.5)
        };
        let out = integrate2d(f, &SquareDomain { lo: -6.0, hi: 6.0 }, &r).unwrap();
        assert_eq!(out.value.im, 0.0);
    }

    #[test]
    fn reports_unmet_tolerance() {
        let r = PanelRule {
            abs_tol: 1e-30,
            max_refinements: 0,
            ..rule(4, 1.0)
        };
        let err = integrate2d(
            |p| Complex64::new(p.tau.sin() * p.tau_prime.exp(), 0.0),
            &SquareDomain { lo: 0.0, hi: 3.0 },
            &r,
        )
        .unwrap_err();
        assert!(matches!(err, Error::QuadratureTolerance { estimate, .. } if estimate > 0.0));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let f = |p: Point| Complex64::from_polar((-p.tau * p.tau).exp(), p.separation.sin());
        let domain = SquareDomain { lo: -5.0, hi: 5.0 };
        let r = PanelRule {
            diagonal_scale: Some(1e-3),
            ..rule(12, 0.5)
        };
        let a = integrate2d(f, &domain, &r).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = single.install(|| integrate2d(f, &domain, &r).unwrap());
        assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
        assert_eq!(a.value.im.to_bits(), b.value.im.to_bits());
    }

    fn sampled(g: impl Fn(f64) -> f64) -> Vec<(f64, Complex64)> {
        EpsilonSchedule::default()
            .factors()
            .iter()
            .map(|&e| (e, Complex64::new(g(e), 0.0)))
            .collect()
    }

    #[test]
    fn extrapolates_linear_exactly() {
        let out = extrapolate_eps(&sampled(|e| 3.0 + 2.0 * e)).unwrap();
        assert!((out.limit.re - 3.0).abs() < 1e-14);
        assert!(out.converged);
    }

    #[test]
    fn extrapolates_quadratic_to_zero() {
        let out = extrapolate_eps(&sampled(|e| e * e)).unwrap();
        assert!(out.limit.norm() < 1e-15);
    }

    #[test]
    fn log_term_stays_within_estimate() {
        let (c0, c1, c2) = (0.7, -1.3, 0.45);
        let out = extrapolate_eps(&sampled(|e| c0 + c1 * e + c2 * e * e.ln())).unwrap();
        assert!((out.limit.re - c0).abs() <= out.error, "{} vs {}", out.limit.re - c0, out.error);
        assert!(out.error < 1e-3);
        assert!(out.converged);
    }

    #[test]
    fn flags_divergent_sequence() {
        let out = extrapolate_eps(&sampled(|e| 1.0 / e)).unwrap();
        assert!(!out.converged);
        assert_eq!(out.samples.len(), 7);
    }

    #[test]
    fn extrapolation_input_validation() {
        let two = vec![(1.0, Complex64::new(1.0, 0.0)), (0.5, Complex64::new(1.0, 0.0))];
        assert!(extrapolate_eps(&two).is_err());
        let increasing = vec![
            (0.1, Complex64::new(1.0, 0.0)),
            (0.2, Complex64::new(1.0, 0.0)),
            (0.3, Complex64::new(1.0, 0.0)),
        ];
        assert!(extrapolate_eps(&increasing).is_err());
        assert!(EpsilonSchedule::new(vec![0.1, 0.1, 0.05]).is_err());
        assert!(EpsilonSchedule::new(vec![0.1, 0.05, 0.0]).is_err());
    }

    #[test]
    fn default_schedule() {
        let s = EpsilonSchedule::default();
        assert_eq!(s.factors().len(), 7);
        assert_eq!(s.factors()[0], 1.0 / 16.0);
        assert_eq!(s.factors()[6], 1.0 / 1024.0);
        assert_eq!(s.values(2.0)[0], 0.125);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        let bad = QuadratureSpec {
            truncation_radius: 3.0,
            ..QuadratureSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}
