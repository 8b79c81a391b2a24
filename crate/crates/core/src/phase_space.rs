//! Discrete phase space of a single odd-dimensional qudit.
//!
//! Points of the phase space are pairs `(a, a')` in `Z_n x Z_n`. Each point
//! carries a Weyl-Heisenberg displacement `T_(a,a') = w^{-(n+1)/2 a a'} Z^a X^a'`
//! and a phase-point operator `A_(a,a') = T A_0 T^dagger`, where `A_0` is the
//! average of all displacements (the parity operator `|k> -> |-k>`). The
//! discrete Wigner function is `W_a = Tr(A_a rho) / n` and mana is
//! `ln sum_a |W_a|`.
//!
//! All phases are built from integer exponents reduced mod `n`, so products
//! of Weyl operators never accumulate angle drift.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Dense complex matrix used for every operator in the crate.
pub type CMatrix = DMatrix<Complex64>;

/// Absolute tolerance for algebraic identities (Hermiticity, unit trace).
pub const ALGEBRA_TOL: f64 = 1e-12;

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidDimension(n));
    }
    Ok(())
}

/// `w^k` with `w = exp(2 pi i / n)`, from the exponent reduced mod `n`.
pub fn root_of_unity(n: usize, k: i64) -> Complex64 {
    let r = k.rem_euclid(n as i64);
    if r == 0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::from_polar(1.0, 2.0 * PI * r as f64 / n as f64)
}

/// A point `(a, a')` of the discrete phase space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeylIndex {
    pub a: usize,
    pub a_prime: usize,
}

impl WeylIndex {
    pub fn new(a: usize, a_prime: usize) -> Self {
        WeylIndex { a, a_prime }
    }

    /// Reduces arbitrary integer coordinates mod `n`.
    pub fn wrapped(n: usize, a: i64, a_prime: i64) -> Self {
        let n = n as i64;
        WeylIndex {
            a: a.rem_euclid(n) as usize,
            a_prime: a_prime.rem_euclid(n) as usize,
        }
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if self.a >= n || self.a_prime >= n {
            return Err(Error::InvalidIndex {
                n,
                a: self.a,
                a_prime: self.a_prime,
            });
        }
        Ok(())
    }

    /// Row-major position in an `n x n` grid.
    pub fn flat(&self, n: usize) -> usize {
        self.a * n + self.a_prime
    }

    /// All `n^2` points in row-major order.
    pub fn all(n: usize) -> impl Iterator<Item = WeylIndex> {
        (0..n).flat_map(move |a| (0..n).map(move |ap| WeylIndex::new(a, ap)))
    }

    pub fn add(&self, n: usize, other: WeylIndex) -> WeylIndex {
        WeylIndex::new((self.a + other.a) % n, (self.a_prime + other.a_prime) % n)
    }

    pub fn sub(&self, n: usize, other: WeylIndex) -> WeylIndex {
        WeylIndex::new(
            (self.a + n - other.a % n) % n,
            (self.a_prime + n - other.a_prime % n) % n,
        )
    }
}

/// Clock operator `Z = sum_k w^k |k><k|`.
pub fn clock(n: usize) -> Result<CMatrix> {
    check_dim(n)?;
    Ok(CMatrix::from_fn(n, n, |r, c| {
        if r == c {
            root_of_unity(n, r as i64)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Shift operator `X = sum_k |k+1 mod n><k|`.
pub fn shift(n: usize) -> Result<CMatrix> {
    check_dim(n)?;
    Ok(CMatrix::from_fn(n, n, |r, c| {
        if r == (c + 1) % n {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Weyl-Heisenberg operator `T_(a,a') = w^{-(n+1)/2 a a'} Z^a X^a'`.
///
/// Built entrywise: `Z^a X^a' |k> = w^{a (k + a')} |k + a'>`, so the only
/// non-zero entry in column `k` sits at row `k + a' mod n`.
pub fn weyl(n: usize, idx: WeylIndex) -> Result<CMatrix> {
    check_dim(n)?;
    idx.check(n)?;
    Ok(weyl_unchecked(n, idx))
}

fn weyl_unchecked(n: usize, idx: WeylIndex) -> CMatrix {
    let (a, ap) = (idx.a as i64, idx.a_prime as i64);
    let half = (n as i64 + 1) / 2;
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n as i64 {
        let row = ((k + ap) % n as i64) as usize;
        let exponent = a * (k + ap) - half * a * ap;
        m[(row, k as usize)] = root_of_unity(n, exponent);
    }
    m
}

/// Phase-point operator `A_idx = T_idx A_0 T_idx^dagger`.
pub fn phase_point_operator(n: usize, idx: WeylIndex) -> Result<CMatrix> {
    let space = PhaseSpace::new(n)?;
    idx.check(n)?;
    Ok(space.phase_point(idx).clone())
}

/// Largest entrywise deviation of `m` from `m^dagger`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Precomputed Weyl and phase-point operators for one dimension.
#[derive(Clone, Debug)]
pub struct PhaseSpace {
    n: usize,
    weyl: Vec<CMatrix>,
    points: Vec<CMatrix>,
}

impl PhaseSpace {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_weyl(n, |idx| weyl_unchecked(n, idx))
    }

    /// Builds the phase space from a caller-supplied displacement family.
    ///
    /// Used to test how the derived structure reacts to a different phase
    /// convention; [`PhaseSpace::new`] is the standard choice.
    pub fn with_weyl(n: usize, build: impl Fn(WeylIndex) -> CMatrix) -> Result<Self> {
        check_dim(n)?;
        let weyl: Vec<CMatrix> = WeylIndex::all(n).map(&build).collect();
        if let Some(bad) = weyl.iter().find(|t| t.nrows() != n || t.ncols() != n) {
            return Err(Error::Schema(format!(
                "displacement has shape {}x{}, expected {n}x{n}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        let mut origin = CMatrix::zeros(n, n);
        for t in &weyl {
            origin += t;
        }
        origin /= Complex64::new(n as f64, 0.0);
        let points = weyl
            .iter()
            .map(|t| t * &origin * t.adjoint())
            .collect();
        Ok(PhaseSpace { n, weyl, points })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn weyl(&self, idx: WeylIndex) -> &CMatrix {
        &self.weyl[idx.flat(self.n)]
    }

    pub fn phase_point(&self, idx: WeylIndex) -> &CMatrix {
        &self.points[idx.flat(self.n)]
    }

    pub fn indices(&self) -> impl Iterator<Item = WeylIndex> {
        WeylIndex::all(self.n)
    }

    /// Conjugates `op` by the displacement `T_idx`.
    pub fn displace(&self, idx: WeylIndex, op: &CMatrix) -> CMatrix {
        let t = self.weyl(idx);
        t * op * t.adjoint()
    }

    pub fn wigner(&self, rho: &DensityMatrix) -> Result<WignerMap> {
        self.wigner_of_operator(rho.matrix())
    }

    /// Wigner map of any Hermitian operator of matching dimension.
    pub fn wigner_of_operator(&self, op: &CMatrix) -> Result<WignerMap> {
        let n = self.n;
        if op.nrows() != n || op.ncols() != n {
            return Err(Error::Schema(format!(
                "operator is {}x{}, phase space has dimension {n}",
                op.nrows(),
                op.ncols()
            )));
        }
        let scale = op.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        let dev = hermitian_deviation(op);
        if dev > ALGEBRA_TOL * scale {
            return Err(Error::NotHermitian(dev));
        }
        let values = self
            .points
            .iter()
            .map(|a| trace_product(a, op).re / n as f64)
            .collect();
        Ok(WignerMap { n, values })
    }

    /// Mana `ln sum_a |W_a|` of a unit-trace state.
    pub fn mana(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(self.wigner(rho)?.mana())
    }

    /// `sum_a W_a A_a`, the inverse of [`PhaseSpace::wigner_of_operator`].
    pub fn reconstruct_operator(&self, w: &WignerMap) -> Result<CMatrix> {
        if w.n != self.n {
            return Err(Error::Schema(format!(
                "Wigner map has dimension {}, phase space has {}",
                w.n, self.n
            )));
        }
        let mut out = CMatrix::zeros(self.n, self.n);
        for (a, &value) in self.points.iter().zip(&w.values) {
            out += a * Complex64::new(value, 0.0);
        }
        Ok(out)
    }

    pub fn reconstruct(&self, w: &WignerMap) -> Result<DensityMatrix> {
        DensityMatrix::new(self.reconstruct_operator(w)?)
    }
}

/// Discrete Wigner function of a single qudit.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerMap {
    n: usize,
    values: Vec<f64>,
}

impl WignerMap {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if values.len() != n * n {
            return Err(Error::Schema(format!(
                "expected {} Wigner values, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(WignerMap { n, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, idx: WeylIndex) -> f64 {
        self.values[idx.flat(self.n)]
    }

    /// Values in row-major `(a, a')` order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sum of the magnitudes of the negative entries.
    pub fn negativity(&self) -> f64 {
        // fold from +0.0: an empty float sum is -0.0
        self.values.iter().filter(|v| **v < 0.0).fold(0.0, |acc, v| acc - v)
    }

    /// `ln sum_a |W_a|` for a map of unit total.
    ///
    /// For unit total `sum |W| = 1 + 2 * negativity`, which is evaluated with
    /// `ln_1p` so that non-negative maps give exactly zero and small mana
    /// keeps full relative precision.
    pub fn mana(&self) -> f64 {
        (2.0 * self.negativity()).ln_1p()
    }

    /// `ln sum_a |W_a|` taken literally, without assuming unit total.
    pub fn log_one_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>().ln()
    }
}

/// A single-qudit density matrix: Hermitian, unit trace, positive up to a floor.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Smallest eigenvalue accepted by [`DensityMatrix::new`].
    pub const DEFAULT_PSD_FLOOR: f64 = -1e-10;

    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_psd_floor(matrix, Self::DEFAULT_PSD_FLOOR)
    }

    /// Validates with a custom eigenvalue floor (must be <= 0).
    pub fn with_psd_floor(matrix: CMatrix, floor: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Schema(format!(
                "matrix is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_dim(matrix.nrows())?;
        let dev = hermitian_deviation(&matrix);
        if dev > ALGEBRA_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > ALGEBRA_TOL {
            return Err(Error::BadTrace(trace));
        }
        let min = min_eigenvalue(&matrix);
        if min < floor {
            return Err(Error::NotPositive { min, floor });
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_dim(n)?;
        Self::new(CMatrix::identity(n, n) / Complex64::new(n as f64, 0.0))
    }

    /// Projector onto the normalized `amplitudes`.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let n = amplitudes.len();
        let m = CMatrix::from_fn(n, n, |r, c| amplitudes[r] * amplitudes[c].conj() / (norm * norm));
        Self::new(m)
    }

    /// Computational basis projector `|k><k|`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidParameter(format!("level {k} outside dimension {n}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); n];
        amps[k] = Complex64::new(1.0, 0.0);
        Self::pure(&amps)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DensityMatrixDoc = serde_json::from_str(text)?;
        Self::new(doc.into_matrix()?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DensityMatrixDoc::from_matrix(&self.matrix))
            .expect("plain numeric document serializes")
    }
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// On-disk form: `{ "dim": n, "entries": [[[re, im], ...], ...] }`, row-major.
#[derive(Serialize, Deserialize)]
struct DensityMatrixDoc {
    dim: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

impl DensityMatrixDoc {
    fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        DensityMatrixDoc {
            dim: n,
            entries: (0..n)
                .map(|r| (0..n).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                .collect(),
        }
    }

    fn into_matrix(self) -> Result<CMatrix> {
        let n = self.dim;
        if self.entries.len() != n || self.entries.iter().any(|row| row.len() != n) {
            return Err(Error::Schema(format!(
                "entries do not form a {n}x{n} matrix"
            )));
        }
        if self.entries.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Schema("non-finite entry".into()));
        }
        Ok(CMatrix::from_fn(n, n, |r, c| {
            let [re, im] = self.entries[r][c];
            Complex64::new(re, im)
        }))
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DensityMatrixDoc::from_matrix(&self.matrix).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = DensityMatrixDoc::deserialize(deserializer)?;
        let m = doc.into_matrix().map_err(serde::de::Error::custom)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

pub fn wigner(rho: &DensityMatrix) -> Result<WignerMap> {
    PhaseSpace::new(rho.dim())?.wigner(rho)
}

pub fn mana(rho: &DensityMatrix) -> Result<f64> {
    PhaseSpace::new(rho.dim())?.mana(rho)
}

pub fn reconstruct(w: &WignerMap) -> Result<DensityMatrix> {
    PhaseSpace::new(w.dim())?.reconstruct(w)
}
