//! Dense complex matrices and the density-matrix / pure-state primitives used
//! by every scenario in the crate.
//!
//! Basis convention: `|H> = (1, 0)`, `|V> = (0, 1)`. A multi-qubit basis index
//! is `i = sum_j bit_j * 2^(n-1-j)`, so qubit 0 is the most significant bit and
//! `|0> = |HH>, |1> = |HV>, |2> = |VH>, |3> = |VV>` for two qubits.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermiticity tolerance (max entrywise |A - A^dagger|).
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a density matrix.
pub const POSITIVITY_TOL: f64 = -1e-9;
/// Trace tolerance for normalized states.
pub const TRACE_TOL: f64 = 1e-9;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for col in 0..self.cols {
                let z = self[(r, col)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries. Rejects a length mismatch and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "ComplexMatrix::from_vec",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("ComplexMatrix::from_vec"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Convenience constructor for small literal matrices.
    ///
    /// Panics if the rows are ragged; intended for constants written in code.
    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == cols), "ragged rows");
        let data = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self { rows: r, cols, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == cols), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self { rows: r, cols, data }
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        let v: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    /// `|u><v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (r, a) in u.iter().enumerate() {
            for (col, b) in v.iter().enumerate() {
                m[(r, col)] = a * b.conj();
            }
        }
        m
    }

    /// Column vector.
    pub fn column(v: &[Complex64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for col in 0..self.cols {
                m[(col, r)] = self[(r, col)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for col in 0..self.cols {
                m[(col, r)] = self[(r, col)];
            }
        }
        m
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Matrix product; errors on an inner-dimension mismatch.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row_b = &other.data[k * other.cols..(k + 1) * other.cols];
                let row_out = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (o, b) in row_out.iter_mut().zip(row_b) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                context: "apply",
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// `A B - B A`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }

    /// `A B + B A`.
    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        Ok(&self.matmul(other)? + &other.matmul(self)?)
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise distance to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |A - A^dagger| entrywise; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for col in r..self.cols {
                worst = worst.max((self[(r, col)] - self[(col, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// max |U^dagger U - I|; infinite for non-square input.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint()
            .matmul(self)
            .expect("square")
            .max_abs_diff(&Self::identity(self.rows))
    }

    /// Real eigenvalues of a Hermitian matrix in ascending order. The input is
    /// symmetrized first so tiny anti-Hermitian noise does not leak through.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::NotSquare(self.rows, self.cols));
        }
        let n = self.rows;
        let sym = DMatrix::<Complex64>::from_fn(n, n, |r, col| {
            (self[(r, col)] + self[(col, r)].conj()) * 0.5
        });
        let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        Ok(ev)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self
            .hermitian_eigenvalues()?
            .first()
            .copied()
            .unwrap_or(0.0))
    }

    /// Zeroes every off-diagonal entry.
    pub fn diagonal_part(&self) -> Self {
        let mut m = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] = self[(i, i)];
        }
        m
    }

    /// Largest modulus among off-diagonal entries.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for col in 0..self.cols {
                if r != col {
                    worst = worst.max(self[(r, col)].norm());
                }
            }
        }
        worst
    }

    /// `U^{(x)n}`.
    pub fn kron_power(&self, n: usize) -> Self {
        (1..n).fold(self.clone(), |acc, _| kron(&acc, self))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, col): (usize, usize)) -> &Complex64 {
        assert!(r < self.rows && col < self.cols, "index out of bounds");
        &self.data[r * self.cols + col]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, col): (usize, usize)) -> &mut Complex64 {
        assert!(r < self.rows && col < self.cols, "index out of bounds");
        &mut self.data[r * self.cols + col]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Panicking product for operator constants whose shapes are fixed in code.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix shapes must agree")
    }
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x == ZERO {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a sequence of factors, left to right.
pub fn kron_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Embeds an operator acting on the qubits `targets` (in that order) into an
/// `n_qubits` register, acting as identity elsewhere.
pub fn embed(op: &ComplexMatrix, targets: &[usize], n_qubits: usize) -> Result<ComplexMatrix> {
    let k = targets.len();
    if op.rows != 1 << k || op.cols != 1 << k {
        return Err(Error::DimensionMismatch {
            context: "embed",
            expected: 1 << k,
            found: op.rows,
        });
    }
    let mut seen = vec![false; n_qubits];
    for &t in targets {
        if t >= n_qubits || seen[t] {
            return Err(Error::BadPartition(format!(
                "target {t} invalid for a {n_qubits}-qubit register"
            )));
        }
        seen[t] = true;
    }
    let dim = 1usize << n_qubits;
    let shift = |q: usize| n_qubits - 1 - q;
    let target_mask: usize = targets.iter().map(|&t| 1 << shift(t)).sum();
    let local = |global: usize| -> usize {
        targets
            .iter()
            .fold(0, |acc, &t| (acc << 1) | ((global >> shift(t)) & 1))
    };
    let mut out = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        let rest = r & !target_mask;
        let lr = local(r);
        // enumerate columns sharing the untouched bits
        for lc in 0..(1usize << k) {
            let z = op[(lr, lc)];
            if z == ZERO {
                continue;
            }
            let mut col = rest;
            for (pos, &t) in targets.iter().enumerate() {
                let bit = (lc >> (k - 1 - pos)) & 1;
                col |= bit << shift(t);
            }
            out[(r, col)] = z;
        }
    }
    Ok(out)
}

pub mod pauli {
    use super::*;

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::diag_real(&[1.0, -1.0])
    }
}

/// State vector; `normalized` is false for pre-post-selection amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    normalized: bool,
}

impl PureState {
    /// Normalized state; the squared norm must be within 1e-10 of one.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized {
                what: "pure state",
                value: norm2,
            });
        }
        Ok(Self {
            amplitudes,
            normalized: true,
        })
    }

    /// Scales the amplitudes to unit norm.
    pub fn normalize(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroTrace);
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
            normalized: true,
        })
    }

    pub fn unnormalized(amplitudes: Vec<Complex64>) -> Self {
        Self {
            amplitudes,
            normalized: false,
        }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut a = vec![ZERO; dim];
        a[index] = ONE;
        Self {
            amplitudes: a,
            normalized: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                out.push(a * b);
            }
        }
        PureState {
            amplitudes: out,
            normalized: self.normalized && other.normalized,
        }
    }

    /// Density matrix `|psi><psi|`; unnormalized vectors give a subnormalized state.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let m = self.projector();
        if self.normalized {
            DensityMatrix::new(m)
        } else {
            DensityMatrix::subnormalized(m)
        }
    }
}

/// Hermitian positive-semidefinite matrix. When `subnormalized` is false the
/// trace is one; otherwise it lies in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    subnormalized: bool,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::validated(matrix, false)
    }

    pub fn subnormalized(matrix: ComplexMatrix) -> Result<Self> {
        Self::validated(matrix, true)
    }

    fn validated(matrix: ComplexMatrix, subnormalized: bool) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare(matrix.rows, matrix.cols));
        }
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = matrix.trace().re;
        if subnormalized {
            if !(tr > 0.0 && tr <= 1.0 + TRACE_TOL) {
                return Err(Error::NotNormalized {
                    what: "subnormalized density matrix",
                    value: tr,
                });
            }
        } else if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized {
                what: "density matrix",
                value: tr,
            });
        }
        let min_ev = matrix.min_eigenvalue()?;
        if min_ev < POSITIVITY_TOL {
            return Err(Error::NotPositive(min_ev));
        }
        Ok(Self {
            matrix,
            subnormalized,
        })
    }

    /// Skips validation. Callers must have checked the invariants with their
    /// own tolerances (used by the integrator, which reports its own drift).
    pub(crate) fn new_unchecked(matrix: ComplexMatrix, subnormalized: bool) -> Self {
        Self {
            matrix,
            subnormalized,
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
            subnormalized: false,
        }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(index, index)] = ONE;
        Self {
            matrix: m,
            subnormalized: false,
        }
    }

    /// Diagonal state from a probability vector.
    pub fn from_populations(p: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::diag_real(p))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn get(&self, r: usize, col: usize) -> Complex64 {
        self.matrix[(r, col)]
    }

    /// Rescales to unit trace; the flag is cleared.
    pub fn renormalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 0.0 || !tr.is_finite() {
            return Err(Error::ZeroTrace);
        }
        Ok(Self {
            matrix: self.matrix.scale_real(1.0 / tr),
            subnormalized: false,
        })
    }

    /// `rho (x) sigma`.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            matrix: kron(&self.matrix, &other.matrix),
            subnormalized: self.subnormalized || other.subnormalized,
        }
    }

    /// Convex mixture `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "mix",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Self::new(&self.matrix.scale_real(w) + &other.matrix.scale_real(1.0 - w))
    }
}

/// `M rho M^dagger`, always flagged subnormalized; the trace is the success
/// probability of the (possibly non-trace-preserving) operation.
pub fn apply_operator(m: &ComplexMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if m.cols != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: "apply_operator",
            expected: rho.dim(),
            found: m.cols,
        });
    }
    let out = m.matmul(&rho.matrix)?.matmul(&m.adjoint())?;
    let tr = out.trace().re;
    if tr <= 0.0 {
        // a vanishing branch is reported rather than rejected
        return Ok(DensityMatrix::new_unchecked(out, true));
    }
    DensityMatrix::subnormalized(out)
}

/// Reduced state on the subsystems listed in `keep`, in ascending order.
pub fn partial_trace(
    rho: &DensityMatrix,
    subsystem_dims: &[usize],
    keep: &[usize],
) -> Result<DensityMatrix> {
    let total: usize = subsystem_dims.iter().product();
    if subsystem_dims.is_empty() || total != rho.dim() {
        return Err(Error::BadPartition(format!(
            "subsystem dims {subsystem_dims:?} do not multiply to {}",
            rho.dim()
        )));
    }
    if keep.is_empty() {
        return Err(Error::BadPartition("keep set is empty".into()));
    }
    let nsub = subsystem_dims.len();
    let mut kept = vec![false; nsub];
    for &k in keep {
        if k >= nsub || kept[k] {
            return Err(Error::BadPartition(format!("invalid keep index {k}")));
        }
        kept[k] = true;
    }
    let keep_idx: Vec<usize> = (0..nsub).filter(|&s| kept[s]).collect();
    let trace_idx: Vec<usize> = (0..nsub).filter(|&s| !kept[s]).collect();
    let dim_keep: usize = keep_idx.iter().map(|&s| subsystem_dims[s]).product();
    let dim_trace: usize = trace_idx.iter().map(|&s| subsystem_dims[s]).product();

    // mixed-radix strides of the full register
    let mut strides = vec![1usize; nsub];
    for s in (0..nsub.saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * subsystem_dims[s + 1];
    }
    let compose = |idx: &[usize], part: usize, mut value: usize| -> usize {
        let mut global = 0;
        for &s in idx.iter().rev() {
            let d = subsystem_dims[s];
            global += (value % d) * strides[s];
            value /= d;
        }
        part + global
    };

    let m = rho.matrix();
    let mut out = ComplexMatrix::zeros(dim_keep, dim_keep);
    for r in 0..dim_keep {
        let base_r = compose(&keep_idx, 0, r);
        for col in 0..dim_keep {
            let base_c = compose(&keep_idx, 0, col);
            let mut acc = ZERO;
            for t in 0..dim_trace {
                let off = compose(&trace_idx, 0, t);
                acc += m[(base_r + off, base_c + off)];
            }
            out[(r, col)] = acc;
        }
    }
    Ok(DensityMatrix {
        matrix: out,
        subnormalized: rho.subnormalized,
    })
}

/// Removes every off-diagonal element in the laboratory basis.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix {
        matrix: rho.matrix.diagonal_part(),
        subnormalized: rho.subnormalized,
    }
}

/// Diagonal of the unit-trace version of `rho`; entries above -1e-12 that are
/// negative are clamped to zero.
pub fn populations(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let tr = rho.trace();
    if tr <= 0.0 || !tr.is_finite() {
        return Err(Error::ZeroTrace);
    }
    let mut p: Vec<f64> = (0..rho.dim()).map(|i| rho.get(i, i).re / tr).collect();
    for x in &mut p {
        if *x < 0.0 {
            if *x < -1e-12 {
                return Err(Error::NotPositive(*x));
            }
            *x = 0.0;
        }
    }
    Ok(p)
}

/// `<psi|rho|psi>`.
pub fn fidelity_pure(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            context: "fidelity_pure",
            expected: rho.dim(),
            found: psi.dim(),
        });
    }
    let v = rho.matrix.apply(psi.amplitudes())?;
    let f: Complex64 = psi
        .amplitudes()
        .iter()
        .zip(&v)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(f.re.clamp(0.0, 1.0))
}

/// `tr(rho * obs)` for a Hermitian observable.
pub fn expectation(rho: &DensityMatrix, obs: &ComplexMatrix) -> Result<f64> {
    if obs.rows != rho.dim() || obs.cols != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: "expectation",
            expected: rho.dim(),
            found: obs.rows,
        });
    }
    let defect = obs.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let m = &rho.matrix;
    let n = rho.dim();
    let mut acc = ZERO;
    for r in 0..n {
        for k in 0..n {
            acc += m[(r, k)] * obs[(k, r)];
        }
    }
    Ok(acc.re)
}
