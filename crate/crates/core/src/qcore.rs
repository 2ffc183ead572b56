//! Dense complex linear algebra and density-matrix calculus for the small
//! Hilbert spaces of this scenario: one qubit (2), two qubits (4), and two
//! qubits plus a path pointer (8).
//!
//! Basis convention: `|↑⟩ = |H⟩` is index 0 and the `+1` eigenstate of `σ_Z`;
//! `|↓⟩ = |V⟩` is index 1. Multi-qubit indices are big-endian, so for two
//! qubits `|ab⟩` has index `2a + b`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result, STRUCTURAL_TOL};

/// Largest Hilbert-space dimension handled anywhere in the crate.
pub const MAX_DIM: usize = 8;

pub type C64 = Complex64;

#[inline]
pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn check_dim(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("zero-sized matrix".into()));
    }
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::Dimension(format!(
            "{rows}x{cols} exceeds the maximum dimension {MAX_DIM}"
        )));
    }
    Ok(())
}

/// A finite complex matrix with at most [`MAX_DIM`] rows and columns.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        check_dim(m.nrows(), m.ncols())?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self(m))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let entries: Vec<C64> = entries.iter().copied().map(c).collect();
        Self::from_row_slice(rows, cols, &entries)
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0 && dim <= MAX_DIM, "identity dimension {dim}");
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && rows <= MAX_DIM && cols > 0 && cols <= MAX_DIM);
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n > 0 && n <= MAX_DIM);
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(values[i])
            } else {
                C64::default()
            }
        }))
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &Ket, b: &Ket) -> Self {
        Self(&a.0 * b.0.adjoint())
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.0.is_square()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        check_dim(self.nrows() * other.nrows(), self.ncols() * other.ncols())?;
        Ok(Self(self.0.kronecker(&other.0)))
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        if self.ncols() != ket.dim() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix applied to dimension-{} ket",
                self.nrows(),
                self.ncols(),
                ket.dim()
            )));
        }
        Ok(Ket(&self.0 * &ket.0))
    }

    /// Largest entrywise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.0.shape() != other.0.shape() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// `max |A - A†|`, or infinity for non-square matrices.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// `max |U†U - I|`, or infinity for non-square matrices.
    pub fn unitarity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.nrows()))
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        let herr = self.hermiticity_error();
        if herr > STRUCTURAL_TOL {
            return Err(Error::NonHermitian(herr));
        }
        let mut values: Vec<f64> = self.0.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.nrows(), self.ncols())?;
        for i in 0..self.nrows() {
            write!(f, "  ")?;
            for j in 0..self.ncols() {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.ncols(), rhs.nrows(), "matrix product shape mismatch");
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// A state vector. May be sub-normalized, e.g. a post-selected branch `M|ψ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket(DVector<C64>);

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len(), 1)?;
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("ket"));
        }
        Ok(Self(DVector::from_vec(amplitudes)))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().copied().map(c).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim && dim <= MAX_DIM);
        let mut v = DVector::zeros(dim);
        v[index] = c(1.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.0[index]
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = C64> + '_ {
        self.0.iter().copied()
    }

    /// `⟨k|k⟩`.
    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.0.norm();
        if n == 0.0 {
            return Err(Error::Dimension("cannot normalize the zero vector".into()));
        }
        Ok(Self(&self.0 / c(n)))
    }

    pub fn kron(&self, other: &Ket) -> Result<Self> {
        check_dim(self.dim() * other.dim(), 1)?;
        Ok(Self(self.0.kronecker(&other.0)))
    }
}

/// A density operator: Hermitian, positive semidefinite, and of unit trace
/// unless explicitly tagged sub-normalized.
///
/// Sub-normalized states arise as unnormalized instrument branches `MρM†`.
/// They are never renormalized implicitly; see [`DensityMatrix::normalized`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    subnormalized: bool,
}

impl DensityMatrix {
    /// Validates a trace-one density matrix.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::validated(matrix, false)
    }

    /// Validates a positive matrix with trace in `[0, 1]`, tagged sub-normalized.
    pub fn new_subnormalized(matrix: ComplexMatrix) -> Result<Self> {
        Self::validated(matrix, true)
    }

    fn validated(matrix: ComplexMatrix, subnormalized: bool) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        let eigs = matrix.hermitian_eigenvalues()?;
        if eigs[0] < -STRUCTURAL_TOL {
            return Err(Error::Dimension(format!(
                "density matrix has negative eigenvalue {}",
                eigs[0]
            )));
        }
        let tr = matrix.trace();
        if tr.im.abs() > STRUCTURAL_TOL {
            return Err(Error::Dimension(format!("complex trace {tr}")));
        }
        let ok = if subnormalized {
            tr.re <= 1.0 + STRUCTURAL_TOL
        } else {
            (tr.re - 1.0).abs() <= STRUCTURAL_TOL
        };
        if !ok {
            return Err(Error::Dimension(format!("trace {} out of range", tr.re)));
        }
        Ok(Self {
            matrix,
            subnormalized,
        })
    }

    /// Wraps a matrix known to be PSD by construction (e.g. `MρM†`).
    fn unchecked(matrix: ComplexMatrix, subnormalized: bool) -> Self {
        Self {
            matrix,
            subnormalized,
        }
    }

    /// `|k⟩⟨k|`, tagged sub-normalized when `⟨k|k⟩` differs from one.
    pub fn from_ket(ket: &Ket) -> Result<Self> {
        let sub = (ket.norm_sqr() - 1.0).abs() > STRUCTURAL_TOL;
        if ket.norm_sqr() > 1.0 + STRUCTURAL_TOL {
            return Err(Error::Dimension(format!(
                "ket norm² {} exceeds one",
                ket.norm_sqr()
            )));
        }
        Ok(Self::unchecked(ComplexMatrix::outer(ket, ket), sub))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::unchecked(ComplexMatrix::identity(dim).scale(c(1.0 / dim as f64)), false)
    }

    /// Convex combination `Σ wᵢ ρᵢ`; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Dimension("empty mixture".into()))?;
        let mut acc = ComplexMatrix::zeros(first.1.dim(), first.1.dim());
        let mut total = 0.0;
        for &(w, rho) in parts {
            if w < 0.0 || rho.dim() != first.1.dim() {
                return Err(Error::Dimension("invalid mixture component".into()));
            }
            acc = &acc + &rho.matrix.scale(c(w));
            total += w;
        }
        if (total - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::Dimension(format!("mixture weights sum to {total}")));
        }
        Self::new(acc)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Explicit renormalization of a sub-normalized branch.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(Error::Dimension("cannot normalize a zero-trace state".into()));
        }
        Ok(Self::unchecked(self.matrix.scale(c(1.0 / tr)), false))
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        Ok(Self::unchecked(
            self.matrix.kron(&other.matrix)?,
            self.subnormalized || other.subnormalized,
        ))
    }

    /// Conjugation `U ρ U†` by a unitary.
    pub fn evolve(&self, unitary: &ComplexMatrix) -> Result<Self> {
        if unitary.nrows() != self.dim() || !unitary.is_square() {
            return Err(Error::Dimension("unitary does not match state dimension".into()));
        }
        let err = unitary.unitarity_error();
        if err > STRUCTURAL_TOL {
            return Err(Error::NonUnitary(err));
        }
        Ok(Self::unchecked(
            &(unitary * &self.matrix) * &unitary.adjoint(),
            self.subnormalized,
        ))
    }
}

pub fn dm_from_ket(ket: &Ket) -> Result<DensityMatrix> {
    DensityMatrix::from_ket(ket)
}

/// Reduced state on the subsystems listed in `keep` (ascending order), for a
/// state on the tensor product of spaces with dimensions `dims`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize], dims: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || total != rho.dim() {
        return Err(Error::Dimension(format!(
            "factor dims {dims:?} inconsistent with state dimension {}",
            rho.dim()
        )));
    }
    if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Dimension(format!(
            "kept subsystems {keep:?} invalid for {} factors",
            dims.len()
        )));
    }

    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();

    let digits = |mut index: usize| -> Vec<usize> {
        let mut d = vec![0; dims.len()];
        for (slot, &n) in d.iter_mut().zip(dims).rev() {
            *slot = index % n;
            index /= n;
        }
        d
    };
    let split = |d: &[usize]| -> (usize, Vec<usize>) {
        let mut kept = 0;
        let mut traced = Vec::with_capacity(dims.len());
        for (i, &v) in d.iter().enumerate() {
            if keep.contains(&i) {
                kept = kept * dims[i] + v;
            } else {
                traced.push(v);
            }
        }
        (kept, traced)
    };

    let idx: Vec<(usize, Vec<usize>)> = (0..total).map(|i| split(&digits(i))).collect();
    let mut out = DMatrix::<C64>::zeros(out_dim, out_dim);
    for (i, (ki, ti)) in idx.iter().enumerate() {
        for (j, (kj, tj)) in idx.iter().enumerate() {
            if ti == tj {
                out[(*ki, *kj)] += rho.matrix.get(i, j);
            }
        }
    }
    Ok(DensityMatrix::unchecked(ComplexMatrix(out), rho.subnormalized))
}

/// A direction on the Bloch sphere, stored as `(z, x, y)` components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochDirection {
    z: f64,
    x: f64,
    y: f64,
}

impl BlochDirection {
    pub fn new(z: f64, x: f64, y: f64) -> Result<Self> {
        let norm = (z * z + x * x + y * y).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self { z, x, y })
    }

    /// Rescales a nonzero vector onto the sphere.
    pub fn normalized(z: f64, x: f64, y: f64) -> Result<Self> {
        let norm = (z * z + x * x + y * y).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self {
            z: z / norm,
            x: x / norm,
            y: y / norm,
        })
    }

    pub const Z: Self = Self { z: 1.0, x: 0.0, y: 0.0 };
    pub const X: Self = Self { z: 0.0, x: 1.0, y: 0.0 };
    pub const Y: Self = Self { z: 0.0, x: 0.0, y: 1.0 };
    /// `−(Z + X)/√2`.
    pub const DIAG_MINUS_MINUS: Self = Self {
        z: -std::f64::consts::FRAC_1_SQRT_2,
        x: -std::f64::consts::FRAC_1_SQRT_2,
        y: 0.0,
    };
    /// `(−Z + X)/√2`.
    pub const DIAG_MINUS_PLUS: Self = Self {
        z: -std::f64::consts::FRAC_1_SQRT_2,
        x: std::f64::consts::FRAC_1_SQRT_2,
        y: 0.0,
    };

    /// Direction in the z–x plane at `angle` from `+Z` towards `+X`.
    pub fn from_zx_angle(angle: f64) -> Self {
        Self {
            z: angle.cos(),
            x: angle.sin(),
            y: 0.0,
        }
    }

    /// Bloch direction of linear polarization at `angle` from horizontal,
    /// `cos(angle)|H⟩ + sin(angle)|V⟩`.
    pub fn from_polarization_angle(angle: f64) -> Self {
        Self::from_zx_angle(2.0 * angle)
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.z * other.z + self.x * other.x + self.y * other.y
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn flipped(&self) -> Self {
        Self {
            z: -self.z,
            x: -self.x,
            y: -self.y,
        }
    }
}

/// Binary measurement outcome `±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn sign(self) -> f64 {
        f64::from(self.value())
    }

    /// Array index: `+1 → 0`, `-1 → 1`.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

impl TryFrom<i8> for Outcome {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(Error::InvalidOutcome(other)),
        }
    }
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    let i = C64::i();
    ComplexMatrix::from_row_slice(2, 2, &[C64::default(), -i, i, C64::default()]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::diag(&[1.0, -1.0])
}

/// `σ·n = n_z σ_Z + n_x σ_X + n_y σ_Y`.
pub fn observable_from_direction(n: &BlochDirection) -> ComplexMatrix {
    let zx = &pauli_z().scale(c(n.z)) + &pauli_x().scale(c(n.x));
    &zx + &pauli_y().scale(c(n.y))
}

/// Spectral projector `(I ± σ·n)/2` of the outcome along `n`.
pub fn projector(n: &BlochDirection, outcome: Outcome) -> ComplexMatrix {
    let s = observable_from_direction(n).scale(c(outcome.sign()));
    (&ComplexMatrix::identity(2) + &s).scale(c(0.5))
}

/// Eigenket of `σ·n` for `outcome`, with a real nonnegative leading amplitude
/// whenever that amplitude is nonzero.
pub fn eigenket(n: &BlochDirection, outcome: Outcome) -> Ket {
    let m = match outcome {
        Outcome::Plus => *n,
        Outcome::Minus => n.flipped(),
    };
    // Polar angle measured from +Z; azimuth in the x–y plane.
    let polar = m.z.clamp(-1.0, 1.0).acos();
    let azimuth = m.y.atan2(m.x);
    let a = c((polar / 2.0).cos());
    let b = C64::from_polar((polar / 2.0).sin(), azimuth);
    Ket(DVector::from_vec(vec![a, b]))
}

/// Applies one Kraus operator: returns the unnormalized branch `MρM†`
/// and its probability `Tr(MρM†)`.
pub fn apply_kraus(rho: &DensityMatrix, m: &ComplexMatrix) -> Result<(DensityMatrix, f64)> {
    if m.ncols() != rho.dim() || m.nrows() != rho.dim() {
        return Err(Error::Dimension(format!(
            "{}x{} Kraus operator on dimension-{} state",
            m.nrows(),
            m.ncols(),
            rho.dim()
        )));
    }
    let branch = &(m * rho.matrix()) * &m.adjoint();
    let p = branch.trace().re;
    if p > rho.trace() + STRUCTURAL_TOL {
        return Err(Error::InvalidInstrument(p));
    }
    Ok((DensityMatrix::unchecked(branch, true), p.max(0.0)))
}

/// Embeds a single-qubit operator on qubit `target` of an `n_qubits` register.
pub fn lift(op: &ComplexMatrix, target: usize, n_qubits: usize) -> Result<ComplexMatrix> {
    if op.nrows() != 2 || op.ncols() != 2 || target >= n_qubits {
        return Err(Error::Dimension(format!(
            "cannot lift {}x{} operator onto qubit {target} of {n_qubits}",
            op.nrows(),
            op.ncols()
        )));
    }
    let mut acc: Option<ComplexMatrix> = None;
    for q in 0..n_qubits {
        let factor = if q == target { op.clone() } else { ComplexMatrix::identity(2) };
        acc = Some(match acc {
            None => factor,
            Some(m) => m.kron(&factor)?,
        });
    }
    Ok(acc.expect("n_qubits > target >= 0"))
}

/// `Tr(ρ O)` for a Hermitian observable.
pub fn expectation(rho: &DensityMatrix, obs: &ComplexMatrix) -> Result<f64> {
    if obs.nrows() != rho.dim() || !obs.is_square() {
        return Err(Error::Dimension("observable does not match state".into()));
    }
    let herr = obs.hermiticity_error();
    if herr > STRUCTURAL_TOL {
        return Err(Error::NonHermitian(herr));
    }
    Ok((rho.matrix() * obs).trace().re)
}

/// The singlet `(|HV⟩ − |VH⟩)/√2`.
pub fn singlet() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ket = Ket::from_real(&[0.0, s, -s, 0.0]).unwrap();
    DensityMatrix::unchecked(ComplexMatrix::outer(&ket, &ket), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn up() -> Ket {
        Ket::basis(2, 0)
    }
    fn down() -> Ket {
        Ket::basis(2, 1)
    }

    #[test]
    fn dm_from_basis_and_superposition() {
        let rho = dm_from_ket(&up()).unwrap();
        assert!(rho.matrix().approx_eq(&ComplexMatrix::diag(&[1.0, 0.0]), 1e-15));
        let plus = Ket::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let rho = dm_from_ket(&plus).unwrap();
        let half = ComplexMatrix::from_real(2, 2, &[0.5; 4]).unwrap();
        assert!(rho.matrix().approx_eq(&half, 1e-15));
        assert!(!rho.is_subnormalized());
    }

    #[test]
    fn dm_from_subnormalized_ket_keeps_trace() {
        let k = Ket::from_real(&[0.6 * FRAC_1_SQRT_2, 0.6 * FRAC_1_SQRT_2]).unwrap();
        let rho = dm_from_ket(&k).unwrap();
        assert!(rho.is_subnormalized());
        assert!((rho.trace() - 0.36).abs() < 1e-15);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(Ket::new(vec![]), Err(Error::Dimension(_))));
        assert!(ComplexMatrix::from_row_slice(0, 0, &[]).is_err());
    }

    #[test]
    fn dimension_cap_enforced() {
        let four = ComplexMatrix::identity(4);
        assert!(four.kron(&four).is_err());
        assert!(four.kron(&ComplexMatrix::identity(2)).is_ok());
    }

    #[test]
    fn tensor_basis_cases() {
        let i2 = ComplexMatrix::identity(2);
        assert!(i2.kron(&i2).unwrap().approx_eq(&ComplexMatrix::identity(4), 0.0));
        let a = ComplexMatrix::diag(&[1.0, 0.0]);
        let b = ComplexMatrix::diag(&[0.0, 1.0]);
        let ab = a.kron(&b).unwrap();
        assert!(ab.approx_eq(&ComplexMatrix::diag(&[0.0, 1.0, 0.0, 0.0]), 0.0));
    }

    #[test]
    fn singlet_with_pointer_is_rank_one_dim_eight() {
        let pointer = dm_from_ket(&Ket::basis(2, 0)).unwrap();
        let joint = singlet().tensor(&pointer).unwrap();
        assert_eq!(joint.dim(), 8);
        assert!((joint.trace() - 1.0).abs() < 1e-12);
        assert!((joint.purity() - 1.0).abs() < 1e-12);
        let eigs = joint.matrix().hermitian_eigenvalues().unwrap();
        let nonzero = eigs.iter().filter(|e| e.abs() > 1e-10).count();
        assert_eq!(nonzero, 1);
        // Kronecker layout: |HV⟩|0⟩ is index 2, |VH⟩|0⟩ is index 4.
        assert!((joint.matrix().get(2, 4).re + 0.5).abs() < 1e-15);
    }

    #[test]
    fn singlet_marginals_are_maximally_mixed() {
        let s = singlet();
        assert!((s.purity() - 1.0).abs() < 1e-14);
        for keep in [0usize, 1] {
            let r = partial_trace(&s, &[keep], &[2, 2]).unwrap();
            assert!(r.matrix().approx_eq(DensityMatrix::maximally_mixed(2).matrix(), 1e-15));
        }
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let s = singlet();
        assert!(partial_trace(&s, &[0], &[2, 3]).is_err());
        assert!(partial_trace(&s, &[2], &[2, 2]).is_err());
        assert!(partial_trace(&s, &[1, 0], &[2, 2]).is_err());
    }

    #[test]
    fn observables_for_scenario_directions() {
        assert!(observable_from_direction(&BlochDirection::Z).approx_eq(&pauli_z(), 0.0));
        assert!(observable_from_direction(&BlochDirection::X).approx_eq(&pauli_x(), 0.0));

        let d = BlochDirection::normalized(-1.0, 1.0, 0.0).unwrap();
        let obs = observable_from_direction(&d);
        let expected = (&pauli_x() - &pauli_z()).scale(c(FRAC_1_SQRT_2));
        assert!(obs.approx_eq(&expected, 1e-15));
        let eigs = obs.hermitian_eigenvalues().unwrap();
        assert!((eigs[0] + 1.0).abs() < 1e-12 && (eigs[1] - 1.0).abs() < 1e-12);
        assert!(obs.trace().norm() < 1e-15);
    }

    #[test]
    fn non_unit_direction_rejected() {
        assert!(matches!(
            BlochDirection::new(1.0, 1.0, 0.0),
            Err(Error::NotUnit { .. })
        ));
        assert!(BlochDirection::normalized(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn projectors_are_complete_idempotent_rank_one() {
        for n in [
            BlochDirection::Z,
            BlochDirection::X,
            BlochDirection::Y,
            BlochDirection::normalized(-1.0, 1.0, 0.0).unwrap(),
            BlochDirection::normalized(0.3, -0.2, 0.9).unwrap(),
        ] {
            let p = projector(&n, Outcome::Plus);
            let m = projector(&n, Outcome::Minus);
            assert!((&p + &m).approx_eq(&ComplexMatrix::identity(2), 1e-15));
            assert!((&p * &p).approx_eq(&p, 1e-12));
            assert!((p.trace().re - 1.0).abs() < 1e-12);
            let k = eigenket(&n, Outcome::Minus);
            assert!(ComplexMatrix::outer(&k, &k).approx_eq(&m, 1e-12));
        }
        assert!(projector(&BlochDirection::Z, Outcome::Plus).approx_eq(&ComplexMatrix::diag(&[1.0, 0.0]), 0.0));
        assert_eq!(Outcome::try_from(0), Err(Error::InvalidOutcome(0)));
        assert_eq!(Outcome::try_from(-1), Ok(Outcome::Minus));
    }

    #[test]
    fn apply_kraus_basic_cases() {
        let rho = DensityMatrix::maximally_mixed(2);
        let (out, p) = apply_kraus(&rho, &ComplexMatrix::identity(2)).unwrap();
        assert!((p - 1.0).abs() < 1e-15 && out.matrix().approx_eq(rho.matrix(), 0.0));

        let down_rho = dm_from_ket(&down()).unwrap();
        let (out, p) = apply_kraus(&down_rho, &projector(&BlochDirection::Z, Outcome::Plus)).unwrap();
        assert_eq!(p, 0.0);
        assert!(out.matrix().approx_eq(&ComplexMatrix::zeros(2, 2), 0.0));
        assert!(out.is_subnormalized());
    }

    #[test]
    fn apply_kraus_flags_invalid_instrument() {
        let rho = dm_from_ket(&up()).unwrap();
        let too_big = ComplexMatrix::identity(2).scale(c(1.5));
        assert!(matches!(apply_kraus(&rho, &too_big), Err(Error::InvalidInstrument(_))));
    }

    #[test]
    fn expectation_basic_cases() {
        let z = pauli_z();
        assert_eq!(expectation(&dm_from_ket(&up()).unwrap(), &z).unwrap(), 1.0);
        assert_eq!(expectation(&DensityMatrix::maximally_mixed(2), &z).unwrap(), 0.0);
        let not_herm = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            expectation(&DensityMatrix::maximally_mixed(2), &not_herm),
            Err(Error::NonHermitian(_))
        ));
    }

    #[test]
    fn singlet_correlation_on_grid() {
        // Brute force over a 20×20 grid of directions; includes y components.
        let s = singlet();
        let dirs: Vec<BlochDirection> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.331;
                BlochDirection::normalized(t.cos(), t.sin() * 0.8, (1.7 * t).sin() * 0.6).unwrap()
            })
            .collect();
        for u in &dirs {
            for v in &dirs {
                let obs = observable_from_direction(u).kron(&observable_from_direction(v)).unwrap();
                let e = expectation(&s, &obs).unwrap();
                assert!((e + u.dot(v)).abs() < 1e-10, "{e} vs {}", -u.dot(v));
            }
        }
    }

    #[test]
    fn density_matrix_validation() {
        let not_psd = ComplexMatrix::diag(&[1.5, -0.5]);
        assert!(DensityMatrix::new(not_psd).is_err());
        let wrong_trace = ComplexMatrix::diag(&[0.5, 0.2]);
        assert!(DensityMatrix::new(wrong_trace.clone()).is_err());
        assert!(DensityMatrix::new_subnormalized(wrong_trace).is_ok());
        let mixed = DensityMatrix::mixture(&[(0.5, &singlet()), (0.5, &DensityMatrix::maximally_mixed(4))]).unwrap();
        assert!((mixed.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn polarization_angle_mapping() {
        let d = BlochDirection::from_polarization_angle(std::f64::consts::FRAC_PI_4);
        assert!((d.x() - 1.0).abs() < 1e-15);
        let v = BlochDirection::from_polarization_angle(std::f64::consts::FRAC_PI_2);
        assert!((v.z() + 1.0).abs() < 1e-15);
    }
}
