//! Dense complex linear algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Default absolute tolerance for residual predicates.
pub const DEFAULT_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> Matrix {
    Matrix::identity(d, d)
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Kronecker product of a sequence of factors, left to right.
pub fn kron_all<'a, I>(factors: I) -> Matrix
where
    I: IntoIterator<Item = &'a Matrix>,
{
    factors
        .into_iter()
        .fold(Matrix::from_element(1, 1, c(1.0, 0.0)), |acc, f| acc.kronecker(f))
}

pub fn trace(m: &Matrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn conj(m: &Matrix) -> Matrix {
    m.map(|z| z.conj())
}

/// `|v><v|`
pub fn outer(v: &Vector) -> Matrix {
    v * v.adjoint()
}

pub fn require_square(m: &Matrix, what: &str) -> Result<usize> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "{what} must be a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn hermiticity_residual(m: &Matrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

pub fn is_hermitian(m: &Matrix, tol: f64) -> bool {
    m.is_square() && hermiticity_residual(m) < tol
}

pub fn unitarity_residual(u: &Matrix) -> f64 {
    let d = u.nrows();
    frobenius(&(u.adjoint() * u - identity(d)))
}

pub fn is_unitary(u: &Matrix, tol: f64) -> bool {
    u.is_square() && unitarity_residual(u) < tol
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &Matrix) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Checks Hermitian, positive semidefinite and unit trace.
pub fn validate_density(m: &Matrix, tol: f64, what: &str) -> Result<()> {
    require_square(m, what)?;
    if !is_hermitian(m, tol) {
        return Err(Error::Domain(format!("{what} is not Hermitian")));
    }
    let tr = trace(m);
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::Domain(format!("{what} has trace {tr}, expected 1")));
    }
    let lo = min_eigenvalue(m);
    if lo < -tol {
        return Err(Error::Domain(format!(
            "{what} is not positive semidefinite (min eigenvalue {lo:e})"
        )));
    }
    Ok(())
}

/// `exp(-i H t)` for Hermitian `H`, through its eigendecomposition.
pub fn expm_hermitian(h: &Matrix, t: f64) -> Result<Matrix> {
    require_square(h, "Hamiltonian")?;
    if !is_hermitian(h, 1e-12 * (1.0 + frobenius(h))) {
        return Err(Error::Domain("Hamiltonian is not Hermitian".into()));
    }
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = Matrix::from_diagonal(&Vector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * t)),
    ));
    Ok(v * phases * v.adjoint())
}

/// An orthonormal basis of a `d`-dimensional space; `vectors[x]` is the
/// state associated with outcome index `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    vectors: Vec<Vector>,
}

impl Basis {
    pub fn new(vectors: Vec<Vector>) -> Result<Self> {
        Self::with_tolerance(vectors, 1e-12)
    }

    pub fn with_tolerance(vectors: Vec<Vector>, tol: f64) -> Result<Self> {
        let d = vectors.len();
        if d == 0 {
            return Err(Error::InvalidInstrument("empty basis".into()));
        }
        if let Some(bad) = vectors.iter().position(|v| v.len() != d) {
            return Err(Error::Shape(format!(
                "basis vector {bad} has length {}, expected {d}",
                vectors[bad].len()
            )));
        }
        for i in 0..d {
            for j in 0..d {
                let g = vectors[i].dotc(&vectors[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                if (g - c(target, 0.0)).norm() > tol {
                    return Err(Error::InvalidInstrument(format!(
                        "basis not orthonormal: <v{i}|v{j}> = {g}"
                    )));
                }
            }
        }
        Ok(Self { vectors })
    }

    pub fn computational(d: usize) -> Self {
        let vectors = (0..d)
            .map(|i| {
                let mut v = Vector::zeros(d);
                v[i] = c(1.0, 0.0);
                v
            })
            .collect();
        Self { vectors }
    }

    /// Columns of a unitary matrix.
    pub fn from_unitary(u: &Matrix) -> Result<Self> {
        Self::new(u.column_iter().map(|col| col.into_owned()).collect())
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn vector(&self, x: usize) -> &Vector {
        &self.vectors[x]
    }

    /// Rank-one projector `|v_x><v_x|`.
    pub fn projector(&self, x: usize) -> Matrix {
        outer(&self.vectors[x])
    }

    /// `|v_x><v_y|`
    pub fn transition(&self, x: usize, y: usize) -> Matrix {
        &self.vectors[x] * self.vectors[y].adjoint()
    }

    /// Basis of complex-conjugated vectors.
    pub fn conjugate(&self) -> Self {
        Self {
            vectors: self.vectors.iter().map(|v| v.map(|z| z.conj())).collect(),
        }
    }

    /// Fully dephases `m` in this basis.
    pub fn dephase(&self, m: &Matrix) -> Matrix {
        (0..self.dim()).fold(Matrix::zeros(m.nrows(), m.ncols()), |acc, x| {
            let p = self.projector(x);
            acc + &p * m * &p
        })
    }
}
