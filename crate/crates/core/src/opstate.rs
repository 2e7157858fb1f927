//! Operator states: operators as vectors with `(A|B) = Tr(A^† B)`, the
//! matrix-unit basis, link states and Choi states.

use crate::error::{Error, Result};
use crate::linalg::{c, identity, require_square, Matrix, C64};

/// `(a|b) = Tr(a^† b)`.
pub fn op_inner(a: &Matrix, b: &Matrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "operands are {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Matrix unit `Π_ij = |i><j|` in dimension `d`.
pub fn basis_element(d: usize, i: usize, j: usize) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    m[(i, j)] = c(1.0, 0.0);
    m
}

/// Coefficients `(Π_ij|O)`, indexed `[i][j]`.
pub fn expand(o: &Matrix) -> Result<Vec<Vec<C64>>> {
    let d = require_square(o, "operator")?;
    (0..d)
        .map(|i| (0..d).map(|j| op_inner(&basis_element(d, i, j), o)).collect())
        .collect()
}

/// `Σ_ij coeffs[i][j] Π_ij`.
pub fn reconstruct(coeffs: &[Vec<C64>]) -> Matrix {
    let d = coeffs.len();
    coeffs.iter().enumerate().fold(Matrix::zeros(d, d), |acc, (i, row)| {
        row.iter()
            .enumerate()
            .fold(acc, |acc, (j, &z)| acc + basis_element(d, i, j) * z)
    })
}

/// Unnormalized link `Φ = Σ_ij Π_ij ⊗ Π_ij = |Ω><Ω|`, `|Ω> = Σ_i |ii>`.
pub fn max_entangled_link(d: usize) -> Result<Matrix> {
    if d < 1 {
        return Err(Error::Domain("link dimension must be at least 1".into()));
    }
    let n = d * d;
    Ok(Matrix::from_fn(n, n, |r, s| {
        if r % (d + 1) == 0 && s % (d + 1) == 0 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    }))
}

/// `(id ⊗ N)(Φ)` for the map with Kraus operators `kraus`, each `d_out × d_in`.
/// The input leg comes first.
pub fn choi_state(kraus: &[Matrix], d_in: usize) -> Result<Matrix> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::Shape("empty Kraus list".into()))?;
    let d_out = first.nrows();
    if let Some(k) = kraus.iter().find(|k| k.shape() != (d_out, d_in)) {
        return Err(Error::Shape(format!(
            "Kraus operator is {:?}, expected ({d_out}, {d_in})",
            k.shape()
        )));
    }
    let phi = max_entangled_link(d_in)?;
    let id = identity(d_in);
    Ok(kraus.iter().fold(Matrix::zeros(d_in * d_out, d_in * d_out), |acc, k| {
        let lk = id.kronecker(k);
        acc + &lk * &phi * lk.adjoint()
    }))
}

/// `Σ K^† K`; equals the identity for trace-preserving maps.
pub fn kraus_completeness(kraus: &[Matrix]) -> Option<Matrix> {
    let d_in = kraus.first()?.ncols();
    Some(
        kraus
            .iter()
            .fold(Matrix::zeros(d_in, d_in), |acc, k| acc + k.adjoint() * k),
    )
}

/// Kraus operators `K_{ab} = sqrt(p_b) <a|_E U |b>_E` of `ρ ↦ Tr_E[U(ρ⊗ρ_E)U^†]`,
/// with `ρ_E = Σ_b p_b |b><b|` given in its eigenbasis through `env`.
pub fn kraus_from_dilation(u: &Matrix, env: &Matrix, d_sys: usize) -> Result<Vec<Matrix>> {
    let d_env = require_square(env, "environment state")?;
    if u.nrows() != d_sys * d_env || !u.is_square() {
        return Err(Error::Shape(format!(
            "unitary is {:?}, expected {n}x{n}",
            u.shape(),
            n = d_sys * d_env
        )));
    }
    let eig = nalgebra::SymmetricEigen::new(env.clone());
    let mut out = Vec::new();
    for (b, &p) in eig.eigenvalues.iter().enumerate() {
        if p <= 1e-15 {
            continue;
        }
        let vb = eig.eigenvectors.column(b);
        for a in 0..d_env {
            // <a|_E U |v_b>_E, as a d_sys × d_sys block
            let k = Matrix::from_fn(d_sys, d_sys, |i, j| {
                (0..d_env)
                    .map(|e| u[(i * d_env + a, j * d_env + e)] * vb[e])
                    .sum::<C64>()
                    * p.sqrt()
            });
            out.push(k);
        }
    }
    Ok(out)
}
