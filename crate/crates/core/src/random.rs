//! Random unitaries, states, bases and channels for tests and sampling.

use nalgebra::{DVector, QR};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, Basis, Matrix, C64};

/// Square matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix {
    rectangular_ginibre(rng, d, d)
}

fn rectangular_ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phases of
/// `R`'s diagonal moved into `Q`).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix {
    let qr = QR::new(ginibre(rng, d));
    let (q, r) = (qr.q(), qr.r());
    let phases = DVector::from_iterator(
        d,
        r.diagonal().iter().map(|z| {
            let n = z.norm();
            if n > 0.0 {
                z / n
            } else {
                c(1.0, 0.0)
            }
        }),
    );
    q * Matrix::from_diagonal(&phases)
}

/// Full-rank density matrix `G G^† / Tr(G G^†)` (Hilbert-Schmidt measure).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix {
    let g = ginibre(rng, d);
    let m = &g * g.adjoint();
    let tr: C64 = m.diagonal().iter().sum();
    m / tr
}

/// Pure state `|v><v|` with Haar-random `v`.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix {
    let u = haar_unitary(rng, d);
    let v = u.column(0).into_owned();
    &v * v.adjoint()
}

pub fn random_basis<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Basis {
    Basis::from_unitary(&haar_unitary(rng, d)).expect("Haar unitary columns are orthonormal")
}

/// Random probability vector of length `d` (flat Dirichlet).
pub fn random_probabilities<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..d)
        .map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// `n` Kraus operators of a random CPTP map on dimension `d`: blocks of an
/// isometry `d -> n·d` taken from a Haar unitary.
pub fn random_kraus<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> Vec<Matrix> {
    let u = haar_unitary(rng, n * d);
    (0..n)
        .map(|k| u.view((k * d, 0), (d, d)).into_owned())
        .collect()
}
