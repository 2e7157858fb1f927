//! Two-qubit noisy model: a system qubit exchanging an excitation with one
//! environment qubit under `H = ω(|+−⟩⟨−+| + |−+⟩⟨+−|)`.
//!
//! Single-qubit vectors are written in the ordered basis `{|−⟩, |+⟩}`
//! (index 0 is `|−⟩`), and `S ⊗ E` is ordered system first.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::lg::{k3, LGReport, PairwisePlans};
use crate::linalg::{c, frobenius, kron, Basis, Matrix, Vector, C64, DEFAULT_TOL};
use crate::opstate::max_entangled_link;
use crate::process::{
    build_process_state, Evolution, Instrument, MeasurementPlan, ProcessState, Scenario,
};
use crate::slots::{LabeledOperator, SlotLabel};
use crate::structure::{MarkovComponent, Partition};

pub const MINUS: usize = 0;
pub const PLUS: usize = 1;

fn ket(amp_minus: C64, amp_plus: C64) -> Vector {
    Vector::from_vec(vec![amp_minus, amp_plus])
}

pub fn minus() -> Vector {
    ket(c(1., 0.), c(0., 0.))
}

pub fn plus() -> Vector {
    ket(c(0., 0.), c(1., 0.))
}

/// Kronecker product of single-qubit kets written as a `+`/`-` string.
pub fn signs_ket(s: &str) -> Vector {
    s.chars().fold(Vector::from_element(1, c(1., 0.)), |acc, ch| {
        let v = if ch == '+' { plus() } else { minus() };
        acc.kronecker(&v)
    })
}

/// The coupling Hamiltonian on `S ⊗ E`.
pub fn hamiltonian(omega: f64) -> Matrix {
    let mut h = Matrix::zeros(4, 4);
    // |+−⟩ is index 2, |−+⟩ index 1
    h[(2, 1)] = c(omega, 0.);
    h[(1, 2)] = c(omega, 0.);
    h
}

/// `(|+⟩ + |−⟩)/√2`
pub fn environment_state() -> Matrix {
    let v = ket(c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.));
    &v * v.adjoint()
}

/// Initial system state `[[a, c], [c*, b]]` in the `{|−⟩, |+⟩}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub a: f64,
    pub b: f64,
    pub c: C64,
}

impl InitialState {
    pub fn new(a: f64, b: f64, c: C64) -> Result<Self> {
        Self::with_tolerance(a, b, c, DEFAULT_TOL)
    }

    pub fn with_tolerance(a: f64, b: f64, cc: C64, tol: f64) -> Result<Self> {
        if a < -tol || b < -tol {
            return Err(Error::Domain(format!("populations must be nonnegative, got a = {a}, b = {b}")));
        }
        if (a + b - 1.0).abs() > tol {
            return Err(Error::Domain(format!("a + b must be 1, got {}", a + b)));
        }
        if cc.norm_sqr() > a * b + tol {
            return Err(Error::Domain(format!("|c|^2 = {} exceeds ab = {}", cc.norm_sqr(), a * b)));
        }
        Ok(Self { a, b, c: cc })
    }

    pub fn maximally_mixed() -> Self {
        Self { a: 0.5, b: 0.5, c: c(0., 0.) }
    }

    pub fn matrix(&self) -> Matrix {
        Matrix::from_row_slice(2, 2, &[c(self.a, 0.), self.c, self.c.conj(), c(self.b, 0.)])
    }

    /// Reads `a`, `b`, `c` off a 2×2 density matrix.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if m.shape() != (2, 2) {
            return Err(Error::Shape(format!("initial state is {:?}, expected 2x2", m.shape())));
        }
        crate::linalg::validate_density(m, DEFAULT_TOL, "rho0")?;
        Self::new(m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)])
    }
}

/// Model parameters; `θ_j = ω τ_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitModel {
    pub omega: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub rho0: InitialState,
}

impl TwoQubitModel {
    pub fn new(omega: f64, tau1: f64, tau2: f64, rho0: InitialState) -> Result<Self> {
        for (name, v) in [("omega", omega), ("tau1", tau1), ("tau2", tau2)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite")));
            }
        }
        Ok(Self { omega, tau1, tau2, rho0 })
    }

    /// `ω = 1`, `τ_j = θ_j`.
    pub fn from_angles(theta1: f64, theta2: f64, rho0: InitialState) -> Self {
        Self { omega: 1.0, tau1: theta1, tau2: theta2, rho0 }
    }

    pub fn theta1(&self) -> f64 {
        self.omega * self.tau1
    }

    pub fn theta2(&self) -> f64 {
        self.omega * self.tau2
    }

    /// `k` with `θ1 = θ2 = (k + 1/2)π`, if the angles sit there to 1e-12.
    pub fn halfpi_k(&self) -> Option<i64> {
        let k1 = (self.theta1() / PI - 0.5).round();
        let k2 = (self.theta2() / PI - 0.5).round();
        let near = |t: f64, k: f64| (t - (k + 0.5) * PI).abs() < 1e-12;
        (k1 == k2 && near(self.theta1(), k1) && near(self.theta2(), k2)).then_some(k1 as i64)
    }
}

/// `U_j = exp(-i H τ_j)`, environment in `(|+⟩ + |−⟩)/√2`, three times.
pub fn build_two_qubit_scenario(m: &TwoQubitModel) -> Result<Scenario> {
    Scenario::new(
        m.rho0.matrix(),
        environment_state(),
        Evolution::Hamiltonian {
            hamiltonian: hamiltonian(m.omega),
            durations: vec![m.tau1, m.tau2],
        },
    )
}

/// Measurement basis for the first and third times, outcome `+1` first:
/// `|+'⟩ = cos θ|+⟩ − i sin θ|−⟩`, `|−'⟩ = −i sin θ|+⟩ + cos θ|−⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedBasis {
    pub theta: f64,
    basis: Basis,
}

impl RotatedBasis {
    pub fn new(theta: f64) -> Result<Self> {
        if !(-PI - 1e-12..=PI + 1e-12).contains(&theta) {
            return Err(Error::Domain(format!("theta = {theta} is outside [-pi, pi]")));
        }
        let (s, co) = theta.sin_cos();
        let plus = ket(c(0., -s), c(co, 0.));
        let minus = ket(c(co, 0.), c(0., -s));
        Ok(Self { theta, basis: Basis::new(vec![plus, minus])? })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }
}

/// Second-time basis `{φ+, φ−}`: `φ+ ∝ |+⟩ + iσ|−⟩`, `φ− ∝ |−⟩ + iσ|+⟩`
/// with `σ = (−1)^(k−1)`.
pub fn phi_basis(k: i64) -> Basis {
    let sigma = if (k - 1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let r = FRAC_1_SQRT_2;
    let phi_plus = ket(c(0., sigma * r), c(r, 0.));
    let phi_minus = ket(c(r, 0.), c(0., sigma * r));
    Basis::new(vec![phi_plus, phi_minus]).expect("φ± are orthonormal")
}

/// Times 1 and 3 in the rotated basis, time 2 in `{φ+, φ−}`; values ±1.
pub fn rotated_measurement_plan(theta: f64, k: i64) -> Result<MeasurementPlan> {
    let rot = RotatedBasis::new(theta)?;
    MeasurementPlan::new(vec![
        Instrument::dichotomic(rot.basis().clone())?,
        Instrument::dichotomic(phi_basis(k))?,
        Instrument::dichotomic(rot.basis().clone())?,
    ])
}

/// `2cos2θ − cos4θ`
pub fn k3_closed_form(theta: f64) -> f64 {
    2.0 * (2.0 * theta).cos() - (4.0 * theta).cos()
}

/// Results at the half-π angles.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfPiState {
    pub k: i64,
    /// Two-time state on `(S1, A1, S2)`: the later slots traced out and
    /// the result divided by their dimension.
    pub reduced: ProcessState,
    pub phi_plus: Vector,
    pub phi_minus: Vector,
    /// Distance of the time-2 link contraction from `ρ0 ⊗ Φ'` where
    /// `Φ'` is the link with a relative sign between `|−−⟩` and `|++⟩`.
    pub link_residual: f64,
}

/// `|Ω'⟩⟨Ω'|` on `(A1, S3)` with `Ω' = |−−⟩ − |++⟩`.
pub fn signed_link() -> Matrix {
    let v = signs_ket("--") - signs_ket("++");
    &v * v.adjoint()
}

pub fn halfpi_reduced_state(m: &TwoQubitModel) -> Result<HalfPiState> {
    let k = m.halfpi_k().ok_or_else(|| {
        Error::Usage(format!(
            "theta1 = {}, theta2 = {} are not both (k + 1/2)pi for one k; use the general builder",
            m.theta1(),
            m.theta2()
        ))
    })?;
    let ps = build_process_state(&build_two_qubit_scenario(m)?)?;
    let reduced = ps
        .operator()
        .trace_out(&[SlotLabel::Ancilla(2), SlotLabel::System(3)])?
        .scale(c(0.5, 0.));
    let reduced = ProcessState::from_operator(reduced, 1, 2)?;

    let linked = ps
        .operator()
        .contract(&[SlotLabel::System(2), SlotLabel::Ancilla(2)], &max_entangled_link(2)?)?
        .permuted(&[SlotLabel::System(1), SlotLabel::Ancilla(1), SlotLabel::System(3)])?;
    let expected = kron(&m.rho0.matrix(), &signed_link());
    let link_residual = frobenius(&(linked.matrix() - expected));

    let phi = phi_basis(k);
    Ok(HalfPiState {
        k,
        reduced,
        phi_plus: phi.vector(0).clone(),
        phi_minus: phi.vector(1).clone(),
        link_residual,
    })
}

/// System state entering the second measurement, `Tr_E U_1(ρ0 ⊗ ψ_E)U_1^†`.
pub fn first_step_state(m: &TwoQubitModel) -> Result<Matrix> {
    let s = build_two_qubit_scenario(m)?;
    let u = &s.unitaries()[0];
    let rho = u * kron(s.rho0_system(), s.rho0_env()) * u.adjoint();
    Ok(LabeledOperator::on(&[(SlotLabel::System(2), 2), (SlotLabel::Environment, 2)], rho)?
        .trace_out(&[SlotLabel::Environment])?
        .into_matrix())
}

/// The two pure components `w_∓` on `(A1, S2, A2, S3)` whose projectors
/// sum to the process state with `S1` traced out. `w_−` ends with the
/// environment in `|−⟩`. Each equals twice the closed form of
/// [`psi_amplitudes`].
pub fn pure_components(m: &TwoQubitModel) -> Result<[Vector; 2]> {
    let s = build_two_qubit_scenario(m)?;
    let omega = signs_ket("--") + signs_ket("++");
    let env = ket(c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.));
    // order A1 S2 A2 S3 E
    let mut w = omega.kronecker(&omega).kronecker(&env);
    let n = w.len();
    let apply = |w: &Vector, u: &Matrix, sys_pos: usize| -> Vector {
        // u on (slot sys_pos, E) of a 5-qubit vector
        let stride = 1 << (4 - sys_pos);
        Vector::from_fn(n, |i, _| {
            let si = (i / stride) & 1;
            let ei = i & 1;
            let base = i - si * stride - ei;
            (0..2)
                .flat_map(|sj| (0..2).map(move |ej| (sj, ej)))
                .map(|(sj, ej)| u[(2 * si + ei, 2 * sj + ej)] * w[base + sj * stride + ej])
                .sum()
        })
    };
    w = apply(&w, &s.unitaries()[0], 1);
    w = apply(&w, &s.unitaries()[1], 3);
    let branch = |e: usize| Vector::from_fn(16, |i, _| w[2 * i + e]);
    Ok([branch(MINUS), branch(PLUS)])
}

/// Closed forms of `ψ∓` on `(A1, S2, A2, S3)`, normalized so that the
/// `|−−−−⟩` amplitude of `ψ−` is `1/(2√2)`. The `sin θ` terms carry the
/// phase `−i` of `exp(−iHτ)`.
pub fn psi_amplitudes(theta1: f64, theta2: f64) -> [Vector; 2] {
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    let mi = c(0., -1.);
    let terms = |lead: char, other: char| -> Vector {
        let flip = |pattern: &str| -> String {
            pattern
                .chars()
                .map(|ch| if ch == 'L' { lead } else { other })
                .collect()
        };
        let list: [(C64, &str); 9] = [
            (c(1., 0.), "LLLL"),
            (c(c1, 0.), "OOLL"),
            (mi * s1, "LOLL"),
            (c(c2, 0.), "LLOO"),
            (mi * s2, "OOLO"),
            (c(c1 * c2, 0.), "OOOO"),
            (mi * c1 * s2, "LLLO"),
            (mi * s1 * c2, "LOOO"),
            (c(-s1 * s2, 0.), "OLLO"),
        ];
        list.iter().fold(Vector::zeros(16), |acc, (amp, pat)| {
            acc + signs_ket(&flip(pat)) * *amp
        }) / c(2.0 * 2f64.sqrt(), 0.)
    };
    [terms('-', '+'), terms('+', '-')]
}

/// K3 over a grid of measurement angles.
#[derive(Debug, Clone, PartialEq)]
pub struct K3Curve {
    pub points: Vec<(f64, LGReport)>,
    /// Largest `|K3 − (2cos2θ − cos4θ)|` on the grid.
    pub max_deviation: f64,
}

pub fn k3_curve(m: &TwoQubitModel, thetas: &[f64], k: i64, tol: f64) -> Result<K3Curve> {
    let ps = build_process_state(&build_two_qubit_scenario(m)?)?;
    let mut points = Vec::with_capacity(thetas.len());
    let mut max_deviation: f64 = 0.0;
    for &th in thetas {
        let plans = PairwisePlans::from_plan(&rotated_measurement_plan(th, k)?)?;
        let rep = k3(&ps, &plans, tol)?;
        max_deviation = max_deviation.max((rep.k3 - k3_closed_form(th)).abs());
        points.push((th, rep));
    }
    Ok(K3Curve { points, max_deviation })
}

/// Order-1 example: step 1 applies `W` to the system and copies it into a
/// fresh environment qubit, step 2 applies `R` to the system when that
/// record is 1. Computational basis throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalReset {
    pub rho0: Matrix,
    pub w: Matrix,
    pub r: Matrix,
}

impl ConditionalReset {
    pub fn scenario(&self) -> Result<Scenario> {
        let p0 = Basis::computational(2).projector(0);
        let p1 = Basis::computational(2).projector(1);
        let x = Matrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let id = crate::linalg::identity(2);
        let cnot = kron(&p0, &id) + kron(&p1, &x);
        let u1 = cnot * kron(&self.w, &id);
        let u2 = kron(&id, &p0) + kron(&self.r, &p1);
        Scenario::new(self.rho0.clone(), p0, Evolution::Unitaries(vec![u1, u2]))
    }

    /// History `(S1, A1)`, memory `S2`, future `(A2, S3)`.
    pub fn partition() -> Partition {
        Partition {
            history: vec![SlotLabel::System(1), SlotLabel::Ancilla(1)],
            memory: vec![SlotLabel::System(2)],
            future: vec![SlotLabel::Ancilla(2), SlotLabel::System(3)],
        }
    }

    /// One component per record value `x`, each with weight 1/2:
    /// `ρ0 ⊗ v_x v_x^†`, `|x⟩⟨x|`, and twice the Choi state of `R^x`.
    pub fn components(&self) -> Result<Vec<MarkovComponent>> {
        let z = Basis::computational(2);
        (0..2)
            .map(|x| {
                let v = self.w.row(x).transpose();
                let step = if x == 0 { crate::linalg::identity(2) } else { self.r.clone() };
                Ok(MarkovComponent {
                    probability: 0.5,
                    history: kron(&self.rho0, &(&v * v.adjoint())),
                    memory: z.projector(x),
                    future: crate::opstate::choi_state(&[step], 2)? * c(2., 0.),
                    readout: z.projector(x),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lg::joint_probability;
    use crate::linalg::{identity, is_unitary};
    use crate::random;
    use crate::structure::{classify, condition_residual, markov_product_residual, Condition, ConditionBases};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_initial(r: &mut ChaCha8Rng) -> InitialState {
        InitialState::from_matrix(&random::random_density(r, 2)).unwrap()
    }

    fn halfpi(rho0: InitialState, k: i64) -> TwoQubitModel {
        let t = (k as f64 + 0.5) * PI;
        TwoQubitModel::from_angles(t, t, rho0)
    }

    #[test]
    fn zero_angles_give_identity_steps() {
        let s = build_two_qubit_scenario(&TwoQubitModel::from_angles(0., 0., InitialState::maximally_mixed())).unwrap();
        for u in s.unitaries() {
            assert!(frobenius(&(u - identity(4))) < 1e-15);
        }
    }

    #[test]
    fn initial_state_validation() {
        assert!(InitialState::new(0.3, 0.7, c(0.2, 0.3)).is_ok());
        assert!(InitialState::new(0.3, 0.6, c(0., 0.)).is_err());
        assert!(InitialState::new(0.3, 0.7, c(0.5, 0.)).is_err());
        assert!(InitialState::new(-0.1, 1.1, c(0., 0.)).is_err());
    }

    #[test]
    fn pure_components_match_closed_forms() {
        let mut r = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let m = TwoQubitModel::from_angles(r.random_range(-PI..PI), r.random_range(-PI..PI), random_initial(&mut r));
            let [wm, wp] = pure_components(&m).unwrap();
            let [pm, pp] = psi_amplitudes(m.theta1(), m.theta2());
            assert!((&wm - pm * c(2., 0.)).norm() < 1e-12);
            assert!((&wp - pp * c(2., 0.)).norm() < 1e-12);
            // the process state is ρ0 ⊗ (w− w−† + w+ w+†)
            let ps = build_process_state(&build_two_qubit_scenario(&m).unwrap()).unwrap();
            let model = kron(&m.rho0.matrix(), &(&wm * wm.adjoint() + &wp * wp.adjoint()));
            assert!(frobenius(&(ps.matrix() - model)) < 1e-12);
        }
        let [pm, _] = psi_amplitudes(0.4, 0.4);
        assert!((pm[0] - c(1.0 / (2.0 * 2f64.sqrt()), 0.)).norm() < 1e-15);
    }

    #[test]
    fn integer_pi_first_step_factorizes() {
        for k in 0..3 {
            let th2 = 0.37;
            let m = TwoQubitModel::from_angles(k as f64 * PI, th2, InitialState::maximally_mixed());
            let [wm, _] = pure_components(&m).unwrap();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let left = signs_ket("--") + signs_ket("++") * c(sign, 0.);
            let right = signs_ket("--") + signs_ket("++") * c(th2.cos(), 0.) + signs_ket("-+") * c(0., -sign * th2.sin());
            let expected = left.kronecker(&right) / c(2f64.sqrt(), 0.);
            assert!((wm - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn halfpi_state_pieces() {
        let mut r = ChaCha8Rng::seed_from_u64(42);
        for k in 0..3 {
            let rho0 = random_initial(&mut r);
            let m = halfpi(rho0, k);
            let h = halfpi_reduced_state(&m).unwrap();
            let sigma = if k % 2 == 1 { 1.0 } else { -1.0 };
            let phi_plus = (plus() + minus() * c(0., sigma)) / c(2f64.sqrt(), 0.);
            assert!((&h.phi_plus - phi_plus).norm() < 1e-15);
            // ρ0 ⊗ (|+⟩⟨+| ⊗ Π_φ+ + |−⟩⟨−| ⊗ Π_φ−) on (S1, A1, S2)
            let pp = kron(&(&plus() * plus().adjoint()), &(&h.phi_plus * h.phi_plus.adjoint()));
            let pm = kron(&(&minus() * minus().adjoint()), &(&h.phi_minus * h.phi_minus.adjoint()));
            let want = kron(&rho0.matrix(), &(pp + pm));
            assert!(frobenius(&(h.reduced.matrix() - want)) < 1e-12);
            assert!(h.link_residual < 1e-12);
            let rho1 = first_step_state(&m).unwrap();
            let phi = phi_basis(k);
            let want = phi.projector(0) * c(rho0.b, 0.) + phi.projector(1) * c(rho0.a, 0.);
            assert!(frobenius(&(rho1 - want)) < 1e-12);
        }
        let off = TwoQubitModel::from_angles(0.3, 0.3, InitialState::maximally_mixed());
        assert!(matches!(halfpi_reduced_state(&off), Err(Error::Usage(_))));
    }

    #[test]
    fn plain_link_differs_from_signed_link() {
        let m = halfpi(InitialState::maximally_mixed(), 1);
        let ps = build_process_state(&build_two_qubit_scenario(&m).unwrap()).unwrap();
        let linked = ps
            .operator()
            .contract(&[SlotLabel::System(2), SlotLabel::Ancilla(2)], &max_entangled_link(2).unwrap())
            .unwrap();
        let plain = kron(&m.rho0.matrix(), &max_entangled_link(2).unwrap());
        assert!(frobenius(&(linked.matrix() - plain)) > 0.5);
    }

    #[test]
    fn bases_are_orthonormal_and_reduce_at_zero() {
        let mut r = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..100 {
            let th = r.random_range(-PI..PI);
            let b = RotatedBasis::new(th).unwrap();
            let u = Matrix::from_columns(b.basis().vectors());
            assert!(is_unitary(&u, 1e-13));
        }
        let b0 = RotatedBasis::new(0.).unwrap();
        assert_eq!(b0.basis().vector(0), &plus());
        assert_eq!(b0.basis().vector(1), &minus());
        assert!(RotatedBasis::new(4.0).is_err());
    }

    #[test]
    fn k3_special_points() {
        let m = halfpi(InitialState::maximally_mixed(), 0);
        let c = k3_curve(&m, &[PI / 6., PI / 4., PI / 2.], 0, 1e-10).unwrap();
        let ks: Vec<f64> = c.points.iter().map(|(_, r)| r.k3).collect();
        assert!((ks[0] - 1.5).abs() < 1e-9);
        assert!((ks[1] - 1.0).abs() < 1e-9);
        assert!((ks[2] + 3.0).abs() < 1e-9);
        assert!(!c.points[0].1.lg_satisfied);
        assert!(c.max_deviation < 1e-9);
    }

    #[test]
    fn k3_is_independent_of_initial_state() {
        let mut r = ChaCha8Rng::seed_from_u64(44);
        let grid: Vec<f64> = (0..13).map(|i| -PI + 2.0 * PI * i as f64 / 12.0).collect();
        for _ in 0..5 {
            let m = halfpi(random_initial(&mut r), 1);
            assert!(k3_curve(&m, &grid, 1, 1e-10).unwrap().max_deviation < 1e-9);
        }
    }

    #[test]
    fn rotated_marginals_match_pair_lines() {
        let mut r = ChaCha8Rng::seed_from_u64(45);
        let rho0 = random_initial(&mut r);
        let th = 0.4;
        let m = halfpi(rho0, 1);
        let ps = build_process_state(&build_two_qubit_scenario(&m).unwrap()).unwrap();
        let plan = rotated_measurement_plan(th, 1).unwrap();
        let p12 = joint_probability(&ps, &plan).unwrap().sum_out(3).unwrap();
        let p1 = p12.sum_out(2).unwrap();
        let (cs, sn) = (th.cos().powi(2), th.sin().powi(2));
        assert!((p12.get(&[0, 0]) - p1.get(&[0]) * cs).abs() < 1e-12);
        assert!((p12.get(&[0, 1]) - p1.get(&[0]) * sn).abs() < 1e-12);
        assert!((p12.get(&[1, 1]) - p1.get(&[1]) * cs).abs() < 1e-12);
        assert!((p12.get(&[1, 0]) - p1.get(&[1]) * sn).abs() < 1e-12);
    }

    #[test]
    fn p23_weights_follow_unrotated_populations() {
        // With time 1 unmeasured, the (φ, x3) table is weighted by the
        // populations of ρ0 in {|−⟩, |+⟩}, not by the rotated marginal.
        let mut r = ChaCha8Rng::seed_from_u64(46);
        let rho0 = random_initial(&mut r);
        let th = 0.7;
        let m = halfpi(rho0, 1);
        let ps = build_process_state(&build_two_qubit_scenario(&m).unwrap()).unwrap();
        let plan = rotated_measurement_plan(th, 1).unwrap().with(1, Instrument::Unmeasured);
        let p23 = joint_probability(&ps, &plan).unwrap();
        let (cs, sn) = (th.cos().powi(2), th.sin().powi(2));
        assert!((p23.get(&[0, 0]) - rho0.b * cs).abs() < 1e-12);
        assert!((p23.get(&[0, 1]) - rho0.b * sn).abs() < 1e-12);
        assert!((p23.get(&[1, 1]) - rho0.a * cs).abs() < 1e-12);
        assert!((p23.get(&[1, 0]) - rho0.a * sn).abs() < 1e-12);
    }

    #[test]
    fn integer_pi_is_markovian_and_quantum_classical() {
        for k in 0..3 {
            let rho0 = InitialState::new(0.3, 0.7, c(0., 0.)).unwrap();
            let m = TwoQubitModel::from_angles(k as f64 * PI, 0.8, rho0);
            let ps = build_process_state(&build_two_qubit_scenario(&m).unwrap()).unwrap();
            assert!(markov_product_residual(&ps).unwrap() < 1e-10);
            let z = Basis::computational(2);
            let bases = ConditionBases::new(z.clone(), z);
            assert!(condition_residual(&ps, Condition::C1A, &bases).unwrap() < 1e-10);
            assert!(condition_residual(&ps, Condition::C2A, &bases).unwrap() < 1e-10);
            let cl = classify(&ps, &bases, 1e-10).unwrap();
            let d = cl.disturbance.unwrap();
            assert!(d.initial_diagonal && d.step_diagonal);
        }
        let m = halfpi(InitialState::maximally_mixed(), 0);
        let ps = build_process_state(&build_two_qubit_scenario(&m).unwrap()).unwrap();
        assert!(markov_product_residual(&ps).unwrap() > 1e-3);
    }

    #[test]
    fn conditional_reset_has_markov_order_form() {
        let mut r = ChaCha8Rng::seed_from_u64(47);
        let cr = ConditionalReset {
            rho0: random::random_density(&mut r, 2),
            w: random::haar_unitary(&mut r, 2),
            r: random::haar_unitary(&mut r, 2),
        };
        let ps = build_process_state(&cr.scenario().unwrap()).unwrap();
        let res = crate::structure::markov_order_form_residual(
            &ps,
            &ConditionalReset::partition(),
            &cr.components().unwrap(),
            1e-10,
        )
        .unwrap();
        assert!(res < 1e-12, "{res}");
    }
}
