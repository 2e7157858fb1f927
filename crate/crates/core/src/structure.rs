//! Structural tests on three-time process states: the quantum-classical
//! conditions, QC projections, Markovian product form, state-disturbance
//! conditions and the Markov-order form.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, Basis, Matrix, C64};
use crate::process::ProcessState;
use crate::slots::{LabeledOperator, SlotLabel};

/// Diagonality of a measured slot: `1A` is `S1` in the time-1 basis, `1B`
/// is `A1` in its conjugate, `2A`/`2B` the same for time 2 inside each
/// time-1-reduced state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "1A")]
    C1A,
    #[serde(rename = "1B")]
    C1B,
    #[serde(rename = "2A")]
    C2A,
    #[serde(rename = "2B")]
    C2B,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::C1A, Condition::C1B, Condition::C2A, Condition::C2B];

    fn time(self) -> usize {
        match self {
            Condition::C1A | Condition::C1B => 1,
            Condition::C2A | Condition::C2B => 2,
        }
    }

    /// The slot that must be diagonal.
    pub fn slot(self) -> SlotLabel {
        match self {
            Condition::C1A => SlotLabel::System(1),
            Condition::C1B => SlotLabel::Ancilla(1),
            Condition::C2A => SlotLabel::System(2),
            Condition::C2B => SlotLabel::Ancilla(2),
        }
    }

    fn on_ancilla(self) -> bool {
        matches!(self, Condition::C1B | Condition::C2B)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::C1A => "1A",
            Condition::C1B => "1B",
            Condition::C2A => "2A",
            Condition::C2B => "2B",
        })
    }
}

/// One time-1 condition and one time-2 condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QcPair {
    pub first: Condition,
    pub second: Condition,
}

impl QcPair {
    pub const ALL: [QcPair; 4] = [
        QcPair { first: Condition::C1B, second: Condition::C2A },
        QcPair { first: Condition::C1A, second: Condition::C2A },
        QcPair { first: Condition::C1B, second: Condition::C2B },
        QcPair { first: Condition::C1A, second: Condition::C2B },
    ];

    pub fn new(first: Condition, second: Condition) -> Result<Self> {
        if first.time() != 1 || second.time() != 2 {
            return Err(Error::Usage(format!(
                "a QC pair is one of 1A/1B followed by one of 2A/2B, got ({first}, {second})"
            )));
        }
        Ok(Self { first, second })
    }
}

impl fmt::Display for QcPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.first, self.second)
    }
}

/// Bases of the time-1 and time-2 measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionBases {
    pub first: Basis,
    pub second: Basis,
}

impl ConditionBases {
    pub fn new(first: Basis, second: Basis) -> Self {
        Self { first, second }
    }

    fn for_condition(&self, c: Condition) -> Basis {
        let b = if c.time() == 1 { &self.first } else { &self.second };
        if c.on_ancilla() {
            b.conjugate()
        } else {
            b.clone()
        }
    }
}

fn require_three_time(ps: &ProcessState) -> Result<()> {
    if ps.first_time() != 1 || ps.last_time() != 3 {
        return Err(Error::Usage(format!(
            "expected a three-time process state, got times {}..={}",
            ps.first_time(),
            ps.last_time()
        )));
    }
    Ok(())
}

/// `(Π_x ⊗ Π_x^* | S)` on `(S1, A1)`, one operator on `(S2, A2, S3)` per `x`.
pub fn first_reduced_states(ps: &ProcessState, basis: &Basis) -> Result<Vec<LabeledOperator>> {
    require_three_time(ps)?;
    (0..basis.dim())
        .map(|x| {
            let p = basis.projector(x);
            ps.operator().contract(
                &[SlotLabel::System(1), SlotLabel::Ancilla(1)],
                &p.kronecker(&p.map(|z| z.conj())),
            )
        })
        .collect()
}

fn off_diagonal(op: &LabeledOperator, slot: SlotLabel, basis: &Basis) -> Result<f64> {
    Ok(frobenius(&(op.matrix() - op.dephased(slot, basis)?.matrix())))
}

/// Root-sum-square norm of the off-diagonal blocks named by `which`.
pub fn condition_residual(ps: &ProcessState, which: Condition, bases: &ConditionBases) -> Result<f64> {
    require_three_time(ps)?;
    let b = bases.for_condition(which);
    match which.time() {
        1 => off_diagonal(ps.operator(), which.slot(), &b),
        _ => {
            let mut acc = 0.0;
            for red in first_reduced_states(ps, &bases.first)? {
                acc += off_diagonal(&red, which.slot(), &b)?.powi(2);
            }
            Ok(acc.sqrt())
        }
    }
}

/// Quantum-classical projection for `pair`: dephase the time-1 slot, then
/// replace each time-1-reduced block by its time-2-dephased version. Every
/// outcome-diagonal three-time contraction is left unchanged.
pub fn qc_projection(ps: &ProcessState, pair: QcPair, bases: &ConditionBases) -> Result<ProcessState> {
    require_three_time(ps)?;
    let pair = QcPair::new(pair.first, pair.second)?;
    let first = ps
        .operator()
        .dephased(pair.first.slot(), &bases.for_condition(pair.first))?;
    let half = ProcessState::from_operator(first, 1, 3)?;
    let b2 = bases.for_condition(pair.second);
    let mut out = half.operator().clone();
    for (x, red) in first_reduced_states(&half, &bases.first)?.into_iter().enumerate() {
        let delta = red.dephased(pair.second.slot(), &b2)?.sub(&red)?;
        let p = bases.first.projector(x);
        let tag = LabeledOperator::on(
            &[(SlotLabel::System(1), ps.dim()), (SlotLabel::Ancilla(1), ps.dim())],
            p.kronecker(&p.map(|z| z.conj())),
        )?;
        out = out.add(&tag.tensor(&delta)?)?;
    }
    ProcessState::from_operator(out, 1, 3)
}

/// Distance from the fully classical form: every measured slot (`S1`,
/// `A1`, `S2`, `A2`) dephased in its measurement basis.
pub fn classical_form_residual(ps: &ProcessState, bases: &ConditionBases) -> Result<f64> {
    require_three_time(ps)?;
    let mut op = ps.operator().clone();
    for c in Condition::ALL {
        op = op.dephased(c.slot(), &bases.for_condition(c))?;
    }
    Ok(frobenius(&(ps.matrix() - op.matrix())))
}

/// Blocks `[S1], [A1, S2], [A2, S3], ...` of a process state.
pub fn markov_blocks(ps: &ProcessState) -> Vec<Vec<SlotLabel>> {
    let mut out = vec![vec![SlotLabel::System(ps.first_time())]];
    for j in ps.first_time()..ps.last_time() {
        out.push(vec![SlotLabel::Ancilla(j), SlotLabel::System(j + 1)]);
    }
    out
}

/// Marginals of `ps` on [`markov_blocks`].
pub fn markov_marginals(ps: &ProcessState) -> Result<Vec<LabeledOperator>> {
    markov_blocks(ps)
        .iter()
        .map(|b| ps.operator().reduced(b))
        .collect()
}

/// `‖S - ⊗_k M_k / (Tr S)^{m-1}‖_F` with `M_k` the block marginals.
pub fn markov_product_residual(ps: &ProcessState) -> Result<f64> {
    let marginals = markov_marginals(ps)?;
    let tr = ps.operator().trace();
    let m = marginals.len() as i32;
    let mut prod = LabeledOperator::scalar(C64::new(1.0, 0.0));
    for mk in &marginals {
        prod = prod.tensor(mk)?;
    }
    let prod = prod.scale(tr.powi(-(m - 1)));
    Ok(frobenius(&(ps.matrix() - prod.matrix())))
}

/// Outcome of the state-disturbance checks on a Markovian product state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceReport {
    pub initial_diagonal: bool,
    pub step_diagonal: bool,
    pub initial_residual: f64,
    pub step_residual: f64,
}

/// Initial state, and the first step's output on each time-1 basis
/// projector, checked for diagonality in the respective bases. Only
/// meaningful for product-form states.
pub fn disturbance_conditions(ps: &ProcessState, bases: &ConditionBases, tol: f64) -> Result<DisturbanceReport> {
    require_three_time(ps)?;
    let mpr = markov_product_residual(ps)?;
    if mpr > tol {
        return Err(Error::Inapplicable(format!(
            "process state is not of Markovian product form (residual {mpr:e})"
        )));
    }
    let d = ps.dim() as f64;
    let tr = ps.trace();
    let marginals = markov_marginals(ps)?;
    let rho0 = marginals[0].matrix() / C64::new(tr, 0.0);
    let initial_residual = frobenius(&(&rho0 - bases.first.dephase(&rho0)));

    let choi = marginals[1].scale(C64::new(d / tr, 0.0));
    let mut acc = 0.0;
    for x in 0..bases.first.dim() {
        let p = bases.first.projector(x);
        let out = choi.contract(&[SlotLabel::Ancilla(1)], &p.map(|z| z.conj()))?;
        let m = out.matrix();
        acc += frobenius(&(m - bases.second.dephase(m))).powi(2);
    }
    let step_residual = acc.sqrt();
    Ok(DisturbanceReport {
        initial_diagonal: initial_residual < tol,
        step_diagonal: step_residual < tol,
        initial_residual,
        step_residual,
    })
}

/// History, memory and future slot sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub history: Vec<SlotLabel>,
    pub memory: Vec<SlotLabel>,
    pub future: Vec<SlotLabel>,
}

/// One term `P(x) S_H ⊗ S_M ⊗ S_F` of a Markov-order decomposition, with
/// the memory-part operator `O` that reads out `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovComponent {
    pub probability: f64,
    pub history: Matrix,
    pub memory: Matrix,
    pub future: Matrix,
    pub readout: Matrix,
}

/// Distance between `ps` and `Σ_x P(x) S_H^{(x)} ⊗ S_M^{(x)} ⊗ S_F^{(x)}`.
/// Requires `(O^{(x)}|S_M^{(y)}) = δ_xy` for the readouts.
pub fn markov_order_form_residual(
    ps: &ProcessState,
    partition: &Partition,
    components: &[MarkovComponent],
    tol: f64,
) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::Usage("no components".into()));
    }
    let total: f64 = components.iter().map(|c| c.probability).sum();
    if components.iter().any(|c| c.probability < -tol) || (total - 1.0).abs() > tol {
        return Err(Error::Domain(format!(
            "component probabilities must be nonnegative and sum to 1 (sum {total})"
        )));
    }
    for (x, cx) in components.iter().enumerate() {
        for (y, cy) in components.iter().enumerate() {
            let g = crate::opstate::op_inner(&cx.readout, &cy.memory)?;
            let want = if x == y { 1.0 } else { 0.0 };
            if (g - C64::new(want, 0.0)).norm() > tol {
                return Err(Error::InvalidInstrument(format!(
                    "readout {x} against memory state {y} gives {g}, expected {want}"
                )));
            }
        }
    }
    let sys = ps.operator().system();
    let part = |labels: &[SlotLabel], m: &Matrix| -> Result<LabeledOperator> {
        let slots: Vec<(SlotLabel, usize)> = labels
            .iter()
            .map(|&l| sys.dim_of(l).map(|d| (l, d)))
            .collect::<Result<_>>()?;
        LabeledOperator::on(&slots, m.clone())
    };
    let mut acc: Option<LabeledOperator> = None;
    for cx in components {
        let term = part(&partition.history, &cx.history)?
            .tensor(&part(&partition.memory, &cx.memory)?)?
            .tensor(&part(&partition.future, &cx.future)?)?
            .scale(C64::new(cx.probability, 0.0));
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    let model = acc.expect("non-empty").permuted(&ps.operator().labels())?;
    Ok(frobenius(&(ps.matrix() - model.matrix())))
}

/// Residuals of the four conditions and the derived structural flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QCClassification {
    pub residual_1a: f64,
    pub residual_1b: f64,
    pub residual_2a: f64,
    pub residual_2b: f64,
    pub holds_1a: bool,
    pub holds_1b: bool,
    pub holds_2a: bool,
    pub holds_2b: bool,
    /// Condition pairs that hold.
    pub qc_form: Vec<QcPair>,
    pub markov_product_residual: f64,
    pub classical_form_residual: f64,
    /// Absent when the state is not of product form.
    pub disturbance: Option<DisturbanceReport>,
    pub tolerance: f64,
    pub basis_1: Vec<Vec<[f64; 2]>>,
    pub basis_2: Vec<Vec<[f64; 2]>>,
}

pub fn classify(ps: &ProcessState, bases: &ConditionBases, tol: f64) -> Result<QCClassification> {
    let r: Vec<f64> = Condition::ALL
        .iter()
        .map(|&c| condition_residual(ps, c, bases))
        .collect::<Result<_>>()?;
    let holds = |c: Condition| r[Condition::ALL.iter().position(|&k| k == c).unwrap()] < tol;
    let qc_form = QcPair::ALL
        .iter()
        .copied()
        .filter(|p| holds(p.first) && holds(p.second))
        .collect();
    let disturbance = match disturbance_conditions(ps, bases, tol) {
        Ok(d) => Some(d),
        Err(Error::Inapplicable(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(QCClassification {
        residual_1a: r[0],
        residual_1b: r[1],
        residual_2a: r[2],
        residual_2b: r[3],
        holds_1a: r[0] < tol,
        holds_1b: r[1] < tol,
        holds_2a: r[2] < tol,
        holds_2b: r[3] < tol,
        qc_form,
        markov_product_residual: markov_product_residual(ps)?,
        classical_form_residual: classical_form_residual(ps, bases)?,
        disturbance,
        tolerance: tol,
        basis_1: crate::schema::basis_json(&bases.first),
        basis_2: crate::schema::basis_json(&bases.second),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lg::{joint_probability, k3, marginal_probability, PairwisePlans};
    use crate::linalg::{c, identity, Vector};
    use crate::opstate::{basis_element, choi_state, max_entangled_link};
    use crate::process::{build_process_state, markov_product_state, Evolution, Instrument, MeasurementPlan, Scenario};
    use crate::random;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z() -> Basis {
        Basis::computational(2)
    }

    fn zz() -> ConditionBases {
        ConditionBases::new(z(), z())
    }

    fn diag(a: f64) -> Matrix {
        Matrix::from_diagonal(&Vector::from_vec(vec![c(a, 0.), c(1. - a, 0.)]))
    }

    fn identity_process(rho: Matrix) -> ProcessState {
        let id = max_entangled_link(2).unwrap();
        markov_product_state(&[id.clone(), id], &rho).unwrap()
    }

    fn random_ps(r: &mut ChaCha8Rng) -> ProcessState {
        let s = Scenario::new(
            random::random_density(r, 2),
            random::random_density(r, 2),
            Evolution::Unitaries((0..2).map(|_| random::haar_unitary(r, 4)).collect()),
        )
        .unwrap();
        build_process_state(&s).unwrap()
    }

    #[test]
    fn diagonal_initial_state_passes_1a() {
        let ps = identity_process(diag(0.3));
        assert!(condition_residual(&ps, Condition::C1A, &zz()).unwrap() < 1e-14);
    }

    #[test]
    fn coherent_initial_state_fails_1a() {
        let plus = Matrix::from_element(2, 2, c(0.5, 0.));
        let ps = identity_process(plus);
        // The off-diagonal part is ρ01 |0><1| ⊗ Φ ⊗ Φ plus its adjoint;
        // ‖Φ‖_F = 2, so the norm is sqrt(2) · 0.5 · 2 · 2.
        let want = 2f64.sqrt() * 0.5 * 4.0;
        let got = condition_residual(&ps, Condition::C1A, &zz()).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn pair_validation() {
        assert!(QcPair::new(Condition::C2A, Condition::C1A).is_err());
        assert!(QcPair::new(Condition::C1B, Condition::C2B).is_ok());
        assert_eq!(serde_json::to_string(&Condition::C1B).unwrap(), "\"1B\"");
    }

    #[test]
    fn projection_zeroes_its_pair_and_is_idempotent() {
        let mut r = ChaCha8Rng::seed_from_u64(31);
        let ps = random_ps(&mut r);
        let bases = ConditionBases::new(random::random_basis(&mut r, 2), random::random_basis(&mut r, 2));
        for pair in QcPair::ALL {
            let qc = qc_projection(&ps, pair, &bases).unwrap();
            assert!(condition_residual(&qc, pair.first, &bases).unwrap() < 1e-12);
            assert!(condition_residual(&qc, pair.second, &bases).unwrap() < 1e-12);
            let again = qc_projection(&qc, pair, &bases).unwrap();
            assert!(frobenius(&(again.matrix() - qc.matrix())) < 1e-12);
        }
    }

    #[test]
    fn projection_keeps_diagonal_contractions() {
        let mut r = ChaCha8Rng::seed_from_u64(32);
        let ps = random_ps(&mut r);
        let b: Vec<Basis> = (0..3).map(|_| random::random_basis(&mut r, 2)).collect();
        let bases = ConditionBases::new(b[0].clone(), b[1].clone());
        let plan = MeasurementPlan::new(b.iter().map(|x| Instrument::dichotomic(x.clone()).unwrap()).collect()).unwrap();
        let p = joint_probability(&ps, &plan).unwrap();
        for pair in QcPair::ALL {
            let qc = qc_projection(&ps, pair, &bases).unwrap();
            let q = joint_probability(&qc, &plan).unwrap();
            for (a, b) in p.probabilities().iter().zip(q.probabilities()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_condition_projection_has_block_form() {
        let mut r = ChaCha8Rng::seed_from_u64(33);
        let ps = random_ps(&mut r);
        let first = ps.operator().dephased(SlotLabel::System(1), &z()).unwrap();
        // Σ_x S_x ⊗ Π_x with S_x = (Π_x^{S1}|S)
        let mut acc: Option<LabeledOperator> = None;
        for x in 0..2 {
            let px = basis_element(2, x, x);
            let sx = ps.operator().contract(&[SlotLabel::System(1)], &px).unwrap();
            let term = LabeledOperator::single(SlotLabel::System(1), px).unwrap().tensor(&sx).unwrap();
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term).unwrap(),
            });
        }
        let acc = acc.unwrap();
        assert!(frobenius(&(acc.matrix() - first.matrix())) < 1e-13);
    }

    #[test]
    fn qc_soundness_on_random_states() {
        let mut r = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..20 {
            let ps = random_ps(&mut r);
            let b: Vec<Basis> = (0..3).map(|_| random::random_basis(&mut r, 2)).collect();
            let bases = ConditionBases::new(b[0].clone(), b[1].clone());
            let plan = MeasurementPlan::new(b.iter().map(|x| Instrument::dichotomic(x.clone()).unwrap()).collect()).unwrap();
            let plans = PairwisePlans::from_plan(&plan).unwrap();
            for pair in QcPair::ALL {
                let qc = qc_projection(&ps, pair, &bases).unwrap();
                let p3 = joint_probability(&qc, &plan).unwrap();
                let p13 = joint_probability(&qc, &plans.p13).unwrap();
                let p23 = joint_probability(&qc, &plans.p23).unwrap();
                let s13 = p3.sum_out(2).unwrap();
                let s23 = p3.sum_out(1).unwrap();
                for (a, b) in p13.probabilities().iter().zip(s13.probabilities()) {
                    assert!((a - b).abs() < 1e-10);
                }
                for (a, b) in p23.probabilities().iter().zip(s23.probabilities()) {
                    assert!((a - b).abs() < 1e-10);
                }
                assert!(marginal_probability(&p3, (1, 2)).is_ok());
                assert!(k3(&qc, &plans, 1e-10).unwrap().k3 <= 1.0 + 1e-10);
            }
        }
    }

    #[test]
    fn product_state_has_zero_product_residual() {
        let mut r = ChaCha8Rng::seed_from_u64(35);
        let steps: Vec<Matrix> = (0..2).map(|_| choi_state(&random::random_kraus(&mut r, 2, 2), 2).unwrap()).collect();
        let ps = markov_product_state(&steps, &random::random_density(&mut r, 2)).unwrap();
        assert!(markov_product_residual(&ps).unwrap() < 1e-12);
        assert!(markov_product_residual(&random_ps(&mut r)).unwrap() > 1e-3);
    }

    #[test]
    fn product_residual_is_local_unitary_invariant() {
        let mut r = ChaCha8Rng::seed_from_u64(36);
        let ps = random_ps(&mut r);
        let before = markov_product_residual(&ps).unwrap();
        let u = random::haar_unitary(&mut r, 4);
        let rotated = ps
            .operator()
            .conjugated_by(&[SlotLabel::Ancilla(1), SlotLabel::System(2)], &u)
            .unwrap();
        let rotated = ProcessState::from_operator(rotated, 1, 3).unwrap();
        let after = markov_product_residual(&rotated).unwrap();
        assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn disturbance_examples() {
        let ps = identity_process(diag(0.2));
        let d = disturbance_conditions(&ps, &zz(), 1e-10).unwrap();
        assert!(d.initial_diagonal && d.step_diagonal);

        let h = Matrix::from_row_slice(2, 2, &[c(1., 0.), c(1., 0.), c(1., 0.), c(-1., 0.)]) * c(0.5f64.sqrt(), 0.);
        let step = choi_state(&[h], 2).unwrap();
        let ps = markov_product_state(&[step, max_entangled_link(2).unwrap()], &diag(0.2)).unwrap();
        let d = disturbance_conditions(&ps, &zz(), 1e-10).unwrap();
        assert!(d.initial_diagonal && !d.step_diagonal);
        // H|x><x|H has off-diagonal entries ±1/2, two per outcome
        assert!((d.step_residual - 1.0).abs() < 1e-12);

        let mut r = ChaCha8Rng::seed_from_u64(37);
        assert!(matches!(
            disturbance_conditions(&random_ps(&mut r), &zz(), 1e-10),
            Err(Error::Inapplicable(_))
        ));
    }

    #[test]
    fn dephasing_steps_are_fully_classical() {
        let deph = choi_state(&[basis_element(2, 0, 0), basis_element(2, 1, 1)], 2).unwrap();
        let ps = markov_product_state(&[deph.clone(), deph], &diag(0.35)).unwrap();
        let cl = classify(&ps, &zz(), 1e-10).unwrap();
        assert!(cl.holds_1a && cl.holds_1b && cl.holds_2a && cl.holds_2b);
        assert_eq!(cl.qc_form.len(), 4);
        assert!(cl.classical_form_residual < 1e-12);
        assert!(cl.disturbance.as_ref().unwrap().step_diagonal);
    }

    #[test]
    fn disturbance_free_product_states_pass_1a_2a() {
        let mut r = ChaCha8Rng::seed_from_u64(38);
        for _ in 0..10 {
            let p = random::random_probabilities(&mut r, 2);
            // classical stochastic first step followed by an arbitrary channel
            let flip = [[p[0], 1.0 - p[0]], [p[1], 1.0 - p[1]]];
            let kraus: Vec<Matrix> = (0..2)
                .flat_map(|a| {
                    (0..2).map(move |b| basis_element(2, b, a) * c(if b == 0 { flip[a][0] } else { flip[a][1] }, 0.).sqrt())
                })
                .collect();
            let s1 = choi_state(&kraus, 2).unwrap();
            let s2 = choi_state(&random::random_kraus(&mut r, 2, 2), 2).unwrap();
            let ps = markov_product_state(&[s1, s2], &diag(r.random())).unwrap();
            let d = disturbance_conditions(&ps, &zz(), 1e-10).unwrap();
            assert!(d.initial_diagonal && d.step_diagonal);
            let cl = classify(&ps, &zz(), 1e-10).unwrap();
            assert!(cl.holds_1a && cl.holds_2a, "{cl:?}");
        }
    }

    #[test]
    fn markov_order_form_single_component() {
        let mut r = ChaCha8Rng::seed_from_u64(39);
        let rho = random::random_density(&mut r, 2);
        let c1 = choi_state(&random::random_kraus(&mut r, 2, 2), 2).unwrap();
        let c2 = choi_state(&random::random_kraus(&mut r, 2, 2), 2).unwrap();
        let ps = markov_product_state(&[c1.clone(), c2.clone()], &rho).unwrap();
        let part = Partition {
            history: vec![SlotLabel::System(1)],
            memory: vec![SlotLabel::Ancilla(1), SlotLabel::System(2)],
            future: vec![SlotLabel::Ancilla(2), SlotLabel::System(3)],
        };
        let comp = MarkovComponent {
            probability: 1.0,
            history: rho,
            memory: c1.clone(),
            readout: c1.clone() / crate::linalg::trace(&(c1.adjoint() * &c1)),
            future: c2,
        };
        assert!(markov_order_form_residual(&ps, &part, std::slice::from_ref(&comp), 1e-10).unwrap() < 1e-12);
        let bad = MarkovComponent { readout: identity(4) * c(0.1, 0.), ..comp };
        assert!(matches!(
            markov_order_form_residual(&ps, &part, &[bad], 1e-10),
            Err(Error::InvalidInstrument(_))
        ));
    }
}
