//! Scenarios, process states and n-point measurement operations.
//!
//! A process state over times `first..=last` lives on the slots
//! `S_first, A_first, S_{first+1}, ..., A_{last-1}, S_last`, in that order.
//! `S_j` is the system handed to the j-th intervention and `A_j` is the link
//! partner that feeds its output into the next step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    c, identity, is_hermitian, kron, min_eigenvalue, require_square, trace, unitarity_residual,
    validate_density, Basis, Matrix, DEFAULT_TOL,
};
use crate::opstate::max_entangled_link;
use crate::slots::{LabeledOperator, Slot, SlotLabel, SlotSystem};

/// How the system and environment evolve between consecutive measurements.
#[derive(Debug, Clone, PartialEq)]
pub enum Evolution {
    Unitaries(Vec<Matrix>),
    /// Time-independent `H` on `S ⊗ E`; step `j` is `exp(-i H τ_j)`.
    Hamiltonian { hamiltonian: Matrix, durations: Vec<f64> },
}

/// Initial states plus the evolution between measurement times.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    rho0_system: Matrix,
    rho0_env: Matrix,
    evolution: Evolution,
    unitaries: Vec<Matrix>,
}

impl Scenario {
    pub fn new(rho0_system: Matrix, rho0_env: Matrix, evolution: Evolution) -> Result<Self> {
        Self::with_tolerance(rho0_system, rho0_env, evolution, DEFAULT_TOL)
    }

    /// `tol` bounds the density-matrix checks; unitarity is always held to 1e-12.
    pub fn with_tolerance(
        rho0_system: Matrix,
        rho0_env: Matrix,
        evolution: Evolution,
        tol: f64,
    ) -> Result<Self> {
        let ds = require_square(&rho0_system, "rho0_system")?;
        let de = require_square(&rho0_env, "rho0_env")?;
        validate_density(&rho0_system, tol, "rho0_system")?;
        validate_density(&rho0_env, tol, "rho0_env")?;
        let n = ds * de;
        let unitaries = match &evolution {
            Evolution::Unitaries(us) => us.clone(),
            Evolution::Hamiltonian {
                hamiltonian,
                durations,
            } => {
                if hamiltonian.shape() != (n, n) {
                    return Err(Error::Shape(format!(
                        "Hamiltonian is {:?}, expected {n}x{n}",
                        hamiltonian.shape()
                    )));
                }
                durations
                    .iter()
                    .map(|&t| crate::linalg::expm_hermitian(hamiltonian, t))
                    .collect::<Result<_>>()?
            }
        };
        if unitaries.is_empty() {
            return Err(Error::Domain("at least two measurement times are required".into()));
        }
        for (j, u) in unitaries.iter().enumerate() {
            if u.shape() != (n, n) {
                return Err(Error::Shape(format!(
                    "evolution {} is {:?}, expected {n}x{n}",
                    j + 1,
                    u.shape()
                )));
            }
            let r = unitarity_residual(u);
            if r > 1e-12 * (n as f64) {
                return Err(Error::Domain(format!(
                    "evolution {} is not unitary (residual {r:e})",
                    j + 1
                )));
            }
        }
        Ok(Self {
            rho0_system,
            rho0_env,
            evolution,
            unitaries,
        })
    }

    pub fn dim_system(&self) -> usize {
        self.rho0_system.nrows()
    }

    pub fn dim_env(&self) -> usize {
        self.rho0_env.nrows()
    }

    pub fn n_times(&self) -> usize {
        self.unitaries.len() + 1
    }

    pub fn rho0_system(&self) -> &Matrix {
        &self.rho0_system
    }

    pub fn rho0_env(&self) -> &Matrix {
        &self.rho0_env
    }

    pub fn evolution(&self) -> &Evolution {
        &self.evolution
    }

    /// `U_1 .. U_{n-1}` on `S ⊗ E`.
    pub fn unitaries(&self) -> &[Matrix] {
        &self.unitaries
    }
}

/// Labels `S_first, A_first, ..., S_last`.
pub fn canonical_labels(first: usize, last: usize) -> Vec<SlotLabel> {
    let mut out = Vec::with_capacity(2 * (last - first) + 1);
    for j in first..last {
        out.push(SlotLabel::System(j));
        out.push(SlotLabel::Ancilla(j));
    }
    out.push(SlotLabel::System(last));
    out
}

fn canonical_system(first: usize, last: usize, dim: usize) -> SlotSystem {
    SlotSystem::new(
        canonical_labels(first, last)
            .into_iter()
            .map(|l| Slot::new(l, dim))
            .collect(),
    )
    .expect("canonical labels are unique")
}

/// Choi-form process tensor over measurement times `first..=last`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessState {
    op: LabeledOperator,
    first: usize,
    last: usize,
    dim: usize,
}

#[derive(Serialize)]
struct ProcessStateExport<'a> {
    first_time: usize,
    last_time: usize,
    dim_system: usize,
    slots: &'a [Slot],
    matrix: crate::schema::MatrixJson,
}

impl ProcessState {
    /// Wraps a matrix given in canonical slot order.
    pub fn from_matrix(first: usize, last: usize, dim: usize, matrix: Matrix) -> Result<Self> {
        if last < first || first == 0 {
            return Err(Error::Usage(format!("invalid time range {first}..={last}")));
        }
        let op = LabeledOperator::new(canonical_system(first, last, dim), matrix)?;
        Ok(Self {
            op,
            first,
            last,
            dim,
        })
    }

    /// Accepts any slot order; the operator is permuted into canonical order.
    pub fn from_operator(op: LabeledOperator, first: usize, last: usize) -> Result<Self> {
        let labels = canonical_labels(first, last);
        let op = op.permuted(&labels)?;
        let dim = op.dim_of(SlotLabel::System(first))?;
        if op.system().slots().iter().any(|s| s.dim != dim) {
            return Err(Error::Shape("all slots must share one dimension".into()));
        }
        Ok(Self {
            op,
            first,
            last,
            dim,
        })
    }

    pub fn operator(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn matrix(&self) -> &Matrix {
        self.op.matrix()
    }

    pub fn first_time(&self) -> usize {
        self.first
    }

    pub fn last_time(&self) -> usize {
        self.last
    }

    pub fn n_times(&self) -> usize {
        self.last - self.first + 1
    }

    /// Local dimension of every slot.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace(&self) -> f64 {
        self.op.trace().re
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        is_hermitian(self.matrix(), tol)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(self.matrix())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ProcessStateExport {
            first_time: self.first,
            last_time: self.last,
            dim_system: self.dim,
            slots: self.op.system().slots(),
            matrix: crate::schema::MatrixJson::from(self.matrix()),
        })
        .expect("process state export is plain data")
    }
}

/// `ρ0^{S1} ⊗ Φ^{A1 S2} ⊗ ... ⊗ ρ0^E`, evolved by `U_j` on `(S_{j+1}, E)`,
/// environment traced out last.
pub fn build_process_state(s: &Scenario) -> Result<ProcessState> {
    let d = s.dim_system();
    let n = s.n_times();
    let phi = max_entangled_link(d)?;
    let mut op = LabeledOperator::single(SlotLabel::System(1), s.rho0_system().clone())?;
    for j in 1..n {
        let link = LabeledOperator::on(
            &[(SlotLabel::Ancilla(j), d), (SlotLabel::System(j + 1), d)],
            phi.clone(),
        )?;
        op = op.tensor(&link)?;
    }
    op = op.tensor(&LabeledOperator::single(
        SlotLabel::Environment,
        s.rho0_env().clone(),
    )?)?;
    for (j, u) in s.unitaries().iter().enumerate() {
        op = op.conjugated_by(&[SlotLabel::System(j + 2), SlotLabel::Environment], u)?;
    }
    let op = op.trace_out(&[SlotLabel::Environment])?;
    ProcessState::from_operator(op, 1, n)
}

/// A measurement at one time: projective with outcome values, or none.
#[derive(Debug, Clone, PartialEq)]
pub enum Instrument {
    Projective { basis: Basis, values: Vec<f64> },
    Unmeasured,
}

impl Instrument {
    pub fn projective(basis: Basis, values: Vec<f64>) -> Result<Self> {
        if values.len() != basis.dim() {
            return Err(Error::InvalidInstrument(format!(
                "{} outcome values for a {}-dimensional basis",
                values.len(),
                basis.dim()
            )));
        }
        Ok(Instrument::Projective { basis, values })
    }

    /// Qubit measurement with values `(+1, -1)` in basis order.
    pub fn dichotomic(basis: Basis) -> Result<Self> {
        if basis.dim() != 2 {
            return Err(Error::InvalidInstrument(
                "dichotomic default values need a two-dimensional basis".into(),
            ));
        }
        Self::projective(basis, vec![1.0, -1.0])
    }

    pub fn is_measured(&self) -> bool {
        matches!(self, Instrument::Projective { .. })
    }

    pub fn basis(&self) -> Option<&Basis> {
        match self {
            Instrument::Projective { basis, .. } => Some(basis),
            Instrument::Unmeasured => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match self {
            Instrument::Projective { values, .. } => Some(values),
            Instrument::Unmeasured => None,
        }
    }

    /// Dual on `(S_j, A_j)`: `Π_x ⊗ Π_x^*`, or the link `Φ` when unmeasured.
    pub fn pair_dual(&self, outcome: Option<usize>, dim: usize) -> Result<Matrix> {
        match self {
            Instrument::Projective { basis, .. } => {
                let x = check_outcome(basis, outcome)?;
                let p = basis.projector(x);
                Ok(kron(&p, &p.map(|z| z.conj())))
            }
            Instrument::Unmeasured => max_entangled_link(dim),
        }
    }

    /// Dual on the final slot `S_n`: `Π_x`, or the identity when unmeasured.
    pub fn final_dual(&self, outcome: Option<usize>, dim: usize) -> Result<Matrix> {
        match self {
            Instrument::Projective { basis, .. } => Ok(basis.projector(check_outcome(basis, outcome)?)),
            Instrument::Unmeasured => Ok(identity(dim)),
        }
    }
}

fn check_outcome(basis: &Basis, outcome: Option<usize>) -> Result<usize> {
    match outcome {
        Some(x) if x < basis.dim() => Ok(x),
        Some(x) => Err(Error::Usage(format!(
            "outcome index {x} out of range for {} outcomes",
            basis.dim()
        ))),
        None => Err(Error::Usage("missing outcome for a measured slot".into())),
    }
}

/// One instrument per measurement time, earliest first.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    instruments: Vec<Instrument>,
}

impl MeasurementPlan {
    pub fn new(instruments: Vec<Instrument>) -> Result<Self> {
        if instruments.is_empty() {
            return Err(Error::Usage("empty measurement plan".into()));
        }
        Ok(Self { instruments })
    }

    pub fn instruments(&self) -> &[Instrument] {
        &self.instruments
    }

    pub fn len(&self) -> usize {
        self.instruments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instruments.is_empty()
    }

    /// Instrument at 1-based time `t`.
    pub fn at(&self, t: usize) -> &Instrument {
        &self.instruments[t - 1]
    }

    /// Copy with the instrument at 1-based time `t` replaced.
    pub fn with(&self, t: usize, inst: Instrument) -> Self {
        let mut out = self.clone();
        out.instruments[t - 1] = inst;
        out
    }

    /// 1-based times that carry a projective measurement.
    pub fn measured_times(&self) -> Vec<usize> {
        (1..=self.len()).filter(|&t| self.at(t).is_measured()).collect()
    }
}

/// Dual operator for `plan` and one outcome index per measured slot, over
/// the canonical slots of times `1..=plan.len()`.
pub fn n_point_operation(plan: &MeasurementPlan, outcomes: &[usize], dim: usize) -> Result<LabeledOperator> {
    let measured = plan.measured_times().len();
    if outcomes.len() != measured {
        return Err(Error::Usage(format!(
            "{} outcomes supplied for {measured} measured slots",
            outcomes.len()
        )));
    }
    let n = plan.len();
    let mut it = outcomes.iter().copied();
    let mut dual = LabeledOperator::scalar(c(1.0, 0.0));
    for t in 1..=n {
        let inst = plan.at(t);
        let x = if inst.is_measured() { it.next() } else { None };
        let piece = if t < n {
            LabeledOperator::on(
                &[(SlotLabel::System(t), dim), (SlotLabel::Ancilla(t), dim)],
                inst.pair_dual(x, dim)?,
            )?
        } else {
            LabeledOperator::single(SlotLabel::System(t), inst.final_dual(x, dim)?)?
        };
        dual = dual.tensor(&piece)?;
    }
    Ok(dual)
}

/// `(D|S)` for a full contraction; the raw complex value.
pub fn contract_full(dual: &LabeledOperator, ps: &ProcessState) -> Result<crate::linalg::C64> {
    dual.inner(ps.operator())
}

/// Contracts `(instrument, outcome)` duals onto the earliest time slots of
/// `ps`. Entries are `(time, instrument, outcome)`; times must be
/// `first, first+1, ...` and must stop before the last time.
pub fn reduce_process_state(
    ps: &ProcessState,
    prefix: &[(usize, &Instrument, Option<usize>)],
) -> Result<ProcessState> {
    let mut first = ps.first_time();
    let mut op = ps.operator().clone();
    for &(t, inst, x) in prefix {
        if t != first {
            return Err(Error::Usage(format!(
                "time {t} is not the earliest remaining slot (expected {first})"
            )));
        }
        if t >= ps.last_time() {
            return Err(Error::Usage(
                "a prefix cannot consume the final time slot".into(),
            ));
        }
        let dual = inst.pair_dual(x, ps.dim())?;
        op = op.contract(&[SlotLabel::System(t), SlotLabel::Ancilla(t)], &dual)?;
        first += 1;
    }
    ProcessState::from_operator(op, first, ps.last_time())
}

/// `ρ0^{S1} ⊗ C_1^{A1 S2} ⊗ ... ⊗ C_{n-1}^{A_{n-1} S_n}` with each `C_j` a
/// channel's Choi state (input leg first).
pub fn markov_product_state(choi_steps: &[Matrix], rho0: &Matrix) -> Result<ProcessState> {
    markov_product_state_with_tolerance(choi_steps, rho0, DEFAULT_TOL)
}

pub fn markov_product_state_with_tolerance(
    choi_steps: &[Matrix],
    rho0: &Matrix,
    tol: f64,
) -> Result<ProcessState> {
    let d = require_square(rho0, "rho0")?;
    validate_density(rho0, tol, "rho0")?;
    if choi_steps.is_empty() {
        return Err(Error::Domain("at least one step is required".into()));
    }
    let mut op = LabeledOperator::single(SlotLabel::System(1), rho0.clone())?;
    for (i, ch) in choi_steps.iter().enumerate() {
        let j = i + 1;
        if ch.shape() != (d * d, d * d) {
            return Err(Error::Shape(format!(
                "Choi step {j} is {:?}, expected {n}x{n}",
                ch.shape(),
                n = d * d
            )));
        }
        if !is_hermitian(ch, tol) || min_eigenvalue(ch) < -tol {
            return Err(Error::Domain(format!("Choi step {j} is not positive semidefinite")));
        }
        let step = LabeledOperator::on(
            &[(SlotLabel::Ancilla(j), d), (SlotLabel::System(j + 1), d)],
            ch.clone(),
        )?;
        let marginal = step.trace_out(&[SlotLabel::System(j + 1)])?;
        if crate::linalg::frobenius(&(marginal.matrix() - identity(d))) > tol {
            return Err(Error::Domain(format!(
                "Choi step {j} is not trace preserving (input marginal is not the identity)"
            )));
        }
        op = op.tensor(&step)?;
    }
    ProcessState::from_operator(op, 1, choi_steps.len() + 1)
}

/// Output on `S_n` of the process tensor fed with operations `ops[j]`
/// (Choi states on `(S_j in, A_j out)`, input first) at times `1..n-1`.
/// Unnormalized when the operations are trace decreasing.
pub fn process_tensor_output(ps: &ProcessState, ops: &[Matrix]) -> Result<Matrix> {
    if ps.first_time() != 1 || ops.len() + 1 != ps.n_times() {
        return Err(Error::Usage(format!(
            "{} operations for a {}-time process state",
            ops.len(),
            ps.n_times()
        )));
    }
    let mut op = ps.operator().clone();
    for (i, choi) in ops.iter().enumerate() {
        let j = i + 1;
        op = op.contract(
            &[SlotLabel::System(j), SlotLabel::Ancilla(j)],
            &choi.map(|z| z.conj()),
        )?;
    }
    Ok(op.into_matrix())
}

/// Trace of the fully unmeasured contraction; 1 for any valid process state.
pub fn total_probability(ps: &ProcessState) -> Result<f64> {
    let plan = MeasurementPlan::new(vec![Instrument::Unmeasured; ps.n_times()])?;
    let mut op = ps.operator().clone();
    for j in ps.first_time()..ps.last_time() {
        op = op.contract(
            &[SlotLabel::System(j), SlotLabel::Ancilla(j)],
            &plan.at(1).pair_dual(None, ps.dim())?,
        )?;
    }
    Ok(trace(op.matrix()).re)
}
