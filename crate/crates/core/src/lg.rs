//! Probability tables, two-time correlators and the K3 Leggett-Garg
//! functional.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, identity, kron, Matrix};
use crate::process::{
    contract_full, n_point_operation, Instrument, MeasurementPlan, ProcessState, Scenario,
};
use crate::slots::LabeledOperator;

/// Largest imaginary part tolerated on a computed probability.
pub const IMAG_TOL: f64 = 1e-10;

/// Probabilities below this are treated as exact zeros when conditioning.
pub const ZERO_PROB: f64 = 1e-13;

/// One measured time of a table and the value attached to each outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub time: usize,
    pub values: Vec<f64>,
}

/// Dense joint distribution over the outcomes of the listed times,
/// row-major with the first axis most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    axes: Vec<Axis>,
    p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub outcomes: Vec<f64>,
    pub p: f64,
}

impl ProbabilityTable {
    pub fn new(axes: Vec<Axis>, p: Vec<f64>) -> Result<Self> {
        let n: usize = axes.iter().map(|a| a.values.len()).product();
        if p.len() != n {
            return Err(Error::Shape(format!(
                "{} probabilities for {n} outcome tuples",
                p.len()
            )));
        }
        Ok(Self { axes, p })
    }

    /// Builds a table by evaluating `f` on every outcome-index tuple.
    pub fn from_fn<F>(axes: Vec<Axis>, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Result<f64>,
    {
        let dims: Vec<usize> = axes.iter().map(|a| a.values.len()).collect();
        let p = tuples(&dims).iter().map(|t| f(t)).collect::<Result<_>>()?;
        Self::new(axes, p)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn times(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.time).collect()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(self.dims())
            .fold(0, |acc, (&i, d)| acc * d + i)
    }

    /// Probability at one outcome-index tuple.
    pub fn get(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.axes.len(), "index rank");
        self.p[self.flat(idx)]
    }

    /// `(outcome indices, probability)` in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        tuples(&self.dims()).into_iter().zip(self.p.iter().copied())
    }

    /// Outcome values for an index tuple.
    pub fn values_of(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.values[i])
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// All outcome values are ±1.
    pub fn is_dichotomic(&self) -> bool {
        self.axes
            .iter()
            .all(|a| a.values.iter().all(|v| (v.abs() - 1.0).abs() < 1e-12))
    }

    /// Sums over the outcomes of `time`.
    pub fn sum_out(&self, time: usize) -> Result<Self> {
        let k = self
            .axes
            .iter()
            .position(|a| a.time == time)
            .ok_or_else(|| Error::Usage(format!("table has no axis for time {time}")))?;
        let mut axes = self.axes.clone();
        axes.remove(k);
        let mut out = Self::new(axes, vec![0.0; self.p.len() / self.axes[k].values.len()])?;
        for (idx, p) in self.entries() {
            let mut rest = idx.clone();
            rest.remove(k);
            let f = out.flat(&rest);
            out.p[f] += p;
        }
        Ok(out)
    }

    pub fn to_entries(&self) -> Vec<TableEntry> {
        self.entries()
            .map(|(idx, p)| TableEntry {
                outcomes: self.values_of(&idx),
                p,
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_entries()).expect("table entries are plain data")
    }

    /// Header `x<t>...,p`, one row per outcome tuple.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for a in &self.axes {
            s.push_str(&format!("x{},", a.time));
        }
        s.push_str("p\n");
        for e in self.to_entries() {
            for v in e.outcomes {
                s.push_str(&format!("{v},"));
            }
            s.push_str(&format!("{}\n", crate::schema::fmt_sig(e.p)));
        }
        s
    }
}

fn tuples(dims: &[usize]) -> Vec<Vec<usize>> {
    dims.iter().fold(vec![Vec::new()], |acc, &d| {
        acc.into_iter()
            .flat_map(|t| {
                (0..d).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect()
    })
}

fn axes_for(plan: &MeasurementPlan) -> Vec<Axis> {
    plan.measured_times()
        .into_iter()
        .map(|t| Axis {
            time: t,
            values: plan.at(t).values().expect("measured").to_vec(),
        })
        .collect()
}

fn real_probability(z: crate::linalg::C64, what: impl FnOnce() -> String) -> Result<f64> {
    if z.im.abs() > IMAG_TOL {
        return Err(Error::Convention(format!(
            "probability {} has imaginary part {:e}",
            what(),
            z.im
        )));
    }
    Ok(z.re)
}

/// `P(x) = (D_x|S)` for every outcome tuple of the measured times of `plan`.
pub fn joint_probability(ps: &ProcessState, plan: &MeasurementPlan) -> Result<ProbabilityTable> {
    if ps.first_time() != 1 || plan.len() != ps.n_times() {
        return Err(Error::Usage(format!(
            "plan has {} times, process state covers {}..={}",
            plan.len(),
            ps.first_time(),
            ps.last_time()
        )));
    }
    ProbabilityTable::from_fn(axes_for(plan), |idx| {
        let dual = n_point_operation(plan, idx, ps.dim())?;
        real_probability(contract_full(&dual, ps)?, || format!("{idx:?}"))
    })
}

/// Born-rule simulation of the measurement sequence on `S ⊗ E`, one
/// branch per outcome tuple.
pub fn sequential_oracle(s: &Scenario, plan: &MeasurementPlan) -> Result<ProbabilityTable> {
    let n = s.n_times();
    if plan.len() != n {
        return Err(Error::Usage(format!(
            "plan has {} times, scenario has {n}",
            plan.len()
        )));
    }
    let de = s.dim_env();
    let id_e = identity(de);
    let rho0 = kron(s.rho0_system(), s.rho0_env());
    ProbabilityTable::from_fn(axes_for(plan), |idx| {
        let mut outcomes = idx.iter();
        let mut rho = rho0.clone();
        for t in 1..=n {
            if let Instrument::Projective { basis, .. } = plan.at(t) {
                let x = *outcomes.next().expect("one index per measured time");
                let p = kron(&basis.projector(x), &id_e);
                rho = &p * rho * &p;
            }
            if t < n {
                let u = &s.unitaries()[t - 1];
                rho = u * rho * u.adjoint();
            }
        }
        real_probability(rho.trace(), || format!("{idx:?}"))
    })
}

/// Two-time marginal for `pair` from `table`. Either the table already is
/// that marginal, or every dropped time comes after both times of the pair
/// (summing later outcomes is always allowed; earlier ones are not).
pub fn marginal_probability(table: &ProbabilityTable, pair: (usize, usize)) -> Result<ProbabilityTable> {
    let (i, j) = pair;
    if i >= j {
        return Err(Error::Usage(format!("pair ({i}, {j}) must be increasing")));
    }
    let times = table.times();
    if !times.contains(&i) || !times.contains(&j) {
        return Err(Error::Usage(format!(
            "table over times {times:?} has no ({i}, {j}) axes"
        )));
    }
    let mut out = table.clone();
    for &t in &times {
        if t == i || t == j {
            continue;
        }
        if t < j {
            return Err(Error::Usage(format!(
                "time {t} is measured before {j}; use a plan with that slot unmeasured"
            )));
        }
        out = out.sum_out(t)?;
    }
    Ok(out)
}

/// `C = Σ x_i x_j P(x_i, x_j)`.
pub fn correlation(table: &ProbabilityTable) -> Result<f64> {
    if table.axes().len() != 2 {
        return Err(Error::Usage(format!(
            "correlator needs a two-time table, got {} axes",
            table.axes().len()
        )));
    }
    Ok(table
        .entries()
        .map(|(idx, p)| table.values_of(&idx).iter().product::<f64>() * p)
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LGReport {
    #[serde(rename = "C12")]
    pub c12: f64,
    #[serde(rename = "C23")]
    pub c23: f64,
    #[serde(rename = "C13")]
    pub c13: f64,
    #[serde(rename = "K3")]
    pub k3: f64,
    pub lg_satisfied: bool,
    /// The two deviation sums, 2-3 term first; null unless requested.
    #[serde(default)]
    pub correction_terms: Option<[f64; 2]>,
    /// `1 - Σ (x2-x3)(x2-x1) P(x1,x2,x3)` on the process state itself.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub joint_term: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub deviation_norm: Option<f64>,
    /// False if any outcome value is not ±1; the bound K3 ≤ 1 then has no footing.
    pub dichotomic: bool,
}

impl LGReport {
    pub fn from_correlators(c12: f64, c23: f64, c13: f64, dichotomic: bool, tol: f64) -> Self {
        let k3 = c12 + c23 - c13;
        Self {
            c12,
            c23,
            c13,
            k3,
            lg_satisfied: k3 <= 1.0 + tol,
            correction_terms: None,
            joint_term: None,
            deviation_norm: None,
            dichotomic,
        }
    }

    /// `joint_term + c_23 - c_13` when the deviation split was computed.
    pub fn reconstructed_k3(&self) -> Option<f64> {
        let [a, b] = self.correction_terms?;
        Some(self.joint_term? + a - b)
    }
}

/// The plans behind the three correlators: the full three-time plan (its
/// table gives `P_{1,2}` by summing out time 3), and copies with time 1 or
/// time 2 left unmeasured.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwisePlans {
    pub full: MeasurementPlan,
    pub p23: MeasurementPlan,
    pub p13: MeasurementPlan,
}

impl PairwisePlans {
    pub fn from_plan(plan: &MeasurementPlan) -> Result<Self> {
        if plan.len() != 3 || plan.measured_times().len() != 3 {
            return Err(Error::Usage(
                "K3 needs a three-time plan measured at every time".into(),
            ));
        }
        Ok(Self {
            full: plan.clone(),
            p23: plan.with(1, Instrument::Unmeasured),
            p13: plan.with(2, Instrument::Unmeasured),
        })
    }
}

/// Tables produced while evaluating K3.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTables {
    pub p3: ProbabilityTable,
    pub p12: ProbabilityTable,
    pub p23: ProbabilityTable,
    pub p13: ProbabilityTable,
}

pub fn pairwise_tables(ps: &ProcessState, plans: &PairwisePlans) -> Result<PairwiseTables> {
    let p3 = joint_probability(ps, &plans.full)?;
    let p12 = marginal_probability(&p3, (1, 2))?;
    let p23 = joint_probability(ps, &plans.p23)?;
    let p13 = joint_probability(ps, &plans.p13)?;
    Ok(PairwiseTables { p3, p12, p23, p13 })
}

pub fn report_from_tables(t: &PairwiseTables, tol: f64) -> Result<LGReport> {
    let dichotomic = [&t.p12, &t.p23, &t.p13].iter().all(|x| x.is_dichotomic());
    Ok(LGReport::from_correlators(
        correlation(&t.p12)?,
        correlation(&t.p23)?,
        correlation(&t.p13)?,
        dichotomic,
        tol,
    ))
}

/// `K3 = C12 + C23 - C13`.
pub fn k3(ps: &ProcessState, plans: &PairwisePlans, tol: f64) -> Result<LGReport> {
    report_from_tables(&pairwise_tables(ps, plans)?, tol)
}

/// `1 - Σ (x2-x3)(x2-x1) P(x1,x2,x3)`.
pub fn joint_term(p3: &ProbabilityTable) -> f64 {
    1.0 - p3
        .entries()
        .map(|(idx, p)| {
            let x = p3.values_of(&idx);
            (x[1] - x[2]) * (x[1] - x[0]) * p
        })
        .sum::<f64>()
}

fn weighted_dual_sum(plan: &MeasurementPlan, delta: &LabeledOperator, dim: usize) -> Result<f64> {
    let axes = axes_for(plan);
    let table = ProbabilityTable::from_fn(axes, |idx| {
        let dual = n_point_operation(plan, idx, dim)?;
        real_probability(dual.inner(delta)?, || format!("deviation term {idx:?}"))
    })?;
    correlation(&table)
}

/// K3 split into the joint term on `ps` plus two sums over `ΔS = ps - qc`.
/// Exact whenever `qc` meets a pair of the quantum-classical conditions and
/// agrees with `ps` on every outcome-diagonal three-time contraction.
pub fn k3_with_deviation(
    ps: &ProcessState,
    qc: &ProcessState,
    plans: &PairwisePlans,
    tol: f64,
) -> Result<LGReport> {
    if ps.operator().system() != qc.operator().system() {
        return Err(Error::Shape("process state and QC state have different slots".into()));
    }
    let tables = pairwise_tables(ps, plans)?;
    let mut report = report_from_tables(&tables, tol)?;
    let delta = ps.operator().sub(qc.operator())?;
    let c23 = weighted_dual_sum(&plans.p23, &delta, ps.dim())?;
    let c13 = weighted_dual_sum(&plans.p13, &delta, ps.dim())?;
    report.correction_terms = Some([c23, c13]);
    report.joint_term = Some(joint_term(&tables.p3));
    report.deviation_norm = Some(frobenius(delta.matrix()));
    Ok(report)
}

fn require_times(t: &ProbabilityTable, times: &[usize], name: &str) -> Result<()> {
    if t.times() != times {
        return Err(Error::Usage(format!(
            "{name} must cover times {times:?}, got {:?}",
            t.times()
        )));
    }
    if !t.is_dichotomic() {
        return Err(Error::Usage(format!("{name} has non-dichotomic outcome values")));
    }
    Ok(())
}

/// `P_{2,3}` rebuilt from the Markov-order relation
/// `P_{2,3}(x2,x3) / P_2(x2) = P(x1,x2,x3) / P_{1,2}(x1,x2)`, averaging the
/// right-hand side over the `x1` with `P_{1,2} > 0`.
pub fn markov_order_p23(
    p3: &ProbabilityTable,
    p12: &ProbabilityTable,
    p2: &ProbabilityTable,
) -> Result<ProbabilityTable> {
    let d1 = p3.axes()[0].values.len();
    let axes = p3.axes()[1..].to_vec();
    ProbabilityTable::from_fn(axes, |idx| {
        let (x2, x3) = (idx[0], idx[1]);
        let mut acc = 0.0;
        let mut count = 0usize;
        for x1 in 0..d1 {
            let joint = p3.get(&[x1, x2, x3]);
            let cond = p12.get(&[x1, x2]);
            if cond > ZERO_PROB {
                acc += joint / cond;
                count += 1;
            } else if joint > ZERO_PROB {
                return Err(Error::DegenerateConditioning(format!(
                    "P12(x1={x1}, x2={x2}) = {cond:e} but P(x1={x1}, x2={x2}, x3={x3}) = {joint:e}"
                )));
            }
        }
        Ok(if count == 0 {
            0.0
        } else {
            p2.get(&[x2]) * acc / count as f64
        })
    })
}

/// K3 of a Markov-order-1 process from its three-time table: `P_{1,3}` is
/// the marginal over `x2` and `P_{2,3}` comes from [`markov_order_p23`].
pub fn markov_order_k3(
    p3: &ProbabilityTable,
    p12: &ProbabilityTable,
    p2: &ProbabilityTable,
) -> Result<f64> {
    require_times(p3, &[1, 2, 3], "three-time table")?;
    require_times(p12, &[1, 2], "P12")?;
    require_times(p2, &[2], "P2")?;
    let p23 = markov_order_p23(p3, p12, p2)?;
    let p13 = p3.sum_out(2)?;
    Ok(correlation(p12)? + correlation(&p23)? - correlation(&p13)?)
}

/// Largest `|P_{2,3}(x2,x3) P_{1,2}(x1,x2) - P_2(x2) P(x1,x2,x3)|`.
pub fn markov_order_relation_residual(
    p3: &ProbabilityTable,
    p12: &ProbabilityTable,
    p23: &ProbabilityTable,
    p2: &ProbabilityTable,
) -> f64 {
    p3.entries()
        .map(|(idx, p)| {
            let (x1, x2, x3) = (idx[0], idx[1], idx[2]);
            (p23.get(&[x2, x3]) * p12.get(&[x1, x2]) - p2.get(&[x2]) * p).abs()
        })
        .fold(0.0, f64::max)
}

/// Identity-padded operator for tests that need `(D|X)` on raw matrices.
pub fn dual_matrix(plan: &MeasurementPlan, outcomes: &[usize], dim: usize) -> Result<Matrix> {
    Ok(n_point_operation(plan, outcomes, dim)?.into_matrix())
}
