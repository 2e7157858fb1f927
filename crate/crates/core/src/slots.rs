//! Operators on labeled tensor factors.
//!
//! A [`LabeledOperator`] is a square matrix whose row and column index is the
//! mixed-radix composition of its slots, first slot most significant (the
//! usual Kronecker convention). Contraction against a dual operator follows
//! the operator-state inner product `(D|X) = Tr(D^† X)`, applied only on the
//! named slots.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, identity, Basis, Matrix, C64};

/// Name of one tensor factor.
///
/// `System(j)` is the state handed to the `j`-th intervention, `Ancilla(j)`
/// is the link partner that carries the `j`-th intervention's output back
/// into the process, and `Environment` is the (uncontracted) bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotLabel {
    System(usize),
    Ancilla(usize),
    Environment,
}

impl fmt::Display for SlotLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotLabel::System(j) => write!(f, "S{j}"),
            SlotLabel::Ancilla(j) => write!(f, "A{j}"),
            SlotLabel::Environment => f.write_str("E"),
        }
    }
}

impl FromStr for SlotLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "E" {
            return Ok(SlotLabel::Environment);
        }
        let bad = || Error::Label(format!("cannot parse slot label `{s}`"));
        let (head, tail) = s.split_at(s.len().min(1));
        let j: usize = tail.parse().map_err(|_| bad())?;
        match head {
            "S" => Ok(SlotLabel::System(j)),
            "A" => Ok(SlotLabel::Ancilla(j)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for SlotLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SlotLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub label: SlotLabel,
    pub dim: usize,
}

impl Slot {
    pub fn new(label: SlotLabel, dim: usize) -> Self {
        Self { label, dim }
    }
}

/// Ordered, uniquely labeled tensor factors.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SlotSystem {
    slots: Vec<Slot>,
}

impl SlotSystem {
    pub fn new(slots: Vec<Slot>) -> Result<Self> {
        for (i, s) in slots.iter().enumerate() {
            if s.dim == 0 {
                return Err(Error::Shape(format!("slot {} has dimension 0", s.label)));
            }
            if slots[..i].iter().any(|t| t.label == s.label) {
                return Err(Error::Label(format!("duplicate slot label {}", s.label)));
            }
        }
        Ok(Self { slots })
    }

    pub fn empty() -> Self {
        Self { slots: Vec::new() }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn labels(&self) -> Vec<SlotLabel> {
        self.slots.iter().map(|s| s.label).collect()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.slots.iter().map(|s| s.dim).product()
    }

    pub fn position(&self, label: SlotLabel) -> Option<usize> {
        self.slots.iter().position(|s| s.label == label)
    }

    pub fn contains(&self, label: SlotLabel) -> bool {
        self.position(label).is_some()
    }

    pub fn dim_of(&self, label: SlotLabel) -> Result<usize> {
        self.position(label)
            .map(|p| self.slots[p].dim)
            .ok_or_else(|| Error::Label(format!("unknown slot {label}")))
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.slots.len()];
        for k in (0..self.slots.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.slots[k + 1].dim;
        }
        strides
    }

    fn positions(&self, labels: &[SlotLabel]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for &l in labels {
            let p = self
                .position(l)
                .ok_or_else(|| Error::Label(format!("unknown slot {l}")))?;
            if out.contains(&p) {
                return Err(Error::Label(format!("slot {l} named twice")));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Flat offsets of every joint index of the slots at `positions`, in
    /// mixed-radix order of `positions`.
    fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut offs = vec![0usize];
        for &p in positions {
            let d = self.slots[p].dim;
            let mut next = Vec::with_capacity(offs.len() * d);
            for &o in &offs {
                for i in 0..d {
                    next.push(o + i * strides[p]);
                }
            }
            offs = next;
        }
        offs
    }

    fn complement(&self, positions: &[usize]) -> Vec<usize> {
        (0..self.slots.len()).filter(|p| !positions.contains(p)).collect()
    }

    fn select(&self, positions: &[usize]) -> SlotSystem {
        SlotSystem {
            slots: positions.iter().map(|&p| self.slots[p]).collect(),
        }
    }
}

/// A square operator over a [`SlotSystem`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledOperator {
    system: SlotSystem,
    matrix: Matrix,
}

impl LabeledOperator {
    pub fn new(system: SlotSystem, matrix: Matrix) -> Result<Self> {
        let n = system.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, slots require {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { system, matrix })
    }

    pub fn single(label: SlotLabel, matrix: Matrix) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(SlotSystem::new(vec![Slot::new(label, d)])?, matrix)
    }

    /// Operator on an ordered list of slots with the given dimensions.
    pub fn on(slots: &[(SlotLabel, usize)], matrix: Matrix) -> Result<Self> {
        let system = SlotSystem::new(slots.iter().map(|&(l, d)| Slot::new(l, d)).collect())?;
        Self::new(system, matrix)
    }

    pub fn scalar(z: C64) -> Self {
        Self {
            system: SlotSystem::empty(),
            matrix: Matrix::from_element(1, 1, z),
        }
    }

    pub fn system(&self) -> &SlotSystem {
        &self.system
    }

    pub fn labels(&self) -> Vec<SlotLabel> {
        self.system.labels()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn dim_of(&self, label: SlotLabel) -> Result<usize> {
        self.system.dim_of(label)
    }

    /// The single entry of a slot-free operator.
    pub fn as_scalar(&self) -> Option<C64> {
        self.system.is_empty().then(|| self.matrix[(0, 0)])
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diagonal().iter().sum()
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            system: self.system.clone(),
            matrix: self.matrix.map(|m| m * z),
        }
    }

    /// Kronecker product; slots of `other` are appended after those of `self`.
    pub fn tensor(&self, other: &LabeledOperator) -> Result<Self> {
        if let Some(clash) = other.system.slots.iter().find(|s| self.system.contains(s.label)) {
            return Err(Error::Label(format!("slot {} present on both sides", clash.label)));
        }
        let mut slots = self.system.slots.clone();
        slots.extend_from_slice(&other.system.slots);
        Ok(Self {
            system: SlotSystem { slots },
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// Reorders slots; `order` must be a permutation of the current labels.
    pub fn permuted(&self, order: &[SlotLabel]) -> Result<Self> {
        if order.len() != self.system.len() {
            return Err(Error::Label(format!(
                "permutation names {} slots, operator has {}",
                order.len(),
                self.system.len()
            )));
        }
        let positions = self.system.positions(order)?;
        let map = self.system.offsets(&positions);
        let n = map.len();
        let matrix = Matrix::from_fn(n, n, |i, j| self.matrix[(map[i], map[j])]);
        Ok(Self {
            system: self.system.select(&positions),
            matrix,
        })
    }

    /// Removes `labels` by contracting with `(dual|` on them:
    /// `Tr_labels[(dual^† ⊗ I) X]`. The dual's index order follows `labels`.
    pub fn contract(&self, labels: &[SlotLabel], dual: &Matrix) -> Result<Self> {
        let positions = self.system.positions(labels)?;
        let inner = self.system.offsets(&positions);
        if dual.nrows() != inner.len() || dual.ncols() != inner.len() {
            return Err(Error::Shape(format!(
                "dual is {}x{}, slots {:?} require {n}x{n}",
                dual.nrows(),
                dual.ncols(),
                labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                n = inner.len()
            )));
        }
        let rest = self.system.complement(&positions);
        let outer = self.system.offsets(&rest);
        let nonzero: Vec<(usize, usize, C64)> = (0..inner.len())
            .flat_map(|a| (0..inner.len()).map(move |b| (a, b)))
            .filter_map(|(a, b)| {
                let z = dual[(a, b)];
                (z != c(0.0, 0.0)).then(|| (inner[a], inner[b], z.conj()))
            })
            .collect();
        let m = outer.len();
        let matrix = Matrix::from_fn(m, m, |i, j| {
            let (ri, rj) = (outer[i], outer[j]);
            nonzero
                .iter()
                .map(|&(a, b, w)| w * self.matrix[(ri + a, rj + b)])
                .sum()
        });
        Ok(Self {
            system: self.system.select(&rest),
            matrix,
        })
    }

    /// Contraction of one slot with the identity, i.e. the partial trace.
    pub fn trace_out(&self, labels: &[SlotLabel]) -> Result<Self> {
        let positions = self.system.positions(labels)?;
        let d: usize = positions.iter().map(|&p| self.system.slots[p].dim).product();
        self.contract(labels, &identity(d))
    }

    /// Partial trace onto `labels`, returned in the order given.
    pub fn reduced(&self, labels: &[SlotLabel]) -> Result<Self> {
        let keep = self.system.positions(labels)?;
        let drop: Vec<SlotLabel> = self
            .system
            .complement(&keep)
            .into_iter()
            .map(|p| self.system.slots[p].label)
            .collect();
        self.trace_out(&drop)?.permuted(labels)
    }

    /// `op` acting on `labels` (in that order), identity elsewhere, as a
    /// full matrix in this operator's slot order.
    pub fn embed(&self, labels: &[SlotLabel], op: &Matrix) -> Result<Matrix> {
        let positions = self.system.positions(labels)?;
        let inner = self.system.offsets(&positions);
        if op.nrows() != inner.len() || op.ncols() != inner.len() {
            return Err(Error::Shape(format!(
                "operator is {}x{}, slots require {n}x{n}",
                op.nrows(),
                op.ncols(),
                n = inner.len()
            )));
        }
        let outer = self.system.offsets(&self.system.complement(&positions));
        let n = self.system.total_dim();
        let mut full = Matrix::zeros(n, n);
        for &r in &outer {
            for (a, &ia) in inner.iter().enumerate() {
                for (b, &ib) in inner.iter().enumerate() {
                    full[(r + ia, r + ib)] = op[(a, b)];
                }
            }
        }
        Ok(full)
    }

    /// `(left ⊗ I) X (right ⊗ I)^†` with both factors on `labels`, applied
    /// block by block rather than through full-size embeddings.
    fn sandwich(&self, labels: &[SlotLabel], left: &Matrix, right: &Matrix) -> Result<Matrix> {
        let positions = self.system.positions(labels)?;
        let inner = self.system.offsets(&positions);
        let m = inner.len();
        for op in [left, right] {
            if op.nrows() != m || op.ncols() != m {
                return Err(Error::Shape(format!(
                    "operator is {}x{}, slots require {m}x{m}",
                    op.nrows(),
                    op.ncols()
                )));
            }
        }
        let outer = self.system.offsets(&self.system.complement(&positions));
        let n = self.system.total_dim();
        let mut rows = Matrix::zeros(n, n);
        for &r in &outer {
            let block = Matrix::from_fn(m, n, |a, j| self.matrix[(r + inner[a], j)]);
            let out = left * block;
            for (a, &ia) in inner.iter().enumerate() {
                rows.row_mut(r + ia).copy_from(&out.row(a));
            }
        }
        let right_adj = right.adjoint();
        let mut full = Matrix::zeros(n, n);
        for &r in &outer {
            let block = Matrix::from_fn(n, m, |i, b| rows[(i, r + inner[b])]);
            let out = block * &right_adj;
            for (b, &ib) in inner.iter().enumerate() {
                full.column_mut(r + ib).copy_from(&out.column(b));
            }
        }
        Ok(full)
    }

    /// `(op ⊗ I) X (op ⊗ I)^†` with `op` on `labels`.
    pub fn conjugated_by(&self, labels: &[SlotLabel], op: &Matrix) -> Result<Self> {
        Ok(Self {
            system: self.system.clone(),
            matrix: self.sandwich(labels, op, op)?,
        })
    }

    /// Fully dephases slot `label` in `basis`.
    pub fn dephased(&self, label: SlotLabel, basis: &Basis) -> Result<Self> {
        let d = self.system.dim_of(label)?;
        if basis.dim() != d {
            return Err(Error::Shape(format!(
                "basis has dimension {}, slot {label} has {d}",
                basis.dim()
            )));
        }
        let n = self.system.total_dim();
        let mut acc = Matrix::zeros(n, n);
        for x in 0..d {
            let p = basis.projector(x);
            acc += self.sandwich(&[label], &p, &p)?;
        }
        Ok(Self {
            system: self.system.clone(),
            matrix: acc,
        })
    }

    /// Full contraction `(self|other) = Tr(self^† other)`; `other` is
    /// brought into this operator's slot order first.
    pub fn inner(&self, other: &LabeledOperator) -> Result<C64> {
        let other = other.permuted(&self.labels())?;
        if other.system != self.system {
            return Err(Error::Shape("slot dimensions differ".into()));
        }
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn add(&self, other: &LabeledOperator) -> Result<Self> {
        let other = other.permuted(&self.labels())?;
        if other.system != self.system {
            return Err(Error::Shape("slot dimensions differ".into()));
        }
        Ok(Self {
            system: self.system.clone(),
            matrix: &self.matrix + other.matrix,
        })
    }

    pub fn sub(&self, other: &LabeledOperator) -> Result<Self> {
        self.add(&other.scale(c(-1.0, 0.0)))
    }
}
