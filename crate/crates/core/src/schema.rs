//! JSON formats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, validate_density, Basis, Matrix, Vector};
use crate::process::{Evolution, Instrument, MeasurementPlan, Scenario};
use crate::scenarios::{build_two_qubit_scenario, rotated_measurement_plan, InitialState, RotatedBasis, TwoQubitModel};
use crate::structure::ConditionBases;

/// Row-major matrix as nested rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<[f64; 2]>>);

impl From<&Matrix> for MatrixJson {
    fn from(m: &Matrix) -> Self {
        MatrixJson(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Option<Matrix> {
        let rows = self.0.len();
        let cols = self.0.first()?.len();
        if cols == 0 || self.0.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Matrix::from_fn(rows, cols, |i, j| {
            let [re, im] = self.0[i][j];
            c(re, im)
        }))
    }
}

/// Float with 12 significant digits, shortest form.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.11e}", x);
    let v: f64 = s.parse().expect("formatted float parses");
    format!("{v}")
}

/// Ket as a list of `[re, im]` amplitudes.
pub type VectorJson = Vec<[f64; 2]>;

fn vector_json(v: &Vector) -> VectorJson {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Basis as a list of kets.
pub fn basis_json(b: &Basis) -> Vec<VectorJson> {
    b.vectors().iter().map(vector_json).collect()
}

/// Either a list of step unitaries or a Hamiltonian with step durations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EvolutionJson {
    Unitaries(Vec<MatrixJson>),
    Hamiltonian {
        hamiltonian: MatrixJson,
        durations: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnmeasuredTag {
    Unmeasured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectiveJson {
    pub basis: Vec<VectorJson>,
    /// Defaults to `[1, -1]` for qubits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstrumentJson {
    Unmeasured(UnmeasuredTag),
    Projective(ProjectiveJson),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateJson {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub c_re: f64,
    #[serde(default)]
    pub c_im: f64,
}

/// Shorthand for the two-qubit dephasing-style model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitJson {
    pub omega: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub rho0: InitialStateJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
    /// Rotation angle of the default measurement plan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

/// Bases used by the classifier for times 1 and 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasesJson {
    pub first: Vec<VectorJson>,
    pub second: Vec<VectorJson>,
}

/// On-disk scenario. Either the general fields or `two_qubit_model` are
/// given, not both.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_system: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_env: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0_system: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0_env: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolutions: Option<EvolutionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<InstrumentJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_qubit_model: Option<TwoQubitJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bases: Option<BasesJson>,
}

/// Where a loaded scenario came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    General,
    TwoQubit {
        model: TwoQubitModel,
        k: Option<i64>,
        theta: Option<f64>,
    },
}

/// Validated contents of a scenario file.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub source: Source,
    /// Plan as written in the file.
    pub plan: Option<MeasurementPlan>,
    pub bases: Option<ConditionBases>,
}

impl LoadedScenario {
    /// The file's plan, or the rotated-basis plan of the two-qubit shorthand.
    pub fn plan(&self) -> Result<MeasurementPlan> {
        if let Some(p) = &self.plan {
            return Ok(p.clone());
        }
        match &self.source {
            Source::TwoQubit { k, theta: Some(theta), .. } => {
                rotated_measurement_plan(*theta, k.unwrap_or(1)).map_err(|e| Error::schema("two_qubit_model.theta", e.to_string()))
            }
            Source::TwoQubit { .. } => Err(Error::schema(
                "plan",
                "missing; give `plan` or `two_qubit_model.theta`",
            )),
            Source::General => Err(Error::schema("plan", "missing")),
        }
    }

    /// Bases for structural classification: explicit `bases`, else the
    /// plan's time-1 and time-2 bases, else computational.
    pub fn classification_bases(&self) -> ConditionBases {
        if let Some(b) = &self.bases {
            return b.clone();
        }
        let d = self.scenario.dim_system();
        let pick = |t: usize| {
            self.plan()
                .ok()
                .filter(|p| p.len() >= t)
                .and_then(|p| p.at(t).basis().cloned())
                .unwrap_or_else(|| Basis::computational(d))
        };
        ConditionBases::new(pick(1), pick(2))
    }

    pub fn to_file(&self) -> ScenarioFile {
        let plan = self.plan.as_ref().map(|p| {
            p.instruments()
                .iter()
                .map(|i| match i {
                    Instrument::Unmeasured => InstrumentJson::Unmeasured(UnmeasuredTag::Unmeasured),
                    Instrument::Projective { basis, values } => InstrumentJson::Projective(ProjectiveJson {
                        basis: basis_json(basis),
                        values: Some(values.clone()),
                    }),
                })
                .collect()
        });
        let bases = self.bases.as_ref().map(|b| BasesJson {
            first: basis_json(&b.first),
            second: basis_json(&b.second),
        });
        match &self.source {
            Source::TwoQubit { model, k, theta } => ScenarioFile {
                plan,
                bases,
                two_qubit_model: Some(TwoQubitJson {
                    omega: model.omega,
                    tau1: model.tau1,
                    tau2: model.tau2,
                    rho0: InitialStateJson {
                        a: model.rho0.a,
                        b: model.rho0.b,
                        c_re: model.rho0.c.re,
                        c_im: model.rho0.c.im,
                    },
                    k: *k,
                    theta: *theta,
                }),
                ..Default::default()
            },
            Source::General => {
                let s = &self.scenario;
                let evolutions = match s.evolution() {
                    Evolution::Unitaries(us) => EvolutionJson::Unitaries(us.iter().map(MatrixJson::from).collect()),
                    Evolution::Hamiltonian { hamiltonian, durations } => EvolutionJson::Hamiltonian {
                        hamiltonian: hamiltonian.into(),
                        durations: durations.clone(),
                    },
                };
                ScenarioFile {
                    dim_system: Some(s.dim_system()),
                    dim_env: Some(s.dim_env()),
                    rho0_system: Some(s.rho0_system().into()),
                    rho0_env: Some(s.rho0_env().into()),
                    evolutions: Some(evolutions),
                    plan,
                    two_qubit_model: None,
                    bases,
                }
            }
        }
    }
}

fn parse_matrix(m: &MatrixJson, path: &str) -> Result<Matrix> {
    if m.0.is_empty() {
        return Err(Error::schema(path, "matrix has no rows"));
    }
    let cols = m.0[0].len();
    if cols == 0 {
        return Err(Error::schema(format!("{path}[0]"), "row is empty"));
    }
    if let Some(i) = m.0.iter().position(|r| r.len() != cols) {
        return Err(Error::schema(
            format!("{path}[{i}]"),
            format!("row has {} entries, expected {cols}", m.0[i].len()),
        ));
    }
    if m.0.len() != cols {
        return Err(Error::schema(path, format!("matrix is {}x{cols}, expected square", m.0.len())));
    }
    if m.0.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::schema(path, "non-finite entry"));
    }
    Ok(m.to_matrix().expect("checked rectangular and non-empty"))
}

fn parse_basis(vs: &[VectorJson], dim: usize, path: &str) -> Result<Basis> {
    if vs.len() != dim {
        return Err(Error::schema(path, format!("{} vectors, expected {dim}", vs.len())));
    }
    let mut out = Vec::with_capacity(dim);
    for (i, v) in vs.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::schema(
                format!("{path}[{i}]"),
                format!("vector has {} amplitudes, expected {dim}", v.len()),
            ));
        }
        out.push(Vector::from_iterator(dim, v.iter().map(|&[re, im]| c(re, im))));
    }
    Basis::new(out).map_err(|e| Error::schema(path, e.to_string()))
}

fn require<'a, T>(x: &'a Option<T>, path: &str) -> Result<&'a T> {
    x.as_ref().ok_or_else(|| Error::schema(path, "missing"))
}

impl ScenarioFile {
    /// Parses JSON text; type errors carry the path of the offending field.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::schema(path, e.into_inner().to_string())
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    /// Validates every field and builds the internal model.
    pub fn load(&self, tol: f64) -> Result<LoadedScenario> {
        let (scenario, source) = match &self.two_qubit_model {
            Some(m) => {
                for (set, name) in [
                    (self.dim_system.is_some(), "dim_system"),
                    (self.dim_env.is_some(), "dim_env"),
                    (self.rho0_system.is_some(), "rho0_system"),
                    (self.rho0_env.is_some(), "rho0_env"),
                    (self.evolutions.is_some(), "evolutions"),
                ] {
                    if set {
                        return Err(Error::schema(name, "not allowed together with two_qubit_model"));
                    }
                }
                let r = m.rho0;
                let rho0 = InitialState::with_tolerance(r.a, r.b, c(r.c_re, r.c_im), tol)
                    .map_err(|e| Error::schema("two_qubit_model.rho0", e.to_string()))?;
                let model = TwoQubitModel::new(m.omega, m.tau1, m.tau2, rho0)
                    .map_err(|e| Error::schema("two_qubit_model", e.to_string()))?;
                if let Some(theta) = m.theta {
                    RotatedBasis::new(theta).map_err(|e| Error::schema("two_qubit_model.theta", e.to_string()))?;
                }
                let s = build_two_qubit_scenario(&model).map_err(|e| Error::schema("two_qubit_model", e.to_string()))?;
                (
                    s,
                    Source::TwoQubit {
                        model,
                        k: m.k,
                        theta: m.theta,
                    },
                )
            }
            None => (self.load_general(tol)?, Source::General),
        };
        let d = scenario.dim_system();
        let plan = match &self.plan {
            None => None,
            Some(items) => {
                if items.len() != scenario.n_times() {
                    return Err(Error::schema(
                        "plan",
                        format!("{} instruments for {} measurement times", items.len(), scenario.n_times()),
                    ));
                }
                let mut insts = Vec::with_capacity(items.len());
                for (t, item) in items.iter().enumerate() {
                    let path = format!("plan[{t}]");
                    insts.push(match item {
                        InstrumentJson::Unmeasured(_) => Instrument::Unmeasured,
                        InstrumentJson::Projective(p) => {
                            let basis = parse_basis(&p.basis, d, &format!("{path}.basis"))?;
                            let values = match &p.values {
                                Some(v) => v.clone(),
                                None if d == 2 => vec![1.0, -1.0],
                                None => return Err(Error::schema(format!("{path}.values"), "required unless the system is a qubit")),
                            };
                            Instrument::projective(basis, values)
                                .map_err(|e| Error::schema(format!("{path}.values"), e.to_string()))?
                        }
                    });
                }
                Some(MeasurementPlan::new(insts).map_err(|e| Error::schema("plan", e.to_string()))?)
            }
        };
        let bases = match &self.bases {
            None => None,
            Some(b) => Some(ConditionBases::new(
                parse_basis(&b.first, d, "bases.first")?,
                parse_basis(&b.second, d, "bases.second")?,
            )),
        };
        Ok(LoadedScenario {
            scenario,
            source,
            plan,
            bases,
        })
    }

    fn load_general(&self, tol: f64) -> Result<Scenario> {
        let rho_s = parse_matrix(require(&self.rho0_system, "rho0_system")?, "rho0_system")?;
        let rho_e = parse_matrix(require(&self.rho0_env, "rho0_env")?, "rho0_env")?;
        for (given, m, name) in [
            (self.dim_system, &rho_s, "dim_system"),
            (self.dim_env, &rho_e, "dim_env"),
        ] {
            if let Some(d) = given {
                if d != m.nrows() {
                    return Err(Error::schema(name, format!("{d} does not match the {}x{} state", m.nrows(), m.nrows())));
                }
            }
        }
        validate_density(&rho_s, tol, "rho0_system").map_err(|e| Error::schema("rho0_system", e.to_string()))?;
        validate_density(&rho_e, tol, "rho0_env").map_err(|e| Error::schema("rho0_env", e.to_string()))?;
        let n = rho_s.nrows() * rho_e.nrows();
        let evolution = match require(&self.evolutions, "evolutions")? {
            EvolutionJson::Unitaries(us) => Evolution::Unitaries(
                us.iter()
                    .enumerate()
                    .map(|(j, u)| parse_matrix(u, &format!("evolutions[{j}]")))
                    .collect::<Result<_>>()?,
            ),
            EvolutionJson::Hamiltonian { hamiltonian, durations } => {
                if let Some(j) = durations.iter().position(|t| !t.is_finite()) {
                    return Err(Error::schema(format!("evolutions.durations[{j}]"), "non-finite duration"));
                }
                Evolution::Hamiltonian {
                    hamiltonian: parse_matrix(hamiltonian, "evolutions.hamiltonian")?,
                    durations: durations.clone(),
                }
            }
        };
        match &evolution {
            Evolution::Unitaries(us) => {
                for (j, u) in us.iter().enumerate() {
                    if u.nrows() != n {
                        return Err(Error::schema(format!("evolutions[{j}]"), format!("is {0}x{0}, expected {n}x{n}", u.nrows())));
                    }
                }
            }
            Evolution::Hamiltonian { hamiltonian, .. } => {
                if hamiltonian.nrows() != n {
                    return Err(Error::schema(
                        "evolutions.hamiltonian",
                        format!("is {0}x{0}, expected {n}x{n}", hamiltonian.nrows()),
                    ));
                }
            }
        }
        Scenario::with_tolerance(rho_s, rho_e, evolution, tol).map_err(|e| Error::schema("evolutions", e.to_string()))
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario_file(path: &std::path::Path, tol: f64) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::schema("<file>", format!("{}: {e}", path.display())))?;
    ScenarioFile::from_json_str(&text)?.load(tol)
}
