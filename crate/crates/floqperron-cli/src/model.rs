//! Model file schema: a TOML document with a top-level `kind` selecting one
//! of the three system classes. Unknown keys are rejected with the offending
//! path named, and parse → serialize → parse is the identity on the
//! in-memory model.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use floqperron::cellcycle::{
    AgeProfile, AgeTimeCoefficient, CellCycleModel, CellCyclePhase,
};
use floqperron::periodic::{PeriodicMatrix, PeriodicMatrixSeq, PeriodicScalar, ScalarForm};
use floqperron::NonnegMatrix;

pub const SCHEMA_VERSION: u32 = 1;

/// A parsed model of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Ode(PeriodicMatrix),
    Discrete(PeriodicMatrixSeq),
    Cellcycle(CellCycleModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Ode(_) => "ode",
            Model::Discrete(_) => "discrete",
            Model::Cellcycle(_) => "cellcycle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ScalarSpec {
    Constant {
        value: f64,
    },
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    Square {
        lo: f64,
        hi: f64,
        duty: f64,
        #[serde(default)]
        phase: f64,
    },
    Sampled {
        samples: Vec<f64>,
    },
}

impl ScalarSpec {
    fn build(&self, period: f64) -> floqperron::Result<PeriodicScalar> {
        match self {
            ScalarSpec::Constant { value } => PeriodicScalar::constant(period, *value),
            ScalarSpec::Cosine {
                mean,
                amplitude,
                phase,
            } => PeriodicScalar::cosine(period, *mean, *amplitude, *phase),
            ScalarSpec::Square { lo, hi, duty, phase } => {
                PeriodicScalar::square(period, *lo, *hi, *duty, *phase)
            }
            ScalarSpec::Sampled { samples } => PeriodicScalar::sampled(period, samples.clone()),
        }
    }

    fn from_scalar(s: &PeriodicScalar) -> Self {
        match s.form() {
            ScalarForm::Constant { value } => ScalarSpec::Constant { value: *value },
            ScalarForm::Cosine {
                mean,
                amplitude,
                phase,
            } => ScalarSpec::Cosine {
                mean: *mean,
                amplitude: *amplitude,
                phase: *phase,
            },
            ScalarForm::Square { lo, hi, duty, phase } => ScalarSpec::Square {
                lo: *lo,
                hi: *hi,
                duty: *duty,
                phase: *phase,
            },
            ScalarForm::Sampled { samples } => ScalarSpec::Sampled {
                samples: samples.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OdeEntrySpec {
    /// 1-based row index.
    row: usize,
    /// 1-based column index.
    col: usize,
    scalar: ScalarSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OdeFile {
    schema_version: u32,
    kind: String,
    period: f64,
    dim: usize,
    /// Entries not listed default to the zero constant.
    #[serde(default, rename = "entry")]
    entries: Vec<OdeEntrySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiscreteFile {
    schema_version: u32,
    kind: String,
    /// The period p; must equal the number of matrices.
    period: usize,
    dim: usize,
    /// `matrices[k][i][j]` is entry (i, j) of A(k).
    matrices: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum AgeSpec {
    Uniform(ScalarSpec),
    Gate { x_on: f64, level: ScalarSpec },
    SampledAges { x_step: f64, values: Vec<ScalarSpec> },
}

impl AgeSpec {
    fn build(&self, period: f64) -> floqperron::Result<AgeTimeCoefficient> {
        match self {
            AgeSpec::Uniform(s) => AgeTimeCoefficient::new(AgeProfile::Uniform(s.build(period)?)),
            AgeSpec::Gate { x_on, level } => AgeTimeCoefficient::new(AgeProfile::Gate {
                x_on: *x_on,
                level: level.build(period)?,
            }),
            AgeSpec::SampledAges { x_step, values } => {
                let values = values
                    .iter()
                    .map(|v| v.build(period))
                    .collect::<floqperron::Result<Vec<_>>>()?;
                AgeTimeCoefficient::new(AgeProfile::Sampled {
                    x_step: *x_step,
                    values,
                })
            }
        }
    }

    fn from_coefficient(c: &AgeTimeCoefficient) -> Self {
        match c.profile() {
            AgeProfile::Uniform(s) => AgeSpec::Uniform(ScalarSpec::from_scalar(s)),
            AgeProfile::Gate { x_on, level } => AgeSpec::Gate {
                x_on: *x_on,
                level: ScalarSpec::from_scalar(level),
            },
            AgeProfile::Sampled { x_step, values } => AgeSpec::SampledAges {
                x_step: *x_step,
                values: values.iter().map(ScalarSpec::from_scalar).collect(),
            },
        }
    }
}

fn default_apoptosis() -> AgeSpec {
    AgeSpec::Uniform(ScalarSpec::Constant { value: 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseSpec {
    transition: AgeSpec,
    #[serde(default = "default_apoptosis")]
    apoptosis: AgeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellcycleFile {
    schema_version: u32,
    kind: String,
    period: f64,
    phases: usize,
    x_max: f64,
    #[serde(rename = "phase")]
    phase_specs: Vec<PhaseSpec>,
}

#[derive(Debug, Deserialize)]
struct KindProbe {
    schema_version: Option<u32>,
    kind: Option<String>,
}

/// Parses a model document, validating the schema and every domain
/// invariant. Errors name the offending field or entry.
pub fn parse_model(text: &str) -> Result<Model> {
    let probe: KindProbe =
        toml::from_str(text).context("model file is not valid TOML")?;
    let version = probe
        .schema_version
        .ok_or_else(|| anyhow!("missing field `schema_version`"))?;
    if version != SCHEMA_VERSION {
        bail!("schema_version {version} is not supported (current: {SCHEMA_VERSION})");
    }
    let kind = probe.kind.ok_or_else(|| anyhow!("missing field `kind`"))?;
    match kind.as_str() {
        "ode" => build_ode(toml::from_str(text)?),
        "discrete" => build_discrete(toml::from_str(text)?),
        "cellcycle" => build_cellcycle(toml::from_str(text)?),
        other => bail!("unknown kind `{other}` (expected ode, discrete or cellcycle)"),
    }
}

fn build_ode(file: OdeFile) -> Result<Model> {
    if file.dim == 0 {
        bail!("`dim` must be ≥ 1");
    }
    let zero = PeriodicScalar::constant(file.period, 0.0)
        .map_err(|e| anyhow!("`period`: {e}"))?;
    let mut entries = vec![zero; file.dim * file.dim];
    for (k, e) in file.entries.iter().enumerate() {
        if e.row == 0 || e.row > file.dim || e.col == 0 || e.col > file.dim {
            bail!(
                "entry[{k}] (row={}, col={}): indices must lie in 1..={}",
                e.row,
                e.col,
                file.dim
            );
        }
        let scalar = e
            .scalar
            .build(file.period)
            .with_context(|| format!("entry[{k}] (row={}, col={})", e.row, e.col))?;
        if e.row != e.col && scalar.min_value() < 0.0 {
            bail!(
                "entry[{k}] (row={}, col={}): off-diagonal coefficient dips to {} < 0",
                e.row,
                e.col,
                scalar.min_value()
            );
        }
        entries[(e.row - 1) * file.dim + (e.col - 1)] = scalar;
    }
    let matrix = PeriodicMatrix::new(file.dim, entries)?;
    Ok(Model::Ode(matrix))
}

fn build_discrete(file: DiscreteFile) -> Result<Model> {
    if file.matrices.len() != file.period {
        bail!(
            "`period` is {} but {} matrices are listed",
            file.period,
            file.matrices.len()
        );
    }
    let mut mats = Vec::with_capacity(file.matrices.len());
    for (k, rows) in file.matrices.iter().enumerate() {
        if rows.len() != file.dim {
            bail!("matrices[{k}] has {} rows, expected {}", rows.len(), file.dim);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != file.dim {
                bail!(
                    "matrices[{k}] row {} has {} columns, expected {}",
                    i + 1,
                    row.len(),
                    file.dim
                );
            }
        }
        let m = NonnegMatrix::from_rows(rows).with_context(|| format!("matrices[{k}]"))?;
        mats.push(m);
    }
    Ok(Model::Discrete(PeriodicMatrixSeq::new(mats)?))
}

fn build_cellcycle(file: CellcycleFile) -> Result<Model> {
    if file.phase_specs.len() != file.phases {
        bail!(
            "`phases` is {} but {} phase blocks are listed",
            file.phases,
            file.phase_specs.len()
        );
    }
    let mut phases = Vec::with_capacity(file.phases);
    for (i, spec) in file.phase_specs.iter().enumerate() {
        let transition = spec
            .transition
            .build(file.period)
            .with_context(|| format!("phase[{}].transition", i + 1))?;
        let apoptosis = spec
            .apoptosis
            .build(file.period)
            .with_context(|| format!("phase[{}].apoptosis", i + 1))?;
        phases.push(CellCyclePhase {
            apoptosis,
            transition,
        });
    }
    Ok(Model::Cellcycle(CellCycleModel::new(
        file.period,
        file.x_max,
        phases,
    )?))
}

/// Serializes a model back to its canonical TOML document.
pub fn model_to_toml(model: &Model) -> Result<String> {
    let text = match model {
        Model::Ode(a) => {
            let mut entries = Vec::new();
            for i in 0..a.dim() {
                for j in 0..a.dim() {
                    let s = a.entry(i, j);
                    let is_zero = matches!(s.form(), ScalarForm::Constant { value } if *value == 0.0);
                    if !is_zero {
                        entries.push(OdeEntrySpec {
                            row: i + 1,
                            col: j + 1,
                            scalar: ScalarSpec::from_scalar(s),
                        });
                    }
                }
            }
            toml::to_string_pretty(&OdeFile {
                schema_version: SCHEMA_VERSION,
                kind: "ode".into(),
                period: a.period(),
                dim: a.dim(),
                entries,
            })?
        }
        Model::Discrete(seq) => {
            let matrices = seq
                .matrices()
                .iter()
                .map(|m| {
                    (0..m.dim())
                        .map(|i| (0..m.dim()).map(|j| m.at(i, j)).collect())
                        .collect()
                })
                .collect();
            toml::to_string_pretty(&DiscreteFile {
                schema_version: SCHEMA_VERSION,
                kind: "discrete".into(),
                period: seq.len(),
                dim: seq.dim(),
                matrices,
            })?
        }
        Model::Cellcycle(m) => {
            let phase_specs = m
                .phases()
                .iter()
                .map(|p| PhaseSpec {
                    transition: AgeSpec::from_coefficient(&p.transition),
                    apoptosis: AgeSpec::from_coefficient(&p.apoptosis),
                })
                .collect();
            toml::to_string_pretty(&CellcycleFile {
                schema_version: SCHEMA_VERSION,
                kind: "cellcycle".into(),
                period: m.period(),
                phases: m.phase_count(),
                x_max: m.x_max(),
                phase_specs,
            })?
        }
    };
    Ok(text)
}
