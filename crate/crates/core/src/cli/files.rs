//! Problem, filter/point, and record file formats.
//!
//! Problem and point files are TOML: desk-scale matrices as nested decimal
//! arrays, diff-friendly and hand-editable (the reference plant of the
//! [LLS10] benchmark has to be typed in from the literature). Records are
//! JSON lines; numbers round-trip exactly (shortest decimal form), and
//! infinite objective values are encoded as the string "inf" so a record
//! stream survives infeasible runs.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::norms::NormOptions;
use crate::optimizers::StopReason;
use crate::problems::{
    decode, dfo_filter, encode, lls10_filter, FilterDims, FilterParams, ObjectiveKind, Positivity,
    SynthesisProblem,
};
use crate::statespace::{FilteringPlant, Matrix};

/// A parsed problem file: the synthesis problem plus its free-text notes.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: SynthesisProblem,
    pub notes: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProblemToml {
    id: String,
    #[serde(default)]
    notes: String,
    plant: PlantToml,
    filter: FilterToml,
    objective: ObjectiveToml,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlantToml {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c_z: Vec<Vec<f64>>,
    d_z: Vec<Vec<f64>>,
    c_y: Vec<Vec<f64>>,
    d_y: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FilterToml {
    order: usize,
    #[serde(default = "default_true")]
    positivity: bool,
    #[serde(default)]
    positivity_tol: f64,
    #[serde(default)]
    stability_margin: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObjectiveToml {
    kind: String,
    #[serde(default = "default_grid")]
    coarse_grid_points: usize,
    #[serde(default = "default_top_k")]
    refine_top_k: usize,
    #[serde(default = "default_refine_tol")]
    refine_tolerance: f64,
    #[serde(default)]
    stability_margin: f64,
}

fn default_true() -> bool {
    true
}

fn default_grid() -> usize {
    NormOptions::default().coarse_grid_points
}

fn default_top_k() -> usize {
    NormOptions::default().refine_top_k
}

fn default_refine_tol() -> f64 {
    NormOptions::default().refine_tolerance
}

fn matrix_from_toml(name: &str, rows: &[Vec<f64>]) -> Result<Matrix, Error> {
    Matrix::from_rows(rows).map_err(|e| Error::parse(format!("plant.{name}: {e}")))
}

/// Parses a problem file from TOML text.
pub fn parse_problem_str(text: &str) -> Result<LoadedProblem, Error> {
    let raw: ProblemToml = toml::from_str(text).map_err(|e| Error::parse(e.to_string()))?;
    let plant = FilteringPlant::new(
        matrix_from_toml("a", &raw.plant.a)?,
        matrix_from_toml("b", &raw.plant.b)?,
        matrix_from_toml("c_z", &raw.plant.c_z)?,
        matrix_from_toml("d_z", &raw.plant.d_z)?,
        matrix_from_toml("c_y", &raw.plant.c_y)?,
        matrix_from_toml("d_y", &raw.plant.d_y)?,
    )
    .map_err(|e| Error::parse(format!("plant: {e}")))?;
    let objective = match raw.objective.kind.as_str() {
        "hinf" => ObjectiveKind::HinfError,
        "h2" => ObjectiveKind::H2Error,
        other => {
            return Err(Error::parse(format!(
                "objective.kind must be \"hinf\" or \"h2\", got \"{other}\""
            )))
        }
    };
    let problem = SynthesisProblem {
        id: raw.id,
        dims: FilterDims {
            order: raw.filter.order,
            inputs: plant.measured_outputs(),
            outputs: plant.estimated_outputs(),
        },
        plant,
        objective,
        positivity: if raw.filter.positivity {
            Positivity::Required
        } else {
            Positivity::Off
        },
        positivity_tol: raw.filter.positivity_tol,
        stability_margin: raw.filter.stability_margin,
        norm_options: NormOptions {
            coarse_grid_points: raw.objective.coarse_grid_points,
            refine_top_k: raw.objective.refine_top_k,
            refine_tolerance: raw.objective.refine_tolerance,
            stability_margin: raw.objective.stability_margin,
        },
    };
    problem.validate().map_err(|e| Error::parse(e.to_string()))?;
    Ok(LoadedProblem {
        problem,
        notes: raw.notes,
    })
}

/// Serializes a problem back to TOML; numbers keep their shortest
/// round-trip decimal form, so parse(write(p)) == p field for field.
pub fn write_problem_str(loaded: &LoadedProblem) -> Result<String, Error> {
    let p = &loaded.problem;
    let raw = ProblemToml {
        id: p.id.clone(),
        notes: loaded.notes.clone(),
        plant: PlantToml {
            a: p.plant.a().to_nested_rows(),
            b: p.plant.b().to_nested_rows(),
            c_z: p.plant.c_z().to_nested_rows(),
            d_z: p.plant.d_z().to_nested_rows(),
            c_y: p.plant.c_y().to_nested_rows(),
            d_y: p.plant.d_y().to_nested_rows(),
        },
        filter: FilterToml {
            order: p.dims.order,
            positivity: matches!(p.positivity, Positivity::Required),
            positivity_tol: p.positivity_tol,
            stability_margin: p.stability_margin,
        },
        objective: ObjectiveToml {
            kind: match p.objective {
                ObjectiveKind::HinfError => "hinf".into(),
                ObjectiveKind::H2Error => "h2".into(),
            },
            coarse_grid_points: p.norm_options.coarse_grid_points,
            refine_top_k: p.norm_options.refine_top_k,
            refine_tolerance: p.norm_options.refine_tolerance,
            stability_margin: p.norm_options.stability_margin,
        },
    };
    toml::to_string(&raw).map_err(|e| Error::parse(e.to_string()))
}

pub fn load_problem(path: &Path) -> Result<LoadedProblem, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_problem_str(&text)
}

#[derive(Debug, Serialize, Deserialize)]
struct PointToml {
    #[serde(default)]
    x: Option<Vec<f64>>,
    #[serde(default)]
    a_hat: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    b_hat: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    c_hat: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    d_hat: Option<Vec<Vec<f64>>>,
}

/// Parses a point/filter file: either a flat decision vector `x = [...]` or
/// the four filter matrices.
pub fn parse_point_str(text: &str, dims: FilterDims) -> Result<Vec<f64>, Error> {
    let raw: PointToml = toml::from_str(text).map_err(|e| Error::parse(e.to_string()))?;
    if let Some(x) = raw.x {
        if x.len() != dims.decision_len() {
            return Err(Error::parse(format!(
                "x has {} entries, problem needs {}",
                x.len(),
                dims.decision_len()
            )));
        }
        decode(&x, dims)?;
        return Ok(x);
    }
    let take = |name: &str, block: &Option<Vec<Vec<f64>>>| -> Result<Matrix, Error> {
        match block {
            Some(rows) => {
                Matrix::from_rows(rows).map_err(|e| Error::parse(format!("{name}: {e}")))
            }
            None => Err(Error::parse(format!(
                "point file needs either x = [...] or all of a_hat, b_hat, c_hat, d_hat ({name} missing)"
            ))),
        }
    };
    let params = FilterParams {
        a_hat: take("a_hat", &raw.a_hat)?,
        b_hat: take("b_hat", &raw.b_hat)?,
        c_hat: take("c_hat", &raw.c_hat)?,
        d_hat: take("d_hat", &raw.d_hat)?,
    };
    if params.dims() != dims {
        return Err(Error::parse(format!(
            "filter dims {:?} do not match the problem's {:?}",
            params.dims(),
            dims
        )));
    }
    Ok(encode(&params))
}

pub fn load_point(path: &Path, dims: FilterDims) -> Result<Vec<f64>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_point_str(&text, dims)
}

/// Resolves a filter argument: a built-in name or a path.
pub fn resolve_filter(spec: &str, dims: FilterDims) -> Result<Vec<f64>, Error> {
    match spec {
        "lls10" => {
            let p = lls10_filter();
            check_builtin_dims(&p, dims)?;
            Ok(encode(&p))
        }
        "dfo" => {
            let p = dfo_filter();
            check_builtin_dims(&p, dims)?;
            Ok(encode(&p))
        }
        path => load_point(Path::new(path), dims),
    }
}

fn check_builtin_dims(params: &FilterParams, dims: FilterDims) -> Result<(), Error> {
    if params.dims() != dims {
        return Err(Error::parse(format!(
            "built-in filter has dims {:?}, problem needs {:?}",
            params.dims(),
            dims
        )));
    }
    Ok(())
}

/// Extended real that serializes infinities as strings ("inf"/"-inf") so
/// records stay valid JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtReal(pub f64);

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

struct ExtRealVisitor;

impl Visitor<'_> for ExtRealVisitor {
    type Value = ExtReal;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a number or \"inf\"/\"-inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
        Ok(ExtReal(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
        Ok(ExtReal(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
        Ok(ExtReal(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
        match v {
            "inf" => Ok(ExtReal(f64::INFINITY)),
            "-inf" => Ok(ExtReal(f64::NEG_INFINITY)),
            other => Err(E::custom(format!("unexpected extended real \"{other}\""))),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(ExtRealVisitor)
    }
}

/// One line of the result stream: everything needed to reproduce and audit a
/// run. Timing is deliberately not recorded here — records from two runs with
/// the same master seed are byte-identical; wall time goes to stdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub problem: String,
    pub method: String,
    pub master_seed: u64,
    pub start_index: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub xf: Vec<f64>,
    pub f: ExtReal,
    pub evaluations: usize,
    pub stop: StopReason,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_mesh: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Renders records as JSON lines.
pub fn records_to_string(records: &[ResultRecord]) -> Result<String, Error> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::parse(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a record stream, line by line.
pub fn records_from_string(text: &str) -> Result<Vec<ResultRecord>, Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| Error::parse(format!("record line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn write_records(path: &Path, records: &[ResultRecord]) -> Result<(), Error> {
    fs::write(path, records_to_string(records)?).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    records_from_string(&text)
}
