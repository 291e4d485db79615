//! JSON description of a system: Poisson structure, dissipation tensor and
//! named polynomial fields.
//!
//! ```json
//! {
//!   "n": 3,
//!   "poisson": {"kind": "rigid_body"},
//!   "tensor": {"kind": "simple", "weight": 1.0,
//!              "skew": {"kind": "constant", "matrix": [[0,1,0],[-1,0,0],[0,0,0]]}},
//!   "fields": {"s": {"2,0,0": 0.5, "0,2,0": 0.5, "0,0,2": 0.5},
//!              "h": {"2,0,0": 0.5, "0,2,0": 0.25, "0,0,2": 0.1666}},
//!   "noninteraction": "strong",
//!   "x0": [1.0, 0.5, 0.2]
//! }
//! ```
//!
//! Field keys are comma-separated exponents. `entropy` and `hamiltonian`
//! name the fields used as `s` and `h` (defaults `"s"` and `"h"`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::brackets::{ScalarField, SkewField, TensorField};
use crate::dynamics::{Noninteraction, SystemSpec};
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::simple::SkewMatrix;
use crate::tensor::Tensor4;

pub type PolyMap = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PoissonSpec {
    Constant { matrix: SkewMatrix },
    RigidBody,
    /// Rows of polynomial entries; must be skew as polynomials.
    MatrixPoly { entries: Vec<Vec<PolyMap>> },
}

impl PoissonSpec {
    pub fn build(&self, n: usize) -> Result<SkewField> {
        let field = match self {
            PoissonSpec::Constant { matrix } => SkewField::constant(matrix.clone()),
            PoissonSpec::RigidBody => SkewField::rigid_body(),
            PoissonSpec::MatrixPoly { entries } => SkewField::matrix_poly(
                entries
                    .iter()
                    .map(|row| row.iter().map(|m| Poly::from_exponent_map(n, m)).collect())
                    .collect::<Result<_>>()?,
            )?,
        };
        if field.n() != n {
            return Err(Error::SystemSpec(format!(
                "poisson structure has dimension {}, system has n = {n}",
                field.n()
            )));
        }
        Ok(field)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TensorSpec {
    Zero,
    Constant { tensor: Tensor4 },
    /// `simple_tensor(J(x), weight)`.
    Simple { weight: f64, skew: PoissonSpec },
    Sum { terms: Vec<TensorSpec> },
}

impl TensorSpec {
    pub fn build(&self, n: usize) -> Result<TensorField> {
        match self {
            TensorSpec::Zero => TensorField::zero(n),
            TensorSpec::Constant { tensor } => {
                if tensor.n() != n {
                    return Err(Error::SystemSpec(format!(
                        "tensor has dimension {}, system has n = {n}",
                        tensor.n()
                    )));
                }
                Ok(TensorField::constant(tensor.clone()))
            }
            TensorSpec::Simple { weight, skew } => Ok(TensorField::simple(skew.build(n)?, *weight)),
            TensorSpec::Sum { terms } => {
                TensorField::sum(n, terms.iter().map(|t| t.build(n)).collect::<Result<_>>()?)
            }
        }
    }
}

fn default_entropy() -> String {
    "s".into()
}

fn default_hamiltonian() -> String {
    "h".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub n: usize,
    pub poisson: PoissonSpec,
    pub tensor: TensorSpec,
    #[serde(default)]
    pub fields: BTreeMap<String, PolyMap>,
    #[serde(default = "default_entropy")]
    pub entropy: String,
    #[serde(default = "default_hamiltonian")]
    pub hamiltonian: String,
    pub noninteraction: Noninteraction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl SystemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn field(&self, name: &str) -> Result<ScalarField> {
        let map = self
            .fields
            .get(name)
            .ok_or_else(|| Error::SystemSpec(format!("no field named {name:?}")))?;
        Ok(ScalarField::from_poly(Poly::from_exponent_map(self.n, map)?))
    }

    pub fn tensor_field(&self) -> Result<TensorField> {
        self.tensor.build(self.n)
    }

    /// Builds and registers the system (`eps` is validated as conservative-irreversible).
    pub fn build(&self) -> Result<SystemSpec> {
        if let Some(x0) = &self.x0 {
            if x0.len() != self.n {
                return Err(Error::SystemSpec(format!("x0 has length {}, n = {}", x0.len(), self.n)));
            }
        }
        SystemSpec::new(
            self.poisson.build(self.n)?,
            self.tensor_field()?,
            self.field(&self.entropy)?,
            self.field(&self.hamiltonian)?,
            self.noninteraction,
        )
    }
}
