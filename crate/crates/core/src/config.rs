//! JSON input formats: geometry, weights, metrics and sections. Unknown keys
//! are rejected; integer fields must be exact integers.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::{GridField, Monomial, ScalarField, Term};
use crate::kaehler::ToricPotential;
use crate::metrics::{guillemin_field, MetricPotential};
use crate::syz::LagrangianSection;
use crate::toric::{Fan, Polytope};

/// `{"dim": n, "generators": [[..]], "max_cones": [[1-based]], "offsets": [..]}`
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub dim: usize,
    pub generators: Vec<Vec<i64>>,
    pub max_cones: Vec<Vec<usize>>,
    pub offsets: Vec<i64>,
}

impl GeometryConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("geometry config: {e}")))
    }

    pub fn fan(&self) -> Result<Fan> {
        let cones: Vec<Vec<usize>> = self
            .max_cones
            .iter()
            .map(|cone| {
                cone.iter()
                    .map(|&i| {
                        if i == 0 {
                            Err(Error::MalformedFan(
                                "cone indices are 1-based; found 0".into(),
                            ))
                        } else {
                            Ok(i - 1)
                        }
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Fan::new(self.dim, self.generators.clone(), cones)
    }

    pub fn polytope(&self) -> Result<Polytope> {
        Polytope::from_fan(self.fan()?, self.offsets.clone())
    }
}

/// Optional weights file: map from `"u1,u2,..."` to a positive weight.
pub fn parse_weights(text: &str, polytope: &Polytope) -> Result<Vec<f64>> {
    let raw: BTreeMap<String, f64> = serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("weights file: {e}")))?;
    let pts = polytope.lattice_points();
    let mut weights = vec![1.0; pts.len()];
    for (key, w) in raw {
        let parsed: std::result::Result<Vec<i64>, _> =
            key.split(',').map(|s| s.trim().parse::<i64>()).collect();
        let u = parsed.map_err(|_| {
            Error::InvalidInput(format!("weights file: bad lattice point key '{key}'"))
        })?;
        let idx = pts.iter().position(|p| *p == u).ok_or_else(|| {
            Error::InvalidInput(format!(
                "weights file: {key} is not a lattice point of the polytope"
            ))
        })?;
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidInput(format!(
                "weights file: weight for {key} must be finite and nonnegative"
            )));
        }
        weights[idx] = w;
    }
    Ok(weights)
}

/// Metric input: `{"divisor": [..], "correction": {"type": "zero" | "grid", ..}}`
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub divisor: Vec<i64>,
    pub correction: CorrectionConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum CorrectionConfig {
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "grid")]
    Grid {
        #[serde(rename = "box")]
        box_half: f64,
        samples: GridSamples,
    },
    #[serde(rename = "bump")]
    Bump {
        amplitude: f64,
        center: Vec<f64>,
        radius: f64,
    },
}

/// Grid samples: a flat list (1D) or nested rows (2D).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridSamples {
    One(Vec<f64>),
    Two(Vec<Vec<f64>>),
}

impl MetricConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("metric config: {e}")))
    }

    pub fn build(&self, ctx: &ToricPotential) -> Result<MetricPotential> {
        let correction = self.correction.build(ctx.dim())?;
        MetricPotential::new(ctx.clone(), self.divisor.clone(), correction)
    }
}

impl CorrectionConfig {
    pub fn build(&self, dim: usize) -> Result<ScalarField> {
        match self {
            CorrectionConfig::Zero => Ok(ScalarField::zero(dim)),
            CorrectionConfig::Grid { box_half, samples } => {
                let grid = build_grid(dim, *box_half, samples)?;
                Ok(ScalarField::from_terms(
                    dim,
                    vec![Term::Grid {
                        coeff: 1.0,
                        grid,
                    }],
                ))
            }
            CorrectionConfig::Bump {
                amplitude,
                center,
                radius,
            } => {
                if center.len() != dim {
                    return Err(Error::InvalidInput("bump center dimension".into()));
                }
                Ok(ScalarField::from_terms(
                    dim,
                    vec![Term::Bump {
                        amplitude: *amplitude,
                        center: center.clone(),
                        radius: *radius,
                    }],
                ))
            }
        }
    }
}

fn build_grid(dim: usize, box_half: f64, samples: &GridSamples) -> Result<GridField> {
    match (dim, samples) {
        (1, GridSamples::One(v)) => GridField::new(1, box_half, vec![v.len()], v.clone()),
        (2, GridSamples::Two(rows)) => {
            let n1 = rows.len();
            if n1 == 0 {
                return Err(Error::InvalidInput("empty grid".into()));
            }
            let n2 = rows[0].len();
            if rows.iter().any(|r| r.len() != n2) {
                return Err(Error::InvalidInput("ragged grid rows".into()));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            GridField::new(2, box_half, vec![n1, n2], flat)
        }
        _ => Err(Error::InvalidInput(
            "grid samples do not match the geometry dimension".into(),
        )),
    }
}

/// Section input: `{"potential": <field>}` where a field is one of
/// `guillemin`, `phi`, `affine`, `grid`, `poly`, `exp`, `bump`, `zero` or a
/// `sum` of fields.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionConfig {
    pub potential: FieldConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum FieldConfig {
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "guillemin")]
    Guillemin { divisor: Vec<i64> },
    #[serde(rename = "phi")]
    Phi { scale: f64 },
    #[serde(rename = "affine")]
    Affine { linear: Vec<f64>, constant: f64 },
    #[serde(rename = "grid")]
    Grid {
        #[serde(rename = "box")]
        box_half: f64,
        samples: GridSamples,
    },
    #[serde(rename = "poly")]
    Poly { monomials: Vec<MonomialConfig> },
    #[serde(rename = "exp")]
    Exp { coeff: f64, direction: Vec<f64> },
    #[serde(rename = "bump")]
    Bump {
        amplitude: f64,
        center: Vec<f64>,
        radius: f64,
    },
    #[serde(rename = "sum")]
    Sum { terms: Vec<FieldConfig> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialConfig {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl SectionConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("section config: {e}")))
    }

    pub fn build(&self, ctx: &ToricPotential) -> Result<LagrangianSection> {
        let potential = self.potential.build(ctx)?;
        Ok(LagrangianSection::new(ctx.clone(), potential))
    }
}

impl FieldConfig {
    pub fn build(&self, ctx: &ToricPotential) -> Result<ScalarField> {
        let dim = ctx.dim();
        match self {
            FieldConfig::Zero => Ok(ScalarField::zero(dim)),
            FieldConfig::Guillemin { divisor } => guillemin_field(ctx, divisor),
            FieldConfig::Phi { scale } => Ok(ctx.phi_field().scale(*scale)),
            FieldConfig::Affine { linear, constant } => {
                if linear.len() != dim {
                    return Err(Error::InvalidInput("affine part dimension".into()));
                }
                Ok(ScalarField::affine(linear.clone(), *constant))
            }
            FieldConfig::Grid { box_half, samples } => {
                let grid = build_grid(dim, *box_half, samples)?;
                Ok(ScalarField::from_terms(
                    dim,
                    vec![Term::Grid {
                        coeff: 1.0,
                        grid,
                    }],
                ))
            }
            FieldConfig::Poly { monomials } => {
                for m in monomials {
                    if m.powers.len() != dim {
                        return Err(Error::InvalidInput("monomial powers dimension".into()));
                    }
                }
                Ok(ScalarField::from_terms(
                    dim,
                    vec![Term::Poly {
                        monomials: monomials
                            .iter()
                            .map(|m| Monomial {
                                coeff: m.coeff,
                                powers: m.powers.clone(),
                            })
                            .collect(),
                    }],
                ))
            }
            FieldConfig::Exp { coeff, direction } => {
                if direction.len() != dim {
                    return Err(Error::InvalidInput("exp direction dimension".into()));
                }
                Ok(ScalarField::from_terms(
                    dim,
                    vec![Term::Exp {
                        coeff: *coeff,
                        direction: direction.clone(),
                    }],
                ))
            }
            FieldConfig::Bump {
                amplitude,
                center,
                radius,
            } => {
                if center.len() != dim {
                    return Err(Error::InvalidInput("bump center dimension".into()));
                }
                Ok(ScalarField::from_terms(
                    dim,
                    vec![Term::Bump {
                        amplitude: *amplitude,
                        center: center.clone(),
                        radius: *radius,
                    }],
                ))
            }
            FieldConfig::Sum { terms } => {
                let mut acc = ScalarField::zero(dim);
                for t in terms {
                    acc = acc.add(&t.build(ctx)?);
                }
                Ok(acc)
            }
        }
    }
}
