//! Serializable mirrors of the function descriptors: key-value records with
//! matrices as row-major numeric arrays.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{AnalyticExcess, ConvexFunction, ConvexKind, ExcessFunction, RidgeProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixDescriptor {
    pub dim: usize,
    /// Row-major entries, `dim * dim` of them.
    pub data: Vec<f64>,
}

impl MatrixDescriptor {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.dim * self.dim {
            return Err(Error::Config(format!(
                "matrix needs {} entries, got {}",
                self.dim * self.dim,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &self.data))
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixDescriptor {
            dim: m.nrows(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum FunctionDescriptor {
    SmoothedCone { a: MatrixDescriptor },
    RadialCone { dim: usize, c: f64 },
    LocalizedQuadratic { h: MatrixDescriptor, crossover: f64 },
    Ridge { dim: usize, axes: Vec<usize>, profile: RidgeProfileDescriptor },
    Affine { p: Vec<f64>, b: f64 },
    AffineShift { base: Box<FunctionDescriptor>, p: Vec<f64>, b: f64 },
    PureQuadratic { h: MatrixDescriptor },
    NegatedCone { dim: usize },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum RidgeProfileDescriptor {
    Square,
    Abs,
}

impl From<RidgeProfileDescriptor> for RidgeProfile {
    fn from(d: RidgeProfileDescriptor) -> Self {
        match d {
            RidgeProfileDescriptor::Square => RidgeProfile::Square,
            RidgeProfileDescriptor::Abs => RidgeProfile::Abs,
        }
    }
}

impl From<RidgeProfile> for RidgeProfileDescriptor {
    fn from(p: RidgeProfile) -> Self {
        match p {
            RidgeProfile::Square => RidgeProfileDescriptor::Square,
            RidgeProfile::Abs => RidgeProfileDescriptor::Abs,
        }
    }
}

impl FunctionDescriptor {
    pub fn build(&self) -> Result<ConvexFunction> {
        match self {
            FunctionDescriptor::SmoothedCone { a } => {
                ConvexFunction::smoothed_cone(a.to_matrix()?)
            }
            FunctionDescriptor::RadialCone { dim, c } => ConvexFunction::radial_cone(*dim, *c),
            FunctionDescriptor::LocalizedQuadratic { h, crossover } => {
                ConvexFunction::localized_quadratic(h.to_matrix()?, *crossover)
            }
            FunctionDescriptor::Ridge { dim, axes, profile } => {
                ConvexFunction::ridge(*dim, axes.clone(), (*profile).into())
            }
            FunctionDescriptor::Affine { p, b } => ConvexFunction::affine(p.clone(), *b),
            FunctionDescriptor::AffineShift { base, p, b } => {
                ConvexFunction::affine_shift(base.build()?, p.clone(), *b)
            }
            FunctionDescriptor::PureQuadratic { h } => {
                ConvexFunction::pure_quadratic(h.to_matrix()?)
            }
            FunctionDescriptor::NegatedCone { dim } => Ok(ConvexFunction::negated_cone(*dim)),
        }
    }

    pub fn from_function(u: &ConvexFunction) -> Self {
        match u.kind() {
            ConvexKind::SmoothedCone { a } => FunctionDescriptor::SmoothedCone {
                a: MatrixDescriptor::from_matrix(a),
            },
            ConvexKind::LocalizedQuadratic { h, crossover, .. } => {
                FunctionDescriptor::LocalizedQuadratic {
                    h: MatrixDescriptor::from_matrix(h),
                    crossover: *crossover,
                }
            }
            ConvexKind::Ridge { axes, profile } => FunctionDescriptor::Ridge {
                dim: u.dim(),
                axes: axes.clone(),
                profile: (*profile).into(),
            },
            ConvexKind::AffineShift { base, p, b } => FunctionDescriptor::AffineShift {
                base: Box::new(Self::from_function(base)),
                p: p.iter().copied().collect(),
                b: *b,
            },
            ConvexKind::PureQuadratic { h } => FunctionDescriptor::PureQuadratic {
                h: MatrixDescriptor::from_matrix(h),
            },
            ConvexKind::NegatedSmoothedCone => FunctionDescriptor::NegatedCone { dim: u.dim() },
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticExcessDescriptor {
    RidgeSquare,
    PlateauPlusSquare,
    SaddlePlateau,
}

impl From<AnalyticExcessDescriptor> for AnalyticExcess {
    fn from(d: AnalyticExcessDescriptor) -> Self {
        match d {
            AnalyticExcessDescriptor::RidgeSquare => AnalyticExcess::RidgeSquare,
            AnalyticExcessDescriptor::PlateauPlusSquare => AnalyticExcess::PlateauPlusSquare,
            AnalyticExcessDescriptor::SaddlePlateau => AnalyticExcess::SaddlePlateau,
        }
    }
}

/// Excess-function input: either a library function anchored at a point or a
/// named analytic form.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "source", rename_all = "snake_case")]
pub enum ExcessDescriptor {
    FromFunction {
        function: FunctionDescriptor,
        x0: Vec<f64>,
    },
    Analytic {
        form: AnalyticExcessDescriptor,
        dim: usize,
        k: usize,
    },
}

impl ExcessDescriptor {
    pub fn build(&self) -> Result<ExcessFunction> {
        match self {
            ExcessDescriptor::FromFunction { function, x0 } => {
                function.build()?.excess_at(x0)
            }
            ExcessDescriptor::Analytic { form, dim, k } => {
                ExcessFunction::analytic((*form).into(), *dim, *k)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_json() {
        let d = FunctionDescriptor::SmoothedCone {
            a: MatrixDescriptor { dim: 2, data: vec![4.0, 0.0, 0.0, 1.0] },
        };
        let js = serde_json::to_string(&d).unwrap();
        let back: FunctionDescriptor = serde_json::from_str(&js).unwrap();
        assert_eq!(d, back);
        let u = back.build().unwrap();
        assert_eq!(u.dim(), 2);
        let re = FunctionDescriptor::from_function(&u);
        assert_eq!(re, d);
    }

    #[test]
    fn unknown_keys_rejected() {
        let js = r#"{"kind":"radial_cone","dim":2,"c":1.0,"extra":3}"#;
        assert!(serde_json::from_str::<FunctionDescriptor>(js).is_err());
    }

    #[test]
    fn matrix_size_validated() {
        let bad = MatrixDescriptor { dim: 2, data: vec![1.0, 2.0, 3.0] };
        assert!(bad.to_matrix().is_err());
    }
}
