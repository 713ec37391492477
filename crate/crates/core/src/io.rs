//! JSON matrix files: `{"dim": d, "matrices": [[[re, im], ...], ...]}` with
//! each matrix stored row-major. An optional `"images"` array of the same
//! shape describes a linear map on the span of `"matrices"`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::ComplexMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub matrices: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_dim: Option<usize>,
}

fn decode(dim: usize, raw: &[Vec<[f64; 2]>]) -> Result<Vec<ComplexMatrix>> {
    raw.iter()
        .enumerate()
        .map(|(k, entries)| {
            if entries.len() != dim * dim {
                return Err(Error::Parse(format!(
                    "matrix {k} has {} entries, expected {}",
                    entries.len(),
                    dim * dim
                )));
            }
            ComplexMatrix::from_vec(dim, entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
        })
        .collect()
}

fn encode(family: &[ComplexMatrix]) -> Vec<Vec<[f64; 2]>> {
    family
        .iter()
        .map(|m| m.as_slice().iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

impl MatrixFile {
    pub fn from_family(family: &[ComplexMatrix]) -> Self {
        Self {
            dim: family.first().map_or(0, ComplexMatrix::dim),
            matrices: encode(family),
            images: None,
            image_dim: None,
        }
    }

    pub fn with_images(mut self, images: &[ComplexMatrix]) -> Self {
        self.image_dim = images.first().map(ComplexMatrix::dim);
        self.images = Some(encode(images));
        self
    }

    pub fn family(&self) -> Result<Vec<ComplexMatrix>> {
        decode(self.dim, &self.matrices)
    }

    pub fn image_family(&self) -> Result<Option<Vec<ComplexMatrix>>> {
        self.images
            .as_ref()
            .map(|raw| decode(self.image_dim.unwrap_or(self.dim), raw))
            .transpose()
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix file serializes")
    }
}

pub fn read_family(path: &Path) -> Result<Vec<ComplexMatrix>> {
    MatrixFile::read(path)?.family()
}
