//! JSON parameter documents.
//!
//! Both the affine head and the LCBO scorer serialize to the same layered
//! format, and training checkpoints extend it with an `optimizer` section:
//!
//! ```json
//! {"dims": [2, 64, 1],
//!  "layers": [{"w": [[...], ...], "b": [...]}, ...],
//!  "optimizer": {"step": 10, "lr": 1e-5, ..., "m": [...], "v": [...]}}
//! ```
//!
//! Weight matrices are row-major: `w[i]` holds the input weights of output
//! unit `i`. The optimizer moment arrays follow the flattening order used
//! in training: layer by layer, each weight matrix row-major, then its bias.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::AffineHead;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerDoc {
    pub step: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    /// Layer widths, input first: `[in, hidden.., out]`.
    pub dims: Vec<usize>,
    pub layers: Vec<LayerParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerDoc>,
}

impl ParamsDoc {
    /// Validates layer shapes against `dims` and rejects non-finite values.
    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 {
            return Err(Error::Params("dims must list at least [in, out]".into()));
        }
        if self.layers.len() != self.dims.len() - 1 {
            return Err(Error::Params(format!(
                "expected {} layers for dims {:?}, got {}",
                self.dims.len() - 1,
                self.dims,
                self.layers.len()
            )));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let (n_in, n_out) = (self.dims[i], self.dims[i + 1]);
            if layer.w.len() != n_out || layer.w.iter().any(|row| row.len() != n_in) {
                return Err(Error::Params(format!(
                    "layer {i} weight must be {n_out}x{n_in}"
                )));
            }
            if layer.b.len() != n_out {
                return Err(Error::Params(format!(
                    "layer {i} bias must have {n_out} entries"
                )));
            }
            let finite = layer.w.iter().flatten().all(|x| x.is_finite())
                && layer.b.iter().all(|x| x.is_finite());
            if !finite {
                return Err(Error::Params(format!(
                    "layer {i} has non-finite parameters"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let doc: ParamsDoc = serde_json::from_str(json)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Interprets the document as an affine head (single square layer).
    pub fn as_affine_head(&self) -> Result<AffineHead> {
        self.validate()?;
        if self.layers.len() != 1 || self.dims[0] != self.dims[1] {
            return Err(Error::Params(format!(
                "affine head must be a single square layer, got dims {:?}",
                self.dims
            )));
        }
        AffineHead::new(self.layers[0].w.clone(), self.layers[0].b.clone())
    }
}

impl From<&AffineHead> for ParamsDoc {
    fn from(head: &AffineHead) -> Self {
        ParamsDoc {
            dims: vec![head.dim(), head.dim()],
            layers: vec![LayerParams {
                w: head.weight().to_vec(),
                b: head.bias().to_vec(),
            }],
            optimizer: None,
        }
    }
}
