//! Versioned JSON checkpoint of a trained model.
//!
//! ```json
//! {
//!   "format": "ontogat-checkpoint",
//!   "version": 1,
//!   "dims": { "input_dim": F, "hidden_dim": F', "heads": 5, "output_dim": d },
//!   "config": { ...ModelConfig... },
//!   "parameters": [ { "name": "head0.W", "shape": [F', F], "data": [...] }, ... ]
//! }
//! ```
//!
//! Blocks appear in the order `head{k}.W`, `head{k}.a` for k = 0..5, then
//! `dense.W`, `dense.b`; matrices are row-major. Values are stored as `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gat::{ModelConfig, SiameseModel, NUM_HEADS};
use crate::scalar::Scalar;

pub const FORMAT: &str = "ontogat-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub output_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub dims: Dims,
    pub config: ModelConfig,
    pub parameters: Vec<ParameterBlock>,
}

fn shapes(config: &ModelConfig) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for _ in 0..NUM_HEADS {
        out.push(vec![config.hidden_dim, config.input_dim]);
        out.push(vec![2 * config.hidden_dim]);
    }
    out.push(vec![config.output_dim, config.dense_input_dim()]);
    out.push(vec![config.output_dim]);
    out
}

impl Checkpoint {
    pub fn from_model<T: Scalar>(model: &SiameseModel<T>) -> Self {
        let c = model.config;
        let parameters = model
            .blocks()
            .into_iter()
            .zip(shapes(&c))
            .map(|((name, data), shape)| ParameterBlock {
                name,
                shape,
                data: data.iter().map(|x| x.as_f64()).collect(),
            })
            .collect();
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            dims: Dims {
                input_dim: c.input_dim,
                hidden_dim: c.hidden_dim,
                heads: NUM_HEADS,
                output_dim: c.output_dim,
            },
            config: c,
            parameters,
        }
    }

    pub fn to_model<T: Scalar>(&self) -> Result<SiameseModel<T>> {
        let bad = |m: String| Err(Error::Config(format!("checkpoint: {m}")));
        if self.format != FORMAT {
            return bad(format!("unknown format {:?}", self.format));
        }
        if self.version != VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        let c = self.config;
        let expected = Dims {
            input_dim: c.input_dim,
            hidden_dim: c.hidden_dim,
            heads: NUM_HEADS,
            output_dim: c.output_dim,
        };
        if self.dims != expected {
            return bad(format!(
                "dims {:?} disagree with config {:?}",
                self.dims, expected
            ));
        }
        let mut model = SiameseModel::<T>::init(c, 0)?;
        let names: Vec<String> = model.blocks().into_iter().map(|(n, _)| n).collect();
        if self.parameters.len() != names.len() {
            return bad(format!(
                "{} parameter blocks, expected {}",
                self.parameters.len(),
                names.len()
            ));
        }
        let shapes = shapes(&c);
        for (((block, dst), name), shape) in self
            .parameters
            .iter()
            .zip(model.blocks_mut())
            .zip(&names)
            .zip(&shapes)
        {
            if &block.name != name || &block.shape != shape || block.data.len() != dst.len() {
                return bad(format!(
                    "block {} does not match expected {name} {shape:?}",
                    block.name
                ));
            }
            if block.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("checkpoint block {name}")));
            }
            for (d, s) in dst.iter_mut().zip(&block.data) {
                *d = T::of(*s);
            }
        }
        Ok(model)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialises")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::NotFound("checkpoint file", path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }
}
