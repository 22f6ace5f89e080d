//! Model persistence: a versioned JSON document with explicit widths,
//! validated for shape consistency and finiteness on load.

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::mlp::{LinearLayer, Mlp, OutputMode, HIDDEN_BLOCKS};
use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerDoc {
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Serialized form of an `Mlp`. Layers are ordered input projection,
/// the three hidden blocks, then the head.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDoc {
    pub schema_version: u32,
    /// `[in_width, hidden_width, out_width]`
    pub widths: [usize; 3],
    pub output_mode: OutputMode,
    pub layers: Vec<LayerDoc>,
}

fn layer_to_doc(layer: &LinearLayer) -> LayerDoc {
    LayerDoc {
        weight: (0..layer.out_width())
            .map(|o| layer.weight.row(o).to_vec())
            .collect(),
        bias: layer.bias.clone(),
    }
}

fn layer_from_doc(doc: &LayerDoc, out_width: usize, in_width: usize, name: &str) -> Result<LinearLayer> {
    if doc.weight.len() != out_width || doc.bias.len() != out_width {
        return Err(Error::dim(
            format!("model layer {name}"),
            format!("{out_width} rows"),
            format!("{} weight rows, {} biases", doc.weight.len(), doc.bias.len()),
        ));
    }
    let weight = Matrix::from_rows(&doc.weight)?;
    if weight.cols() != in_width {
        return Err(Error::dim(
            format!("model layer {name}"),
            format!("{in_width} cols"),
            format!("{}", weight.cols()),
        ));
    }
    if !doc.bias.iter().all(|b| b.is_finite()) {
        return Err(Error::non_finite(format!("model layer {name} bias")));
    }
    Ok(LinearLayer {
        weight,
        bias: doc.bias.clone(),
    })
}

impl Mlp {
    pub fn to_doc(&self) -> ModelDoc {
        let mut layers = vec![layer_to_doc(&self.input_proj)];
        layers.extend(self.hidden.iter().map(layer_to_doc));
        layers.push(layer_to_doc(&self.head));
        ModelDoc {
            schema_version: MODEL_SCHEMA_VERSION,
            widths: [self.in_width(), self.hidden_width(), self.out_width()],
            output_mode: self.output_mode,
            layers,
        }
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Mlp> {
        if doc.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported model schema_version {}",
                doc.schema_version
            )));
        }
        let [in_w, h, out_w] = doc.widths;
        if doc.layers.len() != HIDDEN_BLOCKS + 2 {
            return Err(Error::dim(
                "model layers",
                format!("{}", HIDDEN_BLOCKS + 2),
                format!("{}", doc.layers.len()),
            ));
        }
        let input_proj = layer_from_doc(&doc.layers[0], h, in_w, "input_proj")?;
        let hidden = (0..HIDDEN_BLOCKS)
            .map(|i| layer_from_doc(&doc.layers[1 + i], h, h, &format!("hidden{i}")))
            .collect::<Result<Vec<_>>>()?;
        let head = layer_from_doc(&doc.layers[1 + HIDDEN_BLOCKS], out_w, h, "head")?;
        Ok(Mlp {
            input_proj,
            hidden,
            head,
            output_mode: doc.output_mode,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(json: &str) -> Result<Mlp> {
        let doc: ModelDoc = serde_json::from_str(json)?;
        Mlp::from_doc(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::OutputMode;

    #[test]
    fn json_round_trip_is_bit_exact() {
        let net = Mlp::init(5, 8, 2, OutputMode::Sigmoid, 17);
        let json = net.to_json().unwrap();
        let back = Mlp::from_json(&json).unwrap();
        assert_eq!(net.param_digest(), back.param_digest());
        assert_eq!(net.output_mode, back.output_mode);
    }

    #[test]
    fn load_rejects_bad_shapes() {
        let net = Mlp::init(3, 4, 1, OutputMode::Linear, 1);
        let mut doc = net.to_doc();
        doc.layers[0].bias.pop();
        assert!(Mlp::from_doc(&doc).is_err());

        let mut doc = net.to_doc();
        doc.layers.pop();
        assert!(Mlp::from_doc(&doc).is_err());
    }

    #[test]
    fn load_rejects_non_finite() {
        let net = Mlp::init(3, 4, 1, OutputMode::Linear, 1);
        let mut doc = net.to_doc();
        doc.layers[2].weight[0][0] = f64::NAN;
        assert!(Mlp::from_doc(&doc).is_err());
    }

    #[test]
    fn load_rejects_unknown_schema_version() {
        let net = Mlp::init(3, 4, 1, OutputMode::Linear, 1);
        let mut doc = net.to_doc();
        doc.schema_version = 99;
        assert!(Mlp::from_doc(&doc).is_err());
    }
}
