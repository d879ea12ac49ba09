//! Checkpoint JSON: shapes, row-major parameter arrays, and the training
//! config that produced them.

use std::path::Path;

use docalign_core::encoders::{EncoderParams, Projection};
use docalign_core::training::{Checkpoint, TrainConfig};
use docalign_core::Mat;
use serde::{Deserialize, Serialize};

use crate::dataset::{read_json, write_json};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct CheckpointFile {
    d_multi: usize,
    D_s: usize,
    D_v: usize,
    /// `D_s x d_multi`, row-major.
    W_s: Vec<f64>,
    b_s: Vec<f64>,
    /// `D_v x d_multi`, row-major.
    W_v: Vec<f64>,
    b_v: Vec<f64>,
    config: TrainConfig,
    epoch: usize,
    dev_loss: Option<f64>,
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let p = &ckpt.params;
    let file = CheckpointFile {
        d_multi: p.d_multi,
        D_s: p.sentence_dim(),
        D_v: p.image_dim(),
        W_s: p.sentence.weight.as_slice().to_vec(),
        b_s: p.sentence.bias.clone(),
        W_v: p.image.weight.as_slice().to_vec(),
        b_v: p.image.bias.clone(),
        config: ckpt.config.clone(),
        epoch: ckpt.epoch,
        dev_loss: ckpt.dev_loss,
    };
    write_json(path, &file)
}

fn projection(path: &Path, rows: usize, d: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Projection> {
    if bias.len() != d {
        return Err(Error::Config(format!("{}: bias length {} != d_multi {d}", path.display(), bias.len())));
    }
    let weight = Mat::from_vec(rows, d, weight)?;
    if !weight.is_finite() || bias.iter().any(|b| !b.is_finite()) {
        return Err(docalign_core::Error::NonFinite("checkpoint parameters").into());
    }
    Ok(Projection { weight, bias })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file: CheckpointFile = read_json(path)?;
    file.config.validate()?;
    if file.config.d_multi != file.d_multi {
        return Err(Error::Config(format!("{}: config d_multi disagrees with arrays", path.display())));
    }
    let params = EncoderParams {
        d_multi: file.d_multi,
        sentence: projection(path, file.D_s, file.d_multi, file.W_s, file.b_s)?,
        image: projection(path, file.D_v, file.d_multi, file.W_v, file.b_v)?,
    };
    Ok(Checkpoint { params, epoch: file.epoch, dev_loss: file.dev_loss, config: file.config })
}
