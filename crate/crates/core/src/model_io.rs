//! Versioned binary serialization for trained models.
//!
//! Layout is self-describing: magic bytes, a schema version (loads reject
//! unknown versions), then length-prefixed sections. All scalars are
//! little-endian; parameters are 64-bit floats, so a round trip is
//! bit-exact and re-training with the same seed reproduces files
//! byte-for-byte.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::dataset::NormalizationParams;
use crate::ensemble::{Branch, EnsembleModel, FusionMode};
use crate::matrix::Matrix;
use crate::neural::{Activation, DenseLayer, MlpModel, SaeModel};
use crate::provenance::{Provenance, SplitRef};
use crate::trees::TreeNode;

const ENSEMBLE_MAGIC: &[u8; 4] = b"ICSM";
const MLP_MAGIC: &[u8; 4] = b"ICSN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt model file: {0}")]
    Corrupt(&'static str),
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(magic: &[u8; 4]) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        Self { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn f64_slice(&mut self, vs: &[f64]) {
        self.u32(vs.len() as u32);
        for &v in vs {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], magic: &[u8; 4]) -> Result<Self, ModelIoError> {
        if buf.len() < 8 || &buf[..4] != magic {
            return Err(ModelIoError::BadMagic);
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(ModelIoError::UnsupportedVersion(version));
        }
        Ok(Self { buf, at: 8 })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelIoError> {
        if self.at + n > self.buf.len() {
            return Err(ModelIoError::Corrupt("unexpected end of file"));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ModelIoError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ModelIoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ModelIoError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ModelIoError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, ModelIoError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| ModelIoError::Corrupt("invalid utf-8 string"))
    }

    fn f64_vec(&mut self) -> Result<Vec<f64>, ModelIoError> {
        let len = self.u32()? as usize;
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    fn finish(&self) -> Result<(), ModelIoError> {
        if self.at != self.buf.len() {
            return Err(ModelIoError::Corrupt("trailing bytes"));
        }
        Ok(())
    }
}

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::ReLU => 0,
        Activation::Sigmoid => 1,
        Activation::Identity => 2,
    }
}

fn tag_activation(t: u8) -> Result<Activation, ModelIoError> {
    match t {
        0 => Ok(Activation::ReLU),
        1 => Ok(Activation::Sigmoid),
        2 => Ok(Activation::Identity),
        _ => Err(ModelIoError::Corrupt("unknown activation tag")),
    }
}

fn write_mlp(w: &mut Writer, mlp: &MlpModel) {
    w.u32(mlp.layers.len() as u32);
    w.f64(mlp.dropout_rate);
    for layer in &mlp.layers {
        w.u32(layer.in_dim() as u32);
        w.u32(layer.out_dim() as u32);
        w.u8(activation_tag(layer.activation));
        w.f64_slice(layer.weights.data());
        w.f64_slice(&layer.bias);
    }
}

fn read_mlp(r: &mut Reader) -> Result<MlpModel, ModelIoError> {
    let n_layers = r.u32()? as usize;
    let dropout_rate = r.f64()?;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        let activation = tag_activation(r.u8()?)?;
        let weights = r.f64_vec()?;
        if weights.len() != in_dim * out_dim {
            return Err(ModelIoError::Corrupt("weight block size mismatch"));
        }
        let bias = r.f64_vec()?;
        if bias.len() != out_dim {
            return Err(ModelIoError::Corrupt("bias block size mismatch"));
        }
        layers.push(DenseLayer {
            weights: Matrix::from_vec(out_dim, in_dim, weights),
            bias,
            activation,
        });
    }
    Ok(MlpModel { layers, dropout_rate })
}

fn write_tree(w: &mut Writer, node: &TreeNode) {
    match node {
        TreeNode::Leaf { probability, samples } => {
            w.u8(0);
            w.f64(*probability);
            w.u64(*samples as u64);
        }
        TreeNode::Split { feature, threshold, left, right } => {
            w.u8(1);
            w.u32(*feature as u32);
            w.f64(*threshold);
            write_tree(w, left);
            write_tree(w, right);
        }
    }
}

fn read_tree(r: &mut Reader) -> Result<TreeNode, ModelIoError> {
    match r.u8()? {
        0 => Ok(TreeNode::Leaf { probability: r.f64()?, samples: r.u64()? as usize }),
        1 => {
            let feature = r.u32()? as usize;
            let threshold = r.f64()?;
            let left = Box::new(read_tree(r)?);
            let right = Box::new(read_tree(r)?);
            Ok(TreeNode::Split { feature, threshold, left, right })
        }
        _ => Err(ModelIoError::Corrupt("unknown tree node tag")),
    }
}

fn write_provenance(w: &mut Writer, p: &Provenance) {
    w.u64(p.master_seed);
    w.str(&p.config_hash);
    w.str(&p.source_fingerprint);
    w.str(&p.train_fingerprint);
    match &p.split {
        Some(s) => {
            w.u8(1);
            w.u64(s.seed);
            w.f64(s.test_fraction);
            w.u32(s.repetitions);
            w.u32(s.repetition);
        }
        None => w.u8(0),
    }
    w.u8(u8::from(p.with_replacement));
    w.u64(p.leftover_normals);
}

fn read_provenance(r: &mut Reader) -> Result<Provenance, ModelIoError> {
    let master_seed = r.u64()?;
    let config_hash = r.str()?;
    let source_fingerprint = r.str()?;
    let train_fingerprint = r.str()?;
    let split = match r.u8()? {
        0 => None,
        1 => Some(SplitRef {
            seed: r.u64()?,
            test_fraction: r.f64()?,
            repetitions: r.u32()?,
            repetition: r.u32()?,
        }),
        _ => return Err(ModelIoError::Corrupt("unknown split tag")),
    };
    Ok(Provenance {
        master_seed,
        config_hash,
        source_fingerprint,
        train_fingerprint,
        split,
        with_replacement: r.u8()? != 0,
        leftover_normals: r.u64()?,
    })
}

fn fusion_tag(mode: FusionMode) -> u8 {
    match mode {
        FusionMode::Hidden => 0,
        FusionMode::HiddenPlusProb => 1,
        FusionMode::ProbOnly => 2,
    }
}

fn tag_fusion(t: u8) -> Result<FusionMode, ModelIoError> {
    match t {
        0 => Ok(FusionMode::Hidden),
        1 => Ok(FusionMode::HiddenPlusProb),
        2 => Ok(FusionMode::ProbOnly),
        _ => Err(ModelIoError::Corrupt("unknown fusion mode tag")),
    }
}

/// Serializes an ensemble model to bytes.
pub fn ensemble_to_bytes(model: &EnsembleModel) -> Vec<u8> {
    let mut w = Writer::new(ENSEMBLE_MAGIC);
    write_provenance(&mut w, &model.provenance);
    w.f64_slice(&model.normalization.min);
    w.f64_slice(&model.normalization.max);
    w.u32(model.feature_names.len() as u32);
    for name in &model.feature_names {
        w.str(name);
    }
    w.u8(fusion_tag(model.fusion_mode));
    w.f64(model.w_s);
    w.u32(model.branches.len() as u32);
    for branch in &model.branches {
        write_mlp(&mut w, &branch.sae.net);
        w.u32(branch.sae.encoder_len as u32);
        write_mlp(&mut w, &branch.dnn);
    }
    write_tree(&mut w, &model.tree);
    w.buf
}

pub fn ensemble_from_bytes(bytes: &[u8]) -> Result<EnsembleModel, ModelIoError> {
    let mut r = Reader::new(bytes, ENSEMBLE_MAGIC)?;
    let provenance = read_provenance(&mut r)?;
    let min = r.f64_vec()?;
    let max = r.f64_vec()?;
    if min.len() != max.len() {
        return Err(ModelIoError::Corrupt("normalization length mismatch"));
    }
    let n_names = r.u32()? as usize;
    let mut feature_names = Vec::with_capacity(n_names);
    for _ in 0..n_names {
        feature_names.push(r.str()?);
    }
    let fusion_mode = tag_fusion(r.u8()?)?;
    let w_s = r.f64()?;
    let k = r.u32()? as usize;
    let mut branches = Vec::with_capacity(k);
    for _ in 0..k {
        let net = read_mlp(&mut r)?;
        let encoder_len = r.u32()? as usize;
        if encoder_len == 0 || encoder_len >= net.layers.len() {
            return Err(ModelIoError::Corrupt("encoder length out of range"));
        }
        let sae = SaeModel { net, encoder_len };
        let dnn = read_mlp(&mut r)?;
        branches.push(Branch { sae, dnn });
    }
    let tree = read_tree(&mut r)?;
    r.finish()?;
    Ok(EnsembleModel {
        normalization: NormalizationParams { min, max },
        branches,
        fusion_mode,
        w_s,
        tree,
        feature_names,
        provenance,
    })
}

pub fn save_ensemble(path: &Path, model: &EnsembleModel) -> Result<(), ModelIoError> {
    fs::write(path, ensemble_to_bytes(model))?;
    Ok(())
}

pub fn load_ensemble(path: &Path) -> Result<EnsembleModel, ModelIoError> {
    ensemble_from_bytes(&fs::read(path)?)
}

/// Standalone network files (used for exporting individual branches).
pub fn mlp_to_bytes(mlp: &MlpModel) -> Vec<u8> {
    let mut w = Writer::new(MLP_MAGIC);
    write_mlp(&mut w, mlp);
    w.buf
}

pub fn mlp_from_bytes(bytes: &[u8]) -> Result<MlpModel, ModelIoError> {
    let mut r = Reader::new(bytes, MLP_MAGIC)?;
    let mlp = read_mlp(&mut r)?;
    r.finish()?;
    Ok(mlp)
}
