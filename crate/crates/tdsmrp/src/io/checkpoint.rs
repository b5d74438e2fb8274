//! Checkpoints: a versioned binary header (format version, architecture,
//! parameter count) followed by the flat little-endian f64 parameter vector
//! in declaration order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::IoError;
use crate::model::{param_count, ConvStageConfig, ModelConfig, ValueModel};

const MAGIC: &[u8; 4] = b"TDCK";
const VERSION: u32 = 1;

pub fn write_checkpoint(path: &Path, model: &ValueModel) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let cfg = model.config();
    w.write_all(&(cfg.feature_vocab as u32).to_le_bytes())?;
    w.write_all(&(cfg.embed_dim as u32).to_le_bytes())?;
    w.write_all(&(cfg.conv.len() as u32).to_le_bytes())?;
    for s in &cfg.conv {
        w.write_all(&(s.kernel as u32).to_le_bytes())?;
        w.write_all(&(s.stride as u32).to_le_bytes())?;
        w.write_all(&(s.channels as u32).to_le_bytes())?;
    }
    w.write_all(&(cfg.recurrent_hidden as u32).to_le_bytes())?;
    w.write_all(&(cfg.decoder_hidden as u32).to_le_bytes())?;
    w.write_all(&(model.n_params() as u64).to_le_bytes())?;
    for p in model.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, IoError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_checkpoint(path: &Path) -> Result<ValueModel, IoError> {
    let label = path.display().to_string();
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(IoError::Invalid(format!("{label}: not a checkpoint file")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(IoError::Invalid(format!(
            "{label}: unsupported checkpoint version {version}"
        )));
    }
    let feature_vocab = read_u32(&mut r)? as usize;
    let embed_dim = read_u32(&mut r)? as usize;
    let n_conv = read_u32(&mut r)? as usize;
    if n_conv > 64 {
        return Err(IoError::Invalid(format!("{label}: implausible conv depth")));
    }
    let mut conv = Vec::with_capacity(n_conv);
    for _ in 0..n_conv {
        conv.push(ConvStageConfig {
            kernel: read_u32(&mut r)? as usize,
            stride: read_u32(&mut r)? as usize,
            channels: read_u32(&mut r)? as usize,
        });
    }
    let recurrent_hidden = read_u32(&mut r)? as usize;
    let decoder_hidden = read_u32(&mut r)? as usize;
    let config = ModelConfig {
        feature_vocab,
        embed_dim,
        conv,
        recurrent_hidden,
        decoder_hidden,
    };
    let mut count_buf = [0u8; 8];
    r.read_exact(&mut count_buf)?;
    let count = u64::from_le_bytes(count_buf) as usize;
    if count != param_count(&config) {
        return Err(IoError::Invalid(format!(
            "{label}: header declares {count} parameters, architecture needs {}",
            param_count(&config)
        )));
    }
    let mut params = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        params.push(f64::from_le_bytes(buf));
    }
    ValueModel::from_params(config, params).map_err(|e| IoError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let cfg = ModelConfig {
            feature_vocab: 6,
            embed_dim: 8,
            conv: vec![ConvStageConfig {
                kernel: 4,
                stride: 2,
                channels: 12,
            }],
            recurrent_hidden: 10,
            decoder_hidden: 8,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let model = ValueModel::init(cfg, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        write_checkpoint(&path, &model).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back.config(), model.config());
        assert_eq!(back.params(), model.params());
        // identical bytes on rewrite
        let path2 = dir.path().join("model2.ckpt");
        write_checkpoint(&path2, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn corrupted_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(read_checkpoint(&path).is_err());
    }
}
