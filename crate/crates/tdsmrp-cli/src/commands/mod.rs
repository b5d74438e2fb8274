pub mod evaluate;
pub mod prepare;
pub mod simulate;
pub mod sweep;
pub mod train;

use std::fmt;
use std::path::Path;

use tdsmrp::io::IoError;
use tdsmrp::model::{ConvStageConfig, ModelConfig};
use tdsmrp::pipeline::AnchorSampling;

/// Failures bucketed by the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configs or data files (exit 2).
    Input(String),
    /// A training run failed or diverged (exit 3).
    Training(String),
    /// Evaluation could not complete (exit 4).
    Evaluation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Training(_) => 3,
            CliError::Evaluation(_) => 4,
        }
    }

    pub fn input(e: impl fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Training(m) => write!(f, "training failed: {m}"),
            CliError::Evaluation(m) => write!(f, "evaluation failed: {m}"),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Shared model-architecture flags.
#[derive(clap::Args, Debug)]
pub struct ModelFlags {
    /// Embedding width of each tuple component.
    #[arg(long, default_value_t = 32)]
    pub embed_dim: usize,
    /// Conv stages as `kernel,stride,channels` triples joined by `;`.
    #[arg(long, default_value = "4,2,64;4,2,64")]
    pub conv: String,
    /// Recurrent cell width.
    #[arg(long, default_value_t = 64)]
    pub recurrent_hidden: usize,
    /// First decoder layer width.
    #[arg(long, default_value_t = 64)]
    pub decoder_hidden: usize,
}

impl ModelFlags {
    pub fn to_config(&self, feature_vocab: usize) -> Result<ModelConfig, CliError> {
        let mut conv = Vec::new();
        if !self.conv.trim().is_empty() && self.conv.trim() != "none" {
            for stage in self.conv.split(';') {
                let parts: Vec<usize> = stage
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| {
                        CliError::Input(format!("bad conv stage {stage:?}, want kernel,stride,channels"))
                    })?;
                if parts.len() != 3 {
                    return Err(CliError::Input(format!(
                        "conv stage {stage:?} needs exactly kernel,stride,channels"
                    )));
                }
                conv.push(ConvStageConfig {
                    kernel: parts[0],
                    stride: parts[1],
                    channels: parts[2],
                });
            }
        }
        let cfg = ModelConfig {
            feature_vocab,
            embed_dim: self.embed_dim,
            conv,
            recurrent_hidden: self.recurrent_hidden,
            decoder_hidden: self.decoder_hidden,
        };
        cfg.validate().map_err(CliError::input)?;
        Ok(cfg)
    }

    pub fn describe(&self) -> String {
        format!(
            "embed={} conv={} hidden={} decoder={}",
            self.embed_dim, self.conv, self.recurrent_hidden, self.decoder_hidden
        )
    }
}

/// Shared anchor-subsampling flags.
#[derive(clap::Args, Debug)]
pub struct AnchorFlags {
    /// Max anchors per episode (0 = every measurement).
    #[arg(long, default_value_t = 32)]
    pub anchors: usize,
    /// Seed of the per-episode anchor subsample.
    #[arg(long, default_value_t = 0)]
    pub anchor_seed: u64,
}

impl AnchorFlags {
    pub fn sampling(&self) -> AnchorSampling {
        if self.anchors == 0 {
            AnchorSampling::All
        } else {
            AnchorSampling::Uniform {
                max_per_episode: self.anchors,
                seed: self.anchor_seed,
            }
        }
    }

    pub fn describe(&self) -> String {
        format!("anchors={} anchor_seed={}", self.anchors, self.anchor_seed)
    }
}

/// Parses seed sets like `0..4` (inclusive) or `0,1,2`.
pub fn parse_seed_set(s: &str) -> Result<Vec<u64>, CliError> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| CliError::Input(format!("bad seed range {s:?}")))?;
        let b: u64 = b.trim().parse().map_err(|_| CliError::Input(format!("bad seed range {s:?}")))?;
        if b < a {
            return Err(CliError::Input(format!("empty seed range {s:?}")));
        }
        Ok((a..=b).collect())
    } else {
        s.split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| CliError::Input(format!("bad seed {x:?}")))
            })
            .collect()
    }
}
