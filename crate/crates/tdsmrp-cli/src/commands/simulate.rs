use std::path::PathBuf;
use std::time::Instant;

use tdsmrp::io::{cohort_from_str, shift_from_str, write_dataset, Dataset, RunManifest};
use tdsmrp::sim::{absorption_probability, apply_shift, sample_cohort};

use super::{read_to_string, CliError};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Cohort config file.
    pub config: PathBuf,
    /// Episodes to sample.
    #[arg(long)]
    pub episodes: usize,
    /// Base seed; episode i draws from stream i.
    #[arg(long)]
    pub seed: u64,
    /// Patient ids start here (keeps cohorts disjoint across files).
    #[arg(long, default_value_t = 0)]
    pub id_offset: u64,
    /// Optional shift spec producing an external-analog cohort.
    #[arg(long)]
    pub shift: Option<PathBuf>,
    /// Output dataset path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let started = Instant::now();
    let text = read_to_string(&args.config)?;
    let mut cohort = cohort_from_str(&args.config.display().to_string(), &text)?;
    if let Some(shift_path) = &args.shift {
        let stext = read_to_string(shift_path)?;
        let shift = shift_from_str(&shift_path.display().to_string(), &stext)?;
        cohort = apply_shift(&cohort, &shift).map_err(CliError::input)?;
    }
    let episodes = sample_cohort(&cohort, args.seed, args.episodes, args.id_offset)
        .map_err(CliError::input)?;
    let dataset = Dataset {
        registry: cohort.registry().map_err(CliError::input)?,
        episodes,
        state_oracle: Some(absorption_probability(&cohort).map_err(CliError::input)?),
    };
    write_dataset(&args.out, &dataset)?;

    let mut manifest = RunManifest::new("simulate", vec![args.seed]);
    manifest.add_input(&args.config)?;
    if let Some(p) = &args.shift {
        manifest.add_input(p)?;
    }
    manifest.add_output(&args.out)?;
    manifest.seal(&format!(
        "simulate --episodes {} --seed {} --id-offset {} --shift {}",
        args.episodes,
        args.seed,
        args.id_offset,
        args.shift.is_some()
    ));
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(&args.out.with_extension("manifest.json"))?;
    log::info!(
        "wrote {} episodes to {}",
        dataset.episodes.len(),
        args.out.display()
    );
    Ok(())
}
