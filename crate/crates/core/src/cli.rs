//! Command-line front end. Flags override values from the JSON config file
//! (`--config`, or the `TRIAGE_CONFIG` environment variable).
//!
//! Defaults shown in `--help` are written out by hand so that they can be
//! overridden by the config file; a test keeps them in sync with
//! [`PipelineConfig::default`].

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{PipelineConfig, CONFIG_ENV};
use crate::pipeline::{
    self, CommandError, ExitStatus, ExportArgs, FilterArgs, KeyframeArgs, ScoreArgs, TourArgs,
};

#[derive(Debug, Parser)]
#[command(
    name = "triage",
    version,
    about = "Post-flight triage of 360° reconnaissance frames"
)]
pub struct Cli {
    /// JSON config file; flags override its values
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Skip undecodable or invalid inputs with a warning instead of failing
    #[arg(long)]
    pub lenient: bool,

    /// Overwrite existing outputs
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every frame by variance of Laplacian and write the score CSV
    Score {
        /// Directory of extracted frames (PNG/JPEG), natural filename order
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Output CSV [default: <output_dir>/scores.csv]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Blur window half-width in frames [default: 20]
        #[arg(long)]
        k: Option<usize>,
        /// Integer downscale before scoring [default: 1]
        #[arg(long)]
        downscale: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-threshold a score CSV and partition frames into kept/discarded
    Filter {
        /// Score CSV produced by `score`
        #[arg(long)]
        scores: PathBuf,
        /// Directory holding the scored frames
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Blur window half-width in frames [default: 20]
        #[arg(long)]
        k: Option<usize>,
        /// Output directory [default: <output_dir>]
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Reduce frames to keyframes, or validate and pass through an external listing
    Keyframes {
        /// Directory of frames
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Output listing [default: <output_dir>/keyframes.txt]
        #[arg(long)]
        out: Option<PathBuf>,
        /// External keyframe listing (indices or file names, one per line)
        #[arg(long)]
        listing: Option<PathBuf>,
        /// Mean absolute thumbnail difference to exceed [default: 8]
        #[arg(long)]
        similarity_threshold: Option<f64>,
        /// Minimum frame gap between keyframes [default: 5]
        #[arg(long)]
        min_gap: Option<usize>,
        /// Thumbnail width [default: 64]
        #[arg(long)]
        thumb_width: Option<usize>,
        /// Thumbnail height [default: 32]
        #[arg(long)]
        thumb_height: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Build the panorama navigation graph (tour.json)
    Tour {
        /// reconstruction.json
        #[arg(long)]
        reconstruction: Option<PathBuf>,
        /// Directory of panorama images, checked for presence
        #[arg(long)]
        panos: Option<PathBuf>,
        /// Output file [default: <output_dir>/tour.json]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Neighbours linked per panorama [default: 4]
        #[arg(long)]
        max_neighbors: Option<usize>,
        /// Maximum link distance [default: unlimited]
        #[arg(long)]
        max_distance: Option<f64>,
        /// Metres per reconstruction unit; distances are unitless without it
        #[arg(long)]
        scale: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Export sparse points and camera centres as ASCII PLY
    ExportPly {
        /// reconstruction.json
        #[arg(long)]
        reconstruction: Option<PathBuf>,
        /// Output file [default: <output_dir>/reconstruction.ply]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Omit camera centres
        #[arg(long)]
        no_shots: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn required(flag: Option<PathBuf>, fallback: Option<PathBuf>, what: &str) -> Result<PathBuf, CommandError> {
    flag.or(fallback).ok_or_else(|| {
        CommandError::new(
            ExitStatus::InvalidInput,
            format!("no {what} given (flag or config)"),
        )
    })
}

fn in_output_dir(cfg: &PipelineConfig, name: &str) -> Option<PathBuf> {
    cfg.output_dir.as_ref().map(|d| d.join(name))
}

pub fn execute(cli: Cli) -> Result<(), CommandError> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Score {
            frames,
            out,
            k,
            downscale,
            common,
        } => {
            let args = ScoreArgs {
                frames_dir: required(frames, cfg.frames_dir.clone(), "frames directory")?,
                out: required(out, in_output_dir(&cfg, "scores.csv"), "output path")?,
                k: k.unwrap_or(cfg.k),
                downscale: downscale.unwrap_or(cfg.downscale),
                lenient: common.lenient || cfg.lenient,
                force: common.force,
            };
            let s = pipeline::cmd_score(&args)?;
            println!("scored {} frames ({} skipped)", s.scored, s.skipped.len());
        }
        Command::Filter {
            scores,
            frames,
            k,
            out_dir,
            common,
        } => {
            let args = FilterArgs {
                scores,
                frames_dir: required(frames, cfg.frames_dir.clone(), "frames directory")?,
                k: k.unwrap_or(cfg.k),
                out_dir: required(out_dir, cfg.output_dir.clone(), "output directory")?,
                force: common.force,
            };
            let s = pipeline::cmd_filter(&args)?;
            println!("kept {} of {} frames, discarded {}", s.kept, s.total, s.discarded);
        }
        Command::Keyframes {
            frames,
            out,
            listing,
            similarity_threshold,
            min_gap,
            thumb_width,
            thumb_height,
            common,
        } => {
            let p = &mut cfg.keyframes;
            p.similarity_threshold = similarity_threshold.unwrap_or(p.similarity_threshold);
            p.min_gap = min_gap.unwrap_or(p.min_gap);
            p.thumb_width = thumb_width.unwrap_or(p.thumb_width);
            p.thumb_height = thumb_height.unwrap_or(p.thumb_height);
            let args = KeyframeArgs {
                frames_dir: required(frames, cfg.frames_dir.clone(), "frames directory")?,
                out: required(out, in_output_dir(&cfg, "keyframes.txt"), "output path")?,
                policy: cfg.keyframes,
                listing,
                lenient: common.lenient || cfg.lenient,
                force: common.force,
            };
            let s = pipeline::cmd_keyframes(&args)?;
            println!("selected {} keyframes of {}", s.selected, s.frames);
        }
        Command::Tour {
            reconstruction,
            panos,
            out,
            max_neighbors,
            max_distance,
            scale,
            common,
        } => {
            let t = &mut cfg.tour;
            t.max_neighbors = max_neighbors.unwrap_or(t.max_neighbors);
            t.max_distance = max_distance.or(t.max_distance);
            t.scale = scale.or(t.scale);
            let args = TourArgs {
                reconstruction: required(reconstruction, cfg.reconstruction.clone(), "reconstruction")?,
                panos_dir: panos.or(cfg.panos_dir.clone()),
                out: required(out, in_output_dir(&cfg, "tour.json"), "output path")?,
                options: cfg.tour,
                lenient: common.lenient || cfg.lenient,
                force: common.force,
            };
            let s = pipeline::cmd_tour(&args)?;
            println!(
                "tour: {} panoramas, {} links, {} missing images",
                s.nodes,
                s.edges,
                s.missing_images.len()
            );
        }
        Command::ExportPly {
            reconstruction,
            out,
            no_shots,
            common,
        } => {
            let args = ExportArgs {
                reconstruction: required(reconstruction, cfg.reconstruction.clone(), "reconstruction")?,
                out: required(out, in_output_dir(&cfg, "reconstruction.ply"), "output path")?,
                include_shots: !no_shots,
                lenient: common.lenient || cfg.lenient,
                force: common.force,
            };
            let n = pipeline::cmd_export_ply(&args)?;
            println!("wrote {n} vertices");
        }
    }
    Ok(())
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitStatus::InvalidInput.code()
            } else {
                0
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitStatus::Success.code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.status.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    fn help(sub: &str) -> String {
        let mut cmd = Cli::command();
        cmd.find_subcommand_mut(sub)
            .unwrap()
            .render_long_help()
            .to_string()
    }

    #[test]
    fn help_defaults_match_config() {
        let d = PipelineConfig::default();
        assert!(help("score").contains(&format!("[default: {}]", d.k)));
        assert!(help("score").contains(&format!("[default: {}]", d.downscale)));
        assert!(help("filter").contains(&format!("[default: {}]", d.k)));
        let kf = help("keyframes");
        assert!(kf.contains(&format!("[default: {}]", d.keyframes.similarity_threshold)));
        assert!(kf.contains(&format!("[default: {}]", d.keyframes.min_gap)));
        assert!(kf.contains(&format!("[default: {}]", d.keyframes.thumb_width)));
        assert!(kf.contains(&format!("[default: {}]", d.keyframes.thumb_height)));
        let tour = help("tour");
        assert!(tour.contains(&format!("[default: {}]", d.tour.max_neighbors)));
        assert!(d.tour.max_distance.is_none() && tour.contains("[default: unlimited]"));
    }

    #[test]
    fn cli_definition_is_valid() {
        Cli::command().debug_assert();
    }
}
