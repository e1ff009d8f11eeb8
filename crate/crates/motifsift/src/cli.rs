//! The `motifsift` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use motifsift_core::bench::{aggregate, render_matches, retained_pct, row_label};
use motifsift_core::deform::{apply, schedule, DeformationKind};
use motifsift_core::matching::{
    match_features_with, ransac_homography, MatchOptions, RansacParams,
};
use motifsift_core::sift::extract;
use motifsift_core::synth::{generate_motif, MotifFamily, MotifSpec};
use motifsift_core::{Keypoint, SiftParams};

use crate::formats::{read_json, write_json, DeformSidecar, FeatureFile, MatchFile};
use crate::io::{read_image, write_image};
use crate::report::{markdown, read_csv, write_csv, write_markdown};
use crate::suite::{run_suite, RunOptions, SuiteConfig};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "motifsift",
    version,
    about = "SIFT features and deformation benchmarks for motif imagery"
)]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract features and write them as JSON.
    Detect {
        image: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// SIFT parameter overrides (JSON).
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Match two images and report the retained percentage.
    Match {
        template: PathBuf,
        query: PathBuf,
        #[arg(long)]
        threshold: f64,
        /// Optional nearest / second-nearest ratio test.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        ransac: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Side-by-side match visualisation.
        #[arg(long)]
        viz: Option<PathBuf>,
        /// Match list JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Apply one deformation level.
    Deform {
        image: PathBuf,
        #[arg(long)]
        kind: DeformationKind,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        level: u8,
        #[arg(long)]
        out: PathBuf,
        /// Sidecar JSON with the parameters and ground-truth homography.
        #[arg(long)]
        gt: Option<PathBuf>,
    },
    /// Render a synthetic motif; the spec is saved next to it as JSON.
    Synth {
        #[arg(long)]
        family: MotifFamily,
        #[arg(long, default_value = "800x355", value_parser = parse_size)]
        size: (usize, usize),
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 32)]
        period: usize,
        #[arg(long, default_value_t = 0.8)]
        contrast: f64,
        #[arg(long, default_value_t = 2)]
        border_rows: usize,
        #[arg(long)]
        smooth: bool,
    },
    /// Run a benchmark suite.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// CSV of all records.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Markdown report.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        deformed_dir: Option<PathBuf>,
        #[arg(long)]
        viz_dir: Option<PathBuf>,
    },
    /// Summarise a results CSV.
    Report {
        csv: PathBuf,
        #[arg(long)]
        kind: Option<DeformationKind>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        level: Option<u8>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Write the markdown report here instead of printing it.
        #[arg(long)]
        markdown: Option<PathBuf>,
    },
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(w)?, num(h)?))
}

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(stderr, "{}", e.render());
                    1
                }
                _ => {
                    let text = e.render().to_string();
                    let first = text.lines().next().unwrap_or("invalid arguments");
                    let _ = writeln!(stderr, "motifsift: {}", first.trim_start_matches("error: "));
                    1
                }
            };
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "motifsift: {e}");
            e.exit_code()
        }
    }
}

fn load_params(path: Option<&Path>) -> Result<SiftParams> {
    let p = match path {
        Some(p) => read_json(p)?,
        None => SiftParams::default(),
    };
    p.validate()?;
    Ok(p)
}

fn out_err(e: std::io::Error) -> Error {
    Error::Data(format!("cannot write output: {e}"))
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Detect { image, out, params } => {
            let p = load_params(params.as_deref())?;
            let img = read_image(&image)?;
            let feats = extract(&img, &p)?;
            match out {
                Some(path) => {
                    write_json(&path, &FeatureFile::new(&p, &feats))?;
                    writeln!(stdout, "{} features", feats.len()).map_err(out_err)?;
                }
                None => {
                    let text = serde_json::to_string_pretty(&FeatureFile::new(&p, &feats))
                        .map_err(|e| Error::Data(e.to_string()))?;
                    writeln!(stdout, "{text}").map_err(out_err)?;
                }
            }
        }
        Command::Match {
            template,
            query,
            threshold,
            ratio,
            ransac,
            seed,
            viz,
            out,
            params,
        } => {
            if !(threshold >= 0.0) {
                return Err(Error::usage("--threshold must be >= 0"));
            }
            let p = load_params(params.as_deref())?;
            let (a, b) = (read_image(&template)?, read_image(&query)?);
            let (fa, fb) = (extract(&a, &p)?, extract(&b, &p)?);
            if fa.is_empty() {
                return Err(Error::input(&template, "template has no features"));
            }
            let matches = match_features_with(&fa, &fb, &MatchOptions { threshold, ratio })?;
            let ka: Vec<Keypoint> = fa.iter().map(|f| f.keypoint.clone()).collect();
            let kb: Vec<Keypoint> = fb.iter().map(|f| f.keypoint.clone()).collect();
            let verified = if ransac {
                let rp = RansacParams {
                    seed,
                    ..RansacParams::default()
                };
                match ransac_homography(&matches, &ka, &kb, &rp) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        writeln!(stderr, "motifsift: RANSAC skipped: {e}").map_err(out_err)?;
                        None
                    }
                }
            } else {
                None
            };
            let mut line = format!(
                "{} matches, {:.2}% retained of {} template features",
                matches.len(),
                retained_pct(matches.len(), fa.len()),
                fa.len()
            );
            if let Some(v) = &verified {
                line += &format!(", {} RANSAC inliers", v.inliers.len());
            }
            writeln!(stdout, "{line}").map_err(out_err)?;
            if let Some(path) = out {
                write_json(
                    &path,
                    &MatchFile::new(threshold, &matches, verified.as_ref()),
                )?;
            }
            if let Some(path) = viz {
                let shown = verified.as_ref().map_or(&matches, |v| &v.inliers);
                write_image(&path, &render_matches(&a, &b, shown, &ka, &kb)?)?;
            }
        }
        Command::Deform {
            image,
            kind,
            level,
            out,
            gt,
        } => {
            let img = read_image(&image)?;
            let deformed = apply(&img, &schedule(kind, level)?)?;
            write_image(&out, &deformed.image)?;
            if let Some(path) = gt {
                write_json(&path, &DeformSidecar::from(&deformed))?;
            }
        }
        Command::Synth {
            family,
            size: (width, height),
            seed,
            out,
            period,
            contrast,
            border_rows,
            smooth,
        } => {
            let spec = MotifSpec {
                family,
                width,
                height,
                period,
                contrast,
                border_rows,
                seed,
                smooth,
            };
            spec.validate()?;
            write_image(&out, &generate_motif(&spec)?)?;
            write_json(&out.with_extension("json"), &spec)?;
        }
        Command::Bench {
            config,
            out,
            report,
            deformed_dir,
            viz_dir,
        } => {
            let cfg = SuiteConfig::load(&config)?;
            let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
            let resolve = |flag: Option<PathBuf>, cfg_path: &Option<PathBuf>| {
                flag.or_else(|| cfg_path.as_ref().map(|p| base.join(p)))
            };
            let csv_path = resolve(out, &cfg.output_paths.csv);
            let md_path = resolve(report, &cfg.output_paths.markdown);
            if csv_path.is_none() && md_path.is_none() {
                return Err(Error::usage(
                    "bench needs --out or --report (or outputPaths in the config)",
                ));
            }
            let opts = RunOptions {
                jobs: cli.jobs,
                base_dir: Some(base.clone()),
                deformed_dir: resolve(deformed_dir, &cfg.output_paths.deformed_dir),
                viz_dir: resolve(viz_dir, &cfg.output_paths.viz_dir),
            };
            let outcome = run_suite(&cfg, &opts)?;
            for f in &outcome.failures {
                writeln!(
                    stderr,
                    "motifsift: skipped {}: {}",
                    crate::suite::cell_stem(&f.class_name, f.kind, f.level),
                    f.message
                )
                .map_err(out_err)?;
            }
            if let Some(p) = &csv_path {
                write_csv(p, &outcome.records)?;
            }
            if let Some(p) = &md_path {
                write_markdown(p, &outcome.records)?;
            }
            writeln!(
                stdout,
                "{} records over {} deformed images",
                outcome.records.len(),
                outcome.deformed_images
            )
            .map_err(out_err)?;
        }
        Command::Report {
            csv,
            kind,
            level,
            threshold,
            markdown: md_out,
        } => {
            let records = read_csv(&csv)?;
            match (kind, level, threshold) {
                (Some(k), Some(l), Some(t)) => {
                    let mean =
                        aggregate(&records, k, t, l).map_err(|e| Error::Data(e.to_string()))?;
                    writeln!(stdout, "{} {:.2}%", row_label(k, l, t), mean).map_err(out_err)?;
                }
                (None, None, None) => match md_out {
                    Some(p) => write_markdown(&p, &records)?,
                    None => write!(stdout, "{}", markdown(&records)?).map_err(out_err)?,
                },
                _ => return Err(Error::usage("--kind, --level and --threshold go together")),
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("motifsift").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn size_parsing() {
        assert_eq!(parse_size("800x355"), Ok((800, 355)));
        assert!(parse_size("800").is_err());
        assert!(parse_size("ax2").is_err());
    }

    #[test]
    fn level_out_of_range_is_usage_error() {
        let (code, _, err) = run_args(&[
            "deform", "img.png", "--kind", "blur", "--level", "9", "--out", "o.png",
        ]);
        assert_eq!(code, 1);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.contains("9"));
    }

    #[test]
    fn unknown_kind_is_usage_error() {
        let (code, _, _) = run_args(&[
            "deform", "img.png", "--kind", "sharpen", "--level", "2", "--out", "o.png",
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn missing_input_is_data_error() {
        let (code, _, err) = run_args(&["detect", "/nonexistent/in.png"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("motifsift: /nonexistent/in.png"));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("bench"));
    }

    #[test]
    fn partial_report_filter_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("r.csv");
        std::fs::write(&csv, format!("{}\n", crate::report::CSV_HEADER)).unwrap();
        let (code, _, _) = run_args(&["report", csv.to_str().unwrap(), "--kind", "blur"]);
        assert_eq!(code, 1);
    }
}
