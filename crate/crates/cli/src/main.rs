use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oeturbo::bounds::{asymptote_csv, asymptote_multi, asymptote_single};
use oeturbo::harness::{ber_csv, parse_snr_grid, run_ber_sweep, run_census, run_ensemble_stats, RunConfig};
use oeturbo::interleave::HsrBudget;
use oeturbo::plot::{emit_plot, read_series_csv, PlotStyle};
use oeturbo::spectrum::{DistanceSpectrum, SearchLimits, SpectrumSearcher};
use oeturbo::{Error, Result};

#[derive(Parser)]
#[command(name = "oeturbo", version, about = "Rate-1/2 turbo codes with odd-even interleavers")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write one interleaver as text (length, then one image per line).
    GenInterleaver(Common),
    /// Distance spectrum of one configuration up to --dmax.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        dmax: u32,
    },
    /// Mean free-distance statistics over an interleaver ensemble.
    EnsembleStats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        /// First d_max tried by the free-distance search.
        #[arg(long)]
        dfree_start: Option<u32>,
    },
    /// Monte Carlo BER sweep.
    Ber {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        iters: Option<usize>,
        /// Eb/N0 grid `a:b:step` in dB, or a single value.
        #[arg(long)]
        snr: Option<String>,
        #[arg(long)]
        min_errors: Option<u64>,
        #[arg(long)]
        max_frames: Option<u64>,
    },
    /// Weight-2 pairing census over an ensemble.
    Census {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        cycle_length: Option<u32>,
        #[arg(long)]
        max_distance: Option<u32>,
        /// Also tabulate the weight-2 free-distance codewords into this CSV.
        #[arg(long)]
        dfree_out: Option<PathBuf>,
    },
    /// Union-bound asymptote from a spectrum CSV or a single (w, d) pair.
    Asymptote(AsymptoteArgs),
    /// Log-scale BER plot (SVG) from BER/asymptote CSVs.
    Plot(PlotArgs),
}

/// Options shared by the code/interleaver commands; each mirrors a config key.
#[derive(Args, Default)]
struct Common {
    /// `key=value` file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// lte | berrou
    #[arg(long)]
    code: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// random | random-oe | hsr | hsr-oe | block
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    s: Option<u32>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// Fixed interleaver file (overrides --family).
    #[arg(long)]
    interleaver: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// none | first | both | both-p2
    #[arg(long)]
    term: Option<String>,
    /// even | odd
    #[arg(long)]
    phase: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AsymptoteArgs {
    /// Spectrum CSV; every listed term is summed.
    #[arg(long, conflicts_with_all = ["wfree", "dfree"])]
    spectrum: Option<PathBuf>,
    #[arg(long, requires = "dfree")]
    wfree: Option<f64>,
    #[arg(long, requires = "wfree")]
    dfree: Option<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    rate: f64,
    #[arg(long, default_value = "0:6:0.25")]
    snr: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Input CSVs as `path` or `path=label`, drawn in the given order.
    #[arg(required = true)]
    series: Vec<String>,
    #[arg(long, default_value = "")]
    title: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_config(common: &Common, extra: &[(&str, Option<String>)]) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_text(&read(path)?)?,
        None => RunConfig::default(),
    };
    let show = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let flags = [
        ("code", common.code.clone()),
        ("n", common.n.map(|v| v.to_string())),
        ("family", common.family.clone()),
        ("s", common.s.map(|v| v.to_string())),
        ("rows", common.rows.map(|v| v.to_string())),
        ("cols", common.cols.map(|v| v.to_string())),
        ("interleaver", show(&common.interleaver)),
        ("seed", common.seed.map(|v| v.to_string())),
        ("term", common.term.clone()),
        ("phase", common.phase.clone()),
        ("out", show(&common.out)),
    ];
    for (k, v) in flags.iter().chain(extra) {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    Ok(cfg)
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::GenInterleaver(common) => {
            let cfg = run_config(&common, &[])?;
            let source = cfg.source()?;
            let n = cfg.frame_len(&source)?;
            let pi = source.generate(n, cfg.seed, HsrBudget::default())?;
            emit(cfg.out.as_ref(), &pi.to_text())
        }
        Cmd::Spectrum { common, dmax } => {
            let cfg = run_config(&common, &[])?;
            let source = cfg.source()?;
            let n = cfg.frame_len(&source)?;
            let pi = source.generate(n, cfg.seed, HsrBudget::default())?;
            let searcher = SpectrumSearcher::new(&cfg.code.rsc(), n, cfg.phase, cfg.termination());
            let spec = searcher.compute(&pi, SearchLimits::new(dmax))?;
            emit(cfg.out.as_ref(), &format!("{}{}", cfg.provenance(), spec.to_csv()))
        }
        Cmd::EnsembleStats {
            common,
            samples,
            dfree_start,
        } => {
            let cfg = run_config(&common, &[("samples", s(&samples)), ("dfree-start", s(&dfree_start))])?;
            let stats = run_ensemble_stats(&cfg)?;
            if stats.failures > 0 {
                eprintln!("warning: {} of {} interleavers failed", stats.failures, stats.requested);
            }
            emit(cfg.out.as_ref(), &stats.to_csv(&cfg))
        }
        Cmd::Ber {
            common,
            iters,
            snr,
            min_errors,
            max_frames,
        } => {
            let cfg = run_config(
                &common,
                &[
                    ("iters", s(&iters)),
                    ("snr", snr),
                    ("min-errors", s(&min_errors)),
                    ("max-frames", s(&max_frames)),
                ],
            )?;
            let points = run_ber_sweep(&cfg)?;
            emit(cfg.out.as_ref(), &ber_csv(&cfg, &points))
        }
        Cmd::Census {
            common,
            samples,
            cycle_length,
            max_distance,
            dfree_out,
        } => {
            let cfg = run_config(
                &common,
                &[
                    ("samples", s(&samples)),
                    ("cycle-length", s(&cycle_length)),
                    ("max-distance", s(&max_distance)),
                ],
            )?;
            let report = run_census(&cfg, dfree_out.is_some())?;
            if let (Some(path), Some(text)) = (&dfree_out, report.free_distance_csv()) {
                emit(Some(path), &text)?;
            }
            emit(cfg.out.as_ref(), &report.to_csv(&cfg))
        }
        Cmd::Asymptote(a) => {
            if a.n == 0 || !(a.rate > 0.0 && a.rate <= 1.0) {
                return Err(Error::InvalidParameter("need n >= 1 and 0 < rate <= 1".into()));
            }
            let grid = parse_snr_grid(&a.snr)?;
            let points = match (&a.spectrum, a.wfree, a.dfree) {
                (Some(path), _, _) => {
                    let spec = DistanceSpectrum::from_csv(&read(path)?)?;
                    if spec.terms.is_empty() {
                        return Err(Error::InvalidParameter("spectrum has no terms".into()));
                    }
                    asymptote_multi(&spec.terms, a.n, a.rate, &grid)
                }
                (None, Some(w), Some(d)) => asymptote_single(w, d, a.n, a.rate, &grid),
                _ => {
                    return Err(Error::InvalidParameter(
                        "give --spectrum or both --wfree and --dfree".into(),
                    ))
                }
            };
            emit(a.out.as_ref(), &asymptote_csv(&points))
        }
        Cmd::Plot(p) => {
            let mut series = Vec::new();
            for item in &p.series {
                let (path, label) = item.split_once('=').unwrap_or((item, item));
                let path = PathBuf::from(path);
                let text = read(&path)?;
                let ser = read_series_csv(&text, label)
                    .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
                series.push(ser);
            }
            let style = PlotStyle {
                title: p.title,
                ..Default::default()
            };
            emit(p.out.as_ref(), &emit_plot(&series, &style)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
