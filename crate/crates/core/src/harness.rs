//! Experiment drivers: ensemble free-distance statistics, BER sweeps and
//! weight-2 pairing censuses, plus the flat `key=value` run configuration
//! shared with the command-line tool.
//!
//! Every random draw is seeded from `derive_seed(master, job)`, and results are
//! aggregated in job order, so output does not depend on the worker count.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;

use crate::channel::{llr, transmit, ChannelSpec};
use crate::codec::{turbo_decode, turbo_encode, LlrFrame, PuncturePhase, Termination, TurboCodeConfig};
use crate::error::{Error, Result};
use crate::interleave::{
    gen_block, gen_hsr, gen_hsr_oddeven, gen_random, gen_random_oddeven, weight2_pairing_census, HsrBudget,
    PairingCensus, Permutation,
};
use crate::poly::RscSpec;
use crate::rng::{derive_seed, rng_from_seed};
use crate::spectrum::{SpectrumSearcher, SpectrumTerm};

/// Environment variable holding the worker count.
pub const THREADS_ENV: &str = "OETURBO_THREADS";

/// Frames simulated between stop-rule checks.
const BER_BATCH: u64 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Code {
    #[default]
    Lte,
    Berrou,
}

impl Code {
    pub fn rsc(self) -> RscSpec {
        match self {
            Code::Lte => RscSpec::lte(),
            Code::Berrou => RscSpec::berrou(),
        }
    }

    /// Termination used when none is configured: LTE-style for the LTE code,
    /// parity-only second tail for the Berrou code.
    pub fn default_termination(self) -> Termination {
        match self {
            Code::Lte => Termination::Both,
            Code::Berrou => Termination::BothSecondParityOnly,
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Code::Lte => "lte",
            Code::Berrou => "berrou",
        })
    }
}

impl FromStr for Code {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lte" => Ok(Code::Lte),
            "berrou" => Ok(Code::Berrou),
            _ => Err(Error::InvalidParameter(format!(
                "unknown code {s:?} (expected lte|berrou)"
            ))),
        }
    }
}

/// Interleaver family name as given on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FamilyKind {
    #[default]
    Random,
    RandomOddEven,
    Hsr,
    HsrOddEven,
    Block,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Random => "random",
            FamilyKind::RandomOddEven => "random-oe",
            FamilyKind::Hsr => "hsr",
            FamilyKind::HsrOddEven => "hsr-oe",
            FamilyKind::Block => "block",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(FamilyKind::Random),
            "random-oe" => Ok(FamilyKind::RandomOddEven),
            "hsr" => Ok(FamilyKind::Hsr),
            "hsr-oe" => Ok(FamilyKind::HsrOddEven),
            "block" => Ok(FamilyKind::Block),
            _ => Err(Error::InvalidParameter(format!(
                "unknown family {s:?} (expected random|random-oe|hsr|hsr-oe|block)"
            ))),
        }
    }
}

/// Where interleavers come from: a seeded family or a fixed file.
#[derive(Clone, Debug, PartialEq)]
pub enum InterleaverSource {
    Random,
    RandomOddEven,
    Hsr { s: u32 },
    HsrOddEven { s: u32 },
    Block { rows: usize, cols: usize },
    Fixed(Permutation),
}

impl InterleaverSource {
    /// Whether every draw gives the same permutation.
    pub fn is_fixed(&self) -> bool {
        matches!(self, InterleaverSource::Fixed(_) | InterleaverSource::Block { .. })
    }

    pub fn name(&self) -> String {
        match self {
            InterleaverSource::Random => "random".into(),
            InterleaverSource::RandomOddEven => "random-oe".into(),
            InterleaverSource::Hsr { .. } => "hsr".into(),
            InterleaverSource::HsrOddEven { .. } => "hsr-oe".into(),
            InterleaverSource::Block { .. } => "block".into(),
            InterleaverSource::Fixed(_) => "file".into(),
        }
    }

    pub fn params(&self) -> String {
        match self {
            InterleaverSource::Hsr { s } | InterleaverSource::HsrOddEven { s } => format!("s={s}"),
            InterleaverSource::Block { rows, cols } => format!("rows={rows};cols={cols}"),
            _ => String::new(),
        }
    }

    pub fn generate(&self, n: usize, seed: u64, budget: HsrBudget) -> Result<Permutation> {
        match *self {
            InterleaverSource::Random => gen_random(n, seed),
            InterleaverSource::RandomOddEven => gen_random_oddeven(n, seed),
            InterleaverSource::Hsr { s } => gen_hsr(n, s, seed, budget),
            InterleaverSource::HsrOddEven { s } => gen_hsr_oddeven(n, s, seed, budget),
            InterleaverSource::Block { rows, cols } => gen_block(rows, cols),
            InterleaverSource::Fixed(ref p) => Ok(p.clone()),
        }
    }
}

/// Everything that determines a run. Each field has a `key=value` form (the
/// same names as the command-line flags) and is echoed into output headers.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub code: Code,
    /// Frame length; implied by `rows * cols` or the interleaver file when unset.
    pub n: Option<usize>,
    pub family: FamilyKind,
    pub s: Option<u32>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    /// Fixed interleaver file; overrides `family`.
    pub interleaver: Option<PathBuf>,
    pub phase: PuncturePhase,
    /// `None` picks the code's default.
    pub termination: Option<Termination>,
    pub iterations: usize,
    pub snr: Vec<f64>,
    pub min_bit_errors: u64,
    pub max_frames: u64,
    pub samples: usize,
    pub seed: u64,
    /// `None` reads the worker count from the environment.
    pub workers: Option<usize>,
    /// Cycle length for the pairing census; `None` uses the code's.
    pub cycle_length: Option<u32>,
    /// Largest input distance tabulated by the census; `None` means one cycle length.
    pub max_distance: Option<u32>,
    /// First `d_max` tried by the free-distance search; `None` picks one by
    /// family (high-spread interleavers rarely have codewords below 10).
    pub dfree_start: Option<u32>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            code: Code::Lte,
            n: None,
            family: FamilyKind::Random,
            s: None,
            rows: None,
            cols: None,
            interleaver: None,
            phase: PuncturePhase::P1AtEvenIndex,
            termination: None,
            iterations: 10,
            snr: vec![1.0],
            min_bit_errors: 2000,
            max_frames: 2_000_000,
            samples: 100,
            seed: 1,
            workers: None,
            cycle_length: None,
            max_distance: None,
            dfree_start: None,
            out: None,
        }
    }
}

/// Parses `a:b:step` (inclusive) or a single value.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("bad SNR grid {s:?} (expected a:b:step)"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [a] if a.is_finite() => Ok(vec![a]),
        [a, b, step] if a.is_finite() && b.is_finite() && step > 0.0 && b >= a => {
            Ok(crate::bounds::ebno_grid(a, b, step))
        }
        _ => Err(bad()),
    }
}

fn format_snr_grid(grid: &[f64]) -> String {
    grid.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: k + 1,
            msg: format!("expected key=value, got {line:?}"),
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Sets one field from its `key=value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidParameter(format!("bad value {v:?} for {key}")))
        }
        match key {
            "code" => self.code = value.parse()?,
            "n" => self.n = Some(num(key, value)?),
            "family" => self.family = value.parse()?,
            "s" => self.s = Some(num(key, value)?),
            "rows" => self.rows = Some(num(key, value)?),
            "cols" => self.cols = Some(num(key, value)?),
            "interleaver" => self.interleaver = Some(PathBuf::from(value)),
            "phase" => self.phase = value.parse()?,
            "term" => self.termination = Some(value.parse()?),
            "iters" => self.iterations = num(key, value)?,
            "snr" => self.snr = parse_snr_grid(value)?,
            "min-errors" => self.min_bit_errors = num(key, value)?,
            "max-frames" => self.max_frames = num(key, value)?,
            "samples" => self.samples = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "workers" => self.workers = Some(num(key, value)?),
            "cycle-length" => self.cycle_length = Some(num(key, value)?),
            "max-distance" => self.max_distance = Some(num(key, value)?),
            "dfree-start" => self.dfree_start = Some(num(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(Error::InvalidParameter(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_config_text(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn termination(&self) -> Termination {
        self.termination.unwrap_or(self.code.default_termination())
    }

    pub fn source(&self) -> Result<InterleaverSource> {
        if let Some(path) = &self.interleaver {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            return Ok(InterleaverSource::Fixed(Permutation::from_text(&text)?));
        }
        let need_s = || {
            self.s
                .ok_or_else(|| Error::InvalidParameter(format!("family {} needs a spread s", self.family)))
        };
        Ok(match self.family {
            FamilyKind::Random => InterleaverSource::Random,
            FamilyKind::RandomOddEven => InterleaverSource::RandomOddEven,
            FamilyKind::Hsr => InterleaverSource::Hsr { s: need_s()? },
            FamilyKind::HsrOddEven => InterleaverSource::HsrOddEven { s: need_s()? },
            FamilyKind::Block => match (self.rows, self.cols) {
                (Some(rows), Some(cols)) => InterleaverSource::Block { rows, cols },
                _ => return Err(Error::InvalidParameter("family block needs rows and cols".into())),
            },
        })
    }

    /// Frame length implied by the configuration.
    pub fn frame_len(&self, source: &InterleaverSource) -> Result<usize> {
        let implied = match source {
            InterleaverSource::Fixed(p) => Some(p.len()),
            InterleaverSource::Block { rows, cols } => Some(rows * cols),
            _ => None,
        };
        match (self.n, implied) {
            (Some(n), Some(m)) if n != m => Err(Error::InvalidParameter(format!(
                "n={n} conflicts with the interleaver length {m}"
            ))),
            (_, Some(m)) => Ok(m),
            (Some(n), None) => Ok(n),
            (None, None) => Ok(512),
        }
    }

    pub fn cycle_length(&self) -> u32 {
        self.cycle_length.unwrap_or_else(|| self.code.rsc().cycle_length())
    }

    pub fn dfree_start(&self) -> u32 {
        self.dfree_start
            .unwrap_or(match (self.interleaver.is_some(), self.family) {
                (false, FamilyKind::Hsr | FamilyKind::HsrOddEven) => 10,
                _ => 8,
            })
    }

    /// `# key=value` provenance lines covering every field.
    pub fn provenance(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let fields: Vec<(&str, String)> = vec![
            ("code", self.code.to_string()),
            ("n", opt(self.n.map(|v| v.to_string()))),
            ("family", self.family.to_string()),
            ("s", opt(self.s.map(|v| v.to_string()))),
            ("rows", opt(self.rows.map(|v| v.to_string()))),
            ("cols", opt(self.cols.map(|v| v.to_string()))),
            ("interleaver", opt(path(&self.interleaver))),
            ("phase", self.phase.to_string()),
            ("term", self.termination().to_string()),
            ("iters", self.iterations.to_string()),
            ("snr", format_snr_grid(&self.snr)),
            ("min-errors", self.min_bit_errors.to_string()),
            ("max-frames", self.max_frames.to_string()),
            ("samples", self.samples.to_string()),
            ("seed", self.seed.to_string()),
            ("workers", opt(self.workers.map(|v| v.to_string()))),
            ("cycle-length", self.cycle_length().to_string()),
            ("max-distance", opt(self.max_distance.map(|v| v.to_string()))),
            ("dfree-start", opt(self.dfree_start.map(|v| v.to_string()))),
            ("out", opt(path(&self.out))),
        ];
        let mut s = String::new();
        for (k, v) in fields {
            let _ = writeln!(s, "# {k}={v}");
        }
        s
    }
}

/// Worker count from `workers`, else the environment, else rayon's default.
pub fn worker_count(workers: Option<usize>) -> Result<usize> {
    if let Some(w) = workers {
        return if w == 0 {
            Err(Error::InvalidParameter("worker count must be >= 1".into()))
        } else {
            Ok(w)
        };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(Error::InvalidParameter(format!(
                "{THREADS_ENV}={v:?} is not a positive integer"
            ))),
        },
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(workers)?)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

fn code_config(cfg: &RunConfig, pi: Permutation) -> TurboCodeConfig {
    TurboCodeConfig::new(cfg.code.rsc(), pi, cfg.phase, cfg.termination())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub family: String,
    pub params: String,
    pub n: usize,
    pub requested: usize,
    /// Interleavers that contributed to the means.
    pub samples: usize,
    /// Interleavers whose construction or search failed.
    pub failures: usize,
    pub mean_dfree: f64,
    pub mean_nfree: f64,
    pub mean_wfree: f64,
    pub std_dfree: f64,
    pub std_nfree: f64,
    pub std_wfree: f64,
    pub seed: u64,
    /// Free-distance term of each contributing interleaver, in job order.
    pub terms: Vec<SpectrumTerm>,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    (mean, var.sqrt())
}

impl EnsembleStats {
    pub fn from_terms(
        family: String,
        params: String,
        n: usize,
        requested: usize,
        seed: u64,
        terms: Vec<SpectrumTerm>,
    ) -> Self {
        let (mean_dfree, std_dfree) = mean_std(terms.iter().map(|t| t.weight as f64));
        let (mean_nfree, std_nfree) = mean_std(terms.iter().map(|t| t.multiplicity as f64));
        let (mean_wfree, std_wfree) = mean_std(terms.iter().map(|t| t.information_weight as f64));
        Self {
            family,
            params,
            n,
            requested,
            samples: terms.len(),
            failures: requested - terms.len(),
            mean_dfree,
            mean_nfree,
            mean_wfree,
            std_dfree,
            std_nfree,
            std_wfree,
            seed,
            terms,
        }
    }

    pub const CSV_HEADER: &'static str = "family,params,samples,mean_dfree,mean_nfree,mean_wfree,std_dfree";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            self.family, self.params, self.samples, self.mean_dfree, self.mean_nfree, self.mean_wfree, self.std_dfree
        )
    }

    pub fn to_csv(&self, cfg: &RunConfig) -> String {
        let mut s = cfg.provenance();
        let _ = writeln!(s, "# failures={}", self.failures);
        let _ = writeln!(s, "{}", Self::CSV_HEADER);
        let _ = writeln!(s, "{}", self.csv_row());
        s
    }
}

/// Free-distance statistics over `cfg.samples` interleavers drawn with seeds
/// `derive_seed(cfg.seed, i)`. Fails if more than 1% of the draws fail.
pub fn run_ensemble_stats(cfg: &RunConfig) -> Result<EnsembleStats> {
    if cfg.samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let source = cfg.source()?;
    let n = cfg.frame_len(&source)?;
    let searcher = SpectrumSearcher::new(&cfg.code.rsc(), n, cfg.phase, cfg.termination());
    let budget = HsrBudget::default();
    let job = |i: usize| -> Result<SpectrumTerm> {
        let pi = source.generate(n, derive_seed(cfg.seed, i as u64), budget)?;
        let spec = searcher.free_distance(&pi, cfg.dfree_start(), 64)?;
        Ok(spec.terms[0])
    };
    let results: Vec<Result<SpectrumTerm>> = if source.is_fixed() {
        // One interleaver: compute once.
        let r = job(0);
        vec![r; cfg.samples]
    } else {
        pool(cfg.workers)?.install(|| (0..cfg.samples).into_par_iter().map(job).collect())
    };
    let mut terms = Vec::with_capacity(cfg.samples);
    let mut first_err = None;
    for r in results {
        match r {
            Ok(t) => terms.push(t),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let failures = cfg.samples - terms.len();
    if failures * 100 > cfg.samples {
        return Err(Error::ConstructionFailed(format!(
            "{failures} of {} interleavers failed (more than 1%); first error: {}",
            cfg.samples,
            first_err.expect("failures imply an error")
        )));
    }
    Ok(EnsembleStats::from_terms(
        source.name(),
        source.params(),
        n,
        cfg.samples,
        cfg.seed,
        terms,
    ))
}

/// Why a BER point stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MinErrors,
    MaxFrames,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MinErrors => "min-errors",
            StopReason::MaxFrames => "max-frames",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BerPoint {
    pub ebno_db: f64,
    pub frames: u64,
    /// Information bits simulated (tail bits excluded).
    pub bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub stop: StopReason,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    pub fn fer(&self) -> f64 {
        self.frame_errors as f64 / self.frames as f64
    }
}

pub const BER_CSV_HEADER: &str = "ebno_db,frames,bits,bit_errors,frame_errors,ber,fer";

/// BER CSV with provenance header; the stop reason of each point is listed
/// in the header comments.
pub fn ber_csv(cfg: &RunConfig, points: &[BerPoint]) -> String {
    let mut s = cfg.provenance();
    let refresh = match cfg.source() {
        Ok(src) if src.is_fixed() => "fixed",
        _ => "per-frame",
    };
    let _ = writeln!(s, "# interleaver_refresh={refresh}");
    let _ = writeln!(s, "# rate=0.5 (nominal; tail bits not counted)");
    for p in points {
        let _ = writeln!(s, "# stop ebno_db={} reason={}", p.ebno_db, p.stop);
    }
    let _ = writeln!(s, "{BER_CSV_HEADER}");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:e},{:e}",
            p.ebno_db,
            p.frames,
            p.bits,
            p.bit_errors,
            p.frame_errors,
            p.ber(),
            p.fer()
        );
    }
    s
}

/// Bit errors of one simulated frame.
fn simulate_frame(
    cfg: &RunConfig,
    source: &InterleaverSource,
    fixed: Option<&TurboCodeConfig>,
    n: usize,
    ebno_db: f64,
    seed: u64,
) -> Result<u64> {
    let owned;
    let code = match fixed {
        Some(c) => c,
        None => {
            let pi = source.generate(n, derive_seed(seed, 1), HsrBudget::default())?;
            owned = code_config(cfg, pi);
            &owned
        }
    };
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let info: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
    let frame = turbo_encode(code, &info)?;
    let channel = ChannelSpec::new(ebno_db, code.nominal_rate(), derive_seed(seed, 2));
    let y = transmit(&channel, &frame.to_bits());
    let llrs = LlrFrame::from_flat(code, &llr(&channel, &y)?)?;
    let out = turbo_decode(code, &llrs, cfg.iterations)?;
    Ok(out.bits.iter().zip(&info).filter(|(a, b)| a != b).count() as u64)
}

/// Monte Carlo BER at each grid point. A fresh interleaver is drawn for every
/// frame unless the source is fixed. Frames run in batches of 32 and the stop
/// rule is checked between batches.
pub fn run_ber_sweep(cfg: &RunConfig) -> Result<Vec<BerPoint>> {
    if cfg.snr.is_empty() {
        return Err(Error::InvalidParameter("SNR grid is empty".into()));
    }
    if cfg.max_frames == 0 {
        return Err(Error::InvalidParameter("max-frames must be >= 1".into()));
    }
    let source = cfg.source()?;
    let n = cfg.frame_len(&source)?;
    let fixed = if source.is_fixed() {
        Some(code_config(cfg, source.generate(n, cfg.seed, HsrBudget::default())?))
    } else {
        None
    };
    let pool = pool(cfg.workers)?;
    let mut points = Vec::with_capacity(cfg.snr.len());
    for (k, &ebno_db) in cfg.snr.iter().enumerate() {
        let point_seed = derive_seed(cfg.seed, k as u64);
        let (mut frames, mut bit_errors, mut frame_errors) = (0u64, 0u64, 0u64);
        let stop = loop {
            if bit_errors >= cfg.min_bit_errors {
                break StopReason::MinErrors;
            }
            if frames >= cfg.max_frames {
                break StopReason::MaxFrames;
            }
            let batch = BER_BATCH.min(cfg.max_frames - frames);
            let errs: Vec<Result<u64>> = pool.install(|| {
                (frames..frames + batch)
                    .into_par_iter()
                    .map(|j| simulate_frame(cfg, &source, fixed.as_ref(), n, ebno_db, derive_seed(point_seed, j)))
                    .collect()
            });
            for e in errs {
                let e = e?;
                bit_errors += e;
                frame_errors += (e > 0) as u64;
            }
            frames += batch;
        };
        points.push(BerPoint {
            ebno_db,
            frames,
            bits: frames * n as u64,
            bit_errors,
            frame_errors,
            stop,
        });
    }
    Ok(points)
}

/// Ensemble pairing census, optionally with the (input, output) distances of
/// weight-2 free-distance codewords.
#[derive(Clone, Debug, PartialEq)]
pub struct CensusReport {
    pub samples: usize,
    pub census: PairingCensus,
    /// `(input distance, output distance) -> codewords`, when requested.
    pub free_distance_pairs: Option<BTreeMap<(u32, u32), u64>>,
}

impl CensusReport {
    pub fn preservation_probability(&self) -> f64 {
        self.census.preservation_probability()
    }

    /// `input_distance,output_distance,count` rows of pairs whose images are a
    /// multiple of the cycle length apart, preceded by per-distance totals.
    pub fn to_csv(&self, cfg: &RunConfig) -> String {
        let mut s = cfg.provenance();
        let _ = writeln!(s, "# census_samples={}", self.samples);
        for (d, total) in &self.census.pairs {
            let _ = writeln!(
                s,
                "# pairs input_distance={d} total={total} preservation={:e}",
                self.census.preservation(*d)
            );
        }
        let _ = writeln!(s, "input_distance,output_distance,count");
        for ((i, o), c) in &self.census.counts {
            let _ = writeln!(s, "{i},{o},{c}");
        }
        s
    }

    /// `input_distance,output_distance,codewords` for the free-distance histogram.
    pub fn free_distance_csv(&self) -> Option<String> {
        let pairs = self.free_distance_pairs.as_ref()?;
        let mut s = String::from("input_distance,output_distance,codewords\n");
        for ((i, o), c) in pairs {
            let _ = writeln!(s, "{i},{o},{c}");
        }
        Some(s)
    }
}

/// Averages the weight-2 pairing census over `cfg.samples` interleavers. With
/// `with_spectrum`, also tallies the weight-2 inputs of every free-distance
/// codeword by input and output distance.
pub fn run_census(cfg: &RunConfig, with_spectrum: bool) -> Result<CensusReport> {
    if cfg.samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let source = cfg.source()?;
    let n = cfg.frame_len(&source)?;
    let cl = cfg.cycle_length();
    let max_distance = cfg.max_distance.unwrap_or(cl);
    let searcher = with_spectrum.then(|| SpectrumSearcher::new(&cfg.code.rsc(), n, cfg.phase, cfg.termination()));
    type Job = (PairingCensus, Vec<(u32, u32)>);
    let job = |i: usize| -> Result<Job> {
        let pi = source.generate(n, derive_seed(cfg.seed, i as u64), HsrBudget::default())?;
        let census = weight2_pairing_census(&pi, cl, max_distance)?;
        let mut pairs = Vec::new();
        if let Some(searcher) = &searcher {
            let spec = searcher.free_distance(&pi, cfg.dfree_start(), 64)?;
            for input in spec.min_weight_inputs.iter().filter(|v| v.len() == 2) {
                let (a, b) = (input[0] as usize, input[1] as usize);
                let out = (pi.map(a) as i64 - pi.map(b) as i64).unsigned_abs() as u32;
                pairs.push(((b - a) as u32, out));
            }
        }
        Ok((census, pairs))
    };
    let results: Vec<Result<Job>> = pool(cfg.workers)?.install(|| (0..cfg.samples).into_par_iter().map(job).collect());
    let mut total: Option<PairingCensus> = None;
    let mut hist = BTreeMap::new();
    for r in results {
        let (census, pairs) = r?;
        match &mut total {
            Some(t) => t.merge(&census),
            None => total = Some(census),
        }
        for p in pairs {
            *hist.entry(p).or_insert(0u64) += 1;
        }
    }
    Ok(CensusReport {
        samples: cfg.samples,
        census: total.expect("samples >= 1"),
        free_distance_pairs: with_spectrum.then_some(hist),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_grid_parsing() {
        assert_eq!(parse_snr_grid("0:1:0.5").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_snr_grid("2").unwrap(), vec![2.0]);
        for bad in ["", "1:0:0.5", "0:1:0", "a:b:c", "0:1"] {
            assert!(parse_snr_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_text_and_overrides() {
        let cfg =
            RunConfig::from_text("# comment\ncode = berrou\nfamily=block # trailing\nrows=19\ncols=21\n\n").unwrap();
        assert_eq!(cfg.code, Code::Berrou);
        assert_eq!(cfg.termination(), Termination::BothSecondParityOnly);
        let src = cfg.source().unwrap();
        assert_eq!(cfg.frame_len(&src).unwrap(), 399);
        assert!(RunConfig::from_text("bogus=1").is_err());
        match RunConfig::from_text("n=5\nnot a pair") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let mut cfg = cfg;
        cfg.set("n", "400").unwrap();
        assert!(cfg.frame_len(&cfg.source().unwrap()).is_err());
    }

    #[test]
    fn provenance_lists_every_key() {
        let p = RunConfig::default().provenance();
        let mut cfg = RunConfig::default();
        for line in p.lines() {
            let (k, _) = line.trim_start_matches("# ").split_once('=').unwrap();
            // each emitted key is also settable
            let sample = match k {
                "code" => "lte",
                "family" => "random",
                "phase" => "even",
                "term" => "both",
                "snr" => "1",
                "interleaver" | "out" => "x",
                _ => "3",
            };
            cfg.set(k, sample).unwrap();
        }
        assert_eq!(p.lines().count(), 20);
    }

    #[test]
    fn hsr_needs_spread() {
        let cfg = RunConfig {
            family: FamilyKind::Hsr,
            ..Default::default()
        };
        assert!(cfg.source().is_err());
    }

    #[test]
    fn stats_of_constant_terms() {
        let t = SpectrumTerm::new(8, 2, 4);
        let s = EnsembleStats::from_terms("random".into(), String::new(), 64, 3, 0, vec![t; 3]);
        assert_eq!(
            (s.mean_dfree, s.mean_nfree, s.mean_wfree, s.std_dfree),
            (8.0, 2.0, 4.0, 0.0)
        );
        assert_eq!(s.csv_row(), "random,,3,8.000000,2.000000,4.000000,0.000000");
    }

    #[test]
    fn worker_count_validation() {
        assert_eq!(worker_count(Some(3)).unwrap(), 3);
        assert!(worker_count(Some(0)).is_err());
    }
}
