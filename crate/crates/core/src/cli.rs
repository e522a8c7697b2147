//! Command implementations for the `dstm` binary.
//!
//! Each command writes its primary output plus a `<out>.manifest.toml` that
//! records the resolved configuration, so a CSV can be regenerated from its
//! manifest alone. Exit codes: 0 ok, 1 verification failure or runtime
//! error, 2 bad arguments.

use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{csv_row, Alphabet, BlerPoint, Scheme, SimConfig, Simulator, CSV_HEADER};
use crate::codec::{DecoderState, SymbolDecoder};
use crate::constellation::{check_criteria, closed_form_m4, ConstellationSet};
use crate::design::{gain_sweep, optimize_detailed};
use crate::error::{Error, Result};
use crate::stbc::{
    alamouti_set, assemble, gram_decompose, mdc_det_min_closed_form, mdc_map, min_pairwise_determinant,
    min_rank_all_pairs, ostbc_rate34_4tx, SymbolVector,
};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "DSTM_WORKERS";

pub const VERSION: &str = concat!("dstm-v", env!("CARGO_PKG_VERSION"));

#[derive(Parser, Debug)]
#[command(name = "dstm", version, about = "Differential space-time modulation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimize a quasi-unitary constellation.
    Design(DesignArgs),
    /// Best coding gain over a grid of hyperbola constants.
    GainSweep(GainSweepArgs),
    /// Block-error-rate sweep over SNR.
    Bler(BlerArgs),
    /// Run the invariant battery.
    Verify(VerifyArgs),
    /// Dump the dispersion matrices of a code.
    Code(CodeArgs),
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub nu: f64,
    #[arg(long, default_value_t = 4)]
    pub ntx: usize,
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "constellation.txt")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GainSweepArgs {
    /// Comma-separated constellation sizes.
    #[arg(long, value_delimiter = ',', default_value = "4,8")]
    pub m: Vec<usize>,
    /// Comma-separated list or `start:step:stop`.
    #[arg(long = "nu-grid", default_value = "0,0.05,0.1,0.15,0.2,0.3")]
    pub nu_grid: String,
    #[arg(long, default_value_t = 4)]
    pub ntx: usize,
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "gain_sweep.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Default)]
pub struct BlerArgs {
    /// TOML file with any of the keys below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `mdc_qostbc_dstm` or `ostbc_dstm`.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub ntx: Option<usize>,
    #[arg(long)]
    pub nrx: Option<usize>,
    /// Built-in set: m1, m2, qamM, pskM.
    #[arg(long)]
    pub constellation: Option<String>,
    #[arg(long)]
    pub constellation_file: Option<PathBuf>,
    /// Comma-separated list or `start:step:stop` in dB; `inf` and `-inf` allowed.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    #[arg(long)]
    pub genie: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_errors: Option<u64>,
    #[arg(long)]
    pub max_frames: Option<u64>,
    #[arg(long)]
    pub symbols_per_antenna: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Run every check (the default).
    #[arg(long)]
    pub all: bool,
    /// Also audit this constellation file.
    #[arg(long)]
    pub constellation_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct CodeArgs {
    #[arg(long, default_value = "mdc_qostbc_dstm")]
    pub scheme: String,
    #[arg(long, default_value_t = 4)]
    pub ntx: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Keys accepted in a `bler` config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlerFileConfig {
    pub scheme: Option<String>,
    pub ntx: Option<usize>,
    pub nrx: Option<usize>,
    pub constellation: Option<String>,
    pub constellation_file: Option<PathBuf>,
    pub snr: Option<String>,
    pub genie: Option<bool>,
    pub seed: Option<u64>,
    pub min_errors: Option<u64>,
    pub max_frames: Option<u64>,
    pub symbols_per_antenna: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Fully resolved `bler` configuration, echoed into the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlerResolved {
    pub scheme: String,
    pub ntx: usize,
    pub nrx: usize,
    pub constellation: String,
    pub constellation_file: Option<PathBuf>,
    pub snr: String,
    pub genie: bool,
    pub seed: u64,
    pub min_errors: u64,
    pub max_frames: u64,
    pub symbols_per_antenna: usize,
    pub out: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub master_seed: u64,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<PathBuf>,
    pub spectral_efficiency: Option<String>,
    pub config: toml::Table,
}

impl RunManifest {
    fn new(command: &str, seed: u64, config: &impl Serialize) -> Result<Self> {
        let config = toml::Table::try_from(config).map_err(|e| Error::Config(e.to_string()))?;
        Ok(RunManifest {
            command: command.to_string(),
            version: VERSION.to_string(),
            master_seed: seed,
            started_unix: unix_now(),
            finished_unix: 0.0,
            outputs: Vec::new(),
            spectral_efficiency: None,
            config,
        })
    }

    fn finish(mut self, primary: &Path) -> Result<PathBuf> {
        self.finished_unix = unix_now();
        let path = manifest_path(primary);
        let text = toml::to_string(&self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(&path, text)?;
        Ok(path)
    }
}

fn table<const N: usize>(pairs: [(&str, toml::Value); N]) -> toml::Table {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".manifest.toml");
    PathBuf::from(s)
}

/// Plot file next to `primary`: same stem, `.dat` extension.
pub fn plot_path(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    primary.with_file_name(format!("{stem}{suffix}.dat"))
}

fn write_plot(path: &Path, header: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut text = format!("# {header}\n");
    for (x, y) in rows {
        text.push_str(&format!("{x:.10e} {y:.10e}\n"));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Parses `a,b,c` or `start:step:stop` (inclusive); `inf`/`-inf` allowed in lists.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |s: &str| Error::Parse(format!("bad number '{s}' in grid '{text}'"));
    let num = |s: &str| -> Result<f64> {
        let s = s.trim();
        match s {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => s.parse::<f64>().map_err(|_| bad(s)),
        }
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (a, h, b) = (num(start)?, num(step)?, num(stop)?);
            if !(a.is_finite() && h.is_finite() && b.is_finite()) || h <= 0.0 || b < a {
                return Err(Error::Parse(format!("bad range '{text}'")));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            (0..=n).map(|i| a + i as f64 * h).collect()
        }
        [_] => text.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::Parse(format!("bad grid '{text}'"))),
    };
    if grid.is_empty() {
        return Err(Error::Parse("empty grid".into()));
    }
    Ok(grid)
}

/// Combines flags with an optional config file; flags win.
pub fn resolve_bler(args: &BlerArgs) -> Result<BlerResolved> {
    let file = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            toml::from_str::<BlerFileConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => BlerFileConfig::default(),
    };
    let constellation_file = args.constellation_file.clone().or(file.constellation_file);
    let constellation = match (&args.constellation, &constellation_file) {
        (Some(c), _) => c.clone(),
        (None, Some(p)) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "file".into()),
        (None, None) => file.constellation.unwrap_or_else(|| "m1".into()),
    };
    Ok(BlerResolved {
        scheme: args.scheme.clone().or(file.scheme).unwrap_or_else(|| "mdc_qostbc_dstm".into()),
        ntx: args.ntx.or(file.ntx).unwrap_or(4),
        nrx: args.nrx.or(file.nrx).unwrap_or(1),
        // an explicit --constellation overrides a file from the config
        constellation_file: if args.constellation.is_some() && args.constellation_file.is_none() {
            None
        } else {
            constellation_file
        },
        constellation,
        snr: args.snr.clone().or(file.snr).unwrap_or_else(|| "0:2:24".into()),
        genie: args.genie || file.genie.unwrap_or(false),
        seed: args.seed.or(file.seed).unwrap_or(1),
        min_errors: args.min_errors.or(file.min_errors).unwrap_or(crate::channel::DEFAULT_MIN_FRAME_ERRORS),
        max_frames: args.max_frames.or(file.max_frames).unwrap_or(crate::channel::DEFAULT_MAX_FRAMES),
        symbols_per_antenna: args
            .symbols_per_antenna
            .or(file.symbols_per_antenna)
            .unwrap_or(crate::channel::DEFAULT_SYMBOLS_PER_ANTENNA),
        out: args.out.clone().or(file.out).unwrap_or_else(|| "bler.csv".into()),
    })
}

pub fn sim_config(r: &BlerResolved) -> Result<SimConfig> {
    let scheme: Scheme = r.scheme.parse()?;
    let alphabet = match &r.constellation_file {
        Some(p) => Alphabet::from_constellation(r.constellation.clone(), &ConstellationSet::read(p)?),
        None => Alphabet::builtin(&r.constellation)?,
    };
    let mut cfg = SimConfig::new(scheme, r.ntx, r.nrx, alphabet, parse_grid(&r.snr)?);
    cfg.genie = r.genie;
    cfg.master_seed = r.seed;
    cfg.min_frame_errors = r.min_errors;
    cfg.max_frames = r.max_frames;
    cfg.symbols_per_antenna = r.symbols_per_antenna;
    cfg.validate()?;
    Ok(cfg)
}

/// Appends rows to `path`, writing the header only when the file is new.
pub fn append_csv(path: &Path, cfg: &SimConfig, points: &[BlerPoint]) -> Result<()> {
    let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{CSV_HEADER}")?;
    }
    for p in points {
        writeln!(f, "{}", csv_row(cfg, p))?;
    }
    Ok(())
}

pub fn cmd_design(a: &DesignArgs) -> Result<String> {
    let manifest = RunManifest::new(
        "design",
        a.seed,
        &table([
            ("m", (a.m as i64).into()),
            ("nu", a.nu.into()),
            ("ntx", (a.ntx as i64).into()),
            ("starts", (a.starts as i64).into()),
            ("out", a.out.display().to_string().into()),
        ]),
    )?;
    let outcome = optimize_detailed(a.m, a.nu, a.ntx, a.starts, a.seed)?;
    outcome.set.write(&a.out)?;
    let plot = plot_path(&a.out, "");
    let pts: Vec<(f64, f64)> = outcome.set.points().iter().map(|z| (z.re, z.im)).collect();
    write_plot(&plot, "x y", &pts)?;
    let mut manifest = manifest;
    manifest.outputs = vec![a.out.clone(), plot];
    manifest.finish(&a.out)?;

    let mut report = format!("objective {:.12e}\nradii", outcome.objective);
    for r in outcome.set.radii() {
        report.push_str(&format!(" {r:.12}"));
    }
    report.push('\n');
    for line in check_criteria(&outcome.set, 1e-9).lines() {
        report.push_str(&line);
        report.push('\n');
    }
    report.push_str(&format!("wrote {}\n", a.out.display()));
    Ok(report)
}

pub fn cmd_gain_sweep(a: &GainSweepArgs) -> Result<String> {
    let nus = parse_grid(&a.nu_grid)?;
    if a.m.is_empty() {
        return Err(Error::Config("no constellation sizes".into()));
    }
    let mut manifest = RunManifest::new(
        "gain-sweep",
        a.seed,
        &table([
            ("m", toml::Value::Array(a.m.iter().map(|&m| (m as i64).into()).collect())),
            ("nu_grid", a.nu_grid.clone().into()),
            ("ntx", (a.ntx as i64).into()),
            ("starts", (a.starts as i64).into()),
            ("out", a.out.display().to_string().into()),
        ]),
    )?;
    let k = a.ntx;
    let mut csv = String::from("m,nu,objective,coding_gain\n");
    manifest.outputs.push(a.out.clone());
    for &m in &a.m {
        let rows = gain_sweep(m, &nus, a.ntx, k, a.starts, a.seed)?;
        let mut plot_rows = Vec::new();
        for r in &rows {
            csv.push_str(&format!("{m},{},{:.12e},{:.12e}\n", r.nu, r.objective, r.coding_gain));
            plot_rows.push((r.nu, r.coding_gain));
        }
        let plot = plot_path(&a.out, &format!("_m{m}"));
        write_plot(&plot, "nu coding_gain", &plot_rows)?;
        manifest.outputs.push(plot);
    }
    fs::write(&a.out, &csv)?;
    manifest.finish(&a.out)?;
    Ok(csv)
}

pub fn cmd_bler(a: &BlerArgs) -> Result<String> {
    let resolved = resolve_bler(a)?;
    let cfg = sim_config(&resolved)?;
    let sim = Simulator::new(cfg)?;
    let mut manifest = RunManifest::new("bler", resolved.seed, &resolved)?;
    let se = format!(
        "{:.4} ({:.4})",
        sim.spectral_efficiency(),
        sim.effective_spectral_efficiency()
    );
    manifest.spectral_efficiency = Some(se.clone());
    let points = sim.run_sweep()?;
    append_csv(&resolved.out, sim.config(), &points)?;
    let plot = plot_path(&resolved.out, "");
    let rows: Vec<(f64, f64)> = points.iter().map(|p| (p.snr_db, p.bler)).collect();
    write_plot(&plot, "snr_db bler", &rows)?;
    manifest.outputs = vec![resolved.out.clone(), plot];
    manifest.finish(&resolved.out)?;

    let mut report = format!(
        "{} {}x{} {} genie={} spectral efficiency {se} bits/channel use\n",
        resolved.scheme, resolved.ntx, resolved.nrx, resolved.constellation, resolved.genie
    );
    for p in &points {
        report.push_str(&format!(
            "snr {:>6} dB  frames {:>9}  errors {:>5}  bler {:.3e}\n",
            p.snr_db, p.frames_run, p.frame_errors, p.bler
        ));
    }
    Ok(report)
}

pub fn cmd_code(a: &CodeArgs) -> Result<String> {
    let scheme: Scheme = a.scheme.parse()?;
    let text = scheme.code(a.ntx)?.to_text();
    if let Some(p) = &a.out {
        fs::write(p, &text)?;
    }
    Ok(text)
}

/// One line of the verification table.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckRow {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        CheckRow {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// The invariant battery behind `verify`.
pub fn verify_battery(constellation_file: Option<&Path>, seed: u64) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m1 = closed_form_m4();
    let m2 = crate::channel::m2();

    for (name, set) in [("amicable alamouti", alamouti_set()), ("amicable rate-3/4", ostbc_rate34_4tx())] {
        let rep = set.amicability();
        rows.push(CheckRow::new(name, rep.passes(1e-12), format!("max violation {:.2e}", rep.max_violation())));
    }

    let code4 = mdc_map(&alamouti_set())?;
    let code8 = mdc_map(&ostbc_rate34_4tx())?;
    for (name, code, pts) in [("gram form 4tx/m1", &code4, m1.points()), ("gram form 8tx/m2", &code8, m2.points())] {
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let s = SymbolVector((0..code.k()).map(|_| pts[rng.random_range(0..pts.len())]).collect());
            let g = gram_decompose(&assemble(code, &s)?, code.k())?;
            worst = worst.max(g.beta.abs()).max(g.residual);
        }
        rows.push(CheckRow::new(name, worst < 1e-9, format!("max |beta|, residual {worst:.2e}")));
    }

    let dec = SymbolDecoder::new(&code4, m1.points())?;
    let book = dec.full_codebook();
    let mut mismatches = 0;
    let steps = 300;
    for _ in 0..steps {
        let h = crate::channel::draw_channel(1, 4, &mut rng);
        let r0 = &h + &crate::channel::awgn(1, 4, 0.3, &mut rng);
        let idx: Vec<usize> = (0..4).map(|_| rng.random_range(0..4)).collect();
        let x = dec.code_matrix(&idx);
        let r1 = &h.matmul(x.u()) + &crate::channel::awgn(1, 4, 0.3, &mut rng);
        let mut a = DecoderState::new(r0.clone(), false);
        let mut b = DecoderState::new(r0, false);
        let single = a.decode_single_symbol(&r1, &dec, None)?;
        let exhaustive = b.decode_exhaustive(&r1, &book, None)?;
        if crate::stbc::codeword_number(&single.indices, 4) != exhaustive {
            mismatches += 1;
        }
    }
    rows.push(CheckRow::new(
        "decoder equivalence",
        mismatches == 0,
        format!("{mismatches} mismatches in {steps} steps"),
    ));

    let rank = min_rank_all_pairs(&code4, m1.points())?;
    rows.push(CheckRow::new("full diversity 4tx/m1", rank == 4, format!("min rank {rank}")));

    let brute = min_pairwise_determinant(&code4, m1.points())?;
    let closed = mdc_det_min_closed_form(m1.points(), 4, 4);
    rows.push(CheckRow::new(
        "determinant closed form",
        (brute - closed).abs() < 1e-9 * closed.max(1.0),
        format!("brute {brute:.6e} closed {closed:.6e}"),
    ));

    let opt = optimize_detailed(4, 0.0, 4, 20, seed)?;
    let err = opt
        .set
        .radii()
        .iter()
        .zip(m1.radii())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    rows.push(CheckRow::new("closed-form optimum m=4", err < 1e-6, format!("max radius error {err:.2e}")));

    if let Some(p) = constellation_file {
        let set = ConstellationSet::read(p)?;
        let rep = check_criteria(&set, 1e-9);
        let label = p.display();
        rows.push(CheckRow::new(
            "file quasi-unitary",
            rep.quasi_unitary_ok(),
            format!("{label}: residual {:.2e}", rep.quasi_unitary_residual),
        ));
        let beta = match SymbolDecoder::new(&code4, set.points()) {
            Ok(_) => "beta = 0".to_string(),
            Err(e) => e.to_string(),
        };
        rows.push(CheckRow::new("file beta", rep.quasi_unitary_ok(), beta));
        rows.push(CheckRow::new(
            "file power",
            rep.power_ok(),
            format!("{label}: residual {:.2e}", rep.power_residual),
        ));
        rows.push(CheckRow::new(
            "file performance",
            rep.performance_ok(),
            format!("min pair metric {:.3e}", rep.min_pair_metric),
        ));
        rows.push(CheckRow::new("file distinct", rep.distinct_ok(), format!("min distance {:.3e}", rep.min_distance)));
    }
    Ok(rows)
}

pub fn format_table(rows: &[CheckRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    rows.iter()
        .map(|r| format!("{:<width$}  {}  {}\n", r.name, if r.pass { "PASS" } else { "FAIL" }, r.detail))
        .collect()
}

fn is_argument_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::Infeasible(_)
            | Error::InvalidSize(_)
            | Error::Unsupported(_)
            | Error::Parse(_)
            | Error::TooFewPoints { .. }
    )
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Design(a) => cmd_design(a),
        Command::GainSweep(a) => cmd_gain_sweep(a),
        Command::Bler(a) => cmd_bler(a),
        Command::Code(a) => cmd_code(a),
        Command::Verify(a) => match verify_battery(a.constellation_file.as_deref(), a.seed) {
            Ok(rows) => {
                print!("{}", format_table(&rows));
                return if rows.iter().all(|r| r.pass) { 0 } else { 1 };
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_argument_error(&e) {
                2
            } else {
                1
            }
        }
    }
}

/// Sizes the global rayon pool from [`WORKERS_ENV`] if set.
pub fn init_workers() -> std::result::Result<(), String> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let n: usize = v.parse().map_err(|_| format!("{WORKERS_ENV}={v} is not a count"))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:2:6").unwrap(), vec![0.0, 2.0, 4.0, 6.0]);
        assert_eq!(parse_grid("1, 2.5").unwrap(), vec![1.0, 2.5]);
        assert_eq!(parse_grid("-inf,inf").unwrap(), vec![f64::NEG_INFINITY, f64::INFINITY]);
        assert!(parse_grid("0:0:4").is_err());
        assert!(parse_grid("a").is_err());
        assert!(parse_grid("").is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "scheme = \"ostbc_dstm\"\nnrx = 2\nseed = 9\nconstellation = \"qam16\"\nsnr = \"10,20\"\n").unwrap();
        let args = BlerArgs {
            config: Some(cfg.clone()),
            seed: Some(3),
            ..Default::default()
        };
        let r = resolve_bler(&args).unwrap();
        assert_eq!((r.scheme.as_str(), r.nrx, r.seed), ("ostbc_dstm", 2, 3));
        assert_eq!(r.constellation, "qam16");
        assert_eq!(sim_config(&r).unwrap().snr_db, vec![10.0, 20.0]);

        fs::write(&cfg, "sceme = 1\n").unwrap();
        assert!(matches!(resolve_bler(&args), Err(Error::Config(_))));
    }

    #[test]
    fn derived_paths() {
        let p = Path::new("/tmp/x/run.csv");
        assert_eq!(manifest_path(p), PathBuf::from("/tmp/x/run.csv.manifest.toml"));
        assert_eq!(plot_path(p, "_m4"), PathBuf::from("/tmp/x/run_m4.dat"));
    }

    #[test]
    fn battery_passes_on_builtin_objects() {
        let rows = verify_battery(None, 5).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{}", format_table(&rows));
    }
}
