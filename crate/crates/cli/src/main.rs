//! `lulu`: LULU smoothing and discrete pulse decomposition of PGM images.
//!
//! Exit codes: 0 on success, 1 for usage, parse or I/O errors, 2 when a
//! verification check fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lulu_core::dpt::{dpt_decompose, pulse_histogram, reconstruct, verify_structure};
use lulu_core::invariants::{run_suite, CorruptedLn, OperatorBackend, Production};
use lulu_core::io::{
    histogram_csv, read_pgm, read_pulses, residual_path, write_histogram, write_pgm, write_pulses,
    PgmMode, PgmOptions, PgmWriteReport,
};
use lulu_core::tv::{verify_dpt_tv, TvReport};
use lulu_core::{apply, Connectivity, GridImage, OperatorKind, PulseFilter, SignFilter, Smoother};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser, Debug)]
#[command(name = "lulu", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply one smoother and report the total variation split
    Filter(FilterArgs),
    /// Decompose an image into pulses and verify the result
    Decompose(DecomposeArgs),
    /// Sum selected pulses back into an image
    Reconstruct(ReconstructArgs),
    /// Print or write the pulse-size histogram of a pulse dump
    Histogram(HistogramArgs),
    /// Decompose seeded uniform noise and report pulse-size statistics
    NoiseSim(NoiseArgs),
    /// Run the invariant suite on an image and print a pass/fail matrix
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Neighborhood {
    #[value(name = "4")]
    Four,
    #[value(name = "8")]
    Eight,
}

impl Neighborhood {
    fn connectivity(self) -> Connectivity {
        match self {
            Neighborhood::Four => Connectivity::four(),
            Neighborhood::Eight => Connectivity::eight(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Op {
    Ln,
    Un,
    Lnun,
    Unln,
}

impl From<Op> for Smoother {
    fn from(op: Op) -> Smoother {
        match op {
            Op::Ln => Smoother::Ln,
            Op::Un => Smoother::Un,
            Op::Lnun => Smoother::LnUn,
            Op::Unln => Smoother::UnLn,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Sign {
    Pos,
    Neg,
    Both,
}

impl From<Sign> for SignFilter {
    fn from(s: Sign) -> SignFilter {
        match s {
            Sign::Pos => SignFilter::Pos,
            Sign::Neg => SignFilter::Neg,
            Sign::Both => SignFilter::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Clip,
    Offset,
}

impl From<Mode> for PgmMode {
    fn from(m: Mode) -> PgmMode {
        match m {
            Mode::Clip => PgmMode::Clip,
            Mode::Offset => PgmMode::Offset,
        }
    }
}

/// Size bands for partial reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Pulses larger than 20 pixels (small-pulse noise removed)
    Above20,
    /// Pulses of 21 to 400 pixels
    Band21To400,
    /// Pulses of 30000 to 50000 pixels
    Band30000To50000,
}

impl Preset {
    fn bounds(self) -> (usize, usize) {
        match self {
            Preset::Above20 => (21, usize::MAX),
            Preset::Band21To400 => (21, 400),
            Preset::Band30000To50000 => (30_000, 50_000),
        }
    }
}

#[derive(Args, Debug)]
struct FilterArgs {
    /// Input PGM
    input: PathBuf,
    /// Output PGM
    output: PathBuf,
    #[arg(long, value_enum)]
    op: Op,
    /// Size parameter (at least 1)
    #[arg(short, long)]
    n: usize,
    #[arg(short, long, value_enum, default_value = "4")]
    connectivity: Neighborhood,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    /// Input PGM
    input: PathBuf,
    /// Pulse dump (JSON lines)
    output: PathBuf,
    /// Stop after this layer; the remainder goes to a residual PGM
    #[arg(long)]
    max_n: Option<usize>,
    #[arg(short, long, value_enum, default_value = "4")]
    connectivity: Neighborhood,
    /// Also write the size histogram as CSV
    #[arg(long)]
    histogram: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Pulse dump (JSON lines)
    pulses: PathBuf,
    /// Output PGM
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    min_size: usize,
    #[arg(long)]
    max_size: Option<usize>,
    /// Size band shortcut; overrides --min-size and --max-size
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long, value_enum, default_value = "both")]
    sign: Sign,
    /// Add the residual constant (or remainder image) back
    #[arg(long)]
    include_residual: bool,
    /// How to store values PGM cannot hold
    #[arg(long, value_enum, default_value = "offset")]
    mode: Mode,
}

#[derive(Args, Debug)]
struct HistogramArgs {
    /// Pulse dump (JSON lines)
    pulses: PathBuf,
    /// CSV destination; stdout if omitted
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    #[arg(long, default_value_t = 400)]
    width: usize,
    #[arg(long, default_value_t = 300)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Histogram CSV destination
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(short, long, value_enum, default_value = "4")]
    connectivity: Neighborhood,
    /// Pulses up to this size count as small
    #[arg(long, default_value_t = 20)]
    small: usize,
    /// Pulses above this size count as large
    #[arg(long, default_value_t = 100)]
    large: usize,
    /// Also write the generated noise image
    #[arg(long)]
    image: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Input PGM
    input: PathBuf,
    #[arg(short, long, value_enum, default_value = "4")]
    connectivity: Neighborhood,
    /// Sizes to check
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
    sizes: Vec<usize>,
    /// Replace L_n at this n by a deliberately broken version
    #[arg(long, hide = true)]
    corrupt_ln: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Filter(args) => filter(args),
        Command::Decompose(args) => decompose(args),
        Command::Reconstruct(args) => reconstruct_cmd(args),
        Command::Histogram(args) => histogram(args),
        Command::NoiseSim(args) => noise_sim(args),
        Command::Verify(args) => verify(args),
    }
}

const INVARIANT_FAILURE: u8 = 2;

fn load(path: &Path) -> Result<GridImage> {
    read_pgm(path).with_context(|| format!("reading {}", path.display()))
}

fn save(f: &GridImage, path: &Path, mode: PgmMode) -> Result<PgmWriteReport> {
    let report = write_pgm(
        f,
        path,
        PgmOptions {
            mode,
            ..PgmOptions::default()
        },
    )
    .with_context(|| format!("writing {}", path.display()))?;
    if report.offset != 0 {
        eprintln!(
            "note: {} stores values shifted by {} (see sidecar)",
            path.display(),
            report.offset
        );
    }
    if report.clipped != 0 {
        eprintln!(
            "warning: {} pixels clipped to [0, {}] in {}",
            report.clipped,
            report.maxval,
            path.display()
        );
    }
    Ok(report)
}

fn filter(args: FilterArgs) -> Result<ExitCode> {
    let f = load(&args.input)?;
    let op = OperatorKind::new(args.op.into(), args.n)?;
    let out = apply(op, &f, &args.connectivity.connectivity());
    save(&out, &args.output, PgmMode::Clip)?;
    let tv = TvReport::of_split(&f, &out)?;
    println!(
        "{op}: TV input {} = output {} + residual {} ({})",
        tv.tv_input,
        tv.tv_operator_part,
        tv.tv_residual_part,
        if tv.preserved {
            "preserved"
        } else {
            "NOT preserved"
        }
    );
    Ok(if tv.preserved {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(INVARIANT_FAILURE)
    })
}

fn decompose(args: DecomposeArgs) -> Result<ExitCode> {
    if args.max_n == Some(0) {
        bail!("--max-n must be at least 1");
    }
    let f = load(&args.input)?;
    let d = dpt_decompose(&f, &args.connectivity.connectivity(), args.max_n);
    write_pulses(&d, &args.output).with_context(|| format!("writing {}", args.output.display()))?;
    let hist = pulse_histogram(&d);
    if let Some(path) = &args.histogram {
        write_histogram(&hist, path).with_context(|| format!("writing {}", path.display()))?;
    }

    println!(
        "{} pulses, residual {}",
        d.pulse_count(),
        d.residual_constant
    );
    for (size, count) in &hist {
        println!("size {size}: {count}");
    }
    if !d.is_complete() {
        eprintln!(
            "warning: stopped after layer {}; remainder written to {}",
            args.max_n.unwrap_or_default(),
            residual_path(&args.output).display()
        );
    }

    let structure = verify_structure(&d, &f);
    let tv = verify_dpt_tv(&d, &f);
    print!("{structure}");
    println!(
        "{:<22} {}",
        "tv_additivity",
        if tv.preserved { "pass" } else { "FAIL" }
    );
    if structure.all_passed() && tv.preserved {
        Ok(ExitCode::SUCCESS)
    } else {
        if !tv.preserved {
            eprintln!(
                "TV(f) = {} but pulses give {} + remainder {}; per layer {:?}",
                tv.tv_input, tv.tv_pulses, tv.tv_remainder, tv.per_layer
            );
        }
        Ok(ExitCode::from(INVARIANT_FAILURE))
    }
}

fn reconstruct_cmd(args: ReconstructArgs) -> Result<ExitCode> {
    let (min_size, max_size) = match args.preset {
        Some(p) => p.bounds(),
        None => (args.min_size, args.max_size.unwrap_or(usize::MAX)),
    };
    if min_size > max_size {
        bail!("--min-size {min_size} exceeds --max-size {max_size}");
    }
    let d = read_pulses(&args.pulses)?;
    let filter = PulseFilter {
        min_size,
        max_size,
        sign: args.sign.into(),
        include_residual: args.include_residual,
    };
    let selected = d.pulses().filter(|p| filter.admits(p)).count();
    if selected == 0 {
        eprintln!("warning: no pulses match the selection; writing a constant image");
    }
    let out = reconstruct(&d, &filter);
    save(&out, &args.output, args.mode.into())?;
    println!("{selected} of {} pulses summed", d.pulse_count());
    Ok(ExitCode::SUCCESS)
}

fn histogram(args: HistogramArgs) -> Result<ExitCode> {
    let d = read_pulses(&args.pulses)?;
    let hist = pulse_histogram(&d);
    match &args.out {
        Some(path) => {
            write_histogram(&hist, path).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{}", histogram_csv(&hist)),
    }
    Ok(ExitCode::SUCCESS)
}

/// Uniform samples in `0..=255`, row-major, from ChaCha8 seeded with `seed`.
fn noise_image(width: usize, height: usize, seed: u64) -> Result<GridImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..width * height)
        .map(|_| rng.gen_range(0..=255))
        .collect();
    Ok(GridImage::new(width, height, values, 0)?)
}

fn noise_sim(args: NoiseArgs) -> Result<ExitCode> {
    if args.small > args.large {
        bail!("--small {} exceeds --large {}", args.small, args.large);
    }
    let f = noise_image(args.width, args.height, args.seed)?;
    if let Some(path) = &args.image {
        save(&f, path, PgmMode::Clip)?;
    }
    let d = dpt_decompose(&f, &args.connectivity.connectivity(), None);
    let hist = pulse_histogram(&d);
    if let Some(path) = &args.report {
        write_histogram(&hist, path).with_context(|| format!("writing {}", path.display()))?;
    }
    let total: usize = hist.iter().map(|h| h.1).sum();
    let count = |pred: &dyn Fn(usize) -> bool| -> usize {
        hist.iter().filter(|h| pred(h.0)).map(|h| h.1).sum()
    };
    let frac = |k: usize| {
        if total == 0 {
            0.0
        } else {
            k as f64 / total as f64
        }
    };
    let small = count(&|s| s <= args.small);
    let large = count(&|s| s > args.large);
    println!(
        "{}x{} noise, seed {}: {total} pulses",
        args.width, args.height, args.seed
    );
    println!("size <= {}: {small} ({:.4})", args.small, frac(small));
    println!("size > {}: {large} ({:.4})", args.large, frac(large));
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    if args.sizes.contains(&0) {
        bail!("--sizes must all be at least 1");
    }
    let f = load(&args.input)?;
    let backend: Box<dyn OperatorBackend> = match args.corrupt_ln {
        Some(at_n) => Box::new(CorruptedLn { at_n }),
        None => Box::new(Production),
    };
    let report = run_suite(
        &f,
        &args.connectivity.connectivity(),
        &args.sizes,
        backend.as_ref(),
    );
    print!("{report}");
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(INVARIANT_FAILURE)
    })
}
