//! `csgt` command line: encode, decode, analyze, corpus benchmarks, and
//! a synthetic-corpus generator. Exit codes: 0 success, 1 usage error,
//! 2 data error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use csgt::basis::SparsityBasis;
use csgt::bench::{self, BenchOptions, Experiment};
use csgt::codec::{self, EncoderConfig};
use csgt::solver::SolverConfig;
use csgt::{container, huffman, image, metrics, synth};

#[derive(Parser)]
#[command(
    name = "csgt",
    version,
    about = "Compressed-sensing image codec with gray-transform preprocessing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a PGM image into a .csgt stream
    Encode(EncodeArgs),
    /// Reconstruct a PGM image from a .csgt stream
    Decode(DecodeArgs),
    /// Print header and rate details of a .csgt stream
    Analyze(AnalyzeArgs),
    /// Run a corpus experiment and write its CSV
    Bench(BenchArgs),
    /// Write the built-in synthetic corpus as PGM files
    Synth(SynthArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisChoice {
    /// Four-level separable wavelet
    Wavelet,
    /// Orthonormal DCT on 32-pixel tiles
    Dct,
}

impl From<BasisChoice> for SparsityBasis {
    fn from(choice: BasisChoice) -> Self {
        match choice {
            BasisChoice::Wavelet => SparsityBasis::wavelet(),
            BasisChoice::Dct => SparsityBasis::block_dct(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentChoice {
    Histogram,
    Bitdepth,
    Rd,
}

impl From<ExperimentChoice> for Experiment {
    fn from(choice: ExperimentChoice) -> Self {
        match choice {
            ExperimentChoice::Histogram => Experiment::Histogram,
            ExperimentChoice::Bitdepth => Experiment::BitDepth,
            ExperimentChoice::Rd => Experiment::RateDistortion,
        }
    }
}

fn parse_sampling_rate(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err("sampling rate must be in (0, 1]".into())
    }
}

#[derive(Args)]
struct EncodeArgs {
    /// Input image (binary PGM, maxval 255)
    input: PathBuf,
    /// Sampling rate in (0, 1]
    #[arg(long, default_value_t = 0.5, value_parser = parse_sampling_rate)]
    sr: f64,
    /// Bits per CS sample
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(2..=16))]
    bits: u8,
    /// Store raw f32 measurements instead of quantizing
    #[arg(long, conflicts_with = "bits")]
    lossless: bool,
    /// Block side length in pixels
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u8).range(1..))]
    block: u8,
    /// Seed for the measurement matrix and scrambling streams
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Subtract the image mean before sampling; off is the plain
    /// scrambled baseline
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    gt: Toggle,
    /// Output stream path
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    /// Stop when the relative change of the estimate drops below this
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Initial detail threshold in median-absolute-deviation units
    #[arg(long, default_value_t = 3.0)]
    threshold_scale: f64,
    /// Per-iteration threshold decay factor
    #[arg(long, default_value_t = 0.97)]
    threshold_decay: f64,
    /// Side length of the smoothing window, odd
    #[arg(long, default_value_t = 3)]
    wiener_window: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            threshold_scale: self.threshold_scale,
            threshold_decay: self.threshold_decay,
            wiener_window: self.wiener_window,
        }
    }
}

#[derive(Args)]
struct DecodeArgs {
    /// Input .csgt stream
    input: PathBuf,
    /// Output PGM path
    #[arg(short, long)]
    output: PathBuf,
    /// Reference image; prints PSNR against it
    #[arg(long = "ref", value_name = "PGM")]
    reference: Option<PathBuf>,
    /// Sparsity basis for reconstruction
    #[arg(long, value_enum, default_value_t = BasisChoice::Wavelet)]
    basis: BasisChoice,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input .csgt stream
    input: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of .pgm corpus images
    corpus: PathBuf,
    /// Experiment to run
    #[arg(value_enum)]
    experiment: ExperimentChoice,
    /// Output CSV path
    output: PathBuf,
    /// Seed recorded in the CSV and keying all random streams
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Block side length in pixels
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u8).range(1..))]
    block: u8,
    /// Sparsity basis for reconstruction
    #[arg(long, value_enum, default_value_t = BasisChoice::Wavelet)]
    basis: BasisChoice,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Side length of the generated square images
    #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u16).range(32..))]
    size: u16,
    /// Directory to write the PGM files into
    #[arg(short, long)]
    output: PathBuf,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Encode(args) => cmd_encode(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn cmd_encode(args: EncodeArgs) -> csgt::Result<()> {
    let img = image::read_pgm(&args.input)?;
    let cfg = EncoderConfig {
        sampling_rate: args.sr,
        bit_depth: if args.lossless { None } else { Some(args.bits) },
        block_size: args.block,
        matrix_seed: args.seed,
        scramble_seed: args.seed.wrapping_add(1),
        gray_transform: args.gt == Toggle::On,
    };
    let (bytes, report) = codec::encode(&img, &cfg)?;
    std::fs::write(&args.output, &bytes)?;
    println!("measurements per block: {}", report.m);
    println!("blocks: {}", report.num_blocks);
    println!("gray constant: {:.4}", report.gray_constant);
    println!("measurement variance: {:.4}", report.measurement_variance);
    if !args.lossless {
        println!("index entropy: {:.4} bits/sample", report.index_entropy);
        println!("average code length: {:.4} bits/sample", report.rate.avg_code_length);
    }
    println!("bpp: {:.4}", report.rate.bpp);
    println!("wrote {} bytes to {}", bytes.len(), args.output.display());
    Ok(())
}

fn cmd_decode(args: DecodeArgs) -> csgt::Result<()> {
    let bytes = std::fs::read(&args.input)?;
    let (img, report) = codec::decode(&bytes, args.basis.into(), &args.solver.config())?;
    image::write_pgm(&args.output, &img)?;
    let ending = if report.stats.converged { "converged" } else { "iteration limit" };
    println!("iterations: {} ({ending})", report.stats.iterations);
    if let Some(ref_path) = &args.reference {
        let reference = image::read_pgm(ref_path)?;
        println!("psnr: {:.2} dB", metrics::psnr(&reference, &img)?);
    }
    println!("wrote {}", args.output.display());
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> csgt::Result<()> {
    let bytes = std::fs::read(&args.input)?;
    let bs = container::read_bitstream(&bytes)?;
    let h = &bs.header;
    let n = usize::from(h.block_size) * usize::from(h.block_size);
    println!("dimensions: {}x{}", h.width, h.height);
    println!("block size: {}", h.block_size);
    println!(
        "measurements per block: {} (sampling rate {:.4})",
        h.m,
        f64::from(h.m) / n as f64
    );
    if h.is_lossless() {
        println!("bit depth: lossless");
    } else {
        println!("bit depth: {}", h.bit_depth);
        println!("quantizer range: [{:.4}, {:.4}]", h.q_lower, h.q_upper);
    }
    println!("gray constant: {:.4}", h.gray_constant);
    println!("matrix seed: {}", h.matrix_seed);
    println!("scramble seed: {}", h.scramble_seed);
    let indices = match &bs.table {
        Some(table) => huffman::decode_indices(
            &bs.payload,
            bs.payload_bit_count,
            table,
            h.num_blocks() * usize::from(h.m),
        )?,
        None => Vec::new(),
    };
    let rate = container::measure_rate(bytes.len(), h, &indices, bs.table.as_ref());
    println!("bpp: {:.4} (model {:.4})", rate.bpp, rate.predicted_bpp);
    if !h.is_lossless() {
        println!("average code length: {:.4} bits/sample", rate.avg_code_length);
        println!("index entropy: {:.4} bits/sample", rate.index_entropy);
    }
    println!("overhead: {} bits", rate.overhead_bits);
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> csgt::Result<()> {
    let corpus = bench::load_corpus(&args.corpus)?;
    let opts = BenchOptions {
        block_size: args.block,
        basis: args.basis.into(),
        solver: args.solver.config(),
        ..BenchOptions::with_seed(args.seed)
    };
    let file = std::fs::File::create(&args.output)?;
    let mut sink = std::io::BufWriter::new(file);
    bench::run(&corpus, args.experiment.into(), &opts, &mut sink)?;
    sink.flush()?;
    println!("wrote {}", args.output.display());
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> csgt::Result<()> {
    std::fs::create_dir_all(&args.output)?;
    for (name, img) in synth::corpus(usize::from(args.size)) {
        let path = args.output.join(format!("{name}.pgm"));
        image::write_pgm(&path, &img)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
