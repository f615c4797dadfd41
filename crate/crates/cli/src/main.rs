mod config;

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvtele_core::criteria::{criteria_report, teleport_bandwidth, BandwidthSearch, DEFAULT_BANDWIDTH_THRESHOLD};
use cvtele_core::oracle::run_suite;
use cvtele_core::swap::swap_point;
use cvtele_core::table::{format_sig, CSV_DIGITS};
use cvtele_core::teleport::spectral_variance_tel_in;
use cvtele_core::{
    bandwidth, fidelity_spectrum, outcome_fidelity, swap_fidelity, swap_spectrum, teleport, BellDetector,
    Complex64, CustomSpectrum, Error, FrequencyGrid, GainSchedule, InputModel, McConfig, NopaParams,
    SpectrumTable, SqueezerSpectrum, SwapConfig, SwapGain,
};

#[derive(Debug, Parser)]
#[command(
    name = "cvtele",
    version,
    about = "Broadband continuous-variable teleportation simulator",
    after_help = "Every command also accepts --config <PATH>, a file of `key = value` lines \
                  (keys are long flag names). Flags on the command line take precedence."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Teleportation variance and fidelity spectrum
    Spectrum(SpectrumArgs),
    /// Entanglement-swapping fidelity spectrum (two identical sources)
    SwapSpectrum(SwapSpectrumArgs),
    /// V_x, V_p and fidelity at one frequency
    Point(PointArgs),
    /// Frequency band with fidelity above a threshold
    Bandwidth(BandwidthArgs),
    /// Classical-boundary report at one frequency
    Criteria(CriteriaArgs),
    /// Run the independent validation suite
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Normalized pump amplitude of a NOPA source, in [0, 1]
    #[arg(long)]
    epsilon: Option<f64>,
    /// Cavity escape efficiency (with --epsilon); below 1 selects the lossy model
    #[arg(long)]
    beta: Option<f64>,
    /// NOPA coupling rate (physical parameterization, with --gamma)
    #[arg(long)]
    kappa: Option<f64>,
    /// NOPA output-coupler damping rate
    #[arg(long)]
    gamma: Option<f64>,
    /// NOPA intracavity loss rate
    #[arg(long)]
    rho: Option<f64>,
    /// Frequency-independent squeezing r
    #[arg(long, value_name = "R")]
    squeeze_r: Option<f64>,
    /// CSV table `omega,s_plus_re,s_plus_im,s_minus_re,s_minus_im`
    #[arg(long, value_name = "PATH")]
    custom_spectrum: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0.0)]
    omega_start: f64,
    #[arg(long, default_value_t = 20.0)]
    omega_end: f64,
    #[arg(long, default_value_t = 0.1)]
    omega_step: f64,
}

#[derive(Debug, Args)]
struct TableOutput {
    /// Output file (standard output if omitted)
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    /// Also write a gnuplot script plotting the CSV output
    #[arg(long, value_name = "PATH")]
    gnuplot: Option<PathBuf>,
    /// Worker threads for the sweep
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Protocol {
    Teleport,
    Swap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum GainMode {
    Unit,
    Fixed(f64),
    OptimalSwap,
}

fn parse_gain(s: &str) -> Result<GainMode, String> {
    match s {
        "unit" => Ok(GainMode::Unit),
        "optimal-swap" => Ok(GainMode::OptimalSwap),
        _ => {
            let v = s
                .strip_prefix("fixed:")
                .ok_or_else(|| format!("expected `unit`, `fixed:<value>` or `optimal-swap`, found `{s}`"))?;
            let g: f64 = v.parse().map_err(|_| format!("invalid gain value `{v}`"))?;
            if !g.is_finite() {
                return Err(format!("gain must be finite, found `{v}`"));
            }
            Ok(GainMode::Fixed(g))
        }
    }
}

fn parse_input(s: &str) -> Result<InputModel, String> {
    if s == "coherent" {
        return Ok(InputModel::coherent());
    }
    let v = s
        .strip_prefix("squeezed:")
        .ok_or_else(|| format!("expected `coherent` or `squeezed:<s_v>`, found `{s}`"))?;
    let s_v: f64 = v.parse().map_err(|_| format!("invalid squeezing parameter `{v}`"))?;
    InputModel::squeezed(s_v).map_err(|e| e.to_string())
}

fn parse_alpha(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let re: f64 = re.trim().parse().map_err(|_| format!("invalid amplitude `{s}`, expected `re,im`"))?;
    let im: f64 = im.trim().parse().map_err(|_| format!("invalid amplitude `{s}`, expected `re,im`"))?;
    Ok(Complex64::new(re, im))
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Bell-detector power efficiency eta^2, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    eta2: f64,
    /// `unit` or `fixed:<value>`
    #[arg(long, value_parser = parse_gain, default_value = "unit")]
    gain: GainMode,
    /// Coherent input amplitude `re,im` (matters only away from unit gain)
    #[arg(long, value_parser = parse_alpha, default_value = "0,0", allow_hyphen_values = true)]
    alpha: Complex64,
    #[command(flatten)]
    out: TableOutput,
}

#[derive(Debug, Args)]
struct SwapSpectrumArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// `optimal-swap`, `unit` or `fixed:<value>`
    #[arg(long, value_parser = parse_gain, default_value = "optimal-swap")]
    gain: GainMode,
    #[command(flatten)]
    out: TableOutput,
}

#[derive(Debug, Args)]
struct PointArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    eta2: f64,
    /// `unit`, `fixed:<value>`, or `optimal-swap` with `--protocol swap`
    #[arg(long, value_parser = parse_gain)]
    gain: Option<GainMode>,
    /// `coherent` or `squeezed:<s_v>`; sets the signal variances entering V_x, V_p
    #[arg(long, value_parser = parse_input, default_value = "coherent")]
    input: InputModel,
    #[arg(long, value_parser = parse_alpha, default_value = "0,0", allow_hyphen_values = true)]
    alpha: Complex64,
    #[arg(long, value_enum, default_value_t = Protocol::Teleport)]
    protocol: Protocol,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct BandwidthArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 1.0)]
    eta2: f64,
    /// Fidelity threshold
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH_THRESHOLD)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = Protocol::Teleport)]
    protocol: Protocol,
    /// Swap gain (`--protocol swap` only)
    #[arg(long, value_parser = parse_gain)]
    gain: Option<GainMode>,
}

#[derive(Debug, Args)]
struct CriteriaArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    eta2: f64,
    #[arg(long, value_parser = parse_gain, default_value = "unit")]
    gain: GainMode,
    #[arg(long, value_parser = parse_input, default_value = "coherent")]
    input: InputModel,
    #[arg(long, value_parser = parse_alpha, default_value = "0,0", allow_hyphen_values = true)]
    alpha: Complex64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// Monte-Carlo samples per check (at least 1000)
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::Table(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl SourceArgs {
    fn resolve(&self) -> CliResult<SqueezerSpectrum> {
        let physical = self.kappa.is_some() || self.gamma.is_some() || self.rho.is_some();
        let chosen = [
            self.epsilon.is_some(),
            physical,
            self.squeeze_r.is_some(),
            self.custom_spectrum.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if chosen == 0 {
            return Err(config_err(
                "no source given: use --epsilon, --kappa/--gamma[/--rho], --squeeze-r or --custom-spectrum",
            ));
        }
        if chosen > 1 {
            return Err(config_err(
                "conflicting sources: give only one of --epsilon, --kappa/--gamma/--rho, --squeeze-r, --custom-spectrum",
            ));
        }
        if self.beta.is_some() && self.epsilon.is_none() {
            return Err(config_err("--beta applies only to --epsilon sources"));
        }
        if let Some(eps) = self.epsilon {
            return Ok(match self.beta {
                Some(beta) if beta != 1.0 => SqueezerSpectrum::nopa_lossy(eps, beta)?,
                _ => SqueezerSpectrum::nopa(eps)?,
            });
        }
        if physical {
            let (Some(kappa), Some(gamma)) = (self.kappa, self.gamma) else {
                return Err(config_err("physical parameters need both --kappa and --gamma"));
            };
            let p = NopaParams::new(kappa, gamma, self.rho.unwrap_or(0.0))?;
            return Ok(SqueezerSpectrum::from_params(&p));
        }
        if let Some(r) = self.squeeze_r {
            return Ok(SqueezerSpectrum::zero_bandwidth(r)?);
        }
        let path = self.custom_spectrum.as_ref().expect("one source is set");
        let table = CustomSpectrum::from_path(path)
            .map_err(|e| config_err(format!("custom spectrum `{}`: {e}", path.display())))?;
        Ok(SqueezerSpectrum::Custom(table))
    }
}

impl GridArgs {
    fn grid(&self) -> CliResult<FrequencyGrid> {
        Ok(FrequencyGrid::new(self.omega_start, self.omega_end, self.omega_step)?)
    }
}

fn detector(eta2: f64) -> CliResult<BellDetector> {
    Ok(BellDetector::from_power_efficiency(eta2)?)
}

fn teleport_gain(mode: GainMode) -> CliResult<GainSchedule> {
    match mode {
        GainMode::Unit => Ok(GainSchedule::Unit),
        GainMode::Fixed(g) => Ok(GainSchedule::fixed(g)),
        GainMode::OptimalSwap => Err(config_err("gain `optimal-swap` applies only to swapping")),
    }
}

fn swap_gain(mode: GainMode) -> SwapGain {
    match mode {
        GainMode::Unit => SwapGain::Schedule(GainSchedule::Unit),
        GainMode::Fixed(g) => SwapGain::Schedule(GainSchedule::fixed(g)),
        GainMode::OptimalSwap => SwapGain::Optimal,
    }
}

/// Opens the output up front so that an unwritable path is reported before any work.
fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| config_err(format!("cannot write output file `{}`: {e}", p.display())))?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(config_err("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn gnuplot_script(csv: &Path, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'omega'\n\
         set ylabel 'fidelity'\n\
         set yrange [0.5:1]\n\
         set grid\n\
         plot '{}' using 1:4 with lines title '{}'\n",
        csv.display(),
        title
    )
}

fn emit_table(table: &SpectrumTable, out: &TableOutput, title: &str, mut w: Box<dyn Write>) -> CliResult<()> {
    match out.format {
        TableFormat::Csv => table.write_csv(&mut w)?,
        TableFormat::Json => writeln!(w, "{}", table.to_json()?)?,
    }
    w.flush()?;
    if let Some(script) = &out.gnuplot {
        let csv = out.output.as_ref().expect("checked before the sweep");
        std::fs::write(script, gnuplot_script(csv, title))
            .map_err(|e| CliError::Runtime(format!("cannot write gnuplot script `{}`: {e}", script.display())))?;
    }
    Ok(())
}

fn check_table_output(out: &TableOutput) -> CliResult<()> {
    if out.gnuplot.is_some() && (out.output.is_none() || out.format != TableFormat::Csv) {
        return Err(config_err("--gnuplot needs --output with CSV format"));
    }
    Ok(())
}

fn run_spectrum(a: &SpectrumArgs) -> CliResult<()> {
    check_table_output(&a.out)?;
    let src = a.source.resolve()?;
    let grid = a.grid.grid()?;
    let det = detector(a.eta2)?;
    let gain = teleport_gain(a.gain)?;
    let w = open_output(a.out.output.as_deref())?;
    let table = with_threads(a.out.threads, || fidelity_spectrum(&src, &gain, &det, a.alpha, &grid))??;
    emit_table(&table, &a.out, &src.to_string(), w)
}

fn run_swap_spectrum(a: &SwapSpectrumArgs) -> CliResult<()> {
    check_table_output(&a.out)?;
    let src = a.source.resolve()?;
    let grid = a.grid.grid()?;
    let cfg = SwapConfig::symmetric(src.clone(), swap_gain(a.gain));
    let w = open_output(a.out.output.as_deref())?;
    let table = with_threads(a.out.threads, || swap_spectrum(&cfg, &grid))??;
    emit_table(&table, &a.out, &format!("swap, {src}"), w)
}

fn print_values(format: ReportFormat, values: &[(&str, f64)]) -> CliResult<()> {
    let mut out = io::stdout().lock();
    match format {
        ReportFormat::Text => {
            for (k, v) in values {
                writeln!(out, "{k} = {}", format_sig(*v, CSV_DIGITS))?;
            }
        }
        ReportFormat::Json => {
            let map: serde_json::Map<String, serde_json::Value> =
                values.iter().map(|(k, v)| (k.to_string(), serde_json::json!(v))).collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&map).map_err(Error::from)?)?;
        }
    }
    Ok(())
}

fn run_point(a: &PointArgs) -> CliResult<()> {
    let src = a.source.resolve()?;
    match a.protocol {
        Protocol::Teleport => {
            let det = detector(a.eta2)?;
            let gain = teleport_gain(a.gain.unwrap_or(GainMode::Unit))?;
            let (v_x, v_p, f) = match teleport(&src, &gain, &det, a.omega) {
                Ok(out) => {
                    let v = spectral_variance_tel_in(&out, &a.input);
                    (v.v_x, v.v_p, outcome_fidelity(&out, a.alpha)?)
                }
                Err(Error::AtThreshold { .. }) => {
                    let row = fidelity_spectrum(&src, &gain, &det, a.alpha, &FrequencyGrid::single(a.omega))?.rows[0];
                    (row.v_x, row.v_p, row.fidelity)
                }
                Err(e) => return Err(e.into()),
            };
            print_values(a.format, &[("v_x", v_x), ("v_p", v_p), ("fidelity", f)])
        }
        Protocol::Swap => {
            if a.eta2 != 1.0 {
                return Err(config_err("detector inefficiency is not modelled for swapping"));
            }
            let cfg = SwapConfig::symmetric(src, swap_gain(a.gain.unwrap_or(GainMode::OptimalSwap)));
            let row = swap_point(&cfg, a.omega)?;
            print_values(a.format, &[("v_x", row.v_x), ("v_p", row.v_p), ("fidelity", row.fidelity)])
        }
    }
}

fn run_bandwidth(a: &BandwidthArgs) -> CliResult<()> {
    let src = a.source.resolve()?;
    let search = BandwidthSearch::with_threshold(a.threshold);
    let w = match a.protocol {
        Protocol::Teleport => {
            if a.gain.is_some_and(|g| g != GainMode::Unit) {
                return Err(config_err("teleportation bandwidth is defined at unit gain"));
            }
            teleport_bandwidth(&src, &detector(a.eta2)?, &search)?
        }
        Protocol::Swap => {
            if a.eta2 != 1.0 {
                return Err(config_err("detector inefficiency is not modelled for swapping"));
            }
            let cfg = SwapConfig::symmetric(src, swap_gain(a.gain.unwrap_or(GainMode::OptimalSwap)));
            bandwidth(|w| swap_fidelity(&cfg, w), &search)?
        }
    };
    println!("{}", format_sig(w, CSV_DIGITS));
    Ok(())
}

fn run_criteria(a: &CriteriaArgs) -> CliResult<()> {
    let src = a.source.resolve()?;
    let det = detector(a.eta2)?;
    let gain = teleport_gain(a.gain)?;
    let out = teleport(&src, &gain, &det, a.omega)?;
    let rep = criteria_report(&out, &a.input, a.alpha)?;
    let mut w = io::stdout().lock();
    match a.format {
        ReportFormat::Json => writeln!(w, "{}", serde_json::to_string_pretty(&rep).map_err(Error::from)?)?,
        ReportFormat::Text => {
            let s = |v: f64| format_sig(v, CSV_DIGITS);
            let yes = |b: bool| if b { "beaten" } else { "not beaten" };
            let v = &rep.verdicts;
            writeln!(w, "source: {src}, omega = {}, gain = {}", s(a.omega), out.meta.gain)?;
            writeln!(w, "V_tel,in product = {} (limit 4: {})", s(rep.v_product), yes(v.product))?;
            writeln!(w, "V_tel,in sum = {} (limit 4: {})", s(rep.v_sum), yes(v.sum))?;
            writeln!(w, "V_out product = {} (limit 9: {})", s(rep.v_out_product), yes(v.out_product))?;
            writeln!(
                w,
                "conditional variance sum = {} (limit 2: {})",
                s(rep.ralph_lam.conditional_sum()),
                yes(v.conditional_variance)
            )?;
            writeln!(w, "transfer sum = {} (limit 1: {})", s(rep.ralph_lam.transfer_sum()), yes(v.transfer))?;
            writeln!(w, "fidelity = {} (limit 1/2: {})", s(rep.fidelity), yes(v.fidelity))?;
            if v.average_fidelity_vanishes {
                writeln!(w, "non-unit gain: fidelity averaged over all coherent inputs vanishes")?;
            }
        }
    }
    Ok(())
}

fn run_oracle(a: &OracleArgs) -> CliResult<()> {
    let cfg = McConfig::new(a.samples, a.seed)?;
    let w = open_output(a.output.as_deref())?;
    let report = with_threads(a.threads, || run_suite(&cfg))??;
    let mut w = w;
    writeln!(w, "{}", serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
    w.flush()?;
    if !report.passed {
        let failed: Vec<&str> = report.cases.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(CliError::Runtime(format!("oracle checks failed: {}", failed.join("; "))));
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Spectrum(a) => run_spectrum(a),
        Command::SwapSpectrum(a) => run_swap_spectrum(a),
        Command::Point(a) => run_point(a),
        Command::Bandwidth(a) => run_bandwidth(a),
        Command::Criteria(a) => run_criteria(a),
        Command::OracleCheck(a) => run_oracle(a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{}", config_err(msg));
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvtele: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(1),
                CliError::Runtime(_) => ExitCode::from(2),
            }
        }
    }
}
