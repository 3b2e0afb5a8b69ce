use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ira_core::floor::oracle::{count_configurations, exact_binomial};
use ira_core::floor::FloorError;
use ira_core::harness::{
    self, point_seed, run_header, run_point, Experiment, ExperimentConfig, HarnessError,
};
use ira_core::model::distributions;
use ira_core::receiver::Receiver;
use ira_core::traffic::{generate_trace, TrafficError};

#[derive(Parser)]
#[command(
    name = "ira",
    version,
    about = "Irregular repetition ALOHA simulator and error-floor predictor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the analytic loss-rate floor on the load grid.
    Predict(Common),
    /// Simulate a single load point.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        load: f64,
    },
    /// Simulate every load of the grid next to the analytic floor.
    Sweep(Common),
    /// Check the pattern catalog against brute-force enumeration.
    VerifyUcp {
        #[command(flatten)]
        common: Common,
        /// Numbers of vulnerable periods to enumerate over.
        #[arg(long, value_delimiter = ',', default_values_t = [6usize, 7, 8])]
        periods: Vec<usize>,
    },
    /// Write one generated traffic trace as CSV.
    DumpTrace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        load: f64,
        #[arg(long)]
        horizon: f64,
        /// Also run the receiver and write per-user outcomes here.
        #[arg(long)]
        outcomes: Option<PathBuf>,
    },
}

/// Options shared by every subcommand. Each flag overrides the matching key
/// of the configuration file; without a file the IRA-2 reference scenario
/// (6 dB, R = 1.5, T_f = 200) is the base.
#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    config: Option<PathBuf>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    vf_span: Option<f64>,
    #[arg(long)]
    window_span: Option<f64>,
    #[arg(long)]
    window_step: Option<f64>,
    /// `ira2`, `ira3`, `lambda1`, `lambda2`, or `degree:prob` pairs such as `2:0.51,4:0.49`.
    #[arg(long)]
    distribution: Option<String>,
    #[arg(long, value_delimiter = ',')]
    load_grid: Option<Vec<f64>>,
    #[arg(long)]
    min_users_per_point: Option<u64>,
    #[arg(long)]
    max_lost_events: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving result files; stdout when absent.
    #[arg(long)]
    outputs: Option<String>,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

impl Common {
    fn experiment(&self) -> Result<Experiment, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::reference(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone().into();
                }
            )*};
        }
        set!(
            snr_db,
            rate,
            vf_span,
            window_span,
            window_step,
            load_grid,
            min_users_per_point,
            seed
        );
        if let Some(v) = self.max_lost_events {
            cfg.max_lost_events = Some(v);
        }
        if let Some(v) = &self.outputs {
            cfg.outputs = Some(v.clone());
        }
        if let Some(v) = &self.catalog {
            cfg.catalog = Some(v.clone());
        }
        if let Some(spec) = &self.distribution {
            cfg.distribution = parse_distribution(spec)?;
        }
        Experiment::new(cfg)
    }
}

fn parse_distribution(spec: &str) -> Result<Vec<(usize, f64)>, HarnessError> {
    if let Ok(dist) = distributions::by_name(spec) {
        return Ok(dist.entries().to_vec());
    }
    spec.split(',')
        .map(|pair| {
            let (d, p) = pair
                .split_once(':')
                .ok_or_else(|| HarnessError::Config(format!("bad distribution entry `{pair}`")))?;
            let d = d
                .trim()
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad degree `{d}`")))?;
            let p = p
                .trim()
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad probability `{p}`")))?;
            Ok((d, p))
        })
        .collect()
}

/// Opens `<outputs>/<name>` when an output directory is configured, stdout otherwise.
fn sink(exp: &Experiment, name: &str) -> Result<Box<dyn Write>, HarnessError> {
    match &exp.config.outputs {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Box::new(BufWriter::new(File::create(
                Path::new(dir).join(name),
            )?)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

/// Runs a subcommand and returns the process exit code.
fn run(command: Command) -> Result<u8, HarnessError> {
    match command {
        Command::Predict(common) => {
            let exp = common.experiment()?;
            eprintln!("{}", run_header(&exp)?);
            let curve = harness::predict(&exp)?;
            curve
                .warnings
                .iter()
                .for_each(|w| eprintln!("warning: {w}"));
            let mut out = sink(&exp, "predict.csv")?;
            curve.write_csv(&mut out)?;
            out.flush()?;
        }
        Command::Simulate { common, load } => {
            let mut exp = common.experiment()?;
            eprintln!("{}", run_header(&exp)?);
            exp.config.load_grid = vec![load];
            let mut curve = harness::predict(&exp)?;
            let point = run_point(&exp, load, point_seed(exp.config.seed, 0))?;
            curve.rows[0].sim = Some(point.into());
            let mut out = sink(&exp, "simulate.csv")?;
            curve.write_csv(&mut out)?;
            out.flush()?;
        }
        Command::Sweep(common) => {
            let exp = common.experiment()?;
            eprintln!("{}", run_header(&exp)?);
            let curve = harness::sweep(&exp)?;
            curve
                .warnings
                .iter()
                .for_each(|w| eprintln!("warning: {w}"));
            let mut out = sink(&exp, "sweep.csv")?;
            curve.write_csv(&mut out)?;
            out.flush()?;
        }
        Command::VerifyUcp { common, periods } => {
            let exp = common.experiment()?;
            let mut out = sink(&exp, "verify_ucp.csv")?;
            writeln!(out, "name,n_periods,count,expected,ok")?;
            let mut mismatches = 0;
            for ucp in &exp.catalog {
                for &n in &periods {
                    let count = count_configurations(ucp, n)?;
                    let expected = exact_binomial(n as u64, ucp.mu as u64) * ucp.iso_count;
                    mismatches += (count != expected) as u32;
                    writeln!(
                        out,
                        "{},{n},{count},{expected},{}",
                        ucp.name,
                        count == expected
                    )?;
                }
            }
            out.flush()?;
            if mismatches > 0 {
                eprintln!("error: {mismatches} catalog counts disagree with enumeration");
                return Ok(3);
            }
        }
        Command::DumpTrace {
            common,
            load,
            horizon,
            outcomes,
        } => {
            let exp = common.experiment()?;
            let mut rng = ChaCha8Rng::seed_from_u64(exp.config.seed);
            let trace = generate_trace(&exp.system, &exp.distribution, load, horizon, &mut rng)?;
            let mut out = sink(&exp, "trace.csv")?;
            trace.write_csv(&mut out)?;
            out.flush()?;
            if let Some(path) = outcomes {
                let mut rx = Receiver::new(&trace, &exp.system);
                rx.run();
                let mut file = BufWriter::new(File::create(path)?);
                rx.write_outcomes_csv(&mut file)?;
                file.flush()?;
            }
        }
    }
    Ok(0)
}

fn exit_code(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Floor(
            FloorError::InvalidCatalog(_) | FloorError::EmptyCatalog | FloorError::InvalidLoad(_),
        ) => 2,
        HarnessError::Floor(_) => 3,
        HarnessError::Io(_) => 1,
        HarnessError::Traffic(TrafficError::PlacementInfeasible { .. }) => 3,
        HarnessError::Config(_) | HarnessError::Model(_) | HarnessError::Traffic(_) => 2,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
