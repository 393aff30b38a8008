use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qbench::circuit::Setting;
use qbench::inference::Mode;
use qbench::scenario::{
    parse_angle, parse_formats, read_plot_input, render_svg, run, schema, write_outputs, ConfigError, Format,
    PartialConfig, Scenario, ScenarioConfig, SCHEMAS,
};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_CLAIMS: u8 = 3;

#[derive(Parser)]
#[command(name = "qbench", version, about = "Run quantum-foundations scenarios and emit CSV, JSON and SVG")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its outputs plus a manifest.
    Run(RunArgs),
    /// Render a trajectory CSV or path-record JSON as SVG.
    Plot {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a JSON schema, or list them all without a name.
    Schema { name: Option<String> },
}

fn angle(s: &str) -> Result<f64, String> {
    parse_angle(s)
}

fn formats(s: &str) -> Result<Vec<Format>, String> {
    parse_formats(s).map_err(|e| e.message)
}

#[derive(Args)]
struct RunArgs {
    /// eraser, double_slit, free_packet, harmonic, repeatability, bell_chsh or claims_suite.
    scenario: Option<String>,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// analytic or montecarlo.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg.
    #[arg(long, value_parser = formats)]
    format: Option<std::vec::Vec<Format>>,
    /// Worker threads; never changes results.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    left: Option<Setting>,
    #[arg(long)]
    right: Option<Setting>,
    #[arg(long)]
    right_first: Option<bool>,
    /// Beam-splitter angle for both arms, e.g. 0.785 or pi/4.
    #[arg(long, value_parser = angle)]
    theta: Option<f64>,
    #[arg(long, value_parser = angle)]
    theta_left: Option<f64>,
    #[arg(long, value_parser = angle)]
    theta_right: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    grid_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    grid_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    save_every: Option<usize>,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    center: Option<f64>,
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, value_parser = angle)]
    chsh_step: Option<f64>,
}

impl RunArgs {
    fn partial(&self) -> Result<PartialConfig, ConfigError> {
        let scenario = self.scenario.as_deref().map(str::parse::<Scenario>).transpose()?;
        Ok(PartialConfig {
            scenario,
            mode: self.mode,
            seed: self.seed,
            trials: self.trials,
            out: self.out.clone(),
            formats: self.format.clone(),
            workers: self.workers,
            left: self.left,
            right: self.right,
            right_first: self.right_first,
            theta: self.theta,
            theta_left: self.theta_left,
            theta_right: self.theta_right,
            grid_min: self.grid_min,
            grid_max: self.grid_max,
            points: self.points,
            dt: self.dt,
            steps: self.steps,
            save_every: self.save_every,
            trajectories: self.trajectories,
            sigma: self.sigma,
            center: self.center,
            separation: self.separation,
            omega: self.omega,
            chsh_step: self.chsh_step,
        })
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn run_command(args: &RunArgs) -> ExitCode {
    let flags = match args.partial() {
        Ok(p) => p,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let file = match &args.config {
        None => PartialConfig::default(),
        Some(path) => match fs::read_to_string(path) {
            Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", path.display())),
            Ok(text) => match PartialConfig::from_json(&text) {
                Ok(p) => p,
                Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", path.display())),
            },
        },
    };
    let merged = flags.over(&file);
    let config = match ScenarioConfig::resolve(&merged) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let out_dir = merged.out.clone().unwrap_or_else(|| PathBuf::from("out").join(config.scenario.name()));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(merged.workers.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return fail(EXIT_RUNTIME, e),
    };
    let output = match pool.install(|| run(&config)) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_RUNTIME, e),
    };
    let manifest = match write_outputs(&config, &output, &out_dir) {
        Ok(m) => m,
        Err(e) => return fail(EXIT_RUNTIME, e),
    };
    for f in &manifest.files {
        println!("{}  {}", f.sha256, out_dir.join(&f.path).display());
    }
    if !output.claims_ok {
        return fail(EXIT_CLAIMS, "claims suite: at least one verdict differs from its expectation");
    }
    ExitCode::SUCCESS
}

fn plot_command(input: &PathBuf, out: &PathBuf) -> ExitCode {
    let bytes = match fs::read(input) {
        Ok(b) => b,
        Err(e) => return fail(EXIT_RUNTIME, format!("{}: {e}", input.display())),
    };
    let parsed = match read_plot_input(&bytes) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", input.display())),
    };
    match fs::write(out, render_svg(&parsed)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_RUNTIME, format!("{}: {e}", out.display())),
    }
}

fn schema_command(name: Option<&str>) -> ExitCode {
    match name {
        None => {
            for (n, _) in SCHEMAS {
                println!("{n}");
            }
            ExitCode::SUCCESS
        }
        Some(n) => match schema(n) {
            Some(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            None => fail(EXIT_USAGE, format!("unknown schema `{n}`")),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match &cli.command {
        Command::Run(args) => run_command(args),
        Command::Plot { input, out } => plot_command(input, out),
        Command::Schema { name } => schema_command(name.as_deref()),
    }
}
