use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lattice_control::experiments::{self, Manifest, RunConfig};
use lattice_control::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_COMPUTE: u8 = 3;
const EXIT_ASSERTION: u8 = 4;

/// Experiments on semi-discrete heat equations and their controls.
#[derive(Parser)]
#[command(name = "latctl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Output directory for the manifest and tables.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// `key=value` override of a config field, e.g. `params.hs=[0.1]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Clone)]
struct KindArgs {
    /// Config to start from; defaults to the shipped config of this kind.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Diff the results of two manifests.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        rtol: f64,
        #[arg(long, default_value_t = 0.0)]
        atol: f64,
    },
    /// Run every config in a directory.
    ReproduceAll {
        #[arg(long, default_value = "configs")]
        configs: PathBuf,
        #[arg(long, default_value = "runs")]
        output: PathBuf,
    },
    Calculus(KindArgs),
    Operator(KindArgs),
    Localization(KindArgs),
    Caccioppoli(KindArgs),
    Heatkernel(KindArgs),
    FeynmanKac(KindArgs),
    Spectral(KindArgs),
    Control(KindArgs),
    Observability(KindArgs),
    Carleman(KindArgs),
    Necessity(KindArgs),
}

fn shipped(kind: &str) -> &'static str {
    match kind {
        "calculus" => include_str!("../../../../configs/criterion_01_calculus.json"),
        "operator" => include_str!("../../../../configs/criterion_02_03_operator.json"),
        "localization" => include_str!("../../../../configs/criterion_04_localization.json"),
        "caccioppoli" => include_str!("../../../../configs/criterion_05_caccioppoli.json"),
        "heatkernel" => include_str!("../../../../configs/criterion_06_heatkernel.json"),
        "feynman_kac" => include_str!("../../../../configs/criterion_07_feynman_kac.json"),
        "spectral" => include_str!("../../../../configs/criterion_08_spectral.json"),
        "control" => include_str!("../../../../configs/criterion_09_11_control.json"),
        "observability" => include_str!("../../../../configs/observability.json"),
        "carleman" => include_str!("../../../../configs/criterion_13_carleman.json"),
        _ => include_str!("../../../../configs/criterion_12_necessity.json"),
    }
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::Json(_) => ExitCode::from(EXIT_VALIDATION),
        _ => ExitCode::from(EXIT_COMPUTE),
    }
}

fn build_config(text: &str, o: &Overrides) -> Result<RunConfig, Error> {
    let mut set = o.set.clone();
    if let Some(seed) = o.seed {
        set.push(format!("seed={seed}"));
    }
    if let Some(out) = &o.output {
        set.push(format!("output={}", serde_json::Value::String(out.display().to_string())));
    }
    RunConfig::from_json(text, &set)
}

fn report(m: &Manifest, dir: &Path) {
    println!("{} [{}] -> {}", m.name, m.kind, dir.display());
    for a in &m.assertions {
        let mark = if a.passed { "PASS" } else { "FAIL" };
        println!("  {mark} {}: {} {:?} {} (got {})", a.label, a.path, a.op, a.expected, a.actual);
    }
}

fn run_one(config: &RunConfig, root: &Path) -> Result<Manifest, Error> {
    let bundle = experiments::run(config)?;
    let dir = experiments::output_dir(config, root);
    bundle.write(&dir)?;
    report(&bundle.manifest, &dir);
    Ok(bundle.manifest)
}

fn finish(result: Result<Manifest, Error>) -> ExitCode {
    match result {
        Ok(m) if m.passed() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(EXIT_ASSERTION),
        Err(e) => exit_for(&e),
    }
}

fn run_kind(kind: &str, args: &KindArgs) -> ExitCode {
    let text = match &args.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return exit_for(&Error::Config(vec![format!("{}: {e}", p.display())])),
        },
        None => shipped(kind).to_string(),
    };
    let config = match build_config(&text, &args.overrides) {
        Ok(c) if c.experiment.kind() == kind => c,
        Ok(c) => {
            return exit_for(&Error::Config(vec![format!("config is a {} run, not {kind}", c.experiment.kind())]))
        }
        Err(e) => return exit_for(&e),
    };
    finish(run_one(&config, Path::new("runs")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LATCTL_WORKERS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: LATCTL_WORKERS ignored: {e}");
        }
    }
    match &cli.command {
        Command::Run { config, overrides } => {
            let text = match std::fs::read_to_string(config) {
                Ok(t) => t,
                Err(e) => return exit_for(&Error::Config(vec![format!("{}: {e}", config.display())])),
            };
            finish(build_config(&text, overrides).and_then(|c| run_one(&c, Path::new("runs"))))
        }
        Command::Compare { a, b, rtol, atol } => {
            let diff = Manifest::load(a)
                .and_then(|ma| Manifest::load(b).and_then(|mb| experiments::compare(&ma, &mb, *rtol, *atol)));
            match diff {
                Ok(d) => {
                    println!("{} differences ({} runs, rtol {}, atol {})", d.diffs.len(), d.kind, d.rtol, d.atol);
                    for f in &d.diffs {
                        let ratio = f.ratio.map_or(String::new(), |r| format!(" ratio {r:.6e}"));
                        println!("  {}: {} -> {}{ratio}", f.path, f.a, f.b);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => exit_for(&e),
            }
        }
        Command::ReproduceAll { configs, output } => {
            let paths = match experiments::discover_configs(configs) {
                Ok(p) => p,
                Err(e) => return exit_for(&e),
            };
            let mut worst = ExitCode::SUCCESS;
            let mut failed = false;
            for path in paths {
                let outcome = RunConfig::load(&path).and_then(|c| run_one(&c, output));
                match outcome {
                    Ok(m) if !m.passed() => failed = true,
                    Ok(_) => {}
                    Err(e) => worst = exit_for(&e),
                }
            }
            if worst != ExitCode::SUCCESS {
                worst
            } else if failed {
                ExitCode::from(EXIT_ASSERTION)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Calculus(a) => run_kind("calculus", a),
        Command::Operator(a) => run_kind("operator", a),
        Command::Localization(a) => run_kind("localization", a),
        Command::Caccioppoli(a) => run_kind("caccioppoli", a),
        Command::Heatkernel(a) => run_kind("heatkernel", a),
        Command::FeynmanKac(a) => run_kind("feynman_kac", a),
        Command::Spectral(a) => run_kind("spectral", a),
        Command::Control(a) => run_kind("control", a),
        Command::Observability(a) => run_kind("observability", a),
        Command::Carleman(a) => run_kind("carleman", a),
        Command::Necessity(a) => run_kind("necessity", a),
    }
}
