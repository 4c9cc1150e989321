//! `kbars` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kbars::config::{BatchConfig, RunConfig, Verbosity};
use kbars::errbars::{FullReconMode, JackknifeConfig};
use kbars::harness::{
    batch_summary_csv, measured_data, run_batch, run_experiment, spec_label, write_json,
    BootstrapSettings, ExperimentSpec, ImageSource,
};
use kbars::io::{load_image, load_map, save_map, save_raster, MapSidecar};
use kbars::kspace::normalize_image;
use kbars::phantom::shepp_logan;
use kbars::render::{render, render_mask, RenderMode};
use kbars::sampling::{draw_sampling_set, mask_from_set, Density, LineSet, SamplingScheme};
use kbars::tv::AdmmProblem;
use kbars::GridDims;
use serde::de::DeserializeOwned;

#[derive(Parser, Debug)]
#[command(
    name = "kbars",
    version,
    about = "Error bars for TV-regularized k-space reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML (or .json) run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory (output file for `phantom` and `render`).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads for replicate reconstructions.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[arg(long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    #[arg(long, global = true)]
    verbose: bool,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a sampling set and write mask.pgm and lines.json.
    Mask(ExperimentArgs),
    /// Reconstruct from undersampled noisy data.
    Reconstruct(ExperimentArgs),
    /// Reconstruct and compute the jackknife error map.
    Jackknife(ExperimentArgs),
    /// Reconstruct and compute the bootstrap error map.
    Bootstrap(ExperimentArgs),
    /// Full experiment with ground truth and agreement metrics.
    Evaluate(ExperimentArgs),
    /// Run every experiment of a batch config; writes summary.csv.
    Batch,
    /// Render an image or `.f32` map to PGM or PNG.
    Render(RenderArgs),
    /// Write a Shepp-Logan phantom.
    Phantom(PhantomArgs),
}

#[derive(Args, Debug, Default)]
struct ExperimentArgs {
    /// `phantom:ROWSxCOLS` or an image path (PGM/PNG).
    #[arg(long, value_name = "SOURCE", value_parser = parse_source)]
    input: Option<ImageSource>,
    #[arg(long)]
    id: Option<String>,
    /// radial | horizontal
    #[arg(long, value_parser = parse_enum::<SamplingScheme>)]
    scheme: Option<SamplingScheme>,
    /// 1x | 2x
    #[arg(long, value_parser = parse_enum::<Density>)]
    density: Option<Density>,
    #[arg(long)]
    num_draws: Option<usize>,
    /// Measure every row (diagnostic).
    #[arg(long)]
    full_sampling: bool,
    /// Standard deviation of the complex measurement noise.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Jackknife calibration constant.
    #[arg(long)]
    c: Option<f64>,
    /// Number of bootstrap replicates.
    #[arg(long)]
    k: Option<usize>,
    /// solve | shortcut
    #[arg(long, value_parser = parse_enum::<FullReconMode>)]
    full_recon_mode: Option<FullReconMode>,
    #[arg(long)]
    bootstrap_stream: Option<u64>,
    /// Extra noise added to each bootstrap replicate.
    #[arg(long)]
    replicate_noise: Option<f64>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Image (PGM/PNG) or `.f32` map with sidecar.
    input: PathBuf,
    /// intensity | signed-error (default chosen from the sidecar kind)
    #[arg(long, value_parser = parse_enum::<RenderMode>)]
    mode: Option<RenderMode>,
}

#[derive(Args, Debug)]
struct PhantomArgs {
    #[arg(long, default_value = "378x284")]
    dims: GridDims,
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

fn parse_source(s: &str) -> Result<ImageSource, String> {
    match s.strip_prefix("phantom:") {
        Some(d) => {
            let dims: GridDims = d.parse().map_err(|e: kbars::Error| e.to_string())?;
            Ok(ImageSource::Phantom {
                rows: dims.rows,
                cols: dims.cols,
            })
        }
        None => Ok(ImageSource::File(PathBuf::from(s))),
    }
}

enum Failure {
    Usage(String),
    Run(kbars::Error),
}

impl From<kbars::Error> for Failure {
    fn from(e: kbars::Error) -> Self {
        Failure::Run(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Phantom(args) => {
            init(&cli, Verbosity::Normal, None)?;
            phantom(&cli, args)
        }
        Command::Render(args) => {
            init(&cli, Verbosity::Normal, None)?;
            render_cmd(&cli, args)
        }
        Command::Batch => batch(&cli),
        Command::Mask(a)
        | Command::Reconstruct(a)
        | Command::Jackknife(a)
        | Command::Bootstrap(a)
        | Command::Evaluate(a) => {
            let cfg = resolve(&cli, a)?;
            init(&cli, cfg.verbosity, cfg.threads)?;
            experiment(&cli, cfg)
        }
    }
}

fn verbosity(cli: &Cli, base: Verbosity) -> Verbosity {
    if cli.quiet {
        Verbosity::Quiet
    } else if cli.verbose {
        Verbosity::Verbose
    } else {
        base
    }
}

fn init(cli: &Cli, base: Verbosity, threads: Option<usize>) -> Outcome {
    let level = match verbosity(cli, base) {
        Verbosity::Quiet => log::LevelFilter::Error,
        Verbosity::Normal => log::LevelFilter::Info,
        Verbosity::Verbose => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();
    let threads = cli.threads.map(usize::from).or(threads);
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("--threads {n}: {e}")))?;
    }
    Ok(())
}

fn resolve(cli: &Cli, a: &ExperimentArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig {
            out: PathBuf::from("out"),
            verbosity: Verbosity::Normal,
            threads: None,
            experiment: ExperimentSpec::full_scale(
                ImageSource::Phantom {
                    rows: 378,
                    cols: 284,
                },
                0,
            ),
        },
    };
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t.into());
    }
    cfg.verbosity = verbosity(cli, cfg.verbosity);

    let e = &mut cfg.experiment;
    if let Some(s) = cli.seed {
        e.seed = s;
    }
    if let Some(v) = &a.input {
        e.input = v.clone();
    }
    if let Some(v) = &a.id {
        e.id = Some(v.clone());
    }
    if let Some(v) = a.scheme {
        e.scheme = v;
    }
    if let Some(v) = a.density {
        e.density = v;
    }
    if a.num_draws.is_some() {
        e.num_draws = a.num_draws;
    }
    if a.full_sampling {
        e.full_sampling = true;
    }
    if let Some(v) = a.sigma {
        e.noise_sigma = v;
    }
    if let Some(v) = a.mu {
        e.solver.mu = v;
    }
    if let Some(v) = a.beta {
        e.solver.beta = v;
    }
    if let Some(v) = a.iterations {
        e.solver.iterations = v;
    }
    if let Some(c) = a.c {
        e.jackknife = Some(JackknifeConfig { c });
    }
    let touches_bootstrap = a.k.is_some()
        || a.full_recon_mode.is_some()
        || a.bootstrap_stream.is_some()
        || a.replicate_noise.is_some();
    if touches_bootstrap {
        let b = e.bootstrap.get_or_insert_with(BootstrapSettings::default);
        if let Some(v) = a.k {
            b.k = v;
        }
        if let Some(v) = a.full_recon_mode {
            b.full_recon_mode = v;
        }
        if let Some(v) = a.bootstrap_stream {
            b.stream = v;
        }
        if a.replicate_noise.is_some() {
            b.replicate_noise = a.replicate_noise;
        }
    }
    match cli.command {
        Command::Mask(_) | Command::Reconstruct(_) => {
            e.jackknife = None;
            e.bootstrap = None;
        }
        Command::Jackknife(_) => {
            e.bootstrap = None;
            e.jackknife.get_or_insert_with(JackknifeConfig::default);
        }
        Command::Bootstrap(_) => {
            e.jackknife = None;
            e.bootstrap.get_or_insert_with(BootstrapSettings::default);
        }
        _ => {}
    }
    e.validate()?;
    Ok(cfg)
}

fn refuse_overwrite(path: &Path, force: bool) -> Outcome {
    if !force && path.exists() {
        return Err(kbars::Error::WouldOverwrite(path.to_owned()).into());
    }
    Ok(())
}

fn write_text(path: &Path, text: &str, force: bool) -> Outcome {
    refuse_overwrite(path, force)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| kbars::Error::Io {
            path: parent.to_owned(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| kbars::Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    Ok(())
}

/// `<dir>/<stem>.resolved.json` next to a single-file output.
fn resolved_beside(file: &Path) -> PathBuf {
    let stem = file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    file.with_file_name(format!("{stem}.resolved.json"))
}

fn experiment(cli: &Cli, cfg: RunConfig) -> Outcome {
    let dir = cfg.out.clone();
    let resolved = dir.join("resolved.toml");
    refuse_overwrite(&resolved, cli.force)?;
    let spec = &cfg.experiment;

    if let Command::Mask(_) = cli.command {
        let dims = normalize_image(&spec.input.load()?).dims();
        let lines = if spec.full_sampling {
            LineSet::full_horizontal(dims)
        } else {
            draw_sampling_set(&spec.sampling_plan(dims)?)
        };
        save_raster(
            &render_mask(&mask_from_set(&lines)),
            dir.join("mask.pgm"),
            cli.force,
        )?;
        write_json(
            &dir.join("lines.json"),
            &serde_json::to_value(&lines).expect("line set serializes"),
            cli.force,
        )?;
        log::info!(
            "{} lines, {} retained pixels",
            lines.len(),
            mask_from_set(&lines).count()
        );
    } else {
        let report = run_experiment(spec)?;
        report.write_to(&dir, cli.force)?;
        for t in &report.timings {
            log::debug!("{:<12} {:.3}s", t.stage, t.seconds);
        }
        for (name, m) in [
            ("jackknife", report.metrics.jackknife),
            ("bootstrap", report.metrics.bootstrap),
        ] {
            if let Some(m) = m {
                log::info!(
                    "{name}: pearson_abs {:.4} ratio_l2 {:.4} coverage {:.4}",
                    m.pearson_abs,
                    m.ratio_l2,
                    m.coverage
                );
            }
        }
        if matches!(cli.command, Command::Reconstruct(_)) && cfg.verbosity == Verbosity::Verbose {
            let measured = measured_data(spec, &report.original)?;
            let mask = mask_from_set(&report.lines);
            let problem = AdmmProblem::new(&measured, &mask, &spec.solver)?;
            let (_, diags) = problem.solve_with_diagnostics(&measured, &mask)?;
            let mut text = String::from("iteration,objective,fidelity_residual\n");
            for d in diags {
                writeln!(
                    text,
                    "{},{},{}",
                    d.iteration, d.objective, d.fidelity_residual
                )
                .unwrap();
            }
            write_text(&dir.join("diagnostics.csv"), &text, cli.force)?;
        }
    }
    write_text(&resolved, &cfg.to_toml()?, cli.force)?;
    log::info!("wrote {}", dir.display());
    Ok(())
}

fn batch(cli: &Cli) -> Outcome {
    let Some(path) = &cli.config else {
        return Err(Failure::Usage("`batch` requires --config <FILE>".into()));
    };
    let mut cfg = BatchConfig::load(path)?;
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t.into());
    }
    cfg.verbosity = verbosity(cli, cfg.verbosity);
    if let Some(s) = cli.seed {
        for spec in &mut cfg.experiments {
            spec.seed = s;
        }
    }
    init(cli, cfg.verbosity, cfg.threads)?;
    let resolved = cfg.out.join("resolved.toml");
    refuse_overwrite(&resolved, cli.force)?;

    let results = run_batch(&cfg.experiments);
    let mut failed = 0;
    for (i, (spec, result)) in cfg.experiments.iter().zip(&results).enumerate() {
        let label = spec_label(spec, i);
        match result {
            Ok(rep) => rep.write_to(&cfg.out.join(&label), cli.force)?,
            Err(e) => {
                failed += 1;
                log::error!("{label}: {e}");
            }
        }
    }
    write_text(
        &cfg.out.join("summary.csv"),
        &batch_summary_csv(&cfg.experiments, &results),
        cli.force,
    )?;
    write_text(&resolved, &cfg.to_toml()?, cli.force)?;
    log::info!(
        "{} of {} experiments succeeded",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        return Err(kbars::Error::Config(format!(
            "{failed} experiment(s) failed; see summary.csv"
        ))
        .into());
    }
    Ok(())
}

fn phantom(cli: &Cli, args: &PhantomArgs) -> Outcome {
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("phantom.pgm"));
    let img = shepp_logan(args.dims)?;
    if out.extension().is_some_and(|e| e == "f32") {
        let side = MapSidecar::new(
            args.dims,
            "phantom",
            serde_json::json!({ "dims": args.dims }),
        );
        save_map(img.pixels(), &out, &side, cli.force)?;
    } else {
        save_raster(
            &render(img.pixels(), RenderMode::Intensity),
            &out,
            cli.force,
        )?;
    }
    let resolved = serde_json::json!({ "command": "phantom", "dims": args.dims, "out": out });
    write_json(&resolved_beside(&out), &resolved, cli.force)?;
    Ok(())
}

fn render_cmd(cli: &Cli, args: &RenderArgs) -> Outcome {
    let (values, default_mode) = if args.input.extension().is_some_and(|e| e == "f32") {
        let (vals, side) = load_map(&args.input)?;
        let mode = match side.kind.as_str() {
            "original" | "reconstruction" | "phantom" | "image" => RenderMode::Intensity,
            _ => RenderMode::SignedError,
        };
        (vals.mapv(f64::from), mode)
    } else {
        (
            load_image(&args.input)?.into_pixels(),
            RenderMode::Intensity,
        )
    };
    let mode = args.mode.unwrap_or(default_mode);
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| args.input.with_extension("png"));
    save_raster(&render(&values, mode), &out, cli.force)?;
    let resolved =
        serde_json::json!({ "command": "render", "input": args.input, "mode": mode, "out": out });
    write_json(&resolved_beside(&out), &resolved, cli.force)?;
    Ok(())
}
