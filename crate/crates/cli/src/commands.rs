//! Subcommand implementations. Output goes to the supplied writer so tests can
//! capture it.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use carve_core::io::buffers::{read_depth, read_seg, write_frameset};
use carve_core::io::{load_scene_dataset, write_nrrd, NrrdVolume};
use carve_core::metrics::{
    global_rank, mae_first_segment, plackett_luce_fit, rank_metric_regression, rmse_depth, PlOptions, RankingData,
};
use carve_core::phantom::{default_color_table, default_scene, phantom_generate, PhantomSpec};
use carve_core::{render, render_with_threads, Scene};
use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::registry::Registry;
use crate::service::{router, AppState};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation; exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or invalid input, or a failed computation; exit code 2.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn data<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "carve", version, about = "Segment-aware clipping volume renderer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene document to color, depth and segment buffers
    Render {
        #[arg(long)]
        scene: PathBuf,
        /// Writes PREFIX.png, PREFIX_depth.pfm and PREFIX_seg.pgm
        #[arg(long)]
        out_prefix: PathBuf,
        /// Worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare a test rendering against a reference
    Metrics {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, requires = "test_depth")]
        ref_depth: Option<PathBuf>,
        #[arg(long, requires = "ref_depth")]
        test_depth: Option<PathBuf>,
    },
    /// Aggregate rankings with a Plackett-Luce fit
    PlRank {
        file: PathBuf,
        #[arg(long, default_value_t = PlOptions::default().smoothing)]
        smoothing: f64,
        #[arg(long, default_value_t = PlOptions::default().max_iter)]
        max_iter: usize,
        #[arg(long, default_value_t = PlOptions::default().tol)]
        tol: f64,
    },
    /// Least-squares fit of metric values on ranks (lines of `rank,value`)
    Regress { file: PathBuf },
    /// Write the synthetic shell phantom, its color table and a default scene
    Phantom {
        #[arg(long)]
        out: PathBuf,
        /// Edge length of the cubic grid
        #[arg(long, default_value_t = 128)]
        dims: usize,
    },
    /// Serve the HTTP render/pick API
    Serve {
        #[arg(long, env = "CARVE_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, env = "CARVE_DATASET_ROOT")]
        root: PathBuf,
        /// Render threads (default: all cores)
        #[arg(long, env = "CARVE_THREADS")]
        threads: Option<usize>,
    },
}

pub fn run(cli: Cli, out: &mut impl Write) -> Result<(), CliError> {
    match cli.command {
        Command::Render { scene, out_prefix, threads } => cmd_render(&scene, &out_prefix, threads),
        Command::Metrics { reference, test, ref_depth, test_depth } => {
            cmd_metrics(&reference, &test, ref_depth.as_deref().zip(test_depth.as_deref()), out)
        }
        Command::PlRank { file, smoothing, max_iter, tol } => {
            cmd_pl_rank(&file, &PlOptions { max_iter, tol, smoothing }, out)
        }
        Command::Regress { file } => cmd_regress(&file, out),
        Command::Phantom { out: prefix, dims } => cmd_phantom(&prefix, dims, out),
        Command::Serve { listen, root, threads } => cmd_serve(listen, &root, threads),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(data(path.display()))
}

fn cmd_render(scene_path: &Path, prefix: &Path, threads: Option<usize>) -> Result<(), CliError> {
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let scene = Scene::parse(&read_text(scene_path)?).map_err(data(scene_path.display()))?;
    let base = scene_path.parent().unwrap_or(Path::new("."));
    let dataset = load_scene_dataset(&scene, base).map_err(data("loading dataset"))?;
    let frame = match threads {
        Some(n) => render_with_threads(&scene, &dataset, n),
        None => render(&scene, &dataset),
    }
    .map_err(data("render"))?;
    write_frameset(&frame, prefix).map_err(data(prefix.display()))?;
    Ok(())
}

fn cmd_metrics(
    reference: &Path,
    test: &Path,
    depths: Option<(&Path, &Path)>,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let a = read_seg(reference).map_err(data(reference.display()))?;
    let b = read_seg(test).map_err(data(test.display()))?;
    let mae = mae_first_segment(&a, &b).map_err(data("mae_first_segment"))?;
    writeln!(out, "mae_first_segment={mae}").map_err(data("stdout"))?;
    if let Some((rd, td)) = depths {
        let a = read_depth(rd).map_err(data(rd.display()))?;
        let b = read_depth(td).map_err(data(td.display()))?;
        let rmse = rmse_depth(&a, &b).map_err(data("rmse_depth"))?;
        writeln!(out, "rmse_depth={rmse}").map_err(data("stdout"))?;
    }
    Ok(())
}

fn cmd_pl_rank(file: &Path, opts: &PlOptions, out: &mut impl Write) -> Result<(), CliError> {
    let rankings = RankingData::parse(&read_text(file)?).map_err(data(file.display()))?;
    let fit = plackett_luce_fit(&rankings, opts).map_err(data("plackett-luce"))?;
    if !fit.converged {
        log::warn!("stopped after {} iterations without converging", fit.iterations);
    }
    for (n, id) in global_rank(&fit.worths).iter().enumerate() {
        let w = fit.worths.get(id).unwrap_or(0.0);
        writeln!(out, "{}\t{id}\t{w:.9}", n + 1).map_err(data("stdout"))?;
    }
    Ok(())
}

/// Parses `rank,value` lines; blank lines and `#` comments are skipped.
pub fn parse_rank_values(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut ranks = Vec::new();
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Vec<f64> = fields.iter().filter_map(|f| f.parse().ok()).collect();
        match parsed[..] {
            [r, v] if fields.len() == 2 && r.is_finite() && v.is_finite() => {
                ranks.push(r);
                values.push(v);
            }
            _ => return Err(format!("line {}: expected `rank,value`", n + 1)),
        }
    }
    Ok((ranks, values))
}

fn cmd_regress(file: &Path, out: &mut impl Write) -> Result<(), CliError> {
    let (ranks, values) = parse_rank_values(&read_text(file)?).map_err(data(file.display()))?;
    let fit = rank_metric_regression(&ranks, &values).map_err(data("regression"))?;
    writeln!(out, "slope={}\nintercept={}\nr_squared={}", fit.slope, fit.intercept, fit.r_squared)
        .map_err(data("stdout"))
}

fn cmd_phantom(prefix: &Path, dims: usize, out: &mut impl Write) -> Result<(), CliError> {
    let name = prefix
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("--out {} has no file name", prefix.display())))?
        .to_string_lossy()
        .into_owned();
    let spec = PhantomSpec::cube(dims);
    let (intensity, labels) = phantom_generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let scene = default_scene(&spec, &name, vec![]);
    let with = |suffix: &str| prefix.with_file_name(format!("{name}{suffix}"));
    let files = [
        (with("_intensity.nrrd"), write_nrrd(&NrrdVolume::from_intensity(&intensity))),
        (with("_labels.nrrd"), write_nrrd(&NrrdVolume::from_labels(&labels))),
        (with("_colors.txt"), default_color_table(&spec).to_text().into_bytes()),
        (with("_scene.json"), scene.serialize().into_bytes()),
    ];
    for (path, bytes) in files {
        std::fs::write(&path, bytes).map_err(data(path.display()))?;
        writeln!(out, "{}", path.display()).map_err(data("stdout"))?;
    }
    Ok(())
}

fn cmd_serve(listen: SocketAddr, root: &Path, threads: Option<usize>) -> Result<(), CliError> {
    let threads = match threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let registry = Registry::scan(root).map_err(data("dataset root"))?;
    log::info!("loaded {} datasets from {}", registry.datasets().len(), root.display());
    let state = Arc::new(AppState::new(registry, threads).map_err(data("thread pool"))?);
    let runtime = tokio::runtime::Runtime::new().map_err(data("runtime"))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen).await.map_err(data(listen))?;
        log::info!("listening on {listen}");
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(data("server"))
    })
}
