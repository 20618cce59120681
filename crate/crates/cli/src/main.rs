use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use snapframe::critical::{build_catalog, Backend, CatalogConfig, RealizationCatalog};
use snapframe::framework::Framework;
use snapframe::io::{
    emit_report, export_trajectory, knot_trajectories, render_svg, FrameworkDocument, ReportFormat, SvgStyle,
};
use snapframe::snap::{
    snappability_index, snappability_report, track_segment, BranchHint, Segment, SnapConfig, TrackConfig, TrackMode,
};

#[derive(Parser)]
#[command(name = "snapframe", version, about = "Stable realizations and snappability of bar-joint frameworks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate stable and unstable realizations.
    Catalog(Common),
    /// Snappability index of every stable realization and of the framework.
    Snappability(Common),
    /// Export the deformation from a stable realization to a saddle as CSV.
    SnapPath {
        #[command(flatten)]
        common: Common,
        /// Stable realization, e.g. S1.
        #[arg(long, default_value = "S1")]
        from: String,
        /// Target saddle, e.g. U1; defaults to the one giving the index.
        #[arg(long)]
        to: Option<String>,
    },
    /// Draw realizations as SVG.
    Render {
        #[command(flatten)]
        common: Common,
        /// Which realizations to draw.
        #[arg(long, value_enum, default_value_t = RenderSet::Named)]
        set: RenderSet,
        /// Also draw the knot trajectories of this stable realization's snap path.
        #[arg(long)]
        trajectory: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    input: PathBuf,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Solver::TotalDegree)]
    solver: Solver,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Segment discretization for deformation tracking.
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long)]
    tol_real: Option<f64>,
    /// Undeformed threshold relative to A·L.
    #[arg(long)]
    tol_energy: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Random starts for the multistart backend.
    #[arg(long, default_value_t = 2000)]
    starts: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    TotalDegree,
    Multistart,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderSet {
    Named,
    Stable,
    Unstable,
    All,
}

enum Failure {
    Input(String),
    Solver(String),
    NoUndeformed,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
            Failure::NoUndeformed => 4,
        }
    }
}

fn load(common: &Common) -> Result<(Framework, FrameworkDocument), Failure> {
    let text =
        fs::read_to_string(&common.input).map_err(|e| Failure::Input(format!("{}: {e}", common.input.display())))?;
    let doc =
        FrameworkDocument::parse(&text).map_err(|e| Failure::Input(format!("{}: {e}", common.input.display())))?;
    let fw = doc.to_framework().map_err(|e| Failure::Input(format!("{}: {e}", common.input.display())))?;
    Ok((fw, doc))
}

fn catalog_config(common: &Common) -> CatalogConfig {
    let mut config = CatalogConfig::default().with_seed_and_workers(common.seed, common.workers);
    config.backend = match common.solver {
        Solver::TotalDegree => Backend::TotalDegree,
        Solver::Multistart => Backend::Multistart,
        Solver::Both => Backend::Both,
    };
    config.multistart.starts = common.starts;
    if let Some(t) = common.tol_real {
        config.tolerances.real = t;
    }
    if let Some(t) = common.tol_energy {
        config.tolerances.energy = t;
    }
    config
}

fn snap_config(common: &Common, catalog: &CatalogConfig) -> SnapConfig {
    let mut config =
        SnapConfig { workers: common.workers, tolerances: catalog.tolerances.clone(), ..Default::default() };
    config.track.steps = common.steps;
    config.relax_config.track.steps = common.steps;
    config.relax_config.tolerances = catalog.tolerances.clone();
    config
}

fn catalog(fw: &Framework, config: &CatalogConfig) -> Result<RealizationCatalog, Failure> {
    build_catalog(fw, config).map_err(|e| Failure::Solver(e.to_string()))
}

fn write(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn format_of(common: &Common) -> ReportFormat {
    match common.format {
        Format::Json => ReportFormat::Json,
        Format::Text => ReportFormat::Text,
    }
}

fn parse_name(name: &str, prefix: char, len: usize) -> Result<usize, Failure> {
    name.strip_prefix(prefix)
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|&n| n >= 1 && n <= len)
        .map(|n| n - 1)
        .ok_or_else(|| Failure::Input(format!("no realization named {name}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Catalog(common) => {
            let (fw, _) = load(&common)?;
            let cat = catalog(&fw, &catalog_config(&common))?;
            write(&common, &emit_report(&fw, &cat, None, format_of(&common)))
        }
        Command::Snappability(common) => {
            let (fw, _) = load(&common)?;
            let cc = catalog_config(&common);
            let cat = catalog(&fw, &cc)?;
            let rep = snappability_report(&fw, &cat, &snap_config(&common, &cc))
                .map_err(|e| Failure::Solver(e.to_string()))?;
            write(&common, &emit_report(&fw, &cat, Some(&rep), format_of(&common)))?;
            if rep.framework_index.is_none() {
                return Err(Failure::NoUndeformed);
            }
            Ok(())
        }
        Command::SnapPath { common, from, to } => {
            let (fw, _) = load(&common)?;
            let cc = catalog_config(&common);
            let cat = catalog(&fw, &cc)?;
            let sc = snap_config(&common, &cc);
            let k = parse_name(&from, 'S', cat.stable.len())?;
            let path = match to {
                Some(name) => {
                    let u = parse_name(&name, 'U', cat.unstable.len())?;
                    let start = &cat.stable[k];
                    let target = &cat.unstable[u];
                    let segment = Segment::new(start.lengths.clone(), target.lengths.clone());
                    let track =
                        TrackConfig { hint: BranchHint::Toward(target.realization.clone()), ..sc.track.clone() };
                    track_segment(&fw, &start.realization, &segment, TrackMode::Forward, &track)
                        .map_err(|e| Failure::Solver(e.to_string()))?
                }
                None => {
                    let sc = SnapConfig { relax: false, ..sc };
                    snappability_index(&fw, &cat, k, &sc)
                        .map_err(|e| Failure::Solver(e.to_string()))?
                        .path
                        .ok_or_else(|| Failure::Solver(format!("{from} reaches no saddle")))?
                }
            };
            let csv = export_trajectory(&fw, &path).map_err(|e| Failure::Solver(e.to_string()))?;
            write(&common, &csv)
        }
        Command::Render { common, set, trajectory } => {
            let (fw, doc) = load(&common)?;
            let named = doc.realizations(&fw).map_err(|e| Failure::Input(e.to_string()))?;
            let need_catalog = !matches!(set, RenderSet::Named) || trajectory.is_some();
            let cc = catalog_config(&common);
            let cat = if need_catalog { Some(catalog(&fw, &cc)?) } else { None };
            let mut realizations = Vec::new();
            match set {
                RenderSet::Named => realizations.extend(named.into_iter().map(|(_, r)| r)),
                RenderSet::Stable => {
                    realizations.extend(cat.iter().flat_map(|c| &c.stable).map(|p| p.realization.clone()))
                }
                RenderSet::Unstable => {
                    realizations.extend(cat.iter().flat_map(|c| &c.unstable).map(|p| p.realization.clone()))
                }
                RenderSet::All => realizations.extend(cat.iter().flat_map(|c| c.all()).map(|p| p.realization.clone())),
            }
            let mut trajectories = Vec::new();
            if let (Some(name), Some(cat)) = (trajectory, &cat) {
                let k = parse_name(&name, 'S', cat.stable.len())?;
                let sc = SnapConfig { relax: false, ..snap_config(&common, &cc) };
                let entry = snappability_index(&fw, cat, k, &sc).map_err(|e| Failure::Solver(e.to_string()))?;
                if let Some(path) = entry.path {
                    let free: Vec<usize> = (0..fw.knot_count()).filter(|&k| !fw.is_pinned(k)).collect();
                    trajectories = knot_trajectories(&path, &free);
                }
            }
            let svg = render_svg(&fw, &realizations, &trajectories, &SvgStyle::default())
                .map_err(|e| Failure::Input(e.to_string()))?;
            write(&common, &svg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Solver(m) => eprintln!("solver error: {m}"),
                Failure::NoUndeformed => eprintln!("error: framework has no undeformed stable realization"),
            }
            ExitCode::from(f.code())
        }
    }
}
