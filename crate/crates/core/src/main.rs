use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use acpath::io::{self, EventSelection, RenderOptions};
use acpath::validate::{validate, ValidateConfig};
use acpath::{explorer, query, Costs, Dataset, ExploreConfig, ExploreError, Init, PathGraph};

#[derive(Parser)]
#[command(name = "acpath", version, about = "Regularization path of the asymmetric-cost linear SVM over (C+, C-)")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Opts {
    /// Bias augmentation constant B.
    #[arg(long, global = true, default_value_t = acpath::DEFAULT_B_CONST)]
    b_const: f64,
    /// Starting region: `origin` or `point:CP,CM`.
    #[arg(long, global = true, default_value = "origin", value_parser = parse_init)]
    init: Init,
    #[arg(long, global = true)]
    tol_feas: Option<f64>,
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    #[arg(long, global = true)]
    tol_kkt: Option<f64>,
    /// Layer budget (default 50 N).
    #[arg(long, global = true)]
    max_layers: Option<usize>,
    /// Process the facets of a layer in parallel.
    #[arg(long, global = true)]
    parallel: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Window `CP,CM` for restarts, validation and rendering.
    #[arg(long, global = true, value_parser = parse_pair)]
    window: Option<(f64, f64)>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Explore the path and write it as JSON.
    Trace {
        data: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the model at one cost pair.
    Query {
        data: PathBuf,
        /// Cost pair `CP,CM`.
        #[arg(long, value_parser = parse_pair)]
        at: (f64, f64),
        /// Previously exported path; traced afresh when absent.
        #[arg(long)]
        path: Option<PathBuf>,
        /// Raw features to classify, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
    },
    /// Check a path against its invariants and a direct solver.
    Validate {
        data: PathBuf,
        #[arg(long)]
        path: Option<PathBuf>,
        /// Random points for the solver comparison.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write the path as JSON or as CSV event polylines.
    Export {
        data: PathBuf,
        #[arg(long)]
        path: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Draw the facets as SVG.
    Render {
        data: PathBuf,
        #[arg(long)]
        path: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Event paths to draw: `all` or sample indices `i,j,...`.
        #[arg(long)]
        events: Option<String>,
        #[arg(long)]
        no_means: bool,
    },
    /// Write a random two-class Gaussian dataset.
    Generate {
        #[arg(long, default_value_t = 10)]
        n_plus: usize,
        #[arg(long, default_value_t = 10)]
        n_minus: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Distance between the class means along each axis.
        #[arg(long, default_value_t = 1.0)]
        shift: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

enum Fail {
    Validation,
    Input(String),
    Budget(String),
}

impl<E: std::error::Error> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail::Input(e.to_string())
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected CP,CM")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0) {
        return Err("costs must be finite and non-negative".into());
    }
    Ok((a, b))
}

fn parse_init(s: &str) -> Result<Init, String> {
    match s {
        "origin" => Ok(Init::Origin),
        _ => {
            let p = s.strip_prefix("point:").ok_or("expected origin or point:CP,CM")?;
            let (a, b) = parse_pair(p)?;
            Ok(Init::Point(Costs::new(a, b)))
        }
    }
}

fn explore_config(o: &Opts) -> ExploreConfig {
    let mut cfg = ExploreConfig {
        init: o.init,
        max_layers: o.max_layers,
        parallel: o.parallel,
        window: o.window,
        ..Default::default()
    };
    cfg.oracle.seed = o.seed;
    if let Some(t) = o.tol_feas {
        cfg.tol.feas = t;
    }
    if let Some(t) = o.tol_rank {
        cfg.tol.rank = t;
    }
    if let Some(t) = o.tol_kkt {
        cfg.tol.kkt = t;
    }
    cfg
}

fn load(o: &Opts, data: &Path) -> Result<Dataset, Fail> {
    if !(o.b_const.is_finite() && o.b_const > 0.0) {
        return Err(Fail::Input("--b-const must be positive".into()));
    }
    Ok(io::load_dataset(data, o.b_const)?)
}

fn trace(o: &Opts, data: &Dataset) -> Result<PathGraph, Fail> {
    match explorer::run(data, &explore_config(o)) {
        Ok(g) => Ok(g),
        Err(e @ ExploreError::LayerBudgetExceeded { .. }) => Err(Fail::Budget(e.to_string())),
        Err(e) => Err(Fail::Input(e.to_string())),
    }
}

/// The path from `--path`, or a fresh trace.
fn obtain(o: &Opts, data: &Dataset, path: Option<&Path>) -> Result<PathGraph, Fail> {
    let Some(p) = path else { return trace(o, data) };
    let doc = io::import_json(&std::fs::read_to_string(p)?)?;
    if doc.graph.n != data.n() || doc.graph.n_plus != data.n_plus() {
        return Err(Fail::Input(format!(
            "{} was traced on {} samples ({} positive), the dataset has {} ({})",
            p.display(),
            doc.graph.n,
            doc.graph.n_plus,
            data.n(),
            data.n_plus()
        )));
    }
    Ok(doc.graph)
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Fail> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn summary(g: &PathGraph) {
    eprintln!(
        "{} facets, {} edges, {} vertices, {} layers, {} unexplored descriptors",
        g.facets.len(),
        g.edges.len(),
        g.live_vertices().count(),
        g.num_layers(),
        g.unexplored.len()
    );
}

fn run(cli: Cli) -> Result<(), Fail> {
    let o = &cli.opts;
    match &cli.cmd {
        Cmd::Trace { data, output } => {
            let d = load(o, data)?;
            let g = trace(o, &d)?;
            summary(&g);
            emit(output.as_deref(), &io::export_json(&g, Some(&d))?)
        }
        Cmd::Query { data, at, path, x } => {
            let d = load(o, data)?;
            let g = obtain(o, &d, path.as_deref())?;
            let c = Costs::new(at.0, at.1);
            let located = query::locate_facet(&g, c)?;
            let model = query::evaluate(&g, &d, c)?;
            let mut out = serde_json::json!({
                "located": located,
                "key": g.facets[model.facet].key,
                "model": model,
            });
            if let Some(x) = x {
                let (label, score) = query::predict(&model.beta, x, d.b_const())?;
                out["label"] = label.into();
                out["score"] = score.into();
            }
            emit(None, &format!("{}\n", serde_json::to_string_pretty(&out)?))
        }
        Cmd::Validate {
            data,
            path,
            samples,
            json,
        } => {
            let d = load(o, data)?;
            let g = obtain(o, &d, path.as_deref())?;
            let cfg = ValidateConfig {
                seed: o.seed,
                oracle_samples: *samples,
                window: o.window,
                ..Default::default()
            };
            let report = validate(&g, &d, &cfg);
            if *json {
                emit(None, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            } else {
                emit(None, &report.to_string())?;
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Fail::Validation)
            }
        }
        Cmd::Export {
            data,
            path,
            format,
            output,
        } => {
            let d = load(o, data)?;
            let g = obtain(o, &d, path.as_deref())?;
            let text = match format {
                Format::Json => io::export_json(&g, Some(&d))?,
                Format::Csv => {
                    let (wp, wm) = o.window.unwrap_or_else(|| explorer::default_window(&g));
                    io::write_event_csv(&g, 2.0 * (wp + wm))?
                }
            };
            emit(output.as_deref(), &text)
        }
        Cmd::Render {
            data,
            path,
            output,
            events,
            no_means,
        } => {
            let d = load(o, data)?;
            let g = obtain(o, &d, path.as_deref())?;
            let events = match events.as_deref() {
                None => EventSelection::None,
                Some("all") => EventSelection::All,
                Some(list) => EventSelection::Samples(
                    list.split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<Result<_, _>>()?,
                ),
            };
            let window = o.window.unwrap_or_else(|| explorer::default_window(&g));
            if !(window.0 > 0.0 && window.1 > 0.0) {
                return Err(Fail::Input("window must be positive".into()));
            }
            let opts = RenderOptions {
                facet_means: !no_means,
                events,
                ..Default::default()
            };
            emit(output.as_deref(), &io::render_svg(&g, window, &opts))
        }
        Cmd::Generate {
            n_plus,
            n_minus,
            dim,
            shift,
            output,
        } => {
            if *n_plus == 0 || *n_minus == 0 || *dim == 0 {
                return Err(Fail::Input("need at least one sample per class and one feature".into()));
            }
            let d = acpath::dataset::gaussian_classes(*n_plus, *n_minus, *dim, *shift, o.b_const, o.seed);
            emit(output.as_deref(), &io::write_dataset(&d))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Validation) => ExitCode::from(1),
        Err(Fail::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Fail::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
