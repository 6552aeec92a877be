use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gazescope::bundle;
use gazescope::fixation::DetectionParams;
use gazescope::ingest::{self, HeaderMode, IngestOptions};
use gazescope::matrix;
use gazescope::model::{Dataset, EntityDim, MetricMatrix, Scope};
use gazescope::seriation;
use gazescope::server::{self, AppState, DATA_DIR_ENV, DEFAULT_PORT, PORT_ENV};
use gazescope::spatial::{self, Bounds, Kernel, Weighting};
use gazescope::{aoi, Session};

#[derive(Parser)]
#[command(name = "gazescope", version, about = "Gaze analytics from the command line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate input files and print one summary line per sample.
    Ingest(DataArgs),
    /// Write the metrics summary and standard matrices into a directory.
    Metrics {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one relationship matrix as TSV.
    Matrix {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        metric: String,
        #[arg(long)]
        rows: String,
        #[arg(long)]
        cols: String,
        /// Write rows and columns in seriated order.
        #[arg(long)]
        reorder: bool,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the attention density grid as TSV.
    Density {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 30.0)]
        bandwidth: f64,
        #[arg(long, default_value_t = 256)]
        grid_width: usize,
        #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
        kernel: KernelArg,
        /// Weight fixations equally instead of by duration.
        #[arg(long)]
        uniform: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a session bundle (zip).
    Export {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        /// 0 picks a free port and prints it.
        #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, env = DATA_DIR_ENV, default_value = "gazescope-data")]
        data_dir: PathBuf,
        /// Directory with the browser UI assets.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    Epanechnikov,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeaderArg {
    Auto,
    Yes,
    No,
}

#[derive(Args)]
struct DataArgs {
    /// Gaze TSV files or glob patterns; the file stem becomes the sample id.
    #[arg(long, required = true, num_args = 1..)]
    gaze: Vec<String>,
    #[arg(long)]
    aois: Option<PathBuf>,
    #[arg(long)]
    twis: Option<PathBuf>,
    #[arg(long)]
    groups: Option<PathBuf>,
    /// Gaze files carry a fourth column with TWI labels.
    #[arg(long)]
    twi_column: bool,
    #[arg(long, value_enum, default_value_t = HeaderArg::Auto)]
    header: HeaderArg,
    #[arg(long, default_value_t = 25.0)]
    dispersion: f64,
    #[arg(long, default_value_t = 100.0)]
    min_duration: f64,
    /// `<samples>,<twis>` where each side is all, group:<gid> or one:<id>.
    #[arg(long, default_value = "all,all")]
    scope: String,
}

enum Failure {
    Validation(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Io(_) => 1,
        }
    }
}

fn invalid(e: impl ToString) -> Failure {
    Failure::Validation(e.to_string())
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, body: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, body.as_bytes()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn gaze_files(patterns: &[String]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for pat in patterns {
        let matches: Vec<PathBuf> = glob::glob(pat)
            .map_err(|e| invalid(format!("bad glob `{pat}`: {e}")))?
            .filter_map(Result::ok)
            .filter(|p| p.is_file())
            .collect();
        if matches.is_empty() {
            return Err(Failure::Io(format!("no gaze files match `{pat}`")));
        }
        files.extend(matches);
    }
    files.sort();
    files.dedup();
    Ok(files)
}

fn load(args: &DataArgs) -> Result<Session, Failure> {
    let opts = IngestOptions {
        has_header: match args.header {
            HeaderArg::Auto => HeaderMode::Auto,
            HeaderArg::Yes => HeaderMode::Yes,
            HeaderArg::No => HeaderMode::No,
        },
        twi_column: args.twi_column,
    };
    let mut ds = Dataset::default();
    for path in gaze_files(&args.gaze)? {
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let (sample, twis) =
            ingest::parse_gaze_tsv(&read(&path)?, &id, opts).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        ds.samples.push(sample);
        ds.twis.extend(twis);
    }
    if let Some(p) = &args.aois {
        ds.aois = aoi::parse_aois_json(&read(p)?).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
    }
    if let Some(p) = &args.twis {
        ds.twis
            .extend(ingest::parse_twi_tsv(&read(p)?).map_err(|e| invalid(format!("{}: {e}", p.display())))?);
    }
    let table = match &args.groups {
        Some(p) => Some(ingest::parse_groups_json(&read(p)?).map_err(|e| invalid(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let mut session = Session::new(ds).map_err(invalid)?;
    if let Some(t) = table {
        session = session.set_groups(&t).map_err(invalid)?;
    }
    let scope: Scope = args.scope.parse().map_err(invalid)?;
    session
        .set_detection(DetectionParams::new(args.dispersion, args.min_duration).map_err(invalid)?)
        .and_then(|s| s.set_scope(scope))
        .map_err(invalid)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest(data) => {
            let s = load(&data)?;
            let mut out = String::from("sample\tpoints\tfixations\thaar\n");
            for x in &s.dataset().samples {
                let labels = s.labels(&x.id).unwrap_or_default();
                let haar = aoi::haar(labels).unwrap_or(0.0);
                out.push_str(&format!("{}\t{}\t{}\t{}\n", x.id, x.points.len(), labels.len(), haar));
            }
            emit(None, &out)
        }
        Command::Metrics { data, out } => {
            let s = load(&data)?;
            let rows = bundle::summary_rows(&s, s.scope()).map_err(invalid)?;
            write(&out.join("summary.tsv"), bundle::summary_tsv(&rows).as_bytes())?;
            for m in bundle::standard_matrices(&s) {
                write(&out.join(format!("{}.tsv", m.matrix_id())), bundle::matrix_tsv(&m).as_bytes())?;
            }
            Ok(())
        }
        Command::Matrix {
            data,
            metric,
            rows,
            cols,
            reorder,
            out,
        } => {
            let s = load(&data)?;
            let rows: EntityDim = rows.parse().map_err(invalid)?;
            let cols: EntityDim = cols.parse().map_err(invalid)?;
            let mut m = matrix::relationship_matrix(&s, rows, cols, &metric, s.scope()).map_err(invalid)?;
            if reorder && m.n_rows() > 0 && m.n_cols() > 0 {
                let o = seriation::reorder_global(&m).map_err(invalid)?;
                m.row_order = o.row_perm;
                m.col_order = o.col_perm;
                let values = m.display_values();
                let row_ids = m.display_row_ids().into_iter().map(String::from).collect();
                let col_ids = m.display_col_ids().into_iter().map(String::from).collect();
                m = MetricMatrix::new(m.row_dim, m.col_dim, m.metric_id, row_ids, col_ids, values, m.symmetric);
            }
            emit(out.as_deref(), &bundle::matrix_tsv(&m))
        }
        Command::Density {
            data,
            bandwidth,
            grid_width,
            kernel,
            uniform,
            out,
        } => {
            let s = load(&data)?;
            let mut kde = s.params().kde;
            kde.bandwidth = bandwidth;
            kde.grid_width = grid_width;
            kde.kernel = match kernel {
                KernelArg::Gaussian => Kernel::Gaussian,
                KernelArg::Epanechnikov => Kernel::Epanechnikov,
            };
            kde.weighting = if uniform { Weighting::Uniform } else { Weighting::ByDuration };
            kde.check().map_err(invalid)?;
            let fixations: Vec<_> = s
                .current_view()
                .map_err(invalid)?
                .samples
                .iter()
                .flat_map(|x| x.fixations.iter().map(|l| l.fixation.clone()))
                .collect();
            let bounds = Bounds::around(&fixations, 4.0 * bandwidth).ok_or_else(|| invalid("no fixations in scope"))?;
            let g = spatial::density_grid(&fixations, bounds, &kde).map_err(invalid)?;
            let mut body = format!(
                "# origin_x={} origin_y={} cell_size={} width={} height={}\n",
                g.origin.0, g.origin.1, g.cell_size, g.width, g.height
            );
            for row in g.mass.chunks(g.width) {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                body.push_str(&cells.join("\t"));
                body.push('\n');
            }
            emit(out.as_deref(), &body)
        }
        Command::Export { data, out } => {
            let s = load(&data)?;
            write(&out, &bundle::export_bundle(&s))
        }
        Command::Serve { port, data_dir, ui_dir } => {
            server::check_data_dir(&data_dir).map_err(invalid)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            rt.block_on(async move {
                let listener = server::bind(port).await.map_err(|e| Failure::Io(e.to_string()))?;
                let addr = listener.local_addr().map_err(|e| Failure::Io(e.to_string()))?;
                println!("listening on http://{addr}");
                println!("port {}", addr.port());
                server::serve(listener, AppState::new(Some(data_dir), ui_dir))
                    .await
                    .map_err(|e| Failure::Io(e.to_string()))
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Validation(msg) | Failure::Io(msg)) = &f;
            eprintln!("gazescope: {msg}");
            ExitCode::from(f.code())
        }
    }
}
