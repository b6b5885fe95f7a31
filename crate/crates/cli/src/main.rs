use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use riemsimplex::io::write_json;
use riemsimplex::triangulation::ScaleVariant;
use riemsimplex_cli::commands::{
    battery_csv, certify_mesh, distort, distortion_csv, generate_mesh_doc, karcher_mesh,
    property_suite, triangulate_check, triangulate_csv, GenerateKind, GenerateParams, InputError,
};

/// Riemannian simplices on constant-curvature model spaces: build Karcher
/// barycentric maps, certify non-degeneracy, and check triangulation
/// conditions, emitting deterministic JSON/CSV reports.
#[derive(Parser)]
#[command(name = "riemsimplex", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Root seed; falls back to RIEMSIMPLEX_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format (csv only where a scalar series exists)
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Main,
    Pwf,
    Intrinsic,
}

impl From<VariantArg> for ScaleVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Main => ScaleVariant::Main,
            VariantArg::Pwf => ScaleVariant::Pwf,
            VariantArg::Intrinsic => ScaleVariant::Intrinsic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Icosphere,
    Octahedron,
    GridTorus,
}

impl From<KindArg> for GenerateKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Icosphere => GenerateKind::Icosphere,
            KindArg::Octahedron => GenerateKind::Octahedron,
            KindArg::GridTorus => GenerateKind::GridTorus,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every non-degeneracy certificate on each top-dimensional simplex
    Certify {
        /// Mesh document (JSON)
        #[arg(long)]
        mesh: PathBuf,
        /// Oracle sample count per simplex; 0 skips the oracle cross-check
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Check the sufficient conditions for the mesh to triangulate its manifold
    TriangulateCheck {
        #[arg(long)]
        mesh: PathBuf,
        /// Thickness threshold the lifted vertex stars must meet
        #[arg(long)]
        t0: f64,
        /// Scale rule used to derive the ball radius h
        #[arg(long, value_enum, default_value_t = VariantArg::Main)]
        variant: VariantArg,
        /// Random points used to test that vertex balls cover the manifold
        #[arg(long, default_value_t = 20000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Solve weighted Karcher means over each top simplex
    Karcher {
        #[arg(long)]
        mesh: PathBuf,
        /// Random barycentric weight vectors per simplex
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Emit a mesh document for a built-in family
    Generate {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Icosphere subdivision level
        #[arg(long, default_value_t = 0)]
        level: usize,
        /// Sphere radius (icosphere, octahedron)
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Grid resolution per axis (grid-torus)
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Torus periods, comma separated (grid-torus)
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0])]
        periods: Vec<f64>,
        /// Geodesic perturbation radius applied to every vertex
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Measure flat-vs-geodesic distance distortion inside each simplex
    DistortReport {
        #[arg(long)]
        mesh: PathBuf,
        /// Thickness threshold that sets the distortion ceiling
        #[arg(long)]
        t0: f64,
        /// Same-simplex point pairs to sample
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run the comparison-inequality sampling batteries
    PropertySuite {
        /// Sampled configurations per battery
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
}

struct Artifact {
    text: String,
    ok: bool,
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, InputError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("RIEMSIMPLEX_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| InputError(format!("RIEMSIMPLEX_SEED is not a valid u64: {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn read_mesh(path: &PathBuf) -> Result<String, InputError> {
    std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read mesh {}: {e}", path.display())))
}

fn csv_unsupported(sub: &str) -> InputError {
    InputError(format!(
        "--format csv is not available for `{sub}`; it emits a structured report, not a scalar series"
    ))
}

fn build_artifact(cmd: &Cmd) -> Result<Artifact, InputError> {
    match cmd {
        Cmd::Certify {
            mesh,
            samples,
            common,
        } => {
            if common.format == FormatArg::Csv {
                return Err(csv_unsupported("certify"));
            }
            let seed = resolve_seed(common.seed)?;
            let report = certify_mesh(&read_mesh(mesh)?, *samples, seed)?;
            Ok(Artifact {
                text: write_json(&report),
                ok: report.all_certified,
            })
        }
        Cmd::TriangulateCheck {
            mesh,
            t0,
            variant,
            samples,
            common,
        } => {
            let seed = resolve_seed(common.seed)?;
            if *t0 <= 0.0 || !t0.is_finite() {
                return Err(InputError(format!("--t0 must be positive, got {t0}")));
            }
            let report =
                triangulate_check(&read_mesh(mesh)?, *t0, (*variant).into(), *samples, seed)?;
            let ok = report.triangulation.verdict;
            let text = match common.format {
                FormatArg::Json => write_json(&report),
                FormatArg::Csv => triangulate_csv(&report),
            };
            Ok(Artifact { text, ok })
        }
        Cmd::Karcher {
            mesh,
            samples,
            common,
        } => {
            if common.format == FormatArg::Csv {
                return Err(csv_unsupported("karcher"));
            }
            let seed = resolve_seed(common.seed)?;
            let report = karcher_mesh(&read_mesh(mesh)?, *samples, seed)?;
            Ok(Artifact {
                text: write_json(&report),
                ok: report.all_converged,
            })
        }
        Cmd::Generate {
            kind,
            level,
            radius,
            n,
            periods,
            perturb,
            common,
        } => {
            if common.format == FormatArg::Csv {
                return Err(csv_unsupported("generate"));
            }
            let seed = resolve_seed(common.seed)?;
            let doc = generate_mesh_doc(&GenerateParams {
                kind: (*kind).into(),
                level: *level,
                radius: *radius,
                n: *n,
                periods: periods.clone(),
                perturb: *perturb,
                seed,
            })?;
            Ok(Artifact {
                text: write_json(&doc),
                ok: true,
            })
        }
        Cmd::DistortReport {
            mesh,
            t0,
            samples,
            common,
        } => {
            let seed = resolve_seed(common.seed)?;
            if *t0 <= 0.0 || !t0.is_finite() {
                return Err(InputError(format!("--t0 must be positive, got {t0}")));
            }
            let report = distort(&read_mesh(mesh)?, *t0, *samples, seed)?;
            let ok = report.within_bound;
            let text = match common.format {
                FormatArg::Json => write_json(&report),
                FormatArg::Csv => distortion_csv(&report),
            };
            Ok(Artifact { text, ok })
        }
        Cmd::PropertySuite { samples, common } => {
            let seed = resolve_seed(common.seed)?;
            let report = property_suite(*samples, seed);
            let ok = report.all_passed;
            let text = match common.format {
                FormatArg::Json => write_json(&report),
                FormatArg::Csv => battery_csv(&report),
            };
            Ok(Artifact { text, ok })
        }
    }
}

fn out_path(cmd: &Cmd) -> Option<&PathBuf> {
    let common = match cmd {
        Cmd::Certify { common, .. } => common,
        Cmd::TriangulateCheck { common, .. } => common,
        Cmd::Karcher { common, .. } => common,
        Cmd::Generate { common, .. } => common,
        Cmd::DistortReport { common, .. } => common,
        Cmd::PropertySuite { common, .. } => common,
    };
    common.out.as_ref()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match build_artifact(&cli.cmd) {
        Ok(artifact) => {
            if let Some(path) = out_path(&cli.cmd) {
                if let Err(e) = std::fs::write(path, &artifact.text) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                print!("{}", artifact.text);
            }
            if artifact.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
