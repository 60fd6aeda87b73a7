//! `isoperim`: command-line front end for the word, curve and torus-map
//! pipelines.
//!
//! Exit codes: 0 success, 1 domain error (word outside the normal closure,
//! non-contractible curve, curve not in general position, ...), 2 usage
//! error, 3 a certificate failed its own re-verification.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isoperim_core::decompose::{certify, verify_decomposition, DecomposeError};
use isoperim_core::grid::{
    certify_curve, offset_polyline, word_to_cycle, CurveCertificate, GridError, GridModel, Polyline,
};
use isoperim_core::oracle::{default_len_cap, exact_area_bounded, random_element_of_n, OracleError, DEFAULT_D_MAX};
use isoperim_core::relator::{is_in_n, project_to_f2};
use isoperim_core::torus::{action_difference, growth_report, GrowthOptions, TorusError, TorusMap};
use isoperim_core::word::Word;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "isoperim", version, about = "Area certificates in the punctured plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Seed for every randomized choice.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Freely and cyclically reduce a word.
    Reduce { word: Word },
    /// Test membership in the normal closure of abABc.
    Member { word: Word },
    /// Decompose a word of N into conjugates of abABc and certify the area bounds.
    Area(WordSource),
    /// Bounded exhaustive search for the exact area of a short word.
    Oracle {
        #[command(flatten)]
        source: WordSource,
        #[arg(long, default_value_t = DEFAULT_D_MAX)]
        d_max: usize,
        /// Longest intermediate word; defaults to 2|w| + 10.
        #[arg(long)]
        len_cap: Option<usize>,
    },
    /// Snap a closed polyline onto the grid complex and certify its area bound.
    CertifyCurve {
        /// JSON array of [x, y] points, implicitly closed.
        #[arg(long, conflicts_with = "from_word", required_unless_present = "from_word")]
        curve: Option<PathBuf>,
        /// Build the curve by offsetting the grid cycle of a closed word (uses --seed).
        #[arg(long)]
        from_word: Option<Word>,
        #[arg(long, default_value_t = 0.01, value_parser = parse_epsilon)]
        epsilon: f64,
    },
    /// Measure the growth of the differential of a torus map.
    Growth {
        #[command(flatten)]
        map: MapSource,
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
        n_max: u64,
        /// Grid of start points per side; refined adaptively from 256 if omitted.
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        grid_res: Option<u64>,
        /// Lattice spacing the isoperimetric constant is scaled by.
        #[arg(long, default_value_t = 1.0)]
        lattice_scale: f64,
        /// Fixed point x as "x1,x2"; searched for if omitted.
        #[arg(long, value_parser = parse_point, requires = "y")]
        x: Option<[f64; 2]>,
        #[arg(long, value_parser = parse_point, requires = "x")]
        y: Option<[f64; 2]>,
    },
    /// Action difference between two fixed points of a torus map.
    Action {
        #[command(flatten)]
        map: MapSource,
        #[arg(long, value_parser = parse_point)]
        x: [f64; 2],
        #[arg(long, value_parser = parse_point)]
        y: [f64; 2],
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Use the n-th iterate of the map.
        #[arg(long, default_value_t = 1)]
        iterate: usize,
    },
}

#[derive(Args, Debug)]
struct WordSource {
    #[arg(conflicts_with = "random", required_unless_present = "random")]
    word: Option<Word>,
    /// Sample a product of random conjugates of r^±1 from --seed instead.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 4)]
    k_max: usize,
    #[arg(long, default_value_t = 4)]
    g_max: usize,
}

impl WordSource {
    fn resolve(&self, seed: u64) -> Word {
        match &self.word {
            Some(w) => w.clone(),
            None => random_element_of_n(seed, self.k_max, self.g_max),
        }
    }
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct MapSource {
    /// JSON map description: {"primitives": [...]}.
    #[arg(long)]
    map: Option<PathBuf>,
    /// One of sine-shear, translation, sine-twist.
    #[arg(long)]
    builtin: Option<String>,
}

fn parse_epsilon(text: &str) -> Result<f64, String> {
    let eps: f64 = text.parse().map_err(|e| format!("{e}"))?;
    if eps > 0.0 && eps < 0.1 {
        Ok(eps)
    } else {
        Err(format!("epsilon must lie in (0, 0.1), got {eps}"))
    }
}

fn parse_point(text: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([a.parse().map_err(|e| format!("{e}"))?, b.parse().map_err(|e| format!("{e}"))?]),
        _ => Err(format!("expected \"x1,x2\", got {text:?}")),
    }
}

#[derive(Debug)]
enum Failure {
    Domain(String),
    Usage(String),
    SelfCheck(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
            Failure::SelfCheck(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Domain(m) | Failure::Usage(m) | Failure::SelfCheck(m) => m,
        }
    }
}

impl From<DecomposeError> for Failure {
    fn from(e: DecomposeError) -> Self {
        match e {
            DecomposeError::NotInNormalClosure { .. } => Failure::Domain(format!("not in normal closure: {e}")),
            _ => Failure::SelfCheck(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::NotInNormalClosure { .. } => Failure::Domain(format!("not in normal closure: {e}")),
            OracleError::CapBelowLength { .. } => Failure::Usage(e.to_string()),
        }
    }
}

impl From<GridError> for Failure {
    fn from(e: GridError) -> Self {
        match e {
            GridError::CertificateCheck(_) => Failure::SelfCheck(e.to_string()),
            GridError::InvalidEpsilon(_) => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

impl From<TorusError> for Failure {
    fn from(e: TorusError) -> Self {
        match e {
            TorusError::InvalidParameter(_) | TorusError::UnknownBuiltin(_) => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

fn emit<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).expect("serializable report")),
        Format::Text => print!("{}", text()),
    }
}

fn load_map(source: &MapSource) -> Result<TorusMap, Failure> {
    match (&source.map, &source.builtin) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).map_err(|e| Failure::Usage(format!("--map {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("--map {}: {e}", path.display())))
        }
        (None, Some(name)) => Ok(TorusMap::builtin(name)?),
        (None, None) => Err(Failure::Usage("one of --map or --builtin is required".into())),
    }
}

#[derive(Serialize)]
struct ReduceReport<'a> {
    input: &'a Word,
    reduced: Word,
    cyclic_core: Word,
    conjugator: Word,
}

#[derive(Serialize)]
struct MemberReport<'a> {
    word: &'a Word,
    in_normal_closure: bool,
    projection: Word,
    phi: i64,
    ab_len: usize,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let format = cli.format;
    match &cli.command {
        Command::Reduce { word } => {
            let cyclic = word.cyclic_reduce();
            let report = ReduceReport {
                input: word,
                reduced: word.free_reduce(),
                cyclic_core: cyclic.core,
                conjugator: cyclic.conjugator,
            };
            emit(format, &report, || format!("{}\n", report.reduced));
        }
        Command::Member { word } => {
            let report = MemberReport {
                word,
                in_normal_closure: is_in_n(word),
                projection: project_to_f2(word),
                phi: word.phi(),
                ab_len: word.ab_length(),
            };
            if report.in_normal_closure || format == Format::Json {
                emit(format, &report, || format!("{} is in the normal closure\n", word.free_reduce()));
            }
            if !report.in_normal_closure {
                return Err(Failure::Domain(format!(
                    "{} is not in normal closure (projection {})",
                    word.free_reduce(),
                    report.projection
                )));
            }
        }
        Command::Area(source) => {
            let word = source.resolve(cli.seed);
            let cert = certify(&word)?;
            if !verify_decomposition(&word, &cert.decomposition) {
                return Err(Failure::SelfCheck(format!("factors do not multiply back to {word}")));
            }
            emit(format, &cert, || {
                let mut out = format!(
                    "word {}\nd={} lower={} l={} {}\n",
                    cert.word,
                    cert.upper,
                    cert.lower,
                    cert.ab_len,
                    if cert.exact { "exact" } else { "not exact" }
                );
                for f in &cert.decomposition.factors {
                    out.push_str(&format!("  ({}) r^{} ({})^-1\n", f.conjugator, f.exponent, f.conjugator));
                }
                out
            });
        }
        Command::Oracle { source, d_max, len_cap } => {
            let word = source.resolve(cli.seed);
            let cap = len_cap.unwrap_or_else(|| default_len_cap(&word));
            let result = exact_area_bounded(&word, *d_max, cap)?;
            emit(format, &result, || {
                let best = result.best.map_or("none".to_string(), |b| b.to_string());
                format!(
                    "word {}\nbest={best} status={:?} explored={} d_max={} len_cap={}\n",
                    result.word, result.status, result.explored, result.d_max, result.len_cap
                )
            });
        }
        Command::CertifyCurve { curve, from_word, epsilon } => {
            let model = GridModel::new(*epsilon)?;
            let polyline = match (curve, from_word) {
                (Some(path), _) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| Failure::Usage(format!("--curve {}: {e}", path.display())))?;
                    serde_json::from_str::<Polyline>(&text)
                        .map_err(|e| Failure::Usage(format!("--curve {}: {e}", path.display())))?
                }
                (None, Some(word)) => {
                    let cycle = word_to_cycle(word, &model)?;
                    offset_polyline(&cycle, &mut ChaCha8Rng::seed_from_u64(cli.seed))
                }
                (None, None) => return Err(Failure::Usage("one of --curve or --from-word is required".into())),
            };
            let cert = certify_curve(&polyline, &model)?;
            emit(format, &cert, || curve_text(&cert));
            if !cert.contractible {
                return Err(Failure::Domain(format!("curve is not contractible: word {} is not in N", cert.word)));
            }
        }
        Command::Growth { map, n_max, grid_res, lattice_scale, x, y } => {
            let map = load_map(map)?;
            let options = GrowthOptions {
                n_max: *n_max as usize,
                grid_res: grid_res.map(|r| r as usize),
                lattice_scale: *lattice_scale,
                pair: x.zip(*y),
                ..GrowthOptions::default()
            };
            let report = growth_report(&map, &options)?;
            if !report.dominated {
                return Err(Failure::SelfCheck("measured norms fall below kappa * n".into()));
            }
            emit(format, &report, || {
                let mut out = format!(
                    "hamiltonian={} grid_res={} slope={:.6} intercept={:.6} mu={:.6}\n",
                    report.hamiltonian, report.grid_res, report.slope, report.intercept, report.mu
                );
                match (&report.action, report.kappa) {
                    (Some(pair), Some(kappa)) => out.push_str(&format!(
                        "x=({}, {}) y=({}, {}) delta={:.10} kappa={:.10}\n",
                        pair.x[0], pair.x[1], pair.y[0], pair.y[1], pair.delta, kappa
                    )),
                    _ => out.push_str("kappa=none\n"),
                }
                out.push_str("n norm\n");
                for s in &report.samples {
                    out.push_str(&format!("{} {:.10}\n", s.n, s.norm));
                }
                out
            });
        }
        Command::Action { map, x, y, samples, iterate } => {
            let map = load_map(map)?.iterate((*iterate).max(1));
            let pair = action_difference(&map, *x, *y, *samples)?;
            emit(format, &pair, || format!("delta={:.12} samples={}\n", pair.delta, pair.samples));
        }
    }
    Ok(())
}

fn curve_text(cert: &CurveCertificate) -> String {
    let mut out = format!(
        "epsilon={} L_alpha={:.6} L_gamma={:.6}\nword {} l={}\ncontractible={}\n",
        cert.epsilon, cert.curve_length, cert.cycle_length, cert.word, cert.ab_len, cert.contractible
    );
    if let (Some(d), Some(bound), Some(ratio)) = (cert.d, cert.area_bound, cert.ratio) {
        out.push_str(&format!(
            "d={d} homotopy_area={:.6} area_bound={bound:.6} ratio={ratio:.6} constant={:.6}\n",
            cert.homotopy_area, cert.constant
        ));
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
