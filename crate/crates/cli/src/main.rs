use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use gaprenorm::search::{bisect_b_with, Family, SearchOptions};
use gaprenorm::tangent::{
    block_report, cone_invariance_test, eigenvalues, jacobian_with, reduced_model_roots,
    splitting_verdict, technical_lemma_check, BlockReport, ConeParams, ConeReport, Jacobian,
    LemmaReport, ReducedRoots, SplittingVerdict,
};
use gaprenorm::{
    affine_distance, renormalize, renormalize_n_with, Combinatorics, Error, GapMap, RenormOptions,
    RenormStep, Sign, Trajectory,
};

#[derive(Parser)]
#[command(name = "gaprenorm", version, about = "Renormalization experiments on dissipative gap maps")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// JSON run configuration; flags override its values.
    #[arg(long, env = "GAPRENORM_CONFIG", global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Coefficients per branch in jacobian coordinates.
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Finite-difference step.
    #[arg(long, global = true)]
    h: Option<f64>,
    #[arg(long, global = true)]
    r: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Bracket width for `search`.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate renormalization and write the trajectory.
    Renormalize {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
    /// Finite-difference jacobian at the map renormalized `depth` times.
    Jacobian {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 0)]
        depth: usize,
    },
    /// Eigenvalues of the jacobian and the splitting verdict.
    Spectrum {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 0)]
        depth: usize,
    },
    /// Monte Carlo cone invariance and lemma constant.
    ConeCheck {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 0)]
        depth: usize,
    },
    /// Bisection in b along the family of the given map (its b is ignored).
    Search {
        #[arg(long)]
        map: PathBuf,
        /// Combinatorics such as "(-,1)(-,1)(+,2)".
        #[arg(long)]
        target: String,
        /// Number of levels to match; defaults to the length of the target.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// The affine example α = β = 0.5, b = 0.3, end to end.
    AffineDemo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tolerances {
    fit: f64,
    coord: f64,
    margin: f64,
    search: f64,
    /// `δ` of the spectral splitting verdict.
    splitting: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    m: usize,
    h: f64,
    r: f64,
    delta: f64,
    samples: usize,
    seed: u64,
    tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m: 16,
            h: 1e-6,
            r: 0.4,
            delta: 0.5,
            samples: 1000,
            seed: 1,
            tolerances: Tolerances { fit: 1e-9, coord: 1e-9, margin: 1e-12, search: 1e-12, splitting: 0.5 },
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        if !(4..=64).contains(&self.m) {
            return Err(CliError::Input(format!("m = {} outside [4, 64]", self.m)));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("h", self.h),
            ("r", self.r),
            ("delta", self.delta),
            ("tolerances.fit", t.fit),
            ("tolerances.coord", t.coord),
            ("tolerances.margin", t.margin),
            ("tolerances.search", t.search),
            ("tolerances.splitting", t.splitting),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Input(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    fn renorm(&self) -> RenormOptions {
        RenormOptions {
            fit_tol: self.tolerances.fit,
            coord_tol: self.tolerances.coord,
            margin: self.tolerances.margin,
            ..RenormOptions::default()
        }
    }
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Lib(Error),
    /// Trajectory stopped before the requested depth.
    Stopped(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Lib(e) | CliError::Stopped(e) => match e.root() {
                Error::NotRenormalizable(_) => 4,
                Error::Domain(_)
                | Error::Parse(_)
                | Error::DegenerateInterval { .. }
                | Error::DegenerateGap { .. }
                | Error::NotDissipative { .. } => 2,
                _ => 3,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Input(s) => s.clone(),
            CliError::Lib(e) => e.to_string(),
            CliError::Stopped(e) => format!("stopped before the requested depth: {e}"),
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    write_file(dir, name, &s)
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut c = match &cli.config {
        Some(p) => read_json(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.m {
        c.m = v;
    }
    if let Some(v) = cli.h {
        c.h = v;
    }
    if let Some(v) = cli.r {
        c.r = v;
    }
    if let Some(v) = cli.delta {
        c.delta = v;
    }
    if let Some(v) = cli.samples {
        c.samples = v;
    }
    if let Some(v) = cli.seed {
        c.seed = v;
    }
    if let Some(v) = cli.tol {
        c.tolerances.search = v;
    }
    c.validate()?;
    Ok(c)
}

#[derive(Serialize)]
struct TrajectoryOut<'a> {
    input: &'a GapMap,
    requested_depth: usize,
    depth: usize,
    gamma: &'a Combinatorics,
    steps: &'a [RenormStep],
    affine_distance: Vec<f64>,
    stopped: Option<String>,
}

fn trajectory(f: &GapMap, depth: usize, cfg: &RunConfig) -> Result<Trajectory, CliError> {
    Ok(renormalize_n_with(f, depth, &cfg.renorm())?)
}

/// Map after `depth` renormalizations, or the reason it does not exist.
fn map_at_depth(f: &GapMap, depth: usize, cfg: &RunConfig) -> Result<GapMap, CliError> {
    let tr = trajectory(f, depth, cfg)?;
    if let Some(e) = tr.stopped {
        return Err(CliError::Stopped(e));
    }
    Ok(tr.map_at(f, depth).clone())
}

fn cmd_renormalize(map: &Path, depth: usize, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let f: GapMap = read_json(map)?;
    let tr = trajectory(&f, depth, cfg)?;
    let distances: Vec<f64> = (0..=tr.depth()).map(|i| affine_distance(tr.map_at(&f, i))).collect();
    write_json(
        out,
        "trajectory.json",
        &TrajectoryOut {
            input: &f,
            requested_depth: depth,
            depth: tr.depth(),
            gamma: &tr.gamma,
            steps: &tr.steps,
            affine_distance: distances.clone(),
            stopped: tr.stopped.as_ref().map(|e| e.to_string()),
        },
    )?;
    let mut csv = String::from("depth,k,sigma,i_prime_len,affine_distance\n");
    for (i, s) in tr.steps.iter().enumerate() {
        writeln!(csv, "{},{},{},{},{}", i + 1, s.k, s.sigma, num(s.i_prime_len()), num(distances[i + 1])).unwrap();
    }
    write_file(out, "trajectory.csv", &csv)?;
    match tr.stopped {
        Some(e) => Err(CliError::Stopped(e)),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct JacobianOut<'a> {
    depth: usize,
    m: usize,
    h: f64,
    k: usize,
    sigma: Sign,
    i_prime_len: f64,
    block_report: BlockReport,
    matrix: Vec<Vec<f64>>,
    base_point: &'a GapMap,
}

fn build_jacobian(map: &Path, depth: usize, cfg: &RunConfig) -> Result<Jacobian, CliError> {
    let f: GapMap = read_json(map)?;
    let g = map_at_depth(&f, depth, cfg)?;
    Ok(jacobian_with(&g, cfg.m, cfg.h, &cfg.renorm())?)
}

fn cmd_jacobian(map: &Path, depth: usize, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let j = build_jacobian(map, depth, cfg)?;
    let rows: Vec<Vec<f64>> = j.matrix.row_iter().map(|r| r.iter().copied().collect()).collect();
    let rep = block_report(&j);
    write_json(
        out,
        "jacobian.json",
        &JacobianOut {
            depth,
            m: j.m,
            h: j.fd_step,
            k: j.k,
            sigma: j.sigma,
            i_prime_len: j.i_prime_len,
            block_report: rep,
            matrix: rows.clone(),
            base_point: &j.base_point,
        },
    )?;
    let mut csv = String::new();
    for r in &rows {
        let line: Vec<String> = r.iter().map(|&x| num(x)).collect();
        writeln!(csv, "{}", line.join(",")).unwrap();
    }
    write_file(out, "jacobian.csv", &csv)?;
    let mut blocks = String::from("quantity,value\n");
    for (name, v) in [
        ("K1", rep.K1),
        ("K2", rep.K2),
        ("K3", rep.K3),
        ("K4", rep.K4),
        ("M1", rep.M1),
        ("M2", rep.M2),
        ("coupling", rep.coupling),
        ("eps_max", rep.eps_max),
        ("i_prime_len", rep.i_prime_len),
    ] {
        writeln!(blocks, "{name},{}", num(v)).unwrap();
    }
    write_file(out, "block_report.csv", &blocks)
}

#[derive(Serialize)]
struct Eigenvalue {
    re: f64,
    im: f64,
    modulus: f64,
}

#[derive(Serialize)]
struct SpectrumOut {
    depth: usize,
    m: usize,
    h: f64,
    eigenvalues: Vec<Eigenvalue>,
    verdict: SplittingVerdict,
    reduced_roots: ReducedRoots,
    block_report: BlockReport,
}

fn cmd_spectrum(map: &Path, depth: usize, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let j = build_jacobian(map, depth, cfg)?;
    let ev = eigenvalues(&j.matrix)?;
    let verdict = splitting_verdict(&j, cfg.tolerances.splitting)?;
    let rep = block_report(&j);
    let eigen: Vec<Eigenvalue> = ev.iter().map(|z| Eigenvalue { re: z.re, im: z.im, modulus: z.norm() }).collect();
    let mut csv = String::from("index,re,im,modulus\n");
    for (i, e) in eigen.iter().enumerate() {
        writeln!(csv, "{i},{},{},{}", num(e.re), num(e.im), num(e.modulus)).unwrap();
    }
    write_json(
        out,
        "spectrum.json",
        &SpectrumOut {
            depth,
            m: j.m,
            h: j.fd_step,
            eigenvalues: eigen,
            verdict,
            reduced_roots: reduced_model_roots(rep.K3, rep.K4, rep.M1),
            block_report: rep,
        },
    )?;
    write_file(out, "eigenvalues.csv", &csv)
}

#[derive(Serialize)]
struct ConeOut {
    depth: usize,
    m: usize,
    h: f64,
    cone: ConeReport,
    lemma: LemmaReport,
}

fn cmd_cone(map: &Path, depth: usize, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let p = ConeParams::new(cfg.r, cfg.delta)?;
    let j = build_jacobian(map, depth, cfg)?;
    let cone = cone_invariance_test(&j, &p, cfg.samples, cfg.seed);
    let lemma = technical_lemma_check(&j, &p, cfg.samples, cfg.seed);
    println!(
        "inside fraction {:.6}, minimum expansion {:.6e}",
        cone.inside_fraction, cone.min_expansion
    );
    write_json(out, "cone_report.json", &ConeOut { depth, m: j.m, h: j.fd_step, cone, lemma })
}

fn cmd_search(map: &Path, target: &str, depth: Option<usize>, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let f: GapMap = read_json(map)?;
    let target: Combinatorics = target.parse()?;
    let depth = depth.unwrap_or(target.len());
    let family = Family::new(f.alpha(), f.beta(), f.phi_l().clone(), f.phi_r().clone());
    let opts = SearchOptions { renorm: cfg.renorm(), ..SearchOptions::default() };
    let res = bisect_b_with(&family, &target, depth, cfg.tolerances.search, &opts)?;
    println!("b* = {}, gamma = {}", num(res.b_star), res.gamma);
    write_json(out, "search_result.json", &res)
}

fn cmd_affine_demo() -> Result<(), CliError> {
    let f = GapMap::affine(0.5, 0.5, 0.3)?;
    let s = renormalize(&f)?;
    let g = &s.renormalized;
    println!("input: alpha=0.5 beta=0.5 b=0.3");
    println!("k={}", s.k);
    println!("sigma={}", s.sigma);
    println!("I'=[{}, {}]", num(s.i_prime.0), num(s.i_prime.1));
    println!("b~={} (1/3)", num(g.b()));
    println!("alpha~={} (0.125)", num(g.alpha()));
    println!("beta~={} (0.25)", num(g.beta()));
    println!("affine={}", g.is_affine());
    let ok = s.k == 1
        && s.sigma == Sign::Minus
        && (g.b() - 1.0 / 3.0).abs() < 1e-12
        && (g.alpha() - 0.125).abs() < 1e-12
        && (g.beta() - 0.25).abs() < 1e-12;
    if ok {
        Ok(())
    } else {
        Err(CliError::Lib(Error::Accuracy { residual: f64::NAN, tol: 1e-12 }))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = effective_config(&cli)?;
    if cli.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("serializable config"));
        return Ok(());
    }
    let out = cli.out_dir.as_path();
    match &cli.command {
        None => Err(CliError::Input("no command given (see --help)".into())),
        Some(Command::Renormalize { map, depth }) => cmd_renormalize(map, *depth, &cfg, out),
        Some(Command::Jacobian { map, depth }) => cmd_jacobian(map, *depth, &cfg, out),
        Some(Command::Spectrum { map, depth }) => cmd_spectrum(map, *depth, &cfg, out),
        Some(Command::ConeCheck { map, depth }) => cmd_cone(map, *depth, &cfg, out),
        Some(Command::Search { map, target, depth }) => cmd_search(map, target, *depth, &cfg, out),
        Some(Command::AffineDemo) => cmd_affine_demo(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
