use clap::{Args, Parser, Subcommand, ValueEnum};
use feigencert::certify::{self, CertifyConfig, Verdict};
use feigencert::cover::{self, Cover, CoverParams, Target};
use feigencert::domain::verify::verify_domain_inclusions;
use feigencert::domain::Geometry;
use feigencert::koebe::{m_upper, Uniformizer};
use feigencert::plot::render_svg;
use feigencert::{FeigenbaumMap, LanfordPolynomial};
use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "feigencert", version, about = "Certified bounds for the Feigenbaum Julia set")]
struct Cli {
    /// Coefficient file to use instead of the bundled one.
    #[arg(long, global = true)]
    coeffs: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CoverArgs {
    #[arg(long, default_value_t = 4)]
    n: u32,
    /// Disk radius 2^-e·√2, cell side 2^(1-e).
    #[arg(long, default_value_t = 9)]
    spacing_exp: u32,
    #[arg(long, default_value_t = cover::DEFAULT_MAX_STEPS)]
    max_steps: u32,
    /// Coarser cover file to refine.
    #[arg(long)]
    refine_from: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Desk,
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Run the six domain-inclusion checks.
    VerifyDomains,
    /// Upper cover of X̃ₙ in the first quadrant.
    CoverX(CoverArgs),
    /// Packing of λ⁻ⁿΣₙ in the first quadrant.
    CoverSigma(CoverArgs),
    /// Upper cover of P₀,I.
    CoverP0 {
        #[arg(long, default_value_t = 2)]
        m: u32,
        #[arg(long, default_value_t = 6)]
        spacing_exp: u32,
        #[arg(long)]
        refine_from: Option<PathBuf>,
    },
    /// Bound M(A) from a packing file and a P₀ cover file.
    Distortion {
        #[arg(long)]
        packing: PathBuf,
        #[arg(long)]
        p0: PathBuf,
    },
    /// Full pipeline; exit code 2 when the verdict is NotCertified.
    Certify {
        #[arg(long, value_enum, default_value = "desk")]
        profile: Profile,
        #[arg(long)]
        n: Option<u32>,
        /// Spacing exponent of the X̃ₙ cover.
        #[arg(long)]
        spacing_exp: Option<u32>,
        #[arg(long)]
        sigma_exp: Option<u32>,
        #[arg(long)]
        p0_exp: Option<u32>,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        max_steps: Option<u32>,
        /// Coarser X̃ₙ cover to refine.
        #[arg(long)]
        refine_from: Option<PathBuf>,
    },
    /// Recursive-estimate consistency table; exit code 1 on a violation.
    Report {
        #[arg(long, default_value_t = 7)]
        spacing_exp: u32,
        #[arg(long, default_value_t = cover::DEFAULT_MAX_STEPS)]
        max_steps: u32,
        /// Pairs n:m.
        #[arg(long, value_delimiter = ',', default_value = "3:3,3:4,4:3")]
        pairs: Vec<String>,
    },
    /// SVG of a cover (or of the domains alone).
    Plot {
        #[arg(long)]
        cover: Option<PathBuf>,
    },
}

fn load_map(coeffs: &Option<PathBuf>) -> Result<FeigenbaumMap, Box<dyn Error>> {
    match coeffs {
        Some(p) => Ok(FeigenbaumMap::new(LanfordPolynomial::load(p)?)?),
        None => Ok(FeigenbaumMap::global().clone()),
    }
}

fn write(path: &Path, text: &str) -> Result<(), Box<dyn Error>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run_cover(
    map: &FeigenbaumMap,
    geom: &Geometry,
    out: &Path,
    params: CoverParams,
    refine_from: &Option<PathBuf>,
) -> Result<(), Box<dyn Error>> {
    let t0 = Instant::now();
    let (c, stats) = match refine_from {
        Some(p) => {
            let from = Cover::load(p)?;
            if from.target != params.target || from.n != params.n || from.max_steps != params.max_steps {
                return Err("refinement source has a different target, n or K".into());
            }
            cover::refine_to(map, geom, &from, params.spacing_exp)?
        }
        None => cover::build_cover(map, geom, &params)?,
    };
    let area = c.area_bound();
    println!(
        "{} n={} e={} K={}: {} cells, area {:.9e} ({} cells tested, {:.1?})",
        params.target.name(),
        params.n,
        params.spacing_exp,
        params.max_steps,
        area.cell_count,
        area.bound,
        stats.cells_tested,
        t0.elapsed()
    );
    if params.target == Target::Xtilde {
        println!("eta upper bound {:.6e}", certify::eta_upper(map, area.bound));
    }
    let name = format!("cover_{}_n{}_e{}.txt", params.target.name(), params.n, params.spacing_exp);
    write(&out.join(name), &c.to_file_string())
}

fn parse_pair(s: &str) -> Result<(u32, u32), Box<dyn Error>> {
    let (a, b) = s.split_once(':').ok_or("pairs are written n:m")?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn Error>> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let map = load_map(&cli.coeffs)?;
    let geom = Geometry::new(&map);
    let out = cli.out.as_path();
    match cli.command {
        Command::VerifyDomains => {
            let t0 = Instant::now();
            let report = verify_domain_inclusions(&map, &geom)?;
            for c in &report.checks {
                println!(
                    "({}) {} {} error {:.2e} margins {:?}",
                    c.id,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.description,
                    c.error_bound,
                    c.margins
                );
            }
            println!("{:.1?}", t0.elapsed());
            write(&out.join("domains.json"), &serde_json::to_string_pretty(&report)?)?;
            return Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Command::CoverX(a) => {
            let p = CoverParams { target: Target::Xtilde, n: a.n, max_steps: a.max_steps, spacing_exp: a.spacing_exp };
            run_cover(&map, &geom, out, p, &a.refine_from)?;
        }
        Command::CoverSigma(a) => {
            let p = CoverParams { target: Target::Sigma, n: a.n, max_steps: a.max_steps, spacing_exp: a.spacing_exp };
            run_cover(&map, &geom, out, p, &a.refine_from)?;
        }
        Command::CoverP0 { m, spacing_exp, refine_from } => {
            let p = CoverParams { target: Target::P0, n: m, max_steps: 0, spacing_exp };
            run_cover(&map, &geom, out, p, &refine_from)?;
        }
        Command::Distortion { packing, p0 } => {
            let packing = Cover::load(&packing)?;
            let p0 = Cover::load(&p0)?;
            for c in [&packing, &p0] {
                if c.checksum != map.poly.checksum {
                    return Err("cover was built with different coefficients".into());
                }
            }
            let report = m_upper(&Uniformizer::new(&map), &packing, &p0)?;
            match report.m_upper {
                Some(m) => println!("M upper bound {:.6} at {:?}", m, report.witness),
                None => println!("no bound on M: the packing gives zero density somewhere"),
            }
            write(&out.join("distortion.json"), &serde_json::to_string_pretty(&report)?)?;
        }
        Command::Certify { profile, n, spacing_exp, sigma_exp, p0_exp, m, max_steps, refine_from } => {
            let mut cfg = match profile {
                Profile::Desk => CertifyConfig::desk(),
                Profile::Paper => CertifyConfig::paper(),
            };
            cfg.n = n.unwrap_or(cfg.n);
            cfg.x_spacing_exp = spacing_exp.unwrap_or(cfg.x_spacing_exp);
            cfg.sigma_spacing_exp = sigma_exp.unwrap_or(cfg.sigma_spacing_exp);
            cfg.p0_spacing_exp = p0_exp.unwrap_or(cfg.p0_spacing_exp);
            cfg.p0_depth = m.unwrap_or(cfg.p0_depth);
            cfg.max_steps = max_steps.unwrap_or(cfg.max_steps);
            cfg.refine_from = refine_from.map(|p| Cover::load(&p)).transpose()?;
            cfg.out_dir = Some(out.to_path_buf());
            let t0 = Instant::now();
            let o = certify::run_certify(&map, &geom, &cfg)?;
            println!("{}", serde_json::to_string_pretty(&o.certificate)?);
            eprintln!("wrote certificate and covers to {} ({:.1?})", out.display(), t0.elapsed());
            if o.certificate.verdict != Verdict::Certified {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Report { spacing_exp, max_steps, pairs } => {
            let pairs = pairs.iter().map(|s| parse_pair(s)).collect::<Result<Vec<_>, _>>()?;
            let (p0, _) = cover::build_cover(
                &map,
                &geom,
                &CoverParams { target: Target::P0, n: 2, max_steps: 0, spacing_exp: 6 },
            )?;
            let r = certify::report_recursive_estimate(&map, &geom, &pairs, spacing_exp, max_steps, &p0)?;
            for (k, e) in &r.eta_table {
                println!("eta_{} <= {:.6e}", k, e);
            }
            println!("eta nonincreasing: {}", r.eta_monotone);
            for row in &r.rows {
                println!(
                    "n={} m={}: eta_(n+m) <= {:.6e}; rhs <= {}; Sigma_n packing cells {}; violation: {}",
                    row.n,
                    row.m,
                    row.lhs_eta_upper,
                    row.rhs_upper.map_or("unbounded".to_string(), |v| format!("{:.6e}", v)),
                    row.sigma_n_cells,
                    row.violation
                );
            }
            write(&out.join("recursive_report.json"), &serde_json::to_string_pretty(&r)?)?;
            if r.violations > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Plot { cover } => {
            let c = cover.map(|p| Cover::load(&p)).transpose()?;
            let name = match &c {
                Some(c) => format!("plot_{}_n{}_e{}.svg", c.target.name(), c.n, c.grid.spacing_exp),
                None => "plot_domains.svg".to_string(),
            };
            write(&out.join(name), &render_svg(c.as_ref(), &geom))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::FAILURE
        }
    }
}
