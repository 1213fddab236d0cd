//! Command-line front end: configure and run surface builds, distance
//! queries, convergence sweeps, Burgers-vector integrals, and the
//! invariant check battery.
//!
//! Configuration is a flat `key=value` file (`#` starts a comment); every
//! key can be overridden by the flag of the same name, and flags win.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use dislo_core::block::{Block, BlockParams, BlockPoint};
use dislo_core::converge::{fit_rate, run_sweep, ExperimentConfig};
use dislo_core::geom::{Hexagon, PolarPoint};
use dislo_core::mesh::{GeodesicMesh, MeshConfig};
use dislo_core::sector::{Sector, TangentVec};
use dislo_core::surface::{hex_chart, Surface, SurfacePoint};
use dislo_core::transfer::TransferMap;

#[derive(Parser)]
#[command(
    name = "dislo",
    about = "Locally-flat surfaces with distributed edge dislocations: build, measure, and verify convergence to the flat sector with torsion",
    version
)]
struct Cli {
    /// Flat key=value config file; flags override file entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Column height of the undislocated body.
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Width of the body.
    #[arg(long, global = true)]
    b: Option<f64>,
    /// Slant angle of the dislocation segment (radians).
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Total defect thickness.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Comma-separated subdivision levels for sweeps, e.g. 2,4,8.
    #[arg(long, global = true)]
    n_list: Option<String>,
    /// Integral exponent (>= 2).
    #[arg(long, global = true)]
    p_exp: Option<f64>,
    /// Midpoint-quadrature grid per integration patch.
    #[arg(long, global = true)]
    quad_m: Option<usize>,
    /// Boundary samples per side for block-distortion measurement.
    #[arg(long, global = true)]
    distortion_k: Option<usize>,
    /// Random pairs for cell-crossing statistics.
    #[arg(long, global = true)]
    random_pairs: Option<usize>,
    /// Mesh-spacing cap; the schedule is min(cap, b/(40 n)).
    #[arg(long, global = true)]
    mesh_h: Option<f64>,
    /// RNG seed for sampled statistics.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Primary output path (CSV report, summary, or mesh dump).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON report path for sweeps.
    #[arg(long, global = true)]
    out_json: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a surface and print its structural summary as JSON.
    Build {
        /// Subdivision level.
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Distance between two points on the sector, a block, or a surface.
    Distance {
        #[arg(long, value_enum)]
        kind: DistanceKind,
        /// sector: "r,phi"; block: "hex,x,y"; surface: "i,j,hex,x,y"
        /// (hex is first|second).
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Subdivision level (surface kind only).
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Skip the sliding refinement and report the raw graph length
        /// (surface kind only).
        #[arg(long)]
        no_refine: bool,
    },
    /// Run the full convergence sweep and write the CSV/JSON report.
    Converge,
    /// Integrate the transported torsion density over a sub-rectangle.
    Burgers {
        /// Radial extent as a fraction of the sector depth.
        #[arg(long)]
        alpha: f64,
        /// Angular extent as a fraction of the sector opening.
        #[arg(long)]
        beta: f64,
        /// Inner radial edge of the rectangle (default: inner boundary).
        #[arg(long)]
        r_start: Option<f64>,
        /// Lower angular edge of the rectangle.
        #[arg(long, default_value_t = 0.0)]
        phi_start: f64,
        /// Quadrature resolution.
        #[arg(long, default_value_t = 256)]
        m: usize,
    },
    /// Run the invariant suite over the analytic kernels.
    Check,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceKind {
    /// Analytic distance on the flat annular sector.
    Sector,
    /// Exact unfolding distance on a single two-chart block.
    Block,
    /// Geodesic-mesh distance on an assembled surface.
    Surface,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = assemble_config(&cli)?;
    match cli.cmd {
        Cmd::Build { n } => {
            let surf = Surface::new(cfg.a, cfg.b, cfg.theta, cfg.eps, n)?;
            let summary = surf.to_json();
            match &cli.out {
                Some(p) => fs::write(p, &summary)
                    .with_context(|| format!("writing {}", p.display()))?,
                None => println!("{summary}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Distance { kind, from, to, n, no_refine } => {
            let d = match kind {
                DistanceKind::Sector => {
                    let sec = Sector::new(cfg.a, cfg.b, cfg.eps)?;
                    sec.distance(&parse_polar(&from)?, &parse_polar(&to)?)?
                }
                DistanceKind::Block => {
                    let blk = Block::new(BlockParams::new(cfg.a, cfg.b, cfg.theta, cfg.eps))?;
                    blk.distance(&parse_block_point(&from)?, &parse_block_point(&to)?)?
                }
                DistanceKind::Surface => {
                    let surf = Surface::new(cfg.a, cfg.b, cfg.theta, cfg.eps, n)?;
                    let mesh = GeodesicMesh::for_surface(&surf, &MeshConfig::new(cfg.mesh_h(n)))?;
                    let p = parse_surface_point(&surf, &from)?;
                    let q = parse_surface_point(&surf, &to)?;
                    mesh.shortest_path(&p, &q, !no_refine)?.length()
                }
            };
            println!("{d}");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Converge => {
            let report = run_sweep(&cfg)?;
            report.write_outputs()?;
            if cfg.out_csv.is_none() && cfg.out_json.is_none() {
                print!("{}", report.to_csv());
            }
            for rec in &report.records {
                for e in &rec.errors {
                    eprintln!("level n={}: {e}", rec.n);
                }
            }
            eprintln!("verdicts: {}", serde_json::to_string(&report.verdicts)?);
            if report.has_errors() {
                Ok(ExitCode::FAILURE)
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Cmd::Burgers { alpha, beta, r_start, phi_start, m } => {
            let sec = Sector::new(cfg.a, cfg.b, cfg.eps)?;
            let r_start = r_start.unwrap_or_else(|| sec.r0());
            let anchor = PolarPoint::new(r_start, phi_start);
            let v = sec.burgers_integral(r_start, alpha, phi_start, beta, &anchor, m)?;
            // Report in the orthonormal parallel frame at the anchor:
            // components along ∂r and r⁻¹∂φ.
            let radial = v.comp_r;
            let angular = v.base.r * v.comp_phi;
            println!("burgers vector at (r={}, phi={}): magnitude {}", r_start, phi_start, (radial * radial + angular * angular).sqrt());
            println!("  component along radial direction:  {radial}");
            println!("  component along angular direction: {angular}");
            println!("  closed form alpha*beta*eps = {}", alpha * beta * cfg.eps);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Check => {
            let failures = run_check(&cfg);
            if failures == 0 {
                println!("all checks passed");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("{failures} check(s) failed");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

/// Merge defaults, config-file entries, and flag overrides (flags win).
fn assemble_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::standard();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        apply_file(&mut cfg, &text)?;
    }
    if let Some(v) = cli.a {
        cfg.a = v;
    }
    if let Some(v) = cli.b {
        cfg.b = v;
    }
    if let Some(v) = cli.theta {
        cfg.theta = v;
    }
    if let Some(v) = cli.eps {
        cfg.eps = v;
    }
    if let Some(s) = &cli.n_list {
        cfg.n_list = parse_n_list(s)?;
    }
    if let Some(v) = cli.p_exp {
        cfg.p_exp = v;
    }
    if let Some(v) = cli.quad_m {
        cfg.quad_m = v;
    }
    if let Some(v) = cli.distortion_k {
        cfg.distortion_k = v;
    }
    if let Some(v) = cli.random_pairs {
        cfg.random_pairs = v;
    }
    if let Some(v) = cli.mesh_h {
        cfg.mesh_h_cap = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(p) = &cli.out {
        cfg.out_csv = Some(p.display().to_string());
    }
    if let Some(p) = &cli.out_json {
        cfg.out_json = Some(p.display().to_string());
    }
    Ok(cfg)
}

fn apply_file(cfg: &mut ExperimentConfig, text: &str) -> Result<()> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {} is not key=value: {raw:?}", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |e: &dyn std::fmt::Display| anyhow!("config line {}: {key}: {e}", lineno + 1);
        match key {
            "a" => cfg.a = value.parse().map_err(|e| bad(&e))?,
            "b" => cfg.b = value.parse().map_err(|e| bad(&e))?,
            "theta" => cfg.theta = value.parse().map_err(|e| bad(&e))?,
            "eps" => cfg.eps = value.parse().map_err(|e| bad(&e))?,
            "n_list" => cfg.n_list = parse_n_list(value)?,
            "p_exp" => cfg.p_exp = value.parse().map_err(|e| bad(&e))?,
            "quad_m" => cfg.quad_m = value.parse().map_err(|e| bad(&e))?,
            "distortion_k" => cfg.distortion_k = value.parse().map_err(|e| bad(&e))?,
            "random_pairs" => cfg.random_pairs = value.parse().map_err(|e| bad(&e))?,
            "mesh_h" => cfg.mesh_h_cap = value.parse().map_err(|e| bad(&e))?,
            "seed" => cfg.seed = value.parse().map_err(|e| bad(&e))?,
            "out_csv" => cfg.out_csv = Some(value.to_string()),
            "out_json" => cfg.out_json = Some(value.to_string()),
            other => bail!("config line {}: unknown key {other:?}", lineno + 1),
        }
    }
    Ok(())
}

fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| anyhow!("bad level {t:?}: {e}")))
        .collect()
}

fn parse_polar(s: &str) -> Result<PolarPoint> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!("expected \"r,phi\", got {s:?}");
    }
    Ok(PolarPoint::new(parts[0].parse()?, parts[1].parse()?))
}

fn parse_hexagon(s: &str) -> Result<Hexagon> {
    match s.to_ascii_lowercase().as_str() {
        "first" | "1" => Ok(Hexagon::First),
        "second" | "2" => Ok(Hexagon::Second),
        other => bail!("hexagon must be first|second, got {other:?}"),
    }
}

fn parse_block_point(s: &str) -> Result<BlockPoint> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("expected \"hex,x,y\", got {s:?}");
    }
    Ok(BlockPoint::new(parse_hexagon(parts[0])?, parts[1].parse()?, parts[2].parse()?))
}

fn parse_surface_point(surf: &Surface, s: &str) -> Result<SurfacePoint> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        bail!("expected \"i,j,hex,x,y\", got {s:?}");
    }
    let i: usize = parts[0].parse()?;
    let j: usize = parts[1].parse()?;
    let hexagon = parse_hexagon(parts[2])?;
    let bp = BlockPoint::new(hexagon, parts[3].parse()?, parts[4].parse()?);
    if !(1..=surf.n()).contains(&i) || !(1..=surf.n()).contains(&j) {
        bail!("cell ({i}, {j}) out of range for level {}", surf.n());
    }
    Ok(SurfacePoint { chart: hex_chart(i, j, hexagon), pos: surf.block(i).chart_pos(&bp) })
}

/// Invariant battery over the analytic kernels: each suite prints one
/// PASS/FAIL line; returns the number of failures.
fn run_check(cfg: &ExperimentConfig) -> usize {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let suites: Vec<(&str, Box<dyn Fn() -> std::result::Result<(), String>>)> = vec![
        (
            "transfer map round-trips through its inverse",
            Box::new(|| {
                let sec = Sector::new(1.0, 1.0, 0.1).map_err(|e| e.to_string())?;
                let tm = TransferMap::new(&sec, 3, std::f64::consts::FRAC_PI_6)
                    .map_err(|e| e.to_string())?;
                let mut rng = ChaCha8Rng::seed_from_u64(101);
                let mut tested = 0usize;
                while tested < 200 {
                    let p = PolarPoint::new(
                        rng.random_range(10.0..11.0),
                        rng.random_range(0.0..0.1),
                    );
                    let Ok(m) = tm.eval(&p) else { continue };
                    tested += 1;
                    let back = tm.invert(&m).map_err(|e| e.to_string())?;
                    if (back.r - p.r).abs() > 1e-10 || (back.phi - p.phi).abs() > 1e-10 {
                        return Err(format!("round trip moved ({}, {})", p.r, p.phi));
                    }
                }
                Ok(())
            }),
        ),
        (
            "parallel transport preserves norms and closes loops",
            Box::new(|| {
                let sec = Sector::new(1.0, 1.0, 0.1).map_err(|e| e.to_string())?;
                let mut rng = ChaCha8Rng::seed_from_u64(103);
                for _ in 0..100 {
                    let p = PolarPoint::new(
                        rng.random_range(10.0..11.0),
                        rng.random_range(0.0..0.1),
                    );
                    let q = PolarPoint::new(
                        rng.random_range(10.0..11.0),
                        rng.random_range(0.0..0.1),
                    );
                    let v = TangentVec::new(
                        p,
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    let w = sec.transport(&v, &q);
                    if (sec.norm(&w) - sec.norm(&v)).abs() > 1e-12 {
                        return Err("transport changed a norm".into());
                    }
                    let back = sec.transport_around(&[p, q, p], &v);
                    if (back.comp_r - v.comp_r).abs() > 1e-12
                        || (back.comp_phi - v.comp_phi).abs() > 1e-12
                    {
                        return Err("closed loop failed to act as identity".into());
                    }
                }
                Ok(())
            }),
        ),
        (
            "connection decomposes into Levi-Civita plus the radial co-vector terms",
            Box::new(|| {
                let sec = Sector::new(1.0, 1.0, 0.1).map_err(|e| e.to_string())?;
                let mut rng = ChaCha8Rng::seed_from_u64(107);
                for _ in 0..20 {
                    let p = PolarPoint::new(
                        rng.random_range(10.1..10.9),
                        rng.random_range(0.01..0.09),
                    );
                    let res = sec.decomposition_residual(
                        &p,
                        &|q: &PolarPoint| (q.r.sin(), (2.0 * q.phi).cos()),
                        &|q: &PolarPoint| ((q.r * 0.3).cos(), q.phi + 0.1),
                        1e-5,
                    );
                    if res > 1e-6 {
                        return Err(format!("residual {res} at (r={}, phi={})", p.r, p.phi));
                    }
                }
                Ok(())
            }),
        ),
        (
            "torsion integral matches the closed form",
            {
                let eps = cfg.eps;
                let (a, b) = (cfg.a, cfg.b);
                Box::new(move || {
                    let sec = Sector::new(a, b, eps).map_err(|e| e.to_string())?;
                    let anchor = PolarPoint::new(sec.r0(), 0.0);
                    let v = sec
                        .burgers_integral(sec.r0(), 0.5, 0.0, 0.5, &anchor, 256)
                        .map_err(|e| e.to_string())?;
                    let angular = v.base.r * v.comp_phi;
                    let expect = 0.25 * eps;
                    if (angular - expect).abs() > 1e-6 || v.comp_r.abs() > 1e-6 {
                        return Err(format!(
                            "integral gave ({}, {angular}), expected (0, {expect})",
                            v.comp_r
                        ));
                    }
                    Ok(())
                })
            },
        ),
        (
            "block cone angles and dipole match the slant",
            Box::new(|| {
                let blk = Block::new(BlockParams::new(
                    1.0,
                    1.0,
                    std::f64::consts::FRAC_PI_6,
                    0.1,
                ))
                .map_err(|e| e.to_string())?;
                let deg = 180.0 / std::f64::consts::PI;
                let cone = blk.cone_deficit().map_err(|e| e.to_string())? * deg;
                let anti = blk.anticone_deficit().map_err(|e| e.to_string())? * deg;
                if (cone - 60.0).abs() > 1e-8 || (anti + 60.0).abs() > 1e-8 {
                    return Err(format!("deficits {cone}°, {anti}°"));
                }
                let (bv, rot) = blk.dipole_burgers().map_err(|e| e.to_string())?;
                if bv.x.abs() > 1e-8 || (bv.y - 0.1).abs() > 1e-8 || rot.abs() > 1e-8 {
                    return Err(format!("dipole ({}, {}) rot {rot}", bv.x, bv.y));
                }
                Ok(())
            }),
        ),
        (
            "assembled area telescopes to the continuum value",
            Box::new(|| {
                for n in [1usize, 2, 5] {
                    let surf = Surface::new(1.0, 1.0, std::f64::consts::FRAC_PI_6, 0.1, n)
                        .map_err(|e| e.to_string())?;
                    if (surf.area() - 1.05).abs() > 1e-12 {
                        return Err(format!("area {} at level {n}", surf.area()));
                    }
                }
                Ok(())
            }),
        ),
        (
            "inner-arc lengths match column heights on the grid",
            Box::new(|| {
                let surf = Surface::new(1.0, 1.0, std::f64::consts::FRAC_PI_6, 0.1, 4)
                    .map_err(|e| e.to_string())?;
                for i in 1..=4 {
                    let arc = surf.grid_r(i).map_err(|e| e.to_string())? * surf.grid_dphi();
                    if (arc - surf.column_height(i)).abs() > 1e-12 {
                        return Err(format!("arc {arc} vs column {}", surf.column_height(i)));
                    }
                }
                Ok(())
            }),
        ),
        (
            "rate fitting recovers exact power laws",
            Box::new(|| {
                let f = fit_rate(&[(2.0, 0.4), (4.0, 0.2), (8.0, 0.1)]).map_err(|e| e.to_string())?;
                if (f.slope + 1.0).abs() > 1e-12 || (f.r_squared - 1.0).abs() > 1e-12 {
                    return Err(format!("slope {} r² {}", f.slope, f.r_squared));
                }
                Ok(())
            }),
        ),
    ];

    let mut failures = 0usize;
    for (name, suite) in suites {
        match suite() {
            Ok(()) => println!("PASS {name}"),
            Err(why) => {
                failures += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    failures
}
