//! Sweep orchestration: run the whole measurement battery over a list of
//! subdivision levels, fit convergence rates, and render the results as a
//! CSV table and a JSON summary.
//!
//! Per level n the sweep measures the net-vertex distance discrepancy
//! against the flat sector (through the geodesic mesh), the Lᵖ frame /
//! rigidity / metric errors and the volume-ratio and metric sup-errors of
//! the transfer map, the per-column boundary distortion, and cell-crossing
//! counts of analytic sector geodesics. Levels run through the
//! data-parallel shim; a failed stage is recorded on its record and the
//! sweep continues.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::geom::PolarPoint;
use crate::mesh::{sector_path_cells, GeodesicMesh, MeshConfig};
use crate::sector::Sector;
use crate::surface::Surface;
use crate::transfer::{self, ErrorQuantity, TransferMap};

/// Full parameter set of a convergence sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub eps: f64,
    /// Subdivision levels, strictly ascending.
    pub n_list: Vec<usize>,
    /// Integral exponent; at least the dimension, 2.
    pub p_exp: f64,
    /// Midpoint-quadrature grid per integration patch.
    pub quad_m: usize,
    /// Interior boundary samples per side for block distortion.
    pub distortion_k: usize,
    /// Random sector pairs for cell-crossing statistics.
    pub random_pairs: usize,
    /// Cap of the mesh-spacing schedule h(n) = min(cap, b/(40 n)).
    pub mesh_h_cap: f64,
    pub seed: u64,
    /// Optional output paths for the rendered report.
    pub out_csv: Option<String>,
    pub out_json: Option<String>,
}

impl ExperimentConfig {
    /// The reference configuration used throughout the test suite.
    pub fn standard() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            theta: std::f64::consts::FRAC_PI_6,
            eps: 0.1,
            n_list: vec![2, 4, 8],
            p_exp: 2.0,
            quad_m: 8,
            distortion_k: 8,
            random_pairs: 500,
            mesh_h_cap: 1e-2,
            seed: 7,
            out_csv: None,
            out_json: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams(
                "n_list must be non-empty and strictly ascending".into(),
            ));
        }
        if self.n_list[0] == 0 {
            return Err(Error::InvalidParams("subdivision levels start at 1".into()));
        }
        if !(self.p_exp >= 2.0) {
            return Err(Error::InvalidParams(format!(
                "integral exponent must be >= 2 (the dimension), got {}",
                self.p_exp
            )));
        }
        if self.quad_m == 0 {
            return Err(Error::InvalidParams("quadrature grid needs m >= 1".into()));
        }
        if !(self.mesh_h_cap > 0.0) {
            return Err(Error::InvalidParams("mesh spacing cap must be positive".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParams(
                "sweep needs a positive defect thickness (the flat case has no sector)".into(),
            ));
        }
        Ok(())
    }

    /// Mesh-spacing schedule: an order below the cell size being probed.
    pub fn mesh_h(&self, n: usize) -> f64 {
        self.mesh_h_cap.min(self.b / (40.0 * n as f64))
    }
}

/// One level's measurements; a failed stage leaves its value empty and
/// appends a message to `errors`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    /// Max over net-vertex pairs of |mesh distance − sector distance|.
    pub dis_tn: Option<f64>,
    pub lp_frame: Option<f64>,
    pub lp_rigidity: Option<f64>,
    pub lp_metric: Option<f64>,
    pub vol_ratio_sup: Option<f64>,
    pub max_block_dist: Option<f64>,
    /// Max cells crossed by analytic geodesics (net + random pairs).
    pub max_cells: Option<usize>,
    pub metric_sup: Option<f64>,
    /// L¹ volume-ratio defect, the measure not matched isometrically.
    pub uncovered_volume: Option<f64>,
    pub elapsed_s: f64,
    pub errors: Vec<String>,
}

/// Least-squares power-law fit on log–log axes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub r_squared: f64,
    /// Points dropped for non-positive values.
    pub excluded: usize,
}

/// Power-law fit of value against n. Non-positive values are excluded
/// (counted in the result); fewer than three usable points is an error.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    let excluded = points.len() - usable.len();
    if usable.len() < 3 {
        return Err(Error::DegenerateFit(usable.len()));
    }
    let m = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / m;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit(usable.len()));
    }
    let slope = sxy / sxx;
    let ss_tot: f64 = usable.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let ss_res: f64 = usable
        .iter()
        .map(|p| {
            let pred = my + slope * (p.0 - mx);
            (p.1 - pred) * (p.1 - pred)
        })
        .sum();
    // A flat series fits itself perfectly: residuals vanish with the
    // variance, so report a perfect fit rather than 0/0.
    let r_squared = if ss_tot <= 1e-30 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, r_squared, excluded })
}

/// Fitted slope of one report column.
#[derive(Debug, Clone, Serialize)]
pub struct ColumnFit {
    pub column: String,
    pub fit: Option<RateFit>,
}

/// Numerical verdicts on the four convergence requirements: volume
/// matching, distance matching, asymptotic rigidity in the mean, and
/// frame convergence in the mean.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Verdicts {
    pub volume: bool,
    pub distance: bool,
    pub rigidity: bool,
    pub frame: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub records: Vec<SweepRecord>,
    pub fits: Vec<ColumnFit>,
    pub verdicts: Verdicts,
}

const CSV_COLUMNS: [&str; 10] = [
    "n",
    "dis_Tn",
    "lp_frame",
    "lp_rigidity",
    "lp_metric",
    "vol_ratio_sup",
    "max_block_dist",
    "max_cells",
    "metric_sup",
    "uncovered_volume",
];

impl SweepRecord {
    fn empty(n: usize) -> Self {
        Self {
            n,
            dis_tn: None,
            lp_frame: None,
            lp_rigidity: None,
            lp_metric: None,
            vol_ratio_sup: None,
            max_block_dist: None,
            max_cells: None,
            metric_sup: None,
            uncovered_volume: None,
            elapsed_s: 0.0,
            errors: Vec::new(),
        }
    }

    /// Column values after n, in CSV order.
    fn columns(&self) -> [Option<f64>; 9] {
        [
            self.dis_tn,
            self.lp_frame,
            self.lp_rigidity,
            self.lp_metric,
            self.vol_ratio_sup,
            self.max_block_dist,
            self.max_cells.map(|c| c as f64),
            self.metric_sup,
            self.uncovered_volume,
        ]
    }
}

impl ConvergenceReport {
    /// Series of one column over the levels where it was measured.
    pub fn series(&self, col: usize) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.columns()[col].map(|v| (r.n as f64, v)))
            .collect()
    }

    /// Comma-separated table: a commented header documenting the
    /// configuration, the per-level rows, and slope/R² footer rows.
    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        out.push_str(&format!(
            "# convergence sweep: a={} b={} theta={} eps={} p={} seed={}\n",
            c.a, c.b, c.theta, c.eps, c.p_exp, c.seed
        ));
        out.push_str(&format!(
            "# mesh schedule h(n) = min({}, b/(40 n)); quadrature m={}; distortion k={}; random pairs={}\n",
            c.mesh_h_cap, c.quad_m, c.distortion_k, c.random_pairs
        ));
        out.push_str(&CSV_COLUMNS.join(", "));
        out.push('\n');
        for r in &self.records {
            let mut row = vec![r.n.to_string()];
            row.extend(r.columns().iter().map(|v| fmt_opt(*v)));
            out.push_str(&row.join(", "));
            out.push('\n');
        }
        let mut slope_row = vec!["slope".to_string()];
        let mut r2_row = vec!["r_squared".to_string()];
        for cf in &self.fits {
            match cf.fit {
                Some(f) => {
                    slope_row.push(f.slope.to_string());
                    r2_row.push(f.r_squared.to_string());
                }
                None => {
                    slope_row.push("NA".into());
                    r2_row.push("NA".into());
                }
            }
        }
        out.push_str(&slope_row.join(", "));
        out.push('\n');
        out.push_str(&r2_row.join(", "));
        out.push('\n');
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Write the rendered report to the paths named in the config.
    pub fn write_outputs(&self) -> Result<()> {
        if let Some(p) = &self.config.out_csv {
            std::fs::write(p, self.to_csv())?;
        }
        if let Some(p) = &self.config.out_json {
            std::fs::write(p, self.to_json())?;
        }
        Ok(())
    }

    pub fn has_errors(&self) -> bool {
        self.records.iter().any(|r| !r.errors.is_empty())
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "NA".into(),
    }
}

/// Each value at most 5% above its predecessor (mesh-noise allowance).
fn monotone_within(series: &[(f64, f64)], tol: f64) -> bool {
    series.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + tol))
}

fn verdicts(report_records: &[SweepRecord], fits: &[ColumnFit]) -> Verdicts {
    let series = |col: usize| -> Vec<(f64, f64)> {
        report_records
            .iter()
            .filter_map(|r| r.columns()[col].map(|v| (r.n as f64, v)))
            .collect()
    };
    let vanishing = |s: &[(f64, f64)]| -> bool {
        s.len() >= 2
            && monotone_within(s, 0.05)
            && s.last().unwrap().1 <= 0.5 * s.first().unwrap().1
    };
    let dis = series(0);
    let dis_fit = fits.first().and_then(|c| c.fit);
    Verdicts {
        volume: vanishing(&series(8)),
        distance: monotone_within(&dis, 0.05)
            && dis_fit.is_some_and(|f| {
                (-1.3..=-0.7).contains(&f.slope) && f.r_squared >= 0.95
            }),
        rigidity: vanishing(&series(2)),
        frame: vanishing(&series(1)),
    }
}

/// One level of the sweep; failures are captured per stage.
fn measure_level(cfg: &ExperimentConfig, n: usize) -> SweepRecord {
    let start = Instant::now();
    let mut rec = SweepRecord::empty(n);
    let surf = match Surface::new(cfg.a, cfg.b, cfg.theta, cfg.eps, n) {
        Ok(s) => s,
        Err(e) => {
            rec.errors.push(format!("surface: {e}"));
            rec.elapsed_s = start.elapsed().as_secs_f64();
            return rec;
        }
    };
    let sec = match surf.sector() {
        Ok(s) => s,
        Err(e) => {
            rec.errors.push(format!("sector: {e}"));
            rec.elapsed_s = start.elapsed().as_secs_f64();
            return rec;
        }
    };

    fn stage(errors: &mut Vec<String>, name: &str, v: Result<f64>) -> Option<f64> {
        match v {
            Ok(x) => Some(x),
            Err(e) => {
                errors.push(format!("{name}: {e}"));
                None
            }
        }
    }
    match TransferMap::new(&sec, n, cfg.theta) {
        Ok(tm) => {
            let m = cfg.quad_m;
            let e = &mut rec.errors;
            rec.lp_frame = stage(e, "lp_frame", tm.lp_error(ErrorQuantity::Frame, cfg.p_exp, m));
            rec.lp_rigidity =
                stage(e, "lp_rigidity", tm.lp_error(ErrorQuantity::Rigidity, cfg.p_exp, m));
            rec.lp_metric =
                stage(e, "lp_metric", tm.lp_error(ErrorQuantity::Metric, cfg.p_exp, m));
            rec.vol_ratio_sup =
                stage(e, "vol_ratio_sup", tm.sup_error(ErrorQuantity::VolumeRatio, m));
            rec.metric_sup = stage(e, "metric_sup", tm.sup_error(ErrorQuantity::Metric, m));
            rec.uncovered_volume =
                stage(e, "uncovered_volume", tm.lp_error(ErrorQuantity::VolumeRatio, 1.0, m));
        }
        Err(e) => rec.errors.push(format!("transfer map: {e}")),
    }

    match transfer::max_block_distortion(&surf, cfg.distortion_k) {
        Ok(v) => rec.max_block_dist = Some(v),
        Err(e) => rec.errors.push(format!("block distortion: {e}")),
    }

    match net_discrepancy(cfg, &surf, &sec, n) {
        Ok(v) => rec.dis_tn = Some(v),
        Err(e) => rec.errors.push(format!("net discrepancy: {e}")),
    }

    match cell_statistics(cfg, &surf, &sec, n) {
        Ok(v) => rec.max_cells = Some(v),
        Err(e) => rec.errors.push(format!("cell crossing: {e}")),
    }

    rec.elapsed_s = start.elapsed().as_secs_f64();
    rec
}

/// Max over all net-vertex pairs of |refined mesh distance − analytic
/// sector distance|.
fn net_discrepancy(cfg: &ExperimentConfig, surf: &Surface, sec: &Sector, n: usize) -> Result<f64> {
    let mesh = GeodesicMesh::for_surface(surf, &MeshConfig::new(cfg.mesh_h(n)))?;
    let net = surf.net_vertices();
    let dm = mesh.distance_matrix(&net, true)?;
    let side = n + 1;
    let polar: Vec<PolarPoint> = (1..=side)
        .flat_map(|i| (1..=side).map(move |j| (i, j)))
        .map(|(i, j)| surf.sector_vertex(i, j))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for u in 0..net.len() {
        for v in u + 1..net.len() {
            let dg = dm[u][v];
            if !dg.is_finite() {
                return Err(Error::NoPath);
            }
            let ds = sec.distance(&polar[u], &polar[v])?;
            worst = worst.max((dg - ds).abs());
        }
    }
    Ok(worst)
}

/// Max cells crossed by the analytic sector geodesic, over all net-vertex
/// pairs plus seeded random interior pairs.
fn cell_statistics(cfg: &ExperimentConfig, surf: &Surface, sec: &Sector, n: usize) -> Result<usize> {
    let side = n + 1;
    let verts: Vec<PolarPoint> = (1..=side)
        .flat_map(|i| (1..=side).map(move |j| (i, j)))
        .map(|(i, j)| surf.sector_vertex(i, j))
        .collect::<Result<_>>()?;
    let mut worst = 0usize;
    for u in 0..verts.len() {
        for v in u + 1..verts.len() {
            worst = worst.max(sector_path_cells(sec, n, &verts[u], &verts[v])?.len());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(n as u64));
    let (r0, r1) = (sec.r0(), sec.r1());
    let span = sec.total_angle();
    for _ in 0..cfg.random_pairs {
        let p = PolarPoint::new(rng.random_range(r0..r1), rng.random_range(0.0..span));
        let q = PolarPoint::new(rng.random_range(r0..r1), rng.random_range(0.0..span));
        worst = worst.max(sector_path_cells(sec, n, &p, &q)?.len());
    }
    Ok(worst)
}

/// Run the full battery over every level in the config. Levels run
/// through the data-parallel shim; assembly, fitting, and verdicts are
/// serial. Stage failures are recorded on their level's record and never
/// abort the sweep.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let records = exec::map_slice(&cfg.n_list, |&n| measure_level(cfg, n));
    let fits: Vec<ColumnFit> = CSV_COLUMNS[1..]
        .iter()
        .enumerate()
        .map(|(col, name)| {
            let pts: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|r| r.columns()[col].map(|v| (r.n as f64, v)))
                .collect();
            ColumnFit { column: (*name).to_string(), fit: fit_rate(&pts).ok() }
        })
        .collect();
    let verdicts = verdicts(&records, &fits);
    Ok(ConvergenceReport { config: cfg.clone(), records, fits, verdicts })
}
