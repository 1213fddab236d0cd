//! Full-battery gate: every headline behavior of the library checked end to
//! end at its stated tolerance, one verdict per test.
//!
//! The convergence tests share a single sweep over n = 1, 2, 4, 8 at the
//! standard parameters (a = b = 1, θ = π/6, ε = 0.1), built once behind a
//! `LazyLock`. Each test states what it measured in a `PASS:` line so the
//! numbers are visible under `--nocapture` and on failure.

use std::sync::LazyLock;

use dislo_core::block::{Block, BlockParams, BlockPoint};
use dislo_core::converge::{fit_rate, run_sweep, ConvergenceReport, ExperimentConfig, SweepRecord};
use dislo_core::geom::{Hexagon, PolarPoint};
use dislo_core::mesh::{block_query, sector_path_cells, GeodesicMesh, MeshConfig};
use dislo_core::sector::{Sector, TangentVec};
use dislo_core::surface::Surface;
use dislo_core::transfer::TransferMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LEVELS: [usize; 4] = [1, 2, 4, 8];

static SWEEP: LazyLock<ConvergenceReport> = LazyLock::new(|| {
    let mut cfg = ExperimentConfig::standard();
    cfg.n_list = LEVELS.to_vec();
    run_sweep(&cfg).expect("standard sweep configuration is valid")
});

fn level(n: usize) -> &'static SweepRecord {
    SWEEP
        .records
        .iter()
        .find(|r| r.n == n)
        .unwrap_or_else(|| panic!("sweep is missing level n={n}"))
}

/// Unwrap a per-level measurement, surfacing the level's recorded stage
/// errors if the value is absent.
fn need(n: usize, what: &str, v: Option<f64>) -> f64 {
    v.unwrap_or_else(|| {
        panic!("level n={n} has no {what}; stage errors: {:?}", level(n).errors)
    })
}

fn standard_block() -> Block {
    Block::new(BlockParams::new(1.0, 1.0, std::f64::consts::FRAC_PI_6, 0.1))
        .expect("standard block parameters are valid")
}

fn standard_sector() -> Sector {
    Sector::new(1.0, 1.0, 0.1).expect("standard sector parameters are valid")
}

/// Net-map distortion between the subdivided surface and its limit sector
/// shrinks at first order: log-log slope in [−1.3, −0.7] with R² ≥ 0.95
/// over n = 2, 4, 8, measured within the five-minute budget.
#[test]
fn distortion_of_net_maps_decays_at_first_order() {
    let pts: Vec<(f64, f64)> = [2, 4, 8]
        .iter()
        .map(|&n| (n as f64, need(n, "net distortion", level(n).dis_tn)))
        .collect();
    let spent: f64 = [2, 4, 8].iter().map(|&n| level(n).elapsed_s).sum();
    let fit = fit_rate(&pts).expect("three positive distortion values");
    println!(
        "PASS: distortion slope {:.4} in [-1.3, -0.7], R^2 {:.5} >= 0.95, wall {:.1}s <= 300s",
        fit.slope, fit.r_squared, spent
    );
    assert!(
        (-1.3..=-0.7).contains(&fit.slope),
        "distortion decay slope {} outside [-1.3, -0.7]",
        fit.slope
    );
    assert!(fit.r_squared >= 0.95, "distortion fit R^2 {} below 0.95", fit.r_squared);
    assert!(spent <= 300.0, "distortion sweep took {spent:.1}s, budget is 300s");
}

/// The worst single-block distortion shrinks at second order: slope in
/// [−2.3, −1.7], and the rescaled values max·n² agree to within 50%.
#[test]
fn per_block_distortion_decays_at_second_order() {
    let pts: Vec<(f64, f64)> = [2, 4, 8]
        .iter()
        .map(|&n| (n as f64, need(n, "block distortion", level(n).max_block_dist)))
        .collect();
    let fit = fit_rate(&pts).expect("three positive block distortions");
    let scaled: Vec<f64> = pts.iter().map(|&(n, v)| v * n * n).collect();
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo;
    println!(
        "PASS: block distortion slope {:.4} in [-2.3, -1.7], n^2-rescaled spread {:.1}% < 50%",
        fit.slope,
        100.0 * spread
    );
    assert!(
        (-2.3..=-1.7).contains(&fit.slope),
        "block distortion slope {} outside [-2.3, -1.7]",
        fit.slope
    );
    assert!(spread < 0.5, "rescaled block distortions vary by {:.1}%", 100.0 * spread);
}

/// Every geodesic between net vertices crosses at most 3n grid cells, its
/// radial (column) index changes direction at most once, and its angular
/// (row) index runs monotonically.
#[test]
fn geodesic_cell_crossings_stay_bounded_and_ordered() {
    let mut worst = Vec::new();
    for n in [2usize, 4, 8] {
        let surf = Surface::new(1.0, 1.0, std::f64::consts::FRAC_PI_6, 0.1, n)
            .expect("standard surface parameters are valid");
        let sec = surf.sector().expect("positive defect magnitude");
        let side = n + 1;
        let verts: Vec<PolarPoint> = (1..=side)
            .flat_map(|i| (1..=side).map(move |j| (i, j)))
            .map(|(i, j)| surf.sector_vertex(i, j).expect("net vertex on grid"))
            .collect();
        let mut max_cells = 0usize;
        for u in 0..verts.len() {
            for v in u + 1..verts.len() {
                let cells = sector_path_cells(&sec, n, &verts[u], &verts[v])
                    .expect("net vertices lie in the sector");
                assert!(
                    cells.len() <= 3 * n,
                    "path {:?} -> {:?} at n={n} crosses {} cells (> {})",
                    verts[u],
                    verts[v],
                    cells.len(),
                    3 * n
                );
                let cols: Vec<i32> = cells.iter().map(|c| c.0 as i32).collect();
                let rows: Vec<i32> = cells.iter().map(|c| c.1 as i32).collect();
                assert!(
                    direction_changes(&cols) <= 1,
                    "column indices {cols:?} change direction more than once at n={n}"
                );
                assert!(
                    is_monotone(&rows),
                    "row indices {rows:?} are not monotone at n={n}"
                );
                max_cells = max_cells.max(cells.len());
            }
        }
        worst.push((n, max_cells));
    }
    println!(
        "PASS: exhaustive net pairs cross at most {:?} cells (bounds {:?}), indices ordered",
        worst.iter().map(|&(_, c)| c).collect::<Vec<_>>(),
        worst.iter().map(|&(n, _)| 3 * n).collect::<Vec<_>>()
    );
}

fn direction_changes(seq: &[i32]) -> usize {
    let mut dir = 0;
    let mut changes = 0;
    for w in seq.windows(2) {
        let d = (w[1] - w[0]).signum();
        if d != 0 {
            if dir != 0 && d != dir {
                changes += 1;
            }
            dir = d;
        }
    }
    changes
}

fn is_monotone(seq: &[i32]) -> bool {
    seq.windows(2).all(|w| w[1] >= w[0]) || seq.windows(2).all(|w| w[1] <= w[0])
}

/// The mean-square frame error of the transfer maps decreases strictly
/// along the sweep and ends below 20% of its initial value; the pointwise
/// frame error at a fixed probe point also dies off.
#[test]
fn frame_error_vanishes_in_mean_and_pointwise() {
    let lp: Vec<f64> = LEVELS
        .iter()
        .map(|&n| need(n, "mean frame error", level(n).lp_frame))
        .collect();
    assert!(
        lp.windows(2).all(|w| w[1] < w[0]),
        "mean frame error {lp:?} is not strictly decreasing"
    );
    let ratio = lp[lp.len() - 1] / lp[0];
    assert!(ratio < 0.2, "final mean frame error is {:.1}% of initial (>= 20%)", 100.0 * ratio);

    let sec = standard_sector();
    let probe = PolarPoint::new(10.2, 0.03);
    let point: Vec<f64> = LEVELS
        .iter()
        .map(|&n| {
            TransferMap::new(&sec, n, std::f64::consts::FRAC_PI_6)
                .and_then(|tm| tm.frame_error_at(&probe))
                .expect("probe point lies in every partition")
        })
        .collect();
    assert!(
        point.windows(2).all(|w| w[1] <= w[0]),
        "pointwise frame error {point:?} increases along the sweep"
    );
    assert!(
        point[point.len() - 1] < 0.5 * point[0],
        "pointwise frame error {point:?} does not die off"
    );
    println!(
        "PASS: mean frame error falls {:?} (final {:.1}% of initial), probe error {:?}",
        lp,
        100.0 * ratio,
        point
    );
}

/// The mean-square rigidity error (distance of the differential from the
/// rotation group) decreases strictly and ends below 20% of its start.
#[test]
fn rigidity_error_vanishes_in_mean() {
    let lp: Vec<f64> = LEVELS
        .iter()
        .map(|&n| need(n, "mean rigidity error", level(n).lp_rigidity))
        .collect();
    assert!(
        lp.windows(2).all(|w| w[1] < w[0]),
        "mean rigidity error {lp:?} is not strictly decreasing"
    );
    let ratio = lp[lp.len() - 1] / lp[0];
    assert!(ratio < 0.2, "final mean rigidity error is {:.1}% of initial (>= 20%)", 100.0 * ratio);
    println!("PASS: mean rigidity error falls {:?} (final {:.1}% of initial)", lp, 100.0 * ratio);
}

/// The metric pullback converges in the mean but not uniformly: the
/// mean-square metric error decreases while its sup norm stays of order
/// one, and the volume distortion sup vanishes.
#[test]
fn metric_converges_in_mean_but_not_uniformly() {
    let lp: Vec<f64> = LEVELS
        .iter()
        .map(|&n| need(n, "mean metric error", level(n).lp_metric))
        .collect();
    let sup: Vec<f64> = LEVELS
        .iter()
        .map(|&n| need(n, "sup metric error", level(n).metric_sup))
        .collect();
    let vol: Vec<f64> = LEVELS
        .iter()
        .map(|&n| need(n, "sup volume distortion", level(n).vol_ratio_sup))
        .collect();
    assert!(
        lp.windows(2).all(|w| w[1] < w[0]),
        "mean metric error {lp:?} is not strictly decreasing"
    );
    assert!(
        sup.iter().all(|&s| s >= 0.5 * sup[0]),
        "sup metric error {sup:?} decays, but should stay of order one"
    );
    assert!(
        vol.windows(2).all(|w| w[1] < w[0]) && vol[vol.len() - 1] < 0.5 * vol[0],
        "sup volume distortion {vol:?} does not vanish"
    );
    println!(
        "PASS: mean metric error falls {:?}, sup stays {:?} (>= {:.3}), volume sup falls {:?}",
        lp,
        sup,
        0.5 * sup[0],
        vol
    );
}

/// The quadrature of the transported torsion density over a quarter of the
/// sector reproduces the closed form: a pure angular vector of parallel
/// length αβε, i.e. 0.025·(r⁻¹∂φ) at the reference point, componentwise to
/// 1e-6 at a 256×256 grid.
#[test]
fn burgers_rectangle_integral_matches_closed_form() {
    let sec = standard_sector();
    let ref_p = PolarPoint::new(10.2, 0.07);
    let v = sec
        .burgers_integral(10.25, 0.5, 0.025, 0.5, &ref_p, 256)
        .expect("quarter rectangle lies inside the sector");
    let want_phi = 0.025 / ref_p.r;
    let err_r = v.comp_r.abs();
    let err_phi = (v.comp_phi - want_phi).abs();
    println!(
        "PASS: quadrature off closed form by ({:.2e}, {:.2e}) componentwise, tolerance 1e-6",
        err_r, err_phi
    );
    assert!(err_r <= 1e-6, "radial component {} should vanish", v.comp_r);
    assert!(
        err_phi <= 1e-6,
        "angular component {} differs from {} by {}",
        v.comp_phi,
        want_phi,
        err_phi
    );
}

/// The frame connection splits as Levi-Civita plus the contorsion built
/// from the radial unit field: the finite-difference residual of that
/// decomposition stays below 1e-6 at 100 random points and field pairs.
#[test]
fn connection_splits_into_levi_civita_plus_contorsion() {
    let sec = standard_sector();
    let span = sec.total_angle();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let p = PolarPoint::new(
            rng.random_range(sec.r0() + 0.01..sec.r1() - 0.01),
            rng.random_range(0.001..span - 0.001),
        );
        let c: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(0.2..0.8)).collect();
        let x_field = |s: &PolarPoint| {
            (
                c[0] * (w[0] * s.r).sin() + c[1] * s.phi + c[2],
                c[3] * (w[1] * s.r).cos() + c[4] * s.phi + c[5],
            )
        };
        let y_field = |s: &PolarPoint| {
            (
                c[6] * (w[2] * s.r).cos() + c[7] * s.phi + c[8],
                c[9] * (w[3] * s.r).sin() + c[10] * s.phi + c[11],
            )
        };
        let res = sec.decomposition_residual(&p, &x_field, &y_field, 1e-5);
        assert!(
            res < 1e-6,
            "decomposition residual {res:.3e} at {p:?} exceeds 1e-6"
        );
        worst = worst.max(res);
    }
    println!("PASS: decomposition residual <= {worst:.3e} over 100 random points, tolerance 1e-6");
}

/// Parallel transport is a linear isometry, closed loops bring every
/// vector back to itself, and the torsion tensor evaluates to the angular
/// density (1/r)·(u_r v_φ − u_φ v_r)·∂φ — all at 1e-12.
#[test]
fn transport_is_isometric_flat_and_torsion_matches_density() {
    let sec = standard_sector();
    let span = sec.total_angle();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let rand_pt = |rng: &mut ChaCha8Rng| {
        PolarPoint::new(
            rng.random_range(sec.r0()..sec.r1()),
            rng.random_range(0.0..span),
        )
    };
    let mut worst_norm = 0.0_f64;
    let mut worst_loop = 0.0_f64;
    let mut worst_torsion = 0.0_f64;
    for _ in 0..100 {
        let p = rand_pt(&mut rng);
        let v = TangentVec::new(p, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));

        let q = rand_pt(&mut rng);
        let moved = sec.transport(&v, &q);
        let norm_drift = (sec.norm(&moved) - sec.norm(&v)).abs();
        assert!(norm_drift <= 1e-12, "transport changed a length by {norm_drift:.3e}");
        worst_norm = worst_norm.max(norm_drift);

        let loop_pts: Vec<PolarPoint> = (0..6).map(|_| rand_pt(&mut rng)).collect();
        let back = sec.transport_around(&loop_pts, &v);
        assert_eq!(back.comp_r, v.comp_r, "loop transport perturbed the radial component");
        let loop_drift = (back.comp_phi - v.comp_phi).abs();
        assert!(loop_drift <= 1e-12, "loop holonomy drift {loop_drift:.3e} exceeds 1e-12");
        worst_loop = worst_loop.max(loop_drift);

        let u = TangentVec::new(p, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let t = sec.torsion(&u, &v).expect("shared base point");
        let t_rev = sec.torsion(&v, &u).expect("shared base point");
        let want = (u.comp_r * v.comp_phi - u.comp_phi * v.comp_r) / p.r;
        let err = (t.comp_phi - want).abs().max(t.comp_r.abs());
        let anti = (t.comp_phi + t_rev.comp_phi).abs();
        assert!(err <= 1e-12, "torsion differs from the density by {err:.3e}");
        assert!(anti <= 1e-12, "torsion is not antisymmetric, defect {anti:.3e}");
        worst_torsion = worst_torsion.max(err.max(anti));
    }
    println!(
        "PASS: norm drift <= {worst_norm:.2e}, loop drift <= {worst_loop:.2e}, \
         torsion defect <= {worst_torsion:.2e}, all within 1e-12"
    );
}

/// Developing the charts around the two singular points gives a rotation
/// by ±2θ (60° at θ = π/6) to 1e-8 degrees, and the full dipole loop is a
/// pure translation by the defect magnitude with no rotation.
#[test]
fn chart_holonomy_is_cone_rotation_and_dipole_translation() {
    let blk = standard_block();
    let deg = 180.0 / std::f64::consts::PI;
    let cone = blk.cone_deficit().expect("positive defect magnitude") * deg;
    let anti = blk.anticone_deficit().expect("positive defect magnitude") * deg;
    assert!((cone - 60.0).abs() <= 1e-8, "cone holonomy {cone}° is not 60° ± 1e-8°");
    assert!((anti + 60.0).abs() <= 1e-8, "excess-point holonomy {anti}° is not -60° ± 1e-8°");

    let (bv, rot) = blk.dipole_burgers().expect("positive defect magnitude");
    let rot_deg = rot * deg;
    assert!(
        rot_deg.abs() <= 1e-8,
        "dipole loop rotates by {rot_deg}°, expected identity ± 1e-8°"
    );
    assert!(
        bv.x.abs() <= 1e-8 && (bv.y - 0.1).abs() <= 1e-8,
        "dipole translation ({}, {}) is not (0, eps)",
        bv.x,
        bv.y
    );
    println!(
        "PASS: cone {cone:.9}°, excess {anti:.9}°, dipole translation ({:.2e}, {:.6}) \
         rotation {rot_deg:.2e}°",
        bv.x, bv.y
    );
}

/// The mesh geodesics agree with the analytic oracles: on a flat doubled
/// rectangle they reproduce straight-line distances, and on a dislocated
/// block they reproduce the unfolding distance — both within 3h on 100
/// random pairs.
#[test]
fn mesh_distances_match_analytic_oracles() {
    let h = 0.02;
    let tol = 3.0 * h;
    let cfg = MeshConfig::new(h);

    // Flat case: the double of a 1 × 0.5 rectangle, same-face pairs.
    let flat = Block::new(BlockParams::new(1.0, 1.0, std::f64::consts::FRAC_PI_6, 0.0))
        .expect("flat block parameters are valid");
    let mesh = GeodesicMesh::for_block(&flat, &cfg).expect("flat block meshes");
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst_flat = 0.0_f64;
    for _ in 0..100 {
        let p = BlockPoint::new(
            Hexagon::First,
            rng.random_range(0.05..0.95),
            rng.random_range(0.05..0.45),
        );
        let q = BlockPoint::new(
            Hexagon::First,
            rng.random_range(0.05..0.95),
            rng.random_range(0.05..0.45),
        );
        let exact = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt();
        let got = mesh
            .shortest_path(&block_query(&flat, &p), &block_query(&flat, &q), true)
            .expect("interior points resolve")
            .length();
        let err = (got - exact).abs();
        assert!(err <= tol, "flat mesh distance off by {err:.4} (> {tol}) for {p:?} -> {q:?}");
        worst_flat = worst_flat.max(err);
    }

    // Dislocated case: mesh against the chart-unfolding distance.
    let blk = standard_block();
    let mesh = GeodesicMesh::for_block(&blk, &cfg).expect("standard block meshes");
    let mut worst_disl = 0.0_f64;
    for _ in 0..100 {
        let mut sample = || loop {
            let x = rng.random_range(0.05..0.95);
            let y = rng.random_range(0.05..blk.upper_boundary(x) - 0.05);
            // Keep clear of the slit between the singular points, which
            // geodesic queries must not touch.
            if (y - blk.half_height()).abs() > 2e-3 {
                return BlockPoint::new(Hexagon::First, x, y);
            }
        };
        let p = sample();
        let q = sample();
        let exact = blk.distance(&p, &q).expect("interior points are connected");
        let got = mesh
            .shortest_path(&block_query(&blk, &p), &block_query(&blk, &q), true)
            .expect("interior points resolve")
            .length();
        let err = (got - exact).abs();
        assert!(err <= tol, "block mesh distance off by {err:.4} (> {tol}) for {p:?} -> {q:?}");
        worst_disl = worst_disl.max(err);
    }
    println!(
        "PASS: mesh vs straight-line error <= {worst_flat:.4}, mesh vs unfolding error \
         <= {worst_disl:.4}, tolerance {tol}"
    );
}
