//! The continuum sector: an annular sector with the flat polar metric and a
//! metric-compatible, flat, torsion-carrying connection.
//!
//! The sector N(a, b, eps) spans radii [R0, R0 + b] with R0 = a·b/eps and
//! angle eps/b. Its connection is defined by declaring the orthonormal frame
//! (∂r, r⁻¹∂φ) parallel; this makes parallel transport path-independent and
//! norm-preserving, concentrates the defect content in torsion, and makes
//! radial/angular parameter curves autoparallel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::PolarPoint;

/// Annular sector with derived radii and opening angle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Sector {
    a: f64,
    b: f64,
    eps: f64,
    r0: f64,
    r1: f64,
    total_angle: f64,
}

/// Tangent vector at a sector point, in coordinate components (∂r, ∂φ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVec {
    pub base: PolarPoint,
    pub comp_r: f64,
    pub comp_phi: f64,
}

impl TangentVec {
    pub fn new(base: PolarPoint, comp_r: f64, comp_phi: f64) -> Self {
        Self { base, comp_r, comp_phi }
    }
}

/// Coefficient functions of a vector field in the coordinate basis,
/// evaluated pointwise: p ↦ (comp_r(p), comp_phi(p)).
pub type FieldFn<'a> = &'a dyn Fn(&PolarPoint) -> (f64, f64);

impl Sector {
    /// Build the sector for side lengths `a`, `b` and defect magnitude `eps`.
    ///
    /// Requires a, b, eps > 0 and opening angle eps/b < pi (the analytic
    /// distance formula relies on the angular wedge being convex).
    pub fn new(a: f64, b: f64, eps: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParams(format!("side lengths a={a}, b={b} must be positive")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "defect magnitude eps={eps} must be positive (the eps=0 limit is a flat rectangle, not a sector)"
            )));
        }
        let total_angle = eps / b;
        if total_angle >= std::f64::consts::PI {
            return Err(Error::InvalidParams(format!(
                "opening angle eps/b = {total_angle} must be < pi for the analytic distance to be valid"
            )));
        }
        let r0 = a * b / eps;
        Ok(Self { a, b, eps, r0, r1: r0 + b, total_angle })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    /// Inner radius R0 = a·b/eps.
    pub fn r0(&self) -> f64 {
        self.r0
    }
    /// Outer radius R1 = R0 + b.
    pub fn r1(&self) -> f64 {
        self.r1
    }
    /// Opening angle eps/b.
    pub fn total_angle(&self) -> f64 {
        self.total_angle
    }

    /// Area with respect to the polar volume form r dr dφ.
    pub fn area(&self) -> f64 {
        0.5 * (self.r1 * self.r1 - self.r0 * self.r0) * self.total_angle
    }

    /// Whether `p` lies in the closed sector, within a length tolerance
    /// `tol` (converted to an angular tolerance at the inner radius).
    pub fn contains(&self, p: &PolarPoint, tol: f64) -> bool {
        let ang_tol = tol / self.r0;
        p.r >= self.r0 - tol
            && p.r <= self.r1 + tol
            && p.phi >= -ang_tol
            && p.phi <= self.total_angle + ang_tol
    }

    fn require_inside(&self, p: &PolarPoint) -> Result<()> {
        if self.contains(p, crate::geom::TOL) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(format!(
                "(r, phi) = ({}, {}) outside sector [{}, {}] x [0, {}]",
                p.r, p.phi, self.r0, self.r1, self.total_angle
            )))
        }
    }

    /// Geodesic distance between two sector points.
    ///
    /// The angular wedge (opening < pi) and the outer arc are no obstacle to
    /// straight chords; only the inner disk of radius R0 is. The chord from p
    /// to q dips inside that disk exactly when the angular gap exceeds the
    /// sum of the tangent-clearance angles acos(R0/r); in that case the
    /// geodesic is tangent–inner-arc–tangent.
    pub fn distance(&self, p: &PolarPoint, q: &PolarPoint) -> Result<f64> {
        self.require_inside(p)?;
        self.require_inside(q)?;
        let dphi = (p.phi - q.phi).abs();
        // Clamp guards roundoff for points within TOL outside [r0, r1].
        let cp = (self.r0 / p.r).clamp(-1.0, 1.0).acos();
        let cq = (self.r0 / q.r).clamp(-1.0, 1.0).acos();
        if dphi <= cp + cq {
            let d2 = p.r * p.r + q.r * q.r - 2.0 * p.r * q.r * dphi.cos();
            Ok(d2.max(0.0).sqrt())
        } else {
            let leg_p = (p.r * p.r - self.r0 * self.r0).max(0.0).sqrt();
            let leg_q = (q.r * q.r - self.r0 * self.r0).max(0.0).sqrt();
            Ok(leg_p + leg_q + self.r0 * (dphi - cp - cq))
        }
    }

    /// Metric inner product g(u, v) = u_r v_r + r² u_φ v_φ (shared base).
    pub fn inner(&self, u: &TangentVec, v: &TangentVec) -> f64 {
        u.comp_r * v.comp_r + u.base.r * u.base.r * u.comp_phi * v.comp_phi
    }

    /// Metric norm |v|_g.
    pub fn norm(&self, v: &TangentVec) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Parallel transport of `v` to base point `q`.
    ///
    /// Expands v in the parallel frame (∂r, r⁻¹∂φ) and keeps the
    /// coefficients; path-independent by construction.
    pub fn transport(&self, v: &TangentVec, q: &PolarPoint) -> TangentVec {
        let coeff1 = v.comp_r;
        let coeff2 = v.base.r * v.comp_phi;
        TangentVec::new(*q, coeff1, coeff2 / q.r)
    }

    /// Transport around a closed polygonal loop of base points (ending where
    /// it starts); flatness makes this the identity on coefficients.
    pub fn transport_around(&self, loop_pts: &[PolarPoint], v: &TangentVec) -> TangentVec {
        let mut cur = *v;
        for p in loop_pts {
            cur = self.transport(&cur, p);
        }
        self.transport(&cur, &v.base)
    }

    /// Torsion tensor evaluated on two vectors at a common base point:
    /// T(u, v) = (1/r)(u_r v_φ − u_φ v_r) ∂φ.
    pub fn torsion(&self, u: &TangentVec, v: &TangentVec) -> Result<TangentVec> {
        let same = (u.base.r - v.base.r).abs() <= crate::geom::TOL
            && (u.base.phi - v.base.phi).abs() <= crate::geom::TOL;
        if !same {
            return Err(Error::ChartMismatch(
                "torsion arguments must share a base point".into(),
            ));
        }
        let coeff = (u.comp_r * v.comp_phi - u.comp_phi * v.comp_r) / u.base.r;
        Ok(TangentVec::new(u.base, 0.0, coeff))
    }

    /// Residual of the connection decomposition
    /// ∇_X Y = ∇ᴸᶜ_X Y + g(X, Y)·V − g(V, Y)·X with V = r⁻¹∂r,
    /// evaluated at `p` with central finite differences of step `h_fd`.
    ///
    /// The frame connection ∇ differentiates the parallel-frame coefficients
    /// of Y; the Levi-Civita side uses the flat polar Christoffel symbols
    /// Γ^r_{φφ} = −r, Γ^φ_{rφ} = Γ^φ_{φr} = 1/r. Returns the g-norm of the
    /// difference, which vanishes identically up to differencing error.
    pub fn decomposition_residual(
        &self,
        p: &PolarPoint,
        x_field: FieldFn,
        y_field: FieldFn,
        h_fd: f64,
    ) -> f64 {
        let (xr, xphi) = x_field(p);
        let (yr, yphi) = y_field(p);

        let ddr = |f: &dyn Fn(&PolarPoint) -> f64| {
            let pp = PolarPoint::new(p.r + h_fd, p.phi);
            let pm = PolarPoint::new(p.r - h_fd, p.phi);
            (f(&pp) - f(&pm)) / (2.0 * h_fd)
        };
        let ddphi = |f: &dyn Fn(&PolarPoint) -> f64| {
            let pp = PolarPoint::new(p.r, p.phi + h_fd);
            let pm = PolarPoint::new(p.r, p.phi - h_fd);
            (f(&pp) - f(&pm)) / (2.0 * h_fd)
        };
        let deriv_along_x = |f: &dyn Fn(&PolarPoint) -> f64| xr * ddr(f) + xphi * ddphi(f);

        // Frame connection: differentiate frame coefficients (Yr, r·Yφ).
        let y1 = |s: &PolarPoint| y_field(s).0;
        let y2 = |s: &PolarPoint| s.r * y_field(s).1;
        let nabla_r = deriv_along_x(&y1);
        let nabla_phi = deriv_along_x(&y2) / p.r;

        // Levi-Civita connection in coordinates.
        let yr_fn = |s: &PolarPoint| y_field(s).0;
        let yphi_fn = |s: &PolarPoint| y_field(s).1;
        let lc_r = deriv_along_x(&yr_fn) - p.r * xphi * yphi;
        let lc_phi = deriv_along_x(&yphi_fn) + (xr * yphi + xphi * yr) / p.r;

        // g(X, Y)·V − g(V, Y)·X with V = r⁻¹∂r.
        let g_xy = xr * yr + p.r * p.r * xphi * yphi;
        let g_vy = yr / p.r;
        let extra_r = g_xy / p.r - g_vy * xr;
        let extra_phi = -g_vy * xphi;

        let res = TangentVec::new(*p, nabla_r - lc_r - extra_r, nabla_phi - lc_phi - extra_phi);
        self.norm(&res)
    }

    /// Burgers vector of a sub-rectangle: the integral of the transported
    /// torsion density over D = [r_start, r_start + alpha·b] ×
    /// [phi_start, phi_start + beta·eps/b], referred to the point `ref_p` —
    /// midpoint quadrature on an m×m grid of Π^ref(T(∂r, ∂φ)) against dr dφ.
    ///
    /// Analytically this equals alpha·beta·eps · (r⁻¹∂φ) at `ref_p`; the
    /// quadrature is performed honestly as a sum.
    pub fn burgers_integral(
        &self,
        r_start: f64,
        alpha: f64,
        phi_start: f64,
        beta: f64,
        ref_p: &PolarPoint,
        m: usize,
    ) -> Result<TangentVec> {
        if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParams(format!(
                "rectangle fractions alpha={alpha}, beta={beta} must lie in [0, 1]"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidParams("quadrature resolution m must be >= 1".into()));
        }
        let dr_total = alpha * self.b;
        let dphi_total = beta * self.total_angle;
        self.require_inside(&PolarPoint::new(r_start, phi_start))?;
        self.require_inside(&PolarPoint::new(r_start + dr_total, phi_start + dphi_total))?;
        self.require_inside(ref_p)?;

        let mut coeff1 = 0.0;
        let mut coeff2 = 0.0;
        if dr_total > 0.0 && dphi_total > 0.0 {
            let dr = dr_total / m as f64;
            let dphi = dphi_total / m as f64;
            let w = dr * dphi;
            for ir in 0..m {
                let r = r_start + (ir as f64 + 0.5) * dr;
                for iphi in 0..m {
                    let phi = phi_start + (iphi as f64 + 0.5) * dphi;
                    let s = PolarPoint::new(r, phi);
                    let er = TangentVec::new(s, 1.0, 0.0);
                    let ephi = TangentVec::new(s, 0.0, 1.0);
                    let t = self.torsion(&er, &ephi).expect("shared base");
                    // Accumulate parallel-frame coefficients of Π^ref T(∂r,∂φ).
                    coeff1 += t.comp_r * w;
                    coeff2 += s.r * t.comp_phi * w;
                }
            }
        }
        Ok(TangentVec::new(*ref_p, coeff1, coeff2 / ref_p.r))
    }

    /// Autoparallel flow: starting at `p` with parallel-frame tangent
    /// coefficients (c1, c2) (i.e. velocity c1·∂r + c2·r⁻¹∂φ), the position
    /// after parameter `t`.
    ///
    /// Closed form: r(t) = r0 + c1·t and φ(t) = φ0 + (c2/c1)·ln(r(t)/r0)
    /// (radial-log spiral), degenerating to φ0 + c2·t/r0 for c1 = 0.
    pub fn autoparallel_flow(&self, p: &PolarPoint, c1: f64, c2: f64, t: f64) -> PolarPoint {
        let r = p.r + c1 * t;
        let phi = if c1.abs() > 0.0 {
            p.phi + (c2 / c1) * (r / p.r).ln()
        } else {
            p.phi + c2 * t / p.r
        };
        PolarPoint::new(r, phi)
    }
}
