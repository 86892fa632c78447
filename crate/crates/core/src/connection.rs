//! Connections on the trivial principal G-bundle over the surface, modeled
//! as Gamma-equivariant Lie-algebra-valued 1-forms assembled from compactly
//! supported atoms, plus the holonomy integrator and the prescribed-holonomy
//! tube construction.
//!
//! Sign convention (fixed once, everything else derives from it): transport
//! solves h' = -theta(gamma') h, so in the abelian case the holonomy is
//! exp(-integral of theta). Concatenation "p1 then p2" has holonomy
//! Hol(p2) * Hol(p1).

use crate::group::{ConjClassRep, FuchsianRep, GroupError};
use crate::hyp2::{dist, DiskPoint, GeodesicSegment, MoebiusIsometry};
use crate::lie::{self, LieAlgebraElement, LieGroupElement, Target};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

/// Tube speed profiles vanish for t outside [delta, 1 - delta].
pub const TUBE_RAMP_DELTA: f64 = 0.05;

/// Hyperbolic clearance kept between atom supports, domain walls, and
/// avoided paths (on top of the support radii).
pub const SUPPORT_CLEARANCE: f64 = 0.05;

/// Hard cap on integration steps per holonomy call.
pub const MAX_STEPS: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum ConnectionError {
    #[error("atom support violates {0}")]
    SupportViolation(String),
    #[error("path is not contiguous at segment {0}")]
    PathNotContiguous(usize),
    #[error("holonomy tolerance {tol} not met at {steps} steps (est {est})")]
    IntegrationFailed { tol: f64, steps: usize, est: f64 },
    #[error("no admissible tube location on the loop ({0})")]
    TubePlacement(String),
    #[error("target tag mismatch: form is {0}, value is {1}")]
    TargetMismatch(Target, Target),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Lie(#[from] lie::LieError),
    #[error(transparent)]
    Hyp(#[from] crate::hyp2::HypError),
}

pub type Result<T> = std::result::Result<T, ConnectionError>;

/// The radial bump profile (1 - (r/rho)^2)^3, C^2 at the support boundary.
pub fn bump_profile(r: f64, rho: f64) -> f64 {
    if r.abs() >= rho {
        return 0.0;
    }
    let t = 1.0 - (r / rho) * (r / rho);
    t * t * t
}

/// d/dr of the bump profile.
pub fn bump_profile_deriv(r: f64, rho: f64) -> f64 {
    if r.abs() >= rho {
        return 0.0;
    }
    let t = 1.0 - (r / rho) * (r / rho);
    -6.0 * r / (rho * rho) * t * t
}

/// Derivative of the flattened ramp psi: psi = 0 before delta, 1 after
/// 1 - delta, quintic smoothstep between; the integral of the derivative
/// over [0, 1] is exactly 1.
pub fn ramp_deriv(t: f64) -> f64 {
    let d = TUBE_RAMP_DELTA;
    if t <= d || t >= 1.0 - d {
        return 0.0;
    }
    let tau = (t - d) / (1.0 - 2.0 * d);
    30.0 * tau * tau * (tau - 1.0) * (tau - 1.0) / (1.0 - 2.0 * d)
}

/// Ball atom: theta = phi(dist(z, center)) * <covector, xi> * value.
#[derive(Debug, Clone)]
pub struct BallAtom {
    pub center: DiskPoint,
    /// hyperbolic support radius
    pub radius: f64,
    /// constant covector in disk-chart coordinates
    pub covector: [f64; 2],
    pub value: LieAlgebraElement,
}

/// Tube atom on a sub-arc of a free geodesic loop, in Fermi coordinates
/// (s = arclength along the axis, d = distance to it):
/// theta = phi(d) * psi'((s - s0)/L) / L * ds * value.
#[derive(Debug, Clone)]
pub struct TubeAtom {
    /// isometry sending the axis to the real diameter (marked point to 0,
    /// attracting endpoint towards +1)
    pub to_axis_std: MoebiusIsometry,
    pub s_start: f64,
    pub arc_len: f64,
    /// transverse support radius
    pub radius: f64,
    /// tube algebra value u; the holonomy along the central sub-arc is
    /// exp(-u) under the fixed sign convention
    pub value: LieAlgebraElement,
}

impl TubeAtom {
    /// Fermi coordinates of a disk point: (s, d, dzeta/dz / zeta).
    fn fermi(&self, z: Complex64) -> (f64, f64, Complex64) {
        let w = self.to_axis_std.apply_complex(z);
        let dw = self.to_axis_std.derivative(z);
        // Cayley map to the upper half plane: real diameter -> imaginary axis
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let zeta = i * (one + w) / (one - w);
        let dzeta = (2.0 * i / ((one - w) * (one - w))) * dw;
        let r = zeta.norm();
        let s = r.ln();
        let d = (r / zeta.im.max(1e-300)).max(1.0).acosh();
        (s, d, dzeta / zeta)
    }

    /// Point on the central geodesic at arclength `s` from the marked point.
    pub fn central_point(&self, s: f64) -> DiskPoint {
        let x = Complex64::new((s / 2.0).tanh(), 0.0);
        let w = self.to_axis_std.inverse().apply_complex(x);
        DiskPoint { re: w.re, im: w.im }
    }
}

#[derive(Debug, Clone)]
pub enum BumpAtom {
    Ball(BallAtom),
    Tube(TubeAtom),
}

impl BumpAtom {
    pub fn value(&self) -> &LieAlgebraElement {
        match self {
            BumpAtom::Ball(b) => &b.value,
            BumpAtom::Tube(t) => &t.value,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            BumpAtom::Ball(b) => b.radius,
            BumpAtom::Tube(t) => t.radius,
        }
    }

    /// Scalar coefficient of the atom's 1-form at (z, xi): the atom value
    /// scaled by this gives theta(z)(xi).
    fn coefficient(&self, z: Complex64, xi: Complex64) -> f64 {
        match self {
            BumpAtom::Ball(b) => {
                let p = DiskPoint { re: z.re, im: z.im };
                let phi = bump_profile(dist(p, b.center), b.radius);
                if phi == 0.0 {
                    return 0.0;
                }
                phi * (b.covector[0] * xi.re + b.covector[1] * xi.im)
            }
            BumpAtom::Tube(t) => {
                let (s, d, dlog) = t.fermi(z);
                let phi = bump_profile(d, t.radius);
                if phi == 0.0 {
                    return 0.0;
                }
                let ramp = ramp_deriv((s - t.s_start) / t.arc_len);
                if ramp == 0.0 {
                    return 0.0;
                }
                let ds_xi = (dlog * xi).re;
                phi * ramp / t.arc_len * ds_xi
            }
        }
    }

    /// Sample points covering the support: every support point lies within
    /// `radius()` of one of these.
    fn support_samples(&self) -> Vec<DiskPoint> {
        match self {
            BumpAtom::Ball(b) => vec![b.center],
            BumpAtom::Tube(t) => (0..=64)
                .map(|i| t.central_point(t.s_start + t.arc_len * i as f64 / 64.0))
                .collect(),
        }
    }
}

/// Entry-wise gap between two group elements (mod the quaternion sign for
/// SU(2)). Used as the integrator's convergence measure: unlike the group
/// metrics (acos for SU(2), the sqrt gauge for Heisenberg) it stays linear
/// near zero, so roundoff at 1e-14 entry scale does not read as 1e-7.
fn entry_gap(g: &LieGroupElement, h: &LieGroupElement) -> f64 {
    match (g, h) {
        (LieGroupElement::Su2(a), LieGroupElement::Su2(b)) => {
            let plus = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            let minus = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x + y).abs())
                .fold(0.0, f64::max);
            plus.min(minus)
        }
        _ => g
            .entries()
            .iter()
            .zip(h.entries())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max),
    }
}

/// Richardson-extrapolate a 4th-order pair of results (n and 2n steps):
/// (16 fine - coarse) / 15 entry-wise. This buys roughly two extra digits,
/// which the Heisenberg gauge metric needs since it takes a square root of
/// the central coordinate.
fn richardson(coarse: &LieGroupElement, fine: &LieGroupElement) -> LieGroupElement {
    match (coarse, fine) {
        (LieGroupElement::Abelian(c), LieGroupElement::Abelian(f)) => LieGroupElement::Abelian(
            c.iter().zip(f).map(|(c, f)| (16.0 * f - c) / 15.0).collect(),
        ),
        (LieGroupElement::Heisenberg(c), LieGroupElement::Heisenberg(f)) => {
            let mut out = [0.0; 3];
            for i in 0..3 {
                out[i] = (16.0 * f[i] - c[i]) / 15.0;
            }
            LieGroupElement::Heisenberg(out)
        }
        (LieGroupElement::Su2(c), LieGroupElement::Su2(f)) => {
            let sign = if c.iter().zip(f).map(|(x, y)| x * y).sum::<f64>() < 0.0 {
                -1.0
            } else {
                1.0
            };
            let mut q = [0.0; 4];
            for i in 0..4 {
                q[i] = (16.0 * f[i] - sign * c[i]) / 15.0;
            }
            let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut q {
                *x /= n;
            }
            LieGroupElement::Su2(q)
        }
        _ => fine.clone(),
    }
}

/// Holonomy value with the integrator's own accuracy estimate.
#[derive(Debug, Clone)]
pub struct HolonomyResult {
    pub value: LieGroupElement,
    pub est_error: f64,
    pub steps: usize,
}

/// An equivariant connection 1-form: a sum of atoms supported strictly
/// inside the Dirichlet domain, extended to the disk by deck transformations.
pub struct ConnectionForm {
    rep: Arc<FuchsianRep>,
    target: Target,
    /// coordinate dimension for the abelian target (ignored otherwise)
    dim: usize,
    atoms: Vec<BumpAtom>,
    /// deck copies of the atom supports near the fundamental domain,
    /// built on first use and dropped whenever an atom is added
    support_copies: std::sync::Mutex<Option<Arc<Vec<(DiskPoint, f64)>>>>,
}

impl ConnectionForm {
    pub fn new(rep: Arc<FuchsianRep>, target: Target, dim: usize) -> Self {
        ConnectionForm {
            rep,
            target,
            dim,
            atoms: Vec::new(),
            support_copies: std::sync::Mutex::new(None),
        }
    }

    pub fn rep(&self) -> &FuchsianRep {
        &self.rep
    }

    pub fn rep_arc(&self) -> Arc<FuchsianRep> {
        self.rep.clone()
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn atoms(&self) -> &[BumpAtom] {
        &self.atoms
    }

    pub fn zero_value(&self) -> LieAlgebraElement {
        match self.target {
            Target::Abelian => LieAlgebraElement::Abelian(vec![0.0; self.dim]),
            Target::Su2 => LieAlgebraElement::Su2([0.0; 3]),
            Target::Heisenberg => LieAlgebraElement::Heisenberg([0.0; 3]),
        }
    }

    pub fn identity(&self) -> LieGroupElement {
        LieGroupElement::identity(self.target, self.dim)
    }

    /// Add an atom after checking the support invariants: the support stays
    /// strictly inside the Dirichlet domain (so all deck translates are
    /// pairwise disjoint) and is disjoint from every existing atom.
    pub fn add_atom(&mut self, atom: BumpAtom) -> Result<()> {
        if atom.value().target() != self.target {
            return Err(ConnectionError::TargetMismatch(
                self.target,
                atom.value().target(),
            ));
        }
        let samples = atom.support_samples();
        for p in &samples {
            let m = self.rep.wall_margin(*p);
            if m < atom.radius() + SUPPORT_CLEARANCE {
                return Err(ConnectionError::SupportViolation(format!(
                    "domain wall margin {m:.4} < radius {} + clearance",
                    atom.radius()
                )));
            }
        }
        for old in &self.atoms {
            let need = atom.radius() + old.radius() + SUPPORT_CLEARANCE;
            for p in &samples {
                for q in old.support_samples() {
                    if dist(*p, q) < need {
                        return Err(ConnectionError::SupportViolation(format!(
                            "atom supports overlap (separation < {need:.4})"
                        )));
                    }
                }
            }
        }
        self.atoms.push(atom);
        *self.support_copies.lock().unwrap() = None;
        Ok(())
    }

    /// All deck translates of atom supports whose centers land within
    /// `R_ENUM` of the origin.  Chunks and quadrature pieces are always
    /// deck-translated to the fundamental domain before use, so every
    /// support copy a reduced point can touch shows up in this list.
    pub(crate) fn support_copy_list(&self) -> Arc<Vec<(DiskPoint, f64)>> {
        if let Some(c) = self.support_copies.lock().unwrap().as_ref() {
            return c.clone();
        }
        const R_ENUM: f64 = 4.5;
        // cover each atom by balls around its support samples; tube samples
        // sit arc_len/64 apart along the core, so pad their radius by half
        // the spacing to keep the cover honest
        let seeds: Vec<(DiskPoint, f64)> = self
            .atoms
            .iter()
            .flat_map(|atom| {
                let slack = match atom {
                    BumpAtom::Tube(t) => t.arc_len / 128.0,
                    BumpAtom::Ball(_) => 0.0,
                };
                let r = atom.radius() + slack;
                atom.support_samples().into_iter().map(move |p| (p, r))
            })
            .collect();
        let center_max = seeds
            .iter()
            .map(|(p, _)| dist(DiskPoint::ORIGIN, *p))
            .fold(0.0f64, f64::max);
        // pad the search ball: word prefixes are not monotone in
        // translation distance, so pruning at the target radius could
        // disconnect the search from elements we still need
        let keep = R_ENUM + center_max + 2.5;
        let gens: Vec<MoebiusIsometry> = (0..4u8)
            .flat_map(|i| {
                [
                    crate::group::Letter::new(i, false),
                    crate::group::Letter::new(i, true),
                ]
            })
            .map(|l| self.rep.generator(l))
            .collect();
        let key = |p: DiskPoint| -> (i64, i64) {
            ((p.re * 1e7).round() as i64, (p.im * 1e7).round() as i64)
        };
        let mut seen = std::collections::HashSet::new();
        let mut frontier = vec![MoebiusIsometry::rotation(0.0)];
        seen.insert(key(DiskPoint::ORIGIN));
        let mut copies = Vec::new();
        while let Some(g) = frontier.pop() {
            for (p, r) in &seeds {
                let c = g.apply(*p);
                if dist(DiskPoint::ORIGIN, c) <= R_ENUM {
                    copies.push((c, *r));
                }
            }
            for h in &gens {
                let gh = g.compose(h);
                let o = gh.apply(DiskPoint::ORIGIN);
                if dist(DiskPoint::ORIGIN, o) <= keep && seen.insert(key(o)) {
                    frontier.push(gh);
                }
            }
        }
        let out = Arc::new(copies);
        *self.support_copies.lock().unwrap() = Some(out.clone());
        out
    }

    /// Hyperbolic distance from `p` to the nearest listed support copy,
    /// measured past its radius (positive means outside every copy).
    pub(crate) fn support_clearance(p: DiskPoint, copies: &[(DiskPoint, f64)]) -> f64 {
        copies
            .iter()
            .map(|(c, r)| dist(p, *c) - r)
            .fold(f64::INFINITY, f64::min)
    }

    /// True when the whole segment provably misses every support copy.
    /// Clearance is 1-Lipschitz along a geodesic, so a midpoint clearing
    /// half the length certifies the segment; otherwise bisect.
    fn segment_clear(&self, seg: &GeodesicSegment, copies: &[(DiskPoint, f64)]) -> bool {
        self.segment_clear_depth(seg, copies, 0)
    }

    fn segment_clear_depth(
        &self,
        seg: &GeodesicSegment,
        copies: &[(DiskPoint, f64)],
        depth: u32,
    ) -> bool {
        if !seg.length.is_finite() {
            return false;
        }
        let mid = seg.point_at(seg.length / 2.0);
        if Self::support_clearance(mid, copies) > seg.length / 2.0 + 1e-3 {
            return true;
        }
        if seg.length < 0.05 || depth >= 12 {
            return false;
        }
        let left = GeodesicSegment::between(seg.start, mid);
        let right = GeodesicSegment::between(mid, seg.end);
        self.segment_clear_depth(&left, copies, depth + 1)
            && self.segment_clear_depth(&right, copies, depth + 1)
    }

    /// Evaluate the equivariant form at (z, xi): reduce z into the
    /// fundamental domain, transport the tangent by the (conformal) deck
    /// derivative, and sum atom contributions.
    pub fn evaluate(&self, z: DiskPoint, xi: Complex64) -> Result<LieAlgebraElement> {
        if self.atoms.is_empty() {
            return Ok(self.zero_value());
        }
        let (z0, w) = self.rep.dirichlet_reduce(z)?;
        let m = self.rep.rep_matrix(&w);
        let xi0 = m.derivative(z.to_complex()) * xi;
        Ok(self.evaluate_local(z0.to_complex(), xi0))
    }

    /// Sum atom 1-forms at a point assumed to already lie in (a small
    /// neighborhood of) the fundamental domain; no deck reduction.
    pub fn evaluate_local(&self, z: Complex64, xi: Complex64) -> LieAlgebraElement {
        let mut out = self.zero_value();
        for atom in &self.atoms {
            let c = atom.coefficient(z, xi);
            if c != 0.0 {
                out = out
                    .add(&atom.value().scaled(c))
                    .expect("atom targets checked at insertion");
            }
        }
        out
    }

    /// Transport generator A(s) = -theta(gamma(s), gamma'(s)).
    fn transport_a(&self, seg: &GeodesicSegment, s: f64) -> Result<LieAlgebraElement> {
        Ok(self
            .evaluate(seg.point_at(s), seg.tangent_at(s))?
            .scaled(-1.0))
    }

    /// Fixed-step 4th-order Magnus integration of one segment
    /// (two-point Gauss-Legendre per step).
    fn segment_holonomy(&self, seg: &GeodesicSegment, n: usize) -> Result<LieGroupElement> {
        const C: f64 = 0.288_675_134_594_812_9; // sqrt(3)/6
        let h = seg.length / n as f64;
        let mut hol = self.identity();
        for i in 0..n {
            let s = i as f64 * h;
            let a1 = self.transport_a(seg, s + (0.5 - C) * h)?;
            let a2 = self.transport_a(seg, s + (0.5 + C) * h)?;
            let mut omega = a1.add(&a2)?.scaled(h / 2.0);
            if self.target != Target::Abelian {
                let br = a2.bracket(&a1)?.scaled(3f64.sqrt() * h * h / 12.0);
                omega = omega.add(&br)?;
            }
            hol = lie::exp(&omega).multiply(&hol)?;
        }
        Ok(hol)
    }

    /// Holonomy along a contiguous piecewise-geodesic path, adaptive in the
    /// step count until step halving changes the result by less than `tol`
    /// in the entry-wise gap.
    pub fn holonomy(&self, path: &[GeodesicSegment], tol: f64) -> Result<HolonomyResult> {
        for (i, pair) in path.windows(2).enumerate() {
            if pair[0].end.euclid_dist(pair[1].start) > 1e-9 {
                return Err(ConnectionError::PathNotContiguous(i + 1));
            }
        }
        if self.atoms.is_empty() {
            return Ok(HolonomyResult {
                value: self.identity(),
                est_error: 0.0,
                steps: 0,
            });
        }
        // split long segments and deck-translate each chunk back near the
        // fundamental domain: holonomy is equivariant, and working far from
        // the disk boundary keeps the arithmetic well conditioned (a period
        // of a long axis ends within 1e-11 of the unit circle)
        let mut chunks: Vec<GeodesicSegment> = Vec::new();
        for seg in path {
            if seg.length < 1e-14 {
                continue;
            }
            if !seg.length.is_finite() {
                return Err(ConnectionError::IntegrationFailed {
                    tol,
                    steps: 0,
                    est: f64::INFINITY,
                });
            }
            let parts = (seg.length / 2.0).ceil().max(1.0) as usize;
            for k in 0..parts {
                let s0 = seg.length * k as f64 / parts as f64;
                let s1 = seg.length * (k + 1) as f64 / parts as f64;
                let sub = GeodesicSegment::between(seg.point_at(s0), seg.point_at(s1));
                let (_, w) = self.rep.dirichlet_reduce(sub.point_at(sub.length / 2.0))?;
                if w.is_empty() {
                    chunks.push(sub);
                } else {
                    chunks.push(sub.transformed(&self.rep.rep_matrix(&w)));
                }
            }
        }
        self.integrate_chunks(&chunks, tol)
    }

    /// Holonomy along the geodesic ray from the origin: `length` in the
    /// unit direction `dir`.  Unlike [`holonomy`](Self::holonomy) this never
    /// represents the far endpoint in disk coordinates — it walks the ray a
    /// chunk at a time and reduces back into the fundamental domain after
    /// every step, so it stays exact for rays of any length.
    pub fn holonomy_ray(&self, dir: Complex64, length: f64, tol: f64) -> Result<HolonomyResult> {
        if self.atoms.is_empty() || length < 1e-14 {
            return Ok(HolonomyResult {
                value: self.identity(),
                est_error: 0.0,
                steps: 0,
            });
        }
        if !length.is_finite() {
            return Err(ConnectionError::IntegrationFailed {
                tol,
                steps: 0,
                est: f64::INFINITY,
            });
        }
        let parts = (length / 2.0).ceil().max(1.0) as usize;
        let step = length / parts as f64;
        let mut chunks = Vec::with_capacity(parts);
        let mut q = DiskPoint::ORIGIN;
        let mut u = dir / dir.norm();
        for _ in 0..parts {
            // frame at q: the geodesic through the origin is a diameter,
            // so stepping and tangent transport are elementary there
            let to_o = MoebiusIsometry::point_to_origin(q);
            let u0 = to_o.derivative(q.to_complex()) * u;
            let u0 = u0 / u0.norm();
            let e0 = u0 * (step / 2.0).tanh();
            let back = to_o.inverse();
            let e = DiskPoint::from_complex(back.apply_complex(e0))?;
            chunks.push(GeodesicSegment::between(q, e));
            let t = back.derivative(e0) * u0;
            let (e_red, w) = self.rep.dirichlet_reduce(e)?;
            let t = if w.is_empty() {
                t
            } else {
                self.rep.rep_matrix(&w).derivative(e.to_complex()) * t
            };
            q = e_red;
            u = t / t.norm();
        }
        self.integrate_chunks(&chunks, tol)
    }

    /// Shared back end: integrate short deck-translated chunks, adaptively
    /// in the step count until halving moves the result less than the
    /// per-chunk share of `tol`.
    fn integrate_chunks(&self, chunks: &[GeodesicSegment], tol: f64) -> Result<HolonomyResult> {
        let seg_tol = tol / chunks.len().max(1) as f64;
        // a geodesic grazing the edge of a bump of radius rho picks up a
        // contribution ~ (2*rho*delta)^{7/2} / rho^6 over a window of width
        // 2*sqrt(2*rho*delta); grazes worth more than seg_tol therefore span
        // at least ~2*(seg_tol*rho^6)^{1/7}, and the initial grid has to be
        // finer than that or step halving converges around the bump entirely
        let rho_min = self
            .atoms
            .iter()
            .map(|a| a.radius())
            .fold(f64::INFINITY, f64::min);
        let h0 = (seg_tol.max(1e-13) * rho_min.powi(6)).powf(1.0 / 7.0) / 2.0;
        let copies = self.support_copy_list();
        let mut value = self.identity();
        let mut est_error = 0.0;
        let mut steps = 0usize;
        for seg in chunks {
            // most of a long geodesic runs outside every bump support,
            // where the transport is exactly the identity
            if self.segment_clear(seg, &copies) {
                continue;
            }
            let mut n = 8usize
                .max((seg.length * 4.0) as usize)
                .max((seg.length / h0).ceil() as usize);
            let mut coarse = self.segment_holonomy(seg, n)?;
            loop {
                let fine = self.segment_holonomy(seg, 2 * n)?;
                let err = entry_gap(&coarse, &fine);
                if err < seg_tol {
                    value = richardson(&coarse, &fine).multiply(&value)?;
                    est_error += err;
                    steps += 2 * n;
                    break;
                }
                n *= 2;
                coarse = fine;
                if n > MAX_STEPS {
                    return Err(ConnectionError::IntegrationFailed {
                        tol,
                        steps: n,
                        est: err,
                    });
                }
            }
        }
        Ok(HolonomyResult {
            value,
            est_error,
            steps,
        })
    }

    /// Supremum over deterministic support grids (100 x 100 per atom) of the
    /// curvature norm |dtheta + 1/2 [theta, theta]| measured against the
    /// hyperbolic area form.
    pub fn curvature_bound(&self) -> f64 {
        let mut sup: f64 = 0.0;
        for atom in &self.atoms {
            let mut best = (0.0f64, Complex64::new(0.0, 0.0));
            for z in curvature_grid(atom) {
                let v = self.curvature_norm_at(z);
                if v > best.0 {
                    best = (v, z);
                }
            }
            // zoom in around the grid argmax so the coarse grid does not
            // undershoot the true supremum
            let mut h = atom.radius() / 100.0;
            for _ in 0..10 {
                let center = best.1;
                for i in -2i32..=2 {
                    for j in -2i32..=2 {
                        let z = center + Complex64::new(i as f64 * h, j as f64 * h);
                        if z.norm() < 0.999 {
                            let v = self.curvature_norm_at(z);
                            if v > best.0 {
                                best = (v, z);
                            }
                        }
                    }
                }
                h /= 3.0;
            }
            sup = sup.max(best.0);
        }
        sup
    }

    /// Pointwise curvature norm: F = d(theta)(e1, e2) + [theta(e1), theta(e2)]
    /// by central differences, divided by the hyperbolic area density.
    pub fn curvature_norm_at(&self, z: Complex64) -> f64 {
        let h = 1e-5;
        let ex = Complex64::new(1.0, 0.0);
        let ey = Complex64::new(0.0, 1.0);
        let t2_xp = self.evaluate_local(z + h * ex, ey);
        let t2_xm = self.evaluate_local(z - h * ex, ey);
        let t1_yp = self.evaluate_local(z + h * ey, ex);
        let t1_ym = self.evaluate_local(z - h * ey, ex);
        let dtheta = t2_xp
            .add(&t2_xm.scaled(-1.0))
            .unwrap()
            .add(&t1_yp.scaled(-1.0))
            .unwrap()
            .add(&t1_ym)
            .unwrap()
            .scaled(1.0 / (2.0 * h));
        let t1 = self.evaluate_local(z, ex);
        let t2 = self.evaluate_local(z, ey);
        let f = dtheta.add(&t1.bracket(&t2).unwrap()).unwrap();
        let lambda2 = {
            let l = 2.0 / (1.0 - z.norm_sqr());
            l * l
        };
        f.norm() / lambda2
    }

    /// Build a tube atom on the class's free geodesic loop making the
    /// holonomy along connector-loop-connector^-1 equal to `target`,
    /// accounting for whatever holonomy the existing atoms already produce.
    /// The caller adds the returned atom with [`ConnectionForm::add_atom`].
    pub fn prescribed_tube(
        &self,
        class: &ConjClassRep,
        target: &LieGroupElement,
        avoid: &[GeodesicSegment],
    ) -> Result<BumpAtom> {
        if target.target() != self.target {
            return Err(ConnectionError::TargetMismatch(self.target, target.target()));
        }
        let m = self.rep.rep_matrix(&class.primitive_root);
        let (_, att) = m.axis_endpoints()?;
        let t = MoebiusIsometry::point_to_origin(class.marked_point);
        let to_axis_std = MoebiusIsometry::rotation(-t.apply_complex(att).arg()).compose(&t);
        let tau = class.loop_length;

        // the connector must never cross the tube either
        let mut avoid_all: Vec<GeodesicSegment> = vec![class.connector];
        avoid_all.extend_from_slice(avoid);

        let (s0, arc_len, radius, translate) = self.find_tube_arc(&to_axis_std, tau, &avoid_all)?;

        // the atom lives on the deck translate of the sub-arc that sits in
        // the fundamental domain; the holonomy bookkeeping below still runs
        // along the original axis
        let tube_shell = TubeAtom {
            to_axis_std: to_axis_std.compose(&translate.inverse()),
            s_start: s0,
            arc_len,
            radius,
            value: self.zero_value(),
        };
        let inv = to_axis_std.inverse();
        let central_orig = |s: f64| {
            let x = Complex64::new((s / 2.0).tanh(), 0.0);
            let w = inv.apply_complex(x);
            DiskPoint { re: w.re, im: w.im }
        };
        // holonomy bookkeeping at a tolerance well below the 1e-6 contract;
        // the Heisenberg gauge metric squares the requirement on the
        // central coordinate, so go tighter there
        let tol = if self.target == Target::Heisenberg {
            1e-12
        } else {
            1e-10
        };
        let a = self
            .holonomy(std::slice::from_ref(&class.connector), tol)?
            .value;
        let before = GeodesicSegment::between(class.marked_point, central_orig(s0));
        let after =
            GeodesicSegment::between(central_orig(s0 + arc_len), m.apply(class.marked_point));
        let h_before = self.holonomy(std::slice::from_ref(&before), tol)?.value;
        let h_after = self.holonomy(std::slice::from_ref(&after), tol)?.value;
        // closed loop = A^-1 (H_after T H_before) A = target
        let needed = a.multiply(target)?.multiply(&a.inverse())?;
        let t_tube = h_after
            .inverse()
            .multiply(&needed)?
            .multiply(&h_before.inverse())?;
        let value = if lie::group_distance(&t_tube, &self.identity())? < 1e-14 {
            self.zero_value()
        } else {
            lie::log(&t_tube).scaled(-1.0)
        };
        Ok(BumpAtom::Tube(TubeAtom { value, ..tube_shell }))
    }

    /// Search the loop for a sub-arc whose tube stays inside the domain,
    /// clear of existing atoms and of the avoided paths. Deterministic:
    /// first fit over (radius, arc fraction, start offset) grids.
    fn find_tube_arc(
        &self,
        to_axis_std: &MoebiusIsometry,
        tau: f64,
        avoid: &[GeodesicSegment],
    ) -> Result<(f64, f64, f64, MoebiusIsometry)> {
        let inv = to_axis_std.inverse();
        let central = |s: f64| {
            let x = Complex64::new((s / 2.0).tanh(), 0.0);
            let w = inv.apply_complex(x);
            DiskPoint { re: w.re, im: w.im }
        };
        // reduced samples of the avoided paths
        let mut avoid_pts: Vec<DiskPoint> = Vec::new();
        for seg in avoid {
            // sample densely enough that the gap stays below the clearance
            let n = 64.max((seg.length / (0.5 * SUPPORT_CLEARANCE)).ceil() as usize);
            for i in 0..=n {
                let p = seg.point_at(seg.length * i as f64 / n as f64);
                avoid_pts.push(self.rep.dirichlet_reduce(p)?.0);
            }
        }
        for &radius in &[0.30, 0.20, 0.14, 0.10, 0.07, 0.05, 0.038, 0.028] {
            for &frac in &[0.45, 0.30, 0.20, 0.12, 0.07, 0.04] {
                let arc_len = (tau * frac).min(1.2).max(0.15);
                let n_off = 64.max((tau * 16.0) as usize);
                for k in 0..n_off {
                    let s0 = (tau - arc_len) * k as f64 / n_off as f64;
                    // candidate deck translate: bring the sub-arc into the
                    // fundamental domain around its midpoint
                    let (_, w) = self.rep.dirichlet_reduce(central(s0 + arc_len / 2.0))?;
                    let g = self.rep.rep_matrix(&w);
                    let ok = (0..=32).all(|i| {
                        let p = g.apply(central(s0 + arc_len * i as f64 / 32.0));
                        if self.rep.wall_margin(p) < radius + SUPPORT_CLEARANCE {
                            return false;
                        }
                        if avoid_pts
                            .iter()
                            .any(|q| dist(p, *q) < radius + SUPPORT_CLEARANCE)
                        {
                            return false;
                        }
                        for old in &self.atoms {
                            let need = radius + old.radius() + SUPPORT_CLEARANCE;
                            if old.support_samples().iter().any(|q| dist(p, *q) < need) {
                                return false;
                            }
                        }
                        true
                    });
                    if ok {
                        return Ok((s0, arc_len, radius, g));
                    }
                }
            }
        }
        Err(ConnectionError::TubePlacement(format!(
            "loop length {tau:.3}: no sub-arc clear of walls, atoms, and {} avoided paths",
            avoid.len()
        )))
    }
}

/// Independent abelian oracle: -integral of theta along the path by
/// composite Simpson quadrature with `n` panels per segment, returned as
/// the log-holonomy coordinates.
pub fn abelian_log_holonomy_quadrature(
    form: &ConnectionForm,
    path: &[GeodesicSegment],
    n: usize,
) -> Result<Vec<f64>> {
    assert_eq!(form.target(), Target::Abelian);
    let mut total = vec![0.0; form.zero_value().coords().len()];
    for seg in path {
        if seg.length < 1e-14 {
            continue;
        }
        let h = seg.length / n as f64;
        for i in 0..n {
            let s = i as f64 * h;
            for (node, wgt) in [(s, 1.0), (s + h / 2.0, 4.0), (s + h, 1.0)] {
                let v = form.evaluate(seg.point_at(node), seg.tangent_at(node))?;
                for (acc, x) in total.iter_mut().zip(v.coords()) {
                    *acc -= wgt * h / 6.0 * x;
                }
            }
        }
    }
    Ok(total)
}

/// Independent Heisenberg oracle: the exact step-2 truncation
/// Omega = int A + 1/2 int [A(s), B(s)] ds with B(s) = int_0^s A, evaluated
/// by 4th-order cumulative Simpson on a fine grid; holonomy = product of
/// exp(Omega) over segments. Exact (up to quadrature) for step-2 nilpotency.
pub fn heisenberg_step2_holonomy(
    form: &ConnectionForm,
    path: &[GeodesicSegment],
    n: usize,
) -> Result<LieGroupElement> {
    assert_eq!(form.target(), Target::Heisenberg);
    let n = n + n % 2; // even panel count
    let mut hol = form.identity();
    for seg in path {
        if seg.length < 1e-14 {
            continue;
        }
        let h = seg.length / n as f64;
        let a: Vec<LieAlgebraElement> = (0..=n)
            .map(|i| form.transport_a(seg, i as f64 * h))
            .collect::<Result<_>>()?;
        // cumulative integral B at the nodes, O(h^4)
        let mut b = vec![form.zero_value(); n + 1];
        for i in (0..n).step_by(2) {
            // half-panel then full-panel Simpson updates
            b[i + 1] = b[i]
                .add(&a[i].scaled(5.0 * h / 12.0))?
                .add(&a[i + 1].scaled(8.0 * h / 12.0))?
                .add(&a[i + 2].scaled(-h / 12.0))?;
            b[i + 2] = b[i]
                .add(&a[i].scaled(h / 3.0))?
                .add(&a[i + 1].scaled(4.0 * h / 3.0))?
                .add(&a[i + 2].scaled(h / 3.0))?;
        }
        let mut omega = b[n].clone();
        // 1/2 int [A, B] by composite Simpson over node pairs
        let mut corr = form.zero_value();
        for i in (0..n).step_by(2) {
            let f0 = a[i].bracket(&b[i])?;
            let f1 = a[i + 1].bracket(&b[i + 1])?;
            let f2 = a[i + 2].bracket(&b[i + 2])?;
            corr = corr
                .add(&f0.scaled(h / 3.0))?
                .add(&f1.scaled(4.0 * h / 3.0))?
                .add(&f2.scaled(h / 3.0))?;
        }
        omega = omega.add(&corr.scaled(0.5))?;
        hol = lie::exp(&omega).multiply(&hol)?;
    }
    Ok(hol)
}

fn curvature_grid(atom: &BumpAtom) -> Vec<Complex64> {
    let n = 100;
    let mut out = Vec::with_capacity(n * n);
    match atom {
        BumpAtom::Ball(b) => {
            let back = MoebiusIsometry::point_to_origin(b.center).inverse();
            for i in 0..n {
                let r = b.radius * (i as f64 + 0.5) / n as f64;
                let x = (r / 2.0).tanh();
                for j in 0..n {
                    let th = std::f64::consts::TAU * j as f64 / n as f64;
                    out.push(back.apply_complex(Complex64::from_polar(x, th)));
                }
            }
        }
        BumpAtom::Tube(t) => {
            let inv = t.to_axis_std.inverse();
            for i in 0..n {
                let s = t.s_start + t.arc_len * (i as f64 + 0.5) / n as f64;
                for j in 0..n {
                    let d = t.radius * (2.0 * (j as f64 + 0.5) / n as f64 - 1.0);
                    // UHP point at Fermi coordinates (s, d)
                    let alpha = (1.0 / d.cosh()).acos().copysign(d);
                    let zeta =
                        Complex64::from_polar(s.exp(), std::f64::consts::FRAC_PI_2 - alpha);
                    // inverse Cayley, then back to the atom's frame
                    let iu = Complex64::new(0.0, 1.0);
                    let w = (zeta - iu) / (zeta + iu);
                    out.push(inv.apply_complex(w));
                }
            }
        }
    }
    out
}
