//! Quasimorphism engines with values in a Lie group: the basepoint (BG)
//! flavor integrates the connection along the geodesic from the basepoint
//! lift to its translate; the homogeneous (HBG) flavor conjugates the
//! cached holonomy around the free geodesic loop of the conjugacy class.
//! Also here: defect measurement with bootstrap statistics, equivalence
//! testing, the lattice-rounded geometric quasimorphism, the 1/m-scaled
//! epsilon-representation builder, and the non-constructibility experiment.

use crate::connection::{self, ConnectionError, ConnectionForm};
use crate::free_qm::{self, FreeQmError, VceVerdict};
use crate::group::{self, FuchsianRep, GroupError, Word};
use crate::hyp2::{GeodesicSegment, GeodesicTriangle};
use crate::lie::{
    self, LieAlgebraElement, LieError, LieGroupElement, Target, HEIS_COVERING_RADIUS,
    SU2_METRIC_SCALE,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};
use thiserror::Error;

/// Diameter of the image of the order-3 cyclic subgroup under the
/// calibrated SU(2) metric: acos(-1/2) / (2 pi) = 1/3, stored analytically
/// so certificates can quote it exactly.
pub const Z3_CALIBRATION: f64 = 1.0 / 3.0;

#[derive(Debug, Error)]
pub enum QmError {
    #[error("engine mode does not support this query: {0}")]
    Mode(&'static str),
    #[error("engines disagree on target: {0} vs {1}")]
    TargetMismatch(Target, Target),
    #[error("value certificate failed: {0}")]
    Certificate(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Free(#[from] FreeQmError),
}

pub type Result<T> = std::result::Result<T, QmError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Bg,
    Hbg,
}

/// Convert an algebra-norm bound into a bound in the calibrated group
/// metric (the "exp-dilation" of a curvature-area estimate).
pub fn dilate(target: Target, x: f64) -> f64 {
    match target {
        Target::Abelian => x,
        Target::Su2 => (x * SU2_METRIC_SCALE).min(0.5),
        Target::Heisenberg => x.max(x.sqrt()),
    }
}

pub struct QuasimorphismEngine {
    form: ConnectionForm,
    rep: Arc<FuchsianRep>,
    mode: Mode,
    tol: f64,
    bound_estimate: f64,
    /// class key -> (loop holonomy h at the marked point, connector holonomy A)
    class_cache: Mutex<HashMap<String, (LieGroupElement, LieGroupElement)>>,
    /// primitive element root -> conjugated primitive value
    element_cache: Mutex<HashMap<String, LieGroupElement>>,
}

impl QuasimorphismEngine {
    pub fn new(form: ConnectionForm, mode: Mode, tol: f64) -> Self {
        let rep = form.rep_arc();
        let bound_estimate = dilate(form.target(), form.curvature_bound() * PI);
        QuasimorphismEngine {
            form,
            rep,
            mode,
            tol,
            bound_estimate,
            class_cache: Mutex::new(HashMap::new()),
            element_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn target(&self) -> Target {
        self.form.target()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn form(&self) -> &ConnectionForm {
        &self.form
    }

    pub fn rep(&self) -> &FuchsianRep {
        &self.rep
    }

    pub fn identity(&self) -> LieGroupElement {
        self.form.identity()
    }

    /// Curvature-area defect bound for a geodesic triangle (area < pi),
    /// pushed through the exponential into the group metric.
    pub fn bound_estimate(&self) -> f64 {
        self.bound_estimate
    }

    /// The same bound for a geodesic 4-gon (area < 2 pi): the scale of the
    /// compact set relating the BG and HBG flavors.
    pub fn k4_estimate(&self) -> f64 {
        dilate(self.form.target(), self.form.curvature_bound() * PI * 2.0)
    }

    pub fn value(&self, w: &Word) -> Result<LieGroupElement> {
        match self.mode {
            Mode::Bg => self.bg_value(w),
            Mode::Hbg => self.hbg_value(w),
        }
    }

    /// Holonomy along the single geodesic from the basepoint lift 0 to
    /// rho(w) * 0. Cached per word so repeated queries are bit-for-bit.
    pub fn bg_value(&self, w: &Word) -> Result<LieGroupElement> {
        let key = w.to_string();
        if let Some(v) = self.element_cache.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let (len, dir) = self.rep.rep_matrix(w).origin_displacement();
        let v = if len < 1e-12 {
            self.identity()
        } else {
            self.form.holonomy_ray(dir, len, self.tol)?.value
        };
        self.element_cache
            .lock()
            .unwrap()
            .entry(key)
            .or_insert(v.clone());
        Ok(v)
    }

    fn class_holonomies(&self, w: &Word) -> Result<(LieGroupElement, LieGroupElement)> {
        let class = self.rep.conj_class_data(w)?;
        if let Some(p) = self.class_cache.lock().unwrap().get(&class.class_key) {
            return Ok(p.clone());
        }
        let h = self
            .form
            .holonomy(std::slice::from_ref(&class.axis_window), self.tol)?
            .value;
        let a = self
            .form
            .holonomy(std::slice::from_ref(&class.connector), self.tol)?
            .value;
        let mut cache = self.class_cache.lock().unwrap();
        let entry = cache.entry(class.class_key).or_insert((h, a));
        Ok(entry.clone())
    }

    /// The homogeneous value: with w = r^e for a primitive root r, returns
    /// the cached conjugated loop holonomy of r raised to the e-th power,
    /// so q(w^n) = q(w)^n holds bit-for-bit whenever w itself is primitive.
    pub fn hbg_value(&self, w: &Word) -> Result<LieGroupElement> {
        if w.is_empty() {
            return Ok(self.identity());
        }
        if self.rep.is_identity(w)? {
            return Ok(self.identity());
        }
        let d = self.rep.decompose(w)?;
        let key = d.root.to_string();
        let base = {
            let cached = self.element_cache.lock().unwrap().get(&key).cloned();
            match cached {
                Some(v) => v,
                None => {
                    let (h, a) = self.class_holonomies(&d.root)?;
                    // loop based at 0: connector, axis period, connector back
                    let q_class = a.inverse().multiply(&h)?.multiply(&a)?;
                    let v = if d.conjugator.is_empty() {
                        q_class
                    } else {
                        let (len, dir) = self
                            .rep
                            .rep_matrix(&d.conjugator)
                            .origin_displacement();
                        let c = if len < 1e-12 {
                            self.identity()
                        } else {
                            self.form.holonomy_ray(dir, len, self.tol)?.value
                        };
                        c.inverse().multiply(&q_class)?.multiply(&c)?
                    };
                    // settle to a normalization fixpoint so v.pow(1) == v
                    // bitwise (su2 products renormalize), making q(w^n) and
                    // q(w)^n the same left-associated chain
                    let mut v = v;
                    for _ in 0..8 {
                        let v2 = v.pow(1);
                        if v2.entries() == v.entries() {
                            break;
                        }
                        v = v2;
                    }
                    self.element_cache
                        .lock()
                        .unwrap()
                        .entry(key)
                        .or_insert(v)
                        .clone()
                }
            }
        };
        Ok(base.pow(d.exponent as i64))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectSample {
    pub x: String,
    pub y: String,
    pub length: usize,
    pub ulam: f64,
    pub geometric: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectReport {
    pub pair_count: usize,
    pub seed: u64,
    pub max_ulam_defect: f64,
    pub max_geometric_defect: f64,
    pub bound_estimate: f64,
    /// (word length, max defect at that length, sample count)
    pub per_length: Vec<(usize, f64, usize)>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    #[serde(skip)]
    pub samples: Vec<DefectSample>,
}

/// Draw a group element within `radius` of the identity in the calibrated
/// metric (monotone bisection along a random algebra direction).
fn sample_in_ball(
    target: Target,
    dim: usize,
    radius: f64,
    rng: &mut impl Rng,
) -> LieGroupElement {
    if radius <= 0.0 {
        return LieGroupElement::identity(target, dim);
    }
    let dir = match target {
        Target::Abelian => {
            LieAlgebraElement::Abelian((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        }
        Target::Su2 => LieAlgebraElement::Su2(std::array::from_fn(|_| rng.gen_range(-1.0..1.0))),
        Target::Heisenberg => {
            LieAlgebraElement::Heisenberg(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
        }
    };
    let n = dir.norm();
    if n < 1e-12 {
        return LieGroupElement::identity(target, dim);
    }
    let dir = dir.scaled(1.0 / n);
    let want = radius * rng.gen_range(0.0..1.0f64);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // grow until past the target distance (the metric is monotone along a ray
    // near the identity at these scales)
    while lie::norm_to_identity(&lie::exp(&dir.scaled(hi))) < want && hi < 1e6 {
        hi *= 2.0;
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if lie::norm_to_identity(&lie::exp(&dir.scaled(mid))) < want {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lie::exp(&dir.scaled(0.5 * (lo + hi)))
}

impl QuasimorphismEngine {
    /// Both defect flavors over the given pairs. The geometric defect
    /// approximates the two-sided compact allowance by sampling conjugators
    /// in a metric ball of the bound-estimate radius (identity included, so
    /// geometric <= Ulam holds by construction).
    pub fn ulam_defect(&self, pairs: &[(Word, Word)], seed: u64) -> Result<DefectReport> {
        let dim = self.form.identity().entries().len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radius = self.bound_estimate;
        let mut ks = vec![self.identity()];
        for _ in 0..7 {
            ks.push(sample_in_ball(self.target(), dim, radius, &mut rng));
        }
        let mut samples = Vec::with_capacity(pairs.len());
        for (x, y) in pairs {
            let xy = x.concat(y);
            let qxy = self.value(&xy)?;
            let qx = self.value(x)?;
            let qy = self.value(y)?;
            let ulam = lie::group_distance(&qxy, &qx.multiply(&qy)?)?;
            let mut geometric = ulam;
            for k in &ks {
                for kp in &ks {
                    let cand = k.multiply(&qx)?.multiply(kp)?.multiply(&qy)?;
                    geometric = geometric.min(lie::group_distance(&qxy, &cand)?);
                }
            }
            samples.push(DefectSample {
                x: x.to_string(),
                y: y.to_string(),
                length: x.len().max(y.len()),
                ulam,
                geometric,
            });
        }
        let max_ulam_defect = samples.iter().map(|s| s.ulam).fold(0.0, f64::max);
        let max_geometric_defect = samples.iter().map(|s| s.geometric).fold(0.0, f64::max);
        let mut by_length: HashMap<usize, Vec<f64>> = HashMap::new();
        for s in &samples {
            by_length.entry(s.length).or_default().push(s.ulam);
        }
        let mut per_length: Vec<(usize, f64, usize)> = by_length
            .iter()
            .map(|(l, v)| (*l, v.iter().copied().fold(0.0, f64::max), v.len()))
            .collect();
        per_length.sort_by_key(|r| r.0);
        let (slope, slope_ci) = bootstrap_max_slope(&by_length, 1000, seed ^ 0x5eed);
        Ok(DefectReport {
            pair_count: pairs.len(),
            seed,
            max_ulam_defect,
            max_geometric_defect,
            bound_estimate: self.bound_estimate,
            per_length,
            slope,
            slope_ci,
            samples,
        })
    }
}

/// Bootstrap the slope of per-length defect maxima against length:
/// resample defects within each length class, take maxima, fit, and report
/// the 95% percentile interval.
pub fn bootstrap_max_slope(
    by_length: &HashMap<usize, Vec<f64>>,
    iters: usize,
    seed: u64,
) -> (f64, (f64, f64)) {
    let mut lengths: Vec<usize> = by_length.keys().copied().collect();
    lengths.sort_unstable();
    let xs: Vec<f64> = lengths.iter().map(|l| *l as f64).collect();
    let maxima: Vec<f64> = lengths
        .iter()
        .map(|l| by_length[l].iter().copied().fold(0.0, f64::max))
        .collect();
    let (_, slope, _) = crate::numerics::linear_fit(&xs, &maxima);
    if lengths.len() < 2 {
        return (slope, (slope, slope));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(iters);
    for _ in 0..iters {
        let resampled: Vec<f64> = lengths
            .iter()
            .map(|l| {
                let v = &by_length[l];
                (0..v.len())
                    .map(|_| v[rng.gen_range(0..v.len())])
                    .fold(0.0, f64::max)
            })
            .collect();
        let (_, s, _) = crate::numerics::linear_fit(&xs, &resampled);
        slopes.push(s);
    }
    slopes.sort_by(|a, b| a.total_cmp(b));
    let lo = slopes[(iters as f64 * 0.025) as usize];
    let hi = slopes[((iters as f64 * 0.975) as usize).min(iters - 1)];
    (slope, (lo, hi))
}

/// Max calibrated distance between two engines' values over the words.
pub fn equivalence_distance(
    e1: &QuasimorphismEngine,
    e2: &QuasimorphismEngine,
    words: &[Word],
) -> Result<f64> {
    if e1.target() != e2.target() {
        return Err(QmError::TargetMismatch(e1.target(), e2.target()));
    }
    let mut max = 0.0f64;
    for w in words {
        max = max.max(lie::group_distance(&e1.value(w)?, &e2.value(w)?)?);
    }
    Ok(max)
}

/// Independent scalar-quadrature oracle for the abelian BG value:
/// coordinates of the log-holonomy along the basepoint geodesic.
pub fn abelian_bg_oracle(form: &ConnectionForm, w: &Word, n: usize) -> Result<Vec<f64>> {
    let end = form.rep().rep_matrix(w).apply(crate::hyp2::DiskPoint::ORIGIN);
    let seg = GeodesicSegment::between(crate::hyp2::DiskPoint::ORIGIN, end);
    if seg.length < 1e-12 {
        return Ok(vec![0.0; form.identity().entries().len()]);
    }
    Ok(connection::abelian_log_holonomy_quadrature(
        form,
        &[seg],
        n,
    )?)
}

/// Stokes oracle for the abelian BG defect of the pair (x, y): the 2-form
/// d theta integrated over the geodesic triangle (0, rho(x) 0, rho(xy) 0),
/// one coordinate at a time. The triangle is subdivided geodesically until
/// the pieces are small, and each piece is deck-translated next to the
/// fundamental domain before the cone quadrature runs: far from the origin
/// the Euclidean footprint of a bump copy shrinks below any fixed grid.
pub fn abelian_stokes_defect(form: &ConnectionForm, x: &Word, y: &Word, n: usize) -> Result<f64> {
    let rep = form.rep();
    let o = crate::hyp2::DiskPoint::ORIGIN;
    let v1 = rep.rep_matrix(x).apply(o);
    let v2 = rep.rep_matrix(&x.concat(y)).apply(o);
    let tri = GeodesicTriangle::new(o, v1, v2);
    if tri.is_degenerate() {
        return Ok(0.0);
    }
    let mut pieces = Vec::new();
    subdivide_triangle(&tri, 0.75, &mut pieces);
    let copies = form.support_copy_list();
    let dim = form.identity().entries().len();
    let mut total = 0.0f64;
    for i in 0..dim {
        let f = |z: Complex64| -> f64 {
            let h = 1e-5;
            let ex = Complex64::new(1.0, 0.0);
            let ey = Complex64::new(0.0, 1.0);
            let eval = |p: Complex64, xi: Complex64| -> f64 {
                let q = crate::hyp2::DiskPoint { re: p.re, im: p.im };
                form.evaluate(q, xi).expect("point inside the disk").coords()[i]
            };
            (eval(z + h * ex, ey) - eval(z - h * ex, ey) - eval(z + h * ey, ex)
                + eval(z - h * ey, ex))
                / (2.0 * h)
        };
        // all pieces share the parent's orientation and deck maps preserve
        // it, so the per-piece |jacobian| integrals carry one common sign
        let mut coord = 0.0f64;
        for piece in &pieces {
            let mid = GeodesicSegment::between(piece.v1, piece.v2);
            let anchor = GeodesicSegment::between(piece.v0, mid.point_at(mid.length / 2.0));
            let (p0, w) = rep.dirichlet_reduce(anchor.point_at(anchor.length / 2.0))?;
            let g = rep.rep_matrix(&w);
            let local = GeodesicTriangle::new(g.apply(piece.v0), g.apply(piece.v1), g.apply(piece.v2));
            // a hyperbolic ball is convex, so the piece sits inside the
            // ball around the reduced anchor through its farthest vertex;
            // pieces clear of every support copy integrate to zero
            let reach = [local.v0, local.v1, local.v2]
                .iter()
                .map(|v| crate::hyp2::dist(p0, *v))
                .fold(0.0f64, f64::max);
            if ConnectionForm::support_clearance(p0, &copies) > reach + 1e-3 {
                continue;
            }
            coord += crate::hyp2::triangle_density_quadrature(&local, n, &f);
        }
        total += coord * coord;
    }
    Ok(total.sqrt())
}

fn subdivide_triangle(t: &GeodesicTriangle, max_side: f64, out: &mut Vec<GeodesicTriangle>) {
    let d01 = crate::hyp2::dist(t.v0, t.v1);
    let d12 = crate::hyp2::dist(t.v1, t.v2);
    let d20 = crate::hyp2::dist(t.v2, t.v0);
    if d01.max(d12).max(d20) <= max_side {
        out.push(*t);
        return;
    }
    let mid = |a, b| {
        let s = GeodesicSegment::between(a, b);
        s.point_at(s.length / 2.0)
    };
    let m01 = mid(t.v0, t.v1);
    let m12 = mid(t.v1, t.v2);
    let m20 = mid(t.v2, t.v0);
    for sub in [
        GeodesicTriangle::new(t.v0, m01, m20),
        GeodesicTriangle::new(m01, t.v1, m12),
        GeodesicTriangle::new(m20, m12, t.v2),
        GeodesicTriangle::new(m01, m12, m20),
    ] {
        subdivide_triangle(&sub, max_side, out);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeQmReport {
    pub covering_radius: f64,
    pub equivalence_max: f64,
    pub rounded_ulam_defect: f64,
    pub rounded_geometric_defect: f64,
    /// triangle-inequality bound: Ulam defect of q plus 4 covering radii
    pub rounded_defect_bound: f64,
}

impl QuasimorphismEngine {
    /// The lattice-rounded geometric quasimorphism value q'(w).
    pub fn lattice_value(&self, w: &Word) -> Result<LieGroupElement> {
        if self.target() != Target::Heisenberg {
            return Err(QmError::Mode("lattice_value needs a Heisenberg engine"));
        }
        Ok(lie::lattice_round(&self.hbg_value(w)?)?)
    }

    /// Report on q' = lattice_round(q): pointwise distance to q over the
    /// words, and both defect flavors of q' over the pairs.
    pub fn lattice_geometric_qm(
        &self,
        words: &[Word],
        pairs: &[(Word, Word)],
        seed: u64,
    ) -> Result<LatticeQmReport> {
        let mut equivalence_max = 0.0f64;
        for w in words {
            let q = self.hbg_value(w)?;
            let qp = lie::lattice_round(&q)?;
            equivalence_max = equivalence_max.max(lie::group_distance(&q, &qp)?);
        }
        let base = self.ulam_defect(pairs, seed)?;
        let mut rounded_ulam = 0.0f64;
        let mut rounded_geometric = 0.0f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ks = vec![self.identity()];
        for _ in 0..7 {
            ks.push(sample_in_ball(
                Target::Heisenberg,
                3,
                self.bound_estimate + 2.0 * HEIS_COVERING_RADIUS,
                &mut rng,
            ));
        }
        for (x, y) in pairs {
            let qxy = self.lattice_value(&x.concat(y))?;
            let qx = self.lattice_value(x)?;
            let qy = self.lattice_value(y)?;
            let ulam = lie::group_distance(&qxy, &qx.multiply(&qy)?)?;
            rounded_ulam = rounded_ulam.max(ulam);
            let mut geo = ulam;
            for k in &ks {
                for kp in &ks {
                    let cand = k.multiply(&qx)?.multiply(kp)?.multiply(&qy)?;
                    geo = geo.min(lie::group_distance(&qxy, &cand)?);
                }
            }
            rounded_geometric = rounded_geometric.max(geo);
        }
        Ok(LatticeQmReport {
            covering_radius: HEIS_COVERING_RADIUS,
            equivalence_max,
            rounded_ulam_defect: rounded_ulam,
            rounded_geometric_defect: rounded_geometric,
            rounded_defect_bound: base.max_ulam_defect + 4.0 * HEIS_COVERING_RADIUS,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonRepReport {
    pub m: u32,
    pub epsilon_measured: f64,
    pub generator_values_distance: f64,
    pub b_power_check: f64,
    pub vce_certified: bool,
    /// (m, epsilon) rows accumulated by the scaling experiment
    pub scaling: Vec<(u32, f64)>,
}

/// Build the HBG engine whose only atom is a tube on the loop of `b`,
/// prescribing q(b) = exp(log(g)/m) away from every generator loop, so that
/// q(generators) = identity and q(b)^m = g.
pub fn epsilon_rep_build(
    rep: Arc<FuchsianRep>,
    generators: &[Word],
    b: &Word,
    g: &LieGroupElement,
    m: u32,
    sample_pairs: &[(Word, Word)],
    tol: f64,
) -> Result<(QuasimorphismEngine, EpsilonRepReport)> {
    let mut vce_certified = !generators.is_empty();
    for gen in generators {
        match (group::to_free_word(b), group::to_free_word(gen)) {
            (Some(fb), Some(fg)) => {
                let cert = free_qm::vce_test(&fb, &fg)?;
                if cert.verdict != VceVerdict::NotEquivalent {
                    vce_certified = false;
                }
            }
            // outside the distinguished free pair: user-asserted
            _ => vce_certified = false,
        }
    }
    let dim = g.entries().len();
    let mut form = ConnectionForm::new(rep.clone(), g.target(), dim);
    let mut avoid: Vec<GeodesicSegment> = Vec::new();
    for gen in generators {
        let class = rep.conj_class_data(gen)?;
        avoid.push(class.connector);
        avoid.push(class.axis_window);
    }
    let class_b = rep.conj_class_data(b)?;
    let target_b = lie::exp(&lie::log(g).scaled(1.0 / m as f64));
    let atom = form.prescribed_tube(&class_b, &target_b, &avoid)?;
    form.add_atom(atom)?;
    let engine = QuasimorphismEngine::new(form, Mode::Hbg, tol);

    let mut generator_values_distance = 0.0f64;
    for gen in generators {
        let v = engine.hbg_value(gen)?;
        generator_values_distance =
            generator_values_distance.max(lie::norm_to_identity(&v));
    }
    let qb = engine.hbg_value(b)?;
    let b_power_check = lie::group_distance(&qb.pow(m as i64), g)?;
    let epsilon_measured = if sample_pairs.is_empty() {
        0.0
    } else {
        engine.ulam_defect(sample_pairs, 7)?.max_ulam_defect
    };
    let report = EpsilonRepReport {
        m,
        epsilon_measured,
        generator_values_distance,
        b_power_check,
        vce_certified,
        scaling: vec![(m, epsilon_measured)],
    };
    Ok((engine, report))
}

/// Run the doubling experiment m0, 2 m0, ..., m0 * 2^(doublings): one
/// engine per m over the same sample family; returns the final report with
/// the full scaling table.
pub fn epsilon_scaling(
    rep: Arc<FuchsianRep>,
    generators: &[Word],
    b: &Word,
    g: &LieGroupElement,
    m0: u32,
    doublings: u32,
    sample_pairs: &[(Word, Word)],
    tol: f64,
) -> Result<EpsilonRepReport> {
    let mut scaling = Vec::new();
    let mut last = None;
    for k in 0..=doublings {
        let m = m0 << k;
        let (_, rep_k) = epsilon_rep_build(
            rep.clone(),
            generators,
            b,
            g,
            m,
            sample_pairs,
            tol,
        )?;
        scaling.push((m, rep_k.epsilon_measured));
        last = Some(rep_k);
    }
    let mut out = last.expect("at least one m");
    out.scaling = scaling;
    Ok(out)
}

/// Numeric cross-check of [`Z3_CALIBRATION`]: diameter of the subgroup
/// generated by the order-3 rotation exp of norm 2 pi / 3.
pub fn z3_calibration_numeric() -> f64 {
    let g = lie::exp(&LieAlgebraElement::Su2([0.0, 0.0, 2.0 * PI / 3.0]));
    let mut d = 0.0f64;
    for k in 1..=2i64 {
        d = d.max(lie::norm_to_identity(&g.pow(k)));
    }
    d
}

#[derive(Debug, Clone, Serialize)]
pub struct CentralGrowthRow {
    pub i: i64,
    pub j: i64,
    pub word: String,
    pub residual: f64,
    pub central: bool,
    pub fit_r2: f64,
    /// central projections satisfy the power recurrence bit-for-bit
    pub recurrence_exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonconstructibleReport {
    /// d(q(x_k), g_k) per distinguished class
    pub residuals: Vec<f64>,
    pub a_identity: f64,
    pub b_identity: f64,
    pub rows: Vec<CentralGrowthRow>,
    /// pairwise VCE verdicts among the free-subgroup inputs
    pub vce: Vec<(String, String, VceVerdict)>,
}

/// The non-constructibility experiment: prescribe the lattice generators on
/// the x classes and a fixed non-central lattice element on each a^i b^j
/// class, keep q(a) = q(b) = identity by avoidance, then certify
/// non-centrality and the linear growth of the central projection.
pub fn nonconstructible_lab(
    rep: Arc<FuchsianRep>,
    x_words: &[Word],
    lattice_gens: &[LieGroupElement],
    a: &Word,
    b: &Word,
    exponent_pairs: &[(i64, i64)],
    tol: f64,
) -> Result<(QuasimorphismEngine, NonconstructibleReport)> {
    assert_eq!(x_words.len(), lattice_gens.len());
    // VCE certificates among everything that lives in the free pair
    let mut named: Vec<(String, Word)> = x_words
        .iter()
        .map(|w| (w.to_string(), w.clone()))
        .collect();
    named.push((a.to_string(), a.clone()));
    named.push((b.to_string(), b.clone()));
    let mut vce = Vec::new();
    for p in 0..named.len() {
        for q in p + 1..named.len() {
            if let (Some(f1), Some(f2)) = (
                group::to_free_word(&named[p].1),
                group::to_free_word(&named[q].1),
            ) {
                let cert = free_qm::vce_test(&f1, &f2)?;
                vce.push((named[p].0.clone(), named[q].0.clone(), cert.verdict));
            }
        }
    }

    // all prescribed classes: the x's, then one class per exponent pair
    let mut prescribed: Vec<(Word, LieGroupElement)> = x_words
        .iter()
        .cloned()
        .zip(lattice_gens.iter().cloned())
        .collect();
    let non_central = LieGroupElement::Heisenberg([1.0, 0.0, 0.0]);
    let mut pair_words = Vec::new();
    for &(i, j) in exponent_pairs {
        let w = a.pow(i).concat(&b.pow(j));
        pair_words.push(w.clone());
        prescribed.push((w, non_central.clone()));
    }

    // probe paths (connector + axis window) per class; each tube must stay
    // clear of every other class's probes and of the loops of a and b
    let mut probes: Vec<Vec<GeodesicSegment>> = Vec::new();
    for (w, _) in &prescribed {
        let c = rep.conj_class_data(w)?;
        probes.push(vec![c.connector, c.axis_window]);
    }
    let mut ab_probes = Vec::new();
    for w in [a, b] {
        let c = rep.conj_class_data(w)?;
        ab_probes.push(c.connector);
        ab_probes.push(c.axis_window);
    }

    let mut form = ConnectionForm::new(rep.clone(), Target::Heisenberg, 3);
    for (k, (w, target)) in prescribed.iter().enumerate() {
        let mut avoid = ab_probes.clone();
        for (other, segs) in probes.iter().enumerate() {
            if other != k {
                avoid.extend_from_slice(segs);
            }
        }
        let class = rep.conj_class_data(w)?;
        let atom = form.prescribed_tube(&class, target, &avoid)?;
        form.add_atom(atom)?;
    }
    let engine = QuasimorphismEngine::new(form, Mode::Hbg, tol);

    let mut residuals = Vec::new();
    for (w, g) in prescribed.iter().take(x_words.len()) {
        residuals.push(lie::group_distance(&engine.hbg_value(w)?, g)?);
    }
    let a_identity = lie::norm_to_identity(&engine.hbg_value(a)?);
    let b_identity = lie::norm_to_identity(&engine.hbg_value(b)?);

    let mut rows = Vec::new();
    for (&(i, j), w) in exponent_pairs.iter().zip(&pair_words) {
        let v = engine.hbg_value(w)?;
        let residual = lie::group_distance(&v, &non_central)?;
        let central = lie::is_central(&v, 1e-6);
        let p1 = lie::central_projection(&v)?;
        let mut acc = [0.0f64; 2];
        let mut ns = Vec::new();
        let mut mags = Vec::new();
        let mut recurrence_exact = true;
        for n in 1..=12i64 {
            // same left-multiplied accumulation order as LieGroupElement::pow
            acc[0] += p1[0];
            acc[1] += p1[1];
            let pn = lie::central_projection(&engine.hbg_value(&w.pow(n))?)?;
            if pn != acc {
                recurrence_exact = false;
            }
            ns.push(n as f64);
            mags.push((pn[0] * pn[0] + pn[1] * pn[1]).sqrt());
        }
        let (_, _, r2) = crate::numerics::linear_fit(&ns, &mags);
        rows.push(CentralGrowthRow {
            i,
            j,
            word: w.to_string(),
            residual,
            central,
            fit_r2: r2,
            recurrence_exact,
        });
    }

    Ok((
        engine,
        NonconstructibleReport {
            residuals,
            a_identity,
            b_identity,
            rows,
            vce,
        },
    ))
}

/// The standard two-ball demo connection used by tests and the CLI when no
/// config is given.
pub fn demo_form(rep: Arc<FuchsianRep>, target: Target) -> ConnectionForm {
    use crate::connection::{BallAtom, BumpAtom};
    use crate::hyp2::DiskPoint;
    let mut form = ConnectionForm::new(rep, target, 1);
    let values = |k: usize| -> LieAlgebraElement {
        match (target, k) {
            (Target::Abelian, 0) => LieAlgebraElement::Abelian(vec![0.8]),
            (Target::Abelian, _) => LieAlgebraElement::Abelian(vec![-0.5]),
            (Target::Su2, 0) => LieAlgebraElement::Su2([0.5, -0.3, 0.7]),
            (Target::Su2, _) => LieAlgebraElement::Su2([-0.2, 0.6, 0.1]),
            (Target::Heisenberg, 0) => LieAlgebraElement::Heisenberg([1.0, 0.2, 0.1]),
            (Target::Heisenberg, _) => LieAlgebraElement::Heisenberg([0.3, 1.0, -0.2]),
        }
    };
    form.add_atom(BumpAtom::Ball(BallAtom {
        center: DiskPoint::new(0.0, 0.12).unwrap(),
        radius: 0.4,
        covector: [0.9, 0.3],
        value: values(0),
    }))
    .expect("demo atom 0 fits the domain");
    form.add_atom(BumpAtom::Ball(BallAtom {
        center: DiskPoint::new(0.15, -0.25).unwrap(),
        radius: 0.35,
        covector: [0.4, -1.0],
        value: values(1),
    }))
    .expect("demo atom 1 fits the domain");
    form
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::random_reduced_word;

    fn std_rep() -> Arc<FuchsianRep> {
        Arc::new(FuchsianRep::standard())
    }

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn trivial_connection_everything_identity() {
        let rep = std_rep();
        let form = ConnectionForm::new(rep.clone(), Target::Su2, 1);
        let bg = QuasimorphismEngine::new(form, Mode::Bg, 1e-9);
        let form2 = ConnectionForm::new(rep, Target::Su2, 1);
        let hbg = QuasimorphismEngine::new(form2, Mode::Hbg, 1e-9);
        for s in ["a", "ab", "aBcD", "ddc"] {
            assert_eq!(bg.value(&w(s)).unwrap(), bg.identity());
            assert_eq!(hbg.value(&w(s)).unwrap(), hbg.identity());
        }
        let pairs = vec![(w("ab"), w("cd")), (w("a"), w("b"))];
        let report = bg.ulam_defect(&pairs, 3).unwrap();
        assert_eq!(report.max_ulam_defect, 0.0);
        assert_eq!(report.max_geometric_defect, 0.0);
        assert_eq!(equivalence_distance(&bg, &hbg, &[w("ab")]).unwrap(), 0.0);
    }

    #[test]
    fn bg_abelian_matches_quadrature() {
        let rep = std_rep();
        let engine = QuasimorphismEngine::new(demo_form(rep, Target::Abelian), Mode::Bg, 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let len = rng.gen_range(1..5);
            let word = random_reduced_word(&mut rng, len);
            let v = engine.bg_value(&word).unwrap();
            let oracle = abelian_bg_oracle(engine.form(), &word, 1 << 12).unwrap();
            assert!(
                (v.entries()[0] - oracle[0]).abs() < 1e-8,
                "{word}: {} vs {}",
                v.entries()[0],
                oracle[0]
            );
        }
    }

    #[test]
    fn bg_inverse_symmetry() {
        let rep = std_rep();
        let engine = QuasimorphismEngine::new(demo_form(rep, Target::Su2), Mode::Bg, 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let len = rng.gen_range(1..5);
            let word = random_reduced_word(&mut rng, len);
            let v = engine.bg_value(&word).unwrap();
            let vi = engine.bg_value(&word.inverse()).unwrap();
            // the acos metric is quantized near zero: one ulp of the dot
            // product reads as acos(1 - eps/2)/2pi ~ 2.4e-9, so anything
            // below twice that is agreement to roundoff
            let gap = lie::group_distance(&vi, &v.inverse()).unwrap();
            assert!(gap < 5e-9, "{word}: gap {gap:.3e}");
        }
    }

    #[test]
    fn hbg_cache_and_homogeneity_bitwise() {
        let rep = std_rep();
        let engine = QuasimorphismEngine::new(demo_form(rep.clone(), Target::Su2), Mode::Hbg, 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        while checked < 8 {
            let len = rng.gen_range(1..5);
            let word = random_reduced_word(&mut rng, len);
            if word.is_empty() || rep.decompose(&word).unwrap().exponent != 1 {
                continue;
            }
            let v1 = engine.hbg_value(&word).unwrap();
            let v2 = engine.hbg_value(&word).unwrap();
            assert_eq!(v1, v2, "cache must be bit-for-bit stable");
            for n in 2..=5 {
                let vn = engine.hbg_value(&word.pow(n)).unwrap();
                assert_eq!(
                    lie::group_distance(&vn, &v1.pow(n)).unwrap(),
                    0.0,
                    "homogeneity must be exact for {word}^{n}"
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn hbg_conjugation_preserves_su2_trace() {
        let rep = std_rep();
        let engine = QuasimorphismEngine::new(demo_form(rep, Target::Su2), Mode::Hbg, 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..6 {
            let len_u = rng.gen_range(1..4);
            let u = random_reduced_word(&mut rng, len_u);
            let len_v = rng.gen_range(1..4);
            let v = random_reduced_word(&mut rng, len_v);
            if u.is_empty() {
                continue;
            }
            let q1 = engine.hbg_value(&u).unwrap();
            let q2 = engine.hbg_value(&u.conjugated_by(&v)).unwrap();
            // SU(2) trace = twice the real quaternion component
            assert!(
                (q1.entries()[0] - q2.entries()[0]).abs() < 1e-6,
                "traces differ for {u} vs conjugate by {v}"
            );
        }
    }

    #[test]
    fn bg_defect_matches_stokes() {
        let rep = std_rep();
        let engine = QuasimorphismEngine::new(demo_form(rep, Target::Abelian), Mode::Bg, 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let len_x = rng.gen_range(1..4);
            let x = random_reduced_word(&mut rng, len_x);
            let len_y = rng.gen_range(1..4);
            let y = random_reduced_word(&mut rng, len_y);
            let qxy = engine.bg_value(&x.concat(&y)).unwrap();
            let qx = engine.bg_value(&x).unwrap();
            let qy = engine.bg_value(&y).unwrap();
            let defect =
                lie::group_distance(&qxy, &qx.multiply(&qy).unwrap()).unwrap();
            let stokes = abelian_stokes_defect(engine.form(), &x, &y, 64).unwrap();
            assert!(
                (defect - stokes).abs() < 1e-6,
                "defect {defect} vs Stokes {stokes} for ({x}, {y})"
            );
        }
    }

    #[test]
    fn defect_report_invariants() {
        let rep = std_rep();
        let engine = QuasimorphismEngine::new(demo_form(rep, Target::Su2), Mode::Hbg, 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut pairs = Vec::new();
        for len in 2..=5 {
            for _ in 0..6 {
                pairs.push((
                    random_reduced_word(&mut rng, len),
                    random_reduced_word(&mut rng, len),
                ));
            }
        }
        let report = engine.ulam_defect(&pairs, 31).unwrap();
        assert!(report.max_geometric_defect <= report.max_ulam_defect);
        assert!(
            report.max_ulam_defect <= 2.0 * report.bound_estimate,
            "ulam {} vs bound {}",
            report.max_ulam_defect,
            report.bound_estimate
        );
        assert_eq!(report.pair_count, pairs.len());
    }

    #[test]
    fn bg_hbg_equivalence_within_k4() {
        let rep = std_rep();
        let bg = QuasimorphismEngine::new(demo_form(rep.clone(), Target::Su2), Mode::Bg, 1e-9);
        let hbg = QuasimorphismEngine::new(demo_form(rep, Target::Su2), Mode::Hbg, 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let words: Vec<Word> = (0..15)
            .map(|_| {
                let len = rng.gen_range(1..6);
                random_reduced_word(&mut rng, len)
            })
            .collect();
        let d = equivalence_distance(&bg, &hbg, &words).unwrap();
        assert!(
            d <= bg.k4_estimate(),
            "equivalence distance {d} above K4 {}",
            bg.k4_estimate()
        );
    }

    #[test]
    fn lattice_rounding_report() {
        let rep = std_rep();
        let engine =
            QuasimorphismEngine::new(demo_form(rep, Target::Heisenberg), Mode::Hbg, 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let words: Vec<Word> = (0..20)
            .map(|_| {
                let len = rng.gen_range(1..5);
                random_reduced_word(&mut rng, len)
            })
            .collect();
        let pairs: Vec<(Word, Word)> = (0..8)
            .map(|_| {
                (
                    random_reduced_word(&mut rng, 2),
                    random_reduced_word(&mut rng, 3),
                )
            })
            .collect();
        let report = engine.lattice_geometric_qm(&words, &pairs, 43).unwrap();
        assert!(report.equivalence_max <= report.covering_radius + 1e-12);
        assert!(report.rounded_geometric_defect <= report.rounded_ulam_defect);
        assert!(report.rounded_ulam_defect <= report.rounded_defect_bound + 1e-12);
        // lattice points are fixed by rounding
        let g = LieGroupElement::Heisenberg([2.0, -1.0, 3.0]);
        assert_eq!(lie::lattice_round(&g).unwrap(), g);
    }

    #[test]
    fn epsilon_rep_su2() {
        let rep = std_rep();
        // the pair embeds in the distinguished free subgroup, where the
        // VCE certificate is decidable (ab vs ab^2 in free letters)
        let generators = vec![w("ac")];
        let b = w("acc");
        let g = lie::exp(&LieAlgebraElement::Su2([0.0, 0.0, 0.8 * PI]));
        let (engine, report) =
            epsilon_rep_build(rep, &generators, &b, &g, 4, &[], 1e-10).unwrap();
        assert!(report.vce_certified);
        assert!(
            report.generator_values_distance <= 1e-12,
            "generators moved: {}",
            report.generator_values_distance
        );
        assert!(report.b_power_check <= 1e-6, "b^m check {}", report.b_power_check);
        let qb = engine.hbg_value(&b).unwrap();
        assert!(lie::norm_to_identity(&qb) > 0.01, "q(b) must be nontrivial");
    }

    #[test]
    fn epsilon_scaling_abelian_is_linear() {
        let rep = std_rep();
        let generators = vec![w("a")];
        let b = w("c");
        let g = LieGroupElement::Abelian(vec![1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let pairs: Vec<(Word, Word)> = (0..6)
            .map(|_| {
                (
                    random_reduced_word(&mut rng, 2),
                    random_reduced_word(&mut rng, 2),
                )
            })
            .collect();
        let report =
            epsilon_scaling(rep, &generators, &b, &g, 2, 2, &pairs, 1e-10).unwrap();
        assert_eq!(report.scaling.len(), 3);
        for pair in report.scaling.windows(2) {
            let ratio = pair[1].1 / pair[0].1;
            assert!(
                (ratio - 0.5).abs() < 1e-3,
                "abelian epsilon must halve exactly: ratio {ratio}"
            );
        }
    }

    #[test]
    fn z3_calibration() {
        assert_eq!(Z3_CALIBRATION, 1.0 / 3.0);
        assert!((z3_calibration_numeric() - Z3_CALIBRATION).abs() < 1e-12);
    }

    #[test]
    fn nonconstructible_lab_small() {
        let rep = std_rep();
        let x_words = vec![w("acccc")];
        let gens = vec![LieGroupElement::Heisenberg([0.0, 1.0, 0.0])];
        let (engine, report) = nonconstructible_lab(
            rep,
            &x_words,
            &gens,
            &w("a"),
            &w("c"),
            &[(1, 1)],
            1e-10,
        )
        .unwrap();
        assert!(report.residuals[0] <= 1e-6, "residual {}", report.residuals[0]);
        assert_eq!(report.a_identity, 0.0);
        assert_eq!(report.b_identity, 0.0);
        let row = &report.rows[0];
        assert!(!row.central);
        assert!(row.recurrence_exact);
        assert!(row.fit_r2 >= 0.99);
        // sanity: the engine is usable for further queries
        assert!(engine.hbg_value(&w("ac")).is_ok());
    }
}
