//! Target Lie groups: abelian R^n, SU(2), and the 3-dimensional Heisenberg
//! group, with calibrated distances, exp/log, and the integer lattice.
//!
//! SU(2) elements are stored as unit quaternions (w, x, y, z), identified
//! with the matrix w·1 + x·iσ₁ + y·iσ₂ + z·iσ₃. Heisenberg elements are the
//! upper unitriangular coordinates (x, y, z) of
//! `[[1, x, z], [0, 1, y], [0, 0, 1]]`.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Covering radius of H3(Z) in the homogeneous gauge: sup over the group of
/// the distance to the nearest lattice point, attained at x, y half-integer
/// (max(1/2, sqrt(1/2)) with the central residual optimized away).
pub const HEIS_COVERING_RADIUS: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Scale of the SU(2) bi-invariant metric: quaternionic angle / (2 pi),
/// giving diam SU(2) = 1/2 and diameter 1/3 for the order-3 subgroup.
pub const SU2_METRIC_SCALE: f64 = 1.0 / std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum LieError {
    #[error("operation needs matching targets: {0} vs {1}")]
    TargetMismatch(Target, Target),
    #[error("operation unsupported for target {0}: {1}")]
    Unsupported(Target, &'static str),
}

pub type Result<T> = std::result::Result<T, LieError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// R^n with the Euclidean metric; the dimension travels with the values.
    Abelian,
    Su2,
    Heisenberg,
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Target::Abelian => "abelian",
            Target::Su2 => "su2",
            Target::Heisenberg => "heisenberg",
        })
    }
}

/// An element of the Lie algebra of one of the targets.
#[derive(Debug, Clone, PartialEq)]
pub enum LieAlgebraElement {
    Abelian(Vec<f64>),
    /// coordinates c with exp(c) the quaternion of angle ‖c‖ about c/‖c‖
    Su2([f64; 3]),
    /// (x, y, z) with bracket [X, Y] = Z
    Heisenberg([f64; 3]),
}

impl LieAlgebraElement {
    pub fn target(&self) -> Target {
        match self {
            LieAlgebraElement::Abelian(_) => Target::Abelian,
            LieAlgebraElement::Su2(_) => Target::Su2,
            LieAlgebraElement::Heisenberg(_) => Target::Heisenberg,
        }
    }

    pub fn zero_like(&self) -> Self {
        match self {
            LieAlgebraElement::Abelian(v) => LieAlgebraElement::Abelian(vec![0.0; v.len()]),
            LieAlgebraElement::Su2(_) => LieAlgebraElement::Su2([0.0; 3]),
            LieAlgebraElement::Heisenberg(_) => LieAlgebraElement::Heisenberg([0.0; 3]),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            LieAlgebraElement::Abelian(v) => {
                LieAlgebraElement::Abelian(v.iter().map(|x| s * x).collect())
            }
            LieAlgebraElement::Su2(c) => {
                LieAlgebraElement::Su2([s * c[0], s * c[1], s * c[2]])
            }
            LieAlgebraElement::Heisenberg(c) => {
                LieAlgebraElement::Heisenberg([s * c[0], s * c[1], s * c[2]])
            }
        }
    }

    pub fn add(&self, rhs: &LieAlgebraElement) -> Result<Self> {
        match (self, rhs) {
            (LieAlgebraElement::Abelian(u), LieAlgebraElement::Abelian(v)) => {
                assert_eq!(u.len(), v.len(), "abelian dimension mismatch");
                Ok(LieAlgebraElement::Abelian(
                    u.iter().zip(v).map(|(a, b)| a + b).collect(),
                ))
            }
            (LieAlgebraElement::Su2(u), LieAlgebraElement::Su2(v)) => Ok(LieAlgebraElement::Su2([
                u[0] + v[0],
                u[1] + v[1],
                u[2] + v[2],
            ])),
            (LieAlgebraElement::Heisenberg(u), LieAlgebraElement::Heisenberg(v)) => Ok(
                LieAlgebraElement::Heisenberg([u[0] + v[0], u[1] + v[1], u[2] + v[2]]),
            ),
            _ => Err(LieError::TargetMismatch(self.target(), rhs.target())),
        }
    }

    pub fn bracket(&self, rhs: &LieAlgebraElement) -> Result<Self> {
        match (self, rhs) {
            (LieAlgebraElement::Abelian(u), LieAlgebraElement::Abelian(_)) => {
                Ok(LieAlgebraElement::Abelian(vec![0.0; u.len()]))
            }
            (LieAlgebraElement::Su2(u), LieAlgebraElement::Su2(v)) => {
                // [u, v] in the ‖c‖-angle convention: 2 u x v
                Ok(LieAlgebraElement::Su2([
                    2.0 * (u[1] * v[2] - u[2] * v[1]),
                    2.0 * (u[2] * v[0] - u[0] * v[2]),
                    2.0 * (u[0] * v[1] - u[1] * v[0]),
                ]))
            }
            (LieAlgebraElement::Heisenberg(u), LieAlgebraElement::Heisenberg(v)) => Ok(
                LieAlgebraElement::Heisenberg([0.0, 0.0, u[0] * v[1] - u[1] * v[0]]),
            ),
            _ => Err(LieError::TargetMismatch(self.target(), rhs.target())),
        }
    }

    /// Euclidean norm of the coordinates.
    pub fn norm(&self) -> f64 {
        match self {
            LieAlgebraElement::Abelian(v) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            LieAlgebraElement::Su2(c) | LieAlgebraElement::Heisenberg(c) => {
                (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
            }
        }
    }

    pub fn coords(&self) -> &[f64] {
        match self {
            LieAlgebraElement::Abelian(v) => v,
            LieAlgebraElement::Su2(c) | LieAlgebraElement::Heisenberg(c) => c,
        }
    }
}

/// An element of one of the target groups.
#[derive(Debug, Clone, PartialEq)]
pub enum LieGroupElement {
    Abelian(Vec<f64>),
    /// unit quaternion (w, x, y, z)
    Su2([f64; 4]),
    /// unitriangular coordinates (x, y, z)
    Heisenberg([f64; 3]),
}

impl LieGroupElement {
    pub fn identity(target: Target, dim: usize) -> Self {
        match target {
            Target::Abelian => LieGroupElement::Abelian(vec![0.0; dim]),
            Target::Su2 => LieGroupElement::Su2([1.0, 0.0, 0.0, 0.0]),
            Target::Heisenberg => LieGroupElement::Heisenberg([0.0; 3]),
        }
    }

    pub fn target(&self) -> Target {
        match self {
            LieGroupElement::Abelian(_) => Target::Abelian,
            LieGroupElement::Su2(_) => Target::Su2,
            LieGroupElement::Heisenberg(_) => Target::Heisenberg,
        }
    }

    pub fn identity_like(&self) -> Self {
        match self {
            LieGroupElement::Abelian(v) => LieGroupElement::Abelian(vec![0.0; v.len()]),
            _ => LieGroupElement::identity(self.target(), 0),
        }
    }

    pub fn multiply(&self, rhs: &LieGroupElement) -> Result<Self> {
        match (self, rhs) {
            (LieGroupElement::Abelian(u), LieGroupElement::Abelian(v)) => {
                assert_eq!(u.len(), v.len(), "abelian dimension mismatch");
                Ok(LieGroupElement::Abelian(
                    u.iter().zip(v).map(|(a, b)| a + b).collect(),
                ))
            }
            (LieGroupElement::Su2(p), LieGroupElement::Su2(q)) => {
                let w = p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3];
                let x = p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2];
                let y = p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1];
                let z = p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0];
                // re-normalize to kill drift in long products
                let n = (w * w + x * x + y * y + z * z).sqrt();
                Ok(LieGroupElement::Su2([w / n, x / n, y / n, z / n]))
            }
            (LieGroupElement::Heisenberg(g), LieGroupElement::Heisenberg(h)) => {
                Ok(LieGroupElement::Heisenberg([
                    g[0] + h[0],
                    g[1] + h[1],
                    g[2] + h[2] + g[0] * h[1],
                ]))
            }
            _ => Err(LieError::TargetMismatch(self.target(), rhs.target())),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            LieGroupElement::Abelian(v) => {
                LieGroupElement::Abelian(v.iter().map(|x| -x).collect())
            }
            LieGroupElement::Su2(q) => LieGroupElement::Su2([q[0], -q[1], -q[2], -q[3]]),
            LieGroupElement::Heisenberg(g) => {
                LieGroupElement::Heisenberg([-g[0], -g[1], g[0] * g[1] - g[2]])
            }
        }
    }

    /// Left-associated n-th power; negative n uses the inverse.
    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = self.identity_like();
        for _ in 0..n.unsigned_abs() {
            out = out.multiply(&base).expect("same target");
        }
        out
    }

    /// Row-major matrix entries for serialization: abelian -> coordinates,
    /// SU(2) -> 2x2 complex matrix interleaved (re, im), Heisenberg -> 3x3.
    pub fn entries(&self) -> Vec<f64> {
        match self {
            LieGroupElement::Abelian(v) => v.clone(),
            LieGroupElement::Su2(q) => {
                let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
                // w + x iσ₁ + y iσ₂ + z iσ₃ = [[w+iz, y+ix], [-y+ix, w-iz]]
                vec![w, z, y, x, -y, x, w, -z]
            }
            LieGroupElement::Heisenberg(g) => {
                vec![1.0, g[0], g[2], 0.0, 1.0, g[1], 0.0, 0.0, 1.0]
            }
        }
    }
}

impl Serialize for LieGroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("LieGroupElement", 2)?;
        st.serialize_field("target", &self.target())?;
        st.serialize_field("entries", &self.entries())?;
        st.end()
    }
}

/// Exponential map. SU(2): quaternion of angle ‖c‖; Heisenberg and abelian:
/// polynomial, globally invertible.
pub fn exp(u: &LieAlgebraElement) -> LieGroupElement {
    match u {
        LieAlgebraElement::Abelian(v) => LieGroupElement::Abelian(v.clone()),
        LieAlgebraElement::Su2(c) => {
            let th = u.norm();
            if th < 1e-300 {
                return LieGroupElement::Su2([1.0, 0.0, 0.0, 0.0]);
            }
            let s = th.sin() / th;
            LieGroupElement::Su2([th.cos(), s * c[0], s * c[1], s * c[2]])
        }
        LieAlgebraElement::Heisenberg(c) => {
            LieGroupElement::Heisenberg([c[0], c[1], c[2] + c[0] * c[1] / 2.0])
        }
    }
}

/// Logarithm. SU(2): principal branch, angle in [0, pi].
pub fn log(g: &LieGroupElement) -> LieAlgebraElement {
    match g {
        LieGroupElement::Abelian(v) => LieAlgebraElement::Abelian(v.clone()),
        LieGroupElement::Su2(q) => {
            let vn = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
            let th = vn.atan2(q[0]);
            if vn < 1e-300 {
                // +1 -> 0; -1 sits at the cut locus, pick the sigma_3 branch
                return if q[0] < 0.0 {
                    LieAlgebraElement::Su2([0.0, 0.0, std::f64::consts::PI])
                } else {
                    LieAlgebraElement::Su2([0.0; 3])
                };
            }
            let s = th / vn;
            LieAlgebraElement::Su2([s * q[1], s * q[2], s * q[3]])
        }
        LieGroupElement::Heisenberg(g) => {
            LieAlgebraElement::Heisenberg([g[0], g[1], g[2] - g[0] * g[1] / 2.0])
        }
    }
}

/// Calibrated left-invariant distance. Identical representations short-cut
/// to an exact 0 so that homogeneity checks can be bit-for-bit.
pub fn group_distance(g: &LieGroupElement, h: &LieGroupElement) -> Result<f64> {
    match (g, h) {
        (LieGroupElement::Abelian(u), LieGroupElement::Abelian(v)) => {
            assert_eq!(u.len(), v.len(), "abelian dimension mismatch");
            if u == v {
                return Ok(0.0);
            }
            Ok(u.iter()
                .zip(v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt())
        }
        (LieGroupElement::Su2(p), LieGroupElement::Su2(q)) => {
            if p == q {
                return Ok(0.0);
            }
            // |dot| without abs: distance on SU(2), not on SO(3)
            let dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2] + p[3] * q[3];
            Ok(dot.clamp(-1.0, 1.0).acos() * SU2_METRIC_SCALE)
        }
        (LieGroupElement::Heisenberg(_), LieGroupElement::Heisenberg(_)) => {
            if g == h {
                return Ok(0.0);
            }
            let d = log(&g.inverse().multiply(h)?);
            let c = d.coords();
            Ok(c[0].abs().max(c[1].abs()).max(c[2].abs().sqrt()))
        }
        _ => Err(LieError::TargetMismatch(g.target(), h.target())),
    }
}

/// Distance to the identity (the calibrated norm of the element).
pub fn norm_to_identity(g: &LieGroupElement) -> f64 {
    group_distance(g, &g.identity_like()).expect("same target")
}

/// Second-order Baker-Campbell-Hausdorff: exact for step-2 nilpotent targets.
pub fn bch2(u: &LieAlgebraElement, v: &LieAlgebraElement) -> Result<LieAlgebraElement> {
    if matches!(u, LieAlgebraElement::Su2(_)) {
        return Err(LieError::Unsupported(Target::Su2, "bch2 is step-2 only"));
    }
    u.add(v)?.add(&u.bracket(v)?.scaled(0.5))
}

/// Nearest-ish element of H3(Z): round x then z then y half-to-even, with
/// the central entry corrected so the left-invariant gauge distance stays
/// within the covering radius (plain entrywise rounding is unbounded: the
/// central residual of lambda^-1 g grows with x).
pub fn lattice_round(g: &LieGroupElement) -> Result<LieGroupElement> {
    let LieGroupElement::Heisenberg(c) = g else {
        return Err(LieError::Unsupported(g.target(), "lattice_round"));
    };
    let (x, y, z) = (c[0], c[1], c[2]);
    let rx = round_half_even(x);
    let ry = round_half_even(y);
    let (dx, dy) = (x - rx, y - ry);
    // minimize the log central coordinate of lambda^-1 g over the fiber
    let rz = round_half_even(z + rx * ry - rx * y - dx * dy / 2.0);
    Ok(LieGroupElement::Heisenberg([rx, ry, rz]))
}

fn round_half_even(x: f64) -> f64 {
    let r = x.round();
    if (x - x.trunc()).abs() == 0.5 && (r % 2.0).abs() == 1.0 {
        r - (r - x).signum()
    } else {
        r
    }
}

/// Projection to the abelianization R^2 = H3 / center: the (1,2) and (2,3)
/// matrix entries. A group homomorphism, exact in floating point.
pub fn central_projection(g: &LieGroupElement) -> Result<[f64; 2]> {
    let LieGroupElement::Heisenberg(c) = g else {
        return Err(LieError::Unsupported(g.target(), "central_projection"));
    };
    Ok([c[0], c[1]])
}

pub fn is_central(g: &LieGroupElement, tol: f64) -> bool {
    match g {
        LieGroupElement::Abelian(_) => true,
        LieGroupElement::Su2(q) => {
            let d = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
            d.atan2(q[0].abs()) * SU2_METRIC_SCALE < tol
        }
        LieGroupElement::Heisenberg(c) => (c[0] * c[0] + c[1] * c[1]).sqrt() < tol,
    }
}
