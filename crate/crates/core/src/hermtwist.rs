//! Hermitian geometry of the twistor space: the metric `h = g + <.,.>`
//! (horizontal spaces of `D` orthogonal to the fibres), its Kaehler form
//! `Omega`, the torsion form `t = -sum_k dOmega(E_k, J E_k, .)` and the
//! pairing of the Chern form of `Theta` with `Omega`.
//!
//! `dOmega` is evaluated through its component formulas on horizontal lifts
//! and vertical vectors; vertical vectors at `J = J_u` are elements of `Q`
//! orthogonal to `J`, given in `Q` coordinates.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::Serialize;

use crate::connection::{r_eta, s_alpha, Curvature, QuatConnection};
use crate::error::{Error, Result};
use crate::flatmodel::{codifferential, ModelContext};
use crate::matrix::Mat;
use crate::scalar::{dot, rat, Field, Rat, Ring};
use crate::twistor::{cross, fibre_kaehler, perp_basis, V3};

/// `coefficient / pi`, exact.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PiScalar {
    #[serde(serialize_with = "ser_rat")]
    pub coefficient: Rat,
}

fn ser_rat<S: serde::Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl PiScalar {
    pub fn new(coefficient: Rat) -> Self {
        Self { coefficient }
    }

    pub fn zero() -> Self {
        Self::new(Rat::from_i64(0))
    }

    pub fn scale(&self, r: &Rat) -> Self {
        Self::new(self.coefficient.clone() * r.clone())
    }

    pub fn is_negative(&self) -> bool {
        self.coefficient < Rat::from_i64(0)
    }
}

impl Add for PiScalar {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.coefficient + o.coefficient)
    }
}

impl Sub for PiScalar {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.coefficient - o.coefficient)
    }
}

impl Neg for PiScalar {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.coefficient)
    }
}

impl fmt::Display for PiScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/pi", self.coefficient)
    }
}

/// `(D_X g)(Y, V) = -g(S_X Y, V) - g(Y, S_X V)`.
pub fn dg_first_principles<T: Ring>(ctx: &ModelContext, alpha: &[T], x: &[T], y: &[T], v: &[T]) -> T {
    let s = s_alpha(ctx, alpha, x);
    -(dot(&s.mul_vec(y), v) + dot(y, &s.mul_vec(v)))
}

/// The expanded form
/// `-2 alpha(X) g(Y,V) - alpha(Y) g(X,V) - alpha(V) g(X,Y) + sum_i [alpha(J_i Y) g(J_i X, V) + alpha(J_i V) g(J_i X, Y)]`.
pub fn dg_expansion<T: Ring>(ctx: &ModelContext, alpha: &[T], x: &[T], y: &[T], v: &[T]) -> T {
    let a = |z: &[T]| dot(alpha, z);
    let mut out = -(T::from_i64(2) * a(x) * dot(y, v)) - a(y) * dot(x, v) - a(v) * dot(x, y);
    for i in 0..3 {
        let ji = ctx.j(i);
        let jx = ji.apply(x);
        out = out + a(&ji.apply(y)) * dot(&jx, v) + a(&ji.apply(v)) * dot(&jx, y);
    }
    out
}

/// `dOmega(X~, Y~, V~) = (D_X g)(V, JY) + (D_Y g)(X, JV) + (D_V g)(Y, JX)`.
pub fn d_omega_hhh<T: Ring>(ctx: &ModelContext, alpha: &[T], u: &V3<T>, x: &[T], y: &[T], v: &[T]) -> T {
    let j = |z: &[T]| ctx.apply_q(u, z);
    dg_expansion(ctx, alpha, x, v, &j(y)) + dg_expansion(ctx, alpha, y, x, &j(v)) + dg_expansion(ctx, alpha, v, y, &j(x))
}

/// `dOmega(a, X~, Y~) = g(aX, Y) - <[R_{X,Y}, J], J a>`.
pub fn d_omega_vhh<T: Ring>(ctx: &ModelContext, r: &Curvature<T>, u: &V3<T>, a: &V3<T>, x: &[T], y: &[T]) -> T {
    let ax = ctx.apply_q(a, x);
    let comm = ctx.q_coords(&r.at(x, y).commutator(&ctx.q_matrix(u)));
    // J a = J_{u x a} for a orthogonal to u
    dot(&ax, y) - ModelContext::q_inner(&comm, &cross(u, a))
}

/// `dOmega(a, b, c) = 0`.
pub fn d_omega_vvv<T: Ring>(_a: &V3<T>, _b: &V3<T>, _c: &V3<T>) -> T {
    T::zero()
}

/// `dOmega(a, b, X~) = 0`.
pub fn d_omega_vvh<T: Ring>(_a: &V3<T>, _b: &V3<T>, _x: &[T]) -> T {
    T::zero()
}

/// Tangent vector of `Z` split as `X~ + a` (horizontal lift plus vertical).
#[derive(Clone, Debug, PartialEq)]
pub struct SplitTangent<T> {
    pub x: Vec<T>,
    pub a: V3<T>,
}

impl<T: Ring> SplitTangent<T> {
    pub fn horizontal(x: Vec<T>) -> Self {
        Self { x, a: [T::zero(), T::zero(), T::zero()] }
    }

    pub fn vertical(dim: usize, a: V3<T>) -> Self {
        Self { x: vec![T::zero(); dim], a }
    }

    /// `J(X~ + a) = (JX)~ + J a`.
    pub fn jcal(&self, ctx: &ModelContext, u: &V3<T>) -> Self {
        Self { x: ctx.apply_q(u, &self.x), a: cross(u, &self.a) }
    }
}

/// Trilinear `dOmega` assembled from the component formulas.
pub fn d_omega<T: Ring>(
    ctx: &ModelContext,
    alpha: &[T],
    r: &Curvature<T>,
    u: &V3<T>,
    t: [&SplitTangent<T>; 3],
) -> T {
    let [p, q, s] = t;
    d_omega_hhh(ctx, alpha, u, &p.x, &q.x, &s.x)
        + d_omega_vhh(ctx, r, u, &p.a, &q.x, &s.x)
        + d_omega_vhh(ctx, r, u, &q.a, &s.x, &p.x)
        + d_omega_vhh(ctx, r, u, &s.a, &p.x, &q.x)
        + d_omega_vvh(&p.a, &q.a, &s.x)
        + d_omega_vvh(&q.a, &s.a, &p.x)
        + d_omega_vvh(&s.a, &p.a, &q.x)
        + d_omega_vvv(&p.a, &q.a, &s.a)
}

/// `t(U) = -sum_k dOmega(E_k, J E_k, U)` over an `h`-orthonormal frame:
/// the coordinate frame horizontally, and `(b, u x b) / |b|` vertically.
pub fn torsion_form(ctx: &ModelContext, alpha: &[Rat], r: &Curvature<Rat>, u: &V3<Rat>, t: &SplitTangent<Rat>) -> Rat {
    let d = ctx.dim();
    let mut sum = Rat::from_i64(0);
    for k in 0..d {
        let e = SplitTangent::horizontal(ctx.unit_vector(k));
        sum += d_omega(ctx, alpha, r, u, [&e, &e.jcal(ctx, u), t]);
    }
    let [b, _] = perp_basis(u);
    let nb = ModelContext::q_inner(&b, &b).inv().expect("nonzero perp vector");
    let c = cross(u, &b);
    for w in [b, c] {
        let e = SplitTangent::vertical(d, w);
        sum += d_omega(ctx, alpha, r, u, [&e, &e.jcal(ctx, u), t]) * nb.clone();
    }
    -sum
}

/// Two-form on `Z` at a point, in the frame (coordinate basis, `b`, `u x b`).
#[derive(Clone, Debug, PartialEq)]
pub struct TwoFormOnZ {
    pub hh: Mat<Rat>,
    pub hv: Mat<Rat>,
    /// Value on `(b, u x b)`.
    pub vv: Rat,
    /// `|b|^2`, turning the vertical frame orthonormal.
    pub frame_norm_sq: Rat,
}

impl TwoFormOnZ {
    /// `<V1 ^ W1, V2 ^ W2> = h(V1,V2) h(W1,W2) - h(V1,W2) h(V2,W1)`, i.e. the
    /// sum over `i < j` of products of frame components.
    pub fn inner(&self, o: &Self) -> Rat {
        let d = self.hh.rows();
        let mut acc = Rat::from_i64(0);
        for i in 0..d {
            for j in i + 1..d {
                acc += self.hh[(i, j)].clone() * o.hh[(i, j)].clone();
            }
        }
        let inv = self.frame_norm_sq.inv().expect("nonzero frame");
        for i in 0..d {
            for m in 0..2 {
                acc += self.hv[(i, m)].clone() * o.hv[(i, m)].clone() * inv.clone();
            }
        }
        acc + self.vv.clone() * o.vv.clone() * inv.clone() * inv
    }
}

/// Kaehler form `Omega(U, V) = h(J U, V)`.
pub fn kaehler_form(ctx: &ModelContext, u: &V3<Rat>) -> TwoFormOnZ {
    let d = ctx.dim();
    let [b, _] = perp_basis(u);
    let c = cross(u, &b);
    TwoFormOnZ {
        hh: Mat::from_fn(d, d, |i, j| ctx.apply_q(u, &ctx.unit_vector::<Rat>(i))[j].clone()),
        hv: Mat::zeros(d, 2),
        vv: fibre_kaehler(u, &b, &c),
        frame_norm_sq: ModelContext::q_inner(&b, &b),
    }
}

/// Chern form `gamma` of `Theta` in units of `1/pi`:
/// `gamma(X~, Y~) = tr(J R_{X,Y}) / 4n`, `gamma(a, b) = Omega_p(a, b) / 2`, mixed zero.
pub fn chern_form(ctx: &ModelContext, r: &Curvature<Rat>, u: &V3<Rat>) -> TwoFormOnZ {
    let d = ctx.dim();
    let j = ctx.q_matrix(u);
    let scale = rat(1, 4 * ctx.n() as i64);
    let [b, _] = perp_basis(u);
    let c = cross(u, &b);
    TwoFormOnZ {
        hh: Mat::from_fn(d, d, |i, k| j.mul(&r.get(i, k)).trace() * scale.clone()),
        hv: Mat::zeros(d, 2),
        vv: fibre_kaehler(u, &b, &c) * rat(1, 2),
        frame_norm_sq: ModelContext::q_inner(&b, &b),
    }
}

/// `<gamma, Omega>` assembled from the component formulas at `(p, u)`.
pub fn chern_pairing(conn: &QuatConnection, p: &[Rat], u: &V3<Rat>) -> Result<PiScalar> {
    if !conn.predicates().closed {
        return Err(Error::NotClosed);
    }
    let ctx = conn.ctx();
    let r = conn.curvature_at(p);
    Ok(PiScalar::new(chern_form(ctx, &r, u).inner(&kaehler_form(ctx, u))))
}

/// `1/(2 pi) + (Scal - 8(n+2)|alpha|^2) / (4(n+2) pi)`.
pub fn chern_pairing_closed_form(n: usize, scal: &Rat, alpha_norm_sq: &Rat) -> PiScalar {
    let n2 = Rat::from_i64(n as i64 + 2);
    let inner = scal.clone() - Rat::from_i64(8) * n2.clone() * alpha_norm_sq.clone();
    PiScalar::new(rat(1, 2) + inner * (Rat::from_i64(4) * n2).inv().expect("positive"))
}

/// Both sides of `sum_k tr(J_i R^eta_{X_k, J X_k}) = 8n sum_k eta(J X_k, J_i X_k)`
/// over the coordinate basis.
pub fn sums_sides(ctx: &ModelContext, eta: &Mat<Rat>, u: &V3<Rat>, i: usize) -> (Rat, Rat) {
    let ji = ctx.j_matrix::<Rat>(i);
    let mut lhs = Rat::from_i64(0);
    let mut rhs = Rat::from_i64(0);
    for k in 0..ctx.dim() {
        let x = ctx.unit_vector::<Rat>(k);
        let jx = ctx.apply_q(u, &x);
        lhs += ji.mul(&r_eta(ctx, eta, &x, &jx)).trace();
        rhs += eta.bilinear(&jx, &ji.mul_vec(&x));
    }
    (lhs, rhs * Rat::from_i64(8 * ctx.n() as i64))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorsionReport {
    /// `t(X~) = 8 alpha(X)` on every basis vector.
    pub horizontal: bool,
    /// `t(a) = 0` on a basis of the fibre tangent space.
    pub vertical: bool,
}

/// Torsion-form checks at `(p, u)`; requires `D` closed.
pub fn torsion_checks(conn: &QuatConnection, p: &[Rat], u: &V3<Rat>) -> Result<TorsionReport> {
    if !conn.predicates().closed {
        return Err(Error::NotClosed);
    }
    let ctx = conn.ctx();
    let alpha = conn.alpha().eval(p);
    let r = conn.curvature_at(p);
    let horizontal = (0..ctx.dim()).all(|k| {
        let x = ctx.unit_vector::<Rat>(k);
        torsion_form(ctx, &alpha, &r, u, &SplitTangent::horizontal(x.clone())) == dot(&alpha, &x) * Rat::from_i64(8)
    });
    let vertical = perp_basis(u)
        .into_iter()
        .all(|a| Ring::is_zero(&torsion_form(ctx, &alpha, &r, u, &SplitTangent::vertical(ctx.dim(), a))));
    Ok(TorsionReport { horizontal, vertical })
}

/// Assembled pairing and closed form at `(p, u)` with `Scal = 0`. The closed
/// form is pointwise only for harmonic `alpha`, so co-closedness is required
/// as well.
pub fn chern_pairing_check(conn: &QuatConnection, p: &[Rat], u: &V3<Rat>) -> Result<(PiScalar, PiScalar)> {
    let assembled = chern_pairing(conn, p, u)?;
    if !codifferential(conn.alpha())?.is_zero() {
        return Err(Error::NotCoClosed);
    }
    let a = conn.alpha().eval(p);
    let closed = chern_pairing_closed_form(conn.ctx().n(), &Rat::from_i64(0), &dot(&a, &a));
    Ok((assembled, closed))
}
