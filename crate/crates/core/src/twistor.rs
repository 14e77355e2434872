//! Twistor fibre geometry over the flat model.
//!
//! A point of the twistor space `Z` is `(p, u)` with `u` on the unit sphere of
//! `R^3`, standing for `J_u = sum_a u_a J_a`. The fibre `Theta` of the tangent
//! vertical bundle at `(p, u)` is `u^perp`, with complex structure `s -> u x s`.
//! Tangent vectors of `Z` are pairs `(X, W)` with `X` in `R^{4n}` and `W` a
//! tangent vector of the sphere at `u`.
//!
//! `D = d + S^alpha` moves `Q` coordinates by `D_X a = d_X a + Gamma(X) a`
//! (see [`gamma_matrix`]), which gives the vertical part
//! `v(X, W) = W + Gamma(X) u` and the connection
//! `nabla_U s = Pi_u(ds(U) + Gamma(X) s)` on `Theta`.

pub mod fd;

use serde::Serialize;

use crate::connection::{covariant_q_along, gamma_matrix, Curvature, QJet};
use crate::error::{Error, Result};
use crate::flatmodel::{FieldShape, ModelContext, PolyField};
use crate::gauss::GaussRat;
use crate::matrix::Mat;
use crate::poly::Poly;
use crate::scalar::{dot, rat, Field, Rat, Ring};

pub type V3<T> = [T; 3];

pub fn add3<T: Ring>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    std::array::from_fn(|i| a[i].clone() + b[i].clone())
}

pub fn sub3<T: Ring>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    std::array::from_fn(|i| a[i].clone() - b[i].clone())
}

pub fn scale3<T: Ring>(a: &V3<T>, s: &T) -> V3<T> {
    std::array::from_fn(|i| a[i].clone() * s.clone())
}

pub fn dot3<T: Ring>(a: &V3<T>, b: &V3<T>) -> T {
    ModelContext::q_inner(a, b)
}

pub fn cross<T: Ring>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    ModelContext::cross(a, b)
}

pub fn is_zero3<T: Ring>(a: &V3<T>) -> bool {
    a.iter().all(Ring::is_zero)
}

fn mat_vec3<T: Ring>(m: &Mat<T>, v: &V3<T>) -> V3<T> {
    let r = m.mul_vec(v);
    std::array::from_fn(|i| r[i].clone())
}

/// A point `(p, u)` of `Z` with exact coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwistorPoint {
    #[serde(serialize_with = "crate::harness::ser_rats")]
    pub p: Vec<Rat>,
    #[serde(serialize_with = "crate::harness::ser_rats")]
    pub u: V3<Rat>,
}

impl TwistorPoint {
    pub fn new(p: Vec<Rat>, u: V3<Rat>) -> Result<Self> {
        if dot3(&u, &u) != Rat::from_i64(1) {
            return Err(Error::NotUnit(format!("|u|^2 = {}", dot3(&u, &u))));
        }
        Ok(Self { p, u })
    }
}

/// Tangent vector `(X, W)` of `Z` at a point with fibre coordinate `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistorTangent<T> {
    pub x: Vec<T>,
    pub w: V3<T>,
}

impl<T: Ring> TwistorTangent<T> {
    pub fn new(u: &V3<T>, x: Vec<T>, w: V3<T>) -> Result<Self> {
        if !dot3(u, &w).is_zero() {
            return Err(Error::NotVertical);
        }
        Ok(Self { x, w })
    }

    pub fn vertical(dim: usize, w: V3<T>) -> Self {
        Self { x: vec![T::zero(); dim], w }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { x: self.x.iter().zip(&o.x).map(|(a, b)| a.clone() + b.clone()).collect(), w: add3(&self.w, &o.w) }
    }
}

/// `Pi_u(A) = A - <A, u> u`.
pub fn pi_project<T: Ring>(u: &V3<T>, a: &V3<T>) -> V3<T> {
    sub3(a, &scale3(u, &dot3(a, u)))
}

/// `Pi_J(A) = (A + J A J) / 2`, evaluated with `4n x 4n` matrices.
pub fn pi_project_matrix<T: Ring>(ctx: &ModelContext, u: &V3<T>, a: &V3<T>) -> V3<T> {
    let j = ctx.q_matrix(u);
    let am = ctx.q_matrix(a);
    let m = am.add(&j.mul(&am).mul(&j)).scale_rat(&rat(1, 2));
    ctx.q_coords(&m)
}

/// The fibre complex structure `s -> J o s = u x s` on `Theta`.
pub fn jcal<T: Ring>(u: &V3<T>, s: &V3<T>) -> V3<T> {
    cross(u, s)
}

/// Vertical part `v(U) = W + Gamma(X) u`.
pub fn vertical_part<T: Ring>(ctx: &ModelContext, alpha: &[T], u: &V3<T>, t: &TwistorTangent<T>) -> V3<T> {
    add3(&t.w, &mat_vec3(&gamma_matrix(ctx, alpha, &t.x), u))
}

/// Horizontal lift `(X, -Gamma(X) u)`.
pub fn horizontal_lift<T: Ring>(ctx: &ModelContext, alpha: &[T], u: &V3<T>, x: &[T]) -> TwistorTangent<T> {
    let gu = mat_vec3(&gamma_matrix(ctx, alpha, x), u);
    TwistorTangent { x: x.to_vec(), w: scale3(&gu, &T::from_i64(-1)) }
}

/// The complex structure of `Z`: `J` on horizontal lifts, `u x .` on
/// vertical vectors.
pub fn jcal_tangent<T: Ring>(ctx: &ModelContext, alpha: &[T], u: &V3<T>, t: &TwistorTangent<T>) -> TwistorTangent<T> {
    let jx = ctx.apply_q(u, &t.x);
    let lift = horizontal_lift(ctx, alpha, u, &jx);
    let v = jcal(u, &vertical_part(ctx, alpha, u, t));
    TwistorTangent { x: lift.x, w: add3(&lift.w, &v) }
}

/// `nabla_U A~ = Pi_J(D_X A) - <J, A> v(U)`.
pub fn nabla_distinguished<T: Ring>(
    ctx: &ModelContext,
    alpha: &[T],
    a: &QJet<T>,
    u: &V3<T>,
    t: &TwistorTangent<T>,
) -> V3<T> {
    let dxa = covariant_q_along(ctx, alpha, a, &t.x);
    let v = vertical_part(ctx, alpha, u, t);
    sub3(&pi_project(u, &dxa), &scale3(&v, &dot3(u, &a.value)))
}

/// Jet of a section `s = A~ + J B~` of `Theta`, `A`, `B` sections of `Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionJet<T> {
    pub a: QJet<T>,
    pub b: QJet<T>,
}

impl<T: Ring> SectionJet<T> {
    pub fn value(&self, u: &V3<T>) -> V3<T> {
        add3(&pi_project(u, &self.a.value), &cross(u, &self.b.value))
    }

    /// `ds(U)` for `s(p, u) = A(p) - <A(p), u> u + u x B(p)`.
    pub fn derivative(&self, u: &V3<T>, t: &TwistorTangent<T>) -> V3<T> {
        let da = self.a.derivative(&t.x);
        let db = self.b.derivative(&t.x);
        let a = &self.a.value;
        let mut out = pi_project(u, &da);
        out = sub3(&out, &scale3(u, &dot3(a, &t.w)));
        out = sub3(&out, &scale3(&t.w, &dot3(a, u)));
        out = add3(&out, &cross(&t.w, &self.b.value));
        add3(&out, &cross(u, &db))
    }

    /// `J s` as a section: `(A, B) -> (-B, A)`.
    pub fn jcal(&self) -> Self {
        let neg = QJet { value: scale3(&self.b.value, &T::from_i64(-1)), grad: self.b.grad.neg() };
        Self { a: neg, b: self.a.clone() }
    }
}

/// `nabla_U s = Pi_u(ds(U) + Gamma(X) s)` for a general section.
pub fn nabla_section<T: Ring>(
    ctx: &ModelContext,
    alpha: &[T],
    s: &SectionJet<T>,
    u: &V3<T>,
    t: &TwistorTangent<T>,
) -> V3<T> {
    let ds = s.derivative(u, t);
    let gs = mat_vec3(&gamma_matrix(ctx, alpha, &t.x), &s.value(u));
    pi_project(u, &add3(&ds, &gs))
}

/// Horizontal block `Pi_J([R_{X,Y}, A])`.
pub fn curvature_hh<T: Ring>(ctx: &ModelContext, r: &Curvature<T>, u: &V3<T>, x: &[T], y: &[T], s: &V3<T>) -> V3<T> {
    let rxy = r.at(x, y);
    pi_project(u, &ctx.q_coords(&rxy.commutator(&ctx.q_matrix(s))))
}

/// Fibre Kaehler form `Omega_p(B, C) = <u, B x C>` (unit-sphere area form).
pub fn fibre_kaehler<T: Ring>(u: &V3<T>, b: &V3<T>, c: &V3<T>) -> T {
    dot3(u, &cross(b, c))
}

/// Vertical block `-Omega_p(B, C) J A`.
pub fn curvature_vv<T: Ring>(u: &V3<T>, b: &V3<T>, c: &V3<T>, s: &V3<T>) -> V3<T> {
    scale3(&jcal(u, s), &-fibre_kaehler(u, b, c))
}

/// `R^nabla_{U1, U2} s` assembled from the three blocks (the mixed block
/// vanishes), after splitting `U = X~ + v(U)`.
pub fn curvature_nabla<T: Ring>(
    ctx: &ModelContext,
    alpha: &[T],
    r: &Curvature<T>,
    u: &V3<T>,
    t1: &TwistorTangent<T>,
    t2: &TwistorTangent<T>,
    s: &V3<T>,
) -> V3<T> {
    let v1 = vertical_part(ctx, alpha, u, t1);
    let v2 = vertical_part(ctx, alpha, u, t2);
    add3(&curvature_hh(ctx, r, u, &t1.x, &t2.x, s), &curvature_vv(u, &v1, &v2, s))
}

/// Residual of `Pi_J([R_{JX ^ JY - X ^ Y}, A]) = 0` for `A` orthogonal to `J`.
pub fn self_duality_residual<T: Ring>(
    ctx: &ModelContext,
    r: &Curvature<T>,
    u: &V3<T>,
    x: &[T],
    y: &[T],
    a: &V3<T>,
) -> Result<V3<T>> {
    if !dot3(u, a).is_zero() {
        return Err(Error::NotVertical);
    }
    let jx = ctx.apply_q(u, x);
    let jy = ctx.apply_q(u, y);
    let m = r.at(&jx, &jy).sub(&r.at(x, y));
    Ok(pi_project(u, &ctx.q_coords(&m.commutator(&ctx.q_matrix(a)))))
}

/// A concrete non-vanishing instance of the self-duality residual.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfDualityWitness {
    #[serde(serialize_with = "crate::harness::ser_rats")]
    pub u: V3<Rat>,
    pub x: usize,
    pub y: usize,
    #[serde(serialize_with = "crate::harness::ser_rats")]
    pub a: V3<Rat>,
    #[serde(serialize_with = "crate::harness::ser_rats")]
    pub residual: V3<Rat>,
}

/// Two rational vectors spanning `u^perp`.
pub fn perp_basis(u: &V3<Rat>) -> [V3<Rat>; 2] {
    let axes: [V3<Rat>; 3] = std::array::from_fn(|k| std::array::from_fn(|i| Rat::from_i64(i64::from(i == k))));
    let b = axes
        .iter()
        .map(|e| cross(u, e))
        .max_by_key(|v| v.iter().filter(|x| !Ring::is_zero(*x)).count())
        .expect("three axes");
    let c = cross(u, &b);
    [b, c]
}

/// Exhaustive search over basis pairs `(e_x, e_y)`, the given fibre points
/// and a basis of `u^perp`.
pub fn self_duality_witness(ctx: &ModelContext, r: &Curvature<Rat>, units: &[V3<Rat>]) -> Option<SelfDualityWitness> {
    let d = ctx.dim();
    // Only the Q-part of R enters: q([M, J_a]) = 2 q(M) x a.
    let qr: Vec<Vec<V3<Rat>>> = (0..d).map(|i| (0..d).map(|j| ctx.q_coords(&r.get(i, j))).collect()).collect();
    let q_at = |x: &[Rat], y: &[Rat]| -> V3<Rat> {
        let mut acc = [Rat::zero(), Rat::zero(), Rat::zero()];
        for i in 0..d {
            for j in 0..d {
                let c = x[i].clone() * y[j].clone();
                if !c.is_zero() {
                    acc = add3(&acc, &scale3(&qr[i][j], &c));
                }
            }
        }
        acc
    };
    for u in units {
        for a in perp_basis(u) {
            for x in 0..d {
                for y in x + 1..d {
                    let (ex, ey) = (ctx.unit_vector(x), ctx.unit_vector(y));
                    let m = sub3(&q_at(&ctx.apply_q(u, &ex), &ctx.apply_q(u, &ey)), &q_at(&ex, &ey));
                    let res = pi_project(u, &scale3(&cross(&m, &a), &Rat::from_i64(2)));
                    if !is_zero3(&res) {
                        debug_assert_eq!(self_duality_residual(ctx, r, u, &ex, &ey, &a).ok(), Some(res.clone()));
                        return Some(SelfDualityWitness { u: u.clone(), x, y, a, residual: res });
                    }
                }
            }
        }
    }
    None
}

/// `(J pi* beta)(U) = -beta(pi_* J U) = -beta(J X)`.
pub fn jcal_pullback<T: Ring>(ctx: &ModelContext, beta: &[T], u: &V3<T>, x: &[T]) -> T {
    -dot(beta, &ctx.apply_q(u, x))
}

/// Right-hand side of the difference formula: `2 (J pi* alpha)(U) J s`.
pub fn nabla_difference_formula<T: Ring>(ctx: &ModelContext, alpha: &[T], u: &V3<T>, x: &[T], s: &V3<T>) -> V3<T> {
    scale3(&jcal(u, s), &(jcal_pullback(ctx, alpha, u, x) * T::from_i64(2)))
}

/// `beta~_U(s) = (beta(X) J s - beta(J X) s) / 2`.
pub fn beta_tilde<T: Ring>(ctx: &ModelContext, beta: &[T], u: &V3<T>, x: &[T], s: &V3<T>) -> V3<T> {
    let bx = dot(beta, x);
    let bjx = dot(beta, &ctx.apply_q(u, x));
    let v = sub3(&scale3(&jcal(u, s), &bx), &scale3(s, &bjx));
    scale3(&v, &T::from_rat(&rat(1, 2)))
}

/// `(nabla^beta - nabla)_U s = beta(X) J s`.
pub fn beta_twist_difference<T: Ring>(beta: &[T], u: &V3<T>, x: &[T], s: &V3<T>) -> V3<T> {
    scale3(&jcal(u, s), &dot(beta, x))
}

/// `(0,1)` part `(L_U + J L_{JU}) / 2` of an `End(Theta)`-valued 1-form `L`.
pub fn zero_one_part<T: Ring>(
    ctx: &ModelContext,
    alpha: &[T],
    u: &V3<T>,
    t: &TwistorTangent<T>,
    l: impl Fn(&TwistorTangent<T>) -> V3<T>,
) -> V3<T> {
    let jt = jcal_tangent(ctx, alpha, u, t);
    scale3(&add3(&l(t), &jcal(u, &l(&jt))), &T::from_rat(&rat(1, 2)))
}

/// Curvature of `nabla^beta = nabla + pi* beta (x) J`:
/// `R^nabla + (d beta)(X1, X2) J`, with `d beta` a skew matrix in the
/// convention `(dx_i ^ dx_j)(e_i, e_j) = 1`.
#[allow(clippy::too_many_arguments)]
pub fn twisted_curvature<T: Ring>(
    ctx: &ModelContext,
    alpha: &[T],
    r: &Curvature<T>,
    dbeta: &Mat<T>,
    u: &V3<T>,
    t1: &TwistorTangent<T>,
    t2: &TwistorTangent<T>,
    s: &V3<T>,
) -> V3<T> {
    let base = curvature_nabla(ctx, alpha, r, u, t1, t2, s);
    add3(&base, &scale3(&jcal(u, s), &dbeta.bilinear(&t1.x, &t2.x)))
}

/// Checks that `beta` is admissible for the twist: `d beta` Q-hermitian.
pub fn check_beta(ctx: &ModelContext, beta: &PolyField) -> Result<Mat<Poly>> {
    let conn = crate::connection::QuatConnection::new(ctx, beta.clone())?;
    let db = conn.d_alpha();
    if !ctx.is_q_hermitian(&db) {
        return Err(Error::NotQHermitian);
    }
    Ok(db)
}

/// `df(U)` for a polynomial on the chart `R^{4n} x R^3`, variables
/// `x_1..x_{4n}` followed by the ambient fibre coordinates.
pub fn chart_differential(f: &Poly, pt: &TwistorPoint, t: &TwistorTangent<Rat>) -> Rat {
    let d = pt.p.len();
    let vals: Vec<Rat> = pt.p.iter().chain(pt.u.iter()).cloned().collect();
    let dir: Vec<Rat> = t.x.iter().chain(t.w.iter()).cloned().collect();
    (0..d + 3).fold(Rat::from_i64(0), |acc, i| {
        if dir[i].is_zero() {
            acc
        } else {
            acc + f.partial(i).eval(&vals) * dir[i].clone()
        }
    })
}

fn chart_value(f: &Poly, pt: &TwistorPoint) -> Rat {
    let vals: Vec<Rat> = pt.p.iter().chain(pt.u.iter()).cloned().collect();
    f.eval(&vals)
}

/// `(d^J f)(U) = -df(J U)`.
pub fn d_j(ctx: &ModelContext, alpha: &[Rat], f: &Poly, pt: &TwistorPoint, t: &TwistorTangent<Rat>) -> Rat {
    -chart_differential(f, pt, &jcal_tangent(ctx, alpha, &pt.u, t))
}

/// Coefficient `c(U)` with `nabla^2_U = nabla^1_U + c(U) J`, where
/// `c = d^J log rho - d theta` for a positive `rho` and a phase `theta`.
pub fn gauge_transform(
    ctx: &ModelContext,
    alpha: &[Rat],
    rho: &Poly,
    theta: &Poly,
    pt: &TwistorPoint,
    t: &TwistorTangent<Rat>,
) -> Result<Rat> {
    let r = chart_value(rho, pt);
    if r <= Rat::from_i64(0) {
        return Err(Error::NonPositive);
    }
    let dj_log = d_j(ctx, alpha, rho, pt, t) * r.inv().expect("positive");
    Ok(dj_log - chart_differential(theta, pt, t))
}

/// Residual of the horizontal form of (ho):
/// `D_{JX}A - <D_{JX}A, J> J - J D_X A - <D_X A, J> Id`, in `Q` coordinates
/// (the identity components cancel).
pub fn holomorphicity_residual<T: Ring>(ctx: &ModelContext, alpha: &[T], a: &QJet<T>, u: &V3<T>, x: &[T]) -> V3<T> {
    let jx = ctx.apply_q(u, x);
    let d_jx = covariant_q_along(ctx, alpha, a, &jx);
    let d_x = covariant_q_along(ctx, alpha, a, x);
    // J o D_X A + <D_X A, J> Id = J_{u x D_X A}
    sub3(&pi_project(u, &d_jx), &cross(u, &d_x))
}

/// The residual for every basis vector, as a `4n x 3` form.
pub fn holomorphicity_form<T: Ring>(ctx: &ModelContext, alpha: &[T], a: &QJet<T>, u: &V3<T>) -> Mat<T> {
    let d = ctx.dim();
    let mut out = Mat::zeros(d, 3);
    for k in 0..d {
        let r = holomorphicity_residual(ctx, alpha, a, u, &ctx.unit_vector(k));
        for b in 0..3 {
            out[(k, b)] = r[b].clone();
        }
    }
    out
}

/// Residual `nabla_{JU} A~ - J nabla_U A~` of (ho) for any `U`.
pub fn ho_residual<T: Ring>(ctx: &ModelContext, alpha: &[T], a: &QJet<T>, u: &V3<T>, t: &TwistorTangent<T>) -> V3<T> {
    let jt = jcal_tangent(ctx, alpha, u, t);
    sub3(&nabla_distinguished(ctx, alpha, a, u, &jt), &jcal(u, &nabla_distinguished(ctx, alpha, a, u, t)))
}

/// Hermitian metric `h(X, Y) = (<X, Y> - i <J X, Y>) / 2` on `Theta`.
pub fn hermitian_metric(u: &V3<Rat>, x: &V3<Rat>, y: &V3<Rat>) -> GaussRat {
    let half = rat(1, 2);
    GaussRat::new(dot3(x, y) * half.clone(), -(dot3(&jcal(u, x), y) * half))
}

/// Section `s = A~ + J B~` of `Theta` with polynomial `Q`-sections `A`, `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaSection {
    pub a: PolyField,
    pub b: PolyField,
}

impl ThetaSection {
    pub fn new(a: PolyField, b: PolyField) -> Result<Self> {
        if a.shape() != FieldShape::QCoeff || b.shape() != FieldShape::QCoeff {
            return Err(Error::Shape("theta sections are built from two Q-sections".into()));
        }
        Ok(Self { a, b })
    }

    /// `(A, B) -> (-A, B)`.
    pub fn conjugate(&self) -> Self {
        Self { a: self.a.scale(&Rat::from_i64(-1)), b: self.b.clone() }
    }

    pub fn jcal(&self) -> Self {
        Self { a: self.b.scale(&Rat::from_i64(-1)), b: self.a.clone() }
    }

    pub fn is_purely_imaginary(&self) -> bool {
        self.b.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.a.is_zero()
    }

    pub fn value_at(&self, p: &[Rat], u: &V3<Rat>) -> V3<Rat> {
        let a: V3<Rat> = std::array::from_fn(|i| self.a.comp(i).eval(p));
        let b: V3<Rat> = std::array::from_fn(|i| self.b.comp(i).eval(p));
        add3(&pi_project(u, &a), &cross(u, &b))
    }

    /// `sigma_*(s_{sigma(J)})` with `sigma(J) = -J`; the differential of the
    /// antipodal map negates vertical vectors.
    pub fn antipodal_value(&self, p: &[Rat], u: &V3<Rat>) -> V3<Rat> {
        let neg_u = scale3(u, &Rat::from_i64(-1));
        scale3(&self.value_at(p, &neg_u), &Rat::from_i64(-1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{AlphaJet, QuatConnection};
    use crate::flatmodel::{build_flat_model, linear_primitive, one_form};

    fn r(v: i64) -> Rat {
        Rat::from_i64(v)
    }

    fn v8(seed: i64) -> Vec<Rat> {
        (0..8).map(|k| rat((seed * 5 + 3 * k) % 7 - 3, 1 + (k + seed) % 4)).collect()
    }

    fn u_pyth() -> V3<Rat> {
        [rat(2, 7), rat(3, 7), rat(6, 7)]
    }

    fn qjet(seed: i64) -> QJet<Rat> {
        QJet {
            value: [rat(seed, 3), rat(-2, 5), rat(1, 1)],
            grad: Mat::from_fn(8, 3, |i, b| rat(((i * 3 + b) as i64 + seed) % 5 - 2, 2)),
        }
    }

    #[test]
    fn projection_forms_agree() {
        let c = build_flat_model(2).unwrap();
        let u = u_pyth();
        let a = [rat(1, 2), rat(-3, 1), rat(5, 4)];
        let p = pi_project(&u, &a);
        assert_eq!(p, pi_project_matrix(&c, &u, &a));
        assert_eq!(pi_project(&u, &p), p);
        assert!(is_zero3(&pi_project(&u, &u)));
        let perp = perp_basis(&u)[0].clone();
        assert_eq!(pi_project(&u, &perp), perp);
    }

    #[test]
    fn vertical_part_basics() {
        let c = build_flat_model(2).unwrap();
        let u = u_pyth();
        let zero = vec![r(0); 8];
        let w = perp_basis(&u)[1].clone();
        let t = TwistorTangent::new(&u, v8(1), w.clone()).unwrap();
        assert_eq!(vertical_part(&c, &zero, &u, &t), w);
        let alpha = v8(2);
        let lift = horizontal_lift(&c, &alpha, &u, &v8(3));
        assert!(is_zero3(&vertical_part(&c, &alpha, &u, &lift)));
        let g = gamma_matrix(&c, &alpha, &v8(3));
        assert_eq!(dot3(&mat_vec3(&g, &u), &u), r(0));
        assert!(TwistorTangent::new(&u, v8(1), u.clone()).is_err());
    }

    #[test]
    fn nabla_examples() {
        let c = build_flat_model(2).unwrap();
        let zero = vec![r(0); 8];
        let u = [r(1), r(0), r(0)];
        let j1 = QJet::constant([r(1), r(0), r(0)], 8);
        let w = [r(0), r(2), r(-3)];
        let t = TwistorTangent::vertical(8, w.clone());
        assert_eq!(nabla_distinguished(&c, &zero, &j1, &u, &t), scale3(&w, &r(-1)));
        let a = QJet::constant([r(2), r(5), r(-1)], 8);
        let h = horizontal_lift(&c, &zero, &u, &v8(4));
        assert!(is_zero3(&nabla_distinguished(&c, &zero, &a, &u, &h)));
    }

    #[test]
    fn nabla_of_distinguished_matches_general_formula() {
        let c = build_flat_model(2).unwrap();
        let u = u_pyth();
        let alpha = v8(5);
        let a = qjet(2);
        let s = SectionJet { a: a.clone(), b: QJet::constant([r(0), r(0), r(0)], 8) };
        let t = TwistorTangent::new(&u, v8(6), perp_basis(&u)[0].clone()).unwrap();
        assert_eq!(nabla_distinguished(&c, &alpha, &a, &u, &t), nabla_section(&c, &alpha, &s, &u, &t));
    }

    #[test]
    fn nabla_commutes_with_jcal() {
        let c = build_flat_model(2).unwrap();
        let u = u_pyth();
        let alpha = v8(1);
        let s = SectionJet { a: qjet(1), b: qjet(4) };
        let t = TwistorTangent::new(&u, v8(2), perp_basis(&u)[1].clone()).unwrap();
        let lhs = nabla_section(&c, &alpha, &s.jcal(), &u, &t);
        let rhs = jcal(&u, &nabla_section(&c, &alpha, &s, &u, &t));
        assert_eq!(lhs, rhs);
        assert_eq!(s.jcal().value(&u), jcal(&u, &s.value(&u)));
    }

    #[test]
    fn leibniz_against_pullback_function() {
        let c = build_flat_model(2).unwrap();
        let alpha = one_form(8, &[(0, Poly::var(1)), (3, Poly::var(2))], 3).unwrap();
        let f = Poly::var(0) + Poly::var(4) * Poly::var(1) + Poly::from_i64(2);
        let a = PolyField::new(FieldShape::QCoeff, vec![Poly::var(2), Poly::from_i64(1), Poly::var(5)], 3).unwrap();
        let fa = PolyField::new(FieldShape::QCoeff, a.comps().iter().map(|x| x.clone() * f.clone()).collect(), 3).unwrap();
        let p = v8(3);
        let u = u_pyth();
        let al = alpha.eval(&p);
        let t = TwistorTangent::new(&u, v8(7), perp_basis(&u)[0].clone()).unwrap();
        let ja = QJet::of_field(&a, 8).unwrap().eval(&p);
        let jfa = QJet::of_field(&fa, 8).unwrap().eval(&p);
        let lhs = nabla_distinguished(&c, &al, &jfa, &u, &t);
        let df: Rat = (0..8).fold(r(0), |acc, i| acc + f.partial(i).eval(&p) * t.x[i].clone());
        let rhs = add3(
            &scale3(&pi_project(&u, &ja.value), &df),
            &scale3(&nabla_distinguished(&c, &al, &ja, &u, &t), &f.eval(&p)),
        );
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn jcal_on_tz_is_complex_and_connection_independent() {
        let c = build_flat_model(2).unwrap();
        let u = u_pyth();
        let t = TwistorTangent::new(&u, v8(1), perp_basis(&u)[0].clone()).unwrap();
        let a1 = v8(2);
        let a2 = v8(6);
        let jt = jcal_tangent(&c, &a1, &u, &t);
        assert_eq!(jt, jcal_tangent(&c, &a2, &u, &t));
        let jjt = jcal_tangent(&c, &a1, &u, &jt);
        assert_eq!(jjt.x, t.x.iter().map(|x| -x.clone()).collect::<Vec<_>>());
        assert_eq!(jjt.w, scale3(&t.w, &r(-1)));
    }

    #[test]
    fn vertical_curvature_example() {
        let u = [r(1), r(0), r(0)];
        let b = [r(0), r(1), r(0)];
        let cc = [r(0), r(0), r(1)];
        let s = [r(0), r(2), r(3)];
        assert_eq!(curvature_vv(&u, &b, &cc, &s), scale3(&jcal(&u, &s), &r(-1)));
    }

    #[test]
    fn self_duality_residual_and_witness() {
        let c = build_flat_model(2).unwrap();
        let mut f = Mat::<Rat>::zeros(8, 8);
        f[(0, 5)] = r(1);
        f[(5, 0)] = r(-1);
        let sd = QuatConnection::new(&c, linear_primitive(&c.p_h_project(&f), 3).unwrap()).unwrap();
        let units = vec![[r(1), r(0), r(0)], u_pyth(), [rat(1, 3), rat(2, 3), rat(2, 3)]];
        assert_eq!(self_duality_witness(&c, &sd.curvature_at(&v8(1)), &units), None);
        let bad = QuatConnection::new(&c, one_form(8, &[(0, Poly::var(1))], 3).unwrap()).unwrap();
        assert!(self_duality_witness(&c, &bad.curvature_at(&v8(1)), &units).is_some());
        let zero = QuatConnection::flat(&c);
        assert_eq!(self_duality_witness(&c, &zero.curvature_at(&v8(1)), &units), None);
    }

    #[test]
    fn difference_formula_example() {
        let c = build_flat_model(2).unwrap();
        let u = [r(1), r(0), r(0)];
        let zero = vec![r(0); 8];
        let mut dx1 = vec![r(0); 8];
        dx1[0] = r(1);
        let a = QJet::constant([r(0), r(1), r(0)], 8);
        let e1 = c.unit_vector::<Rat>(0);
        let t = horizontal_lift(&c, &zero, &u, &e1);
        let lhs = sub3(&nabla_distinguished(&c, &dx1, &a, &u, &t), &nabla_distinguished(&c, &zero, &a, &u, &t));
        assert_eq!(lhs, nabla_difference_formula(&c, &dx1, &u, &e1, &[r(0), r(1), r(0)]));
        // dx1(J_1 e_1) = 0 here, so both sides vanish
        assert!(is_zero3(&lhs));
        let e2 = c.unit_vector::<Rat>(1);
        let t2 = TwistorTangent { x: e2.clone(), w: [r(0), r(0), r(0)] };
        let lhs2 = sub3(&nabla_distinguished(&c, &dx1, &a, &u, &t2), &nabla_distinguished(&c, &zero, &a, &u, &t2));
        assert!(!is_zero3(&lhs2));
        assert_eq!(lhs2, nabla_difference_formula(&c, &dx1, &u, &e2, &a.value));
    }

    #[test]
    fn beta_tilde_is_zero_one() {
        let c = build_flat_model(2).unwrap();
        let u = u_pyth();
        let alpha = v8(1);
        let beta = v8(4);
        let s = perp_basis(&u)[0].clone();
        let t = TwistorTangent::new(&u, v8(3), perp_basis(&u)[1].clone()).unwrap();
        let bt = beta_tilde(&c, &beta, &u, &t.x, &s);
        let part = zero_one_part(&c, &alpha, &u, &t, |tt| beta_tilde(&c, &beta, &u, &tt.x, &s));
        assert_eq!(part, bt);
        let twist = zero_one_part(&c, &alpha, &u, &t, |tt| beta_twist_difference(&beta, &u, &tt.x, &s));
        assert_eq!(twist, bt);
        let jt = jcal_tangent(&c, &alpha, &u, &t);
        let b_jt = beta_tilde(&c, &beta, &u, &jt.x, &s);
        assert_ne!(b_jt, jcal(&u, &bt));
        assert_eq!(b_jt, scale3(&jcal(&u, &bt), &r(-1)));
    }

    #[test]
    fn twisted_curvature_is_j_invariant_for_self_dual_data() {
        let c = build_flat_model(2).unwrap();
        let mut f = Mat::<Rat>::zeros(8, 8);
        f[(1, 6)] = r(2);
        f[(6, 1)] = r(-2);
        let fh = c.p_h_project(&f);
        let d = QuatConnection::new(&c, linear_primitive(&fh, 3).unwrap()).unwrap();
        let beta = linear_primitive(&c.p_h_project(&f.transpose()), 3).unwrap();
        let db = check_beta(&c, &beta).unwrap().map(|p| p.eval(&[]));
        let p = v8(2);
        let al = d.alpha().eval(&p);
        let curv = d.curvature_at(&p);
        let u = u_pyth();
        let s = perp_basis(&u)[0].clone();
        let t1 = TwistorTangent::new(&u, v8(3), perp_basis(&u)[1].clone()).unwrap();
        let t2 = TwistorTangent::new(&u, v8(5), perp_basis(&u)[0].clone()).unwrap();
        let j1 = jcal_tangent(&c, &al, &u, &t1);
        let j2 = jcal_tangent(&c, &al, &u, &t2);
        let lhs = twisted_curvature(&c, &al, &curv, &db, &u, &j1, &j2, &s);
        let rhs = twisted_curvature(&c, &al, &curv, &db, &u, &t1, &t2, &s);
        assert_eq!(lhs, rhs);
        let bad = one_form(8, &[(0, Poly::var(1))], 3).unwrap();
        assert_eq!(check_beta(&c, &bad).unwrap_err(), Error::NotQHermitian);
    }

    #[test]
    fn gauge_examples() {
        let c = build_flat_model(2).unwrap();
        let pt = TwistorPoint::new(v8(1), u_pyth()).unwrap();
        let al = v8(2);
        let t = TwistorTangent::new(&pt.u, v8(3), perp_basis(&pt.u)[0].clone()).unwrap();
        let one = Poly::from_i64(1);
        assert_eq!(gauge_transform(&c, &al, &one, &Poly::zero(), &pt, &t).unwrap(), r(0));
        assert_eq!(gauge_transform(&c, &al, &one, &Poly::from_i64(7), &pt, &t).unwrap(), r(0));
        let theta = Poly::var(0).scale(&r(3)) - Poly::var(5);
        let expected = -(t.x[0].clone() * r(3) - t.x[5].clone());
        assert_eq!(gauge_transform(&c, &al, &one, &theta, &pt, &t).unwrap(), expected);
        assert_eq!(gauge_transform(&c, &al, &Poly::from_i64(-1), &theta, &pt, &t).unwrap_err(), Error::NonPositive);
    }

    #[test]
    fn holomorphicity_examples() {
        let c = build_flat_model(2).unwrap();
        let zero = vec![r(0); 8];
        let a = QJet::constant([r(2), r(1), r(-1)], 8);
        for u in [[r(0), r(1), r(0)], u_pyth()] {
            for k in 0..8 {
                assert!(is_zero3(&holomorphicity_residual(&c, &zero, &a, &u, &c.unit_vector(k))));
            }
        }
        let al = v8(3);
        let a = qjet(1);
        let u = u_pyth();
        let form = holomorphicity_form(&c, &al, &a, &u);
        let da = crate::connection::covariant_q(&c, &al, &a);
        assert_eq!(form, crate::ehrep::t_real(&c, &u, &da));
        let vert = TwistorTangent::vertical(8, perp_basis(&u)[0].clone());
        assert!(is_zero3(&ho_residual(&c, &al, &a, &u, &vert)));
        let x = v8(5);
        let h = horizontal_lift(&c, &al, &u, &x);
        assert_eq!(ho_residual(&c, &al, &a, &u, &h), holomorphicity_residual(&c, &al, &a, &u, &x));
    }

    #[test]
    fn conjugation() {
        let a = PolyField::new(FieldShape::QCoeff, vec![Poly::var(0), Poly::from_i64(1), Poly::var(2)], 3).unwrap();
        let b = PolyField::new(FieldShape::QCoeff, vec![Poly::from_i64(2), Poly::var(3), Poly::zero()], 3).unwrap();
        let z = PolyField::zero(FieldShape::QCoeff, 3);
        let s = ThetaSection::new(a.clone(), b.clone()).unwrap();
        assert_eq!(s.conjugate().conjugate(), s);
        let p = v8(2);
        let u = u_pyth();
        assert_eq!(s.conjugate().value_at(&p, &u), s.antipodal_value(&p, &u));
        let dist = ThetaSection::new(a.clone(), z.clone()).unwrap();
        assert_eq!(dist.conjugate().value_at(&p, &u), scale3(&dist.value_at(&p, &u), &r(-1)));
        let js = dist.jcal();
        assert!(js.is_real());
        assert_eq!(js.conjugate(), js);
        let _ = AlphaJet::<Rat>::constant(vec![r(0); 8]);
    }

    #[test]
    fn hermitian_metric_is_hermitian() {
        let u = u_pyth();
        let [x, y] = perp_basis(&u);
        assert_eq!(hermitian_metric(&u, &x, &y), hermitian_metric(&u, &y, &x).conj());
        assert!(hermitian_metric(&u, &x, &x).is_real());
    }
}
