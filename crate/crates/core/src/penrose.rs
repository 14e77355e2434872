//! The Penrose operator `P^D = pi_s3 o D` on sections of `Q`, the second
//! covariant derivative `D^2 A` and the Weitzenboeck identities built on
//! `trace_g(B~)`.
//!
//! A `T*M (x) Q`-valued quantity is stored as a `4n x 3` matrix with row `k`
//! the value on `e_k` in `Q` coordinates, the layout the weight operator
//! acts on.

use serde::Serialize;

use crate::connection::{covariant_q, eta_from_ricci, gamma_matrix, s_alpha, QJet, QuatConnection};
use crate::ehrep::{apply_flat, weight_operator, Projectors, WeightMatrix};
use crate::error::{Error, Result};
use crate::flatmodel::{codifferential, FieldShape, ModelContext, PolyField};
use crate::matrix::Mat;
use crate::poly::Poly;
use crate::scalar::{Rat, Ring};
use crate::twistor::holomorphicity_form;

/// Weight operator with its projectors, computed once per model.
#[derive(Clone, Debug)]
pub struct PenroseContext {
    pub ctx: ModelContext,
    pub weight: WeightMatrix,
    pub proj: Projectors,
}

impl PenroseContext {
    pub fn new(ctx: &ModelContext) -> Self {
        let weight = weight_operator(ctx);
        let proj = weight.projectors();
        Self { ctx: ctx.clone(), weight, proj }
    }
}

/// Value of `P^D A` at a point: an element of the `-2` eigenspace of `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct PenroseValue {
    pub value: Mat<Rat>,
}

impl PenroseValue {
    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }
}

/// `DA` at `p` as a `4n x 3` form.
pub fn covariant_at(conn: &QuatConnection, a: &PolyField, p: &[Rat]) -> Result<Mat<Rat>> {
    let d = conn.ctx().dim();
    let jet = QJet::of_field(a, d)?.eval(p);
    Ok(covariant_q(conn.ctx(), &conn.alpha().eval(p), &jet))
}

/// `P^D A (p) = pi_s3(DA(p))`.
pub fn penrose_operator(pc: &PenroseContext, conn: &QuatConnection, a: &PolyField, p: &[Rat]) -> Result<PenroseValue> {
    let da = covariant_at(conn, a, p)?;
    Ok(PenroseValue { value: apply_flat(&pc.proj.pi_s3, &da) })
}

/// `(4 DA - B(DA)) / 6`, the same value through the eigenvalue formula.
pub fn penrose_operator_formula(pc: &PenroseContext, conn: &QuatConnection, a: &PolyField, p: &[Rat]) -> Result<PenroseValue> {
    let da = covariant_at(conn, a, p)?;
    let v = da.scale(&Rat::from_i64(4)).sub(&pc.weight.apply(&da)).scale(&crate::rat(1, 6));
    Ok(PenroseValue { value: v })
}

/// `(D_{e_k} Phi)(e_j) = d_k Phi(e_j) + Gamma(e_k) Phi(e_j) - Phi(S_{e_k} e_j)`
/// for a `T*M (x) Q` field.
pub fn covariant_tq(ctx: &ModelContext, alpha: &[Poly], phi: &Mat<Poly>, k: usize) -> Mat<Poly> {
    let d = ctx.dim();
    let ek = ctx.unit_vector::<Poly>(k);
    let s = s_alpha(ctx, alpha, &ek);
    let g = gamma_matrix(ctx, alpha, &ek);
    Mat::from_fn(d, 3, |j, c| {
        let mut v = phi[(j, c)].partial(k);
        for b in 0..3 {
            if !g[(c, b)].is_zero() {
                v = v + g[(c, b)].clone() * phi[(j, b)].clone();
            }
        }
        for m in 0..d {
            if !s[(m, j)].is_zero() {
                v = v - s[(m, j)].clone() * phi[(m, c)].clone();
            }
        }
        v
    })
}

/// `(D^2 A)_{e_i, e_j}`: `slices[i]` is the `T*M (x) Q` field `D_{e_i}(DA)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondDerivative<T> {
    pub slices: Vec<Mat<T>>,
}

impl<T: Ring> SecondDerivative<T> {
    pub fn dim(&self) -> usize {
        self.slices.len()
    }

    pub fn get(&self, i: usize, j: usize) -> [T; 3] {
        std::array::from_fn(|c| self.slices[i][(j, c)].clone())
    }

    /// Part symmetric in the two form slots.
    pub fn symmetric_part(&self) -> Self {
        let d = self.dim();
        let half = T::from_rat(&crate::rat(1, 2));
        let slices = (0..d)
            .map(|i| Mat::from_fn(d, 3, |j, c| (self.slices[i][(j, c)].clone() + self.slices[j][(i, c)].clone()) * half.clone()))
            .collect();
        Self { slices }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { slices: self.slices.iter().zip(&o.slices).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale(&self, r: &Rat) -> Self {
        Self { slices: self.slices.iter().map(|a| a.scale_rat(r)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.slices.iter().all(Mat::is_zero)
    }

    /// `sum_i (D^2 A)_{e_i, e_i}`.
    pub fn trace_g(&self) -> [T; 3] {
        std::array::from_fn(|c| (0..self.dim()).fold(T::zero(), |acc, i| acc + self.slices[i][(i, c)].clone()))
    }
}

impl SecondDerivative<Poly> {
    pub fn eval(&self, p: &[Rat]) -> SecondDerivative<Rat> {
        SecondDerivative { slices: self.slices.iter().map(|m| m.map(|x| x.eval(p))).collect() }
    }

    pub fn degree(&self) -> u32 {
        self.slices.iter().flat_map(|m| m.entries().iter().map(Poly::degree)).max().unwrap_or(0)
    }
}

/// `D A` as a polynomial `T*M (x) Q` field.
pub fn first_covariant(conn: &QuatConnection, a: &PolyField) -> Result<Mat<Poly>> {
    let ctx = conn.ctx();
    let jet = QJet::of_field(a, ctx.dim())?;
    Ok(covariant_q(ctx, conn.alpha().comps(), &jet))
}

fn check_degree(op: &'static str, needed: u32, bound: u32) -> Result<()> {
    if needed > bound {
        return Err(Error::DegreeOverflow { op, needed, bound });
    }
    Ok(())
}

/// Derivative of a `T*M (x) Q` field in every direction.
pub fn covariant_of_tq(ctx: &ModelContext, alpha: &[Poly], phi: &Mat<Poly>) -> SecondDerivative<Poly> {
    SecondDerivative { slices: (0..ctx.dim()).map(|k| covariant_tq(ctx, alpha, phi, k)).collect() }
}

/// `(D^2 A)_{X,Y} = D_X(D_Y A) - D_{D_X Y} A` on coordinate fields.
pub fn second_covariant(conn: &QuatConnection, a: &PolyField) -> Result<SecondDerivative<Poly>> {
    let ctx = conn.ctx();
    let da_deg = conn.alpha().degree() + a.degree();
    check_degree("second_covariant", a.degree().max(da_deg + conn.alpha().degree()), ctx.degree_bound())?;
    let da = first_covariant(conn, a)?;
    Ok(covariant_of_tq(ctx, conn.alpha().comps(), &da))
}

/// `trace_g(B~)(T) = sum_i B(T(e_i, .))(e_i)`.
pub fn trace_b_tilde<T: Ring>(ctx: &ModelContext, t: &SecondDerivative<T>) -> [T; 3] {
    let d = ctx.dim();
    let js: Vec<Mat<T>> = (0..3).map(|a| ctx.j_matrix(a)).collect();
    std::array::from_fn(|j| {
        let mut acc = T::zero();
        for c in 0..3 {
            let m = js[j].commutator(&js[c]);
            for i in 0..d {
                for k in 0..d {
                    if !m[(k, i)].is_zero() && !t.slices[i][(k, c)].is_zero() {
                        acc = acc + t.slices[i][(k, c)].clone() * m[(k, i)].clone();
                    }
                }
            }
        }
        acc
    })
}

/// `B~ = Id (x) B` applied slice by slice.
pub fn b_tilde(pc: &PenroseContext, t: &SecondDerivative<Poly>) -> SecondDerivative<Poly> {
    let m = pc.weight.mat.map(|r| Poly::constant(r.clone()));
    SecondDerivative { slices: t.slices.iter().map(|s| apply_flat(&m, s)).collect() }
}

/// Residual of `B~(D^2 A) - (4 D^2 A - 6 D(P^D A))` as a field.
pub fn operator_identity_residual(pc: &PenroseContext, conn: &QuatConnection, a: &PolyField) -> Result<SecondDerivative<Poly>> {
    let ctx = conn.ctx();
    let d2 = second_covariant(conn, a)?;
    let da = first_covariant(conn, a)?;
    let pi_s3 = pc.proj.pi_s3.map(|r| Poly::constant(r.clone()));
    let p_da = apply_flat(&pi_s3, &da);
    let d_p = covariant_of_tq(ctx, conn.alpha().comps(), &p_da);
    let rhs = d2.scale(&Rat::from_i64(4)).sub(&d_p.scale(&Rat::from_i64(6)));
    Ok(b_tilde(pc, &d2).sub(&rhs))
}

/// Both sides of `<trace_g(B~)(D^2 A), A> = -8 |A|^2 trace_g(eta)` at `p`.
pub fn trace_pairing_sides(conn: &QuatConnection, a: &PolyField, p: &[Rat]) -> Result<(Rat, Rat)> {
    let ctx = conn.ctx();
    let d2 = second_covariant(conn, a)?.eval(p);
    let tr = trace_b_tilde(ctx, &d2);
    let av: [Rat; 3] = std::array::from_fn(|c| a.comp(c).eval(p));
    let lhs = ModelContext::q_inner(&tr, &av);
    let eta = eta_from_ricci(ctx, &conn.curvature_at(p).ricci());
    let rhs = Rat::from_i64(-8) * ModelContext::q_inner(&av, &av) * eta.trace();
    Ok((lhs, rhs))
}

/// `trace_g(eta) + 2 |alpha|^2` as a polynomial, for co-closed `alpha`.
pub fn trace_eta_residual(conn: &QuatConnection) -> Result<Poly> {
    if !codifferential(conn.alpha())?.is_zero() {
        return Err(Error::NotCoClosed);
    }
    let ctx = conn.ctx();
    let eta = eta_from_ricci(ctx, &conn.curvature()?.ricci());
    let norm = conn.alpha().comps().iter().fold(Poly::zero(), |acc, c| acc + c.clone() * c.clone());
    Ok(eta.trace() + norm.scale(&Rat::from_i64(2)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeitzenbockReport {
    /// `B~(D^2 A) = 4 D^2 A - 6 D(P^D A)` as fields.
    pub operator_identity: bool,
    /// Pointwise `<trace_g(B~)(D^2 A), A> = -8 |A|^2 trace_g(eta)`.
    pub trace_pairing: bool,
    /// `trace_g(eta) = -2 |alpha|^2` everywhere.
    pub trace_eta: bool,
    /// `trace_g(B~)` kills the symmetric part of `D^2 A`.
    pub symmetric_cancels: bool,
}

impl WeitzenbockReport {
    pub fn all(&self) -> bool {
        self.operator_identity && self.trace_pairing && self.trace_eta && self.symmetric_cancels
    }
}

pub fn weitzenbock_checks(pc: &PenroseContext, conn: &QuatConnection, a: &PolyField, points: &[Vec<Rat>]) -> Result<WeitzenbockReport> {
    let trace_eta = trace_eta_residual(conn)?.is_zero();
    let operator_identity = operator_identity_residual(pc, conn, a)?.is_zero();
    let d2 = second_covariant(conn, a)?;
    let mut trace_pairing = true;
    let mut symmetric_cancels = true;
    for p in points {
        let (l, r) = trace_pairing_sides(conn, a, p)?;
        trace_pairing &= l == r;
        let sym = d2.eval(p).symmetric_part();
        symmetric_cancels &= trace_b_tilde(conn.ctx(), &sym).iter().all(Ring::is_zero);
    }
    Ok(WeitzenbockReport { operator_identity, trace_pairing, trace_eta, symmetric_cancels })
}

/// Pointwise comparison of the two sides of the Penrose transform.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformSample {
    pub holomorphic: bool,
    pub penrose_zero: bool,
}

impl TransformSample {
    pub fn agrees(&self) -> bool {
        self.holomorphic == self.penrose_zero
    }
}

/// Holomorphicity of `A~` in horizontal directions over `units`, against
/// `P^D A(p) = 0`.
pub fn penrose_transform_check(
    pc: &PenroseContext,
    conn: &QuatConnection,
    a: &PolyField,
    p: &[Rat],
    units: &[[Rat; 3]],
) -> Result<TransformSample> {
    if !conn.predicates().self_dual {
        return Err(Error::NotSelfDual);
    }
    let ctx = conn.ctx();
    let jet = QJet::of_field(a, ctx.dim())?.eval(p);
    let alpha = conn.alpha().eval(p);
    let holomorphic = units.iter().all(|u| holomorphicity_form(ctx, &alpha, &jet, u).is_zero());
    let penrose_zero = penrose_operator(pc, conn, a, p)?.is_zero();
    Ok(TransformSample { holomorphic, penrose_zero })
}

/// Affine `Q`-section `A(x) = A0 + sum_k (x - p)_k C(e_k)` with `C` a `4n x 3` form.
pub fn affine_section(a0: &[Rat; 3], c: &Mat<Rat>, p: &[Rat], bound: u32) -> Result<PolyField> {
    let comps = (0..3)
        .map(|b| {
            let mut f = Poly::constant(a0[b].clone());
            for k in 0..c.rows() {
                if !c[(k, b)].is_zero() {
                    f = f + (Poly::var(k) - Poly::constant(p[k].clone())).scale(&c[(k, b)]);
                }
            }
            f
        })
        .collect();
    PolyField::new(FieldShape::QCoeff, comps, bound)
}

/// A section in the kernel of `P^D` at `p`: `dA(p) = 2 pi_s3(alpha(p) (x) A(p)) + pi_h(phi)`,
/// so that `DA(p) = dA(p) + B(alpha (x) A)(p)` has no `-2` component.
/// For `alpha = 0` the section lies in the kernel everywhere.
pub fn kernel_member(pc: &PenroseContext, alpha_p: &[Rat], a0: &[Rat; 3], phi: &Mat<Rat>, p: &[Rat], bound: u32) -> Result<PolyField> {
    let aa = Mat::outer(alpha_p, a0);
    let s3 = apply_flat(&pc.proj.pi_s3, &aa).scale(&Rat::from_i64(2));
    let c = s3.add(&apply_flat(&pc.proj.pi_h, phi));
    affine_section(a0, &c, p, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatmodel::{build_flat_model, constant_one_form, linear_primitive, one_form, ModelContext};
    use crate::rat;

    fn r(v: i64) -> Rat {
        Rat::from_i64(v)
    }

    fn pt(seed: i64) -> Vec<Rat> {
        (0..8).map(|k| rat((seed * 3 + 5 * k) % 9 - 4, 1 + (k + seed) % 3)).collect()
    }

    fn qf(c: Vec<Poly>) -> PolyField {
        PolyField::new(FieldShape::QCoeff, c, 3).unwrap()
    }

    fn rot_form(ctx: &ModelContext) -> QuatConnection {
        // x2 dx1 - x1 dx2: co-closed, not closed
        let a = one_form(8, &[(0, Poly::var(1)), (1, -Poly::var(0))], 3).unwrap();
        QuatConnection::new(ctx, a).unwrap()
    }

    #[test]
    fn routes_agree_and_value_is_in_s3() {
        let c = build_flat_model(2).unwrap();
        let pc = PenroseContext::new(&c);
        let conn = rot_form(&c);
        let a = qf(vec![Poly::var(0) * Poly::var(3), Poly::var(2), Poly::from_i64(1)]);
        for s in 0..5 {
            let v = penrose_operator(&pc, &conn, &a, &pt(s)).unwrap();
            assert_eq!(v, penrose_operator_formula(&pc, &conn, &a, &pt(s)).unwrap());
            assert!(apply_flat(&pc.proj.pi_h, &v.value).is_zero());
        }
        let flat = QuatConnection::flat(&c);
        let konst = qf(vec![Poly::from_i64(2), Poly::from_i64(-1), Poly::zero()]);
        assert!(penrose_operator(&pc, &flat, &konst, &pt(1)).unwrap().is_zero());
    }

    #[test]
    fn kernel_members() {
        let c = build_flat_model(2).unwrap();
        let pc = PenroseContext::new(&c);
        let phi = Mat::from_fn(8, 3, |k, b| rat((k * 3 + b) as i64 % 5 - 2, 3));
        let zero = vec![r(0); 8];
        let a = kernel_member(&pc, &zero, &[r(1), r(2), r(-1)], &phi, &zero, 3).unwrap();
        let flat = QuatConnection::flat(&c);
        for s in 0..4 {
            assert!(penrose_operator(&pc, &flat, &a, &pt(s)).unwrap().is_zero());
        }
        let conn = rot_form(&c);
        let p = pt(2);
        let a = kernel_member(&pc, &conn.alpha().eval(&p), &[r(1), r(0), r(3)], &phi, &p, 3).unwrap();
        assert!(penrose_operator(&pc, &conn, &a, &p).unwrap().is_zero());
    }

    #[test]
    fn flat_second_derivative_is_hessian() {
        let c = build_flat_model(2).unwrap();
        let flat = QuatConnection::flat(&c);
        let a = qf(vec![Poly::var(0) * Poly::var(1), Poly::var(2) * Poly::var(2), Poly::var(7)]);
        let d2 = second_covariant(&flat, &a).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let h: [Poly; 3] = std::array::from_fn(|b| a.comp(b).partial(j).partial(i));
                assert_eq!(d2.get(i, j), h);
            }
        }
        assert!(trace_b_tilde(&c, &d2).iter().all(Ring::is_zero));
    }

    #[test]
    fn antisymmetric_part_is_curvature() {
        let c = build_flat_model(2).unwrap();
        let conn = QuatConnection::new(&c, one_form(8, &[(0, Poly::var(1))], 3).unwrap()).unwrap();
        let a = qf(vec![Poly::var(4), Poly::from_i64(2), Poly::var(1) - Poly::var(6)]);
        let p = pt(3);
        let d2 = second_covariant(&conn, &a).unwrap().eval(&p);
        let curv = conn.curvature_at(&p);
        let av: [Rat; 3] = std::array::from_fn(|b| a.comp(b).eval(&p));
        let am = c.q_matrix(&av);
        for i in 0..8 {
            for j in 0..8 {
                let lhs: [Rat; 3] = std::array::from_fn(|b| d2.get(i, j)[b].clone() - d2.get(j, i)[b].clone());
                assert_eq!(lhs, c.q_coords(&curv.get(i, j).commutator(&am)));
            }
        }
    }

    #[test]
    fn too_small_bound_overflows() {
        let c = ModelContext::new(2, 2).unwrap();
        let conn = QuatConnection::new(&c, one_form(8, &[(0, Poly::var(1))], 2).unwrap()).unwrap();
        let a = qf2(vec![Poly::var(4), Poly::zero(), Poly::zero()]);
        assert!(matches!(second_covariant(&conn, &a), Err(Error::DegreeOverflow { .. })));
    }

    fn qf2(c: Vec<Poly>) -> PolyField {
        PolyField::new(FieldShape::QCoeff, c, 2).unwrap()
    }

    #[test]
    fn constant_trace_matches_expansion() {
        let c = build_flat_model(2).unwrap();
        let vals: Vec<Rat> = (0..8).map(|k| rat(k % 3 - 1, 2)).collect();
        let conn = QuatConnection::new(&c, constant_one_form(&vals, 3)).unwrap();
        let av = [r(1), r(-2), r(3)];
        let a = qf(av.iter().map(|x| Poly::constant(x.clone())).collect());
        let d2 = second_covariant(&conn, &a).unwrap().eval(&[]);
        let mut expected = [r(0), r(0), r(0)];
        for i in 0..8 {
            let ei = c.unit_vector::<Rat>(i);
            let g = gamma_matrix(&c, &vals, &ei);
            let sii = s_alpha(&c, &vals, &ei).mul_vec(&ei);
            let m = g.mul(&g).sub(&gamma_matrix(&c, &vals, &sii));
            let v = m.mul_vec(&av);
            for b in 0..3 {
                expected[b] = expected[b].clone() + v[b].clone();
            }
        }
        assert_eq!(d2.trace_g(), expected);
    }

    #[test]
    fn weitzenbock_on_rotation_form() {
        let c = build_flat_model(2).unwrap();
        let pc = PenroseContext::new(&c);
        let conn = rot_form(&c);
        let a = qf(vec![Poly::var(0) + Poly::var(5), Poly::from_i64(2), Poly::var(3)]);
        let pts: Vec<Vec<Rat>> = (0..4).map(pt).collect();
        let rep = weitzenbock_checks(&pc, &conn, &a, &pts).unwrap();
        assert!(rep.all(), "{rep:?}");
    }

    #[test]
    fn trace_eta_for_constant_alpha_and_errors() {
        let c = build_flat_model(2).unwrap();
        let conn = QuatConnection::new(&c, constant_one_form(&[r(1), r(0), r(0), r(2), r(0), r(0), r(0), r(0)], 3)).unwrap();
        assert!(trace_eta_residual(&conn).unwrap().is_zero());
        let a = qf(vec![Poly::from_i64(1), Poly::zero(), Poly::zero()]);
        let (l, rr) = trace_pairing_sides(&conn, &a, &[]).unwrap();
        assert_eq!(l, rr);
        assert_eq!(rr, r(-8) * r(-2) * r(5));
        let bad = QuatConnection::new(&c, one_form(8, &[(0, Poly::var(0))], 3).unwrap()).unwrap();
        assert_eq!(trace_eta_residual(&bad).unwrap_err(), Error::NotCoClosed);
    }

    #[test]
    fn transform_biconditional_examples() {
        let c = build_flat_model(2).unwrap();
        let pc = PenroseContext::new(&c);
        let units = crate::ehrep::certified_units();
        let flat = QuatConnection::flat(&c);
        let konst = qf(vec![Poly::from_i64(1), Poly::from_i64(1), Poly::zero()]);
        let s = penrose_transform_check(&pc, &flat, &konst, &pt(0), &units).unwrap();
        assert!(s.holomorphic && s.penrose_zero);
        let dx1 = QuatConnection::new(&c, constant_one_form(&c.unit_vector::<Rat>(0), 3)).unwrap();
        let j1 = qf(vec![Poly::from_i64(1), Poly::zero(), Poly::zero()]);
        assert!(penrose_transform_check(&pc, &dx1, &j1, &pt(1), &units).unwrap().agrees());
        let generic = qf(vec![Poly::var(0), Poly::var(1) * Poly::var(2), Poly::zero()]);
        let s = penrose_transform_check(&pc, &dx1, &generic, &pt(1), &units).unwrap();
        assert!(s.agrees() && !s.penrose_zero);
        let mut f = Mat::<Rat>::zeros(8, 8);
        f[(0, 1)] = r(1);
        f[(1, 0)] = r(-1);
        let sd = QuatConnection::new(&c, linear_primitive(&c.p_h_project(&f), 3).unwrap()).unwrap();
        let p = pt(2);
        let phi = Mat::from_fn(8, 3, |k, b| rat((k + 2 * b) as i64 % 3 - 1, 2));
        let km = kernel_member(&pc, &sd.alpha().eval(&p), &[r(2), r(1), r(0)], &phi, &p, 3).unwrap();
        let s = penrose_transform_check(&pc, &sd, &km, &p, &units).unwrap();
        assert!(s.holomorphic && s.penrose_zero);
        let nsd = QuatConnection::new(&c, one_form(8, &[(0, Poly::var(1))], 3).unwrap()).unwrap();
        assert_eq!(penrose_transform_check(&pc, &nsd, &km, &p, &units).unwrap_err(), Error::NotSelfDual);
    }
}
