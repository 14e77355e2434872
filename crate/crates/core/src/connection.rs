//! Quaternionic connections `D = d + S^alpha` on the flat model.
//!
//! Every tensor here is produced from the 1-jet of `alpha` (its value and
//! first partials). The same generic code runs on pointwise rational jets,
//! on `f64` jets and on the polynomial jet of a whole field, where it yields
//! exact polynomial identities.

use crate::error::{Error, Result};
use crate::flatmodel::{exterior_derivative, primitive, DiffForm, FieldShape, ModelContext, PolyField};
use crate::matrix::Mat;
use crate::poly::Poly;
use crate::scalar::{dot, rat, Rat, Ring};

/// Value and first derivatives of a 1-form at a point (or as fields):
/// `grad[(i, j)] = d_i alpha_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaJet<T> {
    pub value: Vec<T>,
    pub grad: Mat<T>,
}

impl<T: Ring> AlphaJet<T> {
    pub fn constant(value: Vec<T>) -> Self {
        let d = value.len();
        Self { value, grad: Mat::zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    /// `(D alpha)^sym` for the flat base connection.
    pub fn d_alpha_sym(&self) -> Mat<T> {
        self.grad.sym_part()
    }

    /// `d alpha` as a skew bilinear form in the convention
    /// `(dx_i ^ dx_j)(e_i, e_j) = 1/2`, i.e. the skew part of `D alpha`.
    pub fn d_alpha_half(&self) -> Mat<T> {
        self.grad.skew_part()
    }
}

impl AlphaJet<Poly> {
    pub fn of_field(alpha: &PolyField) -> Self {
        let d = alpha.comps().len();
        Self {
            value: alpha.comps().to_vec(),
            grad: Mat::from_fn(d, d, |i, j| alpha.comp(j).partial(i)),
        }
    }

    pub fn eval(&self, p: &[Rat]) -> AlphaJet<Rat> {
        AlphaJet { value: self.value.iter().map(|c| c.eval(p)).collect(), grad: self.grad.map(|c| c.eval(p)) }
    }

    pub fn eval_f64(&self, p: &[f64]) -> AlphaJet<f64> {
        AlphaJet {
            value: self.value.iter().map(|c| c.eval_f64(p)).collect(),
            grad: self.grad.map(|c| c.eval_f64(p)),
        }
    }
}

/// The endomorphism `S^alpha_X`:
/// `Y -> alpha(X) Y + alpha(Y) X - sum_i (alpha(J_i X) J_i Y + alpha(J_i Y) J_i X)`.
pub fn s_alpha<T: Ring>(ctx: &ModelContext, alpha: &[T], x: &[T]) -> Mat<T> {
    let d = ctx.dim();
    let ax = dot(alpha, x);
    let mut m = Mat::identity(d).scale(&ax).add(&Mat::outer(x, alpha));
    for a in 0..3 {
        let j = ctx.j(a);
        let jx = j.apply(x);
        let a_jx = dot(alpha, &jx);
        let jm: Mat<T> = j.matrix();
        m = m.sub(&jm.scale(&a_jx)).sub(&Mat::outer(&jx, &j.pullback(alpha)));
    }
    m
}

/// `S^alpha_X Y` assembled summand by summand from vectors; used as an
/// independent oracle for [`s_alpha`].
pub fn s_alpha_apply<T: Ring>(ctx: &ModelContext, alpha: &[T], x: &[T], y: &[T]) -> Vec<T> {
    let ax = dot(alpha, x);
    let ay = dot(alpha, y);
    let mut out: Vec<T> = y.iter().zip(x).map(|(yi, xi)| ax.clone() * yi.clone() + ay.clone() * xi.clone()).collect();
    for a in 0..3 {
        let j = ctx.j(a);
        let jx = j.apply(x);
        let jy = j.apply(y);
        let c1 = dot(alpha, &jx);
        let c2 = dot(alpha, &jy);
        for k in 0..out.len() {
            out[k] = out[k].clone() - c1.clone() * jy[k].clone() - c2.clone() * jx[k].clone();
        }
    }
    out
}

/// The `so(3)` matrix `Gamma(X)` with `[S^alpha_X, J_a] = sum_b Gamma(X)_{ba} J_b`,
/// read off the expansion `[S^alpha_X, A] = sum_b alpha([J_b, A] X) J_b`.
pub fn gamma_matrix<T: Ring>(ctx: &ModelContext, alpha: &[T], x: &[T]) -> Mat<T> {
    let a_jx: Vec<T> = (0..3).map(|c| dot(alpha, &ctx.j(c).apply(x))).collect();
    Mat::from_fn(3, 3, |b, a| {
        let br = ctx.bracket(b, a);
        (0..3).fold(T::zero(), |acc, c| acc + a_jx[c].clone() * T::from_i64(br[c]))
    })
}

/// Value and first partials of a `Q`-section `A = sum_b a_b J_b`:
/// `grad[(i, b)] = d_i a_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct QJet<T> {
    pub value: [T; 3],
    pub grad: Mat<T>,
}

impl<T: Ring> QJet<T> {
    pub fn constant(value: [T; 3], dim: usize) -> Self {
        Self { value, grad: Mat::zeros(dim, 3) }
    }

    /// `d_X A` in `Q` coordinates.
    pub fn derivative(&self, x: &[T]) -> [T; 3] {
        std::array::from_fn(|b| (0..x.len()).fold(T::zero(), |acc, i| acc + x[i].clone() * self.grad[(i, b)].clone()))
    }
}

impl QJet<Poly> {
    pub fn of_field(a: &PolyField, dim: usize) -> Result<Self> {
        if a.shape() != FieldShape::QCoeff {
            return Err(Error::Shape(format!("expected a Q-section, got {:?}", a.shape())));
        }
        Ok(Self {
            value: std::array::from_fn(|b| a.comp(b).clone()),
            grad: Mat::from_fn(dim, 3, |i, b| a.comp(b).partial(i)),
        })
    }

    pub fn eval(&self, p: &[Rat]) -> QJet<Rat> {
        QJet { value: std::array::from_fn(|b| self.value[b].eval(p)), grad: self.grad.map(|c| c.eval(p)) }
    }

    pub fn eval_f64(&self, p: &[f64]) -> QJet<f64> {
        QJet { value: std::array::from_fn(|b| self.value[b].eval_f64(p)), grad: self.grad.map(|c| c.eval_f64(p)) }
    }
}

/// `D_X A = d_X A + [S^alpha_X, A]`, in `Q` coordinates.
pub fn covariant_q_along<T: Ring>(ctx: &ModelContext, alpha: &[T], a: &QJet<T>, x: &[T]) -> [T; 3] {
    let g = gamma_matrix(ctx, alpha, x);
    let ga = g.mul_vec(&a.value);
    let da = a.derivative(x);
    std::array::from_fn(|b| da[b].clone() + ga[b].clone())
}

/// `DA` as a `4n x 3` form: row `k` is `D_{e_k} A`.
pub fn covariant_q<T: Ring>(ctx: &ModelContext, alpha: &[T], a: &QJet<T>) -> Mat<T> {
    let d = ctx.dim();
    let mut out = Mat::zeros(d, 3);
    for k in 0..d {
        let v = covariant_q_along(ctx, alpha, a, &ctx.unit_vector(k));
        for (b, vb) in v.into_iter().enumerate() {
            out[(k, b)] = vb;
        }
    }
    out
}

/// Curvature tensor stored on index pairs `i < j`: `R_{e_i, e_j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curvature<T> {
    dim: usize,
    pairs: Vec<Mat<T>>,
}

fn pair_index(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < dim);
    i * dim - i * (i + 1) / 2 + (j - i - 1)
}

impl<T: Ring> Curvature<T> {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Mat<T>) -> Self {
        let mut pairs = Vec::with_capacity(dim * (dim - 1) / 2);
        for i in 0..dim {
            for j in i + 1..dim {
                pairs.push(f(i, j));
            }
        }
        Self { dim, pairs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R_{e_i, e_j}`, antisymmetric in `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> Mat<T> {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.pairs[pair_index(self.dim, i, j)].clone(),
            std::cmp::Ordering::Greater => self.pairs[pair_index(self.dim, j, i)].neg(),
            std::cmp::Ordering::Equal => Mat::zeros(self.dim, self.dim),
        }
    }

    /// `R_{X, Y}` for arbitrary vectors.
    pub fn at(&self, x: &[T], y: &[T]) -> Mat<T> {
        let mut acc = Mat::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                let c = x[i].clone() * y[j].clone() - x[j].clone() * y[i].clone();
                if !c.is_zero() {
                    acc = acc.add(&self.pairs[pair_index(self.dim, i, j)].scale(&c));
                }
            }
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.pairs.iter().all(Mat::is_zero)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { dim: self.dim, pairs: self.pairs.iter().zip(&o.pairs).map(|(a, b)| a.sub(b)).collect() }
    }

    /// First triple `(i, j, k)` where `R_{ij} e_k + R_{jk} e_i + R_{ki} e_j != 0`.
    pub fn bianchi_violation(&self) -> Option<(usize, usize, usize)> {
        let d = self.dim;
        for i in 0..d {
            for j in i + 1..d {
                for k in j + 1..d {
                    let ok = (0..d).all(|r| {
                        let s = self.get(i, j)[(r, k)].clone()
                            + self.get(j, k)[(r, i)].clone()
                            + self.get(k, i)[(r, j)].clone();
                        s.is_zero()
                    });
                    if !ok {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    /// `Ricci(R)_{X,Y} = trace(Z -> R_{Z,X} Y)`, as a matrix in `(X, Y)`.
    pub fn ricci(&self) -> Mat<T> {
        let d = self.dim;
        let mut ric: Mat<T> = Mat::zeros(d, d);
        for x in 0..d {
            for k in 0..d {
                if k == x {
                    continue;
                }
                let r = self.get(k, x);
                for y in 0..d {
                    ric[(x, y)] = ric[(x, y)].clone() + r[(k, y)].clone();
                }
            }
        }
        ric
    }

    /// First pair `(i, j)` and admissible index `a` with `[R_{ij}, J_a] != 0`.
    pub fn q_commutator_violation(&self, ctx: &ModelContext) -> Option<(usize, usize, usize)> {
        let js: Vec<Mat<T>> = (0..3).map(|a| ctx.j_matrix(a)).collect();
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                let r = &self.pairs[pair_index(self.dim, i, j)];
                for (a, jm) in js.iter().enumerate() {
                    if !r.commutator(jm).is_zero() {
                        return Some((i, j, a));
                    }
                }
            }
        }
        None
    }
}

impl Curvature<Poly> {
    pub fn eval(&self, p: &[Rat]) -> Curvature<Rat> {
        Curvature { dim: self.dim, pairs: self.pairs.iter().map(|m| m.map(|c| c.eval(p))).collect() }
    }
}

/// `R_{ij} = S^{d_i alpha}_{e_j} - S^{d_j alpha}_{e_i} + [S^alpha_{e_i}, S^alpha_{e_j}]`,
/// i.e. `R = d omega + omega ^ omega` with `omega(X) = S^alpha_X` in the
/// constant frame.
pub fn curvature_from_jet<T: Ring>(ctx: &ModelContext, jet: &AlphaJet<T>) -> Curvature<T> {
    let d = ctx.dim();
    let omega: Vec<Mat<T>> = (0..d).map(|i| s_alpha(ctx, &jet.value, &ctx.unit_vector(i))).collect();
    // S^{d_i alpha}_{e_j}
    let dso: Vec<Vec<Mat<T>>> = (0..d)
        .map(|i| {
            let di = jet.grad.row(i).to_vec();
            if di.iter().all(Ring::is_zero) {
                return vec![Mat::zeros(d, d); d];
            }
            (0..d).map(|j| s_alpha(ctx, &di, &ctx.unit_vector(j))).collect()
        })
        .collect();
    Curvature::from_fn(d, |i, j| dso[i][j].sub(&dso[j][i]).add(&omega[i].commutator(&omega[j])))
}

/// The quaternionic curvature `R^eta_{X,Y}` attached to a bilinear form
/// (matrix `eta[(r, c)] = eta(e_r, e_c)`).
pub fn r_eta<T: Ring>(ctx: &ModelContext, eta: &Mat<T>, x: &[T], y: &[T]) -> Mat<T> {
    let d = ctx.dim();
    let eta_x = eta.transpose().mul_vec(x);
    let eta_y = eta.transpose().mul_vec(y);
    let mut m = Mat::identity(d)
        .scale(&(eta.bilinear(y, x) - eta.bilinear(x, y)))
        .sub(&Mat::outer(y, &eta_x))
        .add(&Mat::outer(x, &eta_y));
    for a in 0..3 {
        let j = ctx.j(a);
        let jx = j.apply(x);
        let jy = j.apply(y);
        let c = eta.bilinear(y, &jx) - eta.bilinear(x, &jy);
        let jm: Mat<T> = j.matrix();
        m = m
            .sub(&jm.scale(&c))
            .sub(&Mat::outer(&jx, &j.pullback(&eta_y)))
            .add(&Mat::outer(&jy, &j.pullback(&eta_x)));
    }
    m
}

pub fn r_eta_tensor<T: Ring>(ctx: &ModelContext, eta: &Mat<T>) -> Curvature<T> {
    Curvature::from_fn(ctx.dim(), |i, j| r_eta(ctx, eta, &ctx.unit_vector(i), &ctx.unit_vector(j)))
}

/// Bilinear form `eta` with its symmetric and skew parts.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaForm<T> {
    pub eta: Mat<T>,
    pub sym: Mat<T>,
    pub skew: Mat<T>,
}

impl<T: Ring> EtaForm<T> {
    pub fn new(eta: Mat<T>) -> Self {
        Self { sym: eta.sym_part(), skew: eta.skew_part(), eta }
    }

    /// `trace_g(eta)` for the Euclidean metric.
    pub fn trace(&self) -> T {
        self.eta.trace()
    }
}

/// `eta = Ric^skew / 4(n+1) + Ric^sym / 4n - P_h(Ric^sym) / 2n(n+2)`.
pub fn eta_from_ricci<T: Ring>(ctx: &ModelContext, ric: &Mat<T>) -> EtaForm<T> {
    let n = ctx.n() as i64;
    let sym = ric.sym_part();
    let skew = ric.skew_part();
    let eta = skew
        .scale_rat(&rat(1, 4 * (n + 1)))
        .add(&sym.scale_rat(&rat(1, 4 * n)))
        .sub(&ctx.p_h_project(&sym).scale_rat(&rat(1, 2 * n * (n + 2))));
    EtaForm::new(eta)
}

/// `W = R - R^eta`, with `eta` read off the Ricci contraction of `R`.
pub fn weyl_part<T: Ring>(ctx: &ModelContext, r: &Curvature<T>) -> Curvature<T> {
    let eta = eta_from_ricci(ctx, &r.ricci());
    r.sub(&r_eta_tensor(ctx, &eta.eta))
}

/// The three forms `Omega_i` as skew matrices, computed by the trace
/// formula `-tr(J_i R_{X,Y}) / 2n`.
pub fn omega_from_trace<T: Ring>(ctx: &ModelContext, r: &Curvature<T>) -> [Mat<T>; 3] {
    let d = ctx.dim();
    let w = rat(-1, 2 * ctx.n() as i64);
    std::array::from_fn(|a| {
        let jm: Mat<T> = ctx.j_matrix(a);
        Mat::from_fn(d, d, |i, j| jm.mul(&r.get(i, j)).trace().scale(&w))
    })
}

/// `Omega_i(X, Y) = 2 (eta(X, J_i Y) - eta(Y, J_i X))`.
pub fn omega_from_eta<T: Ring>(ctx: &ModelContext, eta: &Mat<T>) -> [Mat<T>; 3] {
    std::array::from_fn(|a| {
        // eta(X, J_i Y) has matrix eta J_i
        let ej = eta.mul(&ctx.j_matrix(a));
        ej.sub(&ej.transpose()).scale(&T::from_i64(2))
    })
}

/// First `(i, j, a)` where `[R_{ij}, J_a] - Omega_k J_j + Omega_j J_k != 0`
/// with `(a, j, k)` cyclic.
pub fn q_commutator_formula_violation<T: Ring>(ctx: &ModelContext, r: &Curvature<T>, omega: &[Mat<T>; 3]) -> Option<(usize, usize, usize)> {
    let d = ctx.dim();
    let js: Vec<Mat<T>> = (0..3).map(|a| ctx.j_matrix(a)).collect();
    for i in 0..d {
        for j in i + 1..d {
            let rij = r.get(i, j);
            for a in 0..3 {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                let res = rij
                    .commutator(&js[a])
                    .sub(&js[b].scale(&omega[c][(i, j)]))
                    .add(&js[c].scale(&omega[b][(i, j)]));
                if !res.is_zero() {
                    return Some((i, j, a));
                }
            }
        }
    }
    None
}

/// Residuals of the two change-of-connection formulas for the Ricci tensor
/// of `d + S^alpha` against the flat base.
#[derive(Clone, Debug, PartialEq)]
pub struct RicciChange<T> {
    pub sym_residual: Mat<T>,
    pub skew_residual: Mat<T>,
}

impl<T: Ring> RicciChange<T> {
    pub fn holds(&self) -> bool {
        self.sym_residual.is_zero() && self.skew_residual.is_zero()
    }
}

/// `alpha (x) alpha - sum_i (alpha o J_i) (x) (alpha o J_i) - (D alpha)^sym`.
pub fn ricci_change_core<T: Ring>(ctx: &ModelContext, jet: &AlphaJet<T>) -> Mat<T> {
    let mut x0 = Mat::outer(&jet.value, &jet.value);
    for a in 0..3 {
        let aj = ctx.j(a).pullback(&jet.value);
        x0 = x0.sub(&Mat::outer(&aj, &aj));
    }
    x0.sub(&jet.d_alpha_sym())
}

pub fn ricci_change_check<T: Ring>(ctx: &ModelContext, jet: &AlphaJet<T>) -> RicciChange<T> {
    let ric = curvature_from_jet(ctx, jet).ricci();
    let n = ctx.n() as i64;
    let x0 = ricci_change_core(ctx, jet);
    let sym_expected = x0.scale(&T::from_i64(4 * n)).add(&ctx.p_h_project(&x0).scale(&T::from_i64(8)));
    let skew_expected = jet.d_alpha_half().scale(&T::from_i64(-4 * (n + 1)));
    RicciChange {
        sym_residual: ric.sym_part().sub(&sym_expected),
        skew_residual: ric.skew_part().sub(&skew_expected),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Predicates {
    pub closed: bool,
    pub exact: bool,
    pub self_dual: bool,
}

/// `D = d + S^alpha` on the flat model.
#[derive(Clone, Debug)]
pub struct QuatConnection {
    ctx: ModelContext,
    alpha: PolyField,
}

impl QuatConnection {
    pub fn new(ctx: &ModelContext, alpha: PolyField) -> Result<Self> {
        if alpha.shape() != FieldShape::Covector(ctx.dim()) {
            return Err(Error::Shape(format!("alpha must be a covector field on R^{}", ctx.dim())));
        }
        Ok(Self { ctx: ctx.clone(), alpha })
    }

    pub fn flat(ctx: &ModelContext) -> Self {
        Self { ctx: ctx.clone(), alpha: PolyField::zero(FieldShape::Covector(ctx.dim()), ctx.degree_bound()) }
    }

    pub fn ctx(&self) -> &ModelContext {
        &self.ctx
    }

    pub fn alpha(&self) -> &PolyField {
        &self.alpha
    }

    pub fn jet_field(&self) -> AlphaJet<Poly> {
        AlphaJet::of_field(&self.alpha)
    }

    pub fn jet_at(&self, p: &[Rat]) -> AlphaJet<Rat> {
        self.jet_field().eval(p)
    }

    pub fn s_alpha_at(&self, p: &[Rat], x: &[Rat]) -> Mat<Rat> {
        s_alpha(&self.ctx, &self.alpha.eval(p), x)
    }

    /// Curvature as a polynomial field; fails when `[S, S]` would exceed the
    /// degree bound.
    pub fn curvature(&self) -> Result<Curvature<Poly>> {
        let needed = 2 * self.alpha.degree();
        let bound = self.ctx.degree_bound().max(self.alpha.degree_bound());
        if needed > bound {
            return Err(Error::DegreeOverflow { op: "curvature", needed, bound });
        }
        Ok(curvature_from_jet(&self.ctx, &self.jet_field()))
    }

    pub fn curvature_at(&self, p: &[Rat]) -> Curvature<Rat> {
        curvature_from_jet(&self.ctx, &self.jet_at(p))
    }

    /// `d alpha` with `(dx_i ^ dx_j)(e_i, e_j) = 1`.
    pub fn d_alpha(&self) -> Mat<Poly> {
        let w = DiffForm::from_one_form(&self.alpha).expect("covector shape checked in new");
        exterior_derivative(&w)
            .and_then(|dw| dw.to_skew_bilinear())
            .expect("dim >= 8 leaves room for 2-forms")
    }

    /// Closed, exact and self-dual, read off `d alpha` (which, on the flat
    /// base, determines the skew Ricci tensor).
    pub fn predicates(&self) -> Predicates {
        let da = self.d_alpha();
        let closed = da.is_zero();
        let exact = primitive(&self.alpha).expect("covector shape checked in new").is_some();
        let self_dual = self.ctx.is_q_hermitian(&da);
        Predicates { closed, exact, self_dual }
    }

    /// Self-duality decided from `Ricci(R^D)^skew` as a polynomial field.
    pub fn is_self_dual_via_ricci(&self) -> Result<bool> {
        let ric = self.curvature()?.ricci();
        Ok(self.ctx.is_q_hermitian(&ric.skew_part()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatmodel::{build_flat_model, constant_one_form, linear_primitive, one_form};

    fn ctx2() -> ModelContext {
        build_flat_model(2).unwrap()
    }

    fn r(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&x| Rat::from_i64(x)).collect()
    }

    fn sample_vec(seed: i64, d: usize) -> Vec<Rat> {
        (0..d).map(|k| rat((seed * 7 + k as i64 * 5) % 11 - 5, 1 + (k as i64 + seed) % 3)).collect()
    }

    #[test]
    fn s_alpha_zero_and_trace() {
        let c = ctx2();
        let x = sample_vec(1, 8);
        assert!(s_alpha(&c, &vec![Rat::from_i64(0); 8], &x).is_zero());
        let a = sample_vec(2, 8);
        assert_eq!(s_alpha(&c, &a, &x).trace(), dot(&a, &x) * Rat::from_i64(12));
    }

    #[test]
    fn s_dx1_e1_against_summands() {
        let c = ctx2();
        let a = r(&[1, 0, 0, 0, 0, 0, 0, 0]);
        let e1 = c.unit_vector::<Rat>(0);
        let m = s_alpha(&c, &a, &e1);
        let cols: Vec<Vec<Rat>> = (0..8).map(|k| s_alpha_apply(&c, &a, &e1, &c.unit_vector(k))).collect();
        assert_eq!(m, Mat::from_cols(&cols, 8));
        // the J-terms add 1 on the diagonal of the first block minus e_1,
        // which brings the trace to 4(n+1)
        for k in 0..4 {
            assert_eq!(m[(k, k)], Rat::from_i64(2));
        }
        assert_eq!(m[(4, 4)], Rat::from_i64(1));
    }

    #[test]
    fn torsion_free() {
        let c = ctx2();
        let a = sample_vec(3, 8);
        for i in 0..8 {
            for j in 0..8 {
                let sij = s_alpha_apply(&c, &a, &c.unit_vector(i), &c.unit_vector(j));
                let sji = s_alpha_apply(&c, &a, &c.unit_vector(j), &c.unit_vector(i));
                assert_eq!(sij, sji);
            }
        }
    }

    #[test]
    fn flat_curvature_vanishes() {
        let c = ctx2();
        let d = QuatConnection::flat(&c);
        assert!(d.curvature().unwrap().is_zero());
        assert_eq!(d.predicates(), Predicates { closed: true, exact: true, self_dual: true });
    }

    #[test]
    fn constant_alpha_curvature_is_commutator() {
        let c = ctx2();
        let a = sample_vec(4, 8);
        let d = QuatConnection::new(&c, constant_one_form(&a, 3)).unwrap();
        let rf = d.curvature().unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let direct = s_alpha(&c, &a, &c.unit_vector(i)).commutator(&s_alpha(&c, &a, &c.unit_vector(j)));
                let m = rf.get(i, j).map(|p| p.eval(&[]));
                assert_eq!(m, direct);
            }
        }
    }

    #[test]
    fn x2dx1_bianchi_ricci_skew_and_weyl() {
        let c = ctx2();
        let alpha = one_form(8, &[(0, Poly::var(1))], 3).unwrap();
        let d = QuatConnection::new(&c, alpha).unwrap();
        let rf = d.curvature().unwrap();
        assert_eq!(rf.bianchi_violation(), None);
        let ric = rf.ricci();
        let skew = ric.skew_part();
        // -4(n+1) d alpha with d alpha = -dx1^dx2 in the half convention
        assert_eq!(skew[(0, 1)], Poly::from_i64(6));
        assert_eq!(skew[(1, 0)], Poly::from_i64(-6));
        let w = weyl_part(&c, &rf);
        assert!(w.ricci().is_zero());
        assert_eq!(w.q_commutator_violation(&c), None);
        assert_eq!(d.predicates(), Predicates { closed: false, exact: false, self_dual: false });
        assert!(!d.is_self_dual_via_ricci().unwrap());
    }

    #[test]
    fn eta_roundtrip_random() {
        let c = ctx2();
        let eta = Mat::from_fn(8, 8, |i, j| rat(((i * 5 + j * 3) % 9) as i64 - 4, 1 + ((i + 2 * j) % 3) as i64));
        let rt = r_eta_tensor(&c, &eta);
        assert_eq!(rt.bianchi_violation(), None);
        let back = eta_from_ricci(&c, &rt.ricci());
        assert_eq!(back.eta, eta);
        let om_t = omega_from_trace(&c, &rt);
        let om_e = omega_from_eta(&c, &eta);
        assert_eq!(om_t, om_e);
        assert_eq!(q_commutator_formula_violation(&c, &rt, &om_t), None);
    }

    #[test]
    fn eta_from_skew_hermitian_ricci() {
        let c = ctx2();
        let f = Mat::from_fn(8, 8, |i, j| rat((i as i64 - j as i64) * ((i + j) as i64 % 3), 1));
        let f = c.p_h_project(&f.skew_part());
        let eta = eta_from_ricci(&c, &f);
        assert_eq!(eta.eta, f.scale_rat(&rat(1, 12)));
        assert!(eta_from_ricci(&c, &Mat::<Rat>::zeros(8, 8)).eta.is_zero());
    }

    #[test]
    fn omega_agreement_x2dx1() {
        let c = ctx2();
        let d = QuatConnection::new(&c, one_form(8, &[(0, Poly::var(1))], 3).unwrap()).unwrap();
        let rf = d.curvature().unwrap();
        let eta = eta_from_ricci(&c, &rf.ricci());
        assert_eq!(omega_from_trace(&c, &rf), omega_from_eta(&c, &eta.eta));
        assert_eq!(q_commutator_formula_violation(&c, &rf, &omega_from_trace(&c, &rf)), None);
    }

    #[test]
    fn ricci_change_field_level() {
        let c = ctx2();
        for alpha in [
            PolyField::zero(FieldShape::Covector(8), 3),
            constant_one_form(&sample_vec(5, 8), 3),
            one_form(8, &[(1, Poly::var(0))], 3).unwrap(),
            one_form(8, &[(0, Poly::var(1)), (1, -Poly::var(0)), (5, Poly::var(6).scale(&rat(2, 3)))], 3).unwrap(),
        ] {
            let jet = AlphaJet::of_field(&alpha);
            assert!(ricci_change_check(&c, &jet).holds());
        }
    }

    #[test]
    fn self_dual_primitive() {
        let c = ctx2();
        let mut f = Mat::<Rat>::zeros(8, 8);
        f[(0, 1)] = Rat::from_i64(1);
        f[(1, 0)] = Rat::from_i64(-1);
        let fh = c.p_h_project(&f);
        assert!(!fh.is_zero());
        let alpha = linear_primitive(&fh, 3).unwrap();
        let d = QuatConnection::new(&c, alpha).unwrap();
        let p = d.predicates();
        assert!(p.self_dual && !p.closed && !p.exact);
        assert!(d.is_self_dual_via_ricci().unwrap());
    }

    #[test]
    fn gamma_matches_commutator_and_is_skew() {
        let c = ctx2();
        let a = sample_vec(6, 8);
        let x = sample_vec(7, 8);
        let g = gamma_matrix(&c, &a, &x);
        assert_eq!(g.transpose(), g.neg());
        let s = s_alpha(&c, &a, &x);
        for ja in 0..3 {
            let comm = s.commutator(&c.j_matrix(ja));
            assert!(c.is_in_q(&comm));
            let q = c.q_coords(&comm);
            for b in 0..3 {
                assert_eq!(q[b], g[(b, ja)]);
            }
        }
    }

    #[test]
    fn curvature_degree_overflow() {
        let c = ctx2();
        let alpha = one_form(8, &[(0, Poly::var(1) * Poly::var(2))], 3).unwrap();
        let d = QuatConnection::new(&c, alpha).unwrap();
        assert!(matches!(d.curvature(), Err(Error::DegreeOverflow { needed: 4, bound: 3, .. })));
    }
}
