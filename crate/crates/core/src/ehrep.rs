//! The `E`-`H` description of `T*M (x) Q`.
//!
//! The abstract side works over Gaussian rationals: `H = C^2` with basis
//! `(h, h~)`, symplectic form `omega(h, h~) = 1`, quaternionic structure
//! `q(h) = h~` and `S^2 H` acting on `H` through `a b -> (v -> omega(a, v) b)`.
//! The basis of `S^2 H` is `s1 = hh`, `s2 = hh~ + h~h`, `s3 = h~h~`.
//!
//! The real side is `T*M (x) Q` with basis `e^k (x) J_b` (index `3k + b`).
//! An element is stored as a `4n x 3` matrix: row `k` holds the `Q`
//! coordinates of `phi(e_k)`.
//!
//! [`Bridge`] identifies the complexification of the real side with
//! `E* (x) H (x) S^2 H`; all comparisons between the two sides go through it.

use crate::connection::s_alpha;
use crate::error::{Error, Result};
use crate::flatmodel::ModelContext;
use crate::gauss::GaussRat;
use crate::matrix::Mat;
use crate::scalar::{rat, Rat, Ring};

pub type G = GaussRat;

fn g(re: i64) -> G {
    G::from_i64(re)
}

fn gi(im: i64) -> G {
    G::new(Rat::from_i64(0), Rat::from_i64(im))
}

/// Element of `H` in the basis `(h, h~)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HVector(pub [G; 2]);

impl HVector {
    pub fn h() -> Self {
        Self([g(1), g(0)])
    }

    pub fn h_tilde() -> Self {
        Self([g(0), g(1)])
    }

    pub fn omega(&self, o: &Self) -> G {
        self.0[0].clone() * o.0[1].clone() - self.0[1].clone() * o.0[0].clone()
    }

    /// The anti-linear quaternionic structure, `q(h) = h~`, `q(h~) = -h`.
    pub fn q(&self) -> Self {
        Self([-self.0[1].conj(), self.0[0].conj()])
    }

    /// Hermitian product `<v, w> = omega(v, q w)`, linear in `v`.
    pub fn herm(&self, o: &Self) -> G {
        self.omega(&o.q())
    }

    pub fn is_unit(&self) -> bool {
        self.herm(self) == G::one()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Ring::is_zero)
    }
}

/// Coordinates `(c1, c2, c3)` of an element of `S^2 H` in `(s1, s2, s3)`.
pub type S2 = [G; 3];

/// Endomorphism of `H` represented by an element of `S^2 H`.
pub fn s2_to_matrix(c: &S2) -> Mat<G> {
    Mat::from_rows(vec![vec![-c[1].clone(), c[0].clone()], vec![-c[2].clone(), c[1].clone()]])
}

/// Inverse of [`s2_to_matrix`] on traceless matrices.
pub fn s2_from_matrix(m: &Mat<G>) -> S2 {
    debug_assert!(m.trace().is_zero(), "S^2 H elements are traceless");
    [m[(0, 1)].clone(), m[(1, 1)].clone(), -m[(1, 0)].clone()]
}

/// The endomorphism `v -> omega(a, v) b` of the single tensor `a (x) b`.
pub fn endo(a: &HVector, b: &HVector) -> Mat<G> {
    let row = [-a.0[1].clone(), a.0[0].clone()];
    Mat::outer(&b.0, &row)
}

/// `<x, y> = sum_c G_c x_c conj(y_c)` with `G = (1/2, 1, 1/2)`, i.e. the
/// product induced by `<h1 h2, h3 h4> = <h1, h3><h2, h4> / 2`.
pub fn s2_herm(x: &S2, y: &S2) -> G {
    let w = [rat(1, 2), rat(1, 1), rat(1, 2)];
    (0..3).fold(G::zero(), |acc, c| acc + (x[c].clone() * y[c].conj()).scale(&w[c]))
}

/// `(j1, j2, j3)` attached to a unit `h`:
/// `j1 = -i(hh~ + h~h)`, `j2 = -(hh + h~h~)`, `j3 = i(h~h~ - hh)`.
pub fn sp1_basis_from(h: &HVector) -> Result<[Mat<G>; 3]> {
    if !h.is_unit() {
        return Err(Error::NotUnit(format!("<h, h> = {} for h = {:?}", h.herm(h), h.0)));
    }
    let ht = h.q();
    let hh = endo(h, h);
    let tt = endo(&ht, &ht);
    let mixed = endo(h, &ht).add(&endo(&ht, h));
    Ok([mixed.scale(&gi(-1)), hh.add(&tt).neg(), tt.sub(&hh).scale(&gi(1))])
}

/// The basis attached to `h = (1, 0)`, used to coordinatise `sp(1)`.
pub fn standard_sp1() -> [Mat<G>; 3] {
    sp1_basis_from(&HVector::h()).expect("h is a unit")
}

/// `sum_c a_c j_c` for a rational unit vector `a`.
pub fn unit_j(a: &[Rat; 3]) -> Result<Mat<G>> {
    let norm = a.iter().fold(Rat::from_i64(0), |acc, x| acc + x * x);
    if norm != Rat::from_i64(1) {
        return Err(Error::NotUnit(format!("|a|^2 = {norm}")));
    }
    let js = standard_sp1();
    Ok((0..3).fold(Mat::zeros(2, 2), |acc, c| acc.add(&js[c].scale_rat(&a[c]))))
}

/// Element of `E* (x) H (x) S^2 H`, coordinates indexed by
/// `(a, b, c)` with `a < 2n` (basis of `E*`), `b` in `{h, h~}` and `c` the
/// `S^2 H` basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct EHTensor {
    n: usize,
    coords: Vec<G>,
}

impl EHTensor {
    pub fn zero(n: usize) -> Self {
        Self { n, coords: vec![G::zero(); 12 * n] }
    }

    pub fn from_coords(n: usize, coords: Vec<G>) -> Result<Self> {
        if coords.len() != 12 * n {
            return Err(Error::Shape(format!("E*(x)H(x)S2H needs {} coordinates", 12 * n)));
        }
        Ok(Self { n, coords })
    }

    pub fn basis(n: usize, idx: usize) -> Self {
        let mut t = Self::zero(n);
        t.coords[idx] = G::one();
        t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[G] {
        &self.coords
    }

    pub fn idx(a: usize, b: usize, c: usize) -> usize {
        (a * 2 + b) * 3 + c
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> &G {
        &self.coords[Self::idx(a, b, c)]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Ring::is_zero)
    }

    /// `sum_a e_a eps_a (x) k (x) s`.
    pub fn decomposable(e_star: &[G], k: &HVector, s: &S2) -> Self {
        let n = e_star.len() / 2;
        let mut t = Self::zero(n);
        for (a, ea) in e_star.iter().enumerate() {
            for b in 0..2 {
                for (c, sc) in s.iter().enumerate() {
                    t.coords[Self::idx(a, b, c)] = ea.clone() * k.0[b].clone() * sc.clone();
                }
            }
        }
        t
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { n: self.n, coords: self.coords.iter().zip(&o.coords).map(|(x, y)| x.clone() + y.clone()).collect() }
    }

    pub fn scale(&self, s: &G) -> Self {
        Self { n: self.n, coords: self.coords.iter().map(|x| x.clone() * s.clone()).collect() }
    }

    /// `gamma(e_a (x) k)`, using `H = H*` through `h -> omega(h, .)`.
    pub fn eval(&self, a: usize, k: &HVector) -> S2 {
        std::array::from_fn(|c| {
            // omega(h, k) = k_2, omega(h~, k) = -k_1
            self.get(a, 0, c).clone() * k.0[1].clone() - self.get(a, 1, c).clone() * k.0[0].clone()
        })
    }

    /// Tensor with prescribed values on `e_a (x) h` and `e_a (x) h~`.
    pub fn from_values(n: usize, f: impl Fn(usize, usize) -> S2) -> Self {
        let mut t = Self::zero(n);
        for a in 0..2 * n {
            let on_h = f(a, 0);
            let on_ht = f(a, 1);
            for c in 0..3 {
                t.coords[Self::idx(a, 0, c)] = on_ht[c].clone();
                t.coords[Self::idx(a, 1, c)] = -on_h[c].clone();
            }
        }
        t
    }

    pub fn as_column(&self) -> Mat<G> {
        Mat::from_cols(std::slice::from_ref(&self.coords), self.coords.len())
    }
}

/// Matrix of a linear endomorphism of `E* (x) H (x) S^2 H`.
pub fn eh_matrix(n: usize, f: impl Fn(&EHTensor) -> EHTensor) -> Mat<G> {
    let cols: Vec<Vec<G>> = (0..12 * n).map(|i| f(&EHTensor::basis(n, i)).coords).collect();
    Mat::from_cols(&cols, 12 * n)
}

/// `F(k, h1 h2 + h2 h1) = omega(k, h1) h2 + omega(k, h2) h1` on `H (x) S^2 H`,
/// input indexed by `3b + c`.
pub fn f_map(t: &[G; 6]) -> HVector {
    let basis = [HVector::h(), HVector::h_tilde()];
    let mut out = [G::zero(), G::zero()];
    for b in 0..2 {
        let k = &basis[b];
        let w_h = k.omega(&basis[0]);
        let w_t = k.omega(&basis[1]);
        // F(k, hh) = omega(k,h) h ; F(k, s2) = omega(k,h) h~ + omega(k,h~) h ; F(k, h~h~) = omega(k,h~) h~
        let imgs = [[w_h.clone(), G::zero()], [w_t.clone(), w_h], [G::zero(), w_t]];
        for c in 0..3 {
            for r in 0..2 {
                out[r] = out[r].clone() + t[3 * b + c].clone() * imgs[c][r].clone();
            }
        }
    }
    HVector(out)
}

/// `F` as a `2 x 6` matrix.
pub fn f_matrix() -> Mat<G> {
    let cols: Vec<Vec<G>> = (0..6)
        .map(|i| {
            let mut t: [G; 6] = std::array::from_fn(|_| G::zero());
            t[i] = G::one();
            f_map(&t).0.to_vec()
        })
        .collect();
    Mat::from_cols(&cols, 2)
}

/// `Id_{E*} (x) F` as a `4n x 12n` matrix.
pub fn id_f_matrix(n: usize) -> Mat<G> {
    let f = f_matrix();
    Mat::from_fn(4 * n, 12 * n, |r, c| if r / 2 == c / 6 { f[(r % 2, c % 6)].clone() } else { G::zero() })
}

/// The embedding of `e* h` with `<h, h> = 1`:
/// `gamma(v) = 2 (e* h~)(v) hh - (e* h)(v) (h~h + hh~)`.
pub fn embed_eh(e_star: &[G], h: &HVector) -> Result<EHTensor> {
    if !h.is_unit() {
        return Err(Error::NotUnit(format!("<h, h> = {}", h.herm(h))));
    }
    let ht = h.q();
    let hh = s2_from_matrix(&endo(h, h));
    let sym = s2_from_matrix(&endo(&ht, h).add(&endo(h, &ht)));
    let first = EHTensor::decomposable(e_star, &ht, &hh).scale(&g(2));
    let second = EHTensor::decomposable(e_star, h, &sym).scale(&g(-1));
    Ok(first.add(&second))
}

/// The four generators `gamma_1..gamma_4` of `e* (x) S^3 H` for `h = (1, 0)`.
pub fn s3_generators(e_star: &[G]) -> [EHTensor; 4] {
    let (h, ht) = (HVector::h(), HVector::h_tilde());
    let s = |c: usize| -> S2 { std::array::from_fn(|i| if i == c { G::one() } else { G::zero() }) };
    [
        EHTensor::decomposable(e_star, &h, &s(1)).add(&EHTensor::decomposable(e_star, &ht, &s(0))),
        EHTensor::decomposable(e_star, &ht, &s(1)).add(&EHTensor::decomposable(e_star, &h, &s(2))),
        EHTensor::decomposable(e_star, &h, &s(0)),
        EHTensor::decomposable(e_star, &ht, &s(2)),
    ]
}

fn check_unit_j(j: &Mat<G>) -> Result<()> {
    let sq = j.mul(j).add(&Mat::identity(2));
    if !sq.is_zero() || !j.trace().is_zero() {
        return Err(Error::NotUnit("j must be a traceless square root of -Id".into()));
    }
    Ok(())
}

/// `T_j(gamma)(v) = gamma(jv) - <gamma(jv), j> j - j o gamma(v) - <gamma(v), j> Id`.
pub fn t_j(j: &Mat<G>, gamma: &EHTensor) -> Result<EHTensor> {
    check_unit_j(j)?;
    let j_s2 = s2_from_matrix(j);
    let basis = [HVector::h(), HVector::h_tilde()];
    let value = |a: usize, k: usize| -> S2 {
        let jv = HVector([j[(0, k)].clone(), j[(1, k)].clone()]);
        let x1 = gamma.eval(a, &jv);
        let x2 = gamma.eval(a, &basis[k]);
        let m1 = s2_to_matrix(&x1).sub(&j.scale(&s2_herm(&x1, &j_s2)));
        let m2 = j.mul(&s2_to_matrix(&x2)).add(&Mat::identity(2).scale(&s2_herm(&x2, &j_s2)));
        s2_from_matrix(&m1.sub(&m2))
    };
    Ok(EHTensor::from_values(gamma.n(), value))
}

pub fn t_j_matrix(n: usize, j: &Mat<G>) -> Result<Mat<G>> {
    check_unit_j(j)?;
    Ok(eh_matrix(n, |t| t_j(j, t).expect("unit checked")))
}

/// `B(gamma)(v) = sum_a sum_c gamma^c([j_a, s_c] v) j_a` on the abstract side.
pub fn abstract_weight_operator(n: usize) -> Mat<G> {
    let js = standard_sp1();
    let js_s2: Vec<S2> = js.iter().map(s2_from_matrix).collect();
    let s_mats: Vec<Mat<G>> = (0..3)
        .map(|c| s2_to_matrix(&std::array::from_fn(|i| if i == c { G::one() } else { G::zero() })))
        .collect();
    eh_matrix(n, |gamma| {
        EHTensor::from_values(n, |a, k| {
            let mut out: S2 = std::array::from_fn(|_| G::zero());
            for (ja, ja_s2) in js.iter().zip(&js_s2) {
                let mut coef = G::zero();
                for (c, sc) in s_mats.iter().enumerate() {
                    let comm = ja.commutator(sc);
                    let w = HVector([comm[(0, k)].clone(), comm[(1, k)].clone()]);
                    coef = coef + gamma.eval(a, &w)[c].clone();
                }
                for i in 0..3 {
                    out[i] = out[i].clone() + coef.clone() * ja_s2[i].clone();
                }
            }
            out
        })
    })
}

/// Real `12n x 12n` matrix of the weight operator `B(alpha (x) A)(X) = [S^alpha_X, A]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    pub mat: Mat<Rat>,
}

/// `B` through the commutator definition: column `(i, a)` holds
/// `X -> [S^{e^i}_X, J_a]`.
pub fn weight_operator(ctx: &ModelContext) -> WeightMatrix {
    let d = ctx.dim();
    let js: Vec<Mat<Rat>> = (0..3).map(|a| ctx.j_matrix(a)).collect();
    let mut m = Mat::zeros(3 * d, 3 * d);
    for i in 0..d {
        let ei = ctx.unit_vector::<Rat>(i);
        for k in 0..d {
            let s = s_alpha(ctx, &ei, &ctx.unit_vector(k));
            for (a, ja) in js.iter().enumerate() {
                let q = ctx.q_coords(&s.commutator(ja));
                for (b, qb) in q.into_iter().enumerate() {
                    m[(3 * k + b, 3 * i + a)] = qb;
                }
            }
        }
    }
    WeightMatrix { mat: m }
}

/// `B` through the three-term expansion `sum_b alpha([J_b, A] X) J_b`.
pub fn weight_operator_expansion(ctx: &ModelContext) -> WeightMatrix {
    let d = ctx.dim();
    let js: Vec<Mat<Rat>> = (0..3).map(|a| ctx.j_matrix(a)).collect();
    let mut m = Mat::zeros(3 * d, 3 * d);
    for a in 0..3 {
        for b in 0..3 {
            let c = js[b].commutator(&js[a]);
            for i in 0..d {
                for k in 0..d {
                    m[(3 * k + b, 3 * i + a)] = c[(i, k)].clone();
                }
            }
        }
    }
    WeightMatrix { mat: m }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spectrum {
    pub minimal_polynomial_holds: bool,
    pub rank_b_minus_4: usize,
    pub rank_b_plus_2: usize,
    pub trace_is_zero: bool,
}

impl WeightMatrix {
    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn shifted(&self, c: i64) -> Mat<Rat> {
        self.mat.add(&Mat::identity(self.dim()).scale(&Rat::from_i64(c)))
    }

    pub fn spectrum(&self) -> Spectrum {
        let plus2 = self.shifted(2);
        let minus4 = self.shifted(-4);
        Spectrum {
            minimal_polynomial_holds: plus2.mul(&minus4).is_zero(),
            rank_b_minus_4: minus4.rank(),
            rank_b_plus_2: plus2.rank(),
            trace_is_zero: self.mat.trace().is_zero(),
        }
    }

    /// `(pi_s3, pi_h) = ((4 - B) / 6, (B + 2) / 6)`.
    pub fn projectors(&self) -> Projectors {
        let sixth = rat(1, 6);
        Projectors { pi_s3: self.shifted(-4).neg().scale(&sixth), pi_h: self.shifted(2).scale(&sixth) }
    }

    pub fn apply(&self, phi: &Mat<Rat>) -> Mat<Rat> {
        apply_flat(&self.mat, phi)
    }
}

/// Apply a `12n x 12n` matrix to a `4n x 3` form.
pub fn apply_flat<T: Ring>(m: &Mat<T>, phi: &Mat<T>) -> Mat<T> {
    let v = m.mul_vec(phi.entries());
    Mat::from_fn(phi.rows(), 3, |k, b| v[3 * k + b].clone())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projectors {
    pub pi_s3: Mat<Rat>,
    pub pi_h: Mat<Rat>,
}

impl Projectors {
    /// Completeness, idempotency and orthogonality, exactly.
    pub fn identities_hold(&self) -> bool {
        let d = self.pi_s3.rows();
        self.pi_s3.add(&self.pi_h) == Mat::identity(d)
            && self.pi_s3.mul(&self.pi_s3) == self.pi_s3
            && self.pi_h.mul(&self.pi_h) == self.pi_h
            && self.pi_s3.mul(&self.pi_h).is_zero()
    }
}

/// Real `T_J(phi)(X) = phi(JX) - <phi(JX), J> J - J o phi(X) - <phi(X), J> Id`
/// for `J = J_u`. Using `J_u J_v = -<u, v> Id + J_{u x v}` this is
/// `Pi_u(phi(J X)) - u x phi(X)`, computed here entry by entry.
pub fn t_real<T: Ring>(ctx: &ModelContext, u: &[T; 3], phi: &Mat<T>) -> Mat<T> {
    let d = ctx.dim();
    let mut out = Mat::zeros(d, 3);
    for k in 0..d {
        let ek = ctx.unit_vector::<T>(k);
        let jx = ctx.apply_q(u, &ek);
        let phi_jx: [T; 3] = std::array::from_fn(|b| {
            (0..d).fold(T::zero(), |acc, r| acc + jx[r].clone() * phi[(r, b)].clone())
        });
        let phi_x: [T; 3] = std::array::from_fn(|b| phi[(k, b)].clone());
        let pr = ModelContext::q_inner(&phi_jx, u);
        let cr = ModelContext::cross(u, &phi_x);
        for b in 0..3 {
            out[(k, b)] = phi_jx[b].clone() - pr.clone() * u[b].clone() - cr[b].clone();
        }
    }
    out
}

pub fn t_real_matrix(ctx: &ModelContext, u: &[Rat; 3]) -> Mat<Rat> {
    let d = ctx.dim();
    let cols: Vec<Vec<Rat>> = (0..3 * d)
        .map(|i| {
            let mut phi = Mat::zeros(d, 3);
            phi[(i / 3, i % 3)] = Rat::from_i64(1);
            t_real(ctx, u, &phi).entries().to_vec()
        })
        .collect();
    Mat::from_cols(&cols, 3 * d)
}

/// Complex-linear identification of `(T*M (x) Q) (x) C` with
/// `E* (x) H (x) S^2 H`.
///
/// `T_pM (x) C` is split by `J_1`: for `x` running over the first and third
/// vectors of each quaternionic block, `f = x - i J_1 x` spans the
/// `+i`-eigenspace and corresponds to `e_a (x) h`, while `J_2 f`
/// corresponds to `e_a (x) h~`. On the `Q` factor `J_c -> j_c`.
#[derive(Clone, Debug)]
pub struct Bridge {
    n: usize,
    /// Columns: the vectors of `T_pM (x) C` assigned to `e_a (x) h`, `e_a (x) h~`.
    frame: Mat<G>,
    mat: Mat<G>,
}

pub fn bridge(ctx: &ModelContext) -> Bridge {
    let n = ctx.n();
    let d = ctx.dim();
    let j1 = ctx.j(0);
    let j2 = ctx.j(1);
    let mut cols = Vec::with_capacity(d);
    for a in 0..2 * n {
        let x: Vec<G> = ctx.unit_vector::<Rat>(4 * (a / 2) + 2 * (a % 2)).into_iter().map(G::real).collect();
        let j1x = j1.apply(&x);
        let f: Vec<G> = x.iter().zip(&j1x).map(|(xi, yi)| xi.clone() - gi(1) * yi.clone()).collect();
        let j2f = j2.apply(&f);
        cols.push(f);
        cols.push(j2f);
    }
    let frame = Mat::from_cols(&cols, d);
    let js_s2: Vec<S2> = standard_sp1().iter().map(s2_from_matrix).collect();
    // bridge(e^k (x) J_c) evaluated on e_a (x) basis_b is frame[k][(a, b)] j_c
    let mut mat = Mat::zeros(12 * n, 12 * n);
    for k in 0..d {
        for c in 0..3 {
            let t = EHTensor::from_values(n, |a, b| {
                let w = frame[(k, 2 * a + b)].clone();
                std::array::from_fn(|s| w.clone() * js_s2[c][s].clone())
            });
            for (r, v) in t.coords.into_iter().enumerate() {
                mat[(r, 3 * k + c)] = v;
            }
        }
    }
    Bridge { n, frame, mat }
}

pub fn complexify(m: &Mat<Rat>) -> Mat<G> {
    m.map(|x| G::real(x.clone()))
}

impl Bridge {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Mat<G> {
        &self.mat
    }

    pub fn frame(&self) -> &Mat<G> {
        &self.frame
    }

    pub fn apply(&self, phi: &Mat<Rat>) -> EHTensor {
        let v: Vec<G> = phi.entries().iter().map(|x| G::real(x.clone())).collect();
        EHTensor { n: self.n, coords: self.mat.mul_vec(&v) }
    }

    /// Image of the column space of a real matrix.
    pub fn image_of(&self, cols: &Mat<Rat>) -> Mat<G> {
        self.mat.mul(&complexify(cols))
    }

    /// Conjugates a real endomorphism of `T*M (x) Q` to the abstract side.
    pub fn conjugate(&self, m: &Mat<Rat>) -> Mat<G> {
        let inv = self.mat.inverse().expect("bridge is invertible");
        self.mat.mul(&complexify(m)).mul(&inv)
    }

    /// `bridge o (phi -> phi o J_a) = (gamma -> gamma o j_a) o bridge` and
    /// `bridge o [J_a, .] = [j_a, .] o bridge`.
    pub fn intertwines(&self, ctx: &ModelContext) -> bool {
        let n = self.n;
        let d = ctx.dim();
        let js = standard_sp1();
        (0..3).all(|a| {
            let form_real = Mat::from_cols(
                &(0..3 * d)
                    .map(|i| {
                        let mut phi = Mat::zeros(d, 3);
                        phi[(i / 3, i % 3)] = Rat::from_i64(1);
                        precompose(ctx, a, &phi).entries().to_vec()
                    })
                    .collect::<Vec<_>>(),
                3 * d,
            );
            let form_abs = eh_matrix(n, |t| {
                EHTensor::from_values(n, |e, k| {
                    let jv = HVector([js[a][(0, k)].clone(), js[a][(1, k)].clone()]);
                    t.eval(e, &jv)
                })
            });
            let adj_real = Mat::from_cols(
                &(0..3 * d)
                    .map(|i| {
                        let mut phi = Mat::zeros(d, 3);
                        phi[(i / 3, i % 3)] = Rat::from_i64(1);
                        q_adjoint(ctx, a, &phi).entries().to_vec()
                    })
                    .collect::<Vec<_>>(),
                3 * d,
            );
            let adj_abs = eh_matrix(n, |t| {
                EHTensor::from_values(n, |e, k| {
                    let basis = [HVector::h(), HVector::h_tilde()];
                    let v = t.eval(e, &basis[k]);
                    s2_from_matrix(&js[a].commutator(&s2_to_matrix(&v)))
                })
            });
            self.mat.mul(&complexify(&form_real)) == form_abs.mul(&self.mat)
                && self.mat.mul(&complexify(&adj_real)) == adj_abs.mul(&self.mat)
        })
    }
}

/// `X -> phi(J_a X)`.
pub fn precompose<T: Ring>(ctx: &ModelContext, a: usize, phi: &Mat<T>) -> Mat<T> {
    let d = ctx.dim();
    let j = ctx.j(a);
    Mat::from_fn(d, 3, |k, b| {
        let jx = j.apply(&ctx.unit_vector::<T>(k));
        (0..d).fold(T::zero(), |acc, r| acc + jx[r].clone() * phi[(r, b)].clone())
    })
}

/// `X -> [J_a, phi(X)]`, i.e. `2 e_a x phi(X)` in `Q` coordinates.
pub fn q_adjoint<T: Ring>(ctx: &ModelContext, a: usize, phi: &Mat<T>) -> Mat<T> {
    let mut e: [T; 3] = std::array::from_fn(|_| T::zero());
    e[a] = T::from_i64(2);
    Mat::from_fn(ctx.dim(), 3, |k, b| {
        let v: [T; 3] = std::array::from_fn(|c| phi[(k, c)].clone());
        ModelContext::cross(&e, &v)[b].clone()
    })
}

/// The certified set of units: the basis plus `(3/5, 4/5, 0)` and
/// `(1/3, 2/3, 2/3)`.
pub fn certified_units() -> Vec<[Rat; 3]> {
    let z = || Rat::from_i64(0);
    let o = || Rat::from_i64(1);
    vec![
        [o(), z(), z()],
        [z(), o(), z()],
        [z(), z(), o()],
        [rat(3, 5), rat(4, 5), z()],
        [rat(1, 3), rat(2, 3), rat(2, 3)],
    ]
}

/// Outcome of comparing `cap_j ker T_j` with `image(pi_h)` through the bridge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelReport {
    /// Complex dimension of the intersection.
    pub intersection_dim: usize,
    /// Real rank of `pi_h` (complex dimension of its complexified image).
    pub pi_h_rank: usize,
    pub equals_pi_h_image: bool,
    pub contains_embeddings: bool,
    /// Intersection dimension with the first three units only.
    pub basis_only_dim: usize,
}

/// Common kernel of the `T_j` for the given units, as column basis.
pub fn t_kernel(n: usize, units: &[[Rat; 3]]) -> Result<Mat<G>> {
    let mut stacked: Option<Mat<G>> = None;
    for u in units {
        let m = t_j_matrix(n, &unit_j(u)?)?;
        stacked = Some(match stacked {
            None => m,
            Some(s) => s.vstack(&m),
        });
    }
    let stacked = stacked.ok_or_else(|| Error::Shape("no units given".into()))?;
    let ker = stacked.nullspace();
    Ok(Mat::from_cols(&ker, 12 * n))
}

pub fn kernel_intersection_check(ctx: &ModelContext, units: &[[Rat; 3]]) -> Result<KernelReport> {
    let n = ctx.n();
    let ker = t_kernel(n, units)?;
    let basis_ker = t_kernel(n, &units[..3.min(units.len())])?;
    let pi_h = weight_operator(ctx).projectors().pi_h;
    let br = bridge(ctx);
    let image = br.image_of(&pi_h);
    let equals = ker.cols() > 0 && ker.same_column_space(&image);
    let embeds = embedding_span(n);
    Ok(KernelReport {
        intersection_dim: ker.cols(),
        pi_h_rank: pi_h.rank(),
        equals_pi_h_image: equals,
        contains_embeddings: ker.spans(&embeds),
        basis_only_dim: basis_ker.cols(),
    })
}

/// A few unit vectors of `H` with Gaussian rational coordinates.
pub fn sample_units_h() -> Vec<HVector> {
    vec![
        HVector::h(),
        HVector::h_tilde(),
        HVector([G::new(rat(3, 5), Rat::from_i64(0)), G::new(Rat::from_i64(0), rat(4, 5))]),
        HVector([G::new(rat(1, 3), rat(2, 3)), G::new(rat(2, 3), Rat::from_i64(0))]),
    ]
}

/// Columns `embed_eh(e_a, h)` over the basis of `E*` and [`sample_units_h`].
pub fn embedding_span(n: usize) -> Mat<G> {
    let mut cols = Vec::new();
    for a in 0..2 * n {
        let mut e = vec![G::zero(); 2 * n];
        e[a] = G::one();
        for h in sample_units_h() {
            cols.push(embed_eh(&e, &h).expect("sample units are unit").coords);
        }
    }
    Mat::from_cols(&cols, 12 * n)
}

/// Hermitian-orthogonal split of a tensor into its `ker F` part and the
/// complement. The two parts sum to the input.
pub fn split_s3_h(t: &EHTensor) -> (EHTensor, EHTensor) {
    let n = t.n();
    let k = Mat::from_cols(&id_f_matrix(n).nullspace(), 12 * n);
    let w = [rat(1, 2), rat(1, 1), rat(1, 2)];
    let gram = Mat::from_fn(12 * n, 12 * n, |r, c| if r == c { G::real(w[r % 3].clone()) } else { G::zero() });
    let k_star = k.map(G::conj).transpose();
    let inner = k_star.mul(&gram).mul(&k).inverse().expect("gram restricted to a subspace is definite");
    let proj = k.mul(&inner).mul(&k_star).mul(&gram);
    let s3 = proj.mul_vec(&t.coords);
    let h: Vec<G> = t.coords.iter().zip(&s3).map(|(a, b)| a.clone() - b.clone()).collect();
    (EHTensor { n, coords: s3 }, EHTensor { n, coords: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatmodel::build_flat_model;

    fn estar(n: usize, a: usize) -> Vec<G> {
        let mut e = vec![G::zero(); 2 * n];
        e[a] = G::one();
        e
    }

    #[test]
    fn sp1_basis_relations() {
        let js = standard_sp1();
        assert_eq!(js[0], Mat::from_rows(vec![vec![gi(1), g(0)], vec![g(0), gi(-1)]]));
        assert_eq!(js[0].mul(&js[1]), js[2]);
        for j in &js {
            assert_eq!(j.mul(j), Mat::identity(2).neg());
        }
        for h in sample_units_h() {
            let b = sp1_basis_from(&h).unwrap();
            assert_eq!(b[0].mul(&b[1]), b[2]);
        }
        let bad = HVector([g(1), g(1)]);
        assert!(matches!(sp1_basis_from(&bad), Err(Error::NotUnit(_))));
    }

    #[test]
    fn sp1_basis_is_orthonormal() {
        let js: Vec<S2> = standard_sp1().iter().map(s2_from_matrix).collect();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(s2_herm(&js[a], &js[b]), if a == b { g(1) } else { g(0) });
            }
        }
    }

    #[test]
    fn f_map_examples() {
        // h (x) hh -> omega(h,h) h = 0
        let mut t: [G; 6] = std::array::from_fn(|_| g(0));
        t[0] = g(1);
        assert!(f_map(&t).is_zero());
        assert!(f_map(&std::array::from_fn(|_| g(0))).is_zero());
        // h (x) h~h~ -> omega(h, h~) h~ = h~
        t[0] = g(0);
        t[2] = g(1);
        assert_eq!(f_map(&t), HVector::h_tilde());
        let f = f_matrix();
        assert_eq!(f.rank(), 2);
        assert_eq!(f.nullspace().len(), 4);
    }

    #[test]
    fn generators_lie_in_ker_f() {
        let n = 2;
        let idf = id_f_matrix(n);
        for gen in s3_generators(&estar(n, 1)) {
            assert!(idf.mul_vec(gen.coords()).iter().all(Ring::is_zero));
        }
    }

    #[test]
    fn weight_operator_spectrum_n2() {
        let c = build_flat_model(2).unwrap();
        let b = weight_operator(&c);
        assert_eq!(b, weight_operator_expansion(&c));
        let s = b.spectrum();
        assert!(s.minimal_polynomial_holds && s.trace_is_zero);
        assert_eq!((s.rank_b_minus_4, s.rank_b_plus_2), (16, 8));
        assert!(b.projectors().identities_hold());
    }

    #[test]
    fn weight_operator_on_alpha_j1() {
        let c = build_flat_model(2).unwrap();
        let b = weight_operator(&c);
        let alpha: Vec<Rat> = (0..8).map(|k| rat(k as i64 - 3, 2)).collect();
        let mut phi = Mat::zeros(8, 3);
        for k in 0..8 {
            phi[(k, 0)] = alpha[k].clone();
        }
        let out = b.apply(&phi);
        for k in 0..8 {
            let x = c.unit_vector::<Rat>(k);
            let a_j3x = crate::scalar::dot(&alpha, &c.j(2).apply(&x));
            let a_j2x = crate::scalar::dot(&alpha, &c.j(1).apply(&x));
            assert_eq!(out[(k, 0)], Rat::from_i64(0));
            assert_eq!(out[(k, 1)], a_j3x * Rat::from_i64(-2));
            assert_eq!(out[(k, 2)], a_j2x * Rat::from_i64(2));
        }
    }

    #[test]
    fn embedding_is_killed_by_t_j() {
        let n = 2;
        let gamma = embed_eh(&estar(n, 0), &HVector::h()).unwrap();
        assert!(!gamma.is_zero());
        let js = standard_sp1();
        for j in js.iter().cloned().chain([unit_j(&[rat(3, 5), rat(4, 5), Rat::from_i64(0)]).unwrap()]) {
            assert!(t_j(&j, &gamma).unwrap().is_zero());
        }
        let gamma3 = &s3_generators(&estar(n, 0))[2];
        assert!(!t_j(&js[0], gamma3).unwrap().is_zero());
        assert!(t_j(&js[1], &EHTensor::zero(n)).unwrap().is_zero());
        assert!(t_j(&Mat::identity(2), &gamma).is_err());
    }

    #[test]
    fn abstract_weight_operator_eigenvectors() {
        let n = 2;
        let b = abstract_weight_operator(n);
        let gamma = embed_eh(&estar(n, 3), &sample_units_h()[2]).unwrap();
        assert_eq!(b.mul_vec(gamma.coords()), gamma.scale(&g(4)).coords);
        for gen in s3_generators(&estar(n, 2)) {
            assert_eq!(b.mul_vec(gen.coords()), gen.scale(&g(-2)).coords);
        }
    }

    #[test]
    fn bridge_properties_n2() {
        let c = build_flat_model(2).unwrap();
        let br = bridge(&c);
        assert!(!br.matrix().det().is_zero());
        assert!(br.intertwines(&c));
        let b = weight_operator(&c);
        assert_eq!(br.conjugate(&b.mat), abstract_weight_operator(2));
        let minus2 = Mat::from_cols(&b.shifted(2).nullspace(), 24);
        let ker_f = Mat::from_cols(&id_f_matrix(2).nullspace(), 24);
        assert!(br.image_of(&minus2).same_column_space(&ker_f));
        let plus4 = Mat::from_cols(&b.shifted(-4).nullspace(), 24);
        assert!(br.image_of(&plus4).same_column_space(&embedding_span(2)));
    }

    #[test]
    fn t_real_matches_abstract_t_j() {
        let c = build_flat_model(2).unwrap();
        let br = bridge(&c);
        for u in certified_units() {
            let real = br.conjugate(&t_real_matrix(&c, &u));
            assert_eq!(real, t_j_matrix(2, &unit_j(&u).unwrap()).unwrap());
        }
    }

    #[test]
    fn kernel_intersection_n2() {
        let c = build_flat_model(2).unwrap();
        let r = kernel_intersection_check(&c, &certified_units()).unwrap();
        assert!(r.equals_pi_h_image && r.contains_embeddings);
        assert_eq!(r.intersection_dim, 8);
        assert_eq!(r.pi_h_rank, 8);
        assert_eq!(r.basis_only_dim, 8);
    }

    #[test]
    fn split_sums_back_and_h_part_is_plus4() {
        let n = 2;
        let t = EHTensor::from_coords(n, (0..24).map(|i| G::new(rat(i as i64 % 5 - 2, 3), rat(i as i64 % 3, 2))).collect()).unwrap();
        let (s3, h) = split_s3_h(&t);
        assert_eq!(s3.add(&h), t);
        let b = abstract_weight_operator(n);
        assert_eq!(b.mul_vec(h.coords()), h.scale(&g(4)).coords);
        assert_eq!(b.mul_vec(s3.coords()), s3.scale(&g(-2)).coords);
    }
}
