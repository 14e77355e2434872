//! The flat quaternionic model `R^{4n} = H^n` with its standard
//! hypercomplex structure and Euclidean metric.
//!
//! Coordinates are grouped in quaternionic blocks
//! `q = x_1 + x_2 i + x_3 j + x_4 k`; `J_1, J_2, J_3` act on every block as
//! right multiplication by `-i, -j, -k`. With that choice `J_1 J_2 = J_3`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::poly::Poly;
use crate::scalar::{rat, Rat, Ring};

pub const DEFAULT_DEGREE_BOUND: u32 = 3;

/// Matrix with exactly one `+-1` per column: `e_k -> sign[k] e_{target[k]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedPerm {
    target: Vec<usize>,
    sign: Vec<i8>,
}

impl SignedPerm {
    fn from_matrix(m: &Mat<i64>) -> Self {
        let mut target = Vec::with_capacity(m.cols());
        let mut sign = Vec::with_capacity(m.cols());
        for c in 0..m.cols() {
            let nz: Vec<usize> = (0..m.rows()).filter(|&r| m[(r, c)] != 0).collect();
            assert_eq!(nz.len(), 1, "not a signed permutation");
            target.push(nz[0]);
            sign.push(m[(nz[0], c)] as i8);
        }
        Self { target, sign }
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    /// `J x`.
    pub fn apply<T: Ring>(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        for (k, xk) in x.iter().enumerate() {
            out[self.target[k]] = signed(xk.clone(), self.sign[k]);
        }
        out
    }

    /// `alpha o J` for a covector `alpha`.
    pub fn pullback<T: Ring>(&self, alpha: &[T]) -> Vec<T> {
        (0..alpha.len()).map(|k| signed(alpha[self.target[k]].clone(), self.sign[k])).collect()
    }

    pub fn matrix<T: Ring>(&self) -> Mat<T> {
        let n = self.dim();
        let mut m = Mat::zeros(n, n);
        for k in 0..n {
            m[(self.target[k], k)] = T::from_i64(i64::from(self.sign[k]));
        }
        m
    }

    /// `J^T M J`, i.e. the bilinear form `M(J., J.)`.
    pub fn conjugate_bilinear<T: Ring>(&self, m: &Mat<T>) -> Mat<T> {
        let n = self.dim();
        Mat::from_fn(n, n, |r, c| {
            let v = m[(self.target[r], self.target[c])].clone();
            signed(v, self.sign[r] * self.sign[c])
        })
    }
}

fn signed<T: Ring>(x: T, s: i8) -> T {
    if s < 0 {
        -x
    } else {
        x
    }
}

fn quat_mul(a: [i64; 4], b: [i64; 4]) -> [i64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// Matrix of `q -> q c` on `H = R^4`.
fn right_mult(c: [i64; 4]) -> Mat<i64> {
    let mut m = Mat::from_fn(4, 4, |_, _| 0i64);
    for k in 0..4 {
        let mut e = [0; 4];
        e[k] = 1;
        let img = quat_mul(e, c);
        for r in 0..4 {
            m[(r, k)] = img[r];
        }
    }
    m
}

/// The triple `(J_1, J_2, J_3)` generating `Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissibleBasis {
    j: [SignedPerm; 3],
}

impl AdmissibleBasis {
    pub fn get(&self, a: usize) -> &SignedPerm {
        &self.j[a]
    }

    pub fn matrix<T: Ring>(&self, a: usize) -> Mat<T> {
        self.j[a].matrix()
    }

    pub fn dim(&self) -> usize {
        self.j[0].dim()
    }
}

/// The flat model all computations run on.
#[derive(Clone, Debug)]
pub struct ModelContext {
    n: usize,
    basis: AdmissibleBasis,
    /// `[J_b, J_c] = sum_d structure[b][c][d] J_d`.
    structure: [[[i64; 3]; 3]; 3],
    degree_bound: u32,
}

/// Builds the model on `R^{4n}` with the default degree bound.
pub fn build_flat_model(n: usize) -> Result<ModelContext> {
    ModelContext::new(n, DEFAULT_DEGREE_BOUND)
}

impl ModelContext {
    pub fn new(n: usize, degree_bound: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        let units = [[0, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]];
        let j = units.map(|c| {
            let block = right_mult(c);
            let full = Mat::from_fn(4 * n, 4 * n, |r, col| {
                if r / 4 == col / 4 {
                    block[(r % 4, col % 4)]
                } else {
                    0
                }
            });
            SignedPerm::from_matrix(&full)
        });
        let basis = AdmissibleBasis { j };
        let mut structure = [[[0i64; 3]; 3]; 3];
        let mats: Vec<Mat<i64>> = (0..3).map(|a| basis.matrix(a)).collect();
        for b in 0..3 {
            for c in 0..3 {
                let comm = mats[b].commutator(&mats[c]);
                for d in 0..3 {
                    // <C, J_d> = tr(J_d^T C) / 4n, exact for commutators of J's
                    let t = mats[d].transpose().mul(&comm).trace();
                    assert_eq!(t % (4 * n as i64), 0);
                    structure[b][c][d] = t / (4 * n as i64);
                }
            }
        }
        Ok(Self { n, basis, structure, degree_bound })
    }

    pub fn with_degree_bound(mut self, bound: u32) -> Self {
        self.degree_bound = bound;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        4 * self.n
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn basis(&self) -> &AdmissibleBasis {
        &self.basis
    }

    pub fn j(&self, a: usize) -> &SignedPerm {
        self.basis.get(a)
    }

    pub fn j_matrix<T: Ring>(&self, a: usize) -> Mat<T> {
        self.basis.matrix(a)
    }

    /// Structure constants of `Q` under the commutator bracket.
    pub fn bracket(&self, b: usize, c: usize) -> [i64; 3] {
        self.structure[b][c]
    }

    /// `sum_a q_a J_a`.
    pub fn q_matrix<T: Ring>(&self, q: &[T; 3]) -> Mat<T> {
        let d = self.dim();
        let mut m: Mat<T> = Mat::zeros(d, d);
        for (a, qa) in q.iter().enumerate() {
            if qa.is_zero() {
                continue;
            }
            let j = self.j(a);
            for k in 0..d {
                m[(j.target[k], k)] = m[(j.target[k], k)].clone() + signed(qa.clone(), j.sign[k]);
            }
        }
        m
    }

    /// Coordinates of the orthogonal projection of an endomorphism onto `Q`,
    /// for the bundle metric with `<J_a, J_b> = delta_ab`.
    pub fn q_coords<T: Ring>(&self, m: &Mat<T>) -> [T; 3] {
        let w = T::from_rat(&rat(1, self.dim() as i64));
        std::array::from_fn(|a| {
            let j = self.j(a);
            let s = (0..self.dim())
                .fold(T::zero(), |acc, k| acc + signed(m[(j.target[k], k)].clone(), j.sign[k]));
            s * w.clone()
        })
    }

    /// Whether an endomorphism lies in `Q` (exactly).
    pub fn is_in_q<T: Ring>(&self, m: &Mat<T>) -> bool {
        self.q_matrix(&self.q_coords(m)) == *m
    }

    pub fn q_inner<T: Ring>(a: &[T; 3], b: &[T; 3]) -> T {
        a[0].clone() * b[0].clone() + a[1].clone() * b[1].clone() + a[2].clone() * b[2].clone()
    }

    /// Product in `Q` of two elements viewed as imaginary quaternions:
    /// `J_u J_v = -<u,v> Id + J_{u x v}`; returns the `Q` part.
    pub fn cross<T: Ring>(u: &[T; 3], v: &[T; 3]) -> [T; 3] {
        [
            u[1].clone() * v[2].clone() - u[2].clone() * v[1].clone(),
            u[2].clone() * v[0].clone() - u[0].clone() * v[2].clone(),
            u[0].clone() * v[1].clone() - u[1].clone() * v[0].clone(),
        ]
    }

    /// `J_u x` with `J_u = sum u_a J_a`.
    pub fn apply_q<T: Ring>(&self, u: &[T; 3], x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        for (a, ua) in u.iter().enumerate() {
            if ua.is_zero() {
                continue;
            }
            let jx = self.j(a).apply(x);
            for (o, v) in out.iter_mut().zip(jx) {
                *o = o.clone() + ua.clone() * v;
            }
        }
        out
    }

    /// The bilinear `P_h(eta) = (eta + sum_i eta(J_i., J_i.)) / 4`.
    pub fn p_h_project<T: Ring>(&self, eta: &Mat<T>) -> Mat<T> {
        let mut acc = eta.clone();
        for a in 0..3 {
            acc = acc.add(&self.j(a).conjugate_bilinear(eta));
        }
        acc.scale_rat(&rat(1, 4))
    }

    /// `F(J_a X, J_a Y) = F(X, Y)` for `a = 1, 2, 3`, checked on basis pairs.
    pub fn is_q_hermitian<T: Ring>(&self, f: &Mat<T>) -> bool {
        (0..3).all(|a| self.j(a).conjugate_bilinear(f) == *f)
    }

    /// Euclidean metric.
    pub fn metric<T: Ring>(&self) -> Mat<T> {
        Mat::identity(self.dim())
    }

    pub fn unit_vector<T: Ring>(&self, k: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim()];
        v[k] = T::one();
        v
    }
}

/// What a [`PolyField`] takes values in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldShape {
    Scalar,
    Covector(usize),
    Vector(usize),
    /// Coordinates in the admissible basis of `Q`.
    QCoeff,
    Bilinear(usize),
    Endomorphism(usize),
}

impl FieldShape {
    pub fn len(self) -> usize {
        match self {
            FieldShape::Scalar => 1,
            FieldShape::Covector(d) | FieldShape::Vector(d) => d,
            FieldShape::QCoeff => 3,
            FieldShape::Bilinear(d) | FieldShape::Endomorphism(d) => d * d,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }
}

/// Polynomial map `R^{4n} -> (value space)` with exact rational
/// coefficients, stored component-wise (row-major for matrices).
#[derive(Clone, Debug, PartialEq)]
pub struct PolyField {
    shape: FieldShape,
    comps: Vec<Poly>,
    degree_bound: u32,
}

impl PolyField {
    pub fn new(shape: FieldShape, comps: Vec<Poly>, degree_bound: u32) -> Result<Self> {
        if comps.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{shape:?} needs {} components, got {}",
                shape.len(),
                comps.len()
            )));
        }
        let needed = comps.iter().map(Poly::degree).max().unwrap_or(0);
        if needed > degree_bound {
            return Err(Error::DegreeOverflow { op: "PolyField::new", needed, bound: degree_bound });
        }
        Ok(Self { shape, comps, degree_bound })
    }

    pub fn zero(shape: FieldShape, degree_bound: u32) -> Self {
        Self { shape, comps: vec![Poly::zero(); shape.len()], degree_bound }
    }

    pub fn from_mat(shape: FieldShape, m: Mat<Poly>, degree_bound: u32) -> Result<Self> {
        Self::new(shape, m.entries().to_vec(), degree_bound)
    }

    pub fn shape(&self) -> FieldShape {
        self.shape
    }

    pub fn comps(&self) -> &[Poly] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &Poly {
        &self.comps[i]
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn degree(&self) -> u32 {
        self.comps.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Poly::is_zero)
    }

    /// Matrix view of bilinear or endomorphism fields.
    pub fn as_mat(&self) -> Mat<Poly> {
        let d = match self.shape {
            FieldShape::Bilinear(d) | FieldShape::Endomorphism(d) => d,
            s => panic!("{s:?} is not matrix valued"),
        };
        Mat::from_fn(d, d, |r, c| self.comps[r * d + c].clone())
    }

    pub fn eval(&self, p: &[Rat]) -> Vec<Rat> {
        self.comps.iter().map(|c| c.eval(p)).collect()
    }

    pub fn eval_f64(&self, p: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval_f64(p)).collect()
    }

    pub fn partial(&self, var: usize) -> Self {
        Self {
            shape: self.shape,
            comps: self.comps.iter().map(|c| c.partial(var)).collect(),
            degree_bound: self.degree_bound,
        }
    }

    /// Componentwise linear combination; fails if shapes differ.
    pub fn add(&self, o: &Self) -> Result<Self> {
        if self.shape != o.shape {
            return Err(Error::Shape(format!("{:?} + {:?}", self.shape, o.shape)));
        }
        Ok(Self {
            shape: self.shape,
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.clone() + b.clone()).collect(),
            degree_bound: self.degree_bound.max(o.degree_bound),
        })
    }

    pub fn scale(&self, r: &Rat) -> Self {
        Self {
            shape: self.shape,
            comps: self.comps.iter().map(|c| c.scale(r)).collect(),
            degree_bound: self.degree_bound,
        }
    }
}

/// Polynomial differential form `sum_I f_I dx_I` on `R^dim`, `I` strictly
/// increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffForm {
    dim: usize,
    degree: usize,
    comps: BTreeMap<Vec<usize>, Poly>,
}

impl DiffForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self { dim, degree, comps: BTreeMap::new() }
    }

    pub fn function(dim: usize, f: Poly) -> Self {
        let mut w = Self::zero(dim, 0);
        w.add_term(vec![], f);
        w
    }

    /// `sum_i alpha_i dx_i` from a covector field.
    pub fn from_one_form(alpha: &PolyField) -> Result<Self> {
        let FieldShape::Covector(d) = alpha.shape() else {
            return Err(Error::Shape(format!("expected covector field, got {:?}", alpha.shape())));
        };
        let mut w = Self::zero(d, 1);
        for (i, c) in alpha.comps().iter().enumerate() {
            w.add_term(vec![i], c.clone());
        }
        Ok(w)
    }

    /// Skew bilinear `F` read as `sum_{i<j} F_ij dx_i ^ dx_j`.
    pub fn from_skew_bilinear(f: &Mat<Poly>) -> Result<Self> {
        if !f.is_square() || f.add(&f.transpose()) != Mat::zeros(f.rows(), f.cols()) {
            return Err(Error::Shape("2-form needs a skew matrix".into()));
        }
        let mut w = Self::zero(f.rows(), 2);
        for i in 0..f.rows() {
            for j in i + 1..f.cols() {
                w.add_term(vec![i, j], f[(i, j)].clone());
            }
        }
        Ok(w)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn coefficient(&self, idx: &[usize]) -> Poly {
        self.comps.get(idx).cloned().unwrap_or_default()
    }

    /// Adds `f dx_{idx}` for an arbitrary index list, sorting with sign.
    pub fn add_term(&mut self, idx: Vec<usize>, f: Poly) {
        let Some((sign, sorted)) = sort_with_sign(idx) else {
            return;
        };
        if f.is_zero() {
            return;
        }
        let f = if sign < 0 { -f } else { f };
        let e = self.comps.entry(sorted).or_default();
        *e = std::mem::take(e) + f;
        self.comps.retain(|_, v| !v.is_zero());
    }

    /// Skew matrix `F_ij = w(e_i, e_j)` of a 2-form, with
    /// `(dx_i ^ dx_j)(e_i, e_j) = 1`.
    pub fn to_skew_bilinear(&self) -> Result<Mat<Poly>> {
        if self.degree != 2 {
            return Err(Error::Shape(format!("{}-form is not a 2-form", self.degree)));
        }
        let mut m = Mat::zeros(self.dim, self.dim);
        for (idx, f) in &self.comps {
            m[(idx[0], idx[1])] = f.clone();
            m[(idx[1], idx[0])] = -f.clone();
        }
        Ok(m)
    }

    pub fn to_one_form(&self, degree_bound: u32) -> Result<PolyField> {
        if self.degree != 1 {
            return Err(Error::Shape(format!("{}-form is not a 1-form", self.degree)));
        }
        let comps = (0..self.dim).map(|i| self.coefficient(&[i])).collect();
        PolyField::new(FieldShape::Covector(self.dim), comps, degree_bound)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Poly)> {
        self.comps.iter()
    }
}

fn sort_with_sign(mut idx: Vec<usize>) -> Option<(i8, Vec<usize>)> {
    let mut sign = 1i8;
    for i in 0..idx.len() {
        for j in 0..idx.len() - 1 - i {
            if idx[j] > idx[j + 1] {
                idx.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sign, idx))
}

/// Exact `d` on polynomial forms.
pub fn exterior_derivative(w: &DiffForm) -> Result<DiffForm> {
    if w.degree >= w.dim {
        return Err(Error::Shape(format!("d of a top-degree {}-form", w.degree)));
    }
    let mut out = DiffForm::zero(w.dim, w.degree + 1);
    for (idx, f) in &w.comps {
        for var in 0..w.dim {
            let df = f.partial(var);
            if df.is_zero() {
                continue;
            }
            let mut nidx = Vec::with_capacity(idx.len() + 1);
            nidx.push(var);
            nidx.extend_from_slice(idx);
            out.add_term(nidx, df);
        }
    }
    Ok(out)
}

/// `delta alpha = - sum_i d_i alpha_i` for the Euclidean metric.
pub fn codifferential(alpha: &PolyField) -> Result<Poly> {
    let FieldShape::Covector(d) = alpha.shape() else {
        return Err(Error::Shape(format!("expected covector field, got {:?}", alpha.shape())));
    };
    Ok((0..d).fold(Poly::zero(), |acc, i| acc - alpha.comp(i).partial(i)))
}

/// Polynomial `f` with `df = alpha`, when `alpha` is closed.
///
/// Uses the radial homotopy `f(x) = int_0^1 alpha_{tx}(x) dt`.
pub fn primitive(alpha: &PolyField) -> Result<Option<Poly>> {
    let w = DiffForm::from_one_form(alpha)?;
    if !exterior_derivative(&w)?.is_zero() {
        return Ok(None);
    }
    let mut f = Poly::zero();
    for (i, ai) in alpha.comps().iter().enumerate() {
        for (m, c) in ai.terms() {
            let deg = i64::from(m.degree());
            let mono = m.mul(&crate::poly::Monomial::var(i));
            f = f + Poly::monomial(mono, c * rat(1, deg + 1));
        }
    }
    let check = DiffForm::function(w.dim(), f.clone());
    debug_assert_eq!(exterior_derivative(&check)?, w);
    Ok(Some(f))
}

/// The 1-form `alpha = 1/2 sum_ij F_ij x_i dx_j`, whose exterior derivative
/// is the constant 2-form `F` (skew).
pub fn linear_primitive(f: &Mat<Rat>, degree_bound: u32) -> Result<PolyField> {
    let d = f.rows();
    let half = rat(1, 2);
    let comps = (0..d)
        .map(|j| {
            (0..d).fold(Poly::zero(), |acc, i| acc + Poly::var(i).scale(&(&f[(i, j)] * &half)))
        })
        .collect();
    PolyField::new(FieldShape::Covector(d), comps, degree_bound)
}

/// Covector field from `(index, polynomial)` pairs.
pub fn one_form(dim: usize, entries: &[(usize, Poly)], degree_bound: u32) -> Result<PolyField> {
    let mut comps = vec![Poly::zero(); dim];
    for (i, p) in entries {
        comps[*i] = comps[*i].clone() + p.clone();
    }
    PolyField::new(FieldShape::Covector(dim), comps, degree_bound)
}

/// Constant covector field.
pub fn constant_one_form(values: &[Rat], degree_bound: u32) -> PolyField {
    let comps = values.iter().map(|v| Poly::constant(v.clone())).collect();
    PolyField::new(FieldShape::Covector(values.len()), comps, degree_bound)
        .expect("constants fit every bound")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(n: usize) -> ModelContext {
        build_flat_model(n).unwrap()
    }

    #[test]
    fn rejects_small_dimension() {
        assert_eq!(build_flat_model(1).unwrap_err(), Error::DimensionTooSmall(1));
    }

    #[test]
    fn quaternion_relations_n2() {
        let c = ctx(2);
        let j: Vec<Mat<Rat>> = (0..3).map(|a| c.j_matrix(a)).collect();
        let id = Mat::<Rat>::identity(8);
        assert!(j[0].mul(&j[1]).sub(&j[2]).is_zero());
        assert!(j[1].mul(&j[0]).add(&j[2]).is_zero());
        assert!(j[1].mul(&j[2]).sub(&j[0]).is_zero());
        assert!(j[2].mul(&j[0]).sub(&j[1]).is_zero());
        for m in &j {
            assert!(m.mul(m).add(&id).is_zero());
        }
    }

    #[test]
    fn orthogonal_n3() {
        let c = ctx(3);
        for a in 0..3 {
            let m: Mat<Rat> = c.j_matrix(a);
            assert_eq!(m.transpose().mul(&m), Mat::identity(12));
        }
    }

    #[test]
    fn bracket_is_twice_cross_product() {
        let c = ctx(2);
        assert_eq!(c.bracket(0, 1), [0, 0, 2]);
        assert_eq!(c.bracket(1, 2), [2, 0, 0]);
        assert_eq!(c.bracket(2, 0), [0, 2, 0]);
        assert_eq!(c.bracket(1, 0), [0, 0, -2]);
    }

    #[test]
    fn q_coords_roundtrip_and_metric() {
        let c = ctx(2);
        let q = [rat(1, 2), rat(-3, 1), rat(2, 7)];
        let m = c.q_matrix(&q);
        assert_eq!(c.q_coords(&m), q);
        assert!(c.is_in_q(&m));
        assert!(!c.is_in_q(&Mat::<Rat>::identity(8)));
    }

    #[test]
    fn d_of_x2_dx1() {
        let a = one_form(8, &[(0, Poly::var(1))], 3).unwrap();
        let da = exterior_derivative(&DiffForm::from_one_form(&a).unwrap()).unwrap();
        let mut expected = DiffForm::zero(8, 2);
        expected.add_term(vec![0, 1], -Poly::one());
        assert_eq!(da, expected);
    }

    #[test]
    fn d_squared_vanishes_on_function() {
        let f = Poly::var(0) * Poly::var(2);
        let df = exterior_derivative(&DiffForm::function(8, f)).unwrap();
        assert!(exterior_derivative(&df).unwrap().is_zero());
    }

    #[test]
    fn d_of_constant_form() {
        let a = constant_one_form(&vec![rat(3, 4); 8], 3);
        assert!(exterior_derivative(&DiffForm::from_one_form(&a).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn codifferential_examples() {
        let a = constant_one_form(&vec![rat(1, 1); 8], 3);
        assert!(codifferential(&a).unwrap().is_zero());
        let a = one_form(8, &[(0, Poly::var(0))], 3).unwrap();
        assert_eq!(codifferential(&a).unwrap(), Poly::from_i64(-1));
        let a = one_form(8, &[(0, Poly::var(1)), (1, -Poly::var(0))], 3).unwrap();
        assert!(codifferential(&a).unwrap().is_zero());
    }

    #[test]
    fn p_h_fixes_metric_and_is_idempotent() {
        let c = ctx(2);
        let g: Mat<Rat> = c.metric();
        assert_eq!(c.p_h_project(&g), g);
        let eta = Mat::from_fn(8, 8, |r, col| rat((r * 3 + col * 5) as i64 % 7 - 3, 1 + (r + col) as i64 % 4));
        let p = c.p_h_project(&eta);
        assert_eq!(c.p_h_project(&p), p);
        assert!(c.is_q_hermitian(&p));
    }

    #[test]
    fn kaehler_form_is_not_q_hermitian() {
        let c = ctx(2);
        // omega_1(X, Y) = g(J_1 X, Y) has matrix J_1^T
        let w1: Mat<Rat> = c.j_matrix::<Rat>(0).transpose();
        assert!(!c.is_q_hermitian(&w1));
        // omega_1(J_2 X, J_2 Y) = -omega_1(X, Y)
        assert_eq!(c.j(1).conjugate_bilinear(&w1), w1.neg());
        assert!(c.is_q_hermitian(&c.p_h_project(&w1)));
    }

    #[test]
    fn p_h_of_kaehler_form_by_basis_evaluation() {
        let c = ctx(2);
        let w1: Mat<Rat> = c.j_matrix::<Rat>(0).transpose();
        // oracle: evaluate the defining sum on every pair of basis vectors
        let jm: Vec<Mat<Rat>> = (0..3).map(|a| c.j_matrix(a)).collect();
        let form = |x: &[Rat], y: &[Rat]| -> Rat {
            let wy = w1.mul_vec(y);
            crate::scalar::dot(x, &wy)
        };
        let oracle = Mat::from_fn(8, 8, |r, col| {
            let er: Vec<Rat> = c.unit_vector(r);
            let ec: Vec<Rat> = c.unit_vector(col);
            let mut s = form(&er, &ec);
            for m in &jm {
                s += form(&m.mul_vec(&er), &m.mul_vec(&ec));
            }
            s * rat(1, 4)
        });
        let p = c.p_h_project(&w1);
        assert_eq!(p, oracle);
        // omega_1 is J_1-invariant but flips sign under J_2, J_3: P_h(omega_1) = 0
        assert!(p.is_zero());
    }

    #[test]
    fn primitive_of_closed_form() {
        let f = Poly::var(0) * Poly::var(2) + Poly::var(3);
        let df = exterior_derivative(&DiffForm::function(8, f.clone())).unwrap();
        let alpha = df.to_one_form(3).unwrap();
        assert_eq!(primitive(&alpha).unwrap(), Some(f));
        let a = one_form(8, &[(0, Poly::var(1))], 3).unwrap();
        assert_eq!(primitive(&a).unwrap(), None);
    }

    #[test]
    fn degree_bound_is_enforced() {
        let cube = Poly::var(0) * Poly::var(0) * Poly::var(0) * Poly::var(1);
        let err = PolyField::new(FieldShape::Scalar, vec![cube], 3).unwrap_err();
        assert!(matches!(err, Error::DegreeOverflow { needed: 4, bound: 3, .. }));
    }
}
