//! Seeded generators for exact test data.
//!
//! Every check draws from its own ChaCha stream, selected from the run seed
//! and a stable hash of the check id, so checks can run in any order or in
//! parallel without changing what they see.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::flatmodel::{linear_primitive, one_form, FieldShape, ModelContext, PolyField};
use crate::matrix::Mat;
use crate::poly::{Monomial, Poly};
use crate::scalar::{rat, Rat, Ring};

pub type SampleRng = ChaCha8Rng;

/// FNV-1a, stable across platforms and releases.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// The stream owned by check `id` under run seed `seed`.
pub fn stream(seed: u64, id: &str) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stable_hash(id));
    rng
}

/// Uniform in `[-9, 9] \ {0}`.
pub fn small_nonzero(rng: &mut SampleRng) -> i64 {
    let v = rng.gen_range(1..=9);
    if rng.gen() {
        v
    } else {
        -v
    }
}

/// `num / den`, both uniform in `[-9, 9] \ {0}`.
pub fn rand_rat(rng: &mut SampleRng) -> Rat {
    rat(small_nonzero(rng), small_nonzero(rng))
}

pub fn rand_vec(rng: &mut SampleRng, d: usize) -> Vec<Rat> {
    (0..d).map(|_| rand_rat(rng)).collect()
}

pub fn rand_q(rng: &mut SampleRng) -> [Rat; 3] {
    std::array::from_fn(|_| rand_rat(rng))
}

/// The six axis points followed by twelve rational points from Pythagorean
/// quadruples.
pub fn sphere_points() -> Vec<[Rat; 3]> {
    let z = || Rat::from_i64(0);
    let o = |s: i64| Rat::from_i64(s);
    let mut pts = Vec::with_capacity(18);
    for k in 0..3 {
        for s in [1, -1] {
            let mut p = [z(), z(), z()];
            p[k] = o(s);
            pts.push(p);
        }
    }
    let q = [
        (1, 2, 2, 3),
        (2, 1, 2, 3),
        (2, 2, 1, 3),
        (-1, 2, 2, 3),
        (2, 3, 6, 7),
        (6, 2, 3, 7),
        (3, 6, -2, 7),
        (3, 4, 0, 5),
        (0, 3, 4, 5),
        (4, 0, 3, 5),
        (-3, 0, 4, 5),
        (1, 4, 8, 9),
    ];
    pts.extend(q.iter().map(|&(a, b, c, d)| [rat(a, d), rat(b, d), rat(c, d)]));
    pts
}

pub fn rand_sphere_point(rng: &mut SampleRng) -> [Rat; 3] {
    sphere_points().choose(rng).expect("nonempty list").clone()
}

/// Random vector orthogonal to `u`.
pub fn rand_perp(rng: &mut SampleRng, u: &[Rat; 3]) -> [Rat; 3] {
    let [b, c] = crate::twistor::perp_basis(u);
    let (s, t) = (rand_rat(rng), rand_rat(rng));
    std::array::from_fn(|i| b[i].clone() * s.clone() + c[i].clone() * t.clone())
}

/// Sparse polynomial with `terms` random monomials of degree at most `degree`.
pub fn rand_poly(rng: &mut SampleRng, nvars: usize, degree: u32, terms: usize) -> Poly {
    let mut p = Poly::zero();
    for _ in 0..terms {
        let deg = rng.gen_range(0..=degree);
        let exps: Vec<(usize, u16)> = (0..deg).map(|_| (rng.gen_range(0..nvars), 1)).collect();
        p.add_term(Monomial::from_exponents(&exps), rand_rat(rng));
    }
    p
}

/// 1-form with up to three nonzero components of degree at most `degree`.
pub fn rand_one_form(rng: &mut SampleRng, ctx: &ModelContext, degree: u32) -> Result<PolyField> {
    let d = ctx.dim();
    let k = rng.gen_range(1..=3);
    let entries: Vec<(usize, Poly)> = (0..k).map(|_| (rng.gen_range(0..d), rand_poly(rng, d, degree, 2))).collect();
    one_form(d, &entries, ctx.degree_bound())
}

pub fn rand_q_field(rng: &mut SampleRng, ctx: &ModelContext, degree: u32) -> Result<PolyField> {
    let d = ctx.dim();
    let comps = (0..3).map(|_| rand_poly(rng, d, degree, 2)).collect();
    PolyField::new(FieldShape::QCoeff, comps, ctx.degree_bound())
}

/// Skew matrix with `pairs` random entries.
pub fn rand_skew(rng: &mut SampleRng, d: usize, pairs: usize) -> Mat<Rat> {
    let mut m: Mat<Rat> = Mat::zeros(d, d);
    for _ in 0..pairs {
        let i = rng.gen_range(0..d);
        let j = (i + rng.gen_range(1..d)) % d;
        let v = rand_rat(rng);
        m[(i, j)] = m[(i, j)].clone() + v.clone();
        m[(j, i)] = m[(j, i)].clone() - v;
    }
    m
}

pub fn rand_matrix(rng: &mut SampleRng, d: usize) -> Mat<Rat> {
    Mat::from_fn(d, d, |_, _| rand_rat(rng))
}

/// `df` for a polynomial `f`.
pub fn gradient(ctx: &ModelContext, f: &Poly) -> Result<PolyField> {
    let d = ctx.dim();
    let entries: Vec<(usize, Poly)> = (0..d).map(|i| (i, f.partial(i))).collect();
    one_form(d, &entries, ctx.degree_bound())
}

/// Self-dual `alpha`: a primitive of a random Q-hermitian 2-form plus the
/// gradient of a random polynomial of degree at most `degree + 1`.
pub fn self_dual_alpha(rng: &mut SampleRng, ctx: &ModelContext, degree: u32) -> Result<PolyField> {
    let f = ctx.p_h_project(&rand_skew(rng, ctx.dim(), 2));
    let herm = linear_primitive(&f, ctx.degree_bound())?;
    let pot = rand_poly(rng, ctx.dim(), degree + 1, 2);
    herm.add(&gradient(ctx, &pot)?)
}

/// Non-self-dual `alpha`: a self-dual one plus `c x_j dx_i`, whose
/// differential is never Q-hermitian.
pub fn non_self_dual_alpha(rng: &mut SampleRng, ctx: &ModelContext, degree: u32) -> Result<PolyField> {
    let d = ctx.dim();
    let i = rng.gen_range(0..d);
    let j = (i + rng.gen_range(1..d)) % d;
    let bump = one_form(d, &[(i, Poly::var(j).scale(&rand_rat(rng)))], ctx.degree_bound())?;
    self_dual_alpha(rng, ctx, degree)?.add(&bump)
}

/// Closed and co-closed `alpha`: constant plus the gradient of a harmonic
/// quadratic `sum c (x_i x_j)` with `i != j`.
pub fn harmonic_alpha(rng: &mut SampleRng, ctx: &ModelContext) -> Result<PolyField> {
    let d = ctx.dim();
    let mut pot = Poly::zero();
    for k in 0..d {
        if rng.gen_bool(0.5) {
            pot = pot + Poly::var(k).scale(&rand_rat(rng));
        }
    }
    let i = rng.gen_range(0..d);
    let j = (i + rng.gen_range(1..d)) % d;
    pot = pot + (Poly::var(i) * Poly::var(j)).scale(&rand_rat(rng));
    gradient(ctx, &pot)
}

/// Co-closed `alpha`: harmonic part plus a rotation `c (x_j dx_i - x_i dx_j)`.
pub fn co_closed_alpha(rng: &mut SampleRng, ctx: &ModelContext) -> Result<PolyField> {
    let d = ctx.dim();
    let i = rng.gen_range(0..d);
    let j = (i + rng.gen_range(1..d)) % d;
    let c = rand_rat(rng);
    let rot = one_form(d, &[(i, Poly::var(j).scale(&c)), (j, Poly::var(i).scale(&-c))], ctx.degree_bound())?;
    harmonic_alpha(rng, ctx)?.add(&rot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::QuatConnection;
    use crate::flatmodel::{build_flat_model, codifferential};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<i64> = (0..10).map(|_| small_nonzero(&mut stream(7, "x"))).collect();
        let mut s1 = stream(7, "x");
        let mut s2 = stream(7, "x");
        let mut s3 = stream(7, "y");
        let v1: Vec<i64> = (0..20).map(|_| small_nonzero(&mut s1)).collect();
        let v2: Vec<i64> = (0..20).map(|_| small_nonzero(&mut s2)).collect();
        let v3: Vec<i64> = (0..20).map(|_| small_nonzero(&mut s3)).collect();
        assert_eq!(v1, v2);
        assert_ne!(v1, v3);
        assert!(a.iter().all(|&x| x != 0 && (-9..=9).contains(&x)));
    }

    #[test]
    fn sphere_points_are_unit() {
        let pts = sphere_points();
        assert_eq!(pts.len(), 18);
        for p in pts {
            let n = p.iter().fold(Rat::from_i64(0), |s, x| s + x.clone() * x.clone());
            assert_eq!(n, Rat::from_i64(1));
        }
    }

    #[test]
    fn families_have_their_predicates() {
        let ctx = build_flat_model(2).unwrap().with_degree_bound(6);
        let mut rng = stream(3, "families");
        for _ in 0..5 {
            let sd = QuatConnection::new(&ctx, self_dual_alpha(&mut rng, &ctx, 2).unwrap()).unwrap();
            assert!(sd.predicates().self_dual);
            let nsd = QuatConnection::new(&ctx, non_self_dual_alpha(&mut rng, &ctx, 2).unwrap()).unwrap();
            assert!(!nsd.predicates().self_dual);
            let h = harmonic_alpha(&mut rng, &ctx).unwrap();
            assert!(codifferential(&h).unwrap().is_zero());
            assert!(QuatConnection::new(&ctx, h).unwrap().predicates().closed);
            assert!(codifferential(&co_closed_alpha(&mut rng, &ctx).unwrap()).unwrap().is_zero());
            let u = rand_sphere_point(&mut rng);
            let w = rand_perp(&mut rng, &u);
            assert_eq!(crate::twistor::dot3(&u, &w), Rat::from_i64(0));
        }
    }
}
