//! Seeded check suites and their reports.
//!
//! Each check owns a ChaCha stream derived from the run seed and its id, so
//! checks run in parallel and still produce identical reports for identical
//! configurations. Reports are sorted by check id.

use std::collections::BTreeMap;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::connection::{
    q_commutator_formula_violation, covariant_q, curvature_from_jet, eta_from_ricci, gamma_matrix, omega_from_eta, omega_from_trace,
    r_eta_tensor, ricci_change_check, s_alpha, s_alpha_apply, weyl_part, AlphaJet, QJet, QuatConnection,
};
use crate::ehrep::{
    abstract_weight_operator, bridge, certified_units, embedding_span, kernel_intersection_check, s3_generators,
    split_s3_h, t_j, t_j_matrix, t_real_matrix, unit_j, weight_operator, weight_operator_expansion, EHTensor, G,
};
use crate::error::{Error, Result};
use crate::flatmodel::{
    exterior_derivative, linear_primitive, primitive, DiffForm, FieldShape, ModelContext, PolyField,
};
use crate::gauss::GaussRat;
use crate::hermtwist::{
    chern_pairing_check, d_omega_hhh, d_omega_vvv, dg_expansion, dg_first_principles, sums_sides, torsion_checks,
};
use crate::matrix::Mat;
use crate::penrose::{
    kernel_member, penrose_operator, penrose_operator_formula, penrose_transform_check, second_covariant,
    weitzenbock_checks, PenroseContext,
};
use crate::poly::Poly;
use crate::sample::{self, SampleRng};
use crate::scalar::{dot, rat, Rat, Ring};
use crate::twistor::{self, fd, SectionJet, ThetaSection, TwistorPoint, TwistorTangent, V3};

/// Serializes exact rationals as strings such as `"-3/7"`.
pub fn ser_rats<S: Serializer>(v: &[Rat], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Algebra,
    Connection,
    Ehrep,
    Twistor,
    Penrose,
    Hermtwist,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Algebra, Suite::Connection, Suite::Ehrep, Suite::Twistor, Suite::Penrose, Suite::Hermtwist];

    pub fn id(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Connection => "connection",
            Suite::Ehrep => "ehrep",
            Suite::Twistor => "twistor",
            Suite::Penrose => "penrose",
            Suite::Hermtwist => "hermtwist",
        }
    }

    /// Parses a suite identifier; `all` expands to every suite.
    pub fn parse(s: &str) -> Option<Vec<Suite>> {
        if s == "all" {
            return Some(Self::ALL.to_vec());
        }
        Self::ALL.iter().find(|x| x.id() == s).map(|x| vec![*x])
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub n: usize,
    /// Maximal polynomial degree of generated fields.
    pub degree: u32,
    pub samples: usize,
    pub seed: u64,
    pub suites: Vec<Suite>,
    #[serde(skip)]
    pub format: Format,
}

pub const DEFAULT_SEED: u64 = 42;

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { n: 2, degree: 2, samples: 100, seed: DEFAULT_SEED, suites: Suite::ALL.to_vec(), format: Format::Text }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.n < 2 {
            return Err(format!("n must be at least 2, got {}", self.n));
        }
        if self.samples < 1 {
            return Err("samples must be at least 1".into());
        }
        if self.suites.is_empty() {
            return Err("no suite selected".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    #[serde(rename = "check-id")]
    pub id: String,
    pub suite: Suite,
    pub anchor: String,
    pub status: Status,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

/// What a check returns: the number of samples examined, a witness on
/// failure and optional summary statistics.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub samples: usize,
    pub witness: Option<Value>,
    pub details: Option<Value>,
}

impl Outcome {
    pub fn pass(samples: usize) -> Self {
        Self { samples, ..Self::default() }
    }

    pub fn fail(samples: usize, witness: Value) -> Self {
        Self { samples, witness: Some(witness), details: None }
    }

    pub fn with_details(mut self, d: Value) -> Self {
        self.details = Some(d);
        self
    }
}

/// Shared, read-only data for all checks of a run.
pub struct Env {
    pub n: usize,
    pub degree: u32,
    pub samples: usize,
    pub ctx: ModelContext,
    pub pc: PenroseContext,
}

impl Env {
    pub fn new(cfg: &SuiteConfig) -> Result<Self> {
        let bound = (3 * cfg.degree).max(3);
        let ctx = ModelContext::new(cfg.n, bound)?;
        let pc = PenroseContext::new(&ctx);
        Ok(Self { n: cfg.n, degree: cfg.degree, samples: cfg.samples, ctx, pc })
    }

    fn d(&self) -> usize {
        self.ctx.dim()
    }

    /// Sample count for checks built on polynomial second derivatives.
    fn heavy(&self) -> usize {
        (self.samples / 20).max(1)
    }
}

type CheckFn = fn(&Env, &mut SampleRng) -> Result<Outcome>;

pub struct CheckDef {
    pub id: &'static str,
    pub suite: Suite,
    pub anchor: &'static str,
    run: CheckFn,
}

macro_rules! require {
    ($cond:expr, $n:expr, $w:expr) => {
        if !$cond {
            return Ok(Outcome::fail($n, $w));
        }
    };
}

fn jr(r: &Rat) -> Value {
    Value::String(r.to_string())
}

fn jv(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(jr).collect())
}

fn jm(m: &Mat<Rat>) -> Value {
    Value::Array((0..m.rows()).map(|r| jv(m.row(r))).collect())
}

fn jg(v: &[GaussRat]) -> Value {
    Value::Array(v.iter().map(|g| Value::String(g.to_string())).collect())
}

fn jf(f: &PolyField) -> Value {
    Value::Array(f.comps().iter().map(|p| Value::String(p.to_string())).collect())
}

fn jqjet(a: &QJet<Rat>) -> Value {
    json!({ "value": jv(&a.value), "grad": jm(&a.grad) })
}

fn jt(t: &TwistorTangent<Rat>) -> Value {
    json!({ "x": jv(&t.x), "w": jv(&t.w) })
}

fn rand_jet(rng: &mut SampleRng, d: usize) -> QJet<Rat> {
    QJet { value: sample::rand_q(rng), grad: Mat::from_fn(d, 3, |_, _| sample::rand_rat(rng)) }
}

fn rand_tangent(rng: &mut SampleRng, d: usize, u: &V3<Rat>) -> TwistorTangent<Rat> {
    TwistorTangent { x: sample::rand_vec(rng, d), w: sample::rand_perp(rng, u) }
}

fn zero_rat() -> Rat {
    Rat::from_i64(0)
}

// ---------------------------------------------------------------- algebra

fn algebra_quaternion(env: &Env, _: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let id = Mat::<Rat>::identity(d);
    let js: Vec<Mat<Rat>> = (0..3).map(|a| c.j_matrix(a)).collect();
    for (a, j) in js.iter().enumerate() {
        require!(j.mul(j) == id.neg(), 1, json!({ "failed": "J_a^2 = -Id", "a": a }));
        require!(j.transpose().mul(j) == id, 1, json!({ "failed": "J_a orthogonal", "a": a }));
    }
    require!(js[0].mul(&js[1]) == js[2], 1, json!({ "failed": "J1 J2 = J3" }));
    for b in 0..3 {
        for e in 0..3 {
            let br = c.bracket(b, e);
            let expect = (0..3).fold(Mat::zeros(d, d), |m: Mat<Rat>, k| m.add(&js[k].scale(&Rat::from_i64(br[k]))));
            require!(js[b].commutator(&js[e]) == expect, 1, json!({ "failed": "[J_b, J_c] = 2 eps J_d", "b": b, "c": e }));
        }
    }
    Ok(Outcome::pass(1))
}

fn algebra_q_product(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let id = Mat::<Rat>::identity(c.dim());
    for k in 0..env.samples {
        let (u, v) = (sample::rand_q(rng), sample::rand_q(rng));
        let lhs = c.q_matrix(&u).mul(&c.q_matrix(&v));
        let rhs = id.scale(&-twistor::dot3(&u, &v)).add(&c.q_matrix(&twistor::cross(&u, &v)));
        require!(lhs == rhs, k + 1, json!({ "u": jv(&u), "v": jv(&v) }));
        require!(c.q_coords(&c.q_matrix(&u)) == u, k + 1, json!({ "u": jv(&u), "failed": "q_coords round trip" }));
    }
    Ok(Outcome::pass(env.samples))
}

fn algebra_p_h(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    for k in 0..env.samples {
        let f = sample::rand_skew(rng, c.dim(), 4);
        let p = c.p_h_project(&f);
        require!(c.is_q_hermitian(&p), k + 1, json!({ "F": jm(&f), "failed": "image is Q-hermitian" }));
        require!(c.p_h_project(&p) == p, k + 1, json!({ "F": jm(&f), "failed": "idempotent" }));
        require!(c.is_q_hermitian(&f) == (p == f), k + 1, json!({ "F": jm(&f), "failed": "fixes exactly the Q-hermitian forms" }));
    }
    Ok(Outcome::pass(env.samples))
}

fn algebra_exterior(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    for k in 0..env.samples {
        let a = sample::rand_one_form(rng, c, env.degree)?;
        let da = exterior_derivative(&DiffForm::from_one_form(&a)?)?;
        require!(exterior_derivative(&da)?.is_zero(), k + 1, json!({ "alpha": jf(&a), "failed": "d d = 0" }));
        let pot = sample::rand_poly(rng, c.dim(), env.degree + 1, 3);
        let g = sample::gradient(c, &pot)?;
        match primitive(&g)? {
            Some(f) => {
                let back = sample::gradient(c, &f)?;
                require!(back == g, k + 1, json!({ "potential": pot.to_string(), "failed": "d(primitive) = alpha" }));
            }
            None => return Ok(Outcome::fail(k + 1, json!({ "potential": pot.to_string(), "failed": "closed form without primitive" }))),
        }
        require!(primitive(&a)?.is_some() == da.is_zero(), k + 1, json!({ "alpha": jf(&a), "failed": "closed iff exact" }));
    }
    Ok(Outcome::pass(env.samples))
}

// ------------------------------------------------------------- connection

fn connection_trace(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let factor = Rat::from_i64(4 * (env.n as i64 + 1));
    for k in 0..env.samples {
        let a = sample::rand_vec(rng, d);
        let x = sample::rand_vec(rng, d);
        let s = s_alpha(c, &a, &x);
        require!(s.trace() == dot(&a, &x) * factor.clone(), k + 1, json!({ "alpha": jv(&a), "X": jv(&x) }));
        let y = sample::rand_vec(rng, d);
        require!(s.mul_vec(&y) == s_alpha_apply(c, &a, &x, &y), k + 1, json!({ "alpha": jv(&a), "X": jv(&x), "Y": jv(&y), "failed": "matrix vs summands" }));
    }
    Ok(Outcome::pass(env.samples))
}

fn connection_bianchi(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    for k in 0..env.samples {
        let a = sample::rand_one_form(rng, c, env.degree)?;
        let p = sample::rand_vec(rng, c.dim());
        let r = QuatConnection::new(c, a.clone())?.curvature_at(&p);
        if let Some(t) = r.bianchi_violation() {
            return Ok(Outcome::fail(k + 1, json!({ "alpha": jf(&a), "p": jv(&p), "ijk": [t.0, t.1, t.2] })));
        }
        for i in 0..c.dim() {
            for j in i + 1..c.dim() {
                for b in 0..3 {
                    require!(c.is_in_q(&r.get(i, j).commutator(&c.j_matrix(b))), k + 1, json!({ "alpha": jf(&a), "p": jv(&p), "failed": "[R, J_a] in Q", "ija": [i, j, b] }));
                }
            }
        }
    }
    Ok(Outcome::pass(env.samples))
}

fn connection_decomposition(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let js: Vec<Mat<Rat>> = (0..3).map(|a| c.j_matrix(a)).collect();
    for k in 0..env.samples {
        let a = sample::rand_one_form(rng, c, env.degree)?;
        let p = sample::rand_vec(rng, d);
        let w_in = || json!({ "alpha": jf(&a), "p": jv(&p) });
        let r = QuatConnection::new(c, a.clone())?.curvature_at(&p);
        let w = weyl_part(c, &r);
        require!(w.ricci().is_zero(), k + 1, json!({ "input": w_in(), "failed": "Ricci(W) = 0" }));
        for i in 0..d {
            for j in i + 1..d {
                let wij = w.get(i, j);
                require!(js.iter().all(|jm| wij.commutator(jm).is_zero()), k + 1, json!({ "input": w_in(), "failed": "[W, J_a] = 0", "ij": [i, j] }));
            }
        }
        let eta = eta_from_ricci(c, &r.ricci());
        let om_t = omega_from_trace(c, &r);
        require!(om_t == omega_from_eta(c, &eta.eta), k + 1, json!({ "input": w_in(), "failed": "Omega via trace = Omega via eta" }));
        if let Some(t) = q_commutator_formula_violation(c, &r, &om_t) {
            return Ok(Outcome::fail(k + 1, json!({ "input": w_in(), "failed": "[R, J_a] = Omega_c J_b - Omega_b J_c", "ija": [t.0, t.1, t.2] })));
        }
    }
    Ok(Outcome::pass(env.samples))
}

fn connection_roundtrip(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    for k in 0..env.samples {
        let eta = sample::rand_matrix(rng, c.dim());
        let back = eta_from_ricci(c, &r_eta_tensor(c, &eta).ricci());
        require!(back.eta == eta, k + 1, json!({ "eta": jm(&eta) }));
    }
    Ok(Outcome::pass(env.samples))
}

fn connection_ricci_change(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    for k in 0..env.samples {
        let a = sample::rand_one_form(rng, c, env.degree)?;
        let p = sample::rand_vec(rng, c.dim());
        let jet = AlphaJet::of_field(&a).eval(&p);
        let ch = ricci_change_check(c, &jet);
        require!(ch.holds(), k + 1, json!({ "alpha": jf(&a), "p": jv(&p), "sym_residual": jm(&ch.sym_residual), "skew_residual": jm(&ch.skew_residual) }));
    }
    Ok(Outcome::pass(env.samples))
}

fn connection_predicates(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let m = env.heavy();
    for k in 0..m {
        let sd = k % 2 == 0;
        let a = if sd { sample::self_dual_alpha(rng, c, env.degree)? } else { sample::non_self_dual_alpha(rng, c, env.degree)? };
        let conn = QuatConnection::new(c, a.clone())?;
        let pr = conn.predicates();
        require!(pr.self_dual == sd, k + 1, json!({ "alpha": jf(&a), "expected_self_dual": sd }));
        require!(conn.is_self_dual_via_ricci()? == sd, k + 1, json!({ "alpha": jf(&a), "failed": "Ricci route disagrees" }));
        require!(pr.closed == pr.exact, k + 1, json!({ "alpha": jf(&a), "failed": "closed iff exact" }));
    }
    Ok(Outcome::pass(m))
}

// ------------------------------------------------------------------ ehrep

fn ehrep_spectrum(env: &Env, _: &mut SampleRng) -> Result<Outcome> {
    let sp = env.pc.weight.spectrum();
    let d = env.d();
    let ok = sp.minimal_polynomial_holds && sp.rank_b_minus_4 == 2 * d && sp.rank_b_plus_2 == d && sp.trace_is_zero;
    let details = json!({
        "size": env.pc.weight.dim(),
        "minimal_polynomial_holds": sp.minimal_polynomial_holds,
        "rank_b_minus_4": sp.rank_b_minus_4,
        "rank_b_plus_2": sp.rank_b_plus_2,
        "trace_is_zero": sp.trace_is_zero,
    });
    require!(ok, 1, details);
    Ok(Outcome::pass(1).with_details(details))
}

fn ehrep_routes(env: &Env, _: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let b = weight_operator(c);
    require!(b == weight_operator_expansion(c), 1, json!({ "failed": "commutator route = expansion route" }));
    require!(env.pc.proj.identities_hold(), 1, json!({ "failed": "projector identities" }));
    let br = bridge(c);
    require!(br.conjugate(&b.mat) == abstract_weight_operator(env.n), 1, json!({ "failed": "bridge conjugates B to the abstract weight operator" }));
    Ok(Outcome::pass(1))
}

fn ehrep_bridge(env: &Env, _: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let br = bridge(c);
    require!(br.intertwines(c), 1, json!({ "failed": "bridge intertwines J_a with j_a" }));
    for u in certified_units() {
        require!(br.conjugate(&t_real_matrix(c, &u)) == t_j_matrix(env.n, &unit_j(&u)?)?, 1, json!({ "u": jv(&u), "failed": "real T_J conjugates to T_j" }));
    }
    Ok(Outcome::pass(1))
}

fn ehrep_kernel(env: &Env, _: &mut SampleRng) -> Result<Outcome> {
    let rep = kernel_intersection_check(&env.ctx, &certified_units())?;
    let details = json!({
        "intersection_dim": rep.intersection_dim,
        "pi_h_rank": rep.pi_h_rank,
        "equals_pi_h_image": rep.equals_pi_h_image,
        "contains_embeddings": rep.contains_embeddings,
        "basis_only_dim": rep.basis_only_dim,
    });
    let ok = rep.equals_pi_h_image && rep.intersection_dim == rep.pi_h_rank && rep.contains_embeddings;
    require!(ok, 1, details);
    Ok(Outcome::pass(1).with_details(details))
}

fn ehrep_split(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let n = env.n;
    let b = abstract_weight_operator(n);
    let four = G::real(Rat::from_i64(4));
    let emb = embedding_span(n);
    require!(b.mul(&emb) == emb.scale(&four), 1, json!({ "failed": "B = 4 on the embedded E* (x) H" }));
    let fm = crate::ehrep::id_f_matrix(n);
    require!(fm.mul(&emb).rank() == emb.rank() && emb.rank() == 4 * n, 1, json!({ "failed": "Id (x) F injective on the embedding" }));
    for k in 0..n.min(4) {
        let mut e = vec![G::real(zero_rat()); 2 * n];
        e[k] = G::real(Rat::from_i64(1));
        for g in s3_generators(&e) {
            let col = g.as_column();
            require!(b.mul(&col) == col.scale(&G::real(Rat::from_i64(-2))), 1, json!({ "failed": "B = -2 on S^3 generators", "e": k }));
        }
    }
    for k in 0..env.samples {
        let coords: Vec<G> = (0..12 * n).map(|_| G::new(sample::rand_rat(rng), sample::rand_rat(rng))).collect();
        let t = EHTensor::from_coords(n, coords.clone())?;
        let (s3, h) = split_s3_h(&t);
        require!(s3.add(&h) == t, k + 1, json!({ "t": jg(&coords), "failed": "parts sum back" }));
        require!(fm.mul(&s3.as_column()).is_zero(), k + 1, json!({ "t": jg(&coords), "failed": "S^3 part in ker(Id (x) F)" }));
        require!(emb.spans(&h.as_column()), k + 1, json!({ "t": jg(&coords), "failed": "H part in the embedding" }));
    }
    Ok(Outcome::pass(env.samples))
}

// ---------------------------------------------------------------- twistor

fn twistor_projection(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    for k in 0..env.samples {
        let u = sample::rand_sphere_point(rng);
        let a = sample::rand_q(rng);
        let p = twistor::pi_project(&u, &a);
        let w = || json!({ "u": jv(&u), "A": jv(&a) });
        require!(p == twistor::pi_project_matrix(c, &u, &a), k + 1, w());
        require!(twistor::pi_project(&u, &p) == p, k + 1, w());
        require!(twistor::is_zero3(&twistor::pi_project(&u, &u)), k + 1, w());
        require!(twistor::dot3(&p, &u).is_zero(), k + 1, w());
    }
    Ok(Outcome::pass(env.samples))
}

fn twistor_vertical(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let zero = vec![zero_rat(); d];
    for k in 0..env.samples {
        let u = sample::rand_sphere_point(rng);
        let a = sample::rand_vec(rng, d);
        let t = rand_tangent(rng, d, &u);
        let w = || json!({ "u": jv(&u), "alpha": jv(&a), "U": jt(&t) });
        require!(twistor::vertical_part(c, &zero, &u, &t) == t.w, k + 1, w());
        let lift = twistor::horizontal_lift(c, &a, &u, &t.x);
        require!(twistor::is_zero3(&twistor::vertical_part(c, &a, &u, &lift)), k + 1, w());
        let g = gamma_matrix(c, &a, &t.x);
        require!(g.add(&g.transpose()).is_zero(), k + 1, w());
        require!(dot(&g.mul_vec(&u), &u).is_zero(), k + 1, w());
    }
    Ok(Outcome::pass(env.samples))
}

fn twistor_nabla(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    for k in 0..env.samples {
        let u = sample::rand_sphere_point(rng);
        let a = sample::rand_vec(rng, d);
        let t = rand_tangent(rng, d, &u);
        let s = SectionJet { a: rand_jet(rng, d), b: rand_jet(rng, d) };
        let w = || json!({ "u": jv(&u), "alpha": jv(&a), "U": jt(&t), "A": jqjet(&s.a), "B": jqjet(&s.b) });
        let lhs = twistor::nabla_section(c, &a, &s.jcal(), &u, &t);
        let rhs = twistor::jcal(&u, &twistor::nabla_section(c, &a, &s, &u, &t));
        require!(lhs == rhs, k + 1, w());
        let dist = SectionJet { a: s.a.clone(), b: QJet::constant([zero_rat(), zero_rat(), zero_rat()], d) };
        require!(twistor::nabla_distinguished(c, &a, &s.a, &u, &t) == twistor::nabla_section(c, &a, &dist, &u, &t), k + 1, w());
        let sum = QJet { value: twistor::add3(&s.a.value, &s.b.value), grad: s.a.grad.add(&s.b.grad) };
        let additive = twistor::add3(&twistor::nabla_distinguished(c, &a, &s.a, &u, &t), &twistor::nabla_distinguished(c, &a, &s.b, &u, &t));
        require!(twistor::nabla_distinguished(c, &a, &sum, &u, &t) == additive, k + 1, w());
    }
    Ok(Outcome::pass(env.samples))
}

fn twistor_leibniz(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    for k in 0..env.samples {
        let alpha = sample::rand_one_form(rng, c, env.degree)?;
        let a = sample::rand_q_field(rng, c, env.degree.min(1))?;
        let f = sample::rand_poly(rng, d, env.degree.max(1), 2);
        let fa = PolyField::new(FieldShape::QCoeff, a.comps().iter().map(|x| x.clone() * f.clone()).collect(), c.degree_bound())?;
        let p = sample::rand_vec(rng, d);
        let u = sample::rand_sphere_point(rng);
        let t = rand_tangent(rng, d, &u);
        let al = alpha.eval(&p);
        let ja = QJet::of_field(&a, d)?.eval(&p);
        let jfa = QJet::of_field(&fa, d)?.eval(&p);
        let df = (0..d).fold(zero_rat(), |acc, i| acc + f.partial(i).eval(&p) * t.x[i].clone());
        let lhs = twistor::nabla_distinguished(c, &al, &jfa, &u, &t);
        let rhs = twistor::add3(
            &twistor::scale3(&twistor::pi_project(&u, &ja.value), &df),
            &twistor::scale3(&twistor::nabla_distinguished(c, &al, &ja, &u, &t), &f.eval(&p)),
        );
        require!(lhs == rhs, k + 1, json!({ "alpha": jf(&alpha), "A": jf(&a), "f": f.to_string(), "p": jv(&p), "u": jv(&u), "U": jt(&t) }));
    }
    Ok(Outcome::pass(env.samples))
}

fn twistor_jcal(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    for k in 0..env.samples {
        let u = sample::rand_sphere_point(rng);
        let (a1, a2) = (sample::rand_vec(rng, d), sample::rand_vec(rng, d));
        let t = rand_tangent(rng, d, &u);
        let w = || json!({ "u": jv(&u), "alpha1": jv(&a1), "alpha2": jv(&a2), "U": jt(&t) });
        let jt1 = twistor::jcal_tangent(c, &a1, &u, &t);
        require!(jt1 == twistor::jcal_tangent(c, &a2, &u, &t), k + 1, w());
        let jj = twistor::jcal_tangent(c, &a1, &u, &jt1);
        let neg = TwistorTangent { x: t.x.iter().map(|x| -x.clone()).collect(), w: twistor::scale3(&t.w, &Rat::from_i64(-1)) };
        require!(jj == neg, k + 1, w());
    }
    Ok(Outcome::pass(env.samples))
}

fn twistor_curvature_components(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let e1 = [Rat::from_i64(1), zero_rat(), zero_rat()];
    let e2 = [zero_rat(), Rat::from_i64(1), zero_rat()];
    let e3 = [zero_rat(), zero_rat(), Rat::from_i64(1)];
    for k in 0..env.samples {
        let alpha = sample::rand_one_form(rng, c, env.degree)?;
        let p = sample::rand_vec(rng, d);
        let conn = QuatConnection::new(c, alpha.clone())?;
        let r = conn.curvature_at(&p);
        let al = alpha.eval(&p);
        let u = sample::rand_sphere_point(rng);
        let (t1, t2) = (rand_tangent(rng, d, &u), rand_tangent(rng, d, &u));
        let s = sample::rand_perp(rng, &u);
        let w = || json!({ "alpha": jf(&alpha), "p": jv(&p), "u": jv(&u), "U1": jt(&t1), "U2": jt(&t2), "s": jv(&s) });
        let a = twistor::curvature_nabla(c, &al, &r, &u, &t1, &t2, &s);
        let b = twistor::curvature_nabla(c, &al, &r, &u, &t2, &t1, &s);
        require!(twistor::add3(&a, &b) == [zero_rat(), zero_rat(), zero_rat()], k + 1, w());
        require!(twistor::dot3(&a, &u).is_zero(), k + 1, w());
        let flat = curvature_from_jet(c, &AlphaJet::constant(vec![zero_rat(); d]));
        require!(twistor::is_zero3(&twistor::curvature_hh(c, &flat, &u, &t1.x, &t2.x, &s)), k + 1, w());
        let s1 = sample::rand_perp(rng, &e1);
        require!(twistor::curvature_vv(&e1, &e2, &e3, &s1) == twistor::scale3(&twistor::jcal(&e1, &s1), &Rat::from_i64(-1)), k + 1, w());
    }
    Ok(Outcome::pass(env.samples))
}

/// Number of finite-difference configurations.
pub const FD_CONFIGS: usize = 20;
pub const FD_TOLERANCE: f64 = 1e-5;

fn twistor_fd(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let deg = env.degree.min(2);
    let mut worst = 0.0f64;
    for k in 0..FD_CONFIGS {
        let cfg = fd::FdConfig {
            alpha: sample::rand_one_form(rng, c, deg)?,
            beta: if k % 2 == 1 { Some(sample::rand_one_form(rng, c, deg.min(1))?) } else { None },
            a: sample::rand_q_field(rng, c, deg)?,
            b: sample::rand_q_field(rng, c, deg)?,
            p: (0..d).map(|_| rat(sample::small_nonzero(rng), 9)).collect(),
            u0: sample::rand_sphere_point(rng),
        };
        let rep = fd::compare(c, &cfg);
        worst = worst.max(rep.relative_error);
        let w = json!({
            "alpha": jf(&cfg.alpha),
            "beta": cfg.beta.as_ref().map(jf),
            "A": jf(&cfg.a),
            "B": jf(&cfg.b),
            "p": jv(&cfg.p),
            "u0": jv(&cfg.u0),
            "report": serde_json::to_value(&rep).unwrap_or(Value::Null),
        });
        require!(rep.relative_error.is_finite() && rep.relative_error <= FD_TOLERANCE, k + 1, w);
    }
    Ok(Outcome::pass(FD_CONFIGS).with_details(json!({ "max_relative_error_below": FD_TOLERANCE, "configs": FD_CONFIGS, "worst_exponent": worst.log10().floor() as i64 })))
}

fn twistor_self_duality(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let half = (env.samples / 2).max(1);
    let units = certified_units();
    let sphere = sample::sphere_points();
    let mut witnesses = 0usize;
    for k in 0..half {
        let a = sample::self_dual_alpha(rng, c, env.degree)?;
        let p = sample::rand_vec(rng, d);
        let conn = QuatConnection::new(c, a.clone())?;
        require!(conn.predicates().self_dual, k + 1, json!({ "alpha": jf(&a), "failed": "generated alpha not self-dual" }));
        let r = conn.curvature_at(&p);
        if let Some(wt) = twistor::self_duality_witness(c, &r, &units) {
            return Ok(Outcome::fail(k + 1, json!({ "alpha": jf(&a), "p": jv(&p), "witness": serde_json::to_value(&wt).unwrap_or(Value::Null) })));
        }
        let u = sample::rand_sphere_point(rng);
        let (x, y) = (sample::rand_vec(rng, d), sample::rand_vec(rng, d));
        let av = sample::rand_perp(rng, &u);
        let res = twistor::self_duality_residual(c, &r, &u, &x, &y, &av)?;
        require!(twistor::is_zero3(&res), k + 1, json!({ "alpha": jf(&a), "p": jv(&p), "u": jv(&u), "X": jv(&x), "Y": jv(&y), "A": jv(&av), "residual": jv(&res) }));
    }
    for k in 0..half {
        let a = sample::non_self_dual_alpha(rng, c, env.degree)?;
        let p = sample::rand_vec(rng, d);
        let conn = QuatConnection::new(c, a.clone())?;
        require!(!conn.predicates().self_dual, half + k + 1, json!({ "alpha": jf(&a), "failed": "generated alpha self-dual" }));
        match twistor::self_duality_witness(c, &conn.curvature_at(&p), &sphere) {
            Some(_) => witnesses += 1,
            None => return Ok(Outcome::fail(half + k + 1, json!({ "alpha": jf(&a), "p": jv(&p), "failed": "no witness for a non-self-dual connection" }))),
        }
    }
    Ok(Outcome::pass(2 * half).with_details(json!({ "self_dual": half, "non_self_dual": half, "witnesses_found": witnesses })))
}

fn twistor_difference(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    for k in 0..env.samples {
        let a0 = sample::rand_vec(rng, d);
        let a = sample::rand_vec(rng, d);
        let sum: Vec<Rat> = a0.iter().zip(&a).map(|(x, y)| x.clone() + y.clone()).collect();
        let u = sample::rand_sphere_point(rng);
        let t = rand_tangent(rng, d, &u);
        let jet = rand_jet(rng, d);
        let lhs = twistor::sub3(&twistor::nabla_distinguished(c, &sum, &jet, &u, &t), &twistor::nabla_distinguished(c, &a0, &jet, &u, &t));
        let rhs = twistor::nabla_difference_formula(c, &a, &u, &t.x, &twistor::pi_project(&u, &jet.value));
        require!(lhs == rhs, k + 1, json!({ "alpha0": jv(&a0), "alpha": jv(&a), "u": jv(&u), "U": jt(&t), "A": jqjet(&jet), "lhs": jv(&lhs), "rhs": jv(&rhs) }));
    }
    Ok(Outcome::pass(env.samples))
}

fn twistor_beta(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    for k in 0..env.samples {
        let u = sample::rand_sphere_point(rng);
        let al = sample::rand_vec(rng, d);
        let beta = sample::rand_vec(rng, d);
        let s = sample::rand_perp(rng, &u);
        let t = rand_tangent(rng, d, &u);
        let w = || json!({ "u": jv(&u), "alpha": jv(&al), "beta": jv(&beta), "s": jv(&s), "U": jt(&t) });
        let bt = twistor::beta_tilde(c, &beta, &u, &t.x, &s);
        let part = twistor::zero_one_part(c, &al, &u, &t, |tt| twistor::beta_twist_difference(&beta, &u, &tt.x, &s));
        require!(part == bt, k + 1, w());
        let self_part = twistor::zero_one_part(c, &al, &u, &t, |tt| twistor::beta_tilde(c, &beta, &u, &tt.x, &s));
        require!(self_part == bt, k + 1, w());
        let jtan = twistor::jcal_tangent(c, &al, &u, &t);
        let b_j = twistor::beta_tilde(c, &beta, &u, &jtan.x, &s);
        require!(b_j == twistor::scale3(&twistor::jcal(&u, &bt), &Rat::from_i64(-1)), k + 1, w());
    }
    // curvature of the twisted connection
    let m = env.heavy();
    for k in 0..m {
        let a = sample::self_dual_alpha(rng, c, env.degree)?;
        let conn = QuatConnection::new(c, a.clone())?;
        let hb = linear_primitive(&c.p_h_project(&sample::rand_skew(rng, d, 2)), c.degree_bound())?;
        let db = twistor::check_beta(c, &hb)?.map(|x| x.eval(&[]));
        let closed_beta = sample::gradient(c, &sample::rand_poly(rng, d, env.degree + 1, 2))?;
        let db0 = twistor::check_beta(c, &closed_beta)?;
        let p = sample::rand_vec(rng, d);
        let al = a.eval(&p);
        let r = conn.curvature_at(&p);
        let u = sample::rand_sphere_point(rng);
        let (t1, t2) = (rand_tangent(rng, d, &u), rand_tangent(rng, d, &u));
        let s = sample::rand_perp(rng, &u);
        let w = || json!({ "alpha": jf(&a), "beta": jf(&hb), "p": jv(&p), "u": jv(&u), "U1": jt(&t1), "U2": jt(&t2), "s": jv(&s) });
        let j1 = twistor::jcal_tangent(c, &al, &u, &t1);
        let j2 = twistor::jcal_tangent(c, &al, &u, &t2);
        let lhs = twistor::twisted_curvature(c, &al, &r, &db, &u, &j1, &j2, &s);
        let rhs = twistor::twisted_curvature(c, &al, &r, &db, &u, &t1, &t2, &s);
        require!(lhs == rhs, m + k + 1, w());
        require!(db0.is_zero(), m + k + 1, w());
        let plain = twistor::curvature_nabla(c, &al, &r, &u, &t1, &t2, &s);
        require!(twistor::twisted_curvature(c, &al, &r, &Mat::zeros(d, d), &u, &t1, &t2, &s) == plain, m + k + 1, w());
        let bad = sample::non_self_dual_alpha(rng, c, 1)?;
        require!(twistor::check_beta(c, &bad) == Err(Error::NotQHermitian), m + k + 1, json!({ "beta": jf(&bad), "failed": "non-hermitian d beta accepted" }));
    }
    Ok(Outcome::pass(env.samples + m))
}

fn twistor_gauge(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let nv = d + 3;
    for k in 0..env.samples {
        let u = sample::rand_sphere_point(rng);
        let pt = TwistorPoint::new(sample::rand_vec(rng, d), u.clone())?;
        let al = sample::rand_vec(rng, d);
        let t = rand_tangent(rng, d, &u);
        let w = || json!({ "p": jv(&pt.p), "u": jv(&u), "alpha": jv(&al), "U": jt(&t) });
        let one = Poly::from_i64(1);
        require!(twistor::gauge_transform(c, &al, &one, &Poly::zero(), &pt, &t)?.is_zero(), k + 1, w());
        require!(twistor::gauge_transform(c, &al, &one, &Poly::constant(sample::rand_rat(rng)), &pt, &t)?.is_zero(), k + 1, w());
        let coeffs = sample::rand_vec(rng, d);
        let theta = (0..d).fold(Poly::zero(), |acc, i| acc + Poly::var(i).scale(&coeffs[i]));
        require!(twistor::gauge_transform(c, &al, &one, &theta, &pt, &t)? == -dot(&coeffs, &t.x), k + 1, w());
        let f1 = sample::rand_poly(rng, nv, 1, 3);
        let f2 = sample::rand_poly(rng, nv, 1, 3);
        let rho1 = Poly::from_i64(1) + f1.clone() * f1;
        let rho2 = Poly::from_i64(2) + f2.clone() * f2;
        let th1 = sample::rand_poly(rng, nv, 2, 3);
        let th2 = sample::rand_poly(rng, nv, 2, 3);
        let lhs = twistor::gauge_transform(c, &al, &(rho1.clone() * rho2.clone()), &(th1.clone() + th2.clone()), &pt, &t)?;
        let rhs = twistor::gauge_transform(c, &al, &rho1, &th1, &pt, &t)? + twistor::gauge_transform(c, &al, &rho2, &th2, &pt, &t)?;
        require!(lhs == rhs, k + 1, w());
        require!(twistor::gauge_transform(c, &al, &(-rho1), &th1, &pt, &t) == Err(Error::NonPositive), k + 1, w());
    }
    Ok(Outcome::pass(env.samples))
}

fn twistor_holomorphicity(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let br = bridge(c);
    let units = sample::sphere_points();
    for k in 0..env.samples {
        let u = units.choose(rng).expect("nonempty").clone();
        let al = sample::rand_vec(rng, d);
        let jet = rand_jet(rng, d);
        let w = || json!({ "u": jv(&u), "alpha": jv(&al), "A": jqjet(&jet) });
        let form = twistor::holomorphicity_form(c, &al, &jet, &u);
        let da = covariant_q(c, &al, &jet);
        require!(br.apply(&form) == t_j(&unit_j(&u)?, &br.apply(&da))?, k + 1, w());
        let vert = TwistorTangent::vertical(d, sample::rand_perp(rng, &u));
        require!(twistor::is_zero3(&twistor::ho_residual(c, &al, &jet, &u, &vert)), k + 1, w());
        let x = sample::rand_vec(rng, d);
        let h = twistor::horizontal_lift(c, &al, &u, &x);
        require!(twistor::ho_residual(c, &al, &jet, &u, &h) == twistor::holomorphicity_residual(c, &al, &jet, &u, &x), k + 1, w());
        let konst = QJet::constant(jet.value.clone(), d);
        let zero = vec![zero_rat(); d];
        require!(twistor::holomorphicity_form(c, &zero, &konst, &u).is_zero(), k + 1, w());
    }
    Ok(Outcome::pass(env.samples))
}

fn twistor_conjugation(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let zero = PolyField::zero(FieldShape::QCoeff, c.degree_bound());
    for k in 0..env.samples {
        let a = sample::rand_q_field(rng, c, env.degree)?;
        let b = sample::rand_q_field(rng, c, env.degree)?;
        let s = ThetaSection::new(a.clone(), b.clone())?;
        let p = sample::rand_vec(rng, d);
        let u = sample::rand_sphere_point(rng);
        let w = || json!({ "A": jf(&a), "B": jf(&b), "p": jv(&p), "u": jv(&u) });
        require!(s.conjugate().conjugate() == s, k + 1, w());
        require!(s.conjugate().value_at(&p, &u) == s.antipodal_value(&p, &u), k + 1, w());
        let dist = ThetaSection::new(a.clone(), zero.clone())?;
        require!(dist.conjugate().value_at(&p, &u) == twistor::scale3(&dist.value_at(&p, &u), &Rat::from_i64(-1)), k + 1, w());
        let js = dist.jcal();
        require!(js.conjugate() == js && js.is_real(), k + 1, w());
        let real = ThetaSection::new(zero.clone(), b.clone())?;
        require!(real.conjugate() == real, k + 1, w());
        let (x, y) = (sample::rand_perp(rng, &u), sample::rand_perp(rng, &u));
        let h = twistor::hermitian_metric(&u, &x, &y);
        require!(h == twistor::hermitian_metric(&u, &y, &x).conj(), k + 1, w());
        require!(twistor::hermitian_metric(&u, &twistor::jcal(&u, &x), &twistor::jcal(&u, &y)) == h, k + 1, w());
    }
    Ok(Outcome::pass(env.samples))
}

// ---------------------------------------------------------------- penrose

fn penrose_routes(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    for k in 0..env.samples {
        let a = sample::rand_one_form(rng, c, env.degree)?;
        let conn = QuatConnection::new(c, a.clone())?;
        let sec = sample::rand_q_field(rng, c, env.degree)?;
        let p = sample::rand_vec(rng, d);
        let w = || json!({ "alpha": jf(&a), "A": jf(&sec), "p": jv(&p) });
        let v = penrose_operator(&env.pc, &conn, &sec, &p)?;
        require!(v == penrose_operator_formula(&env.pc, &conn, &sec, &p)?, k + 1, w());
        require!(crate::ehrep::apply_flat(&env.pc.proj.pi_h, &v.value).is_zero(), k + 1, w());
    }
    Ok(Outcome::pass(env.samples))
}

fn penrose_second(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let m = env.heavy();
    for k in 0..m {
        let a = sample::rand_one_form(rng, c, 1)?;
        let conn = QuatConnection::new(c, a.clone())?;
        let sec = sample::rand_q_field(rng, c, env.degree.min(1))?;
        let p = sample::rand_vec(rng, d);
        let d2 = second_covariant(&conn, &sec)?.eval(&p);
        let r = conn.curvature_at(&p);
        let am = c.q_matrix(&std::array::from_fn(|b| sec.comp(b).eval(&p)));
        for i in 0..d {
            for j in i + 1..d {
                let lhs: [Rat; 3] = std::array::from_fn(|b| d2.get(i, j)[b].clone() - d2.get(j, i)[b].clone());
                require!(lhs == c.q_coords(&r.get(i, j).commutator(&am)), k + 1, json!({ "alpha": jf(&a), "A": jf(&sec), "p": jv(&p), "ij": [i, j] }));
            }
        }
        let sym = d2.symmetric_part();
        require!(crate::penrose::trace_b_tilde(c, &sym).iter().all(Ring::is_zero), k + 1, json!({ "alpha": jf(&a), "A": jf(&sec), "p": jv(&p), "failed": "symmetric part traces to zero" }));
    }
    Ok(Outcome::pass(m))
}

fn penrose_weitzenbock(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let m = env.heavy();
    // constant alpha with A = J_1
    let konst = sample::rand_vec(rng, d);
    let conn = QuatConnection::new(c, crate::flatmodel::constant_one_form(&konst, c.degree_bound()))?;
    let j1 = PolyField::new(FieldShape::QCoeff, vec![Poly::from_i64(1), Poly::zero(), Poly::zero()], c.degree_bound())?;
    let rep = weitzenbock_checks(&env.pc, &conn, &j1, &[vec![zero_rat(); d]])?;
    require!(rep.all(), 1, json!({ "alpha": jv(&konst), "A": "J1", "report": serde_json::to_value(&rep).unwrap_or(Value::Null) }));
    for k in 0..m {
        let a = sample::co_closed_alpha(rng, c)?;
        let conn = QuatConnection::new(c, a.clone())?;
        let sec = sample::rand_q_field(rng, c, env.degree.min(2))?;
        let pts: Vec<Vec<Rat>> = (0..2).map(|_| sample::rand_vec(rng, d)).collect();
        let rep = weitzenbock_checks(&env.pc, &conn, &sec, &pts)?;
        require!(rep.all(), k + 2, json!({ "alpha": jf(&a), "A": jf(&sec), "points": pts.iter().map(|p| jv(p)).collect::<Vec<_>>(), "report": serde_json::to_value(&rep).unwrap_or(Value::Null) }));
    }
    Ok(Outcome::pass(m + 1))
}

fn penrose_transform(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let units = certified_units();
    let flat = QuatConnection::flat(c);
    let zero = vec![zero_rat(); d];
    let (mut kernel, mut holo, mut zero_p) = (0usize, 0usize, 0usize);
    for k in 0..env.samples {
        let p = sample::rand_vec(rng, d);
        let phi = Mat::from_fn(d, 3, |_, _| sample::rand_rat(rng));
        let a0 = sample::rand_q(rng);
        let (conn, sec) = match k % 5 {
            0 => {
                kernel += 1;
                let base = sample::rand_vec(rng, d);
                (flat.clone(), kernel_member(&env.pc, &zero, &a0, &phi, &base, c.degree_bound())?)
            }
            1 => {
                kernel += 1;
                let conn = QuatConnection::new(c, sample::self_dual_alpha(rng, c, env.degree)?)?;
                let sec = kernel_member(&env.pc, &conn.alpha().eval(&p), &a0, &phi, &p, c.degree_bound())?;
                (conn, sec)
            }
            _ => {
                let conn = QuatConnection::new(c, sample::self_dual_alpha(rng, c, env.degree)?)?;
                (conn, sample::rand_q_field(rng, c, env.degree)?)
            }
        };
        let s = penrose_transform_check(&env.pc, &conn, &sec, &p, &units)?;
        holo += usize::from(s.holomorphic);
        zero_p += usize::from(s.penrose_zero);
        require!(s.agrees(), k + 1, json!({ "alpha": jf(conn.alpha()), "A": jf(&sec), "p": jv(&p), "holomorphic": s.holomorphic, "penrose_zero": s.penrose_zero }));
        if k % 5 < 2 {
            require!(s.penrose_zero, k + 1, json!({ "alpha": jf(conn.alpha()), "A": jf(&sec), "p": jv(&p), "failed": "constructed kernel member not in the kernel" }));
        }
    }
    Ok(Outcome::pass(env.samples).with_details(json!({ "instances": env.samples, "kernel_members": kernel, "holomorphic": holo, "penrose_zero": zero_p })))
}

// -------------------------------------------------------------- hermtwist

fn herm_dg(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    for k in 0..env.samples {
        let v: Vec<Vec<Rat>> = (0..4).map(|_| sample::rand_vec(rng, d)).collect();
        require!(dg_expansion(c, &v[0], &v[1], &v[2], &v[3]) == dg_first_principles(c, &v[0], &v[1], &v[2], &v[3]), k + 1, json!({ "alpha": jv(&v[0]), "X": jv(&v[1]), "Y": jv(&v[2]), "V": jv(&v[3]) }));
    }
    Ok(Outcome::pass(env.samples))
}

fn herm_d_omega(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let zero = vec![zero_rat(); d];
    for k in 0..env.samples {
        let u = sample::rand_sphere_point(rng);
        let v: Vec<Vec<Rat>> = (0..4).map(|_| sample::rand_vec(rng, d)).collect();
        let w = || json!({ "u": jv(&u), "alpha": jv(&v[0]), "X": jv(&v[1]), "Y": jv(&v[2]), "V": jv(&v[3]) });
        require!(d_omega_hhh(c, &zero, &u, &v[1], &v[2], &v[3]).is_zero(), k + 1, w());
        let f = d_omega_hhh(c, &v[0], &u, &v[1], &v[2], &v[3]);
        require!(f == -d_omega_hhh(c, &v[0], &u, &v[2], &v[1], &v[3]), k + 1, w());
        require!(f == d_omega_hhh(c, &v[0], &u, &v[2], &v[3], &v[1]), k + 1, w());
        let (a, b, e) = (sample::rand_perp(rng, &u), sample::rand_perp(rng, &u), sample::rand_perp(rng, &u));
        require!(d_omega_vvv::<Rat>(&a, &b, &e).is_zero(), k + 1, w());
    }
    Ok(Outcome::pass(env.samples))
}

fn herm_torsion(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let m = env.heavy();
    for k in 0..m {
        let pot = sample::rand_poly(rng, d, env.degree + 1, 3);
        let a = sample::gradient(c, &pot)?;
        let conn = QuatConnection::new(c, a.clone())?;
        let p = sample::rand_vec(rng, d);
        let u = sample::rand_sphere_point(rng);
        let rep = torsion_checks(&conn, &p, &u)?;
        require!(rep.horizontal && rep.vertical, k + 1, json!({ "alpha": jf(&a), "p": jv(&p), "u": jv(&u), "horizontal": rep.horizontal, "vertical": rep.vertical }));
    }
    Ok(Outcome::pass(m))
}

fn herm_sums(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    for k in 0..env.samples {
        let eta = sample::rand_matrix(rng, d);
        let u = sample::rand_sphere_point(rng);
        let i = rng.gen_range(0..3);
        let (l, r) = sums_sides(c, &eta, &u, i);
        require!(l == r, k + 1, json!({ "eta": jm(&eta), "u": jv(&u), "i": i, "lhs": jr(&l), "rhs": jr(&r) }));
        // J = J_1 and i in {2, 3}: symmetric eta gives zero
        let e1 = [Rat::from_i64(1), zero_rat(), zero_rat()];
        let sym = eta.sym_part();
        for i in 1..3 {
            let (l, r) = sums_sides(c, &sym, &e1, i);
            require!(l == r && r.is_zero(), k + 1, json!({ "eta": jm(&sym), "i": i, "lhs": jr(&l), "rhs": jr(&r) }));
        }
    }
    Ok(Outcome::pass(env.samples))
}

fn herm_chern(env: &Env, rng: &mut SampleRng) -> Result<Outcome> {
    let c = &env.ctx;
    let d = c.dim();
    let m = (env.samples / 10).max(1);
    let mut negative = 0usize;
    for k in 0..m {
        let a = if k % 2 == 0 {
            crate::flatmodel::constant_one_form(&sample::rand_vec(rng, d).iter().map(|x| x.clone() * rat(1, 3)).collect::<Vec<_>>(), c.degree_bound())
        } else {
            sample::harmonic_alpha(rng, c)?
        };
        let conn = QuatConnection::new(c, a.clone())?;
        let p = sample::rand_vec(rng, d);
        let u = sample::rand_sphere_point(rng);
        let (assembled, closed) = chern_pairing_check(&conn, &p, &u)?;
        let av = a.eval(&p);
        let w = || json!({ "alpha": jf(&a), "p": jv(&p), "u": jv(&u), "assembled": assembled.to_string(), "closed_form": closed.to_string() });
        require!(assembled == closed, k + 1, w());
        require!(assembled.is_negative() == (dot(&av, &av) > rat(1, 4)), k + 1, w());
        negative += usize::from(assembled.is_negative());
    }
    let flat = QuatConnection::flat(c);
    let e1 = [Rat::from_i64(1), zero_rat(), zero_rat()];
    let (v0, _) = chern_pairing_check(&flat, &vec![zero_rat(); d], &e1)?;
    require!(v0.coefficient == rat(1, 2), m + 1, json!({ "alpha": "0", "value": v0.to_string() }));
    Ok(Outcome::pass(m + 1).with_details(json!({ "negative": negative })))
}

/// Every check, in canonical order.
pub fn registry() -> Vec<CheckDef> {
    use Suite::*;
    let mut v = vec![
        CheckDef { id: "algebra.exterior_calculus", suite: Algebra, anchor: "d d = 0; closed 1-forms have polynomial primitives", run: algebra_exterior },
        CheckDef { id: "algebra.p_h_projector", suite: Algebra, anchor: "P_h projects 2-forms onto Q-hermitian forms", run: algebra_p_h },
        CheckDef { id: "algebra.q_product", suite: Algebra, anchor: "J_u J_v = -<u,v> Id + J_{u x v}", run: algebra_q_product },
        CheckDef { id: "algebra.quaternion_relations", suite: Algebra, anchor: "J_1 J_2 = J_3, J_a^2 = -Id", run: algebra_quaternion },
        CheckDef { id: "connection.eta_roundtrip", suite: Connection, anchor: "eta recovered from Ricci(R^eta)", run: connection_roundtrip },
        CheckDef { id: "connection.bianchi", suite: Connection, anchor: "R_{X,Y}Z + R_{Y,Z}X + R_{Z,X}Y = 0", run: connection_bianchi },
        CheckDef { id: "connection.decomposition", suite: Connection, anchor: "R^D = W + R^eta, Ricci(W) = 0, [W, J_a] = 0, [R, J_a] = Omega_c J_b - Omega_b J_c", run: connection_decomposition },
        CheckDef { id: "connection.predicates", suite: Connection, anchor: "self-dual iff Ricci(R^D) skew part Q-hermitian", run: connection_predicates },
        CheckDef { id: "connection.ricci_change", suite: Connection, anchor: "Ricci(R^{D + S^alpha}) change formulas", run: connection_ricci_change },
        CheckDef { id: "connection.trace_s_alpha", suite: Connection, anchor: "trace(S^alpha_X) = 4(n+1) alpha(X)", run: connection_trace },
        CheckDef { id: "ehrep.bridge", suite: Ehrep, anchor: "T*M (x) Q complexified = E* (x) H (x) S^2 H", run: ehrep_bridge },
        CheckDef { id: "ehrep.s3_h_split", suite: Ehrep, anchor: "E* (x) H (x) S^2 H = E* (x) S^3 H + E* (x) H", run: ehrep_split },
        CheckDef { id: "ehrep.t_kernel", suite: Ehrep, anchor: "intersection of ker T_j = E* (x) H", run: ehrep_kernel },
        CheckDef { id: "ehrep.weight_routes", suite: Ehrep, anchor: "B(alpha (x) A)(X) = [S^alpha_X, A] = sum alpha([J_j, A]X) J_j", run: ehrep_routes },
        CheckDef { id: "ehrep.weight_spectrum", suite: Ehrep, anchor: "B = -2 on E* (x) S^3 H, B = 4 on E* (x) H", run: ehrep_spectrum },
        CheckDef { id: "twistor.beta_twist", suite: Twistor, anchor: "(beta(X) J s - beta(JX) s) / 2", run: twistor_beta },
        CheckDef { id: "twistor.self_duality", suite: Twistor, anchor: "Pi_J([R^D_{JX ^ JY - X ^ Y}, A]) = 0 iff D self-dual", run: twistor_self_duality },
        CheckDef { id: "twistor.conjugation", suite: Twistor, anchor: "conj(s)_J = sigma_*(s_{sigma(J)})", run: twistor_conjugation },
        CheckDef { id: "twistor.curvature_components", suite: Twistor, anchor: "R(a, b) A = -Omega_p(a, b) J A, R(X~, Y~) A = Pi_J([R^D_{X,Y}, A])", run: twistor_curvature_components },
        CheckDef { id: "twistor.curvature_fd", suite: Twistor, anchor: "R^nabla_{X,Y} s = nabla_X nabla_Y s - nabla_Y nabla_X s - nabla_{[X,Y]} s", run: twistor_fd },
        CheckDef { id: "twistor.difference_formula", suite: Twistor, anchor: "nabla' = nabla + 2 J(pi* alpha) (x) J", run: twistor_difference },
        CheckDef { id: "twistor.gauge", suite: Twistor, anchor: "(d^J log rho - d theta) (x) J", run: twistor_gauge },
        CheckDef { id: "twistor.holomorphicity", suite: Twistor, anchor: "D_{JX}A - <D_{JX}A, J> J - J D_X A - <D_X A, J> Id = 0", run: twistor_holomorphicity },
        CheckDef { id: "twistor.jcal", suite: Twistor, anchor: "J^2 = -1 on TZ, independent of the quaternionic connection", run: twistor_jcal },
        CheckDef { id: "twistor.leibniz", suite: Twistor, anchor: "nabla_U (f A)~ = df(U) A~ + f nabla_U A~", run: twistor_leibniz },
        CheckDef { id: "twistor.nabla", suite: Twistor, anchor: "Pi_J(D_X A) - <J, A> v(U); nabla J = 0", run: twistor_nabla },
        CheckDef { id: "twistor.projection", suite: Twistor, anchor: "Pi_J(A) = (A + JAJ) / 2 = A - <A, J> J", run: twistor_projection },
        CheckDef { id: "twistor.vertical_part", suite: Twistor, anchor: "v(U) = W + Gamma(X) u", run: twistor_vertical },
        CheckDef { id: "penrose.routes", suite: Penrose, anchor: "P^D A = pi_s3(DA) = (4 DA - B(DA)) / 6", run: penrose_routes },
        CheckDef { id: "penrose.second_derivative", suite: Penrose, anchor: "(D^2 A)_{X,Y} - (D^2 A)_{Y,X} = [R^D_{X,Y}, A]", run: penrose_second },
        CheckDef { id: "penrose.transform", suite: Penrose, anchor: "A~ holomorphic iff P^D A = 0", run: penrose_transform },
        CheckDef { id: "penrose.weitzenbock", suite: Penrose, anchor: "B~(D^2 A) = 4 D^2 A - 6 D(P^D A); <trace_g(B~)(D^2 A), A> = -8|A|^2 trace_g(eta)", run: penrose_weitzenbock },
        CheckDef { id: "hermtwist.chern_pairing", suite: Hermtwist, anchor: "<gamma^D, Omega> = 1/(2 pi) + (Scal - 8(n+2)|alpha|^2) / (4(n+2) pi)", run: herm_chern },
        CheckDef { id: "hermtwist.d_omega", suite: Hermtwist, anchor: "dOmega(X~,Y~,V~) = (D_X g)(V, JY) + (D_Y g)(X, JV) + (D_V g)(Y, JX)", run: herm_d_omega },
        CheckDef { id: "hermtwist.dg_expansion", suite: Hermtwist, anchor: "(D_X g)(Y, V) = -2 alpha(X) g(Y, V) - alpha(Y) g(X, V) - ...", run: herm_dg },
        CheckDef { id: "hermtwist.sums", suite: Hermtwist, anchor: "sum_k tr(J_i R^eta_{X_k, J X_k}) = 8n sum_k eta(J X_k, J_i X_k)", run: herm_sums },
        CheckDef { id: "hermtwist.torsion", suite: Hermtwist, anchor: "t(X~) = 8 alpha(X), t(a) = 0", run: herm_torsion },
    ];
    v.sort_by_key(|c| c.id);
    v
}

fn run_one(def: &CheckDef, env: &Env, seed: u64) -> CheckReport {
    let start = Instant::now();
    let mut rng = sample::stream(seed, def.id);
    let result = catch_unwind(AssertUnwindSafe(|| (def.run)(env, &mut rng)));
    let outcome = match result {
        Ok(Ok(o)) => o,
        Ok(Err(e)) => Outcome::fail(0, json!({ "error": e.to_string() })),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Outcome::fail(0, json!({ "panic": msg }))
        }
    };
    let status = if outcome.witness.is_some() { Status::Fail } else { Status::Pass };
    CheckReport {
        id: def.id.to_string(),
        suite: def.suite,
        anchor: def.anchor.to_string(),
        status,
        samples: outcome.samples,
        details: outcome.details,
        witness: outcome.witness,
        elapsed_ms: Some(start.elapsed().as_millis() as u64),
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub reports: Vec<CheckReport>,
    pub elapsed_ms: u64,
}

impl RunResult {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(|r| r.status != Status::Fail)
    }

    /// `(pass, fail, skipped)` per suite.
    pub fn summary(&self) -> BTreeMap<Suite, (usize, usize, usize)> {
        let mut m = BTreeMap::new();
        for r in &self.reports {
            let e = m.entry(r.suite).or_insert((0, 0, 0));
            match r.status {
                Status::Pass => e.0 += 1,
                Status::Fail => e.1 += 1,
                Status::Skipped => e.2 += 1,
            }
        }
        m
    }
}

/// Runs the selected suites; reports come back sorted by check id.
pub fn run(cfg: &SuiteConfig) -> Result<RunResult> {
    cfg.validate().map_err(Error::Shape)?;
    let start = Instant::now();
    let env = Env::new(cfg)?;
    let defs: Vec<CheckDef> = registry().into_iter().filter(|d| cfg.suites.contains(&d.suite)).collect();
    let mut reports: Vec<CheckReport> = defs.par_iter().map(|d| run_one(d, &env, cfg.seed)).collect();
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(RunResult { reports, elapsed_ms: start.elapsed().as_millis() as u64 })
}

/// Runs a single check by id, ignoring the suite selection of `cfg`.
pub fn run_check(cfg: &SuiteConfig, id: &str) -> Result<Option<CheckReport>> {
    cfg.validate().map_err(Error::Shape)?;
    let env = Env::new(cfg)?;
    Ok(registry().iter().find(|d| d.id == id).map(|d| run_one(d, &env, cfg.seed)))
}

/// Versioned JSON document; timings are included only on request so that
/// identical configurations give byte-identical output.
pub fn render_json(cfg: &SuiteConfig, res: &RunResult, timings: bool) -> String {
    let reports: Vec<CheckReport> = res
        .reports
        .iter()
        .cloned()
        .map(|mut r| {
            if !timings {
                r.elapsed_ms = None;
            }
            r
        })
        .collect();
    let (pass, fail, skipped) = res.summary().values().fold((0, 0, 0), |a, s| (a.0 + s.0, a.1 + s.1, a.2 + s.2));
    let mut doc = json!({
        "schema": 1,
        "config": cfg,
        "passed": pass,
        "failed": fail,
        "skipped": skipped,
        "reports": reports,
    });
    if timings {
        doc["elapsed_ms"] = json!(res.elapsed_ms);
    }
    serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n"
}

/// Human-readable report: one line per check, then per-suite counts.
pub fn render_text(res: &RunResult, timings: bool) -> String {
    let mut out = String::new();
    for r in &res.reports {
        let status = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        out.push_str(&format!("{status} {:<32} samples={}", r.id, r.samples));
        if timings {
            if let Some(ms) = r.elapsed_ms {
                out.push_str(&format!(" {ms}ms"));
            }
        }
        out.push('\n');
        if let Some(w) = &r.witness {
            out.push_str(&format!("     witness: {w}\n"));
        }
    }
    for (suite, (p, f, s)) in res.summary() {
        out.push_str(&format!("suite {suite}: {p} passed, {f} failed, {s} skipped\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_sorted_and_unique() {
        let r = registry();
        for w in r.windows(2) {
            assert!(w[0].id < w[1].id);
        }
        for s in Suite::ALL {
            assert!(r.iter().any(|d| d.suite == s));
            assert!(r.iter().filter(|d| d.suite == s).all(|d| d.id.starts_with(s.id())));
        }
    }

    #[test]
    fn suite_parsing() {
        assert_eq!(Suite::parse("all").unwrap().len(), 6);
        assert_eq!(Suite::parse("penrose").unwrap(), vec![Suite::Penrose]);
        assert!(Suite::parse("bogus").is_none());
    }

    #[test]
    fn config_validation() {
        let mut c = SuiteConfig::default();
        assert!(c.validate().is_ok());
        c.n = 1;
        assert!(c.validate().is_err());
        c.n = 2;
        c.samples = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn small_run_is_deterministic() {
        let cfg = SuiteConfig { samples: 4, suites: vec![Suite::Algebra, Suite::Hermtwist], ..SuiteConfig::default() };
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert!(a.all_passed(), "{}", render_text(&a, false));
        assert_eq!(render_json(&cfg, &a, false), render_json(&cfg, &b, false));
    }

    #[test]
    fn failures_carry_witnesses() {
        let env = Env::new(&SuiteConfig::default()).unwrap();
        let def = CheckDef { id: "x.fail", suite: Suite::Algebra, anchor: "", run: |_, _| Ok(Outcome::fail(1, json!({ "why": "forced" }))) };
        let r = run_one(&def, &env, 1);
        assert_eq!(r.status, Status::Fail);
        assert!(r.witness.is_some());
        let def = CheckDef { id: "x.err", suite: Suite::Algebra, anchor: "", run: |_, _| Err(Error::DegreeOverflow { op: "t", needed: 9, bound: 3 }) };
        let r = run_one(&def, &env, 1);
        assert_eq!(r.status, Status::Fail);
        assert!(r.witness.unwrap()["error"].as_str().unwrap().contains("9"));
    }
}
