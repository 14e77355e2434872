//! Floating-point finite-difference oracle for the curvature of the
//! connection on `Theta`.
//!
//! Near `(p, u0)` the twistor space is charted by
//! `(x, t1, t2) -> (x, (u0 + t1 b + t2 c) / |u0 + t1 b + t2 c|)` with
//! `b, c` spanning `u0^perp`. A section `s = A~ + J B~` is differentiated
//! numerically in this chart, the connection is applied along coordinate
//! fields, and `nabla_i nabla_j s - nabla_j nabla_i s` is compared with the
//! closed-form curvature at the chart origin.

use serde::Serialize;

use super::{add3, cross, perp_basis, pi_project, scale3, sub3, twisted_curvature, SectionJet, TwistorTangent, V3};
use crate::connection::{curvature_from_jet, gamma_matrix, AlphaJet, QJet};
use crate::flatmodel::{ModelContext, PolyField};
use crate::matrix::Mat;
use crate::scalar::{rat_to_f64, Rat};

/// Base step; each derivative is Richardson-extrapolated from `h` and `h/2`.
pub const STEP: f64 = 1e-4;

/// Data of one comparison: connection form, optional twist, section, point.
#[derive(Clone, Debug)]
pub struct FdConfig {
    pub alpha: PolyField,
    pub beta: Option<PolyField>,
    pub a: PolyField,
    pub b: PolyField,
    pub p: Vec<Rat>,
    pub u0: V3<Rat>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdReport {
    pub max_abs_diff: f64,
    pub max_abs_formula: f64,
    pub relative_error: f64,
    /// Chart coordinate pair with the largest discrepancy.
    pub worst_pair: (usize, usize),
}

struct Chart<'a> {
    ctx: &'a ModelContext,
    cfg: &'a FdConfig,
    u0: [f64; 3],
    b: [f64; 3],
    c: [f64; 3],
    d: usize,
}

impl Chart<'_> {
    fn split(&self, z: &[f64]) -> (Vec<f64>, [f64; 3]) {
        let x = z[..self.d].to_vec();
        let v: [f64; 3] = std::array::from_fn(|i| self.u0[i] + z[self.d] * self.b[i] + z[self.d + 1] * self.c[i]);
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        (x, v.map(|t| t / norm))
    }

    fn q_at(f: &PolyField, x: &[f64]) -> [f64; 3] {
        std::array::from_fn(|i| f.comp(i).eval_f64(x))
    }

    fn section(&self, z: &[f64]) -> [f64; 3] {
        let (x, u) = self.split(z);
        add3(&pi_project(&u, &Self::q_at(&self.cfg.a, &x)), &cross(&u, &Self::q_at(&self.cfg.b, &x)))
    }

    fn direction(&self, k: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.d];
        if k < self.d {
            e[k] = 1.0;
        }
        e
    }

    /// `nabla_{d_k} s` for a section given as a function on the chart.
    fn nabla(&self, k: usize, z: &[f64], s: &dyn Fn(&[f64]) -> [f64; 3]) -> [f64; 3] {
        let (x, u) = self.split(z);
        let ds = central(z, k, s);
        let xk = self.direction(k);
        let alpha = self.cfg.alpha.eval_f64(&x);
        let sv = s(z);
        let g = gamma_matrix(self.ctx, &alpha, &xk).mul_vec(&sv);
        let mut out = pi_project(&u, &add3(&ds, &[g[0], g[1], g[2]]));
        if let Some(beta) = &self.cfg.beta {
            let bx: f64 = beta.eval_f64(&x).iter().zip(&xk).map(|(a, b)| a * b).sum();
            out = add3(&out, &scale3(&cross(&u, &sv), &bx));
        }
        out
    }
}

fn central(z: &[f64], k: usize, f: &dyn Fn(&[f64]) -> [f64; 3]) -> [f64; 3] {
    let diff = |h: f64| {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[k] += h;
        zm[k] -= h;
        scale3(&sub3(&f(&zp), &f(&zm)), &(0.5 / h))
    };
    let coarse = diff(STEP);
    let fine = diff(STEP / 2.0);
    scale3(&sub3(&scale3(&fine, &4.0), &coarse), &(1.0 / 3.0))
}

fn to_f64(v: &[Rat]) -> Vec<f64> {
    v.iter().map(rat_to_f64).collect()
}

/// Runs the comparison over every pair of chart coordinates.
pub fn compare(ctx: &ModelContext, cfg: &FdConfig) -> FdReport {
    let d = ctx.dim();
    let [b, c] = perp_basis(&cfg.u0);
    let f3 = |v: &V3<Rat>| -> [f64; 3] { std::array::from_fn(|i| rat_to_f64(&v[i])) };
    let chart = Chart { ctx, cfg, u0: f3(&cfg.u0), b: f3(&b), c: f3(&c), d };
    let p = to_f64(&cfg.p);
    let mut z0 = p.clone();
    z0.extend([0.0, 0.0]);

    let u = chart.u0;
    let jet = AlphaJet::of_field(&cfg.alpha).eval_f64(&p);
    let curv = curvature_from_jet(ctx, &jet);
    let dbeta = match &cfg.beta {
        Some(beta) => AlphaJet::of_field(beta).eval_f64(&p).grad.skew_part().scale(&2.0),
        None => Mat::zeros(d, d),
    };
    let qjet = |f: &PolyField| QJet::of_field(f, d).expect("Q-section").eval_f64(&p);
    let sj = SectionJet { a: qjet(&cfg.a), b: qjet(&cfg.b) };
    let sigma = sj.value(&u);
    let tangent = |k: usize| -> TwistorTangent<f64> {
        if k < d {
            TwistorTangent { x: chart.direction(k), w: [0.0; 3] }
        } else {
            TwistorTangent::vertical(d, if k == d { chart.b } else { chart.c })
        }
    };

    let section = |z: &[f64]| chart.section(z);
    let mut max_diff = 0.0f64;
    let mut max_formula = 0.0f64;
    let mut worst = (0, 0);
    for i in 0..d + 2 {
        for j in i + 1..d + 2 {
            let nj = |z: &[f64]| chart.nabla(j, z, &section);
            let ni = |z: &[f64]| chart.nabla(i, z, &section);
            let numeric = sub3(&chart.nabla(i, &z0, &nj), &chart.nabla(j, &z0, &ni));
            let formula = twisted_curvature(ctx, &jet.value, &curv, &dbeta, &u, &tangent(i), &tangent(j), &sigma);
            let diff = sub3(&numeric, &formula).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            max_formula = formula.iter().fold(max_formula, |m, v| m.max(v.abs()));
            if diff > max_diff {
                max_diff = diff;
                worst = (i, j);
            }
        }
    }
    let relative_error = if max_formula > 0.0 { max_diff / max_formula } else { max_diff };
    FdReport { max_abs_diff: max_diff, max_abs_formula: max_formula, relative_error, worst_pair: worst }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatmodel::{build_flat_model, one_form, FieldShape};
    use crate::poly::Poly;
    use crate::scalar::{rat, Ring};

    fn qfield(c: [Poly; 3]) -> PolyField {
        PolyField::new(FieldShape::QCoeff, c.to_vec(), 3).unwrap()
    }

    #[test]
    fn flat_connection_matches() {
        let ctx = build_flat_model(2).unwrap();
        let cfg = FdConfig {
            alpha: PolyField::zero(FieldShape::Covector(8), 3),
            beta: None,
            a: qfield([Poly::var(0), Poly::from_i64(1), Poly::var(3) * Poly::var(1)]),
            b: qfield([Poly::from_i64(2), Poly::var(2), Poly::zero()]),
            p: (0..8).map(|k| rat(k - 3, 4)).collect(),
            u0: [rat(2, 7), rat(3, 7), rat(6, 7)],
        };
        let rep = compare(&ctx, &cfg);
        assert!(rep.relative_error < 1e-5, "{rep:?}");
        assert!(rep.max_abs_formula > 0.1);
    }

    #[test]
    fn curved_twisted_connection_matches() {
        let ctx = build_flat_model(2).unwrap();
        let alpha = one_form(8, &[(0, Poly::var(1) * Poly::var(2)), (5, Poly::var(0) - Poly::var(7))], 3).unwrap();
        let beta = one_form(8, &[(2, Poly::var(6)), (4, Poly::var(0) * Poly::var(0))], 3).unwrap();
        let cfg = FdConfig {
            alpha,
            beta: Some(beta),
            a: qfield([Poly::var(4), Poly::var(0) * Poly::var(6), Poly::from_i64(-1)]),
            b: qfield([Poly::var(5), Poly::zero(), Poly::var(2) * Poly::var(2)]),
            p: (0..8).map(|k| rat(3 - k, 5)).collect(),
            u0: [rat(1, 3), rat(2, 3), rat(2, 3)],
        };
        let rep = compare(&ctx, &cfg);
        assert!(rep.relative_error < 1e-5, "{rep:?}");
    }
}
