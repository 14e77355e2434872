use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::{rat_to_f64, Rat, Ring};

/// Sparse exponent vector: `(variable, exponent)` pairs sorted by variable,
/// exponents strictly positive.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(u16, u16)>);

impl Monomial {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Self(vec![(i as u16, 1)])
    }

    pub fn from_exponents(exps: &[(usize, u16)]) -> Self {
        let mut m = Self::one();
        for &(v, e) in exps {
            for _ in 0..e {
                m = m.mul(&Self::var(v));
            }
        }
        m
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| u32::from(e)).sum()
    }

    pub fn exponent(&self, var: usize) -> u16 {
        self.0.iter().find(|&&(v, _)| v as usize == var).map_or(0, |&(_, e)| e)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Vec::with_capacity(self.0.len() + o.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < o.0.len() {
            match (self.0.get(i), o.0.get(j)) {
                (Some(&(va, ea)), Some(&(vb, eb))) if va == vb => {
                    out.push((va, ea + eb));
                    i += 1;
                    j += 1;
                }
                (Some(&a), Some(&b)) if a.0 < b.0 => {
                    out.push(a);
                    i += 1;
                }
                (Some(_), Some(&b)) => {
                    out.push(b);
                    j += 1;
                }
                (Some(&a), None) => {
                    out.push(a);
                    i += 1;
                }
                (None, Some(&b)) => {
                    out.push(b);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Self(out)
    }

    /// `d/dx_var` of the monomial: coefficient factor and the new monomial.
    pub fn derivative(&self, var: usize) -> Option<(u16, Self)> {
        let pos = self.0.iter().position(|&(v, _)| v as usize == var)?;
        let e = self.0[pos].1;
        let mut m = self.0.clone();
        if e == 1 {
            m.remove(pos);
        } else {
            m[pos].1 = e - 1;
        }
        Some((e, Self(m)))
    }

    pub fn vars(&self) -> impl Iterator<Item = (usize, u16)> + '_ {
        self.0.iter().map(|&(v, e)| (v as usize, e))
    }

    pub fn eval<T: Ring>(&self, point: &[T]) -> T {
        let mut acc = T::one();
        for &(v, e) in &self.0 {
            for _ in 0..e {
                acc = acc * point[v as usize].clone();
            }
        }
        acc
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&(v, e)| if e == 1 { format!("x{}", v + 1) } else { format!("x{}^{}", v + 1, e) })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Polynomial with rational coefficients in the variables `x_1, x_2, ...`
/// (0-based internally). Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn constant(c: Rat) -> Self {
        let mut p = Self::default();
        p.add_term(Monomial::one(), c);
        p
    }

    /// The coordinate function `x_{i+1}`.
    pub fn var(i: usize) -> Self {
        Self::monomial(Monomial::var(i), Rat::from_i64(1))
    }

    pub fn monomial(m: Monomial, c: Rat) -> Self {
        let mut p = Self::default();
        p.add_term(m, c);
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().clone() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn coefficient(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::default();
        for (m, c) in &self.terms {
            if let Some((e, dm)) = m.derivative(var) {
                out.add_term(dm, c * Rat::from_i64(i64::from(e)));
            }
        }
        out
    }

    pub fn eval(&self, point: &[Rat]) -> Rat {
        self.terms
            .iter()
            .fold(Rat::zero(), |acc, (m, c)| acc + c.clone() * m.eval(point))
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| rat_to_f64(c) * m.eval(point)).sum()
    }

    /// Largest variable index appearing, plus one.
    pub fn num_vars(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|m| m.vars().map(|(v, _)| v + 1))
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(m, c)| format!("{c}*{m:?}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Add for Poly {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for (m, c) in o.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl Sub for Poly {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for (m, c) in o.terms {
            self.add_term(m, -c);
        }
        self
    }
}

impl Neg for Poly {
    type Output = Self;
    fn neg(self) -> Self {
        Self { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl Mul for Poly {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Ring for Poly {
    fn zero() -> Self {
        Self::default()
    }
    fn one() -> Self {
        Self::constant(Rat::from_i64(1))
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn from_i64(v: i64) -> Self {
        Self::constant(Rat::from_i64(v))
    }
    fn from_rat(r: &Rat) -> Self {
        Self::constant(r.clone())
    }
    fn scale(&self, r: &Rat) -> Self {
        if r.is_zero() {
            return Self::default();
        }
        Self { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * r)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn product_and_derivative() {
        let x1 = Poly::var(0);
        let x3 = Poly::var(2);
        let f = x1.clone() * x3.clone() + x1.clone() * x1.clone();
        assert_eq!(f.degree(), 2);
        assert_eq!(f.partial(0), x3 + x1.scale(&rat(2, 1)));
        let pt = vec![rat(1, 2), rat(0, 1), rat(3, 1)];
        assert_eq!(f.eval(&pt), rat(7, 4));
    }

    #[test]
    fn cancellation_drops_terms() {
        let x = Poly::var(1);
        assert!((x.clone() - x).is_zero());
    }
}
