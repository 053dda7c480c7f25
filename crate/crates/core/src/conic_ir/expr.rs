use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Sparse affine expression `Σ coef·x[var] + constant`.
///
/// Terms are kept sorted by variable with duplicates merged and exact zeros dropped.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinExpr<T> {
    pub terms: Vec<(usize, T)>,
    pub constant: T,
}

impl<T: Scalar> LinExpr<T> {
    pub fn zero() -> Self {
        Self { terms: Vec::new(), constant: T::zero() }
    }

    pub fn constant(c: T) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: usize) -> Self {
        Self { terms: vec![(v, T::one())], constant: T::zero() }
    }

    pub fn term(v: usize, coef: T) -> Self {
        Self::from_terms(vec![(v, coef)], T::zero())
    }

    pub fn from_terms(terms: Vec<(usize, T)>, constant: T) -> Self {
        let mut e = Self { terms, constant };
        e.normalize();
        e
    }

    /// `Σ coefs[k]·x[vars[k]]`.
    pub fn dot(vars: &[usize], coefs: &[T]) -> Self {
        Self::from_terms(vars.iter().copied().zip(coefs.iter().copied()).collect(), T::zero())
    }

    pub fn sum(vars: &[usize]) -> Self {
        Self::from_terms(vars.iter().map(|&v| (v, T::one())).collect(), T::zero())
    }

    fn normalize(&mut self) {
        self.terms.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(usize, T)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| !c.is_zero());
        self.terms = merged;
    }

    pub fn add_term(&mut self, v: usize, coef: T) {
        if coef.is_zero() {
            return;
        }
        match self.terms.binary_search_by_key(&v, |&(tv, _)| tv) {
            Ok(k) => {
                self.terms[k].1 += coef;
                if self.terms[k].1.is_zero() {
                    self.terms.remove(k);
                }
            }
            Err(k) => self.terms.insert(k, (v, coef)),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self::from_terms(self.terms.iter().map(|&(v, c)| (v, c * s)).collect(), self.constant * s)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.last().map(|&(v, _)| v)
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.terms.iter().fold(self.constant, |acc, &(v, c)| acc + c * x[v])
    }

    pub fn cast<U: Scalar>(&self) -> LinExpr<U> {
        LinExpr {
            terms: self.terms.iter().map(|&(v, c)| (v, U::of(c.as_f64()))).collect(),
            constant: U::of(self.constant.as_f64()),
        }
    }
}

impl<T: Scalar> Add for LinExpr<T> {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Scalar> AddAssign for LinExpr<T> {
    fn add_assign(&mut self, rhs: Self) {
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
        self.normalize();
    }
}

impl<T: Scalar> Sub for LinExpr<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Scalar> Neg for LinExpr<T> {
    type Output = Self;

    fn neg(self) -> Self {
        self.scaled(-T::one())
    }
}

impl<T: Scalar> Mul<T> for LinExpr<T> {
    type Output = Self;

    fn mul(self, s: T) -> Self {
        self.scaled(s)
    }
}
