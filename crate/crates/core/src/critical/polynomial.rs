//! Sparse multivariate polynomials with real coefficients, evaluated over
//! any field-like scalar (real Newton or complex path tracking).

use num_complex::Complex64;
use std::ops::{Add, AddAssign, Mul, MulAssign};

/// Scalars a polynomial can be evaluated over.
pub trait Scalar:
    Copy + Add<Output = Self> + Mul<Output = Self> + AddAssign + MulAssign + From<f64> + PartialEq
{
}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

/// `coeff · Π x_var^power`; powers are ≥ 1 and variables distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<(usize, u32)>,
}

impl Term {
    pub fn constant(c: f64) -> Self {
        Term { coeff: c, factors: Vec::new() }
    }

    pub fn new(coeff: f64, factors: &[(usize, u32)]) -> Self {
        let mut f: Vec<(usize, u32)> = Vec::new();
        for &(v, p) in factors {
            if p == 0 {
                continue;
            }
            match f.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += p,
                None => f.push((v, p)),
            }
        }
        f.sort_unstable();
        Term { coeff, factors: f }
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, p)| p).sum()
    }
}

fn pow<T: Scalar>(x: T, p: u32) -> T {
    let mut r = T::from(1.0);
    for _ in 0..p {
        r *= x;
    }
    r
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub terms: Vec<Term>,
}

impl Polynomial {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a term, merging with an existing monomial.
    pub fn push(&mut self, term: Term) {
        if term.coeff == 0.0 {
            return;
        }
        if let Some(t) = self.terms.iter_mut().find(|t| t.factors == term.factors) {
            t.coeff += term.coeff;
            if t.coeff == 0.0 {
                self.terms.retain(|t| t.coeff != 0.0);
            }
        } else {
            self.terms.push(term);
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    /// Degree counting only variables in `group`.
    pub fn degree_in(&self, group: &[bool]) -> u32 {
        self.terms.iter().map(|t| t.factors.iter().filter(|(v, _)| group[*v]).map(|(_, p)| p).sum()).max().unwrap_or(0)
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let mut acc = T::from(0.0);
        for t in &self.terms {
            let mut v = T::from(t.coeff);
            for &(var, p) in &t.factors {
                v *= pow(x[var], p);
            }
            acc += v;
        }
        acc
    }

    /// Value and gradient; `grad` must be zeroed by the caller.
    pub fn eval_with_gradient<T: Scalar>(&self, x: &[T], grad: &mut [T]) -> T {
        let mut acc = T::from(0.0);
        for t in &self.terms {
            let c = T::from(t.coeff);
            match t.factors.as_slice() {
                [] => acc += c,
                [(a, 1)] => {
                    acc += c * x[*a];
                    grad[*a] += c;
                }
                [(a, 2)] => {
                    acc += c * x[*a] * x[*a];
                    grad[*a] += T::from(2.0 * t.coeff) * x[*a];
                }
                [(a, 1), (b, 1)] => {
                    acc += c * x[*a] * x[*b];
                    grad[*a] += c * x[*b];
                    grad[*b] += c * x[*a];
                }
                factors => {
                    let mut val = c;
                    for &(v, p) in factors {
                        val *= pow(x[v], p);
                    }
                    acc += val;
                    for (k, &(v, p)) in factors.iter().enumerate() {
                        let mut d = T::from(t.coeff * p as f64) * pow(x[v], p - 1);
                        for (m, &(w, q)) in factors.iter().enumerate() {
                            if m != k {
                                d *= pow(x[w], q);
                            }
                        }
                        grad[v] += d;
                    }
                }
            }
        }
        acc
    }
}

/// Square or rectangular system of polynomial equations.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSystem {
    pub variable_names: Vec<String>,
    pub equations: Vec<Polynomial>,
    /// Variable partition used for multi-homogeneous start systems.
    pub groups: Vec<Vec<usize>>,
}

impl PolynomialSystem {
    pub fn variable_count(&self) -> usize {
        self.variable_names.len()
    }

    pub fn equation_count(&self) -> usize {
        self.equations.len()
    }

    pub fn is_square(&self) -> bool {
        self.variable_count() == self.equation_count()
    }

    pub fn max_degree(&self) -> u32 {
        self.equations.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    /// Degree of each equation in each group of `groups`.
    pub fn group_degrees(&self, groups: &[Vec<usize>]) -> Vec<Vec<u32>> {
        let masks: Vec<Vec<bool>> = groups
            .iter()
            .map(|g| {
                let mut m = vec![false; self.variable_count()];
                g.iter().for_each(|&v| m[v] = true);
                m
            })
            .collect();
        self.equations.iter().map(|p| masks.iter().map(|m| p.degree_in(m)).collect()).collect()
    }

    pub fn eval<T: Scalar>(&self, x: &[T], out: &mut [T]) {
        for (o, p) in out.iter_mut().zip(&self.equations) {
            *o = p.eval(x);
        }
    }

    /// Values and row-major Jacobian (`equations × variables`).
    pub fn eval_with_jacobian<T: Scalar>(&self, x: &[T], out: &mut [T], jac: &mut [T]) {
        let n = self.variable_count();
        jac.iter_mut().for_each(|v| *v = T::from(0.0));
        for (k, p) in self.equations.iter().enumerate() {
            out[k] = p.eval_with_gradient(x, &mut jac[k * n..(k + 1) * n]);
        }
    }
}

/// Number of start solutions of the linear-product start system for the
/// given degree table (`degrees[eq][group]`) and group sizes: the
/// multi-homogeneous Bézout number.
pub fn bezout_count(degrees: &[Vec<u32>], group_sizes: &[usize]) -> u128 {
    fn rec(eq: usize, degrees: &[Vec<u32>], left: &mut [usize]) -> u128 {
        if eq == degrees.len() {
            return u128::from(left.iter().all(|&l| l == 0));
        }
        let mut total = 0;
        for g in 0..left.len() {
            let d = degrees[eq][g];
            if d > 0 && left[g] > 0 {
                left[g] -= 1;
                total += u128::from(d) * rec(eq + 1, degrees, left);
                left[g] += 1;
            }
        }
        total
    }
    let mut left = group_sizes.to_vec();
    rec(0, degrees, &mut left)
}
