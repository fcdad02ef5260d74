//! Exact symbolic derivatives of the 1-D heat kernel.
//!
//! A term `c · x^a y^b t^e · p_t^{λ+m}(x, y)` is closed under the first-order
//! operators `∂_x - β/x`, because
//! `δ_λ p_t^λ = -(x/2t) p_t^λ + (y/2t) p_t^{λ+1}`. Applying
//! `∂_x - β/x` to such a term gives
//!
//! ```text
//! (a + λ + m + 1/2 - β) x^{a-1} p^{λ+m} - ½ x^{a+1} t^{-1} p^{λ+m} + ½ x^a y t^{-1} p^{λ+m+1}
//! ```
//!
//! and every operator used here (`δ_μ`, `δ_μ^*`, `∂_x`, `Δ_μ`) is a composition
//! of such steps and multiplications by powers of `x`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::reduced_unchecked;

/// One monomial-times-kernel term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub x_pow: i32,
    pub y_pow: i32,
    pub t_pow: i32,
    /// Order shift `m`: the term multiplies `p_t^{base + m}`.
    pub shift: u32,
}

/// Operators acting on the first kernel variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    /// `δ_μ = ∂_x - (μ + 1/2)/x`.
    Delta(f64),
    /// `δ_μ^* = -∂_x - (μ + 1/2)/x`.
    DeltaStar(f64),
    /// `∂_x`.
    Partial,
    /// `Δ_μ = -∂_x² + (μ² - 1/4)/x² = δ_μ^* δ_μ`.
    Laplacian(f64),
    /// Multiplication by `x^j`.
    XPow(i32),
}

/// `Σ_i c_i x^{a_i} y^{b_i} t^{e_i} p_t^{base + m_i}(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelExpansion {
    pub base_order: f64,
    pub terms: Vec<Term>,
}

type Key = (i32, i32, i32, u32);

impl HeatKernelExpansion {
    /// The bare kernel `p_t^{base}`.
    pub fn kernel(base_order: f64) -> Self {
        Self {
            base_order,
            terms: vec![Term {
                coeff: 1.0,
                x_pow: 0,
                y_pow: 0,
                t_pow: 0,
                shift: 0,
            }],
        }
    }

    /// `δ_ν^ℓ p_t^ν`.
    pub fn delta_power(nu: f64, ell: u32) -> Self {
        Self::from_ops(nu, &vec![Op::Delta(nu); ell as usize])
    }

    /// `ops[last] ∘ … ∘ ops[0]` applied to `p_t^{base}`.
    pub fn from_ops(base_order: f64, ops: &[Op]) -> Self {
        ops.iter()
            .fold(Self::kernel(base_order), |acc, op| acc.apply(*op))
    }

    /// `δ_ν^ℓ p_t^ν - δ_{ν+1}^ℓ p_t^{ν+1}`.
    pub fn order_difference(nu: f64, ell: u32) -> Self {
        let lower = Self::delta_power(nu, ell);
        let upper = Self::delta_power(nu + 1.0, ell);
        let mut terms = lower.terms;
        terms.extend(upper.terms.iter().map(|t| Term {
            coeff: -t.coeff,
            shift: t.shift + 1,
            ..*t
        }));
        Self {
            base_order: nu,
            terms: merge(terms),
        }
    }

    pub fn apply(&self, op: Op) -> Self {
        match op {
            Op::Delta(mu) => self.first_order(1.0, mu + 0.5),
            Op::DeltaStar(mu) => self.first_order(-1.0, -(mu + 0.5)),
            Op::Partial => self.first_order(1.0, 0.0),
            Op::Laplacian(mu) => self.apply(Op::Delta(mu)).apply(Op::DeltaStar(mu)),
            Op::XPow(j) => Self {
                base_order: self.base_order,
                terms: self
                    .terms
                    .iter()
                    .map(|t| Term {
                        x_pow: t.x_pow + j,
                        ..*t
                    })
                    .collect(),
            },
        }
    }

    /// `sign · (∂_x - β/x)` applied termwise.
    fn first_order(&self, sign: f64, beta: f64) -> Self {
        let mut out = Vec::with_capacity(3 * self.terms.len());
        for t in &self.terms {
            let lambda = self.base_order + f64::from(t.shift);
            let c0 = sign * t.coeff * (f64::from(t.x_pow) + lambda + 0.5 - beta);
            out.push(Term {
                coeff: c0,
                x_pow: t.x_pow - 1,
                ..*t
            });
            out.push(Term {
                coeff: -0.5 * sign * t.coeff,
                x_pow: t.x_pow + 1,
                t_pow: t.t_pow - 1,
                ..*t
            });
            out.push(Term {
                coeff: 0.5 * sign * t.coeff,
                y_pow: t.y_pow + 1,
                t_pow: t.t_pow - 1,
                shift: t.shift + 1,
                ..*t
            });
        }
        Self {
            base_order: self.base_order,
            terms: merge(out),
        }
    }

    pub fn max_shift(&self) -> u32 {
        self.terms.iter().map(|t| t.shift).max().unwrap_or(0)
    }

    /// Value with the Gaussian `exp(-(x-y)²/4t)` removed.
    pub fn eval_reduced(&self, t: f64, x: f64, y: f64) -> f64 {
        let kernels: Vec<f64> = (0..=self.max_shift())
            .map(|m| reduced_unchecked(self.base_order + f64::from(m), t, x, y))
            .collect();
        self.eval_with(&kernels, t, x, y)
    }

    /// Full value at `(t, x, y)`.
    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        self.eval_reduced(t, x, y) * super::gauss(t, x, y)
    }

    /// Evaluation against precomputed kernels `kernels[m] = p^{base+m}` (any
    /// common normalisation).
    pub fn eval_with(&self, kernels: &[f64], t: f64, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                term.coeff
                    * x.powi(term.x_pow)
                    * y.powi(term.y_pow)
                    * t.powi(term.t_pow)
                    * kernels[term.shift as usize]
            })
            .sum()
    }
}

fn merge(terms: Vec<Term>) -> Vec<Term> {
    let mut acc: BTreeMap<Key, f64> = BTreeMap::new();
    for t in terms {
        *acc.entry((t.x_pow, t.y_pow, t.t_pow, t.shift))
            .or_insert(0.0) += t.coeff;
    }
    acc.into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|((x_pow, y_pow, t_pow, shift), coeff)| Term {
            coeff,
            x_pow,
            y_pow,
            t_pow,
            shift,
        })
        .collect()
}

/// Constants `c_0..c_k` with `∂_x^k = Σ_j c_j x^{-j} δ_ν^{k-j}`.
///
/// From `∂ = δ_ν + (ν+1/2)/x` and `∂(x^{-j} g) = x^{-j} ∂g - j x^{-j-1} g`.
pub fn partial_to_delta_coeffs(nu: f64, k: u32) -> Vec<f64> {
    let a = nu + 0.5;
    let mut c = vec![1.0];
    for _ in 0..k {
        let mut next = vec![0.0; c.len() + 1];
        for (j, &cj) in c.iter().enumerate() {
            next[j] += cj;
            next[j + 1] += (a - j as f64) * cj;
        }
        c = next;
    }
    c
}
