//! Second-quantized operators as sums of normal-ordered monomials.
//!
//! The canonical form puts every creator before every annihilator, each
//! block sorted by ascending mode index. Rewriting uses
//! `a_i a†_j = delta_ij - a†_j a_i` and `{a_i, a_j} = {a†_i, a†_j} = 0`, with
//! exact rational coefficients, so two operators are equal exactly when
//! their term maps are equal.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::fock::{apply_annihilate, apply_create, FockState, Scalar, StateVector};

pub const DEFAULT_DEGREE_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Create,
    Annihilate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub kind: FactorKind,
    pub mode: usize,
}

pub fn create(mode: usize) -> Factor {
    Factor { kind: FactorKind::Create, mode }
}

pub fn annihilate(mode: usize) -> Factor {
    Factor { kind: FactorKind::Annihilate, mode }
}

impl Factor {
    pub fn adjoint(self) -> Factor {
        let kind = match self.kind {
            FactorKind::Create => FactorKind::Annihilate,
            FactorKind::Annihilate => FactorKind::Create,
        };
        Factor { kind, mode: self.mode }
    }

    /// Applies this factor to a basis state.
    pub fn act(self, s: FockState) -> Option<(i8, FockState)> {
        match self.kind {
            FactorKind::Create => apply_create(self.mode, s),
            FactorKind::Annihilate => apply_annihilate(self.mode, s),
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self.kind {
            FactorKind::Create => write!(f, "c+{}", self.mode),
            FactorKind::Annihilate => write!(f, "c{}", self.mode),
        }
    }
}

/// A coefficient times an ordered product of factors (leftmost acts last).
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: Rational,
    pub factors: Vec<Factor>,
}

impl Monomial {
    pub fn new(coeff: Rational, factors: Vec<Factor>) -> Self {
        Monomial { coeff, factors }
    }

    pub fn is_normal_ordered(&self) -> bool {
        is_canonical(&self.factors)
    }
}

enum Disorder {
    Swap,
    Contract,
    Vanish,
}

fn disorder(a: Factor, b: Factor) -> Option<Disorder> {
    use FactorKind::*;
    match (a.kind, b.kind) {
        (Create, Annihilate) => None,
        (Annihilate, Create) if a.mode == b.mode => Some(Disorder::Contract),
        (Annihilate, Create) => Some(Disorder::Swap),
        _ if a.mode == b.mode => Some(Disorder::Vanish),
        _ if a.mode > b.mode => Some(Disorder::Swap),
        _ => None,
    }
}

fn is_canonical(factors: &[Factor]) -> bool {
    factors.windows(2).all(|w| disorder(w[0], w[1]).is_none())
}

fn check_degree(degree: usize, cap: usize) -> Result<()> {
    if degree > cap {
        Err(Error::DegreeCap { degree, cap })
    } else {
        Ok(())
    }
}

/// Rewrites `m` into canonical normal order.
pub fn normal_order(m: &Monomial, cap: usize) -> Result<OperatorExpr> {
    check_degree(m.factors.len(), cap)?;
    let mut out = OperatorExpr::zero();
    normal_order_into(m.factors.clone(), m.coeff.clone(), &mut out.terms);
    out.terms.retain(|_, c| !c.is_zero());
    Ok(out)
}

fn normal_order_into(factors: Vec<Factor>, coeff: Rational, out: &mut BTreeMap<Vec<Factor>, Rational>) {
    if coeff.is_zero() {
        return;
    }
    let mut work = vec![(factors, coeff)];
    while let Some((mut fs, c)) = work.pop() {
        let first = fs.windows(2).position(|w| disorder(w[0], w[1]).is_some());
        let Some(i) = first else {
            *out.entry(fs).or_insert_with(Rational::zero) += c;
            continue;
        };
        match disorder(fs[i], fs[i + 1]).expect("disordered pair") {
            Disorder::Vanish => {}
            Disorder::Swap => {
                fs.swap(i, i + 1);
                work.push((fs, -c));
            }
            Disorder::Contract => {
                let mut contracted = fs.clone();
                contracted.drain(i..i + 2);
                work.push((contracted, c.clone()));
                fs.swap(i, i + 1);
                work.push((fs, -c));
            }
        }
    }
}

/// Linear combination of normal-ordered monomials.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OperatorExpr {
    terms: BTreeMap<Vec<Factor>, Rational>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        OperatorExpr { terms: BTreeMap::new() }
    }

    pub fn scalar(c: Rational) -> Self {
        let mut out = Self::zero();
        if !c.is_zero() {
            out.terms.insert(Vec::new(), c);
        }
        out
    }

    pub fn identity() -> Self {
        Self::scalar(exact::int(1))
    }

    /// Single factor with unit coefficient.
    pub fn factor(f: Factor) -> Self {
        let mut out = Self::zero();
        out.terms.insert(vec![f], exact::int(1));
        out
    }

    pub fn from_monomial(m: &Monomial, cap: usize) -> Result<Self> {
        normal_order(m, cap)
    }

    /// Sum of monomials, each normal-ordered.
    pub fn from_monomials<'a, I>(monomials: I, cap: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Monomial>,
    {
        let mut out = Self::zero();
        for m in monomials {
            check_degree(m.factors.len(), cap)?;
            normal_order_into(m.factors.clone(), m.coeff.clone(), &mut out.terms);
        }
        out.terms.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    pub fn add_monomial(&mut self, m: &Monomial, cap: usize) -> Result<()> {
        check_degree(m.factors.len(), cap)?;
        normal_order_into(m.factors.clone(), m.coeff.clone(), &mut self.terms);
        self.terms.retain(|_, c| !c.is_zero());
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Factor], &Rational)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn coefficient(&self, factors: &[Factor]) -> Option<&Rational> {
        self.terms.get(factors)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Highest mode index used, if any.
    pub fn max_mode(&self) -> Option<usize> {
        self.terms.keys().flatten().map(|f| f.mode).max()
    }

    /// True when every monomial has as many creators as annihilators.
    pub fn conserves_number(&self) -> bool {
        self.terms.keys().all(|fs| {
            let creates = fs.iter().filter(|f| f.kind == FactorKind::Create).count();
            2 * creates == fs.len()
        })
    }

    /// Sum of absolute coefficients.
    pub fn l1_norm(&self) -> Rational {
        self.terms.values().fold(Rational::zero(), |acc, c| acc + c.abs())
    }

    pub fn l1_norm_f64(&self) -> f64 {
        self.l1_norm().to_f64().unwrap_or(f64::NAN)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            *out.terms.entry(k.clone()).or_insert_with(Rational::zero) += c;
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&exact::int(-1)))
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        OperatorExpr { terms: self.terms.iter().map(|(k, c)| (k.clone(), c * factor)).collect() }
    }

    /// Operator product `self * other`, normal-ordered.
    pub fn mul(&self, other: &Self, cap: usize) -> Result<Self> {
        check_degree(self.degree() + other.degree(), cap)?;
        let mut out = Self::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let mut fs = Vec::with_capacity(ka.len() + kb.len());
                fs.extend_from_slice(ka);
                fs.extend_from_slice(kb);
                normal_order_into(fs, ca * cb, &mut out.terms);
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    /// Hermitian adjoint (coefficients are real).
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let fs: Vec<Factor> = k.iter().rev().map(|f| f.adjoint()).collect();
            normal_order_into(fs, c.clone(), &mut out.terms);
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    pub fn is_hermitian(&self) -> bool {
        self.adjoint() == *self
    }

    /// Canonical dump: `{coeff_num, coeff_den, factors: [[kind, mode], ...]}`.
    pub fn dump(&self) -> Vec<TermDump> {
        self.terms
            .iter()
            .map(|(k, c)| TermDump {
                coeff_num: c.numer().to_string(),
                coeff_den: c.denom().to_string(),
                factors: k.iter().map(|f| (f.kind, f.mode)).collect(),
            })
            .collect()
    }

    pub fn dump_json(&self) -> String {
        serde_json::to_string(&self.dump()).expect("dump serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermDump {
    pub coeff_num: String,
    pub coeff_den: String,
    pub factors: Vec<(FactorKind, usize)>,
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({})", exact::render(c))?;
            for factor in k {
                write!(f, " {factor}")?;
            }
        }
        Ok(())
    }
}

/// `[a, b] = ab - ba`, normal-ordered.
pub fn commutator(a: &OperatorExpr, b: &OperatorExpr, cap: usize) -> Result<OperatorExpr> {
    Ok(a.mul(b, cap)?.sub(&b.mul(a, cap)?))
}

/// Exact linear action of `op` on `v`. Factors act right to left.
pub fn apply<S: Scalar>(op: &OperatorExpr, v: &StateVector<S>) -> Result<StateVector<S>> {
    if let Some(max) = op.max_mode() {
        if max >= v.modes() {
            return Err(Error::ModeOutOfRange { index: max, modes: v.modes() });
        }
    }
    let coeffs: Vec<(&Vec<Factor>, S)> = op.terms.iter().map(|(k, c)| (k, S::from_rational(c))).collect();
    let mut out = StateVector::zero(v.modes(), v.tag());
    for (s, amp) in v.iter() {
        for (factors, c) in &coeffs {
            if let Some((sign, target)) = act_string(factors, *s) {
                out.add_amplitude(target, c.clone() * amp.clone() * S::from_sign(sign));
            }
        }
    }
    Ok(out)
}

/// Applies a factor string to a basis state, rightmost factor first.
pub fn act_string(factors: &[Factor], s: FockState) -> Option<(i8, FockState)> {
    let mut state = s;
    let mut sign = 1i8;
    for f in factors.iter().rev() {
        let (sg, next) = f.act(state)?;
        sign *= sg;
        state = next;
    }
    Some((sign, state))
}
