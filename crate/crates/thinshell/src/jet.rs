//! Truncated multivariate Taylor arithmetic ("jets") of fixed order 4.
//!
//! A [`Jet`] carries a scalar value together with every mixed partial
//! derivative up to total order 4 in `n` variables. All arithmetic and
//! elementary functions propagate derivatives exactly, so downstream
//! geometry never touches a finite difference unless it wants one as an
//! independent check.
//!
//! Internally coefficients are stored Taylor-normalized (`coeff[α] =
//! ∂^α f / α!`), one slot per multi-index, which makes multiplication a
//! plain Cauchy product with no multinomial factors. Order 4 is the
//! maximum any consumer needs: second covariant derivatives of a vector
//! field on an offset surface require fourth derivatives of the chart.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use thiserror::Error;

/// Highest total derivative order carried by a jet.
pub const MAX_ORDER: usize = 4;

/// Smallest denominator magnitude accepted by division.
pub const DIV_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum JetError {
    #[error("domain error in {func}: argument value {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("division by zero (denominator value {value:e})")]
    DivisionByZero { value: f64 },
    #[error("variable index {index} out of range for {dims} variables")]
    IndexOutOfRange { index: usize, dims: usize },
}

/// Multiplication rule for one output multi-index: which coefficient
/// pairs of the factors contribute. Off-diagonal pairs are stored
/// unordered and expanded symmetrically so that `a * b` and `b * a`
/// produce bit-identical results.
struct ProductRule {
    diag: Vec<u32>,
    pairs: Vec<(u32, u32)>,
}

/// Shared tables for jets in a fixed number of variables: the graded
/// multi-index basis, multiplication rules, and derivative shifts.
pub struct JetSpace {
    num_vars: usize,
    exponents: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<ProductRule>,
    // derivs[var][target] = (source coefficient, integer factor)
    derivs: Vec<Vec<Option<(usize, f64)>>>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("num_vars", &self.num_vars)
            .field("len", &self.exponents.len())
            .finish()
    }
}

static SPACES: Lazy<Mutex<HashMap<usize, Arc<JetSpace>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

impl JetSpace {
    /// Returns the cached space for `num_vars` variables, building it on
    /// first use.
    pub fn shared(num_vars: usize) -> Arc<JetSpace> {
        let mut cache = SPACES.lock().unwrap();
        cache
            .entry(num_vars)
            .or_insert_with(|| Arc::new(JetSpace::build(num_vars)))
            .clone()
    }

    fn build(num_vars: usize) -> JetSpace {
        assert!(num_vars >= 1, "jet space needs at least one variable");
        let mut exponents: Vec<Vec<u8>> = Vec::new();
        let mut stack = vec![0u8; num_vars];
        enumerate(&mut exponents, &mut stack, 0, MAX_ORDER as u8);
        exponents.sort_by_key(|e| {
            let total: u8 = e.iter().sum();
            (total, e.clone())
        });
        let index: HashMap<Vec<u8>, usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();

        let len = exponents.len();
        let mut products: Vec<ProductRule> = (0..len)
            .map(|_| ProductRule {
                diag: Vec::new(),
                pairs: Vec::new(),
            })
            .collect();
        for i in 0..len {
            for j in i..len {
                let total: u8 = exponents[i].iter().sum::<u8>() + exponents[j].iter().sum::<u8>();
                if total > MAX_ORDER as u8 {
                    continue;
                }
                let sum: Vec<u8> = exponents[i]
                    .iter()
                    .zip(&exponents[j])
                    .map(|(a, b)| a + b)
                    .collect();
                let target = index[&sum];
                if i == j {
                    products[target].diag.push(i as u32);
                } else {
                    products[target].pairs.push((i as u32, j as u32));
                }
            }
        }

        let mut derivs = Vec::with_capacity(num_vars);
        for v in 0..num_vars {
            let mut map = vec![None; len];
            for (target, e) in exponents.iter().enumerate() {
                let total: u8 = e.iter().sum();
                if total as usize >= MAX_ORDER {
                    continue;
                }
                let mut shifted = e.clone();
                shifted[v] += 1;
                let source = index[&shifted];
                map[target] = Some((source, (e[v] + 1) as f64));
            }
            derivs.push(map);
        }

        JetSpace {
            num_vars,
            exponents,
            index,
            products,
            derivs,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Number of stored coefficients: C(num_vars + 4, 4).
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn enumerate(out: &mut Vec<Vec<u8>>, stack: &mut Vec<u8>, var: usize, budget: u8) {
    if var == stack.len() {
        out.push(stack.clone());
        return;
    }
    for k in 0..=budget {
        stack[var] = k;
        enumerate(out, stack, var + 1, budget - k);
    }
    stack[var] = 0;
}

/// Scalar value with exact partial derivatives up to total order 4.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeff: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet({}", self.value())?;
        for v in 0..self.space.num_vars {
            write!(f, ", d{}={}", v, self.partial(&[v]))?;
        }
        write!(f, ", ..)")
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.space.num_vars == other.space.num_vars && self.coeff == other.coeff
    }
}

impl Jet {
    /// Jet of a constant: value set, all derivatives zero.
    pub fn constant(space: &Arc<JetSpace>, value: f64) -> Jet {
        let mut coeff = vec![0.0; space.len()];
        coeff[0] = value;
        Jet {
            space: space.clone(),
            coeff,
        }
    }

    /// Jet of the coordinate function `u^index` evaluated at `value`:
    /// the first partial in slot `index` is 1, everything else 0.
    pub fn seed_variable(space: &Arc<JetSpace>, index: usize, value: f64) -> Result<Jet, JetError> {
        if index >= space.num_vars {
            return Err(JetError::IndexOutOfRange {
                index,
                dims: space.num_vars,
            });
        }
        let mut jet = Jet::constant(space, value);
        let mut e = vec![0u8; space.num_vars];
        e[index] = 1;
        jet.coeff[space.index[&e]] = 1.0;
        Ok(jet)
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn num_vars(&self) -> usize {
        self.space.num_vars
    }

    pub fn value(&self) -> f64 {
        self.coeff[0]
    }

    /// Mixed partial derivative for the listed variables, e.g.
    /// `partial(&[0, 1])` is `∂²f/∂u⁰∂u¹`. Panics if more than four
    /// variables are listed or an index is out of range.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        assert!(vars.len() <= MAX_ORDER, "partial order exceeds {MAX_ORDER}");
        let mut e = vec![0u8; self.space.num_vars];
        for &v in vars {
            assert!(v < self.space.num_vars, "variable index out of range");
            e[v] += 1;
        }
        let idx = self.space.index[&e];
        self.coeff[idx] * factorial_multi(&e)
    }

    /// True when every derivative coefficient is zero (constant jet).
    pub fn is_constant(&self) -> bool {
        self.coeff[1..].iter().all(|&c| c == 0.0)
    }

    /// Exact derivative of the truncated series with respect to one
    /// variable. The result's order-4 coefficients are unknown (they
    /// would need order-5 data) and are set to zero, so a derivative jet
    /// is trustworthy only through order 3; chained derivatives lose one
    /// order each.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(var < self.space.num_vars, "variable index out of range");
        let map = &self.space.derivs[var];
        let mut coeff = vec![0.0; self.coeff.len()];
        for (target, entry) in map.iter().enumerate() {
            if let Some((source, factor)) = entry {
                coeff[target] = self.coeff[*source] * factor;
            }
        }
        Jet {
            space: self.space.clone(),
            coeff,
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        for c in &mut out.coeff {
            *c *= s;
        }
        out
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeff[0] += s;
        out
    }

    fn assert_compatible(&self, other: &Jet) {
        assert_eq!(
            self.space.num_vars, other.space.num_vars,
            "jets from different spaces"
        );
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        Ok(self * &other.recip()?)
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v.abs() <= DIV_FLOOR {
            return Err(JetError::DivisionByZero { value: v });
        }
        let inv = 1.0 / v;
        // d^k (1/x) / k! = (-1)^k / x^(k+1)
        let mut c = [0.0; MAX_ORDER + 1];
        let mut p = inv;
        for (k, slot) in c.iter_mut().enumerate() {
            *slot = if k % 2 == 0 { p } else { -p };
            p *= inv;
        }
        Ok(self.compose(&c))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s / 2.0, -c / 6.0, s / 24.0])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c / 2.0, s / 6.0, c / 24.0])
    }

    pub fn tan(&self) -> Result<Jet, JetError> {
        self.sin()
            .try_div(&self.cos())
            .map_err(|_| JetError::Domain {
                func: "tan",
                value: self.value(),
            })
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e, e, e / 2.0, e / 6.0, e / 24.0])
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= 0.0 || !v.is_finite() {
            return Err(JetError::Domain {
                func: "log",
                value: v,
            });
        }
        let inv = 1.0 / v;
        Ok(self.compose(&[
            v.ln(),
            inv,
            -inv * inv / 2.0,
            inv * inv * inv / 3.0,
            -inv * inv * inv * inv / 4.0,
        ]))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= 0.0 || !v.is_finite() {
            return Err(JetError::Domain {
                func: "sqrt",
                value: v,
            });
        }
        let s = v.sqrt();
        Ok(self.compose(&[
            s,
            0.5 / s,
            -1.0 / (8.0 * v * s),
            1.0 / (16.0 * v * v * s),
            -5.0 / (128.0 * v * v * v * s),
        ]))
    }

    /// |x|, differentiable away from zero; errors at exactly zero where
    /// the derivative is undefined.
    pub fn abs(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v > 0.0 {
            Ok(self.clone())
        } else if v < 0.0 {
            Ok(-self)
        } else {
            Err(JetError::Domain {
                func: "abs",
                value: v,
            })
        }
    }

    /// Integer power by repeated multiplication; valid for any base.
    /// Negative exponents require a nonzero base.
    pub fn powi(&self, n: i32) -> Result<Jet, JetError> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut acc = Jet::constant(&self.space, 1.0);
        let mut base = self.clone();
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    /// General power `self^exponent`. A constant integer exponent uses
    /// repeated multiplication (any base); otherwise the base must be
    /// positive and the result is `exp(exponent * ln(base))`.
    pub fn powf(&self, exponent: &Jet) -> Result<Jet, JetError> {
        self.assert_compatible(exponent);
        if exponent.is_constant() {
            let e = exponent.value();
            if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                return self.powi(e as i32);
            }
        }
        if self.value() <= 0.0 {
            return Err(JetError::Domain {
                func: "pow",
                value: self.value(),
            });
        }
        Ok((&self.ln()? * exponent).exp())
    }

    /// Horner evaluation of `c0 + c1 p + c2 p² + c3 p³ + c4 p⁴` where
    /// `p = self - value(self)`; the `c` are Taylor coefficients of the
    /// outer function at the inner value.
    fn compose(&self, c: &[f64; MAX_ORDER + 1]) -> Jet {
        let mut p = self.clone();
        p.coeff[0] = 0.0;
        let mut acc = Jet::constant(&self.space, c[MAX_ORDER]);
        for k in (0..MAX_ORDER).rev() {
            acc = &acc * &p;
            acc.coeff[0] += c[k];
        }
        acc
    }
}

fn factorial_multi(e: &[u8]) -> f64 {
    const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];
    e.iter().map(|&k| FACT[k as usize]).product()
}

/// `Σ_k a_k b_k` over two equal-length jet slices.
pub fn jet_dot(a: &[Jet], b: &[Jet]) -> Jet {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| x * y)
        .reduce(|acc, term| &acc + &term)
        .expect("non-empty slices")
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        let mut out = self.clone();
        for (a, b) in out.coeff.iter_mut().zip(&rhs.coeff) {
            *a += b;
        }
        out
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        let mut out = self.clone();
        for (a, b) in out.coeff.iter_mut().zip(&rhs.coeff) {
            *a -= b;
        }
        out
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        let a = &self.coeff;
        let b = &rhs.coeff;
        let mut coeff = vec![0.0; a.len()];
        for (target, rule) in self.space.products.iter().enumerate() {
            let mut acc = 0.0;
            for &i in &rule.diag {
                acc += a[i as usize] * b[i as usize];
            }
            for &(i, j) in &rule.pairs {
                let (i, j) = (i as usize, j as usize);
                // Symmetric expansion keeps multiplication exactly
                // commutative in floating point.
                acc += a[i] * b[j] + a[j] * b[i];
            }
            coeff[target] = acc;
        }
        Jet {
            space: self.space.clone(),
            coeff,
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// A point of evaluation: one seeded jet per coordinate, possibly
/// embedded in a larger jet space (the shell machinery evaluates chart
/// variables inside an (n+1)-variable space whose extra slot is the
/// normal coordinate).
#[derive(Clone, Debug)]
pub struct JetPoint {
    space: Arc<JetSpace>,
    vars: Vec<usize>,
    coords: Vec<f64>,
    jets: Vec<Jet>,
}

impl JetPoint {
    /// Point in a fresh space with one jet variable per coordinate.
    pub fn new(coords: &[f64]) -> JetPoint {
        let space = JetSpace::shared(coords.len());
        JetPoint::embedded(&space, &(0..coords.len()).collect::<Vec<_>>(), coords)
    }

    /// Point whose coordinates are bound to the given variable slots of
    /// an existing space.
    pub fn embedded(space: &Arc<JetSpace>, vars: &[usize], coords: &[f64]) -> JetPoint {
        assert_eq!(vars.len(), coords.len());
        let jets = vars
            .iter()
            .zip(coords)
            .map(|(&v, &x)| Jet::seed_variable(space, v, x).expect("variable slot in range"))
            .collect();
        JetPoint {
            space: space.clone(),
            vars: vars.to_vec(),
            coords: coords.to_vec(),
            jets,
        }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Jet-space variable slot of coordinate `i`.
    pub fn var(&self, i: usize) -> usize {
        self.vars[i]
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Seeded jets, one per coordinate.
    pub fn jets(&self) -> &[Jet] {
        &self.jets
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space2() -> Arc<JetSpace> {
        JetSpace::shared(2)
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(JetSpace::shared(1).len(), 5);
        assert_eq!(JetSpace::shared(2).len(), 15);
        assert_eq!(JetSpace::shared(3).len(), 35);
    }

    #[test]
    fn polynomial_derivative() {
        let s = JetSpace::shared(1);
        let x = Jet::seed_variable(&s, 0, 3.0).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.value(), 9.0);
        assert_eq!(sq.partial(&[0]), 6.0);
        assert_eq!(sq.partial(&[0, 0]), 2.0);
        assert_eq!(sq.partial(&[0, 0, 0]), 0.0);
    }

    #[test]
    fn sine_taylor_at_zero() {
        let s = JetSpace::shared(1);
        let x = Jet::seed_variable(&s, 0, 0.0).unwrap();
        let f = x.sin();
        assert_eq!(f.partial(&[0, 0, 0, 0]), 0.0);
        assert_eq!(f.partial(&[0, 0, 0]), -1.0);
        assert_eq!(f.partial(&[0]), 1.0);
    }

    #[test]
    fn bilinear_mixed_partial() {
        let s = space2();
        let u = Jet::seed_variable(&s, 0, 4.0).unwrap();
        let v = Jet::seed_variable(&s, 1, -2.0).unwrap();
        let p = &u * &v;
        assert_eq!(p.partial(&[0, 1]), 1.0);
        assert_eq!(p.partial(&[0, 0]), 0.0);
        assert_eq!(p.partial(&[0, 0, 1]), 0.0);
        assert_eq!(p.partial(&[0, 1, 1, 1]), 0.0);
    }

    #[test]
    fn seed_examples() {
        let s = space2();
        let j = Jet::seed_variable(&s, 0, 2.5).unwrap();
        assert_eq!(j.value(), 2.5);
        assert_eq!(j.partial(&[0]), 1.0);
        assert_eq!(j.partial(&[1]), 0.0);
        assert!(matches!(
            Jet::seed_variable(&s, 2, 0.0),
            Err(JetError::IndexOutOfRange { index: 2, dims: 2 })
        ));
    }

    #[test]
    fn exp_pure_partials_all_one() {
        let s = JetSpace::shared(1);
        let x = Jet::seed_variable(&s, 0, 0.0).unwrap();
        let f = x.exp();
        assert!((f.partial(&[0]) - 1.0).abs() < 1e-15);
        assert!((f.partial(&[0, 0]) - 1.0).abs() < 1e-15);
        assert!((f.partial(&[0, 0, 0]) - 1.0).abs() < 1e-15);
        assert!((f.partial(&[0, 0, 0, 0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn division_and_domain_errors() {
        let s = JetSpace::shared(1);
        let x = Jet::seed_variable(&s, 0, 2.0).unwrap();
        let one = Jet::constant(&s, 1.0);
        let inv = one.try_div(&x).unwrap();
        assert!((inv.value() - 0.5).abs() < 1e-15);
        assert!((inv.partial(&[0]) + 0.25).abs() < 1e-15);

        let zero = Jet::constant(&s, 0.0);
        assert!(matches!(
            one.try_div(&zero),
            Err(JetError::DivisionByZero { .. })
        ));
        let neg = Jet::seed_variable(&s, 0, -1.0).unwrap();
        assert!(matches!(neg.sqrt(), Err(JetError::Domain { .. })));
        assert!(matches!(neg.ln(), Err(JetError::Domain { .. })));
    }

    #[test]
    fn integer_powers_handle_negative_base() {
        let s = JetSpace::shared(1);
        let x = Jet::seed_variable(&s, 0, -2.0).unwrap();
        let e = Jet::constant(&s, 3.0);
        let p = x.powf(&e).unwrap();
        assert_eq!(p.value(), -8.0);
        assert_eq!(p.partial(&[0]), 12.0);
        // non-integer exponent with negative base: domain error
        let e = Jet::constant(&s, 0.5);
        assert!(matches!(x.powf(&e), Err(JetError::Domain { .. })));
    }

    #[test]
    fn multiplication_exactly_commutative() {
        let s = space2();
        let u = Jet::seed_variable(&s, 0, 1.3).unwrap();
        let v = Jet::seed_variable(&s, 1, -0.7).unwrap();
        let a = (&u.sin() + &v.exp()) * (&u * &v);
        let lhs = &a * &u.cos();
        let rhs = &u.cos() * &a;
        assert_eq!(lhs, rhs);
        let sum1 = &a + &u;
        let sum2 = &u + &a;
        assert_eq!(sum1, sum2);
    }

    #[test]
    fn derivative_jet_shifts_orders() {
        let s = JetSpace::shared(1);
        let x = Jet::seed_variable(&s, 0, 0.3).unwrap();
        let f = x.sin();
        let fp = f.derivative(0);
        assert!((fp.value() - 0.3f64.cos()).abs() < 1e-15);
        assert!((fp.partial(&[0]) + 0.3f64.sin()).abs() < 1e-15);
        assert!((fp.partial(&[0, 0, 0]) - 0.3f64.sin()).abs() < 1e-15);
    }

    // Finite-difference oracle for derivative propagation through random
    // composite expressions.
    #[derive(Clone, Debug)]
    enum Node {
        Var(usize),
        Const(f64),
        Add(Box<Node>, Box<Node>),
        Mul(Box<Node>, Box<Node>),
        Sin(Box<Node>),
        Cos(Box<Node>),
        ExpHalf(Box<Node>),
        SqrtOnePlusSq(Box<Node>),
        DivBySafe(Box<Node>, Box<Node>),
    }

    fn random_node(rng: &mut impl rand::Rng, depth: usize, nvars: usize) -> Node {
        if depth == 0 {
            return if rng.random_bool(0.7) {
                Node::Var(rng.random_range(0..nvars))
            } else {
                Node::Const(rng.random_range(-2.0..2.0))
            };
        }
        match rng.random_range(0..7) {
            0 => Node::Add(
                Box::new(random_node(rng, depth - 1, nvars)),
                Box::new(random_node(rng, depth - 1, nvars)),
            ),
            1 => Node::Mul(
                Box::new(random_node(rng, depth - 1, nvars)),
                Box::new(random_node(rng, depth - 1, nvars)),
            ),
            2 => Node::Sin(Box::new(random_node(rng, depth - 1, nvars))),
            3 => Node::Cos(Box::new(random_node(rng, depth - 1, nvars))),
            4 => Node::ExpHalf(Box::new(random_node(rng, depth - 1, nvars))),
            5 => Node::SqrtOnePlusSq(Box::new(random_node(rng, depth - 1, nvars))),
            _ => Node::DivBySafe(
                Box::new(random_node(rng, depth - 1, nvars)),
                Box::new(random_node(rng, depth - 1, nvars)),
            ),
        }
    }

    fn eval_f64(n: &Node, x: &[f64]) -> f64 {
        match n {
            Node::Var(i) => x[*i],
            Node::Const(c) => *c,
            Node::Add(a, b) => eval_f64(a, x) + eval_f64(b, x),
            Node::Mul(a, b) => eval_f64(a, x) * eval_f64(b, x),
            Node::Sin(a) => eval_f64(a, x).sin(),
            Node::Cos(a) => eval_f64(a, x).cos(),
            Node::ExpHalf(a) => (0.5 * eval_f64(a, x)).exp(),
            Node::SqrtOnePlusSq(a) => {
                let v = eval_f64(a, x);
                (1.0 + v * v).sqrt()
            }
            Node::DivBySafe(a, b) => {
                let d = eval_f64(b, x);
                eval_f64(a, x) / (2.5 + d.sin())
            }
        }
    }

    fn eval_jet(n: &Node, x: &[Jet], space: &Arc<JetSpace>) -> Jet {
        match n {
            Node::Var(i) => x[*i].clone(),
            Node::Const(c) => Jet::constant(space, *c),
            Node::Add(a, b) => &eval_jet(a, x, space) + &eval_jet(b, x, space),
            Node::Mul(a, b) => &eval_jet(a, x, space) * &eval_jet(b, x, space),
            Node::Sin(a) => eval_jet(a, x, space).sin(),
            Node::Cos(a) => eval_jet(a, x, space).cos(),
            Node::ExpHalf(a) => eval_jet(a, x, space).scale(0.5).exp(),
            Node::SqrtOnePlusSq(a) => {
                let j = eval_jet(a, x, space);
                (&(&j * &j) + &Jet::constant(space, 1.0)).sqrt().unwrap()
            }
            Node::DivBySafe(a, b) => {
                let d = eval_jet(b, x, space).sin().add_scalar(2.5);
                eval_jet(a, x, space).try_div(&d).unwrap()
            }
        }
    }

    #[test]
    fn random_composites_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20260810);
        let nvars = 2;
        let space = JetSpace::shared(nvars);
        let h = 1e-5;
        for _ in 0..100 {
            let node = random_node(&mut rng, 3, nvars);
            let x: Vec<f64> = (0..nvars).map(|_| rng.random_range(-1.5..1.5)).collect();
            let jets: Vec<Jet> = (0..nvars)
                .map(|i| Jet::seed_variable(&space, i, x[i]).unwrap())
                .collect();
            let jet = eval_jet(&node, &jets, &space);
            let scale = 1.0 + jet.value().abs();
            if !jet.value().is_finite() || scale > 1e3 {
                continue;
            }
            for v in 0..nvars {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[v] += h;
                xm[v] -= h;
                let fd = (eval_f64(&node, &xp) - eval_f64(&node, &xm)) / (2.0 * h);
                let exact = jet.partial(&[v]);
                let denom = 1.0 + exact.abs();
                assert!(
                    ((fd - exact) / denom).abs() < 1e-6,
                    "first partial mismatch: fd={fd}, jet={exact}"
                );
                let fd2 = (eval_f64(&node, &xp) - 2.0 * eval_f64(&node, &x) + eval_f64(&node, &xm))
                    / (h * h);
                let exact2 = jet.partial(&[v, v]);
                let denom2 = 1.0 + exact2.abs();
                assert!(
                    ((fd2 - exact2) / denom2).abs() < 1e-4,
                    "second partial mismatch: fd={fd2}, jet={exact2}"
                );
            }
            // mixed second partial via 4-point stencil
            let stencil = |du: f64, dv: f64| {
                let mut y = x.clone();
                y[0] += du;
                y[1] += dv;
                eval_f64(&node, &y)
            };
            let fd_mixed =
                (stencil(h, h) - stencil(h, -h) - stencil(-h, h) + stencil(-h, -h)) / (4.0 * h * h);
            let exact_mixed = jet.partial(&[0, 1]);
            let denom = 1.0 + exact_mixed.abs();
            assert!(
                ((fd_mixed - exact_mixed) / denom).abs() < 1e-4,
                "mixed partial mismatch: fd={fd_mixed}, jet={exact_mixed}"
            );
        }
    }
}
