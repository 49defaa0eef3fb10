//! Exact scalar arithmetic for the coefficient ring of tensor valuations.
//!
//! Every coefficient appearing in the operator tables is a Gaussian-rational
//! linear combination of half-integer powers of π, i.e. an element of
//! ℚ(i)[π^(1/2), π^(-1/2)]. This module provides that ring together with the
//! combinatorial constants built from it: Γ at positive half-integers, sphere
//! volumes ω_m, ball volumes κ_m, binomial and flag coefficients.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Arbitrary precision rational, re-exported for callers.
pub type Rat = BigRational;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ExactError {
    #[error("gamma is only defined at positive half-integers, got {0}/2")]
    GammaDomain(i64),
    #[error("index out of range: {0}")]
    IndexDomain(String),
    #[error("inexact division")]
    InexactDivision,
    #[error("parse error: {0}")]
    Parse(String),
}

/// A half-integer stored as twice its value, so 5/2 is `HalfInteger(5)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInteger(pub i64);

impl HalfInteger {
    pub fn from_twice(twice: i64) -> Self {
        HalfInteger(twice)
    }

    pub fn from_int(v: i64) -> Self {
        HalfInteger(2 * v)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    /// True when the value is an integer (twice_value even).
    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn as_rat(self) -> Rat {
        Rat::new(BigInt::from(self.0), BigInt::from(2))
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Gaussian rational a + b·i with arbitrary-precision rational parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussRat {
    pub re: Rat,
    pub im: Rat,
}

impl GaussRat {
    pub fn zero() -> Self {
        GaussRat {
            re: Rat::zero(),
            im: Rat::zero(),
        }
    }

    pub fn one() -> Self {
        GaussRat {
            re: Rat::one(),
            im: Rat::zero(),
        }
    }

    pub fn i() -> Self {
        GaussRat {
            re: Rat::zero(),
            im: Rat::one(),
        }
    }

    pub fn from_rat(re: Rat) -> Self {
        GaussRat {
            re,
            im: Rat::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    fn add(&self, other: &Self) -> Self {
        GaussRat {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    fn mul(&self, other: &Self) -> Self {
        GaussRat {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    fn neg(&self) -> Self {
        GaussRat {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Exact multiplicative inverse; `None` for zero.
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let norm = &self.re * &self.re + &self.im * &self.im;
        Some(GaussRat {
            re: &self.re / &norm,
            im: -(&self.im / &norm),
        })
    }
}

/// Element of ℚ(i)[π^(1/2), π^(-1/2)].
///
/// The map sends an exponent key `h` to the coefficient of π^(h/2); zero
/// coefficients are never stored, so equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExactScalar {
    terms: BTreeMap<i32, GaussRat>,
}

impl ExactScalar {
    pub fn zero() -> Self {
        ExactScalar {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        ExactScalar::from_int(1)
    }

    /// The imaginary unit i = √−1.
    pub fn i() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(0, GaussRat::i());
        ExactScalar { terms }
    }

    /// i^s for any integer s (period 4).
    pub fn i_pow(s: i64) -> Self {
        match s.rem_euclid(4) {
            0 => ExactScalar::one(),
            1 => ExactScalar::i(),
            2 => -ExactScalar::one(),
            _ => -ExactScalar::i(),
        }
    }

    pub fn from_int(v: i64) -> Self {
        ExactScalar::from_rat(Rat::from_integer(BigInt::from(v)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        ExactScalar::from_rat(Rat::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_rat(r: Rat) -> Self {
        let mut s = ExactScalar::zero();
        s.add_term(0, GaussRat::from_rat(r));
        s
    }

    pub fn from_bigint(v: BigInt) -> Self {
        ExactScalar::from_rat(Rat::from_integer(v))
    }

    /// π^(h/2) where the argument is twice the π-exponent.
    pub fn pi_pow_half(h: i32) -> Self {
        let mut s = ExactScalar::zero();
        s.add_term(h, GaussRat::one());
        s
    }

    /// π^k for integer k.
    pub fn pi_pow(k: i32) -> Self {
        ExactScalar::pi_pow_half(2 * k)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self == &ExactScalar::one()
    }

    /// True when the scalar has no imaginary component.
    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.im.is_zero())
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &GaussRat)> {
        self.terms.iter().map(|(h, c)| (*h, c))
    }

    fn add_term(&mut self, h: i32, coeff: GaussRat) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(h) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&coeff);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn scale_rat(&self, r: &Rat) -> Self {
        self.scale(&GaussRat::from_rat(r.clone()))
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        let mut out = ExactScalar::zero();
        for (h, coeff) in &self.terms {
            out.add_term(*h, coeff.mul(c));
        }
        out
    }

    /// Multiply by π^(h/2).
    pub fn shift_pi(&self, h: i32) -> Self {
        let mut out = ExactScalar::zero();
        for (k, coeff) in &self.terms {
            out.add_term(k + h, coeff.clone());
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = ExactScalar::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Exact division; `None` when `self` is not a multiple of `other` in the
    /// Laurent ring (or `other` is zero).
    pub fn div_exact(&self, other: &ExactScalar) -> Option<ExactScalar> {
        if other.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(ExactScalar::zero());
        }
        // Shift both into plain polynomials in x = π^(1/2).
        let a_min = *self.terms.keys().next().unwrap();
        let b_min = *other.terms.keys().next().unwrap();
        let a_deg = (*self.terms.keys().last().unwrap() - a_min) as usize;
        let b_deg = (*other.terms.keys().last().unwrap() - b_min) as usize;
        if a_deg < b_deg {
            return None;
        }
        let mut num: Vec<GaussRat> = vec![GaussRat::zero(); a_deg + 1];
        for (h, c) in &self.terms {
            num[(h - a_min) as usize] = c.clone();
        }
        let mut den: Vec<GaussRat> = vec![GaussRat::zero(); b_deg + 1];
        for (h, c) in &other.terms {
            den[(h - b_min) as usize] = c.clone();
        }
        let lead_inv = den[b_deg].inv()?;
        let mut quot: Vec<GaussRat> = vec![GaussRat::zero(); a_deg - b_deg + 1];
        for d in (0..=a_deg - b_deg).rev() {
            let q = num[d + b_deg].mul(&lead_inv);
            if q.is_zero() {
                continue;
            }
            for (j, dc) in den.iter().enumerate() {
                let delta = q.mul(dc).neg();
                num[d + j] = num[d + j].add(&delta);
            }
            quot[d] = q;
        }
        if num.iter().any(|c| !c.is_zero()) {
            return None;
        }
        let mut out = ExactScalar::zero();
        for (d, c) in quot.into_iter().enumerate() {
            out.add_term(a_min - b_min + d as i32, c);
        }
        Some(out)
    }

    /// Floating value of a real scalar; `None` when an imaginary part remains.
    pub fn to_f64(&self) -> Option<f64> {
        if !self.is_real() {
            return None;
        }
        Some(self.to_complex_f64().0)
    }

    /// (re, im) floating approximation.
    pub fn to_complex_f64(&self) -> (f64, f64) {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let mut re = 0.0;
        let mut im = 0.0;
        for (h, c) in &self.terms {
            let p = sqrt_pi.powi(*h);
            re += c.re.to_f64().unwrap_or(f64::NAN) * p;
            im += c.im.to_f64().unwrap_or(f64::NAN) * p;
        }
        (re, im)
    }

    /// Lossless text form, e.g. `3/4 * pi^(1/2) + i*1/2`.
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (h, c)) in self.terms.iter().enumerate() {
            let (body, negative) = render_term(*h, c);
            if idx == 0 {
                if negative {
                    out.push('-');
                }
            } else if negative {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            out.push_str(&body);
        }
        out
    }

    /// Parse the output of [`ExactScalar::render`].
    pub fn parse(text: &str) -> Result<ExactScalar, ExactError> {
        parse_scalar(text)
    }
}

fn rat_str(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Renders |term| and reports whether the leading sign is negative.
fn render_term(h: i32, c: &GaussRat) -> (String, bool) {
    let mut negative = false;
    let coeff = if c.im.is_zero() {
        let mut r = c.re.clone();
        if r.is_negative() {
            negative = true;
            r = -r;
        }
        if r.is_one() && h != 0 {
            String::new()
        } else {
            rat_str(&r)
        }
    } else if c.re.is_zero() {
        let mut r = c.im.clone();
        if r.is_negative() {
            negative = true;
            r = -r;
        }
        format!("i*{}", rat_str(&r))
    } else if c.im.is_negative() {
        format!("({} - i*{})", rat_str(&c.re), rat_str(&-c.im.clone()))
    } else {
        format!("({} + i*{})", rat_str(&c.re), rat_str(&c.im))
    };
    let power = match h.cmp(&0) {
        Ordering::Equal => String::new(),
        _ => {
            if h % 2 == 0 {
                format!("pi^{}", h / 2)
            } else {
                format!("pi^({}/2)", h)
            }
        }
    };
    let body = match (coeff.is_empty(), power.is_empty()) {
        (true, true) => "1".to_string(),
        (true, false) => power,
        (false, true) => coeff,
        (false, false) => format!("{} * {}", coeff, power),
    };
    (body, negative)
}

fn parse_rat(text: &str) -> Result<Rat, ExactError> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let n = BigInt::from_str(num).map_err(|e| ExactError::Parse(format!("{e}: {num}")))?;
    let d = BigInt::from_str(den).map_err(|e| ExactError::Parse(format!("{e}: {den}")))?;
    if d.is_zero() {
        return Err(ExactError::Parse("zero denominator".into()));
    }
    Ok(Rat::new(n, d))
}

fn parse_factor(text: &str) -> Result<(GaussRat, i32), ExactError> {
    // One term: [coeff][ * ]pi^(h/2) | coeff | pi power alone.
    let text = text.trim();
    let (coeff_part, pow_part) = match text.find("pi") {
        Some(pos) => {
            let c = text[..pos].trim().trim_end_matches('*').trim();
            (c, Some(text[pos..].trim()))
        }
        None => (text, None),
    };
    let h = match pow_part {
        None => 0,
        Some(p) => {
            let rest = p
                .strip_prefix("pi")
                .ok_or_else(|| ExactError::Parse(p.into()))?;
            if rest.is_empty() {
                2
            } else {
                let rest = rest
                    .strip_prefix('^')
                    .ok_or_else(|| ExactError::Parse(p.into()))?;
                if let Some(inner) = rest.strip_prefix('(') {
                    let inner = inner
                        .strip_suffix(')')
                        .ok_or_else(|| ExactError::Parse(p.into()))?;
                    let (n, d) = inner
                        .split_once('/')
                        .ok_or_else(|| ExactError::Parse(p.into()))?;
                    if d.trim() != "2" {
                        return Err(ExactError::Parse(p.into()));
                    }
                    n.trim()
                        .parse::<i32>()
                        .map_err(|e| ExactError::Parse(e.to_string()))?
                } else {
                    2 * rest
                        .trim()
                        .parse::<i32>()
                        .map_err(|e| ExactError::Parse(e.to_string()))?
                }
            }
        }
    };
    let coeff = parse_coeff(coeff_part)?;
    Ok((coeff, h))
}

fn parse_coeff(text: &str) -> Result<GaussRat, ExactError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(GaussRat::one());
    }
    if let Some(inner) = text.strip_prefix('(') {
        let inner = inner
            .strip_suffix(')')
            .ok_or_else(|| ExactError::Parse(text.into()))?;
        // (a + i*b) or (a - i*b)
        let (split, neg_im) = match inner.rfind(" + i*") {
            Some(p) => (p, false),
            None => (
                inner
                    .rfind(" - i*")
                    .ok_or_else(|| ExactError::Parse(text.into()))?,
                true,
            ),
        };
        let re = parse_rat(&inner[..split])?;
        let im = parse_rat(&inner[split + 5..])?;
        return Ok(GaussRat {
            re,
            im: if neg_im { -im } else { im },
        });
    }
    if let Some(rest) = text.strip_prefix("i*") {
        return Ok(GaussRat {
            re: Rat::zero(),
            im: parse_rat(rest)?,
        });
    }
    if text == "i" {
        return Ok(GaussRat::i());
    }
    Ok(GaussRat::from_rat(parse_rat(text)?))
}

fn parse_scalar(text: &str) -> Result<ExactScalar, ExactError> {
    let text = text.trim();
    if text == "0" {
        return Ok(ExactScalar::zero());
    }
    // Split on top-level " + " / " - "; '(' never nests in this grammar.
    let mut segments: Vec<(i64, &str)> = Vec::new();
    let mut depth = 0usize;
    let bytes = text.as_bytes();
    let mut start = 0usize;
    let mut sign = 1i64;
    for i in 0..bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b'+' | b'-'
                if depth == 0
                    && i > start
                    && i + 1 < bytes.len()
                    && bytes[i - 1] == b' '
                    && bytes[i + 1] == b' ' =>
            {
                segments.push((sign, &text[start..i]));
                sign = if bytes[i] == b'-' { -1 } else { 1 };
                start = i + 2;
            }
            _ => {}
        }
    }
    segments.push((sign, &text[start..]));
    let mut out = ExactScalar::zero();
    for (sign, seg) in segments {
        let seg = seg.trim();
        let (seg, lead_neg) = match seg.strip_prefix('-') {
            Some(rest) => (rest.trim_start(), true),
            None => (seg, false),
        };
        let (coeff, h) = parse_factor(seg)?;
        let signed = if (sign < 0) ^ lead_neg {
            coeff.neg()
        } else {
            coeff
        };
        out.add_term(h, signed);
    }
    Ok(out)
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Add for &ExactScalar {
    type Output = ExactScalar;
    fn add(self, other: &ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        for (h, c) in &other.terms {
            out.add_term(*h, c.clone());
        }
        out
    }
}

impl Add for ExactScalar {
    type Output = ExactScalar;
    fn add(self, other: ExactScalar) -> ExactScalar {
        &self + &other
    }
}

impl AddAssign<&ExactScalar> for ExactScalar {
    fn add_assign(&mut self, other: &ExactScalar) {
        for (h, c) in &other.terms {
            self.add_term(*h, c.clone());
        }
    }
}

impl Sub for &ExactScalar {
    type Output = ExactScalar;
    fn sub(self, other: &ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        for (h, c) in &other.terms {
            out.add_term(*h, c.neg());
        }
        out
    }
}

impl Sub for ExactScalar {
    type Output = ExactScalar;
    fn sub(self, other: ExactScalar) -> ExactScalar {
        &self - &other
    }
}

impl SubAssign<&ExactScalar> for ExactScalar {
    fn sub_assign(&mut self, other: &ExactScalar) {
        for (h, c) in &other.terms {
            self.add_term(*h, c.neg());
        }
    }
}

impl Mul for &ExactScalar {
    type Output = ExactScalar;
    fn mul(self, other: &ExactScalar) -> ExactScalar {
        let mut out = ExactScalar::zero();
        for (h1, c1) in &self.terms {
            for (h2, c2) in &other.terms {
                out.add_term(h1 + h2, c1.mul(c2));
            }
        }
        out
    }
}

impl Mul for ExactScalar {
    type Output = ExactScalar;
    fn mul(self, other: ExactScalar) -> ExactScalar {
        &self * &other
    }
}

impl MulAssign<&ExactScalar> for ExactScalar {
    fn mul_assign(&mut self, other: &ExactScalar) {
        *self = &*self * other;
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        let mut out = ExactScalar::zero();
        for (h, c) in &self.terms {
            out.add_term(*h, c.neg());
        }
        out
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        -&self
    }
}

#[derive(Serialize, Deserialize)]
struct TermDto {
    pihalf: i32,
    re: [String; 2],
    im: [String; 2],
}

#[derive(Serialize, Deserialize)]
struct ScalarDto {
    terms: Vec<TermDto>,
}

impl Serialize for ExactScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let dto = ScalarDto {
            terms: self
                .terms
                .iter()
                .map(|(h, c)| TermDto {
                    pihalf: *h,
                    re: [c.re.numer().to_string(), c.re.denom().to_string()],
                    im: [c.im.numer().to_string(), c.im.denom().to_string()],
                })
                .collect(),
        };
        dto.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let dto = ScalarDto::deserialize(deserializer)?;
        let mut out = ExactScalar::zero();
        for t in dto.terms {
            let parse = |s: &str| BigInt::from_str(s).map_err(D::Error::custom);
            let re = Rat::new(parse(&t.re[0])?, parse(&t.re[1])?);
            let im = Rat::new(parse(&t.im[0])?, parse(&t.im[1])?);
            out.add_term(t.pihalf, GaussRat { re, im });
        }
        Ok(out)
    }
}

/// n! as a big integer; n must be small enough to enumerate.
pub fn factorial(n: u64) -> BigInt {
    let mut out = BigInt::one();
    for k in 2..=n {
        out *= BigInt::from(k);
    }
    out
}

/// Binomial coefficient C(n, k), zero outside 0 ≤ k ≤ n.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || k > n || n < 0 {
        return BigInt::zero();
    }
    let k = k.min(n - k) as u64;
    let mut out = BigInt::one();
    for j in 0..k {
        out = out * BigInt::from(n as u64 - j) / BigInt::from(j + 1);
    }
    out
}

pub fn binomial_scalar(n: i64, k: i64) -> ExactScalar {
    ExactScalar::from_bigint(binomial(n, k))
}

/// Γ at a positive half-integer: Γ(m) = (m−1)!, Γ(m+1/2) = (2m)!/(4^m m!)·√π.
pub fn gamma_half(x: HalfInteger) -> Result<ExactScalar, ExactError> {
    let twice = x.twice();
    if twice <= 0 {
        return Err(ExactError::GammaDomain(twice));
    }
    if twice % 2 == 0 {
        let m = (twice / 2) as u64;
        Ok(ExactScalar::from_bigint(factorial(m - 1)))
    } else {
        // twice = 2m+1, argument m + 1/2
        let m = ((twice - 1) / 2) as u64;
        let num = factorial(2 * m);
        let den = BigInt::from(4u32).pow(m as u32) * factorial(m);
        let r = Rat::new(num, den);
        Ok(ExactScalar::from_rat(r).shift_pi(1))
    }
}

/// κ_m = π^(m/2)/Γ(m/2+1): volume of the unit ball in ℝ^m, κ_0 = 1.
pub fn kappa(m: i64) -> Result<ExactScalar, ExactError> {
    if m < 0 {
        return Err(ExactError::IndexDomain(format!("kappa({m})")));
    }
    let g = gamma_half(HalfInteger(m + 2))?;
    ExactScalar::pi_pow_half(m as i32)
        .div_exact(&g)
        .ok_or(ExactError::InexactDivision)
}

/// ω_m = m·κ_m: surface volume of S^(m−1) in ℝ^m.
pub fn omega(m: i64) -> Result<ExactScalar, ExactError> {
    if m < 1 {
        return Err(ExactError::IndexDomain(format!("omega({m})")));
    }
    Ok(ExactScalar::from_int(m) * kappa(m)?)
}

/// Flag coefficient [n; k] = C(n,k)·κ_n/(κ_k κ_{n−k}).
pub fn flag(n: i64, k: i64) -> Result<ExactScalar, ExactError> {
    if k < 0 || k > n {
        return Err(ExactError::IndexDomain(format!("flag({n},{k})")));
    }
    let num = binomial_scalar(n, k) * kappa(n)?;
    let den = kappa(k)? * kappa(n - k)?;
    num.div_exact(&den).ok_or(ExactError::InexactDivision)
}

/// Γ(p)/Γ(q) for rational p, q with p − q ∈ ℤ, as an exact rational.
///
/// Returns `None` when a pole or a zero denominator is hit; used for the
/// hypergeometric identity checks where the dimension is treated as a free
/// rational parameter.
pub fn gamma_ratio_rat(p: &Rat, q: &Rat) -> Option<Rat> {
    let diff = p - q;
    if !diff.denom().is_one() {
        return None;
    }
    let d = diff.numer().to_i64()?;
    let mut out = Rat::one();
    if d >= 0 {
        // Γ(q+d)/Γ(q) = q(q+1)...(q+d−1)
        for j in 0..d {
            let f = q + Rat::from_integer(BigInt::from(j));
            if f.is_zero() {
                return None;
            }
            out *= f;
        }
    } else {
        for j in 0..(-d) {
            let f = p + Rat::from_integer(BigInt::from(j));
            if f.is_zero() {
                return None;
            }
            out /= f;
        }
    }
    Some(out)
}
