//! Canonical representation behind [`normalize`](super::normalize).
//!
//! An expression is held as a generalized polynomial: a map from monomials to
//! nonzero rational coefficients. A monomial is a product of atoms raised to
//! rational exponents times at most one `exp(arg)` factor. Atoms are
//! variables, named constants, fractional powers of positive rationals,
//! logarithms, and non-monomial bases (sums that could not be expanded).
//!
//! Sums raised to negative or fractional powers become `Base` atoms of a
//! primitive polynomial (monomial content removed, leading coefficient one).
//! [`together`] clears those denominators, expands the numerator, and cancels
//! common `Base` factors by exact division, which is what lets identities such
//! as `(x+1)^2 / (x^2 + 2x + 1) = 1` collapse.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{eval, Bindings, Expr, Rational, EXPANSION_CAP};

type Q = Rational;

const DIVISION_STEP_LIMIT: usize = 4096;
const TOGETHER_DEPTH_LIMIT: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Atom {
    Var(String),
    Named(String),
    /// Positive rational raised to a fractional exponent in `(0, 1)`.
    Root(Q),
    Log(Poly),
    /// Primitive multi-term polynomial, or a negative constant, used as the
    /// base of a power that is not expanded.
    Base(Poly),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Mono {
    pub factors: BTreeMap<Atom, Q>,
    /// Argument of the single `exp` factor, never zero when present.
    pub exp: Option<Poly>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Poly {
    pub terms: BTreeMap<Mono, Q>,
}

fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn floor_q(q: &Q) -> BigInt {
    q.floor().to_integer()
}

/// Rewrites `r^e` over the smallest possible base: `4^(1/4) = 2^(1/2)`.
fn reduce_root(mut r: Q, mut e: Q) -> (Q, Q) {
    loop {
        let mut reduced = false;
        for d in [2u32, 3, 5, 7] {
            if let Some(s) = rational_root(&r, d) {
                if s != r {
                    r = s;
                    e *= Q::from_integer(d.into());
                    reduced = true;
                    break;
                }
            }
        }
        if !reduced {
            return (r, e);
        }
    }
}

/// Integer power of a rational, `None` for `0^negative`.
fn q_powi(base: &Q, k: &BigInt) -> Option<Q> {
    if base.is_zero() {
        return if k.is_negative() {
            None
        } else if k.is_zero() {
            Some(Q::one())
        } else {
            Some(Q::zero())
        };
    }
    let e = k.abs().to_u32()?;
    let p = num_traits::pow::pow(base.clone(), e as usize);
    Some(if k.is_negative() { p.recip() } else { p })
}

/// Exact `k`-th root of a non-negative rational, when it exists.
pub(crate) fn rational_root(q: &Q, k: u32) -> Option<Q> {
    if q.is_negative() {
        return None;
    }
    let root = |n: &BigInt| {
        let r = n.nth_root(k);
        if num_traits::pow::pow(r.clone(), k as usize) == *n {
            Some(r)
        } else {
            None
        }
    };
    Some(Q::new(root(q.numer())?, root(q.denom())?))
}

impl Mono {
    pub fn one() -> Mono {
        Mono::default()
    }

    pub fn atom(a: Atom, e: Q) -> (Q, Mono) {
        let mut m = Mono::one();
        m.factors.insert(a, e);
        m.fold()
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty() && self.exp.is_none()
    }

    /// The marker `0^-1` standing for any value undefined over the reals.
    pub fn undefined() -> Mono {
        let mut m = Mono::one();
        m.factors.insert(Atom::Base(Poly::zero()), -Q::one());
        m
    }

    pub fn is_undefined(&self) -> bool {
        self.factors.len() == 1
            && self.exp.is_none()
            && self.factors.get(&Atom::Base(Poly::zero())) == Some(&-Q::one())
    }

    /// Folds constant atoms: integer parts of constant powers go into the
    /// coefficient, real odd roots of negative constants become signed
    /// `Root`s and perfect powers under a root are extracted.
    fn fold(mut self) -> (Q, Mono) {
        let poisoned = self.exp.as_ref().is_some_and(Poly::is_undefined)
            || self.factors.keys().any(|a| match a {
                Atom::Log(u) | Atom::Base(u) => u.is_undefined(),
                _ => false,
            });
        if poisoned {
            return (Q::one(), Mono::undefined());
        }
        let mut coeff = Q::one();
        // a base kept whole for its sign splits once the root becomes odd
        let signed: Vec<(Poly, Q)> = self
            .factors
            .iter()
            .filter_map(|(a, e)| match a {
                Atom::Base(b)
                    if b.as_constant().is_none()
                        && !e.is_integer()
                        && e.denom().is_odd()
                        && (b.single_term().is_some() || b.primitive().0.is_negative()) =>
                {
                    Some((b.clone(), e.clone()))
                }
                _ => None,
            })
            .collect();
        for (b, e) in signed {
            if let Some((c, m)) = pow(&b, &e).single_term() {
                self.factors.remove(&Atom::Base(b));
                let (k, merged) = self.mul(&m);
                coeff *= c * k;
                self = merged;
            }
        }
        let consts: Vec<(Q, Q)> = self
            .factors
            .iter()
            .filter_map(|(a, e)| match a {
                Atom::Base(b) => b.as_constant().map(|c| (c, e.clone())),
                _ => None,
            })
            .collect();
        for (c, e) in consts {
            self.factors.remove(&Atom::Base(Poly::constant(c.clone())));
            if c.is_zero() {
                if e.is_positive() {
                    return (Q::zero(), Mono::one());
                }
                return (Q::one(), Mono::undefined());
            }
            let k = floor_q(&e);
            let frac = &e - Q::from_integer(k.clone());
            if let Some(p) = q_powi(&c, &k) {
                coeff *= p;
            }
            if frac.is_zero() {
                continue;
            }
            if c.is_negative() && frac.denom().is_even() {
                return (Q::one(), Mono::undefined());
            }
            let mag = c.abs();
            if c.is_negative() && frac.numer().is_odd() {
                coeff = -coeff;
            }
            let entry = self.factors.entry(Atom::Root(mag)).or_insert_with(Q::zero);
            *entry += frac;
        }
        let roots: Vec<(Q, Q)> = self
            .factors
            .iter()
            .filter_map(|(a, e)| match a {
                Atom::Root(r) => Some((r.clone(), e.clone())),
                _ => None,
            })
            .collect();
        let mut merged: BTreeMap<Q, Q> = BTreeMap::new();
        for (r, e) in roots {
            self.factors.remove(&Atom::Root(r.clone()));
            if r.is_one() {
                continue;
            }
            let (r, e) = reduce_root(r, e);
            *merged.entry(r).or_insert_with(Q::zero) += e;
        }
        for (r, e) in merged {
            let k = floor_q(&e);
            let frac = &e - Q::from_integer(k.clone());
            if let Some(p) = q_powi(&r, &k) {
                coeff *= p;
            }
            if !frac.is_zero() {
                self.factors.insert(Atom::Root(r), frac);
            }
        }
        (coeff, self)
    }

    pub fn mul(&self, other: &Mono) -> (Q, Mono) {
        let mut m = self.clone();
        for (a, e) in &other.factors {
            let entry = m.factors.entry(a.clone()).or_insert_with(Q::zero);
            *entry += e;
            if entry.is_zero() {
                m.factors.remove(a);
            }
        }
        m.exp = match (m.exp.take(), &other.exp) {
            (None, None) => None,
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b.clone()),
            (Some(a), Some(b)) => {
                let s = a.add(b);
                (!s.is_zero()).then_some(s)
            }
        };
        m.fold()
    }

    pub fn pow(&self, q: &Q) -> (Q, Mono) {
        if q.is_zero() {
            return (Q::one(), Mono::one());
        }
        let mut m = Mono::one();
        for (a, e) in &self.factors {
            m.factors.insert(a.clone(), e * q);
        }
        m.exp = self.exp.as_ref().map(|arg| arg.scale(q));
        m.fold()
    }

    pub fn inv(&self) -> (Q, Mono) {
        self.pow(&q_int(-1))
    }

    pub fn depends_on(&self, var: &str) -> bool {
        self.factors.keys().any(|a| a.depends_on(var))
            || self.exp.as_ref().is_some_and(|p| p.depends_on(var))
    }
}

impl Atom {
    pub fn depends_on(&self, var: &str) -> bool {
        match self {
            Atom::Var(v) => v == var,
            Atom::Named(_) | Atom::Root(_) => false,
            Atom::Log(p) | Atom::Base(p) => p.depends_on(var),
        }
    }
}

/// Total order on monomials compatible with multiplication: lexicographic on
/// atom exponents, then on the `exp` argument by sign of the difference.
pub(crate) fn cmp_mono(a: &Mono, b: &Mono) -> Ordering {
    let zero = Q::zero();
    let mut ia = a.factors.iter().peekable();
    let mut ib = b.factors.iter().peekable();
    loop {
        let ord = match (ia.peek(), ib.peek()) {
            (None, None) => break,
            (Some((_, va)), None) => {
                let r = (*va).cmp(&zero);
                ia.next();
                r
            }
            (None, Some((_, vb))) => {
                let r = zero.cmp(vb);
                ib.next();
                r
            }
            (Some((ka, va)), Some((kb, vb))) => match ka.cmp(kb) {
                Ordering::Equal => {
                    let r = (*va).cmp(vb);
                    ia.next();
                    ib.next();
                    r
                }
                Ordering::Less => {
                    let r = (*va).cmp(&zero);
                    ia.next();
                    r
                }
                Ordering::Greater => {
                    let r = zero.cmp(vb);
                    ib.next();
                    r
                }
            },
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    let diff = match (&a.exp, &b.exp) {
        (None, None) => return Ordering::Equal,
        (Some(x), None) => x.clone(),
        (None, Some(y)) => y.neg(),
        (Some(x), Some(y)) => x.sub(y),
    };
    match diff.lead() {
        None => Ordering::Equal,
        Some((_, c)) => c.cmp(&Q::zero()),
    }
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn constant(q: Q) -> Poly {
        let mut p = Poly::zero();
        p.add_term(q, Mono::one());
        p
    }

    pub fn from_mono(c: Q, m: Mono) -> Poly {
        let mut p = Poly::zero();
        p.add_term(c, m);
        p
    }

    pub fn atom(a: Atom) -> Poly {
        Poly::atom_pow(a, Q::one())
    }

    pub fn atom_pow(a: Atom, e: Q) -> Poly {
        let (c, m) = Mono::atom(a, e);
        Poly::from_mono(c, m)
    }

    pub fn var(name: &str) -> Poly {
        Poly::atom(Atom::Var(name.to_string()))
    }

    pub fn exp_of(arg: Poly) -> Poly {
        if arg.is_zero() {
            return Poly::one();
        }
        if arg.is_undefined() {
            return arg;
        }
        Poly::from_mono(
            Q::one(),
            Mono {
                factors: BTreeMap::new(),
                exp: Some(arg),
            },
        )
    }

    pub fn undefined() -> Poly {
        Poly::from_mono(Q::one(), Mono::undefined())
    }

    /// Undefined terms absorb everything they are added to.
    pub fn is_undefined(&self) -> bool {
        self.terms.keys().any(Mono::is_undefined)
    }

    pub fn add_term(&mut self, c: Q, m: Mono) {
        if c.is_zero() || self.is_undefined() {
            return;
        }
        if m.is_undefined() {
            self.terms.clear();
            self.terms.insert(m, Q::one());
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn single_term(&self) -> Option<(Q, Mono)> {
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next()?;
            Some((c.clone(), m.clone()))
        } else {
            None
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut p = self.clone();
        for (m, c) in &other.terms {
            p.add_term(c.clone(), m.clone());
        }
        p
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        self.scale(&q_int(-1))
    }

    pub fn scale(&self, q: &Q) -> Poly {
        if q.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * q)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut p = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let (k, m) = m1.mul(m2);
                p.add_term(c1 * c2 * k, m);
            }
        }
        p
    }

    pub fn mul_mono(&self, c: &Q, m: &Mono) -> Poly {
        let mut p = Poly::zero();
        for (m1, c1) in &self.terms {
            let (k, mm) = m1.mul(m);
            p.add_term(c1 * c * k, mm);
        }
        p
    }

    fn powi_expand(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn depends_on(&self, var: &str) -> bool {
        self.terms.keys().any(|m| m.depends_on(var))
    }

    /// `r` with `r^k = self` and a positive leading coefficient, if it exists.
    fn exact_root(&self, k: u32) -> Option<Poly> {
        let (lm, lc) = self.lead()?;
        let (tm, _) = self.trail()?;
        let inv_k = Q::new(BigInt::one(), BigInt::from(k));
        let (c0, m0) = lm.pow(&inv_k);
        let lead = Poly::from_mono(rational_root(lc, k)? * c0, m0.clone());
        if lead.powi_expand(k) != Poly::from_mono(lc.clone(), lm.clone()) {
            return None;
        }
        let (_, lower) = tm.pow(&inv_k);
        // R^k = L^k + k L^(k-1) t + ..., so each new term is lead(rest) / (k L^(k-1))
        let (dc, dm) = lead.powi_expand(k - 1).scale(&q_int(k.into())).single_term()?;
        let (dk, dm_inv) = dm.inv();
        let mut root = lead;
        for _ in 0..=self.terms.len() {
            let rest = self.sub(&root.powi_expand(k));
            let Some((rm, rc)) = rest.lead() else {
                return Some(root);
            };
            let (k2, t) = rm.mul(&dm_inv);
            if cmp_mono(&t, &lower) == Ordering::Less || cmp_mono(&t, &m0) != Ordering::Less {
                return None;
            }
            root.add_term(rc / &dc * &dk * k2, t);
        }
        None
    }

    /// Writes `self = r^k` with `k` as large as possible (at most the
    /// expansion cap).
    fn perfect_power(&self) -> (Poly, u32) {
        for k in (2..=EXPANSION_CAP).rev() {
            if self.terms.len() < k as usize + 1 {
                continue;
            }
            if let Some(r) = self.exact_root(k) {
                return (r, k);
            }
        }
        (self.clone(), 1)
    }

    /// Largest term under [`cmp_mono`].
    pub fn lead(&self) -> Option<(&Mono, &Q)> {
        self.terms.iter().max_by(|a, b| cmp_mono(a.0, b.0))
    }

    pub fn trail(&self) -> Option<(&Mono, &Q)> {
        self.terms.iter().min_by(|a, b| cmp_mono(a.0, b.0))
    }

    /// Splits `self = content * mono * prim` with `prim` carrying no common
    /// monomial factor and a leading coefficient of one.
    pub fn primitive(&self) -> (Q, Mono, Poly) {
        let mut gcd = Mono::one();
        if let Some((first, _)) = self.terms.iter().next() {
            let mut atoms: BTreeMap<Atom, Q> = BTreeMap::new();
            for m in self.terms.keys() {
                for a in m.factors.keys() {
                    atoms.entry(a.clone()).or_insert_with(Q::zero);
                }
            }
            for (a, min) in atoms.iter_mut() {
                *min = self
                    .terms
                    .keys()
                    .map(|m| m.factors.get(a).cloned().unwrap_or_else(Q::zero))
                    .min()
                    .unwrap_or_else(Q::zero);
            }
            gcd.factors = atoms.into_iter().filter(|(_, e)| !e.is_zero()).collect();
            // smallest exp argument under the group order
            let mut min_exp = first.exp.clone();
            for m in self.terms.keys() {
                let a = Mono {
                    factors: BTreeMap::new(),
                    exp: m.exp.clone(),
                };
                let b = Mono {
                    factors: BTreeMap::new(),
                    exp: min_exp.clone(),
                };
                if cmp_mono(&a, &b) == Ordering::Less {
                    min_exp = m.exp.clone();
                }
            }
            gcd.exp = min_exp;
        }
        let (k, inv) = gcd.inv();
        let reduced = self.mul_mono(&k, &inv);
        let lc = reduced.lead().map(|(_, c)| c.clone()).unwrap_or_else(Q::one);
        let prim = reduced.scale(&lc.recip());
        (lc, gcd, prim)
    }

    /// Exact quotient `self / divisor` in the Laurent ring, if it exists.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        if self.is_zero() {
            return Some(Poly::zero());
        }
        // the lowest and highest degree in each coordinate are additive, which
        // bounds every monomial of an exact quotient
        let (nb, db) = (degree_bounds(self), degree_bounds(divisor));
        let mut window: BTreeMap<Coord, (Q, Q)> = BTreeMap::new();
        for key in nb.keys().chain(db.keys()) {
            let zero = (Q::zero(), Q::zero());
            let (nlo, nhi) = nb.get(key).unwrap_or(&zero);
            let (dlo, dhi) = db.get(key).unwrap_or(&zero);
            let (lo, hi) = (nlo - dlo, nhi - dhi);
            if lo > hi {
                return None;
            }
            window.insert(key.clone(), (lo, hi));
        }
        let admissible = |m: &Mono| {
            let coords = coordinates(m);
            window.iter().all(|(k, (lo, hi))| {
                let v = coords.get(k).cloned().unwrap_or_else(Q::zero);
                *lo <= v && v <= *hi
            }) && coords.keys().all(|k| window.contains_key(k))
        };
        let (lbm, lbc) = divisor.lead()?;
        let (tbm, _) = divisor.trail()?;
        let (tnm, _) = self.trail()?;
        let (lbm, lbc, tbm) = (lbm.clone(), lbc.clone(), tbm.clone());
        let (_, tb_inv) = tbm.inv();
        let (_, lower) = tnm.mul(&tb_inv);
        let (lk, lb_inv) = lbm.inv();
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        for _ in 0..DIVISION_STEP_LIMIT {
            let (lrm, lrc) = match rem.lead() {
                None => return Some(quot),
                Some((m, c)) => (m.clone(), c.clone()),
            };
            let (k, qm) = lrm.mul(&lb_inv);
            if cmp_mono(&qm, &lower) == Ordering::Less || !admissible(&qm) {
                return None;
            }
            let qc = &lrc / &lbc * &lk * k;
            rem = rem.sub(&divisor.mul_mono(&qc, &qm));
            quot.add_term(qc, qm);
        }
        None
    }
}

/// A degree coordinate of a monomial: an atom exponent or the coefficient
/// of one monomial inside the `exp` argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Coord {
    Atom(Atom),
    Exp(Mono),
}

fn coordinates(m: &Mono) -> BTreeMap<Coord, Q> {
    let mut out: BTreeMap<Coord, Q> = m.factors.iter().map(|(a, e)| (Coord::Atom(a.clone()), e.clone())).collect();
    if let Some(arg) = &m.exp {
        for (am, c) in &arg.terms {
            out.insert(Coord::Exp(am.clone()), c.clone());
        }
    }
    out
}

fn degree_bounds(p: &Poly) -> BTreeMap<Coord, (Q, Q)> {
    let all: Vec<BTreeMap<Coord, Q>> = p.terms.keys().map(coordinates).collect();
    let mut out: BTreeMap<Coord, (Q, Q)> = BTreeMap::new();
    for key in all.iter().flat_map(|c| c.keys()) {
        if out.contains_key(key) {
            continue;
        }
        let vals = all.iter().map(|c| c.get(key).cloned().unwrap_or_else(Q::zero));
        let lo = vals.clone().min().unwrap_or_else(Q::zero);
        let hi = vals.max().unwrap_or_else(Q::zero);
        out.insert(key.clone(), (lo, hi));
    }
    out
}

fn is_constant_poly(p: &Poly) -> bool {
    p.as_constant().is_some()
}

/// Rational constant raised to a rational power.
fn const_pow(c: &Q, q: &Q) -> Poly {
    if q.is_integer() {
        return match q_powi(c, &q.to_integer()) {
            Some(v) => Poly::constant(v),
            None => Poly::atom_pow(Atom::Base(Poly::constant(c.clone())), q.clone()),
        };
    }
    if c.is_zero() {
        return if q.is_positive() {
            Poly::zero()
        } else {
            Poly::atom_pow(Atom::Base(Poly::zero()), q.clone())
        };
    }
    let den = q.denom().clone();
    let num = q.numer().clone();
    let mut sign = Q::one();
    let mut mag = c.clone();
    if c.is_negative() {
        if den.is_even() {
            return Poly::atom_pow(Atom::Base(Poly::constant(c.clone())), q.clone());
        }
        mag = -mag;
        if num.is_odd() {
            sign = -sign;
        }
    }
    if let Some(d) = den.to_u32() {
        if let Some(r) = rational_root(&mag, d) {
            if let Some(v) = q_powi(&r, &num) {
                return Poly::constant(sign * v);
            }
        }
    }
    Poly::atom_pow(Atom::Root(mag), q.clone()).scale(&sign)
}

/// `base^q` for rational `q`.
pub(crate) fn pow(base: &Poly, q: &Q) -> Poly {
    if base.is_undefined() {
        return base.clone();
    }
    if q.is_zero() {
        return Poly::one();
    }
    if q.is_one() {
        return base.clone();
    }
    // non-constant factors are taken positive when a power is split; a
    // negative constant under an even root keeps the base whole
    let even_root = q.denom().is_even();
    if let Some((c, m)) = base.single_term() {
        if c.is_negative() && even_root && !m.is_one() {
            return Poly::atom_pow(Atom::Base(base.clone()), q.clone());
        }
        let (k, mq) = m.pow(q);
        return const_pow(&c, q).mul_mono(&k, &mq);
    }
    if base.is_zero() {
        return const_pow(&Q::zero(), q);
    }
    if q.is_integer() && q.is_positive() && q.to_integer() <= BigInt::from(EXPANSION_CAP) {
        return base.powi_expand(q.to_integer().to_u32().unwrap_or(0));
    }
    let (num, den) = together(base);
    if num.single_term().is_some() && den.is_empty() {
        return pow(&num, q);
    }
    let (content, g, prim) = num.primitive();
    if content.is_negative() && even_root {
        return Poly::atom_pow(Atom::Base(from_together(&num, &den)), q.clone());
    }
    let (k, gq) = g.pow(q);
    let mut out = const_pow(&content, q).mul_mono(&k, &gq);
    out = out.mul(&if prim.single_term().is_some() {
        pow(&prim, q)
    } else {
        pow_primitive(&prim, q)
    });
    for (b, kk) in den {
        out = out.mul(&Poly::atom_pow(Atom::Base(b), -(Q::from_integer(kk) * q)));
    }
    out
}

/// `exp(arg)` with `exp(q*log(u)) = u^q` extracted.
pub(crate) fn exp_poly(arg: &Poly) -> Poly {
    let mut out = Poly::one();
    let mut rest = Poly::zero();
    for (m, c) in &arg.terms {
        if m.exp.is_none() && m.factors.len() == 1 {
            if let Some((Atom::Log(u), e)) = m.factors.iter().next() {
                if e.is_one() {
                    out = out.mul(&pow(u, c));
                    continue;
                }
            }
        }
        rest.add_term(c.clone(), m.clone());
    }
    if rest.is_zero() {
        out
    } else {
        out.mul(&Poly::exp_of(rest))
    }
}

/// Trial-division bound for splitting `log` of integers into prime logs.
const LOG_FACTOR_LIMIT: u32 = 10_000;

/// `log n = sum e_p log p`, with any cofactor beyond the trial bound kept whole.
fn log_of_integer(n: &BigInt) -> Poly {
    let mut out = Poly::zero();
    let mut n = n.clone();
    let mut p = 2u32;
    while p <= LOG_FACTOR_LIMIT && BigInt::from(p) * BigInt::from(p) <= n {
        let bp = BigInt::from(p);
        let mut e = 0i64;
        while (&n % &bp).is_zero() {
            n /= &bp;
            e += 1;
        }
        if e > 0 {
            out = out.add(&Poly::atom(Atom::Log(Poly::constant(Q::from_integer(bp)))).scale(&q_int(e)));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > BigInt::one() {
        out = out.add(&Poly::atom(Atom::Log(Poly::constant(Q::from_integer(n)))));
    }
    out
}

fn log_of_positive_const(c: &Q) -> Poly {
    log_of_integer(c.numer()).sub(&log_of_integer(c.denom()))
}

/// Logarithm of `content * mono`, assuming `content > 0`.
fn log_monomial(content: &Q, m: &Mono) -> Poly {
    let mut out = log_of_positive_const(content);
    for (a, e) in &m.factors {
        let piece = match a {
            Atom::Named(n) if n == "e" => Poly::one(),
            Atom::Var(_) | Atom::Named(_) | Atom::Log(_) => {
                Poly::atom(Atom::Log(Poly::atom(a.clone())))
            }
            Atom::Root(r) => log_of_positive_const(r),
            Atom::Base(b) => match b.as_constant() {
                Some(_) => Poly::atom(Atom::Log(Poly::atom_pow(a.clone(), e.clone()))),
                None => Poly::atom(Atom::Log(b.clone())),
            },
        };
        let scale = match a {
            Atom::Base(b) if b.as_constant().is_some() => Q::one(),
            _ => e.clone(),
        };
        out = out.add(&piece.scale(&scale));
    }
    if let Some(arg) = &m.exp {
        out = out.add(arg);
    }
    out
}

/// `log(arg)` with products and powers expanded, assuming positivity.
pub(crate) fn log_poly(arg: &Poly) -> Poly {
    if arg.is_zero() || arg.is_undefined() {
        return Poly::undefined();
    }
    if let Some((c, m)) = arg.single_term() {
        if c.is_negative() {
            if m.is_one() {
                return Poly::undefined();
            }
            return Poly::atom(Atom::Log(arg.clone()));
        }
        return log_monomial(&c, &m);
    }
    let (content, g, prim) = arg.primitive();
    if content.is_negative() {
        return Poly::atom(Atom::Log(arg.clone()));
    }
    let logged = if prim.single_term().is_some() {
        log_poly(&prim)
    } else {
        let mut factors = Vec::new();
        split_factors(&prim, 1, &mut factors);
        factors.into_iter().fold(Poly::zero(), |acc, (f, m)| {
            acc.add(&Poly::atom(Atom::Log(f)).scale(&Q::from_integer(m.into())))
        })
    };
    log_monomial(&content, &g).add(&logged)
}

/// Denominator-cleared form: `p = num * prod(base^-k)`.
pub(crate) fn together(p: &Poly) -> (Poly, Vec<(Poly, BigInt)>) {
    let (mut num, mut den) = together_depth(p, 0);
    // refining moves monomial parts of bases into the numerator, which can
    // bring back integer powers of sums
    for _ in 0..TOGETHER_DEPTH_LIMIT {
        let (n, d) = refine_denominators(num, den);
        num = n;
        den = d;
        if !has_integer_part(&num) {
            break;
        }
        let (n, d) = together_depth(&num, 0);
        num = n;
        for (b, k) in d {
            match den.iter_mut().find(|(bb, _)| *bb == b) {
                Some((_, kk)) => *kk += k,
                None => den.push((b, k)),
            }
        }
    }
    let mut out = Vec::new();
    for (b, mut k) in den {
        while k.is_positive() {
            match num.div_exact(&b) {
                Some(qt) => {
                    num = qt;
                    k -= 1;
                }
                None => break,
            }
        }
        if k.is_positive() {
            out.push((b, k));
        }
    }
    if num.is_zero() {
        out.clear();
    }
    (num, out)
}

/// A factor shared by every coefficient of `p` viewed as a polynomial in one
/// of its atoms. Coefficients are tried smallest first, which finds the common
/// factor whenever it equals one of them.
fn content_factor(p: &Poly) -> Option<Poly> {
    let mut atoms: Vec<Atom> = p.terms.keys().flat_map(|m| m.factors.keys().cloned()).collect();
    atoms.sort();
    atoms.dedup();
    for a in atoms {
        let mut groups: BTreeMap<Q, Poly> = BTreeMap::new();
        for (m, c) in &p.terms {
            let e = m.factors.get(&a).cloned().unwrap_or_else(Q::zero);
            let mut rest = m.clone();
            rest.factors.remove(&a);
            groups.entry(e).or_default().add_term(c.clone(), rest);
        }
        if groups.len() < 2 {
            continue;
        }
        let smallest = groups.values().min_by(|x, y| x.terms.len().cmp(&y.terms.len()).then_with(|| x.cmp(y)))?;
        let (_, _, h) = smallest.primitive();
        if h.single_term().is_some() {
            continue;
        }
        if groups.values().all(|g| g.div_exact(&h).is_some()) {
            return Some(h);
        }
    }
    None
}

/// Splits a primitive multi-term polynomial into primitive factors with
/// multiplicities, using shared coefficients and perfect powers.
fn split_factors(p: &Poly, mult: u32, out: &mut Vec<(Poly, u32)>) {
    if let Some(h) = content_factor(p) {
        if let Some(r) = p.div_exact(&h) {
            split_factors(&h, mult, out);
            let (_, _, rp) = r.primitive();
            if rp.single_term().is_none() {
                split_factors(&rp, mult, out);
            }
            return;
        }
    }
    let (root, k) = p.perfect_power();
    if k > 1 {
        split_factors(&root, mult * k, out);
        return;
    }
    match out.iter_mut().find(|(f, _)| f == p) {
        Some((_, m)) => *m += mult,
        None => out.push((p.clone(), mult)),
    }
}

/// `prim^q` for a primitive multi-term polynomial, factor by factor.
fn pow_primitive(prim: &Poly, q: &Q) -> Poly {
    let mut factors = Vec::new();
    split_factors(prim, 1, &mut factors);
    factors.into_iter().fold(Poly::one(), |acc, (f, m)| {
        acc.mul(&Poly::atom_pow(Atom::Base(f), q * Q::from_integer(m.into())))
    })
}

/// Rewrites denominator bases so that none divides another, splitting
/// `B = C * Q` into `C * Q` whenever `C` is also a base.
fn refine_denominators(mut num: Poly, raw: Vec<(Poly, BigInt)>) -> (Poly, Vec<(Poly, BigInt)>) {
    let mut den: Vec<(Poly, BigInt)> = Vec::new();
    for (b, k) in raw {
        let (content, mono, prim) = b.primitive();
        let (c_inv, m_inv) = mono.pow(&-Q::from_integer(k.clone()));
        num = num.mul_mono(&(c_inv * q_powi(&content, &-k.clone()).unwrap_or_else(Q::one)), &m_inv);
        if prim.single_term().is_some() {
            continue;
        }
        let mut factors = Vec::new();
        split_factors(&prim, 1, &mut factors);
        for (f, m) in factors {
            let km = &k * BigInt::from(m);
            match den.iter_mut().find(|(bb, _)| *bb == f) {
                Some((_, kk)) => *kk += &km,
                None => den.push((f, km)),
            }
        }
    }
    let mut changed = true;
    let mut rounds = 0;
    while changed && rounds < TOGETHER_DEPTH_LIMIT * 4 {
        changed = false;
        rounds += 1;
        'outer: for i in 0..den.len() {
            for j in 0..den.len() {
                if i == j || den[i].0 == den[j].0 {
                    continue;
                }
                let Some(qt) = den[i].0.div_exact(&den[j].0) else {
                    continue;
                };
                if is_constant_poly(&qt) {
                    continue;
                }
                let (content, mono, prim) = qt.primitive();
                let (_, k) = den.remove(i);
                let kq = Q::from_integer(k.clone());
                // the denominator gains content * mono, so the numerator loses it
                let (c_inv, m_inv) = mono.pow(&-kq.clone());
                num = num.mul_mono(&(c_inv * q_powi(&content, &-k.clone()).unwrap_or_else(Q::one)), &m_inv);
                let cj = den[if j > i { j - 1 } else { j }].0.clone();
                for base in [cj, prim] {
                    match den.iter_mut().find(|(bb, _)| *bb == base) {
                        Some((_, kk)) => *kk += &k,
                        None => den.push((base, k.clone())),
                    }
                }
                changed = true;
                break 'outer;
            }
        }
    }
    (num, den)
}

fn expandable(b: &Poly) -> bool {
    !is_constant_poly(b)
}

/// Some non-constant base carries a negative or expandable integer power.
fn has_integer_part(p: &Poly) -> bool {
    let cap = BigInt::from(EXPANSION_CAP);
    p.terms.keys().any(|m| {
        m.factors.iter().any(|(a, e)| match a {
            Atom::Base(b) => {
                let fl = floor_q(e);
                expandable(b) && (fl.is_negative() || (fl.is_positive() && fl <= cap))
            }
            _ => false,
        })
    })
}

fn together_depth(p: &Poly, depth: usize) -> (Poly, Vec<(Poly, BigInt)>) {
    let cap = BigInt::from(EXPANSION_CAP);
    let mut kmax: BTreeMap<Poly, BigInt> = BTreeMap::new();
    for m in p.terms.keys() {
        for (a, e) in &m.factors {
            if let Atom::Base(b) = a {
                let fl = floor_q(e);
                if fl.is_negative() && expandable(b) {
                    let need = -fl;
                    let entry = kmax.entry(b.clone()).or_insert_with(BigInt::zero);
                    if need > *entry {
                        *entry = need;
                    }
                }
            }
        }
    }
    let mut num = Poly::zero();
    for (m, c) in &p.terms {
        let mut rest = Mono {
            factors: BTreeMap::new(),
            exp: m.exp.clone(),
        };
        let mut expanded = Poly::one();
        let mut factors = m.factors.clone();
        for b in kmax.keys() {
            factors.entry(Atom::Base(b.clone())).or_insert_with(Q::zero);
        }
        for (a, e) in &factors {
            match a {
                Atom::Base(b) if expandable(b) => {
                    let shift = kmax.get(b).cloned().unwrap_or_else(BigInt::zero);
                    let e2 = e + Q::from_integer(shift);
                    let whole = floor_q(&e2);
                    if whole.is_positive() && whole <= cap {
                        let frac = &e2 - Q::from_integer(whole.clone());
                        expanded = expanded.mul(&b.powi_expand(whole.to_u32().unwrap_or(0)));
                        if !frac.is_zero() {
                            rest.factors.insert(a.clone(), frac);
                        }
                    } else if !e2.is_zero() {
                        rest.factors.insert(a.clone(), e2);
                    }
                }
                _ => {
                    rest.factors.insert(a.clone(), e.clone());
                }
            }
        }
        let (k, rest) = rest.fold();
        let term = expanded.mul_mono(&(c * k), &rest);
        num = num.add(&term);
    }
    let mut den: Vec<(Poly, BigInt)> = kmax.into_iter().filter(|(_, k)| k.is_positive()).collect();
    // expansion of nested bases can expose new integer powers
    if has_integer_part(&num) && depth < TOGETHER_DEPTH_LIMIT {
        let (n2, d2) = together_depth(&num, depth + 1);
        num = n2;
        for (b, k) in d2 {
            match den.iter_mut().find(|(bb, _)| *bb == b) {
                Some((_, kk)) => *kk += k,
                None => den.push((b, k)),
            }
        }
    }
    (num, den)
}

fn from_together(num: &Poly, den: &[(Poly, BigInt)]) -> Poly {
    let mut out = num.clone();
    for (b, k) in den {
        out = out.mul(&Poly::atom_pow(Atom::Base(b.clone()), -Q::from_integer(k.clone())));
    }
    out
}

pub(crate) fn normalize_poly(p: &Poly) -> Poly {
    let (num, den) = together(p);
    from_together(&num, &den)
}

/// Converts a tree into the canonical polynomial (not yet denominator-cleared).
pub(crate) fn to_poly(e: &Expr) -> Poly {
    match e {
        Expr::Constant(q) => Poly::constant(q.clone()),
        Expr::Named(n) => Poly::atom(Atom::Named(n.clone())),
        Expr::Variable(v) => Poly::atom(Atom::Var(v.clone())),
        Expr::Sum(xs) => xs.iter().fold(Poly::zero(), |acc, x| acc.add(&to_poly(x))),
        Expr::Product(xs) => xs.iter().fold(Poly::one(), |acc, x| acc.mul(&to_poly(x))),
        Expr::Neg(a) => to_poly(a).neg(),
        Expr::Power(b, ex) => {
            let ep = normalize_poly(&to_poly(ex));
            if let (Some(q), Expr::Power(inner, ex1)) = (ep.as_constant(), b.as_ref()) {
                // (u^k)^q = u^(k q) before u^k is expanded, when no sign is lost
                if let Expr::Constant(k) = ex1.as_ref() {
                    if k.is_integer() && k.is_positive() && (q.is_integer() || k.to_integer().is_odd()) {
                        return pow(&to_poly(inner), &(k * q));
                    }
                }
            }
            let bp = to_poly(b);
            match ep.as_constant() {
                Some(q) => pow(&bp, &q),
                None => exp_poly(&normalize_poly(&ep.mul(&log_poly(&normalize_poly(&bp))))),
            }
        }
        Expr::Exp(a) => exp_poly(&normalize_poly(&to_poly(a))),
        Expr::Log(a) => log_poly(&normalize_poly(&to_poly(a))),
    }
}

fn render_atom(a: &Atom) -> Expr {
    match a {
        Atom::Var(v) => Expr::Variable(v.clone()),
        Atom::Named(n) => Expr::Named(n.clone()),
        Atom::Root(r) => Expr::Constant(r.clone()),
        Atom::Log(u) => Expr::Log(Box::new(render(u))),
        Atom::Base(b) => render(b),
    }
}

fn render_mono(c: &Q, m: &Mono) -> Expr {
    let mut factors = Vec::new();
    if !c.is_one() || m.is_one() {
        factors.push(Expr::Constant(c.clone()));
    }
    for (a, e) in &m.factors {
        let base = render_atom(a);
        if e.is_one() {
            factors.push(base);
        } else {
            factors.push(Expr::Power(Box::new(base), Box::new(Expr::Constant(e.clone()))));
        }
    }
    if let Some(arg) = &m.exp {
        factors.push(Expr::Exp(Box::new(render(arg))));
    }
    if factors.len() == 1 {
        factors.pop().unwrap_or_else(Expr::zero)
    } else {
        Expr::Product(factors)
    }
}

fn render_sum(p: &Poly) -> Expr {
    if p.is_zero() {
        return Expr::zero();
    }
    let mut terms: Vec<Expr> = p.terms.iter().rev().map(|(m, c)| render_mono(c, m)).collect();
    if terms.len() == 1 {
        terms.pop().unwrap_or_else(Expr::zero)
    } else {
        Expr::Sum(terms)
    }
}

/// Renders a canonical polynomial. A multi-term numerator over cleared
/// denominators is shown as `(numerator) * base^-k`.
pub(crate) fn render(p: &Poly) -> Expr {
    if p.terms.len() > 1 {
        let (num, den) = together(p);
        if !den.is_empty() && num.terms.len() > 1 {
            let mut factors = vec![render_sum(&num)];
            for (b, k) in &den {
                factors.push(Expr::Power(
                    Box::new(render(b)),
                    Box::new(Expr::Constant(-Q::from_integer(k.clone()))),
                ));
            }
            return Expr::Product(factors);
        }
    }
    render_sum(p)
}

/// Total "size" of a polynomial in atoms, used to pick simpler forms.
#[allow(dead_code)]
/// Whether normalization preserves the value of `e` at `b`.
///
/// Normalization splits fractional powers and logarithms over products
/// taking every non-constant factor as positive. This checks that reading at
/// `b`: inside a fractional power or a logarithm, every non-constant subterm
/// is positive, and so is the primitive part of every sum.
pub fn sign_convention_holds(e: &Expr, b: &Bindings) -> bool {
    holds(e, b, false)
}

fn positive(e: &Expr, b: &Bindings) -> bool {
    eval(e, b).is_ok_and(|v| v > 0.0)
}

fn holds(e: &Expr, b: &Bindings, in_zone: bool) -> bool {
    match e {
        Expr::Constant(_) => true,
        Expr::Variable(_) | Expr::Named(_) => !in_zone || positive(e, b),
        Expr::Product(xs) => xs.iter().all(|x| holds(x, b, in_zone)),
        Expr::Neg(a) => holds(a, b, in_zone),
        Expr::Sum(xs) => {
            (!in_zone || positive(e, b) && primitive_parts_positive(e, b))
                && xs.iter().all(|x| holds(x, b, in_zone))
        }
        Expr::Power(base, ex) => {
            let fractional = !matches!(ex.as_ref(), Expr::Constant(q) if q.is_integer());
            (!in_zone || positive(e, b)) && holds(base, b, in_zone || fractional) && holds(ex, b, false)
        }
        Expr::Exp(a) => holds(a, b, false),
        Expr::Log(a) => (!in_zone || positive(e, b)) && holds(a, b, true),
    }
}

fn primitive_parts_positive(e: &Expr, b: &Bindings) -> bool {
    let (num, den) = together(&to_poly(e));
    let (_, _, prim) = num.primitive();
    let mut factors = Vec::new();
    if prim.single_term().is_none() {
        split_factors(&prim, 1, &mut factors);
    }
    factors.iter().map(|(f, _)| f).chain(den.iter().map(|(d, _)| d)).all(|f| positive(&render(f), b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn canon(s: &str) -> Poly {
        normalize_poly(&to_poly(&parse(s, "x").unwrap()))
    }

    #[test]
    fn expands_and_cancels() {
        assert!(canon("(x+1)^2 - x^2 - 2*x - 1").is_zero());
        assert_eq!(canon("(x+1)^2/(x^2+2*x+1)"), Poly::one());
        assert_eq!(canon("(x + x^-1)/(x^2+1)"), canon("x^-1"));
    }

    #[test]
    fn fractional_bases_merge() {
        let p = canon("(x+1)^(3/2) * (x+1)^-(1/2) / (x+1)");
        assert_eq!(p, Poly::one());
    }

    #[test]
    fn exp_log_rules() {
        assert_eq!(canon("exp(x)*exp(x)"), canon("exp(2*x)"));
        assert_eq!(canon("exp(x)*exp(-x)"), Poly::one());
        assert_eq!(canon("exp(log(x))"), canon("x"));
        assert_eq!(canon("log(exp(x))"), canon("x"));
        assert_eq!(canon("exp(3*log(x))"), canon("x^3"));
        assert_eq!(canon("log(x^2)"), canon("2*log(x)"));
    }

    #[test]
    fn rational_constant_powers() {
        assert_eq!(canon("4^(1/2)"), Poly::constant(q_int(2)));
        assert_eq!(canon("(-8)^(1/3)"), Poly::constant(q_int(-2)));
        assert_eq!(canon("2^(1/2)*2^(1/2)"), Poly::constant(q_int(2)));
        assert_eq!(rational_root(&Q::new(9.into(), 4.into()), 2), Some(Q::new(3.into(), 2.into())));
    }

    #[test]
    fn laurent_division() {
        let n = canon("x^3 - 1");
        let d = canon("x - 1");
        assert_eq!(n.div_exact(&d), Some(canon("x^2 + x + 1")));
        assert_eq!(canon("x^2 + 1").div_exact(&d), None);
    }

    #[test]
    fn primitive_part_has_unit_lead() {
        let (c, g, prim) = canon("4*x^3 + 2*x^2").primitive();
        assert_eq!(c, q_int(4));
        assert_eq!(g.factors.get(&Atom::Var("x".into())), Some(&q_int(2)));
        assert_eq!(prim, canon("x + 1/2"));
    }

    #[test]
    fn group_order_is_multiplicative() {
        let a = canon("x^2*exp(x)").single_term().unwrap().1;
        let b = canon("x*exp(3*x)").single_term().unwrap().1;
        let c = canon("x^-5*exp(-x)").single_term().unwrap().1;
        let ord = cmp_mono(&a, &b);
        assert_eq!(cmp_mono(&a.mul(&c).1, &b.mul(&c).1), ord);
    }
}
