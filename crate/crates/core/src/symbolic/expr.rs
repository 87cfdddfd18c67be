//! Immutable expression trees with canonical construction.
//!
//! Every constructor returns a canonical form: sums and products are flattened,
//! numeric constants are folded (exactly for rationals), like terms and equal
//! bases are merged, and commutative children are sorted. The sort key puts
//! numbers first, then scalar-only terms, then time-invariant field accesses,
//! then time-dependent ones, so invariant factors always form a prefix.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::function::FieldRef;
use crate::grid::Dimension;

/// `f64` with bitwise equality and total ordering.
#[derive(Clone, Copy, Debug)]
pub struct F64(pub f64);

impl PartialEq for F64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}
impl Eq for F64 {}
impl PartialOrd for F64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for F64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
impl Hash for F64 {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

/// Index of a field access along one dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    /// Offset relative to the loop variable of the dimension.
    Rel(i64),
    /// Fixed position (unpadded index for space, point number for sparse).
    Abs(i64),
}

/// Indexed read of a field.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Access {
    pub field: FieldRef,
    pub indices: Vec<Index>,
}

impl Access {
    /// Relative time offset, if the field has a time dimension indexed relatively.
    pub fn time_offset(&self) -> Option<i64> {
        let pos = self.field.time_position()?;
        match self.indices[pos] {
            Index::Rel(o) => Some(o),
            Index::Abs(_) => None,
        }
    }

    pub fn index_for(&self, dim: &Dimension) -> Option<Index> {
        self.field.dims.iter().position(|d| d == dim).map(|p| self.indices[p])
    }
}

/// One-sided or centered stencil placement for derivative placeholders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Centered,
    Backward,
    Forward,
}

/// Unexpanded derivative of an expression.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Derivative {
    pub expr: Expr,
    pub dim: Dimension,
    pub order: usize,
    pub fd_order: usize,
    pub side: Side,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Rat(BigRational),
    Float(F64),
    Sym(Arc<str>),
    Access(Access),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i32),
    Deriv(Box<Derivative>),
}

#[derive(Debug)]
struct Inner {
    node: Node,
    rank: u8,
    hash: u64,
}

/// Shared immutable expression.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

pub const RANK_NUMBER: u8 = 0;
pub const RANK_SCALAR: u8 = 1;
pub const RANK_INVARIANT: u8 = 2;
pub const RANK_VARYING: u8 = 3;

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.node == other.0.node)
    }
}
impl Eq for Expr {}
impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash)
    }
}
impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.rank.cmp(&other.0.rank).then_with(|| self.0.node.cmp(&other.0.node))
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Numeric constant: exact rational or float.
#[derive(Clone, Debug, PartialEq)]
pub enum Num {
    Rat(BigRational),
    F(f64),
}

impl Num {
    pub fn one() -> Num {
        Num::Rat(BigRational::one())
    }
    pub fn zero() -> Num {
        Num::Rat(BigRational::zero())
    }
    pub fn is_zero(&self) -> bool {
        match self {
            Num::Rat(r) => r.is_zero(),
            Num::F(x) => *x == 0.0,
        }
    }
    pub fn is_one(&self) -> bool {
        match self {
            Num::Rat(r) => r.is_one(),
            Num::F(x) => *x == 1.0,
        }
    }
    pub fn is_minus_one(&self) -> bool {
        match self {
            Num::Rat(r) => *r == -BigRational::one(),
            Num::F(x) => *x == -1.0,
        }
    }
    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Rat(r) => rat_to_f64(r),
            Num::F(x) => *x,
        }
    }
    pub fn add(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Rat(a), Num::Rat(b)) => Num::Rat(a + b),
            _ => Num::F(self.to_f64() + o.to_f64()),
        }
    }
    pub fn mul(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Rat(a), Num::Rat(b)) => Num::Rat(a * b),
            _ => Num::F(self.to_f64() * o.to_f64()),
        }
    }
    pub fn neg(&self) -> Num {
        match self {
            Num::Rat(a) => Num::Rat(-a),
            Num::F(x) => Num::F(-x),
        }
    }
    /// Integer power; `None` for zero to a negative power.
    pub fn pow(&self, e: i32) -> Option<Num> {
        if e < 0 && self.is_zero() {
            return None;
        }
        Some(match self {
            Num::Rat(a) => {
                let p = num_traits::pow(a.clone(), e.unsigned_abs() as usize);
                Num::Rat(if e < 0 { p.recip() } else { p })
            }
            Num::F(x) => Num::F(x.powi(e)),
        })
    }
    pub fn into_expr(self) -> Expr {
        match self {
            Num::Rat(r) => Expr::new(Node::Rat(r)),
            Num::F(x) => Expr::new(Node::Float(F64(x))),
        }
    }
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fallback for huge numerators/denominators.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

fn rank_of(node: &Node) -> u8 {
    match node {
        Node::Rat(_) | Node::Float(_) => RANK_NUMBER,
        Node::Sym(_) => RANK_SCALAR,
        Node::Access(a) => {
            if a.field.is_time_dependent() {
                RANK_VARYING
            } else {
                RANK_INVARIANT
            }
        }
        Node::Add(ch) | Node::Mul(ch) => ch.iter().map(|c| c.rank()).max().unwrap_or(0),
        Node::Pow(b, _) => b.rank(),
        Node::Deriv(d) => d.expr.rank(),
    }
}

impl Expr {
    fn new(node: Node) -> Expr {
        let mut h = DefaultHasher::new();
        node.hash(&mut h);
        let rank = rank_of(&node);
        Expr(Arc::new(Inner { node, rank, hash: h.finish() }))
    }

    /// Build a node without canonicalization (keeps child order as given).
    pub fn raw(node: Node) -> Expr {
        Expr::new(node)
    }

    /// Structural replacement that preserves child order and nesting.
    pub fn replace_raw(&self, map: &std::collections::HashMap<Expr, Expr>) -> Expr {
        if let Some(r) = map.get(self) {
            return r.clone();
        }
        match self.node() {
            Node::Add(ch) => Expr::new(Node::Add(ch.iter().map(|c| c.replace_raw(map)).collect())),
            Node::Mul(ch) => Expr::new(Node::Mul(ch.iter().map(|c| c.replace_raw(map)).collect())),
            Node::Pow(b, e) => Expr::new(Node::Pow(b.replace_raw(map), *e)),
            Node::Deriv(d) => {
                let mut d2 = (**d).clone();
                d2.expr = d.expr.replace_raw(map);
                Expr::deriv(d2)
            }
            _ => self.clone(),
        }
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    /// Sort rank: 0 number, 1 scalar-only, 2 time-invariant, 3 time-varying.
    pub fn rank(&self) -> u8 {
        self.0.rank
    }

    pub fn int(n: i64) -> Expr {
        Expr::new(Node::Rat(BigRational::from_integer(BigInt::from(n))))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::new(Node::Rat(BigRational::new(BigInt::from(n), BigInt::from(d))))
    }

    pub fn rational(r: BigRational) -> Expr {
        Expr::new(Node::Rat(r))
    }

    pub fn float(x: f64) -> Expr {
        Expr::new(Node::Float(F64(x)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::new(Node::Sym(Arc::from(name)))
    }

    pub fn access(field: FieldRef, indices: Vec<Index>) -> Expr {
        Expr::new(Node::Access(Access { field, indices }))
    }

    pub fn deriv(d: Derivative) -> Expr {
        Expr::new(Node::Deriv(Box::new(d)))
    }

    pub fn as_num(&self) -> Option<Num> {
        match self.node() {
            Node::Rat(r) => Some(Num::Rat(r.clone())),
            Node::Float(x) => Some(Num::F(x.0)),
            _ => None,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self.node(), Node::Rat(_) | Node::Float(_))
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(|n| n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(|n| n.is_one())
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.node(), Node::Rat(_) | Node::Float(_) | Node::Sym(_) | Node::Access(_))
    }

    pub fn as_access(&self) -> Option<&Access> {
        match self.node() {
            Node::Access(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self.node() {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    /// Direct children in order.
    pub fn children(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ch) | Node::Mul(ch) => ch.clone(),
            Node::Pow(b, _) => vec![b.clone()],
            Node::Deriv(d) => vec![d.expr.clone()],
            _ => vec![],
        }
    }

    /// Rebuild this node canonically from transformed children.
    pub fn map_children(&self, mut f: impl FnMut(&Expr) -> Expr) -> Expr {
        match self.node() {
            Node::Add(ch) => make_add(ch.iter().map(&mut f).collect()),
            Node::Mul(ch) => make_mul(ch.iter().map(&mut f).collect()),
            Node::Pow(b, e) => make_pow(f(b), *e),
            Node::Deriv(d) => {
                let mut d2 = (**d).clone();
                d2.expr = f(&d.expr);
                Expr::deriv(d2)
            }
            _ => self.clone(),
        }
    }

    pub fn contains(&self, target: &Expr) -> bool {
        self == target || self.children().iter().any(|c| c.contains(target))
    }

    pub fn has_derivatives(&self) -> bool {
        matches!(self.node(), Node::Deriv(_)) || self.children().iter().any(|c| c.has_derivatives())
    }

    /// All distinct field accesses, sorted.
    pub fn accesses(&self) -> BTreeSet<Access> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Node::Access(a) = e.node() {
                out.insert(a.clone());
            }
        });
        out
    }

    /// All distinct free symbol names, sorted.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Node::Sym(s) = e.node() {
                out.insert(s.to_string());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self.node() {
            Node::Add(ch) | Node::Mul(ch) => ch.iter().for_each(|c| c.visit(f)),
            Node::Pow(b, _) => b.visit(f),
            Node::Deriv(d) => d.expr.visit(f),
            _ => {}
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    pub fn pow(&self, e: i32) -> Expr {
        make_pow(self.clone(), e)
    }

    pub fn recip(&self) -> Expr {
        make_pow(self.clone(), -1)
    }

    /// Numeric value when all leaves are numbers.
    pub fn eval_const(&self) -> Option<f64> {
        match self.node() {
            Node::Rat(r) => Some(rat_to_f64(r)),
            Node::Float(x) => Some(x.0),
            Node::Add(ch) => ch.iter().map(|c| c.eval_const()).sum(),
            Node::Mul(ch) => ch.iter().map(|c| c.eval_const()).product(),
            Node::Pow(b, e) => b.eval_const().map(|v| v.powi(*e)),
            _ => None,
        }
    }
}

/// Split a term into numeric coefficient and remaining factor.
pub fn split_coeff(t: &Expr) -> (Num, Expr) {
    if let Some(n) = t.as_num() {
        return (n, Expr::one());
    }
    if let Node::Mul(ch) = t.node() {
        if let Some(n) = ch[0].as_num() {
            let rest = if ch.len() == 2 { ch[1].clone() } else { Expr::new(Node::Mul(ch[1..].to_vec())) };
            return (n, rest);
        }
    }
    (Num::one(), t.clone())
}

fn scale(c: Num, rest: Expr) -> Expr {
    if c.is_zero() {
        return Expr::zero();
    }
    if rest.is_one() {
        return c.into_expr();
    }
    if c.is_one() {
        return rest;
    }
    match rest.node() {
        Node::Mul(ch) => {
            let mut v = Vec::with_capacity(ch.len() + 1);
            v.push(c.into_expr());
            v.extend(ch.iter().cloned());
            Expr::new(Node::Mul(v))
        }
        _ => Expr::new(Node::Mul(vec![c.into_expr(), rest])),
    }
}

/// Canonical sum.
pub fn make_add(terms: Vec<Expr>) -> Expr {
    let mut constant = Num::zero();
    let mut collected: BTreeMap<Expr, Num> = BTreeMap::new();
    let mut push = |t: &Expr, constant: &mut Num| {
        if let Some(n) = t.as_num() {
            *constant = constant.add(&n);
        } else {
            let (c, rest) = split_coeff(t);
            match collected.get_mut(&rest) {
                Some(acc) => *acc = acc.add(&c),
                None => {
                    collected.insert(rest, c);
                }
            }
        }
    };
    for t in &terms {
        match t.node() {
            Node::Add(ch) => ch.iter().for_each(|c| push(c, &mut constant)),
            _ => push(t, &mut constant),
        }
    }
    let mut out: Vec<Expr> = collected
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(rest, c)| scale(c, rest))
        .collect();
    if !constant.is_zero() {
        out.push(constant.into_expr());
    }
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => {
            out.sort();
            Expr::new(Node::Add(out))
        }
    }
}

/// Canonical product. Sums are kept as factors (no distribution).
pub fn make_mul(factors: Vec<Expr>) -> Expr {
    let mut coeff = Num::one();
    let mut powers: BTreeMap<Expr, i32> = BTreeMap::new();
    let mut push = |f: &Expr, coeff: &mut Num| match f.node() {
        Node::Rat(_) | Node::Float(_) => *coeff = coeff.mul(&f.as_num().unwrap()),
        Node::Pow(b, e) => *powers.entry(b.clone()).or_insert(0) += *e,
        _ => *powers.entry(f.clone()).or_insert(0) += 1,
    };
    for f in &factors {
        match f.node() {
            Node::Mul(ch) => ch.iter().for_each(|c| push(c, &mut coeff)),
            _ => push(f, &mut coeff),
        }
    }
    if coeff.is_zero() {
        return Expr::zero();
    }
    let mut out: Vec<Expr> = Vec::with_capacity(powers.len() + 1);
    for (b, e) in powers {
        match e {
            0 => {}
            1 => out.push(b),
            _ => out.push(Expr::new(Node::Pow(b, e))),
        }
    }
    out.sort();
    if out.is_empty() {
        return coeff.into_expr();
    }
    if coeff.is_one() && out.len() == 1 {
        return out.pop().unwrap();
    }
    if !coeff.is_one() {
        out.insert(0, coeff.into_expr());
    }
    Expr::new(Node::Mul(out))
}

/// Canonical integer power.
pub fn make_pow(base: Expr, e: i32) -> Expr {
    if e == 0 {
        return Expr::one();
    }
    if e == 1 {
        return base;
    }
    if let Some(n) = base.as_num() {
        return match n.pow(e) {
            Some(v) => v.into_expr(),
            None => Expr::new(Node::Pow(base, e)),
        };
    }
    match base.node() {
        Node::Pow(b, e2) => make_pow(b.clone(), e * e2),
        Node::Mul(ch) => make_mul(ch.iter().map(|c| make_pow(c.clone(), e)).collect()),
        _ => Expr::new(Node::Pow(base, e)),
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}
impl From<i32> for Expr {
    fn from(n: i32) -> Expr {
        Expr::int(n as i64)
    }
}
impl From<f64> for Expr {
    fn from(x: f64) -> Expr {
        Expr::float(x)
    }
}
impl From<&Expr> for Expr {
    fn from(e: &Expr) -> Expr {
        e.clone()
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<R: Into<Expr>> ops::$tr<R> for Expr {
            type Output = Expr;
            fn $m(self, rhs: R) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.into())
            }
        }
        impl<R: Into<Expr>> ops::$tr<R> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: R) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.into())
            }
        }
        impl ops::$tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::float(self), rhs)
            }
        }
        impl ops::$tr<Expr> for i64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::int(self), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| make_add(vec![a, b]));
binop!(Sub, sub, |a, b| make_add(vec![a, make_mul(vec![Expr::int(-1), b])]));
binop!(Mul, mul, |a, b| make_mul(vec![a, b]));
binop!(Div, div, |a, b| make_mul(vec![a, make_pow(b, -1)]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        make_mul(vec![Expr::int(-1), self])
    }
}
impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        make_mul(vec![Expr::int(-1), self.clone()])
    }
}

fn fmt_index(f: &mut fmt::Formatter<'_>, dim: &Dimension, idx: &Index) -> fmt::Result {
    match idx {
        Index::Rel(0) => write!(f, "{dim}"),
        Index::Rel(o) if *o > 0 => write!(f, "{dim} + {o}"),
        Index::Rel(o) => write!(f, "{dim} - {}", -o),
        Index::Abs(i) => write!(f, "{i}"),
    }
}

fn fmt_factor(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Add(_) => write!(f, "({e})"),
        Node::Rat(r) if !r.is_integer() || r.is_negative() => write!(f, "({e})"),
        Node::Float(x) if x.0 < 0.0 => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Rat(r) => write!(f, "{r}"),
            Node::Float(x) => write!(f, "{:?}", x.0),
            Node::Sym(s) => write!(f, "{s}"),
            Node::Access(a) => {
                write!(f, "{}[", a.field.name)?;
                for (i, (d, idx)) in a.field.dims.iter().zip(&a.indices).enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    fmt_index(f, d, idx)?;
                }
                write!(f, "]")
            }
            Node::Add(ch) => {
                for (i, t) in ch.iter().enumerate() {
                    let (c, rest) = split_coeff(t);
                    let neg = match &c {
                        Num::Rat(r) => r.is_negative(),
                        Num::F(x) => *x < 0.0,
                    };
                    if i == 0 {
                        if neg {
                            write!(f, "-")?;
                        }
                    } else {
                        f.write_str(if neg { " - " } else { " + " })?;
                    }
                    let c = if neg { c.neg() } else { c };
                    if rest.is_one() {
                        write!(f, "{}", c.into_expr())?;
                    } else if c.is_one() {
                        fmt_factor(f, &rest)?;
                    } else {
                        write!(f, "{}*", c.into_expr())?;
                        fmt_factor(f, &rest)?;
                    }
                }
                Ok(())
            }
            Node::Mul(ch) => {
                let (den, num): (Vec<&Expr>, Vec<&Expr>) =
                    ch.iter().partition(|t| matches!(t.node(), Node::Pow(_, e) if *e < 0));
                if num.is_empty() {
                    write!(f, "1")?;
                }
                for (i, t) in num.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    fmt_factor(f, t)?;
                }
                for t in den {
                    if let Node::Pow(b, e) = t.node() {
                        write!(f, "/")?;
                        if *e == -1 {
                            fmt_factor(f, b)?;
                        } else {
                            write!(f, "{}", make_pow(b.clone(), -e))?;
                        }
                    }
                }
                Ok(())
            }
            Node::Pow(b, e) => {
                if *e == -1 {
                    write!(f, "1/")?;
                    fmt_factor(f, b)
                } else {
                    match b.node() {
                        Node::Add(_) | Node::Mul(_) | Node::Pow(..) => write!(f, "({b})")?,
                        _ => write!(f, "{b}")?,
                    }
                    write!(f, "**{e}")
                }
            }
            Node::Deriv(d) => {
                let side = match d.side {
                    Side::Centered => "",
                    Side::Backward => "l",
                    Side::Forward => "r",
                };
                write!(f, "D{}{}{}[{}]({})", d.dim, d.order, side, d.fd_order, d.expr)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_examples() {
        let e = Expr::int(2) * (Expr::int(3) + Expr::int(4));
        assert_eq!(e, Expr::int(14));
        let x = Expr::sym("x");
        assert_eq!(&x * 1, x);
        assert_eq!(Expr::rat(1, 3) * 3, Expr::int(1));
        assert_eq!(&x - &x, Expr::zero());
        assert_eq!(&x * &x / &x, x);
    }

    #[test]
    fn like_terms_and_powers() {
        let x = Expr::sym("x");
        let y = Expr::sym("y");
        assert_eq!(&x + &x, Expr::int(2) * &x);
        assert_eq!((&x * &y) * &x, x.pow(2) * &y);
        assert_eq!((&x * &y).pow(-1), x.recip() * y.recip());
        assert_eq!(x.pow(2).pow(3), x.pow(6));
    }

    #[test]
    fn commutative_children_are_sorted() {
        let a = Expr::sym("a");
        let b = Expr::sym("b");
        assert_eq!(&a + &b, &b + &a);
        assert_eq!(&a * &b, &b * &a);
        assert_eq!((&a + 1) * 2, 2 * (1 + a.clone()));
    }

    #[test]
    fn float_mixing() {
        let x = Expr::sym("x");
        let e = Expr::float(0.5) * &x + Expr::rat(1, 2) * &x;
        assert_eq!(e, x);
        assert_eq!(Expr::float(1.5) + Expr::int(1), Expr::float(2.5));
    }

    #[test]
    fn display_is_readable() {
        let x = Expr::sym("x");
        let y = Expr::sym("y");
        assert_eq!((&x - 2 * y.clone()).to_string(), "x - 2*y");
        assert_eq!((&x / &y).to_string(), "x/y");
    }
}
