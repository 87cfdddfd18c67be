//! Fixed evaluation order for expressions, shared by the interpreter and the
//! C emitter so both perform the same floating-point operations.
//!
//! Sums and products fold left in operand order. A sum operand `-1*x` becomes a
//! subtraction (a negation when it comes first); `b**k` is repeated
//! multiplication and `b**-k` is `1/(b**k)`.

use crate::error::{Result, SfError};
use crate::symbolic::{Access, Expr, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn apply<T: num_traits::Float>(self, a: T, b: T) -> T {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Code {
    Const(f64),
    Sym(String),
    Load(Access),
    Neg(Box<Code>),
    Bin(BinOp, Box<Code>, Box<Code>),
    Pow(Box<Code>, i32),
}

fn is_minus_one(e: &Expr) -> bool {
    e.as_num().is_some_and(|n| n.is_minus_one())
}

fn is_plus_one(e: &Expr) -> bool {
    e.as_num().is_some_and(|n| n.is_one())
}

/// `x` if `t` is the product `-1*x`.
fn negated(t: &Expr) -> Option<Expr> {
    match t.node() {
        Node::Mul(ch) if ch.len() >= 2 && is_minus_one(&ch[0]) => Some(if ch.len() == 2 {
            ch[1].clone()
        } else {
            Expr::raw(Node::Mul(ch[1..].to_vec()))
        }),
        _ => None,
    }
}

fn bin(op: BinOp, a: Code, b: Code) -> Code {
    Code::Bin(op, Box::new(a), Box::new(b))
}

pub fn to_code(e: &Expr) -> Result<Code> {
    Ok(match e.node() {
        Node::Rat(_) | Node::Float(_) => Code::Const(e.eval_const().unwrap()),
        Node::Sym(s) => Code::Sym(s.to_string()),
        Node::Access(a) => Code::Load(a.clone()),
        Node::Add(ch) => {
            let mut acc = match negated(&ch[0]) {
                Some(x) => Code::Neg(Box::new(to_code(&x)?)),
                None => to_code(&ch[0])?,
            };
            for t in &ch[1..] {
                acc = match negated(t) {
                    Some(x) => bin(BinOp::Sub, acc, to_code(&x)?),
                    None => bin(BinOp::Add, acc, to_code(t)?),
                };
            }
            acc
        }
        Node::Mul(ch) => {
            let neg = is_minus_one(&ch[0]);
            let mut fs = ch.iter().skip(usize::from(neg)).filter(|f| !is_plus_one(f));
            let mut acc = match fs.next() {
                Some(f) => to_code(f)?,
                None => Code::Const(1.0),
            };
            for f in fs {
                acc = bin(BinOp::Mul, acc, to_code(f)?);
            }
            if neg {
                Code::Neg(Box::new(acc))
            } else {
                acc
            }
        }
        Node::Pow(b, p) => Code::Pow(Box::new(to_code(b)?), *p),
        Node::Deriv(_) => return Err(SfError::Lowering(format!("unexpanded derivative in {e}"))),
    })
}

impl Code {
    /// Evaluate with scalar symbols only.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        Ok(match self {
            Code::Const(c) => *c,
            Code::Sym(s) => env(s).ok_or_else(|| SfError::Binding(format!("unbound scalar '{s}'")))?,
            Code::Load(a) => {
                return Err(SfError::Binding(format!("array access to '{}' in a scalar expression", a.field.name)))
            }
            Code::Neg(a) => -a.eval(env)?,
            Code::Bin(op, a, b) => op.apply(a.eval(env)?, b.eval(env)?),
            Code::Pow(b, p) => {
                let v = b.eval(env)?;
                let mut acc = v;
                for _ in 1..p.unsigned_abs() {
                    acc *= v;
                }
                if *p < 0 {
                    1.0 / acc
                } else {
                    acc
                }
            }
        })
    }

    /// Arithmetic operations performed, with a power's base counted once.
    pub fn ops(&self) -> usize {
        match self {
            Code::Const(_) | Code::Sym(_) | Code::Load(_) => 0,
            Code::Neg(a) => a.ops(),
            Code::Bin(_, a, b) => 1 + a.ops() + b.ops(),
            Code::Pow(b, p) => b.ops() + p.unsigned_abs() as usize - 1 + usize::from(*p < 0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::flops::expr_flops;

    #[test]
    fn order_and_count() {
        let (a, b, c) = (Expr::sym("a"), Expr::sym("b"), Expr::sym("c"));
        let e = &a - &b * &c - &c;
        let code = to_code(&e).unwrap();
        assert_eq!(code.ops(), expr_flops(&e).total());
        let env = |s: &str| match s {
            "a" => Some(1.5),
            "b" => Some(2.0),
            "c" => Some(0.25),
            _ => None,
        };
        assert_eq!(code.eval(&env).unwrap(), 1.5 - 2.0 * 0.25 - 0.25);
        let p = to_code(&(-(&a + &b).pow(-2))).unwrap();
        assert_eq!(p.eval(&env).unwrap(), -(1.0 / (3.5 * 3.5)));
        assert!(to_code(&Expr::sym("zz")).unwrap().eval(&env).is_err());
    }
}
