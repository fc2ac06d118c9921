//! Exact constant folding over expressions.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};

use crate::ast::{BinOp, ContractDef, Expr, ExprKind, UnOp};

/// Wei per unit for ether denominations and seconds per unit for time suffixes.
pub fn unit_scale(unit: &str) -> Option<BigInt> {
    let pow10 = |n: u32| BigInt::from(10u32).pow(n);
    Some(match unit {
        "wei" | "seconds" => BigInt::one(),
        "gwei" => pow10(9),
        "szabo" => pow10(12),
        "finney" => pow10(15),
        "ether" => pow10(18),
        "minutes" => BigInt::from(60),
        "hours" => BigInt::from(3_600),
        "days" => BigInt::from(86_400),
        "weeks" => BigInt::from(604_800),
        "years" => BigInt::from(31_536_000),
        _ => return None,
    })
}

/// Named constants visible to the folder (state variables with foldable initializers).
#[derive(Debug, Default, Clone)]
pub struct Constants {
    values: HashMap<String, BigRational>,
}

impl Constants {
    pub fn from_contract(contract: &ContractDef) -> Self {
        let mut consts = Constants::default();
        // Initializers may refer to earlier constants.
        for var in &contract.state_vars {
            if let Some(init) = &var.initializer {
                if let Some(v) = consts.eval(init) {
                    consts.values.insert(var.name.clone(), v);
                }
            }
        }
        consts
    }

    pub fn get(&self, name: &str) -> Option<&BigRational> {
        self.values.get(name)
    }

    /// Value of `expr` when it is built only from literals and known constants.
    ///
    /// Division is exact (rational); callers that need EVM floor semantics
    /// apply it themselves.
    pub fn eval(&self, expr: &Expr) -> Option<BigRational> {
        match &expr.unparen().kind {
            ExprKind::Number(n) => Some(n.value.clone()),
            ExprKind::Ident(name) => self.values.get(name).cloned(),
            ExprKind::Unary { op: UnOp::Neg, operand } => self.eval(operand).map(|v| -v),
            ExprKind::Binary { op, lhs, rhs } => {
                let (a, b) = (self.eval(lhs)?, self.eval(rhs)?);
                match op {
                    BinOp::Add => Some(a + b),
                    BinOp::Sub => Some(a - b),
                    BinOp::Mul => Some(a * b),
                    BinOp::Div if !b.is_zero() => Some(a / b),
                    BinOp::Pow if b.is_integer() => {
                        let exp = b.to_integer().to_u32().filter(|e| *e <= 1024)?;
                        Some(Pow::pow(a, exp))
                    }
                    _ => None,
                }
            }
            // `uint256(5)` and friends
            ExprKind::Call { callee, args } if args.len() == 1 && matches!(callee.kind, ExprKind::TypeExpr(_)) => {
                self.eval(&args[0])
            }
            _ => None,
        }
    }
}

pub fn is_constant(expr: &Expr) -> bool {
    Constants::default().eval(expr).is_some()
}

pub fn to_integer(value: &BigRational) -> Option<BigInt> {
    value.is_integer().then(|| value.to_integer())
}
