//! Two-state bit-vector value semantics shared by the simulator and the
//! constraint evaluator.
//!
//! Values are carried in a `u64` together with an explicit width. Every
//! result is masked to its width; narrower operands are zero-extended.

use crate::frontend::ast::{BinaryOp, UnaryOp};

/// Widest vector the toolchain accepts.
pub const MAX_WIDTH: u32 = 64;

pub fn mask(width: u32) -> u64 {
    debug_assert!((1..=MAX_WIDTH).contains(&width));
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

pub fn truncate(value: u64, width: u32) -> u64 {
    value & mask(width)
}

/// Number of bits needed to represent `value` (at least 1).
pub fn bits_needed(value: u64) -> u32 {
    (64 - value.leading_zeros()).max(1)
}

pub fn fits(value: u64, width: u32) -> bool {
    value & !mask(width) == 0
}

/// Result width of a binary operator applied to operands of the given widths.
pub fn binary_width(op: BinaryOp, left: u32, right: u32) -> u32 {
    use BinaryOp::*;
    match op {
        Eq | Ne | Lt | Le | Gt | Ge | LogicalAnd | LogicalOr => 1,
        Shl | Shr => left,
        And | Or | Xor | Add | Sub | Mul | Div | Mod | Pow => left.max(right),
    }
}

pub fn unary_width(op: UnaryOp, operand: u32) -> u32 {
    match op {
        UnaryOp::LogicalNot => 1,
        UnaryOp::Not | UnaryOp::Neg => operand,
    }
}

pub fn eval_unary(op: UnaryOp, value: u64, width: u32) -> u64 {
    match op {
        UnaryOp::Not => truncate(!value, width),
        UnaryOp::Neg => truncate(value.wrapping_neg(), width),
        UnaryOp::LogicalNot => (value == 0) as u64,
    }
}

/// Evaluates a runtime binary operator. Operands are zero-extended to the
/// common width before arithmetic, shifts keep the left operand's width.
/// Returns `None` for operators that only exist at elaboration time.
pub fn eval_binary(op: BinaryOp, a: u64, wa: u32, b: u64, wb: u32) -> Option<u64> {
    use BinaryOp::*;
    let w = wa.max(wb);
    let v = match op {
        Eq => (a == b) as u64,
        Ne => (a != b) as u64,
        Lt => (a < b) as u64,
        Le => (a <= b) as u64,
        Gt => (a > b) as u64,
        Ge => (a >= b) as u64,
        LogicalAnd => (a != 0 && b != 0) as u64,
        LogicalOr => (a != 0 || b != 0) as u64,
        And => a & b,
        Or => a | b,
        Xor => a ^ b,
        Add => truncate(a.wrapping_add(b), w),
        Sub => truncate(a.wrapping_sub(b), w),
        Shl => {
            if b >= wa as u64 {
                0
            } else {
                truncate(a << b, wa)
            }
        }
        Shr => {
            if b >= wa as u64 {
                0
            } else {
                a >> b
            }
        }
        Mul | Div | Mod | Pow => return None,
    };
    Some(v)
}

/// Formats a value the way the TestSet files store it.
pub fn to_hex(value: u64) -> String {
    format!("0x{value:x}")
}

pub fn parse_hex(text: &str) -> Option<u64> {
    let t = text.trim();
    let digits = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X"))?;
    if digits.is_empty() {
        return None;
    }
    u64::from_str_radix(&digits.replace('_', ""), 16).ok()
}
