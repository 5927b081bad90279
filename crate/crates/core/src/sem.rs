//! Fixed-width two's-complement arithmetic shared by the interpreter and the
//! symbolic engine.

use crate::frontend::{BinOp, UnOp};

pub fn mask(v: u64, width: u32) -> u64 {
    if width >= 64 {
        v
    } else {
        v & ((1u64 << width) - 1)
    }
}

pub fn max_value(width: u32) -> u64 {
    mask(u64::MAX, width)
}

pub fn to_signed(v: u64, width: u32) -> i64 {
    let v = mask(v, width);
    if width >= 64 {
        v as i64
    } else if v >> (width - 1) & 1 == 1 {
        (v | !((1u64 << width) - 1)) as i64
    } else {
        v as i64
    }
}

pub fn truth(b: bool) -> u64 {
    u64::from(b)
}

pub fn unary(op: UnOp, a: u64, width: u32) -> u64 {
    let a = mask(a, width);
    match op {
        UnOp::Neg => mask(a.wrapping_neg(), width),
        UnOp::BitNot => mask(!a, width),
        UnOp::Not => truth(a == 0),
    }
}

/// Shift amounts at or beyond the width produce zero.
pub fn binary(op: BinOp, a: u64, b: u64, width: u32) -> u64 {
    let (a, b) = (mask(a, width), mask(b, width));
    let (sa, sb) = (to_signed(a, width), to_signed(b, width));
    let r = match op {
        BinOp::Add => a.wrapping_add(b),
        BinOp::Sub => a.wrapping_sub(b),
        BinOp::Mul => a.wrapping_mul(b),
        BinOp::And => a & b,
        BinOp::Or => a | b,
        BinOp::Xor => a ^ b,
        BinOp::Shl => {
            if b >= u64::from(width) {
                0
            } else {
                a << b
            }
        }
        BinOp::Shr => {
            if b >= u64::from(width) {
                0
            } else {
                a >> b
            }
        }
        BinOp::Eq => truth(a == b),
        BinOp::Ne => truth(a != b),
        BinOp::Lt => truth(sa < sb),
        BinOp::Le => truth(sa <= sb),
        BinOp::Gt => truth(sa > sb),
        BinOp::Ge => truth(sa >= sb),
        BinOp::LogAnd => truth(a != 0 && b != 0),
        BinOp::LogOr => truth(a != 0 || b != 0),
    };
    mask(r, width)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_at_width() {
        assert_eq!(binary(BinOp::Add, 0xffff, 1, 16), 0);
        assert_eq!(binary(BinOp::Sub, 0, 1, 16), 0xffff);
        assert_eq!(unary(UnOp::Neg, 1, 8), 0xff);
        assert_eq!(binary(BinOp::Mul, 0x100, 0x100, 16), 0);
    }

    #[test]
    fn comparisons_are_signed() {
        assert_eq!(binary(BinOp::Lt, 0xffff, 0, 16), 1);
        assert_eq!(binary(BinOp::Gt, 0x7fff, 0x8000, 16), 1);
        assert_eq!(to_signed(0x80, 8), -128);
        assert_eq!(to_signed(u64::MAX, 64), -1);
    }

    #[test]
    fn shifts_saturate_to_zero() {
        assert_eq!(binary(BinOp::Shl, 1, 16, 16), 0);
        assert_eq!(binary(BinOp::Shr, 0x8000, 15, 16), 1);
        assert_eq!(binary(BinOp::Shl, 1, 15, 16), 0x8000);
    }
}
