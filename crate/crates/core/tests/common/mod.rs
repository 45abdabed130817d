// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

/// Binary exponent offset that makes every product of two f64 an integer.
const SHIFT: i64 = 2 * 1074;

fn decompose(v: f64) -> (BigInt, i64) {
    if v == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1 << 52), exp - 1075)
    };
    (BigInt::from(sign) * BigInt::from(mant), e)
}

/// Σ x·w computed exactly in integers, rounded once to f64.
pub fn exact_dot(x: &[f64], w: &[f64]) -> f64 {
    let mut acc = BigInt::zero();
    for (a, b) in x.iter().zip(w) {
        let (ma, ea) = decompose(*a);
        let (mb, eb) = decompose(*b);
        acc += (ma * mb) << ((ea + eb + SHIFT) as usize);
    }
    to_f64_scaled(&acc, -SHIFT)
}

fn to_f64_scaled(v: &BigInt, exp: i64) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let bits = v.bits() as i64;
    let drop = (bits - 64).max(0);
    let head = (v >> drop as usize).to_f64().unwrap();
    let mut e = exp + drop;
    let mut out = head;
    while e > 0 {
        let step = e.min(1000);
        out *= 2f64.powi(step as i32);
        e -= step;
    }
    while e < 0 {
        let step = (-e).min(1000);
        out *= 2f64.powi(-(step as i32));
        e += step;
    }
    out
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}
