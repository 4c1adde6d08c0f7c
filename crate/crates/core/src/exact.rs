//! Exact comparisons between integer ratios and binary floating-point thresholds.

use num_bigint::BigUint;
use std::cmp::Ordering;

/// Decomposes a finite non-negative `f64` into an exact ratio `num / den`.
pub fn f64_to_ratio(x: f64) -> (BigUint, BigUint) {
    assert!(x.is_finite() && x >= 0.0, "expected finite non-negative value, got {x}");
    if x == 0.0 {
        return (BigUint::from(0u32), BigUint::from(1u32));
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    if e >= 0 {
        (BigUint::from(mant) << (e as usize), BigUint::from(1u32))
    } else {
        (BigUint::from(mant), BigUint::from(1u32) << ((-e) as usize))
    }
}

/// Compares `num / den` with the exact value of `x`.
pub fn cmp_ratio_f64(num: u128, den: u128, x: f64) -> Ordering {
    let (xn, xd) = f64_to_ratio(x);
    (BigUint::from(num) * xd).cmp(&(xn * BigUint::from(den)))
}
