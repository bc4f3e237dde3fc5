//! Exact integer arithmetic for the region-growing charging inequalities and
//! the count bounds. Everything here avoids float `powf`, so comparisons are
//! deterministic and tie-free.

use num_bigint::BigUint;

/// Is `a^k * ae <= b^k * be`? This is the exact form of
/// `a <= b * (x/y)^(1/k)` with `x/y = be/ae`.
pub fn pow_scaled_le(a: u64, ae: u64, b: u64, be: u64, k: u32) -> bool {
    BigUint::from(a).pow(k) * ae <= BigUint::from(b).pow(k) * be
}

/// Is `sur >= m^(1-1/k)`, evaluated exactly as `sur^k >= m^(k-1)`.
pub fn survival_ok(sur: u64, m: u64, k: u32) -> bool {
    debug_assert!(k >= 1);
    BigUint::from(sur).pow(k) >= BigUint::from(m).pow(k - 1)
}

/// `ceil(m^(1-1/k))`: the least `c` with `c^k >= m^(k-1)`.
pub fn ceil_pow_ratio(m: u64, k: u32) -> u64 {
    debug_assert!(k >= 1);
    if m == 0 {
        return 0;
    }
    let target = BigUint::from(m).pow(k - 1);
    let mut lo = 0u64;
    let mut hi = m; // m^k >= m^(k-1)
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if BigUint::from(mid).pow(k) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// `ceil(k * n^(1/k))`: the least `c` with `c^k >= k^k * n`.
pub fn ceil_k_times_root(n: u64, k: u32) -> u64 {
    let target = BigUint::from(k as u64).pow(k) * n;
    let mut lo = 0u64;
    let mut hi = (k as u64) * n.max(1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if BigUint::from(mid).pow(k) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Rounds needed by the worst-case recurrence `m <- m - ceil(m^(1-1/k))`
/// to empty a set of `n` items. Oracle and forest sizes are bounded by this.
pub fn recurrence_rounds(n: u64, k: u32) -> u64 {
    let mut m = n;
    let mut rounds = 0;
    while m > 0 {
        m -= ceil_pow_ratio(m, k).max(1);
        rounds += 1;
    }
    rounds
}

/// `max(1, ceil(1 + log2(log2(m))))`, evaluated exactly as
/// `1 + min{e >= 0 : 2^(2^e) >= m}`, with the convention `1` for `m <= 2`.
pub fn petal_level_count(m: u64) -> u32 {
    if m <= 2 {
        return 1;
    }
    let mut e = 0u32;
    loop {
        // 2^(2^e) >= m  <=>  2^e >= bits needed; avoid overflow via bit length
        if (1u32 << e) as u64 >= 64 || (1u64 << (1u32 << e)) >= m {
            return 1 + e;
        }
        e += 1;
    }
}
