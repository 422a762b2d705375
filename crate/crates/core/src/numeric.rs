//! Small numerical helpers shared across modules.

/// Correctly rounded floating-point sum.
///
/// Every finite `f64` is an integer multiple of `2^-1074`, so the summands are
/// accumulated exactly as a fixed-point integer in 32-bit digits (held in
/// `i64` slots for carry headroom) and rounded once at the end. The result
/// depends only on the multiset of summands, so permuting the inputs never
/// changes a single bit of the output. Non-finite inputs give the naive sum.
pub fn exact_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut acc = SuperAccumulator::new();
    let mut special = 0.0;
    for x in items {
        if x.is_finite() {
            acc.add(x);
        } else {
            special += x;
        }
    }
    if special != 0.0 || special.is_nan() {
        return special;
    }
    acc.round()
}

const DIGITS: usize = 68;
const DIGIT_BITS: u32 = 32;
const DIGIT_MASK: u128 = (1 << DIGIT_BITS) - 1;

struct SuperAccumulator {
    digits: [i64; DIGITS],
    pending: u32,
}

impl SuperAccumulator {
    fn new() -> Self {
        SuperAccumulator { digits: [0; DIGITS], pending: 0 }
    }

    fn add(&mut self, x: f64) {
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as u32;
        let frac = bits & ((1 << 52) - 1);
        // x = ±mant · 2^(pos - 1074)
        let (mant, pos) = if biased == 0 { (frac, 0) } else { (frac | (1 << 52), biased - 1) };
        if mant == 0 {
            return;
        }
        let wide = (mant as u128) << (pos % DIGIT_BITS);
        let k = (pos / DIGIT_BITS) as usize;
        let parts = [(wide & DIGIT_MASK) as i64, ((wide >> 32) & DIGIT_MASK) as i64, (wide >> 64) as i64];
        if x < 0.0 {
            for (d, v) in self.digits[k..k + 3].iter_mut().zip(parts) {
                *d -= v;
            }
        } else {
            for (d, v) in self.digits[k..k + 3].iter_mut().zip(parts) {
                *d += v;
            }
        }
        self.pending += 1;
        // each digit gains less than 2^32 per add, far below i64 range
        if self.pending == 1 << 29 {
            self.carry();
        }
    }

    /// Brings every digit but the top one into `[0, 2^32)`.
    fn carry(&mut self) {
        for k in 0..DIGITS - 1 {
            let c = self.digits[k] >> DIGIT_BITS;
            self.digits[k] -= c << DIGIT_BITS;
            self.digits[k + 1] += c;
        }
        self.pending = 0;
    }

    fn round(mut self) -> f64 {
        self.carry();
        let negative = self.digits[DIGITS - 1] < 0;
        if negative {
            for d in self.digits.iter_mut() {
                *d = -*d;
            }
            self.carry();
        }
        let Some(top) = self.digits.iter().rposition(|&d| d != 0) else {
            return 0.0;
        };
        let lo = top.saturating_sub(2);
        let mut window: u128 = 0;
        for k in (lo..=top).rev() {
            window = (window << DIGIT_BITS) | self.digits[k] as u128;
        }
        // sticky bit: the window keeps at least 64 bits, so this only breaks ties
        if self.digits[..lo].iter().any(|&d| d != 0) {
            window |= 1;
        }
        let exponent = (lo as i32) * DIGIT_BITS as i32 - 1074;
        let half = exponent / 2;
        let magnitude = window as f64 * pow2(half) * pow2(exponent - half);
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

/// `2^e` for `-1022 <= e <= 1023`.
fn pow2(e: i32) -> f64 {
    f64::from_bits(((e + 1023) as u64) << 52)
}

pub fn abs_pow(v: f64, r: f64) -> f64 {
    let a = v.abs();
    if r == 2.0 {
        a * a
    } else if r == 1.0 {
        a
    } else if r == r.trunc() && r > 0.0 && r <= 8.0 {
        a.powi(r as i32)
    } else {
        a.powf(r)
    }
}

/// `Γ(n/2)` for positive integer `n`.
pub fn gamma_half_integer(n: usize) -> f64 {
    assert!(n > 0);
    let (mut g, mut x) = if n % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    let target = n as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface area of the unit sphere in `R^n`, i.e. `n·ω_n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half_integer(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Shewchuk's algorithm, as in Python's `math.fsum`.
    fn fsum_reference(items: &[f64]) -> f64 {
        let mut partials: Vec<f64> = Vec::with_capacity(8);
        for &x in items {
                let mut x = x;
            let mut i = 0;
            for j in 0..partials.len() {
                let mut y = partials[j];
                if x.abs() < y.abs() {
                    std::mem::swap(&mut x, &mut y);
                }
                let hi = x + y;
                let lo = y - (hi - x);
                if lo != 0.0 {
                    partials[i] = lo;
                    i += 1;
                }
                x = hi;
            }
            partials.truncate(i);
            partials.push(x);
        }

        let mut n = partials.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = partials[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = partials[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // half-way case: round toward the sign of the remaining partials
        if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }

    /// `|v|^r`, with the common integer exponents done by multiplication.
    #[inline]

    fn any_finite() -> impl Strategy<Value = f64> {
        (any::<bool>(), -1074i32..1000, 0.0f64..1.0).prop_map(|(neg, e, m)| {
            let v = (1.0 + m) * 2f64.powi(e);
            if neg { -v } else { v }
        })
    }

    proptest! {
        #[test]
        fn matches_reference_rounding(v in proptest::collection::vec(any_finite(), 0..80)) {
            let ours = exact_sum(v.iter().copied());
            let reference = fsum_reference(&v);
            prop_assert!(ours == reference || (ours == 0.0 && reference == 0.0), "{ours:e} vs {reference:e}");
        }

        #[test]
        fn matches_reference_on_cancellation(v in proptest::collection::vec(-1e3f64..1e3, 1..60), k in 0usize..60) {
            let mut w = v.clone();
            w.extend(v.iter().take(k).map(|x| -x * (1.0 + 1e-15)));
            prop_assert_eq!(exact_sum(w.iter().copied()), fsum_reference(&w));
        }
    }

    #[test]
    fn extreme_and_special_values() {
        let tiny = f64::from_bits(1);
        assert_eq!(exact_sum([tiny, tiny, -tiny]), tiny);
        assert_eq!(exact_sum([f64::MAX, -f64::MAX, 1.0]), 1.0);
        assert_eq!(exact_sum([f64::MAX, f64::MAX]), f64::INFINITY);
        assert!(exact_sum([1.0, f64::NAN]).is_nan());
        assert_eq!(exact_sum([1.0, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert_eq!(exact_sum(std::iter::empty()), 0.0);
        assert_eq!(exact_sum([1.0, 2f64.powi(-53)]), 1.0);
        assert_eq!(exact_sum([1.0, 2f64.powi(-53), 2f64.powi(-100)]), 1.0 + f64::EPSILON);
    }

    #[test]
    fn exact_sum_is_order_independent() {
        let v = vec![1e16, 1.0, -1e16, 3.5, 1e-7, 2.0f64.powi(-60), -0.3];
        let mut w = v.clone();
        w.reverse();
        assert_eq!(exact_sum(v.iter().copied()), exact_sum(w.iter().copied()));
        assert_eq!(exact_sum(std::iter::repeat(0.1).take(10)), 1.0);
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-13);
    }
}
