use rug::integer::Order;
use rug::Integer;

/// Splits `e` into `count` little-endian digits of `w` bits (`w ≤ 32`).
pub(crate) fn windows(e: &Integer, w: u32, count: usize) -> Vec<u32> {
    let limbs = e.to_digits::<u64>(Order::Lsf);
    let mask = (1u64 << w) - 1;
    (0..count)
        .map(|i| {
            let bit = i * w as usize;
            let (limb, off) = (bit / 64, bit % 64);
            let lo = limbs.get(limb).copied().unwrap_or(0) >> off;
            let hi = if off + w as usize > 64 { limbs.get(limb + 1).copied().unwrap_or(0) << (64 - off) } else { 0 };
            ((lo | hi) & mask) as u32
        })
        .collect()
}

/// Fixed-base exponentiation table: row `i` holds `b^(j·2^(w·i))` for every
/// `w`-bit digit `j`, so an exponent of `E` bits costs `⌈E/w⌉` products.
#[derive(Debug)]
pub(crate) struct FixedBase {
    window: u32,
    rows: Vec<Vec<Integer>>,
    modulus: Integer,
}

impl FixedBase {
    pub fn new(base: &Integer, modulus: &Integer, exp_bits: u32, window: u32) -> Self {
        let nrows = exp_bits.div_ceil(window) as usize;
        let mut rows = Vec::with_capacity(nrows);
        let mut g = Integer::from(base % modulus);
        for _ in 0..nrows {
            let mut row = Vec::with_capacity(1 << window);
            row.push(Integer::from(1));
            for j in 1..(1usize << window) {
                let next = Integer::from(&row[j - 1] * &g) % modulus;
                row.push(next);
            }
            // g^(2^w) for the next row.
            g = Integer::from(&row[(1 << window) - 1] * &g) % modulus;
            rows.push(row);
        }
        FixedBase { window, rows, modulus: modulus.clone() }
    }

    /// `b^e mod m`; `e` must have at most `exp_bits` bits.
    pub fn pow(&self, e: &Integer) -> Integer {
        debug_assert!(e.significant_bits() as usize <= self.rows.len() * self.window as usize);
        let digits = windows(e, self.window, self.rows.len());
        let mut acc = Integer::from(1);
        for (row, &d) in self.rows.iter().zip(&digits) {
            if d != 0 {
                acc *= &row[d as usize];
                acc %= &self.modulus;
            }
        }
        acc
    }
}
