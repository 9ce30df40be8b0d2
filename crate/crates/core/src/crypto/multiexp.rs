use rug::Integer;

use super::comb::windows;

fn bucket_width(terms: usize) -> u32 {
    match terms {
        0..=4 => 2,
        5..=12 => 3,
        13..=32 => 4,
        33..=90 => 5,
        91..=250 => 6,
        251..=700 => 7,
        _ => 8,
    }
}

/// `Π bases[i]^exps[i] mod m` (bucket method for three or more terms).
pub fn multi_exp(bases: &[&Integer], exps: &[&Integer], m: &Integer) -> Integer {
    assert_eq!(bases.len(), exps.len());
    if bases.len() < 3 {
        let mut acc = Integer::from(1);
        for (b, e) in bases.iter().zip(exps) {
            acc *= Integer::from(b.pow_mod_ref(e, m).expect("non-negative exponent"));
            acc %= m;
        }
        return acc;
    }
    let c = bucket_width(bases.len());
    let bits = exps.iter().map(|e| e.significant_bits()).max().unwrap_or(0) as usize;
    let nwin = bits.div_ceil(c as usize);
    let digits: Vec<Vec<u32>> = exps.iter().map(|e| windows(e, c, nwin)).collect();
    let mut acc = Integer::from(1);
    let mut buckets: Vec<Option<Integer>> = vec![None; 1 << c];
    for win in (0..nwin).rev() {
        for _ in 0..c {
            acc.square_mut();
            acc %= m;
        }
        for (b, d) in bases.iter().zip(&digits) {
            let d = d[win] as usize;
            if d != 0 {
                match &mut buckets[d] {
                    Some(x) => {
                        *x *= *b;
                        *x %= m;
                    }
                    slot => *slot = Some((*b).clone()),
                }
            }
        }
        // Σ d·bucket[d] as a product: running suffix products.
        let mut running: Option<Integer> = None;
        let mut total: Option<Integer> = None;
        for slot in buckets.iter_mut().skip(1).rev() {
            if let Some(x) = slot.take() {
                running = Some(match running {
                    Some(r) => (r * x) % m,
                    None => x,
                });
            }
            if let Some(r) = &running {
                total = Some(match total {
                    Some(t) => (t * r) % m,
                    None => r.clone(),
                });
            }
        }
        if let Some(t) = total {
            acc *= t;
            acc %= m;
        }
    }
    acc
}
