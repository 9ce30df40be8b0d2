use super::SparseVec;

/// Gaussian hyperplanes `G[m][l][k] ∈ ℝ^{d+1}`, generated on demand from the
/// seed. Entry `(m, l, k, j)` is a pure function of its coordinates, so the
/// bank never needs to be stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaussianBank {
    seed: u64,
    dim: usize,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl GaussianBank {
    /// Bank over `ℝ^{dim}`; for a universe of `d` items use `dim = d + 1`.
    pub fn new(seed: u64, dim: usize) -> Self {
        GaussianBank { seed, dim }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Standard normal entry `j` of hyperplane `(m, l, k)` (Box-Muller).
    pub fn entry(&self, m: usize, l: usize, k: usize, j: usize) -> f64 {
        let row = splitmix(self.seed ^ splitmix(((m as u64) << 48) ^ ((l as u64) << 24) ^ k as u64));
        let h = splitmix(row ^ (j as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
        let h2 = splitmix(h);
        // u1 in (0, 1], u2 in [0, 1).
        let u1 = ((h >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
        let u2 = (h2 >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Materializes one hyperplane as a dense vector.
    pub fn vector(&self, m: usize, l: usize, k: usize) -> Vec<f64> {
        (0..self.dim).map(|j| self.entry(m, l, k, j)).collect()
    }

    /// `⟨G[m][l][k], v⟩` accumulated in coordinate order.
    pub fn dot(&self, m: usize, l: usize, k: usize, v: &SparseVec) -> f64 {
        v.iter().map(|&(j, x)| self.entry(m, l, k, j) * x).sum()
    }

    /// `width`-bit signature; bit `k` is set iff `⟨G[m][l][k], v⟩ ≥ 0`.
    pub fn signature(&self, m: usize, l: usize, width: usize, v: &SparseVec) -> u64 {
        debug_assert!(width <= 64);
        let mut sig = 0u64;
        for k in 0..width {
            if self.dot(m, l, k, v) >= 0.0 {
                sig |= 1 << k;
            }
        }
        sig
    }
}
