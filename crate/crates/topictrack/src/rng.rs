//! Deterministic random number generation for the scenario generator.
//!
//! The generator is xoshiro256** seeded through SplitMix64, written out here
//! so that a fixed seed reproduces the exact same scenario on any platform or
//! in any reimplementation:
//!
//! * seeding: starting from the user seed `s`, four state words are drawn by
//!   SplitMix64: `s += 0x9E3779B97F4A7C15; z = s; z = (z ^ (z >> 30)) *
//!   0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) * 0x94D049BB133111EB; z = z ^
//!   (z >> 31)`.
//! * next: `result = rotl(s1 * 5, 7) * 9` followed by the xoshiro256**
//!   state update (`t = s1 << 17; s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3;
//!   s2 ^= t; s3 = rotl(s3, 45)`).
//! * uniform f64 in [0, 1): the top 53 bits of `next()` times 2^-53.
//! * standard normal: sum of 12 uniforms minus 6 (Irwin-Hall approximation;
//!   uses only IEEE additions, so it is bit-stable everywhere).
//!
//! No platform or library RNG is involved anywhere in scenario generation.

#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self { s }
    }

    /// Next raw 64-bit draw (xoshiro256**).
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1): top 53 bits scaled by 2^-53.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n). `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        (self.uniform() * n as f64) as usize % n
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Approximately standard normal (Irwin-Hall, 12 uniforms). Bounded in [-6, 6].
    pub fn gaussian(&mut self) -> f64 {
        let mut acc = 0.0;
        for _ in 0..12 {
            acc += self.uniform();
        }
        acc - 6.0
    }

    pub fn gaussian_scaled(&mut self, sigma: f64) -> f64 {
        self.gaussian() * sigma
    }

    /// Random unit vector of dimension `dim` (componentwise gaussian, renormalized).
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.gaussian()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}
