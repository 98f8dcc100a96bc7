//! Counter-based normal draws.
//!
//! Every Brownian increment is a pure function of
//! `(seed, run, path, step, dim)`: the pair `(seed, run)` is hashed into a
//! Philox-4x32-10 key and `(path, step, dim)` forms the counter. Draws can be
//! produced in any order, on any thread, and always agree bitwise.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// Philox-4x32 with 10 rounds.
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let p0 = (PHILOX_M0 as u64) * (c[0] as u64);
        let p1 = (PHILOX_M1 as u64) * (c[2] as u64);
        let (hi0, lo0) = ((p0 >> 32) as u32, p0 as u32);
        let (hi1, lo1) = ((p1 >> 32) as u32, p1 as u32);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key material for one independent run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey([u32; 2]);

impl StreamKey {
    pub fn new(seed: u64, run: u64) -> Self {
        let h = splitmix64(splitmix64(seed) ^ run.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        StreamKey([h as u32, (h >> 32) as u32])
    }

    /// Standard normal draw for one `(path, step, dim)` triple.
    #[inline]
    pub fn normal(&self, path: u64, step: u32, dim: u32) -> f64 {
        let w = philox4x32([path as u32, (path >> 32) as u32, step, dim], self.0);
        // Two 53-bit uniforms in (0, 1], then Box-Muller (cosine branch).
        let u1 = (((((w[0] as u64) << 32) | w[1] as u64) >> 11) + 1) as f64
            * (1.0 / 9_007_199_254_740_992.0);
        let u2 =
            ((((w[2] as u64) << 32) | w[3] as u64) >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Standard normal increment for `(seed, run, path, step, dim)`.
pub fn draw_increment(seed: u64, run: u64, path: u64, step: u32, dim: u32) -> f64 {
    StreamKey::new(seed, run).normal(path, step, dim)
}
