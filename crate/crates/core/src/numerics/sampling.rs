use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Joe–Kuo primitive polynomials `(degree, coefficients, initial m_k)` for
/// Sobol dimensions 2..=16.
const SOBOL_POLYS: [(u32, u32, &[u32]); 15] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];
const MAX_LD_DIMENSION: usize = 16;

fn sobol_directions(dim: usize) -> [u32; 32] {
    let mut v = [0u32; 32];
    if dim == 0 {
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = 1 << (31 - j);
        }
        return v;
    }
    let (s, a, m) = SOBOL_POLYS[dim - 1];
    let s = s as usize;
    for j in 0..s {
        v[j] = m[j] << (31 - j);
    }
    for j in s..32 {
        let mut x = v[j - s] ^ (v[j - s] >> s);
        for k in 1..s {
            if (a >> (s - 1 - k)) & 1 == 1 {
                x ^= v[j - k];
            }
        }
        v[j] = x;
    }
    v
}

// Hash-based nested uniform (Owen) scrambling of a 32-bit fraction.
fn owen_scramble(x: u32, seed: u32) -> u32 {
    let mut y = x.reverse_bits();
    y ^= y.wrapping_mul(0x3d20_adea);
    y = y.wrapping_add(seed);
    y = y.wrapping_mul((seed >> 16) | 1);
    y ^= y.wrapping_mul(0x0552_6c56);
    y ^= y.wrapping_mul(0x53a2_2864);
    y.reverse_bits()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleKind {
    PseudoRandom,
    /// Sobol sequence with seed-dependent Owen scrambling.
    LowDiscrepancy,
}

/// Deterministic, index-addressable stream of points in `[0, 1)^dimension`.
///
/// Any point can be generated from its index alone, so chunks of a stream
/// can be evaluated in parallel without changing the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStream {
    pub dimension: usize,
    pub seed: u64,
    pub kind: SampleKind,
    #[serde(skip)]
    directions: Vec<[u32; 32]>,
    #[serde(skip)]
    scramble: Vec<u32>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}


impl SampleStream {
    /// # Panics
    /// If `dimension` is zero, or exceeds 16 for the low-discrepancy kind.
    pub fn new(dimension: usize, seed: u64, kind: SampleKind) -> Self {
        assert!(dimension >= 1, "sample dimension must be positive");
        let (directions, scramble) = match kind {
            SampleKind::LowDiscrepancy => {
                assert!(
                    dimension <= MAX_LD_DIMENSION,
                    "low-discrepancy streams support up to 16 dimensions"
                );
                let dirs = (0..dimension).map(sobol_directions).collect();
                let scr = (0..dimension as u64)
                    .map(|d| splitmix64(splitmix64(seed) ^ d) as u32)
                    .collect();
                (dirs, scr)
            }
            SampleKind::PseudoRandom => (Vec::new(), Vec::new()),
        };
        SampleStream {
            dimension,
            seed,
            kind,
            directions,
            scramble,
        }
    }

    pub fn low_discrepancy(dimension: usize, seed: u64) -> Self {
        Self::new(dimension, seed, SampleKind::LowDiscrepancy)
    }

    pub fn pseudo_random(dimension: usize, seed: u64) -> Self {
        Self::new(dimension, seed, SampleKind::PseudoRandom)
    }

    /// Independent stream for grid cell `cell`.
    pub fn split(&self, cell: u64) -> Self {
        Self::new(self.dimension, splitmix64(splitmix64(self.seed) ^ cell), self.kind)
    }

    /// Writes point `index` into `out`.
    pub fn point_into(&self, index: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dimension);
        match self.kind {
            SampleKind::LowDiscrepancy => {
                assert!(index < 1 << 32, "Sobol streams hold 2^32 points");
                for (d, slot) in out.iter_mut().enumerate() {
                    let mut x = 0u32;
                    let mut i = index;
                    let mut j = 0;
                    while i != 0 {
                        if i & 1 == 1 {
                            x ^= self.directions[d][j];
                        }
                        i >>= 1;
                        j += 1;
                    }
                    let y = owen_scramble(x, self.scramble[d]);
                    *slot = (y as f64 + 0.5) * (1.0 / 4_294_967_296.0);
                }
            }
            SampleKind::PseudoRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_word_pos(index as u128 * self.dimension as u128 * 2);
                for slot in out.iter_mut() {
                    *slot = rng.gen::<f64>();
                }
            }
        }
    }

    /// Calls `visit` on points `start..start + count` in order.
    pub fn for_each_in(&self, start: u64, count: u64, mut visit: impl FnMut(&[f64])) {
        let mut buf = vec![0.0; self.dimension];
        match self.kind {
            SampleKind::LowDiscrepancy => {
                for i in start..start + count {
                    self.point_into(i, &mut buf);
                    visit(&buf);
                }
            }
            SampleKind::PseudoRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_word_pos(start as u128 * self.dimension as u128 * 2);
                for _ in 0..count {
                    for slot in buf.iter_mut() {
                        *slot = rng.gen::<f64>();
                    }
                    visit(&buf);
                }
            }
        }
    }
}

/// First `count` points of the stream.
pub fn sample_unit_cube(stream: &SampleStream, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    stream.for_each_in(0, count as u64, |p| out.push(p.to_vec()));
    out
}

/// Fraction of stream points accepted by `hit`, with a standard error.
///
/// Pseudo-random streams use the binomial error. Low-discrepancy streams are
/// split into 16 independently rotated replicates and the error is the
/// spread of the replicate means.
pub fn estimate_fraction<F>(stream: &SampleStream, count: usize, hit: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> bool + Sync,
{
    use rayon::prelude::*;
    const CHUNK: u64 = 1 << 15;
    let count = count.max(1) as u64;
    let count_hits = |s: &SampleStream, n: u64| -> u64 {
        let chunks = n.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let len = CHUNK.min(n - start);
                let mut hits = 0u64;
                s.for_each_in(start, len, |p| {
                    if hit(p) {
                        hits += 1;
                    }
                });
                hits
            })
            .sum()
    };
    match stream.kind {
        SampleKind::PseudoRandom => {
            let hits = count_hits(stream, count);
            let p = hits as f64 / count as f64;
            (p, (p * (1.0 - p) / count as f64).sqrt())
        }
        SampleKind::LowDiscrepancy => {
            const REPLICATES: u64 = 16;
            let per = (count / REPLICATES).max(1);
            let means: Vec<f64> = (0..REPLICATES)
                .map(|r| count_hits(&stream.split(r), per) as f64 / per as f64)
                .collect();
            let mean = means.iter().sum::<f64>() / REPLICATES as f64;
            let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (REPLICATES - 1) as f64;
            (mean, (var / REPLICATES as f64).sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_random_mean() {
        let n = 100_000;
        let s = SampleStream::pseudo_random(3, 11);
        let pts = sample_unit_cube(&s, n);
        let sigma = 1.0 / (12f64.sqrt() * (n as f64).sqrt());
        for d in 0..3 {
            let mean = pts.iter().map(|p| p[d]).sum::<f64>() / n as f64;
            assert!((mean - 0.5).abs() < 3.0 * sigma, "dim {d}: mean {mean}");
        }
    }

    #[test]
    fn deterministic() {
        for kind in [SampleKind::PseudoRandom, SampleKind::LowDiscrepancy] {
            let a = sample_unit_cube(&SampleStream::new(2, 42, kind), 1000);
            let b = sample_unit_cube(&SampleStream::new(2, 42, kind), 1000);
            assert_eq!(a, b);
            let c = sample_unit_cube(&SampleStream::new(2, 43, kind), 1000);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn random_access_matches_sequential() {
        for kind in [SampleKind::PseudoRandom, SampleKind::LowDiscrepancy] {
            let s = SampleStream::new(3, 5, kind);
            let seq = sample_unit_cube(&s, 50);
            let mut buf = [0.0; 3];
            s.point_into(37, &mut buf);
            assert_eq!(seq[37], buf.to_vec());
            let mut tail = Vec::new();
            s.for_each_in(40, 10, |p| tail.push(p.to_vec()));
            assert_eq!(&seq[40..], &tail[..]);
        }
    }

    #[test]
    fn unit_ball_volume_r4() {
        let n = 1_000_000;
        let s = SampleStream::low_discrepancy(4, 0);
        let mut hits = 0usize;
        s.for_each_in(0, n, |p| {
            let r2: f64 = p.iter().map(|u| (2.0 * u - 1.0).powi(2)).sum();
            if r2 < 1.0 {
                hits += 1;
            }
        });
        let vol = 16.0 * hits as f64 / n as f64;
        let exact = std::f64::consts::PI.powi(2) / 2.0;
        assert!((vol - exact).abs() < 1e-3, "{vol} vs {exact}");
    }

    #[test]
    fn fraction_estimate_brackets_quarter_disk() {
        let quarter = |p: &[f64]| p[0] * p[0] + p[1] * p[1] < 1.0;
        for kind in [SampleKind::PseudoRandom, SampleKind::LowDiscrepancy] {
            let (v, se) = estimate_fraction(&SampleStream::new(2, 3, kind), 200_000, quarter);
            let exact = std::f64::consts::FRAC_PI_4;
            assert!(se > 0.0);
            assert!((v - exact).abs() < 4.0 * se, "{kind:?}: {v} +- {se}");
        }
    }

    #[test]
    fn sobol_prefix_is_stratified() {
        // scrambling preserves the net property: every 1/8 slab of every
        // coordinate receives exactly 1/8 of the first 2^k points
        let s = SampleStream::low_discrepancy(5, 77);
        let pts = sample_unit_cube(&s, 1024);
        for d in 0..5 {
            let mut counts = [0usize; 8];
            for p in &pts {
                counts[(p[d] * 8.0) as usize] += 1;
            }
            assert!(counts.iter().all(|&c| c == 128), "dim {d}: {counts:?}");
        }
    }

    #[test]
    fn unscrambled_directions_match_reference() {
        // second point of the Gray-code Sobol sequence is (1/2, ..., 1/2);
        // the third in natural order is (1/4, 3/4, 3/4, 3/4, ...)
        let d: Vec<[u32; 32]> = (0..4).map(sobol_directions).collect();
        let third: Vec<f64> = d.iter().map(|v| (v[1] as f64) / 4_294_967_296.0).collect();
        assert_eq!(third, vec![0.25, 0.75, 0.75, 0.75]);
    }

    #[test]
    fn split_streams_differ() {
        let a = SampleStream::low_discrepancy(2, 0);
        let b = SampleStream::low_discrepancy(2, 1);
        assert_ne!(a.split(1).seed, b.split(0).seed);
        assert_ne!(sample_unit_cube(&a.split(0), 4), sample_unit_cube(&a.split(1), 4));
    }
}
