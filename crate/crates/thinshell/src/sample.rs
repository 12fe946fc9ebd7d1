//! Deterministic low-discrepancy sampling of chart domains.
//!
//! Verification sweeps sample interior points of a chart box. A small
//! Sobol generator (gray-code construction, digitally shifted by a
//! seeded stream so different seeds give different but reproducible
//! point sets) covers the box more evenly than plain pseudo-random
//! draws at the tiny sample counts used here.

use rand::Rng;

use crate::analytic::seeded_rng;
use crate::geometry::Chart;

// Primitive-polynomial degrees, coefficients, and initial direction
// numbers for the first Sobol dimensions (dimension 1 is van der
// Corput). Enough for every chart dimension this library handles.
const SOBOL_S: [usize; 7] = [1, 2, 3, 3, 4, 4, 5];
const SOBOL_A: [u32; 7] = [0, 1, 1, 2, 1, 4, 2];
const SOBOL_M: [&[u32]; 7] = [
    &[1],
    &[1, 3],
    &[1, 3, 1],
    &[1, 1, 1],
    &[1, 1, 3, 3],
    &[1, 3, 5, 13],
    &[1, 1, 5, 5, 17],
];

const BITS: usize = 32;

/// Digitally shifted Sobol sequence over `[0, 1)^dim`.
pub struct SobolSequence {
    dim: usize,
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    shift: Vec<u32>,
    index: u64,
}

impl SobolSequence {
    /// Supports `dim <= 8`; the shift stream is derived from `seed`.
    pub fn new(dim: usize, seed: u64) -> SobolSequence {
        assert!(
            dim >= 1 && dim <= SOBOL_S.len() + 1,
            "unsupported dimension"
        );
        let mut directions = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut v = [0u32; BITS];
            if d == 0 {
                for (k, slot) in v.iter_mut().enumerate() {
                    *slot = 1 << (BITS - 1 - k);
                }
            } else {
                let s = SOBOL_S[d - 1];
                let a = SOBOL_A[d - 1];
                let m = SOBOL_M[d - 1];
                for k in 0..s.min(BITS) {
                    v[k] = m[k] << (BITS - 1 - k);
                }
                for k in s..BITS {
                    let mut value = v[k - s] ^ (v[k - s] >> s);
                    for bit in 1..s {
                        if (a >> (s - 1 - bit)) & 1 == 1 {
                            value ^= v[k - bit];
                        }
                    }
                    v[k] = value;
                }
            }
            directions.push(v);
        }
        let mut rng = seeded_rng(seed, 0x50B01);
        let shift = (0..dim).map(|_| rng.random::<u32>()).collect();
        SobolSequence {
            dim,
            directions,
            state: vec![0; dim],
            shift,
            index: 0,
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        // gray-code update: flip along the lowest zero bit of the index
        let bit = self.index.trailing_ones() as usize;
        self.index += 1;
        let mut out = Vec::with_capacity(self.dim);
        for d in 0..self.dim {
            self.state[d] ^= self.directions[d][bit.min(BITS - 1)];
            let shifted = self.state[d] ^ self.shift[d];
            out.push(shifted as f64 / (u32::MAX as f64 + 1.0));
        }
        out
    }
}

/// `count` points in the chart box shrunk by `margin` on each side,
/// deterministic in `seed`.
pub fn sample_interior(chart: &Chart, count: usize, seed: u64, margin: f64) -> Vec<Vec<f64>> {
    let mut sobol = SobolSequence::new(chart.dim(), seed);
    (0..count)
        .map(|_| {
            let unit = sobol.next_point();
            chart
                .domain()
                .iter()
                .zip(&unit)
                .map(|(&(lo, hi), &t)| {
                    let pad = margin * (hi - lo);
                    lo + pad + t * (hi - lo - 2.0 * pad)
                })
                .collect()
        })
        .collect()
}
