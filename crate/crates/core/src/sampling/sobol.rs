use super::sobol_table::{INITIAL, MAX_DIM, POLYNOMIALS};
use crate::error::{Error, Result};

const BITS: usize = 32;

/// Unscrambled Sobol sequence in Gray-code order.
///
/// Index 0 is the origin; [`SobolStream::new`] starts at index 1 so every
/// emitted point lies strictly inside the unit cube.
#[derive(Debug, Clone)]
pub struct SobolStream {
    dim: usize,
    next_index: u64,
    direction_numbers: Vec<[u32; BITS]>,
    state: Vec<u32>,
}

impl SobolStream {
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_skip(dim, 1)
    }

    /// Positions the stream so that the first emitted point has index `skip`.
    pub fn with_skip(dim: usize, skip: u64) -> Result<Self> {
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
        }
        let direction_numbers: Vec<[u32; BITS]> = (0..dim).map(direction_numbers).collect();
        let mut stream = Self {
            dim,
            next_index: 0,
            state: vec![0; dim],
            direction_numbers,
        };
        // Gray code of `skip` determines the state directly.
        let gray = skip ^ (skip >> 1);
        for (j, s) in stream.state.iter_mut().enumerate() {
            for bit in 0..BITS {
                if gray >> bit & 1 == 1 {
                    *s ^= stream.direction_numbers[j][bit];
                }
            }
        }
        stream.next_index = skip;
        Ok(stream)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    /// Writes the next point into `out` (length `dim`).
    pub fn next_into(&mut self, out: &mut [f64]) {
        const SCALE: f64 = 1.0 / (1u64 << BITS) as f64;
        for (o, s) in out.iter_mut().zip(&self.state) {
            *o = f64::from(*s) * SCALE;
        }
        let c = self.next_index.trailing_ones() as usize;
        assert!(c < BITS, "Sobol stream exhausted after 2^32 points");
        for (s, v) in self.state.iter_mut().zip(&self.direction_numbers) {
            *s ^= v[c];
        }
        self.next_index += 1;
    }
}

impl Iterator for SobolStream {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let mut p = vec![0.0; self.dim];
        self.next_into(&mut p);
        Some(p)
    }
}

/// `n` consecutive Sobol points starting at index `skip`.
pub fn sobol_points(dim: usize, n: usize, skip: u64) -> Result<Vec<Vec<f64>>> {
    if n as u64 + skip > 1u64 << BITS {
        return Err(Error::OutOfDomain {
            what: "sobol index",
            value: (n as u64 + skip) as f64,
        });
    }
    Ok(SobolStream::with_skip(dim, skip)?.take(n).collect())
}

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let poly = POLYNOMIALS[dim];
    let degree = (u32::BITS - poly.leading_zeros() - 1) as usize;
    let init = INITIAL[dim];
    let mut m = [0u32; BITS];
    m[..degree].copy_from_slice(&init[..degree]);
    for k in degree..BITS {
        let mut mk = m[k - degree] ^ (m[k - degree] << degree);
        for i in 1..degree {
            if poly >> (degree - i) & 1 == 1 {
                mk ^= m[k - i] << i;
            }
        }
        m[k] = mk;
    }
    for k in 0..BITS {
        v[k] = m[k] << (BITS - 1 - k);
    }
    v
}
