//! Test-only helpers shared by the integration suites.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight transcription of the ART1 clustering procedure, written without
/// reference to the library: plain loops over plain matrices, winner found
/// by a first-strictly-greater scan, every formula spelled out term by term.
pub struct ReferenceArt1 {
    pub n: usize,
    pub m: usize,
    pub rho: f64,
    pub b: Vec<Vec<f64>>,
    pub t: Vec<Vec<u8>>,
}

#[derive(Debug, PartialEq)]
pub struct ReferenceCapacity;

impl ReferenceArt1 {
    pub fn new(n: usize, m: usize, rho: f64) -> Self {
        ReferenceArt1 {
            n,
            m,
            rho,
            b: vec![],
            t: vec![],
        }
    }

    pub fn present(&mut self, x: &[u8]) -> Result<usize, ReferenceCapacity> {
        let n = self.n;
        // matching value for every output node
        let mut net = vec![0.0f64; self.t.len()];
        for j in 0..self.t.len() {
            let mut s = 0.0;
            for i in 0..n {
                s += x[i] as f64 * self.b[j][i];
            }
            net[j] = s;
        }
        let mut tried = vec![false; self.t.len()];
        loop {
            let mut winner: Option<usize> = None;
            for j in 0..self.t.len() {
                if tried[j] {
                    continue;
                }
                if winner.is_none() || net[j] > net[winner.unwrap()] {
                    winner = Some(j);
                }
            }
            let Some(js) = winner else { break };
            let mut num = 0u32;
            let mut den = 0u32;
            for i in 0..n {
                num += (self.t[js][i] * x[i]) as u32;
                den += x[i] as u32;
            }
            let v = num as f64 / den as f64;
            if v < self.rho {
                tried[js] = true;
                continue;
            }
            let mut k = 0u32;
            for i in 0..n {
                self.t[js][i] *= x[i];
                k += self.t[js][i] as u32;
            }
            for i in 0..n {
                self.b[js][i] = (self.t[js][i] * x[i]) as f64 / (0.5 + k as f64);
            }
            return Ok(js);
        }
        if self.t.len() == self.m {
            return Err(ReferenceCapacity);
        }
        let sum: u32 = x.iter().map(|&v| v as u32).sum();
        self.t.push(x.to_vec());
        self.b.push(x.iter().map(|&v| v as f64 / (0.5 + sum as f64)).collect());
        Ok(self.t.len() - 1)
    }

    /// Full passes until two consecutive passes agree or `max_epochs` ran.
    pub fn train(&mut self, patterns: &[Vec<u8>], max_epochs: usize) -> Result<Vec<usize>, ReferenceCapacity> {
        let mut prev: Vec<usize> = vec![];
        for epoch in 0..max_epochs {
            let mut cur = vec![];
            for x in patterns {
                cur.push(self.present(x)?);
            }
            if epoch > 0 && cur == prev {
                return Ok(cur);
            }
            prev = cur;
        }
        Ok(prev)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random binary vector of length `n` with at least one set bit.
pub fn nonzero_pattern<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<u8> {
    loop {
        let x: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(density))).collect();
        if x.contains(&1) {
            return x;
        }
    }
}

pub fn is_subset(x: &[u8], t: &[u8]) -> bool {
    x.iter().zip(t).all(|(&a, &b)| a <= b)
}
