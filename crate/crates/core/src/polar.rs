//! Polar codes in natural (non bit-reversed) order.
//!
//! Codewords are `x = u · F^{⊗n}` over GF(2) with `F = [[1, 0], [1, 1]]`.
//! LLRs follow the convention that a positive value favours bit 0.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarCode {
    n: usize,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
}

impl PolarCode {
    /// Code with an information set from the Bhattacharyya recursion.
    pub fn new(n: usize, k: usize, design_z: f64) -> Result<Self> {
        let info_set = construct_info_set(n, k, design_z)?;
        PolarCode::with_info_set(n, info_set)
    }

    /// The (16, 8) code with `z0 = 0.5`.
    pub fn default_16_8() -> Self {
        PolarCode::new(16, 8, 0.5).expect("valid default code")
    }

    pub fn with_info_set(n: usize, mut info_set: Vec<usize>) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::InvalidSpec(format!("block length {n} is not a power of two")));
        }
        info_set.sort_unstable();
        info_set.dedup();
        if info_set.is_empty() || info_set.last().is_some_and(|&i| i >= n) {
            return Err(Error::InvalidSpec(format!(
                "bad information set {info_set:?} for N = {n}"
            )));
        }
        let mut frozen = vec![true; n];
        for &i in &info_set {
            frozen[i] = false;
        }
        Ok(PolarCode { n, info_set, frozen })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.info_set.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    /// Places the message on the information set, zeros elsewhere.
    pub fn u_vector(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k() {
            return Err(Error::contract(format!(
                "message has {} bits, code carries {}",
                message.len(),
                self.k()
            )));
        }
        let mut u = vec![0u8; self.n];
        for (&i, &b) in self.info_set.iter().zip(message) {
            u[i] = b & 1;
        }
        Ok(u)
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        let mut x = self.u_vector(message)?;
        transform(&mut x);
        Ok(x)
    }

    /// Successive-cancellation decoding with exact box-plus check-node updates.
    pub fn sc_decode(&self, llrs: &[f64]) -> Result<Vec<u8>> {
        if llrs.len() != self.n {
            return Err(Error::contract(format!(
                "SC decoder expects {} LLRs, got {}",
                self.n,
                llrs.len()
            )));
        }
        let mut u = vec![0u8; self.n];
        sc_node(llrs, &self.frozen, &mut u);
        Ok(self.info_set.iter().map(|&i| u[i]).collect())
    }

    /// Every codeword paired with its message, messages in binary counting order
    /// (message bit j is bit j of the counter).
    pub fn codebook(&self) -> Vec<(Vec<u8>, Vec<u8>)> {
        let k = self.k();
        (0..1u64 << k)
            .map(|m| {
                let msg: Vec<u8> = (0..k).map(|j| ((m >> j) & 1) as u8).collect();
                let cw = self.encode(&msg).expect("length matches");
                (msg, cw)
            })
            .collect()
    }
}

/// In-place `x ← x · F^{⊗n}` over GF(2). The transform is its own inverse.
pub fn transform(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut half = n / 2;
    while half >= 1 {
        for block in bits.chunks_exact_mut(2 * half) {
            let (left, right) = block.split_at_mut(half);
            for (l, r) in left.iter_mut().zip(right.iter()) {
                *l ^= *r;
            }
        }
        half /= 2;
    }
}

/// Bhattacharyya-parameter construction: starting from `z0`, each level maps
/// `z` to the pair `(2z - z², z²)`; the `k` indices with the smallest final
/// parameter carry information. Ties go to the larger index.
pub fn construct_info_set(n: usize, k: usize, design_z: f64) -> Result<Vec<usize>> {
    if !n.is_power_of_two() {
        return Err(Error::InvalidSpec(format!("block length {n} is not a power of two")));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidSpec(format!("need 0 < K <= N, got K = {k}, N = {n}")));
    }
    if !(design_z > 0.0 && design_z < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "design parameter {design_z} outside (0, 1)"
        )));
    }
    let z = bhattacharyya(n, design_z);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(b.cmp(&a)));
    let mut info: Vec<usize> = order[..k].to_vec();
    info.sort_unstable();
    Ok(info)
}

/// Bit-channel Bhattacharyya parameters in natural index order.
pub fn bhattacharyya(n: usize, design_z: f64) -> Vec<f64> {
    let mut z = vec![design_z];
    while z.len() < n {
        z = z.iter().flat_map(|&v| [2.0 * v - v * v, v * v]).collect();
    }
    z
}

/// Check-node update `2 atanh(tanh(a/2) tanh(b/2))`, computed stably.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    // ln(1 + e^(a+b)) - ln(e^a + e^b)
    let log1pexp = |x: f64| x.max(0.0) + (-x.abs()).exp().ln_1p();
    log1pexp(a + b) - (a.max(b) + (-(a - b).abs()).exp().ln_1p())
}

/// Recursive SC on one sub-block. Writes decided `u` bits and returns the
/// re-encoded partial sums of this sub-block.
fn sc_node(llrs: &[f64], frozen: &[bool], u: &mut [u8]) -> Vec<u8> {
    let n = llrs.len();
    if n == 1 {
        let bit = if frozen[0] { 0 } else { u8::from(llrs[0] < 0.0) };
        u[0] = bit;
        return vec![bit];
    }
    let half = n / 2;
    let (la, lb) = llrs.split_at(half);
    let left: Vec<f64> = la.iter().zip(lb).map(|(&a, &b)| boxplus(a, b)).collect();
    let (fl, fr) = frozen.split_at(half);
    let (ul, ur) = u.split_at_mut(half);
    let c1 = sc_node(&left, fl, ul);
    let right: Vec<f64> = la
        .iter()
        .zip(lb)
        .zip(&c1)
        .map(|((&a, &b), &c)| b + if c == 0 { a } else { -a })
        .collect();
    let c2 = sc_node(&right, fr, ur);
    let mut x: Vec<u8> = c1.iter().zip(&c2).map(|(a, b)| a ^ b).collect();
    x.extend_from_slice(&c2);
    x
}
