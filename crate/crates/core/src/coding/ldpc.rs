//! Binary LDPC codes: systematic encoding from a parity-check matrix and
//! normalized min-sum decoding.

use super::alist::SparseMatrix;
use super::gf2::{self, BitMatrix};
use crate::error::{Error, Result};

/// Magnitude assigned to shortened (known-zero) positions inside the decoder.
const KNOWN_BIT_LLR: f64 = 1e12;

/// A binary LDPC code, optionally shortened.
///
/// The mother code has length `n` and dimension `k`. Shortening fixes the
/// first `shortened` information bits to zero and removes them from the
/// transmitted word, giving an effective `(n - s, k - s)` code.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    matrix: SparseMatrix,
    n: usize,
    k: usize,
    shortened: usize,
    info_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    /// Row `r` selects the information bits whose sum is parity bit `r`.
    parity_masks: Vec<Vec<u64>>,
    /// Mother-code positions that are transmitted, in order.
    transmitted: Vec<usize>,
    edge_var: Vec<usize>,
    check_start: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
}

impl LdpcCode {
    /// Derives a systematic encoder from `matrix`, which must have full row
    /// rank. Pivots are taken from the rightmost columns first, so for
    /// accumulator-structured matrices the information bits occupy the
    /// leading positions.
    pub fn from_matrix(matrix: SparseMatrix) -> Result<Self> {
        let (m, n) = (matrix.rows, matrix.cols);
        if m == 0 || m >= n {
            return Err(Error::Shape(format!("parity-check matrix is {m}x{n}")));
        }
        let mut dense = BitMatrix::zeros(m, n);
        for (c, col) in matrix.col_entries.iter().enumerate() {
            for &r in col {
                dense.set(r, c, true);
            }
        }
        let pivots = dense.reduce((0..n).rev());
        if pivots.len() != m {
            return Err(Error::RankDeficient {
                rank: pivots.len(),
                expected: m,
            });
        }
        let is_pivot = {
            let mut v = vec![false; n];
            pivots.iter().for_each(|&p| v[p] = true);
            v
        };
        let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let k = info_positions.len();
        let parity_masks = (0..m)
            .map(|r| {
                let bits: Vec<u8> = info_positions.iter().map(|&c| u8::from(dense.get(r, c))).collect();
                gf2::pack(&bits)
            })
            .collect();

        let mut edge_var = Vec::new();
        let mut check_start = vec![0];
        let mut var_edges = vec![Vec::new(); n];
        for row in &matrix.row_entries {
            for &v in row {
                var_edges[v].push(edge_var.len());
                edge_var.push(v);
            }
            check_start.push(edge_var.len());
        }
        Ok(LdpcCode {
            matrix,
            n,
            k,
            shortened: 0,
            info_positions,
            parity_positions: pivots,
            parity_masks,
            transmitted: (0..n).collect(),
            edge_var,
            check_start,
            var_edges,
        })
    }

    /// Parses an alist file; `expected` optionally pins `(n, k)`.
    pub fn from_alist(text: &str, expected: Option<(usize, usize)>) -> Result<Self> {
        let code = LdpcCode::from_matrix(SparseMatrix::from_alist(text)?)?;
        if let Some((n, k)) = expected {
            if (code.n, code.k) != (n, k) {
                return Err(Error::Shape(format!(
                    "expected a ({n},{k}) code, alist describes ({},{})",
                    code.n, code.k
                )));
            }
        }
        Ok(code)
    }

    /// Fixes the first `count` information bits to zero and drops them from
    /// the transmitted word.
    pub fn shorten(mut self, count: usize) -> Result<Self> {
        if count >= self.k {
            return Err(Error::InvalidArgument(format!(
                "cannot shorten {count} of {} information bits",
                self.k
            )));
        }
        let dropped: Vec<usize> = self.info_positions[..count].to_vec();
        self.transmitted = (0..self.n).filter(|p| !dropped.contains(p)).collect();
        self.shortened = count;
        Ok(self)
    }

    /// Transmitted code length.
    pub fn n(&self) -> usize {
        self.n - self.shortened
    }

    /// Information bits per codeword.
    pub fn k(&self) -> usize {
        self.k - self.shortened
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn mother_n(&self) -> usize {
        self.n
    }

    pub fn mother_k(&self) -> usize {
        self.k
    }

    pub fn shortened(&self) -> usize {
        self.shortened
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn parity_positions(&self) -> &[usize] {
        &self.parity_positions
    }

    /// Mother-code codeword for `k` mother information bits.
    fn encode_mother(&self, info: &[u8]) -> Vec<u8> {
        let packed = gf2::pack(info);
        let mut word = vec![0u8; self.n];
        for (&p, &b) in self.info_positions.iter().zip(info) {
            word[p] = b & 1;
        }
        for (&p, mask) in self.parity_positions.iter().zip(&self.parity_masks) {
            word[p] = gf2::dot(mask, &packed);
        }
        word
    }

    /// Systematic encoding of `k()` information bits into `n()` coded bits.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                actual: info.len(),
            });
        }
        let mut full = vec![0u8; self.shortened];
        full.extend(info.iter().map(|b| b & 1));
        let word = self.encode_mother(&full);
        Ok(self.transmitted.iter().map(|&p| word[p]).collect())
    }

    /// Rows of a generator matrix of the mother code: the codewords of the
    /// unit information vectors.
    pub fn generator_rows(&self) -> Vec<Vec<u8>> {
        (0..self.k)
            .map(|i| {
                let mut e = vec![0u8; self.k];
                e[i] = 1;
                self.encode_mother(&e)
            })
            .collect()
    }

    /// `H c^T` over GF(2) for a transmitted word (shortened bits taken as 0).
    pub fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        let full = self.expand(word);
        self.matrix
            .row_entries
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &v| acc ^ (full[v] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n() && self.syndrome(word).iter().all(|&s| s == 0)
    }

    fn expand(&self, word: &[u8]) -> Vec<u8> {
        let mut full = vec![0u8; self.n];
        for (&p, &b) in self.transmitted.iter().zip(word) {
            full[p] = b;
        }
        full
    }

    /// Extracts the information bits of a transmitted word.
    pub fn info_bits(&self, word: &[u8]) -> Vec<u8> {
        let full = self.expand(word);
        self.info_positions[self.shortened..].iter().map(|&p| full[p]).collect()
    }

    /// Normalized min-sum decoding (flooding schedule).
    ///
    /// `llrs` are `ln(P{b=1} / P{b=0})` per transmitted bit. Returns the
    /// information bits and whether every parity check was satisfied with
    /// no undecided (zero posterior) bit.
    pub fn decode(&self, llrs: &[f64], opts: &MinSumOptions) -> Result<DecodeOutput> {
        if llrs.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                actual: llrs.len(),
            });
        }
        // internal convention: ln(P0 / P1)
        let mut channel = vec![KNOWN_BIT_LLR; self.n];
        for (&p, &l) in self.transmitted.iter().zip(llrs) {
            channel[p] = -l;
        }
        let edges = self.edge_var.len();
        let mut c2v = vec![0.0f64; edges];
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&v| channel[v]).collect();
        let mut posterior = channel.clone();
        let mut hard = vec![0u8; self.n];

        let mut converged = self.hard_decide(&posterior, &mut hard);
        let mut iterations = 0;
        while !converged && iterations < opts.max_iterations {
            iterations += 1;
            for c in 0..self.check_start.len() - 1 {
                let range = self.check_start[c]..self.check_start[c + 1];
                let mut sign = 1.0f64;
                let (mut min1, mut min2) = (f64::INFINITY, f64::INFINITY);
                let mut arg = usize::MAX;
                for e in range.clone() {
                    let x = v2c[e];
                    if x < 0.0 {
                        sign = -sign;
                    }
                    let a = x.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for e in range {
                    let own = if v2c[e] < 0.0 { -1.0 } else { 1.0 };
                    let mag = if e == arg { min2 } else { min1 };
                    c2v[e] = opts.scale * sign * own * mag;
                }
            }
            for v in 0..self.n {
                let total = channel[v] + self.var_edges[v].iter().map(|&e| c2v[e]).sum::<f64>();
                posterior[v] = total;
                for &e in &self.var_edges[v] {
                    v2c[e] = total - c2v[e];
                }
            }
            converged = self.hard_decide(&posterior, &mut hard);
        }
        let word: Vec<u8> = self.transmitted.iter().map(|&p| hard[p]).collect();
        Ok(DecodeOutput {
            info: self.info_positions[self.shortened..].iter().map(|&p| hard[p]).collect(),
            codeword: word,
            converged,
            iterations,
        })
    }

    /// Fills `hard` from the posteriors; true when all checks hold and no
    /// posterior is exactly zero.
    fn hard_decide(&self, posterior: &[f64], hard: &mut [u8]) -> bool {
        let mut decided = true;
        for (h, &p) in hard.iter_mut().zip(posterior) {
            *h = u8::from(p < 0.0);
            if p == 0.0 {
                decided = false;
            }
        }
        decided
            && self
                .matrix
                .row_entries
                .iter()
                .all(|row| row.iter().fold(0u8, |acc, &v| acc ^ hard[v]) == 0)
    }
}

/// Min-sum decoder settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSumOptions {
    /// Multiplier applied to every check-to-variable magnitude.
    pub scale: f64,
    pub max_iterations: usize,
}

impl Default for MinSumOptions {
    fn default() -> Self {
        MinSumOptions {
            scale: 0.75,
            max_iterations: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    pub info: Vec<u8>,
    /// Hard decision on the transmitted word.
    pub codeword: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}
