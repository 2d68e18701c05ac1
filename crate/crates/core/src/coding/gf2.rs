//! Dense GF(2) matrices packed into 64-bit words.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        BitMatrix {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.words {
            self.data.swap(a * self.words + w, b * self.words + w);
        }
    }

    /// `row[dst] ^= row[src]`
    fn xor_row(&mut self, dst: usize, src: usize) {
        for w in 0..self.words {
            let s = self.data[src * self.words + w];
            self.data[dst * self.words + w] ^= s;
        }
    }

    /// Reduces to reduced row-echelon form in place, choosing pivot columns
    /// in the order given by `col_order`. Returns the pivot column of each
    /// leading row; its length is the rank.
    pub fn reduce(&mut self, col_order: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut pivots = Vec::new();
        for c in col_order {
            let r0 = pivots.len();
            if r0 == self.rows {
                break;
            }
            let Some(p) = (r0..self.rows).find(|&r| self.get(r, c)) else {
                continue;
            };
            self.swap_rows(r0, p);
            for r in 0..self.rows {
                if r != r0 && self.get(r, c) {
                    self.xor_row(r, r0);
                }
            }
            pivots.push(c);
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().reduce(0..self.cols).len()
    }
}

/// Parity of `a & b` over packed words.
pub fn dot(a: &[u64], b: &[u64]) -> u8 {
    let ones: u32 = a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum();
    (ones & 1) as u8
}

/// Packs 0/1 bytes into words, bit `i` at word `i / 64`, position `i % 64`.
pub fn pack(bits: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_small_matrices() {
        let mut m = BitMatrix::zeros(3, 4);
        for (r, c) in [(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 2)] {
            m.set(r, c, true);
        }
        // row 2 = row 0 + row 1
        assert_eq!(m.rank(), 2);
        m.set(2, 3, true);
        assert_eq!(m.rank(), 3);
    }

    #[test]
    fn dot_and_pack() {
        let a = pack(&[1, 0, 1, 1]);
        let b = pack(&[1, 1, 1, 0]);
        assert_eq!(dot(&a, &b), 0);
        let c = pack(&[0, 0, 0, 1]);
        assert_eq!(dot(&a, &c), 1);
    }
}
