//! SCMA codebooks, the factor graph they induce, bit-to-codeword encoding
//! and placement of codewords on the shared OFDMA resource grid.
//!
//! A codebook set assigns every user `M = 2^m` sparse complex codewords of
//! length `K`. The nonzero positions of a user's codewords are the resources
//! (PRBs) it occupies, and the union of those supports is the `K x J`
//! factor graph used by the message-passing detectors.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::Complex;

/// OFDMA subcarriers per physical resource block.
pub const SUBCARRIERS_PER_PRB: usize = 12;

/// Magnitude below which a codeword entry counts as structurally zero.
const SUPPORT_TOL: f64 = 1e-12;

/// Tolerance on the mean codeword energy of a normalized codebook.
const ENERGY_TOL: f64 = 1e-9;

static DEFAULT_CODEBOOK_JSON: &str = include_str!("../data/codebook_k4_j6_m4.json");

/// Binary resource-occupancy matrix of a regular SCMA factor graph.
///
/// Row `k` is a resource (factor node), column `i` a user (variable node).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorGraph {
    resources: usize,
    users: usize,
    occupancy: Vec<bool>,
    dv: usize,
    df: usize,
}

impl FactorGraph {
    /// Builds a graph from `K` rows of `J` flags, rejecting irregular
    /// matrices (unequal column or row weights, empty columns).
    pub fn new(rows: &[Vec<bool>]) -> Result<Self> {
        let resources = rows.len();
        if resources == 0 {
            return Err(Error::Shape("factor graph needs at least one resource".into()));
        }
        let users = rows[0].len();
        if users == 0 || rows.iter().any(|r| r.len() != users) {
            return Err(Error::Shape("factor graph rows must have equal, nonzero length".into()));
        }
        let occupancy: Vec<bool> = rows.iter().flatten().copied().collect();
        let col_weight = |i: usize| (0..resources).filter(|&k| occupancy[k * users + i]).count();
        let row_weight = |k: usize| occupancy[k * users..(k + 1) * users].iter().filter(|&&b| b).count();
        let dv = col_weight(0);
        let df = row_weight(0);
        if dv == 0 || (0..users).any(|i| col_weight(i) != dv) {
            return Err(Error::SupportMismatch("column weights are not all equal".into()));
        }
        if (0..resources).any(|k| row_weight(k) != df) {
            return Err(Error::SupportMismatch("row weights are not all equal".into()));
        }
        Ok(FactorGraph {
            resources,
            users,
            occupancy,
            dv,
            df,
        })
    }

    /// The canonical 4-resource, 6-user graph with `dv = 2`, `df = 3`.
    pub fn default_graph() -> Self {
        const F: [[u8; 6]; 4] = [
            [1, 1, 1, 0, 0, 0],
            [1, 0, 0, 1, 1, 0],
            [0, 1, 0, 1, 0, 1],
            [0, 0, 1, 0, 1, 1],
        ];
        let rows: Vec<Vec<bool>> = F.iter().map(|r| r.iter().map(|&b| b == 1).collect()).collect();
        FactorGraph::new(&rows).expect("canonical factor graph is regular")
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    pub fn users(&self) -> usize {
        self.users
    }

    /// Nonzero resources per codeword.
    pub fn dv(&self) -> usize {
        self.dv
    }

    /// Users sharing each resource.
    pub fn df(&self) -> usize {
        self.df
    }

    pub fn occupies(&self, resource: usize, user: usize) -> bool {
        self.occupancy[resource * self.users + user]
    }

    /// Resources occupied by `user`, ascending.
    pub fn user_resources(&self, user: usize) -> Vec<usize> {
        (0..self.resources).filter(|&k| self.occupies(k, user)).collect()
    }

    /// Users transmitting on `resource`, ascending.
    pub fn resource_users(&self, resource: usize) -> Vec<usize> {
        (0..self.users).filter(|&i| self.occupies(resource, i)).collect()
    }

    /// Ratio of users to orthogonal resources, `J / K`.
    pub fn overloading(&self) -> f64 {
        self.users as f64 / self.resources as f64
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        self.occupancy.chunks(self.users).map(|r| r.to_vec()).collect()
    }
}

/// The `M` codewords of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    user: usize,
    bits: usize,
    codewords: Vec<Vec<Complex>>,
    support: Vec<usize>,
}

impl Codebook {
    pub fn user(&self) -> usize {
        self.user
    }

    /// Bits per codeword, `m`.
    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Number of codewords, `M = 2^m`.
    pub fn size(&self) -> usize {
        self.codewords.len()
    }

    pub fn len(&self) -> usize {
        self.codewords[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn codeword(&self, index: usize) -> &[Complex] {
        &self.codewords[index]
    }

    pub fn codewords(&self) -> &[Vec<Complex>] {
        &self.codewords
    }

    pub fn mean_energy(&self) -> f64 {
        mean_energy(&self.codewords)
    }

    /// Maps `m` bits (MSB first) to a codeword.
    pub fn encode(&self, bits: &[u8]) -> Result<&[Complex]> {
        if bits.len() != self.bits {
            return Err(Error::LengthMismatch {
                expected: self.bits,
                actual: bits.len(),
            });
        }
        Ok(self.codeword(bits_to_index(bits)))
    }
}

fn mean_energy(codewords: &[Vec<Complex>]) -> f64 {
    let total: f64 = codewords.iter().flatten().map(|x| x.norm_sqr()).sum();
    total / codewords.len() as f64
}

/// Big-endian (MSB first) integer value of a bit slice.
pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b & 1))
}

/// Inverse of [`bits_to_index`] for a fixed width.
pub fn index_to_bits(index: usize, width: usize) -> Vec<u8> {
    (0..width).rev().map(|s| ((index >> s) & 1) as u8).collect()
}

/// Codebook loading switches.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Rescale each user to unit mean codeword energy instead of rejecting
    /// unnormalized input.
    pub auto_normalize: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct CodebookFile {
    K: usize,
    J: usize,
    m: usize,
    codebooks: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Codebooks of all `J` users together with the factor graph their
/// supports induce.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSet {
    graph: FactorGraph,
    books: Vec<Codebook>,
}

impl CodebookSet {
    /// Validates raw codewords (`[user][codeword][resource]`) and derives
    /// the factor graph from their supports.
    pub fn new(raw: Vec<Vec<Vec<Complex>>>, bits: usize, opts: LoadOptions) -> Result<Self> {
        let users = raw.len();
        if users == 0 || bits == 0 {
            return Err(Error::Shape("need at least one user and one bit per codeword".into()));
        }
        let size = 1usize << bits;
        let resources = raw[0].first().map_or(0, Vec::len);
        if resources == 0 {
            return Err(Error::Shape("codewords must be nonempty".into()));
        }
        let mut books = Vec::with_capacity(users);
        for (user, mut codewords) in raw.into_iter().enumerate() {
            if codewords.len() != size {
                return Err(Error::Shape(format!(
                    "user {user}: expected {size} codewords, got {}",
                    codewords.len()
                )));
            }
            if let Some(cw) = codewords.iter().find(|cw| cw.len() != resources) {
                return Err(Error::Shape(format!(
                    "user {user}: codeword length {} differs from K = {resources}",
                    cw.len()
                )));
            }
            if codewords.iter().flatten().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                return Err(Error::Parse(format!("user {user}: non-finite codeword entry")));
            }
            let support_of =
                |cw: &[Complex]| -> Vec<usize> { (0..resources).filter(|&k| cw[k].norm() > SUPPORT_TOL).collect() };
            let support = support_of(&codewords[0]);
            for (c, cw) in codewords.iter().enumerate() {
                if support_of(cw) != support {
                    return Err(Error::SupportMismatch(format!(
                        "user {user} codeword {c} occupies {:?}, codeword 0 occupies {support:?}",
                        support_of(cw)
                    )));
                }
            }
            for a in 0..size {
                for b in a + 1..size {
                    if codewords[a] == codewords[b] {
                        return Err(Error::InvalidArgument(format!(
                            "user {user}: codewords {a} and {b} are identical"
                        )));
                    }
                }
            }
            let energy = mean_energy(&codewords);
            if (energy - 1.0).abs() > ENERGY_TOL {
                if !opts.auto_normalize || energy <= 0.0 {
                    return Err(Error::NotNormalized { user, energy });
                }
                let scale = energy.sqrt().recip();
                codewords.iter_mut().flatten().for_each(|x| *x *= scale);
            }
            books.push(Codebook {
                user,
                bits,
                codewords,
                support,
            });
        }
        let rows: Vec<Vec<bool>> = (0..resources)
            .map(|k| books.iter().map(|b| b.support.contains(&k)).collect())
            .collect();
        let graph = FactorGraph::new(&rows)?;
        Ok(CodebookSet { graph, books })
    }

    /// Parses the JSON codebook schema
    /// `{K, J, m, codebooks: [[[re, im] x K] x M] x J}`.
    pub fn from_json(text: &str, opts: LoadOptions) -> Result<Self> {
        let file: CodebookFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.codebooks.len() != file.J {
            return Err(Error::Shape(format!(
                "header says J = {}, file holds {} codebooks",
                file.J,
                file.codebooks.len()
            )));
        }
        let raw: Vec<Vec<Vec<Complex>>> = file
            .codebooks
            .into_iter()
            .map(|u| {
                u.into_iter()
                    .map(|cw| cw.into_iter().map(|[re, im]| Complex::new(re, im)).collect())
                    .collect()
            })
            .collect();
        let set = CodebookSet::new(raw, file.m, opts)?;
        if set.resources() != file.K {
            return Err(Error::Shape(format!(
                "header says K = {}, codewords have length {}",
                file.K,
                set.resources()
            )));
        }
        let canonical = FactorGraph::default_graph();
        if set.resources() == canonical.resources()
            && set.users() == canonical.users()
            && set.graph != canonical
        {
            return Err(Error::SupportMismatch(
                "codeword supports do not match the canonical 4x6 factor graph".into(),
            ));
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CodebookSet::from_json(&text, opts)
    }

    /// The shipped 4-resource, 6-user, 4-point codebook.
    pub fn default_set() -> Self {
        CodebookSet::from_json(DEFAULT_CODEBOOK_JSON, LoadOptions::default())
            .expect("shipped codebook file is valid")
    }

    /// Raw text of the shipped codebook file.
    pub fn default_json() -> &'static str {
        DEFAULT_CODEBOOK_JSON
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn users(&self) -> usize {
        self.books.len()
    }

    pub fn resources(&self) -> usize {
        self.graph.resources()
    }

    pub fn bits(&self) -> usize {
        self.books[0].bits
    }

    pub fn size(&self) -> usize {
        self.books[0].size()
    }

    pub fn book(&self, user: usize) -> &Codebook {
        &self.books[user]
    }

    pub fn books(&self) -> &[Codebook] {
        &self.books
    }
}

/// A `N_sc x N_sym` complex grid, stored column-major (one column per
/// symbol time).
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    subcarriers: usize,
    symbols: usize,
    data: Vec<Complex>,
}

impl ResourceGrid {
    pub fn zeros(subcarriers: usize, symbols: usize) -> Self {
        ResourceGrid {
            subcarriers,
            symbols,
            data: vec![Complex::new(0.0, 0.0); subcarriers * symbols],
        }
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.subcarriers, self.symbols)
    }

    pub fn get(&self, subcarrier: usize, symbol: usize) -> Complex {
        self.data[symbol * self.subcarriers + subcarrier]
    }

    pub fn get_mut(&mut self, subcarrier: usize, symbol: usize) -> &mut Complex {
        &mut self.data[symbol * self.subcarriers + subcarrier]
    }

    pub fn column(&self, symbol: usize) -> &[Complex] {
        &self.data[symbol * self.subcarriers..(symbol + 1) * self.subcarriers]
    }

    /// The `width` subcarriers of codeword slot `slot` at symbol `symbol`.
    pub fn slot(&self, slot: usize, symbol: usize, width: usize) -> &[Complex] {
        let start = symbol * self.subcarriers + slot * width;
        &self.data[start..start + width]
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex] {
        &mut self.data
    }
}

/// Places one user's codeword sequence on a `12K x n_sym` grid.
///
/// Codeword `q` goes to slot `q % 12` of symbol `q / 12`, i.e. subcarriers
/// `[sK, sK + K)` of that column.
pub fn map_to_grid(codewords: &[&[Complex]], width: usize, symbols: usize) -> Result<ResourceGrid> {
    let expected = SUBCARRIERS_PER_PRB * symbols;
    if codewords.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: codewords.len(),
        });
    }
    let mut grid = ResourceGrid::zeros(SUBCARRIERS_PER_PRB * width, symbols);
    for (q, cw) in codewords.iter().enumerate() {
        if cw.len() != width {
            return Err(Error::LengthMismatch {
                expected: width,
                actual: cw.len(),
            });
        }
        let (t, s) = (q / SUBCARRIERS_PER_PRB, q % SUBCARRIERS_PER_PRB);
        for (k, &x) in cw.iter().enumerate() {
            *grid.get_mut(s * width + k, t) = x;
        }
    }
    Ok(grid)
}

/// Reads the codeword sequence back out of a grid; inverse of [`map_to_grid`].
pub fn extract_slots(grid: &ResourceGrid, width: usize) -> Vec<Vec<Complex>> {
    let slots = grid.subcarriers() / width;
    (0..grid.symbols())
        .flat_map(|t| (0..slots).map(move |s| grid.slot(s, t, width).to_vec()))
        .collect()
}

/// Symbol times needed for `coded_bits`, carrying `bits` per codeword in
/// each of `slots` codeword slots per symbol.
pub fn symbols_per_tb(coded_bits: usize, bits: usize, slots: usize) -> Result<usize> {
    let per_symbol = bits * slots;
    if per_symbol == 0 {
        return Err(Error::InvalidArgument("bits and slots must be positive".into()));
    }
    if coded_bits % per_symbol != 0 {
        return Err(Error::NotDivisible(coded_bits, per_symbol));
    }
    Ok(coded_bits / per_symbol)
}
