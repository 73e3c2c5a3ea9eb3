//! Min-hash signatures and the LSH Forest index.
//!
//! Register stems are mapped to sets of character-trigram IDs over the
//! 37-character alphabet `{a-z, 0-9, space}` (37³ = 50,653 possible
//! trigrams). Each of the `l` trees in the forest carries its own sequence of
//! hash pairs `(h_j, g_j)`: `h_j(x) = (α x + β) mod p` with `p = 2³¹ − 1`,
//! and `g_j` maps the minimum hash value to a single bit. The j-th signature
//! bit of a stem is `g_j(min_i h_j(v_i))` over its trigram IDs `v_i`.
//!
//! A tree is the logical prefix tree over the k-bit signatures of all indexed
//! stems, stored as a signature-sorted array so that every prefix corresponds
//! to a contiguous range. Queries walk all trees bottom-up in lockstep from
//! the longest shared prefix outward, then rank the gathered candidates by
//! total shared-prefix depth across trees.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Alphabet size for trigram enumeration: 26 letters + 10 digits + space.
pub const TRIGRAM_ALPHABET: u32 = 37;
/// Number of possible trigrams, 37³.
pub const TRIGRAM_COUNT: u32 = TRIGRAM_ALPHABET * TRIGRAM_ALPHABET * TRIGRAM_ALPHABET;
/// Modulus of the linear hash family, the Mersenne prime 2³¹ − 1.
pub const HASH_PRIME: u64 = 2_147_483_647;

/// Default number of trees.
pub const DEFAULT_TREES: usize = 8;
/// Default total number of hash functions across all trees.
pub const DEFAULT_TOTAL_HASHES: usize = 64;
/// Default number of candidates returned per query.
pub const DEFAULT_TOP_M: usize = 100;

const MAGIC: &[u8; 4] = b"SMLF";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LshError {
    #[error("cannot build a forest over an empty stem collection")]
    EmptyIndex,
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad forest file: {0}")]
    BadFormat(String),
}

fn char_code(c: char) -> u32 {
    match c {
        'a'..='z' => c as u32 - 'a' as u32,
        '0'..='9' => 26 + c as u32 - '0' as u32,
        ' ' => 36,
        _ => 36,
    }
}

/// Bijective dispersal of trigram IDs within the 31-bit hash domain.
///
/// Consecutive character windows produce near-arithmetic ID sequences, which
/// bias the min of a plain linear hash. Hashing `disperse(id)` instead of
/// `id` — an odd-multiplier/xor-shift permutation of `[0, 2³¹)` — removes
/// that structure while keeping the trigram enumeration itself bijective.
fn disperse(id: u32) -> u64 {
    let mut x = id & 0x7FFF_FFFF;
    x = x.wrapping_mul(0x4F6C_DD1D) & 0x7FFF_FFFF;
    x ^= x >> 15;
    x = x.wrapping_mul(0x2C1B_3C6D) & 0x7FFF_FFFF;
    x ^= x >> 12;
    x as u64
}

/// Sorted, deduplicated trigram IDs of a stem. Stems shorter than three
/// characters are padded with trailing spaces to a single trigram, so every
/// non-empty stem yields at least one ID.
pub fn trigram_ids(stem: &str) -> Vec<u32> {
    let chars: Vec<char> = stem.chars().collect();
    let mut ids: Vec<u32> = if chars.len() < 3 {
        let mut padded = ['\u{20}'; 3];
        for (i, c) in chars.iter().enumerate() {
            padded[i] = *c;
        }
        vec![char_code(padded[0]) * 37 * 37 + char_code(padded[1]) * 37 + char_code(padded[2])]
    } else {
        chars
            .windows(3)
            .map(|w| char_code(w[0]) * 37 * 37 + char_code(w[1]) * 37 + char_code(w[2]))
            .collect()
    };
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// One member of the linear hash family `x ↦ (α x + β) mod p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearHash {
    pub alpha: u64,
    pub beta: u64,
}

impl LinearHash {
    pub fn random(rng: &mut impl Rng) -> Self {
        Self {
            alpha: rng.random_range(1..HASH_PRIME),
            beta: rng.random_range(0..HASH_PRIME),
        }
    }

    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        (self.alpha * x + self.beta) % HASH_PRIME
    }
}

/// One signature-bit generator: `h` selects the minimum, `g` folds it to a
/// bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashPair {
    pub h: LinearHash,
    pub g: LinearHash,
}

impl HashPair {
    pub fn random(rng: &mut impl Rng) -> Self {
        Self {
            h: LinearHash::random(rng),
            g: LinearHash::random(rng),
        }
    }

    /// Minimum of `h` over the (dispersed) trigram IDs.
    pub fn min_hash(&self, ids: &[u32]) -> u64 {
        ids.iter().map(|&v| self.h.eval(disperse(v))).min().unwrap_or(0)
    }

    /// The signature bit for the given trigram IDs.
    pub fn bit(&self, ids: &[u32]) -> u64 {
        self.g.eval(self.min_hash(ids)) & 1
    }
}

/// k-bit min-hash signature packed into a `u64`, first bit most significant,
/// so that sorting signatures equals lexicographic order of bit strings.
pub fn minhash_signature(ids: &[u32], pairs: &[HashPair], k: usize) -> u64 {
    debug_assert!(k <= 64 && k <= pairs.len());
    let mut sig = 0u64;
    for pair in pairs.iter().take(k) {
        sig = (sig << 1) | pair.bit(ids);
    }
    sig
}

#[derive(Debug, Clone)]
struct LshTree {
    /// Signature length actually used; grown until signatures are unique or
    /// `k_max` is reached.
    k: usize,
    pairs: Vec<HashPair>,
    /// (signature shifted into the top bits of the k-bit space, stem id),
    /// sorted.
    entries: Vec<(u64, u32)>,
    /// Signature per stem id, for depth computations at query time.
    sig_by_stem: Vec<u64>,
}

impl LshTree {
    fn build(stem_ids: &[Vec<u32>], pairs: Vec<HashPair>, k_max: usize) -> Self {
        let full: Vec<u64> = stem_ids
            .iter()
            .map(|ids| minhash_signature(ids, &pairs, k_max))
            .collect();

        // Smallest k whose prefixes are unique, capped at k_max.
        let mut sorted = full.clone();
        sorted.sort_unstable();
        let mut k = 1;
        for w in sorted.windows(2) {
            let diff = w[0] ^ w[1];
            let needed = if diff == 0 {
                k_max
            } else {
                // Length of the shared prefix within the k_max-bit space,
                // plus the distinguishing bit.
                (diff.leading_zeros() as usize - (64 - k_max) + 1).min(k_max)
            };
            k = k.max(needed);
        }

        let shift = k_max - k;
        let sig_by_stem: Vec<u64> = full.iter().map(|s| s >> shift).collect();
        let mut entries: Vec<(u64, u32)> = sig_by_stem
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i as u32))
            .collect();
        entries.sort_unstable();
        Self {
            k,
            pairs,
            entries,
            sig_by_stem,
        }
    }

    fn signature_of(&self, ids: &[u32]) -> u64 {
        minhash_signature(ids, &self.pairs, self.k)
    }

    /// Range of entries whose top `depth` bits equal those of `sig`.
    fn prefix_range(&self, sig: u64, depth: usize) -> (usize, usize) {
        if depth == 0 {
            return (0, self.entries.len());
        }
        let shift = self.k - depth;
        let prefix = sig >> shift;
        let lo = self.entries.partition_point(|(s, _)| (s >> shift) < prefix);
        let hi = self.entries.partition_point(|(s, _)| (s >> shift) <= prefix);
        (lo, hi)
    }
}

/// Immutable LSH Forest over a deduplicated stem collection.
#[derive(Debug, Clone)]
pub struct LshForest {
    trees: Vec<LshTree>,
    stems: Vec<String>,
    /// How many input stems collapsed onto each indexed stem.
    multiplicity: Vec<u32>,
    seed: u64,
    total_hashes: usize,
    k_max: usize,
}

impl LshForest {
    pub fn len(&self) -> usize {
        self.stems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stems.is_empty()
    }

    pub fn stems(&self) -> &[String] {
        &self.stems
    }

    pub fn stem(&self, id: u32) -> &str {
        &self.stems[id as usize]
    }

    pub fn multiplicity(&self, id: u32) -> u32 {
        self.multiplicity[id as usize]
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Signature lengths per tree; at most `total_hashes / l`.
    pub fn signature_lengths(&self) -> Vec<usize> {
        self.trees.iter().map(|t| t.k).collect()
    }

    /// Returns up to `m` candidate stem ids, gathered bottom-up across all
    /// trees and ranked by total shared-prefix depth (ties: collection
    /// order, i.e. tree index then leaf order).
    pub fn query_top_m(&self, stem: &str, m: usize) -> Vec<u32> {
        if m == 0 || self.stems.is_empty() {
            return Vec::new();
        }
        let ids = trigram_ids(stem);
        let sigs: Vec<u64> = self.trees.iter().map(|t| t.signature_of(&ids)).collect();

        // Deepest level with a matching prefix, per tree.
        let deepest: Vec<usize> = self
            .trees
            .iter()
            .zip(&sigs)
            .map(|(tree, &sig)| {
                (0..=tree.k)
                    .rev()
                    .find(|&d| {
                        let (lo, hi) = tree.prefix_range(sig, d);
                        lo < hi
                    })
                    .unwrap_or(0)
            })
            .collect();

        let total_depth = |stem_id: u32| -> u32 {
            self.trees
                .iter()
                .zip(&sigs)
                .map(|(tree, &sig)| {
                    let diff = tree.sig_by_stem[stem_id as usize] ^ sig;
                    if diff == 0 {
                        tree.k as u32
                    } else {
                        diff.leading_zeros() - (64 - tree.k) as u32
                    }
                })
                .sum()
        };

        let k_top = self.trees.iter().map(|t| t.k).max().unwrap_or(0);
        let mut seen = vec![false; self.stems.len()];
        let mut pool: Vec<(u32, u32, usize)> = Vec::new(); // (depth, id, order)
        let mut order = 0usize;
        for level in (0..=k_top).rev() {
            for (tree, (&sig, &deep)) in self.trees.iter().zip(sigs.iter().zip(&deepest)) {
                if level > deep {
                    continue;
                }
                let (lo, hi) = tree.prefix_range(sig, level);
                // Entries new at this level: outside the next-deeper range.
                let (in_lo, in_hi) = if level < deep {
                    tree.prefix_range(sig, level + 1)
                } else {
                    (lo, lo)
                };
                for &(_, stem_id) in tree.entries[lo..in_lo].iter().chain(&tree.entries[in_hi..hi])
                {
                    if !seen[stem_id as usize] {
                        seen[stem_id as usize] = true;
                        pool.push((total_depth(stem_id), stem_id, order));
                        order += 1;
                    }
                }
            }
            if pool.len() >= m {
                break;
            }
        }
        pool.sort_by(|a, b| b.0.cmp(&a.0).then(a.2.cmp(&b.2)));
        pool.truncate(m);
        pool.into_iter().map(|(_, id, _)| id).collect()
    }

    /// Writes the forest as a versioned binary file.
    pub fn save(&self, path: &Path) -> Result<(), LshError> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.trees.len() as u32).to_le_bytes())?;
        w.write_all(&(self.total_hashes as u32).to_le_bytes())?;
        w.write_all(&(self.k_max as u32).to_le_bytes())?;
        w.write_all(&(self.stems.len() as u32).to_le_bytes())?;
        for stem in &self.stems {
            let bytes = stem.as_bytes();
            w.write_all(&(bytes.len() as u32).to_le_bytes())?;
            w.write_all(bytes)?;
        }
        for &mult in &self.multiplicity {
            w.write_all(&mult.to_le_bytes())?;
        }
        for tree in &self.trees {
            w.write_all(&(tree.k as u32).to_le_bytes())?;
            for pair in &tree.pairs {
                for v in [pair.h.alpha, pair.h.beta, pair.g.alpha, pair.g.beta] {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            for (sig, stem_id) in &tree.entries {
                w.write_all(&sig.to_le_bytes())?;
                w.write_all(&stem_id.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LshError> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(LshError::BadFormat("magic bytes mismatch".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(LshError::BadFormat(format!(
                "unsupported version {version}"
            )));
        }
        let seed = read_u64(&mut r)?;
        let n_trees = read_u32(&mut r)? as usize;
        let total_hashes = read_u32(&mut r)? as usize;
        let k_max = read_u32(&mut r)? as usize;
        let n_stems = read_u32(&mut r)? as usize;
        let mut stems = Vec::with_capacity(n_stems);
        for _ in 0..n_stems {
            let len = read_u32(&mut r)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            stems.push(
                String::from_utf8(buf)
                    .map_err(|_| LshError::BadFormat("stem is not valid utf-8".into()))?,
            );
        }
        let mut multiplicity = Vec::with_capacity(n_stems);
        for _ in 0..n_stems {
            multiplicity.push(read_u32(&mut r)?);
        }
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let k = read_u32(&mut r)? as usize;
            let mut pairs = Vec::with_capacity(k_max);
            for _ in 0..k_max {
                let h = LinearHash {
                    alpha: read_u64(&mut r)?,
                    beta: read_u64(&mut r)?,
                };
                let g = LinearHash {
                    alpha: read_u64(&mut r)?,
                    beta: read_u64(&mut r)?,
                };
                pairs.push(HashPair { h, g });
            }
            let mut entries = Vec::with_capacity(n_stems);
            let mut sig_by_stem = vec![0u64; n_stems];
            for _ in 0..n_stems {
                let sig = read_u64(&mut r)?;
                let stem_id = read_u32(&mut r)?;
                if stem_id as usize >= n_stems {
                    return Err(LshError::BadFormat("stem id out of range".into()));
                }
                sig_by_stem[stem_id as usize] = sig;
                entries.push((sig, stem_id));
            }
            trees.push(LshTree {
                k,
                pairs,
                entries,
                sig_by_stem,
            });
        }
        Ok(Self {
            trees,
            stems,
            multiplicity,
            seed,
            total_hashes,
            k_max,
        })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32, LshError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64, LshError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

/// Builds a forest of `l` trees sharing a budget of `total_hashes` hash
/// functions, so each tree uses signatures of at most `total_hashes / l`
/// bits. Duplicate stems are indexed once and counted in `multiplicity`.
pub fn build_forest<S: AsRef<str>>(
    stems: &[S],
    l: usize,
    total_hashes: usize,
    seed: u64,
) -> Result<LshForest, LshError> {
    if stems.is_empty() {
        return Err(LshError::EmptyIndex);
    }
    if l == 0 || total_hashes == 0 || total_hashes % l != 0 {
        return Err(LshError::BadParams(format!(
            "total_hashes ({total_hashes}) must be a positive multiple of l ({l})"
        )));
    }
    let k_max = total_hashes / l;
    if k_max > 64 {
        return Err(LshError::BadParams(format!(
            "signature length {k_max} exceeds 64 bits"
        )));
    }

    let mut unique: Vec<String> = Vec::new();
    let mut multiplicity: Vec<u32> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for stem in stems {
        let s = stem.as_ref();
        if let Some(&i) = index.get(s) {
            multiplicity[i] += 1;
        } else {
            index.insert(s.to_string(), unique.len());
            unique.push(s.to_string());
            multiplicity.push(1);
        }
    }
    drop(index);

    let stem_ids: Vec<Vec<u32>> = unique.iter().map(|s| trigram_ids(s)).collect();

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let tree_seeds: Vec<u64> = (0..l).map(|_| master.random()).collect();
    let trees: Vec<LshTree> = tree_seeds
        .into_iter()
        .map(|tree_seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
            let pairs: Vec<HashPair> = (0..k_max).map(|_| HashPair::random(&mut rng)).collect();
            LshTree::build(&stem_ids, pairs, k_max)
        })
        .collect();

    Ok(LshForest {
        trees,
        stems: unique,
        multiplicity,
        seed,
        total_hashes,
        k_max,
    })
}
