//! Classical steps 5-8: basis sifting, check-bit estimation, and CSS key
//! distillation (error correction via C₁, privacy amplification via the
//! cosets of C₂ in C₁) over GF(2).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codecs::{CodeRecord, DetectionEvent};
use crate::{Error, Result};

pub type BitRow = Vec<u8>;

// ---------------------------------------------------------------------------
// GF(2) linear algebra
// ---------------------------------------------------------------------------

pub fn gf2_dot(a: &[u8], b: &[u8]) -> u8 {
    a.iter().zip(b).fold(0, |acc, (&x, &y)| acc ^ (x & y))
}

pub fn gf2_add_into(dst: &mut [u8], src: &[u8]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

pub fn gf2_mat_vec(rows: &[BitRow], v: &[u8]) -> BitRow {
    rows.iter().map(|r| gf2_dot(r, v)).collect()
}

/// Row-reduced basis with pivot columns, in pivot order.
fn gf2_rref(rows: &[BitRow]) -> Vec<(usize, BitRow)> {
    let mut basis: Vec<(usize, BitRow)> = Vec::new();
    for row in rows {
        let mut r = row.clone();
        for (pivot, b) in &basis {
            if r[*pivot] == 1 {
                gf2_add_into(&mut r, b);
            }
        }
        if let Some(pivot) = r.iter().position(|&x| x == 1) {
            for (_, b) in basis.iter_mut() {
                if b[pivot] == 1 {
                    gf2_add_into(b, &r);
                }
            }
            basis.push((pivot, r));
            basis.sort_by_key(|(p, _)| *p);
        }
    }
    basis
}

pub fn gf2_rank(rows: &[BitRow]) -> usize {
    gf2_rref(rows).len()
}

/// Is `v` in the rowspace of `rows`?
pub fn gf2_in_rowspace(rows: &[BitRow], v: &[u8]) -> bool {
    let basis = gf2_rref(rows);
    let mut r = v.to_vec();
    for (pivot, b) in &basis {
        if r[*pivot] == 1 {
            gf2_add_into(&mut r, b);
        }
    }
    r.iter().all(|&x| x == 0)
}

/// Expresses vectors in a fixed independent basis, remembering which basis
/// rows contribute.
#[derive(Debug, Clone)]
struct Decomposer {
    /// (pivot column, reduced row, combination over original basis rows).
    rows: Vec<(usize, BitRow, BitRow)>,
    basis_len: usize,
}

impl Decomposer {
    fn new(basis_rows: &[BitRow]) -> Result<Self> {
        let k = basis_rows.len();
        let mut rows: Vec<(usize, BitRow, BitRow)> = Vec::new();
        for (i, row) in basis_rows.iter().enumerate() {
            let mut r = row.clone();
            let mut comb = vec![0u8; k];
            comb[i] = 1;
            for (pivot, b, c) in &rows {
                if r[*pivot] == 1 {
                    gf2_add_into(&mut r, b);
                    gf2_add_into(&mut comb, c);
                }
            }
            let Some(pivot) = r.iter().position(|&x| x == 1) else {
                return Err(Error::Validation(format!("basis row {i} is dependent")));
            };
            rows.push((pivot, r, comb));
        }
        Ok(Self { rows, basis_len: k })
    }

    /// Coefficients of `v` over the original basis rows, or None if `v` is
    /// outside the span.
    fn decompose(&self, v: &[u8]) -> Option<BitRow> {
        let mut r = v.to_vec();
        let mut coeffs = vec![0u8; self.basis_len];
        loop {
            let Some(lead) = r.iter().position(|&x| x == 1) else {
                return Some(coeffs);
            };
            let row = self.rows.iter().find(|(p, _, _)| *p == lead)?;
            gf2_add_into(&mut r, &row.1);
            gf2_add_into(&mut coeffs, &row.2);
        }
    }
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Basis-matched key bits together with their original code indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SiftedKey {
    pub bits: Vec<u8>,
    pub positions: Vec<usize>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckBitReport {
    pub check_positions: Vec<usize>,
    pub alice_bits: Vec<u8>,
    pub bob_bits: Vec<u8>,
    pub error_rate: f64,
}

impl CheckBitReport {
    pub fn new(check_positions: Vec<usize>, alice_bits: Vec<u8>, bob_bits: Vec<u8>) -> Self {
        let errors = alice_bits.iter().zip(&bob_bits).filter(|(a, b)| a != b).count();
        let error_rate = errors as f64 / alice_bits.len() as f64;
        Self { check_positions, alice_bits, bob_bits, error_rate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Proceed,
    Abort,
}

/// Nested classical codes C₂ ⊂ C₁ with syndrome decoding data.
///
/// Serialized form carries the matrices as rows of '0'/'1' characters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CssCodeSpec", into = "CssCodeSpec")]
pub struct CssCodePair {
    pub n: usize,
    pub generator_c1: Vec<BitRow>,
    pub generator_c2: Vec<BitRow>,
    pub parity_check_c1: Vec<BitRow>,
    pub t: usize,
    syndrome_table: BTreeMap<BitRow, Vec<usize>>,
    coset: Decomposer,
    k2: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CssCodeSpec {
    n: usize,
    generator_c1: Vec<String>,
    generator_c2: Vec<String>,
    parity_check_c1: Vec<String>,
    t: usize,
}

fn parse_bit_row(s: &str, n: usize, what: &str, idx: usize) -> Result<BitRow> {
    if s.len() != n {
        return Err(Error::Validation(format!(
            "{what} row {idx} has length {}, expected {n}",
            s.len()
        )));
    }
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Validation(format!(
                "{what} row {idx} contains '{other}' (rows are '0'/'1' strings)"
            ))),
        })
        .collect()
}

fn row_to_string(row: &[u8]) -> String {
    row.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

impl TryFrom<CssCodeSpec> for CssCodePair {
    type Error = String;
    fn try_from(spec: CssCodeSpec) -> std::result::Result<Self, String> {
        let parse = |rows: &[String], what: &str| -> Result<Vec<BitRow>> {
            rows.iter()
                .enumerate()
                .map(|(i, r)| parse_bit_row(r, spec.n, what, i))
                .collect()
        };
        (|| -> Result<CssCodePair> {
            CssCodePair::new(
                spec.n,
                parse(&spec.generator_c1, "generator_c1")?,
                parse(&spec.generator_c2, "generator_c2")?,
                parse(&spec.parity_check_c1, "parity_check_c1")?,
                spec.t,
            )
        })()
        .map_err(|e| e.to_string())
    }
}

impl From<CssCodePair> for CssCodeSpec {
    fn from(code: CssCodePair) -> Self {
        CssCodeSpec {
            n: code.n,
            generator_c1: code.generator_c1.iter().map(|r| row_to_string(r)).collect(),
            generator_c2: code.generator_c2.iter().map(|r| row_to_string(r)).collect(),
            parity_check_c1: code.parity_check_c1.iter().map(|r| row_to_string(r)).collect(),
            t: code.t,
        }
    }
}

impl CssCodePair {
    pub fn new(
        n: usize,
        generator_c1: Vec<BitRow>,
        generator_c2: Vec<BitRow>,
        parity_check_c1: Vec<BitRow>,
        t: usize,
    ) -> Result<Self> {
        for (what, rows) in [
            ("generator_c1", &generator_c1),
            ("generator_c2", &generator_c2),
            ("parity_check_c1", &parity_check_c1),
        ] {
            for (i, r) in rows.iter().enumerate() {
                if r.len() != n {
                    return Err(Error::Validation(format!(
                        "{what} row {i} has length {}, expected {n}",
                        r.len()
                    )));
                }
            }
        }
        let k1 = gf2_rank(&generator_c1);
        if k1 != generator_c1.len() {
            return Err(Error::Validation("generator_c1 rows are not independent".into()));
        }
        let k2 = gf2_rank(&generator_c2);
        if k2 != generator_c2.len() {
            return Err(Error::Validation("generator_c2 rows are not independent".into()));
        }
        if k2 >= k1 {
            return Err(Error::Validation(
                "generator_c2 must span a proper subcode of generator_c1".into(),
            ));
        }
        for (i, row) in generator_c2.iter().enumerate() {
            if !gf2_in_rowspace(&generator_c1, row) {
                return Err(Error::Validation(format!(
                    "generator_c2 row {i} is not in the rowspace of generator_c1"
                )));
            }
        }
        for (i, h) in parity_check_c1.iter().enumerate() {
            for (j, g) in generator_c1.iter().enumerate() {
                if gf2_dot(h, g) != 0 {
                    return Err(Error::Validation(format!(
                        "parity_check_c1 row {i} does not annihilate generator_c1 row {j}"
                    )));
                }
            }
        }

        // Syndrome table for all error patterns of weight ≤ t.
        let mut syndrome_table: BTreeMap<BitRow, Vec<usize>> = BTreeMap::new();
        let mut patterns: Vec<Vec<usize>> = vec![vec![]];
        for w in 1..=t {
            let mut next = Vec::new();
            combinations(n, w, &mut next);
            patterns.extend(next);
        }
        for positions in patterns {
            let mut e = vec![0u8; n];
            for &p in &positions {
                e[p] = 1;
            }
            let s = gf2_mat_vec(&parity_check_c1, &e);
            syndrome_table.entry(s).or_insert(positions);
        }

        // Coset-label basis: C2 rows first, then C1 rows completing them.
        let mut label_basis = generator_c2.clone();
        for g in &generator_c1 {
            if !gf2_in_rowspace(&label_basis, g) {
                label_basis.push(g.clone());
            }
        }
        if label_basis.len() != k1 {
            return Err(Error::Validation("could not complete a coset basis".into()));
        }
        let coset = Decomposer::new(&label_basis)?;

        Ok(Self { n, generator_c1, generator_c2, parity_check_c1, t, syndrome_table, coset, k2 })
    }

    /// The [7,4] Hamming code with its dual [7,3] simplex subcode; t = 1,
    /// one key bit per 7-bit block.
    pub fn hamming_default() -> Self {
        let g1 = ["1110000", "1001100", "0101010", "1101001"];
        let g2 = ["0001111", "0110011", "1010101"];
        let h1 = g2; // the simplex generator doubles as the Hamming check
        Self::new(
            7,
            g1.iter().map(|s| parse_bit_row(s, 7, "g1", 0).unwrap()).collect(),
            g2.iter().map(|s| parse_bit_row(s, 7, "g2", 0).unwrap()).collect(),
            h1.iter().map(|s| parse_bit_row(s, 7, "h1", 0).unwrap()).collect(),
            1,
        )
        .unwrap()
    }

    pub fn k1(&self) -> usize {
        self.generator_c1.len()
    }

    pub fn k2(&self) -> usize {
        self.k2
    }

    /// Key bits per block.
    pub fn key_bits_per_block(&self) -> usize {
        self.k1() - self.k2
    }

    /// A uniformly random codeword of C₁.
    pub fn random_c1_codeword(&self, rng: &mut impl Rng) -> BitRow {
        let mut u = vec![0u8; self.n];
        for row in &self.generator_c1 {
            if rng.gen_bool(0.5) {
                gf2_add_into(&mut u, row);
            }
        }
        u
    }

    pub fn syndrome(&self, word: &[u8]) -> BitRow {
        gf2_mat_vec(&self.parity_check_c1, word)
    }

    /// Nearest-codeword decoding via the syndrome table; None when the
    /// syndrome is outside the correctable set.
    pub fn decode_to_codeword(&self, word: &[u8]) -> Option<BitRow> {
        let s = self.syndrome(word);
        let positions = self.syndrome_table.get(&s)?;
        let mut c = word.to_vec();
        for &p in positions {
            c[p] ^= 1;
        }
        Some(c)
    }

    /// Coset label of a C₁ codeword in C₁/C₂ (the key bits).
    pub fn coset_label(&self, codeword: &[u8]) -> Option<BitRow> {
        let coeffs = self.coset.decompose(codeword)?;
        Some(coeffs[self.k2..].to_vec())
    }
}

fn combinations(n: usize, w: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(start: usize, n: usize, w: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if w == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=n - w {
            cur.push(i);
            rec(i + 1, n, w - 1, cur, out);
            cur.pop();
        }
    }
    rec(0, n, w, &mut Vec::new(), out);
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalKey {
    pub bits: Vec<u8>,
    pub blocks_used: usize,
    pub aborted: bool,
    pub abort_reason: Option<String>,
}

impl FinalKey {
    pub fn aborted(reason: &str) -> Self {
        Self { bits: vec![], blocks_used: 0, aborted: true, abort_reason: Some(reason.into()) }
    }
}

/// Result of distilling a pair of reconciled keys.
#[derive(Debug, Clone, Serialize)]
pub struct DistillOutcome {
    pub alice: FinalKey,
    pub bob: FinalKey,
    pub uncorrectable_blocks: usize,
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Keeps the indices Bob accepted and measured in Alice's preparation basis;
/// both outputs are aligned on the same positions.
pub fn sift(alice: &[CodeRecord], bob: &[DetectionEvent]) -> Result<(SiftedKey, SiftedKey)> {
    if alice.len() != bob.len() {
        return Err(Error::Validation(format!(
            "sift inputs differ in length: {} vs {}",
            alice.len(),
            bob.len()
        )));
    }
    let mut a = SiftedKey { bits: vec![], positions: vec![] };
    let mut b = SiftedKey { bits: vec![], positions: vec![] };
    for (i, (rec, ev)) in alice.iter().zip(bob).enumerate() {
        if !ev.accepted {
            continue;
        }
        if ev.declared_basis != Some(rec.prep_basis) {
            continue;
        }
        a.bits.push(rec.bit);
        a.positions.push(i);
        b.bits.push(ev.bit.expect("accepted events carry a bit"));
        b.positions.push(i);
    }
    Ok((a, b))
}

/// Alice's random split of the sifted key into n data bits and the rest as
/// check bits. Returns (check indices, data indices), both sorted; None
/// signals the "< 2n bits" abort.
pub fn select_check_bits(
    key_len: usize,
    n: usize,
    rng: &mut impl Rng,
) -> Option<(Vec<usize>, Vec<usize>)> {
    if key_len < 2 * n {
        return None;
    }
    let mut indices: Vec<usize> = (0..key_len).collect();
    indices.shuffle(rng);
    let mut data: Vec<usize> = indices[..n].to_vec();
    let mut check: Vec<usize> = indices[n..].to_vec();
    data.sort_unstable();
    check.sort_unstable();
    Some((check, data))
}

/// Abort iff the observed error rate strictly exceeds the threshold.
pub fn estimate_and_decide(report: &CheckBitReport, threshold: f64) -> Result<Decision> {
    if report.alice_bits.is_empty() {
        return Err(Error::Validation("empty check set".into()));
    }
    if !(0.0..1.0).contains(&threshold) || threshold == 0.0 {
        return Err(Error::Validation("threshold must lie in (0,1)".into()));
    }
    Ok(if report.error_rate > threshold { Decision::Abort } else { Decision::Proceed })
}

/// CSS distillation: per block, Alice announces (block ⊕ u) for a random
/// codeword u ∈ C₁; Bob recovers u ⊕ e, syndrome-decodes, and both take the
/// coset label in C₁/C₂. Uncorrectable blocks are dropped and counted.
pub fn css_distill(
    alice_key: &[u8],
    bob_key: &[u8],
    code: &CssCodePair,
    rng: &mut impl Rng,
) -> Result<DistillOutcome> {
    if alice_key.len() != bob_key.len() {
        return Err(Error::Validation("key lengths differ".into()));
    }
    if alice_key.len() < code.n {
        return Err(Error::Validation(format!(
            "key length {} is shorter than one {}-bit block",
            alice_key.len(),
            code.n
        )));
    }
    let mut alice_bits = Vec::new();
    let mut bob_bits = Vec::new();
    let mut blocks_used = 0usize;
    let mut uncorrectable = 0usize;
    for block in 0..alice_key.len() / code.n {
        let a = &alice_key[block * code.n..(block + 1) * code.n];
        let b = &bob_key[block * code.n..(block + 1) * code.n];
        let u = code.random_c1_codeword(rng);
        let announce: BitRow = a.iter().zip(&u).map(|(x, y)| x ^ y).collect();
        let received: BitRow = b.iter().zip(&announce).map(|(x, y)| x ^ y).collect();
        match code.decode_to_codeword(&received) {
            Some(decoded) => {
                let alice_label = code
                    .coset_label(&u)
                    .ok_or_else(|| Error::Validation("u outside C1".into()))?;
                let Some(bob_label) = code.coset_label(&decoded) else {
                    uncorrectable += 1;
                    continue;
                };
                alice_bits.extend_from_slice(&alice_label);
                bob_bits.extend_from_slice(&bob_label);
                blocks_used += 1;
            }
            None => uncorrectable += 1,
        }
    }
    Ok(DistillOutcome {
        alice: FinalKey { bits: alice_bits, blocks_used, aborted: false, abort_reason: None },
        bob: FinalKey { bits: bob_bits, blocks_used, aborted: false, abort_reason: None },
        uncorrectable_blocks: uncorrectable,
    })
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Asymptotic CSS key rate 1 − 2·H₂(e), floored at 0.
pub fn key_rate_estimate(error_rate: f64) -> f64 {
    if !(0.0..0.5).contains(&error_rate) {
        return 0.0;
    }
    (1.0 - 2.0 * binary_entropy(error_rate)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codecs::{encode_p1, Bb84State, DetectionEvent};
    use crate::quantum::Basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_codewords(gen: &[BitRow], n: usize) -> Vec<BitRow> {
        let k = gen.len();
        (0..1usize << k)
            .map(|mask| {
                let mut c = vec![0u8; n];
                for (i, row) in gen.iter().enumerate() {
                    if (mask >> i) & 1 == 1 {
                        gf2_add_into(&mut c, row);
                    }
                }
                c
            })
            .collect()
    }

    #[test]
    fn hamming_pair_is_valid() {
        let code = CssCodePair::hamming_default();
        assert_eq!(code.k1(), 4);
        assert_eq!(code.k2(), 3);
        assert_eq!(code.key_bits_per_block(), 1);
    }

    #[test]
    fn invalid_containment_names_the_row() {
        // Swap the roles: the Hamming generator is not inside the simplex.
        let code = CssCodePair::hamming_default();
        let err = CssCodePair::new(
            7,
            code.generator_c2.clone(),
            code.generator_c1[..2].to_vec(),
            vec![],
            1,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("generator_c2 row 0"), "{msg}");
    }

    #[test]
    fn sift_examples() {
        let recs: Vec<_> = [
            Bb84State::new(Basis::Z, 0),
            Bb84State::new(Basis::X, 1),
            Bb84State::new(Basis::Z, 1),
        ]
        .iter()
        .map(|&s| encode_p1(s))
        .collect();
        let evs = vec![
            DetectionEvent::accepted(Basis::Z, 0, vec![]),
            DetectionEvent::accepted(Basis::Z, 1, vec![]), // basis mismatch
            DetectionEvent::discarded(vec![]),
        ];
        let (a, b) = sift(&recs, &evs).unwrap();
        assert_eq!(a.positions, vec![0]);
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.bits, vec![0]);
        assert_eq!(b.bits, vec![0]);
    }

    #[test]
    fn sift_retains_about_half_under_random_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 10_000usize;
        let mut recs = Vec::new();
        let mut evs = Vec::new();
        for _ in 0..trials {
            let ab = if rng.gen_bool(0.5) { Basis::Z } else { Basis::X };
            let bb = if rng.gen_bool(0.5) { Basis::Z } else { Basis::X };
            recs.push(encode_p1(Bb84State::new(ab, 0)));
            evs.push(DetectionEvent::accepted(bb, 0, vec![]));
        }
        let (a, _) = sift(&recs, &evs).unwrap();
        let frac = a.len() as f64 / trials as f64;
        let band = 4.0 * (0.25 / trials as f64).sqrt();
        assert!((frac - 0.5).abs() < band, "sift fraction {frac}");
    }

    #[test]
    fn select_check_bits_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (check, data) = select_check_bits(20, 10, &mut rng).unwrap();
        assert_eq!(check.len(), 10);
        assert_eq!(data.len(), 10);
        let mut all: Vec<usize> = check.iter().chain(&data).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());

        assert!(select_check_bits(19, 10, &mut rng).is_none());

        let mut r1 = ChaCha8Rng::seed_from_u64(99);
        let mut r2 = ChaCha8Rng::seed_from_u64(99);
        assert_eq!(select_check_bits(30, 10, &mut r1), select_check_bits(30, 10, &mut r2));
    }

    #[test]
    fn decide_boundary() {
        let report = CheckBitReport::new(vec![0, 1, 2, 3], vec![0, 0, 1, 1], vec![0, 1, 1, 1]);
        assert!((report.error_rate - 0.25).abs() < 1e-15);
        assert_eq!(estimate_and_decide(&report, 0.11).unwrap(), Decision::Abort);
        assert_eq!(estimate_and_decide(&report, 0.25).unwrap(), Decision::Proceed);
        let clean = CheckBitReport::new(vec![0], vec![0], vec![0]);
        assert_eq!(estimate_and_decide(&clean, 0.11).unwrap(), Decision::Proceed);
        let empty = CheckBitReport { check_positions: vec![], alice_bits: vec![], bob_bits: vec![], error_rate: 0.0 };
        assert!(estimate_and_decide(&empty, 0.11).is_err());
    }

    /// Exhaustive: all 16 Alice codewords × all weight-≤1 error patterns
    /// give equal 1-bit block keys.
    #[test]
    fn css_corrects_all_single_errors() {
        let code = CssCodePair::hamming_default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut errors = vec![vec![0u8; 7]];
        for p in 0..7 {
            let mut e = vec![0u8; 7];
            e[p] = 1;
            errors.push(e);
        }
        for a in all_codewords(&code.generator_c1, 7) {
            for e in &errors {
                let b: BitRow = a.iter().zip(e).map(|(x, y)| x ^ y).collect();
                let out = css_distill(&a, &b, &code, &mut rng).unwrap();
                assert_eq!(out.uncorrectable_blocks, 0);
                assert_eq!(out.alice.bits, out.bob.bits);
                assert_eq!(out.alice.bits.len(), 1);
            }
        }
    }

    /// Weight-2 errors may miscorrect; the exhaustive oracle must observe
    /// at least one mismatch and never an undetected crash.
    #[test]
    fn css_weight_two_errors_can_miscorrect() {
        let code = CssCodePair::hamming_default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut mismatches = 0usize;
        let mut patterns = Vec::new();
        combinations(7, 2, &mut patterns);
        for a in all_codewords(&code.generator_c1, 7) {
            for positions in &patterns {
                let mut b = a.clone();
                for &p in positions {
                    b[p] ^= 1;
                }
                let out = css_distill(&a, &b, &code, &mut rng).unwrap();
                if out.alice.bits != out.bob.bits {
                    mismatches += 1;
                }
            }
        }
        assert!(mismatches > 0, "weight-2 errors should defeat a t=1 code somewhere");
    }

    /// Adding any C₂ codeword to u leaves the coset label unchanged.
    #[test]
    fn coset_label_invariant_under_c2() {
        let code = CssCodePair::hamming_default();
        for u in all_codewords(&code.generator_c1, 7) {
            let label = code.coset_label(&u).unwrap();
            for c2 in all_codewords(&code.generator_c2, 7) {
                let shifted: BitRow = u.iter().zip(&c2).map(|(x, y)| x ^ y).collect();
                assert_eq!(code.coset_label(&shifted).unwrap(), label);
            }
        }
    }

    /// The announcement block ⊕ u ranges uniformly over the coset a ⊕ C₁,
    /// independent of the key bit.
    #[test]
    fn announcement_hides_the_key() {
        let code = CssCodePair::hamming_default();
        let a = vec![1, 0, 1, 1, 0, 0, 1];
        let mut seen = std::collections::BTreeSet::new();
        for u in all_codewords(&code.generator_c1, 7) {
            let w: BitRow = a.iter().zip(&u).map(|(x, y)| x ^ y).collect();
            // Every announcement lies in a ⊕ C1 ...
            let diff: BitRow = w.iter().zip(&a).map(|(x, y)| x ^ y).collect();
            assert!(gf2_in_rowspace(&code.generator_c1, &diff));
            seen.insert(w);
        }
        // ... and all 16 coset members appear exactly once.
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn key_rate_values() {
        assert_eq!(key_rate_estimate(0.0), 1.0);
        assert_eq!(key_rate_estimate(0.5), 0.0);
        assert_eq!(key_rate_estimate(0.7), 0.0);
        // 1 − 2·H₂(0.05), fixed by independent high-precision evaluation.
        assert!((key_rate_estimate(0.05) - 0.427206086).abs() < 1e-9);
        assert!(key_rate_estimate(0.11) <= 0.07);
    }

    #[test]
    fn css_pair_round_trips_through_serde() {
        let code = CssCodePair::hamming_default();
        let json = serde_json::to_string(&code).unwrap();
        let back: CssCodePair = serde_json::from_str(&json).unwrap();
        assert_eq!(back.generator_c1, code.generator_c1);
        assert_eq!(back.t, code.t);
    }
}
