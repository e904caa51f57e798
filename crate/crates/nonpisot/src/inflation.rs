//! The binary inflation rule 0 -> 0111, 1 -> 0 and the geometric point sets
//! it generates. Tiles of type 0 have length lambda, tiles of type 1 have
//! length 1, so every left endpoint lies in Z[lambda] and is stored by its
//! exact integer coordinates on the basis {1, lambda}.

use crate::algebra::{lambda_power, QLambda, ZLambda, LAMBDA};
use num::complex::Complex64;
use thiserror::Error;

/// Images of the two letters under the substitution.
pub const RHO_0: &[u8] = &[0, 1, 1, 1];
pub const RHO_1: &[u8] = &[0];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InflationError {
    #[error("letter {letter} at index {index} is not in the alphabet {{0, 1}}")]
    BadLetter { index: usize, letter: u8 },
    #[error("word is not legal: unparsable configuration at index {index}")]
    NonLegal { index: usize },
}

/// A finite word over {0, 1} with a marked position ("origin") between two
/// letters. `marker` counts the letters to the left of the mark.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word {
    pub letters: Vec<u8>,
    pub marker: usize,
}

impl Word {
    pub fn new(letters: Vec<u8>, marker: usize) -> Result<Self, InflationError> {
        for (index, &letter) in letters.iter().enumerate() {
            if letter > 1 {
                return Err(InflationError::BadLetter { index, letter });
            }
        }
        assert!(marker <= letters.len(), "marker outside the word");
        Ok(Word { letters, marker })
    }

    /// The two-letter seed 0|0 of the square of the substitution.
    pub fn seed() -> Self {
        Word { letters: vec![0, 0], marker: 1 }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

fn substitute_letters_once(letters: &[u8], out: &mut Vec<u8>) {
    for &l in letters {
        out.extend_from_slice(if l == 0 { RHO_0 } else { RHO_1 });
    }
}

/// Applies the substitution `power` times to a plain letter sequence.
pub fn substitute_letters(letters: &[u8], power: u32) -> Vec<u8> {
    let mut cur = letters.to_vec();
    for _ in 0..power {
        let mut next = Vec::with_capacity(cur.len() * 4);
        substitute_letters_once(&cur, &mut next);
        cur = next;
    }
    cur
}

/// Applies the substitution `power` times, carrying the marker along: the
/// mark stays between the images of the letters it used to separate.
pub fn substitute(word: &Word, power: u32) -> Word {
    let mut cur = word.clone();
    for _ in 0..power {
        let mut letters = Vec::with_capacity(cur.letters.len() * 4);
        substitute_letters_once(&cur.letters[..cur.marker], &mut letters);
        let marker = letters.len();
        substitute_letters_once(&cur.letters[cur.marker..], &mut letters);
        cur = Word { letters, marker };
    }
    cur
}

/// Letter counts and empirical frequencies of a word.
pub fn letter_frequencies(letters: &[u8]) -> ([u64; 2], [f64; 2]) {
    let mut counts = [0u64; 2];
    for &l in letters {
        counts[l as usize] += 1;
    }
    let total = (counts[0] + counts[1]) as f64;
    ([counts[0], counts[1]], [counts[0] as f64 / total, counts[1] as f64 / total])
}

/// One recognised level-1 supertile inside a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Supertile {
    /// Preimage letter: 0 for the block 0111, 1 for a lone 0.
    pub kind: u8,
    /// Index of the first letter of the block.
    pub start: usize,
}

/// Result of cutting a word into level-1 supertiles. Partial blocks at the
/// two ends are reported by length instead of being guessed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub supertiles: Vec<Supertile>,
    /// Number of leading letters that belong to a truncated block.
    pub leading: usize,
    /// Number of trailing letters that belong to a truncated or ambiguous block.
    pub trailing: usize,
}

impl Decomposition {
    /// The word of preimage letters, one per complete supertile.
    pub fn preimage(&self) -> Vec<u8> {
        self.supertiles.iter().map(|s| s.kind).collect()
    }
}

/// Cuts a word into supertiles 0111 and 0 by a single left-to-right scan.
/// A lone trailing 0 is ambiguous (complete block 0, or truncated 0111) and
/// is reported as a partial. Words that admit no decomposition are rejected.
pub fn supertile_decompose(letters: &[u8]) -> Result<Decomposition, InflationError> {
    for (index, &letter) in letters.iter().enumerate() {
        if letter > 1 {
            return Err(InflationError::BadLetter { index, letter });
        }
    }
    let n = letters.len();
    // Up to three leading 1s can be the tail of a truncated 0111.
    let mut i = 0;
    while i < n && letters[i] == 1 {
        i += 1;
    }
    let leading = i;
    if leading > 3 {
        return Err(InflationError::NonLegal { index: 3 });
    }
    let mut supertiles = Vec::new();
    let mut trailing = 0;
    while i < n {
        debug_assert_eq!(letters[i], 0);
        if i + 1 == n {
            // Lone 0 at the end: complete block or truncated 0111.
            trailing = 1;
            break;
        }
        if letters[i + 1] == 0 {
            supertiles.push(Supertile { kind: 1, start: i });
            i += 1;
        } else if i + 3 < n {
            if letters[i + 2] == 1 && letters[i + 3] == 1 {
                supertiles.push(Supertile { kind: 0, start: i });
                i += 4;
            } else {
                // 0 1 followed by something other than 1 1: not a legal word.
                return Err(InflationError::NonLegal { index: i });
            }
        } else {
            // Word ends inside what must be a 0111 block.
            if letters[i + 1..].iter().all(|&l| l == 1) {
                trailing = n - i;
                break;
            }
            return Err(InflationError::NonLegal { index: i });
        }
    }
    Ok(Decomposition { supertiles, leading, trailing })
}

/// One left tile endpoint of a geometric patch, with its exact coordinates
/// pos = a + b*lambda.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchPoint {
    pub a: i64,
    pub b: i64,
    /// Tile type starting at this point: 0 (length lambda) or 1 (length 1).
    pub tile: u8,
}

impl PatchPoint {
    pub fn position(&self) -> ZLambda {
        ZLambda::new(self.a, self.b)
    }

    pub fn position_f64(&self) -> f64 {
        self.a as f64 + self.b as f64 * LAMBDA
    }
}

/// A finite geometric patch with complex weights attached per tile type.
#[derive(Clone, Debug)]
pub struct WeightedPointSet {
    /// Points in increasing spatial order.
    pub points: Vec<PatchPoint>,
    /// Weight given to a point of type 0 resp. 1.
    pub weights: [Complex64; 2],
    /// Index of the point at the origin (the marked position).
    pub origin_index: usize,
    /// Exact half-width lambda^{2*level + 1} of the covered window.
    pub radius_exact: ZLambda,
    pub level: u32,
}

impl WeightedPointSet {
    pub fn radius(&self) -> f64 {
        self.radius_exact.to_f64()
    }

    /// Total covered length 2r of the window [-r, r).
    pub fn window_length(&self) -> f64 {
        2.0 * self.radius()
    }

    pub fn weight_at(&self, idx: usize) -> Complex64 {
        self.weights[self.points[idx].tile as usize]
    }

    pub fn counts(&self) -> [u64; 2] {
        let mut c = [0u64; 2];
        for p in &self.points {
            c[p.tile as usize] += 1;
        }
        c
    }
}

/// Geometric realisation of the 2*level-fold inflation of the seed 0|0:
/// the word rho^{2*level}(0) rho^{2*level}(0) laid out so that the second
/// copy starts at the origin. The covered window is
/// [-lambda^{2*level+1}, lambda^{2*level+1}).
pub fn geometric_patch(level: u32, weights: [Complex64; 2]) -> WeightedPointSet {
    let word = substitute_letters(&[0], 2 * level);
    // Total displacement of one copy: n0 * lambda + n1 * 1.
    let ([n0, n1], _) = letter_frequencies(&word);
    let start = (-(n1 as i64), -(n0 as i64));
    let mut points = Vec::with_capacity(2 * word.len());
    let (mut a, mut b) = start;
    for _ in 0..2 {
        for &l in &word {
            points.push(PatchPoint { a, b, tile: l });
            if l == 0 {
                b += 1;
            } else {
                a += 1;
            }
        }
    }
    debug_assert_eq!((a, b), (n1 as i64, n0 as i64));
    let radius_exact = ZLambda::new(n1 as i64, n0 as i64);
    debug_assert_eq!(radius_exact, lambda_power(2 * level + 1));
    WeightedPointSet {
        points,
        weights,
        origin_index: word.len(),
        radius_exact,
        level,
    }
}

/// The balanced weight vector u = (1 - lambda, 1), orthogonal to the
/// statistically normalised right PF eigenvector.
pub fn balanced_weights() -> [Complex64; 2] {
    [Complex64::new(1.0 - LAMBDA, 0.0), Complex64::new(1.0, 0.0)]
}

/// Exact form of the balanced weights in Q(lambda).
pub fn balanced_weights_exact() -> [QLambda; 2] {
    [QLambda::from_integers(1, -1), QLambda::one()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::pf_data;

    #[test]
    fn substitution_images() {
        assert_eq!(substitute_letters(&[0], 1), vec![0, 1, 1, 1]);
        assert_eq!(substitute_letters(&[1], 1), vec![0]);
        assert_eq!(substitute_letters(&[0], 2), vec![0, 1, 1, 1, 0, 0, 0]);
    }

    #[test]
    fn seed_is_fixed_under_square() {
        // rho^2 applied to 0|0 keeps the seed in the middle.
        let w = substitute(&Word::seed(), 2);
        assert_eq!(w.letters[w.marker - 1], 0);
        assert_eq!(w.letters[w.marker], 0);
        assert_eq!(&w.letters[..w.marker], &[0, 1, 1, 1, 0, 0, 0]);
        assert_eq!(&w.letters[w.marker..], &[0, 1, 1, 1, 0, 0, 0]);
        // Another square extends the word without moving its core.
        let w2 = substitute(&Word::seed(), 4);
        assert_eq!(&w2.letters[w2.marker - 7..w2.marker + 7], &w.letters[..]);
    }

    #[test]
    fn word_lengths_follow_recursion() {
        // |rho^{n+1}(0)| = |rho^n(0)| + 3 |rho^{n-1}(0)|.
        let mut lens = Vec::new();
        for n in 0..12 {
            lens.push(substitute_letters(&[0], n).len());
        }
        for n in 2..lens.len() {
            assert_eq!(lens[n], lens[n - 1] + 3 * lens[n - 2]);
        }
        assert_eq!(&lens[..6], &[1, 4, 7, 19, 40, 97]);
    }

    #[test]
    fn decompose_example() {
        let d = supertile_decompose(&[0, 1, 1, 1, 0, 0, 0]).unwrap();
        assert_eq!(
            d.supertiles,
            vec![
                Supertile { kind: 0, start: 0 },
                Supertile { kind: 1, start: 4 },
                Supertile { kind: 1, start: 5 }
            ]
        );
        assert_eq!(d.leading, 0);
        assert_eq!(d.trailing, 1);
    }

    #[test]
    fn decompose_rejects_illegal() {
        assert_eq!(
            supertile_decompose(&[0, 1, 0, 1]),
            Err(InflationError::NonLegal { index: 0 })
        );
        assert_eq!(
            supertile_decompose(&[1, 1, 1, 1, 0]),
            Err(InflationError::NonLegal { index: 3 })
        );
        assert!(matches!(
            supertile_decompose(&[0, 2]),
            Err(InflationError::BadLetter { index: 1, letter: 2 })
        ));
    }

    #[test]
    fn decompose_round_trip() {
        // The supertile types of rho(w) recover w, up to the reported
        // trailing fragment.
        let base = substitute_letters(&[0], 6);
        for start in [0usize, 3, 10, 25] {
            for len in [1usize, 2, 5, 17, 40] {
                let w = &base[start..start + len];
                let image = substitute_letters(w, 1);
                let d = supertile_decompose(&image).unwrap();
                assert_eq!(d.leading, 0);
                let mut rebuilt = substitute_letters(&d.preimage(), 1);
                rebuilt.extend_from_slice(&image[image.len() - d.trailing..]);
                assert_eq!(rebuilt, image, "w = {w:?}");
            }
        }
    }

    #[test]
    fn patch_positions_level_one() {
        let patch = geometric_patch(1, [Complex64::new(1.0, 0.0); 2]);
        let expect: Vec<ZLambda> = vec![
            ZLambda::new(-3, -4),
            ZLambda::new(-3, -3),
            ZLambda::new(-2, -3),
            ZLambda::new(-1, -3),
            ZLambda::new(0, -3),
            ZLambda::new(0, -2),
            ZLambda::new(0, -1),
            ZLambda::new(0, 0),
            ZLambda::new(0, 1),
            ZLambda::new(1, 1),
            ZLambda::new(2, 1),
            ZLambda::new(3, 1),
            ZLambda::new(3, 2),
            ZLambda::new(3, 3),
        ];
        let got: Vec<ZLambda> = patch.points.iter().map(|p| p.position()).collect();
        assert_eq!(got, expect);
        assert_eq!(patch.origin_index, 7);
        assert_eq!(patch.radius_exact, ZLambda::new(3, 4)); // lambda^3
        // Positions strictly increase in the real embedding.
        for w in patch.points.windows(2) {
            assert!(w[0].position_f64() < w[1].position_f64());
        }
    }

    #[test]
    fn patch_is_self_consistent_across_levels() {
        // The level-L patch is a prefix-extension of the level-(L-1) patch
        // around the origin.
        let small = geometric_patch(2, [Complex64::new(1.0, 0.0); 2]);
        let large = geometric_patch(3, [Complex64::new(1.0, 0.0); 2]);
        let off = large.origin_index - small.origin_index;
        for (i, p) in small.points.iter().enumerate() {
            assert_eq!(large.points[off + i], *p);
        }
    }

    #[test]
    fn empirical_frequencies_approach_pf() {
        let pf = pf_data();
        let nu0 = pf.freq[0].to_f64();
        let mut prev = f64::INFINITY;
        for n in [4u32, 8, 12, 16] {
            let w = substitute_letters(&[0], n);
            let (_, freq) = letter_frequencies(&w);
            let err = (freq[0] - nu0).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-4);
    }
}
