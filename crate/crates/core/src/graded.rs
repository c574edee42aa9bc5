//! Graded bases, tensor words, formal linear combinations, and the sign
//! engine.
//!
//! Every sign in the system is produced by exactly two rules implemented
//! here: the Koszul rule for moving graded maps past graded elements, and
//! the suspension sign relating an operation to its shifted (bar-complex)
//! component. Nothing else in the crate invents a sign.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::scalar::{Scalar, Sign};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GradedError {
    #[error("duplicate generator name {0:?}")]
    DuplicateGenerator(String),
    #[error("designated unit {0:?} must have degree 0, found {1}")]
    UnitDegree(String, i64),
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
    #[error("tensor block arities sum to {got}, word has length {want}")]
    ArityMismatch { got: usize, want: usize },
}

/// An ordered finite basis of a graded module: generator names with integer
/// degrees, and an optional designated unit (which must sit in degree 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedBasis {
    generators: Vec<(String, i64)>,
    unit: Option<usize>,
    index: HashMap<String, usize>,
}

impl GradedBasis {
    pub fn new(
        generators: Vec<(String, i64)>,
        unit: Option<&str>,
    ) -> Result<Self, GradedError> {
        let mut index = HashMap::new();
        for (i, (name, _)) in generators.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(GradedError::DuplicateGenerator(name.clone()));
            }
        }
        let unit = match unit {
            None => None,
            Some(name) => {
                let i = *index
                    .get(name)
                    .ok_or_else(|| GradedError::UnknownGenerator(name.to_owned()))?;
                let deg = generators[i].1;
                if deg != 0 {
                    return Err(GradedError::UnitDegree(name.to_owned(), deg));
                }
                Some(i)
            }
        };
        Ok(GradedBasis {
            generators,
            unit,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn degree(&self, gen: u32) -> i64 {
        self.generators[gen as usize].1
    }

    pub fn name(&self, gen: u32) -> &str {
        &self.generators[gen as usize].0
    }

    pub fn lookup(&self, name: &str) -> Result<u32, GradedError> {
        self.index
            .get(name)
            .map(|&i| i as u32)
            .ok_or_else(|| GradedError::UnknownGenerator(name.to_owned()))
    }

    pub fn unit(&self) -> Option<u32> {
        self.unit.map(|i| i as u32)
    }

    pub fn generators(&self) -> impl Iterator<Item = (u32, &str, i64)> {
        self.generators
            .iter()
            .enumerate()
            .map(|(i, (n, d))| (i as u32, n.as_str(), *d))
    }

    /// The dual basis: same order, names suffixed with `*`, degrees negated.
    pub fn dual(&self) -> GradedBasis {
        let generators = self
            .generators
            .iter()
            .map(|(n, d)| (format!("{}*", n), -d))
            .collect();
        GradedBasis {
            generators,
            unit: None,
            index: self
                .index
                .iter()
                .map(|(n, &i)| (format!("{}*", n), i))
                .collect(),
        }
    }
}

/// A basis word in a (possibly suspended, possibly marked) tensor power.
///
/// `entries[i]` indexes the algebra basis, except at the marked position
/// where it indexes the module basis. The suspension flag shifts every
/// entry degree by +1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TensorWord {
    pub entries: Vec<u32>,
    pub marked: Option<usize>,
    pub suspended: bool,
}

impl TensorWord {
    pub fn plain(entries: Vec<u32>, suspended: bool) -> Self {
        TensorWord {
            entries,
            marked: None,
            suspended,
        }
    }

    pub fn marked(entries: Vec<u32>, marked: usize, suspended: bool) -> Self {
        assert!(marked < entries.len(), "marked index out of range");
        TensorWord {
            entries,
            marked: Some(marked),
            suspended,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Counts of algebra factors left and right of the mark.
    pub fn mark_shape(&self) -> Option<(usize, usize)> {
        self.marked.map(|m| (m, self.entries.len() - m - 1))
    }
}

/// Degree lookups for words whose entries mix an algebra basis with an
/// optional module basis at the marked slot.
#[derive(Clone, Copy)]
pub struct WordCtx<'a> {
    pub algebra: &'a GradedBasis,
    pub module: Option<&'a GradedBasis>,
}

impl<'a> WordCtx<'a> {
    pub fn plain(algebra: &'a GradedBasis) -> Self {
        WordCtx {
            algebra,
            module: None,
        }
    }

    pub fn with_module(algebra: &'a GradedBasis, module: &'a GradedBasis) -> Self {
        WordCtx {
            algebra,
            module: Some(module),
        }
    }

    pub fn entry_degree(&self, word: &TensorWord, i: usize) -> i64 {
        let base = if word.marked == Some(i) {
            self.module
                .expect("marked word evaluated without a module basis")
                .degree(word.entries[i])
        } else {
            self.algebra.degree(word.entries[i])
        };
        if word.suspended {
            base + 1
        } else {
            base
        }
    }

    /// Sum of entry degrees over `range`, suspension included.
    pub fn range_degree(&self, word: &TensorWord, range: std::ops::Range<usize>) -> i64 {
        range.map(|i| self.entry_degree(word, i)).sum()
    }

    pub fn word_degree(&self, word: &TensorWord) -> i64 {
        self.range_degree(word, 0..word.len())
    }
}

/// Total degree of a word: sum of entry degrees, plus the length when
/// suspended.
pub fn word_degree(word: &TensorWord, ctx: &WordCtx<'_>) -> i64 {
    ctx.word_degree(word)
}

/// The sign `(-1)^(deg_left * deg_right)` picked up when a map of degree
/// `deg_left` moves past an element of degree `deg_right`.
pub fn koszul_sign(deg_left: i64, deg_right: i64) -> Sign {
    Sign::from_exponent(deg_left * deg_right)
}

/// The sign relating a shifted operation to the unshifted one on inputs of
/// the given degrees: `(-1)^(sum_j (k-j)(d_j + 1))` with `j` one-based.
pub fn suspension_sign(degrees: &[i64]) -> Sign {
    let k = degrees.len() as i64;
    let e: i64 = degrees
        .iter()
        .enumerate()
        .map(|(j, d)| (k - 1 - j as i64) * (d + 1))
        .sum();
    Sign::from_exponent(e)
}

/// A formal linear combination of generators of one basis.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Element {
    terms: BTreeMap<u32, Scalar>,
}

impl Element {
    pub fn zero() -> Self {
        Element::default()
    }

    pub fn generator(gen: u32, coeff: Scalar) -> Self {
        let mut e = Element::zero();
        e.add_term(gen, coeff);
        e
    }

    pub fn add_term(&mut self, gen: u32, coeff: Scalar) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.remove(&gen) {
            None => {
                self.terms.insert(gen, coeff);
            }
            Some(old) => {
                let sum = old.add(&coeff);
                if !sum.is_zero() {
                    self.terms.insert(gen, sum);
                }
            }
        }
    }

    pub fn add(&mut self, other: &Element) {
        for (g, c) in &other.terms {
            self.add_term(*g, c.clone());
        }
    }

    pub fn scale(&self, s: &Scalar) -> Element {
        let mut out = Element::zero();
        for (g, c) in &self.terms {
            out.add_term(*g, c.mul(s));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Scalar)> {
        self.terms.iter().map(|(g, c)| (*g, c))
    }

    pub fn coeff(&self, gen: u32) -> Option<&Scalar> {
        self.terms.get(&gen)
    }

    pub fn describe(&self, basis: &GradedBasis) -> String {
        if self.is_zero() {
            return "0".to_owned();
        }
        self.terms
            .iter()
            .map(|(g, c)| format!("{}*{}", c, basis.name(*g)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// A formal linear combination of tensor words. All stored words share one
/// suspension flag and one marked/unmarked shape; zero coefficients are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vector {
    terms: BTreeMap<TensorWord, Scalar>,
}

impl Vector {
    pub fn zero() -> Self {
        Vector::default()
    }

    pub fn single(word: TensorWord, coeff: Scalar) -> Self {
        let mut v = Vector::zero();
        v.add_term(word, coeff);
        v
    }

    pub fn add_term(&mut self, word: TensorWord, coeff: Scalar) {
        if coeff.is_zero() {
            return;
        }
        if let Some(first) = self.terms.keys().next() {
            debug_assert_eq!(first.suspended, word.suspended);
            debug_assert_eq!(first.marked.is_some(), word.marked.is_some());
        }
        match self.terms.remove(&word) {
            None => {
                self.terms.insert(word, coeff);
            }
            Some(old) => {
                let sum = old.add(&coeff);
                if !sum.is_zero() {
                    self.terms.insert(word, sum);
                }
            }
        }
    }

    pub fn add(&mut self, other: &Vector) {
        for (w, c) in &other.terms {
            self.add_term(w.clone(), c.clone());
        }
    }

    pub fn add_scaled(&mut self, other: &Vector, s: &Scalar) {
        for (w, c) in &other.terms {
            self.add_term(w.clone(), c.mul(s));
        }
    }

    pub fn scale(&self, s: &Scalar) -> Vector {
        let mut out = Vector::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c.mul(s));
        }
        out
    }

    pub fn negate(&self) -> Vector {
        let mut out = Vector::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c.neg());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TensorWord, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, word: &TensorWord) -> Option<&Scalar> {
        self.terms.get(word)
    }

    pub fn describe(&self, ctx: &WordCtx<'_>) -> String {
        if self.is_zero() {
            return "0".to_owned();
        }
        self.terms
            .iter()
            .map(|(w, c)| format!("{} {}", c, describe_word(w, ctx)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

pub fn describe_word(word: &TensorWord, ctx: &WordCtx<'_>) -> String {
    let mut parts = Vec::with_capacity(word.len());
    for (i, g) in word.entries.iter().enumerate() {
        let name = if word.marked == Some(i) {
            ctx.module
                .expect("marked word described without module basis")
                .name(*g)
        } else {
            ctx.algebra.name(*g)
        };
        if word.marked == Some(i) {
            parts.push(format!("[{}]", name));
        } else {
            parts.push(name.to_owned());
        }
    }
    let body = parts.join(",");
    if word.suspended {
        format!("s({})", body)
    } else {
        format!("({})", body)
    }
}

/// One factor of a tensor product of maps: an identity block of a given
/// width, or a single multilinear map given by its arity, degree, and an
/// evaluation on basis tuples (into the algebra basis).
pub enum TensorFactor<'a> {
    Identity(usize),
    Map {
        arity: usize,
        degree: i64,
        apply: &'a dyn Fn(&[u32]) -> Element,
    },
}

impl TensorFactor<'_> {
    fn arity(&self) -> usize {
        match self {
            TensorFactor::Identity(n) => *n,
            TensorFactor::Map { arity, .. } => *arity,
        }
    }

    fn degree(&self) -> i64 {
        match self {
            TensorFactor::Identity(_) => 0,
            TensorFactor::Map { degree, .. } => *degree,
        }
    }
}

/// Evaluates a graded tensor product of maps on a basis word, accumulating
/// the Koszul signs left to right: applying the block in position `j`
/// costs `(-1)^(|block_j| * |subword_1 ... subword_(j-1)|)`.
pub fn apply_tensor_of_maps(
    factors: &[TensorFactor<'_>],
    word: &TensorWord,
    ctx: &WordCtx<'_>,
) -> Result<Vector, GradedError> {
    let total: usize = factors.iter().map(|f| f.arity()).sum();
    if total != word.len() {
        return Err(GradedError::ArityMismatch {
            got: total,
            want: word.len(),
        });
    }
    debug_assert!(word.marked.is_none(), "tensor factors act on plain words");

    // Each partial result: (accumulated output entries, coefficient).
    let one = crate::scalar::Scalar::one(ring_of_ctx(ctx));
    let mut partial: Vec<(Vec<u32>, Scalar)> = vec![(Vec::new(), one)];
    let mut offset = 0usize;
    let mut degree_before = 0i64;
    for factor in factors {
        let arity = factor.arity();
        let slice = &word.entries[offset..offset + arity];
        let block_degree_in = ctx.range_degree(word, offset..offset + arity);
        let sign = koszul_sign(factor.degree(), degree_before);
        match factor {
            TensorFactor::Identity(_) => {
                for (out, _) in partial.iter_mut() {
                    out.extend_from_slice(slice);
                }
            }
            TensorFactor::Map { apply, .. } => {
                let image = apply(slice);
                let mut next = Vec::new();
                for (out, coeff) in &partial {
                    for (gen, c) in image.iter() {
                        let mut entries = out.clone();
                        entries.push(gen);
                        next.push((entries, sign.apply(&coeff.mul(c))));
                    }
                }
                partial = next;
                if partial.is_empty() {
                    return Ok(Vector::zero());
                }
            }
        }
        offset += arity;
        degree_before += block_degree_in;
    }
    let mut out = Vector::zero();
    for (entries, coeff) in partial {
        out.add_term(TensorWord::plain(entries, word.suspended), coeff);
    }
    Ok(out)
}

fn ring_of_ctx(_ctx: &WordCtx<'_>) -> crate::scalar::Ring {
    // The ring is carried by the coefficients themselves; the seed
    // coefficient only needs a ring and is replaced on first multiply.
    crate::scalar::Ring::Int
}
