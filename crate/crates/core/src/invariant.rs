//! Invariant polynomials of the group generated by orthogonal matrices, and
//! exact finite closures.
//!
//! A polynomial `f` in the `n²` entries `x_rs` of a matrix `X` is invariant
//! when `f(X_j·X) = f(X)` for every generator `X_j`; the invariants that also
//! vanish at the identity vanish on the closure of the generated semigroup.
//! For fixed degree `d` these form the nullspace of a rational linear system
//! on monomial coefficients, computed here exactly.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exactmath::{
    format_rational, nullspace_basis, parse_rational, Rational, RationalMatrix,
};
use crate::qfa::Word;

/// Exponent vector over `x_11, x_12, …, x_nn` (row-major).
///
/// Ordered by total degree, then by exponent vector with `x_11` first, so
/// `1 < x11 < x12 < … < x11² < x11·x12 < …`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    n: usize,
    exps: Vec<u32>,
}

impl Monomial {
    pub fn one(n: usize) -> Self {
        Self {
            n,
            exps: vec![0; n * n],
        }
    }

    /// The variable `x_rs` with zero-based `r`, `s`.
    pub fn var(n: usize, r: usize, s: usize) -> Self {
        let mut m = Self::one(n);
        m.exps[r * n + s] = 1;
        m
    }

    pub fn from_exponents(n: usize, exps: Vec<u32>) -> Result<Self> {
        if exps.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} exponents for {n}x{n} variables",
                exps.len()
            )));
        }
        Ok(Self { n, exps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            n: self.n,
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
        }
    }

    /// Value at the identity matrix: 1 if only diagonal variables occur.
    fn at_identity(&self) -> bool {
        self.exps
            .iter()
            .enumerate()
            .all(|(i, &e)| e == 0 || i / self.n == i % self.n)
    }

    fn var_name(n: usize, idx: usize) -> String {
        let (r, s) = (idx / n + 1, idx % n + 1);
        if n <= 9 {
            format!("x{r}{s}")
        } else {
            format!("x{r}_{s}")
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            f.write_str(&Self::var_name(self.n, i))?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

impl Monomial {
    /// Parses the [`Display`](fmt::Display) form, e.g. `x11^2*x21` or `1`.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let mut m = Self::one(n);
        let text = text.trim();
        if text == "1" {
            return Ok(m);
        }
        for factor in text.split('*') {
            let bad = || Error::Parse(format!("bad monomial factor `{factor}`"));
            let (name, exp) = match factor.split_once('^') {
                Some((v, e)) => (v, e.parse::<u32>().map_err(|_| bad())?),
                None => (factor, 1),
            };
            let idx = name.strip_prefix('x').ok_or_else(bad)?;
            let (r, s) = if let Some((r, s)) = idx.split_once('_') {
                (r.parse::<usize>().map_err(|_| bad())?, s.parse::<usize>().map_err(|_| bad())?)
            } else if idx.len() == 2 && n <= 9 {
                let d: Vec<usize> = idx
                    .chars()
                    .map(|c| c.to_digit(10).map(|d| d as usize))
                    .collect::<Option<_>>()
                    .ok_or_else(bad)?;
                (d[0], d[1])
            } else {
                return Err(bad());
            };
            if r == 0 || s == 0 || r > n || s > n {
                return Err(bad());
            }
            m.exps[(r - 1) * n + (s - 1)] += exp;
        }
        Ok(m)
    }
}

/// All `C(n² + d, d)` monomials of total degree `≤ d`, in [`Monomial`] order.
pub fn monomial_basis(n: usize, d: u32) -> Vec<Monomial> {
    fn fill(
        vars: usize,
        idx: usize,
        remaining: u32,
        current: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if idx == vars {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        // largest exponent on earlier variables first
        for e in (0..=remaining).rev() {
            current[idx] = e;
            fill(vars, idx + 1, remaining - e, current, out);
        }
        current[idx] = 0;
    }

    let vars = n * n;
    let mut out = Vec::new();
    for degree in 0..=d {
        let mut exps = Vec::new();
        fill(vars, 0, degree, &mut vec![0; vars], &mut exps);
        out.extend(exps.into_iter().map(|exps| Monomial { n, exps }));
    }
    out
}

/// A polynomial in the entries of an `n×n` matrix with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyQ {
    n: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl PolyQ {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        Self::from_terms(n, [(Monomial::one(n), c)])
    }

    pub fn var(n: usize, r: usize, s: usize) -> Self {
        Self::from_terms(n, [(Monomial::var(n, r, s), Rational::one())])
    }

    /// Sums the given terms; zero coefficients are dropped.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero(n);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        debug_assert_eq!(m.n, self.n);
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add(&self, other: &PolyQ) -> PolyQ {
        let mut p = self.clone();
        for (m, c) in &other.terms {
            p.add_term(m.clone(), c.clone());
        }
        p
    }

    pub fn sub(&self, other: &PolyQ) -> PolyQ {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> PolyQ {
        PolyQ::from_terms(self.n, self.terms.iter().map(|(m, a)| (m.clone(), a * c)))
    }

    pub fn mul(&self, other: &PolyQ) -> PolyQ {
        let mut p = PolyQ::zero(self.n);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                p.add_term(m1.mul(m2), c1 * c2);
            }
        }
        p
    }

    pub fn evaluate(&self, m: &RationalMatrix) -> Result<Rational> {
        evaluate(self, m)
    }

    /// Coefficient vector against an ordered monomial list.
    pub fn coordinates(&self, monomials: &[Monomial]) -> Vec<Rational> {
        monomials.iter().map(|m| self.coefficient(m)).collect()
    }

    pub fn to_file(&self) -> PolyFile {
        PolyFile {
            display: self.to_string(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.to_string(), format_rational(c)))
                .collect(),
        }
    }

    pub fn from_file(n: usize, file: &PolyFile) -> Result<Self> {
        let terms = file
            .terms
            .iter()
            .map(|(m, c)| Ok((Monomial::parse(n, m)?, parse_rational(c)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_terms(n, terms))
    }
}

/// Largest monomial first, e.g. `x21^2 + x11^2 - 1`.
impl fmt::Display for PolyQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            let abs = c.abs();
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let is_const = m.degree() == 0;
            if is_const {
                f.write_str(&format_rational(&abs))?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", format_rational(&abs))?;
            }
        }
        Ok(())
    }
}

/// JSON form of a polynomial: monomial → coefficient, plus a readable rendering.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyFile {
    pub display: String,
    pub terms: BTreeMap<String, String>,
}

pub fn evaluate(f: &PolyQ, m: &RationalMatrix) -> Result<Rational> {
    if m.rows() != f.n || m.cols() != f.n {
        return Err(Error::DimensionMismatch(format!(
            "polynomial in {0}x{0} entries evaluated at {1}x{2} matrix",
            f.n,
            m.rows(),
            m.cols()
        )));
    }
    let entries = m.entries();
    let mut total = Rational::zero();
    for (mono, c) in &f.terms {
        let mut term = c.clone();
        for (i, &e) in mono.exps.iter().enumerate() {
            if e > 0 {
                term *= num_traits::pow(entries[i].clone(), e as usize);
            }
        }
        total += term;
    }
    Ok(total)
}

/// Images of monomials under `X ↦ g·X`, memoised across calls for one `g`.
struct LeftSubstitution<'a> {
    n: usize,
    g: &'a RationalMatrix,
    cache: HashMap<Monomial, PolyQ>,
}

impl<'a> LeftSubstitution<'a> {
    fn new(g: &'a RationalMatrix) -> Self {
        Self {
            n: g.rows(),
            g,
            cache: HashMap::new(),
        }
    }

    /// `(g·X)_rs = Σ_t g_rt · x_ts`.
    fn linear_form(&self, idx: usize) -> PolyQ {
        let (r, s) = (idx / self.n, idx % self.n);
        PolyQ::from_terms(
            self.n,
            (0..self.n).map(|t| (Monomial::var(self.n, t, s), self.g[(r, t)].clone())),
        )
    }

    fn image(&mut self, m: &Monomial) -> PolyQ {
        if let Some(p) = self.cache.get(m) {
            return p.clone();
        }
        let result = match m.exps.iter().position(|&e| e > 0) {
            None => PolyQ::constant(self.n, Rational::one()),
            Some(idx) => {
                let mut rest = m.clone();
                rest.exps[idx] -= 1;
                let lower = self.image(&rest);
                lower.mul(&self.linear_form(idx))
            }
        };
        self.cache.insert(m.clone(), result.clone());
        result
    }
}

/// `f(g·X)` as a polynomial in `X`.
pub fn substitute_left(f: &PolyQ, g: &RationalMatrix) -> Result<PolyQ> {
    if g.rows() != f.n || g.cols() != f.n {
        return Err(Error::DimensionMismatch(format!(
            "substituting a {}x{} matrix into a polynomial in {1}x{1} entries",
            g.rows(),
            f.n
        )));
    }
    let mut sub = LeftSubstitution::new(g);
    let mut out = PolyQ::zero(f.n);
    for (m, c) in &f.terms {
        out = out.add(&sub.image(m).scale(c));
    }
    Ok(out)
}

fn check_generators(generators: &[RationalMatrix]) -> Result<usize> {
    let first = generators
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one generator is required".into()))?;
    let n = first.rows();
    for (i, g) in generators.iter().enumerate() {
        if g.rows() != n || g.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "generator {i} is {}x{}, expected {n}x{n}",
                g.rows(),
                g.cols()
            )));
        }
        if !g.is_orthogonal() {
            return Err(Error::InvalidArgument(format!("generator {i} is not orthogonal")));
        }
    }
    Ok(n)
}

/// SHA-256 over the canonical text of the generators.
pub fn generator_fingerprint(generators: &[RationalMatrix]) -> String {
    let mut h = Sha256::new();
    for g in generators {
        h.update(g.canonical_string().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Basis of `V_d`: polynomials of degree `≤ d` vanishing at `I` and invariant
/// under `X ↦ X_j·X` for every generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantBasis {
    pub n: usize,
    pub d: u32,
    pub polys: Vec<PolyQ>,
    pub generator_fingerprint: String,
    /// Size of the monomial basis of `E_d`.
    pub monomial_count: usize,
}

impl InvariantBasis {
    pub fn dimension(&self) -> usize {
        self.polys.len()
    }

    pub fn to_file(&self) -> BasisFile {
        BasisFile {
            schema: crate::SCHEMA.to_string(),
            n: self.n,
            d: self.d,
            generator_fingerprint: self.generator_fingerprint.clone(),
            monomial_count: self.monomial_count,
            dimension: self.polys.len(),
            polys: self.polys.iter().map(PolyQ::to_file).collect(),
        }
    }

    pub fn from_file(file: &BasisFile) -> Result<Self> {
        let polys = file
            .polys
            .iter()
            .map(|p| PolyQ::from_file(file.n, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: file.n,
            d: file.d,
            polys,
            generator_fingerprint: file.generator_fingerprint.clone(),
            monomial_count: file.monomial_count,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisFile {
    pub schema: String,
    pub n: usize,
    pub d: u32,
    pub generator_fingerprint: String,
    pub monomial_count: usize,
    pub dimension: usize,
    pub polys: Vec<PolyFile>,
}

/// The linear system on coefficient vectors (columns = `monomials`): one row
/// per (generator, monomial) from `f(X_j·X) − f(X) ≡ 0`, then one row for
/// `f(I) = 0`. All-zero rows are omitted.
pub fn invariance_system(
    generators: &[RationalMatrix],
    monomials: &[Monomial],
) -> Result<RationalMatrix> {
    let n = check_generators(generators)?;
    let index: HashMap<&Monomial, usize> =
        monomials.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let cols = monomials.len();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for g in generators {
        let mut sub = LeftSubstitution::new(g);
        // block[μ][m] = coefficient of μ in image(m) − m
        let mut block = vec![vec![Rational::zero(); cols]; cols];
        for (col, m) in monomials.iter().enumerate() {
            let image = sub.image(m).sub(&PolyQ::from_terms(n, [(m.clone(), Rational::one())]));
            for (mu, c) in image.terms {
                let row = *index.get(&mu).ok_or_else(|| {
                    Error::InvalidArgument("monomial list is not closed under substitution".into())
                })?;
                block[row][col] = c;
            }
        }
        rows.extend(block.into_iter().filter(|r| r.iter().any(|c| !c.is_zero())));
    }
    rows.push(
        monomials
            .iter()
            .map(|m| if m.at_identity() { Rational::one() } else { Rational::zero() })
            .collect(),
    );
    RationalMatrix::from_rows(rows)
}

pub fn invariant_basis(generators: &[RationalMatrix], d: u32) -> Result<InvariantBasis> {
    let n = check_generators(generators)?;
    let monomials = monomial_basis(n, d);
    let system = invariance_system(generators, &monomials)?;
    let polys = nullspace_basis(&system)
        .into_iter()
        .map(|v| PolyQ::from_terms(n, monomials.iter().cloned().zip(v.into_entries())))
        .collect();
    Ok(InvariantBasis {
        n,
        d,
        polys,
        generator_fingerprint: generator_fingerprint(generators),
        monomial_count: monomials.len(),
    })
}

/// Whether `f` lies in the span of `basis` (exact rank comparison).
pub fn in_span(basis: &[PolyQ], f: &PolyQ) -> bool {
    let mut monomials: Vec<Monomial> = basis
        .iter()
        .chain(std::iter::once(f))
        .flat_map(|p| p.terms.keys().cloned())
        .collect();
    monomials.sort();
    monomials.dedup();
    let rows = |ps: &[&PolyQ]| {
        RationalMatrix::from_rows(ps.iter().map(|p| p.coordinates(&monomials)).collect())
            .map(|m| if ps.is_empty() { 0 } else { m.rank() })
            .unwrap_or(0)
    };
    let base: Vec<&PolyQ> = basis.iter().collect();
    let mut extended = base.clone();
    extended.push(f);
    rows(&base) == rows(&extended)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureElement {
    pub matrix: RationalMatrix,
    /// Shortest generator word reaching this element (breadth-first).
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupCheck {
    pub has_identity: bool,
    pub has_inverses: bool,
    pub closed_under_generators: bool,
}

impl GroupCheck {
    pub fn holds(&self) -> bool {
        self.has_identity && self.has_inverses && self.closed_under_generators
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosureStatus {
    Finite,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureResult {
    pub status: ClosureStatus,
    pub cap: usize,
    /// Distinct elements discovered (all of them when finite).
    pub discovered: usize,
    /// Elements in breadth-first order, identity first; empty unless finite.
    pub elements: Vec<ClosureElement>,
    /// Shortest non-empty word whose product is the identity, when finite.
    pub identity_word: Option<Word>,
    pub group_check: Option<GroupCheck>,
}

impl ClosureResult {
    pub fn is_finite(&self) -> bool {
        self.status == ClosureStatus::Finite
    }

    /// A non-empty word reaching element `i`.
    pub fn nonempty_word(&self, i: usize) -> Option<&Word> {
        let e = self.elements.get(i)?;
        if e.word.is_empty() {
            self.identity_word.as_ref()
        } else {
            Some(&e.word)
        }
    }
}

/// Breadth-first closure of `{X_w : w ∈ Σ*}` with exact dedup. Gives up once
/// more than `cap` distinct elements are found.
pub fn semigroup_closure(generators: &[RationalMatrix], cap: usize) -> Result<ClosureResult> {
    let n = check_generators(generators)?;
    if cap == 0 {
        return Err(Error::InvalidArgument("closure cap must be at least 1".into()));
    }
    let identity = RationalMatrix::identity(n);
    let mut index: HashMap<RationalMatrix, usize> = HashMap::new();
    let mut elements = vec![ClosureElement {
        matrix: identity.clone(),
        word: Word::empty(),
    }];
    index.insert(identity, 0);
    let mut identity_word = None;
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for (j, g) in generators.iter().enumerate() {
            let product = elements[i].matrix.mul(g)?;
            match index.get(&product) {
                Some(&0) if identity_word.is_none() => {
                    let mut w = elements[i].word.0.clone();
                    w.push(j);
                    identity_word = Some(Word(w));
                }
                Some(_) => {}
                None => {
                    if elements.len() == cap {
                        return Ok(ClosureResult {
                            status: ClosureStatus::BudgetExceeded,
                            cap,
                            discovered: cap + 1,
                            elements: Vec::new(),
                            identity_word: None,
                            group_check: None,
                        });
                    }
                    let mut w = elements[i].word.0.clone();
                    w.push(j);
                    index.insert(product.clone(), elements.len());
                    queue.push_back(elements.len());
                    elements.push(ClosureElement {
                        matrix: product,
                        word: Word(w),
                    });
                }
            }
        }
    }
    let group_check = GroupCheck {
        has_identity: elements[0].matrix.is_identity(),
        // orthogonal elements: the inverse is the transpose
        has_inverses: elements
            .iter()
            .all(|e| index.contains_key(&e.matrix.transpose())),
        closed_under_generators: elements.iter().all(|e| {
            generators
                .iter()
                .all(|g| e.matrix.mul(g).is_ok_and(|p| index.contains_key(&p)))
        }),
    };
    Ok(ClosureResult {
        status: ClosureStatus::Finite,
        cap,
        discovered: elements.len(),
        elements,
        identity_word,
        group_check: Some(group_check),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NonVanishing {
    pub word: Vec<usize>,
    pub poly_index: usize,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VanishingReport {
    pub polys: usize,
    pub max_word_len: usize,
    pub words_checked: u64,
    pub first_nonzero: Option<NonVanishing>,
}

impl VanishingReport {
    pub fn all_zero(&self) -> bool {
        self.first_nonzero.is_none()
    }
}

/// Evaluates every basis polynomial at `X_w` for all `|w| ≤ max_word_len`.
pub fn vanishing_report(
    basis: &InvariantBasis,
    generators: &[RationalMatrix],
    max_word_len: usize,
) -> Result<VanishingReport> {
    let n = check_generators(generators)?;
    if n != basis.n {
        return Err(Error::DimensionMismatch(format!(
            "basis for {}x{} matrices, generators are {n}x{n}",
            basis.n, basis.n
        )));
    }
    let mut report = VanishingReport {
        polys: basis.polys.len(),
        max_word_len,
        words_checked: 0,
        first_nonzero: None,
    };
    let mut layer = vec![(Vec::<usize>::new(), RationalMatrix::identity(n))];
    for len in 0..=max_word_len {
        for (w, m) in &layer {
            report.words_checked += 1;
            for (pi, f) in basis.polys.iter().enumerate() {
                let v = evaluate(f, m)?;
                if !v.is_zero() {
                    report.first_nonzero = Some(NonVanishing {
                        word: w.clone(),
                        poly_index: pi,
                        value: format_rational(&v),
                    });
                    return Ok(report);
                }
            }
        }
        if len == max_word_len {
            break;
        }
        let mut next = Vec::with_capacity(layer.len() * generators.len());
        for (w, m) in &layer {
            for (j, g) in generators.iter().enumerate() {
                let mut w2 = w.clone();
                w2.push(j);
                next.push((w2, m.mul(g)?));
            }
        }
        layer = next;
    }
    Ok(report)
}
