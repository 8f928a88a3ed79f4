//! Reaction networks: parsing, species/step classification, stoichiometry.
//!
//! Networks are written one reversible reaction per line, `LHS <-> RHS`, with
//! `+`-separated terms, optional integer coefficients, `*` for the free
//! surface site and a trailing `*` marking a bound species:
//!
//! ```text
//! # adsorption followed by a surface reaction
//! A + * <-> A*
//! B + * <-> B*
//! A* + B* <-> C* + *
//! ```
//!
//! Species classes are inferred from whole-file context: a bare name is a gas
//! species, `X*` is an adsorbed molecule when bare `X` appears somewhere in
//! the file and a surface intermediate otherwise, and `*` is the free site.
//! Lines whose site count does not balance get implicit free-site terms added
//! to the deficient side (such terms are conventionally left out of adsorbed
//! pair reactions like `A* + B* <-> C*`).

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Species taxonomy: unbound, adsorbed with a stable unbound counterpart, or
/// surface-only intermediate/radical (the free site `*` is an intermediate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum SpeciesClass {
    #[cfg_attr(feature = "serde", serde(rename = "g"))]
    Gas,
    #[cfg_attr(feature = "serde", serde(rename = "a"))]
    Adsorbed,
    #[cfg_attr(feature = "serde", serde(rename = "s"))]
    Intermediate,
}

impl SpeciesClass {
    pub fn letter(self) -> char {
        match self {
            SpeciesClass::Gas => 'g',
            SpeciesClass::Adsorbed => 'a',
            SpeciesClass::Intermediate => 's',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Species {
    pub name: String,
    pub class: SpeciesClass,
}

impl Species {
    pub fn is_free_site(&self) -> bool {
        self.name == "*"
    }

    /// Bound species occupy surface sites (adsorbed, intermediates, free site).
    pub fn is_bound(&self) -> bool {
        self.class != SpeciesClass::Gas
    }
}

/// Elementary reaction taxonomy by participant classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum ReactionKind {
    /// All participants in homogeneous (gas) phase.
    #[cfg_attr(feature = "serde", serde(rename = "g"))]
    Homogeneous,
    /// Ad/desorption: one gas species against its bound counterpart plus `*`.
    #[cfg_attr(feature = "serde", serde(rename = "d"))]
    Adsorption,
    /// Reaction between adsorbed molecules only.
    #[cfg_attr(feature = "serde", serde(rename = "a"))]
    AdsorbedPair,
    /// Adsorbed molecules reacting with surface intermediates.
    #[cfg_attr(feature = "serde", serde(rename = "c"))]
    MixedSurface,
    /// Reaction between surface intermediates exclusively.
    #[cfg_attr(feature = "serde", serde(rename = "s"))]
    IntermediatePair,
}

impl ReactionKind {
    pub fn letter(self) -> char {
        match self {
            ReactionKind::Homogeneous => 'g',
            ReactionKind::Adsorption => 'd',
            ReactionKind::AdsorbedPair => 'a',
            ReactionKind::MixedSurface => 'c',
            ReactionKind::IntermediatePair => 's',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Direction {
    Forward,
    Reverse,
}

/// One direction of a reversible reaction. Reactant/product entries are
/// `(species index, coefficient)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ElementaryStep {
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    pub kind: ReactionKind,
    pub direction: Direction,
    /// Column of this step in the stoichiometry matrix (and in `k`).
    pub rate_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ReactionNetwork {
    /// Gas species first, then adsorbed, then intermediates, free site last.
    pub species: Vec<Species>,
    /// Steps in file order, forward before reverse; `steps[j].rate_index == j`.
    pub steps: Vec<ElementaryStep>,
    /// Stoichiometry matrix, `n_species` rows by `n_steps` columns.
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub stoichiometry: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: unbalanced site count (implicit free-site coefficient would exceed 2)")]
    UnbalancedSites { line: usize },
    #[error("line {line}: duplicate reaction")]
    DuplicateReaction { line: usize },
    #[error("network has bound species but no free-site species '*'")]
    MissingFreeSite,
    #[error("no reactions")]
    NoReactions,
    #[error("line {line}: unclassifiable step ({msg})")]
    Unclassifiable { line: usize, msg: String },
}

/// A `(name, coefficient)` term list for one side of a reaction.
type Side = Vec<(String, u32)>;

struct RawReaction {
    line: usize,
    lhs: Side,
    rhs: Side,
}

/// Parse the reaction DSL into a classified network with stoichiometry.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, ParseError> {
    let mut raw = Vec::new();
    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let code = match full_line.find('#') {
            Some(pos) => &full_line[..pos],
            None => full_line,
        };
        if code.trim().is_empty() {
            continue;
        }
        raw.push(parse_line(code, line_no)?);
    }
    if raw.is_empty() {
        return Err(ParseError::NoReactions);
    }

    for r in &mut raw {
        balance_sites(r)?;
    }
    check_duplicates(&raw)?;

    let species = classify_species(&raw)?;
    let index_of = |name: &str| species.iter().position(|s| s.name == name).unwrap();

    let n = species.len();
    let m = 2 * raw.len();
    let mut steps = Vec::with_capacity(m);
    let mut matrix = vec![vec![0i64; m]; n];
    for (i, r) in raw.iter().enumerate() {
        let to_indexed = |side: &Side| -> Vec<(usize, u32)> {
            side.iter().map(|(n, c)| (index_of(n), *c)).collect()
        };
        let lhs = to_indexed(&r.lhs);
        let rhs = to_indexed(&r.rhs);
        let kind = classify_participants(&lhs, &rhs, &species)
            .map_err(|msg| ParseError::Unclassifiable { line: r.line, msg })?;

        for &(s, c) in &lhs {
            matrix[s][2 * i] -= c as i64;
            matrix[s][2 * i + 1] += c as i64;
        }
        for &(s, c) in &rhs {
            matrix[s][2 * i] += c as i64;
            matrix[s][2 * i + 1] -= c as i64;
        }

        steps.push(ElementaryStep {
            reactants: lhs.clone(),
            products: rhs.clone(),
            kind,
            direction: Direction::Forward,
            rate_index: 2 * i,
        });
        steps.push(ElementaryStep {
            reactants: rhs,
            products: lhs,
            kind,
            direction: Direction::Reverse,
            rate_index: 2 * i + 1,
        });
    }

    Ok(ReactionNetwork {
        species,
        steps,
        stoichiometry: matrix,
    })
}

fn parse_line(code: &str, line: usize) -> Result<RawReaction, ParseError> {
    let arrow = code.find("<->").ok_or_else(|| {
        // A bare `->` is a deliberate unsupported token, not a generic typo.
        let msg = if code.contains("->") {
            "irreversible `->` is not supported; use `<->`".to_string()
        } else {
            "missing `<->`".to_string()
        };
        let col = code.find("->").map(|p| p + 1).unwrap_or(code.len().max(1));
        ParseError::Syntax { line, col, msg }
    })?;
    let lhs = parse_side(&code[..arrow], 0, line)?;
    let rhs = parse_side(&code[arrow + 3..], arrow + 3, line)?;
    Ok(RawReaction { line, lhs, rhs })
}

fn parse_side(text: &str, offset: usize, line: usize) -> Result<Side, ParseError> {
    let mut side: Side = Vec::new();
    // split manually so each term knows its column
    let mut pos = 0usize;
    for piece in text.split('+') {
        let (name, coef) = parse_term(piece, offset + pos, line)?;
        match side.iter_mut().find(|(n, _)| *n == name) {
            Some((_, c)) => *c += coef,
            None => side.push((name, coef)),
        }
        pos += piece.len() + 1;
    }
    for (name, coef) in &side {
        if *coef > 2 {
            return Err(ParseError::Syntax {
                line,
                col: offset + 1,
                msg: format!("coefficient {coef} for `{name}` exceeds 2 (bimolecular limit)"),
            });
        }
    }
    Ok(side)
}

fn parse_term(piece: &str, offset: usize, line: usize) -> Result<(String, u32), ParseError> {
    let trimmed_start = piece.len() - piece.trim_start().len();
    let term = piece.trim();
    let col = offset + trimmed_start + 1;
    if term.is_empty() {
        return Err(ParseError::Syntax {
            line,
            col,
            msg: "empty term".to_string(),
        });
    }

    let digits: String = term.chars().take_while(|c| c.is_ascii_digit()).collect();
    let rest = term[digits.len()..].trim_start();
    let coef = if digits.is_empty() {
        1
    } else {
        let c: u32 = digits.parse().map_err(|_| ParseError::Syntax {
            line,
            col,
            msg: format!("bad coefficient `{digits}`"),
        })?;
        if !(1..=2).contains(&c) {
            return Err(ParseError::Syntax {
                line,
                col,
                msg: format!("coefficient {c} outside {{1, 2}}"),
            });
        }
        c
    };

    if rest == "*" {
        return Ok(("*".to_string(), coef));
    }
    let mut chars = rest.char_indices();
    match chars.next() {
        Some((_, c)) if c.is_ascii_alphabetic() => {}
        _ => {
            return Err(ParseError::Syntax {
                line,
                col,
                msg: format!("expected species name, found `{rest}`"),
            })
        }
    }
    let mut star = false;
    for (i, c) in chars {
        if star {
            return Err(ParseError::Syntax {
                line,
                col: col + i,
                msg: "`*` must terminate the name".to_string(),
            });
        }
        if c == '*' {
            star = true;
        } else if !c.is_ascii_alphanumeric() && c != '_' {
            return Err(ParseError::Syntax {
                line,
                col: col + i,
                msg: format!("invalid character `{c}` in species name"),
            });
        }
    }
    Ok((rest.to_string(), coef))
}

fn is_bound_name(name: &str) -> bool {
    name.ends_with('*')
}

/// Add implicit free-site terms so each line conserves surface sites.
fn balance_sites(r: &mut RawReaction) -> Result<(), ParseError> {
    let count = |side: &Side| -> i64 {
        side.iter()
            .filter(|(n, _)| is_bound_name(n))
            .map(|(_, c)| *c as i64)
            .sum()
    };
    let delta = count(&r.lhs) - count(&r.rhs);
    if delta == 0 {
        return Ok(());
    }
    let (side, need) = if delta > 0 {
        (&mut r.rhs, delta as u32)
    } else {
        (&mut r.lhs, (-delta) as u32)
    };
    let entry = side.iter_mut().find(|(n, _)| n == "*");
    let total = entry.as_ref().map(|(_, c)| *c).unwrap_or(0) + need;
    if total > 2 {
        return Err(ParseError::UnbalancedSites { line: r.line });
    }
    match entry {
        Some((_, c)) => *c = total,
        None => side.push(("*".to_string(), total)),
    }
    Ok(())
}

fn check_duplicates(raw: &[RawReaction]) -> Result<(), ParseError> {
    let canon = |side: &Side| -> Vec<(String, u32)> {
        let mut v = side.clone();
        v.sort();
        v
    };
    let mut seen: Vec<(Vec<(String, u32)>, Vec<(String, u32)>)> = Vec::new();
    for r in raw {
        let l = canon(&r.lhs);
        let h = canon(&r.rhs);
        if seen.iter().any(|(a, b)| (a == &l && b == &h) || (a == &h && b == &l)) {
            return Err(ParseError::DuplicateReaction { line: r.line });
        }
        seen.push((l, h));
    }
    Ok(())
}

fn classify_species(raw: &[RawReaction]) -> Result<Vec<Species>, ParseError> {
    let mut names: Vec<String> = Vec::new();
    for r in raw {
        for (n, _) in r.lhs.iter().chain(r.rhs.iter()) {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    let has_bare = |starred: &str| {
        let bare = &starred[..starred.len() - 1];
        names.iter().any(|n| n == bare)
    };

    let mut gas = Vec::new();
    let mut adsorbed = Vec::new();
    let mut intermediates = Vec::new();
    let mut site = Vec::new();
    for name in &names {
        if name == "*" {
            site.push(Species {
                name: name.clone(),
                class: SpeciesClass::Intermediate,
            });
        } else if is_bound_name(name) {
            let class = if has_bare(name) {
                SpeciesClass::Adsorbed
            } else {
                SpeciesClass::Intermediate
            };
            if class == SpeciesClass::Adsorbed {
                adsorbed.push(Species {
                    name: name.clone(),
                    class,
                });
            } else {
                intermediates.push(Species {
                    name: name.clone(),
                    class,
                });
            }
        } else {
            gas.push(Species {
                name: name.clone(),
                class: SpeciesClass::Gas,
            });
        }
    }

    let any_bound = !adsorbed.is_empty() || !intermediates.is_empty();
    if any_bound && site.is_empty() {
        return Err(ParseError::MissingFreeSite);
    }

    let mut species = gas;
    species.extend(adsorbed);
    species.extend(intermediates);
    species.extend(site);
    Ok(species)
}

fn classify_participants(
    lhs: &[(usize, u32)],
    rhs: &[(usize, u32)],
    species: &[Species],
) -> Result<ReactionKind, String> {
    let mut gas = 0usize;
    let mut adsorbed = 0usize;
    let mut radicals = 0usize;
    let mut site = false;
    let mut seen: Vec<usize> = Vec::new();
    for &(idx, _) in lhs.iter().chain(rhs.iter()) {
        if seen.contains(&idx) {
            continue;
        }
        seen.push(idx);
        let sp = &species[idx];
        if sp.is_free_site() {
            site = true;
        } else {
            match sp.class {
                SpeciesClass::Gas => gas += 1,
                SpeciesClass::Adsorbed => adsorbed += 1,
                SpeciesClass::Intermediate => radicals += 1,
            }
        }
    }

    if gas > 0 {
        if adsorbed == 0 && radicals == 0 && !site {
            return Ok(ReactionKind::Homogeneous);
        }
        // ad/desorption: one gas species against its single bound counterpart
        // plus the free site
        if gas == 1 && site && adsorbed + radicals == 1 {
            return Ok(ReactionKind::Adsorption);
        }
        return Err(format!(
            "gas species may only react through ad/desorption against `*`; \
             got {gas} gas, {adsorbed} adsorbed, {radicals} intermediates, site={site}"
        ));
    }
    match (adsorbed > 0, radicals > 0) {
        (true, false) => Ok(ReactionKind::AdsorbedPair),
        (true, true) => Ok(ReactionKind::MixedSurface),
        (false, true) => Ok(ReactionKind::IntermediatePair),
        (false, false) => Err("no non-site participants".to_string()),
    }
}

impl ReactionNetwork {
    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Number of gas-phase species (they lead the species ordering).
    pub fn n_gas(&self) -> usize {
        self.species
            .iter()
            .filter(|s| s.class == SpeciesClass::Gas)
            .count()
    }

    /// Number of bound species (coverages), including the free site.
    pub fn n_bound(&self) -> usize {
        self.n_species() - self.n_gas()
    }

    pub fn gas_indices(&self) -> core::ops::Range<usize> {
        0..self.n_gas()
    }

    pub fn bound_indices(&self) -> core::ops::Range<usize> {
        self.n_gas()..self.n_species()
    }

    pub fn free_site_index(&self) -> Option<usize> {
        self.species.iter().position(Species::is_free_site)
    }

    pub fn species_names(&self) -> Vec<&str> {
        self.species.iter().map(|s| s.name.as_str()).collect()
    }

    /// Reaction-kind letter per rate column.
    pub fn kind_letters(&self) -> Vec<char> {
        self.steps.iter().map(|s| s.kind.letter()).collect()
    }

    /// Labels like `d.1f` / `d.1r`, numbering reactions within each kind.
    pub fn step_labels(&self) -> Vec<String> {
        let mut counts: [usize; 5] = [0; 5];
        let slot = |k: ReactionKind| match k {
            ReactionKind::Homogeneous => 0,
            ReactionKind::Adsorption => 1,
            ReactionKind::AdsorbedPair => 2,
            ReactionKind::MixedSurface => 3,
            ReactionKind::IntermediatePair => 4,
        };
        let mut labels = Vec::with_capacity(self.steps.len());
        for pair in self.steps.chunks(2) {
            let k = pair[0].kind;
            counts[slot(k)] += 1;
            let n = counts[slot(k)];
            labels.push(format!("{}.{}f", k.letter(), n));
            labels.push(format!("{}.{}r", k.letter(), n));
        }
        labels
    }

    /// Canonical text form; reparsing yields an identical network.
    pub fn pretty_print(&self) -> String {
        let mut out = String::new();
        for pair in self.steps.chunks(2) {
            let fwd = &pair[0];
            let fmt_side = |side: &[(usize, u32)]| -> String {
                let terms: Vec<String> = side
                    .iter()
                    .map(|&(i, c)| {
                        let name = &self.species[i].name;
                        if c == 1 {
                            name.clone()
                        } else {
                            format!("{c}{name}")
                        }
                    })
                    .collect();
                terms.join(" + ")
            };
            out.push_str(&fmt_side(&fwd.reactants));
            out.push_str(" <-> ");
            out.push_str(&fmt_side(&fwd.products));
            out.push('\n');
        }
        out
    }

    /// Per-column conservation of surface sites: bound rows sum to zero.
    pub fn check_site_conservation(&self) -> bool {
        (0..self.n_steps()).all(|j| {
            self.bound_indices()
                .map(|i| self.stoichiometry[i][j])
                .sum::<i64>()
                == 0
        })
    }

    /// Block pattern of the composed stoichiometry: each column touches only
    /// the rows its reaction kind permits (free-site row wherever sites move).
    pub fn check_block_pattern(&self) -> bool {
        let site = self.free_site_index();
        self.steps.iter().all(|step| {
            let j = step.rate_index;
            let mut gas_rows = 0usize;
            let ok = (0..self.n_species()).all(|i| {
                if self.stoichiometry[i][j] == 0 {
                    return true;
                }
                if Some(i) == site {
                    return step.kind != ReactionKind::Homogeneous;
                }
                let class = self.species[i].class;
                if class == SpeciesClass::Gas {
                    gas_rows += 1;
                }
                match step.kind {
                    ReactionKind::Homogeneous => class == SpeciesClass::Gas,
                    // one gas row against bound counterpart rows (a, or s for
                    // direct radical adsorption)
                    ReactionKind::Adsorption => true,
                    ReactionKind::AdsorbedPair => class == SpeciesClass::Adsorbed,
                    ReactionKind::MixedSurface => {
                        class == SpeciesClass::Adsorbed || class == SpeciesClass::Intermediate
                    }
                    ReactionKind::IntermediatePair => class == SpeciesClass::Intermediate,
                }
            });
            ok && (step.kind != ReactionKind::Adsorption || gas_rows == 1)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_gas_network() {
        let net = parse_network("A + B <-> C").unwrap();
        assert_eq!(net.n_species(), 3);
        assert!(net.species.iter().all(|s| s.class == SpeciesClass::Gas));
        assert_eq!(
            net.stoichiometry,
            vec![vec![-1, 1], vec![-1, 1], vec![1, -1]]
        );
        assert_eq!(net.steps[0].kind, ReactionKind::Homogeneous);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(parse_network(""), Err(ParseError::NoReactions));
        assert_eq!(
            parse_network("# only a comment\n\n"),
            Err(ParseError::NoReactions)
        );
    }

    #[test]
    fn irreversible_arrow_rejected() {
        match parse_network("A -> B") {
            Err(ParseError::Syntax { line: 1, msg, .. }) => {
                assert!(msg.contains("irreversible"), "{msg}");
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn site_autobalance_matches_explicit_form() {
        let implicit = parse_network("A + * <-> A*\nB + * <-> B*\nA* + B* <-> C*\nC + * <-> C*");
        let explicit =
            parse_network("A + * <-> A*\nB + * <-> B*\nA* + B* <-> C* + *\nC + * <-> C*");
        assert_eq!(
            implicit.unwrap().stoichiometry,
            explicit.unwrap().stoichiometry
        );
    }

    #[test]
    fn unbalanced_sites_beyond_bimolecular() {
        let err = parse_network("2A* + 2B* <-> C*").unwrap_err();
        assert_eq!(err, ParseError::UnbalancedSites { line: 1 });
    }

    #[test]
    fn duplicate_reaction_detected() {
        let err = parse_network("A + B <-> C\nC <-> A + B").unwrap_err();
        assert_eq!(err, ParseError::DuplicateReaction { line: 2 });
    }

    #[test]
    fn bound_without_site_rejected() {
        let err = parse_network("A* + B* <-> C* + D*").unwrap_err();
        assert_eq!(err, ParseError::MissingFreeSite);
    }

    #[test]
    fn gas_with_radical_is_unclassifiable() {
        let err = parse_network("B + * <-> B*\nA + D* <-> B* + *\nB* + * <-> 2D*").unwrap_err();
        assert!(matches!(err, ParseError::Unclassifiable { line: 2, .. }));
    }

    #[test]
    fn classification_examples() {
        let g = parse_network("A + B <-> C").unwrap();
        assert_eq!(g.steps[0].kind, ReactionKind::Homogeneous);

        let da = parse_network("A + * <-> A*\nB + * <-> B*\nC + * <-> C*\nA* + B* <-> C*").unwrap();
        assert_eq!(da.steps[0].kind, ReactionKind::Adsorption);
        assert_eq!(da.steps[6].kind, ReactionKind::AdsorbedPair);

        let dc = parse_network("B + * <-> B*\nB* + * <-> 2D*").unwrap();
        assert_eq!(dc.steps[2].kind, ReactionKind::MixedSurface);

        let s = parse_network("A + * <-> A*\nA* + * <-> 2D*\nD* + D* <-> E* + *").unwrap();
        assert_eq!(s.steps[4].kind, ReactionKind::IntermediatePair);
    }

    #[test]
    fn species_ordering_gas_adsorbed_intermediate_site() {
        let net = parse_network("B + * <-> B*\nA + * <-> A*\nB* + * <-> 2D*").unwrap();
        let names = net.species_names();
        assert_eq!(names, vec!["B", "A", "B*", "A*", "D*", "*"]);
        assert_eq!(net.free_site_index(), Some(5));
        assert_eq!(net.n_gas(), 2);
        assert_eq!(net.n_bound(), 4);
    }

    #[test]
    fn reversibility_and_conservation() {
        let net = parse_network("A + * <-> A*\nB + * <-> B*\nA* + B* <-> C*").unwrap();
        let m = &net.stoichiometry;
        for j in (0..net.n_steps()).step_by(2) {
            for row in m {
                assert_eq!(row[j], -row[j + 1]);
            }
        }
        assert!(net.check_site_conservation());
        assert!(net.check_block_pattern());
    }

    #[test]
    fn whitespace_and_comments() {
        let net = parse_network("  A+B<->C   # inline comment\n").unwrap();
        assert_eq!(net.n_species(), 3);
    }

    #[test]
    fn syntax_error_reports_position() {
        match parse_network("A + $ <-> C") {
            Err(ParseError::Syntax { line, col, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(col, 5);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn pretty_print_round_trip() {
        let src = "A + * <-> A*\nB + * <-> B*\nC + * <-> C*\nA* + B* <-> C*\nB* + * <-> 2D*";
        let net = parse_network(src).unwrap();
        let reparsed = parse_network(&net.pretty_print()).unwrap();
        assert_eq!(net.stoichiometry, reparsed.stoichiometry);
        assert_eq!(net.kind_letters(), reparsed.kind_letters());
        assert_eq!(net.species_names(), reparsed.species_names());
    }

    #[test]
    fn step_labels_follow_kind_numbering() {
        let net =
            parse_network("A + * <-> A*\nB + * <-> B*\nC + * <-> C*\nA* + B* <-> C*").unwrap();
        assert_eq!(
            net.step_labels(),
            vec!["d.1f", "d.1r", "d.2f", "d.2r", "d.3f", "d.3r", "a.1f", "a.1r"]
        );
    }
}
