//! SMILES reader. Supports the organic subset, bracket atoms with hydrogen
//! count and charge, branches, ring closures (including `%nn`), explicit bond
//! orders, dot-disconnected components and lowercase aromatic atoms.
//! Stereo marks (`@`, `/`, `\`) are accepted and discarded.

use std::collections::BTreeMap;

use super::element::Element;
use super::graph::{AtomSpec, Molecule};
use super::kekule;
use super::ChemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RawBond {
    Implicit,
    Single,
    Double,
    Triple,
    Aromatic,
}

#[derive(Debug, Clone)]
struct RawAtom {
    element: Element,
    aromatic: bool,
    bracket: bool,
    h: u8,
    charge: i8,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<RawAtom>,
    bonds: Vec<(usize, usize, RawBond)>,
}

pub fn parse_smiles(text: &str) -> Result<Molecule, ChemError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ChemError::Empty);
    }
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
    };
    p.parse()?;
    build(p.atoms, p.bonds)
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn parse(&mut self) -> Result<(), ChemError> {
        let mut prev: Option<usize> = None;
        let mut pending: Option<(RawBond, usize)> = None;
        let mut branches: Vec<usize> = Vec::new();
        let mut open_rings: BTreeMap<u32, (usize, RawBond, usize)> = BTreeMap::new();

        while let Some(c) = self.peek() {
            let at = self.pos;
            match c {
                b'(' => {
                    let p = prev.ok_or(ChemError::Syntax { pos: at, msg: "branch without atom" })?;
                    if pending.is_some() {
                        return Err(ChemError::Syntax { pos: at, msg: "bond before branch" });
                    }
                    branches.push(p);
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return Err(ChemError::Syntax { pos: at, msg: "dangling bond" });
                    }
                    prev = Some(branches.pop().ok_or(ChemError::UnmatchedParen { pos: at })?);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if pending.is_some() || prev.is_none() {
                        return Err(ChemError::Syntax { pos: at, msg: "misplaced bond symbol" });
                    }
                    let bond = match c {
                        b'=' => RawBond::Double,
                        b'#' => RawBond::Triple,
                        b':' => RawBond::Aromatic,
                        _ => RawBond::Single,
                    };
                    pending = Some((bond, at));
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() || prev.is_none() {
                        return Err(ChemError::Syntax { pos: at, msg: "misplaced dot" });
                    }
                    if !branches.is_empty() {
                        return Err(ChemError::Syntax { pos: at, msg: "dot inside branch" });
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let p = prev.ok_or(ChemError::Syntax { pos: at, msg: "ring closure without atom" })?;
                    let number = self.ring_number()?;
                    let bond = pending.take().map(|(b, _)| b).unwrap_or(RawBond::Implicit);
                    match open_rings.remove(&number) {
                        Some((other, open_bond, _)) => {
                            let bond = match (open_bond, bond) {
                                (RawBond::Implicit, b) | (b, RawBond::Implicit) => b,
                                (x, y) if x == y => x,
                                _ => return Err(ChemError::Syntax { pos: at, msg: "conflicting ring bond orders" }),
                            };
                            if other == p {
                                return Err(ChemError::Syntax { pos: at, msg: "ring closure to itself" });
                            }
                            self.add_bond(other, p, bond, at)?;
                        }
                        None => {
                            open_rings.insert(number, (p, bond, at));
                        }
                    }
                }
                _ => {
                    let atom = self.atom()?;
                    let idx = self.atoms.len();
                    self.atoms.push(atom);
                    if let Some(p) = prev {
                        let bond = pending.take().map(|(b, _)| b).unwrap_or(RawBond::Implicit);
                        self.add_bond(p, idx, bond, at)?;
                    }
                    prev = Some(idx);
                }
            }
        }
        if let Some((_, pos)) = pending {
            return Err(ChemError::Syntax { pos, msg: "dangling bond" });
        }
        if !branches.is_empty() {
            return Err(ChemError::UnmatchedParen { pos: self.text.len() });
        }
        if let Some((&number, &(_, _, pos))) = open_rings.iter().next() {
            return Err(ChemError::UnclosedRing { number, pos });
        }
        Ok(())
    }

    fn add_bond(&mut self, a: usize, b: usize, bond: RawBond, pos: usize) -> Result<(), ChemError> {
        if self
            .bonds
            .iter()
            .any(|&(x, y, _)| (x == a && y == b) || (x == b && y == a))
        {
            return Err(ChemError::Syntax { pos, msg: "duplicate bond" });
        }
        self.bonds.push((a, b, bond));
        Ok(())
    }

    fn ring_number(&mut self) -> Result<u32, ChemError> {
        let at = self.pos;
        if self.peek() == Some(b'%') {
            let digits = self.text.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as u32)
                }
                _ => Err(ChemError::Syntax { pos: at, msg: "malformed %nn ring closure" }),
            }
        } else {
            let d = self.text[self.pos] - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn atom(&mut self) -> Result<RawAtom, ChemError> {
        let at = self.pos;
        let c = self.text[self.pos];
        if c == b'[' {
            return self.bracket_atom();
        }
        let two = self.text.get(self.pos..self.pos + 2);
        let (symbol, aromatic, len) = match (c, two) {
            (_, Some(b"Cl")) => ("Cl", false, 2),
            (_, Some(b"Br")) => ("Br", false, 2),
            (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', _) => {
                (std::str::from_utf8(&self.text[at..at + 1]).unwrap(), false, 1)
            }
            (b'b' | b'c' | b'n' | b'o' | b'p' | b's', _) => {
                (std::str::from_utf8(&self.text[at..at + 1]).unwrap(), true, 1)
            }
            _ if c.is_ascii_alphabetic() => {
                return Err(ChemError::UnknownElement {
                    symbol: (c as char).to_string(),
                    pos: at,
                })
            }
            _ => return Err(ChemError::Syntax { pos: at, msg: "unexpected character" }),
        };
        self.pos += len;
        let element = if aromatic {
            element_from(&symbol.to_ascii_uppercase(), at)?
        } else {
            element_from(symbol, at)?
        };
        Ok(RawAtom {
            element,
            aromatic,
            bracket: false,
            h: 0,
            charge: 0,
        })
    }

    fn bracket_atom(&mut self) -> Result<RawAtom, ChemError> {
        let open = self.pos;
        let close = self.text[open..]
            .iter()
            .position(|&c| c == b']')
            .map(|i| open + i)
            .ok_or(ChemError::UnmatchedBracket { pos: open })?;
        if self.text[open + 1..close].contains(&b'[') {
            return Err(ChemError::UnmatchedBracket { pos: open });
        }
        let body = &self.text[open + 1..close];
        self.pos = close + 1;
        let mut i = 0;
        if body.first().is_some_and(u8::is_ascii_digit) {
            return Err(ChemError::Unsupported { pos: open, what: "isotopes" });
        }
        // element symbol
        let (symbol, aromatic) = {
            let rest = &body[i..];
            let lower2 = [b"se".as_slice(), b"as".as_slice()];
            if rest.len() >= 2 && lower2.contains(&&rest[..2]) {
                i += 2;
                (std::str::from_utf8(&rest[..2]).unwrap().to_string(), true)
            } else if rest.first().is_some_and(u8::is_ascii_lowercase) {
                i += 1;
                (std::str::from_utf8(&rest[..1]).unwrap().to_string(), true)
            } else if rest.first().is_some_and(u8::is_ascii_uppercase) {
                let mut len = 1;
                if rest.len() > 1 && rest[1].is_ascii_lowercase() {
                    let candidate = std::str::from_utf8(&rest[..2]).unwrap();
                    if candidate.parse::<Element>().is_ok() {
                        len = 2;
                    }
                }
                i += len;
                (std::str::from_utf8(&rest[..len]).unwrap().to_string(), false)
            } else {
                return Err(ChemError::Syntax { pos: open, msg: "bracket atom without element" });
            }
        };
        let element_symbol = if aromatic {
            let mut s = symbol.clone();
            s[..1].make_ascii_uppercase();
            s
        } else {
            symbol.clone()
        };
        let element = element_from(&element_symbol, open)?;
        if aromatic && !element.can_be_aromatic() {
            return Err(ChemError::UnknownElement { symbol, pos: open });
        }
        while i < body.len() && body[i] == b'@' {
            i += 1;
        }
        let mut h = 0u8;
        if i < body.len() && body[i] == b'H' {
            i += 1;
            h = 1;
            if i < body.len() && body[i].is_ascii_digit() {
                h = body[i] - b'0';
                i += 1;
            }
        }
        let mut charge = 0i8;
        if i < body.len() && (body[i] == b'+' || body[i] == b'-') {
            let sign: i8 = if body[i] == b'+' { 1 } else { -1 };
            let sym = body[i];
            i += 1;
            if i < body.len() && body[i].is_ascii_digit() {
                charge = sign * (body[i] - b'0') as i8;
                i += 1;
            } else {
                charge = sign;
                while i < body.len() && body[i] == sym {
                    charge += sign;
                    i += 1;
                }
            }
        }
        if i < body.len() && body[i] == b':' {
            i += 1;
            while i < body.len() && body[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i != body.len() {
            return Err(ChemError::Syntax { pos: open + 1 + i, msg: "unexpected character in bracket atom" });
        }
        Ok(RawAtom {
            element,
            aromatic,
            bracket: true,
            h,
            charge,
        })
    }
}

fn element_from(symbol: &str, pos: usize) -> Result<Element, ChemError> {
    symbol.parse::<Element>().map_err(|_| ChemError::UnknownElement {
        symbol: symbol.to_string(),
        pos,
    })
}

/// Hydrogens and pi-bond demand a parser assigns to an atom; shared with the
/// writer so that it can tell when a bare organic-subset atom suffices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct AtomDemand {
    pub implicit_h: u8,
    pub needs_double: bool,
}

/// `used` counts non-aromatic bond orders, one per aromatic bond, and
/// bracket hydrogens.
pub(crate) fn atom_demand(
    element: Element,
    charge: i8,
    aromatic: bool,
    bracket: bool,
    used: u32,
) -> Option<AtomDemand> {
    let allowed = element.valences(charge);
    let target = allowed.iter().map(|&v| v as u32).find(|&v| v >= used);
    match (aromatic, bracket) {
        (false, true) => Some(AtomDemand {
            implicit_h: 0,
            needs_double: false,
        }),
        (false, false) => {
            let target = target?;
            Some(AtomDemand {
                implicit_h: (target - used) as u8,
                needs_double: false,
            })
        }
        (true, _) => {
            let target = target?;
            let spare = target - used;
            let needs_double = spare >= 1;
            let implicit_h = if bracket { 0 } else { spare.saturating_sub(1) as u8 };
            Some(AtomDemand {
                implicit_h,
                needs_double,
            })
        }
    }
}

fn build(atoms: Vec<RawAtom>, bonds: Vec<(usize, usize, RawBond)>) -> Result<Molecule, ChemError> {
    let n = atoms.len();
    let bonds: Vec<(usize, usize, RawBond)> = bonds
        .into_iter()
        .map(|(a, b, kind)| {
            let kind = match kind {
                RawBond::Implicit if atoms[a].aromatic && atoms[b].aromatic => RawBond::Aromatic,
                RawBond::Implicit => RawBond::Single,
                k => k,
            };
            (a, b, kind)
        })
        .collect();

    for &(a, b, kind) in &bonds {
        if kind == RawBond::Aromatic && !(atoms[a].aromatic && atoms[b].aromatic) {
            return Err(ChemError::AromaticBondOutsideRing { a, b });
        }
    }

    // Explicit [H] atoms hanging off a heavy atom are folded into its count.
    let mut foldable = vec![false; n];
    for (i, atom) in atoms.iter().enumerate() {
        if atom.element == Element::H && atom.charge == 0 && atom.h == 0 {
            let incident: Vec<_> = bonds.iter().filter(|&&(a, b, _)| a == i || b == i).collect();
            if incident.len() == 1 {
                let &&(a, b, kind) = incident.first().unwrap();
                let other = if a == i { b } else { a };
                if atoms[other].element != Element::H && kind == RawBond::Single {
                    foldable[i] = true;
                }
            }
        }
    }

    let mut used = vec![0u32; n];
    let mut folded_h = vec![0u8; n];
    for &(a, b, kind) in &bonds {
        let order = match kind {
            RawBond::Double => 2,
            RawBond::Triple => 3,
            _ => 1,
        };
        used[a] += order;
        used[b] += order;
        if foldable[a] {
            folded_h[b] += 1;
        }
        if foldable[b] {
            folded_h[a] += 1;
        }
    }

    let mut need = vec![false; n];
    let mut h_total = vec![0u8; n];
    for (i, atom) in atoms.iter().enumerate() {
        if foldable[i] {
            continue;
        }
        let demand = atom_demand(atom.element, atom.charge, atom.aromatic, atom.bracket, used[i] + atom.h as u32)
            .ok_or(ChemError::Valence {
                atom: i,
                element: atom.element,
                charge: atom.charge,
                valence: used[i] + atom.h as u32,
            })?;
        need[i] = demand.needs_double;
        // folded hydrogens were counted in `used` as bonds; they stay hydrogens
        h_total[i] = atom.h + demand.implicit_h + folded_h[i];
    }

    let aromatic_edges: Vec<(usize, usize)> = bonds
        .iter()
        .filter(|b| b.2 == RawBond::Aromatic)
        .map(|&(a, b, _)| (a, b))
        .collect();
    let doubles = kekule::assign_double_bonds(n, &need, &aromatic_edges).ok_or(ChemError::NotKekulizable)?;
    let mut matched = vec![false; n];
    let mut aromatic_iter = doubles.iter();

    let mut map = vec![usize::MAX; n];
    let mut specs = Vec::new();
    for (i, atom) in atoms.iter().enumerate() {
        if !foldable[i] {
            map[i] = specs.len();
            specs.push(AtomSpec {
                element: atom.element,
                formal_charge: atom.charge,
                h_count: h_total[i],
            });
        }
    }
    let mut out = Vec::new();
    for &(a, b, kind) in &bonds {
        let order = match kind {
            RawBond::Aromatic => {
                if *aromatic_iter.next().unwrap() {
                    matched[a] = true;
                    matched[b] = true;
                    2
                } else {
                    1
                }
            }
            RawBond::Double => 2,
            RawBond::Triple => 3,
            _ => 1,
        };
        if foldable[a] || foldable[b] {
            continue;
        }
        out.push((map[a], map[b], order));
    }
    if (0..n).any(|i| need[i] && !matched[i]) {
        return Err(ChemError::NotKekulizable);
    }
    Molecule::from_kekule(&specs, &out)
}
