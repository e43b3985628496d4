use serde::{Deserialize, Serialize};

use super::element::Element;
use super::rings::{self, RingInfo};
use super::ChemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Integer order; aromatic bonds have none and must be kekulized first.
    pub fn integral(self) -> Option<u8> {
        match self {
            BondOrder::Single => Some(1),
            BondOrder::Double => Some(2),
            BondOrder::Triple => Some(3),
            BondOrder::Aromatic => None,
        }
    }

    pub fn from_integral(order: u8) -> Option<BondOrder> {
        match order {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub aromatic: bool,
    /// Total attached hydrogens (bracket count or implicit from valence).
    pub h_count: u8,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    /// One valid Kekulé order for this bond; equals `order` for non-aromatic bonds.
    pub kekule: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Heavy atom spec used to assemble a molecule from a Kekulé structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomSpec {
    pub element: Element,
    pub formal_charge: i8,
    pub h_count: u8,
}

/// Molecular graph with hydrogens folded into `h_count`, perceived rings and
/// aromaticity. Built only through [`Molecule::from_kekule`] so every
/// instance satisfies the valence and aromaticity invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    pub id: Option<String>,
    adjacency: Vec<Vec<(usize, usize)>>,
    ring_info: RingInfo,
}

impl Molecule {
    /// Assemble a molecule from explicit integer bond orders, validating
    /// valences and perceiving rings and aromaticity.
    pub fn from_kekule(atoms: &[AtomSpec], bonds: &[(usize, usize, u8)]) -> Result<Molecule, ChemError> {
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(bonds.len());
        let mut out_bonds = Vec::with_capacity(bonds.len());
        for (e, &(a, b, order)) in bonds.iter().enumerate() {
            if a == b || a >= n || b >= n {
                return Err(ChemError::InvalidBond { a, b });
            }
            if adjacency[a].iter().any(|&(nb, _)| nb == b) {
                return Err(ChemError::DuplicateBond { a, b });
            }
            let order = BondOrder::from_integral(order).ok_or(ChemError::InvalidBond { a, b })?;
            adjacency[a].push((b, e));
            adjacency[b].push((a, e));
            edges.push((a, b));
            out_bonds.push(Bond {
                a,
                b,
                order,
                kekule: order,
            });
        }

        let out_atoms: Vec<Atom> = atoms
            .iter()
            .enumerate()
            .map(|(index, s)| Atom {
                element: s.element,
                formal_charge: s.formal_charge,
                aromatic: false,
                h_count: s.h_count,
                index,
            })
            .collect();

        for atom in &out_atoms {
            let used: u32 = adjacency[atom.index]
                .iter()
                .map(|&(_, e)| out_bonds[e].kekule.integral().unwrap() as u32)
                .sum::<u32>()
                + atom.h_count as u32;
            let allowed = atom.element.valences(atom.formal_charge);
            if !allowed.iter().any(|&v| v as u32 == used) {
                return Err(ChemError::Valence {
                    atom: atom.index,
                    element: atom.element,
                    charge: atom.formal_charge,
                    valence: used,
                });
            }
        }

        let rings = rings::sssr(n, &edges, &adjacency);
        let mut mol = Molecule {
            atoms: out_atoms,
            bonds: out_bonds,
            id: None,
            adjacency,
            ring_info: RingInfo::from_rings(rings),
        };
        mol.perceive_aromaticity();
        Ok(mol)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// `(neighbor, bond index)` pairs.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(nb, _)| nb == b)
            .map(|&(_, e)| &self.bonds[e])
    }

    pub fn ring_info(&self) -> &RingInfo {
        &self.ring_info
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.ring_info.rings.iter().any(|r| r.contains(&atom))
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        let Bond { a, b, .. } = self.bonds[bond];
        self.ring_info.rings.iter().any(|r| ring_contains_edge(r, a, b))
    }

    pub fn net_charge(&self) -> i32 {
        self.atoms.iter().map(|a| a.formal_charge as i32).sum()
    }

    /// Connected component label per atom, and the number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        rings::component_labels(self.atoms.len(), &self.adjacency)
    }

    pub fn component_charges(&self) -> Vec<i32> {
        let (labels, count) = self.components();
        let mut charges = vec![0; count];
        for (atom, &label) in self.atoms.iter().zip(&labels) {
            charges[label] += atom.formal_charge as i32;
        }
        charges
    }

    pub fn total_h(&self) -> usize {
        self.atoms.iter().map(|a| a.h_count as usize).sum()
    }

    /// Sum of integer bond orders (Kekulé form) plus hydrogens.
    pub fn valence_of(&self, atom: usize) -> u32 {
        self.adjacency[atom]
            .iter()
            .map(|&(_, e)| self.bonds[e].kekule.integral().unwrap() as u32)
            .sum::<u32>()
            + self.atoms[atom].h_count as u32
    }

    pub(crate) fn atom_specs(&self) -> Vec<AtomSpec> {
        self.atoms
            .iter()
            .map(|a| AtomSpec {
                element: a.element,
                formal_charge: a.formal_charge,
                h_count: a.h_count,
            })
            .collect()
    }

    pub(crate) fn kekule_bonds(&self) -> Vec<(usize, usize, u8)> {
        self.bonds
            .iter()
            .map(|b| (b.a, b.b, b.kekule.integral().unwrap()))
            .collect()
    }

    /// Build the sub-molecule induced by `keep`; bonds to removed atoms are
    /// replaced by hydrogens on the surviving endpoint. Bonds listed in
    /// `cut` are also removed (hydrogen-capped on both sides).
    pub fn induced(&self, keep: &[bool], cut: &[usize]) -> Result<Molecule, ChemError> {
        let mut map = vec![usize::MAX; self.atoms.len()];
        let mut specs = Vec::new();
        for (i, a) in self.atoms.iter().enumerate() {
            if keep[i] {
                map[i] = specs.len();
                specs.push(AtomSpec {
                    element: a.element,
                    formal_charge: a.formal_charge,
                    h_count: a.h_count,
                });
            }
        }
        let mut bonds = Vec::new();
        for (e, b) in self.bonds.iter().enumerate() {
            let order = b.kekule.integral().unwrap();
            let (ka, kb) = (keep[b.a], keep[b.b]);
            if ka && kb && !cut.contains(&e) {
                bonds.push((map[b.a], map[b.b], order));
            } else {
                if ka {
                    specs[map[b.a]].h_count += order;
                }
                if kb {
                    specs[map[b.b]].h_count += order;
                }
            }
        }
        Molecule::from_kekule(&specs, &bonds)
    }

    /// Split into connected components, each a standalone molecule.
    pub fn split_components(&self) -> Vec<Molecule> {
        let (labels, count) = self.components();
        (0..count)
            .map(|c| {
                let keep: Vec<bool> = labels.iter().map(|&l| l == c).collect();
                self.induced(&keep, &[]).expect("component of a valid molecule is valid")
            })
            .collect()
    }

    fn perceive_aromaticity(&mut self) {
        let ring_atoms: Vec<bool> = (0..self.atoms.len()).map(|i| self.is_ring_atom(i)).collect();
        let mut aromatic_rings = Vec::new();
        for ring in &self.ring_info.rings {
            if ring.len() != 5 && ring.len() != 6 {
                continue;
            }
            let mut electrons = 0u32;
            let mut ok = true;
            for &atom in ring {
                match self.pi_electrons(atom, ring, &ring_atoms) {
                    Some(e) => electrons += e,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && electrons >= 2 && (electrons - 2) % 4 == 0 {
                aromatic_rings.push(ring.clone());
            }
        }
        for ring in &aromatic_rings {
            for i in 0..ring.len() {
                let a = ring[i];
                let b = ring[(i + 1) % ring.len()];
                self.atoms[a].aromatic = true;
                let e = self.adjacency[a].iter().find(|&&(nb, _)| nb == b).unwrap().1;
                self.bonds[e].order = BondOrder::Aromatic;
            }
        }
    }

    /// Pi electrons donated by `atom` to `ring`, or `None` when the atom
    /// cannot take part in an aromatic ring.
    fn pi_electrons(&self, atom: usize, ring: &[usize], ring_atoms: &[bool]) -> Option<u32> {
        let a = &self.atoms[atom];
        if !a.element.can_be_aromatic() {
            return None;
        }
        let mut double_partner = None;
        for &(nb, e) in &self.adjacency[atom] {
            match self.bonds[e].kekule {
                BondOrder::Triple => return None,
                BondOrder::Double => double_partner = Some(nb),
                _ => {}
            }
        }
        let connections = self.adjacency[atom].len() + a.h_count as usize;
        match double_partner {
            Some(p) if ring.contains(&p) => Some(1),
            Some(p) => {
                let partner = self.atoms[p].element;
                if matches!(partner, Element::O | Element::S | Element::N | Element::Se)
                    && !ring_atoms[p]
                    && a.element == Element::C
                {
                    Some(0)
                } else if ring_atoms[p] {
                    Some(1)
                } else {
                    None
                }
            }
            None => match (a.element, a.formal_charge, connections) {
                (Element::N, 0, 3) => Some(2),
                (Element::N, -1, 2) => Some(2),
                (Element::O, 0, 2) | (Element::S, 0, 2) | (Element::Se, 0, 2) => Some(2),
                (Element::C, -1, 3) => Some(2),
                (Element::B, 0, 3) => Some(0),
                _ => None,
            },
        }
    }
}

pub(crate) fn ring_contains_edge(ring: &[usize], a: usize, b: usize) -> bool {
    let n = ring.len();
    (0..n).any(|i| {
        let (x, y) = (ring[i], ring[(i + 1) % n]);
        (x == a && y == b) || (x == b && y == a)
    })
}
