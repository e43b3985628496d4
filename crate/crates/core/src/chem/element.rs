use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Elements the toolkit understands. The organic vocabulary of the cation
/// corpora plus a handful of counter-ion and out-of-window elements so that
/// they can be parsed and then rejected by the dataset filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    H,
    Li,
    B,
    C,
    N,
    O,
    F,
    Na,
    Si,
    P,
    S,
    Cl,
    K,
    Se,
    Br,
    I,
}

impl Element {
    pub const ALL: [Element; 16] = [
        Element::H,
        Element::Li,
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::Na,
        Element::Si,
        Element::P,
        Element::S,
        Element::Cl,
        Element::K,
        Element::Se,
        Element::Br,
        Element::I,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::Li => "Li",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::Na => "Na",
            Element::Si => "Si",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::K => "K",
            Element::Se => "Se",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::Li => 3,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::Na => 11,
            Element::Si => 14,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::K => 19,
            Element::Se => 34,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    /// IUPAC conventional standard atomic weight, g/mol.
    pub fn atomic_weight(self) -> f64 {
        match self {
            Element::H => 1.008,
            Element::Li => 6.94,
            Element::B => 10.81,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
            Element::Na => 22.990,
            Element::Si => 28.085,
            Element::P => 30.974,
            Element::S => 32.06,
            Element::Cl => 35.45,
            Element::K => 39.098,
            Element::Se => 78.971,
            Element::Br => 79.904,
            Element::I => 126.904,
        }
    }

    /// Members of the SMILES organic subset may be written without brackets.
    pub fn is_organic_subset(self) -> bool {
        matches!(
            self,
            Element::B
                | Element::C
                | Element::N
                | Element::O
                | Element::P
                | Element::S
                | Element::F
                | Element::Cl
                | Element::Br
                | Element::I
        )
    }

    /// Elements that may be written in lowercase aromatic form.
    pub fn can_be_aromatic(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S | Element::Se
        )
    }

    /// Allowed total valences (bond orders plus hydrogens) for the neutral
    /// element, lowest first.
    fn neutral_valences(self) -> &'static [u8] {
        match self {
            Element::H | Element::Li | Element::Na | Element::K => &[1],
            Element::B => &[3],
            Element::C | Element::Si => &[4],
            Element::N => &[3, 5],
            Element::O => &[2],
            Element::F => &[1],
            Element::P => &[3, 5],
            Element::S | Element::Se => &[2, 4, 6],
            Element::Cl | Element::Br | Element::I => &[1, 3, 5, 7],
        }
    }

    /// Allowed valences once the formal charge is applied. Charged atoms are
    /// treated as their isoelectronic neighbour (N+ behaves like C, S+ like P,
    /// C- like N and so on).
    pub fn valences(self, charge: i8) -> Vec<u8> {
        if charge == 0 {
            return self.neutral_valences().to_vec();
        }
        let table: &[u8] = match (self, charge) {
            (Element::C, 1) | (Element::C, -1) => &[3],
            (Element::B, -1) => &[4],
            (Element::N, 1) => &[4],
            (Element::N, -1) => &[2],
            (Element::O, 1) => &[3],
            (Element::O, -1) => &[1],
            (Element::S, 1) | (Element::Se, 1) => &[3, 5],
            (Element::S, -1) | (Element::Se, -1) => &[1, 3, 5],
            (Element::P, 1) => &[4],
            (Element::P, -1) => &[2, 4],
            (Element::Si, -1) => &[3, 5],
            (Element::I, 1) | (Element::Br, 1) | (Element::Cl, 1) => &[2, 4],
            (Element::F, -1) | (Element::Cl, -1) | (Element::Br, -1) | (Element::I, -1) => &[0],
            (Element::H, 1) | (Element::H, -1) => &[0],
            (Element::Li, 1) | (Element::Na, 1) | (Element::K, 1) => &[0],
            _ => &[],
        };
        table.to_vec()
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownElement(pub String);

impl FromStr for Element {
    type Err = UnknownElement;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Element::ALL
            .iter()
            .copied()
            .find(|e| e.symbol() == s)
            .ok_or_else(|| UnknownElement(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_round_trip() {
        for e in Element::ALL {
            assert_eq!(e.symbol().parse::<Element>().unwrap(), e);
        }
        assert!("Xx".parse::<Element>().is_err());
    }

    #[test]
    fn sulfonium_valence() {
        assert_eq!(Element::S.valences(1), vec![3, 5]);
        assert_eq!(Element::N.valences(1), vec![4]);
    }
}
