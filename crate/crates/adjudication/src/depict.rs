//! 2-D depiction: regular-polygon rings, 120° chains, a short overlap
//! relaxation, rendered as SVG.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt::Write;

use pagforge_core::chem::{BondOrder, Element, Molecule};

type P = [f64; 2];

const SCALE: f64 = 40.0;
const MARGIN: f64 = 30.0;

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: P, b: P) -> P {
    [a[0] + b[0], a[1] + b[1]]
}

fn mul(a: P, k: f64) -> P {
    [a[0] * k, a[1] * k]
}

fn norm(a: P) -> f64 {
    a[0].hypot(a[1])
}

fn polar(theta: f64, r: f64) -> P {
    [r * theta.cos(), r * theta.sin()]
}

fn angle(a: P) -> f64 {
    a[1].atan2(a[0])
}

fn wrap(mut t: f64) -> f64 {
    while t <= -PI {
        t += 2.0 * PI;
    }
    while t > PI {
        t -= 2.0 * PI;
    }
    t
}

struct Layouter<'a> {
    mol: &'a Molecule,
    rings: &'a [Vec<usize>],
    atom_rings: Vec<Vec<usize>>,
    ring_done: Vec<bool>,
    pos: Vec<Option<P>>,
    depth: Vec<usize>,
}

impl Layouter<'_> {
    fn placed(&self) -> impl Iterator<Item = (usize, P)> + '_ {
        self.pos.iter().enumerate().filter_map(|(i, p)| p.map(|p| (i, p)))
    }

    fn clearance(&self, p: P, skip: &[usize]) -> f64 {
        self.placed()
            .filter(|(i, _)| !skip.contains(i))
            .map(|(_, q)| norm(sub(p, q)))
            .fold(f64::INFINITY, f64::min)
    }

    fn place_ring(&mut self, r: usize) -> Vec<usize> {
        self.ring_done[r] = true;
        let ring = &self.rings[r];
        let n = ring.len();
        let radius = 1.0 / (2.0 * (PI / n as f64).sin());
        let step = 2.0 * PI / n as f64;
        let placed: Vec<usize> = (0..n).filter(|&k| self.pos[ring[k]].is_some()).collect();
        let mut new = Vec::new();
        if placed.is_empty() {
            let t0 = -PI / 2.0 + step / 2.0;
            for (k, &a) in ring.iter().enumerate() {
                self.pos[a] = Some(polar(t0 + k as f64 * step, radius));
                new.push(a);
            }
            return new;
        }
        let edge = placed.iter().copied().find(|&k| self.pos[ring[(k + 1) % n]].is_some());
        let (start, centre, t_start, dir) = match edge {
            Some(k) => {
                let (ia, ib) = (ring[k], ring[(k + 1) % n]);
                let (a, b) = (self.pos[ia].unwrap(), self.pos[ib].unwrap());
                let mid = mul(add(a, b), 0.5);
                let ab = sub(b, a);
                let len = norm(ab).max(1e-9);
                let normal = [-ab[1] / len, ab[0] / len];
                let apothem = radius * (PI / n as f64).cos();
                let c1 = add(mid, mul(normal, apothem));
                let c2 = sub(mid, mul(normal, apothem));
                let c = if self.clearance(c1, &[ia, ib]) >= self.clearance(c2, &[ia, ib]) { c1 } else { c2 };
                let ta = angle(sub(a, c));
                let tb = angle(sub(b, c));
                let dir = if wrap(tb - ta) > 0.0 { 1.0 } else { -1.0 };
                ((k + 1) % n, c, tb, dir)
            }
            None => {
                let k = placed[0];
                let ia = ring[k];
                let a = self.pos[ia].unwrap();
                let mut away = [0.0, 0.0];
                for &(nb, _) in self.mol.neighbors(ia) {
                    if let Some(q) = self.pos[nb] {
                        let v = sub(a, q);
                        away = add(away, mul(v, 1.0 / norm(v).max(1e-9)));
                    }
                }
                if norm(away) < 1e-9 {
                    away = [1.0, 0.0];
                }
                let away = mul(away, 1.0 / norm(away));
                let c = add(a, mul(away, radius));
                (k, c, angle(sub(a, c)), 1.0)
            }
        };
        for j in 1..n {
            let atom = ring[(start + j) % n];
            if self.pos[atom].is_none() {
                self.pos[atom] = Some(add(centre, polar(t_start + dir * j as f64 * step, radius)));
                new.push(atom);
            }
        }
        new
    }

    fn is_linear(&self, a: usize) -> bool {
        let orders: Vec<BondOrder> = self.mol.neighbors(a).iter().map(|&(_, b)| self.mol.bonds[b].kekule).collect();
        orders.contains(&BondOrder::Triple) || orders.iter().filter(|&&o| o == BondOrder::Double).count() >= 2
    }

    fn place_chain(&mut self, a: usize, b: usize) {
        let pa = self.pos[a].unwrap();
        let nbrs: Vec<P> = self
            .mol
            .neighbors(a)
            .iter()
            .filter_map(|&(nb, _)| if nb == b { None } else { self.pos[nb] })
            .collect();
        let dirs: Vec<f64> = nbrs.iter().map(|&q| angle(sub(q, pa))).collect();
        let mut candidates: Vec<f64> = Vec::new();
        match dirs.len() {
            0 => candidates.push(-PI / 6.0),
            1 if self.is_linear(a) => candidates.push(wrap(dirs[0] + PI)),
            1 => {
                let first = if self.depth[a] % 2 == 0 { 1.0 } else { -1.0 };
                candidates.push(wrap(dirs[0] + first * 2.0 * PI / 3.0));
                candidates.push(wrap(dirs[0] - first * 2.0 * PI / 3.0));
            }
            _ => {
                let out = dirs.iter().fold([0.0, 0.0], |acc, &t| sub(acc, polar(t, 1.0)));
                if norm(out) > 1e-9 {
                    candidates.push(angle(out));
                }
                candidates.extend((0..12).map(|k| wrap(k as f64 * PI / 6.0)));
            }
        }
        let score = |t: f64| {
            let sep = dirs.iter().map(|&d| wrap(t - d).abs()).fold(PI, f64::min);
            let clear = self.clearance(add(pa, polar(t, 1.0)), &[a]).min(2.0);
            ((sep * 1e3).round(), (clear * 1e3).round())
        };
        let mut best = candidates[0];
        let mut best_score = score(best);
        for &t in &candidates[1..] {
            let s = score(t);
            if s > best_score {
                best = t;
                best_score = s;
            }
        }
        self.pos[b] = Some(add(pa, polar(best, 1.0)));
        self.depth[b] = self.depth[a] + 1;
    }

    fn component(&mut self, atoms: &[usize]) {
        let mut queue = VecDeque::new();
        let first_ring = (0..self.rings.len()).find(|&r| atoms.contains(&self.rings[r][0]));
        match first_ring {
            Some(r) => queue.extend(self.place_ring(r)),
            None => {
                self.pos[atoms[0]] = Some([0.0, 0.0]);
                queue.push_back(atoms[0]);
            }
        }
        while let Some(a) = queue.pop_front() {
            for r in self.atom_rings[a].clone() {
                if !self.ring_done[r] {
                    queue.extend(self.place_ring(r));
                }
            }
            for &(b, _) in self.mol.neighbors(a) {
                if self.pos[b].is_none() {
                    self.place_chain(a, b);
                    queue.push_back(b);
                }
            }
        }
    }

    fn relax(&mut self, atoms: &[usize]) {
        let mol = self.mol;
        for _ in 0..30 {
            let mut moved = false;
            for (x, &i) in atoms.iter().enumerate() {
                for &j in &atoms[x + 1..] {
                    if mol.bond_between(i, j).is_some() {
                        continue;
                    }
                    let (ri, rj) = (!self.atom_rings[i].is_empty(), !self.atom_rings[j].is_empty());
                    if ri && rj {
                        continue;
                    }
                    let (pi, pj) = (self.pos[i].unwrap(), self.pos[j].unwrap());
                    let d = sub(pj, pi);
                    let dist = norm(d);
                    if dist >= 0.6 {
                        continue;
                    }
                    let u = if dist < 1e-9 { [1.0, 0.0] } else { mul(d, 1.0 / dist) };
                    let push = 0.6 - dist;
                    let (si, sj) = match (ri, rj) {
                        (false, false) => (0.5, 0.5),
                        (true, false) => (0.0, 1.0),
                        _ => (1.0, 0.0),
                    };
                    self.pos[i] = Some(sub(pi, mul(u, push * si)));
                    self.pos[j] = Some(add(pj, mul(u, push * sj)));
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }
}

/// Coordinates in bond-length units; components laid out left to right.
pub fn layout(mol: &Molecule) -> Vec<[f64; 2]> {
    let rings = &mol.ring_info().rings;
    let mut atom_rings = vec![Vec::new(); mol.atoms.len()];
    for (r, ring) in rings.iter().enumerate() {
        for &a in ring {
            atom_rings[a].push(r);
        }
    }
    let mut l = Layouter {
        mol,
        rings,
        atom_rings,
        ring_done: vec![false; rings.len()],
        pos: vec![None; mol.atoms.len()],
        depth: vec![0; mol.atoms.len()],
    };
    let (labels, count) = mol.components();
    let mut offset = 0.0;
    let mut out = vec![[0.0, 0.0]; mol.atoms.len()];
    for c in 0..count {
        let atoms: Vec<usize> = (0..mol.atoms.len()).filter(|&i| labels[i] == c).collect();
        if atoms.is_empty() {
            continue;
        }
        l.component(&atoms);
        l.relax(&atoms);
        let min_x = atoms.iter().map(|&i| l.pos[i].unwrap()[0]).fold(f64::INFINITY, f64::min);
        let max_x = atoms.iter().map(|&i| l.pos[i].unwrap()[0]).fold(f64::NEG_INFINITY, f64::max);
        for &i in &atoms {
            let p = l.pos[i].unwrap();
            out[i] = [p[0] - min_x + offset, p[1]];
        }
        offset += max_x - min_x + 1.5;
    }
    out
}

fn colour(e: Element) -> &'static str {
    match e {
        Element::N => "#2040d0",
        Element::O => "#d02020",
        Element::S => "#b08800",
        Element::F | Element::Cl => "#20a040",
        Element::Br => "#a02828",
        Element::I => "#7020a0",
        Element::P => "#d07000",
        _ => "#202020",
    }
}

fn label(mol: &Molecule, i: usize) -> Option<String> {
    let a = &mol.atoms[i];
    if a.element == Element::C && a.formal_charge == 0 && mol.degree(i) > 0 {
        return None;
    }
    let mut s = a.element.symbol().to_string();
    match a.h_count {
        0 => {}
        1 => s.push_str("<tspan>H</tspan>"),
        n => {
            let _ = write!(s, "<tspan>H</tspan><tspan dy=\"4\" font-size=\"10\">{n}</tspan><tspan dy=\"-4\"></tspan>");
        }
    }
    let q = a.formal_charge;
    if q != 0 {
        let sign = if q > 0 { "+" } else { "-" };
        let mag = if q.abs() > 1 { q.abs().to_string() } else { String::new() };
        let _ = write!(s, "<tspan dy=\"-7\" font-size=\"11\">{mag}{sign}</tspan>");
    }
    Some(s)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG document; identical input gives identical bytes.
pub fn depict_svg(mol: &Molecule, title: &str) -> String {
    let pos = layout(mol);
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    if !pos.is_empty() {
        min_x = pos.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        max_x = pos.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        min_y = pos.iter().map(|p| -p[1]).fold(f64::INFINITY, f64::min);
        max_y = pos.iter().map(|p| -p[1]).fold(f64::NEG_INFINITY, f64::max);
    }
    let xy = |p: P| -> P { [MARGIN + (p[0] - min_x) * SCALE, MARGIN + (-p[1] - min_y) * SCALE] };
    let width = (max_x - min_x) * SCALE + 2.0 * MARGIN;
    let height = (max_y - min_y) * SCALE + 2.0 * MARGIN;
    let labels: Vec<Option<String>> = (0..mol.atoms.len()).map(|i| label(mol, i)).collect();
    let rings = &mol.ring_info().rings;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.2}\" height=\"{height:.2}\" viewBox=\"0 0 {width:.2} {height:.2}\">"
    );
    let _ = writeln!(s, "<title>{}</title>", esc(title));
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(s, "<g stroke=\"#202020\" stroke-width=\"1.6\" stroke-linecap=\"round\">");
    let line = |s: &mut String, a: P, b: P| {
        let _ = writeln!(s, "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>", a[0], a[1], b[0], b[1]);
    };
    for bond in &mol.bonds {
        let (mut a, mut b) = (xy(pos[bond.a]), xy(pos[bond.b]));
        let d = sub(b, a);
        let len = norm(d).max(1e-9);
        let u = mul(d, 1.0 / len);
        let trim = 0.3 * SCALE;
        if labels[bond.a].is_some() {
            a = add(a, mul(u, trim.min(len / 3.0)));
        }
        if labels[bond.b].is_some() {
            b = sub(b, mul(u, trim.min(len / 3.0)));
        }
        let nrm = [-u[1], u[0]];
        match bond.kekule {
            BondOrder::Double => {
                let ring_centre = rings
                    .iter()
                    .find(|r| r.contains(&bond.a) && r.contains(&bond.b))
                    .map(|r| mul(r.iter().fold([0.0, 0.0], |acc, &i| add(acc, xy(pos[i]))), 1.0 / r.len() as f64));
                match ring_centre {
                    Some(c) => {
                        let side = if (c[0] - a[0]) * nrm[0] + (c[1] - a[1]) * nrm[1] > 0.0 { 1.0 } else { -1.0 };
                        let off = mul(nrm, side * 0.15 * SCALE);
                        line(&mut s, a, b);
                        line(&mut s, add(add(a, off), mul(u, 0.12 * len)), sub(add(b, off), mul(u, 0.12 * len)));
                    }
                    None => {
                        let off = mul(nrm, 0.07 * SCALE);
                        line(&mut s, add(a, off), add(b, off));
                        line(&mut s, sub(a, off), sub(b, off));
                    }
                }
            }
            BondOrder::Triple => {
                let off = mul(nrm, 0.12 * SCALE);
                line(&mut s, a, b);
                line(&mut s, add(a, off), add(b, off));
                line(&mut s, sub(a, off), sub(b, off));
            }
            _ => line(&mut s, a, b),
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "<g font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\" dominant-baseline=\"central\">");
    for (i, l) in labels.iter().enumerate() {
        if let Some(l) = l {
            let p = xy(pos[i]);
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{}\">{l}</text>",
                p[0],
                p[1],
                colour(mol.atoms[i].element)
            );
        }
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}
