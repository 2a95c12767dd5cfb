//! Lazily grown pieces of the model spaces. Vertices are created on demand and
//! numbered in creation order; every vertex has `deg` rotation slots.
//!
//! Tilings live in the hyperboloid model: each vertex carries an SO(2,1) frame
//! whose slot k points in direction 2πk/q, and slot 0 of a non-root vertex
//! points back to the vertex it was created from. Positions are deduplicated on
//! Gans coordinates (x₁,x₂), whose Euclidean distance dominates the hyperbolic
//! one, so a 0.1 tolerance separates distinct vertices by a wide margin.

use super::surface::{free_reduce, letter_of_slot, slot_of_letter, Dehn};
use super::SpaceKind;
use crate::error::{Error, Result};
use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

type M3 = [[f64; 3]; 3];

fn mul(a: &M3, b: &M3) -> M3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn rot(t: f64) -> M3 {
    let (s, c) = t.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

fn boost(l: f64) -> M3 {
    let (ch, sh) = (l.cosh(), l.sinh());
    [[ch, sh, 0.0], [sh, ch, 0.0], [0.0, 0.0, 1.0]]
}

/// Inverse in SO(2,1): J Mᵀ J.
fn inv(m: &M3) -> M3 {
    let j = [1.0, -1.0, -1.0];
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            r[i][k] = j[i] * m[k][i] * j[k];
        }
    }
    r
}

fn pos(m: &M3) -> (f64, f64) {
    (m[1][0], m[2][0])
}

const CELL: f64 = 0.25;
const TOL: f64 = 0.1;

fn cell(x: f64, y: f64) -> (i64, i64) {
    ((x / CELL).floor() as i64, (y / CELL).floor() as i64)
}

enum Backend {
    Tiling { q: usize, step: Vec<M3>, frames: Vec<M3>, grid: HashMap<(i64, i64), Vec<u32>> },
    Tree { letters: bool },
    Grid { coords: Vec<(i64, i64)>, ids: HashMap<(i64, i64), u32> },
    Surface { genus: u32, dehn: Dehn, words: Vec<Vec<i32>>, buckets: HashMap<Vec<i32>, Vec<u32>> },
}

pub struct Region {
    pub kind: SpaceKind,
    pub deg: usize,
    pub(crate) slots: Vec<Vec<Option<u32>>>,
    backend: Backend,
}

const GRID_DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

impl Region {
    /// A region holding only the origin (vertex 0).
    pub fn new(kind: SpaceKind) -> Result<Region> {
        let (deg, backend) = match kind {
            SpaceKind::Tiling { p, q } => {
                if p < 3 || q < 3 || (p - 2) * (q - 2) <= 4 {
                    return Err(Error::Unsupported(format!("{{{p},{q}}} is not a hyperbolic tiling")));
                }
                let ch = (PI / p as f64).cos() / (PI / q as f64).sin();
                let l = 2.0 * ch.acosh();
                let step = (0..q).map(|k| mul(&mul(&rot(2.0 * PI * k as f64 / q as f64), &boost(l)), &rot(PI))).collect();
                let mut grid = HashMap::new();
                grid.insert(cell(0.0, 0.0), vec![0]);
                let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
                (q as usize, Backend::Tiling { q: q as usize, step, frames: vec![id], grid })
            }
            SpaceKind::Tree { valence } => {
                if valence < 2 {
                    return Err(Error::Unsupported("tree valence must be at least 2".into()));
                }
                (valence as usize, Backend::Tree { letters: false })
            }
            SpaceKind::Free { rank } => {
                if rank < 1 {
                    return Err(Error::Unsupported("free group rank must be positive".into()));
                }
                (2 * rank as usize, Backend::Tree { letters: true })
            }
            SpaceKind::Grid => {
                let mut ids = HashMap::new();
                ids.insert((0, 0), 0);
                (4, Backend::Grid { coords: vec![(0, 0)], ids })
            }
            SpaceKind::Surface { genus } => {
                if genus < 2 {
                    return Err(Error::Unsupported(format!("surface group of genus {genus}: only genus ≥ 2 uses Dehn's algorithm")));
                }
                let mut buckets = HashMap::new();
                buckets.insert(vec![0; 2 * genus as usize], vec![0]);
                (4 * genus as usize, Backend::Surface { genus, dehn: Dehn::new(genus), words: vec![vec![]], buckets })
            }
        };
        Ok(Region { kind, deg, slots: vec![vec![None; deg]], backend })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Neighbor of `v` in direction `k`; with `create = false` only vertices
    /// already present are returned.
    pub fn neighbor(&mut self, v: u32, k: usize, create: bool) -> Option<u32> {
        if let Some(w) = self.slots[v as usize][k] {
            return Some(w);
        }
        let deg = self.deg;
        let next = self.slots.len() as u32;
        // (neighbor, its slot back to v, freshly created)
        let res: Option<(u32, usize, bool)> = match &mut self.backend {
            Backend::Tiling { q, step, frames, grid } => {
                let nf = mul(&frames[v as usize], &step[k]);
                let (x, y) = pos(&nf);
                let (cx, cy) = cell(x, y);
                let mut found = None;
                'search: for dx in -1..=1 {
                    for dy in -1..=1 {
                        if let Some(list) = grid.get(&(cx + dx, cy + dy)) {
                            for &id in list {
                                let (u, w) = pos(&frames[id as usize]);
                                if (u - x).hypot(w - y) < TOL {
                                    found = Some(id);
                                    break 'search;
                                }
                            }
                        }
                    }
                }
                match found {
                    Some(w) => {
                        let rel = mul(&inv(&frames[w as usize]), &frames[v as usize]);
                        let (rx, ry) = pos(&rel);
                        let a = ry.atan2(rx).rem_euclid(2.0 * PI);
                        Some((w, ((a / (2.0 * PI / *q as f64)).round() as usize) % *q, false))
                    }
                    None if create => {
                        frames.push(nf);
                        grid.entry((cx, cy)).or_default().push(next);
                        Some((next, 0, true))
                    }
                    None => None,
                }
            }
            Backend::Tree { letters } => create.then(|| (next, if *letters { (k + deg / 2) % deg } else { 0 }, true)),
            Backend::Grid { coords, ids } => {
                let (x, y) = coords[v as usize];
                let c = (x + GRID_DIRS[k].0, y + GRID_DIRS[k].1);
                match ids.get(&c) {
                    Some(&w) => Some((w, (k + 2) % 4, false)),
                    None if create => {
                        coords.push(c);
                        ids.insert(c, next);
                        Some((next, (k + 2) % 4, true))
                    }
                    None => None,
                }
            }
            Backend::Surface { genus, dehn, words, buckets } => {
                let g = *genus;
                let x = letter_of_slot(g, k);
                let mut cand = words[v as usize].clone();
                cand.push(x);
                free_reduce(&mut cand);
                let mut key = vec![0i32; 2 * g as usize];
                for &l in &cand {
                    key[l.unsigned_abs() as usize - 1] += l.signum();
                }
                let back = slot_of_letter(g, -x);
                match buckets.get(&key).and_then(|b| b.iter().copied().find(|&e| dehn.equal(&cand, &words[e as usize]))) {
                    Some(w) => Some((w, back, false)),
                    None if create => {
                        words.push(cand);
                        buckets.entry(key).or_default().push(next);
                        Some((next, back, true))
                    }
                    None => None,
                }
            }
        };
        let (w, back, fresh) = res?;
        if fresh {
            self.slots.push(vec![None; deg]);
        }
        self.slots[v as usize][k] = Some(w);
        self.slots[w as usize][back] = Some(v);
        Some(w)
    }

    /// Grows N_r(core) and returns its vertices in BFS order with distances.
    pub fn grow(&mut self, core: &[u32], r: u32) -> Vec<(u32, u32)> {
        let mut dist: HashMap<u32, u32> = HashMap::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        for &c in core {
            if dist.insert(c, 0).is_none() {
                order.push((c, 0));
                queue.push_back(c);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            if du == r {
                continue;
            }
            for k in 0..self.deg {
                let w = self.neighbor(u, k, true).expect("created");
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                    e.insert(du + 1);
                    order.push((w, du + 1));
                    queue.push_back(w);
                }
            }
        }
        order
    }

    /// Materializes the induced graph on `vertices`, linking every pair of
    /// present neighbors. Patch ids follow the order of `vertices`.
    pub fn patch(&mut self, vertices: &[u32], core: &[u32]) -> super::ModelPatch {
        let mut index: HashMap<u32, u32> = HashMap::new();
        for (i, &v) in vertices.iter().enumerate() {
            index.insert(v, i as u32);
        }
        let mut slots = Vec::with_capacity(vertices.len());
        for &v in vertices {
            let row: Vec<Option<u32>> = (0..self.deg).map(|k| self.neighbor(v, k, false).and_then(|w| index.get(&w).copied())).collect();
            slots.push(row);
        }
        let core = core.iter().map(|c| index[c]).collect();
        super::ModelPatch::from_slots(self.kind, slots, core, vertices.to_vec())
    }
}
