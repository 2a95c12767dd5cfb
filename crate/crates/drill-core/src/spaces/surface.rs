//! Cayley balls of closed orientable surface groups of genus g ≥ 2, using
//! Dehn's algorithm (the standard presentation is C'(1/6)) for equality tests.

/// Letters are 1..=2g for a₁,b₁,…,a_g,b_g and their negatives for inverses.
pub(crate) fn relator(genus: u32) -> Vec<i32> {
    let mut r = Vec::new();
    for i in 0..genus as i32 {
        let (a, b) = (2 * i + 1, 2 * i + 2);
        r.extend([a, b, -a, -b]);
    }
    r
}

pub(crate) fn free_reduce(w: &mut Vec<i32>) {
    let mut out: Vec<i32> = Vec::with_capacity(w.len());
    for &x in w.iter() {
        if out.last() == Some(&-x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    *w = out;
}

pub struct Dehn {
    cyclic: Vec<Vec<i32>>,
    len: usize,
}

impl Dehn {
    pub fn new(genus: u32) -> Dehn {
        let r = relator(genus);
        let inv: Vec<i32> = r.iter().rev().map(|x| -x).collect();
        let n = r.len();
        let mut cyclic = Vec::new();
        for base in [&r, &inv] {
            for s in 0..n {
                cyclic.push((0..n).map(|i| base[(s + i) % n]).collect());
            }
        }
        Dehn { cyclic, len: n }
    }

    /// Dehn reduction; the result is empty iff the word is trivial.
    pub fn reduce(&self, word: &[i32]) -> Vec<i32> {
        let mut w = word.to_vec();
        free_reduce(&mut w);
        'outer: loop {
            for i in 0..w.len() {
                for c in &self.cyclic {
                    let k = w[i..].iter().zip(c.iter()).take_while(|(a, b)| a == b).count();
                    if 2 * k > self.len {
                        let replacement: Vec<i32> = c[k..].iter().rev().map(|x| -x).collect();
                        w.splice(i..i + k, replacement);
                        free_reduce(&mut w);
                        continue 'outer;
                    }
                }
            }
            return w;
        }
    }

    pub fn equal(&self, u: &[i32], v: &[i32]) -> bool {
        let mut w = u.to_vec();
        w.extend(v.iter().rev().map(|x| -x));
        self.reduce(&w).is_empty()
    }
}

/// Slot order: a₁,b₁,…,a_g,b_g, then their inverses in the same order.
pub(crate) fn letter_of_slot(genus: u32, s: usize) -> i32 {
    let k = 2 * genus as usize;
    if s < k {
        s as i32 + 1
    } else {
        -((s - k) as i32 + 1)
    }
}

pub(crate) fn slot_of_letter(genus: u32, x: i32) -> usize {
    let k = 2 * genus as usize;
    if x > 0 {
        x as usize - 1
    } else {
        k + (-x) as usize - 1
    }
}
