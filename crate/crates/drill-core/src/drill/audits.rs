//! Audits of an unwrapped space against its quotient: ball isometry, the
//! R/3 promotion, local models and the very translating condition.

use super::unwrap::UnwrappedSpace;
use crate::error::Result;
use crate::graph::{pointed_isomorphic, Graph, PointedBall};
use crate::hyperbolicity::Q;
use crate::report::{Report, Verdict};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Vertices whose degree is below that of some other lift of the same
/// (base vertex, depth) class: they miss edges cut off by the truncation.
pub fn deficient(u: &UnwrappedSpace) -> Vec<bool> {
    let g = u.graph();
    let key = |v: u32| (u.base_of(v), u.depth(v));
    let mut top: HashMap<(u32, u32), usize> = HashMap::new();
    for v in 0..g.n() as u32 {
        let e = top.entry(key(v)).or_default();
        *e = (*e).max(g.degree(v));
    }
    (0..g.n() as u32).map(|v| g.degree(v) < top[&key(v)]).collect()
}

/// Distance from each vertex to the nearest deficient vertex (`u32::MAX` if none).
pub fn clearance(u: &UnwrappedSpace) -> Vec<u32> {
    clearance_from(u.graph(), &deficient(u))
}

/// Distance to the nearest flagged vertex (`u32::MAX` if none).
pub fn clearance_from(g: &Graph, def: &[bool]) -> Vec<u32> {
    let seeds: Vec<u32> = def.iter().enumerate().filter(|(_, &d)| d).map(|(v, _)| v as u32).collect();
    let mut out = Vec::new();
    if seeds.is_empty() {
        out = vec![u32::MAX; g.n()];
    } else {
        g.bfs_into(&seeds, &mut out);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "failure", rename_all = "kebab-case")]
pub enum BallFailure {
    /// Two ball points with the same image; `image_loop` is q of a geodesic
    /// between them, a closed walk in the quotient.
    Collision { a: u32, b: u32, image: u32, image_loop: Vec<u32> },
    Distance { a: u32, b: u32, upstairs: u32, downstairs: u32 },
    NotOnto { missing: u32 },
    NotLocallyBijective { v: u32 },
}

fn ball_map(g: &Graph, c: u32, r: u32) -> HashMap<u32, u32> {
    g.ball_order(c, r).into_iter().collect()
}

fn collision(u: &UnwrappedSpace, ball: &[u32]) -> Option<BallFailure> {
    let mut seen: HashMap<u32, u32> = HashMap::new();
    for &a in ball {
        let x = u.q[a as usize];
        if let Some(&b) = seen.get(&x) {
            let walk = u.graph().geodesic(b, a).ok()?;
            let mut image_loop: Vec<u32> = walk.iter().map(|&v| u.q[v as usize]).collect();
            image_loop.dedup();
            return Some(BallFailure::Collision { a: b, b: a, image: x, image_loop });
        }
        seen.insert(x, a);
    }
    None
}

/// q is injective on B(z,r), preserves distances between its points and maps
/// it onto B(q z, r).
pub fn isometry_on_ball(u: &UnwrappedSpace, z: u32, r: u32) -> Option<BallFailure> {
    let g = u.graph();
    let t = &u.cusp.graph;
    let ball: Vec<u32> = g.ball_order(z, r).into_iter().map(|(v, _)| v).collect();
    if let Some(f) = collision(u, &ball) {
        return Some(f);
    }
    let images: std::collections::HashSet<u32> = ball.iter().map(|&v| u.q[v as usize]).collect();
    if let Some((missing, _)) = t.ball_order(u.q[z as usize], r).into_iter().find(|(x, _)| !images.contains(x)) {
        return Some(BallFailure::NotOnto { missing });
    }
    for &a in &ball {
        let up = ball_map(g, a, 2 * r);
        let down = ball_map(t, u.q[a as usize], 2 * r);
        for &b in &ball {
            let (du, dd) = (up[&b], down[&u.q[b as usize]]);
            if du != dd {
                return Some(BallFailure::Distance { a, b, upstairs: du, downstairs: dd });
            }
        }
    }
    None
}

fn locally_bijective(u: &UnwrappedSpace, v: u32) -> bool {
    let mut imgs: Vec<u32> = u.graph().neighbors(v).iter().map(|&w| u.q[w as usize]).collect();
    imgs.sort_unstable();
    imgs.as_slice() == u.cusp.graph.neighbors(u.q[v as usize])
}

/// min d(x, deck x) over fiber-0 lifts of the shell: in the lifted shell's
/// own metric and in the unwrapped space at each depth.
pub fn systoles(u: &UnwrappedSpace) -> (Option<u32>, Vec<Option<u32>>) {
    let (line, _) = u.cover.graph.induced(&u.lifted_shell);
    let zero: Vec<u32> = (0..u.lifted_shell.len() as u32).filter(|&i| u.cover.fiber[u.lifted_shell[i as usize] as usize] == 0).collect();
    let mut field = Vec::new();
    let mut shell = None::<u32>;
    for &i in &zero {
        let Some(t) = u.cover.deck(u.lifted_shell[i as usize]) else { continue };
        let j = u.lifted_shell.binary_search(&t).expect("deck preserves the shell");
        line.bfs_into(&[i], &mut field);
        if field[j] != u32::MAX {
            shell = Some(shell.map_or(field[j], |s| s.min(field[j])));
        }
    }
    let by_depth = (0..=u.params.depth_max)
        .map(|n| {
            zero.iter()
                .filter_map(|&i| {
                    let v = u.glued.id(i, n);
                    let t = u.deck(v)?;
                    let mut f = Vec::new();
                    u.graph().bfs_into(&[v], &mut f);
                    (f[t as usize] != u32::MAX).then_some(f[t as usize])
                })
                .min()
        })
        .collect();
    (shell, by_depth)
}

fn sample_sorted(pool: &[u32], k: usize, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s: Vec<u32> = pool.choose_multiple(&mut rng, k).copied().collect();
    s.sort_unstable();
    s
}

/// Samples centers z at depth ≤ 3σ whose 6σ-neighbourhood is untouched by
/// the truncation, and checks that q is an isometry of B(z,3σ) onto
/// B(q z,3σ). Records the measured shell systole and deck translations.
pub fn ball_isometry_audit(u: &UnwrappedSpace, sigma: u32, samples: usize, seed: u64) -> Report {
    let r = 3 * sigma;
    let clear = clearance(u);
    let pool: Vec<u32> = (0..u.n() as u32).filter(|&v| u.depth(v) <= r && clear[v as usize] > 2 * r).collect();
    let (shell_systole, translation) = systoles(u);
    let mut report = Report::new("ball-isometry", Verdict::Inconclusive)
        .with("sigma", sigma)
        .with("radius", r)
        .with("eligible_centers", pool.len())
        .with("shell_systole", shell_systole)
        .with("deck_translation_by_depth", &translation)
        .with("params", u.params);
    if pool.is_empty() {
        return report.note("no center has a 6σ-neighbourhood clear of the truncation; widen the window");
    }
    let centers = sample_sorted(&pool, samples, seed);
    let results: Vec<(u32, Option<BallFailure>)> = centers.par_iter().map(|&z| (z, isometry_on_ball(u, z, r))).collect();
    report.set("centers", centers.len());
    match results.into_iter().find(|(_, f)| f.is_some()) {
        Some((z, Some(f))) => {
            report.verdict = Verdict::Fail;
            report.witness = Some(serde_json::json!({ "center": z, "depth": u.depth(z), "detail": f }));
        }
        _ => report.verdict = Verdict::Pass,
    }
    report
}

/// Promotion from local to global: if q is injective on B(z,R) and a local
/// bijection of links on B(z,R−1), it must be an isometry on B(z,⌊R/3⌋).
pub fn promotion_audit(u: &UnwrappedSpace, z: u32, big_r: u32) -> Report {
    let g = u.graph();
    let ball: Vec<(u32, u32)> = g.ball_order(z, big_r);
    let clear = clearance(u);
    let vs: Vec<u32> = ball.iter().map(|&(v, _)| v).collect();
    let injective = collision(u, &vs);
    let local = ball.iter().filter(|&&(_, d)| d + 1 <= big_r).map(|&(v, _)| v).find(|&v| !locally_bijective(u, v));
    let small = isometry_on_ball(u, z, big_r / 3);
    let hyp = injective.is_none() && local.is_none();
    let truncated = clear[z as usize] <= big_r;
    let verdict = match (hyp, &small) {
        (true, None) => Verdict::Pass,
        (true, Some(_)) if !truncated => Verdict::Fail,
        _ => Verdict::Inconclusive,
    };
    let mut r = Report::new("promotion", verdict)
        .with("center", z)
        .with("R", big_r)
        .with("injective", injective.is_none())
        .with("local_bijection", local.is_none())
        .with("isometry_on_third", small.is_none())
        .with("truncation_reached", truncated);
    if let Some(f) = injective.or(local.map(|v| BallFailure::NotLocallyBijective { v })).or(small) {
        r = r.witness(f);
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// The glued horoball on its own.
    Horoball,
    /// The space the tube complement was cut from.
    Ambient,
    /// The cusped space q maps onto.
    Cusp,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Horoball => "horoball",
            ModelKind::Ambient => "ambient",
            ModelKind::Cusp => "cusp",
        }
    }
}

pub struct BallModel<'a> {
    pub kind: ModelKind,
    pub graph: &'a Graph,
}

/// Standard model list: glued horoball, `ambient` (or the base when None),
/// and the cusped quotient.
pub fn standard_models<'a>(u: &'a UnwrappedSpace, ambient: Option<&'a Graph>) -> Vec<BallModel<'a>> {
    vec![
        BallModel { kind: ModelKind::Horoball, graph: &u.glued.horoball.graph },
        BallModel { kind: ModelKind::Ambient, graph: ambient.unwrap_or(&u.base) },
        BallModel { kind: ModelKind::Cusp, graph: &u.cusp.graph },
    ]
}

fn hint(u: &UnwrappedSpace, kind: ModelKind, v: u32, ambient_given: bool) -> Option<u32> {
    match kind {
        ModelKind::Horoball => u.glued.to_horoball[v as usize],
        ModelKind::Ambient if ambient_given => u.ambient_of(v),
        ModelKind::Ambient => ((v as usize) < u.cover_n()).then(|| u.cover.projection[v as usize]),
        ModelKind::Cusp => Some(u.q[v as usize]),
    }
}

fn signature(b: &PointedBall) -> (usize, usize, Vec<usize>) {
    let mut degs: Vec<usize> = (0..b.graph.n() as u32).map(|v| b.graph.degree(v)).collect();
    degs.sort_unstable();
    (b.graph.n(), b.graph.m(), degs)
}

/// Every sampled σ-ball (clear of the truncation) must be pointed-isomorphic
/// to a σ-ball of one of the models. The natural candidate in each model is
/// tried first, then up to `scan` model vertices with matching invariants.
pub fn local_model_audit(u: &UnwrappedSpace, sigma: u32, models: &[BallModel<'_>], ambient_given: bool, samples: usize, seed: u64, scan: usize) -> Result<Report> {
    local_model_audit_on(u.graph(), &clearance(u), sigma, models, &|kind, v| hint(u, kind, v, ambient_given), samples, seed, scan)
}

/// [`local_model_audit`] for any graph with a truncation clearance and a
/// candidate hint per model kind.
#[allow(clippy::too_many_arguments)]
pub fn local_model_audit_on(
    g: &Graph,
    clear: &[u32],
    sigma: u32,
    models: &[BallModel<'_>],
    hint: &(dyn Fn(ModelKind, u32) -> Option<u32> + Sync),
    samples: usize,
    seed: u64,
    scan: usize,
) -> Result<Report> {
    let pool: Vec<u32> = (0..g.n() as u32).filter(|&v| clear[v as usize] > sigma).collect();
    let mut report = Report::new("local-models", Verdict::Inconclusive).with("sigma", sigma).with("eligible_centers", pool.len());
    if pool.is_empty() {
        return Ok(report.note("no center clear of the truncation"));
    }
    let centers = sample_sorted(&pool, samples, seed);
    let mut index: Vec<Option<HashMap<(usize, usize, Vec<usize>), Vec<u32>>>> = vec![None; models.len()];
    let mut outcomes: Vec<(u32, Option<(ModelKind, u32)>)> = Vec::with_capacity(centers.len());
    for &z in &centers {
        let here = PointedBall::of(g, z, sigma);
        let mut found = None;
        for m in models {
            if let Some(c) = hint(m.kind, z).filter(|&c| (c as usize) < m.graph.n()) {
                if pointed_isomorphic(&here, &PointedBall::of(m.graph, c, sigma), None)?.is_some() {
                    found = Some((m.kind, c));
                    break;
                }
            }
        }
        if found.is_none() && scan > 0 {
            let sig = signature(&here);
            'models: for (mi, m) in models.iter().enumerate() {
                let idx = index[mi].get_or_insert_with(|| {
                    let sigs: Vec<_> = (0..m.graph.n() as u32).into_par_iter().map(|c| signature(&PointedBall::of(m.graph, c, sigma))).collect();
                    let mut map: HashMap<_, Vec<u32>> = HashMap::new();
                    for (c, s) in sigs.into_iter().enumerate() {
                        map.entry(s).or_default().push(c as u32);
                    }
                    map
                });
                for &c in idx.get(&sig).map(|v| v.as_slice()).unwrap_or(&[]).iter().take(scan) {
                    if pointed_isomorphic(&here, &PointedBall::of(m.graph, c, sigma), None)?.is_some() {
                        found = Some((m.kind, c));
                        break 'models;
                    }
                }
            }
        }
        outcomes.push((z, found));
    }
    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    let mut unmatched = None;
    let mut matches = Vec::new();
    for (z, m) in outcomes {
        match m {
            Some((kind, c)) => {
                *tally.entry(kind.as_str().to_string()).or_default() += 1;
                matches.push(serde_json::json!({ "center": z, "model": kind, "point": c }));
            }
            None if unmatched.is_none() => unmatched = Some(z),
            None => {}
        }
    }
    report.set("centers", centers.len());
    report.set("matched_by", &tally);
    report.set("matches", matches);
    report.verdict = Verdict::from_bool(unmatched.is_none());
    if let Some(z) = unmatched {
        report = report.witness(serde_json::json!({ "center": z }));
    }
    Ok(report)
}

/// d(x, n·x) ≥ 10⁴θ for every sampled depth-0 point x and nonzero deck power
/// n. Truncation only lengthens paths, so min(d_trunc, clearance(x)+clearance(n·x))
/// is a lower bound for the true distance; only it is used for a pass.
pub fn very_translating_check(u: &UnwrappedSpace, theta: Q, powers: &[i64], samples: usize, seed: u64) -> Report {
    let need = theta * 10_000;
    let clear = clearance(u);
    let pool: Vec<u32> = (0..u.cover_n() as u32).filter(|&v| u.depth(v) == 0).collect();
    let points = sample_sorted(&pool, samples, seed);
    let powers: Vec<i64> = powers.iter().copied().filter(|&n| n != 0).collect();
    let rows: Vec<Vec<(u32, i64, u32, u64)>> = points
        .par_iter()
        .map(|&x| {
            let mut f = Vec::new();
            u.graph().bfs_into(&[x], &mut f);
            powers
                .iter()
                .filter_map(|&n| {
                    let y = u.deck_power(x, n)?;
                    let lower = (f[y as usize] as u64).min(clear[x as usize] as u64 + clear[y as usize] as u64);
                    Some((x, n, f[y as usize], lower))
                })
                .collect()
        })
        .collect();
    let all: Vec<(u32, i64, u32, u64)> = rows.into_iter().flatten().collect();
    let mut r = Report::new("very-translating", Verdict::Inconclusive)
        .with("theta", format!("{theta}"))
        .with("threshold", format!("{need}"))
        .with("powers", &powers)
        .with("points", points.len())
        .with("pairs", all.len());
    let Some(&(x, n, d, _)) = all.iter().min_by_key(|t| (t.2, t.0, t.1)) else {
        return r.note("no sampled point has a translate inside the window");
    };
    let lowest = all.iter().map(|t| t.3).min().expect("nonempty");
    r.set("min_distance", d);
    r.set("min_lower_bound", lowest);
    r = r.witness(serde_json::json!({ "x": x, "power": n, "distance": d }));
    r.verdict = if Q::from_integer(d as i64) < need {
        Verdict::Fail
    } else if Q::from_integer(lowest as i64) >= need {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drill::unwrap::unwrap_stand_in;
    use crate::spaces::cylinder_graph;

    fn cylinder(n: usize, window: u32, depth: u32) -> UnwrappedSpace {
        unwrap_stand_in(&cylinder_graph(n, 4), &(0..n as u32).collect::<Vec<_>>(), 5, window, depth).unwrap()
    }

    #[test]
    fn short_girth_fails_with_loop() {
        let u = cylinder(10, 4, 2);
        let r = ball_isometry_audit(&u, 1, 40, 7);
        assert_eq!(r.verdict, Verdict::Fail, "{r:?}");
        assert_eq!(r.get("shell_systole"), Some(&serde_json::json!(10)));
    }

    #[test]
    fn deficiency_marks_window_ends() {
        let u = cylinder(10, 2, 1);
        let d = deficient(&u);
        assert!((0..u.n() as u32).any(|v| d[v as usize] && u.fiber(v).abs() == 2));
        assert!((0..u.n() as u32).all(|v| !d[v as usize] || u.fiber(v) != 0));
    }

    #[test]
    fn depth_zero_slab_is_isometric() {
        let u = cylinder(40, 3, 0);
        let r = ball_isometry_audit(&u, 1, 20, 1);
        assert!(r.verdict.is_pass(), "{r:?}");
    }

    #[test]
    fn very_translating_thresholds() {
        let u = cylinder(12, 3, 0);
        let ok = very_translating_check(&u, Q::new(1, 10_000), &[1, -1, 2], 10, 3);
        assert!(ok.verdict.is_pass(), "{ok:?}");
        let bad = very_translating_check(&u, Q::from_integer(1), &[1], 10, 3);
        assert_eq!(bad.verdict, Verdict::Fail);
        assert!(bad.witness.is_some());
    }
}
