//! Reference instances at desk scale.

use super::family::{IterParams, SeparatedFamily};
use super::unwrap::UnwrapParams;
use crate::error::{Error, Result};
use crate::graph::sphere_and_tube;
use crate::half::Half;
use crate::spaces::{trace_axis_in_patch, AxisStart, AxisWord, ModelPatch, SpaceGenerator, SpaceKind};

/// Two far-apart axes in a {7,3} ball with a basepoint between them, closer
/// to the first.
#[derive(Clone, Debug)]
pub struct TwoTube {
    pub patch: ModelPatch,
    pub family: SeparatedFamily,
    pub basepoint: u32,
    pub params: IterParams,
}

pub fn two_tube() -> Result<TwoTube> {
    let patch = SpaceGenerator::new(SpaceKind::Tiling { p: 7, q: 3 }).generate_ball(13)?;
    let g = &patch.graph;
    let (k, chi) = (2, 10);
    let d0 = g.distances(&[0])?;
    let axis = |v: u32, slot: u32| trace_axis_in_patch(&patch, &AxisWord::Turns(vec![1, 2]), AxisStart { vertex: v, slot }, 1).ok();
    let c1 = axis(d0.level(7)[0], 0).ok_or_else(|| Error::Verification("first axis does not fit".into()))?;
    let f1 = g.distances(&sphere_and_tube(g, &c1, k)?.nbhd)?;
    let mut c2 = None;
    'search: for lvl in 7..=9 {
        for b in d0.level(lvl) {
            for slot in 0..3 {
                if let Some(c) = axis(b, slot) {
                    let sep = sphere_and_tube(g, &c, k)?.nbhd.iter().filter_map(|&v| f1.get(v)).min();
                    if sep.is_some_and(|s| s >= chi) {
                        c2 = Some(c);
                        break 'search;
                    }
                }
            }
        }
    }
    let c2 = c2.ok_or_else(|| Error::Verification("no second axis at separation χ".into()))?;
    let from1 = g.distances(&c1)?;
    let from2 = g.distances(&c2)?;
    let basepoint = (0..g.n() as u32)
        .filter(|&v| from1.get(v) == Some(6) && d0.get(v).is_some_and(|d| d <= 9))
        .max_by_key(|&v| (from2.get(v), std::cmp::Reverse(v)))
        .ok_or_else(|| Error::Verification("no basepoint".into()))?;
    let params = IterParams {
        unwrap: UnwrapParams { k, s: 3, d: 7, window: 1, depth_max: 2 },
        stabilization_radius: 4,
        sigma: 1,
        model_samples: 20,
        delta2: Half::from_int(50),
        delta_ball: 120,
        seed: 1,
    };
    Ok(TwoTube { patch, family: SeparatedFamily { k, chi, tubes: vec![c1, c2], horoballs: vec![] }, basepoint, params })
}
