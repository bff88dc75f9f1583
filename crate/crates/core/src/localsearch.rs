//! Stochastic local search: fitness-uniform candidate selection, four
//! constrained swap operators over the used/unused split of encoded
//! permutations, and the best-neighbor improvement step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::Permutation;
use crate::discovery::LayerSet;
use crate::error::Result;

/// The neighborhood-defining swap operators. All act on encoded permutations
/// and respect the used-prefix boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwapOperator {
    /// Exchange one used index with one unused index.
    OnePoint,
    /// Two independent used/unused exchanges in a single move.
    TwoPoint,
    /// Exchange the block ending at the boundary with a block ending at the
    /// last position; block lengths may differ, so the boundary shifts.
    OneBlock,
    /// One-point exchange restricted to the layer of the used service.
    LayerOnePoint,
}

/// What to do with the best neighbor found by [`improve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplacePolicy {
    /// Replace unconditionally.
    Always,
    /// Replace only on a strict fitness improvement.
    #[default]
    IfBetter,
}

impl std::str::FromStr for ReplacePolicy {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "always" => Ok(ReplacePolicy::Always),
            "if-better" => Ok(ReplacePolicy::IfBetter),
            other => Err(crate::error::Error::InvalidConfig(format!(
                "unknown replacement policy `{other}` (expected `always` or `if-better`)"
            ))),
        }
    }
}

impl std::fmt::Display for ReplacePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReplacePolicy::Always => "always",
            ReplacePolicy::IfBetter => "if-better",
        })
    }
}

/// Fitness-uniform selection: the population best plus one uniformly random
/// member of each non-empty fitness bin, the range [min, max] being split
/// into `n_set - 1` equal intervals. Returns indexes into `pop`, pairwise
/// distinct; may return fewer than `n_set` when bins are empty.
pub fn select_for_ls<R: Rng + ?Sized>(
    pop: &[Permutation],
    n_set: usize,
    rng: &mut R,
) -> Vec<usize> {
    debug_assert!(n_set >= 2);
    if pop.is_empty() {
        return Vec::new();
    }
    let fit = |i: usize| pop[i].fitness().expect("selection requires cached fitness");
    let mut sorted: Vec<usize> = (0..pop.len()).collect();
    sorted.sort_by(|&a, &b| fit(b).total_cmp(&fit(a)));
    let best = sorted[0];
    let mut selected = vec![best];

    let max = fit(sorted[0]);
    let min = fit(*sorted.last().expect("non-empty"));
    let range = max - min;
    let bins = n_set - 1;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); bins];
    for &i in sorted.iter().skip(1) {
        let bin = if range == 0.0 {
            0 // degenerate range: a single bin holds everyone
        } else {
            (((fit(i) - min) / range * bins as f64).floor() as usize).min(bins - 1)
        };
        groups[bin].push(i);
    }
    for group in &groups {
        if !group.is_empty() {
            selected.push(group[rng.random_range(0..group.len())]);
        }
    }
    selected
}

/// A generated neighbor; `identity` marks infeasible draws that returned the
/// input unchanged and must not be evaluated.
#[derive(Debug, Clone)]
pub struct Neighbor {
    pub perm: Permutation,
    pub identity: bool,
}

fn identity_neighbor(perm: &Permutation) -> Neighbor {
    Neighbor {
        perm: Permutation::encoded_unchecked(
            perm.order().to_vec(),
            perm.used_len().expect("encoded"),
        ),
        identity: true,
    }
}

fn swapped(perm: &Permutation, a: usize, b: usize) -> Neighbor {
    let mut order = perm.order().to_vec();
    order.swap(a, b);
    Neighbor {
        perm: Permutation::encoded_unchecked(order, perm.used_len().expect("encoded")),
        identity: false,
    }
}

/// Applies one random move of the operator, returning a fresh neighbor. The
/// input is left untouched. Infeasible configurations (e.g. no unused index)
/// yield an identity-flagged neighbor.
pub fn apply_operator<R: Rng + ?Sized>(
    op: SwapOperator,
    perm: &Permutation,
    layers: &LayerSet,
    rng: &mut R,
) -> Neighbor {
    let used = perm
        .used_len()
        .expect("operators require an encoded permutation");
    let n = perm.len();
    match op {
        SwapOperator::OnePoint => {
            if used == 0 || used == n {
                return identity_neighbor(perm);
            }
            let a = rng.random_range(0..used);
            let b = rng.random_range(used..n);
            swapped(perm, a, b)
        }
        SwapOperator::TwoPoint => {
            if used < 2 || n - used < 2 {
                return identity_neighbor(perm);
            }
            let a1 = rng.random_range(0..used);
            let mut a2 = rng.random_range(0..used - 1);
            if a2 >= a1 {
                a2 += 1;
            }
            let b1 = rng.random_range(used..n);
            let mut b2 = rng.random_range(used..n - 1);
            if b2 >= b1 {
                b2 += 1;
            }
            let mut order = perm.order().to_vec();
            order.swap(a1, b1);
            order.swap(a2, b2);
            Neighbor {
                perm: Permutation::encoded_unchecked(order, used),
                identity: false,
            }
        }
        SwapOperator::OneBlock => {
            if used < 2 || n - used < 2 {
                return identity_neighbor(perm);
            }
            // Blocks [a..=t] and [b..=n-1]; the spliced prefix keeps length
            // a + (n - b), so the boundary moves with it.
            let a = rng.random_range(0..used - 1);
            let b = rng.random_range(used..n - 1);
            let order = perm.order();
            let mut out = Vec::with_capacity(n);
            out.extend_from_slice(&order[..a]);
            out.extend_from_slice(&order[b..]);
            out.extend_from_slice(&order[used..b]);
            out.extend_from_slice(&order[a..used]);
            let new_used = a + (n - b);
            Neighbor {
                perm: Permutation::encoded_unchecked(out, new_used),
                identity: false,
            }
        }
        SwapOperator::LayerOnePoint => {
            if used == 0 || used == n {
                return identity_neighbor(perm);
            }
            let order = perm.order();
            for _ in 0..n {
                let a = rng.random_range(0..used);
                let layer = layers.layer_of(order[a]);
                let candidates: Vec<usize> = (used..n)
                    .filter(|&b| layers.layer_of(order[b]) == layer)
                    .collect();
                if candidates.is_empty() {
                    continue; // resample a
                }
                let b = candidates[rng.random_range(0..candidates.len())];
                return swapped(perm, a, b);
            }
            identity_neighbor(perm)
        }
    }
}

/// Generates `n_nb` neighbors, evaluates the non-identity ones, and returns
/// the permutation to keep under the replacement policy together with the
/// fraction of neighbors strictly fitter than the origin.
pub fn improve<R, F>(
    perm: &Permutation,
    op: SwapOperator,
    n_nb: usize,
    policy: ReplacePolicy,
    layers: &LayerSet,
    rng: &mut R,
    eval: &mut F,
) -> Result<(Permutation, f64)>
where
    R: Rng + ?Sized,
    F: FnMut(&Permutation) -> Result<Permutation>,
{
    let origin = perm
        .fitness()
        .expect("improve requires an evaluated permutation");
    let mut best: Option<Permutation> = None;
    let mut better = 0usize;
    for _ in 0..n_nb {
        let neighbor = apply_operator(op, perm, layers, rng);
        if neighbor.identity {
            continue;
        }
        let evaluated = eval(&neighbor.perm)?;
        let f = evaluated.fitness().expect("evaluator caches fitness");
        if f > origin {
            better += 1;
        }
        let replace = best
            .as_ref()
            .is_none_or(|b| f > b.fitness().expect("cached"));
        if replace {
            best = Some(evaluated);
        }
    }
    let rate = if n_nb == 0 {
        0.0
    } else {
        better as f64 / n_nb as f64
    };
    let chosen = match (policy, best) {
        (_, None) => perm.clone(),
        (ReplacePolicy::Always, Some(b)) => b,
        (ReplacePolicy::IfBetter, Some(b)) => {
            if b.fitness().expect("cached") > origin {
                b
            } else {
                perm.clone()
            }
        }
    };
    Ok((chosen, rate))
}
