//! Alpha-expansion over a 4-connected grid with truncated-linear smoothness.

use super::maxflow::{Graph, Segment};
use super::{smoothness_cost, CostVolume};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionOptions {
    pub lambda: f64,
    pub tau: f64,
    pub max_sweeps: usize,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            tau: 4.0,
            max_sweeps: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpansionOutcome {
    pub labels: Vec<usize>,
    pub energy: f64,
    /// Energy before the first move, then after every expansion move.
    pub move_energies: Vec<f64>,
    pub sweeps: usize,
}

/// `E = sum_p C(p, l_p) + lambda * sum_{p~q} min(|l_p - l_q|, tau)` over the
/// 4-neighborhood.
pub fn labeling_energy(volume: &CostVolume, labels: &[usize], lambda: f64, tau: f64) -> f64 {
    let (h, w) = (volume.height(), volume.width());
    let mut data = 0.0;
    let mut smooth = 0.0;
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            data += volume.cost(p, labels[p]);
            if c + 1 < w {
                smooth += smoothness_cost(labels[p], labels[p + 1], tau);
            }
            if r + 1 < h {
                smooth += smoothness_cost(labels[p], labels[p + w], tau);
            }
        }
    }
    data + lambda * smooth
}

/// Per-pixel argmin of the cost volume; ties go to the lowest label.
pub fn winner_take_all(volume: &CostVolume) -> Vec<usize> {
    (0..volume.pixels())
        .map(|p| {
            let costs = volume.pixel_costs(p);
            let mut best = 0;
            for (l, &c) in costs.iter().enumerate() {
                if c < costs[best] {
                    best = l;
                }
            }
            best
        })
        .collect()
}

/// Minimize the labeling energy by alpha-expansion, starting from the
/// winner-take-all labeling. With two labels it starts from all zeros
/// instead: the first move can then reach every labeling, so the result is
/// the exact optimum.
///
/// Labels are swept in ascending order; a move is kept only if it strictly
/// lowers the energy, so the energy never increases. Stops after a sweep
/// without improvement or after `max_sweeps` sweeps.
pub fn alpha_expansion(volume: &CostVolume, opts: &ExpansionOptions) -> ExpansionOutcome {
    let mut labels = if volume.labels() == 2 && opts.lambda > 0.0 {
        vec![0; volume.pixels()]
    } else {
        winner_take_all(volume)
    };
    let mut energy = labeling_energy(volume, &labels, opts.lambda, opts.tau);
    let mut move_energies = vec![energy];
    let mut sweeps = 0;
    if volume.labels() < 2 || opts.lambda == 0.0 {
        return ExpansionOutcome {
            labels,
            energy,
            move_energies,
            sweeps,
        };
    }
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut improved = false;
        for alpha in 0..volume.labels() {
            if let Some(candidate) = expansion_move(volume, &labels, alpha, opts) {
                let e = labeling_energy(volume, &candidate, opts.lambda, opts.tau);
                if e < energy - 1e-12 * energy.abs().max(1.0) {
                    labels = candidate;
                    energy = e;
                    improved = true;
                }
            }
            move_energies.push(energy);
        }
        if !improved {
            break;
        }
    }
    ExpansionOutcome {
        labels,
        energy,
        move_energies,
        sweeps,
    }
}

/// Accumulates the binary energy `sum E_p(x_p) + sum E_pq(x_p, x_q)` where
/// `x = 1` means "switch to alpha" and sits on the sink side of the cut.
struct BinaryEnergy {
    unary: Vec<[f64; 2]>,
    pairs: Vec<(usize, usize, f64)>,
}

impl BinaryEnergy {
    fn add_pair(&mut self, p: usize, q: usize, e00: f64, e01: f64, e10: f64, e11: f64) {
        // E = e00 + (e10 - e00) x_p + (e11 - e10) x_q + (e01 + e10 - e00 - e11)(1 - x_p) x_q
        self.unary[p][0] += e00;
        self.unary[p][1] += e10;
        self.unary[q][1] += e11 - e10;
        let w = (e01 + e10 - e00 - e11).max(0.0);
        if w > 0.0 {
            self.pairs.push((p, q, w));
        }
    }
}

fn expansion_move(volume: &CostVolume, labels: &[usize], alpha: usize, opts: &ExpansionOptions) -> Option<Vec<usize>> {
    let (h, w) = (volume.height(), volume.width());
    let n = h * w;
    // variable index of each pixel, or None if it already has label alpha
    let mut var = vec![usize::MAX; n];
    let mut count = 0;
    for p in 0..n {
        if labels[p] != alpha {
            var[p] = count;
            count += 1;
        }
    }
    if count == 0 {
        return None;
    }
    let v = |a: usize, b: usize| opts.lambda * smoothness_cost(a, b, opts.tau);
    let mut energy = BinaryEnergy {
        unary: vec![[0.0; 2]; count],
        pairs: Vec::with_capacity(2 * count),
    };
    for p in 0..n {
        if var[p] == usize::MAX {
            continue;
        }
        let vp = var[p];
        energy.unary[vp][0] += volume.cost(p, labels[p]);
        energy.unary[vp][1] += volume.cost(p, alpha);
    }
    let link = |p: usize, q: usize, energy: &mut BinaryEnergy| {
        let (lp, lq) = (labels[p], labels[q]);
        match (var[p], var[q]) {
            (usize::MAX, usize::MAX) => {}
            (vp, usize::MAX) => {
                // q is fixed at alpha
                energy.unary[vp][0] += v(lp, alpha);
            }
            (usize::MAX, vq) => {
                energy.unary[vq][0] += v(alpha, lq);
            }
            (vp, vq) => energy.add_pair(vp, vq, v(lp, lq), v(lp, alpha), v(alpha, lq), 0.0),
        }
    };
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            if c + 1 < w {
                link(p, p + 1, &mut energy);
            }
            if r + 1 < h {
                link(p, p + w, &mut energy);
            }
        }
    }

    let mut graph = Graph::new(count, energy.pairs.len());
    for (i, [e0, e1]) in energy.unary.iter().enumerate() {
        let m = e0.min(*e1);
        // source edge is cut when x = 1, sink edge when x = 0
        graph.add_terminal_weights(i, e1 - m, e0 - m);
    }
    for &(p, q, wgt) in &energy.pairs {
        // cut when p stays (source) and q switches (sink)
        graph.add_edge(p, q, wgt, 0.0);
    }
    graph.maxflow();

    let mut out = labels.to_vec();
    let mut changed = false;
    for p in 0..n {
        if var[p] != usize::MAX && graph.segment(var[p]) == Segment::Sink {
            out[p] = alpha;
            changed = true;
        }
    }
    changed.then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_volume(rng: &mut ChaCha8Rng, h: usize, w: usize, l: usize) -> CostVolume {
        CostVolume::from_costs(h, w, l, (0..h * w * l).map(|_| rng.gen_range(0.0..10.0)).collect()).unwrap()
    }

    fn brute_force(volume: &CostVolume, lambda: f64, tau: f64) -> f64 {
        let n = volume.pixels();
        let l = volume.labels();
        let mut labels = vec![0; n];
        let mut best = f64::INFINITY;
        loop {
            best = best.min(labeling_energy(volume, &labels, lambda, tau));
            let mut i = 0;
            loop {
                if i == n {
                    return best;
                }
                labels[i] += 1;
                if labels[i] < l {
                    break;
                }
                labels[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn zero_lambda_is_winner_take_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut vol = random_volume(&mut rng, 5, 6, 4);
        // force a tie at pixel 0 between labels 1 and 3
        vol.set_cost(0, 0, 50.0);
        vol.set_cost(0, 1, 0.0);
        vol.set_cost(0, 2, 50.0);
        vol.set_cost(0, 3, 0.0);
        let out = alpha_expansion(&vol, &ExpansionOptions { lambda: 0.0, tau: 2.0, max_sweeps: 4 });
        assert_eq!(out.labels, winner_take_all(&vol));
        assert_eq!(out.labels[0], 1);
    }

    #[test]
    fn binary_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let vol = random_volume(&mut rng, 3, 4, 2);
            let lambda = rng.gen_range(0.5..8.0);
            let opts = ExpansionOptions { lambda, tau: 4.0, max_sweeps: 4 };
            let out = alpha_expansion(&vol, &opts);
            let best = brute_force(&vol, lambda, 4.0);
            assert!((out.energy - best).abs() <= 1e-9 * best.max(1.0), "{} vs {best}", out.energy);
        }
    }

    #[test]
    fn energy_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let vol = random_volume(&mut rng, 6, 7, 5);
            let out = alpha_expansion(&vol, &ExpansionOptions { lambda: 3.0, tau: 2.0, max_sweeps: 4 });
            for pair in out.move_energies.windows(2) {
                assert!(pair[1] <= pair[0]);
            }
            let e = labeling_energy(&vol, &out.labels, 3.0, 2.0);
            assert!((e - out.energy).abs() < 1e-9);
        }
    }

    #[test]
    fn multilabel_within_factor_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let vol = random_volume(&mut rng, 2, 3, 3);
            let lambda = rng.gen_range(0.5..6.0);
            let out = alpha_expansion(&vol, &ExpansionOptions { lambda, tau: 1.5, max_sweeps: 4 });
            let best = brute_force(&vol, lambda, 1.5);
            assert!(out.energy <= 2.0 * best + 1e-9);
            assert!(out.energy >= best - 1e-9);
        }
    }
}
