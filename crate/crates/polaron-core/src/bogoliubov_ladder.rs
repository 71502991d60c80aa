//! Excitation ladder of the free boson spectrum: the sorted sums
//! `Λ = Σ_{j∈J} ε_j` over multisets `J` of single-mode energies `ε_j = √λ_j`
//! below a cap, and the zero-point energy of the quadratic Hamiltonian.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{PolaronError, Result};
use crate::hessian_spectrum::HessianSpectrum;

/// Sums within this distance below the cap count as reaching it.
pub const CAP_TOLERANCE: f64 = 1e-12;

/// Largest number of multisets the exhaustive oracle will build.
pub const BRUTE_FORCE_LIMIT: usize = 1_000_000;

/// One ladder entry: `Λ` and its multiset of mode indices (1-based,
/// nondecreasing; empty for the ground level).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub energy: f64,
    pub modes: Vec<usize>,
}

/// Ladder levels in nondecreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationLadder {
    pub entries: Vec<LadderEntry>,
    /// Strict upper bound of all energies.
    pub cap: f64,
    /// Longest multiset emitted.
    pub frak_m: usize,
}

impl ExcitationLadder {
    fn from_entries(entries: Vec<LadderEntry>, cap: f64) -> Self {
        let frak_m = entries.iter().map(|e| e.modes.len()).max().unwrap_or(0);
        ExcitationLadder {
            entries,
            cap,
            frak_m,
        }
    }

    /// `Λ` values.
    pub fn energies(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.energy).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sum of the energies of a sorted index multiset (0-based), left to right.
fn multiset_sum(energies: &[f64], idx: &[usize]) -> f64 {
    idx.iter().fold(0.0, |s, &i| s + energies[i])
}

fn check_inputs(energies: &[f64], cap: f64) -> Result<()> {
    if energies.is_empty() {
        return Err(PolaronError::config("mode_energies", "must not be empty"));
    }
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(PolaronError::config(
            "cap",
            format!("must be positive, got {cap}"),
        ));
    }
    if energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(PolaronError::Precondition(
            "mode energies must be ascending".into(),
        ));
    }
    if let Some(bad) = energies.iter().find(|&&e| !(e > 0.0) || e >= cap) {
        return Err(PolaronError::Precondition(format!(
            "mode energy {bad} outside (0, cap = {cap}); filter such modes before enumeration"
        )));
    }
    Ok(())
}

/// Heap node ordered by `(sum, multiset)` ascending (reversed for the
/// max-heap).
#[derive(Debug, PartialEq)]
struct Node {
    sum: f64,
    idx: Vec<usize>,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .sum
            .total_cmp(&self.sum)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn to_entry(node: Node) -> LadderEntry {
    LadderEntry {
        energy: node.sum,
        modes: node.idx.into_iter().map(|i| i + 1).collect(),
    }
}

/// The `n_max` lowest ladder entries (the ground level included) with all
/// sums strictly below `cap − CAP_TOLERANCE`.
///
/// Best-first search over nondecreasing index sequences: the children
/// of `(…, i)` are `(…, i, i)` and `(…, i + 1)`, which reaches every
/// multiset exactly once and never lowers the sum. Equal sums come out in
/// lexicographic order of the multisets.
pub fn enumerate_ladder(energies: &[f64], cap: f64, n_max: usize) -> Result<ExcitationLadder> {
    check_inputs(energies, cap)?;
    if n_max == 0 {
        return Err(PolaronError::config("n_max", "must be at least 1"));
    }
    let limit = cap - CAP_TOLERANCE;
    let mut heap = BinaryHeap::new();
    let mut out = Vec::with_capacity(n_max);
    heap.push(Node {
        sum: 0.0,
        idx: Vec::new(),
    });
    while let Some(node) = heap.pop() {
        let mut children: Vec<Vec<usize>> = Vec::with_capacity(2);
        match node.idx.last() {
            None => children.push(vec![0]),
            Some(&last) => {
                let mut append = node.idx.clone();
                append.push(last);
                children.push(append);
                if last + 1 < energies.len() {
                    let mut bump = node.idx.clone();
                    *bump.last_mut().expect("nonempty") = last + 1;
                    children.push(bump);
                }
            }
        }
        for idx in children {
            let sum = multiset_sum(energies, &idx);
            if sum < limit {
                heap.push(Node { sum, idx });
            }
        }
        out.push(to_entry(node));
        if out.len() == n_max {
            break;
        }
    }
    Ok(ExcitationLadder::from_entries(out, cap))
}

/// Exhaustive ladder: every multiset of length at most `length_cap` with
/// sum below the cap, sorted like [`enumerate_ladder`].
pub fn brute_force_ladder(
    energies: &[f64],
    cap: f64,
    length_cap: usize,
) -> Result<ExcitationLadder> {
    check_inputs(energies, cap)?;
    let limit = cap - CAP_TOLERANCE;
    let mut all = Vec::new();
    let mut stack = vec![0usize; 0];
    fn rec(
        energies: &[f64],
        limit: f64,
        length_cap: usize,
        start: usize,
        stack: &mut Vec<usize>,
        all: &mut Vec<Node>,
    ) -> Result<()> {
        if all.len() > BRUTE_FORCE_LIMIT {
            return Err(PolaronError::Precondition(format!(
                "brute-force ladder exceeds {BRUTE_FORCE_LIMIT} multisets"
            )));
        }
        all.push(Node {
            sum: multiset_sum(energies, stack),
            idx: stack.clone(),
        });
        if stack.len() == length_cap {
            return Ok(());
        }
        for i in start..energies.len() {
            stack.push(i);
            let s = multiset_sum(energies, stack);
            if s < limit {
                rec(energies, limit, length_cap, i, stack, all)?;
            }
            stack.pop();
            if s >= limit {
                // Energies are ascending: larger indices only grow the sum.
                break;
            }
        }
        Ok(())
    }
    rec(energies, limit, length_cap, 0, &mut stack, &mut all)?;
    all.sort_by(|a, b| b.cmp(a));
    Ok(ExcitationLadder::from_entries(
        all.into_iter().map(to_entry).collect(),
        cap,
    ))
}

/// Single-mode energies `√λ` of the lowest `count` listed modes (with
/// multiplicity), the input of the physical ladder with cap 1.
pub fn mode_energies(spec: &HessianSpectrum, count: usize) -> Vec<f64> {
    spec.modes
        .iter()
        .take(count)
        .map(|m| m.lambda.sqrt())
        .collect()
}

/// Physical ladder: the `n_max` lowest entries built from `spec`.
pub fn physical_ladder(spec: &HessianSpectrum, n_max: usize) -> Result<ExcitationLadder> {
    // The n_max lowest multisets only involve the n_max lowest modes.
    let energies = mode_energies(spec, n_max.max(1));
    enumerate_ladder(&energies, 1.0, n_max)
}

/// Zero-point energies of the quadratic Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroPoint {
    /// `E₂ = ½Σ(√λ − 1)` over all modes outside the kernel.
    pub e2: f64,
    /// `E₂ − 3/2`: the three kernel modes contribute `½(0 − 1)` each.
    pub zpe: f64,
}

/// `E₂` recomputed from the sector eigenvalues and the tail estimates of
/// `spec`; fails unless the sector tail is certified to
/// `tail_rel_tol·|E₂|`.
pub fn zero_point_energy(spec: &HessianSpectrum, tail_rel_tol: f64) -> Result<ZeroPoint> {
    let sectors: f64 = spec
        .sectors
        .iter()
        .map(|s| {
            (2 * s.ell + 1) as f64 * 0.5 * s.eigenvalues.iter().map(|l| l.sqrt() - 1.0).sum::<f64>()
        })
        .sum();
    let e2 = sectors + spec.zpe_ell_tail + spec.zpe_k_tail;
    if !(spec.tail_bound < tail_rel_tol * e2.abs()) && e2 != 0.0 {
        return Err(PolaronError::Accuracy(format!(
            "sector tail uncertainty {:.3e} exceeds {:.3e}",
            spec.tail_bound,
            tail_rel_tol * e2.abs()
        )));
    }
    if e2 > 0.0 {
        return Err(PolaronError::Numerical(format!("E₂ = {e2} is positive")));
    }
    Ok(ZeroPoint { e2, zpe: e2 - 1.5 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sums(l: &ExcitationLadder) -> Vec<f64> {
        l.energies()
    }

    #[test]
    fn two_modes_strict_cap() {
        let l = enumerate_ladder(&[0.5, 0.7], 1.0, 100).unwrap();
        assert_eq!(sums(&l), vec![0.0, 0.5, 0.7]);
    }

    #[test]
    fn small_instance_multisets() {
        let l = enumerate_ladder(&[0.3, 0.4], 1.0, 100).unwrap();
        let e = sums(&l);
        let want = [0.0, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9];
        assert_eq!(e.len(), want.len());
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let sets: Vec<Vec<usize>> = l.entries.iter().map(|e| e.modes.clone()).collect();
        assert_eq!(
            sets,
            vec![
                vec![],
                vec![1],
                vec![2],
                vec![1, 1],
                vec![1, 2],
                vec![2, 2],
                vec![1, 1, 1]
            ]
        );
        assert_eq!(l.frak_m, 3);
    }

    #[test]
    fn first_excitation_is_lowest_mode() {
        let l = enumerate_ladder(&[0.45, 0.45, 0.8], 1.0, 5).unwrap();
        assert_eq!(l.entries[1].modes, vec![1]);
        assert_eq!(l.entries[2].modes, vec![2]);
    }

    #[test]
    fn arithmetic_progression_for_one_mode() {
        let l = brute_force_ladder(&[0.25], 1.0, 10).unwrap();
        assert_eq!(sums(&l), vec![0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn nothing_below_cap() {
        assert!(enumerate_ladder(&[1.0], 1.0, 3).is_err());
        let l = enumerate_ladder(&[0.99], 0.995, 10).unwrap();
        assert_eq!(l.len(), 2);
    }

    #[test]
    fn input_errors() {
        assert!(enumerate_ladder(&[], 1.0, 3).unwrap_err().is_config());
        assert!(enumerate_ladder(&[0.5], 0.0, 3).unwrap_err().is_config());
        assert!(matches!(
            enumerate_ladder(&[0.5, 1.2], 1.0, 3),
            Err(PolaronError::Precondition(_))
        ));
    }

    #[test]
    fn oracle_guard_trips() {
        let e = vec![0.001; 40];
        assert!(brute_force_ladder(&e, 1.0, 100).is_err());
    }
}
