use num_complex::Complex64 as C64;

use super::state::Statevector;
use crate::error::{Error, Result};

/// Power-set enumeration bound for [`concentrable_entanglement`].
pub const MAX_CE_QUBITS: usize = 12;

/// Scatters the low bits of `value` into the set bits of `mask`.
fn deposit(mut value: usize, mut mask: usize) -> usize {
    let mut out = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if value & 1 == 1 {
            out |= low;
        }
        value >>= 1;
        mask &= mask - 1;
    }
    out
}

/// Tr[ρ_α²] for the qubits set in `mask`, computed as ‖M M†‖²_F where
/// M is the amplitude matrix with rows indexed by the kept qubits. Callers
/// pass the smaller side of the bipartition.
fn purity_mask(state: &Statevector, mask: usize) -> f64 {
    let n = state.num_qubits();
    let full = (1usize << n) - 1;
    let kept = mask.count_ones() as usize;
    if kept == 0 || mask == full {
        return 1.0;
    }
    let rest = full & !mask;
    let rows = 1usize << kept;
    let cols = 1usize << (n - kept);
    let amps = state.amplitudes();
    let row_off: Vec<usize> = (0..rows).map(|a| deposit(a, mask)).collect();
    let col_off: Vec<usize> = (0..cols).map(|r| deposit(r, rest)).collect();
    // ρ_α[a][b] = Σ_r ψ(a,r) ψ*(b,r); only the upper triangle is needed.
    let mut total = 0.0;
    for a in 0..rows {
        for b in a..rows {
            let mut acc = C64::new(0.0, 0.0);
            for &co in &col_off {
                acc += amps[row_off[a] | co] * amps[row_off[b] | co].conj();
            }
            let w = if a == b { 1.0 } else { 2.0 };
            total += w * acc.norm_sqr();
        }
    }
    total
}

fn subset_mask(state: &Statevector, subset: &[usize]) -> Result<usize> {
    let mut mask = 0usize;
    for &q in subset {
        state.check_qubit(q)?;
        if mask & (1 << q) != 0 {
            return Err(Error::DuplicateTargets(subset.to_vec()));
        }
        mask |= 1 << q;
    }
    Ok(mask)
}

/// Tr[ρ_α²] of the reduced state on `subset`. The empty subset returns 1.
pub fn subsystem_purity(state: &Statevector, subset: &[usize]) -> Result<f64> {
    let mask = subset_mask(state, subset)?;
    let full = (1usize << state.num_qubits()) - 1;
    let smaller = if 2 * subset.len() <= state.num_qubits() { mask } else { full & !mask };
    Ok(purity_mask(state, smaller))
}

/// Σ_α Tr[ρ_α²] over all 2^N subsets (empty and full set included).
pub fn purity_sum(state: &Statevector) -> Result<f64> {
    let n = state.num_qubits();
    if n > MAX_CE_QUBITS {
        return Err(Error::TooManyQubits {
            what: "concentrable entanglement",
            max: MAX_CE_QUBITS,
            actual: n,
        });
    }
    let full = (1usize << n) - 1;
    let mut total = 0.0;
    // Tr[ρ_α²] = Tr[ρ_ᾱ²]: evaluate the smaller side and count both.
    for mask in 0..=full {
        let comp = full & !mask;
        let k = mask.count_ones() as usize;
        if 2 * k < n || (2 * k == n && mask < comp) {
            total += 2.0 * purity_mask(state, mask);
        }
    }
    Ok(total)
}

/// Φ = Σ_α (ρ_α ⊗ I)|ψ⟩ over all subsets. For normalised |ψ⟩ the
/// differential of Σ_α Tr[ρ_α²] is 4 Re⟨Φ|dψ⟩.
pub fn purity_sum_direction(state: &Statevector) -> Result<Vec<C64>> {
    let n = state.num_qubits();
    if n > MAX_CE_QUBITS {
        return Err(Error::TooManyQubits {
            what: "concentrable entanglement",
            max: MAX_CE_QUBITS,
            actual: n,
        });
    }
    let full = (1usize << n) - 1;
    let amps = state.amplitudes();
    let mut phi = vec![C64::new(0.0, 0.0); amps.len()];
    for mask in 0..=full {
        let rest = full & !mask;
        let rows = 1usize << mask.count_ones();
        let row_off: Vec<usize> = (0..rows).map(|a| deposit(a, mask)).collect();
        let col_off: Vec<usize> = (0..(1usize << rest.count_ones())).map(|r| deposit(r, rest)).collect();
        let mut rho = vec![C64::new(0.0, 0.0); rows * rows];
        for a in 0..rows {
            for b in 0..rows {
                rho[a * rows + b] = col_off
                    .iter()
                    .map(|&co| amps[row_off[a] | co] * amps[row_off[b] | co].conj())
                    .sum();
            }
        }
        for &co in &col_off {
            for a in 0..rows {
                let mut acc = C64::new(0.0, 0.0);
                for b in 0..rows {
                    acc += rho[a * rows + b] * amps[row_off[b] | co];
                }
                phi[row_off[a] | co] += acc;
            }
        }
    }
    Ok(phi)
}

/// CE(ψ) = 1 − 2^{−N} Σ_α Tr[ρ_α²].
pub fn concentrable_entanglement(state: &Statevector) -> Result<f64> {
    let n = state.num_qubits();
    Ok(1.0 - purity_sum(state)? / (1u64 << n) as f64)
}
